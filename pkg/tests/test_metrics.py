import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sip_forge.fst import state_sequence
from sip_forge.metrics import (
    best_isomorphism_match,
    confusion_matrix,
    edit_distance,
    evaluate,
    heuristic_probe_baseline,
)
from sip_forge.sampling import (
    DetFstConfig,
    gen_det_fst,
    sample_input,
    sample_vocab,
    task_rng,
)

from oracles import recursive_edit_distance

short = st.lists(st.integers(0, 4), max_size=6)


class TestEditDistance:
    def test_known_values(self):
        assert edit_distance("kitten", "sitting") == 3
        assert edit_distance("", "abc") == 3
        assert edit_distance("abc", "abc") == 0
        assert edit_distance((1, 2, 3), (1, 3)) == 1

    @given(short, short)
    @settings(max_examples=200, deadline=None)
    def test_matches_recursive_oracle(self, a, b):
        assert edit_distance(a, b) == recursive_edit_distance(tuple(a), tuple(b))

    @given(short, short)
    @settings(max_examples=100, deadline=None)
    def test_symmetry_and_identity(self, a, b):
        assert edit_distance(a, b) == edit_distance(b, a)
        assert edit_distance(a, a) == 0
        if a != b:
            assert edit_distance(a, b) >= 1

    @given(short, short, short)
    @settings(max_examples=100, deadline=None)
    def test_triangle_inequality(self, a, b, c):
        assert edit_distance(a, c) <= edit_distance(a, b) + edit_distance(b, c)


class TestEvaluate:
    def test_perfect_predictions(self):
        golds = [(1, 2), (3,), (4, 5, 6)]
        rep = evaluate(list(golds), golds)
        assert rep.seq_accuracy == 1.0
        assert rep.mean_edit_distance == 0.0
        assert rep.per == 0.0

    def test_mixed(self):
        golds = [(1, 2), (3, 4)]
        preds = [(1, 2), (3,)]
        rep = evaluate(preds, golds)
        assert rep.seq_accuracy == 0.5
        assert rep.mean_edit_distance == 0.5
        assert rep.per == pytest.approx(1 / 4)
        assert rep.per_macro == pytest.approx(0.25)

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            evaluate([(1,)], [(1,), (2,)])

    def test_to_dict_keys(self):
        d = evaluate([(1,)], [(1,)]).to_dict()
        assert set(d) == {"seq_accuracy", "mean_edit_distance", "per", "per_macro"}


class TestHeuristicBaseline:
    def test_shape_and_support(self, table):
        rng = task_rng(33, 0)
        for _ in range(20):
            v = sample_vocab(rng, table, 5, 10)
            f = gen_det_fst(DetFstConfig(4, 2, v), rng, table)
            inp = sample_input(f, 2, 12, rng, table, 0.2)
            if inp is None:
                continue
            seq = heuristic_probe_baseline(f, inp, rng, table)
            assert len(seq) == len(inp) + 1
            assert seq[-1] in f.finals
            assert all(0 <= q < f.num_states for q in seq)


class TestIsomorphismMatch:
    def test_identity_match(self):
        gold = [[0, 1, 0], [1, 1]]
        rep = best_isomorphism_match(gold, gold, 2)
        assert rep.token_accuracy == 1.0
        assert rep.whole_sequence_accuracy == 1.0
        assert rep.matching == (0, 1)

    def test_relabels(self):
        gold = [[0, 1, 0], [1, 1]]
        pred = [[1, 0, 1], [0, 0]]
        rep = best_isomorphism_match(pred, gold, 2)
        assert rep.token_accuracy == 1.0
        assert rep.matching == (1, 0)

    def test_matches_brute_force(self, table):
        from oracles import brute_force_state_match

        rng = task_rng(33, 1)
        for _ in range(10):
            n = int(rng.integers(2, 5))
            gold = [list(rng.integers(0, n, size=int(rng.integers(2, 8))))
                    for _ in range(6)]
            pred = [list(rng.integers(0, n, size=len(g))) for g in gold]
            rep = best_isomorphism_match(pred, gold, n)
            assert rep.token_accuracy == pytest.approx(
                brute_force_state_match(pred, gold, n))

    def test_true_state_sequences_score_one(self, table):
        rng = task_rng(33, 2)
        for _ in range(10):
            v = sample_vocab(rng, table, 5, 10)
            f = gen_det_fst(DetFstConfig(4, 2, v), rng, table)
            seqs = []
            for _ in range(8):
                inp = sample_input(f, 2, 12, rng, table, 0.2)
                if inp is not None:
                    seqs.append(state_sequence(f, inp, table))
            if not seqs:
                continue
            rep = best_isomorphism_match(seqs, seqs, f.num_states)
            assert rep.token_accuracy == 1.0
            assert rep.whole_sequence_accuracy == 1.0

    def test_too_many_states_rejected(self):
        with pytest.raises(ValueError):
            best_isomorphism_match([], [], 9)


class TestConfusionMatrix:
    def test_rows_normalized(self):
        gold = [[0, 1, 0, 1]]
        pred = [[0, 1, 1, 1]]
        m = confusion_matrix(pred, gold, (0, 1))
        assert m.shape == (2, 2)
        assert np.allclose(m.sum(axis=1), 1.0)
        assert m[0, 0] == pytest.approx(0.5)
        assert m[1, 1] == pytest.approx(1.0)

    def test_unvisited_gold_state_row_is_zero(self):
        m = confusion_matrix([[0]], [[0]], (0, 1))
        assert np.allclose(m[1], 0.0)
