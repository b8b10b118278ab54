import numpy as np
import pytest

from sip_forge.encoding import (
    EncodingError,
    PAD_ROW,
    PrefixEncoding,
    average_encoding_init,
    decode_fst,
    encode_fst,
    pad_batch,
    pad_encoding,
    truncate_encoding,
)
from sip_forge.fst import Fst, Transition
from sip_forge.sampling import DetFstConfig, gen_det_fst, sample_vocab, task_rng


class TestEncodeFst:
    def test_zero_deleter_rows(self, zero_deleter, table):
        z, o, t = (table.id_of(c) for c in "012")
        enc = encode_fst(zero_deleter)
        assert enc.rows == (
            (0, z, 1, 0, 0),
            (0, o, o, 1, 1),
            (0, t, t, 1, 1),
            (1, z, z, 1, 1),
            (1, o, o, 1, 1),
            (1, t, t, 1, 1),
        )

    def test_rows_grouped_and_sorted(self, table):
        rng = task_rng(31, 0)
        for _ in range(30):
            v = sample_vocab(rng, table, 5, 10)
            f = gen_det_fst(DetFstConfig(4, 2, v), rng, table)
            rows = encode_fst(f).rows
            keys = [(r[0], r[1], r[2], r[3]) for r in rows]
            assert keys == sorted(keys)
            assert len(rows) == len(f.transitions)

    def test_final_flag(self, table):
        rng = task_rng(31, 1)
        v = sample_vocab(rng, table, 5, 10)
        f = gen_det_fst(DetFstConfig(4, 2, v), rng, table)
        for src, inp, out, dst, flag in encode_fst(f).rows:
            assert flag == (1 if dst in f.finals else 0)

    def test_capacity_checks(self, table):
        a = table.id_of("a")
        f = Fst.make(2, {a}, {0}, {1}, [Transition(0, a, a, 1), Transition(1, a, a, 0)])
        with pytest.raises(EncodingError):
            encode_fst(f, max_states=1)
        with pytest.raises(EncodingError):
            encode_fst(f, max_symbols=a)

    def test_requires_initial_zero(self, table):
        a = table.id_of("a")
        f = Fst.make(2, {a}, {1}, {1}, [Transition(1, a, a, 1)])
        with pytest.raises(EncodingError):
            encode_fst(f)


class TestDecodeFst:
    def test_roundtrip(self, table):
        rng = task_rng(32, 0)
        for _ in range(40):
            v = sample_vocab(rng, table, 5, 10)
            f = gen_det_fst(DetFstConfig(4, 2, v), rng, table)
            enc = pad_encoding(encode_fst(f), len(f.transitions) + 5)
            g = decode_fst(enc, f.num_states, f.finals, f.vocab)
            assert g == Fst.make(f.num_states, f.vocab, f.initials, f.finals,
                                 f.transitions)

    def test_rejects_content_after_padding(self, zero_deleter):
        enc = encode_fst(zero_deleter)
        bad = PrefixEncoding((enc.rows[0], PAD_ROW) + enc.rows[1:])
        with pytest.raises(EncodingError):
            decode_fst(bad, 2, {1})

    def test_rejects_inconsistent_flag(self, zero_deleter):
        enc = encode_fst(zero_deleter)
        src, inp, out, dst, flag = enc.rows[0]
        bad = PrefixEncoding(((src, inp, out, dst, 1 - flag),) + enc.rows[1:])
        with pytest.raises(EncodingError):
            decode_fst(bad, 2, {1})


class TestPadding:
    def test_pad_and_truncate(self, zero_deleter):
        enc = encode_fst(zero_deleter)
        padded = pad_encoding(enc, 10)
        assert len(padded) == 10
        assert padded.rows[len(enc):] == (PAD_ROW,) * (10 - len(enc))
        assert padded.content_rows == enc.rows
        assert truncate_encoding(padded, 4).rows == padded.rows[:4]

    def test_pad_too_short_rejected(self, zero_deleter):
        enc = encode_fst(zero_deleter)
        with pytest.raises(EncodingError):
            pad_encoding(enc, len(enc) - 1)

    def test_pad_batch(self, zero_deleter, last_symbol_decider):
        encs = [encode_fst(zero_deleter), encode_fst(last_symbol_decider)]
        out = pad_batch(encs, 64)
        assert all(len(e) == 64 for e in out)


class TestAverageInit:
    def test_mean_of_embeddings(self, zero_deleter, table):
        def embed(row):
            return np.asarray(row, dtype=float)

        enc = encode_fst(zero_deleter)
        avg = average_encoding_init([enc, enc], embed, prefix_len=8)
        assert avg.shape == (8, 5)
        single = average_encoding_init([enc], embed, prefix_len=8)
        assert np.allclose(avg, single)
        # rows past the content are the embedded pad row
        assert np.allclose(avg[len(enc):], np.asarray(PAD_ROW, dtype=float))

    def test_truncates_long_encodings(self, last_symbol_decider):
        def embed(row):
            return np.asarray(row, dtype=float)

        enc = encode_fst(last_symbol_decider)
        k = max(1, len(enc) - 2)
        avg = average_encoding_init([enc], embed, prefix_len=k)
        assert avg.shape == (k, 5)
