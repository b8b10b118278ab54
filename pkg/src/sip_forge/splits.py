"""Systematic-generalization splits: iteration counts, unseen combinations
of transitions (UC), and extreme length extrapolation."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .fst import (
    Fst,
    Transition,
    remove_transitions,
    run_transitions,
    state_sequence,
    transduce,
    trim,
    union_with_fresh_initial,
)
from .sampling import GenerationError, sample_input
from .symbols import DEFAULT_TABLE, SymbolTable


class QuotaError(GenerationError):
    """Could not fill a split quota within the retry budget."""


@dataclass(frozen=True)
class IterationSplitConfig:
    train_max_iter: int = 3
    test_min_iter: int = 4
    train_len_range: tuple = (3, 15)
    test_max_len: int = 30
    train_size: int = 5000
    test_size: int = 1000
    train_stop_prob: float = 0.35
    test_stop_prob: float = 0.12

    def __post_init__(self):
        if self.train_max_iter >= self.test_min_iter:
            raise ValueError("train_max_iter must be < test_min_iter")


@dataclass(frozen=True)
class UcSplitConfig:
    max_withheld_pairs: int = 20
    train_len_range: tuple = (3, 15)
    test_len_range: tuple = (3, 30)
    train_size: int = 5000
    test_size: int = 1000
    train_stop_prob: float = 0.2
    test_stop_prob: float = 0.2


@dataclass(frozen=True)
class LengthSplitConfig:
    train_max_len: int = 15
    test_len_range: tuple = (40, 70)  # the other preset band is (90, 110)
    train_size: int = 5000
    test_size: int = 1000
    train_stop_prob: float = 0.2
    test_stop_prob: float = 0.05


@dataclass(frozen=True)
class WithheldPair:
    a: Transition
    b: Transition

    def __post_init__(self):
        if self.a == self.b:
            raise ValueError("withheld pair must consist of two distinct transitions")
        if self.a.dst != self.b.src:
            raise ValueError("withheld transitions must be adjacent")


@dataclass
class TaskDataset:
    fst: Fst | None
    train: list  # (input ids, output ids)
    test: list
    info: dict = field(default_factory=dict)


def iteration_count(fst: Fst, input_ids, table: SymbolTable = DEFAULT_TABLE) -> int:
    """Max occurrences of any single state in the run's state sequence,
    counting the initial visit and the pre-end-of-sequence position."""
    seq = state_sequence(fst, input_ids, table)
    if seq is None:
        raise ValueError("input is not in the FST's domain")
    return max(Counter(seq).values())


def _fill(sampler, predicate, size, exclude, budget_factor=400):
    out = []
    seen = set(exclude)
    budget = max(5000, budget_factor * size)
    attempts = 0
    while len(out) < size:
        if attempts >= budget:
            raise QuotaError(f"collected {len(out)}/{size} examples in {attempts} attempts")
        attempts += 1
        inp = sampler()
        if inp is None or inp in seen or not predicate(inp):
            continue
        seen.add(inp)
        out.append(inp)
    return out


def gen_iteration_split(fst: Fst, cfg: IterationSplitConfig, rng,
                        table: SymbolTable = DEFAULT_TABLE) -> TaskDataset:
    cache_train, cache_test = {}, {}
    lo, hi = cfg.train_len_range

    def count_of(inp):
        return iteration_count(fst, inp, table)

    train_inputs = _fill(
        lambda: sample_input(fst, lo, hi, rng, table, cfg.train_stop_prob, cache_train),
        lambda inp: count_of(inp) <= cfg.train_max_iter,
        cfg.train_size, exclude=())
    # an iteration count of k needs at least k occurrences of one state
    test_min_len = max(lo, cfg.test_min_iter - 1)
    test_inputs = _fill(
        lambda: sample_input(fst, test_min_len, cfg.test_max_len, rng, table,
                             cfg.test_stop_prob, cache_test),
        lambda inp: count_of(inp) >= cfg.test_min_iter,
        cfg.test_size, exclude=train_inputs)
    train = [(x, transduce(fst, x, table)) for x in train_inputs]
    test = [(x, transduce(fst, x, table)) for x in test_inputs]
    return TaskDataset(fst, train, test, {"split": "iteration", "config": cfg})


def _protected_transitions(fst: Fst) -> set:
    """First transition entering each state on a depth-first traversal from
    state 0, exploring transitions in (input symbol, dst) order."""
    by_src = [sorted((t for t in fst.transitions if t.src == q),
                     key=lambda t: (t.inp, t.dst)) for q in range(fst.num_states)]
    protected = set()
    visited = {0} if fst.num_states else set()
    stack = [0] if fst.num_states else []
    while stack:
        q = stack.pop()
        for t in reversed(by_src[q]):
            if t.dst not in visited:
                visited.add(t.dst)
                protected.add(t)
                stack.append(t.dst)
    return protected


def _all_states_useful(fst: Fst) -> bool:
    return trim(fst).num_states == fst.num_states


def select_withheld_pairs(fst: Fst, max_pairs: int, rng) -> list:
    """Adjacent non-identical transition pairs, sparing each state's
    depth-first entry transition, such that dropping all a-sides (and,
    separately, all b-sides) keeps every state on an accepting path."""
    protected = _protected_transitions(fst)
    eligible = [t for t in fst.transitions if t not in protected]
    by_src = {}
    for t in eligible:
        by_src.setdefault(t.src, []).append(t)
    candidates = [WithheldPair(a, b)
                  for a in eligible for b in by_src.get(a.dst, ()) if a != b]
    order = list(rng.permutation(len(candidates)))
    chosen = []
    removed_a, removed_b = set(), set()
    for i in order:
        if len(chosen) >= max_pairs:
            break
        pair = candidates[i]
        trial_a = removed_a | {pair.a}
        trial_b = removed_b | {pair.b}
        if not _all_states_useful(remove_transitions(fst, trial_a)):
            continue
        if not _all_states_useful(remove_transitions(fst, trial_b)):
            continue
        chosen.append(pair)
        removed_a, removed_b = trial_a, trial_b
    return chosen


def build_train_fst(fst: Fst, pairs) -> Fst:
    """f_train = (f minus all b-sides) union (f minus all a-sides)."""
    f_a = remove_transitions(fst, {p.b for p in pairs})
    f_b = remove_transitions(fst, {p.a for p in pairs})
    return union_with_fresh_initial(f_a, f_b)


def uses_withheld_combination(fst: Fst, pairs, input_ids,
                              table: SymbolTable = DEFAULT_TABLE) -> bool:
    """True iff the unique run of ``fst`` on the input uses at least one
    withheld a-side and at least one withheld b-side (the exact complement
    of f_train's domain)."""
    used = run_transitions(fst, input_ids, table)
    if used is None:
        raise ValueError("input is not in the FST's domain")
    used = set(used)
    return bool(used & {p.a for p in pairs}) and bool(used & {p.b for p in pairs})


def gen_uc_split(fst: Fst, cfg: UcSplitConfig, rng,
                 table: SymbolTable = DEFAULT_TABLE) -> TaskDataset:
    pairs = select_withheld_pairs(fst, cfg.max_withheld_pairs, rng)
    if not pairs:
        raise QuotaError("no eligible withheld pairs for this FST")
    f_train = build_train_fst(fst, pairs)
    cache_train, cache_test = {}, {}
    lo, hi = cfg.train_len_range

    train_inputs = _fill(
        lambda: sample_input(f_train, lo, hi, rng, table, cfg.train_stop_prob, cache_train),
        lambda inp: True,
        cfg.train_size, exclude=())
    tlo, thi = cfg.test_len_range
    test_inputs = _fill(
        lambda: sample_input(fst, tlo, thi, rng, table, cfg.test_stop_prob, cache_test),
        lambda inp: uses_withheld_combination(fst, pairs, inp, table),
        cfg.test_size, exclude=train_inputs)

    train = []
    for x in train_inputs:
        y = transduce(fst, x, table)
        y_train = transduce(f_train, x, table)
        assert y_train == y, "f_train disagrees with f on a training input"
        train.append((x, y))
    test = [(x, transduce(fst, x, table)) for x in test_inputs]
    return TaskDataset(fst, train, test,
                       {"split": "uc", "config": cfg, "withheld_pairs": pairs})


def gen_length_split(fst: Fst, cfg: LengthSplitConfig, rng,
                     table: SymbolTable = DEFAULT_TABLE) -> TaskDataset:
    cache_train, cache_test = {}, {}
    train_inputs = _fill(
        lambda: sample_input(fst, 1, cfg.train_max_len, rng, table,
                             cfg.train_stop_prob, cache_train),
        lambda inp: True, cfg.train_size, exclude=())
    lo, hi = cfg.test_len_range
    test_inputs = _fill(
        lambda: sample_input(fst, lo, hi, rng, table, cfg.test_stop_prob, cache_test),
        lambda inp: True, cfg.test_size, exclude=train_inputs)
    train = [(x, transduce(fst, x, table)) for x in train_inputs]
    test = [(x, transduce(fst, x, table)) for x in test_inputs]
    return TaskDataset(fst, train, test, {"split": "length", "config": cfg})
