"""Random generators: deterministic FSTs, bimachines, input/output pairs.

All randomness flows through numpy Generators.  Corpus-level generation
derives one independent stream per task from the master seed, so results
do not depend on generation order or worker count.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .bimachine import Bimachine, Dfa
from .fst import (
    Fst,
    Transition,
    expanded_moves,
    is_cyclic,
    minimize,
    transduce,
    trim,
    trim_reachable,
)
from .symbols import (
    DEFAULT_TABLE,
    EPSILON,
    IDENTITY,
    LOWER_TO_UPPER,
    UPPER_TO_LOWER,
    SymbolTable,
)


class GenerationError(RuntimeError):
    """A generator exhausted its retry budget."""


class InsufficientDomain(GenerationError):
    """The FST domain has too few strings in the requested length band."""


_SHORTHAND_KINDS = (IDENTITY, LOWER_TO_UPPER, UPPER_TO_LOWER)

# Stop probability at final states, calibrated offline so that the default
# pre-training configuration (lengths 1..35) has mean input length near 15.57.
DEFAULT_STOP_PROB = 0.064


def task_rng(master_seed: int, task_index: int) -> np.random.Generator:
    """Independent, order-invariant stream for one task."""
    return np.random.default_rng(
        np.random.SeedSequence(entropy=master_seed, spawn_key=(task_index,)))


@dataclass(frozen=True)
class DetFstConfig:
    n: int
    f: int
    vocab: frozenset
    p_id: float = 0.2
    p_drop: float = 0.4
    p_shorthand: float = 0.15
    max_retries: int = 100

    def __post_init__(self):
        for p in (self.p_id, self.p_drop, self.p_shorthand):
            if not 0.0 <= p <= 1.0:
                raise ValueError("probabilities must lie in [0, 1]")
        if self.n < 1 or self.f < 1:
            raise ValueError("need n >= 1 and f >= 1")


@dataclass(frozen=True)
class CorpusConfig:
    num_tasks: int = 40_000
    pairs_per_task: int = 5
    min_input_len: int = 1
    max_input_len: int = 35
    min_vocab: int = 5
    max_vocab: int = 25
    min_states: int = 2
    max_states: int = 4
    master_seed: int = 0
    mode: str = "det"  # det | bimachine
    p_id: float = 0.2
    p_drop: float = 0.4
    p_shorthand: float = 0.15
    bm_left_states: tuple = (2, 3)
    bm_right_states: tuple = (2, 3)
    stop_prob: float = DEFAULT_STOP_PROB
    ascii_only: bool = False

    def __post_init__(self):
        for p in (self.p_id, self.p_drop, self.p_shorthand, self.stop_prob):
            if not 0.0 <= p <= 1.0:
                raise ValueError("probabilities must lie in [0, 1]")
        if self.min_states < 1 or self.min_states > self.max_states:
            raise ValueError("need 1 <= min_states <= max_states")
        if self.min_vocab < 1 or self.min_vocab > self.max_vocab:
            raise ValueError("need 1 <= min_vocab <= max_vocab")
        if self.min_input_len < 0 or self.min_input_len > self.max_input_len:
            raise ValueError("need 0 <= min_input_len <= max_input_len")
        if self.num_tasks < 0 or self.pairs_per_task < 1:
            raise ValueError("need num_tasks >= 0 and pairs_per_task >= 1")


def _choice(rng, items):
    return items[rng.integers(len(items))]


def sample_vocab(rng, table: SymbolTable = DEFAULT_TABLE, min_size=5, max_size=25,
                 ascii_only=False) -> frozenset:
    pool = table.ascii_char_ids if ascii_only else list(table.char_ids)
    size = int(rng.integers(min_size, max_size + 1))
    return frozenset(int(s) for s in rng.choice(pool, size=size, replace=False))


def _raw_det_fst(cfg: DetFstConfig, rng) -> Fst:
    vocab = sorted(cfg.vocab)
    transitions = []
    for q in range(cfg.n):
        q2 = int(rng.integers(cfg.n))
        if rng.random() < cfg.p_shorthand:
            s = _SHORTHAND_KINDS[rng.integers(3)]
            transitions.append(Transition(q, s, s, q2))
        else:
            for sym in vocab:
                if rng.random() < cfg.p_drop:
                    continue
                if rng.random() < cfg.p_id:
                    transitions.append(Transition(q, sym, sym, q2))
                else:
                    out = _choice(rng, [EPSILON] + vocab)
                    transitions.append(Transition(q, sym, out, q2))
    return Fst.make(cfg.n, cfg.vocab, {0}, set(), transitions)


def gen_det_fst(cfg: DetFstConfig, rng, table: SymbolTable = DEFAULT_TABLE) -> Fst:
    """Sample a minimized, cyclic, deterministic FST; raises on give-up."""
    for _ in range(cfg.max_retries):
        raw = _raw_det_fst(cfg, rng)
        reach = trim_reachable(raw)
        if reach.is_empty and reach.num_states == 0:
            continue
        k = min(cfg.f, reach.num_states)
        finals = rng.choice(reach.num_states, size=k, replace=False)
        candidate = Fst(reach.num_states, reach.vocab, reach.initials,
                        frozenset(int(q) for q in finals), reach.transitions)
        candidate = trim(candidate)
        if candidate.is_empty:
            continue
        candidate = minimize(candidate, table)
        if candidate.is_empty or not is_cyclic(candidate):
            continue
        return candidate
    raise GenerationError(f"no usable FST after {cfg.max_retries} attempts")


def gen_dfa(n: int, vocab, p_drop: float, rng, max_retries: int = 100) -> Dfa:
    """DFA sampled like the FST generator with outputs ignored; all states final."""
    syms = sorted(vocab)
    for _ in range(max_retries):
        delta = {}
        for q in range(n):
            q2 = int(rng.integers(n))
            for sym in syms:
                if rng.random() < p_drop:
                    continue
                delta[(q, sym)] = q2
        # keep only states reachable from 0, reindexed with the initial first
        seen = {0}
        frontier = deque([0])
        while frontier:
            q = frontier.popleft()
            for sym in syms:
                d = delta.get((q, sym))
                if d is not None and d not in seen:
                    seen.add(d)
                    frontier.append(d)
        order = sorted(seen)
        remap = {old: new for new, old in enumerate(order)}
        pruned = {(remap[q], sym): remap[d] for (q, sym), d in delta.items()
                  if q in seen and d in seen}
        if pruned:
            return Dfa(len(order), frozenset(vocab), 0, pruned)
    raise GenerationError(f"no usable DFA after {max_retries} attempts")


def gen_bimachine(left_states: int, right_states: int, vocab, p_drop: float,
                  rng, p_id: float = 0.2, max_retries: int = 100) -> Bimachine:
    """Left/right DFAs plus a dense output function with identity bias p_id."""
    left = gen_dfa(left_states, vocab, p_drop, rng, max_retries)
    right = gen_dfa(right_states, vocab, p_drop, rng, max_retries)
    syms = sorted(vocab)
    psi = {}
    for ql in range(left.num_states):
        for qr in range(right.num_states):
            for sym in syms:
                if rng.random() < p_id:
                    psi[(ql, sym, qr)] = sym
                else:
                    psi[(ql, sym, qr)] = _choice(rng, [EPSILON] + syms)
    return Bimachine(left, right, psi)


def _distance_to_final(fst: Fst, moves) -> list:
    """Min input symbols from each state to a final state (0-1 BFS over
    concrete moves; input-epsilon moves cost nothing)."""
    INF = float("inf")
    dist = [INF] * fst.num_states
    radj = [[] for _ in range(fst.num_states)]  # dst -> [(cost, src)]
    for q, per_state in enumerate(moves):
        for sym, dests in per_state.items():
            cost = 0 if sym == EPSILON else 1
            for _, d in dests:
                radj[d].append((cost, q))
    dq = deque()
    for q in fst.finals:
        dist[q] = 0
        dq.append(q)
    while dq:
        d = dq.popleft()
        for cost, s in radj[d]:
            nd = dist[d] + cost
            if nd < dist[s]:
                dist[s] = nd
                if cost == 0:
                    dq.appendleft(s)
                else:
                    dq.append(s)
    return dist


def sample_input(fst: Fst, min_len: int, max_len: int, rng,
                 table: SymbolTable = DEFAULT_TABLE, stop_prob: float = DEFAULT_STOP_PROB,
                 _cache: dict | None = None):
    """One accepted input via a budgeted random walk, or None on a dead end.

    Moves are restricted so a final state stays reachable within the
    remaining budget; at a final state (once min_len is met) the walk stops
    with probability stop_prob.
    """
    if _cache is not None and "moves" in _cache:
        moves, dist = _cache["moves"], _cache["dist"]
    else:
        moves = expanded_moves(fst, table)
        dist = _distance_to_final(fst, moves)
        if _cache is not None:
            _cache.update(moves=moves, dist=dist)
    if fst.is_empty:
        return None
    starts = [q for q in sorted(fst.initials) if dist[q] <= max_len]
    if not starts:
        return None
    state = _choice(rng, starts)
    out = []
    steps = 0
    max_steps = 4 * max_len + 16  # epsilon moves do not consume budget
    while steps < max_steps:
        steps += 1
        at_final = state in fst.finals
        if at_final and len(out) >= min_len and rng.random() < stop_prob:
            return tuple(out)
        remaining = max_len - len(out)
        feasible = []
        for sym, dests in moves[state].items():
            cost = 0 if sym == EPSILON else 1
            if cost > remaining:
                continue
            for _, d in dests:
                if dist[d] + cost <= remaining:
                    feasible.append((sym, d))
        if not feasible:
            if at_final and len(out) >= min_len:
                return tuple(out)
            return None
        sym, state = _choice(rng, feasible)
        if sym != EPSILON:
            out.append(sym)
    return None


def sample_io_pairs(fst: Fst, count: int, min_len: int, max_len: int, rng,
                    table: SymbolTable = DEFAULT_TABLE,
                    stop_prob: float = DEFAULT_STOP_PROB,
                    max_attempts: int | None = None) -> list:
    """Distinct accepted inputs paired with their transduction outputs."""
    if max_attempts is None:
        max_attempts = max(2000, 200 * count)
    cache = {}
    seen = set()
    pairs = []
    attempts = 0
    while len(pairs) < count:
        if attempts >= max_attempts:
            raise InsufficientDomain(
                f"found {len(pairs)}/{count} distinct inputs in lengths "
                f"[{min_len}, {max_len}] after {attempts} attempts")
        attempts += 1
        inp = sample_input(fst, min_len, max_len, rng, table, stop_prob, cache)
        if inp is None or inp in seen:
            continue
        out = transduce(fst, inp, table)
        assert out is not None, "walk produced an input outside the domain"
        seen.add(inp)
        pairs.append((inp, out))
    return pairs


def gen_set_task(num_examples: int, rng, table: SymbolTable = DEFAULT_TABLE,
                 min_vocab: int = 5, max_vocab: int = 25,
                 min_len: int = 5, max_len: int = 35) -> list:
    """Character deduplication task: keep the first occurrence of each type."""
    vocab = sorted(sample_vocab(rng, table, min_vocab, max_vocab, ascii_only=True))
    examples = []
    for _ in range(num_examples):
        length = int(rng.integers(min_len, max_len + 1))
        inp = tuple(_choice(rng, vocab) for _ in range(length))
        out = tuple(dict.fromkeys(inp))
        examples.append((inp, out))
    return examples


@dataclass
class PretrainTask:
    task_id: int
    fst: Fst
    pairs: list
    vocab: frozenset = field(default_factory=frozenset)


def gen_pretrain_task(cfg: CorpusConfig, task_id: int,
                      table: SymbolTable = DEFAULT_TABLE) -> PretrainTask:
    """Deterministically generate one corpus task from (master_seed, task_id)."""
    rng = task_rng(cfg.master_seed, task_id)
    last_err = None
    for _ in range(50):
        vocab = sample_vocab(rng, table, cfg.min_vocab, cfg.max_vocab, cfg.ascii_only)
        try:
            if cfg.mode == "det":
                n = int(rng.integers(cfg.min_states, cfg.max_states + 1))
                f = int(rng.integers(1, n + 1))
                fst = gen_det_fst(DetFstConfig(n, f, vocab, cfg.p_id, cfg.p_drop,
                                               cfg.p_shorthand), rng, table)
            elif cfg.mode == "bimachine":
                nl = int(_choice(rng, list(cfg.bm_left_states)))
                nr = int(_choice(rng, list(cfg.bm_right_states)))
                bm = gen_bimachine(nl, nr, vocab, cfg.p_drop, rng, cfg.p_id)
                from .bimachine import bimachine_to_fst
                from .fst import with_fresh_initial
                fst = bimachine_to_fst(bm)
                if fst.is_empty or not is_cyclic(fst):
                    raise GenerationError("acyclic or empty compiled bimachine")
                # fresh single initial so the task can be prefix-encoded
                fst = with_fresh_initial(fst)
            else:
                raise ValueError(f"unknown corpus mode {cfg.mode!r}")
            pairs = sample_io_pairs(fst, cfg.pairs_per_task, cfg.min_input_len,
                                    cfg.max_input_len, rng, table, cfg.stop_prob)
            return PretrainTask(task_id, fst, pairs, vocab)
        except GenerationError as err:
            last_err = err
    raise GenerationError(f"task {task_id}: {last_err}")
