"""Immutable finite state transducers: execution, trimming, minimization.

Transitions carry symbol ids from :mod:`sip_forge.symbols`.  Shorthand
labels (identity, case conversion) stay atomic in the structure and are
expanded only inside the execution engine.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable

from .symbols import (
    DEFAULT_TABLE,
    EPSILON,
    IDENTITY,
    LOWER_TO_UPPER,
    UPPER_TO_LOWER,
    SymbolTable,
    is_concrete,
    is_shorthand,
)


class AmbiguousTransduction(Exception):
    """An input admits two accepting paths with distinct outputs."""

    def __init__(self, input_ids, outputs):
        self.input_ids = tuple(input_ids)
        self.outputs = tuple(outputs)
        super().__init__(f"input {self.input_ids} has {len(outputs)} distinct outputs")


class NotDeterministic(ValueError):
    pass


@dataclass(frozen=True, order=True)
class Transition:
    src: int
    inp: int
    out: int
    dst: int


@dataclass(frozen=True)
class Fst:
    num_states: int
    vocab: frozenset
    initials: frozenset
    finals: frozenset
    transitions: tuple

    def __post_init__(self):
        for q in self.initials | self.finals:
            if not (0 <= q < self.num_states):
                raise ValueError(f"state index {q} out of range")
        for t in self.transitions:
            if not (0 <= t.src < self.num_states and 0 <= t.dst < self.num_states):
                raise ValueError(f"transition {t} out of range")
            if is_shorthand(t.inp) and t.inp != t.out:
                raise ValueError(f"shorthand transition must have input == output: {t}")

    @classmethod
    def make(cls, num_states, vocab, initials, finals, transitions) -> "Fst":
        return cls(num_states, frozenset(vocab), frozenset(initials),
                   frozenset(finals), tuple(transitions))

    @property
    def is_empty(self) -> bool:
        return self.num_states == 0 or not self.finals or not self.initials

    def by_src(self) -> list:
        out = [[] for _ in range(self.num_states)]
        for t in self.transitions:
            out[t.src].append(t)
        return out


EMPTY_FST = Fst(0, frozenset(), frozenset(), frozenset(), ())


def _expand_one(t: Transition, vocab, table: SymbolTable):
    """Concrete (inp, out, dst) moves represented by a single transition."""
    if t.inp == IDENTITY:
        return [(s, s, t.dst) for s in sorted(vocab)]
    if t.inp == LOWER_TO_UPPER:
        return [(s, table.to_upper(s), t.dst) for s in sorted(vocab)
                if table.is_lower_ascii(s)]
    if t.inp == UPPER_TO_LOWER:
        return [(s, table.to_lower(s), t.dst) for s in sorted(vocab)
                if table.is_upper_ascii(s)]
    return [(t.inp, t.out, t.dst)]


def expand_shorthands(fst: Fst, table: SymbolTable = DEFAULT_TABLE) -> Fst:
    """Replace each shorthand transition by its concrete transitions."""
    transitions = []
    for t in fst.transitions:
        if is_shorthand(t.inp):
            transitions.extend(Transition(t.src, i, o, d)
                               for i, o, d in _expand_one(t, fst.vocab, table))
        else:
            transitions.append(t)
    return Fst(fst.num_states, fst.vocab, fst.initials, fst.finals,
               tuple(dict.fromkeys(transitions)))


def expanded_moves(fst: Fst, table: SymbolTable = DEFAULT_TABLE) -> list:
    """Per-state concrete moves: moves[q][sym] -> list of (out, dst).

    ``moves[q][EPSILON]`` holds input-epsilon moves.
    """
    moves = [dict() for _ in range(fst.num_states)]
    for t in fst.transitions:
        if is_shorthand(t.inp):
            expanded = _expand_one(t, fst.vocab, table)
        else:
            expanded = [(t.inp, t.out, t.dst)]
        for i, o, d in expanded:
            moves[t.src].setdefault(i, []).append((o, d))
    return moves


def is_deterministic(fst: Fst, table: SymbolTable = DEFAULT_TABLE) -> bool:
    """Single initial state 0, no input-epsilons, at most one move per symbol."""
    if fst.initials != frozenset({0}):
        return False
    for per_state in expanded_moves(fst, table):
        if EPSILON in per_state:
            return False
        for dests in per_state.values():
            if len(set(dests)) > 1:
                return False
    return True


_MAX_OUTPUTS = 2  # two distinct outputs already witness ambiguity


def transduce(fst: Fst, input_ids, table: SymbolTable = DEFAULT_TABLE):
    """Apply the transduction; None if undefined, raises if ambiguous.

    Memoized search over (state, position).  Input-epsilon transitions
    advance the state without consuming input; epsilon cycles are not
    supported (none of our constructions create them).
    """
    input_ids = tuple(input_ids)
    for s in input_ids:
        if not is_concrete(s):
            raise ValueError(f"input contains non-concrete symbol id {s}")
    if fst.is_empty:
        return None
    moves = expanded_moves(fst, table)
    n = len(input_ids)
    memo = {}
    on_stack = set()

    def outputs(state, pos):
        key = (state, pos)
        if key in memo:
            return memo[key]
        if key in on_stack:  # epsilon cycle guard; contributes nothing new
            return frozenset()
        on_stack.add(key)
        acc = set()
        if pos == n and state in fst.finals:
            acc.add(())
        per_state = moves[state]
        if pos < n:
            for o, d in per_state.get(input_ids[pos], ()):
                prefix = () if o == EPSILON else (o,)
                for suffix in outputs(d, pos + 1):
                    acc.add(prefix + suffix)
                    if len(acc) > _MAX_OUTPUTS:
                        break
        for o, d in per_state.get(EPSILON, ()):
            prefix = () if o == EPSILON else (o,)
            for suffix in outputs(d, pos):
                acc.add(prefix + suffix)
        on_stack.discard(key)
        result = frozenset(sorted(acc)[:_MAX_OUTPUTS])
        memo[key] = result
        return result

    found = set()
    for q0 in fst.initials:
        found |= outputs(q0, 0)
    if not found:
        return None
    if len(found) > 1:
        raise AmbiguousTransduction(input_ids, sorted(found))
    return next(iter(found))


def _det_step_table(fst: Fst, table: SymbolTable) -> list:
    """steps[q][sym] -> (out, dst), raising if the FST is not deterministic."""
    if fst.initials != frozenset({0}):
        raise NotDeterministic("deterministic FST must have initials == {0}")
    steps = [dict() for _ in range(fst.num_states)]
    for q, per_state in enumerate(expanded_moves(fst, table)):
        if EPSILON in per_state:
            raise NotDeterministic(f"state {q} has an input-epsilon transition")
        for sym, dests in per_state.items():
            dests = set(dests)
            if len(dests) > 1:
                raise NotDeterministic(f"state {q} has {len(dests)} moves on symbol {sym}")
            steps[q][sym] = next(iter(dests))
    return steps


def state_sequence(fst: Fst, input_ids, table: SymbolTable = DEFAULT_TABLE):
    """States visited before each token plus the pre-end-of-sequence state.

    Returns None if the unique run dies or does not end in a final state.
    """
    steps = _det_step_table(fst, table)
    if fst.is_empty:
        return None
    state = 0
    seq = [state]
    for sym in input_ids:
        move = steps[state].get(sym)
        if move is None:
            return None
        state = move[1]
        seq.append(state)
    if state not in fst.finals:
        return None
    return seq


def run_transitions(fst: Fst, input_ids, table: SymbolTable = DEFAULT_TABLE):
    """The (atomic) transitions used along the unique accepting run, or None.

    Shorthand transitions are reported unexpanded, so membership against the
    original transition list is exact.
    """
    if fst.initials != frozenset({0}):
        raise NotDeterministic("deterministic FST must have initials == {0}")
    by_sym = [dict() for _ in range(fst.num_states)]
    for t in fst.transitions:
        if is_shorthand(t.inp):
            keys = [i for i, _, _ in _expand_one(t, fst.vocab, table)]
        else:
            keys = [t.inp]
        for k in keys:
            if k in by_sym[t.src] and by_sym[t.src][k] != t:
                raise NotDeterministic(f"state {t.src} non-deterministic on symbol {k}")
            by_sym[t.src][k] = t
    state, used = 0, []
    for sym in input_ids:
        t = by_sym[state].get(sym)
        if t is None:
            return None
        used.append(t)
        state = t.dst
    if state not in fst.finals:
        return None
    return used


def _reachable(fst: Fst) -> set:
    seen = set(fst.initials)
    stack = list(fst.initials)
    adj = [[] for _ in range(fst.num_states)]
    for t in fst.transitions:
        adj[t.src].append(t.dst)
    while stack:
        q = stack.pop()
        for d in adj[q]:
            if d not in seen:
                seen.add(d)
                stack.append(d)
    return seen


def _coreachable(fst: Fst) -> set:
    seen = set(fst.finals)
    stack = list(fst.finals)
    radj = [[] for _ in range(fst.num_states)]
    for t in fst.transitions:
        radj[t.dst].append(t.src)
    while stack:
        q = stack.pop()
        for s in radj[q]:
            if s not in seen:
                seen.add(s)
                stack.append(s)
    return seen


def _reindex(fst: Fst, keep: set) -> Fst:
    """Restrict to ``keep``, putting a unique surviving initial at index 0 and
    preserving the relative order of the other surviving indices."""
    order = sorted(keep)
    if len(fst.initials) == 1:
        (q0,) = fst.initials
        if q0 in keep:
            order = [q0] + [q for q in order if q != q0]
    remap = {old: new for new, old in enumerate(order)}
    transitions = tuple(Transition(remap[t.src], t.inp, t.out, remap[t.dst])
                        for t in fst.transitions if t.src in keep and t.dst in keep)
    return Fst(len(order), fst.vocab,
               frozenset(remap[q] for q in fst.initials if q in keep),
               frozenset(remap[q] for q in fst.finals if q in keep),
               transitions)


def trim(fst: Fst) -> Fst:
    """Keep exactly the states on some accepting path."""
    useful = _reachable(fst) & _coreachable(fst)
    if not useful:
        return EMPTY_FST
    return _reindex(fst, useful)


def trim_reachable(fst: Fst) -> Fst:
    """Keep only states reachable from an initial state (finals not yet fixed)."""
    seen = _reachable(fst)
    if not seen:
        return EMPTY_FST
    return _reindex(fst, seen)


def minimize(fst: Fst, table: SymbolTable = DEFAULT_TABLE) -> Fst:
    """Merge states with equivalent onward behaviour.

    Trim followed by partition refinement on (input, output, target block,
    finality) signatures, with shorthand labels kept atomic.  This preserves
    the transduction exactly; it does not chase Mohri-canonical minimality
    (no output pushing), which the callers do not need.
    """
    if not is_deterministic(fst, table):
        raise NotDeterministic("minimize requires a deterministic FST")
    fst = trim(fst)
    if fst.is_empty:
        return fst
    n = fst.num_states
    by_src = fst.by_src()
    block = [1 if q in fst.finals else 0 for q in range(n)]
    while True:
        sigs = {}
        new_block = [0] * n
        for q in range(n):
            sig = (block[q], tuple(sorted((t.inp, t.out, block[t.dst]) for t in by_src[q])))
            new_block[q] = sigs.setdefault(sig, len(sigs))
        if new_block == block:
            break
        block = new_block
    # block containing the initial state becomes state 0; others keep the
    # relative order of their smallest member.
    reps = {}
    for q in range(n):
        reps.setdefault(block[q], q)
    order = sorted(reps, key=lambda b: (b != block[0], reps[b]))
    remap = {b: i for i, b in enumerate(order)}
    transitions = tuple(sorted({Transition(remap[block[t.src]], t.inp, t.out, remap[block[t.dst]])
                                for t in fst.transitions}))
    return Fst(len(order), fst.vocab, frozenset({remap[block[0]]}),
               frozenset({remap[block[q]] for q in fst.finals}), transitions)


def is_cyclic(fst: Fst) -> bool:
    """True iff the transition graph contains a directed cycle."""
    adj = [[] for _ in range(fst.num_states)]
    for t in fst.transitions:
        adj[t.src].append(t.dst)
    color = [0] * fst.num_states  # 0 unseen, 1 on stack, 2 done
    for start in range(fst.num_states):
        if color[start]:
            continue
        stack = [(start, iter(adj[start]))]
        color[start] = 1
        while stack:
            q, it = stack[-1]
            advanced = False
            for d in it:
                if color[d] == 1:
                    return True
                if color[d] == 0:
                    color[d] = 1
                    stack.append((d, iter(adj[d])))
                    advanced = True
                    break
            if not advanced:
                color[q] = 2
                stack.pop()
    return False


def union_with_fresh_initial(a: Fst, b: Fst) -> Fst:
    """Disjoint union behind a fresh initial state with eps:eps entry arcs."""
    off_a, off_b = 1, 1 + a.num_states
    num_states = 1 + a.num_states + b.num_states
    transitions = [Transition(0, EPSILON, EPSILON, off_a + q) for q in sorted(a.initials)]
    transitions += [Transition(0, EPSILON, EPSILON, off_b + q) for q in sorted(b.initials)]
    transitions += [Transition(t.src + off_a, t.inp, t.out, t.dst + off_a) for t in a.transitions]
    transitions += [Transition(t.src + off_b, t.inp, t.out, t.dst + off_b) for t in b.transitions]
    finals = {q + off_a for q in a.finals} | {q + off_b for q in b.finals}
    return Fst(num_states, a.vocab | b.vocab, frozenset({0}), frozenset(finals),
               tuple(transitions))


def with_fresh_initial(fst: Fst) -> Fst:
    """Single fresh initial state at index 0 with eps:eps entry arcs."""
    transitions = [Transition(0, EPSILON, EPSILON, q + 1) for q in sorted(fst.initials)]
    transitions += [Transition(t.src + 1, t.inp, t.out, t.dst + 1)
                    for t in fst.transitions]
    return Fst(fst.num_states + 1, fst.vocab, frozenset({0}),
               frozenset(q + 1 for q in fst.finals), tuple(transitions))


def remove_transitions(fst: Fst, removed: Iterable) -> Fst:
    removed = set(removed)
    return Fst(fst.num_states, fst.vocab, fst.initials, fst.finals,
               tuple(t for t in fst.transitions if t not in removed))


def isomorphic(a: Fst, b: Fst) -> bool:
    """Structural equality up to a state relabeling (deterministic FSTs)."""
    if (a.num_states != b.num_states or len(a.transitions) != len(b.transitions)
            or len(a.finals) != len(b.finals) or len(a.initials) != len(b.initials) != 1):
        return False
    # follow atomic labels breadth-first from the initial states
    la = {q: sorted((t.inp, t.out, t.dst) for t in a.transitions if t.src == q)
          for q in range(a.num_states)}
    lb = {q: sorted((t.inp, t.out, t.dst) for t in b.transitions if t.src == q)
          for q in range(b.num_states)}
    (ia,), (ib,) = a.initials, b.initials
    mapping = {ia: ib}
    queue = deque([(ia, ib)])
    while queue:
        qa, qb = queue.popleft()
        if (qa in a.finals) != (qb in b.finals):
            return False
        ta, tb = la[qa], lb[qb]
        if [(i, o) for i, o, _ in ta] != [(i, o) for i, o, _ in tb]:
            return False
        for (_, _, da), (_, _, db) in zip(ta, tb):
            if da in mapping:
                if mapping[da] != db:
                    return False
            else:
                mapping[da] = db
                queue.append((da, db))
    return len(mapping) == a.num_states
