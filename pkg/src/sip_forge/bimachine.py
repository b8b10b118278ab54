"""Bimachines: two deterministic automata plus an output function.

A bimachine runs the left DFA forwards and the right DFA backwards over
the input and emits one (possibly empty) symbol per position.  Every
bimachine compiles to a functional, generally non-deterministic FST via
a product construction.
"""

from __future__ import annotations

from dataclasses import dataclass

from .fst import Fst, Transition, trim
from .symbols import EPSILON

FORMAT_VERSION = 1


@dataclass(frozen=True)
class Dfa:
    """Deterministic automaton with all states final; delta may be partial."""

    num_states: int
    vocab: frozenset
    initial: int
    delta: dict  # (state, symbol) -> state

    def __post_init__(self):
        if not (0 <= self.initial < self.num_states):
            raise ValueError("initial state out of range")
        for (q, _), d in self.delta.items():
            if not (0 <= q < self.num_states and 0 <= d < self.num_states):
                raise ValueError("delta endpoint out of range")

    def run(self, input_ids):
        """State sequence q_0 .. q_n, or None if delta is undefined somewhere."""
        q = self.initial
        seq = [q]
        for sym in input_ids:
            q = self.delta.get((q, sym))
            if q is None:
                return None
            seq.append(q)
        return seq


@dataclass(frozen=True)
class Bimachine:
    left: Dfa
    right: Dfa
    psi: dict  # (left_state, symbol, right_state) -> output symbol id or EPSILON

    @property
    def vocab(self) -> frozenset:
        return self.left.vocab

    def __post_init__(self):
        for ql in range(self.left.num_states):
            for sym in self.vocab:
                for qr in range(self.right.num_states):
                    if (ql, sym, qr) not in self.psi:
                        raise ValueError(f"psi undefined for {(ql, sym, qr)}")


def run_bimachine(bm: Bimachine, input_ids):
    """Output of the bimachine, or None when either run dies."""
    input_ids = tuple(input_ids)
    left = bm.left.run(input_ids)
    if left is None:
        return None
    right = bm.right.run(reversed(input_ids))
    if right is None:
        return None
    right = right[::-1]
    n = len(input_ids)
    out = []
    for i in range(1, n + 1):
        rho = bm.psi[(left[i - 1], input_ids[i - 1], right[i])]
        if rho != EPSILON:
            out.append(rho)
    return tuple(out)


def bimachine_to_fst(bm: Bimachine) -> Fst:
    """Product construction; the result is trimmed and functional."""
    nl, nr = bm.left.num_states, bm.right.num_states

    def idx(ql, qr):
        return ql * nr + qr

    transitions = []
    for (ql, sym), ql2 in bm.left.delta.items():
        for qr2 in range(nr):
            qr = bm.right.delta.get((qr2, sym))
            if qr is None:
                continue
            rho = bm.psi[(ql, sym, qr2)]
            transitions.append(Transition(idx(ql, qr), sym, rho, idx(ql2, qr2)))
    initials = {idx(bm.left.initial, qr) for qr in range(nr)}
    finals = {idx(ql, bm.right.initial) for ql in range(nl)}
    return trim(Fst.make(nl * nr, bm.vocab, initials, finals, transitions))


def bimachine_to_json(bm: Bimachine) -> dict:
    return {
        "version": FORMAT_VERSION,
        "vocab": sorted(bm.vocab),
        "left": _dfa_to_json(bm.left),
        "right": _dfa_to_json(bm.right),
        "psi": [[ql, sym, qr, rho] for (ql, sym, qr), rho in sorted(bm.psi.items())],
    }


def bimachine_from_json(obj: dict) -> Bimachine:
    if obj.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported bimachine format version {obj.get('version')!r}")
    vocab = frozenset(obj["vocab"])
    left = _dfa_from_json(obj["left"], vocab)
    right = _dfa_from_json(obj["right"], vocab)
    psi = {(ql, sym, qr): rho for ql, sym, qr, rho in obj["psi"]}
    return Bimachine(left, right, psi)


def _dfa_to_json(dfa: Dfa) -> dict:
    return {
        "num_states": dfa.num_states,
        "initial": dfa.initial,
        "delta": [[q, sym, d] for (q, sym), d in sorted(dfa.delta.items())],
    }


def _dfa_from_json(obj: dict, vocab) -> Dfa:
    delta = {(q, sym): d for q, sym, d in obj["delta"]}
    return Dfa(obj["num_states"], vocab, obj["initial"], delta)
