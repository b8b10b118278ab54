"""AT&T/OpenFST text-format import and export.

One transition per line ``src dst in out``, final states as bare ``state``
lines.  Symbols are written using the symbol-table sidecar's characters;
epsilon and the shorthands use the reserved tokens ``<eps>``, ``<id>``,
``<l2u>``, ``<u2l>``.  The format encodes a single initial state, which we
require to be state 0.
"""

from __future__ import annotations

from .fst import Fst, Transition
from .symbols import DEFAULT_TABLE, SymbolTable


def export_att(fst: Fst, table: SymbolTable = DEFAULT_TABLE) -> str:
    if fst.initials != frozenset({0}):
        raise ValueError("AT&T export requires a single initial state with index 0")
    lines = []
    for t in sorted(fst.transitions):
        lines.append(f"{t.src} {t.dst} {table.token_of(t.inp)} {table.token_of(t.out)}")
    for q in sorted(fst.finals):
        lines.append(str(q))
    return "\n".join(lines) + "\n"


def import_att(text: str, vocab=None, table: SymbolTable = DEFAULT_TABLE) -> Fst:
    transitions = []
    finals = set()
    states = {0}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) == 1:
            finals.add(int(parts[0]))
            states.add(int(parts[0]))
        elif len(parts) == 4:
            src, dst = int(parts[0]), int(parts[1])
            inp = table.id_of_token(parts[2])
            out = table.id_of_token(parts[3])
            transitions.append(Transition(src, inp, out, dst))
            states.update((src, dst))
        else:
            raise ValueError(f"line {lineno}: expected 1 or 4 fields, got {len(parts)}")
    num_states = max(states) + 1
    if vocab is None:
        vocab = {t.inp for t in transitions if t.inp >= 5}
        vocab |= {t.out for t in transitions if t.out >= 5}
    return Fst.make(num_states, vocab, {0}, finals, transitions)
