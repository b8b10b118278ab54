"""Integer prefix encoding of FSTs: ordered (src, in, out, dst, final) rows.

Rows are grouped by source state in ascending order starting at the
initial state (id 0); within a group rows sort by (input, output, dst) so
re-encoding a decoded FST is byte-identical.  Padding rows use the
reserved padding symbol id 0, a padding state id of -1 and final flag 2;
consumers that embed rows map these to dedicated table entries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fst import Fst, Transition
from .symbols import PAD

PAD_STATE = -1
PAD_FLAG = 2
PAD_ROW = (PAD_STATE, PAD, PAD, PAD_STATE, PAD_FLAG)


class EncodingError(ValueError):
    pass


@dataclass(frozen=True)
class PrefixEncoding:
    rows: tuple  # of (src, in, out, dst, final_flag)

    def __len__(self):
        return len(self.rows)

    @property
    def content_rows(self) -> tuple:
        return tuple(r for r in self.rows if r[0] != PAD_STATE)


def encode_fst(fst: Fst, max_states: int = 256, max_symbols: int = 4096) -> PrefixEncoding:
    if not fst.is_empty and fst.initials != frozenset({0}):
        raise EncodingError("encoding requires the initial state at index 0")
    if fst.num_states > max_states:
        raise EncodingError(f"{fst.num_states} states exceed table capacity {max_states}")
    rows = []
    for t in sorted(fst.transitions, key=lambda t: (t.src, t.inp, t.out, t.dst)):
        if t.inp >= max_symbols or t.out >= max_symbols:
            raise EncodingError(f"symbol id exceeds table capacity {max_symbols}")
        rows.append((t.src, t.inp, t.out, t.dst, 1 if t.dst in fst.finals else 0))
    return PrefixEncoding(tuple(rows))


def decode_fst(enc: PrefixEncoding, num_states: int, finals, vocab=None) -> Fst:
    """Inverse of encode_fst up to transition ordering; padding suffix ignored."""
    transitions = []
    seen_pad = False
    for i, row in enumerate(enc.rows):
        if len(row) != 5:
            raise EncodingError(f"row {i}: expected 5 fields, got {len(row)}")
        src, inp, out, dst, flag = row
        if src == PAD_STATE:
            seen_pad = True
            continue
        if seen_pad:
            raise EncodingError(f"row {i}: content row after padding rows")
        if not (0 <= src < num_states and 0 <= dst < num_states):
            raise EncodingError(f"row {i}: state id out of range")
        if flag != (1 if dst in set(finals) else 0):
            raise EncodingError(f"row {i}: final flag disagrees with finals set")
        transitions.append(Transition(src, inp, out, dst))
    inferred = {t.inp for t in transitions if t.inp >= 5}
    inferred |= {t.out for t in transitions if t.out >= 5}
    if vocab is not None:
        inferred |= set(vocab)
    return Fst.make(num_states, inferred, {0} if num_states else set(), finals,
                    transitions)


def pad_encoding(enc: PrefixEncoding, target_len: int) -> PrefixEncoding:
    if target_len < len(enc):
        raise EncodingError(f"target length {target_len} < encoding length {len(enc)}")
    return PrefixEncoding(enc.rows + (PAD_ROW,) * (target_len - len(enc)))


def pad_batch(encs, target_len: int) -> list:
    longest = max((len(e) for e in encs), default=0)
    if target_len < longest:
        raise EncodingError(f"target length {target_len} < longest encoding {longest}")
    return [pad_encoding(e, target_len) for e in encs]


def truncate_encoding(enc: PrefixEncoding, target_len: int) -> PrefixEncoding:
    """Drop tail rows beyond target_len (tail truncation by convention)."""
    return PrefixEncoding(enc.rows[:target_len])


def average_encoding_init(encs, embed, prefix_len: int = 50) -> np.ndarray:
    """Elementwise mean of embedded encodings, padded/truncated to prefix_len.

    ``embed`` maps one 5-tuple row to a 1-d vector; the result has shape
    (prefix_len, d).
    """
    stacks = []
    for enc in encs:
        enc = pad_encoding(truncate_encoding(enc, prefix_len), prefix_len)
        stacks.append(np.stack([np.asarray(embed(row), dtype=float) for row in enc.rows]))
    return np.mean(np.stack(stacks), axis=0)
