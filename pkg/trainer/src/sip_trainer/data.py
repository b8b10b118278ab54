"""File-format readers and batching for the corpus/sidecar/prefix interchange.

The trainer talks to the data-generation toolchain only through its files:
``corpus.jsonl`` (task_id/input/output strings), ``fsts.jsonl`` sidecars
(num_states/finals/rows), ``symbols.json`` (id-to-character mapping),
``corpus_states.jsonl`` (gold state sequences), and prefix JSON files
(``{"vectors": [[...]]}``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import torch

PAD = 0
EOS = 1  # reserved epsilon id, never appears in concrete strings
BOS = 2  # reserved identity-shorthand id, likewise free in strings
PAD_ROW = (-1, 0, 0, -1, 2)


def read_jsonl(path) -> list:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records


class SymbolMap:
    """Character/id mapping loaded from a corpus symbols.json."""

    def __init__(self, id_to_char: dict):
        self.id_to_char = {int(k): v for k, v in id_to_char.items()}
        self.char_to_id = {c: i for i, c in self.id_to_char.items()}
        if len(self.char_to_id) != len(self.id_to_char):
            raise ValueError("duplicate characters in symbol table")

    @classmethod
    def load(cls, path) -> "SymbolMap":
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh)["symbols"])

    @property
    def max_id(self) -> int:
        return max(self.id_to_char)

    def encode(self, text: str) -> list:
        return [self.char_to_id[c] for c in text]

    def decode(self, ids) -> str:
        return "".join(self.id_to_char[i] for i in ids)


@dataclass(frozen=True)
class Example:
    rows: tuple  # prefix-encoding rows, () when prefix-free
    x: tuple  # input symbol ids
    y: tuple  # output symbol ids
    states: tuple = ()  # gold state sequence, when available


def load_corpus(corpus_dir, with_states: bool = False) -> tuple:
    """Load a generated corpus directory into (examples, symbol map)."""
    corpus_dir = str(corpus_dir)
    symbols = SymbolMap.load(f"{corpus_dir}/symbols.json")
    rows_of = {rec["task_id"]: tuple(tuple(r) for r in rec["rows"])
               for rec in read_jsonl(f"{corpus_dir}/fsts.jsonl")}
    name = "corpus_states.jsonl" if with_states else "corpus.jsonl"
    examples = []
    for rec in read_jsonl(f"{corpus_dir}/{name}"):
        examples.append(Example(
            rows=rows_of[rec["task_id"]],
            x=tuple(symbols.encode(rec["input"])),
            y=tuple(symbols.encode(rec["output"])),
            states=tuple(rec.get("states", ()))))
    return examples, symbols


def load_split_pairs(split_dir, name: str, symbols: SymbolMap) -> list:
    """Input/output pairs from a split directory, without the task FST."""
    return [Example(rows=(), x=tuple(symbols.encode(rec["input"])),
                    y=tuple(symbols.encode(rec["output"])))
            for rec in read_jsonl(f"{split_dir}/{name}")]


def pad_rows(rows, length: int) -> tuple:
    if len(rows) > length:
        return tuple(rows[:length])
    return tuple(rows) + (PAD_ROW,) * (length - len(rows))


@dataclass
class Batch:
    rows: torch.Tensor  # (B, K, 5) long, padded with PAD_ROW
    row_mask: torch.Tensor  # (B, K) bool, True at padding rows
    x: torch.Tensor  # (B, Lx) long, EOS-terminated, PAD-padded
    x_mask: torch.Tensor  # (B, Lx) bool, True at padding
    y_in: torch.Tensor  # (B, Ly) long, BOS-prefixed
    y_out: torch.Tensor  # (B, Ly) long, EOS-terminated, PAD-padded
    y_mask: torch.Tensor  # (B, Ly) bool, True at padding


def make_batch(examples, device="cpu") -> Batch:
    b = len(examples)
    k = max(len(e.rows) for e in examples)
    lx = max(len(e.x) for e in examples) + 1
    ly = max(len(e.y) for e in examples) + 1
    rows = torch.tensor([pad_rows(e.rows, k) for e in examples]
                        if k else np.zeros((b, 0, 5), dtype=np.int64))
    row_mask = rows[:, :, 0].eq(-1) if k else torch.zeros((b, 0), dtype=torch.bool)
    x = torch.full((b, lx), PAD, dtype=torch.long)
    y_in = torch.full((b, ly), PAD, dtype=torch.long)
    y_out = torch.full((b, ly), PAD, dtype=torch.long)
    for i, e in enumerate(examples):
        x[i, :len(e.x)] = torch.tensor(e.x)
        x[i, len(e.x)] = EOS
        y_in[i, 0] = BOS
        y_in[i, 1:len(e.y) + 1] = torch.tensor(e.y, dtype=torch.long)
        y_out[i, :len(e.y)] = torch.tensor(e.y, dtype=torch.long)
        y_out[i, len(e.y)] = EOS
    return Batch(rows.to(device), row_mask.to(device),
                 x.to(device), x.eq(PAD).to(device),
                 y_in.to(device), y_out.to(device), y_out.eq(PAD).to(device))


def save_prefix(path, vectors) -> None:
    v = np.asarray(vectors, dtype=float)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"vectors": v.tolist()}, fh)
        fh.write("\n")


def load_prefix(path) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        return np.asarray(json.load(fh)["vectors"], dtype=float)
