"""Evaluation metrics and probing utilities."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .fst import Fst, expanded_moves
from .symbols import DEFAULT_TABLE, SymbolTable


@dataclass(frozen=True)
class EvalReport:
    seq_accuracy: float
    mean_edit_distance: float
    per: float  # corpus-level: total edits / total gold length
    per_macro: float  # mean of per-example edit/len ratios

    def to_dict(self) -> dict:
        return {"seq_accuracy": self.seq_accuracy,
                "mean_edit_distance": self.mean_edit_distance,
                "per": self.per, "per_macro": self.per_macro}


@dataclass(frozen=True)
class ProbeReport:
    token_accuracy: float
    whole_sequence_accuracy: float
    matching: tuple  # matching[pred_id] = gold-space id


def edit_distance(a, b) -> int:
    """Levenshtein distance with unit insert/delete/substitute costs."""
    a, b = tuple(a), tuple(b)
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def evaluate(predictions, golds) -> EvalReport:
    if len(predictions) != len(golds):
        raise ValueError(f"{len(predictions)} predictions vs {len(golds)} golds")
    if not golds:
        raise ValueError("empty evaluation set")
    exact = 0
    edits = []
    ratios = []
    total_gold = 0
    for pred, gold in zip(predictions, golds):
        d = edit_distance(pred, gold)
        edits.append(d)
        exact += pred == gold
        total_gold += len(gold)
        ratios.append(d / len(gold) if len(gold) else float(d > 0))
    per = sum(edits) / total_gold if total_gold else float(sum(edits) > 0)
    return EvalReport(exact / len(golds), sum(edits) / len(edits), per,
                      sum(ratios) / len(ratios))


def heuristic_probe_baseline(fst: Fst, input_ids, rng,
                             table: SymbolTable = DEFAULT_TABLE) -> list:
    """Random state with an appropriate outgoing transition per token; a
    random final state for the end-of-sequence position."""
    moves = expanded_moves(fst, table)
    by_symbol = {}
    for q, per_state in enumerate(moves):
        for sym in per_state:
            by_symbol.setdefault(sym, []).append(q)
    seq = []
    for sym in input_ids:
        candidates = by_symbol.get(sym, list(range(fst.num_states)))
        seq.append(int(candidates[rng.integers(len(candidates))]))
    finals = sorted(fst.finals)
    seq.append(int(finals[rng.integers(len(finals))]))
    return seq


def _count_matrix(pred_sequences, gold_sequences, num_states) -> np.ndarray:
    counts = np.zeros((num_states, num_states), dtype=np.int64)
    for pred, gold in zip(pred_sequences, gold_sequences):
        if len(pred) != len(gold):
            raise ValueError("prediction/gold sequence length mismatch")
        for p, g in zip(pred, gold):
            counts[g, p] += 1
    return counts


def best_isomorphism_match(pred_sequences, gold_sequences, num_states) -> ProbeReport:
    """Search all state-id permutations of the predictions for the one with
    the best mean token accuracy."""
    if num_states > 8:
        raise ValueError("brute-force matching supports at most 8 states")
    counts = _count_matrix(pred_sequences, gold_sequences, num_states)
    total = counts.sum()
    best_perm, best_correct = None, -1
    for perm in permutations(range(num_states)):
        correct = sum(counts[perm[p], p] for p in range(num_states))
        if correct > best_correct:
            best_correct, best_perm = correct, perm
    whole = sum(
        all(best_perm[p] == g for p, g in zip(pred, gold))
        for pred, gold in zip(pred_sequences, gold_sequences))
    return ProbeReport(best_correct / total if total else 0.0,
                       whole / len(gold_sequences) if gold_sequences else 0.0,
                       tuple(best_perm))


def confusion_matrix(pred_sequences, gold_sequences, permutation) -> np.ndarray:
    """Row-normalized: rows are gold states, columns permuted predictions."""
    n = len(permutation)
    counts = np.zeros((n, n), dtype=float)
    for pred, gold in zip(pred_sequences, gold_sequences):
        for p, g in zip(pred, gold):
            counts[g, permutation[p]] += 1
    sums = counts.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore"):
        normalized = np.where(sums > 0, counts / np.where(sums > 0, sums, 1), 0.0)
    return normalized
