"""Prefix similarity: best average cosine over position matchings.

The exact variant solves the assignment problem; the approximate variant
runs Sinkhorn scaling on exp(cos/T) and greedily extracts a matching.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

DEFAULT_TEMPERATURE = 0.1
DEFAULT_ITERS = 30


@dataclass(frozen=True)
class Prefix:
    vectors: np.ndarray  # (n, d)

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=float)
        if v.ndim != 2 or v.shape[0] == 0:
            raise ValueError("prefix must be a non-empty (n, d) array")
        if np.any(np.linalg.norm(v, axis=1) == 0):
            raise ValueError("prefix contains a zero-norm vector")
        object.__setattr__(self, "vectors", v)

    def __len__(self):
        return self.vectors.shape[0]

    def truncated(self, n: int) -> "Prefix":
        return Prefix(self.vectors[:n])


def load_prefix(path) -> Prefix:
    with open(path, encoding="utf-8") as fh:
        return Prefix(np.asarray(json.load(fh)["vectors"], dtype=float))


def save_prefix(path, prefix: Prefix) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"vectors": prefix.vectors.tolist()}, fh)
        fh.write("\n")


def cosine_matrix(p: Prefix, q: Prefix) -> np.ndarray:
    a = p.vectors / np.linalg.norm(p.vectors, axis=1, keepdims=True)
    b = q.vectors / np.linalg.norm(q.vectors, axis=1, keepdims=True)
    return a @ b.T


def _check_lengths(p: Prefix, q: Prefix):
    if len(p) != len(q):
        raise ValueError(f"prefix lengths differ ({len(p)} vs {len(q)}); truncate first")
    if p.vectors.shape[1] != q.vectors.shape[1]:
        raise ValueError("prefix dimensions differ")


def prefix_similarity_exact(p: Prefix, q: Prefix):
    """Max over permutations of the mean cosine, via optimal assignment."""
    _check_lengths(p, q)
    cos = cosine_matrix(p, q)
    rows, cols = linear_sum_assignment(-cos)
    perm = tuple(int(c) for c in cols[np.argsort(rows)])
    return float(cos[rows, cols].mean()), perm


def prefix_similarity_sinkhorn(p: Prefix, q: Prefix,
                               temperature: float = DEFAULT_TEMPERATURE,
                               iters: int = DEFAULT_ITERS):
    """Sinkhorn scaling of exp(cos/T) followed by a greedy hard matching."""
    _check_lengths(p, q)
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    if iters < 1:
        raise ValueError("need at least one Sinkhorn iteration")
    cos = cosine_matrix(p, q)
    # per-row max subtraction is a row scaling, which Sinkhorn is invariant to
    k = np.exp((cos - cos.max(axis=1, keepdims=True)) / temperature)
    tiny = np.finfo(float).tiny
    for _ in range(iters):
        k /= np.maximum(k.sum(axis=1, keepdims=True), tiny)
        k /= np.maximum(k.sum(axis=0, keepdims=True), tiny)
    n = len(p)
    perm = [-1] * n
    used = set()
    # assign the most confident rows first
    for i in sorted(range(n), key=lambda i: -k[i].max()):
        order = np.argsort(-k[i])
        j = next(int(j) for j in order if int(j) not in used)
        used.add(j)
        perm[i] = j
    score = float(np.mean([cos[i, perm[i]] for i in range(n)]))
    return score, tuple(perm)


@dataclass(frozen=True)
class DiscriminationReport:
    gold_score: float
    best_distractor_score: float
    distractor_scores: tuple

    @property
    def gold_wins(self) -> bool:
        return self.gold_score >= self.best_distractor_score


def _embedded_prefix(enc, embed, target_len: int) -> Prefix:
    from .encoding import pad_encoding, truncate_encoding

    enc = pad_encoding(truncate_encoding(enc, target_len), target_len)
    return Prefix(np.stack([np.asarray(embed(row), dtype=float) for row in enc.rows]))


def distractor_discrimination(learned: Prefix, gold_enc, distractors, embed,
                              method: str = "exact", **kwargs) -> DiscriminationReport:
    """Similarity of a learned prefix to the gold encoding vs. distractors."""
    sim = {"exact": prefix_similarity_exact,
           "sinkhorn": prefix_similarity_sinkhorn}[method]
    n = len(learned)
    gold_score, _ = sim(learned, _embedded_prefix(gold_enc, embed, n), **kwargs)
    scores = tuple(sim(learned, _embedded_prefix(d, embed, n), **kwargs)[0]
                   for d in distractors)
    return DiscriminationReport(gold_score, max(scores, default=float("-inf")), scores)


def row_embedding(dim: int = 32, seed: int = 0):
    """Deterministic random-feature embedding for integer rows.

    Stands in for a trainer's learned embedding when analysing encodings
    on their own (e.g. from the command line).
    """
    def embed(row):
        h = abs(hash(tuple(row))) % (2**32)
        return np.random.default_rng(np.random.SeedSequence(entropy=seed,
                                                            spawn_key=(h,))).normal(size=dim)
    return embed
