"""Exact McNemar test and stratified approximate randomization."""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Callable, Sequence

import numpy as np

from .exceptions import StrataMismatch

__all__ = [
    "PairedBinaryOutcomes",
    "StratifiedScores",
    "mcnemar_exact",
    "stratified_randomization_test",
    "parse_stats_file",
    "f1_from_counts",
]


@dataclass(frozen=True)
class PairedBinaryOutcomes:
    """Discordant pair counts: ``b`` system 1 right and 2 wrong, ``c`` the reverse."""

    b: int
    c: int

    def __post_init__(self):
        if self.b < 0 or self.c < 0:
            raise ValueError("discordant counts must be non-negative")

    @classmethod
    def from_correctness(cls, correct_1: Sequence[bool], correct_2: Sequence[bool]) -> "PairedBinaryOutcomes":
        if len(correct_1) != len(correct_2):
            raise ValueError("both systems must be judged on the same instances")
        b = sum(1 for x, y in zip(correct_1, correct_2) if x and not y)
        c = sum(1 for x, y in zip(correct_1, correct_2) if y and not x)
        return cls(b, c)


def mcnemar_exact(o: PairedBinaryOutcomes) -> float:
    """Two-sided exact binomial p-value ``min(1, 2 P[X <= min(b, c)])``, X ~ Bin(b+c, 1/2)."""
    n = o.b + o.c
    if n == 0:
        return 1.0
    k = min(o.b, o.c)
    tail = sum(comb(n, i) for i in range(k + 1))
    return min(1.0, 2 * tail / 2**n)


@dataclass
class StratifiedScores:
    """Per-stratum sufficient statistics of two systems.

    ``a`` and ``b`` have shape ``(n_strata, n_stats)``; ``metric`` maps a
    pooled statistics vector to a score.
    """

    a: np.ndarray
    b: np.ndarray
    metric: Callable[[np.ndarray], float]
    strata: Sequence[str] | None = None

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        if self.a.ndim != 2 or self.a.shape != self.b.shape:
            raise StrataMismatch(f"statistics shapes differ: {self.a.shape} vs {self.b.shape}")


def stratified_randomization_test(s: StratifiedScores, rounds: int = 9999, seed: int = 0) -> float:
    """Approximate randomization p-value with document strata.

    Each round swaps the two systems' statistics in every stratum
    independently with probability 1/2 and recomputes the absolute metric
    difference from the pooled statistics. Ties with the observed difference
    count as at least as extreme, and ``p = (hits + 1) / (rounds + 1)``.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    a, b = s.a, s.b
    observed = abs(s.metric(a.sum(axis=0)) - s.metric(b.sum(axis=0)))
    rng = np.random.Generator(np.random.PCG64(seed))
    diff = b - a
    total_a, total_b = a.sum(axis=0), b.sum(axis=0)
    hits = 0
    for _ in range(rounds):
        flip = rng.random(a.shape[0]) < 0.5
        delta = diff[flip].sum(axis=0)
        d = abs(s.metric(total_a + delta) - s.metric(total_b - delta))
        # tolerance absorbs float error of the incremental pooling
        if d >= observed - 1e-12:
            hits += 1
    return (hits + 1) / (rounds + 1)


def f1_from_counts(v: np.ndarray) -> float:
    """F1 from a pooled ``(tp, fp, fn)`` vector."""
    tp, fp, fn = v[:3]
    denom = 2 * tp + fp + fn
    return float(2 * tp / denom) if denom else 0.0


def parse_stats_file(stream: str, keys: Sequence[str] | None = None) -> tuple[list[str], np.ndarray]:
    """Read ``doc=<id> key=value ...`` rows into stratum ids and a matrix.

    Without ``keys`` the columns follow the first row's key order.
    """
    ids, rows = [], []
    for lineno, line in enumerate(stream.splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        fields = {}
        for item in line.split():
            k, sep, v = item.partition("=")
            if not sep:
                raise ValueError(f"stats line {lineno}: {item!r} is not key=value")
            fields[k] = v
        doc = fields.pop("doc", str(len(ids)))
        if keys is None:
            keys = tuple(fields)
        missing = [k for k in keys if k not in fields]
        if missing:
            raise ValueError(f"stats line {lineno}: missing {missing}")
        try:
            rows.append([float(fields[k]) for k in keys])
        except ValueError:
            raise ValueError(f"stats line {lineno}: non-numeric value") from None
        ids.append(doc)
    return ids, np.array(rows, dtype=float).reshape(len(rows), len(keys or ()))


def align_strata(ids_a, stats_a, ids_b, stats_b):
    """Reorder ``b`` to ``a``'s strata; raise StrataMismatch if they differ."""
    if sorted(ids_a) != sorted(ids_b) or len(set(ids_a)) != len(ids_a):
        raise StrataMismatch("the two systems do not cover identical strata")
    pos = {k: i for i, k in enumerate(ids_b)}
    return stats_a, stats_b[[pos[k] for k in ids_a]]
