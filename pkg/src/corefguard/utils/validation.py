"""Input checks shared by the estimators and scorers."""

from __future__ import annotations

import numbers
from typing import Hashable, Iterable

import numpy as np

from ..conll_io import Document

_UINT64_MAX = 2**64 - 1


def check_documents(X) -> list[Document]:
    """Accept a single Document or an iterable of them; return a list."""
    if isinstance(X, Document):
        return [X]
    docs = list(X)
    for d in docs:
        if not isinstance(d, Document):
            raise TypeError(f"expected Document, got {type(d).__name__}")
    return docs


def check_seed(seed) -> int:
    if isinstance(seed, (bool, np.bool_)) or not isinstance(seed, numbers.Integral):
        raise TypeError(f"seed must be an integer, got {seed!r}")
    seed = int(seed)
    if not 0 <= seed <= _UINT64_MAX:
        raise ValueError(f"seed must fit in 64 unsigned bits, got {seed}")
    return seed


def check_clustering(clusters: Iterable[Iterable[Hashable]], name: str = "clustering") -> tuple[frozenset, ...]:
    """Validate a clustering and return it as a tuple of frozensets.

    Clusters must be non-empty and pairwise disjoint, and no cluster may list
    a mention twice.
    """
    out, seen = [], set()
    for cluster in clusters:
        members = list(cluster)
        fs = frozenset(members)
        if not fs:
            raise ValueError(f"{name}: empty cluster")
        if len(fs) != len(members):
            raise ValueError(f"{name}: cluster repeats a mention")
        if seen & fs:
            raise ValueError(f"{name}: clusters overlap on {sorted(map(str, seen & fs))[:3]}")
        seen |= fs
        out.append(fs)
    return tuple(out)


def check_interval(value, name: str, low: float, high: float | None = None) -> float:
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise TypeError(f"{name} must be a real number")
    value = float(value)
    if not np.isfinite(value) or value < low or (high is not None and value > high):
        bound = f"[{low}, {high}]" if high is not None else f">= {low}"
        raise ValueError(f"{name} must be {bound}, got {value}")
    return value
