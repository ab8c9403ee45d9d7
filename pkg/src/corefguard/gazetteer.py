"""Name resources for replacement and a seeded without-replacement sampler.

Three resources are supported:

``census``
    1990 U.S. Census surname file, ``NAME freq cumfreq rank`` per line with
    upper-case names. Loaded title-cased into the last-name list.
``first_names``
    ``name<TAB>male_proportion``. Proportion >= 0.5 puts a name in the male
    list, <= 0.5 in the female list; a name at exactly 0.5 is in both.
``geonames``
    The tab-separated GeoNames dump. Column 2 is the name and column 8 the
    feature code, which serves as the place category. Country codes
    (``PCL*``) are never offered as replacements.

Draws use numpy's PCG64 generator seeded with ``rng_seed``; within one
:class:`SamplerState` no name is handed out twice.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Literal

import numpy as np

from .exceptions import EmptyResource, MalformedLine, PoolExhausted

__all__ = [
    "NameList",
    "GeoNameIndex",
    "GazetteerSet",
    "SamplerState",
    "load_resource",
    "load_last_names",
    "load_first_names",
    "load_geonames",
    "filter_training_names",
    "draw_replacement",
    "normalize_names",
]

ListKind = Literal["last_names", "male_first", "female_first"]

COUNTRY_CODE_PREFIX = "PCL"


def _norm(name: str) -> str:
    return name.casefold()


def normalize_names(names: Iterable[str]) -> frozenset[str]:
    """Case-folded names plus each of their whitespace-separated tokens."""
    out = set()
    for name in names:
        name = name.strip()
        if not name:
            continue
        out.add(_norm(name))
        out.update(_norm(tok) for tok in name.split())
    return frozenset(out)


def _unique(names: Iterable[str]) -> tuple[str, ...]:
    seen, out = set(), []
    for n in names:
        key = _norm(n)
        if key not in seen:
            seen.add(key)
            out.append(n)
    return tuple(out)


@dataclass(frozen=True)
class NameList:
    kind: ListKind
    names: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "names", _unique(self.names))

    def __len__(self):
        return len(self.names)

    def __contains__(self, name: str) -> bool:
        return _norm(name) in self._lookup

    @property
    def _lookup(self) -> frozenset[str]:
        cached = self.__dict__.get("_lookup_cache")
        if cached is None:
            cached = frozenset(_norm(n) for n in self.names)
            object.__setattr__(self, "_lookup_cache", cached)
        return cached


@dataclass(frozen=True)
class GeoNameIndex:
    """Place names grouped by GeoNames feature code.

    ``categories`` maps a case-folded name to the feature code it was first
    seen with; ``countries`` holds names that carry any ``PCL*`` code.
    """

    entries: dict[str, tuple[str, ...]]
    categories: dict[str, str] = field(default_factory=dict)
    countries: frozenset[str] = frozenset()

    def __post_init__(self):
        entries = {
            code: _unique(names)
            for code, names in self.entries.items()
            if not code.startswith(COUNTRY_CODE_PREFIX)
        }
        object.__setattr__(self, "entries", entries)
        if not self.categories:
            cats = {}
            for code, names in entries.items():
                for n in names:
                    cats.setdefault(_norm(n), code)
            object.__setattr__(self, "categories", cats)

    def __len__(self):
        return sum(len(v) for v in self.entries.values())

    def category_of(self, name: str) -> str | None:
        """Feature code of a known, non-country place name, else ``None``."""
        key = _norm(name)
        if key in self.countries:
            return None
        return self.categories.get(key)


@dataclass(frozen=True)
class GazetteerSet:
    last_names: NameList
    male_first: NameList
    female_first: NameList
    geonames: GeoNameIndex | None = None

    def without(self, train_names: Iterable[str]) -> "GazetteerSet":
        excluded = normalize_names(train_names)
        return GazetteerSet(
            filter_training_names(self.last_names, excluded),
            filter_training_names(self.male_first, excluded),
            filter_training_names(self.female_first, excluded),
            None if self.geonames is None else filter_training_names(self.geonames, excluded),
        )


# ---------------------------------------------------------------- loading


def _lines(stream: str) -> Iterable[tuple[int, str]]:
    for lineno, line in enumerate(stream.splitlines(), 1):
        if line.strip() and not line.startswith("#"):
            yield lineno, line


def load_last_names(stream: str) -> NameList:
    names = []
    for lineno, line in _lines(stream):
        fields = line.split()
        if len(fields) != 4:
            raise MalformedLine(f"census line {lineno}: expected 4 fields, got {len(fields)}")
        try:
            [float(f) for f in fields[1:]]
        except ValueError:
            raise MalformedLine(f"census line {lineno}: non-numeric statistics") from None
        names.append(fields[0].title())
    if not names:
        raise EmptyResource("census file holds no names")
    return NameList("last_names", tuple(names))


def load_first_names(stream: str) -> tuple[NameList, NameList]:
    male, female = [], []
    for lineno, line in _lines(stream):
        fields = line.rstrip("\n").split("\t")
        if len(fields) != 2:
            raise MalformedLine(f"first-name line {lineno}: expected 2 tab-separated fields")
        name, prop = fields[0].strip(), fields[1].strip()
        try:
            p = float(prop)
        except ValueError:
            raise MalformedLine(f"first-name line {lineno}: proportion {prop!r} is not a number") from None
        if not name or not 0.0 <= p <= 1.0:
            raise MalformedLine(f"first-name line {lineno}: bad entry {line!r}")
        if p >= 0.5:
            male.append(name)
        if p <= 0.5:
            female.append(name)
    if not male and not female:
        raise EmptyResource("first-name gazetteer holds no names")
    return NameList("male_first", tuple(male)), NameList("female_first", tuple(female))


def load_geonames(stream: str) -> GeoNameIndex:
    entries: dict[str, list[str]] = defaultdict(list)
    categories: dict[str, str] = {}
    countries = set()
    for lineno, line in _lines(stream):
        fields = line.split("\t")
        if len(fields) < 8:
            raise MalformedLine(f"geonames line {lineno}: expected at least 8 fields")
        name, code = fields[1].strip(), fields[7].strip()
        if not name or not code:
            continue
        if code.startswith(COUNTRY_CODE_PREFIX):
            countries.add(_norm(name))
            continue
        entries[code].append(name)
        categories.setdefault(_norm(name), code)
    if not entries and not countries:
        raise EmptyResource("geonames dump holds no rows")
    return GeoNameIndex(dict(entries), categories, frozenset(countries))


def load_resource(kind: str, stream: str):
    """Load ``last_names``, ``male_first``, ``female_first`` or ``geonames``."""
    if kind in ("last_names", "census"):
        return load_last_names(stream)
    if kind == "male_first":
        return load_first_names(stream)[0]
    if kind == "female_first":
        return load_first_names(stream)[1]
    if kind == "geonames":
        return load_geonames(stream)
    raise ValueError(f"unknown resource kind {kind!r}")


def filter_training_names(resource, train_names: Iterable[str]):
    """Drop every member that appears (case-insensitively) in ``train_names``.

    For a :class:`GeoNameIndex` the exclusion is applied to every category.
    """
    excluded = frozenset(_norm(n) for n in train_names)
    if isinstance(resource, NameList):
        return NameList(resource.kind, tuple(n for n in resource.names if _norm(n) not in excluded))
    if isinstance(resource, GeoNameIndex):
        entries = {
            code: tuple(n for n in names if _norm(n) not in excluded)
            for code, names in resource.entries.items()
        }
        return GeoNameIndex(entries, dict(resource.categories), resource.countries)
    raise TypeError(f"cannot filter {type(resource).__name__}")


# ---------------------------------------------------------------- sampling


# pools that share one consumed set; the male and female first-name lists
# overlap at proportion 0.5
_CONSUMED_GROUP = {"last_names": "last", "male_first": "first", "female_first": "first"}


class SamplerState:
    """Seeded draw state. Single owner: draws mutate it."""

    def __init__(self, rng_seed: int):
        self.rng_seed = int(rng_seed)
        self._rng = np.random.Generator(np.random.PCG64(self.rng_seed))
        self.consumed: dict[str, set[str]] = defaultdict(set)
        self._remaining: dict[tuple, tuple[object, list[str]]] = {}

    def draw(self, pool, pool_key: tuple, names: tuple[str, ...], group: str) -> str:
        owner, remaining = self._remaining.get(pool_key, (None, None))
        if owner is not pool:
            remaining = list(names)
            self._remaining[pool_key] = (pool, remaining)
        consumed = self.consumed[group]
        while remaining:
            i = int(self._rng.integers(len(remaining)))
            remaining[i], remaining[-1] = remaining[-1], remaining[i]
            name = remaining.pop()
            if _norm(name) not in consumed:
                consumed.add(_norm(name))
                return name
        raise PoolExhausted(f"no unused name left in pool {pool_key}")


def draw_replacement(
    state: SamplerState,
    pool: NameList | GeoNameIndex,
    category: str | None = None,
    n_tokens: int | None = None,
) -> str:
    """Uniformly draw an unconsumed name and mark it consumed.

    ``category`` is required for a :class:`GeoNameIndex`. ``n_tokens``
    restricts the pool to names with that many whitespace-separated tokens.

    Raises
    ------
    PoolExhausted
        Every eligible name was drawn before.
    """
    if isinstance(pool, NameList):
        names, key, group = pool.names, (pool.kind,), _CONSUMED_GROUP[pool.kind]
    elif isinstance(pool, GeoNameIndex):
        if category is None:
            raise ValueError("a GeoNames draw needs a category")
        names, key, group = pool.entries.get(category, ()), ("geo", category), "geo"
    else:
        raise TypeError(f"cannot draw from {type(pool).__name__}")
    if n_tokens is not None:
        names = tuple(n for n in names if len(n.split()) == n_tokens)
        key = (*key, n_tokens)
    return state.draw(pool, key, names, group)
