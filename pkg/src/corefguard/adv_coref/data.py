"""Toy coreference documents and their line-oriented file format.

A file holds blank-line separated blocks::

    # optional comment
    tokens John met Mary . He smiled .
    cluster 0-0 4-4
    cluster 2-2

``tokens`` lists whitespace-separated words; every ``cluster`` line lists
inclusive ``start-end`` token spans of one entity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..conll_io import Document

__all__ = ["ToyDocument", "parse_toy", "format_toy", "make_toy_dataset", "from_conll"]


@dataclass
class ToyDocument:
    tokens: list[str]
    clusters: list[list[tuple[int, int]]] = field(default_factory=list)

    def __post_init__(self):
        n = len(self.tokens)
        seen = set()
        for cluster in self.clusters:
            for s, e in cluster:
                if not 0 <= s <= e < n:
                    raise ValueError(f"span {s}-{e} outside a {n}-token document")
                if (s, e) in seen:
                    raise ValueError(f"span {s}-{e} in two clusters")
                seen.add((s, e))


def parse_toy(stream: str) -> list[ToyDocument]:
    docs, tokens, clusters = [], None, []

    def flush():
        nonlocal tokens, clusters
        if tokens is not None:
            docs.append(ToyDocument(tokens, clusters))
        elif clusters:
            raise ValueError("cluster lines before a tokens line")
        tokens, clusters = None, []

    for lineno, raw in enumerate(stream.splitlines(), 1):
        line = raw.strip()
        if not line:
            flush()
            continue
        if line.startswith("#"):
            continue
        keyword, _, rest = line.partition(" ")
        if keyword == "tokens":
            if tokens is not None:
                raise ValueError(f"line {lineno}: second tokens line in one block")
            tokens = rest.split()
        elif keyword == "cluster":
            spans = []
            for item in rest.split():
                s, sep, e = item.partition("-")
                if not sep or not s.isdigit() or not e.isdigit():
                    raise ValueError(f"line {lineno}: bad span {item!r}")
                spans.append((int(s), int(e)))
            clusters.append(spans)
        else:
            raise ValueError(f"line {lineno}: unknown keyword {keyword!r}")
    flush()
    return docs


def format_toy(docs) -> str:
    blocks = []
    for d in docs:
        lines = ["tokens " + " ".join(d.tokens)]
        lines += ["cluster " + " ".join(f"{s}-{e}" for s, e in c) for c in d.clusters]
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def from_conll(doc: Document) -> ToyDocument:
    return ToyDocument(doc.surfaces, [[(m.start, m.end) for m in c.mentions] for c in doc.clusters])


_MALE = ["John", "Paul", "Mark", "Tom", "Peter", "David"]
_FEMALE = ["Mary", "Anna", "Kate", "Lucy", "Sarah", "Emma"]
_VERBS = ["met", "called", "saw", "thanked"]
_ENDINGS = ["smiled", "laughed", "left", "agreed"]


def make_toy_dataset(n_docs: int = 8, seed: int = 0) -> list[ToyDocument]:
    """Two-sentence documents where a pronoun picks one of two names by gender."""
    rng = np.random.default_rng(seed)
    docs = []
    for _ in range(n_docs):
        male = str(rng.choice(_MALE))
        female = str(rng.choice(_FEMALE))
        verb = str(rng.choice(_VERBS))
        ending = str(rng.choice(_ENDINGS))
        male_first = bool(rng.integers(2))
        refer_male = bool(rng.integers(2))
        first, second = (male, female) if male_first else (female, male)
        pronoun = "he" if refer_male else "she"
        tokens = [first, verb, second, ".", pronoun, ending, "."]
        target = 0 if (refer_male == male_first) else 2
        other = 2 - target
        docs.append(ToyDocument(tokens, [[(target, target), (4, 4)], [(other, other)]]))
    return docs
