"""GAP pronoun-resolution scoring.

Every example contributes two binary instances, (pronoun, A) and
(pronoun, B). F1 of the positive class is reported over all instances and
separately for masculine and feminine pronouns, with the bias ratio
``F1_female / F1_male``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Sequence

from .exceptions import BadHeader, GapFormatError, OffsetMismatch

__all__ = [
    "GAP_HEADER",
    "GapExample",
    "GapPRF",
    "GapReport",
    "parse_gap",
    "parse_predictions",
    "clusters_to_gap_labels",
    "gap_counts",
    "gap_report",
    "bias_ratio",
    "pronoun_gender",
]

GAP_HEADER = (
    "ID", "Text", "Pronoun", "Pronoun-offset", "A", "A-offset", "A-coref",
    "B", "B-offset", "B-coref", "URL",
)

_MALE = {"he", "him", "his"}
_FEMALE = {"she", "her", "hers"}


def pronoun_gender(pronoun: str) -> str:
    p = pronoun.casefold()
    if p in _MALE:
        return "male"
    if p in _FEMALE:
        return "female"
    raise GapFormatError(f"pronoun {pronoun!r} has no grammatical gender")


@dataclass(frozen=True)
class GapExample:
    id: str
    text: str
    pronoun: str
    pronoun_offset: int
    name_a: str
    a_offset: int
    name_b: str
    b_offset: int
    label_a: bool
    label_b: bool

    def __post_init__(self):
        for surface, offset, what in (
            (self.pronoun, self.pronoun_offset, "Pronoun"),
            (self.name_a, self.a_offset, "A"),
            (self.name_b, self.b_offset, "B"),
        ):
            if offset < 0 or self.text[offset : offset + len(surface)] != surface:
                raise OffsetMismatch(f"{self.id}: {what}-offset {offset} does not point at {surface!r}")

    @property
    def pronoun_gender(self) -> str:
        return pronoun_gender(self.pronoun)

    @property
    def pronoun_span(self) -> tuple[int, int]:
        return self.pronoun_offset, self.pronoun_offset + len(self.pronoun)

    @property
    def a_span(self) -> tuple[int, int]:
        return self.a_offset, self.a_offset + len(self.name_a)

    @property
    def b_span(self) -> tuple[int, int]:
        return self.b_offset, self.b_offset + len(self.name_b)


def _bool(value: str, where: str) -> bool:
    v = value.strip().upper()
    if v == "TRUE":
        return True
    if v == "FALSE":
        return False
    raise GapFormatError(f"{where}: expected TRUE or FALSE, got {value!r}")


def _int(value: str, where: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise GapFormatError(f"{where}: offset {value!r} is not an integer") from None


def _rows(stream: str):
    return csv.reader(io.StringIO(stream), delimiter="\t", quoting=csv.QUOTE_NONE)


def parse_gap(stream: str) -> list[GapExample]:
    """Parse a GAP TSV including its header row.

    Raises
    ------
    BadHeader
        The first row is not the GAP column header.
    OffsetMismatch
        An offset does not point at the stated surface.
    """
    rows = _rows(stream)
    header = next(rows, None)
    if header is None or tuple(h.strip() for h in header) != GAP_HEADER:
        raise BadHeader(f"expected header {GAP_HEADER}, got {header}")
    out = []
    for lineno, row in enumerate(rows, 2):
        if not row or not any(f.strip() for f in row):
            continue
        if len(row) != len(GAP_HEADER):
            raise GapFormatError(f"line {lineno}: {len(row)} fields, expected {len(GAP_HEADER)}")
        where = f"line {lineno}"
        out.append(
            GapExample(
                id=row[0],
                text=row[1],
                pronoun=row[2],
                pronoun_offset=_int(row[3], where),
                name_a=row[4],
                a_offset=_int(row[5], where),
                label_a=_bool(row[6], where),
                name_b=row[7],
                b_offset=_int(row[8], where),
                label_b=_bool(row[9], where),
            )
        )
    return out


def parse_predictions(stream: str) -> dict[str, tuple[bool, bool]]:
    """Read ``ID<TAB>A-pred<TAB>B-pred`` rows; a leading ``ID`` header is skipped."""
    out = {}
    for lineno, row in enumerate(_rows(stream), 1):
        if not row or not any(f.strip() for f in row):
            continue
        if lineno == 1 and row[0].strip() == "ID":
            continue
        if len(row) != 3:
            raise GapFormatError(f"predictions line {lineno}: expected 3 fields")
        where = f"predictions line {lineno}"
        out[row[0]] = (_bool(row[1], where), _bool(row[2], where))
    return out


def _overlaps(a: tuple[int, int], b: tuple[int, int]) -> bool:
    return a[0] < b[1] and b[0] < a[1]


def clusters_to_gap_labels(clusters: Iterable[Iterable[tuple[int, int]]], ex: GapExample) -> tuple[bool, bool]:
    """Binary GAP predictions from clusters over half-open character spans.

    A name is predicted coreferent with the pronoun when a single cluster
    has one span overlapping the pronoun and one overlapping the name.
    """
    pred_a = pred_b = False
    for cluster in clusters:
        spans = list(cluster)
        if not any(_overlaps(s, ex.pronoun_span) for s in spans):
            continue
        pred_a |= any(_overlaps(s, ex.a_span) for s in spans)
        pred_b |= any(_overlaps(s, ex.b_span) for s in spans)
    return pred_a, pred_b


@dataclass(frozen=True)
class GapPRF:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def precision(self) -> float | None:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else None

    @property
    def recall(self) -> float | None:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else None

    @property
    def f1(self) -> float | None:
        p, r = self.precision, self.recall
        if p is None or r is None or p + r == 0:
            return None
        return 2 * p * r / (p + r)

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def __add__(self, other: "GapPRF") -> "GapPRF":
        return GapPRF(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn)


def bias_ratio(f1_female: float | None, f1_male: float | None) -> float | None:
    """``F1_female / F1_male``; ``None`` when either is undefined or male F1 is 0."""
    if f1_female is None or f1_male is None or f1_male == 0:
        return None
    return f1_female / f1_male


@dataclass(frozen=True)
class GapReport:
    male: GapPRF
    female: GapPRF
    overall: GapPRF

    @property
    def bias(self) -> float | None:
        return bias_ratio(self.female.f1, self.male.f1)

    def format(self, digits: int = 1) -> str:
        def pct(v):
            return "undefined" if v is None else f"{100 * v:.{digits}f}"

        lines = []
        for name, s in (("male", self.male), ("female", self.female), ("overall", self.overall)):
            lines += [f"{name}_p={pct(s.precision)}", f"{name}_r={pct(s.recall)}", f"{name}_f1={pct(s.f1)}"]
        lines.append("bias=" + ("undefined" if self.bias is None else f"{self.bias:.2f}"))
        return "\n".join(lines) + "\n"


def gap_counts(examples: Sequence[GapExample], predictions: Sequence[tuple[bool, bool]]) -> dict[str, GapPRF]:
    if len(examples) != len(predictions):
        raise ValueError(f"{len(examples)} examples but {len(predictions)} predictions")
    cells = {g: [0, 0, 0, 0] for g in ("male", "female")}
    for ex, (pa, pb) in zip(examples, predictions):
        c = cells[ex.pronoun_gender]
        for gold, pred in ((ex.label_a, pa), (ex.label_b, pb)):
            c[0 if gold and pred else 1 if pred else 2 if gold else 3] += 1
    return {g: GapPRF(*v) for g, v in cells.items()}


def gap_report(examples: Sequence[GapExample], predictions: Sequence[tuple[bool, bool]]) -> GapReport:
    """Gendered and overall P/R/F1; undefined ratios are ``None``."""
    counts = gap_counts(examples, predictions)
    return GapReport(counts["male"], counts["female"], counts["male"] + counts["female"])
