"""MUC, B-cubed and CEAF-e scores, the CoNLL F1 average, and name leakage.

Each metric is computed as four sufficient statistics (precision numerator
and denominator, recall numerator and denominator) so that corpus scores and
the stratified significance test can pool documents by summing counts, which
is how the reference CoNLL scorer aggregates.

Conventions:

* MUC counts links; mentions missing from the other side are singleton
  partitions, and singleton clusters contribute nothing.
* B-cubed averages per-mention overlap over the mentions of each side; a
  mention absent from the other side contributes zero.
* CEAF-e aligns clusters one-to-one maximizing ``2|K∩R| / (|K|+|R|)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping, NamedTuple, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .conll_io import Document
from .exceptions import EmptyGold, EmptyTestHeads
from .no_leakage import mention_heads
from .utils.validation import check_clustering

__all__ = [
    "PRF",
    "Counts",
    "METRICS",
    "metric_counts",
    "pair_metric",
    "conll_f1",
    "conll_f1_from_counts",
    "document_clustering",
    "CorpusScore",
    "score_corpus",
    "format_report",
    "counts_row",
    "STAT_KEYS",
    "conll_f1_from_vector",
    "head_names",
    "leakage_rate",
]

METRICS = ("muc", "b_cubed", "ceaf_e")


class PRF(NamedTuple):
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_pr(cls, p: float, r: float) -> "PRF":
        return cls(p, r, 2 * p * r / (p + r) if p + r > 0 else 0.0)


@dataclass(frozen=True)
class Counts:
    p_num: float = 0.0
    p_den: float = 0.0
    r_num: float = 0.0
    r_den: float = 0.0

    def __add__(self, other: "Counts") -> "Counts":
        return Counts(
            self.p_num + other.p_num,
            self.p_den + other.p_den,
            self.r_num + other.r_num,
            self.r_den + other.r_den,
        )

    def prf(self) -> PRF:
        p = self.p_num / self.p_den if self.p_den else 0.0
        r = self.r_num / self.r_den if self.r_den else 0.0
        return PRF.from_pr(p, r)


def _index(clusters: Sequence[frozenset]) -> dict[Hashable, int]:
    return {m: i for i, c in enumerate(clusters) for m in c}


def _muc_side(key: Sequence[frozenset], response: Sequence[frozenset]) -> tuple[int, int]:
    owner = _index(response)
    num = den = 0
    for k in key:
        parts = {owner[m] for m in k if m in owner}
        parts_count = len(parts) + sum(1 for m in k if m not in owner)
        num += len(k) - parts_count
        den += len(k) - 1
    return num, den


def _muc(gold, pred) -> Counts:
    r_num, r_den = _muc_side(gold, pred)
    p_num, p_den = _muc_side(pred, gold)
    return Counts(p_num, p_den, r_num, r_den)


def _b_cubed_side(key: Sequence[frozenset], response: Sequence[frozenset]) -> tuple[float, int]:
    owner = _index(response)
    num = 0.0
    for k in key:
        overlap: dict[int, int] = {}
        for m in k:
            if m in owner:
                overlap[owner[m]] = overlap.get(owner[m], 0) + 1
        num += sum(n * n for n in overlap.values()) / len(k)
    return num, sum(len(k) for k in key)


def _b_cubed(gold, pred) -> Counts:
    r_num, r_den = _b_cubed_side(gold, pred)
    p_num, p_den = _b_cubed_side(pred, gold)
    return Counts(p_num, p_den, r_num, r_den)


def phi4(k: frozenset, r: frozenset) -> float:
    return 2 * len(k & r) / (len(k) + len(r))


def _ceaf_e(gold, pred) -> Counts:
    if gold and pred:
        sim = np.array([[phi4(k, r) for r in pred] for k in gold])
        rows, cols = linear_sum_assignment(sim, maximize=True)
        total = float(sim[rows, cols].sum())
    else:
        total = 0.0
    return Counts(total, len(pred), total, len(gold))


_METRIC_FUNCS = {"muc": _muc, "b_cubed": _b_cubed, "ceaf_e": _ceaf_e}


def metric_counts(kind: str, gold, pred) -> Counts:
    """Sufficient statistics of one metric; empty clusterings are allowed."""
    try:
        func = _METRIC_FUNCS[kind]
    except KeyError:
        raise ValueError(f"unknown metric {kind!r}; choose from {METRICS}") from None
    return func(check_clustering(gold, "gold"), check_clustering(pred, "pred"))


def pair_metric(kind: str, gold, pred) -> PRF:
    """P/R/F1 of ``kind`` in {"muc", "b_cubed", "ceaf_e"}.

    Raises
    ------
    EmptyGold
        ``gold`` has no mention.
    """
    gold = check_clustering(gold, "gold")
    if not any(gold):
        raise EmptyGold("gold clustering has no mention; metric undefined")
    return metric_counts(kind, gold, pred).prf()


def conll_f1(gold, pred) -> float:
    """Unweighted mean of the MUC, B-cubed and CEAF-e F1 scores."""
    return float(np.mean([pair_metric(k, gold, pred).f1 for k in METRICS]))


def conll_f1_from_counts(counts: Mapping[str, Counts]) -> float:
    return float(np.mean([counts[k].prf().f1 for k in METRICS]))


# ---------------------------------------------------------------- corpora


def document_clustering(doc: Document) -> tuple[frozenset, ...]:
    return tuple(
        frozenset((m.start, m.end) for m in c.mentions) for c in doc.clusters if c.mentions
    )


@dataclass
class CorpusScore:
    per_document: dict[tuple[str, int], dict[str, Counts]]

    def pooled(self) -> dict[str, Counts]:
        total = {k: Counts() for k in METRICS}
        for counts in self.per_document.values():
            for k in METRICS:
                total[k] = total[k] + counts[k]
        return total

    def prf(self) -> dict[str, PRF]:
        pooled = self.pooled()
        if not pooled["b_cubed"].r_den:
            raise EmptyGold("gold corpus has no mention; metrics undefined")
        return {k: c.prf() for k, c in pooled.items()}

    def conll_f1(self) -> float:
        return float(np.mean([s.f1 for s in self.prf().values()]))


def score_corpus(gold_docs: Iterable[Document], pred_docs: Iterable[Document]) -> CorpusScore:
    """Per-document counts for every gold document.

    Documents pair up on ``(doc_key, part)``; a gold document without a
    prediction is scored against an empty clustering.
    """
    preds = {(d.doc_key, d.part): d for d in pred_docs}
    per_doc = {}
    for g in gold_docs:
        key = (g.doc_key, g.part)
        gold = document_clustering(g)
        pred = document_clustering(preds[key]) if key in preds else ()
        per_doc[key] = {k: metric_counts(k, gold, pred) for k in METRICS}
    return CorpusScore(per_doc)


def format_report(scores: Mapping[str, PRF], conll: float, digits: int = 2, style: str = "kv") -> str:
    """Render scores as ``key=value`` lines or as a small text table."""
    if style == "kv":
        lines = []
        for k in METRICS:
            s = scores[k]
            lines += [f"{k}_p={s.precision:.{digits}f}", f"{k}_r={s.recall:.{digits}f}", f"{k}_f1={s.f1:.{digits}f}"]
        lines.append(f"conll_f1={conll:.{digits}f}")
        return "\n".join(lines) + "\n"
    if style == "text":
        rows = [f"{'metric':<8} {'P':>8} {'R':>8} {'F1':>8}"]
        for k in METRICS:
            s = scores[k]
            rows.append(f"{k:<8} {s.precision:>8.{digits}f} {s.recall:>8.{digits}f} {s.f1:>8.{digits}f}")
        rows.append(f"CoNLL F1 = {conll:.{digits}f}")
        return "\n".join(rows) + "\n"
    raise ValueError(f"unknown report style {style!r}")


def counts_row(key: tuple[str, int], counts: Mapping[str, Counts]) -> str:
    """One ``key=value`` statistics row for a document, as read by ``sigtest``."""
    fields = [f"doc={key[0]}:{key[1]}"]
    for k in METRICS:
        c = counts[k]
        fields += [f"{k}_p_num={c.p_num!r}", f"{k}_p_den={c.p_den!r}", f"{k}_r_num={c.r_num!r}", f"{k}_r_den={c.r_den!r}"]
    return " ".join(fields)


STAT_KEYS = tuple(f"{k}_{f}" for k in METRICS for f in ("p_num", "p_den", "r_num", "r_den"))


def conll_f1_from_vector(v: Sequence[float]) -> float:
    """CoNLL F1 from a pooled vector ordered as :data:`STAT_KEYS`."""
    counts = {k: Counts(*v[4 * i : 4 * i + 4]) for i, k in enumerate(METRICS)}
    return conll_f1_from_counts(counts)


# ---------------------------------------------------------------- leakage


def head_names(docs: Iterable[Document]) -> set[str]:
    """Case-folded PER/GPE names that head some gold-cluster mention."""
    return {doc.text(ne.span).casefold() for doc in docs for _, _, ne in mention_heads(doc)}


def leakage_rate(train_docs: Iterable[Document], test_docs: Iterable[Document]) -> float:
    """Share of test head names that also head a mention in training.

    Raises
    ------
    EmptyTestHeads
        No PER/GPE-headed mention in the test corpus.
    """
    test = head_names(test_docs)
    if not test:
        raise EmptyTestHeads("test corpus has no PER/GPE-headed mention")
    return len(test & head_names(train_docs)) / len(test)
