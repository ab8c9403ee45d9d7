"""Rewrite PER and GPE names so no test-set name also occurs in training.

The pipeline per document:

1. :func:`identify_target_mentions` finds gold mentions whose head is a PER
   or GPE named entity. Heads come from a heuristic over the gold
   annotation (see :func:`mention_head`), not from a dependency parser.
2. :func:`build_replacement_plan` picks replacement names per cluster from
   gazetteers that were filtered of every training name, drawing without
   replacement from one :class:`~corefguard.gazetteer.SamplerState`.
3. :func:`apply_replacement_plan` rewrites token surfaces, copying the case of
   each original first letter. Token counts and all annotation stay put.

:class:`NoLeakagePerturber` wraps the three steps as a scikit-learn
transformer: ``fit`` collects the training names, ``transform`` perturbs a
test corpus.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .conll_io import Document, NamedEntitySpan, Span
from .exceptions import PlanDocumentMismatch, PoolExhausted
from .gazetteer import (
    GazetteerSet,
    GeoNameIndex,
    SamplerState,
    draw_replacement,
    normalize_names,
)
from .utils.validation import check_documents, check_seed

__all__ = [
    "TargetMention",
    "Gender",
    "ReplacementEntry",
    "ReplacementPlan",
    "mention_head",
    "mention_heads",
    "identify_target_mentions",
    "classify_cluster_gender",
    "build_replacement_plan",
    "apply_replacement_plan",
    "collect_training_names",
    "perturb_corpus",
    "match_case",
    "NoLeakagePerturber",
]

logger = logging.getLogger(__name__)

FEMALE_PRONOUNS = frozenset({"she", "her", "hers"})
MALE_PRONOUNS = frozenset({"he", "him", "his"})
TARGET_TYPES = ("PER", "GPE")

# tokens that end the head region of a mention: appositions, PP attachment,
# relative clauses ("Dirk Van Dongen , president of ...", "mayor of Chicago")
_HEAD_REGION_STOP = frozenset(
    {",", ";", ":", "(", "-LRB-", "--", "of", "in", "from", "at", "for", "with",
     "on", "to", "by", "who", "whom", "whose", "which", "that"}
)


@dataclass(frozen=True)
class TargetMention:
    cluster_id: int
    mention: Span
    head_token: int
    name_span: Span
    entity_type: str

    def __post_init__(self):
        if not (self.mention.covers(self.head_token) and self.name_span.covers(self.head_token)):
            raise ValueError("head token must lie inside both the mention and the name span")


class Gender(enum.Enum):
    MALE = "male"
    FEMALE = "female"


@dataclass(frozen=True)
class ReplacementEntry:
    span: Span
    original: tuple[str, ...]
    replacement: tuple[str, ...]
    entity_type: str

    def __post_init__(self):
        if len(self.original) != len(self.replacement) or len(self.original) != len(self.span):
            raise ValueError("a replacement must keep the token count of the span it rewrites")


@dataclass
class ReplacementPlan:
    doc_key: str
    part: int
    per_cluster: dict[int, list[ReplacementEntry]] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def entries(self) -> list[ReplacementEntry]:
        return [e for cid in sorted(self.per_cluster) for e in self.per_cluster[cid]]

    def replaced_tokens(self) -> list[str]:
        """Every token written by the plan that differs from the original."""
        return [
            new
            for e in self.entries()
            for old, new in zip(e.original, e.replacement)
            if old != new
        ]


# ---------------------------------------------------------------- heads


def _head_region(doc: Document, mention: Span) -> Span:
    end = mention.end
    for i in range(mention.start + 1, mention.end + 1):
        if doc.tokens[i].surface in _HEAD_REGION_STOP:
            end = i - 1
            break
    return Span(mention.start, end)


def mention_head(doc: Document, mention: Span) -> NamedEntitySpan | None:
    """Rightmost maximal NE span in the mention's head region, if any.

    The head region is the mention cut before its first comma, preposition
    or relative pronoun, so an apposition or a PP cannot supply the head.
    The head token is the last token of the returned span.
    """
    region = _head_region(doc, mention)
    inside = [ne for ne in doc.ne_spans if region.contains(ne.span)]
    maximal = [
        ne for ne in inside
        if not any(o is not ne and o.span != ne.span and o.span.contains(ne.span) for o in inside)
    ]
    if not maximal:
        return None
    return max(maximal, key=lambda ne: (ne.span.end, -ne.span.start))


def mention_heads(doc: Document) -> list[tuple[int, Span, NamedEntitySpan]]:
    """``(cluster_id, mention, head NE)`` for mentions headed by a PER/GPE entity."""
    out = []
    for cluster in sorted(doc.clusters, key=lambda c: c.id):
        for m in sorted(cluster.mentions):
            ne = mention_head(doc, m)
            if ne is not None and ne.ne_type in TARGET_TYPES:
                out.append((cluster.id, m, ne))
    return out


def identify_target_mentions(doc: Document, geonames: GeoNameIndex | None = None) -> list[TargetMention]:
    """Mentions eligible for rewriting.

    PER-headed mentions always qualify. GPE-headed mentions qualify only when
    the name is in ``geonames`` and is not a country; without an index no GPE
    mention is a target.
    """
    targets = []
    for cid, m, ne in mention_heads(doc):
        if ne.ne_type == "GPE":
            if geonames is None or geonames.category_of(doc.text(ne.span)) is None:
                continue
        targets.append(TargetMention(cid, m, ne.span.end, ne.span, ne.ne_type))
    return targets


# ---------------------------------------------------------------- gender


def _longest_name(doc: Document, targets: Sequence[TargetMention]) -> tuple[str, ...]:
    names = [doc.words(t.name_span) for t in targets]
    return max(names, key=len)


def _cluster_pronouns(doc: Document, cluster_id: int) -> set[str]:
    return {
        doc.tokens[m.start].surface.casefold()
        for m in doc.cluster(cluster_id).mentions
        if m.start == m.end
    }


def classify_cluster_gender(
    doc: Document,
    cluster_id: int,
    gazetteers: GazetteerSet,
    targets: Sequence[TargetMention] | None = None,
) -> Gender:
    """Gender of a PER cluster from its pronouns and the longest name's first token.

    Male when the cluster has no single-token mention "she"/"her"/"hers" and
    the first token is a male first name, is no known first name at all, or
    the cluster has a "he"/"him"/"his" mention. Female otherwise.

    ``gazetteers`` should be the unfiltered lists: a first name used in
    training still tells which gender it is.
    """
    if targets is None:
        targets = identify_target_mentions(doc)
    person = [t for t in targets if t.cluster_id == cluster_id and t.entity_type == "PER"]
    if not person:
        raise ValueError(f"cluster {cluster_id} has no person mention")
    first = _longest_name(doc, person)[0]
    pronouns = _cluster_pronouns(doc, cluster_id)
    if pronouns & FEMALE_PRONOUNS:
        return Gender.FEMALE
    in_male = first in gazetteers.male_first
    unknown = not in_male and first not in gazetteers.female_first
    if in_male or unknown or pronouns & MALE_PRONOUNS:
        return Gender.MALE
    return Gender.FEMALE


# ---------------------------------------------------------------- planning


def _name_spans_in_cluster(doc: Document, cluster_id: int, ne_type: str) -> list[NamedEntitySpan]:
    seen, out = set(), []
    for m in sorted(doc.cluster(cluster_id).mentions):
        for ne in doc.ne_spans:
            if ne.ne_type == ne_type and m.contains(ne.span) and ne.span not in seen:
                seen.add(ne.span)
                out.append(ne)
    return sorted(out, key=lambda ne: ne.span)


class _Planner:
    def __init__(self, doc, gaz, state, gender_gaz):
        self.doc = doc
        self.gaz = gaz
        self.state = state
        self.gender_gaz = gender_gaz
        self.plan = ReplacementPlan(doc.doc_key, doc.part)
        self.claimed: dict[int, int] = {}

    def warn(self, msg: str):
        self.plan.warnings.append(f"{self.doc.doc_key} part {self.doc.part}: {msg}")

    def add(self, cid: int, ne: NamedEntitySpan, replacement: tuple[str, ...]):
        taken = [i for i in ne.span if i in self.claimed and self.claimed[i] != cid]
        if taken:
            self.warn(f"span {ne.span.start}-{ne.span.end} already rewritten for cluster {self.claimed[taken[0]]}")
            return
        for i in ne.span:
            self.claimed[i] = cid
        entry = ReplacementEntry(ne.span, self.doc.words(ne.span), replacement, ne.ne_type)
        self.plan.per_cluster.setdefault(cid, []).append(entry)

    def person(self, cid: int, targets: list[TargetMention]):
        longest = _longest_name(self.doc, targets)
        try:
            token_map = {longest[-1].casefold(): draw_replacement(self.state, self.gaz.last_names)}
            if len(longest) > 1:
                gender = classify_cluster_gender(self.doc, cid, self.gender_gaz, targets)
                firsts = self.gaz.male_first if gender is Gender.MALE else self.gaz.female_first
                token_map.setdefault(longest[0].casefold(), draw_replacement(self.state, firsts))
        except PoolExhausted as exc:
            self.warn(f"cluster {cid} ({' '.join(longest)}) left unreplaced: {exc}")
            return
        target_spans = {t.name_span for t in targets}
        for ne in _name_spans_in_cluster(self.doc, cid, "PER"):
            words = self.doc.words(ne.span)
            new = tuple(token_map.get(w.casefold(), w) for w in words)
            if new != words:
                self.add(cid, ne, new)
            elif ne.span in target_spans and not any(w.casefold() in token_map for w in words):
                self.warn(f"cluster {cid}: name variant {' '.join(words)!r} shares no token with {' '.join(longest)!r}")

    def place(self, cid: int, targets: list[TargetMention]):
        mapping: dict[tuple[str, ...], tuple[str, ...]] = {}
        for t in targets:
            words = self.doc.words(t.name_span)
            key = tuple(w.casefold() for w in words)
            if key in mapping:
                continue
            category = self.gaz.geonames.category_of(" ".join(words))
            try:
                drawn = draw_replacement(self.state, self.gaz.geonames, category, n_tokens=len(words))
            except PoolExhausted as exc:
                self.warn(f"cluster {cid} ({' '.join(words)}, {category}) left unreplaced: {exc}")
                mapping[key] = words
                continue
            mapping[key] = tuple(drawn.split())
        for ne in _name_spans_in_cluster(self.doc, cid, "GPE"):
            words = self.doc.words(ne.span)
            new = mapping.get(tuple(w.casefold() for w in words))
            if new is not None and new != words:
                self.add(cid, ne, new)


def build_replacement_plan(
    doc: Document,
    targets: Sequence[TargetMention],
    gaz: GazetteerSet,
    state: SamplerState,
    gender_gaz: GazetteerSet | None = None,
) -> ReplacementPlan:
    """Draw replacement names for every cluster that has a target mention.

    Person clusters: the longest name's last token gets a fresh last name
    and, for multi-token names, its first token a fresh first name of the
    cluster's gender; the mapping is applied to every PER name inside the
    cluster's mentions. Place clusters: each distinct name gets a fresh name
    of the same GeoNames category and token count.

    ``gaz`` must already be filtered of training names. ``gender_gaz``
    (default ``gaz``) supplies the first-name lists used to decide gender.
    Exhausted pools become plan warnings and leave the entity unreplaced.
    """
    planner = _Planner(doc, gaz, state, gender_gaz or gaz)
    by_cluster: dict[int, list[TargetMention]] = {}
    for t in targets:
        by_cluster.setdefault(t.cluster_id, []).append(t)
    for cid in sorted(by_cluster):
        person = [t for t in by_cluster[cid] if t.entity_type == "PER"]
        place = [t for t in by_cluster[cid] if t.entity_type == "GPE"]
        if person:
            planner.person(cid, person)
        if place:
            if gaz.geonames is None:
                planner.warn(f"cluster {cid}: GPE targets but no GeoNames index")
            else:
                planner.place(cid, place)
    return planner.plan


def match_case(original: str, replacement: str) -> str:
    """Give ``replacement`` the case of ``original``'s first letter."""
    if not replacement or not original:
        return replacement
    head = original[0]
    if head.isupper():
        return replacement[0].upper() + replacement[1:]
    if head.islower():
        return replacement[0].lower() + replacement[1:]
    return replacement


def apply_replacement_plan(doc: Document, plan: ReplacementPlan) -> Document:
    """Return a copy of ``doc`` with the plan's surfaces written in.

    Raises
    ------
    PlanDocumentMismatch
        A planned span does not hold the words the plan was built from.
    """
    if (plan.doc_key, plan.part) != (doc.doc_key, doc.part):
        raise PlanDocumentMismatch(
            f"plan for {plan.doc_key} part {plan.part} applied to {doc.doc_key} part {doc.part}"
        )
    surfaces = doc.surfaces
    for entry in plan.entries():
        if entry.span.end >= len(doc) or doc.words(entry.span) != entry.original:
            raise PlanDocumentMismatch(f"span {entry.span} no longer reads {' '.join(entry.original)!r}")
        for i, old, new in zip(entry.span, entry.original, entry.replacement):
            if old != new:
                surfaces[i] = match_case(old, new)
    return doc.with_surfaces(surfaces)


# ---------------------------------------------------------------- corpus level


def collect_training_names(docs: Iterable[Document]) -> set[str]:
    """Surface strings of every PER and GPE entity in a training corpus."""
    return {
        doc.text(ne.span)
        for doc in docs
        for ne in doc.ne_spans
        if ne.ne_type in TARGET_TYPES
    }


def perturb_corpus(
    docs: Sequence[Document],
    gaz: GazetteerSet,
    seed: int,
    gender_gaz: GazetteerSet | None = None,
) -> tuple[list[Document], list[ReplacementPlan]]:
    """Plan every document in order with one sampler, then apply the plans."""
    state = SamplerState(seed)
    plans = [
        build_replacement_plan(d, identify_target_mentions(d, gaz.geonames), gaz, state, gender_gaz)
        for d in docs
    ]
    return [apply_replacement_plan(d, p) for d, p in zip(docs, plans)], plans


class NoLeakagePerturber(TransformerMixin, BaseEstimator):
    """Replace PER/GPE names of a test corpus with names unseen in training.

    Parameters
    ----------
    gazetteers : GazetteerSet
        Unfiltered name resources.
    train_names : iterable of str, default=None
        Extra training names to exclude, on top of those collected from the
        corpus passed to :meth:`fit`.
    seed : int, default=0
        Seed of the replacement sampler. Each :meth:`transform` call starts a
        fresh sampler, so equal inputs give equal outputs.

    Attributes
    ----------
    train_names_ : frozenset of str
        Case-folded excluded names and their tokens.
    gazetteers_ : GazetteerSet
        ``gazetteers`` with ``train_names_`` removed.
    """

    def __init__(self, gazetteers=None, train_names=None, seed=0):
        self.gazetteers = gazetteers
        self.train_names = train_names
        self.seed = seed

    def fit(self, X=None, y=None):
        if not isinstance(self.gazetteers, GazetteerSet):
            raise TypeError("gazetteers must be a GazetteerSet")
        check_seed(self.seed)
        names = set(self.train_names or ())
        if X is not None:
            names |= collect_training_names(check_documents(X))
        self.train_names_ = normalize_names(names)
        self.gazetteers_ = self.gazetteers.without(self.train_names_)
        return self

    def plan(self, X) -> list[ReplacementPlan]:
        check_is_fitted(self, "gazetteers_")
        docs = check_documents(X)
        state = SamplerState(check_seed(self.seed))
        gaz = self.gazetteers_
        return [
            build_replacement_plan(d, identify_target_mentions(d, gaz.geonames), gaz, state, self.gazetteers)
            for d in docs
        ]

    def transform(self, X):
        docs = check_documents(X)
        plans = self.plan(docs)
        for p in plans:
            for w in p.warnings:
                logger.warning(w)
        return [apply_replacement_plan(d, p) for d, p in zip(docs, plans)]
