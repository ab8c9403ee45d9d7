"""Lossless reader and writer for the CoNLL-2012 ``*_conll`` column format.

A file holds ``#begin document (<key>); part <NNN>`` ... ``#end document``
blocks. Inside a block every non-blank, non-comment line is one token with
whitespace-separated columns; blank lines end sentences. Two columns are
interpreted:

* the named-entity column, bracket notation ``(PERSON*``, ``*``, ``*)``,
  ``(GPE)``;
* the coreference column (last by default), ``(3``, ``3)``, ``(3)`` joined by
  ``|``, or ``-``.

Every other column is kept verbatim, as is the whitespace between columns, so
``serialize_corpus(parse_document(text)) == text`` once newlines are
normalized to ``\\n``.
"""

from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .exceptions import (
    ConllFormatError,
    InconsistentColumnCount,
    MissingEndMarker,
    UnbalancedBrackets,
)

__all__ = [
    "Span",
    "NamedEntitySpan",
    "Cluster",
    "Token",
    "ConllLayout",
    "Document",
    "parse_document",
    "serialize_document",
    "serialize_corpus",
    "read_conll",
    "encode_coref_column",
    "encode_ne_column",
]

_BEGIN = "#begin document"
_END = "#end document"
_HEADER_RE = re.compile(r"^#begin document \((?P<key>.*)\);\s*part\s+(?P<part>\d+)\s*$")
_COREF_OPEN = re.compile(r"^\((\d+)$")
_COREF_CLOSE = re.compile(r"^(\d+)\)$")
_COREF_SINGLE = re.compile(r"^\((\d+)\)$")
_NE_FIELD = re.compile(r"(?:\([^()*\s]+|\*|\))+")
_NE_PIECE = re.compile(r"\(([^()*\s]+)|(\*)|(\))")
_TOKEN_LINE = re.compile(r"^(\s*)(.*?)(\s*)$")

PERSON_TAGS = frozenset({"PER", "PERSON"})


@dataclass(frozen=True, order=True)
class Span:
    """Inclusive token interval ``[start, end]`` within a document."""

    start: int
    end: int

    def __post_init__(self):
        if not 0 <= self.start <= self.end:
            raise ValueError(f"invalid span [{self.start}, {self.end}]")

    def __len__(self):
        return self.end - self.start + 1

    def __iter__(self):
        return iter(range(self.start, self.end + 1))

    def contains(self, other: "Span") -> bool:
        return self.start <= other.start and other.end <= self.end

    def covers(self, index: int) -> bool:
        return self.start <= index <= self.end


@dataclass(frozen=True)
class NamedEntitySpan:
    span: Span
    label: str

    @property
    def ne_type(self) -> str:
        """Tag with the OntoNotes ``PERSON`` folded into ``PER``."""
        return "PER" if self.label in PERSON_TAGS else self.label


@dataclass
class Cluster:
    id: int
    mentions: list[Span]

    def __post_init__(self):
        if len(set(self.mentions)) != len(self.mentions):
            raise ValueError(f"cluster {self.id} repeats a mention")


@dataclass
class Token:
    surface: str
    sentence_index: int
    doc_index: int
    extra_columns: tuple[str, ...] = ()
    # leading whitespace, inter-column separators, trailing whitespace
    separators: tuple[str, ...] | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not self.surface:
            raise ValueError("token surface must be non-empty")


@dataclass(frozen=True)
class ConllLayout:
    """Column positions (0-based, negative counts from the end)."""

    word_column: int = 3
    ne_column: int | None = 10
    coref_column: int = -1

    def resolve(self, n_columns: int) -> tuple[int, int | None, int]:
        def fix(i):
            j = i + n_columns if i < 0 else i
            if not 0 <= j < n_columns:
                raise InconsistentColumnCount(
                    f"column {i} does not exist in a {n_columns}-column line"
                )
            return j

        word = fix(self.word_column)
        ne = None if self.ne_column is None else fix(self.ne_column)
        coref = fix(self.coref_column)
        if len({word, coref} | ({ne} if ne is not None else set())) != (3 if ne is not None else 2):
            raise ValueError("word, NE and coreference columns must differ")
        return word, ne, coref


@dataclass
class Document:
    doc_key: str
    part: int
    tokens: list[Token]
    ne_spans: list[NamedEntitySpan] = field(default_factory=list)
    clusters: list[Cluster] = field(default_factory=list)
    layout: ConllLayout = field(default_factory=ConllLayout)
    # raw line skeleton (str lines, int token positions) of a parsed block
    _skeleton: list | None = field(default=None, repr=False, compare=False)
    _final_newline: bool = field(default=True, repr=False, compare=False)
    _raw_ne: tuple | None = field(default=None, repr=False, compare=False)
    _raw_coref: tuple | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        n = len(self.tokens)
        for ne in self.ne_spans:
            if ne.span.end >= n:
                raise ValueError(f"NE span {ne.span} outside document of {n} tokens")
        for cluster in self.clusters:
            for m in cluster.mentions:
                if m.end >= n:
                    raise ValueError(f"mention {m} outside document of {n} tokens")

    def __len__(self):
        return len(self.tokens)

    @property
    def surfaces(self) -> list[str]:
        return [t.surface for t in self.tokens]

    def text(self, span: Span) -> str:
        return " ".join(t.surface for t in self.tokens[span.start : span.end + 1])

    def words(self, span: Span) -> tuple[str, ...]:
        return tuple(t.surface for t in self.tokens[span.start : span.end + 1])

    def cluster(self, cluster_id: int) -> Cluster:
        for c in self.clusters:
            if c.id == cluster_id:
                return c
        raise KeyError(cluster_id)

    def sentences(self) -> list[list[int]]:
        out: dict[int, list[int]] = {}
        for i, tok in enumerate(self.tokens):
            out.setdefault(tok.sentence_index, []).append(i)
        return list(out.values())

    def cluster_sets(self) -> frozenset:
        """Clusters as a set of sets of ``(start, end)`` pairs (id-free)."""
        return frozenset(
            frozenset((m.start, m.end) for m in c.mentions) for c in self.clusters if c.mentions
        )

    def structure(self) -> tuple:
        """Everything that defines the document, ignoring byte layout and cluster ids."""
        return (
            self.doc_key,
            self.part,
            tuple((t.surface, t.sentence_index) for t in self.tokens),
            tuple(sorted((n.span.start, n.span.end, n.label) for n in self.ne_spans)),
            self.cluster_sets(),
        )

    def with_surfaces(self, surfaces: Sequence[str]) -> "Document":
        """Copy of the document with token surfaces replaced one for one."""
        if len(surfaces) != len(self.tokens):
            raise ValueError("surface count must equal token count")
        tokens = [dataclasses.replace(t, surface=s) for t, s in zip(self.tokens, surfaces)]
        return dataclasses.replace(self, tokens=tokens)

    @classmethod
    def build(
        cls,
        doc_key: str,
        sentences: Sequence[Sequence[str]],
        clusters: Iterable[Iterable[tuple[int, int]]] = (),
        ne_spans: Iterable[tuple[int, int, str]] = (),
        part: int = 0,
    ) -> "Document":
        """Construct a document in the default v4_gold_conll layout.

        Spans are inclusive document-level token indices. Non-annotated
        columns are filled with ``-`` (``*`` for the parse bit).
        """
        tokens = []
        for s_idx, sent in enumerate(sentences):
            for w_idx, word in enumerate(sent):
                extra = (doc_key, str(part), str(w_idx), "-", "*", "-", "-", "-", "-", "*", "-")
                tokens.append(Token(word, s_idx, len(tokens), extra))
        cl = [
            Cluster(i, [Span(s, e) for s, e in mentions]) for i, mentions in enumerate(clusters)
        ]
        nes = [NamedEntitySpan(Span(s, e), label) for s, e, label in ne_spans]
        return cls(doc_key, part, tokens, nes, cl)


# ---------------------------------------------------------------- decoding


def _decode_coref(fields: Sequence[str], sentence_ids: Sequence[int]) -> list[Cluster]:
    stacks: dict[int, list[int]] = {}
    mentions: dict[int, list[Span]] = {}
    for i, value in enumerate(fields):
        if i > 0 and sentence_ids[i] != sentence_ids[i - 1]:
            _check_closed(stacks, "coreference", i)
        if value == "-":
            continue
        for piece in value.split("|"):
            if m := _COREF_SINGLE.match(piece):
                cid = int(m.group(1))
                mentions.setdefault(cid, []).append(Span(i, i))
            elif m := _COREF_OPEN.match(piece):
                stacks.setdefault(int(m.group(1)), []).append(i)
            elif m := _COREF_CLOSE.match(piece):
                cid = int(m.group(1))
                if not stacks.get(cid):
                    raise UnbalancedBrackets(f"token {i}: '{piece}' closes an unopened mention")
                mentions.setdefault(cid, []).append(Span(stacks[cid].pop(), i))
            else:
                raise ConllFormatError(f"token {i}: bad coreference field {value!r}")
    _check_closed(stacks, "coreference", len(fields))
    clusters = []
    for cid in sorted(mentions):
        spans = sorted(mentions[cid])
        if len(set(spans)) != len(spans):
            raise ConllFormatError(f"cluster {cid} repeats a mention")
        clusters.append(Cluster(cid, spans))
    return clusters


def _check_closed(stacks: dict, what: str, where: int) -> None:
    open_ids = [k for k, v in stacks.items() if v]
    if open_ids:
        raise UnbalancedBrackets(f"{what} bracket(s) {open_ids} still open before token {where}")


def _decode_ne(fields: Sequence[str], sentence_ids: Sequence[int]) -> list[NamedEntitySpan]:
    stack: list[tuple[str, int]] = []
    spans = []
    for i, value in enumerate(fields):
        if i > 0 and sentence_ids[i] != sentence_ids[i - 1] and stack:
            raise UnbalancedBrackets(f"named entity {stack[-1][0]} crosses a sentence boundary")
        if value == "-":
            continue
        if not _NE_FIELD.fullmatch(value):
            raise ConllFormatError(f"token {i}: bad named-entity field {value!r}")
        for label, _star, close in _NE_PIECE.findall(value):
            if label:
                stack.append((label, i))
            elif close:
                if not stack:
                    raise UnbalancedBrackets(f"token {i}: ')' closes no named entity")
                lab, start = stack.pop()
                spans.append(NamedEntitySpan(Span(start, i), lab))
    if stack:
        raise UnbalancedBrackets(f"named entity {stack[-1][0]} never closed")
    spans.sort(key=lambda n: (n.span.start, -n.span.end))
    return spans


# ---------------------------------------------------------------- encoding


def encode_coref_column(n_tokens: int, clusters: Iterable[Cluster]) -> list[str]:
    """Bracket strings per token: opens (outermost first), singletons, closes."""
    opens = [[] for _ in range(n_tokens)]
    singles = [[] for _ in range(n_tokens)]
    closes = [[] for _ in range(n_tokens)]
    for c in clusters:
        for m in c.mentions:
            if m.start == m.end:
                singles[m.start].append((c.id,))
            else:
                opens[m.start].append((-m.end, c.id))
                closes[m.end].append((-m.start, c.id))
    out = []
    for i in range(n_tokens):
        parts = [f"({cid}" for _, cid in sorted(opens[i])]
        parts += [f"({cid})" for (cid,) in sorted(singles[i])]
        parts += [f"{cid})" for _, cid in sorted(closes[i])]
        out.append("|".join(parts) if parts else "-")
    return out


def encode_ne_column(n_tokens: int, ne_spans: Iterable[NamedEntitySpan]) -> list[str]:
    """NE strings per token; a one-token entity alone on its token is ``(X)``."""
    opens = [[] for _ in range(n_tokens)]
    closes = [[] for _ in range(n_tokens)]
    for ne in ne_spans:
        opens[ne.span.start].append(ne)
        closes[ne.span.end].append(ne)
    out = []
    for i in range(n_tokens):
        if len(opens[i]) == 1 and len(closes[i]) == 1 and opens[i][0] is closes[i][0]:
            out.append(f"({opens[i][0].label})")
            continue
        labels = [ne.label for ne in sorted(opens[i], key=lambda n: -n.span.end)]
        out.append("".join(f"({lab}" for lab in labels) + "*" + ")" * len(closes[i]))
    return out


# ---------------------------------------------------------------- parsing


def _split_token_line(line: str) -> tuple[list[str], tuple[str, ...]]:
    lead, body, trail = _TOKEN_LINE.match(line).groups()
    pieces = re.split(r"(\s+)", body)
    return pieces[0::2], (lead, *pieces[1::2], trail)


def _parse_header(line: str) -> tuple[str, int]:
    m = _HEADER_RE.match(line)
    if m:
        return m.group("key"), int(m.group("part"))
    return line[len(_BEGIN) :].strip(), 0


def parse_document(stream: str, layout: ConllLayout | None = None) -> list[Document]:
    """Parse every ``#begin document`` block of ``stream``.

    Raises
    ------
    UnbalancedBrackets
        A coreference or NE bracket is left open at a sentence or document end.
    InconsistentColumnCount
        Token lines of one block disagree on their number of columns.
    MissingEndMarker
        A block is not terminated by ``#end document``.
    """
    layout = layout or ConllLayout()
    text = stream.replace("\r\n", "\n").replace("\r", "\n")
    lines = text.split("\n")
    final_newline = lines[-1] == ""
    if final_newline:
        lines.pop()

    docs: list[Document] = []
    pending: list[str] = []
    block = None
    for lineno, line in enumerate(lines, 1):
        if block is None:
            if line.startswith(_BEGIN):
                block = _Block(line, pending, layout)
                pending = []
            elif not line.strip() or line.startswith("#"):
                pending.append(line)
            else:
                raise ConllFormatError(f"line {lineno}: token line outside a document block")
        else:
            if line.startswith(_END):
                block.skeleton.append(line)
                docs.append(block.finish())
                block = None
            elif line.startswith(_BEGIN):
                raise MissingEndMarker(f"line {lineno}: new document begins before '#end document'")
            elif not line.strip():
                block.skeleton.append(line)
                block.sentence_break()
            elif line.startswith("#"):
                block.skeleton.append(line)
            else:
                block.add_token(line, lineno)
    if block is not None:
        raise MissingEndMarker(f"document {block.key!r} has no '#end document'")
    if docs:
        docs[-1]._skeleton.extend(pending)
        docs[-1]._final_newline = final_newline
    return docs


class _Block:
    def __init__(self, header: str, preamble: list[str], layout: ConllLayout):
        self.key, self.part = _parse_header(header)
        self.layout = layout
        self.skeleton: list = [*preamble, header]
        self.rows: list[tuple[list[str], tuple[str, ...]]] = []
        self.sentence_ids: list[int] = []
        self.sentence = 0
        self.n_columns = None
        self.columns = None

    def sentence_break(self):
        if self.sentence_ids and self.sentence_ids[-1] == self.sentence:
            self.sentence += 1

    def add_token(self, line: str, lineno: int):
        fields, seps = _split_token_line(line)
        if self.n_columns is None:
            self.n_columns = len(fields)
            self.columns = self.layout.resolve(len(fields))
        elif len(fields) != self.n_columns:
            raise InconsistentColumnCount(
                f"line {lineno}: {len(fields)} columns, block started with {self.n_columns}"
            )
        self.skeleton.append(len(self.rows))
        self.rows.append((fields, seps))
        self.sentence_ids.append(self.sentence)

    def finish(self) -> Document:
        tokens, ne_fields, coref_fields = [], [], []
        for i, (fields, seps) in enumerate(self.rows):
            word, ne, coref = self.columns
            extra = tuple(f for j, f in enumerate(fields) if j != word)
            tokens.append(Token(fields[word], self.sentence_ids[i], i, extra, seps))
            ne_fields.append(fields[ne] if ne is not None else "*")
            coref_fields.append(fields[coref])
        clusters = _decode_coref(coref_fields, self.sentence_ids)
        nes = _decode_ne(ne_fields, self.sentence_ids) if self.columns and self.columns[1] is not None else []
        doc = Document(self.key, self.part, tokens, nes, clusters, self.layout, self.skeleton)
        doc._raw_ne = (tuple(ne_fields), _ne_key(nes))
        doc._raw_coref = (tuple(coref_fields), _cluster_key(clusters))
        return doc


def _cluster_key(clusters: Iterable[Cluster]) -> frozenset:
    return frozenset((c.id, m.start, m.end) for c in clusters for m in c.mentions)


def _ne_key(nes: Iterable[NamedEntitySpan]) -> frozenset:
    return frozenset((n.span.start, n.span.end, n.label) for n in nes)


# ---------------------------------------------------------------- serialization


def _default_extra(doc: Document, tok: Token, n_columns: int) -> list[str]:
    return [doc.doc_key, str(doc.part), str(tok.doc_index)] + ["-"] * (n_columns - 4)


def _token_rows(doc: Document) -> list[str]:
    n = len(doc.tokens)
    if doc._raw_coref is not None and doc._raw_coref[1] == _cluster_key(doc.clusters):
        coref_col = list(doc._raw_coref[0])
    else:
        coref_col = encode_coref_column(n, doc.clusters)
    if doc._raw_ne is not None and doc._raw_ne[1] == _ne_key(doc.ne_spans):
        ne_col = list(doc._raw_ne[0])
    else:
        ne_col = encode_ne_column(n, doc.ne_spans)

    rows = []
    for i, tok in enumerate(doc.tokens):
        if tok.extra_columns:
            n_columns = len(tok.extra_columns) + 1
            fields = list(tok.extra_columns)
        else:
            n_columns = 12
            fields = _default_extra(doc, tok, n_columns)
        word, ne, coref = doc.layout.resolve(n_columns)
        fields.insert(word, tok.surface)
        fields[coref] = coref_col[i]
        if ne is not None:
            fields[ne] = ne_col[i]
        seps = tok.separators
        if seps is None or len(seps) != n_columns + 1:
            rows.append("\t".join(fields))
        else:
            rows.append(seps[0] + "".join(f + s for f, s in zip(fields, seps[1:])))
    return rows


def _canonical_skeleton(doc: Document) -> list:
    skel: list = [f"{_BEGIN} ({doc.doc_key}); part {doc.part:03d}"]
    prev = None
    for i, tok in enumerate(doc.tokens):
        if prev is not None and tok.sentence_index != prev:
            skel.append("")
        skel.append(i)
        prev = tok.sentence_index
    if doc.tokens:
        skel.append("")
    skel.append(_END)
    return skel


def serialize_document(doc: Document) -> str:
    """Render one document; parsed-and-unmodified documents come back byte-identical."""
    rows = _token_rows(doc)
    skeleton = doc._skeleton
    if skeleton is None or sum(isinstance(x, int) for x in skeleton) != len(rows):
        skeleton = _canonical_skeleton(doc)
    lines = [rows[x] if isinstance(x, int) else x for x in skeleton]
    out = "\n".join(lines)
    return out + "\n" if doc._final_newline else out


def serialize_corpus(docs: Iterable[Document]) -> str:
    return "".join(serialize_document(d) for d in docs)


def read_conll(path, layout: ConllLayout | None = None) -> list[Document]:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_document(fh.read(), layout)
