import pytest
from hypothesis import given, settings, strategies as st

from corefguard.conll_io import (
    Cluster,
    Document,
    NamedEntitySpan,
    Span,
    encode_coref_column,
    encode_ne_column,
    parse_document,
    read_conll,
    serialize_corpus,
    serialize_document,
)
from corefguard.exceptions import InconsistentColumnCount, MissingEndMarker, UnbalancedBrackets

from conftest import FIXTURES


def _doc(name):
    return read_conll(FIXTURES / "conll" / name)


def test_every_fixture_round_trips_bytewise(conll_fixtures):
    assert len(conll_fixtures) >= 5
    for path in conll_fixtures:
        text = path.read_text(encoding="utf-8")
        assert serialize_corpus(parse_document(text)) == text, path.name


def test_nested_mentions_decoded():
    (doc,) = _doc("nested.conll")
    clusters = {c.id: sorted(c.mentions) for c in doc.clusters}
    assert clusters[0] == [Span(0, 7), Span(9, 9)]
    assert clusters[1] == [Span(6, 7)]
    assert clusters[2] == [Span(9, 10), Span(13, 13)]
    assert doc.text(Span(0, 2)) == "Dirk Van Dongen"
    labels = {(n.span.start, n.span.end): n.label for n in doc.ne_spans}
    assert labels[(0, 2)] == "PERSON" and labels[(6, 7)] == "ORG"


def test_multipart_documents_keep_parts():
    docs = _doc("multipart.conll")
    assert [(d.doc_key, d.part) for d in docs] == [("wb/multi", 0), ("wb/multi", 1)]
    assert docs[1].cluster(5).mentions == [Span(2, 2), Span(5, 5)]
    assert [len(s) for s in docs[1].sentences()] == [9]


def test_sentence_indices_and_irregular_whitespace():
    (doc,) = _doc("whitespace.conll")
    assert doc.part == 2
    assert [t.sentence_index for t in doc.tokens] == [0, 0, 0, 1, 1]
    assert doc.tokens[1].surface == "Anna"


def test_edit_reencodes_only_changed_columns():
    (doc,) = _doc("simple.conll")
    renamed = doc.with_surfaces(["Jack" if s == "John" else s for s in doc.surfaces])
    out = serialize_document(renamed)
    original = serialize_document(doc)
    assert out == original.replace("John", "Jack")


def test_build_matches_parse():
    doc = Document.build("x/y", [["A", "B", "."], ["c", "."]], [[(0, 1), (3, 3)]], [(0, 1, "PERSON")])
    again = parse_document(serialize_document(doc))[0]
    assert again.structure() == doc.structure()


def test_coref_column_encoding_order():
    clusters = [Cluster(0, [Span(0, 2)]), Cluster(1, [Span(0, 0)])]
    assert encode_coref_column(3, clusters) == ["(0|(1)", "-", "0)"]
    nes = [NamedEntitySpan(Span(0, 0), "GPE"), NamedEntitySpan(Span(1, 2), "PERSON")]
    assert encode_ne_column(3, nes) == ["(GPE)", "(PERSON*", "*)"]


@pytest.mark.parametrize(
    "body, exc",
    [
        (["A (0", "B -", "", "C 0)"], UnbalancedBrackets),
        (["A 0)"], UnbalancedBrackets),
        (["A (PERSON* -", "", "B *) -"], UnbalancedBrackets),
    ],
)
def test_malformed_blocks(body, exc):
    rows = []
    for line in body:
        if not line:
            rows.append("")
            continue
        word, *rest = line.split()
        ne, coref = rest if len(rest) == 2 else ("*", rest[0])
        rows.append(f"d 0 0 {word} - * - - - - {ne} {coref}")
    text = "#begin document (d); part 000\n" + "\n".join(rows) + "\n\n#end document\n"
    with pytest.raises(exc):
        parse_document(text)


def test_inconsistent_columns():
    text = "#begin document (d); part 000\nd 0 0 A - * - - - - * (0)\nd 0 1 B - * - - - * (0)\n#end document\n"
    with pytest.raises(InconsistentColumnCount):
        parse_document(text)


def test_missing_end_marker():
    with pytest.raises(MissingEndMarker):
        parse_document("#begin document (d); part 000\nd 0 0 A - - - - - - * (0)\n")


@st.composite
def documents(draw):
    n_sent = draw(st.integers(1, 3))
    sentences = [[draw(st.sampled_from(["Ann", "Bo", "ran", "the", ","])) for _ in range(draw(st.integers(1, 5)))]
                 for _ in range(n_sent)]
    bounds, start = [], 0
    for s in sentences:
        bounds.append((start, start + len(s) - 1))
        start += len(s)
    spans = set()
    for lo, hi in bounds:
        for _ in range(draw(st.integers(0, 3))):
            a = draw(st.integers(lo, hi))
            spans.add((a, draw(st.integers(a, hi))))
    spans = sorted(spans)
    n_clusters = draw(st.integers(1, 3))
    clusters = [[] for _ in range(n_clusters)]
    for sp in spans:
        k = draw(st.integers(0, n_clusters - 1))
        # crossing mentions of one cluster have no unambiguous bracket encoding
        if any(a < sp[0] <= b < sp[1] or sp[0] < a <= sp[1] < b for a, b in clusters[k]):
            continue
        clusters[k].append(sp)
    clusters = [c for c in clusters if c]
    ne = []
    for lo, hi in bounds:
        if draw(st.booleans()):
            a = draw(st.integers(lo, hi))
            ne.append((a, draw(st.integers(a, hi)), draw(st.sampled_from(["PERSON", "GPE", "ORG"]))))
    return Document.build("h/doc", sentences, clusters, ne, part=draw(st.integers(0, 3)))


@settings(max_examples=150, deadline=None)
@given(documents())
def test_serialize_parse_preserves_structure(doc):
    text = serialize_document(doc)
    (back,) = parse_document(text)
    assert back.structure() == doc.structure()
    assert serialize_document(back) == text


def test_empty_block_and_shared_cluster():
    (empty,) = parse_document("#begin document (e); part 000\n#end document\n")
    assert len(empty) == 0 and empty.clusters == []
    text = "#begin document (e); part 000\ne 0 0 a - * - - - - * (0)\ne 0 1 b - * - - - - * (0)\n#end document\n"
    (doc,) = parse_document(text)
    assert doc.clusters == [Cluster(0, [Span(0, 0), Span(1, 1)])]


def test_cluster_ids_do_not_matter():
    a = Document.build("p", [["x", "y", "z"]], [[(0, 0), (2, 2)], [(1, 1)]])
    b = Document.build("p", [["x", "y", "z"]], [[(1, 1)], [(2, 2), (0, 0)]])
    assert a.cluster_sets() == b.cluster_sets()
