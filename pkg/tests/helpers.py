"""Synthetic resources and corpora shared by the test modules."""

from __future__ import annotations

import numpy as np

from corefguard.conll_io import Document
from corefguard.gazetteer import GazetteerSet, load_first_names, load_geonames, load_last_names

SURNAMES = [
    "Abbott", "Barlow", "Crane", "Dunmore", "Ellery", "Farrow", "Gaskell", "Hollis", "Ingram", "Jessop",
    "Kemble", "Lytton", "Marlow", "Norcott", "Oakley", "Pryce", "Quill", "Rowan", "Soames", "Tetley",
    "Upton", "Vance", "Whitlock", "Yardley", "Zeller", "Ashdown", "Bramwell", "Cotter", "Dearing", "Elston",
    "Fenwick", "Gorringe", "Harker", "Ibbotson", "Jarrold", "Kinsey", "Lambeth", "Merriman", "Nettleton", "Orwin",
    "Pendle", "Quarles", "Ridley", "Sutter", "Thorne", "Ulrich", "Verity", "Wragg", "Yeats", "Zorn",
    "Allard", "Bixby", "Colley", "Dyson", "Eames", "Fitch", "Goode", "Hayter", "Iles", "Joyner",
]
MALE = ["James", "Robert", "Michael", "William", "Richard", "Thomas", "Charles", "Daniel", "Paul", "Mark",
        "George", "Steven", "Edward", "Brian", "Kevin", "Jason", "Gary", "Larry", "Frank", "Scott"]
FEMALE = ["Mary", "Linda", "Susan", "Karen", "Nancy", "Betty", "Helen", "Sandra", "Donna", "Carol",
          "Ruth", "Sharon", "Laura", "Sarah", "Judy", "Anna", "Emma", "Alice", "Diane", "Joyce"]
UNISEX = ["Jordan", "Casey"]
CITIES = ["Avonford", "Brackley", "Cullen", "Dorrington", "Eskdale", "Fairlie", "Glenmore", "Hartland",
          "Ilkley", "Jedburgh", "Kelso", "Lanark", "Moffat", "Nairn", "Oban", "Peebles"]
TWO_WORD_CITIES = ["New Avon", "Port Ellen", "North Berwick", "Castle Douglas"]
STATES = ["Wessex", "Mercia", "Northumbria", "Anglia", "Cumbria"]
COUNTRIES = ["Freedonia", "Ruritania"]


def census_text(names=SURNAMES) -> str:
    return "".join(f"{n.upper():<15} {0.5 / (i + 1):.3f} {0.9:.3f} {i + 1}\n" for i, n in enumerate(names))


def first_names_text(male=MALE, female=FEMALE, unisex=UNISEX) -> str:
    male, female, unisex = list(male), list(female), list(unisex)
    rows = [f"{n}\t0.99" for n in male] + [f"{n}\t0.01" for n in female] + [f"{n}\t0.5" for n in unisex]
    return "\n".join(rows) + "\n"


def synthetic_names(prefix: str, n: int) -> list[str]:
    """``n`` distinct pronounceable names, for pools larger than the lists above."""
    a, b, c = "bdfgklmnprstvz", "aeiou", ["n", "ra", "lo", "ne", "th", "ssa", "rd", "x"]
    out = []
    for i in range(n):
        out.append(prefix + a[i % 14] + b[(i // 14) % 5] + c[(i // 70) % 8])
    return out


def geonames_text(extra_cities=()) -> str:
    rows, gid = [], 1000
    cities = CITIES + list(extra_cities) + TWO_WORD_CITIES
    for names, code in ((cities, "PPL"), (STATES, "ADM1"), (COUNTRIES, "PCLI")):
        for n in names:
            gid += 1
            rows.append("\t".join([str(gid), n, n, "", "0.0", "0.0", "P" if code == "PPL" else "A", code, "XX"]))
    return "\n".join(rows) + "\n"


def gazetteers(surnames=SURNAMES, with_geo=True, male=MALE, female=FEMALE, extra_cities=()) -> GazetteerSet:
    male, female = load_first_names(first_names_text(male, female))
    geo = load_geonames(geonames_text(extra_cities)) if with_geo else None
    return GazetteerSet(load_last_names(census_text(surnames)), male, female, geo)


def person_doc(key: str, first: str, last: str, pronoun: str, city: str | None = None) -> Document:
    """``First Last arrived [in City] . Pronoun said Last left [City] .``"""
    s1 = [first, last, "arrived"]
    clusters = [[(0, 1)]]
    nes = [(0, 1, "PERSON")]
    if city:
        s1 += ["in", city]
        nes.append((4, 4, "GPE"))
        clusters.append([(4, 4)])
    s1.append(".")
    off = len(s1)
    s2 = [pronoun, "said", last, "left", "."]
    clusters[0] += [(off, off), (off + 2, off + 2)]
    nes.append((off + 2, off + 2, "PERSON"))
    if city:
        s2.insert(4, city)
        clusters[1].append((off + 4, off + 4))
        nes.append((off + 4, off + 4, "GPE"))
    return Document.build(key, [s1, s2], clusters, nes)


def synthetic_corpus(n_docs: int, seed: int, with_city: bool = True) -> list[Document]:
    rng = np.random.default_rng(seed)
    docs = []
    for i in range(n_docs):
        female = bool(rng.integers(2))
        first = str(rng.choice(FEMALE if female else MALE))
        last = str(rng.choice(SURNAMES))
        city = str(rng.choice(CITIES)) if with_city else None
        docs.append(person_doc(f"syn/{i:03d}", first, last, "she" if female else "he", city))
    return docs
