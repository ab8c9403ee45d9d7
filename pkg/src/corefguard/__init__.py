"""Name-leakage-free coreference evaluation and adversarial span training."""

from .conll_io import Cluster, Document, NamedEntitySpan, Span, parse_document, read_conll, serialize_corpus, serialize_document
from .coref_metrics import PRF, conll_f1, leakage_rate, pair_metric, score_corpus
from .gap_eval import gap_report, parse_gap, parse_predictions
from .gazetteer import GazetteerSet, SamplerState, load_first_names, load_geonames, load_last_names
from .no_leakage import NoLeakagePerturber, perturb_corpus
from .sigtest import PairedBinaryOutcomes, StratifiedScores, mcnemar_exact, stratified_randomization_test

__version__ = "0.1.0"

__all__ = [
    "Cluster",
    "Document",
    "GazetteerSet",
    "NamedEntitySpan",
    "NoLeakagePerturber",
    "PRF",
    "PairedBinaryOutcomes",
    "SamplerState",
    "Span",
    "StratifiedScores",
    "conll_f1",
    "gap_report",
    "leakage_rate",
    "load_first_names",
    "load_geonames",
    "load_last_names",
    "mcnemar_exact",
    "pair_metric",
    "parse_document",
    "parse_gap",
    "parse_predictions",
    "perturb_corpus",
    "read_conll",
    "score_corpus",
    "serialize_corpus",
    "serialize_document",
    "stratified_randomization_test",
]
