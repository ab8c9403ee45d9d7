"""Desk-scale span coreference model with adversarial training on span vectors."""

from .data import ToyDocument, format_toy, make_toy_dataset, parse_toy
from .estimator import SpanCorefModel
from .model import (
    AdvConfig,
    LossBreakdown,
    ModelParams,
    ScoreMatrix,
    SpanSet,
    adversarial_loss,
    build_span_set,
    coreference_scores,
    fgsm_perturbation,
    marginal_loss,
    predict_antecedents,
    span_representation,
    total_loss,
)
from .training import GradCheckReport, Vocabulary, gradient_check, train, train_baseline

__all__ = [
    "AdvConfig",
    "GradCheckReport",
    "LossBreakdown",
    "ModelParams",
    "ScoreMatrix",
    "SpanCorefModel",
    "SpanSet",
    "ToyDocument",
    "Vocabulary",
    "adversarial_loss",
    "build_span_set",
    "coreference_scores",
    "fgsm_perturbation",
    "format_toy",
    "gradient_check",
    "make_toy_dataset",
    "marginal_loss",
    "parse_toy",
    "predict_antecedents",
    "span_representation",
    "total_loss",
    "train",
    "train_baseline",
]
