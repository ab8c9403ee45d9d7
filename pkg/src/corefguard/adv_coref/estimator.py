"""scikit-learn facade over the adversarially trained span model."""

from __future__ import annotations

import torch
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ..coref_metrics import METRICS, Counts, conll_f1_from_counts, metric_counts
from ..utils.validation import check_interval, check_seed
from .data import ToyDocument
from .model import (
    AdvConfig,
    ModelParams,
    antecedents_to_clusters,
    build_span_set,
    coreference_scores,
    enumerate_spans,
    predict_antecedents,
)
from .training import Vocabulary, gradient_descent, prepare


def _check_toy_documents(X) -> list[ToyDocument]:
    docs = list(X)
    for d in docs:
        if not isinstance(d, ToyDocument):
            raise TypeError(f"expected ToyDocument, got {type(d).__name__}")
    return docs


class SpanCorefModel(BaseEstimator):
    """Span-ranking coreference model trained with the FGSM-style objective.

    Parameters
    ----------
    alpha : float, default=0.6
        Weight of the clean loss; ``1 - alpha`` weighs the adversarial loss.
    epsilon : float, default=1.0
        L2 norm of each span perturbation.
    adversarial : bool, default=True
        ``False`` trains on the clean loss only and skips the adversarial pass.
    n_iter : int, default=200
    learning_rate : float, default=0.1
    embedding_dim, hidden_dim, width_dim, ffnn_dim, max_width : int
        Model sizes; candidate spans have width ``end - start <= max_width``.
    random_state : int, default=0

    Attributes
    ----------
    params_ : ModelParams
    vocab_ : Vocabulary
    loss_curve_ : list of LossBreakdown
        Losses before each update, plus the final loss.
    """

    def __init__(self, alpha=0.6, epsilon=1.0, adversarial=True, n_iter=200, learning_rate=0.1,
                 embedding_dim=8, hidden_dim=4, width_dim=4, ffnn_dim=8, max_width=5, random_state=0):
        self.alpha = alpha
        self.epsilon = epsilon
        self.adversarial = adversarial
        self.n_iter = n_iter
        self.learning_rate = learning_rate
        self.embedding_dim = embedding_dim
        self.hidden_dim = hidden_dim
        self.width_dim = width_dim
        self.ffnn_dim = ffnn_dim
        self.max_width = max_width
        self.random_state = random_state

    def fit(self, X, y=None):
        docs = _check_toy_documents(X)
        if not docs:
            raise ValueError("empty training set")
        cfg = AdvConfig(self.alpha, self.epsilon) if self.adversarial else None
        check_interval(self.learning_rate, "learning_rate", 0.0)
        self.vocab_ = Vocabulary(docs)
        self.params_ = ModelParams(
            len(self.vocab_), self.embedding_dim, self.hidden_dim, self.width_dim,
            self.ffnn_dim, self.max_width, seed=check_seed(self.random_state),
        )
        examples = prepare(docs, self.vocab_, self.max_width)
        self.loss_curve_ = gradient_descent(examples, self.params_, cfg, int(self.n_iter), self.learning_rate)
        self.n_iter_ = int(self.n_iter)
        return self

    def predict(self, X) -> list[list[list[tuple[int, int]]]]:
        """Predicted clusters of ``(start, end)`` spans per document."""
        check_is_fitted(self, "params_")
        out = []
        with torch.no_grad():
            for d in X:
                tokens = d.tokens if isinstance(d, ToyDocument) else list(d)
                spans = enumerate_spans(len(tokens), self.max_width)
                span_set = build_span_set(self.vocab_.ids(tokens), self.params_, spans)
                antecedents = predict_antecedents(coreference_scores(span_set, self.params_))
                out.append(antecedents_to_clusters(spans, antecedents))
        return out

    def score(self, X, y=None) -> float:
        """Corpus CoNLL F1 of the predictions against the documents' gold clusters."""
        docs = _check_toy_documents(X)
        pooled = {k: Counts() for k in METRICS}
        for d, pred in zip(docs, self.predict(docs)):
            for k in METRICS:
                pooled[k] = pooled[k] + metric_counts(k, d.clusters, pred)
        return conll_f1_from_counts(pooled)
