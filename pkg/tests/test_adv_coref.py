import math
import time

import numpy as np
import pytest
import torch

from corefguard.adv_coref import SpanCorefModel
from corefguard.adv_coref.data import ToyDocument, format_toy, make_toy_dataset, parse_toy
from corefguard.adv_coref.model import (
    AdvConfig,
    ModelParams,
    ScoreMatrix,
    antecedents_to_clusters,
    build_span_set,
    coreference_scores,
    encode_tokens,
    enumerate_spans,
    fgsm_perturbation,
    gold_antecedent_mask,
    marginal_loss,
    objective,
    predict_antecedents,
    span_representation,
)
from corefguard.adv_coref.training import Vocabulary, analytic_gradients, gradient_check, prepare, train, train_baseline
from corefguard.conll_io import Span
from corefguard.exceptions import EmptyGoldSet, WidthOverflow


def fixture(seed=0, n_docs=2):
    docs = make_toy_dataset(n_docs, seed)
    vocab = Vocabulary(docs)
    params = ModelParams(len(vocab), seed=seed)
    (ex,) = prepare(docs[:1], vocab, params.max_width)
    return docs, vocab, params, ex


def test_config_validation():
    with pytest.raises(ValueError):
        AdvConfig(alpha=1.5)
    with pytest.raises(ValueError):
        AdvConfig(epsilon=-1)
    assert AdvConfig() == AdvConfig(0.6, 1.0)


def test_enumerate_spans_widths():
    spans = enumerate_spans(4, 1)
    assert spans == [Span(0, 0), Span(0, 1), Span(1, 1), Span(1, 2), Span(2, 2), Span(2, 3), Span(3, 3)]


def test_span_vector_matches_hand_computation():
    _, _, params, ex = fixture()
    x = encode_tokens(ex.token_ids, params).detach()
    span = Span(1, 3)
    g = span_representation(x, span, params).detach()
    with torch.no_grad():
        beta = [float(params.head_scores(x[j])) for j in range(1, 4)]
        z = sum(math.exp(b) for b in beta)
        pooled = sum(math.exp(b) / z * x[j] for b, j in zip(beta, range(1, 4)))
        want = torch.cat([x[1], x[3], pooled, params.width_embed.weight[2]])
    assert torch.allclose(g, want, atol=1e-12)
    assert g.shape[0] == params.span_dim


def test_width_overflow():
    _, _, params, ex = fixture()
    x = encode_tokens(ex.token_ids, params)
    assert span_representation(x, Span(0, 5), params).shape[0] == params.span_dim
    with pytest.raises(WidthOverflow):
        span_representation(x, Span(0, 6), params)


def test_marginal_loss_matches_loop():
    _, _, params, ex = fixture()
    spans = build_span_set(ex.token_ids, params, ex.spans)
    scores = coreference_scores(spans, params)
    got = marginal_loss(scores, ex.gold).item()
    logits = scores.logits().detach().numpy()
    want = 0.0
    for i, row in enumerate(logits):
        valid = [row[j] for j in range(i + 1)]
        gold = [row[j] for j in range(i + 1) if ex.gold[i, j]]
        want += math.log(sum(map(math.exp, valid))) - math.log(sum(map(math.exp, gold)))
    assert got == pytest.approx(want, rel=1e-12)


def test_gold_mask_and_empty_gold_set():
    spans = [Span(0, 0), Span(1, 1), Span(2, 2)]
    mask = gold_antecedent_mask(spans, [[(0, 0), (2, 2)]])
    assert mask.tolist() == [[True, False, False, False], [True, False, False, False], [False, True, False, False]]
    scores = ScoreMatrix(torch.zeros(3), torch.zeros(3, 3), torch.zeros(3, 3, dtype=torch.float64).masked_fill(
        ~torch.ones(3, 3, dtype=torch.bool).tril(-1), float("-inf")))
    bad = mask.clone()
    bad[1] = False
    with pytest.raises(EmptyGoldSet):
        marginal_loss(scores, bad)


def test_prediction_ties_go_to_dummy_then_earliest():
    n = 3
    s = torch.zeros(n, n, dtype=torch.float64).masked_fill(~torch.ones(n, n, dtype=torch.bool).tril(-1), float("-inf"))
    assert predict_antecedents(ScoreMatrix(torch.zeros(n), torch.zeros(n, n), s)) == [None, None, None]
    s[2, 0] = s[2, 1] = 1.0
    assert predict_antecedents(ScoreMatrix(torch.zeros(n), torch.zeros(n, n), s)) == [None, None, 0]
    spans = [Span(0, 0), Span(1, 1), Span(2, 2)]
    assert antecedents_to_clusters(spans, [None, 0, 1]) == [[(0, 0), (1, 1), (2, 2)]]


def test_epsilon_zero_adversarial_equals_base():
    _, _, params, ex = fixture()
    spans = build_span_set(ex.token_ids, params, ex.spans)
    obj = objective(spans, ex.gold, params, AdvConfig(0.6, 0.0))
    assert abs(obj.adversarial.item() - obj.base.item()) <= 1e-12


def test_perturbation_norms_equal_epsilon():
    _, _, params, ex = fixture()
    spans = build_span_set(ex.token_ids, params, ex.spans)
    delta, _, norms = fgsm_perturbation(spans.g, ex.gold, params, 0.7)
    nonzero = norms > 0
    assert bool(nonzero.any())
    assert torch.allclose(delta[nonzero].norm(dim=1), torch.full((int(nonzero.sum()),), 0.7, dtype=torch.float64),
                          atol=1e-9, rtol=0)
    assert not delta.requires_grad


def test_first_order_expansion():
    for seed in range(4):
        _, _, params, ex = fixture(seed)
        spans = build_span_set(ex.token_ids, params, ex.spans)
        eps = 1e-4
        _, base, norms = fgsm_perturbation(spans.g, ex.gold, params, eps)
        adv = objective(spans, ex.gold, params, AdvConfig(0.6, eps)).adversarial
        predicted = eps * float(norms.sum())
        assert abs(adv.item() - base.item() - predicted) / predicted < 1e-2


def test_total_is_convex_combination():
    _, _, params, ex = fixture()
    spans = build_span_set(ex.token_ids, params, ex.spans)
    obj = objective(spans, ex.gold, params, AdvConfig())
    assert obj.total.item() == 0.6 * obj.base.item() + 0.4 * obj.adversarial.item()


def test_no_gradient_through_perturbation():
    docs, vocab, params, _ = fixture()
    # with delta held fixed, the gradient is the combination of the clean
    # gradients at g and at g + delta
    grads = analytic_gradients(docs, params, vocab, AdvConfig())
    report = gradient_check(docs, params, vocab, AdvConfig(), max_coords_per_group=15)
    assert report.max_relative_error < 1e-5
    assert set(grads) == {n for n, _ in params.named_parameters()}


def test_gradient_check_alpha_one_all_groups():
    docs, vocab, params, _ = fixture()
    report = gradient_check(docs, params, vocab, AdvConfig(1.0, 1.0), max_coords_per_group=10)
    assert set(report.per_group) == set(params.groups())
    assert report.max_relative_error < 1e-5
    assert "max_rel_err" in report.format()


def test_training_reduces_loss_and_is_deterministic():
    docs = make_toy_dataset(4, 1)
    _, _, c1 = train(docs, AdvConfig(), iterations=30, seed=2)
    _, _, c2 = train(docs, AdvConfig(), iterations=30, seed=2)
    assert [c.total for c in c1] == [c.total for c in c2]
    assert c1[-1].total < c1[0].total
    _, _, b = train_baseline(docs, iterations=10, seed=2)
    _, _, a = train(docs, AdvConfig(1.0, 1.0), iterations=10, seed=2)
    assert [c.total for c in a] == [c.total for c in b]


def test_toy_format_round_trip():
    docs = make_toy_dataset(3, 4)
    assert parse_toy(format_toy(docs)) == docs
    text = "# c\ntokens a b c\ncluster 0-0 2-2\n\ntokens d\n"
    parsed = parse_toy(text)
    assert parsed[0].clusters == [[(0, 0), (2, 2)]] and parsed[1].tokens == ["d"]
    for bad in ("tokens a\ncluster 0-3\n", "cluster 0-0\n", "tokens a\nspan 0\n", "tokens a\ncluster x\n"):
        with pytest.raises(ValueError):
            parse_toy(bad)


def test_estimator_api():
    docs = make_toy_dataset(6, 0)
    model = SpanCorefModel(n_iter=60, random_state=3)
    assert model.get_params()["alpha"] == 0.6
    model.set_params(learning_rate=0.2)
    model.fit(docs)
    assert len(model.loss_curve_) == 61 and model.n_iter_ == 60
    preds = model.predict(docs)
    assert len(preds) == len(docs)
    assert 0.0 <= model.score(docs) <= 1.0
    clone = SpanCorefModel(**model.get_params()).fit(docs)
    assert [c.total for c in clone.loss_curve_] == [c.total for c in model.loss_curve_]
    with pytest.raises(TypeError):
        model.fit([["not", "a", "doc"]])
    with pytest.raises(ValueError):
        SpanCorefModel(alpha=2).fit(docs)
