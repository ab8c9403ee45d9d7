"""Full-batch gradient descent and finite-difference gradient checking."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch

from ..exceptions import DivergedLoss, NonFiniteGradient
from .data import ToyDocument
from .model import (
    AdvConfig,
    LossBreakdown,
    ModelParams,
    build_span_set,
    enumerate_spans,
    gold_antecedent_mask,
    marginal_loss,
    coreference_scores,
    objective,
)

__all__ = [
    "Vocabulary",
    "Example",
    "prepare",
    "gradient_descent",
    "train",
    "train_baseline",
    "gradient_check",
    "GradCheckReport",
]

UNK = "<unk>"


class Vocabulary:
    def __init__(self, docs: Sequence[ToyDocument]):
        words = sorted({w.lower() for d in docs for w in d.tokens})
        self.index = {UNK: 0, **{w: i + 1 for i, w in enumerate(words)}}

    def __len__(self):
        return len(self.index)

    def ids(self, tokens: Sequence[str]) -> torch.Tensor:
        return torch.tensor([self.index.get(w.lower(), 0) for w in tokens], dtype=torch.long)


@dataclass
class Example:
    token_ids: torch.Tensor
    spans: list
    gold: torch.Tensor


def prepare(docs: Sequence[ToyDocument], vocab: Vocabulary, max_width: int) -> list[Example]:
    out = []
    for d in docs:
        spans = enumerate_spans(len(d.tokens), max_width)
        out.append(Example(vocab.ids(d.tokens), spans, gold_antecedent_mask(spans, d.clusters)))
    return out


def _batch_objective(examples: Sequence[Example], params: ModelParams, cfg: AdvConfig | None,
                     perturbations=None):
    """Mean loss over documents, summed in document order.

    ``cfg=None`` is the plain base loss with no adversarial pass.
    """
    totals, bases, advs, deltas = [], [], [], []
    for k, ex in enumerate(examples):
        spans = build_span_set(ex.token_ids, params, ex.spans)
        if cfg is None:
            base = marginal_loss(coreference_scores(spans, params), ex.gold)
            totals.append(base)
            bases.append(base)
            continue
        obj = objective(spans, ex.gold, params, cfg, None if perturbations is None else perturbations[k])
        totals.append(obj.total)
        bases.append(obj.base)
        advs.append(obj.adversarial)
        deltas.append(obj.perturbation)
    n = len(examples)
    total = torch.stack(totals).sum() / n
    base = torch.stack(bases).sum() / n
    adv = torch.stack(advs).sum() / n if advs else None
    return total, base, adv, deltas


def gradient_descent(examples, params, cfg, iterations, learning_rate):
    """Fixed-step descent; ``cfg=None`` optimizes the clean loss only."""
    curve: list[LossBreakdown] = []
    for it in range(iterations + 1):
        params.zero_grad(set_to_none=True)
        total, base, adv, _ = _batch_objective(examples, params, cfg)
        if not torch.isfinite(total):
            raise DivergedLoss(f"iteration {it}: total loss {float(total)}")
        b = base.item()
        curve.append(LossBreakdown(b, adv.item() if adv is not None else b, total.item()))
        if it == iterations:
            break
        total.backward()
        with torch.no_grad():
            for p in params.parameters():
                if p.grad is not None:
                    p -= learning_rate * p.grad
    return curve


def train(docs, cfg: AdvConfig | None = None, iterations: int = 200, seed: int = 0,
          learning_rate: float = 0.1, **model_kwargs):
    """Train a fresh model by gradient descent on the objective of ``cfg``.

    Returns ``(params, vocab, curve)``; ``curve[t]`` is the loss before
    update ``t`` and ``curve[-1]`` the loss after the last update.
    """
    if not docs:
        raise ValueError("empty training set")
    cfg = cfg or AdvConfig()
    vocab = Vocabulary(docs)
    params = ModelParams(len(vocab), seed=seed, **model_kwargs)
    examples = prepare(docs, vocab, params.max_width)
    return params, vocab, gradient_descent(examples, params, cfg, iterations, learning_rate)


def train_baseline(docs, iterations: int = 200, seed: int = 0, learning_rate: float = 0.1, **model_kwargs):
    """Same loop on the base loss alone, never computing the adversarial pass."""
    if not docs:
        raise ValueError("empty training set")
    vocab = Vocabulary(docs)
    params = ModelParams(len(vocab), seed=seed, **model_kwargs)
    examples = prepare(docs, vocab, params.max_width)
    return params, vocab, gradient_descent(examples, params, None, iterations, learning_rate)


@dataclass
class GradCheckReport:
    per_group: dict[str, float]
    n_checked: dict[str, int]

    @property
    def max_relative_error(self) -> float:
        return max(self.per_group.values())

    def format(self) -> str:
        lines = [f"{g}: max_rel_err={e:.3e} coords={self.n_checked[g]}" for g, e in self.per_group.items()]
        lines.append(f"max_rel_err={self.max_relative_error:.3e}")
        return "\n".join(lines) + "\n"


def relative_error(a: float, n: float) -> float:
    return abs(a - n) / max(1e-8, abs(a) + abs(n))


def gradient_check(docs, params: ModelParams, vocab: Vocabulary, cfg: AdvConfig | None = None,
                   step: float = 1e-4, max_coords_per_group: int | None = 40, seed: int = 0) -> GradCheckReport:
    """Compare autograd gradients of the total loss with central differences.

    The FGSM perturbation is computed once at the current parameters and held
    fixed while differencing, matching the constant-perturbation gradient.
    Up to ``max_coords_per_group`` coordinates (``None`` for all) of every
    parameter group are checked, picked with ``seed``.

    Raises
    ------
    NonFiniteGradient
        An analytic or numeric derivative is not finite.
    """
    cfg = cfg or AdvConfig()
    examples = prepare(docs, vocab, params.max_width)
    params.zero_grad(set_to_none=True)
    total, _, _, deltas = _batch_objective(examples, params, cfg)
    total.backward()

    def numeric_loss() -> float:
        with torch.no_grad():
            return float(_batch_objective(examples, params, cfg, deltas)[0])

    rng = np.random.default_rng(seed)
    per_group, counts = {}, {}
    for group, named in params.groups().items():
        coords = [(p, i) for _, p in named for i in range(p.numel())]
        if max_coords_per_group is not None and len(coords) > max_coords_per_group:
            pick = rng.choice(len(coords), size=max_coords_per_group, replace=False)
            coords = [coords[j] for j in sorted(pick)]
        worst = 0.0
        for p, i in coords:
            analytic = 0.0 if p.grad is None else float(p.grad.view(-1)[i])
            flat = p.data.view(-1)
            orig = float(flat[i])
            flat[i] = orig + step
            up = numeric_loss()
            flat[i] = orig - step
            down = numeric_loss()
            flat[i] = orig
            numeric = (up - down) / (2 * step)
            if not (math.isfinite(analytic) and math.isfinite(numeric)):
                raise NonFiniteGradient(f"{group}[{i}]: analytic {analytic}, numeric {numeric}")
            worst = max(worst, relative_error(analytic, numeric))
        per_group[group] = worst
        counts[group] = len(coords)
    params.zero_grad(set_to_none=True)
    return GradCheckReport(per_group, counts)


def analytic_gradients(docs, params: ModelParams, vocab: Vocabulary, cfg: AdvConfig | None) -> dict[str, torch.Tensor]:
    """Autograd gradient of the mean objective for every named parameter."""
    examples = prepare(docs, vocab, params.max_width)
    params.zero_grad(set_to_none=True)
    total = _batch_objective(examples, params, cfg)[0]
    total.backward()
    grads = {
        n: (p.grad.clone() if p.grad is not None else torch.zeros_like(p))
        for n, p in params.named_parameters()
    }
    params.zero_grad(set_to_none=True)
    return grads
