"""Span-ranking coreference scorer with an adversarial loss on span vectors.

A document is encoded token by token (embedding lookup followed by a
one-layer bidirectional tanh RNN) into vectors ``x``. Every candidate span
``(start, end)`` is represented by

    g = [x_start, x_end, sum_j a_j x_j, width_embedding(end - start)]

where ``a`` is the softmax of a learned per-token head score over the span.
The mention scorer and the pairwise antecedent scorer (fed
``[g_i, g_j, g_i * g_j]``) are small tanh feed-forward networks. Span ``i``
scores an earlier span ``j`` with ``s_m(i) + s_m(j) + s_a(i, j)`` and the
dummy antecedent with 0.

The base loss is the negative marginal log-likelihood of the gold
antecedents. The adversarial loss evaluates the same loss after moving every
span vector by ``epsilon`` along its own normalized loss gradient, which is
held constant (no gradient flows through the perturbation).

All tensors are float64.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import torch
from torch import nn

from ..conll_io import Span
from ..exceptions import EmptyGoldSet, WidthOverflow
from ..utils.validation import check_interval

__all__ = [
    "DTYPE",
    "AdvConfig",
    "ModelParams",
    "SpanSet",
    "ScoreMatrix",
    "LossBreakdown",
    "Objective",
    "encode_tokens",
    "enumerate_spans",
    "span_representation",
    "span_representations",
    "build_span_set",
    "coreference_scores",
    "predict_antecedents",
    "antecedents_to_clusters",
    "gold_antecedent_mask",
    "marginal_loss",
    "fgsm_perturbation",
    "adversarial_loss",
    "total_loss",
    "objective",
]

DTYPE = torch.float64


@dataclass(frozen=True)
class AdvConfig:
    alpha: float = 0.6
    epsilon: float = 1.0

    def __post_init__(self):
        check_interval(self.alpha, "alpha", 0.0, 1.0)
        check_interval(self.epsilon, "epsilon", 0.0)


class ModelParams(nn.Module):
    """All trainable parameters, one submodule per parameter group."""

    def __init__(
        self,
        vocab_size: int,
        embedding_dim: int = 8,
        hidden_dim: int = 4,
        width_dim: int = 4,
        ffnn_dim: int = 8,
        max_width: int = 5,
        seed: int = 0,
        init_scale: float = 0.5,
    ):
        super().__init__()
        self.max_width = max_width
        d_x = 2 * hidden_dim
        d_g = 3 * d_x + width_dim
        self.token_embed = nn.Embedding(vocab_size, embedding_dim)
        self.context_mixer = nn.RNN(embedding_dim, hidden_dim, batch_first=True, bidirectional=True)
        self.head_scores = nn.Linear(d_x, 1)
        self.width_embed = nn.Embedding(max_width + 1, width_dim)
        self.mention_scorer = nn.Sequential(nn.Linear(d_g, ffnn_dim), nn.Tanh(), nn.Linear(ffnn_dim, 1))
        self.antecedent_scorer = nn.Sequential(
            nn.Linear(3 * d_g, ffnn_dim), nn.Tanh(), nn.Linear(ffnn_dim, 1)
        )
        self.to(DTYPE)
        gen = torch.Generator().manual_seed(seed)
        with torch.no_grad():
            for p in self.parameters():
                fan_in = p.shape[-1] if p.dim() > 1 else 1
                p.copy_(torch.randn(p.shape, generator=gen, dtype=DTYPE) * init_scale / fan_in**0.5)

    @property
    def span_dim(self) -> int:
        return 3 * 2 * self.context_mixer.hidden_size + self.width_embed.embedding_dim

    def groups(self) -> dict[str, list[tuple[str, nn.Parameter]]]:
        out: dict[str, list] = {}
        for name, p in self.named_parameters():
            out.setdefault(name.split(".")[0], []).append((name, p))
        return out


@dataclass
class SpanSet:
    spans: list[Span]
    g: torch.Tensor

    def __post_init__(self):
        if self.g.shape[0] != len(self.spans):
            raise ValueError("one span vector per span is required")

    def __len__(self):
        return len(self.spans)


@dataclass
class ScoreMatrix:
    """Scores of one document.

    ``coreference[i, j]`` is ``-inf`` for ``j >= i``. :meth:`logits` puts the
    dummy (fixed 0) in column 0 and earlier span ``j`` in column ``j + 1``.
    """

    mention: torch.Tensor
    antecedent: torch.Tensor
    coreference: torch.Tensor

    def logits(self) -> torch.Tensor:
        dummy = torch.zeros(self.coreference.shape[0], 1, dtype=self.coreference.dtype)
        return torch.cat([dummy, self.coreference], dim=1)


@dataclass
class LossBreakdown:
    base: float
    adversarial: float
    total: float
    per_span_grad_norms: list[float] = field(default_factory=list)


# ---------------------------------------------------------------- representation


def encode_tokens(token_ids: torch.Tensor, params: ModelParams) -> torch.Tensor:
    """Contextual token vectors ``x`` of shape ``(n, 2 * hidden_dim)``."""
    emb = params.token_embed(token_ids).unsqueeze(0)
    out, _ = params.context_mixer(emb)
    return out.squeeze(0)


def enumerate_spans(n_tokens: int, max_width: int) -> list[Span]:
    """All spans with width ``end - start <= max_width``, ordered by (start, end)."""
    return [Span(s, e) for s in range(n_tokens) for e in range(s, min(n_tokens, s + max_width + 1))]


def span_representations(x: torch.Tensor, spans: Sequence[Span], params: ModelParams) -> torch.Tensor:
    n = x.shape[0]
    starts = torch.tensor([s.start for s in spans], dtype=torch.long)
    ends = torch.tensor([s.end for s in spans], dtype=torch.long)
    widths = ends - starts
    if len(spans) and int(widths.max()) > params.max_width:
        raise WidthOverflow(f"span width {int(widths.max())} exceeds {params.max_width}")
    if len(spans) and (int(ends.max()) >= n or int(starts.min()) < 0):
        raise ValueError("span outside the encoded tokens")
    offsets = torch.arange(params.max_width + 1)
    idx = (starts[:, None] + offsets[None, :]).clamp(max=n - 1)
    inside = offsets[None, :] <= widths[:, None]
    head = params.head_scores(x).squeeze(-1)[idx].masked_fill(~inside, float("-inf"))
    weights = torch.softmax(head, dim=1)
    pooled = (weights.unsqueeze(-1) * x[idx]).sum(dim=1)
    return torch.cat([x[starts], x[ends], pooled, params.width_embed(widths)], dim=1)


def span_representation(x: torch.Tensor, span: Span, params: ModelParams) -> torch.Tensor:
    """Vector of one span; length ``3 * x.shape[1] + width_dim``."""
    return span_representations(x, [span], params)[0]


def build_span_set(token_ids: torch.Tensor, params: ModelParams, spans: Sequence[Span] | None = None) -> SpanSet:
    x = encode_tokens(token_ids, params)
    spans = list(spans) if spans is not None else enumerate_spans(len(token_ids), params.max_width)
    return SpanSet(spans, span_representations(x, spans, params))


# ---------------------------------------------------------------- scoring


def coreference_scores(g: torch.Tensor | SpanSet, params: ModelParams) -> ScoreMatrix:
    if isinstance(g, SpanSet):
        g = g.g
    n = g.shape[0]
    s_m = params.mention_scorer(g).squeeze(-1)
    gi = g.unsqueeze(1).expand(n, n, -1)
    gj = g.unsqueeze(0).expand(n, n, -1)
    s_a = params.antecedent_scorer(torch.cat([gi, gj, gi * gj], dim=-1)).squeeze(-1)
    earlier = torch.ones(n, n, dtype=torch.bool).tril(diagonal=-1)
    s = (s_m[:, None] + s_m[None, :] + s_a).masked_fill(~earlier, float("-inf"))
    return ScoreMatrix(s_m, s_a, s)


def predict_antecedents(scores: ScoreMatrix) -> list[int | None]:
    """Best antecedent per span, ``None`` for the dummy.

    Ties go to the dummy, then to the earliest span.
    """
    logits = scores.logits().detach()
    out = []
    for row in logits:
        best = int(torch.argmax(row))  # first maximal index
        out.append(None if best == 0 else best - 1)
    return out


def antecedents_to_clusters(spans: Sequence[Span], antecedents: Sequence[int | None]) -> list[list[tuple[int, int]]]:
    """Follow antecedent links into clusters of ``(start, end)`` spans."""
    cluster_of: dict[int, int] = {}
    clusters: list[list[int]] = []
    for i, a in enumerate(antecedents):
        if a is None:
            continue
        if a not in cluster_of:
            cluster_of[a] = len(clusters)
            clusters.append([a])
        cluster_of[i] = cluster_of[a]
        clusters[cluster_of[a]].append(i)
    return [[(spans[i].start, spans[i].end) for i in c] for c in clusters]


def gold_antecedent_mask(spans: Sequence[Span], clusters: Sequence[Sequence[tuple[int, int]]]) -> torch.Tensor:
    """Boolean ``(N, N + 1)`` mask of gold antecedents, dummy in column 0."""
    position = {(s.start, s.end): i for i, s in enumerate(spans)}
    cluster_of = {}
    for cid, cluster in enumerate(clusters):
        for m in cluster:
            if tuple(m) in position:
                cluster_of[position[tuple(m)]] = cid
    n = len(spans)
    mask = torch.zeros(n, n + 1, dtype=torch.bool)
    for i in range(n):
        c = cluster_of.get(i)
        earlier = [j for j in range(i) if c is not None and cluster_of.get(j) == c]
        if earlier:
            mask[i, [j + 1 for j in earlier]] = True
        else:
            mask[i, 0] = True
    return mask


def marginal_loss(scores: ScoreMatrix, gold: torch.Tensor) -> torch.Tensor:
    """``-sum_i log(sum_{gold} exp(s) / sum_{all} exp(s))``.

    Raises
    ------
    EmptyGoldSet
        Some span has no gold antecedent, not even the dummy.
    """
    logits = scores.logits()
    if gold.shape != logits.shape:
        raise ValueError(f"gold mask shape {tuple(gold.shape)} != scores {tuple(logits.shape)}")
    if not bool(gold.any(dim=1).all()):
        raise EmptyGoldSet("every span needs a non-empty gold antecedent set")
    valid = torch.isfinite(logits)
    if bool((gold & ~valid).any()):
        raise ValueError("gold antecedent is not an earlier span")
    gold_logits = logits.masked_fill(~gold, float("-inf"))
    return (torch.logsumexp(logits, dim=1) - torch.logsumexp(gold_logits, dim=1)).sum()


# ---------------------------------------------------------------- adversarial


def fgsm_perturbation(g: torch.Tensor, gold: torch.Tensor, params: ModelParams, epsilon: float):
    """Per-span perturbation ``epsilon * grad_i / ||grad_i||`` (zero where the gradient is zero).

    Returns the detached perturbation, the base loss as a graph-free tensor
    and the per-span gradient norms.
    """
    g_const = g.detach().requires_grad_(True)
    base = marginal_loss(coreference_scores(g_const, params), gold)
    (grad,) = torch.autograd.grad(base, g_const)
    norms = grad.norm(dim=1)
    scale = torch.where(norms > 0, epsilon / norms, torch.zeros_like(norms))
    return (grad * scale[:, None]).detach(), base.detach(), norms.detach()


def adversarial_loss(spans: SpanSet, gold: torch.Tensor, params: ModelParams, epsilon: float) -> torch.Tensor:
    """Base loss evaluated at the FGSM-perturbed span vectors."""
    delta, _, _ = fgsm_perturbation(spans.g, gold, params, epsilon)
    return marginal_loss(coreference_scores(spans.g + delta, params), gold)


@dataclass
class Objective:
    """Differentiable pieces of one document's total loss."""

    base: torch.Tensor
    adversarial: torch.Tensor
    total: torch.Tensor
    perturbation: torch.Tensor
    grad_norms: torch.Tensor

    def breakdown(self) -> LossBreakdown:
        return LossBreakdown(
            self.base.item(), self.adversarial.item(), self.total.item(), self.grad_norms.tolist()
        )


def objective(spans: SpanSet, gold: torch.Tensor, params: ModelParams, cfg: AdvConfig,
              perturbation: torch.Tensor | None = None) -> Objective:
    """``alpha * L(g) + (1 - alpha) * L(g + delta)``.

    ``perturbation`` overrides the FGSM step, e.g. to hold it fixed while
    differencing parameters.
    """
    base = marginal_loss(coreference_scores(spans.g, params), gold)
    if perturbation is None:
        perturbation, _, norms = fgsm_perturbation(spans.g, gold, params, cfg.epsilon)
    else:
        norms = torch.full((len(spans),), float("nan"), dtype=DTYPE)
    adv = marginal_loss(coreference_scores(spans.g + perturbation, params), gold)
    total = cfg.alpha * base + (1 - cfg.alpha) * adv
    return Objective(base, adv, total, perturbation, norms)


def total_loss(spans: SpanSet, gold: torch.Tensor, params: ModelParams, cfg: AdvConfig | None = None) -> LossBreakdown:
    return objective(spans, gold, params, cfg or AdvConfig()).breakdown()
