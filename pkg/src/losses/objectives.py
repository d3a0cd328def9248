"""Training objectives | Cross-entropy, alignment, uniformity and supervised contrastive terms"""

import logging
import math
from dataclasses import asdict, dataclass, field

import torch
import torch.nn.functional as F

from ..errors import ConfigurationError, InputError, ShapeError, UndefinedTermError

logger = logging.getLogger(__name__)

TERMS = ("ce", "alignment", "uniformity", "supcon")


@dataclass
class LossWeights:
    """Per-term weights plus the hyperparameters of the geometric terms"""

    ce: float = 1.0
    alignment: float = 0.0
    uniformity: float = 0.0
    supcon: float = 0.0
    supcon_temperature: float = 0.1
    uniformity_t: float = 2.0
    alignment_alpha: float = 2.0

    def __post_init__(self):
        for term in TERMS:
            if getattr(self, term) < 0:
                raise ConfigurationError(
                    f"loss weight {term} must be >= 0, got {getattr(self, term)}"
                )
        if not any(getattr(self, term) > 0 for term in TERMS):
            raise ConfigurationError("at least one loss weight must be positive")
        for name in ("supcon_temperature", "uniformity_t", "alignment_alpha"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be positive, got {getattr(self, name)}")

    def enabled(self) -> list[str]:
        return [term for term in TERMS if getattr(self, term) > 0]

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class LossBreakdown:
    """Weighted total and the unweighted value of every term that was computed"""

    total: torch.Tensor
    per_term: dict[str, torch.Tensor] = field(default_factory=dict)
    skipped: list[str] = field(default_factory=list)

    def as_record(self) -> dict[str, float]:
        record = {"loss": float(self.total.detach())}
        for name, value in self.per_term.items():
            record[f"loss_{name}"] = float(value.detach())
        return record


def cross_entropy(logits: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    """Mean negative log-likelihood of the true class under softmax"""
    if logits.ndim != 2 or logits.shape[1] != 2:
        raise ShapeError(f"logits must be B x 2, got {tuple(logits.shape)}")
    if labels.shape != (logits.shape[0],):
        raise ShapeError(f"{logits.shape[0]} logit rows but labels of shape {tuple(labels.shape)}")
    if logits.shape[0] == 0:
        raise InputError("cross-entropy needs at least one sample")
    _check_binary(labels)
    return F.cross_entropy(logits, labels.long())


def alignment_loss(
    features: torch.Tensor, labels: torch.Tensor, alpha: float = 2.0
) -> torch.Tensor:
    """Mean of ||x_i - x_j||^alpha over same-class pairs i < j"""
    _check_features(features, labels)
    sq = _pairwise_sq_distances(features)
    pairs = _upper_pairs(len(features), features.device) & (labels[:, None] == labels[None, :])
    if not bool(pairs.any()):
        raise UndefinedTermError("alignment needs at least one same-class pair")

    sq = sq[pairs]
    if alpha == 2.0:
        return sq.mean()

    # pow of an exact zero has an infinite derivative when alpha < 2
    positive = sq > 0
    safe = torch.where(positive, sq, torch.ones_like(sq))
    return torch.where(positive, safe.pow(alpha / 2.0), torch.zeros_like(sq)).mean()


def uniformity_loss(features: torch.Tensor, t: float = 2.0) -> torch.Tensor:
    """log of the mean Gaussian kernel exp(-t ||x_i - x_j||^2) over all pairs i < j"""
    if features.ndim != 2:
        raise ShapeError(f"features must be B x D, got {tuple(features.shape)}")
    if features.shape[0] < 2:
        raise UndefinedTermError("uniformity needs at least two samples")

    sq = _pairwise_sq_distances(features)[_upper_pairs(len(features), features.device)]
    return torch.logsumexp(-t * sq, dim=0) - math.log(sq.numel())


def supcon_loss(
    features: torch.Tensor, labels: torch.Tensor, temperature: float = 0.1
) -> torch.Tensor:
    """Supervised contrastive loss averaged over anchors that have a positive.

    Candidates for every anchor are all other rows of the batch.
    """
    _check_features(features, labels)
    rows = features.shape[0]
    eye = torch.eye(rows, dtype=torch.bool, device=features.device)

    similarity = features @ features.t() / temperature
    log_norm = torch.logsumexp(similarity.masked_fill(eye, float("-inf")), dim=1, keepdim=True)
    log_prob = similarity - log_norm

    positives = (labels[:, None] == labels[None, :]) & ~eye
    counts = positives.sum(dim=1)
    anchors = counts > 0
    if not bool(anchors.any()):
        raise UndefinedTermError("supervised contrastive loss needs an anchor with a positive")

    per_anchor = -(log_prob * positives).sum(dim=1)[anchors] / counts[anchors]
    return per_anchor.mean()


def composite(
    logits: torch.Tensor,
    features: torch.Tensor,
    labels: torch.Tensor,
    weights: LossWeights,
) -> LossBreakdown:
    """Weighted sum of the enabled terms; zero-weight terms are never computed"""
    if logits.shape[0] != features.shape[0]:
        raise ShapeError(f"{logits.shape[0]} logit rows but {features.shape[0]} feature rows")

    builders = {
        "ce": lambda: cross_entropy(logits, labels),
        "alignment": lambda: alignment_loss(features, labels, weights.alignment_alpha),
        "uniformity": lambda: uniformity_loss(features, weights.uniformity_t),
        "supcon": lambda: supcon_loss(features, labels, weights.supcon_temperature),
    }

    per_term: dict[str, torch.Tensor] = {}
    skipped: list[str] = []
    total = None
    for term in weights.enabled():
        try:
            value = builders[term]()
        except UndefinedTermError as exc:
            logger.warning("Skipping %s term: %s", term, exc)
            skipped.append(term)
            continue
        per_term[term] = value
        weighted = getattr(weights, term) * value
        total = weighted if total is None else total + weighted

    if total is None:
        raise UndefinedTermError(f"every enabled loss term was undefined: {', '.join(skipped)}")

    return LossBreakdown(total=total, per_term=per_term, skipped=skipped)


def _pairwise_sq_distances(features: torch.Tensor) -> torch.Tensor:
    sq_norms = (features * features).sum(dim=1)
    gram = features @ features.t()
    return (sq_norms[:, None] + sq_norms[None, :] - 2.0 * gram).clamp_min(0.0)


def _upper_pairs(rows: int, device: torch.device) -> torch.Tensor:
    return torch.ones(rows, rows, dtype=torch.bool, device=device).triu(diagonal=1)


def _check_binary(labels: torch.Tensor) -> None:
    if labels.numel() and not bool(((labels == 0) | (labels == 1)).all()):
        raise InputError(f"labels must be 0 (real) or 1 (fake), got {sorted(set(labels.tolist()))}")


def _check_features(features: torch.Tensor, labels: torch.Tensor) -> None:
    if features.ndim != 2:
        raise ShapeError(f"features must be B x D, got {tuple(features.shape)}")
    if labels.shape != (features.shape[0],):
        raise ShapeError(
            f"{features.shape[0]} feature rows but labels of shape {tuple(labels.shape)}"
        )
