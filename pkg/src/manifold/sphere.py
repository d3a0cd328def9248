"""Hypersphere | L2 projection, spherical interpolation, same-class latent augmentation"""

import logging
import math
from typing import Literal, Optional

import torch

from ..errors import DegenerateFeatureError, PreconditionError
from .head import FeatureBatch

logger = logging.getLogger(__name__)

MIN_ROW_NORM = 1e-12
PARALLEL_ANGLE = 1e-6
PARALLEL_COS = math.cos(PARALLEL_ANGLE)
ANTIPODAL_GAP = 1e-12
UNIT_TOLERANCE = 1e-4

SlerpMode = Literal["replace", "append"]


def l2_normalize(features: torch.Tensor) -> torch.Tensor:
    """Project every row onto the unit hypersphere"""
    norms = features.norm(dim=-1, keepdim=True)
    if features.numel() and bool((norms < MIN_ROW_NORM).any()):
        bad = int((norms.squeeze(-1) < MIN_ROW_NORM).sum())
        raise DegenerateFeatureError(f"{bad} feature row(s) have norm below {MIN_ROW_NORM}")
    return features / norms


def slerp(x_i: torch.Tensor, x_j: torch.Tensor, t: torch.Tensor | float) -> torch.Tensor:
    """Geodesic interpolation between unit vectors, broadcast over leading dims.

    Computed in float64 and cast back. Near-parallel pairs (angle below 1e-6)
    fall back to lerp; exact antipodes have no unique geodesic and raise.
    The result is always renormalized.
    """
    if x_i.shape != x_j.shape:
        raise PreconditionError(f"slerp endpoints differ in shape: {x_i.shape} vs {x_j.shape}")

    out_dtype = x_i.dtype
    a = x_i.double()
    b = x_j.double()
    for name, v in (("x_i", a), ("x_j", b)):
        norms = v.norm(dim=-1)
        if not torch.allclose(norms, torch.ones_like(norms), atol=UNIT_TOLERANCE, rtol=0.0):
            raise PreconditionError(f"slerp requires unit vectors, {name} has norms off the sphere")

    t = torch.as_tensor(t, dtype=torch.float64, device=a.device)
    if bool(((t < 0) | (t > 1)).any()):
        raise PreconditionError("interpolation parameter t must lie in [0, 1]")
    t = t.unsqueeze(-1) if t.ndim else t

    cos = (a * b).sum(dim=-1, keepdim=True).clamp(-1.0, 1.0)
    if bool((cos <= -1.0 + ANTIPODAL_GAP).any()):
        raise DegenerateFeatureError("antipodal slerp endpoints have no unique geodesic")

    parallel = cos > PARALLEL_COS
    # arccos and 1/sin(theta) blow up at cos = 1; feed the discarded branch a harmless value
    theta = torch.arccos(torch.where(parallel, torch.zeros_like(cos), cos))
    sin_theta = torch.sin(theta)

    spherical = torch.sin((1.0 - t) * theta) / sin_theta * a + torch.sin(t * theta) / sin_theta * b
    linear = (1.0 - t) * a + t * b
    mixed = torch.where(parallel, linear, spherical)

    return (mixed / mixed.norm(dim=-1, keepdim=True)).to(out_dtype)


def sample_same_class_partners(
    labels: torch.Tensor, generator: Optional[torch.Generator] = None
) -> torch.Tensor:
    """For each row pick a uniformly random other row of the same label (-1 if none)"""
    partners = torch.full_like(labels, -1)

    for label in torch.unique(labels).tolist():
        members = torch.nonzero(labels == label, as_tuple=False).squeeze(1)
        count = members.numel()
        if count < 2:
            continue

        # draw from count - 1 slots and skip over self
        draws = torch.randint(0, count - 1, (count,), generator=generator).to(labels.device)
        positions = torch.arange(count, device=labels.device)
        draws = draws + (draws >= positions).long()
        partners[members] = members[draws]

    return partners


def slerp_augment_batch(
    batch: FeatureBatch,
    generator: Optional[torch.Generator] = None,
    mode: SlerpMode = "replace",
    pairing_log: Optional[list[tuple[int, int]]] = None,
) -> FeatureBatch:
    """Replace (or extend) each row by slerp towards a random same-class partner.

    Rows whose class has no other member pass through unchanged. When
    pairing_log is given, every (row, partner) pair used is appended to it.
    """
    if not batch.normalized:
        raise PreconditionError("slerp augmentation needs an L2-normalized feature batch")
    if mode not in ("replace", "append"):
        raise ValueError(f"Unknown slerp mode: {mode}")
    if len(batch) == 0:
        return batch

    partners = sample_same_class_partners(batch.labels.cpu(), generator).to(batch.labels.device)
    rows = torch.nonzero(partners >= 0, as_tuple=False).squeeze(1)
    t = torch.rand(rows.numel(), generator=generator).to(batch.features.device)

    if pairing_log is not None:
        pairing_log.extend(zip(rows.tolist(), partners[rows].tolist()))

    if rows.numel() == 0:
        logger.debug("No same-class pairs in batch of %d, slerp skipped", len(batch))
        return batch

    mixed = slerp(batch.features[rows], batch.features[partners[rows]], t)

    if mode == "replace":
        features = batch.features.clone()
        features[rows] = mixed
        return FeatureBatch(
            features=features,
            labels=batch.labels,
            video_ids=list(batch.video_ids),
            normalized=True,
        )

    index = rows.tolist()
    return FeatureBatch(
        features=torch.cat([batch.features, mixed], dim=0),
        labels=torch.cat([batch.labels, batch.labels[rows]], dim=0),
        video_ids=list(batch.video_ids) + [batch.video_ids[i] for i in index],
        normalized=True,
    )
