"""Contribution-gap-driven coefficients for three gradient/loss modulation schemes.

Each adapter turns per-modality contribution gaps (g = 1 - contribution)
into the scalar knobs of a host training scheme: a gradient coefficient,
a pair of uni-modal loss weights, or a re-balancing window size. The
adapters compute coefficients only; running them inside a training loop
is the simulator's job.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DegenerateGaps, NonPositiveHyperparam

__all__ = [
    "ContributionGap",
    "OgmGeCoefficients",
    "GBlendingWeights",
    "GreedyWindow",
    "ogm_ge_coeff",
    "g_blending_weights",
    "greedy_window",
]


@dataclass(frozen=True)
class ContributionGap:
    """Gaps of a two-modality setup: g = 1 - contribution, unclamped."""

    g_u: float
    g_v: float

    @classmethod
    def from_contributions(cls, s_u: float, s_v: float) -> "ContributionGap":
        return cls(1.0 - s_u, 1.0 - s_v)


@dataclass(frozen=True)
class OgmGeCoefficients:
    k_u: float
    k_v: float
    alpha: float
    beta: float


@dataclass(frozen=True)
class GBlendingWeights:
    w_uv: float
    w_u: float
    w_v: float
    alpha: float

    def __post_init__(self):
        total = self.w_uv + self.w_u + self.w_v
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"loss weights must sum to 1, got {total}")


@dataclass(frozen=True)
class GreedyWindow:
    size: int
    lam: float
    alpha: float


def ogm_ge_coeff(gap_mean: float, alpha: float, beta: float = 0.1) -> float:
    """Gradient coefficient for one modality from its batch-mean gap.

    1 + tanh(alpha * beta * g) when the gap is positive (gently boost a
    low-contributing modality), otherwise 1 + tanh(alpha * g) (damp a
    modality already contributing above 1). beta shrinks the boost so the
    dominant branch stays the damping one.
    """
    if alpha <= 0:
        raise NonPositiveHyperparam(f"alpha must be positive, got {alpha}")
    if beta <= 0:
        raise NonPositiveHyperparam(f"beta must be positive, got {beta}")
    if gap_mean > 0:
        return 1.0 + math.tanh(alpha * beta * gap_mean)
    return 1.0 + math.tanh(alpha * gap_mean)


def g_blending_weights(
    w_uv: float, gap_u: float, gap_v: float, alpha: float = 1.0
) -> tuple[float, float]:
    """Uni-modal loss weights (w_u, w_v) given the joint-loss weight.

    The two uni-modal weights share the budget ``1 - w_uv``. The modality
    with the larger dataset-mean gap receives the larger share: the share
    ratio rho = smaller_gap / (gap_u + gap_v) is raised to ``alpha`` and
    assigned to the better-off modality. Equal gaps split the budget evenly.
    """
    if not 0.0 <= w_uv <= 1.0:
        raise ValueError(f"w_uv must lie in [0, 1], got {w_uv}")
    if alpha <= 0:
        raise NonPositiveHyperparam(f"alpha must be positive, got {alpha}")
    budget = 1.0 - w_uv
    if gap_u == gap_v:
        return budget / 2.0, budget / 2.0
    total = gap_u + gap_v
    if total == 0:
        raise DegenerateGaps("gap_u + gap_v == 0: share ratio undefined")
    if gap_u > gap_v:
        w_v = (gap_v / total) ** alpha * budget
        w_u = budget - w_v
    else:
        w_u = (gap_u / total) ** alpha * budget
        w_v = budget - w_u
    return w_u, w_v


def greedy_window(
    gap_u: float, gap_v: float, lam: float, alpha: float
) -> int:
    """Re-balancing window size from the absolute gap discrepancy.

    floor(lam * tanh(alpha * |gap_u - gap_v|)); 0 means no re-balancing
    step is inserted. Bounded above by lam.
    """
    if lam <= 0:
        raise NonPositiveHyperparam(f"lam must be positive, got {lam}")
    if alpha <= 0:
        raise NonPositiveHyperparam(f"alpha must be positive, got {alpha}")
    return int(math.floor(lam * math.tanh(alpha * abs(gap_u - gap_v))))
