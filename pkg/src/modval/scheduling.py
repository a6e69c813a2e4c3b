"""Targeted re-sample planning from contribution vectors.

Two granularities: per-sample integer re-sample counts driven by each
sample's own contribution gaps, and a dataset-level plan that re-samples
the overall lowest-contributing modality with a gap-driven probability
estimated on a random subset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .base import ParamsMixin
from .errors import DimensionMismatch, EmptyDataset, SingleModality
from .maps import MODALITY_PROBABILITY_MAPS, SAMPLE_FREQUENCY_MAPS, MonotoneMap, resolve_map
from .records import ContributionVector, ModalityIndex, SubsetPredictionRecord, as_index
from .valuation import exact_shapley

__all__ = [
    "SampleResamplePlan",
    "ModalityResamplePlan",
    "sample_level_plan",
    "estimate_average_contributions",
    "modality_level_plan",
    "apply_masking",
    "SampleLevelPlanner",
    "ModalityLevelPlanner",
]


@dataclass
class SampleResamplePlan:
    """Per-sample, per-modality nonnegative re-sample counts.

    Samples whose counts are all zero are omitted, so an empty ``counts``
    mapping means nothing is flagged for re-training.
    """

    n: int
    counts: dict[str, np.ndarray]

    def total(self) -> int:
        return int(sum(c.sum() for c in self.counts.values()))

    @property
    def is_empty(self) -> bool:
        return not self.counts

    def iter_entries(self) -> Iterator[tuple[str, int, int]]:
        """Yield (sample_id, modality, count) for every positive count."""
        for sample_id, row in self.counts.items():
            for j in range(self.n):
                if row[j] > 0:
                    yield sample_id, j, int(row[j])


@dataclass(frozen=True)
class ModalityResamplePlan:
    """Dataset-level plan: one target modality and a re-sample probability."""

    target_modality: int
    probability: float
    subset_size: int
    gap: float
    gap_norm: float


def sample_level_plan(
    contributions: Sequence[ContributionVector],
    freq_map: str | MonotoneMap = "linear",
) -> SampleResamplePlan:
    """Integer re-sample counts from per-sample contribution gaps.

    A modality is flagged only when its contribution is strictly below 1;
    the count is the frequency map applied to the gap ``1 - phi`` and
    rounded up, so any positive frequency re-samples at least once.
    """
    if not contributions:
        return SampleResamplePlan(n=0, counts={})
    f_s = resolve_map(freq_map, SAMPLE_FREQUENCY_MAPS)
    n = contributions[0].n
    counts: dict[str, np.ndarray] = {}
    for vec in contributions:
        if vec.n != n:
            raise DimensionMismatch(
                f"record {vec.sample_id!r} has n={vec.n}, expected {n}"
            )
        row = np.zeros(n, dtype=int)
        for j in range(n):
            phi = vec.phi[j]
            if phi < 1.0:
                row[j] = max(0, math.ceil(f_s(1.0 - phi)))
        if row.any():
            counts[vec.sample_id] = row
    return SampleResamplePlan(n=n, counts=counts)


def estimate_average_contributions(
    records: Sequence[SubsetPredictionRecord],
    subset_size: int,
    seed: int = 0,
) -> np.ndarray:
    """Per-modality mean contribution over a random subset of records.

    Draws ``subset_size`` records uniformly without replacement with a
    seeded generator, valuates each exactly, and averages. Evaluation runs
    in sorted index order so the aggregate is independent of draw order.
    """
    if not records:
        raise EmptyDataset("no records to estimate from")
    if not 1 <= subset_size <= len(records):
        raise ValueError(
            f"subset_size must be in [1, {len(records)}], got {subset_size}"
        )
    rng = np.random.default_rng(seed)
    chosen = np.sort(rng.choice(len(records), size=subset_size, replace=False))
    phis = np.stack([exact_shapley(records[i]).phi for i in chosen])
    return phis.mean(axis=0)


def modality_level_plan(
    avg_phi: np.ndarray,
    prob_map: str | MonotoneMap = "identity",
    subset_size: int = 0,
) -> ModalityResamplePlan:
    """Plan for the overall lowest-contributing modality.

    The target is the argmin of the average contributions (lowest index on
    ties). The raw gap ``d`` is the mean shortfall of the target against
    every other modality; it is normalized by the modality count and
    clamped to [0, 1] before the probability map is applied.
    """
    avg_phi = np.asarray(avg_phi, dtype=float)
    n = avg_phi.shape[0]
    if n < 2:
        raise SingleModality("modality-level planning needs n >= 2")
    f_m = resolve_map(prob_map, MODALITY_PROBABILITY_MAPS)
    k = int(np.argmin(avg_phi))
    gap = float((avg_phi.sum() - n * avg_phi[k]) / (n - 1))
    gap_norm = min(max(gap / n, 0.0), 1.0)
    probability = float(f_m(gap_norm))
    if not 0.0 <= probability <= 1.0:
        raise ValueError(
            f"probability map produced {probability} outside [0, 1]; "
            "use a clamped map for probabilities"
        )
    return ModalityResamplePlan(
        target_modality=k,
        probability=probability,
        subset_size=subset_size,
        gap=gap,
        gap_norm=gap_norm,
    )


def apply_masking(
    batch: Sequence[np.ndarray], selected: int | ModalityIndex
) -> list[np.ndarray]:
    """Zero every modality's features except the selected one.

    The selected modality's array is passed through unchanged (same
    object); the others are replaced by zero arrays of the same shape.
    """
    idx = as_index(selected)
    if not 0 <= idx < len(batch):
        raise ValueError(f"selected modality {idx} out of range for {len(batch)} modalities")
    return [
        features if j == idx else np.zeros_like(features)
        for j, features in enumerate(batch)
    ]


class SampleLevelPlanner(ParamsMixin):
    """Transformer from contribution vectors to a per-sample plan."""

    def __init__(self, freq_map: str | MonotoneMap = "linear"):
        self.freq_map = freq_map

    def fit(self, contributions=None, y=None) -> "SampleLevelPlanner":
        resolve_map(self.freq_map, SAMPLE_FREQUENCY_MAPS)
        return self

    def transform(self, contributions: Sequence[ContributionVector]) -> SampleResamplePlan:
        self.fit()
        return sample_level_plan(contributions, self.freq_map)


class ModalityLevelPlanner(ParamsMixin):
    """Estimator that plans dataset-level re-sampling from raw records.

    ``fit`` draws the seeded subset, estimates average contributions, and
    stores the resulting plan on ``plan_``.
    """

    def __init__(
        self,
        prob_map: str | MonotoneMap = "identity",
        subset_fraction: float = 0.2,
        seed: int = 0,
    ):
        self.prob_map = prob_map
        self.subset_fraction = subset_fraction
        self.seed = seed

    def fit(self, records: Sequence[SubsetPredictionRecord], y=None) -> "ModalityLevelPlanner":
        if not 0.0 < self.subset_fraction <= 1.0:
            raise ValueError("subset_fraction must be in (0, 1]")
        if not records:
            raise EmptyDataset("no records to fit on")
        subset_size = max(1, round(self.subset_fraction * len(records)))
        self.avg_phi_ = estimate_average_contributions(records, subset_size, self.seed)
        self.plan_ = modality_level_plan(self.avg_phi_, self.prob_map, subset_size)
        return self
