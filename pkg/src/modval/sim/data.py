"""Synthetic multi-modal classification data.

Each modality of each class is a Gaussian blob: class means sit on
orthonormal directions scaled by ``separation * noise_std``, with
isotropic noise on top. Per-modality separations control how
discriminative each channel is. Two heterogeneity regimes: dataset-biased
(one modality is globally the most separable) and sample-mixed (every
sample has its own randomly drawn dominant modality).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

DATASET_BIASED = "dataset_biased"
SAMPLE_MIXED = "sample_mixed"


@dataclass(frozen=True)
class SyntheticSpec:
    n_modalities: int = 2
    num_classes: int = 8
    train_samples: int = 1000
    test_samples: int = 1000
    feature_dims: tuple[int, ...] = (16, 96)
    separation: tuple[float, ...] = (3.0, 1.2)
    noise_std: float = 1.0
    mode: str = DATASET_BIASED
    seed: int = 0
    modality_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if self.mode not in (DATASET_BIASED, SAMPLE_MIXED):
            raise ValueError(f"unknown mode {self.mode!r}")
        if len(self.feature_dims) != self.n_modalities:
            raise ValueError("feature_dims must list one dim per modality")
        if len(self.separation) != self.n_modalities:
            raise ValueError("separation must list one scale per modality")
        if any(s <= 0 for s in self.separation):
            raise ValueError("separation scales must be positive")
        if any(d < self.num_classes for d in self.feature_dims):
            raise ValueError("feature dims must be >= num_classes")
        if self.noise_std <= 0:
            raise ValueError("noise_std must be positive")
        if self.mode == DATASET_BIASED and self.separation[0] != max(self.separation):
            raise ValueError("dataset-biased mode puts the largest separation on modality 0")
        if self.modality_names and len(self.modality_names) != self.n_modalities:
            raise ValueError("modality_names must list one name per modality")

    @property
    def names(self) -> tuple[str, ...]:
        if self.modality_names:
            return self.modality_names
        return tuple(f"m{i}" for i in range(self.n_modalities))


@dataclass
class MultiModalDataset:
    spec: SyntheticSpec
    train_features: list[np.ndarray]
    train_labels: np.ndarray
    test_features: list[np.ndarray]
    test_labels: np.ndarray
    train_dominant: np.ndarray | None = None
    test_dominant: np.ndarray | None = None

    @property
    def n_modalities(self) -> int:
        return self.spec.n_modalities

    @property
    def num_train(self) -> int:
        return self.train_labels.shape[0]

    def train_ids(self) -> list[str]:
        return [f"train-{i:05d}" for i in range(self.num_train)]


def _class_directions(rng: np.random.Generator, dim: int, classes: int) -> np.ndarray:
    """(classes, dim) orthonormal rows; QR sign fixed for determinism."""
    q, r = np.linalg.qr(rng.standard_normal((dim, classes)))
    q = q * np.sign(np.diag(r))
    return q[:, :classes].T


def generate_dataset(spec: SyntheticSpec) -> MultiModalDataset:
    """Sample a dataset for ``spec``; deterministic given ``spec.seed``."""
    rng = np.random.default_rng(spec.seed)
    directions = [
        _class_directions(rng, dim, spec.num_classes) for dim in spec.feature_dims
    ]
    splits = {}
    dominants = {}
    for split, count in (("train", spec.train_samples), ("test", spec.test_samples)):
        labels = rng.integers(0, spec.num_classes, size=count)
        if spec.mode == SAMPLE_MIXED:
            dominant = rng.integers(0, spec.n_modalities, size=count)
            s_strong, s_weak = max(spec.separation), min(spec.separation)
        else:
            dominant = None
        features = []
        for i in range(spec.n_modalities):
            if spec.mode == SAMPLE_MIXED:
                scales = np.where(dominant == i, s_strong, s_weak)
            else:
                scales = np.full(count, spec.separation[i])
            means = directions[i][labels] * (scales * spec.noise_std)[:, np.newaxis]
            noise = rng.standard_normal((count, spec.feature_dims[i]))
            features.append(means + spec.noise_std * noise)
        splits[split] = (features, labels)
        dominants[split] = dominant
    return MultiModalDataset(
        spec=spec,
        train_features=splits["train"][0],
        train_labels=splits["train"][1],
        test_features=splits["test"][0],
        test_labels=splits["test"][1],
        train_dominant=dominants["train"],
        test_dominant=dominants["test"],
    )


def take_batch(features: Sequence[np.ndarray], indices: np.ndarray) -> list[np.ndarray]:
    return [f[indices] for f in features]
