"""Domain types: modality subsets, per-sample prediction records, contribution vectors.

A modality coalition is encoded as a plain integer bit pattern: bit ``i``
set means modality ``i`` is part of the coalition. The empty coalition is
``0`` and is always valid; it never carries a prediction entry because its
benefit is zero by definition.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

import numpy as np

from .errors import MissingSubset, TooManyModalities

MAX_MODALITIES = 16


def full_mask(n: int) -> int:
    """Bit pattern of the grand coalition over ``n`` modalities."""
    return (1 << n) - 1


def mask_size(mask: int) -> int:
    """Coalition cardinality |C| (population count of the bit pattern)."""
    return int(mask).bit_count()


def mask_from_indices(indices: Iterable[int], n: int) -> int:
    mask = 0
    for i in indices:
        if not 0 <= i < n:
            raise ValueError(f"modality index {i} out of range for n={n}")
        mask |= 1 << i
    return mask


def indices_from_mask(mask: int) -> tuple[int, ...]:
    return tuple(i for i in range(int(mask).bit_length()) if mask >> i & 1)


def iter_nonempty_masks(n: int) -> Iterator[int]:
    return iter(range(1, 1 << n))


def validate_mask(mask: int, n: int) -> int:
    if not 1 <= n <= MAX_MODALITIES:
        raise TooManyModalities(f"n={n} outside supported range 1..{MAX_MODALITIES}")
    if not 0 <= mask < (1 << n):
        raise ValueError(f"mask {mask:#b} invalid for n={n}")
    return mask


@dataclass(frozen=True)
class ModalityIndex:
    """One input channel, identified by position and a short display name."""

    index: int
    name: str

    def __post_init__(self):
        if self.index < 0:
            raise ValueError("modality index must be nonnegative")


def build_modalities(names: Iterable[str]) -> tuple[ModalityIndex, ...]:
    """Index a list of display names, enforcing uniqueness."""
    names = list(names)
    if len(set(names)) != len(names):
        raise ValueError(f"modality names not unique: {names}")
    return tuple(ModalityIndex(i, name) for i, name in enumerate(names))


def as_index(modality: int | ModalityIndex) -> int:
    return modality.index if isinstance(modality, ModalityIndex) else int(modality)


@dataclass(frozen=True)
class SubsetPredictionRecord:
    """Predicted label of one sample for every evaluated modality coalition.

    ``predictions`` maps coalition bit patterns to predicted class ids. An
    exact-mode record covers all ``2^n - 1`` nonempty coalitions; partial
    records arise when only sampled coalitions were probed.
    """

    sample_id: str
    true_label: int
    n: int
    predictions: Mapping[int, int]

    def __post_init__(self):
        if not 1 <= self.n <= MAX_MODALITIES:
            raise TooManyModalities(
                f"n={self.n} outside supported range 1..{MAX_MODALITIES}"
            )
        limit = 1 << self.n
        for mask in self.predictions:
            if mask == 0:
                raise ValueError("the empty coalition must not carry a prediction")
            if not 0 < mask < limit:
                raise ValueError(f"mask {mask} invalid for n={self.n}")

    @property
    def is_exact(self) -> bool:
        return len(self.predictions) == (1 << self.n) - 1

    def require_exact(self) -> None:
        if not self.is_exact:
            missing = [m for m in iter_nonempty_masks(self.n) if m not in self.predictions]
            raise MissingSubset(
                f"record {self.sample_id!r}: {len(missing)} coalition(s) missing, "
                f"first absent mask {missing[0]:#b}"
            )

    def benefit_array(self) -> np.ndarray:
        """Dense benefit table v over all ``2^n`` coalitions (exact mode only).

        ``v[mask]`` is |C| when the coalition predicted the true label and 0
        otherwise; ``v[0]`` is 0 unconditionally.
        """
        self.require_exact()
        v = np.zeros(1 << self.n)
        for mask, label in self.predictions.items():
            if label == self.true_label:
                v[mask] = mask_size(mask)
        return v


@dataclass(frozen=True, eq=False)
class ContributionVector:
    """Per-modality contribution shares of one sample's prediction benefit.

    ``phi`` sums to ``grand_benefit`` (the full-coalition benefit) in exact
    mode. Monte-Carlo vectors carry the permutation count, the seed and a
    per-modality standard error; the standard error is ``None`` for the
    degenerate single-permutation estimate.
    """

    sample_id: str
    phi: np.ndarray
    grand_benefit: float
    method: str = "exact"
    num_permutations: int | None = None
    seed: int | None = None
    std_error: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "phi", np.asarray(self.phi, dtype=float))
        if self.std_error is not None:
            object.__setattr__(
                self, "std_error", np.asarray(self.std_error, dtype=float)
            )

    @property
    def n(self) -> int:
        return self.phi.shape[0]

    def method_label(self) -> str:
        """Single-token method descriptor used in the contributions CSV."""
        if self.method == "exact":
            return "exact"
        return f"monte_carlo(m={self.num_permutations};seed={self.seed})"
