"""Benefit function, marginal contributions, and exact / Monte-Carlo attribution.

The benefit of feeding a modality coalition C to a classifier is |C| when
the prediction is correct and 0 otherwise. A modality's contribution is its
average marginal benefit over all join orders; by the efficiency property
the contributions of one sample always sum to the grand-coalition benefit,
which is ``n`` for a correctly predicted sample and 0 otherwise.
"""

from __future__ import annotations

import math
from typing import Callable, Iterable, Sequence

import numpy as np

from .base import ParamsMixin
from .errors import MissingSubset, TooManyModalities
from .records import (
    MAX_MODALITIES,
    ContributionVector,
    ModalityIndex,
    SubsetPredictionRecord,
    as_index,
    full_mask,
    mask_size,
    validate_mask,
)

__all__ = [
    "benefit",
    "marginal_contribution",
    "exact_shapley",
    "monte_carlo_shapley",
    "check_nonneg_marginals",
    "record_oracle",
    "shapley_from_benefits",
    "shapley_from_benefit_matrix",
    "subset_weights",
    "ModalityValuator",
]


def benefit(mask: int, record: SubsetPredictionRecord) -> float:
    """Benefit v(C) of coalition ``mask`` for one sample.

    Returns |C| if the recorded prediction matches the true label, else 0.
    The empty coalition is worth 0 unconditionally and needs no entry.
    """
    validate_mask(mask, record.n)
    if mask == 0:
        return 0.0
    try:
        predicted = record.predictions[mask]
    except KeyError:
        raise MissingSubset(
            f"record {record.sample_id!r} has no prediction for mask {mask:#b}"
        ) from None
    return float(mask_size(mask)) if predicted == record.true_label else 0.0


def marginal_contribution(
    record: SubsetPredictionRecord,
    modality: int | ModalityIndex,
    predecessors: int,
) -> float:
    """Benefit gained when ``modality`` joins the ``predecessors`` coalition.

    May be negative: adding a modality can flip a correct prediction to a
    wrong one, dropping the benefit to zero.
    """
    i = as_index(modality)
    validate_mask(predecessors, record.n)
    bit = 1 << i
    if predecessors & bit:
        raise ValueError(f"modality {i} already in predecessor set")
    return benefit(predecessors | bit, record) - benefit(predecessors, record)


def subset_weights(n: int) -> np.ndarray:
    """Attribution weight |S|!(n-|S|-1)!/n! indexed by predecessor-set size."""
    fact = [math.factorial(k) for k in range(n + 1)]
    return np.array([fact[s] * fact[n - s - 1] / fact[n] for s in range(n)])


def shapley_from_benefits(v: np.ndarray) -> np.ndarray:
    """Contribution vector from a dense benefit table of length ``2^n``."""
    return shapley_from_benefit_matrix(np.asarray(v, dtype=float)[np.newaxis, :])[0]


def shapley_from_benefit_matrix(v: np.ndarray) -> np.ndarray:
    """Row-wise contributions for a batch of dense benefit tables.

    ``v`` has shape (batch, 2^n) with ``v[:, 0] == 0``. Uses the
    subset-weighted sum over coalitions, which matches averaging marginal
    contributions over all n! join orders but needs only 2^n table entries.
    """
    v = np.asarray(v, dtype=float)
    size = v.shape[1]
    n = size.bit_length() - 1
    if 1 << n != size:
        raise ValueError(f"benefit table length {size} is not a power of two")
    if n > MAX_MODALITIES:
        raise TooManyModalities(f"n={n} exceeds exact-mode limit {MAX_MODALITIES}")
    masks = np.arange(size)
    sizes = np.bitwise_count(masks)
    weights = subset_weights(n)
    phi = np.empty((v.shape[0], n))
    for i in range(n):
        bit = 1 << i
        without = masks[(masks & bit) == 0]
        w = weights[sizes[without]]
        phi[:, i] = (v[:, without | bit] - v[:, without]) @ w
    return phi


def exact_shapley(record: SubsetPredictionRecord) -> ContributionVector:
    """Exact contribution vector of one sample from a complete record.

    Requires all ``2^n - 1`` nonempty coalitions to be present and
    ``n <= 16``. Deterministic; efficiency holds up to float additions.
    """
    v = record.benefit_array()
    phi = shapley_from_benefits(v)
    return ContributionVector(
        sample_id=record.sample_id,
        phi=phi,
        grand_benefit=float(v[full_mask(record.n)]),
        method="exact",
    )


def record_oracle(record: SubsetPredictionRecord) -> Callable[[int], float]:
    """Benefit callable backed by a record, for the Monte-Carlo estimator."""
    return lambda mask: benefit(mask, record)


def monte_carlo_shapley(
    oracle: Callable[[int], float],
    n: int,
    num_permutations: int,
    seed: int,
    sample_id: str = "",
) -> ContributionVector:
    """Permutation-sampling estimate of the contribution vector.

    Draws ``num_permutations`` uniformly random join orders from a seeded
    generator and averages the marginal benefit of each modality. The
    benefit of the empty coalition is taken as 0 without consulting the
    oracle. Each probed coalition is evaluated once and memoised, so the
    oracle call count is the number of distinct prefixes encountered.

    Returns the estimate with a per-modality standard error
    (sample std / sqrt(m)); the standard error is ``None`` when m == 1.
    Deterministic given (seed, num_permutations).
    """
    if num_permutations < 1:
        raise ValueError("num_permutations must be >= 1")
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    perms = rng.permuted(
        np.tile(np.arange(n), (num_permutations, 1)), axis=1
    )
    # Permutation entries are distinct bits, so the running sum of bit
    # values equals the running bitwise OR of the prefix coalition.
    prefixes = np.cumsum(1 << perms, axis=1)
    unique = np.unique(prefixes)
    values = np.array([float(oracle(int(mask))) for mask in unique])
    v_prefix = values[np.searchsorted(unique, prefixes)]
    deltas = np.diff(np.concatenate([np.zeros((num_permutations, 1)), v_prefix], axis=1), axis=1)
    contrib = np.zeros((num_permutations, n))
    rows = np.arange(num_permutations)[:, np.newaxis]
    contrib[rows, perms] = deltas
    phi = contrib.mean(axis=0)
    if num_permutations > 1:
        std_error = contrib.std(axis=0, ddof=1) / math.sqrt(num_permutations)
    else:
        std_error = None
    return ContributionVector(
        sample_id=sample_id,
        phi=phi,
        grand_benefit=float(values[-1]),  # full coalition ends every prefix walk
        method="monte_carlo",
        num_permutations=num_permutations,
        seed=seed,
        std_error=std_error,
    )


def check_nonneg_marginals(
    record: SubsetPredictionRecord,
) -> list[tuple[int, int]]:
    """All (modality, predecessor-mask) pairs with a negative marginal.

    An empty list means the non-negative-marginal assumption behind the
    removal-gap bound holds for this sample.
    """
    v = record.benefit_array()
    masks = np.arange(1 << record.n)
    violations = []
    for i in range(record.n):
        bit = 1 << i
        without = masks[(masks & bit) == 0]
        bad = without[v[without | bit] < v[without]]
        violations.extend((i, int(s)) for s in bad)
    return violations


class ModalityValuator(ParamsMixin):
    """Estimator-style front end over the attribution routines.

    Stateless: ``fit`` only validates parameters, ``transform`` maps
    prediction records to contribution vectors. With
    ``method="monte_carlo"`` the record's own predictions back the benefit
    oracle, so any coalition probed by a sampled join order must be present
    in the record.
    """

    def __init__(self, method: str = "exact", num_permutations: int = 200, seed: int = 0):
        self.method = method
        self.num_permutations = num_permutations
        self.seed = seed

    def fit(self, records=None, y=None) -> "ModalityValuator":
        if self.method not in ("exact", "monte_carlo"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.method == "monte_carlo" and self.num_permutations < 1:
            raise ValueError("num_permutations must be >= 1")
        return self

    def valuate(self, record: SubsetPredictionRecord) -> ContributionVector:
        self.fit()
        if self.method == "exact":
            return exact_shapley(record)
        return monte_carlo_shapley(
            record_oracle(record),
            record.n,
            self.num_permutations,
            self.seed,
            sample_id=record.sample_id,
        )

    def transform(
        self, records: Iterable[SubsetPredictionRecord]
    ) -> list[ContributionVector]:
        return [self.valuate(record) for record in records]

    def fit_transform(self, records: Sequence[SubsetPredictionRecord], y=None):
        return self.fit(records).transform(records)
