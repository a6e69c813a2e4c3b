"""Machine checks of the removal-gap bound and the enhancement-gain claim.

Works on small dense benefit tables where every check can be exhaustive:
a brute-force permutation oracle for contributions, a per-modality bound
check ``v(N) - v(N \\ {k}) <= n * phi_k`` on admissible tables, a
Monte-Carlo estimate of the expected contribution gain from enhancing one
modality's stand-alone benefit, and a sweep over every correctness table
for small n.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InadmissibleTable
from .records import SubsetPredictionRecord, full_mask, mask_size
from .valuation import shapley_from_benefits

__all__ = [
    "BenefitTable",
    "permutation_shapley",
    "check_removal_gap_bound",
    "RemovalGapReport",
    "simulate_enhancement_gain",
    "EnhancementGainReport",
    "sweep_all_tables",
    "TableSweepReport",
]


@dataclass(frozen=True)
class BenefitTable:
    """Correctness of every nonempty coalition, with derived benefits.

    ``correct[mask]`` says whether the coalition predicted the true label;
    index 0 is ignored (the empty coalition is worth 0 regardless).
    """

    n: int
    correct: tuple[bool, ...]

    def __post_init__(self):
        if len(self.correct) != 1 << self.n:
            raise ValueError(
                f"correctness table must have 2^n = {1 << self.n} entries, "
                f"got {len(self.correct)}"
            )

    @classmethod
    def from_index(cls, n: int, table_index: int) -> "BenefitTable":
        """Decode table number ``table_index`` over the 2^(2^n - 1) tables.

        Bit ``m - 1`` of the index is the correctness of nonempty mask ``m``.
        """
        num_nonempty = (1 << n) - 1
        if not 0 <= table_index < (1 << num_nonempty):
            raise ValueError(f"table index {table_index} out of range for n={n}")
        correct = (False,) + tuple(
            bool(table_index >> (m - 1) & 1) for m in range(1, 1 << n)
        )
        return cls(n=n, correct=correct)

    def value(self, mask: int) -> float:
        if mask == 0:
            return 0.0
        return float(mask_size(mask)) if self.correct[mask] else 0.0

    def benefit_array(self) -> np.ndarray:
        v = np.zeros(1 << self.n)
        for mask in range(1, 1 << self.n):
            if self.correct[mask]:
                v[mask] = mask_size(mask)
        return v

    @property
    def admissible(self) -> bool:
        """True when no modality ever lowers the benefit by joining."""
        v = self.benefit_array()
        masks = np.arange(1 << self.n)
        for i in range(self.n):
            bit = 1 << i
            without = masks[(masks & bit) == 0]
            if np.any(v[without | bit] < v[without]):
                return False
        return True

    def to_record(self, sample_id: str = "table") -> SubsetPredictionRecord:
        """Equivalent prediction record (label 0; wrong coalitions predict 1)."""
        return SubsetPredictionRecord(
            sample_id=sample_id,
            true_label=0,
            n=self.n,
            predictions={
                mask: 0 if self.correct[mask] else 1
                for mask in range(1, 1 << self.n)
            },
        )


def permutation_shapley(table: BenefitTable) -> np.ndarray:
    """Reference contributions by literal enumeration of all n! join orders.

    Kept deliberately independent of the subset-weighted fast path so the
    two can cross-check each other.
    """
    n = table.n
    phi = np.zeros(n)
    for perm in itertools.permutations(range(n)):
        mask = 0
        prev = 0.0
        for i in perm:
            mask |= 1 << i
            value = table.value(mask)
            phi[i] += value - prev
            prev = value
    return phi / math.factorial(n)


@dataclass(frozen=True)
class RemovalGapReport:
    """Per-modality slack of ``v(N) - v(N \\ {k}) <= n * phi_k``."""

    n: int
    phi: np.ndarray
    removal_gaps: np.ndarray  # v(N) - v(N \ {k})
    bounds: np.ndarray  # n * phi_k
    violations: tuple[int, ...]

    @property
    def passed(self) -> bool:
        return not self.violations

    @property
    def slack(self) -> np.ndarray:
        return self.bounds - self.removal_gaps


def check_removal_gap_bound(table: BenefitTable) -> RemovalGapReport:
    """Verify the removal-gap bound for every modality of an admissible table.

    Preconditions: all marginal contributions non-negative and the full
    coalition correct (v(N) = n). Tables failing either raise
    InadmissibleTable instead of being silently skipped.
    """
    v = table.benefit_array()
    grand = full_mask(table.n)
    if v[grand] != table.n:
        raise InadmissibleTable(
            f"bound check needs v(N) = n = {table.n}, got {v[grand]}"
        )
    if not table.admissible:
        raise InadmissibleTable("table has negative marginal contributions")
    phi = shapley_from_benefits(v)
    removal_gaps = np.array(
        [v[grand] - v[grand & ~(1 << k)] for k in range(table.n)]
    )
    bounds = table.n * phi
    violations = tuple(
        k for k in range(table.n) if removal_gaps[k] > bounds[k] + 1e-9
    )
    return RemovalGapReport(
        n=table.n,
        phi=phi,
        removal_gaps=removal_gaps,
        bounds=bounds,
        violations=violations,
    )


@dataclass(frozen=True)
class EnhancementGainReport:
    """Monte-Carlo estimate of the expected contribution gain."""

    n: int
    trials: int
    seed: int
    enhanced: bool
    estimate: float
    std_error: float

    @property
    def significantly_positive(self) -> bool:
        return self.estimate > 3.0 * self.std_error

    @property
    def consistent_with_zero(self) -> bool:
        return abs(self.estimate) <= 3.0 * self.std_error

    def summary(self) -> str:
        verdict = (
            "positive at 3 sigma"
            if self.significantly_positive
            else "not distinguishable from zero"
            if self.consistent_with_zero
            else "negative at 3 sigma"
        )
        return (
            f"n={self.n} trials={self.trials} enhanced={self.enhanced}: "
            f"E[gain] = {self.estimate:.6f} +- {self.std_error:.6f} ({verdict})"
        )


def simulate_enhancement_gain(
    n: int, trials: int, seed: int = 0, enhanced: bool = True
) -> EnhancementGainReport:
    """Estimate the expected contribution change of one enhanced modality.

    Generative model, per trial: for every join order, when the tracked
    modality joins at position c >= 2 its pre- and post-enhancement
    marginal benefits are drawn independently and uniformly from {0, 1, c},
    so the expected change at those positions is zero. When it joins first,
    its marginal benefit is its stand-alone benefit; enhancement forces
    that benefit to rise (0 before, 1 after), contributing the entire
    expected gain. With ``enhanced=False`` the first position changes
    nothing and the expectation collapses to 0.

    Returns the mean contribution change over trials with its standard
    error. Deterministic given the seed.
    """
    if n < 2:
        raise ValueError("enhancement simulation needs n >= 2")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    perms_per_position = math.factorial(n - 1)
    total_perms = math.factorial(n)
    diff_sum = np.zeros(trials)
    if enhanced:
        diff_sum += perms_per_position  # forced 0 -> 1 at every first-position order
    for position in range(2, n + 1):
        outcomes = np.array([0.0, 1.0, float(position)])
        shape = (trials, perms_per_position)
        before = outcomes[rng.integers(0, 3, size=shape)]
        after = outcomes[rng.integers(0, 3, size=shape)]
        diff_sum += (after - before).sum(axis=1)
    diffs = diff_sum / total_perms
    estimate = float(diffs.mean())
    std_error = float(diffs.std(ddof=1) / math.sqrt(trials)) if trials > 1 else float("nan")
    return EnhancementGainReport(
        n=n,
        trials=trials,
        seed=seed,
        enhanced=enhanced,
        estimate=estimate,
        std_error=std_error,
    )


@dataclass
class TableSweepReport:
    """Aggregate outcome of checking every correctness table for one n."""

    n: int
    total_tables: int = 0
    efficiency_failures: int = 0
    equivalence_failures: int = 0
    admissible_tables: int = 0
    inadmissible_tables: int = 0
    full_benefit_admissible: int = 0
    bound_violations: int = 0
    checked_modalities: int = 0

    @property
    def passed(self) -> bool:
        return (
            self.efficiency_failures == 0
            and self.equivalence_failures == 0
            and self.bound_violations == 0
        )

    def summary(self) -> str:
        return (
            f"{self.total_tables} tables, {self.bound_violations} violations "
            f"(efficiency failures: {self.efficiency_failures}, "
            f"oracle mismatches: {self.equivalence_failures}, "
            f"admissible: {self.admissible_tables}, "
            f"inadmissible: {self.inadmissible_tables}, "
            f"full-benefit admissible: {self.full_benefit_admissible})"
        )


def sweep_all_tables(n: int) -> TableSweepReport:
    """Check every correctness table over n <= 3 modalities.

    Per table: efficiency of the fast contributions, agreement with the
    permutation oracle, and the removal-gap bound on admissible tables
    whose full coalition is correct. Inadmissible tables are counted, not
    skipped silently.
    """
    if n > 3:
        raise ValueError("exhaustive sweep supports n <= 3")
    report = TableSweepReport(n=n)
    grand = full_mask(n)
    for index in range(1 << ((1 << n) - 1)):
        table = BenefitTable.from_index(n, index)
        report.total_tables += 1
        v = table.benefit_array()
        phi = shapley_from_benefits(v)
        if abs(phi.sum() - v[grand]) > 1e-9:
            report.efficiency_failures += 1
        if np.max(np.abs(phi - permutation_shapley(table))) > 1e-12:
            report.equivalence_failures += 1
        if not table.admissible:
            report.inadmissible_tables += 1
            continue
        report.admissible_tables += 1
        if v[grand] == n:
            report.full_benefit_admissible += 1
            gap_report = check_removal_gap_bound(table)
            report.checked_modalities += n
            report.bound_violations += len(gap_report.violations)
    return report
