"""Warm-up -> valuate -> re-sample training loop with baselines and
modulation variants.

One run: minibatch SGD over the synthetic dataset; from the end of the
warm-up onward every epoch is valuated (zero-masked forward passes over
every modality coalition, per training sample) and the chosen strategy
schedules extra targeted steps for the next epoch. Matched-volume
baselines re-sample the same number of items as the targeted plan, either
uniformly at random (naive) or aimed at each sample's highest-contributing
modality (reversed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, TextIO

import numpy as np

from ..base import ParamsMixin
from ..errors import NonFiniteLoss, UnsupportedModalityCount
from ..maps import MODALITY_PROBABILITY_MAPS, SAMPLE_FREQUENCY_MAPS, MonotoneMap, resolve_map
from ..modulation import g_blending_weights, greedy_window, ogm_ge_coeff
from ..scheduling import modality_level_plan
from ..valuation import shapley_from_benefit_matrix
from .data import MultiModalDataset, take_batch
from .model import ModelConfig, MultiModalNet, SGDMomentum

RESAMPLE_STRATEGIES = (
    "baseline",
    "sample_level",
    "modality_level",
    "naive_resample",
    "reversed_resample",
    "fixed_rate",
)
MODULATION_SCHEMES = ("ogm_ge", "g_blending", "greedy")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 35
    warmup_epochs: int = 5
    batch_size: int = 32
    learning_rate: float = 1e-3
    momentum: float = 0.9
    strategy: str = "baseline"
    freq_map: str | MonotoneMap = "linear"
    prob_map: str | MonotoneMap = "identity"
    subset_fraction: float = 0.2
    fixed_rate: float = 1.0
    resample_lr_scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not 0 <= self.warmup_epochs < self.epochs:
            raise ValueError("warmup_epochs must satisfy 0 <= warmup < epochs")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")
        if self.strategy not in RESAMPLE_STRATEGIES:
            raise ValueError(
                f"unknown strategy {self.strategy!r}; choose from {RESAMPLE_STRATEGIES}"
            )
        if not 0.0 < self.subset_fraction <= 1.0:
            raise ValueError("subset_fraction must be in (0, 1]")
        if self.fixed_rate <= 0:
            raise ValueError("fixed_rate must be positive")
        resolve_map(self.freq_map, SAMPLE_FREQUENCY_MAPS)
        resolve_map(self.prob_map, MODALITY_PROBABILITY_MAPS)


@dataclass(frozen=True)
class ModulationConfig:
    scheme: str
    alpha: float = 1.0
    beta: float = 0.1
    w_uv: float = 0.4
    lam: float = 10.0

    def __post_init__(self):
        if self.scheme not in MODULATION_SCHEMES:
            raise ValueError(
                f"unknown scheme {self.scheme!r}; choose from {MODULATION_SCHEMES}"
            )


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    train_accuracy: float
    test_accuracy: float
    avg_phi: np.ndarray | None
    resample_counts: np.ndarray
    planned_volume: int = 0
    modulation: dict | None = None


@dataclass
class TrainRunReport:
    strategy: str
    seed: int
    n_modalities: int
    modality_names: tuple[str, ...]
    epochs: list[EpochStats] = field(default_factory=list)
    model: "MultiModalNet | None" = field(default=None, repr=False)

    @property
    def final(self) -> EpochStats:
        return self.epochs[-1]

    @property
    def final_avg_phi(self) -> np.ndarray:
        return self.final.avg_phi

    @property
    def final_test_accuracy(self) -> float:
        return self.final.test_accuracy

    def to_csv(self, file: TextIO) -> None:
        n = self.n_modalities
        header = (
            ["epoch", "train_accuracy", "test_accuracy"]
            + [f"phi_{j}" for j in range(n)]
            + [f"resamples_{j}" for j in range(n)]
        )
        file.write(",".join(header) + "\n")
        for s in self.epochs:
            phi = (
                [repr(float(x)) for x in s.avg_phi]
                if s.avg_phi is not None
                else ["nan"] * n
            )
            row = (
                [str(s.epoch), repr(float(s.train_accuracy)), repr(float(s.test_accuracy))]
                + phi
                + [str(int(c)) for c in s.resample_counts]
            )
            file.write(",".join(row) + "\n")


def masked_features(features: Sequence[np.ndarray], mask: int) -> list[np.ndarray]:
    return [
        f if (mask >> i) & 1 else np.zeros_like(f) for i, f in enumerate(features)
    ]


def benefit_matrix(
    model: MultiModalNet, features: Sequence[np.ndarray], labels: np.ndarray
) -> np.ndarray:
    """Dense benefit tables, one row per sample, via zero-masked forwards."""
    n = len(features)
    v = np.zeros((labels.shape[0], 1 << n))
    for mask in range(1, 1 << n):
        preds = model.predict(masked_features(features, mask))
        v[:, mask] = mask.bit_count() * (preds == labels)
    return v


def valuate_model(
    model: MultiModalNet, features: Sequence[np.ndarray], labels: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample contribution matrix and full-input correctness flags."""
    v = benefit_matrix(model, features, labels)
    phi = shapley_from_benefit_matrix(v)
    n = len(features)
    full_correct = v[:, (1 << n) - 1] > 0
    return phi, full_correct


def _accuracy(model: MultiModalNet, features, labels) -> float:
    return float((model.predict(features) == labels).mean())


def _epoch_pass(
    model: MultiModalNet,
    opt: SGDMomentum,
    features,
    labels,
    order: np.ndarray,
    batch_size: int,
    context: str,
    loss_weights: tuple[float, ...] | None = None,
    grad_hook: Callable | None = None,
    lr_scale: float = 1.0,
) -> float:
    losses = []
    for start in range(0, order.shape[0], batch_size):
        idx = order[start : start + batch_size]
        batch = take_batch(features, idx)
        batch_labels = labels[idx]
        loss, grads = model.loss_and_grads(batch, batch_labels, loss_weights)
        if not math.isfinite(loss):
            raise NonFiniteLoss(
                f"{context}: non-finite loss {loss} at step {start // batch_size}"
            )
        if grad_hook is not None:
            grad_hook(batch, batch_labels, grads)
        opt.step(grads, lr_scale)
        losses.append(loss)
    return float(np.mean(losses)) if losses else float("nan")


def _sample_counts(
    phi: np.ndarray, f_s: MonotoneMap, fixed_rate: float | None = None
) -> np.ndarray:
    """Per-sample re-sample counts for every strictly-below-1 contribution."""
    flagged = phi < 1.0
    if fixed_rate is not None:
        counts = np.where(flagged, math.ceil(fixed_rate), 0)
        return counts.astype(int)
    gaps = np.where(flagged, 1.0 - phi, 0.0)
    freq = np.vectorize(f_s, otypes=[float])(gaps)
    counts = np.where(flagged, np.ceil(freq), 0.0)
    return np.maximum(counts, 0.0).astype(int)


def _build_pending(
    cfg: TrainConfig,
    phi: np.ndarray,
    rng: np.random.Generator,
) -> tuple[dict[int, np.ndarray], int]:
    """Strategy-specific (modality -> sample indices) work for next epoch.

    Returns the expanded index lists plus the matched-volume reference
    (the targeted plan's total), which naive/reversed redistribute.
    """
    num_samples, n = phi.shape
    f_s = resolve_map(cfg.freq_map, SAMPLE_FREQUENCY_MAPS)
    pending: dict[int, np.ndarray] = {}
    if cfg.strategy == "baseline":
        return pending, 0
    if cfg.strategy == "modality_level":
        subset = max(1, round(cfg.subset_fraction * num_samples))
        chosen = np.sort(rng.choice(num_samples, size=subset, replace=False))
        plan = modality_level_plan(phi[chosen].mean(axis=0), cfg.prob_map, subset)
        draws = rng.random(num_samples) < plan.probability
        idx = np.flatnonzero(draws)
        if idx.size:
            pending[plan.target_modality] = idx
        return pending, int(idx.size)

    counts = _sample_counts(
        phi, f_s, cfg.fixed_rate if cfg.strategy == "fixed_rate" else None
    )
    volume = int(counts.sum())
    if cfg.strategy in ("sample_level", "fixed_rate"):
        for j in range(n):
            idx = np.repeat(np.arange(num_samples), counts[:, j])
            if idx.size:
                pending[j] = idx
    elif cfg.strategy == "naive_resample":
        samples = rng.integers(0, num_samples, size=volume)
        modalities = rng.integers(0, n, size=volume)
        for j in range(n):
            idx = samples[modalities == j]
            if idx.size:
                pending[j] = idx
    elif cfg.strategy == "reversed_resample":
        per_sample = counts.sum(axis=1)
        targets = np.argmax(phi, axis=1)
        for j in range(n):
            idx = np.repeat(
                np.flatnonzero(targets == j), per_sample[targets == j]
            )
            if idx.size:
                pending[j] = idx
    return pending, volume


def _execute_pending(
    model: MultiModalNet,
    opt: SGDMomentum,
    dataset: MultiModalDataset,
    pending: dict[int, np.ndarray],
    cfg: TrainConfig,
    rng: np.random.Generator,
    epoch: int,
) -> np.ndarray:
    """Run the queued single-modality steps; other modalities zero-masked."""
    executed = np.zeros(dataset.n_modalities, dtype=int)
    for j in sorted(pending):
        idx = rng.permutation(pending[j])
        for start in range(0, idx.shape[0], cfg.batch_size):
            chunk = idx[start : start + cfg.batch_size]
            batch = masked_features(take_batch(dataset.train_features, chunk), 1 << j)
            loss, grads = model.loss_and_grads(batch, dataset.train_labels[chunk])
            if not math.isfinite(loss):
                raise NonFiniteLoss(
                    f"re-sample epoch {epoch}: non-finite loss {loss}"
                )
            opt.step(grads, cfg.resample_lr_scale)
        executed[j] = idx.shape[0]
    return executed


def train(
    dataset: MultiModalDataset,
    model_config: ModelConfig | None = None,
    train_config: TrainConfig | None = None,
) -> TrainRunReport:
    """Run one strategy end to end; deterministic given the config seed."""
    cfg = train_config or TrainConfig()
    mconfig = model_config or ModelConfig()
    init_ss, loop_ss = np.random.SeedSequence(cfg.seed).spawn(2)
    model = MultiModalNet(
        mconfig, dataset.spec.feature_dims, dataset.spec.num_classes, seed=init_ss
    )
    opt = SGDMomentum(model.params, cfg.learning_rate, cfg.momentum)
    rng = np.random.default_rng(loop_ss)
    report = TrainRunReport(
        strategy=cfg.strategy,
        seed=cfg.seed,
        n_modalities=dataset.n_modalities,
        modality_names=dataset.spec.names,
    )
    pending: dict[int, np.ndarray] = {}
    planned_volume = 0
    num_train = dataset.num_train
    for epoch in range(cfg.epochs):
        order = rng.permutation(num_train)
        mean_loss = _epoch_pass(
            model,
            opt,
            dataset.train_features,
            dataset.train_labels,
            order,
            cfg.batch_size,
            context=f"epoch {epoch}",
        )
        executed = np.zeros(dataset.n_modalities, dtype=int)
        if pending:
            executed = _execute_pending(model, opt, dataset, pending, cfg, rng, epoch)
            pending = {}
        if epoch + 1 >= max(cfg.warmup_epochs, 1):
            phi, full_correct = valuate_model(
                model, dataset.train_features, dataset.train_labels
            )
            avg_phi = phi.mean(axis=0)
            train_acc = float(full_correct.mean())
            if epoch + 1 < cfg.epochs:  # no point scheduling past the last epoch
                pending, planned_volume = _build_pending(cfg, phi, rng)
            else:
                planned_volume = 0
        else:
            avg_phi = None
            train_acc = _accuracy(model, dataset.train_features, dataset.train_labels)
        test_acc = _accuracy(model, dataset.test_features, dataset.test_labels)
        report.epochs.append(
            EpochStats(
                epoch=epoch,
                train_loss=mean_loss,
                train_accuracy=train_acc,
                test_accuracy=test_acc,
                avg_phi=avg_phi,
                resample_counts=executed,
                planned_volume=planned_volume,
            )
        )
    report.model = model
    return report


def run_modulated(
    dataset: MultiModalDataset,
    model_config: ModelConfig | None = None,
    train_config: TrainConfig | None = None,
    modulation: ModulationConfig | str = "ogm_ge",
) -> TrainRunReport:
    """Training loop variant that modulates instead of re-sampling.

    The scheme's coefficients are driven by contribution gaps: per-batch
    gradient coefficients (ogm_ge), per-epoch blended loss weights
    (g_blending), or per-epoch re-balancing windows on the lagging
    modality (greedy). Two modalities only.
    """
    if dataset.n_modalities != 2:
        raise UnsupportedModalityCount(
            f"modulated training supports exactly 2 modalities, got {dataset.n_modalities}"
        )
    cfg = train_config or TrainConfig()
    mod = (
        modulation
        if isinstance(modulation, ModulationConfig)
        else ModulationConfig(scheme=modulation)
    )
    mconfig = model_config or ModelConfig()
    if mod.scheme == "g_blending" and not mconfig.unimodal_heads:
        mconfig = ModelConfig(
            encoder=mconfig.encoder,
            embed_dim=mconfig.embed_dim,
            hidden_dim=mconfig.hidden_dim,
            activation=mconfig.activation,
            unimodal_heads=True,
        )
    init_ss, loop_ss = np.random.SeedSequence(cfg.seed).spawn(2)
    model = MultiModalNet(
        mconfig, dataset.spec.feature_dims, dataset.spec.num_classes, seed=init_ss
    )
    opt = SGDMomentum(model.params, cfg.learning_rate, cfg.momentum)
    rng = np.random.default_rng(loop_ss)
    report = TrainRunReport(
        strategy=f"modulated:{mod.scheme}",
        seed=cfg.seed,
        n_modalities=2,
        modality_names=dataset.spec.names,
    )
    avg_phi_prev: np.ndarray | None = None
    num_train = dataset.num_train
    for epoch in range(cfg.epochs):
        order = rng.permutation(num_train)
        trace: dict = {}
        loss_weights = None
        grad_hook = None
        if mod.scheme == "ogm_ge":
            coeffs: list[tuple[float, float]] = []

            def grad_hook(batch, batch_labels, grads):
                v = benefit_matrix(model, batch, batch_labels)
                batch_phi = shapley_from_benefit_matrix(v)
                gaps = 1.0 - batch_phi.mean(axis=0)
                k = (
                    ogm_ge_coeff(gaps[0], mod.alpha, mod.beta),
                    ogm_ge_coeff(gaps[1], mod.alpha, mod.beta),
                )
                for i in (0, 1):
                    for name in grads:
                        if name.startswith(f"enc{i}_"):
                            grads[name] *= k[i]
                coeffs.append(k)

            trace["coefficients"] = coeffs
        elif mod.scheme == "g_blending":
            budget = 1.0 - mod.w_uv
            if avg_phi_prev is None:
                w_u = w_v = budget / 2.0
            else:
                w_u, w_v = g_blending_weights(
                    mod.w_uv, 1.0 - avg_phi_prev[0], 1.0 - avg_phi_prev[1], mod.alpha
                )
            loss_weights = (mod.w_uv, w_u, w_v)
            trace["loss_weights"] = loss_weights
        mean_loss = _epoch_pass(
            model,
            opt,
            dataset.train_features,
            dataset.train_labels,
            order,
            cfg.batch_size,
            context=f"epoch {epoch} ({mod.scheme})",
            loss_weights=loss_weights,
            grad_hook=grad_hook,
        )
        if mod.scheme == "greedy" and avg_phi_prev is not None:
            gaps = 1.0 - avg_phi_prev
            window = greedy_window(gaps[0], gaps[1], mod.lam, mod.alpha)
            lagging = int(np.argmin(avg_phi_prev))
            trace["window"] = window
            trace["lagging"] = lagging
            for _ in range(window):
                idx = rng.integers(0, num_train, size=cfg.batch_size)
                batch = masked_features(take_batch(dataset.train_features, idx), 1 << lagging)
                loss, grads = model.loss_and_grads(batch, dataset.train_labels[idx])
                if not math.isfinite(loss):
                    raise NonFiniteLoss(f"greedy step epoch {epoch}: loss {loss}")
                opt.step(grads)
        if epoch + 1 >= max(cfg.warmup_epochs, 1):
            phi, full_correct = valuate_model(
                model, dataset.train_features, dataset.train_labels
            )
            avg_phi = phi.mean(axis=0)
            train_acc = float(full_correct.mean())
            avg_phi_prev = avg_phi
        else:
            avg_phi = None
            train_acc = _accuracy(model, dataset.train_features, dataset.train_labels)
        test_acc = _accuracy(model, dataset.test_features, dataset.test_labels)
        report.epochs.append(
            EpochStats(
                epoch=epoch,
                train_loss=mean_loss,
                train_accuracy=train_acc,
                test_accuracy=test_acc,
                avg_phi=avg_phi,
                resample_counts=np.zeros(2, dtype=int),
                modulation=trace or None,
            )
        )
    report.model = model
    return report


class CooperativeTrainer(ParamsMixin):
    """fit/predict wrapper so runs compose with pipeline-style tooling."""

    def __init__(
        self,
        model_config: ModelConfig | None = None,
        train_config: TrainConfig | None = None,
        modulation: ModulationConfig | None = None,
    ):
        self.model_config = model_config
        self.train_config = train_config
        self.modulation = modulation

    def fit(self, dataset: MultiModalDataset, y=None) -> "CooperativeTrainer":
        cfg = self.train_config or TrainConfig()
        mconfig = self.model_config or ModelConfig()
        if self.modulation is not None:
            self.report_ = run_modulated(dataset, mconfig, cfg, self.modulation)
        else:
            self.report_ = train(dataset, mconfig, cfg)
        self.model_ = self.report_.model
        return self

    def predict(self, features) -> np.ndarray:
        return self.model_.predict(features)

    def score(self, features, labels) -> float:
        return float((self.predict(features) == labels).mean())
