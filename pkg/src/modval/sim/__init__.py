"""Desk-scale multi-modal training simulator."""

from .data import (
    DATASET_BIASED,
    SAMPLE_MIXED,
    MultiModalDataset,
    SyntheticSpec,
    generate_dataset,
)
from .model import ModelConfig, MultiModalNet, SGDMomentum, softmax_cross_entropy
from .training import (
    CooperativeTrainer,
    EpochStats,
    ModulationConfig,
    TrainConfig,
    TrainRunReport,
    benefit_matrix,
    run_modulated,
    train,
    valuate_model,
)

__all__ = [
    "DATASET_BIASED",
    "SAMPLE_MIXED",
    "MultiModalDataset",
    "SyntheticSpec",
    "generate_dataset",
    "ModelConfig",
    "MultiModalNet",
    "SGDMomentum",
    "softmax_cross_entropy",
    "CooperativeTrainer",
    "EpochStats",
    "ModulationConfig",
    "TrainConfig",
    "TrainRunReport",
    "benefit_matrix",
    "run_modulated",
    "train",
    "valuate_model",
]
