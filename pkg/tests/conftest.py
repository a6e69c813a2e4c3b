import numpy as np
import pytest

from modval.records import SubsetPredictionRecord


def make_record(n, correct_masks, sample_id="r", true_label=0):
    """Record where exactly the listed coalition masks predict correctly."""
    correct = set(correct_masks)
    predictions = {
        mask: true_label if mask in correct else true_label + 1
        for mask in range(1, 1 << n)
    }
    return SubsetPredictionRecord(
        sample_id=sample_id, true_label=true_label, n=n, predictions=predictions
    )


def random_record(n, rng, sample_id="r"):
    correct = [m for m in range(1, 1 << n) if rng.random() < 0.5]
    return make_record(n, correct, sample_id=sample_id)


@pytest.fixture
def audio_dominant_record():
    """n=2: modality 0 alone correct, modality 1 alone wrong, both correct.

    Exact contributions are (1.5, 0.5).
    """
    return make_record(2, [0b01, 0b11], sample_id="audio-dominant", true_label=7)
