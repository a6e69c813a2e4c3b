import numpy as np
import pytest
from sklearn.linear_model import LogisticRegression

from modval.sim import SAMPLE_MIXED, SyntheticSpec, generate_dataset


def probe_accuracy(train_x, train_y, test_x, test_y):
    clf = LogisticRegression(max_iter=2000)
    return clf.fit(train_x, train_y).score(test_x, test_y)


def test_shapes_and_determinism():
    spec = SyntheticSpec(seed=4)
    a = generate_dataset(spec)
    b = generate_dataset(spec)
    assert a.train_features[0].shape == (1000, 16)
    assert a.train_features[1].shape == (1000, 96)
    assert a.test_labels.shape == (1000,)
    for fa, fb in zip(a.train_features, b.train_features):
        assert np.array_equal(fa, fb)
    assert np.array_equal(a.train_labels, b.train_labels)


def test_biased_spec_probe_separation():
    """Uni-modal linear probes confirm the planted dominance ordering."""
    for seed in range(3):
        spec = SyntheticSpec(
            num_classes=4,
            separation=(3.0, 0.5),
            feature_dims=(16, 16),
            train_samples=1000,
            test_samples=200,
            seed=seed,
        )
        ds = generate_dataset(spec)
        strong = probe_accuracy(
            ds.train_features[0], ds.train_labels, ds.test_features[0], ds.test_labels
        )
        weak = probe_accuracy(
            ds.train_features[1], ds.train_labels, ds.test_features[1], ds.test_labels
        )
        assert strong >= 0.90
        assert weak <= 0.70


def test_symmetric_spec_probes_are_close():
    for seed in range(3):
        spec = SyntheticSpec(
            num_classes=4,
            separation=(1.0, 1.0),
            feature_dims=(16, 16),
            train_samples=1000,
            test_samples=1000,
            seed=seed,
        )
        ds = generate_dataset(spec)
        accs = [
            probe_accuracy(
                ds.train_features[i], ds.train_labels, ds.test_features[i], ds.test_labels
            )
            for i in (0, 1)
        ]
        assert abs(accs[0] - accs[1]) <= 0.05


def test_sample_mixed_dominance_is_balanced():
    spec = SyntheticSpec(mode=SAMPLE_MIXED, seed=1)
    ds = generate_dataset(spec)
    assert ds.train_dominant is not None
    count = ds.train_dominant.shape[0]
    frac = ds.train_dominant.mean()
    sigma = 0.5 / np.sqrt(count)
    assert abs(frac - 0.5) <= 3.0 * sigma
    # each sample has exactly one dominant modality index
    assert set(np.unique(ds.train_dominant)) <= {0, 1}


def test_dataset_biased_mode_has_no_dominant_labels():
    ds = generate_dataset(SyntheticSpec(seed=0))
    assert ds.train_dominant is None


def test_spec_validation():
    with pytest.raises(ValueError):
        SyntheticSpec(separation=(1.0, 2.0))  # modality 0 must be strongest
    with pytest.raises(ValueError):
        SyntheticSpec(separation=(1.0, -1.0))
    with pytest.raises(ValueError):
        SyntheticSpec(feature_dims=(16,))
    with pytest.raises(ValueError):
        SyntheticSpec(feature_dims=(4, 96))  # dim below class count
    with pytest.raises(ValueError):
        SyntheticSpec(mode="curated")
    with pytest.raises(ValueError):
        SyntheticSpec(modality_names=("only-one",))


def test_modality_names_default():
    assert SyntheticSpec().names == ("m0", "m1")
    named = SyntheticSpec(modality_names=("rgb", "flow"))
    assert named.names == ("rgb", "flow")
