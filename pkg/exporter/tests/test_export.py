"""Exporter tests, including the round-trip acceptance check against the
engine's CLI (the only interface the exporter relies on)."""

import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from probe_exporter import ExportError, ModelProbeConfig, export


NUM_CLASSES = 4


def planted_dataset(count=8):
    """Labels in 1..3; modality 0 encodes the truth, modality 1 a decoy."""
    samples = []
    for i in range(count):
        label = 1 + i % (NUM_CLASSES - 1)
        x0 = np.zeros(NUM_CLASSES)
        x0[label] = 1.0
        x1 = np.zeros(NUM_CLASSES)
        x1[label - 1] = 1.0  # always some other class
        samples.append((f"s{i:03d}", (x0, x1), label))
    return samples


def planted_model(x0, x1):
    """Correct iff modality 0 is unmasked; decoy wins when alone."""
    return x0 + 0.5 * x1


def run_valuate(log_path, tmp_path, extra=()):
    out_csv = tmp_path / "phi.csv"
    proc = subprocess.run(
        [sys.executable, "-m", "modval.cli", "valuate", str(log_path),
         "--out", str(out_csv), *extra],
        capture_output=True,
        text=True,
    )
    return proc, out_csv


def read_phi(csv_path):
    with open(csv_path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {
        r["sample_id"]: (float(r["phi_0"]), float(r["phi_1"])) for r in rows
    }


@pytest.fixture
def config(tmp_path):
    return ModelProbeConfig(
        modality_names=("signal", "decoy"),
        output_path=tmp_path / "probe.jsonl",
        batch_size=3,  # awkward size to exercise the tail batch
    )


def test_round_trip_matches_analytic_table(tmp_path, config):
    path = export(planted_model, planted_dataset(), config)
    proc, out_csv = run_valuate(path, tmp_path)
    assert proc.returncode == 0, proc.stderr  # strict-mode ingestion, zero errors
    phi = read_phi(out_csv)
    assert len(phi) == 8
    for value in phi.values():
        assert value == (1.5, 0.5)


def test_two_exports_are_byte_identical(tmp_path, config):
    export(planted_model, planted_dataset(), config)
    first = config.output_path.read_bytes()
    export(planted_model, planted_dataset(), config)
    assert config.output_path.read_bytes() == first


def test_header_records_modality_order(config):
    export(planted_model, planted_dataset(2), config)
    header = config.output_path.read_text().splitlines()[0]
    assert header == "# modalities: signal,decoy"


def test_log_lines_are_valid_and_canonical(config):
    export(planted_model, planted_dataset(2), config)
    lines = config.output_path.read_text().splitlines()[1:]
    for line in lines:
        payload = json.loads(line)
        assert list(payload) == ["sample_id", "true_label", "n", "predictions"]
        assert list(payload["predictions"]) == ["0", "1", "0,1"]


def test_constant_model_yields_symmetric_shares(tmp_path):
    def constant_model(x0, x1):
        scores = np.zeros((x0.shape[0], NUM_CLASSES))
        scores[:, 0] = 1.0
        return scores

    dataset = [(f"c{i}", (np.ones(3), np.ones(5)), 0) for i in range(4)]
    config = ModelProbeConfig(("a", "b"), tmp_path / "const.jsonl")
    path = export(constant_model, dataset, config)
    proc, out_csv = run_valuate(path, tmp_path)
    assert proc.returncode == 0, proc.stderr
    for value in read_phi(out_csv).values():
        assert value == (1.0, 1.0)  # symmetric table: equal shares of v(N)=2


def test_modality_ignoring_wrong_model_is_a_dummy(tmp_path):
    # ignores modality 1 and never predicts the true class
    def wrong_model(x0, x1):
        scores = np.zeros((x0.shape[0], NUM_CLASSES))
        scores[:, 0] = 1.0  # labels below are all nonzero
        return scores

    dataset = planted_dataset(4)
    config = ModelProbeConfig(("sig", "ignored"), tmp_path / "dummy.jsonl")
    path = export(wrong_model, dataset, config)
    # predictions unchanged by modality 1's presence
    for line in path.read_text().splitlines()[1:]:
        preds = json.loads(line)["predictions"]
        assert preds["0"] == preds["0,1"]
    proc, out_csv = run_valuate(path, tmp_path)
    assert proc.returncode == 0, proc.stderr
    for value in read_phi(out_csv).values():
        assert value == (0.0, 0.0)


def test_argmax_tie_breaks_to_lowest_index(tmp_path):
    def tied_model(x0, x1):
        return np.ones((x0.shape[0], NUM_CLASSES))  # all classes tie

    dataset = [("t0", (np.ones(2), np.ones(2)), 0)]
    config = ModelProbeConfig(("a", "b"), tmp_path / "tie.jsonl")
    path = export(tied_model, dataset, config)
    preds = json.loads(path.read_text().splitlines()[1])["predictions"]
    assert set(preds.values()) == {0}


def test_shape_mismatch_reports_sample_ids(tmp_path):
    def bad_model(x0, x1):
        return np.zeros(NUM_CLASSES)  # missing the batch dimension

    config = ModelProbeConfig(("a", "b"), tmp_path / "bad.jsonl")
    with pytest.raises(ExportError) as err:
        export(bad_model, planted_dataset(2), config)
    assert "s000" in str(err.value)


def test_wrong_modality_count_rejected(tmp_path):
    config = ModelProbeConfig(("a", "b", "c"), tmp_path / "bad.jsonl")
    with pytest.raises(ExportError):
        export(planted_model, planted_dataset(1), config)


def test_config_validation(tmp_path):
    with pytest.raises(ValueError):
        ModelProbeConfig((), tmp_path / "x.jsonl")
    with pytest.raises(ValueError):
        ModelProbeConfig(("a", "a"), tmp_path / "x.jsonl")
    with pytest.raises(ValueError):
        ModelProbeConfig(("a",), tmp_path / "x.jsonl", batch_size=0)


def test_torch_module_export(tmp_path):
    torch = pytest.importorskip("torch")

    class TwoTower(torch.nn.Module):
        def __init__(self):
            super().__init__()
            self.head0 = torch.nn.Linear(NUM_CLASSES, NUM_CLASSES, bias=False)
            self.head1 = torch.nn.Linear(NUM_CLASSES, NUM_CLASSES, bias=False)
            with torch.no_grad():
                self.head0.weight.copy_(torch.eye(NUM_CLASSES))
                self.head1.weight.copy_(0.5 * torch.eye(NUM_CLASSES))

        def forward(self, x0, x1):
            return self.head0(x0) + self.head1(x1)

    dataset = [
        (sid, tuple(torch.as_tensor(x, dtype=torch.float32) for x in inputs), label)
        for sid, inputs, label in planted_dataset(5)
    ]
    config = ModelProbeConfig(("sig", "decoy"), tmp_path / "torch.jsonl", batch_size=2)
    path = export(TwoTower(), dataset, config)
    proc, out_csv = run_valuate(path, tmp_path)
    assert proc.returncode == 0, proc.stderr
    for value in read_phi(out_csv).values():
        assert value == (1.5, 0.5)
    # determinism holds for torch inference too
    first = path.read_bytes()
    export(TwoTower(), dataset, config)
    assert path.read_bytes() == first
