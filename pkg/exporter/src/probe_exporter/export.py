"""Subset-prediction export for multi-modal classifiers.

Wraps any callable that maps n modality inputs to class scores, runs one
forward pass per nonempty modality coalition with the excluded
modalities' inputs replaced by zero tensors, and writes one log line per
sample in the engine's prediction-log format:

    # modalities: audio,visual
    {"sample_id":"clip-0","true_label":3,"n":2,"predictions":{"0":3,"1":1,"0,1":3}}

Inputs may be numpy arrays or torch tensors; inference runs without
gradients when torch is available. Re-running with the same model and
dataset order produces a byte-identical file (nondeterministic models
are out of contract).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

try:
    import torch
except ImportError:  # torch is optional; numpy-only models work without it
    torch = None


class ExportError(Exception):
    """A sample could not be probed; carries the sample id in the message."""


@dataclass(frozen=True)
class ModelProbeConfig:
    """How to probe and where to write.

    ``modality_names`` fixes the index <-> name mapping used in the log's
    subset keys and is recorded in the header comment line.
    """

    modality_names: tuple[str, ...]
    output_path: str | Path
    batch_size: int = 32
    device: str | None = None

    def __post_init__(self):
        if len(self.modality_names) < 1:
            raise ValueError("at least one modality name required")
        if len(set(self.modality_names)) != len(self.modality_names):
            raise ValueError("modality names must be unique")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")

    @property
    def n(self) -> int:
        return len(self.modality_names)


def _is_torch(x) -> bool:
    return torch is not None and isinstance(x, torch.Tensor)


def _zeros_like(x):
    return torch.zeros_like(x) if _is_torch(x) else np.zeros_like(x)


def _stack(items):
    return torch.stack(items) if _is_torch(items[0]) else np.stack(items)


def _to_device(x, device):
    return x.to(device) if device is not None and _is_torch(x) else x


def _scores_to_numpy(scores) -> np.ndarray:
    if _is_torch(scores):
        return scores.detach().cpu().numpy()
    return np.asarray(scores)


def _subset_key(mask: int, n: int) -> str:
    return ",".join(str(i) for i in range(n) if mask >> i & 1)


def _format_line(sample_id: str, label: int, n: int, predictions: dict[int, int]) -> str:
    keyed = {_subset_key(mask, n): predictions[mask] for mask in sorted(predictions)}
    return json.dumps(
        {"sample_id": sample_id, "true_label": label, "n": n, "predictions": keyed},
        separators=(",", ":"),
    )


def export(
    model: Callable,
    dataset: Iterable[tuple[str, Sequence, int]],
    config: ModelProbeConfig,
) -> Path:
    """Probe every nonempty modality coalition of every sample.

    ``model`` receives the n modality inputs as positional batched
    arguments and returns per-class scores. ``dataset`` yields
    ``(sample_id, inputs, label)`` with one input per modality. The
    predicted label is the argmax with the lowest index winning ties,
    matching the engine's convention.

    Returns the output path. Raises ExportError with the offending
    sample ids when a forward pass fails.
    """
    n = config.n
    path = Path(config.output_path)
    if torch is not None and config.device is not None and hasattr(model, "to"):
        model = model.to(config.device)
    with open(path, "w", encoding="utf-8", newline="\n") as out:
        out.write(f"# modalities: {','.join(config.modality_names)}\n")
        for batch in _batches(dataset, config.batch_size, n):
            ids, inputs, labels = batch
            stacked = [
                _to_device(_stack(per_modality), config.device)
                for per_modality in inputs
            ]
            predictions: list[dict[int, int]] = [{} for _ in ids]
            for mask in range(1, 1 << n):
                masked = [
                    x if mask >> i & 1 else _zeros_like(x)
                    for i, x in enumerate(stacked)
                ]
                scores = _run_model(model, masked, ids)
                if scores.ndim != 2 or scores.shape[0] != len(ids):
                    raise ExportError(
                        f"samples {ids[0]}..{ids[-1]}: model returned shape "
                        f"{scores.shape}, expected ({len(ids)}, num_classes)"
                    )
                predicted = np.argmax(scores, axis=1)  # lowest index wins ties
                for row, label in enumerate(predicted):
                    predictions[row][mask] = int(label)
            for sample_id, label, preds in zip(ids, labels, predictions):
                out.write(_format_line(sample_id, int(label), n, preds) + "\n")
    return path


def _run_model(model, masked_inputs, ids) -> np.ndarray:
    try:
        if torch is not None:
            with torch.inference_mode():
                return _scores_to_numpy(model(*masked_inputs))
        return _scores_to_numpy(model(*masked_inputs))
    except ExportError:
        raise
    except Exception as exc:
        raise ExportError(f"samples {ids[0]}..{ids[-1]}: {exc}") from exc


def _batches(dataset, batch_size: int, n: int):
    ids: list[str] = []
    inputs: list[list] = [[] for _ in range(n)]
    labels: list[int] = []
    for sample_id, sample_inputs, label in dataset:
        if len(sample_inputs) != n:
            raise ExportError(
                f"sample {sample_id}: got {len(sample_inputs)} modality inputs, "
                f"expected {n}"
            )
        ids.append(str(sample_id))
        for i, x in enumerate(sample_inputs):
            inputs[i].append(x)
        labels.append(label)
        if len(ids) == batch_size:
            yield ids, inputs, labels
            ids, inputs, labels = [], [[] for _ in range(n)], []
    if ids:
        yield ids, inputs, labels
