"""Prediction-log and CSV file formats.

The prediction log is line-delimited JSON, one sample per line:

    {"sample_id": "s1", "true_label": 7, "n": 2,
     "predictions": {"0": 7, "1": 3, "0,1": 7}}

Subset keys are the sorted, comma-joined modality indices of the
coalition. Lines starting with ``#`` are comments (exporters use one to
record modality names) and blank lines are ignored. Contributions travel
as CSV with columns ``sample_id, phi_0..phi_{n-1}, grand_benefit, method``.
"""

from __future__ import annotations

import csv
import importlib.resources
import json
import re
from pathlib import Path
from typing import Callable, Iterable, Iterator, Sequence, TextIO

import numpy as np

from .errors import (
    DuplicateSubsetKey,
    InconsistentModalityCount,
    ParseError,
)
from .records import ContributionVector, SubsetPredictionRecord, indices_from_mask
from .scheduling import ModalityResamplePlan, SampleResamplePlan

__all__ = [
    "format_subset_key",
    "parse_subset_key",
    "record_to_line",
    "ingest",
    "write_prediction_log",
    "write_contributions_csv",
    "read_contributions_csv",
    "write_sample_plan_csv",
    "read_sample_plan_csv",
    "write_modality_plan_csv",
    "demo_log_path",
]


def demo_log_path() -> Path:
    """Path of the bundled three-sample demo prediction log."""
    return Path(importlib.resources.files("modval") / "data" / "demo.jsonl")

_METHOD_RE = re.compile(r"monte_carlo\(m=(\d+);seed=(-?\d+)\)")


def format_subset_key(mask: int) -> str:
    return ",".join(str(i) for i in indices_from_mask(mask))


def parse_subset_key(key: str, n: int, lineno: int = 0) -> int:
    """Canonical subset key -> bit pattern; rejects malformed keys."""
    parts = key.split(",")
    try:
        indices = [int(p) for p in parts]
    except ValueError:
        raise ParseError(lineno, f"subset key {key!r} is not a comma-joined index list")
    if any(b <= a for a, b in zip(indices, indices[1:])):
        raise ParseError(lineno, f"subset key {key!r} is not strictly increasing")
    if indices and (indices[0] < 0 or indices[-1] >= n):
        raise InconsistentModalityCount(
            lineno, f"subset key {key!r} references a modality outside [0, {n})"
        )
    mask = 0
    for i in indices:
        mask |= 1 << i
    if mask == 0:
        raise ParseError(lineno, "empty subset key is not allowed")
    return mask


def record_to_line(record: SubsetPredictionRecord) -> str:
    """Serialize one record; keys ordered by coalition bit pattern."""
    predictions = {
        format_subset_key(mask): int(record.predictions[mask])
        for mask in sorted(record.predictions)
    }
    return json.dumps(
        {
            "sample_id": record.sample_id,
            "true_label": int(record.true_label),
            "n": int(record.n),
            "predictions": predictions,
        },
        separators=(",", ":"),
    )


def write_prediction_log(
    records: Iterable[SubsetPredictionRecord],
    file: TextIO,
    header: str | None = None,
) -> int:
    count = 0
    if header:
        file.write(f"# {header}\n")
    for record in records:
        file.write(record_to_line(record) + "\n")
        count += 1
    return count


def _parse_line(line: str, lineno: int, allow_partial: bool) -> SubsetPredictionRecord:
    pairs_seen: list[tuple[str, object]] = []

    def keep_pairs(pairs):
        pairs_seen.append(pairs)
        return dict(pairs)

    try:
        payload = json.loads(line, object_pairs_hook=keep_pairs)
    except json.JSONDecodeError as exc:
        raise ParseError(lineno, f"invalid JSON: {exc.msg}")
    if not isinstance(payload, dict):
        raise ParseError(lineno, "line is not a JSON object")
    for pairs in pairs_seen:
        keys = [k for k, _ in pairs]
        for key in {k for k in keys if keys.count(k) > 1}:
            raise DuplicateSubsetKey(lineno, f"duplicate key {key!r}")
    try:
        sample_id = str(payload["sample_id"])
        true_label = int(payload["true_label"])
        n = int(payload["n"])
        raw_predictions = payload["predictions"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(lineno, f"missing or malformed field: {exc}")
    if not isinstance(raw_predictions, dict):
        raise ParseError(lineno, "predictions must be an object")
    if n < 1:
        raise ParseError(lineno, f"n must be >= 1, got {n}")
    predictions: dict[int, int] = {}
    for key, label in raw_predictions.items():
        mask = parse_subset_key(key, n, lineno)
        if mask in predictions:
            raise DuplicateSubsetKey(lineno, f"duplicate subset key {key!r}")
        try:
            predictions[mask] = int(label)
        except (TypeError, ValueError):
            raise ParseError(lineno, f"prediction for {key!r} is not an integer")
    if not allow_partial:
        expected = (1 << n) - 1
        if len(predictions) != expected:
            missing = next(
                m for m in range(1, 1 << n) if m not in predictions
            )
            raise ParseError(
                lineno,
                f"exact-mode record has {len(predictions)} of {expected} "
                f"subsets; first missing key {format_subset_key(missing)!r}",
            )
    return SubsetPredictionRecord(
        sample_id=sample_id, true_label=true_label, n=n, predictions=predictions
    )


def ingest(
    path: str | Path,
    strict: bool = True,
    allow_partial: bool = False,
    on_error: Callable[[ParseError], None] | None = None,
) -> Iterator[SubsetPredictionRecord]:
    """Stream validated records from a prediction log in file order.

    In strict mode the first malformed line raises. In lenient mode
    (``strict=False``) malformed lines are skipped after being reported to
    ``on_error``. ``allow_partial`` accepts records that do not cover every
    nonempty coalition, for Monte-Carlo use.
    """
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            try:
                yield _parse_line(stripped, lineno, allow_partial)
            except ParseError as exc:
                if strict:
                    raise
                if on_error is not None:
                    on_error(exc)


def write_contributions_csv(
    contributions: Sequence[ContributionVector], file: TextIO
) -> None:
    if not contributions:
        file.write("sample_id,grand_benefit,method\n")
        return
    n = contributions[0].n
    writer = csv.writer(file, lineterminator="\n")
    writer.writerow(
        ["sample_id", *[f"phi_{j}" for j in range(n)], "grand_benefit", "method"]
    )
    for vec in contributions:
        writer.writerow(
            [
                vec.sample_id,
                *[repr(float(x)) for x in vec.phi],
                repr(float(vec.grand_benefit)),
                vec.method_label(),
            ]
        )


def read_contributions_csv(file: TextIO) -> list[ContributionVector]:
    reader = csv.reader(file)
    header = next(reader, None)
    if header is None:
        return []
    phi_cols = [name for name in header if name.startswith("phi_")]
    out = []
    for row in reader:
        if not row:
            continue
        fields = dict(zip(header, row))
        method = fields["method"]
        num_permutations = seed = None
        if method != "exact":
            match = _METHOD_RE.fullmatch(method)
            if not match:
                raise ValueError(f"unrecognized method label {method!r}")
            method = "monte_carlo"
            num_permutations, seed = int(match.group(1)), int(match.group(2))
        out.append(
            ContributionVector(
                sample_id=fields["sample_id"],
                phi=np.array([float(fields[c]) for c in phi_cols]),
                grand_benefit=float(fields["grand_benefit"]),
                method=method,
                num_permutations=num_permutations,
                seed=seed,
            )
        )
    return out


def write_sample_plan_csv(plan: SampleResamplePlan, file: TextIO) -> None:
    writer = csv.writer(file, lineterminator="\n")
    writer.writerow(["sample_id", "modality", "count"])
    for sample_id, modality, count in plan.iter_entries():
        writer.writerow([sample_id, modality, count])


def read_sample_plan_csv(file: TextIO, n: int) -> SampleResamplePlan:
    reader = csv.DictReader(file)
    counts: dict[str, np.ndarray] = {}
    for row in reader:
        modality = int(row["modality"])
        if not 0 <= modality < n:
            raise ValueError(f"modality {modality} out of range for n={n}")
        entry = counts.setdefault(row["sample_id"], np.zeros(n, dtype=int))
        entry[modality] = int(row["count"])
    return SampleResamplePlan(n=n, counts=counts)


def write_modality_plan_csv(plan: ModalityResamplePlan, file: TextIO) -> None:
    writer = csv.writer(file, lineterminator="\n")
    writer.writerow(["target_modality", "probability", "subset_size", "gap", "gap_norm"])
    writer.writerow(
        [
            plan.target_modality,
            repr(plan.probability),
            plan.subset_size,
            repr(plan.gap),
            repr(plan.gap_norm),
        ]
    )
