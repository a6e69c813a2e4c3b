"""Monotone shaping maps for re-sample frequencies and probabilities.

Frequency maps turn a contribution gap ``1 - phi`` into a re-sample
frequency; probability maps turn a normalized average-contribution gap
into a re-sample probability and are clamped to [0, 1].
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field


@dataclass(frozen=True)
class MonotoneMap:
    """A monotonically nondecreasing scalar map.

    Kinds: ``linear`` (scale * x), ``tanh`` (tanh(scale * x)), ``power``
    (max(x, 0) ** exponent), ``step`` (piecewise-constant, nondecreasing).
    ``clamp_unit`` restricts the output to [0, 1], which probability maps
    require.
    """

    kind: str
    scale: float = 1.0
    exponent: float = 1.5
    thresholds: tuple[float, ...] = field(default=())
    values: tuple[float, ...] = field(default=())
    clamp_unit: bool = False

    def __post_init__(self):
        if self.kind not in ("linear", "tanh", "power", "step"):
            raise ValueError(f"unknown map kind {self.kind!r}")
        if self.kind in ("linear", "tanh") and self.scale <= 0:
            raise ValueError("scale must be positive")
        if self.kind == "power" and self.exponent <= 0:
            raise ValueError("exponent must be positive")
        if self.kind == "step":
            if len(self.values) != len(self.thresholds) + 1:
                raise ValueError("step map needs len(values) == len(thresholds) + 1")
            if list(self.thresholds) != sorted(self.thresholds):
                raise ValueError("step thresholds must be increasing")
            if list(self.values) != sorted(self.values):
                raise ValueError("step values must be nondecreasing")

    def __call__(self, x: float) -> float:
        if self.kind == "linear":
            y = self.scale * x
        elif self.kind == "tanh":
            y = math.tanh(self.scale * x)
        elif self.kind == "power":
            y = max(x, 0.0) ** self.exponent
        else:
            y = self.values[bisect.bisect_right(self.thresholds, x)]
        if self.clamp_unit:
            y = min(max(y, 0.0), 1.0)
        return y


def linear(scale: float = 1.0, clamp_unit: bool = False) -> MonotoneMap:
    return MonotoneMap("linear", scale=scale, clamp_unit=clamp_unit)


def tanh(scale: float = 1.0, clamp_unit: bool = False) -> MonotoneMap:
    return MonotoneMap("tanh", scale=scale, clamp_unit=clamp_unit)


def power(exponent: float = 1.5, clamp_unit: bool = False) -> MonotoneMap:
    return MonotoneMap("power", exponent=exponent, clamp_unit=clamp_unit)


def step(thresholds, values, clamp_unit: bool = False) -> MonotoneMap:
    return MonotoneMap(
        "step", thresholds=tuple(thresholds), values=tuple(values), clamp_unit=clamp_unit
    )


# Shipped frequency maps (gap -> re-sample frequency, ceiling-rounded later).
SAMPLE_FREQUENCY_MAPS: dict[str, MonotoneMap] = {
    "linear": linear(2.0),
    "tanh": tanh(1.0),
    "power": power(1.5),
}

# Shipped probability maps (normalized gap in [0,1] -> probability).
MODALITY_PROBABILITY_MAPS: dict[str, MonotoneMap] = {
    "identity": linear(1.0, clamp_unit=True),
    "tanh": tanh(1.0, clamp_unit=True),
    "power": power(1.5, clamp_unit=True),
}


def resolve_map(spec: str | MonotoneMap, registry: dict[str, MonotoneMap]) -> MonotoneMap:
    """Look a map up by name, or pass a MonotoneMap through unchanged."""
    if isinstance(spec, MonotoneMap):
        return spec
    try:
        return registry[spec]
    except KeyError:
        raise ValueError(
            f"unknown map {spec!r}; available: {sorted(registry)}"
        ) from None
