"""Ordinal binning of raw sales volumes into eight volume ranges."""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Sequence

from .errors import InvalidConfig, NegativeValue

DEFAULT_EDGES = (0.0, 50.0, 100.0, 300.0, 500.0, 1000.0, 3000.0, 5000.0, 10000.0)
DEFAULT_LABELS = (
    "0-50",
    "50-100",
    "100-300",
    "300-500",
    "500-1000",
    "1000-3000",
    "3000-5000",
    "5000-10000",
)


def _format_edge(e: float) -> str:
    return str(int(e)) if float(e).is_integer() else repr(float(e))


@dataclass(frozen=True)
class BinSpec:
    """Ascending edges defining half-open ranges [edges[i], edges[i+1]);
    the last range is closed on the right and values above it clamp into it."""

    edges: tuple[float, ...] = DEFAULT_EDGES
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        edges = tuple(float(e) for e in self.edges)
        object.__setattr__(self, "edges", edges)
        if len(edges) < 2:
            raise InvalidConfig("bin edges need at least two entries")
        if any(b <= a for a, b in zip(edges, edges[1:])):
            raise InvalidConfig(f"bin edges must be strictly increasing: {edges}")
        labels = tuple(self.labels)
        if not labels:
            labels = tuple(
                f"{_format_edge(a)}-{_format_edge(b)}" for a, b in zip(edges, edges[1:])
            )
        if len(labels) != len(edges) - 1:
            raise InvalidConfig(
                f"expected {len(edges) - 1} labels for {len(edges)} edges, got {len(labels)}"
            )
        object.__setattr__(self, "labels", labels)

    @property
    def n_bins(self) -> int:
        return len(self.labels)


def default_bins() -> BinSpec:
    return BinSpec(edges=DEFAULT_EDGES, labels=DEFAULT_LABELS)


def bin_of(value: float, spec: BinSpec | None = None) -> int:
    """Ordinal index of the range containing ``value``; values at or above
    the top edge clamp to the last bin."""
    spec = spec or default_bins()
    if value < 0:
        raise NegativeValue(f"sales volume must be non-negative, got {value}")
    i = bisect_right(spec.edges, value) - 1
    return min(i, spec.n_bins - 1)


def apply_binning(targets: Sequence[float], spec: BinSpec | None = None) -> list[int]:
    """Element-wise bin_of over a target sequence."""
    spec = spec or default_bins()
    out = []
    for i, v in enumerate(targets):
        if v < 0:
            raise NegativeValue(f"negative sales volume {v} at index {i}")
        out.append(bin_of(v, spec))
    return out


def bins_to_json(spec: BinSpec) -> dict:
    return {"edges": list(spec.edges), "labels": list(spec.labels)}


def bins_from_json(doc) -> BinSpec:
    if not isinstance(doc, dict) or "edges" not in doc:
        raise InvalidConfig("bin spec document must be an object with an 'edges' array")
    return BinSpec(edges=tuple(doc["edges"]), labels=tuple(doc.get("labels", ())))
