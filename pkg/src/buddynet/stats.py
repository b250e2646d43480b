"""Degree-distribution summaries (mean/std/quartiles/mode) and histograms."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .graph import TemporalBipartiteGraph

SIDES = ("project-in", "backer-out")
_ALIASES = {"project": "project-in", "backer": "backer-out", "project-in": "project-in",
            "backer-out": "backer-out", "in": "project-in", "out": "backer-out"}


class EmptyInputError(ValueError):
    pass


@dataclass(frozen=True)
class DegreeSummary:
    side: str
    n: int
    mean: float
    std: float
    min: int
    q25: int
    median: int
    q75: int
    max: int
    mode: int
    zero_count: int

    def to_dict(self) -> dict:
        return asdict(self)


def normalize_side(side: str) -> str:
    try:
        return _ALIASES[side]
    except KeyError:
        raise ValueError(f"unknown side {side!r}; expected one of {SIDES}") from None


def degrees(graph: TemporalBipartiteGraph, side: str) -> np.ndarray:
    """Degree multiset for one side.

    project-in covers every project (zero-degree included); backer-out only
    users with at least one edge, so founders who never back are left out.
    """
    side = normalize_side(side)
    if side == "project-in":
        return np.asarray(graph.popularity, dtype=np.int64)
    out = np.bincount(graph.src, minlength=graph.n_users)
    return out[out > 0]


def nearest_rank(sorted_values: np.ndarray, q: float) -> int:
    n = len(sorted_values)
    rank = max(1, math.ceil(q * n))
    return int(sorted_values[rank - 1])


def summarize(values, side: str = "project-in") -> DegreeSummary:
    d = np.sort(np.asarray(values, dtype=np.int64))
    if len(d) == 0:
        raise EmptyInputError(f"no nodes on side {side}")
    vals, counts = np.unique(d, return_counts=True)
    return DegreeSummary(
        side=side,
        n=int(len(d)),
        mean=float(d.mean()),
        std=float(d.std()),
        min=int(d[0]),
        q25=nearest_rank(d, 0.25),
        median=nearest_rank(d, 0.5),
        q75=nearest_rank(d, 0.75),
        max=int(d[-1]),
        mode=int(vals[np.argmax(counts)]),
        zero_count=int(np.count_nonzero(d == 0)),
    )


def degree_summary(graph: TemporalBipartiteGraph, side: str) -> DegreeSummary:
    side = normalize_side(side)
    return summarize(degrees(graph, side), side)


def histogram(values) -> list[tuple[int, int]]:
    vals, counts = np.unique(np.asarray(values, dtype=np.int64), return_counts=True)
    return [(int(v), int(c)) for v, c in zip(vals, counts)]


def degree_histogram(graph: TemporalBipartiteGraph, side: str) -> list[tuple[int, int]]:
    side = normalize_side(side)
    d = degrees(graph, side)
    if len(d) == 0:
        raise EmptyInputError(f"no nodes on side {side}")
    return histogram(d)
