"""Consistency findings for a loaded graph.  Never mutates the graph."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import TemporalBipartiteGraph

# classes that make a report not-ok; the rest are informational
BLOCKING = frozenset({"edge_before_start", "edge_after_deadline", "start_after_deadline"})
MAX_SAMPLES = 5


@dataclass
class Finding:
    cls: str
    count: int
    samples: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"class": self.cls, "count": self.count, "samples": self.samples}


@dataclass
class ValidationReport:
    findings: list[Finding]

    @property
    def ok(self) -> bool:
        return not any(f.cls in BLOCKING for f in self.findings)

    def count(self, cls: str) -> int:
        return sum(f.count for f in self.findings if f.cls == cls)

    def to_dict(self) -> dict:
        return {"findings": [f.to_dict() for f in self.findings], "ok": self.ok}


def _finding(cls: str, hits: np.ndarray, describe) -> Finding | None:
    idx = np.flatnonzero(hits)
    if len(idx) == 0:
        return None
    return Finding(cls, int(len(idx)), [describe(int(i)) for i in idx[:MAX_SAMPLES]])


def validate(graph: TemporalBipartiteGraph) -> ValidationReport:
    g = graph
    t, p = g.time, g.dst

    def edge(i):
        return {"backer": g.users[g.src[i]], "project": g.project_ids[p[i]], "time": int(t[i])}

    def proj(i):
        return {"project": g.project_ids[i], "start": int(g.start[i]), "deadline": int(g.deadline[i])}

    backs = np.zeros(g.n_users, dtype=bool)
    backs[g.src] = True
    founder_backers = np.unique(g.founder[backs[g.founder]])

    candidates = [
        _finding("edge_before_start", t < g.start[p], edge),
        _finding("edge_after_deadline", t > g.deadline[p], edge),
        _finding("start_after_deadline", g.start > g.deadline, proj),
        _finding("zero_backing_project", g.popularity == 0, proj),
        _finding("start_imputed", g.start_imputed, proj),
    ]
    if len(founder_backers):
        candidates.append(Finding(
            "backer_is_founder",
            int(len(founder_backers)),
            [g.users[u] for u in founder_backers[:MAX_SAMPLES]],
        ))
    return ValidationReport([f for f in candidates if f is not None])
