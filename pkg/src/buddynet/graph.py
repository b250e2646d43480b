"""Temporal bipartite backer -> project network.

Users and projects are interned to dense integer indices; edges live in
parallel numpy arrays sorted by ``(time, input order)``.  The public surface
speaks string identifiers, the hot paths (census, rewiring) use the arrays.
"""

from __future__ import annotations

import csv
import io
from contextlib import contextmanager
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import IO, Iterable, Iterator, NamedTuple

import numpy as np

__all__ = [
    "Backing",
    "GraphFormatError",
    "LifespanIndex",
    "ProjectRecord",
    "TemporalBipartiteGraph",
    "derive_project_spans",
    "load_graph",
    "parse_timestamp",
    "save_graph",
]

BACKINGS_HEADER = ("backer_id", "project_id", "timestamp")
PROJECTS_HEADER = ("project_id", "founder_id", "deadline")


class GraphFormatError(ValueError):
    """Input file could not be turned into a graph."""

    def __init__(self, message: str, source: str = "<input>", line: int | None = None):
        self.source = source
        self.line = line
        where = source if line is None else f"{source}:{line}"
        super().__init__(f"{where}: {message}")


class Backing(NamedTuple):
    backer: str
    project: str
    time: int


@dataclass(frozen=True)
class ProjectRecord:
    id: str
    founder: str
    start: int
    deadline: int
    popularity: int = 0
    start_imputed: bool = False

    def live_at(self, t: int) -> bool:
        return self.start <= t <= self.deadline


def parse_timestamp(value: str) -> int:
    """Epoch seconds or ISO-8601 (naive means UTC) -> integer epoch seconds."""
    value = value.strip()
    if not value:
        raise ValueError("empty timestamp")
    try:
        return int(value)
    except ValueError:
        pass
    iso = value[:-1] + "+00:00" if value.endswith(("Z", "z")) else value
    try:
        dt = datetime.fromisoformat(iso)
    except ValueError:
        raise ValueError(f"unparseable timestamp {value!r}") from None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    delta = dt - datetime(1970, 1, 1, tzinfo=timezone.utc)
    return delta.days * 86400 + delta.seconds


class LifespanIndex:
    """Answers "which projects are live at time t" in O(log n + k).

    The time axis is cut at every start and every ``deadline + 1``; inside
    each elementary segment the live set is constant, so a stabbing query is
    one binary search.  Segment member lists are stored CSR-style and are
    also what the rewiring sampler builds its cumulative weights from.
    """

    def __init__(self, start: np.ndarray, deadline: np.ndarray):
        start = np.asarray(start, dtype=np.int64)
        deadline = np.asarray(deadline, dtype=np.int64)
        self.start = start
        self.deadline = deadline
        # segment g covers [bounds[g], bounds[g+1]); segment 0 is before any start
        self.bounds = np.unique(np.concatenate([start, deadline + 1]))
        n_seg = len(self.bounds) + 1
        # project p is live in segments first[p] .. last[p] inclusive
        first = np.searchsorted(self.bounds, start, side="right")
        last = np.searchsorted(self.bounds, deadline + 1, side="right") - 1
        lengths = np.maximum(last - first + 1, 0)
        proj = np.repeat(np.arange(len(start), dtype=np.int64), lengths)
        offs = np.arange(lengths.sum(), dtype=np.int64) - np.repeat(np.cumsum(lengths) - lengths, lengths)
        seg = np.repeat(first, lengths) + offs
        order = np.lexsort((proj, seg))
        self.members = proj[order]
        self.indptr = np.zeros(n_seg + 1, dtype=np.int64)
        np.cumsum(np.bincount(seg, minlength=n_seg), out=self.indptr[1:])

    def segment_of(self, t) -> np.ndarray:
        return np.searchsorted(self.bounds, t, side="right")

    def live_indices(self, t: int) -> np.ndarray:
        g = int(self.segment_of(t))
        return self.members[self.indptr[g]:self.indptr[g + 1]]

    @property
    def n_segments(self) -> int:
        return len(self.indptr) - 1


@dataclass(eq=False)
class TemporalBipartiteGraph:
    """Immutable backer/project graph with per-node and time-window indexes.

    ``users`` holds every user identifier seen (backers and founders);
    ``src``/``dst``/``time`` are the edge arrays in chronological order with
    ties kept in input order.
    """

    users: tuple[str, ...]
    project_ids: tuple[str, ...]
    founder: np.ndarray
    start: np.ndarray
    deadline: np.ndarray
    src: np.ndarray
    dst: np.ndarray
    time: np.ndarray
    start_imputed: np.ndarray = None
    popularity: np.ndarray = field(init=False)
    user_index: dict = field(init=False, repr=False)
    project_index: dict = field(init=False, repr=False)

    def __post_init__(self):
        n_proj = len(self.project_ids)
        self.founder = np.asarray(self.founder, dtype=np.int64)
        self.start = np.asarray(self.start, dtype=np.int64)
        self.deadline = np.asarray(self.deadline, dtype=np.int64)
        src = np.asarray(self.src, dtype=np.int64)
        dst = np.asarray(self.dst, dtype=np.int64)
        time = np.asarray(self.time, dtype=np.int64)
        order = np.argsort(time, kind="stable")
        self.src, self.dst, self.time = src[order], dst[order], time[order]
        if self.start_imputed is None:
            self.start_imputed = np.zeros(n_proj, dtype=bool)
        for arr in (self.founder, self.start, self.deadline, self.src, self.dst,
                    self.time, self.start_imputed):
            arr.setflags(write=False)
        self.user_index = {u: i for i, u in enumerate(self.users)}
        self.project_index = {p: i for i, p in enumerate(self.project_ids)}
        self.popularity = np.bincount(self.dst, minlength=n_proj).astype(np.int64)
        self.popularity.setflags(write=False)
        self._by_backer = None
        self._by_project = None
        self._lifespan = None

    @property
    def n_users(self) -> int:
        return len(self.users)

    @property
    def n_projects(self) -> int:
        return len(self.project_ids)

    @property
    def n_edges(self) -> int:
        return len(self.src)

    @property
    def out_degree(self) -> np.ndarray:
        """Edge count per user index (founders who never back have 0)."""
        return np.bincount(self.src, minlength=self.n_users)

    @property
    def backers(self) -> frozenset[str]:
        return frozenset(self.users[i] for i in np.unique(self.src))

    @property
    def founders(self) -> frozenset[str]:
        return frozenset(self.users[i] for i in np.unique(self.founder))

    @property
    def projects(self) -> dict[str, ProjectRecord]:
        return {pid: self.project(pid) for pid in self.project_ids}

    def project(self, pid: str) -> ProjectRecord:
        i = self.project_index[pid]
        return ProjectRecord(
            id=pid,
            founder=self.users[self.founder[i]],
            start=int(self.start[i]),
            deadline=int(self.deadline[i]),
            popularity=int(self.popularity[i]),
            start_imputed=bool(self.start_imputed[i]),
        )

    def backings(self) -> Iterator[Backing]:
        users, pids = self.users, self.project_ids
        for s, d, t in zip(self.src.tolist(), self.dst.tolist(), self.time.tolist()):
            yield Backing(users[s], pids[d], t)

    @staticmethod
    def _csr(keys: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
        order = np.argsort(keys, kind="stable")
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(keys, minlength=n), out=indptr[1:])
        return indptr, order

    @property
    def index_by_backer(self) -> tuple[np.ndarray, np.ndarray]:
        """CSR ``(indptr, edge_ids)`` keyed by user index."""
        if self._by_backer is None:
            self._by_backer = self._csr(self.src, self.n_users)
        return self._by_backer

    @property
    def index_by_project(self) -> tuple[np.ndarray, np.ndarray]:
        if self._by_project is None:
            self._by_project = self._csr(self.dst, self.n_projects)
        return self._by_project

    @property
    def lifespan_index(self) -> LifespanIndex:
        if self._lifespan is None:
            self._lifespan = LifespanIndex(self.start, self.deadline)
        return self._lifespan

    def edges_of_backer(self, backer: str) -> list[Backing]:
        indptr, ids = self.index_by_backer
        u = self.user_index[backer]
        return [self._edge(e) for e in ids[indptr[u]:indptr[u + 1]]]

    def edges_of_project(self, pid: str) -> list[Backing]:
        indptr, ids = self.index_by_project
        p = self.project_index[pid]
        return [self._edge(e) for e in ids[indptr[p]:indptr[p + 1]]]

    def _edge(self, e) -> Backing:
        return Backing(self.users[self.src[e]], self.project_ids[self.dst[e]], int(self.time[e]))

    def live_projects(self, t: int) -> list[str]:
        return [self.project_ids[i] for i in self.lifespan_index.live_indices(t)]

    def with_targets(self, dst: np.ndarray) -> "TemporalBipartiteGraph":
        """Same users, projects, sources and times; new edge targets.

        ``dst`` must be aligned with this graph's (already sorted) edge order.
        Project spans are copied verbatim; popularity is recomputed from the
        new edges, so callers that need the observed weights keep the
        original graph around.
        """
        return TemporalBipartiteGraph(
            users=self.users,
            project_ids=self.project_ids,
            founder=self.founder,
            start=self.start,
            deadline=self.deadline,
            src=self.src,
            dst=np.asarray(dst, dtype=np.int64),
            time=self.time,
            start_imputed=self.start_imputed,
        )

    def edge_multiset(self) -> dict[Backing, int]:
        out: dict[Backing, int] = {}
        for b in self.backings():
            out[b] = out.get(b, 0) + 1
        return out

    def same_as(self, other: "TemporalBipartiteGraph") -> bool:
        """Equality on node sets, edge multiset and project spans."""
        if set(self.project_ids) != set(other.project_ids):
            return False
        if self.backers != other.backers or self.founders != other.founders:
            return False
        for pid in self.project_ids:
            a, b = self.project(pid), other.project(pid)
            if (a.founder, a.start, a.deadline) != (b.founder, b.start, b.deadline):
                return False
        return self.edge_multiset() == other.edge_multiset()

    @classmethod
    def from_records(
        cls,
        projects: Iterable[ProjectRecord | tuple],
        backings: Iterable[Backing | tuple],
    ) -> "TemporalBipartiteGraph":
        """Build from in-memory records.

        Projects are ``(id, founder, deadline[, start])`` tuples or
        ProjectRecords; a missing start is derived from the first backing.
        """
        partial = []
        for rec in projects:
            if isinstance(rec, ProjectRecord):
                partial.append((rec.id, rec.founder, rec.deadline, rec.start))
            else:
                rec = tuple(rec)
                partial.append((rec[0], rec[1], rec[2], rec[3] if len(rec) > 3 else None))
        edges = [Backing(*b) for b in backings]
        return _assemble(partial, edges, "<records>")


def derive_project_spans(
    edges: Iterable[Backing],
    projects: Iterable[tuple],
) -> list[ProjectRecord]:
    """Fill absent starts with the first backing time into each project.

    ``projects`` are ``(id, founder, deadline, start_or_None)``.  A project
    with neither backings nor a start gets ``start = deadline`` and is marked
    ``start_imputed``; popularity counts the edges targeting each project.
    """
    first: dict[str, int] = {}
    count: dict[str, int] = {}
    for b in edges:
        t = int(b.time)
        if b.project not in first or t < first[b.project]:
            first[b.project] = t
        count[b.project] = count.get(b.project, 0) + 1
    out = []
    for pid, founder, deadline, start in projects:
        imputed = False
        if start is None:
            if pid in first:
                start = first[pid]
            else:
                start, imputed = deadline, True
        out.append(ProjectRecord(pid, founder, int(start), int(deadline), count.get(pid, 0), imputed))
    return out


def _assemble(partial: list[tuple], edges: list[Backing], source: str) -> TemporalBipartiteGraph:
    seen = set()
    for pid, *_ in partial:
        if pid in seen:
            raise GraphFormatError(f"duplicate project_id {pid!r}", source)
        seen.add(pid)
    for b in edges:
        if b.project not in seen:
            raise GraphFormatError(f"backing references unknown project_id {b.project!r}", source)
    records = derive_project_spans(edges, partial)

    users: dict[str, int] = {}
    for b in edges:
        users.setdefault(b.backer, len(users))
    for r in records:
        users.setdefault(r.founder, len(users))
    pidx = {r.id: i for i, r in enumerate(records)}
    n = len(edges)
    src = np.fromiter((users[b.backer] for b in edges), dtype=np.int64, count=n)
    dst = np.fromiter((pidx[b.project] for b in edges), dtype=np.int64, count=n)
    time = np.fromiter((b.time for b in edges), dtype=np.int64, count=n)
    return TemporalBipartiteGraph(
        users=tuple(users),
        project_ids=tuple(r.id for r in records),
        founder=np.array([users[r.founder] for r in records], dtype=np.int64),
        start=np.array([r.start for r in records], dtype=np.int64),
        deadline=np.array([r.deadline for r in records], dtype=np.int64),
        src=src,
        dst=dst,
        time=time,
        start_imputed=np.array([r.start_imputed for r in records], dtype=bool),
    )


@contextmanager
def _text(source) -> Iterator[tuple[IO[str], str]]:
    if isinstance(source, (bytes, bytearray)):
        yield io.StringIO(source.decode("utf-8")), "<bytes>"
    elif isinstance(source, str) or hasattr(source, "__fspath__"):
        with open(source, encoding="utf-8", newline="") as fh:
            yield fh, str(source)
    elif isinstance(source, io.TextIOBase):
        yield source, str(getattr(source, "name", "<stream>"))
    else:
        yield io.TextIOWrapper(source, encoding="utf-8", newline=""), str(getattr(source, "name", "<stream>"))


def _rows(source, required: tuple[str, ...], optional: tuple[str, ...] = ()):
    with _text(source) as (fh, name):
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise GraphFormatError("missing header", name, 1) from None
        header = [h.strip().lstrip("\ufeff") for h in header]
        missing = [c for c in required if c not in header]
        if missing:
            raise GraphFormatError(f"header lacks column(s) {', '.join(missing)}", name, 1)
        cols = {c: header.index(c) for c in required + optional if c in header}
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise GraphFormatError(f"expected {len(header)} fields, got {len(row)}", name, reader.line_num)
            yield name, reader.line_num, {c: row[i].strip() for c, i in cols.items()}


def _read_backings(source, known_projects: set[str]) -> list[Backing]:
    edges = []
    for name, line, row in _rows(source, BACKINGS_HEADER):
        if not row["backer_id"] or not row["project_id"]:
            raise GraphFormatError("empty identifier", name, line)
        if row["project_id"] not in known_projects:
            raise GraphFormatError(f"unknown project_id {row['project_id']!r}", name, line)
        try:
            t = parse_timestamp(row["timestamp"])
        except ValueError as exc:
            raise GraphFormatError(str(exc), name, line) from None
        edges.append(Backing(row["backer_id"], row["project_id"], t))
    return edges


def _read_projects(source) -> list[tuple]:
    out, seen = [], set()
    for name, line, row in _rows(source, PROJECTS_HEADER, ("start",)):
        pid, founder = row["project_id"], row["founder_id"]
        if not pid or not founder:
            raise GraphFormatError("empty identifier", name, line)
        if pid in seen:
            raise GraphFormatError(f"duplicate project_id {pid!r}", name, line)
        seen.add(pid)
        try:
            deadline = parse_timestamp(row["deadline"])
            start = parse_timestamp(row["start"]) if row.get("start") else None
        except ValueError as exc:
            raise GraphFormatError(str(exc), name, line) from None
        out.append((pid, founder, deadline, start))
    return out


def load_graph(backings_source, projects_source) -> TemporalBipartiteGraph:
    """Read ``backings.csv`` and ``projects.csv`` into a graph.

    Sources may be paths, bytes, or binary/text streams.  Edges need not be
    chronological.
    """
    projects = _read_projects(projects_source)
    edges = _read_backings(backings_source, {p[0] for p in projects})
    return _assemble(projects, edges, "<input>")


def save_graph(graph: TemporalBipartiteGraph, backings_path, projects_path) -> None:
    """Write the canonical CSV pair (epoch seconds, explicit starts)."""
    with open(backings_path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BACKINGS_HEADER)
        for b in graph.backings():
            w.writerow(b)
    with open(projects_path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PROJECTS_HEADER + ("start",))
        for i, pid in enumerate(graph.project_ids):
            w.writerow((pid, graph.users[graph.founder[i]], int(graph.deadline[i]), int(graph.start[i])))
