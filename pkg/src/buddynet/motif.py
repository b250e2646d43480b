"""Buddy-relation census.

A case is a triple ``(x, P_z, w)``: founder ``x`` and another user ``w`` both
backed ``P_z``, which ``x`` did not found.  The case is satisfied when ``w``
backs some project founded by ``x`` strictly after both of those backings.
Repeated backings of one project by one user collapse to the earliest.

The census is computed with array joins so that it can be re-run once per
Monte Carlo trial on graphs with hundreds of thousands of edges.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .graph import TemporalBipartiteGraph

RATIO_MODES = ("pooled", "per-pair-mean")


class UndefinedRatioError(ValueError):
    """Ratio requested over an empty set of co-backing cases."""


@dataclass(frozen=True)
class BuddyCase:
    founder_x: str
    shared_project: str
    cobacker_w: str
    t_x: int
    t_w: int
    satisfied: bool
    witness_project: str | None = None
    t_back: int | None = None


def collapse_pairs(src, dst, time, n_projects):
    """Unique (user, project) pairs with their earliest backing time, sorted by (user, project)."""
    key = src * n_projects + dst
    order = np.lexsort((time, key))
    k = key[order]
    first = np.ones(len(k), dtype=bool)
    first[1:] = k[1:] != k[:-1]
    sel = order[first]
    return src[sel], dst[sel], time[sel]


def latest_backing_into_founder(u, p, t, founder, n_users):
    """For each (user, founder) pair: sorted keys ``user*n_users + founder`` and the max backing time."""
    key = u * n_users + founder[p]
    order = np.argsort(key, kind="stable")
    k, tt = key[order], t[order]
    if len(k) == 0:
        return k, tt
    starts = np.flatnonzero(np.r_[True, k[1:] != k[:-1]])
    return k[starts], np.maximum.reduceat(tt, starts)


@dataclass
class CensusArrays:
    # per (x, P_z) pair
    pair_x: np.ndarray
    pair_z: np.ndarray
    pair_tx: np.ndarray
    pair_count: np.ndarray
    pair_sat: np.ndarray
    # per case; empty when not kept
    case_pair: np.ndarray | None = None
    case_w: np.ndarray | None = None
    case_tw: np.ndarray | None = None
    case_sat: np.ndarray | None = None

    @property
    def denominator(self) -> int:
        return int(self.pair_count.sum())

    @property
    def numerator(self) -> int:
        return int(self.pair_sat.sum())


def census_arrays(
    src: np.ndarray,
    dst: np.ndarray,
    time: np.ndarray,
    founder: np.ndarray,
    n_users: int,
    exclude_founder_w: bool = False,
    keep_cases: bool = False,
) -> CensusArrays:
    """Array kernel behind :func:`enumerate_buddy_cases`.

    ``founder[p]`` is the founding user index of project ``p``.
    """
    n_projects = len(founder)
    is_founder = np.zeros(n_users, dtype=bool)
    is_founder[founder] = True

    u, p, t = collapse_pairs(src, dst, time, n_projects)

    xmask = is_founder[u] & (founder[p] != u)
    pair_x, pair_z, pair_tx = u[xmask], p[xmask], t[xmask]

    # co-backers of each pair's project via a project-major view of the pairs
    porder = np.argsort(p, kind="stable")
    indeg = np.bincount(p, minlength=n_projects)
    indptr = np.concatenate(([0], np.cumsum(indeg)))
    counts = indeg[pair_z]
    total = int(counts.sum())
    rep = np.repeat(np.arange(len(pair_x)), counts)
    within = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
    rows = porder[indptr[pair_z][rep] + within]
    w, tw = u[rows], t[rows]

    keep = w != pair_x[rep]
    if exclude_founder_w:
        keep &= ~is_founder[w]
    rep, w, tw = rep[keep], w[keep], tw[keep]

    lkeys, ltimes = latest_backing_into_founder(u, p, t, founder, n_users)
    q = w * n_users + pair_x[rep]
    pos = np.searchsorted(lkeys, q)
    pos_c = np.minimum(pos, max(len(lkeys) - 1, 0))
    found = (pos < len(lkeys)) & (lkeys[pos_c] == q) if len(lkeys) else np.zeros(len(q), dtype=bool)
    sat = found & (ltimes[pos_c] > np.maximum(pair_tx[rep], tw)) if len(lkeys) else found

    n_pairs = len(pair_x)
    out = CensusArrays(
        pair_x=pair_x,
        pair_z=pair_z,
        pair_tx=pair_tx,
        pair_count=np.bincount(rep, minlength=n_pairs).astype(np.int64),
        pair_sat=np.bincount(rep[sat], minlength=n_pairs).astype(np.int64),
    )
    if keep_cases:
        out.case_pair, out.case_w, out.case_tw, out.case_sat = rep, w, tw, sat
    return out


class BuddyCensus:
    """Result of a census: aggregate counts, per-pair counts, lazily materialized cases."""

    def __init__(self, arrays: CensusArrays, graph: TemporalBipartiteGraph | None = None,
                 exclude_founder_w: bool = False):
        self.arrays = arrays
        self.graph = graph
        self.exclude_founder_w = exclude_founder_w

    @classmethod
    def from_pair_counts(cls, pairs: list[tuple[int, int]]) -> "BuddyCensus":
        """Census carrying only per-pair ``(co-backers, satisfied)`` counts."""
        c = np.array([a for a, _ in pairs], dtype=np.int64)
        s = np.array([b for _, b in pairs], dtype=np.int64)
        if np.any(s > c) or np.any(c < 0):
            raise ValueError("satisfied count exceeds co-backer count")
        idx = np.arange(len(pairs), dtype=np.int64)
        return cls(CensusArrays(idx, idx, idx, c, s))

    @property
    def denominator(self) -> int:
        return self.arrays.denominator

    @property
    def numerator(self) -> int:
        return self.arrays.numerator

    @property
    def per_pair(self) -> dict[tuple[str, str], tuple[int, int]]:
        a, g = self.arrays, self.graph
        if g is None:
            return {(int(x), int(z)): (int(c), int(s))
                    for x, z, c, s in zip(a.pair_x, a.pair_z, a.pair_count, a.pair_sat)}
        return {(g.users[x], g.project_ids[z]): (int(c), int(s))
                for x, z, c, s in zip(a.pair_x, a.pair_z, a.pair_count, a.pair_sat)}

    def summary(self) -> dict:
        out = {"denominator": self.denominator, "numerator": self.numerator}
        for key, fn in (("pooled_ratio", lambda: buddy_ratio(self, "pooled")),
                        ("per_pair_mean", lambda: buddy_ratio(self, "per-pair-mean"))):
            try:
                out[key] = fn()
            except UndefinedRatioError:
                out[key] = None
        try:
            out["mean_cobackers"], out["mean_satisfied"] = cobacker_stats(self)
        except UndefinedRatioError:
            out["mean_cobackers"] = out["mean_satisfied"] = None
        return out

    def cases(self) -> Iterator[BuddyCase]:
        """Every case, in (x, P_z) pair order then co-backer order.

        The witness of a satisfied case is the earliest qualifying backing
        (ties broken by project order).
        """
        a, g = self.arrays, self.graph
        if g is None or a.case_pair is None:
            raise ValueError("census was computed without case detail")
        witnesses = _witness_lookup(g)
        for i, w, tw, sat in zip(a.case_pair.tolist(), a.case_w.tolist(),
                                 a.case_tw.tolist(), a.case_sat.tolist()):
            x, z, tx = int(a.pair_x[i]), int(a.pair_z[i]), int(a.pair_tx[i])
            wp = tb = None
            if sat:
                times, projs = witnesses[(w, x)]
                j = bisect.bisect_right(times, max(tx, tw))
                tb, wp = times[j], g.project_ids[projs[j]]
            yield BuddyCase(g.users[x], g.project_ids[z], g.users[w], tx, tw, bool(sat), wp, tb)


def _witness_lookup(g: TemporalBipartiteGraph) -> dict[tuple[int, int], tuple[list, list]]:
    u, p, t = collapse_pairs(g.src, g.dst, g.time, g.n_projects)
    found: dict[tuple[int, int], list] = {}
    for ui, pi, ti in zip(u.tolist(), p.tolist(), t.tolist()):
        found.setdefault((ui, int(g.founder[pi])), []).append((ti, pi))
    out = {}
    for k, items in found.items():
        items.sort()
        out[k] = ([a for a, _ in items], [b for _, b in items])
    return out


def enumerate_buddy_cases(graph: TemporalBipartiteGraph, exclude_founder_w: bool = False,
                          keep_cases: bool = True) -> BuddyCensus:
    arrays = census_arrays(graph.src, graph.dst, graph.time, graph.founder, graph.n_users,
                           exclude_founder_w=exclude_founder_w, keep_cases=keep_cases)
    return BuddyCensus(arrays, graph, exclude_founder_w)


def ratio_from_counts(pair_count: np.ndarray, pair_sat: np.ndarray, mode: str = "pooled") -> float:
    if mode in ("mean", "per-pair"):
        mode = "per-pair-mean"
    if mode == "pooled":
        den = int(pair_count.sum())
        if den == 0:
            raise UndefinedRatioError("buddy ratio undefined: no co-backing cases")
        return int(pair_sat.sum()) / den
    if mode == "per-pair-mean":
        nz = pair_count > 0
        if not nz.any():
            raise UndefinedRatioError("buddy ratio undefined: no pair with co-backers")
        return float(np.mean(pair_sat[nz] / pair_count[nz]))
    raise ValueError(f"unknown ratio mode {mode!r}; expected one of {RATIO_MODES}")


def buddy_ratio(census: BuddyCensus, mode: str = "pooled") -> float:
    return ratio_from_counts(census.arrays.pair_count, census.arrays.pair_sat, mode)


def cobacker_stats(census: BuddyCensus) -> tuple[float, float]:
    """Mean co-backer count and mean satisfied count over pairs with co-backers."""
    c, s = census.arrays.pair_count, census.arrays.pair_sat
    nz = c > 0
    if not nz.any():
        raise UndefinedRatioError("no (founder, project) pair has co-backers")
    return float(c[nz].mean()), float(s[nz].mean())
