"""Conditional uniform graph (CUG) test for the buddy ratio.

Each observed edge ``a -> P_b`` at time ``t`` is redrawn as ``a -> P_k`` where
``P_k`` ranges over the projects live at ``t`` and is chosen with probability
proportional to its observed in-degree.  Sources and times are untouched, so
every backer keeps its out-degree.

Randomness: trial ``i`` of a run with master seed ``S`` uses
``numpy.random.Generator(PCG64(SeedSequence(S, spawn_key=(i,))))``.  Trials
are therefore independent of execution order and worker count.
"""

from __future__ import annotations

import logging
import multiprocessing as mp
import os
import secrets
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .graph import Backing, TemporalBipartiteGraph
from .motif import UndefinedRatioError, census_arrays, ratio_from_counts

log = logging.getLogger(__name__)


class InvariantViolation(AssertionError):
    """A condition the null model guarantees by construction did not hold."""


@dataclass(frozen=True)
class CandidateSet:
    edge_time: int
    members: list[str]
    weights: list[int]
    forced: str | None = None

    @property
    def total_weight(self) -> int:
        return sum(self.weights)

    def __len__(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class ChoiceDistribution:
    members: list[str]
    probabilities: list[Fraction]

    def as_float(self) -> np.ndarray:
        return np.array([float(p) for p in self.probabilities])


def candidate_set(graph: TemporalBipartiteGraph, edge: Backing) -> CandidateSet:
    """Projects live at the edge's time, weighted by observed in-degree.

    The edge's own target is appended when its lifespan does not cover the
    edge time (edges after a deadline are kept, not dropped, on load).
    """
    t = int(edge.time)
    live = graph.lifespan_index.live_indices(t)
    members = [graph.project_ids[i] for i in live]
    weights = [int(graph.popularity[i]) for i in live]
    forced = None
    orig = graph.project_index[edge.project]
    if not (graph.start[orig] <= t <= graph.deadline[orig]):
        forced = edge.project
        members.append(edge.project)
        weights.append(int(graph.popularity[orig]))
    return CandidateSet(t, members, weights, forced)


def choice_distribution(cs: CandidateSet) -> ChoiceDistribution:
    total = cs.total_weight
    if total <= 0:
        raise InvariantViolation("candidate set has zero total weight")
    return ChoiceDistribution(list(cs.members), [Fraction(w, total) for w in cs.weights])


def sample_index(cum_weights: np.ndarray, rng: np.random.Generator, size=None):
    """Draw indices from integer cumulative weights.

    A uniform integer ``r`` in ``[0, total)`` picks the first index whose
    cumulative weight exceeds ``r``; member ``k`` is hit with probability
    exactly ``w_k / total``.
    """
    cum = np.asarray(cum_weights, dtype=np.int64)
    r = rng.integers(0, cum[-1], size=size)
    return np.searchsorted(cum, r, side="right")


def sample_candidate(cs: CandidateSet, rng: np.random.Generator, size=None):
    idx = sample_index(np.cumsum(cs.weights), rng, size)
    if size is None:
        return cs.members[int(idx)]
    return [cs.members[i] for i in idx]


def trial_rng(master_seed: int, trial: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(master_seed, spawn_key=(trial,))))


class Rewirer:
    """Precomputed sampling tables for one observed graph.

    All live sets are concatenated into one member array with a global
    running sum of weights; segment ``g`` owns the slice
    ``indptr[g]:indptr[g+1]``.  A draw for an edge in segment ``g`` is offset
    by the segment's base so one ``searchsorted`` serves every edge.
    """

    def __init__(self, graph: TemporalBipartiteGraph):
        self.graph = graph
        li = graph.lifespan_index
        weights = np.asarray(graph.popularity, dtype=np.int64)
        self.members = li.members
        self.gcum = np.cumsum(weights[li.members])
        base = np.concatenate(([0], self.gcum))[li.indptr]
        self.seg_base = base[:-1]
        self.seg_total = base[1:] - base[:-1]

        t, orig = graph.time, graph.dst
        self.edge_seg = li.segment_of(t)
        self.forced = ~((graph.start[orig] <= t) & (t <= graph.deadline[orig]))
        self.edge_base = self.seg_base[self.edge_seg]
        self.edge_live_total = self.seg_total[self.edge_seg]
        self.high = self.edge_live_total + np.where(self.forced, weights[orig], 0)
        if len(self.high) and self.high.min() < 1:
            raise InvariantViolation("edge with empty candidate set")

    @property
    def n_forced(self) -> int:
        return int(self.forced.sum())

    def draw(self, rng: np.random.Generator) -> np.ndarray:
        """New target index per edge, aligned with ``graph.dst``."""
        if len(self.high) == 0:
            return np.empty(0, dtype=np.int64)
        r = rng.integers(0, self.high)
        if len(self.members) == 0:
            return self.graph.dst.copy()
        in_live = r < self.edge_live_total
        pos = np.searchsorted(self.gcum, self.edge_base + np.where(in_live, r, 0), side="right")
        pos = np.minimum(pos, len(self.members) - 1)
        return np.where(in_live, self.members[pos], self.graph.dst)

    def check(self, new_dst: np.ndarray) -> None:
        g, t = self.graph, self.graph.time
        live = (g.start[new_dst] <= t) & (t <= g.deadline[new_dst])
        bad = ~(live | (self.forced & (new_dst == g.dst)))
        if bad.any():
            raise InvariantViolation(f"{int(bad.sum())} rewired edges fall outside their target's lifespan")


def rewire_graph(graph: TemporalBipartiteGraph, rng: np.random.Generator,
                 rewirer: Rewirer | None = None) -> TemporalBipartiteGraph:
    rewirer = rewirer or Rewirer(graph)
    return graph.with_targets(rewirer.draw(rng))


def monte_carlo_p_value(observed: float, simulated) -> float:
    """Add-one upper-tail estimate ``(1 + #{sim >= obs}) / (1 + n)``."""
    simulated = np.asarray(simulated, dtype=float)
    return (1 + int(np.count_nonzero(simulated >= observed))) / (1 + len(simulated))


@dataclass
class CugResult:
    observed_ratio: float
    ratio_mode: str
    trials: int
    master_seed: int
    simulated_ratios: list[float]
    p_value: float
    mean_simulated: float
    degenerate_trials: list[int] = field(default_factory=list)
    forced_edges: int = 0
    observed_denominator: int = 0
    observed_numerator: int = 0

    def to_dict(self) -> dict:
        return {
            "observed_ratio": self.observed_ratio,
            "ratio_mode": self.ratio_mode,
            "trials": self.trials,
            "master_seed": self.master_seed,
            "simulated_ratios": list(self.simulated_ratios),
            "mean_simulated": self.mean_simulated,
            "p_value": self.p_value,
            "degenerate_trials": list(self.degenerate_trials),
            "forced_edges": self.forced_edges,
            "observed_denominator": self.observed_denominator,
            "observed_numerator": self.observed_numerator,
        }

    def central_interval(self, level: float = 0.95) -> tuple[float, float]:
        a = (1 - level) / 2
        lo, hi = np.quantile(self.simulated_ratios, [a, 1 - a])
        return float(lo), float(hi)


# per-process state for worker pools; set by _init_worker
_STATE: dict = {}


def _init_worker(rewirer: Rewirer, mode: str, exclude_founder_w: bool, check: bool, seed: int):
    _STATE.update(rewirer=rewirer, mode=mode, exclude=exclude_founder_w, check=check, seed=seed)


def _run_trials(indices: list[int]) -> list[tuple[int, float, bool]]:
    rw: Rewirer = _STATE["rewirer"]
    g = rw.graph
    out = []
    for i in indices:
        new_dst = rw.draw(trial_rng(_STATE["seed"], i))
        if _STATE["check"]:
            rw.check(new_dst)
        arr = census_arrays(g.src, new_dst, g.time, g.founder, g.n_users,
                            exclude_founder_w=_STATE["exclude"])
        try:
            out.append((i, ratio_from_counts(arr.pair_count, arr.pair_sat, _STATE["mode"]), False))
        except UndefinedRatioError:
            out.append((i, 0.0, True))
    return out


def default_workers() -> int:
    env = os.environ.get("BUDDYNET_THREADS")
    return max(1, int(env)) if env else 1


def cug_test(
    graph: TemporalBipartiteGraph,
    trials: int = 100,
    master_seed: int | None = None,
    ratio_mode: str = "pooled",
    parallel: int = 1,
    exclude_founder_w: bool = False,
    check_invariants: bool = True,
) -> CugResult:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if ratio_mode == "mean":
        ratio_mode = "per-pair-mean"
    if master_seed is None:
        master_seed = secrets.randbits(63)
    obs = census_arrays(graph.src, graph.dst, graph.time, graph.founder, graph.n_users,
                        exclude_founder_w=exclude_founder_w)
    observed = ratio_from_counts(obs.pair_count, obs.pair_sat, ratio_mode)

    rewirer = Rewirer(graph)
    state = (rewirer, ratio_mode, exclude_founder_w, check_invariants, master_seed)
    indices = list(range(trials))
    if parallel <= 1:
        _init_worker(*state)
        rows = _run_trials(indices)
    else:
        chunks = [indices[k::parallel] for k in range(parallel) if indices[k::parallel]]
        ctx = mp.get_context("fork")
        with ProcessPoolExecutor(max_workers=parallel, mp_context=ctx,
                                 initializer=_init_worker, initargs=state) as pool:
            rows = [r for part in pool.map(_run_trials, chunks) for r in part]
    rows.sort()
    sim = [r for _, r, _ in rows]
    degenerate = [i for i, _, d in rows if d]
    if degenerate:
        log.warning("%d degenerate trials recorded with ratio 0", len(degenerate))
    return CugResult(
        observed_ratio=observed,
        ratio_mode=ratio_mode,
        trials=trials,
        master_seed=int(master_seed),
        simulated_ratios=sim,
        p_value=monte_carlo_p_value(observed, sim),
        mean_simulated=float(np.mean(sim)),
        degenerate_trials=degenerate,
        forced_edges=rewirer.n_forced,
        observed_denominator=obs.denominator,
        observed_numerator=obs.numerator,
    )
