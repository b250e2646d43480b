"""Synthetic backing networks with a tunable planted buddy effect.

Generative story:

* every project gets its own founder, a uniform start inside the horizon and a
  duration from ``project_duration`` (seconds, or an inclusive ``[lo, hi]``
  range);
* each project has a fixed base attractiveness ``1 + Lomax(popularity_exponent)``
  (a Pareto law with minimum 1);
* each backer has a fixed activity weight ``1 + Lomax(activity_exponent)``;
  events pick their actor proportionally, giving a right-skewed out-degree;
* event times are distinct seconds drawn with density proportional to the
  total attractiveness of the projects live at that moment;
* events are processed in time order.  With probability ``buddy_boost``
  the actor backs a live, not-yet-backed project of a founder they have
  already co-backed with (a planted completion); otherwise, or if no such
  project exists, the actor backs a live project drawn by attractiveness.

With ``buddy_boost = 0`` and a fixed duration, a project's expected in-degree
is proportional to its attractiveness, so weighting targets by observed
in-degree (what the null model does) reproduces the generating law up to
sampling noise.  Variable durations break that proportionality and bias the
null model; keep them for stress tests only.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .graph import LifespanIndex, TemporalBipartiteGraph

DAY = 86_400


class ConfigError(ValueError):
    pass


@dataclass
class SynthConfig:
    n_backers: int = 2000
    n_projects: int = 100
    n_events: int = 10_000
    horizon: int = 365 * DAY
    project_duration: int | tuple[int, int] = 30 * DAY
    founder_backer_fraction: float = 0.5
    popularity_exponent: float = 1.5
    activity_exponent: float = 1.5
    buddy_boost: float = 0.0
    seed: int = 0
    epoch: int = 1_305_504_000  # 2011-05-16, only shifts timestamps

    def __post_init__(self):
        if isinstance(self.project_duration, list):
            self.project_duration = tuple(self.project_duration)
        self.validate()

    def validate(self) -> None:
        for name in ("n_backers", "n_projects", "n_events", "horizon"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be >= 1")
        for name in ("founder_backer_fraction", "buddy_boost"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {v}")
        for name in ("popularity_exponent", "activity_exponent"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0")
        lo, hi = self.duration_range
        if not 0 <= lo <= hi:
            raise ConfigError("project_duration must satisfy 0 <= lo <= hi")
        if hi > self.horizon:
            raise ConfigError("project_duration exceeds horizon")
        if self.n_events > self.horizon:
            raise ConfigError("n_events cannot exceed horizon (event times are distinct seconds)")

    @property
    def duration_range(self) -> tuple[int, int]:
        d = self.project_duration
        if isinstance(d, (tuple, list)):
            return int(d[0]), int(d[1])
        return int(d), int(d)

    @classmethod
    def from_dict(cls, data: dict) -> "SynthConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self) -> dict:
        d = asdict(self)
        if isinstance(self.project_duration, tuple):
            d["project_duration"] = list(self.project_duration)
        return d


@dataclass(frozen=True)
class PlantedCompletion:
    backer: str
    founder: str
    project: str
    time: int
    shared_project: str


@dataclass
class GroundTruthLog:
    planted: list[PlantedCompletion] = field(default_factory=list)
    skipped_events: int = 0
    buddy_attempts: int = 0

    def to_dict(self) -> dict:
        return {
            "planted": [asdict(p) for p in self.planted],
            "n_planted": len(self.planted),
            "skipped_events": self.skipped_events,
            "buddy_attempts": self.buddy_attempts,
        }


class _Picker:
    """Attractiveness-weighted draws among the projects live at a time."""

    def __init__(self, li: LifespanIndex, attractiveness: np.ndarray):
        self.li = li
        self.gcum = np.cumsum(attractiveness[li.members])
        base = np.concatenate(([0.0], self.gcum))[li.indptr]
        self.seg_base, self.seg_total = base[:-1], base[1:] - base[:-1]

    def pick(self, t: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Project index per time, ``-1`` where nothing is live."""
        seg = self.li.segment_of(t)
        if len(self.li.members) == 0:
            return np.full(len(seg), -1, dtype=np.int64)
        lo, hi = self.li.indptr[seg], self.li.indptr[seg + 1]
        pos = np.searchsorted(self.gcum, self.seg_base[seg] + u * self.seg_total[seg], side="right")
        # float rounding may step one past the segment end
        pos = np.clip(pos, lo, np.maximum(hi - 1, 0))
        return np.where(hi == lo, -1, self.li.members[pos])


def _layout(cfg: SynthConfig, rng: np.random.Generator):
    lo, hi = cfg.duration_range
    dur = rng.integers(lo, hi + 1, size=cfg.n_projects)
    start = rng.integers(0, cfg.horizon - dur + 1)
    deadline = start + dur
    attract = 1.0 + rng.pareto(cfg.popularity_exponent, size=cfg.n_projects)
    activity = 1.0 + rng.pareto(cfg.activity_exponent, size=cfg.n_backers)
    return start, deadline, attract, activity


def _event_times(li: LifespanIndex, attract: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` distinct sorted integer times with density proportional to live attractiveness."""
    mass = np.diff(np.concatenate(([0.0], np.cumsum(attract[li.members])))[li.indptr])
    # segment g spans [bounds[g-1], bounds[g]); the outermost segments are never live
    lengths = np.zeros(li.n_segments)
    lengths[1:-1] = np.diff(li.bounds)
    weight = mass * lengths
    cum = np.cumsum(weight)
    if lengths[mass > 0].sum() < n:
        raise ConfigError(f"only {int(lengths[mass > 0].sum())} live seconds for {n} distinct event times")
    seg_lo = np.concatenate(([0], li.bounds))
    chosen = np.empty(0, dtype=np.int64)
    while len(chosen) < n:
        k = n - len(chosen)
        seg = np.minimum(np.searchsorted(cum, rng.random(k) * cum[-1], side="right"), li.n_segments - 1)
        t = seg_lo[seg] + np.floor(rng.random(k) * lengths[seg]).astype(np.int64)
        chosen = np.unique(np.concatenate([chosen, t]))
    if len(chosen) > n:
        chosen = np.sort(rng.choice(chosen, size=n, replace=False))
    return chosen


def generate(config: SynthConfig) -> tuple[TemporalBipartiteGraph, GroundTruthLog]:
    cfg = config
    cfg.validate()
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    start, deadline, attract, activity = _layout(cfg, rng)

    n_fb = int(round(cfg.founder_backer_fraction * cfg.n_projects))
    n_fb = min(n_fb, cfg.n_backers)
    backer_founders = rng.choice(cfg.n_backers, size=n_fb, replace=False)
    # user indices: backers 0..n_backers-1, then founders who never back
    founder = np.concatenate([backer_founders, cfg.n_backers + np.arange(cfg.n_projects - n_fb)])
    founder = founder[rng.permutation(cfg.n_projects)]
    users = tuple(f"b{i}" for i in range(cfg.n_backers)) + tuple(
        f"f{i}" for i in range(cfg.n_projects - n_fb))

    li = LifespanIndex(start, deadline)
    times = _event_times(li, attract, cfg.n_events, rng)
    actors = rng.choice(cfg.n_backers, size=cfg.n_events, p=activity / activity.sum())
    coin = rng.random(cfg.n_events)
    u = rng.random(cfg.n_events)

    picker = _Picker(li, attract)
    base_pick = picker.pick(times, u)
    truth = GroundTruthLog()

    if cfg.buddy_boost > 0:
        dst = _planted_pass(cfg, times, actors, coin, u, base_pick, founder, start, deadline, users, truth)
    else:
        dst = base_pick

    ok = dst >= 0
    truth.skipped_events = int((~ok).sum())
    graph = TemporalBipartiteGraph(
        users=users,
        project_ids=tuple(f"p{i}" for i in range(cfg.n_projects)),
        founder=founder,
        start=start + cfg.epoch,
        deadline=deadline + cfg.epoch,
        src=actors[ok],
        dst=dst[ok],
        time=times[ok] + cfg.epoch,
    )
    for i, p in enumerate(truth.planted):
        truth.planted[i] = PlantedCompletion(p.backer, p.founder, p.project, p.time + cfg.epoch, p.shared_project)
    return graph, truth


class BuddyTracker:
    """Who has co-backed with which founder, as events stream in time order.

    ``founder[p]`` is the founding user of project ``p``; ``backing_founders``
    flags users that are founders and also back.
    """

    def __init__(self, founder, backing_founders, start, deadline, n_users):
        self.founder = [int(x) for x in founder]
        self.is_fb = np.asarray(backing_founders, dtype=bool)
        self.start = [int(v) for v in start]
        self.deadline = [int(v) for v in deadline]
        self.project_of: dict[int, list[int]] = {}
        for p, x in enumerate(self.founder):
            self.project_of.setdefault(x, []).append(p)
        self.buddies: list[dict[int, int]] = [dict() for _ in range(n_users)]
        self.backers_of: list[list[int]] = [[] for _ in self.founder]
        self.backed: list[set[int]] = [set() for _ in range(n_users)]

    def eligible(self, b: int, t: int) -> list[tuple[int, int, int]]:
        """Sorted ``(P_x, x, P_z)``: live projects of b's buddy founders that b has not backed."""
        out = []
        for x, pz in self.buddies[b].items():
            for px in self.project_of[x]:
                if self.start[px] <= t <= self.deadline[px] and px not in self.backed[b]:
                    out.append((px, x, pz))
        out.sort()
        return out

    def record(self, b: int, p: int) -> None:
        if p in self.backed[b]:
            return
        fz = self.founder[p]
        b_counts = self.is_fb[b] and fz != b
        for w in self.backers_of[p]:
            if w == b:
                continue
            if self.is_fb[w] and fz != w:
                self.buddies[b].setdefault(w, p)
            if b_counts:
                self.buddies[w].setdefault(b, p)
        self.backers_of[p].append(b)
        self.backed[b].add(p)


def _planted_pass(cfg, times, actors, coin, u, base_pick, founder, start, deadline, users, truth):
    is_fb = np.zeros(len(users), dtype=bool)
    is_fb[founder[founder < cfg.n_backers]] = True
    tracker = BuddyTracker(founder, is_fb, start, deadline, len(users))
    dst = base_pick.copy()
    for i in range(len(times)):
        t, b = int(times[i]), int(actors[i])
        target = int(base_pick[i])
        if coin[i] < cfg.buddy_boost and tracker.buddies[b]:
            truth.buddy_attempts += 1
            eligible = tracker.eligible(b, t)
            if eligible:
                px, x, pz = eligible[int(u[i] * len(eligible))]
                target = px
                truth.planted.append(PlantedCompletion(users[b], users[x], f"p{px}", t, f"p{pz}"))
        dst[i] = target
        if target >= 0:
            tracker.record(b, target)
    return dst


def generate_shape(
    n_edges: int,
    n_backers: int,
    n_projects: int,
    seed: int = 0,
    founder_backer_fraction: float = 0.5,
    horizon: int = 6 * 365 * DAY,
    project_duration: int | tuple[int, int] = 30 * DAY,
    popularity_exponent: float = 1.5,
    activity_exponent: float = 1.2,
    epoch: int = 1_305_504_000,
) -> TemporalBipartiteGraph:
    """Null-process graph with exactly the requested edge/backer/project counts.

    Every backer gets one edge, the remainder go to backers by heavy-tailed
    activity.  Edge times are redrawn until some project is live.
    """
    if n_edges < n_backers:
        raise ConfigError("need at least one edge per backer")
    rng = np.random.Generator(np.random.PCG64(seed))
    cfg = SynthConfig(n_backers=n_backers, n_projects=n_projects, n_events=1, horizon=horizon,
                      project_duration=project_duration, popularity_exponent=popularity_exponent,
                      activity_exponent=activity_exponent, seed=seed)
    start, deadline, attract, activity = _layout(cfg, rng)
    extra = rng.choice(n_backers, size=n_edges - n_backers, p=activity / activity.sum())
    src = np.concatenate([np.arange(n_backers), extra])

    n_fb = min(int(round(founder_backer_fraction * n_projects)), n_backers)
    backer_founders = rng.choice(n_backers, size=n_fb, replace=False)
    founder = np.concatenate([backer_founders, n_backers + np.arange(n_projects - n_fb)])
    founder = founder[rng.permutation(n_projects)]

    li = LifespanIndex(start, deadline)
    picker = _Picker(li, attract)
    times = rng.integers(0, horizon, size=n_edges)
    dst = picker.pick(times, rng.random(n_edges))
    while (miss := dst < 0).any():
        times[miss] = rng.integers(0, horizon, size=int(miss.sum()))
        dst[miss] = picker.pick(times[miss], rng.random(int(miss.sum())))
    users = tuple(f"b{i}" for i in range(n_backers)) + tuple(f"f{i}" for i in range(n_projects - n_fb))
    return TemporalBipartiteGraph(
        users=users,
        project_ids=tuple(f"p{i}" for i in range(n_projects)),
        founder=founder,
        start=start + epoch,
        deadline=deadline + epoch,
        src=src,
        dst=dst,
        time=times + epoch,
    )


def write_truth(truth: GroundTruthLog, config: SynthConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"config": config.to_dict(), **truth.to_dict()}, fh, indent=2, sort_keys=True)
        fh.write("\n")
