"""Slow, obviously-correct reference implementations used by the tests.

Nothing here imports the package's array kernels.
"""

import math
from collections import Counter


def earliest_times(edges):
    """(user, project) -> earliest backing time, by a plain loop."""
    first = {}
    for user, project, t in edges:
        if (user, project) not in first or t < first[(user, project)]:
            first[(user, project)] = t
    return first


def brute_census(users, founder_of, edges, exclude_founder_w=False):
    """Enumerate every (x, P_z, w) triple over all users and projects.

    ``founder_of`` maps project -> founder; ``edges`` are (user, project, t).
    Returns a dict (x, P_z, w) -> (t_x, t_w, satisfied, witness, t_back).
    """
    first = earliest_times(edges)
    founders = set(founder_of.values())
    projects = sorted(founder_of)
    cases = {}
    for x in users:
        if x not in founders:
            continue
        for pz in projects:
            if founder_of[pz] == x or (x, pz) not in first:
                continue
            for w in users:
                if w == x or (w, pz) not in first:
                    continue
                if exclude_founder_w and w in founders:
                    continue
                tx, tw = first[(x, pz)], first[(w, pz)]
                best = None
                for px in projects:
                    if founder_of[px] != x or px == pz or (w, px) not in first:
                        continue
                    tb = first[(w, px)]
                    if tb > max(tx, tw):
                        cand = (tb, projects.index(px), px)
                        if best is None or cand < best:
                            best = cand
                if best is None:
                    cases[(x, pz, w)] = (tx, tw, False, None, None)
                else:
                    cases[(x, pz, w)] = (tx, tw, True, best[2], best[0])
    return cases


def naive_summary(degrees):
    d = sorted(degrees)
    n = len(d)
    mean = math.fsum(d) / n
    var = math.fsum((v - mean) ** 2 for v in d) / n

    def rank(q):
        r = math.ceil(q * n)
        return d[max(r, 1) - 1]

    counts = Counter(d)
    top = max(counts.values())
    mode = min(v for v, c in counts.items() if c == top)
    return {
        "n": n,
        "mean": mean,
        "std": math.sqrt(var),
        "min": d[0],
        "q25": rank(0.25),
        "median": rank(0.5),
        "q75": rank(0.75),
        "max": d[-1],
        "mode": mode,
        "zero_count": sum(1 for v in d if v == 0),
    }


def live_scan(spans, t):
    """Projects whose inclusive [start, deadline] contains t."""
    return sorted(p for p, (s, e) in spans.items() if s <= t <= e)
