import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from buddynet.graph import TemporalBipartiteGraph  # noqa: E402
from report import ACCEPTANCE_LINES  # noqa: E402


def random_small_graph(rng: random.Random, max_users=12, max_projects=6, max_edges=40, max_time=20):
    """Random toy dataset; returns (users, founder_of, spans, edges, graph)."""
    n_users = rng.randint(2, max_users)
    n_projects = rng.randint(1, max_projects)
    users = [f"u{i}" for i in range(n_users)]
    founder_of = {f"p{j}": rng.choice(users) for j in range(n_projects)}
    spans = {}
    for p in founder_of:
        s = rng.randint(0, max_time)
        spans[p] = (s, s + rng.randint(0, max_time))
    edges = [
        (rng.choice(users), rng.choice(list(founder_of)), rng.randint(0, max_time))
        for _ in range(rng.randint(0, max_edges))
    ]
    graph = TemporalBipartiteGraph.from_records(
        [(p, founder_of[p], spans[p][1], spans[p][0]) for p in founder_of],
        edges,
    )
    return users, founder_of, spans, edges, graph


@pytest.fixture
def toy_dir(tmp_path):
    (tmp_path / "backings.csv").write_text(
        "backer_id,project_id,timestamp\n"
        "x,Pz,1\n"
        "w,Pz,2\n"
        "w,Px,3\n"
    )
    (tmp_path / "projects.csv").write_text(
        "project_id,founder_id,deadline\n"
        "Pz,z,10\n"
        "Px,x,10\n"
    )
    return tmp_path


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
