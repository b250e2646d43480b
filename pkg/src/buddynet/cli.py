"""``buddynet`` command line: validate, stats, buddy, cug, synth.

Exit status reflects execution only: 0 ran fine, 1 bad input, 2 bad usage.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import secrets
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .graph import GraphFormatError, load_graph, save_graph
from .motif import UndefinedRatioError, enumerate_buddy_cases
from .nullmodel import cug_test, default_workers
from .stats import EmptyInputError, degree_histogram, degree_summary
from .synth import ConfigError, SynthConfig, generate, write_truth
from .validation import validate

log = logging.getLogger("buddynet")

INPUT_ERRORS = (GraphFormatError, ConfigError, EmptyInputError, UndefinedRatioError, OSError,
                json.JSONDecodeError)


def _digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _load(args):
    g = load_graph(args.backings, args.projects)
    inputs = {
        "backings": {"path": args.backings, "sha256": _digest(args.backings)},
        "projects": {"path": args.projects, "sha256": _digest(args.projects)},
    }
    return g, inputs


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _cmd_validate(args):
    g, inputs = _load(args)
    return inputs, {}, validate(g).to_dict(), None


def _cmd_stats(args):
    g, inputs = _load(args)
    summary = degree_summary(g, args.side)
    hist = degree_histogram(g, args.side)
    if args.hist_out:
        Path(args.hist_out).write_text(_csv_text(("degree", "count"), hist), encoding="utf-8")
    out = {"summary": summary.to_dict(), "histogram": [list(p) for p in hist]}
    d = summary.to_dict()
    table = _csv_text(list(d), [list(d.values())])
    return inputs, {"side": summary.side}, out, table


def _cmd_buddy(args):
    g, inputs = _load(args)
    census = enumerate_buddy_cases(g, exclude_founder_w=args.exclude_founder_w,
                                   keep_cases=bool(args.cases_out))
    out = census.summary()
    if args.cases_out:
        with open(args.cases_out, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("founder_x", "shared_project", "cobacker_w", "t_x", "t_w",
                        "satisfied", "witness_project", "t_back"))
            for c in census.cases():
                w.writerow((c.founder_x, c.shared_project, c.cobacker_w, c.t_x, c.t_w,
                            int(c.satisfied), c.witness_project or "", "" if c.t_back is None else c.t_back))
    table = _csv_text(list(out), [["" if v is None else v for v in out.values()]])
    return inputs, {"exclude_founder_w": args.exclude_founder_w}, out, table


def _cmd_cug(args):
    g, inputs = _load(args)
    seed = args.seed
    if seed is None:
        seed = secrets.randbits(63)
        print(f"buddynet: no --seed given, using {seed}", file=sys.stderr)
    parallel = args.parallel if args.parallel is not None else default_workers()
    res = cug_test(g, trials=args.trials, master_seed=seed, ratio_mode=args.ratio_mode,
                   parallel=parallel, exclude_founder_w=args.exclude_founder_w)
    if args.hist_out:
        counts, edges = np.histogram(res.simulated_ratios, bins=args.bins)
        rows = [(repr(float(a)), repr(float(b)), int(c)) for a, b, c in zip(edges[:-1], edges[1:], counts)]
        Path(args.hist_out).write_text(_csv_text(("bin_left", "bin_right", "count"), rows), encoding="utf-8")
    params = {"trials": args.trials, "master_seed": seed, "ratio_mode": res.ratio_mode,
              "exclude_founder_w": args.exclude_founder_w}
    table = _csv_text(("trial", "simulated_ratio"), enumerate(res.simulated_ratios))
    return inputs, params, res.to_dict(), table


def _cmd_synth(args):
    data, inputs = {}, {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ConfigError(f"{args.config}: config must be a JSON object")
        inputs["config"] = {"path": args.config, "sha256": _digest(args.config)}
    if args.seed is not None:
        data["seed"] = args.seed
    cfg = SynthConfig.from_dict(data)
    graph, truth = generate(cfg)
    prefix = args.out_prefix
    paths = {"backings": f"{prefix}.backings.csv", "projects": f"{prefix}.projects.csv",
             "truth": f"{prefix}.truth.json"}
    save_graph(graph, paths["backings"], paths["projects"])
    write_truth(truth, cfg, paths["truth"])
    out = {"files": paths, "n_edges": graph.n_edges, "n_projects": graph.n_projects,
           "n_backers": len(graph.backers), "n_planted": len(truth.planted),
           "skipped_events": truth.skipped_events}
    return inputs, cfg.to_dict(), out, None


def _graph_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--backings", required=True, help="backings.csv (backer_id,project_id,timestamp)")
    p.add_argument("--projects", required=True, help="projects.csv (project_id,founder_id,deadline[,start])")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="buddynet", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="consistency report for a dataset")
    _graph_args(p)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("stats", parents=[common], help="degree distribution summary")
    _graph_args(p)
    p.add_argument("--side", choices=("project", "backer", "project-in", "backer-out"), default="project")
    p.add_argument("--hist-out", help="two-column degree,count CSV")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("buddy", parents=[common], help="buddy-relation census and ratios")
    _graph_args(p)
    p.add_argument("--exclude-founder-w", action="store_true", help="drop co-backers who are founders")
    p.add_argument("--cases-out", help="per-case CSV dump")
    p.set_defaults(func=_cmd_buddy)

    p = sub.add_parser("cug", parents=[common], help="Monte Carlo significance of the buddy ratio")
    _graph_args(p)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int)
    p.add_argument("--ratio-mode", choices=("pooled", "mean", "per-pair-mean"), default="pooled")
    p.add_argument("--parallel", type=int, help="worker processes (default $BUDDYNET_THREADS or 1)")
    p.add_argument("--exclude-founder-w", action="store_true")
    p.add_argument("--hist-out", help="CSV histogram of simulated ratios")
    p.add_argument("--bins", type=int, default=20)
    p.set_defaults(func=_cmd_cug)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic dataset")
    p.add_argument("--config", help="JSON object of generator parameters")
    p.add_argument("--seed", type=int)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=_cmd_synth)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    if getattr(args, "trials", 1) < 1 or getattr(args, "bins", 1) < 1:
        parser.print_usage(sys.stderr)
        print("buddynet: error: --trials and --bins must be >= 1", file=sys.stderr)
        return 2

    t0 = time.perf_counter()
    try:
        inputs, params, outputs, table = args.func(args)
    except INPUT_ERRORS as exc:
        print(f"buddynet {args.command}: {exc}", file=sys.stderr)
        return 1

    if args.format == "csv" and table is not None:
        text = table
    else:
        report = {
            "command": args.command,
            "inputs": inputs,
            "parameters": params,
            "outputs": outputs,
            "wall_time": round(time.perf_counter() - t0, 6),
        }
        text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
