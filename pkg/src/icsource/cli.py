"""Command-line front end: ``icsource <subcommand> ...``.

Exit codes: 0 success, 1 usage or parameter error, 2 resource error.  With
``--format json`` errors are also reported as a JSON object on stderr.
Relative ``--out`` paths are resolved under ``$ICSOURCE_OUT_DIR`` when set.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import analytics, experiment
from .cascade import CascadeParams, CascadeSnapshot, simulate
from .errors import InfeasibleObservationError, ParameterError, ResourceError, UsageError
from .graph import GeneratorSpec, read_edge_list, read_ids, write_edge_list
from .inference import candidate_set, evaluate_run
from .likelihood import DEFAULT_MAX_ATTEMPT_EDGES, likelihood_table, posterior
from .tree_sim import DRegular, GWPoisson

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

OUT_DIR_ENV = "ICSOURCE_OUT_DIR"
STOCHASTIC = {"generate", "cascade", "experiment", "replicate"}
# checked after the TOML merge so these may also come from a config file
REQUIRED = {
    "cascade": ("graph", "p"),
    "infer": ("graph", "active"),
    "likelihood": ("graph", "active", "p", "rounds"),
    "analyze": ("kind",),
}


class _Parser(argparse.ArgumentParser):
    def __init__(self, *args, **kwargs):
        kwargs.setdefault("allow_abbrev", False)
        super().__init__(*args, **kwargs)

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from exc


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, help="master seed (required where randomness is used)")
    common.add_argument("--out", help="output file (directory for experiment/replicate)")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--config", help="TOML file of defaults; explicit flags win")

    ap = _Parser(prog="icsource", description="Independent Cascade simulation and source inference.")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    g = sub.add_parser("generate", parents=[common], help="write a random graph as an edge list")
    g.add_argument("--kind", choices=GeneratorSpec.KINDS, default="er")
    g.add_argument("--n", type=int, default=1000)
    g.add_argument("--degree", type=float, default=4.0)

    c = sub.add_parser("cascade", parents=[common], help="simulate one cascade")
    c.add_argument("--graph")
    c.add_argument("--source", type=int, help="default: uniform from the seed")
    c.add_argument("--p", type=float)
    c.add_argument("--rounds", type=int, default=8)

    i = sub.add_parser("infer", parents=[common], help="ball-intersection candidate set")
    i.add_argument("--graph")
    i.add_argument("--active", help="file of active node ids")
    i.add_argument("--depth-cap", type=int)
    i.add_argument("--source", type=int, help="true source, enables classification")

    lk = sub.add_parser("likelihood", parents=[common], help="per-node likelihood and posterior")
    lk.add_argument("--graph")
    lk.add_argument("--active")
    lk.add_argument("--p", help="decimal or fraction such as 1/3")
    lk.add_argument("--rounds", type=int)
    lk.add_argument("--method", choices=("exact", "mc"), default="exact")
    lk.add_argument("--runs", type=int, default=10_000)
    lk.add_argument("--max-attempt-edges", type=int, default=DEFAULT_MAX_ATTEMPT_EDGES)

    an = sub.add_parser("analyze", parents=[common], help="extinction series and fixed point")
    an.add_argument("--kind", choices=(analytics.BINOMIAL, analytics.POISSON))
    an.add_argument("--d", type=int)
    an.add_argument("--p", type=float)
    an.add_argument("--mu", type=float)
    an.add_argument("--steps", type=int, default=50)

    ex = sub.add_parser("experiment", parents=[common], help="sweep p (and t) over many runs")
    ex.add_argument("--generator", choices=GeneratorSpec.KINDS, default="er")
    ex.add_argument("--tree", choices=("regular", "poisson"), help="sweep on an infinite tree instead")
    ex.add_argument("--n", type=int, default=100_000)
    ex.add_argument("--degree", type=float, default=4.0, help="graph degree, or d / lambda for --tree")
    ex.add_argument("--p-grid", type=_floats, default=list(experiment.P_GRID))
    ex.add_argument("--rounds", type=_ints, default=[8])
    ex.add_argument("--runs", type=int, default=100)
    ex.add_argument("--fixed-graph", action="store_true")
    ex.add_argument("--workers", type=int, default=1)
    ex.add_argument("--histogram", type=_floats, help="p values to write distance histograms for")

    rp = sub.add_parser("replicate", parents=[common], help="rerun a canned table or figure")
    rp.add_argument("table_id", choices=("table1", "table2", "table3", "fig3", "fig4"))
    rp.add_argument("--n", type=int, default=experiment.FULL_SCALE_N)
    rp.add_argument("--runs", type=int, default=100)
    rp.add_argument("--fixed-graph", action="store_true")
    rp.add_argument("--workers", type=int, default=1)
    return ap


# ---------------------------------------------------------------------------
# config merging


def _load_config(path: str, command: str, parser: argparse.ArgumentParser) -> dict:
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise UsageError(f"bad TOML in {path}: {exc}") from exc
    flat = {k: v for k, v in doc.items() if not isinstance(v, dict)}
    section = doc.get(command, {})
    if not isinstance(section, dict):
        raise UsageError(f"config key {command!r} must be a table")
    flat.update(section)
    known = {a.dest for a in parser._actions}
    out = {}
    for key, val in flat.items():
        dest = key.replace("-", "_")
        if dest not in known or dest in ("config", "help"):
            raise UsageError(f"unknown config key {key!r} for {command}")
        if dest in ("p_grid", "histogram") and isinstance(val, (int, float)):
            val = [float(val)]
        elif dest == "rounds" and command == "experiment" and isinstance(val, int):
            val = [val]
        out[dest] = val
    return out


def parse(argv: list[str]) -> argparse.Namespace:
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.command is None:
        return ns
    if ns.config:
        subparser = parser._subparsers._group_actions[0].choices[ns.command]
        subparser.set_defaults(**_load_config(ns.config, ns.command, subparser))
        ns = parser.parse_args(argv)
    missing = [f"--{k.replace('_', '-')}" for k in REQUIRED.get(ns.command, ()) if getattr(ns, k) is None]
    if missing:
        raise UsageError(f"{ns.command}: missing required {', '.join(missing)}")
    if ns.command in STOCHASTIC or (ns.command == "likelihood" and ns.method == "mc"):
        if ns.seed is None:
            raise UsageError(f"{ns.command} consumes randomness: --seed is required")
    return ns


# ---------------------------------------------------------------------------
# output helpers


def _resolve(path: str | None) -> Path | None:
    if path is None:
        return None
    p = Path(path)
    base = os.environ.get(OUT_DIR_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    return p


def _emit(text: str, out: str | None) -> None:
    target = _resolve(out)
    if target is None:
        sys.stdout.write(text)
        return
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(text)


def _out_dir(out: str | None) -> Path:
    target = _resolve(out) or Path(os.environ.get(OUT_DIR_ENV, "."))
    target.mkdir(parents=True, exist_ok=True)
    return target


def _json(obj) -> str:
    return json.dumps(obj, sort_keys=True) + "\n"


def _csv(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# commands


def cmd_generate(ns):
    g = GeneratorSpec(ns.kind, ns.n, ns.degree).build(ns.seed)
    target = _resolve(ns.out)
    if target is None:
        buf = io.StringIO()
        buf.write(f"{g.node_count} {g.edge_count}\n")
        buf.writelines(f"{u} {v}\n" for u, v in g.edges())
        sys.stdout.write(buf.getvalue())
    else:
        target.parent.mkdir(parents=True, exist_ok=True)
        write_edge_list(g, target)


def cmd_cascade(ns):
    g = read_edge_list(ns.graph)
    rng = np.random.default_rng(ns.seed)
    source = int(rng.integers(g.node_count)) if ns.source is None else ns.source
    snap = simulate(g, source, CascadeParams(ns.p, ns.rounds), rng)
    if (ns.format or "json") == "json":
        _emit(_json(snap.to_dict()), ns.out)
    else:
        _emit(_csv([["round", "node"]] + [[k, v] for k, h in enumerate(snap.history) for v in h.tolist()]), ns.out)


def cmd_infer(ns):
    g = read_edge_list(ns.graph)
    active = read_ids(ns.active)
    res = candidate_set(g, active, ns.depth_cap)
    rec = {**res.to_dict(), "representative": res.representative,
           "classification": None, "avg_distance": None, "max_distance": None}
    if ns.source is not None:
        # a snapshot whose frontier is the observed set is all evaluation needs
        snap = CascadeSnapshot(g.check_node(ns.source), (np.array([ns.source]), np.unique(np.asarray(active, dtype=np.int64))))
        rec.update(evaluate_run(g, snap, res).to_dict())
    if (ns.format or "json") == "json":
        _emit(_json(rec), ns.out)
    else:
        _emit(_csv([["t_prime", "candidate"]] + [[res.t_prime, v] for v in res.candidates.tolist()]), ns.out)


def _parse_p(text: str):
    try:
        return Fraction(text) if "/" in text else float(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"bad probability {text!r}") from exc


def cmd_likelihood(ns):
    g = read_edge_list(ns.graph)
    X = read_ids(ns.active)
    table = likelihood_table(g, X, _parse_p(ns.p), ns.rounds, ns.method, ns.runs, ns.seed, ns.max_attempt_edges)
    post = posterior(table)
    order = sorted(range(len(post)), key=lambda v: (-post[v], v))
    if (ns.format or "csv") == "csv":
        _emit(_csv([["node", "likelihood", "posterior"]] + [[v, float(table.values[v]), float(post[v])] for v in order]), ns.out)
    else:
        rows = [{"node": v, "likelihood": float(table.values[v]), "posterior": float(post[v])} for v in order]
        _emit(_json({"p": str(ns.p), "rounds": ns.rounds, "method": ns.method, "nodes": rows}), ns.out)


def cmd_analyze(ns):
    if ns.kind == analytics.BINOMIAL:
        if ns.d is None or ns.p is None:
            raise UsageError("binomial series needs --d and --p")
        s = analytics.extinction_series_binomial(ns.d, ns.p, ns.steps)
    else:
        if ns.mu is None:
            raise UsageError("poisson series needs --mu")
        s = analytics.extinction_series_poisson(ns.mu, ns.steps)
    if (ns.format or "csv") == "csv":
        rows = [["t", "x_t"]] + [[t, repr(float(x))] for t, x in enumerate(s.values)]
        rows.append(["inf", repr(s.fixed_point)])  # the limit row
        _emit(_csv(rows), ns.out)
    else:
        _emit(_json({
            "kind": s.kind, "d": s.d, "p": s.p, "mu": s.mu,
            "values": s.values.tolist(), "fixed_point": s.fixed_point,
            "iterations_to_tol": s.iterations_to_tol, "offspring_mean": s.offspring_mean,
        }), ns.out)


def _write_graph_outputs(spec, records, out: Path, stem: str, hist_ps=(), fmt="csv"):
    rows = experiment.summarize(records)
    multi_t = len(spec.rounds) > 1
    experiment.write_table_csv(rows, out / f"{stem}.csv", with_rounds=multi_t)
    meta = {"generator": dataclasses.asdict(spec.generator), "p_grid": list(spec.p_grid),
            "rounds": list(spec.rounds), "runs_per_cell": spec.runs_per_cell,
            "master_seed": spec.master_seed, "fixed_graph": spec.fixed_graph}
    experiment.write_run_log(records, rows, out / f"{stem}_runs.json", meta)
    written = [f"{stem}.csv", f"{stem}_runs.json"]
    for p, counts in experiment.distance_histogram(records, hist_ps).items():
        name = f"{stem}_p{p:.2f}.hist"
        experiment.write_histogram(counts, out / name)
        written.append(name)
    if fmt == "json":
        sys.stdout.write(_json({"written": written, "summary": [r.table_row() for r in rows]}))


def cmd_experiment(ns):
    out = _out_dir(ns.out)
    if ns.tree:
        if len(ns.rounds) != 1:
            raise UsageError("tree sweeps take a single --rounds value")
        kind = DRegular(int(ns.degree)) if ns.tree == "regular" else GWPoisson(ns.degree)
        rows = experiment.tree_sweep(kind, ns.p_grid, ns.rounds[0], ns.runs, ns.seed)
        experiment.write_tree_sweep_csv(rows, out / "tree_summary.csv")
        return
    spec = experiment.ExperimentSpec(GeneratorSpec(ns.generator, ns.n, ns.degree), tuple(ns.p_grid),
                                     tuple(ns.rounds), ns.runs, ns.seed, ns.fixed_graph)
    hist = ns.histogram or ()
    if any(experiment.p_key(p) not in {experiment.p_key(q) for q in spec.p_grid} for p in hist):
        raise UsageError("--histogram values must be in --p-grid")
    records = experiment.run_experiment(spec, ns.workers)
    _write_graph_outputs(spec, records, out, "summary", hist, ns.format or "csv")


def cmd_replicate(ns):
    out = _out_dir(ns.out)
    spec = experiment.replication_spec(ns.table_id, ns.seed, ns.n, ns.runs, ns.fixed_graph)
    records = experiment.run_experiment(spec, ns.workers)
    hist = spec.p_grid if ns.table_id == "fig3" else ()
    _write_graph_outputs(spec, records, out, ns.table_id, hist, ns.format or "csv")


COMMANDS = {
    "generate": cmd_generate,
    "cascade": cmd_cascade,
    "infer": cmd_infer,
    "likelihood": cmd_likelihood,
    "analyze": cmd_analyze,
    "experiment": cmd_experiment,
    "replicate": cmd_replicate,
}


def _report(exc: Exception, kind: str, json_errors: bool) -> None:
    if json_errors:
        sys.stderr.write(_json({"error": kind, "message": str(exc)}))
    else:
        sys.stderr.write(f"error: {exc}\n")


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    json_errors = any(a == "--format=json" for a in argv) or any(
        a == "--format" and b == "json" for a, b in zip(argv, argv[1:]))
    try:
        ns = parse(argv)
        if ns.command is None:
            build_parser().print_usage(sys.stderr)
            return 1
        COMMANDS[ns.command](ns)
    except ResourceError as exc:
        _report(exc, "resource", json_errors)
        return 2
    except MemoryError as exc:
        _report(MemoryError(f"out of memory ({exc}); reduce --n or --runs"), "resource", json_errors)
        return 2
    except (UsageError, ParameterError, InfeasibleObservationError) as exc:
        _report(exc, "usage", json_errors)
        return 1
    except OSError as exc:
        _report(exc, "usage", json_errors)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
