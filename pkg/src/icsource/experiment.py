"""Batch sweeps over spreading probabilities and round counts.

Every run draws its randomness from
``SeedSequence(master_seed, spawn_key=(cell_key..., run))`` where the cell
key is built from the (p, t) values themselves, so a cell's results do not
depend on which other cells are in the grid, or on the worker count.
"""

from __future__ import annotations

import csv
import json
import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from os import PathLike

import numpy as np

from .cascade import CascadeParams, simulate
from .errors import ParameterError, ResourceError
from .graph import GeneratorSpec, Graph
from .inference import EMPTY, SUCCESS, WRONG, candidate_set, evaluate_run
from .tree_sim import TreeKind, closest_candidate, sample_runs, simulate_tree

TABLE_COLUMNS = ["p", "successes", "wrong", "empty", "avg_distance", "max_distance"]
_FIXED_GRAPH_KEY = 2**31 - 1


def p_key(p: float) -> int:
    return int(round(p * 10_000))


def run_seed(master_seed: int, p: float, t: int, run: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(master_seed, spawn_key=(p_key(p), t, run))


@dataclass(frozen=True)
class ExperimentSpec:
    """``generator`` is a random-graph spec, or a fixed :class:`Graph` that
    every run reuses."""

    generator: GeneratorSpec | Graph
    p_grid: tuple[float, ...]
    rounds: tuple[int, ...] = (8,)
    runs_per_cell: int = 100
    master_seed: int = 0
    fixed_graph: bool = False

    def __post_init__(self):
        object.__setattr__(self, "p_grid", tuple(float(p) for p in self.p_grid))
        object.__setattr__(self, "rounds", tuple(int(t) for t in self.rounds))
        if self.runs_per_cell < 1:
            raise ParameterError("runs_per_cell must be >= 1")
        if any(not 0.0 <= p <= 1.0 for p in self.p_grid):
            raise ParameterError("p_grid values must lie in [0, 1]")
        if any(t < 0 for t in self.rounds):
            raise ParameterError("rounds must be >= 0")

    def cells(self):
        for t in self.rounds:
            for p in self.p_grid:
                yield p, t


@dataclass(frozen=True)
class RunRecord:
    p: float
    t: int
    run: int
    source: int
    classification: str
    active_size: int
    t_prime: int | None
    candidates: int
    distances: tuple[int, ...] = ()
    error: str | None = None


@lru_cache(maxsize=2)
def _fixed_graph(gen: GeneratorSpec, master_seed: int) -> Graph:
    return gen.build(np.random.SeedSequence(master_seed, spawn_key=(_FIXED_GRAPH_KEY,)))


def run_single(spec: ExperimentSpec, p: float, t: int, run: int, graph: Graph | None = None) -> RunRecord:
    """One run: graph (unless fixed), uniform source, cascade, estimate."""
    graph_seq, walk_seq = run_seed(spec.master_seed, p, t, run).spawn(2)
    if graph is None and isinstance(spec.generator, Graph):
        graph = spec.generator
    if graph is None:
        graph = _fixed_graph(spec.generator, spec.master_seed) if spec.fixed_graph else spec.generator.build(graph_seq)
    rng = np.random.default_rng(walk_seq)
    source = int(rng.integers(graph.node_count))
    try:
        snap = simulate(graph, source, CascadeParams(p, t), rng)
        res = candidate_set(graph, snap.active, depth_cap=t)
        out = evaluate_run(graph, snap, res)
    except (ResourceError, MemoryError) as exc:
        return RunRecord(p, t, run, source, "error", -1, None, 0, (), f"{type(exc).__name__}: {exc}")
    return RunRecord(
        p, t, run, source, out.classification, int(snap.active.size),
        res.t_prime, int(res.candidates.size), out.candidate_distances,
    )


def _run_task(args):
    return run_single(*args)


def run_experiment(spec: ExperimentSpec, workers: int = 1) -> list[RunRecord]:
    """All runs of all cells, in (t, p, run) order regardless of ``workers``."""
    tasks = [(spec, p, t, r) for p, t in spec.cells() for r in range(spec.runs_per_cell)]
    if workers <= 1:
        return [_run_task(a) for a in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (8 * workers))))


@dataclass(frozen=True)
class SummaryRow:
    p: float
    t: int
    successes: int
    wrong: int
    empty: int
    avg_distance: float | None  # pooled over all (run, candidate) pairs
    max_distance: int | None
    per_run_avg_distance: float | None  # mean over runs of the run's mean
    singletons: int = 0
    errors: int = 0

    @property
    def runs(self) -> int:
        return self.successes + self.wrong + self.empty + self.errors

    def table_row(self) -> list[str]:
        avg = "-" if self.avg_distance is None else f"{self.avg_distance:.2f}"
        mx = "-" if self.max_distance is None else str(self.max_distance)
        return [f"{self.p:.2f}", str(self.successes), str(self.wrong), str(self.empty), avg, mx]


def summarize(records: list[RunRecord]) -> list[SummaryRow]:
    cells: dict[tuple[int, float], list[RunRecord]] = {}
    for r in records:
        cells.setdefault((r.t, r.p), []).append(r)
    rows = []
    for (t, p), recs in cells.items():
        c = Counter(r.classification for r in recs)
        pooled = [d for r in recs for d in r.distances]
        per_run = [sum(r.distances) / len(r.distances) for r in recs if r.distances]
        rows.append(SummaryRow(
            p, t, c[SUCCESS], c[WRONG], c[EMPTY],
            sum(pooled) / len(pooled) if pooled else None,
            max(pooled) if pooled else None,
            sum(per_run) / len(per_run) if per_run else None,
            sum(1 for r in recs if r.active_size == 1),
            c["error"],
        ))
    return rows


def run_sweep(spec: ExperimentSpec, workers: int = 1) -> list[SummaryRow]:
    return summarize(run_experiment(spec, workers))


def distance_histogram(records: list[RunRecord], p_values) -> dict[float, Counter]:
    """Pooled candidate-to-source distance counts for each requested p."""
    wanted = {p_key(p): float(p) for p in p_values}
    hist = {p: Counter() for p in wanted.values()}
    for r in records:
        key = p_key(r.p)
        if key in wanted:
            hist[wanted[key]].update(r.distances)
    return hist


# ---------------------------------------------------------------------------
# writers


def write_table_csv(rows: list[SummaryRow], path: str | PathLike, with_rounds: bool = False) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow((["t"] if with_rounds else []) + TABLE_COLUMNS)
        for row in rows:
            w.writerow(([str(row.t)] if with_rounds else []) + row.table_row())


def write_histogram(counts: Counter, path: str | PathLike) -> None:
    """Whitespace-delimited ``distance count fraction`` lines."""
    total = sum(counts.values())
    with open(path, "w") as fh:
        fh.write("# distance count fraction\n")
        for dist in sorted(counts):
            fh.write(f"{dist} {counts[dist]} {counts[dist] / total:.6f}\n")


def write_run_log(records: list[RunRecord], rows: list[SummaryRow], path: str | PathLike, meta: dict | None = None) -> None:
    doc = {
        "meta": meta or {},
        "summary": [asdict(r) for r in rows],
        "runs": [asdict(r) for r in records],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# infinite trees


@dataclass(frozen=True)
class TreeSweepRow:
    p: float
    runs: int
    successes: int
    wrong: int  # frontier >= 2 but the estimate is not the source
    singleton: int  # frontier of exactly one node (heuristic failure)
    died_out: int
    aborted: int = 0
    depth_counts: tuple[int, ...] = field(default=(), repr=False)  # runs with estimate depth == k

    def tail(self, k: int) -> int:
        """Runs with a defined estimate at depth >= k."""
        return sum(self.depth_counts[k:])

    @property
    def success_rate(self) -> float:
        return self.successes / self.runs


def tree_sweep(kind: TreeKind, p_grid, t: int, runs: int, master_seed: int = 0,
               method: str = "spine", node_budget: int = 10**7) -> list[TreeSweepRow]:
    """Success / failure / extinction tallies of the LCA estimator per p.

    ``method="spine"`` uses :func:`sample_runs`; ``"materialize"`` builds each
    activation tree and counts node-budget aborts.
    """
    rows = []
    for p in p_grid:
        seq = np.random.SeedSequence(master_seed, spawn_key=(p_key(p),))
        if method == "spine":
            b = sample_runs(kind, p, t, runs, seq)
            depth = b.heuristic_depth
            aborted = 0
            died = int((~b.status).sum())
        elif method == "materialize":
            rng = np.random.default_rng(seq)
            depth = np.full(runs, -1, dtype=np.int64)
            aborted = died = 0
            for i in range(runs):
                try:
                    res = closest_candidate(simulate_tree(kind, p, t, rng, node_budget))
                except ResourceError:
                    aborted += 1
                    depth[i] = -2
                    continue
                died += res.status == "died_out"
                depth[i] = -1 if res.heuristic_depth is None else res.heuristic_depth
        else:
            raise ParameterError(f"unknown method {method!r}")
        defined = depth[depth >= 0]
        counts = np.bincount(defined, minlength=t + 1)
        singles = int((depth == -1).sum()) - died
        rows.append(TreeSweepRow(
            float(p), runs, int(counts[0]), int(counts[1:].sum()), singles, died, aborted,
            tuple(int(c) for c in counts),
        ))
    return rows


def write_tree_sweep_csv(rows: list[TreeSweepRow], path: str | PathLike) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["p", "runs", "successes", "wrong", "singleton", "died_out", "aborted", "success_rate"])
        for r in rows:
            w.writerow([f"{r.p:.4g}", r.runs, r.successes, r.wrong, r.singleton, r.died_out, r.aborted,
                        f"{r.success_rate:.4f}"])


# ---------------------------------------------------------------------------
# canned reproductions

P_GRID = tuple(round(0.05 * i, 2) for i in range(21))
FULL_SCALE_N = 100_000


def replication_spec(table_id: str, master_seed: int, n: int = FULL_SCALE_N, runs: int = 100,
                     fixed_graph: bool = False) -> ExperimentSpec:
    gens = {
        "table1": GeneratorSpec("er", n, 4),
        "table2": GeneratorSpec("regular", n, 4),
        "table3": GeneratorSpec("rgg", n, 16),
        "fig3": GeneratorSpec("er", n, 4),
        "fig4": GeneratorSpec("rgg", n, 16),
    }
    if table_id not in gens:
        raise ParameterError(f"unknown table id {table_id!r}")
    grid = (0.45, 0.50, 0.55) if table_id == "fig3" else P_GRID
    rounds = (8, 16, 32) if table_id == "fig4" else (8,)
    return ExperimentSpec(gens[table_id], grid, rounds, runs, master_seed, fixed_graph)


def tail_slope(depth_counts, runs: int, kmax: int | None = None) -> float:
    """Least-squares slope of log Pr[depth >= k] against k over k = 1..kmax
    (only k with a nonzero tail count)."""
    tails = np.cumsum(np.asarray(depth_counts)[::-1])[::-1]
    ks = [k for k in range(1, len(tails) if kmax is None else kmax + 1) if tails[k] > 0]
    if len(ks) < 2:
        return math.nan
    y = np.log(tails[ks] / runs)
    return float(np.polyfit(ks, y, 1)[0])
