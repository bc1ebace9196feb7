"""Cascades on infinite d-regular and Poisson Galton-Watson trees.

Only activated nodes are ever created.  On the d-regular tree the root has
d potential children and every later node d-1; on the Po(lam) tree each
node's activated children are drawn directly as Po(lam p) (Poisson
thinning), so the underlying tree is never built.

The source estimate on a tree is the rooted lowest common ancestor of the
frontier.  Why nothing outside the materialized tree can beat it: every
node off the activated tree hangs below some activated node v through a
never-activated child, so its distance to each frontier node is
dist(v, .) plus a constant.  It is therefore equidistant iff v is, and
strictly farther.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from os import PathLike

import numpy as np

from .errors import ParameterError, ResourceError

DIED_OUT = "died_out"
SURVIVED = "survived"

DEFAULT_NODE_BUDGET = 10**8
# Lineage sizes saturate here; a lineage this large cannot die out at double
# precision, and int64 offspring draws stay far from overflow.
_POP_CAP = 2**40


@dataclass(frozen=True)
class DRegular:
    d: int

    def __post_init__(self):
        if self.d < 2:
            raise ParameterError("d-regular tree needs d >= 2")

    @property
    def param(self):
        return self.d

    name = "regular"

    def children(self, rng, p: float, depth: int, size):
        return rng.binomial(self.d if depth == 0 else self.d - 1, p, size=size)

    def lineage_step(self, rng, p: float, pop: np.ndarray) -> np.ndarray:
        return rng.binomial((self.d - 1) * pop, p)


@dataclass(frozen=True)
class GWPoisson:
    lam: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ParameterError("Poisson tree needs lam > 0")

    @property
    def param(self):
        return self.lam

    name = "poisson"

    def children(self, rng, p: float, depth: int, size):
        return rng.poisson(self.lam * p, size=size)

    def lineage_step(self, rng, p: float, pop: np.ndarray) -> np.ndarray:
        return rng.poisson(self.lam * p * pop)


TreeKind = DRegular | GWPoisson


def _check(p: float, t: int):
    if not 0.0 <= p <= 1.0:
        raise ParameterError("p must lie in [0, 1]")
    if t < 1:
        raise ParameterError("t must be >= 1")


class ActivationTree:
    """Activated part of the cascade, numbered breadth-first (root = 0).

    ``layers[k]`` holds, for each node at depth k+1, the index of its parent
    within depth k.
    """

    def __init__(self, t: int, layers: list[np.ndarray]):
        self.t = t
        self.layers = layers
        sizes = [1] + [layer.size for layer in layers]
        sizes += [0] * (t + 1 - len(sizes))
        self.layer_sizes = np.array(sizes, dtype=np.int64)
        self.offsets = np.concatenate([[0], np.cumsum(self.layer_sizes)])

    @property
    def node_count(self) -> int:
        return int(self.offsets[-1])

    @property
    def frontier_size(self) -> int:
        return int(self.layer_sizes[self.t])

    @property
    def frontier(self) -> np.ndarray:
        return np.arange(self.offsets[self.t], self.offsets[self.t + 1])

    @property
    def depth(self) -> np.ndarray:
        return np.repeat(np.arange(self.t + 1), self.layer_sizes)

    @property
    def parent(self) -> np.ndarray:
        """Global parent id per node, -1 for the root."""
        out = [np.array([-1])]
        for k, layer in enumerate(self.layers):
            out.append(layer + self.offsets[k])
        return np.concatenate(out)

    def children(self) -> list[list[int]]:
        kids: list[list[int]] = [[] for _ in range(self.node_count)]
        for v, par in enumerate(self.parent):
            if par >= 0:
                kids[par].append(v)
        return kids


def simulate_tree(kind: TreeKind, p: float, t: int, rng=None, node_budget: int = DEFAULT_NODE_BUDGET) -> ActivationTree:
    _check(p, t)
    rng = np.random.default_rng(rng)
    layers = []
    size, total = 1, 1
    for depth in range(t):
        counts = kind.children(rng, p, depth, size)
        size = int(counts.sum())
        total += size
        if total > node_budget:
            raise ResourceError(f"activation tree exceeds node budget {node_budget}")
        layers.append(np.repeat(np.arange(counts.size), counts))
        if size == 0:
            break
    return ActivationTree(t, layers)


@dataclass(frozen=True)
class TreeRunResult:
    status: str
    frontier_size: int
    heuristic_depth: int | None
    success: bool

    @property
    def failure(self) -> bool:
        return self.heuristic_depth is None


def closest_candidate(tree: ActivationTree) -> TreeRunResult:
    """Rooted LCA of the frontier; failure when the frontier has <= 1 node."""
    size = tree.frontier_size
    if size == 0:
        return TreeRunResult(DIED_OUT, 0, None, False)
    if size == 1:
        return TreeRunResult(SURVIVED, 1, None, False)
    anc = np.arange(size)
    depth = tree.t
    while anc.size > 1:
        anc = np.unique(tree.layers[depth - 1][anc])
        depth -= 1
    return TreeRunResult(SURVIVED, size, depth, depth == 0)


def _lineage_sizes(kind: TreeKind, p: float, pop: np.ndarray, gens: np.ndarray, rng) -> np.ndarray:
    """Evolve lineage sizes row-wise; row i advances ``gens[i]`` generations."""
    pop = pop.copy()
    idx = np.flatnonzero((pop > 0) & (gens > 0))
    cur, left = pop[idx], gens[idx]
    while idx.size:
        cur = np.minimum(kind.lineage_step(rng, p, cur), _POP_CAP)
        left = left - 1
        pop[idx] = cur
        keep = (cur > 0) & (left > 0)
        idx, cur, left = idx[keep], cur[keep], left[keep]
    return pop


@dataclass(frozen=True, eq=False)
class TreeBatch:
    """Column-oriented results of many independent tree runs."""

    kind: TreeKind
    p: float
    t: int
    status: np.ndarray  # bool, True = survived
    frontier_size: np.ndarray
    heuristic_depth: np.ndarray  # -1 = heuristic failure
    seed: int | None = None

    @property
    def runs(self) -> int:
        return self.status.size

    @property
    def success(self) -> np.ndarray:
        return self.heuristic_depth == 0

    def __getitem__(self, i: int) -> TreeRunResult:
        depth = int(self.heuristic_depth[i])
        return TreeRunResult(
            SURVIVED if self.status[i] else DIED_OUT,
            int(self.frontier_size[i]),
            None if depth < 0 else depth,
            depth == 0,
        )

    def write_csv(self, path: str | PathLike) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["kind", "d_or_lambda", "p", "t", "seed", "status", "frontier_size", "heuristic_depth", "success"])
            for i in range(self.runs):
                r = self[i]
                w.writerow([
                    self.kind.name, self.kind.param, self.p, self.t,
                    "" if self.seed is None else self.seed,
                    r.status, r.frontier_size,
                    "" if r.heuristic_depth is None else r.heuristic_depth,
                    int(r.success),
                ])


def sample_runs(kind: TreeKind, p: float, t: int, runs: int, rng=None) -> TreeBatch:
    """Draw ``runs`` independent (status, frontier size, LCA depth) triples.

    Same law as ``closest_candidate(simulate_tree(...))`` without building
    the tree.  Starting at the root, each child of the current spine node is
    followed only through its per-generation lineage size.  Two or more
    children with descendants at depth t make the spine node the LCA.  With
    exactly one, we descend into it and redraw its subtree conditioned on
    reaching depth t, by rejection.
    """
    _check(p, t)
    if runs < 0:
        raise ParameterError("runs must be >= 0")
    rng = np.random.default_rng(rng)
    survived = np.zeros(runs, dtype=bool)
    fsize = np.zeros(runs, dtype=np.int64)
    hdepth = np.full(runs, -1, dtype=np.int64)
    depth = np.zeros(runs, dtype=np.int64)
    conditioned = np.zeros(runs, dtype=bool)
    misses = np.zeros(runs, dtype=np.int64)
    pending = np.arange(runs)

    while pending.size:
        at_t = depth[pending] == t
        solo = pending[at_t]
        survived[solo] = True
        fsize[solo] = 1
        pending = pending[~at_t]
        if not pending.size:
            break

        # Conditioned rows make several i.i.d. attempts per pass (doubling
        # with every failed pass); the first accepted one is kept.
        reps = np.where(conditioned[pending], np.minimum(2 ** np.minimum(misses[pending], 10), 1024), 1)
        owner = np.repeat(np.arange(pending.size), reps)
        k = depth[pending][owner]
        c = np.empty(owner.size, dtype=np.int64)
        roots = k == 0
        if roots.any():
            c[roots] = kind.children(rng, p, 0, int(roots.sum()))
        if (~roots).any():
            c[~roots] = kind.children(rng, p, 1, int((~roots).sum()))
        width = int(c.max(initial=0))
        if width == 0:
            pop = np.zeros((owner.size, 0), dtype=np.int64)
        else:
            start = (np.arange(width) < c[:, None]).astype(np.int64)
            gens = np.repeat(t - k - 1, width)
            pop = _lineage_sizes(kind, p, start.ravel(), gens, rng).reshape(owner.size, width)
        alive = (pop > 0).sum(axis=1)

        cond = conditioned[pending][owner]
        ok = (alive > 0) | ~cond
        # first accepted attempt per pending row
        first = np.full(pending.size, -1, dtype=np.int64)
        acc = np.flatnonzero(ok)[::-1]
        first[owner[acc]] = acc
        got = first >= 0
        misses[pending[~got]] += 1
        rows, att = pending[got], first[got]
        alive_a, k_a = alive[att], k[att]

        survived[rows[alive_a == 0]] = False
        split = alive_a >= 2
        survived[rows[split]] = True
        fsize[rows[split]] = pop[att[split]].sum(axis=1)
        hdepth[rows[split]] = k_a[split]
        down = rows[alive_a == 1]
        depth[down] += 1
        conditioned[down] = True
        misses[down] = 0
        pending = np.concatenate([down, pending[~got]])

    return TreeBatch(kind, p, t, survived, fsize, hdepth)
