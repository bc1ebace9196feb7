"""Static undirected graphs, random generators and hop-distance BFS.

Graphs are stored in CSR form (``indptr``/``indices``) with every
neighbor list sorted ascending.  All generators take a ``seed`` that is
handed to :func:`numpy.random.default_rng`, so an int, a
:class:`~numpy.random.SeedSequence` or an existing Generator all work.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from os import PathLike
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .errors import ParameterError, UsageError

UNREACHABLE = -1

# Below this many node pairs the ER generator flips one coin per pair.
_DENSE_PAIR_LIMIT = 2_000_000


class Graph:
    """Immutable simple undirected graph on nodes ``0..node_count-1``."""

    __slots__ = ("indptr", "indices")

    def __init__(self, indptr: np.ndarray, indices: np.ndarray):
        indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        indices = np.ascontiguousarray(indices, dtype=np.int64)
        indptr.flags.writeable = False
        indices.flags.writeable = False
        self.indptr = indptr
        self.indices = indices

    @classmethod
    def from_edges(cls, n: int, edges, simplify: bool = False) -> "Graph":
        """Build a graph from an ``(m, 2)`` array-like of undirected edges.

        With ``simplify=False`` self-loops and repeated edges raise
        :class:`ParameterError`; with ``simplify=True`` they are dropped.
        """
        if n < 0:
            raise ParameterError("node count must be >= 0")
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= n):
            raise ParameterError("edge endpoint out of range")
        loops = e[:, 0] == e[:, 1]
        if loops.any():
            if not simplify:
                raise ParameterError(f"self-loop at node {int(e[loops][0, 0])}")
            e = e[~loops]
        e = np.sort(e, axis=1)
        codes = e[:, 0] * n + e[:, 1]
        uniq = np.unique(codes)
        if uniq.size != codes.size and not simplify:
            raise ParameterError("duplicate edge")
        u, v = uniq // max(n, 1), uniq % max(n, 1)
        src = np.concatenate([u, v])
        dst = np.concatenate([v, u])
        order = np.lexsort((dst, src))
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        return cls(indptr, dst[order])

    @property
    def node_count(self) -> int:
        return self.indptr.size - 1

    @property
    def edge_count(self) -> int:
        return self.indices.size // 2

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v] : self.indptr[v + 1]]

    def adjacency(self) -> list[list[int]]:
        return [self.neighbors(v).tolist() for v in range(self.node_count)]

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def edges(self) -> np.ndarray:
        """Edges as an ``(m, 2)`` array with ``u < v``, sorted."""
        src = np.repeat(np.arange(self.node_count), self.degrees())
        keep = src < self.indices
        return np.column_stack([src[keep], self.indices[keep]])

    def check_node(self, v: int) -> int:
        if not 0 <= int(v) < self.node_count:
            raise UsageError(f"node id {v} out of range [0, {self.node_count})")
        return int(v)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return np.array_equal(self.indptr, other.indptr) and np.array_equal(
            self.indices, other.indices
        )

    def __hash__(self) -> int:
        return hash((self.indptr.tobytes(), self.indices.tobytes()))

    def __repr__(self) -> str:
        return f"Graph(node_count={self.node_count}, edge_count={self.edge_count})"


# ---------------------------------------------------------------------------
# small deterministic graphs


def path_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def cycle_graph(n: int) -> Graph:
    if n < 3:
        raise ParameterError("cycle needs at least 3 nodes")
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def star_graph(leaves: int) -> Graph:
    """Star with center 0 and leaves ``1..leaves``."""
    return Graph.from_edges(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def regular_tree(d: int, depth: int) -> Graph:
    """Depth-truncated d-regular tree: the root has d children, every other
    internal node d-1. Nodes are numbered breadth-first, root is 0."""
    if d < 1 or depth < 0:
        raise ParameterError("need d >= 1 and depth >= 0")
    edges = []
    level = [0]
    nxt = 1
    for k in range(depth):
        fan = d if k == 0 else d - 1
        new_level = []
        for v in level:
            for _ in range(fan):
                edges.append((v, nxt))
                new_level.append(nxt)
                nxt += 1
        level = new_level
    return Graph.from_edges(nxt, edges)


# ---------------------------------------------------------------------------
# random generators


def gen_erdos_renyi(n: int, avg_degree: float, seed=None) -> Graph:
    """G(n, q) with q = avg_degree / (n - 1), so the expected degree is exact."""
    if n < 1:
        raise ParameterError("n must be >= 1")
    if not 0 <= avg_degree <= max(n - 1, 0):
        raise ParameterError("avg_degree must lie in [0, n-1]")
    rng = np.random.default_rng(seed)
    if n < 2 or avg_degree == 0:
        return Graph.from_edges(n, np.empty((0, 2), dtype=np.int64))
    q = avg_degree / (n - 1)
    npairs = n * (n - 1) // 2
    if npairs <= _DENSE_PAIR_LIMIT:
        iu, ju = np.triu_indices(n, 1)
        keep = rng.random(npairs) < q
        return Graph.from_edges(n, np.column_stack([iu[keep], ju[keep]]))

    # Sparse regime: draw the edge count, then a uniform subset of that size.
    m = int(rng.binomial(npairs, q))
    codes = np.empty(0, dtype=np.int64)
    while codes.size < m:
        need = m - codes.size
        u = rng.integers(0, n, need)
        v = rng.integers(0, n - 1, need)
        v += v >= u
        batch = np.unique(np.minimum(u, v) * n + np.maximum(u, v))
        batch = batch[~np.isin(batch, codes, assume_unique=True)]
        codes = np.concatenate([codes, batch])
    return Graph.from_edges(n, np.column_stack([codes // n, codes % n]))


def gen_config_regular(n: int, d: int, seed=None) -> Graph:
    """Erased configuration model: random stub matching, then self-loops are
    dropped and parallel edges merged."""
    if n < 1 or d < 0:
        raise ParameterError("need n >= 1 and d >= 0")
    if (n * d) % 2:
        raise ParameterError("n * d must be even")
    if d >= n:
        raise ParameterError("need d < n")
    rng = np.random.default_rng(seed)
    stubs = rng.permutation(np.repeat(np.arange(n, dtype=np.int64), d))
    return Graph.from_edges(n, stubs.reshape(-1, 2), simplify=True)


def geometric_radius(n: int, expected_degree: float) -> float:
    return math.sqrt(expected_degree / (math.pi * (n - 1)))


def gen_geometric(n: int, expected_degree: float, seed=None) -> Graph:
    """Random geometric graph on the 2-d unit torus.

    Edge iff torus distance <= r with r = sqrt(k / (pi (n-1))), which makes
    the expected degree exactly k as long as r <= 1/2.
    """
    if n < 1 or expected_degree < 0:
        raise ParameterError("need n >= 1 and expected_degree >= 0")
    if expected_degree >= max(n, 1) and n > 1:
        raise ParameterError("expected_degree must be < n")
    rng = np.random.default_rng(seed)
    pts = rng.random((n, 2))
    if n == 1 or expected_degree == 0:
        return Graph.from_edges(n, np.empty((0, 2), dtype=np.int64))
    r = geometric_radius(n, expected_degree)
    if r > 0.5:
        raise ParameterError(f"radius {r:.3f} > 1/2; expected_degree too large for n")
    tree = cKDTree(pts, boxsize=1.0)
    pairs = tree.query_pairs(r, output_type="ndarray")
    return Graph.from_edges(n, pairs)


@dataclass(frozen=True)
class GeneratorSpec:
    """Which random graph family to draw from.

    ``kind`` is one of ``"er"``, ``"regular"`` or ``"rgg"``; ``degree`` is the
    average degree, the regular degree d, or the expected degree respectively.
    """

    kind: str
    n: int
    degree: float
    seed: int | None = None

    KINDS = ("er", "regular", "rgg")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ParameterError(f"unknown generator kind {self.kind!r}")
        if self.n < 1 or self.degree < 0:
            raise ParameterError("need n >= 1 and degree >= 0")
        if self.kind == "regular":
            if self.degree != int(self.degree):
                raise ParameterError("regular degree must be an integer")
            if (self.n * int(self.degree)) % 2:
                raise ParameterError("n * d must be even")

    def build(self, seed=None) -> Graph:
        seed = self.seed if seed is None else seed
        if self.kind == "er":
            return gen_erdos_renyi(self.n, self.degree, seed)
        if self.kind == "regular":
            return gen_config_regular(self.n, int(self.degree), seed)
        return gen_geometric(self.n, self.degree, seed)


# ---------------------------------------------------------------------------
# distances


def edge_positions(g: Graph, nodes: np.ndarray) -> np.ndarray:
    """CSR positions of all edges leaving ``nodes``, grouped by node in the
    order given. ``g.indices[pos]`` are the corresponding neighbors."""
    starts = g.indptr[nodes]
    counts = g.indptr[nodes + 1] - starts
    total = int(counts.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64)
    shift = np.repeat(starts - (np.cumsum(counts) - counts), counts)
    return shift + np.arange(total, dtype=np.int64)


def _bfs(g: Graph, sources: np.ndarray, depth_cap: int | None) -> np.ndarray:
    dist = np.full(g.node_count, UNREACHABLE, dtype=np.int64)
    frontier = np.unique(sources)
    dist[frontier] = 0
    level = 0
    while frontier.size and (depth_cap is None or level < depth_cap):
        level += 1
        nb = g.indices[edge_positions(g, frontier)]
        nb = nb[dist[nb] == UNREACHABLE]
        if not nb.size:
            break
        frontier = np.unique(nb)
        dist[frontier] = level
    return dist


@dataclass(frozen=True, eq=False)
class DistanceMap:
    """Hop distance from each node to the nearest source.

    Nodes farther than ``depth_cap`` (or in another component) carry
    :data:`UNREACHABLE`.
    """

    sources: np.ndarray
    distances: np.ndarray
    depth_cap: int | None

    def __getitem__(self, v) -> int:
        return self.distances[v]

    def ball(self, radius: int) -> np.ndarray:
        """Nodes within ``radius`` hops of the source set."""
        d = self.distances
        return np.flatnonzero((d != UNREACHABLE) & (d <= radius))


def bfs_distances(g: Graph, sources: Iterable[int], depth_cap: int | None = None) -> DistanceMap:
    src = np.asarray(list(sources) if not isinstance(sources, np.ndarray) else sources, dtype=np.int64)
    if src.size == 0:
        raise UsageError("bfs needs at least one source")
    if src.min() < 0 or src.max() >= g.node_count:
        raise UsageError("source id out of range")
    if depth_cap is not None and depth_cap < 0:
        raise UsageError("depth_cap must be >= 0")
    return DistanceMap(np.unique(src), _bfs(g, src, depth_cap), depth_cap)


# ---------------------------------------------------------------------------
# file formats


def write_edge_list(g: Graph, path: str | PathLike) -> None:
    """Header ``n m`` followed by one ``u v`` line per edge."""
    e = g.edges()
    with open(path, "w") as fh:
        fh.write(f"{g.node_count} {len(e)}\n")
        for u, v in e:
            fh.write(f"{u} {v}\n")


def read_edge_list(path: str | PathLike) -> Graph:
    with open(path) as fh:
        tokens = fh.read().split()
    if len(tokens) < 2:
        raise UsageError(f"{path}: missing 'n m' header")
    try:
        vals = [int(t) for t in tokens]
    except ValueError as exc:
        raise UsageError(f"{path}: non-integer token") from exc
    n, m = vals[0], vals[1]
    body = vals[2:]
    if len(body) != 2 * m:
        raise UsageError(f"{path}: header announces {m} edges, found {len(body) / 2:g}")
    try:
        return Graph.from_edges(n, np.array(body, dtype=np.int64).reshape(-1, 2))
    except ParameterError as exc:
        raise UsageError(f"{path}: {exc}") from exc


def write_ids(ids: Sequence[int], path: str | PathLike) -> None:
    with open(path, "w") as fh:
        fh.writelines(f"{int(v)}\n" for v in ids)


def read_ids(path: str | PathLike) -> list[int]:
    with open(path) as fh:
        try:
            return [int(t) for t in fh.read().split()]
        except ValueError as exc:
            raise UsageError(f"{path}: non-integer id") from exc
