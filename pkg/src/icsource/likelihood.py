"""Likelihood of an observed active set and the uniform-prior posterior.

``exact_likelihood`` accepts ``p`` as a float or as a
:class:`fractions.Fraction`; with a Fraction every probability, and hence
the posterior, is an exact rational.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np

from .cascade import CascadeParams, simulate
from .errors import InfeasibleObservationError, ParameterError, ResourceError
from .graph import UNREACHABLE, Graph, _bfs

DEFAULT_MAX_ATTEMPT_EDGES = 20
_LOG_SPACE_EDGES = 30


def attempt_edge_count(g: Graph, v: int, t: int) -> int:
    """Directed edges that could ever carry an activation attempt within
    ``t`` rounds from ``v``: those leaving nodes within ``t - 1`` hops."""
    if t == 0:
        return 0
    d = _bfs(g, np.array([v]), t - 1)
    return int(g.degrees()[d != UNREACHABLE].sum())


def _logsumexp(terms):
    terms = [x for x in terms if x != -math.inf]
    if not terms:
        return -math.inf
    top = max(terms)
    return top + math.log(math.fsum(math.exp(x - top) for x in terms))


def exact_likelihood(g: Graph, X, v: int, p, t: int, max_attempt_edges: int = DEFAULT_MAX_ATTEMPT_EDGES):
    """Pr[round-t frontier == X | source v], by exhaustive enumeration.

    Rounds are expanded one at a time: the attempts of a round are the pairs
    (active node, neighbor uninformed at the start of the round), and every
    success/failure assignment to them is a branch weighted
    p^successes (1-p)^failures.  Identical (frontier, informed, round)
    states are shared.
    """
    v = g.check_node(v)
    if not 0 <= p <= 1:
        raise ParameterError("p must lie in [0, 1]")
    if t < 0:
        raise ParameterError("t must be >= 0")
    target = frozenset(int(x) for x in X)
    for x in target:
        g.check_node(x)
    edges = attempt_edge_count(g, v, t)
    if edges > max_attempt_edges:
        raise ResourceError(
            f"{edges} potential attempt edges exceed the enumeration budget "
            f"({max_attempt_edges}); use mc_likelihood (CLI: --method mc)"
        )
    q = 1 - p
    one, zero = p ** 0, p * 0
    log_space = edges > _LOG_SPACE_EDGES
    if log_space:
        lp = math.log(p) if p > 0 else -math.inf
        lq = math.log(q) if q > 0 else -math.inf

    nbrs = {}

    def neighbors(a):
        if a not in nbrs:
            nbrs[a] = g.neighbors(a).tolist()
        return nbrs[a]

    @lru_cache(maxsize=None)
    def rec(frontier: frozenset, informed: frozenset, r: int):
        if r == t or not frontier:
            hit = frontier == target
            return (0.0 if hit else -math.inf) if log_space else (one if hit else zero)
        attempts = [w for a in sorted(frontier) for w in neighbors(a) if w not in informed]
        k = len(attempts)
        terms = []
        for outcome in itertools.product((False, True), repeat=k):
            s = sum(outcome)
            new = frozenset(w for w, ok in zip(attempts, outcome) if ok)
            if log_space:
                w_log = (s * lp if s else 0.0) + ((k - s) * lq if k - s else 0.0)
                if w_log == -math.inf:
                    continue
                terms.append(w_log + rec(new, informed | new, r + 1))
            else:
                weight = p**s * q ** (k - s)
                if weight:
                    terms.append(weight * rec(new, informed | new, r + 1))
        if log_space:
            return _logsumexp(terms)
        return sum(terms, zero) if not isinstance(zero, float) else math.fsum(terms)

    start = frozenset([v])
    out = rec(start, start, 0)
    if log_space:
        out = math.exp(out)
    # float products can overshoot a true 1 by an ulp
    return min(max(out, 0.0), 1.0) if isinstance(out, float) else out


class MCEstimate(NamedTuple):
    estimate: float
    stderr: float
    runs: int


def mc_likelihood(g: Graph, X, v: int, p: float, t: int, runs: int, rng=None) -> MCEstimate:
    """Fraction of simulated cascades from ``v`` whose round-t frontier is X."""
    if runs < 1:
        raise ParameterError("runs must be >= 1")
    rng = np.random.default_rng(rng)
    target = np.unique(np.asarray(list(X), dtype=np.int64))
    params = CascadeParams(float(p), t)
    hits = 0
    for _ in range(runs):
        if np.array_equal(simulate(g, v, params, rng).active, target):
            hits += 1
    est = hits / runs
    return MCEstimate(est, math.sqrt(est * (1.0 - est) / runs), runs)


@dataclass(frozen=True)
class LikelihoodTable:
    values: tuple
    p: object
    t: int
    target: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if any(not 0 <= x <= 1 for x in self.values):
            raise ParameterError("likelihoods must lie in [0, 1]")


def likelihood_table(g: Graph, X, p, t: int, method: str = "exact", runs: int = 10_000, rng=None,
                     max_attempt_edges: int = DEFAULT_MAX_ATTEMPT_EDGES) -> LikelihoodTable:
    """Likelihood of X under every candidate source."""
    X = frozenset(int(x) for x in X)
    if method == "exact":
        vals = [exact_likelihood(g, X, v, p, t, max_attempt_edges) for v in range(g.node_count)]
    elif method == "mc":
        rng = np.random.default_rng(rng)
        vals = [mc_likelihood(g, X, v, p, t, runs, rng).estimate for v in range(g.node_count)]
    else:
        raise ParameterError(f"unknown method {method!r}")
    return LikelihoodTable(tuple(vals), p, t, X)


def posterior(table: LikelihoodTable) -> list:
    """Posterior over sources under the uniform prior: likelihoods divided
    by their sum (the prior cancels)."""
    vals = list(table.values)
    if all(isinstance(x, float) for x in vals):
        total = math.fsum(vals)
    else:
        total = sum(vals)
    if total == 0:
        raise InfeasibleObservationError("observation has zero likelihood under every source")
    return [x / total for x in vals]


def argmax_set(values: Sequence) -> list[int]:
    top = max(values)
    return [i for i, x in enumerate(values) if x == top]


def table_csv(table: LikelihoodTable) -> str:
    """CSV ``node,likelihood,posterior`` sorted by posterior, descending."""
    post = posterior(table)
    order = sorted(range(len(post)), key=lambda i: (-post[i], i))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["node", "likelihood", "posterior"])
    for i in order:
        w.writerow([i, float(table.values[i]), float(post[i])])
    return buf.getvalue()
