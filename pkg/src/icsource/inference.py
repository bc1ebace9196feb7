"""Source estimation on general graphs by minimum-radius ball intersection.

For an observed active set ``X`` the estimator returns every node ``v``
minimizing ``max_{u in X} dist(v, u)``; that minimum is the smallest
radius ``t'`` for which the balls of radius ``t'`` around all active nodes
intersect, and the minimizers are exactly that intersection.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cascade import CascadeSnapshot
from .errors import UsageError
from .graph import UNREACHABLE, Graph, _bfs

OK = "ok"
EMPTY_ACTIVE_SET = "empty_active_set"
NO_CANDIDATE = "no_candidate_within_cap"

SUCCESS = "success"
WRONG = "wrong"
EMPTY = "empty"


@dataclass(frozen=True, eq=False)
class CandidateResult:
    t_prime: int | None
    candidates: np.ndarray
    status: str = OK

    @property
    def representative(self) -> int | None:
        """Lowest-id candidate, or None."""
        return int(self.candidates[0]) if self.candidates.size else None

    def to_dict(self) -> dict:
        return {
            "t_prime": self.t_prime,
            "candidates": self.candidates.tolist(),
            "status": self.status,
        }


@dataclass(frozen=True)
class RunOutcome:
    classification: str
    avg_candidate_distance: float | None = None
    max_candidate_distance: int | None = None
    candidate_distances: tuple[int, ...] = field(default=(), repr=False)
    singleton: bool = False

    def to_dict(self, result: CandidateResult | None = None) -> dict:
        rec = {
            "classification": self.classification,
            "avg_distance": self.avg_candidate_distance,
            "max_distance": self.max_candidate_distance,
        }
        if result is not None:
            rec = {"t_prime": result.t_prime, "candidates": result.candidates.tolist(), **rec}
        return rec


def candidate_set(g: Graph, active, depth_cap: int | None = None) -> CandidateResult:
    """Minimal-radius ball intersection around the active nodes.

    Exact for any ``depth_cap``: nodes whose eccentricity with respect to
    ``active`` exceeds the cap are never candidates.

    Search schedule: a truncated BFS from an active node ("probe") gives, for
    every node, a lower bound on its eccentricity (the running max over
    probes).  Nodes are then resolved cheapest-bound first with a BFS of
    their own, and after each miss the active node farthest from the
    resolved node becomes the next probe.  Nodes whose bound exceeds the
    best eccentricity found so far are pruned.
    """
    X = np.unique(np.asarray(active, dtype=np.int64))
    if X.size == 0:
        return CandidateResult(None, X, EMPTY_ACTIVE_SET)
    if X[0] < 0 or X[-1] >= g.node_count:
        raise UsageError("active id out of range")
    if depth_cap is not None and depth_cap < 0:
        raise UsageError("depth_cap must be >= 0")
    if X.size == 1:
        return CandidateResult(0, X)

    n = g.node_count
    big = np.iinfo(np.int64).max
    first = _bfs(g, X[:1], None)
    if (first[X] == UNREACHABLE).any():
        raise UsageError("active nodes span several connected components")
    lb = np.where(first == UNREACHABLE, big, first)
    limit = big if depth_cap is None else depth_cap
    probed = {int(X[0])}
    done = np.zeros(n, dtype=bool)
    best = big
    found: list[int] = []

    while True:
        bound = min(best, limit)
        open_ = np.flatnonzero((lb <= bound) & ~done)
        if not open_.size:
            break
        v = int(open_[np.argmin(lb[open_])])
        done[v] = True
        dv = _bfs(g, np.array([v]), None if bound == big else int(bound))
        dx = dv[X]
        missing = dx == UNREACHABLE
        if missing.any():
            far = int(X[np.argmax(missing)])
        else:
            ecc = int(dx.max())
            if ecc < best:
                best, found = ecc, [v]
            elif ecc == best:
                found.append(v)
            far = int(X[np.argmax(dx)])
            if ecc == lb[v]:
                continue
        if far in probed:
            continue
        probed.add(far)
        bound = min(best, limit)
        dp = _bfs(g, np.array([far]), None if bound == big else int(bound))
        # unreached means farther than bound; bound + 1 stays a valid lower bound
        fill = big if bound == big else bound + 1
        np.maximum(lb, np.where(dp == UNREACHABLE, fill, dp), out=lb)

    if not found:
        return CandidateResult(None, np.empty(0, dtype=np.int64), NO_CANDIDATE)
    return CandidateResult(best, np.array(sorted(found), dtype=np.int64))


def evaluate_run(g: Graph, snapshot: CascadeSnapshot, result: CandidateResult) -> RunOutcome:
    """Classify one run and measure candidate distances to the true source."""
    if snapshot.active.size == 0:
        return RunOutcome(EMPTY)
    singleton = snapshot.active.size == 1
    if result.candidates.size == 0:
        return RunOutcome(WRONG, singleton=singleton)
    dist = _bfs(g, np.array([snapshot.source]), None)[result.candidates]
    if (dist == UNREACHABLE).any():
        raise UsageError("candidate outside the source's component")
    cls = SUCCESS if snapshot.source in set(result.candidates.tolist()) else WRONG
    return RunOutcome(
        cls,
        float(dist.mean()),
        int(dist.max()),
        tuple(int(x) for x in dist),
        singleton,
    )
