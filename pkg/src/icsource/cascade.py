"""Independent Cascade simulation on finite graphs.

Round indexing: ``history[0] == [source]`` and ``history[k]`` holds the
nodes activated by ``history[k-1]``.  The observed snapshot after ``t``
rounds is ``history[t]``, so the source reaches every observed node within
``t`` hops.

Random stream contract: in each round, the active nodes are visited in
ascending id order and, for each of them, its neighbors in ascending id
order; one uniform is drawn per (active node, neighbor uninformed at the
start of the round) pair, and the attempt succeeds iff the uniform is
``< p``.  A node hit by several successful attempts is informed once.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ParameterError
from .graph import Graph, edge_positions


@dataclass(frozen=True)
class CascadeParams:
    p: float
    rounds: int

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ParameterError(f"p must lie in [0, 1], got {self.p}")
        if self.rounds < 0:
            raise ParameterError("rounds must be >= 0")


@dataclass(frozen=True, eq=False)
class CascadeSnapshot:
    source: int
    history: tuple[np.ndarray, ...]

    @property
    def rounds(self) -> int:
        return len(self.history) - 1

    @property
    def active(self) -> np.ndarray:
        return self.history[-1]

    @property
    def informed(self) -> np.ndarray:
        return np.sort(np.concatenate(self.history))

    def to_dict(self) -> dict:
        return {
            "source": self.source,
            "rounds": self.rounds,
            "active": self.active.tolist(),
            "informed": self.informed.tolist(),
            "history": [h.tolist() for h in self.history],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, rec: dict) -> "CascadeSnapshot":
        hist = tuple(np.asarray(h, dtype=np.int64) for h in rec["history"])
        snap = cls(int(rec["source"]), hist)
        if snap.rounds != rec["rounds"] or snap.active.tolist() != list(rec["active"]):
            raise ValueError("inconsistent snapshot record")
        return snap

    def __eq__(self, other):
        if not isinstance(other, CascadeSnapshot):
            return NotImplemented
        return self.source == other.source and len(self.history) == len(other.history) and all(
            np.array_equal(a, b) for a, b in zip(self.history, other.history)
        )


def _run(g: Graph, source: int, rounds: int, p: float, draw: Callable[[np.ndarray], np.ndarray]):
    informed = np.zeros(g.node_count, dtype=bool)
    informed[source] = True
    frontier = np.array([source], dtype=np.int64)
    history = [frontier]
    for _ in range(rounds):
        if frontier.size:
            pos = edge_positions(g, frontier)
            pos = pos[~informed[g.indices[pos]]]
            hit = pos[draw(pos) < p] if pos.size else pos
            frontier = np.unique(g.indices[hit])
            informed[frontier] = True
        history.append(frontier)
    return CascadeSnapshot(source, tuple(history))


def simulate(g: Graph, source: int, params: CascadeParams, rng=None) -> CascadeSnapshot:
    """Run ``params.rounds`` rounds of the cascade from ``source``.

    Once the frontier empties all later rounds are empty.
    """
    source = g.check_node(source)
    rng = np.random.default_rng(rng)
    return _run(g, source, params.rounds, params.p, lambda pos: rng.random(pos.size))


def simulate_coupled(g: Graph, source: int, params: CascadeParams, edge_uniforms: np.ndarray) -> CascadeSnapshot:
    """Cascade whose attempt along directed edge ``k`` (CSR position) uses
    the fixed uniform ``edge_uniforms[k]``.

    Sharing ``edge_uniforms`` across values of ``p`` couples the runs
    monotonically.
    """
    source = g.check_node(source)
    u = np.asarray(edge_uniforms, dtype=float)
    if u.shape != g.indices.shape:
        raise ParameterError("need one uniform per directed edge")
    return _run(g, source, params.rounds, params.p, lambda pos: u[pos])
