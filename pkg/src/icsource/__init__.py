"""Independent Cascade spreading: simulation, source inference and analytics."""

from .cascade import CascadeParams, CascadeSnapshot, simulate
from .errors import InfeasibleObservationError, ParameterError, ResourceError, UsageError
from .graph import Graph, GeneratorSpec, bfs_distances, read_edge_list, write_edge_list
from .inference import CandidateResult, candidate_set, evaluate_run

__all__ = [
    "CandidateResult",
    "CascadeParams",
    "CascadeSnapshot",
    "GeneratorSpec",
    "Graph",
    "InfeasibleObservationError",
    "ParameterError",
    "ResourceError",
    "UsageError",
    "bfs_distances",
    "candidate_set",
    "evaluate_run",
    "read_edge_list",
    "simulate",
    "write_edge_list",
]
