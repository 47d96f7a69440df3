"""Self-stabilizing construction of the MST of a tree metric, simulated.

Nodes hold reference sets and repeatedly delegate references to strictly
closer relative witnesses or introduce themselves; under any fair
asynchronous schedule the explicit references converge to the minimum
spanning tree (forest) of the tree metric.
"""

from buildmst.errors import (
    BuildMSTError,
    DuplicateDistanceError,
    InvalidTreeError,
    InvariantViolation,
    ScheduleError,
    TreeGenerationError,
    UnknownNodeError,
)
from buildmst.kernels import BACKEND
from buildmst.tree_metric import (
    Metric,
    WeightedTree,
    build_metric,
    distance,
    generate_random_tree,
    is_relative_witness,
    median,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BuildMSTError",
    "DuplicateDistanceError",
    "InvalidTreeError",
    "InvariantViolation",
    "Metric",
    "ScheduleError",
    "TreeGenerationError",
    "UnknownNodeError",
    "WeightedTree",
    "build_metric",
    "distance",
    "generate_random_tree",
    "is_relative_witness",
    "median",
]
