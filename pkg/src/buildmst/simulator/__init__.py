"""Asynchronous execution model: configurations, schedulers, potentials, runs."""

from buildmst.simulator.configuration import (
    SHAPES,
    Configuration,
    Message,
    ScheduleEvent,
    explicit_edges,
    generate_initial,
    implicit_edges,
    legal_configuration,
    undirected_edges,
    undirected_explicit,
)
from buildmst.simulator.engine import Evaluator, Sample, SimulationTrace, run, step
from buildmst.simulator.potentials import (
    is_converged,
    is_legal,
    is_quiescent,
    potential_phi,
    potential_phi_tilde,
    witness_triple,
)
from buildmst.simulator.rounds import round_boundaries
from buildmst.simulator.schedulers import POLICIES, Scheduler

__all__ = [
    "POLICIES",
    "SHAPES",
    "Configuration",
    "Evaluator",
    "Message",
    "Sample",
    "ScheduleEvent",
    "Scheduler",
    "SimulationTrace",
    "explicit_edges",
    "generate_initial",
    "implicit_edges",
    "is_converged",
    "is_legal",
    "is_quiescent",
    "legal_configuration",
    "potential_phi",
    "potential_phi_tilde",
    "round_boundaries",
    "run",
    "step",
    "undirected_edges",
    "undirected_explicit",
    "witness_triple",
]
