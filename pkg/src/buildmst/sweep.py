"""Parameter sweeps over (n, seed, scheduler, initial shape) cells."""

from __future__ import annotations

import json
import math
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

from buildmst.errors import InvariantViolation
from buildmst.protocol import ORDER_POLICIES
from buildmst.simulator import Scheduler, generate_initial, run
from buildmst.simulator.configuration import SHAPE_ALIASES, SHAPES
from buildmst.simulator.schedulers import resolve_policy
from buildmst.simulator.trace_io import format_value
from buildmst.tree_metric import build_metric, generate_random_tree


def derive_seed(*parts) -> int:
    """Stable 63-bit seed from arbitrary labels."""
    return random.Random(":".join(map(str, parts))).getrandbits(63)


@dataclass
class ExperimentConfig:
    n_values: list
    seeds_per_n: int = 10
    schedulers: list = field(default_factory=lambda: ["uniform-random-fair"])
    shapes: list = field(default_factory=lambda: ["random-connected"])
    horizon: int | None = None
    budget_mult: int = 50
    internal_ratio: float = 0.5
    weight_range: tuple = (1, 10**6)
    order: str = "id"
    base_seed: int = 0
    assertions: bool = True
    components: int | None = None

    def __post_init__(self):
        self.n_values = [int(n) for n in self.n_values]
        if any(n < 1 for n in self.n_values) or self.seeds_per_n < 1 or self.budget_mult < 1:
            raise ValueError("counts must be positive")
        self.schedulers = [resolve_policy(p) for p in self.schedulers]
        self.shapes = [SHAPE_ALIASES.get(s, s) for s in self.shapes]
        bad = [s for s in self.shapes if s not in SHAPES]
        if bad:
            raise ValueError(f"unknown shapes {bad}")
        if self.order not in ORDER_POLICIES + ("cycle",):
            raise ValueError(f"unknown order policy {self.order!r}")
        self.weight_range = tuple(self.weight_range)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        return cls(**data)

    def cells(self) -> list:
        return [
            (n, self.base_seed + k, policy, shape)
            for n in self.n_values
            for policy in self.schedulers
            for shape in self.shapes
            for k in range(self.seeds_per_n)
        ]


def cell_instance(config: ExperimentConfig, n: int, seed: int, shape: str):
    """Tree, metric and initial configuration of one cell."""
    tree = generate_random_tree(
        n, int(n * config.internal_ratio), config.weight_range, seed=derive_seed("tree", n, seed)
    )
    m = build_metric(tree)
    initial = generate_initial(m, shape, derive_seed("initial", n, seed), components=config.components)
    return tree, m, initial


def cell_order(config: ExperimentConfig, seed: int) -> str:
    return ORDER_POLICIES[seed % len(ORDER_POLICIES)] if config.order == "cycle" else config.order


def run_cell(config: ExperimentConfig, n: int, seed: int, policy: str, shape: str) -> dict:
    _, m, initial = cell_instance(config, n, seed, shape)
    order = cell_order(config, seed)
    record = {"n": n, "seed": seed, "scheduler": policy, "shape": shape, "order": order}
    sched = Scheduler(policy, derive_seed("sched", n, seed), config.horizon)
    try:
        trace = run(initial, sched, m, config.budget_mult * n * n, config.assertions, order)
    except InvariantViolation as exc:
        record.update(outcome="violation", steps=exc.step, rounds=None, final_phi=None, violation=str(exc))
        return record
    record.update(
        outcome=trace.outcome,
        steps=trace.converged_at if trace.converged_at is not None else trace.steps,
        rounds=trace.rounds_to_legal if trace.rounds_to_legal is not None else trace.rounds,
        final_phi=format_value(trace.samples[-1].phi),
        mst_weight=format_value(trace.mst_weight),
        violation=None,
    )
    return record


def _run_cell_args(args):
    return run_cell(*args)


@dataclass
class SweepResult:
    config: ExperimentConfig
    records: list

    @property
    def passed(self) -> bool:
        return all(r["outcome"] == "converged" for r in self.records)

    def aggregate(self) -> dict:
        by_n: dict = {}
        for r in self.records:
            agg = by_n.setdefault(r["n"], {"runs": 0, "converged": 0, "max_rounds": 0, "max_steps": 0})
            agg["runs"] += 1
            if r["outcome"] == "converged":
                agg["converged"] += 1
                agg["max_rounds"] = max(agg["max_rounds"], r["rounds"])
                agg["max_steps"] = max(agg["max_steps"], r["steps"])
        points = [(n, a["max_rounds"]) for n, a in sorted(by_n.items())]
        fit = {"quadratic_coefficient": None, "loglog_slope": None}
        if points:
            # least squares for max_rounds ~ c * n^2
            denom = sum(n**4 for n, _ in points)
            fit["quadratic_coefficient"] = sum(r * n * n for n, r in points) / denom
        usable = [(math.log(n), math.log(r)) for n, r in points if n > 0 and r > 0]
        if len(usable) >= 2 and len({x for x, _ in usable}) >= 2:
            mx = sum(x for x, _ in usable) / len(usable)
            my = sum(y for _, y in usable) / len(usable)
            sxx = sum((x - mx) ** 2 for x, _ in usable)
            fit["loglog_slope"] = sum((x - mx) * (y - my) for x, y in usable) / sxx
        return {"per_n": {str(n): a for n, a in sorted(by_n.items())}, "fit": fit, "passed": self.passed}

    def to_dict(self) -> dict:
        return {"config": self.config.to_dict(), "records": self.records, "aggregate": self.aggregate()}

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"


def run_sweep(config: ExperimentConfig, jobs: int = 1) -> SweepResult:
    """Run every cell; a failed cell never stops the others. Record order is the cell order."""
    cells = config.cells()
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_run_cell_args, [(config, *c) for c in cells], chunksize=4))
    else:
        records = [run_cell(config, *c) for c in cells]
    return SweepResult(config, records)
