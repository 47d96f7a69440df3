"""Command-line front end: ``buildmst gen-tree | run | sweep | verify``."""

from __future__ import annotations

import argparse
import json
import random
import sys
from contextlib import contextmanager
from pathlib import Path

from buildmst import mst_oracle
from buildmst.errors import BuildMSTError, InvariantViolation
from buildmst.protocol import ORDER_POLICIES
from buildmst.simulator import Configuration, Scheduler, generate_initial, run
from buildmst.simulator.trace_io import final_line, summary_line, trace_lines
from buildmst.sweep import ExperimentConfig, derive_seed, run_sweep
from buildmst.tree_metric import (
    build_metric,
    dumps_tree,
    generate_random_tree,
    load_tree,
    three_node_example,
)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_VIOLATION = 2
EXIT_INPUT = 3


@contextmanager
def _output(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w") as fh:
            yield fh


def _echo(args) -> str:
    skip = {"func"}
    return json.dumps({k: v for k, v in sorted(vars(args).items()) if k not in skip}, separators=(",", ":"))


def cmd_gen_tree(args) -> int:
    try:
        if args.example:
            tree, _ = three_node_example()
        else:
            tree = generate_random_tree(args.overlay, args.internal, (args.weight_lo, args.weight_hi), args.seed)
    except (BuildMSTError, ValueError) as exc:
        print(f"gen-tree: {exc}", file=sys.stderr)
        return EXIT_FAIL
    n = len(tree.overlay_nodes)
    print(f"distinct distances: ok ({n * (n - 1) // 2} pairs)", file=sys.stderr)
    with _output(args.out) as fh:
        fh.write(dumps_tree(tree))
    return EXIT_OK


def _load_metric(path):
    tree = load_tree(path)
    return tree, build_metric(tree)


def cmd_run(args) -> int:
    try:
        _, m = _load_metric(args.tree)
        if args.initial_config:
            initial = Configuration.from_dict(json.loads(Path(args.initial_config).read_text()))
        else:
            initial = generate_initial(m, args.initial, derive_seed("initial", args.seed), args.components)
        initial.validate(m)
        sched = Scheduler(args.scheduler, args.seed, args.fairness_horizon)
    except (OSError, ValueError, BuildMSTError) as exc:
        print(f"run: {exc}", file=sys.stderr)
        return EXIT_INPUT
    n = len(m)
    with _output(args.out) as fh:
        fh.write(f"config={_echo(args)}\n")
        try:
            trace = run(initial, sched, m, args.budget_mult * n * n, args.assertions == "on", args.order)
        except InvariantViolation as exc:
            dump = json.dumps({"invariant": exc.name, "step": exc.step, **exc.details}, separators=(",", ":"))
            fh.write(f"violation={dump}\n")
            print(f"run: invariant violated: {exc}", file=sys.stderr)
            return EXIT_VIOLATION
        for line in trace_lines(trace, args.sample_every):
            fh.write(line + "\n")
        fh.write(summary_line(trace) + "\n")
        fh.write(final_line(trace) + "\n")
    return EXIT_OK if trace.outcome == "converged" else EXIT_FAIL


def _sweep_config(args) -> ExperimentConfig:
    if args.config:
        return ExperimentConfig.from_dict(json.loads(Path(args.config).read_text()))
    return ExperimentConfig(
        n_values=args.n,
        seeds_per_n=args.seeds,
        schedulers=args.scheduler.split(","),
        shapes=args.initial.split(","),
        horizon=args.fairness_horizon,
        budget_mult=args.budget_mult,
        order=args.order,
        base_seed=args.seed,
        assertions=args.assertions == "on",
    )


def cmd_sweep(args) -> int:
    try:
        config = _sweep_config(args)
    except (OSError, ValueError, TypeError) as exc:
        print(f"sweep: {exc}", file=sys.stderr)
        return EXIT_INPUT
    result = run_sweep(config, args.jobs)
    with _output(args.out) as fh:
        fh.write(result.dumps())
    failed = [r for r in result.records if r["outcome"] != "converged"]
    for r in failed:
        print(f"sweep: cell n={r['n']} seed={r['seed']} {r['scheduler']}/{r['shape']}: {r['outcome']}", file=sys.stderr)
    return EXIT_OK if not failed else EXIT_FAIL


def verify_metric(m, lemma2: bool) -> list:
    mst = mst_oracle.mst_complete(m)
    reports = [mst_oracle.verify_lemma1(m, mst), mst_oracle.verify_path_monotonicity(m, mst)]
    if lemma2:
        reports.append(mst_oracle.verify_witness_disjunction(m))
    return reports


def cmd_verify(args) -> int:
    if args.tree:
        try:
            _, m = _load_metric(args.tree)
        except (OSError, BuildMSTError) as exc:
            print(f"verify: rejected input: {exc}", file=sys.stderr)
            return EXIT_INPUT
        instances = [(args.tree, m)]
    else:
        if not 2 <= args.min_n <= args.max_n:
            print("verify: need 2 <= --min-n <= --max-n", file=sys.stderr)
            return EXIT_INPUT
        rng = random.Random(f"verify:{args.seed}")
        instances = []
        for k in range(args.trees):
            n = rng.randint(args.min_n, args.max_n)
            internal = rng.randint(0, args.max_internal)
            tree = generate_random_tree(n, internal, (1, 10**6), derive_seed("verify", args.seed, k))
            instances.append((f"tree{k}:n={n}:internal={internal}", build_metric(tree)))
    totals: dict = {}
    first_failure = None
    with _output(args.out) as fh:
        fh.write(f"config={_echo(args)}\n")
        for label, m in instances:
            for rep in verify_metric(m, len(m) <= args.lemma2_max_n):
                tot = totals.setdefault(rep.name, {"instances": 0, "checked": 0, "failures": 0})
                tot["instances"] += 1
                tot["checked"] += rep.checked
                tot["failures"] += len(rep.failures)
                if rep.failures and first_failure is None:
                    first_failure = {"instance": label, **rep.to_dict()}
        for name, tot in totals.items():
            fh.write(json.dumps({"report": name, **tot}, sort_keys=True) + "\n")
        ok = first_failure is None
        fh.write(f"verify={'pass' if ok else 'fail'} instances={len(instances)}\n")
    if not ok:
        print("verify: counterexample " + json.dumps(first_failure), file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def _common(p, orders=ORDER_POLICIES):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scheduler", default="random")
    p.add_argument("--fairness-horizon", type=int, default=None)
    p.add_argument("--budget-mult", type=int, default=50)
    p.add_argument("--assert", dest="assertions", choices=("on", "off"), default="on")
    p.add_argument("--order", choices=orders, default="id")
    p.add_argument("--out", "-o", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="buildmst", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-tree", help="write a random weighted tree")
    p.add_argument("--overlay", type=int, default=8)
    p.add_argument("--internal", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--weight-lo", type=int, default=1)
    p.add_argument("--weight-hi", type=int, default=10**6)
    p.add_argument("--example", action="store_true", help="write the three-node example instead")
    p.add_argument("--out", "-o", default=None)
    p.set_defaults(func=cmd_gen_tree)

    p = sub.add_parser("run", help="simulate one execution")
    p.add_argument("--tree", required=True)
    _common(p)
    p.add_argument("--initial", default="random")
    p.add_argument("--initial-config", default=None, help="JSON configuration to start from")
    p.add_argument("--components", type=int, default=None)
    p.add_argument("--sample-every", type=int, default=1)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run a grid of simulations")
    _common(p, ORDER_POLICIES + ("cycle",))
    p.add_argument("--n", type=int, nargs="*", default=[])
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--initial", default="random")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--config", default=None, help="JSON experiment config (overrides flags)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="brute-force the structural tree-metric lemmas")
    p.add_argument("--tree", default=None)
    p.add_argument("--trees", type=int, default=100)
    p.add_argument("--min-n", type=int, default=2)
    p.add_argument("--max-n", type=int, default=20)
    p.add_argument("--max-internal", type=int, default=15)
    p.add_argument("--lemma2-max-n", type=int, default=12)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", "-o", default=None)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
