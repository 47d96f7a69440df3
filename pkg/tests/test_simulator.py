import json
import math
import random
from collections import Counter
from itertools import combinations

import pytest

from buildmst import mst_oracle
from buildmst.errors import InvariantViolation, ScheduleError
from buildmst.mst_oracle import edge, mst_complete
from buildmst.protocol import NodeState
from buildmst.simulator import (
    SHAPES,
    Configuration,
    Evaluator,
    Message,
    ScheduleEvent,
    Scheduler,
    engine,
    explicit_edges,
    generate_initial,
    implicit_edges,
    is_converged,
    is_legal,
    legal_configuration,
    potential_phi,
    potential_phi_tilde,
    round_boundaries,
    run,
    step,
    undirected_edges,
    witness_triple,
)
from buildmst.simulator.configuration import undirected_explicit
from buildmst.simulator.rounds import rounds_before
from buildmst.simulator.trace_io import final_line, summary_line, trace_lines
from buildmst.tree_metric import build_metric, generate_random_tree
from oracles import enumerate_min_spanning_tree, reachability_components, replay_round_starts

POLICY_NAMES = ("rr", "random", "adversarial")


def example_initial(nm):
    return Configuration.from_references([nm["u"], nm["v"], nm["w"]], {nm["v"]: {nm["u"], nm["w"]}})


def random_config(m, rng, density=0.3):
    explicit = {v: {w for w in m.nodes if w != v and rng.random() < density} for v in m.nodes}
    pending = {v: [w for w in m.nodes if rng.random() < density / 2] for v in m.nodes}
    return Configuration.from_references(m.nodes, explicit, pending)


def metric(n, internal=None, seed=0):
    return build_metric(generate_random_tree(n, n // 2 if internal is None else internal, seed=seed))


# --- step ------------------------------------------------------------------


def test_example_step(example):
    _, m, nm = example
    u, v, w = nm["u"], nm["v"], nm["w"]
    c = example_initial(nm)
    c2 = step(c, ScheduleEvent(v), m)
    assert c2.states[v].neighbors == {u}
    assert Counter(msg.payload for msg in c2.channels[u]) == Counter({v: 1, w: 1})
    assert implicit_edges(c2) == Counter({(u, v): 1, (u, w): 1})
    assert c2.step_index == 1
    assert c2.states[u] == c.states[u] and c2.states[w] == c.states[w]


def test_idle_step_only_advances_clock(example):
    _, m, nm = example
    c = example_initial(nm)
    c2 = step(c, ScheduleEvent(nm["u"]), m)
    assert c2.states == c.states and c2.channels == c.channels
    assert c2.step_index == c.step_index + 1


def test_step_delivers_and_dedupes():
    m = metric(4, seed=1)
    c = Configuration.from_references(m.nodes, {}, {0: [1, 1, 0, 2]})
    ch = c.channels[0]
    c2 = step(c, ScheduleEvent(0, (ch[0], ch[1], ch[2])), m)
    assert [msg.payload for msg in c2.channels[0] if msg.seq == ch[3].seq] == [2]
    assert 0 not in c2.states[0].neighbors
    # the other references survived either in the state or in someone's channel
    assert undirected_edges(c2) >= {edge(0, 1)}


def test_step_rejects_bad_delivery():
    m = metric(3, seed=2)
    c = Configuration.from_references(m.nodes, {}, {0: [1]})
    with pytest.raises(ScheduleError):
        step(c, ScheduleEvent(0, (Message(99, 1),)), m)
    with pytest.raises(ScheduleError):
        step(c, ScheduleEvent(0, (c.channels[0][0], c.channels[0][0])), m)
    with pytest.raises(ScheduleError):
        step(c, ScheduleEvent(1, c.channels[0]), m)


def test_step_preserves_components():
    rng = random.Random(3)
    for seed in range(20):
        m = metric(9, seed=seed)
        c = random_config(m, rng, 0.15)
        for _ in range(30):
            v = rng.choice(m.nodes)
            delivered = tuple(msg for msg in c.channels[v] if rng.random() < 0.5)
            before = reachability_components(m.nodes, undirected_edges(c))
            c = step(c, ScheduleEvent(v, delivered), m)
            after = reachability_components(m.nodes, undirected_edges(c))
            for comp in before:
                assert any(comp <= big for big in after)


def test_explicit_and_implicit_edges():
    c = Configuration.from_references([0, 1, 2], {0: {1}})
    assert explicit_edges(c) == {(0, 1)}
    assert implicit_edges(c) == Counter()
    c = Configuration.from_references([0, 1, 2], {}, {2: [0, 0, 1]})
    assert implicit_edges(c) == Counter({(2, 0): 2, (2, 1): 1})
    assert undirected_edges(c) == {(0, 2), (1, 2)}


# --- potentials: oracle route vs kernel route -------------------------------


def test_phi_examples(example):
    _, m, nm = example
    u, v, w = nm["u"], nm["v"], nm["w"]
    c = example_initial(nm)
    assert potential_phi(c, m) == 17
    assert potential_phi_tilde(c, m) == 11
    assert potential_phi(Configuration.from_references([u, v, w], {v: {w}}), m) == math.inf
    with_invalid = Configuration.from_references([u, v, w], {u: {v, w}, v: {w}})
    assert potential_phi(with_invalid, m) == 13
    assert potential_phi_tilde(with_invalid, m) == 11
    assert not is_legal(with_invalid, m)


def test_phi_matches_enumeration():
    rng = random.Random(4)
    checked = 0
    for seed in range(20):
        m = metric(8, seed=seed)
        c = random_config(m, rng, 0.2)
        pairs = undirected_edges(c)
        tree = enumerate_min_spanning_tree(m, m.nodes, pairs)
        if tree is None:
            assert potential_phi(c, m) == math.inf
        else:
            checked += 1
            assert potential_phi(c, m) == sum(m.distance(a, b) for a, b in tree)
    assert checked >= 5


def test_phi_tilde_matches_scan():
    rng = random.Random(5)
    for seed in range(20):
        m = metric(10, seed=seed)
        c = random_config(m, rng, 0.2)
        mst = mst_complete(m)
        invalid = [m.distance(a, b) for a, b in combinations(m.nodes, 2) if (a, b) in undirected_edges(c) and (a, b) not in mst]
        assert potential_phi_tilde(c, m) == max(invalid, default=0)


@pytest.mark.parametrize("backend", ["python", None])
def test_evaluator_agrees_with_oracle(backend):
    rng = random.Random(6)
    for seed in range(30):
        m = metric(rng.randint(2, 12), seed=seed)
        ev = Evaluator(m, backend)
        for density in (0.05, 0.2, 0.5):
            c = random_config(m, rng, density)
            s = ev.evaluate(c)
            assert s.phi == potential_phi(c, m)
            assert s.phi_tilde == potential_phi_tilde(c, m)
            assert s.legal == is_legal(c, m)
            assert s.quiescent == is_converged(c, m)
            assert (s.phi != math.inf and s.phi > ev.mst_weight) <= (witness_triple(c, m) is not None)


def test_legality_examples():
    m = metric(7, seed=7)
    mst = mst_complete(m)
    both = {v: {w for a, b in mst for v2, w in ((a, b), (b, a)) if v2 == v} for v in m.nodes}
    c = Configuration.from_references(m.nodes, both)
    assert is_legal(c, m) and is_converged(c, m)
    non_mst = next(p for p in combinations(m.nodes, 2) if p not in mst)
    c2 = Configuration.from_references(m.nodes, both, {non_mst[0]: [non_mst[1]]})
    assert not is_legal(c2, m)
    # no references at all: every node is its own component
    assert is_legal(Configuration.from_references(m.nodes), m)
    # one direction per MST edge is already legal
    single = {v: set() for v in m.nodes}
    for a, b in mst:
        single[a].add(b)
    assert is_legal(Configuration.from_references(m.nodes, single), m)


# --- run -------------------------------------------------------------------


@pytest.mark.parametrize("policy", POLICY_NAMES)
def test_example_run(example, policy):
    _, m, nm = example
    u, v, w = nm["u"], nm["v"], nm["w"]
    trace = run(example_initial(nm), Scheduler(policy, seed=1), m)
    assert trace.outcome == "converged"
    assert undirected_explicit(trace.final) == {edge(u, v), edge(u, w)}
    assert is_converged(trace.final, m)


def test_already_legal_run_is_immediate():
    m = metric(10, seed=8)
    c = legal_configuration(m, mst_complete(m), seed=1, in_flight=True)
    trace = run(c, Scheduler("random", 0), m)
    assert trace.converged_at == 0 and trace.steps == 0
    assert trace.rounds_to_legal == 0


@pytest.mark.parametrize("policy", POLICY_NAMES)
@pytest.mark.parametrize("shape", SHAPES)
def test_runs_converge(policy, shape):
    for seed in range(3):
        m = metric(10, seed=seed)
        trace = run(generate_initial(m, shape, seed), Scheduler(policy, seed), m)
        assert trace.outcome == "converged", (policy, shape, seed)
        assert is_converged(trace.final, m)
        assert trace.samples[-1].legal


def test_n16_random_seeds_converge():
    for seed in range(50):
        m = metric(16, seed=100 + seed)
        trace = run(generate_initial(m, "random-connected", seed), Scheduler("random", seed), m)
        assert trace.outcome == "converged"
        assert trace.rounds_to_legal is not None


def test_budget_is_an_outcome():
    m = metric(12, seed=9)
    trace = run(generate_initial(m, "star", 0), Scheduler("adversarial", 0), m, budget=3)
    assert trace.outcome == "budget" and trace.steps == 3 and trace.converged_at is None
    assert summary_line(trace).startswith("outcome=budget steps=3 ")


def test_pure_python_backend_gives_same_trace():
    m = metric(9, seed=10)
    init = generate_initial(m, "random-connected", 3)
    a = run(init, Scheduler("random", 3), m, backend="python")
    b = run(init, Scheduler("random", 3), m)
    assert list(trace_lines(a)) == list(trace_lines(b))
    assert a.events == b.events


def test_samples_align_with_configurations():
    m = metric(8, seed=11)
    trace = run(generate_initial(m, "line", 1), Scheduler("adversarial", 1), m)
    assert len(trace.samples) == trace.steps + 1
    assert [s.step for s in trace.samples] == list(range(trace.steps + 1))
    assert all(b < a for b, a in zip(trace.round_starts, trace.round_starts[1:]))


def test_observer_sees_every_configuration():
    m = metric(6, seed=12)
    seen = []
    trace = run(generate_initial(m, "star", 2), Scheduler("rr"), m, observer=lambda i, c: seen.append(i))
    assert seen == list(range(trace.steps + 1))


def test_faulty_protocol_is_caught(monkeypatch):
    from buildmst.protocol import activate as real_activate

    def forgetful(state, m, *args, **kwargs):
        # drops every delegated reference instead of sending it
        new_state, msgs = real_activate(state, m, *args, **kwargs)
        return new_state, [x for x in msgs if x.payload == state.id]

    monkeypatch.setattr(engine, "activate", forgetful)
    caught = 0
    for seed in range(5):
        m = metric(10, seed=seed)
        try:
            run(generate_initial(m, "star", seed), Scheduler("random", seed), m)
        except InvariantViolation as exc:
            caught += 1
            assert exc.name in ("phi-monotone", "connectivity", "phi-tilde-monotone", "termination")
            assert "configuration" in exc.details
    assert caught == 5


def test_assertions_off_still_runs():
    m = metric(8, seed=13)
    trace = run(generate_initial(m, "random", 0), Scheduler("random", 0), m, assertions=False)
    assert trace.outcome == "converged"


# --- rounds ----------------------------------------------------------------


def test_round_robin_rounds_are_n_events():
    m = metric(7, seed=14)
    c = generate_initial(m, "random-connected", 0)
    trace = run(c, Scheduler("rr"), m, budget=70, stop_at_convergence=False)
    assert trace.round_starts == list(range(0, 70, 7))


def test_single_node_rounds():
    m = build_metric(generate_random_tree(1, 0, seed=0))
    c = Configuration.from_references([0], {}, {0: [0]})
    trace = run(c, Scheduler("rr"), m, budget=5, stop_at_convergence=False)
    assert trace.round_starts == list(range(5))
    # a held-back message stretches the first round
    trace = run(c, Scheduler("random", horizon=2), m, budget=5, stop_at_convergence=False)
    assert trace.round_starts == replay_round_starts(trace)


@pytest.mark.parametrize("policy", POLICY_NAMES)
def test_round_boundaries_match_replay(policy):
    for seed in range(6):
        m = metric(8, seed=seed)
        trace = run(generate_initial(m, "random", seed), Scheduler(policy, seed), m, budget=400, stop_at_convergence=False)
        assert round_boundaries(trace) == replay_round_starts(trace)


def test_rounds_before():
    assert rounds_before([0, 5, 9], 0) == 0
    assert rounds_before([0, 5, 9], 5) == 1
    assert rounds_before([0, 5, 9], 6) == 2


# --- initial configurations --------------------------------------------------


def test_star_initial():
    m = metric(4, seed=15)
    c = generate_initial(m, "star", 0)
    holders = [v for v in m.nodes if c.states[v].neighbors]
    assert len(holders) == 1
    assert c.states[holders[0]].neighbors == set(m.nodes) - {holders[0]}
    assert not any(c.channels.values())


def test_initial_is_deterministic():
    m = metric(12, seed=16)
    for shape in SHAPES:
        assert generate_initial(m, shape, 5).dumps() == generate_initial(m, shape, 5).dumps()
    assert generate_initial(m, "random", 5).dumps() != generate_initial(m, "random", 6).dumps()


def test_connected_shapes_are_connected_and_mixed():
    explicit_seen = implicit_seen = False
    for seed in range(10):
        m = metric(12, seed=seed)
        for shape in ("line", "star", "random-connected", "adversarial-long-edges"):
            c = generate_initial(m, shape, seed)
            assert reachability_components(m.nodes, undirected_edges(c)) == [frozenset(m.nodes)]
            explicit_seen |= bool(explicit_edges(c))
            implicit_seen |= bool(implicit_edges(c))
    assert explicit_seen and implicit_seen


def test_disconnected_initial_matches_reachability():
    for seed in range(10):
        m = metric(12, seed=seed)
        c = generate_initial(m, "disconnected", seed)
        comps = reachability_components(m.nodes, undirected_edges(c))
        assert 2 <= len(comps) <= 3
        assert [set(x) for x, _ in mst_oracle.msf_components(m, undirected_edges(c))] == [set(x) for x in comps]


def test_unknown_shape():
    with pytest.raises(ValueError):
        generate_initial(metric(3), "circle", 0)


# --- schedulers ------------------------------------------------------------


@pytest.mark.parametrize("policy", POLICY_NAMES)
def test_fairness_windows_and_delivery_bound(policy):
    m = metric(9, seed=17)
    sched = Scheduler(policy, seed=4)
    trace = run(generate_initial(m, "random", 1), sched, m, budget=900, stop_at_convergence=False)
    H = sched.H
    assert H == 36
    nodes = set(m.nodes)
    events = trace.events
    for s in range(len(events) - H + 1):
        assert {e.node for e in events[s : s + H]} == nodes
    delivered_at = {msg.seq: i for i, e in enumerate(events) for msg in e.delivered}
    for i, sent in enumerate(trace.emitted):
        for _, msg in sent:
            deadline = i + 1 + sched.delivery_bound
            if deadline < len(events):
                assert delivered_at[msg.seq] <= deadline


def test_horizon_shorter_than_n_is_rejected():
    sched = Scheduler("random", horizon=2)
    with pytest.raises(ValueError):
        sched.start([0, 1, 2])
    with pytest.raises(ValueError):
        Scheduler("lottery")


def test_adversary_delivers_in_reverse_order():
    m = metric(5, seed=18)
    sched = Scheduler("adversarial", horizon=5)
    c = Configuration.from_references(m.nodes, {}, {0: [1, 2, 3]})
    sched.start(m.nodes)
    c = Configuration(c.states, c.channels, 10, c.next_seq)
    ev = sched.next_event(c)
    assert [msg.seq for msg in ev.delivered] == sorted((msg.seq for msg in c.channels[ev.node]), reverse=True)


# --- output ----------------------------------------------------------------


def test_trace_record_format(example):
    _, m, nm = example
    trace = run(example_initial(nm), Scheduler("rr"), m)
    lines = list(trace_lines(trace))
    assert lines[0] == "step=0 phi=17 phi_tilde=11 explicit=2 implicit=0 legal=0 round=0"
    assert len(lines) == trace.steps + 1
    assert summary_line(trace) == f"outcome=converged steps={trace.converged_at} rounds={trace.rounds_to_legal}"
    final = json.loads(final_line(trace)[len("final=") :])
    assert Configuration.from_dict(final).dumps() == trace.final.dumps()


def test_sampled_trace_keeps_last_record():
    m = metric(8, seed=19)
    trace = run(generate_initial(m, "star", 0), Scheduler("random"), m)
    lines = list(trace_lines(trace, 5))
    assert lines[-1].startswith(f"step={trace.steps} ")
    assert all(int(x.split()[0][5:]) % 5 == 0 for x in lines[:-1])


def test_infinite_phi_is_printed_as_inf():
    m = metric(6, seed=20)
    trace = run(generate_initial(m, "disconnected", 0), Scheduler("random"), m)
    assert " phi=inf " in next(trace_lines(trace))


def test_configuration_json_round_trip():
    m = metric(8, seed=21)
    c = generate_initial(m, "random", 3)
    again = Configuration.from_dict(json.loads(c.dumps()))
    assert again == c
    with pytest.raises(ValueError):
        Configuration.from_references([0, 1], {5: {0}})


def test_validate_rejects_foreign_references():
    m = metric(3, seed=22)
    c = Configuration.from_references(m.nodes, {0: {1}})
    states = dict(c.states)
    states[0] = NodeState(0, {7})
    with pytest.raises(ScheduleError):
        Configuration(states, c.channels).validate(m)
