"""Monte Carlo oracle: per-node game vs. the additive closed form."""

import math

import pytest

from conftest import build_task, call_node, chain_task, ent, interference_task, query_node, tool
from tigload.errors import DomainError
from tigload.intrinsic import IntrinsicParams, intrinsic_load
from tigload.model import DATA, EXECUTION, DepEdge, Query
from tigload.simulate import (
    SimAgent,
    closed_form_success,
    generate_decay_trials,
    node_success_prob,
    simulate_success_count,
    simulate_task,
    simulate_trials,
    verify_additivity,
)

HALF = IntrinsicParams(0.5)


# ------------------------------------------------------------- node prob

def test_zero_load_zero_baseline_is_certain():
    assert node_success_prob(SimAgent(k=0.1, b_node=0.0, seed=1), 0.0) == 1.0


def test_node_prob_known_value():
    agent = SimAgent(k=0.1, b_node=0.0, seed=1)
    assert node_success_prob(agent, 10.0) == pytest.approx(math.exp(-1.0))


def test_node_prob_bounded_by_baseline():
    agent = SimAgent(k=0.3, b_node=0.7, seed=1)
    bound = math.exp(-0.7)
    for load in (0.0, 0.5, 3.0, 50.0):
        assert node_success_prob(agent, load) <= bound


def test_node_prob_rejects_negative_load():
    with pytest.raises(DomainError):
        node_success_prob(SimAgent(k=0.1, b_node=0.0, seed=1), -1.0)


# ------------------------------------------------------------ single runs

def no_call_task():
    return build_task("nocalls", [Query(0, "chat only", ())], [query_node(0)],
                      [], [tool("noop")])


def test_task_with_no_calls_always_succeeds():
    agent = SimAgent(k=1.0, b_node=5.0, seed=9)
    for r in range(5):
        assert simulate_task(agent, no_call_task(), HALF, replication=r).success
    assert simulate_success_count(agent, no_call_task(), HALF, replications=1000) == 1000


def test_certain_nodes_always_pass():
    agent = SimAgent(k=0.5, b_node=0.0, seed=9)
    task = build_task(
        "free", [Query(0, "go", ())],
        [query_node(0), call_node("f0", "op")],
        [], [tool("op")],
    )  # no edges: the single call carries zero load, p = 1
    outcome = simulate_task(agent, task, HALF)
    assert outcome.success
    assert outcome.per_node_rolls[0][1] == 1.0


def test_outcomes_reproducible_from_seed():
    agent = SimAgent(k=0.2, b_node=0.1, seed=77)
    task = chain_task(4)
    first = [simulate_task(agent, task, HALF, replication=r) for r in range(20)]
    second = [simulate_task(agent, task, HALF, replication=r) for r in range(20)]
    assert first == second
    # a different seed changes the stream
    other = SimAgent(k=0.2, b_node=0.1, seed=78)
    changed = [simulate_task(other, task, HALF, replication=r) for r in range(20)]
    assert changed != first


def test_success_is_conjunction_of_rolls():
    agent = SimAgent(k=0.4, b_node=0.2, seed=5)
    task = chain_task(5)
    for r in range(50):
        outcome = simulate_task(agent, task, HALF, replication=r)
        assert outcome.success == all(passed for _, _, passed in outcome.per_node_rolls)


def test_batch_counts_match_scalar_replications():
    agent = SimAgent(k=0.3, b_node=0.05, seed=13)
    task = interference_task()
    reps = 400
    scalar = sum(simulate_task(agent, task, HALF, replication=r).success
                 for r in range(reps))
    assert simulate_success_count(agent, task, HALF, replications=reps) == scalar


def test_partitioned_counts_compose():
    agent = SimAgent(k=0.1, b_node=0.02, seed=21)
    task = chain_task(6)
    whole = simulate_success_count(agent, task, HALF, replications=9001, partitions=1)
    split = simulate_success_count(agent, task, HALF, replications=9001, partitions=7)
    assert whole == split


# ------------------------------------------------------------ convergence

def test_empirical_rate_matches_closed_form_at_scale():
    agent = SimAgent(k=0.1, b_node=0.05, seed=31)
    task = interference_task()
    reps = 100_000
    wins = simulate_success_count(agent, task, HALF, replications=reps)
    predicted = closed_form_success(agent, task, HALF)
    n_calls = 2
    total = intrinsic_load(task, HALF).total
    assert predicted == pytest.approx(math.exp(-(agent.k * total + n_calls * agent.b_node)))
    assert wins / reps == pytest.approx(predicted, abs=0.005)


def test_zero_baseline_rate_is_exp_of_total_load():
    agent = SimAgent(k=0.08, b_node=0.0, seed=41)
    task = chain_task(5)
    report = verify_additivity(agent, [task], HALF, replications=100_000)
    row = report.rows[0]
    assert row.predicted == pytest.approx(
        math.exp(-agent.k * intrinsic_load(task, HALF).total))
    assert row.within_3_sigma


def test_equal_load_different_shape_same_rate():
    # chain: four unit edges; scatter: same total via different structure
    chain = chain_task(4)
    e0 = ent("a", "0")
    scatter = build_task(
        "scatter",
        [Query(0, "go", (e0,))],
        [query_node(0, (e0,)),
         call_node("g0", "op", consumes=[e0]), call_node("g1", "op"),
         call_node("g2", "op"), call_node("g3", "op")],
        [DepEdge("q0", "g0", DATA, e0), DepEdge("q0", "g1", EXECUTION),
         DepEdge("g2", "g3", EXECUTION)],
        [tool("op")],
    )
    total_chain = intrinsic_load(chain, HALF).total
    total_scatter = intrinsic_load(scatter, HALF).total
    assert total_chain == total_scatter == 4.0

    agent = SimAgent(k=0.12, b_node=0.03, seed=55)
    reps = 100_000
    rate_chain = simulate_success_count(agent, chain, HALF, replications=reps) / reps
    rate_scatter = simulate_success_count(agent, scatter, HALF, replications=reps) / reps
    p = closed_form_success(agent, chain, HALF)
    sigma = math.sqrt(2 * p * (1 - p) / reps)
    assert abs(rate_chain - rate_scatter) <= 3 * sigma


def test_zero_sensitivity_ignores_loads():
    agent = SimAgent(k=0.0, b_node=0.3, seed=61)
    light = chain_task(3, task_id="light")
    heavy = interference_task()
    for task, n_calls in ((light, 3), (heavy, 2)):
        reps = 50_000
        rate = simulate_success_count(agent, task, HALF, replications=reps) / reps
        assert rate == pytest.approx(math.exp(-n_calls * agent.b_node), abs=0.01)


def test_splitting_load_across_nodes_costs_one_extra_baseline():
    agent = SimAgent(k=0.1, b_node=0.2, seed=71)
    one = chain_task(1)   # single call, load 1
    two = chain_task(2)   # two calls, load 2
    p_one = closed_form_success(agent, one, HALF)
    p_two = closed_form_success(agent, two, HALF)
    # doubling node count multiplies the rate by exp(-(k * extra_load + b))
    assert p_two / p_one == pytest.approx(math.exp(-(agent.k * 1.0 + agent.b_node)))


def test_same_total_load_split_across_two_nodes_costs_exp_minus_b():
    # one call carrying distance-2 load vs. two calls at distance 1 each:
    # equal totals, so predictions differ by exactly one extra baseline
    from tigload.model import GraphNode, TaskInstance, ToolGraph

    one_node = TaskInstance(
        id="whole", domain="test",
        queries=(Query(0, "a", ()), Query(1, "b", ())),
        tools=(tool("op"),),
        graph=ToolGraph(
            nodes=(
                GraphNode("q0", "query", turn=0, query_index=0),
                GraphNode("q1", "query", turn=1, query_index=1),
                GraphNode("f0", "call", turn=2, tool_name="op"),
            ),
            edges=(DepEdge("q0", "f0", EXECUTION),),
        ),
    )  # stored turns put q1 between source and call: the edge spans two turns
    two_nodes = chain_task(2, task_id="halves")
    assert intrinsic_load(one_node, HALF).total == intrinsic_load(two_nodes, HALF).total == 2.0

    agent = SimAgent(k=0.09, b_node=0.25, seed=101)
    p_one = closed_form_success(agent, one_node, HALF)
    p_two = closed_form_success(agent, two_nodes, HALF)
    assert p_two / p_one == pytest.approx(math.exp(-agent.b_node))

    reps = 100_000
    rate_one = simulate_success_count(agent, one_node, HALF, replications=reps) / reps
    rate_two = simulate_success_count(agent, two_nodes, HALF, replications=reps) / reps
    assert rate_two / rate_one == pytest.approx(math.exp(-agent.b_node), abs=0.02)


def test_verify_additivity_summary():
    agent = SimAgent(k=0.06, b_node=0.04, seed=81)
    tasks = [chain_task(n, task_id=f"chain{n}") for n in (1, 3, 5)]
    report = verify_additivity(agent, tasks, HALF, replications=20_000)
    assert len(report.rows) == 3
    assert report.fraction_within_3_sigma >= 2 / 3
    assert report.max_abs_deviation == max(abs(r.deviation) for r in report.rows)


# ------------------------------------------------------------- trial emit

def test_simulate_trials_rate_and_labels():
    agent = SimAgent(k=0.05, b_node=0.1, seed=91)
    task = chain_task(3)
    trials = simulate_trials(agent, [task], HALF, replications=30_000, agent_id="robot")
    assert all(t.agent_id == "robot" and t.task_id == task.id for t in trials)
    rate = sum(t.success for t in trials) / len(trials)
    assert rate == pytest.approx(closed_form_success(agent, task, HALF), abs=0.01)


def test_generate_decay_trials_rate():
    loads = [(f"t{i}", float(i)) for i in range(10)]
    trials = generate_decay_trials(0.1, 0.2, loads, seed=0x6E2, replications=8_000)
    by_task = {}
    for t in trials:
        by_task.setdefault(t.task_id, []).append(t.success)
    for tid, load in loads:
        rate = sum(by_task[tid]) / len(by_task[tid])
        assert rate == pytest.approx(math.exp(-(0.1 * load + 0.2)), abs=0.025)


def test_sim_agent_validation():
    with pytest.raises(DomainError):
        SimAgent(k=-0.1, b_node=0.0, seed=1)
    with pytest.raises(DomainError):
        SimAgent(k=0.1, b_node=-1.0, seed=1)
