"""Decomposition-baseline tests: share arithmetic and the density test."""

import pytest

from cordsched.baseline import (
    decomp_schedulable,
    decompose_deadlines,
    even_split_wcets,
)
from cordsched.cordalg import Platform
from cordsched.phases import bank_from_ground_truth
from cordsched.taskgen import DagTask, TaskSet, TasksetConfig, gen_taskset
from cordsched.workload import Budget, make_ground_truth

SEC = 1_000_000


def _task(tid, layers, edges, deadline_ticks, workload="flat"):
    nodes = [n for layer in layers for n in layer]
    return DagTask(id=tid, period=deadline_ticks, deadline=deadline_ticks,
                   utilization=0.0, layers=layers,
                   workloads={n: workload for n in nodes},
                   edges=edges, ref_wcets={})


@pytest.fixture(scope="module")
def flat_bank():
    # rate independent of budget: 1.0 s everywhere
    gt = make_ground_truth("flat", 1.0e6, [{
        "span_frac": 1.0, "base_rate": 1.0e6,
        "cache_coeff": 0.0, "bw_coeff": 0.0,
    }])
    return bank_from_ground_truth({"flat": gt}, Budget(4, 4))


def _taskset(tasks):
    return TaskSet(tasks=list(tasks), target_utilization=0.0,
                   edge_prob=0.5, seed=0, ref_budget=Budget(1, 1))


def test_decompose_chain_even_split():
    task = _task("t", [["a"], ["b"]], [("a", "b")], 10 * SEC)
    out = decompose_deadlines(task, {"a": 1.0, "b": 1.0})
    assert out["a"].release == pytest.approx(0.0)
    assert out["a"].deadline == pytest.approx(5.0)
    assert out["b"].release == pytest.approx(5.0)
    assert out["b"].deadline == pytest.approx(10.0)


def test_decompose_single_subtask_gets_full_deadline():
    task = _task("t", [["a"]], [], 3 * SEC)
    out = decompose_deadlines(task, {"a": 1.0})
    assert out["a"].release == 0.0
    assert out["a"].deadline == pytest.approx(3.0)
    assert out["a"].window == pytest.approx(3.0)


def test_decompose_fork_join_unequal_branches():
    # a(1) forks to b(2) and c(4), joining at d(1); critical path 6
    task = _task("t", [["a"], ["b", "c"], ["d"]],
                 [("a", "b"), ("a", "c"), ("b", "d"), ("c", "d")], 12 * SEC)
    out = decompose_deadlines(task, {"a": 1.0, "b": 2.0, "c": 4.0, "d": 1.0})
    assert out["a"].deadline == pytest.approx(2.0)    # 12 * 1/6
    assert out["b"].window == pytest.approx(6.0)      # 12 * 2/4
    assert out["c"].window == pytest.approx(8.0)      # 12 * 4/6
    assert out["b"].release == out["c"].release == pytest.approx(2.0)
    # the join waits for the later branch window
    assert out["d"].release == pytest.approx(10.0)
    assert out["d"].deadline == pytest.approx(12.0)


def test_decomposed_feasibility_flag():
    task = _task("t", [["a"]], [], SEC // 2)
    out = decompose_deadlines(task, {"a": 1.0})
    assert not out["a"].feasible()
    assert decompose_deadlines(task, {"a": 0.4})["a"].feasible()


def test_even_split_wcets_uses_reference_budget(flat_bank):
    task = _task("t", [["a"], ["b"]], [("a", "b")], 4 * SEC)
    wcets = even_split_wcets(task, flat_bank, Budget(2, 2))
    assert wcets == {"a": pytest.approx(1.0), "b": pytest.approx(1.0)}


def test_decomp_empty_taskset_schedulable(flat_bank):
    assert decomp_schedulable(_taskset([]), Platform(2, Budget(4, 4)),
                              flat_bank)


def test_decomp_infeasible_subtask(flat_bank):
    # one second of work against half a second of deadline
    ts = _taskset([_task("t", [["a"]], [], SEC // 2)])
    assert not decomp_schedulable(ts, Platform(2, Budget(4, 4)), flat_bank)


def test_decomp_density_threshold(flat_bank):
    # three independent subtasks, each with density 1.0 / 2.0 = 0.5
    ts = _taskset([_task(f"t{i}", [["a"]], [], 2 * SEC) for i in range(3)])
    assert not decomp_schedulable(ts, Platform(1, Budget(4, 4)), flat_bank)
    assert decomp_schedulable(ts, Platform(2, Budget(4, 4)), flat_bank)


def test_decomp_verdict_monotone(desk_bank):
    plat = Platform(4, Budget(8, 8))
    for seed in (1, 2, 3):
        ts = gen_taskset(TasksetConfig(utilization=3.0, seed=seed),
                         desk_bank)
        verdicts = []
        for k in range(len(ts.tasks) + 1):
            prefix = _taskset(ts.tasks[:k])
            verdicts.append(decomp_schedulable(prefix, plat, desk_bank))
        # adding a task never flips an unschedulable prefix back
        assert verdicts == sorted(verdicts, reverse=True)
