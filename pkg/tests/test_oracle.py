import itertools

import numpy as np
import pytest

from reference import case1_key, case2_key, case3_key, rescan
from systolic_dse.core import (
    ArrayConfig, ArrayShape, BufferSizes, ComputeUnit, Dataflow, GemmWorkload, Platform,
    enumerate_case1_labels, enumerate_case3_labels,
)
from systolic_dse.cost import compute_runtime
from systolic_dse.errors import InfeasibleError, ParameterError, ShapeError
from systolic_dse.mem import Case2Query
from systolic_dse.oracle import Case1Query, oracle_case1, oracle_case2, oracle_case3
from systolic_dse.sched import schedule_cost


def test_case1_example(table1):
    q = Case1Query(GemmWorkload(1000, 32, 32), 8)
    best = table1[oracle_case1(q, table1)]
    assert best == ArrayConfig(ArrayShape(16, 16), Dataflow.WS)
    assert compute_runtime(q.workload, best.shape, best.dataflow) == 4184
    assert compute_runtime(q.workload, best.shape, Dataflow.OS) == 9828


def test_case1_symmetric_tie_goes_to_os(table1):
    # 16x16 only; m = n so OS and IS cost the same, OS has the smaller id.
    q = Case1Query(GemmWorkload(32, 32, 32), 8)
    w = q.workload
    s = ArrayShape(16, 16)
    assert compute_runtime(w, s, Dataflow.OS) == compute_runtime(w, s, Dataflow.IS)
    assert table1[oracle_case1(q, table1)].dataflow == Dataflow.OS


def test_case1_result_beats_all_feasible(table1):
    q = Case1Query(GemmWorkload(32, 32, 16), 10)
    got = oracle_case1(q, table1)
    assert (compute_runtime(q.workload, table1[got].shape, table1[got].dataflow), got) == rescan(
        lambda i: case1_key(q, table1, i), table1)


def test_case1_infeasible():
    table = enumerate_case1_labels(min_exp=4, max_mac_exp=18)
    with pytest.raises(InfeasibleError):
        oracle_case1(Case1Query(GemmWorkload(1, 1, 1), 7), table)


def test_wrong_table(table1, table2):
    with pytest.raises(ParameterError):
        oracle_case1(Case1Query(GemmWorkload(1, 1, 1), 8), table2)


def base_case2(budget=3000):
    return Case2Query(GemmWorkload(32, 32, 16), ArrayConfig(ArrayShape(32, 32), Dataflow.OS), 50, budget)


def test_case2_example(table2):
    assert table2[oracle_case2(base_case2(), table2)] == BufferSizes(100, 100, 100)


def test_case2_budget_below_grid(table2):
    with pytest.raises(InfeasibleError):
        oracle_case2(base_case2(299), table2)


def test_case3_example():
    platform = Platform((ComputeUnit(1, ArrayShape(32, 32)), ComputeUnit(1, ArrayShape(16, 16))))
    table = enumerate_case3_labels(platform)
    assert len(table) == 18
    wl = [GemmWorkload(1000, 32, 32), GemmWorkload(32, 32, 16)]
    costs = [schedule_cost(wl, platform, table[i]) for i in range(18)]
    brute = min(range(18), key=lambda i: (costs[i].critical_path, costs[i].cumulative, i))
    got = oracle_case3(wl, platform, table)
    assert got == brute == 4
    # WS streams M=1000 through a single fold on the 32x32 unit, so it
    # undercuts the 32 OS folds (4032 cycles) of the identity/(OS, WS) schedule.
    assert table[got].assignment == (0, 1)
    assert table[got].dataflows == (Dataflow.WS, Dataflow.WS)
    assert (costs[got].critical_path, costs[got].cumulative) == (1094, 1250)
    assert costs[3].critical_path == 4032


def test_case3_identical_units_take_smallest_id():
    platform = Platform((ComputeUnit(1, ArrayShape(16, 16)),) * 2)
    table = enumerate_case3_labels(platform)
    w = GemmWorkload(64, 64, 64)
    got = oracle_case3([w, w], platform, table)
    assert got == rescan(lambda i: case3_key([w, w], platform, table, i), table)[-1]
    assert got == 0


def test_case3_length_mismatch(table3):
    with pytest.raises(ShapeError):
        oracle_case3([GemmWorkload(1, 1, 1)], table3.platform, table3)


def random_workload(rng):
    return GemmWorkload(*map(int, rng.integers(1, [100_001, 10_001, 1_001])))


def test_case1_rescan(table1):
    rng = np.random.default_rng(101)
    for _ in range(200):
        q = Case1Query(random_workload(rng), int(rng.integers(8, 19)))
        assert oracle_case1(q, table1) == rescan(lambda i: case1_key(q, table1, i), table1)[-1]


def test_case2_rescan(table1, table2):
    rng = np.random.default_rng(102)
    for _ in range(50):
        array = table1[int(rng.integers(len(table1)))]
        q = Case2Query(random_workload(rng), array, int(rng.integers(1, 101)), 100 * int(rng.integers(3, 31)))
        assert oracle_case2(q, table2) == rescan(lambda i: case2_key(q, table2, i), table2)[-1]


def test_case3_rescan(table3):
    rng = np.random.default_rng(103)
    for _ in range(10):
        wl = [random_workload(rng) for _ in range(4)]
        got = oracle_case3(wl, table3.platform, table3)
        assert got == rescan(lambda i: case3_key(wl, table3.platform, table3, i), table3)[-1]


def test_case1_feasibility(table1):
    rng = np.random.default_rng(5)
    for mac in range(8, 19):
        e = table1[oracle_case1(Case1Query(random_workload(rng), mac), table1)]
        assert e.shape.macs <= 2**mac
