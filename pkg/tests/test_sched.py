import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from systolic_dse.core import ArrayShape, ComputeUnit, Dataflow, GemmWorkload, Platform, Schedule
from systolic_dse.cost import compute_runtime
from systolic_dse.errors import ShapeError
from systolic_dse.sched import (
    default_platform, load_platform, save_platform, schedule_cost, unit_runtime, unit_runtime_matrix,
)

OS, WS, IS = Dataflow


def mono(r, c, count=1):
    return ComputeUnit(count, ArrayShape(r, c))


@pytest.mark.parametrize("w,unit,d,expected", [
    ((32, 32, 16), mono(32, 32), OS, 110),
    ((32, 32, 16), mono(8, 8, count=4), OS, 152),
    ((1, 1, 1), mono(16, 16), OS, 47),
])
def test_unit_runtime_examples(w, unit, d, expected):
    assert unit_runtime(GemmWorkload(*w), unit, d) == expected


def test_schedule_cost_example():
    wl = [GemmWorkload(1000, 32, 32), GemmWorkload(32, 32, 16)]
    platform = Platform((mono(32, 32), mono(16, 16)))
    cost = schedule_cost(wl, platform, Schedule((0, 1), (OS, WS)))
    assert cost.per_workload_cycles == (4032, 156)
    assert (cost.critical_path, cost.cumulative) == (4032, 4188)


def test_single_unit():
    w, platform = GemmWorkload(300, 20, 7), Platform((mono(16, 64),))
    for d in Dataflow:
        c = schedule_cost([w], platform, Schedule((0,), (d,)))
        assert c.critical_path == c.cumulative == unit_runtime(w, platform.units[0], d)


def test_length_mismatch():
    with pytest.raises(ShapeError):
        schedule_cost([GemmWorkload(1, 1, 1)], default_platform(), Schedule((0, 1, 2, 3), (OS,) * 4))


def test_swapping_equal_workloads_on_equal_units():
    w = GemmWorkload(500, 60, 9)
    platform = Platform((mono(16, 16), mono(16, 16)))
    a = schedule_cost([w, w], platform, Schedule((0, 1), (WS, WS)))
    b = schedule_cost([w, w], platform, Schedule((1, 0), (WS, WS)))
    assert a == b


workload = st.builds(GemmWorkload, st.integers(1, 10**5), st.integers(1, 10**4), st.integers(1, 10**3))


@settings(max_examples=50, deadline=None)
@given(st.lists(workload, min_size=3, max_size=3), st.sampled_from(list(Dataflow)))
def test_identical_units_are_permutation_symmetric(wl, d):
    platform = Platform((mono(32, 16),) * 3)
    costs = {
        tuple(sorted(schedule_cost(wl, platform, Schedule(p, (d,) * 3)).per_workload_cycles))
        for p in itertools.permutations(range(3))
    }
    results = {
        (c.critical_path, c.cumulative)
        for c in (schedule_cost(wl, platform, Schedule(p, (d,) * 3)) for p in itertools.permutations(range(3)))
    }
    assert len(costs) == 1 and len(results) == 1


@settings(max_examples=100, deadline=None)
@given(st.lists(workload, min_size=4, max_size=4), st.permutations(range(4)),
       st.lists(st.sampled_from(list(Dataflow)), min_size=4, max_size=4))
def test_cost_bounds(wl, perm, flows):
    c = schedule_cost(wl, default_platform(), Schedule(tuple(perm), tuple(flows)))
    assert c.critical_path == max(c.per_workload_cycles)
    assert c.cumulative == sum(c.per_workload_cycles)
    assert c.critical_path <= c.cumulative <= 4 * c.critical_path


@settings(max_examples=100, deadline=None)
@given(workload, st.sampled_from(list(Dataflow)))
def test_count_one_is_compute_runtime(w, d):
    u = mono(256, 16)
    assert unit_runtime(w, u, d) == compute_runtime(w, u.shape, d)


def test_runtime_matrix_matches_scalar():
    rng = np.random.default_rng(0)
    platform = Platform((mono(128, 128), mono(8, 8, 4), mono(2, 2, 256), mono(16, 256)))
    for _ in range(50):
        wl = [GemmWorkload(*map(int, rng.integers(1, [10**5, 10**4, 10**3]))) for _ in range(4)]
        mat = unit_runtime_matrix(wl, platform)
        for i, u, d in itertools.product(range(4), range(4), range(3)):
            assert mat[i, u, d] == unit_runtime(wl[i], platform.units[u], Dataflow(d))


def test_platform_file_round_trip(tmp_path):
    path = tmp_path / "platform.json"
    save_platform(default_platform(), path)
    assert load_platform(path) == default_platform()
