import itertools
import json
import math

import pytest

from systolic_dse.core import (
    ArrayConfig, ArrayShape, BufferSizes, ComputeUnit, Dataflow, GemmWorkload, LabelTable,
    Platform, Schedule, build_table, enumerate_case1_labels, enumerate_case2_labels,
    enumerate_case3_labels,
)
from systolic_dse.errors import ParameterError, ShapeError
from systolic_dse.sched import default_platform


def square_platform(x):
    return Platform(tuple(ComputeUnit(1, ArrayShape(16, 16)) for _ in range(x)))


def test_dataflow_codes():
    assert [int(d) for d in Dataflow] == [0, 1, 2]
    assert [d.name for d in sorted(Dataflow)] == ["OS", "WS", "IS"]
    assert Dataflow.parse("ws") is Dataflow.WS
    assert Dataflow.parse(2) is Dataflow.IS


@pytest.mark.parametrize("bad", [(0, 1, 1), (1, -3, 1), (1, 1, 0)])
def test_workload_rejects_nonpositive(bad):
    with pytest.raises(ParameterError):
        GemmWorkload(*bad)


@pytest.mark.parametrize("rows,cols", [(3, 4), (16, 24), (0, 16)])
def test_shape_requires_powers_of_two(rows, cols):
    with pytest.raises(ParameterError):
        ArrayShape(rows, cols)


def test_schedule_validates_permutation():
    with pytest.raises(ShapeError):
        Schedule((0, 0), (Dataflow.OS, Dataflow.OS))
    with pytest.raises(ShapeError):
        Schedule((1, 0), (Dataflow.OS,))


@pytest.mark.parametrize("min_exp,max_mac_exp,count", [(4, 8, 3), (4, 9, 9), (4, 18, 198)])
def test_case1_counts(min_exp, max_mac_exp, count):
    table = enumerate_case1_labels(min_exp, max_mac_exp)
    assert len(table) == count


def test_case1_small_table_contents():
    table = enumerate_case1_labels(4, 8)
    assert list(table.entries) == [ArrayConfig(ArrayShape(16, 16), d) for d in Dataflow]
    shapes = [(e.shape.rows, e.shape.cols) for e in enumerate_case1_labels(4, 9).entries[::3]]
    assert shapes == [(16, 16), (16, 32), (32, 16)]


@pytest.mark.parametrize("min_exp", [1, 2, 4])
@pytest.mark.parametrize("extra", [0, 1, 5, 10])
def test_case1_count_law_against_enumeration(min_exp, extra):
    max_mac_exp = 2 * min_exp + extra
    brute = sum(
        3
        for a in range(0, max_mac_exp + 1)
        for b in range(0, max_mac_exp + 1)
        if a >= min_exp and b >= min_exp and a + b <= max_mac_exp
    )
    d = max_mac_exp - 2 * min_exp
    assert len(enumerate_case1_labels(min_exp, max_mac_exp)) == brute == 3 * (d + 1) * (d + 2) // 2


def test_case1_order_and_caps():
    table = enumerate_case1_labels()
    keys = [(e.shape.rows.bit_length(), e.shape.cols.bit_length(), int(e.dataflow)) for e in table.entries]
    assert keys == sorted(keys)
    assert all(e.shape.macs <= 2**18 and min(e.shape.rows, e.shape.cols) >= 16 for e in table.entries)


@pytest.mark.parametrize("args", [(0, 8), (5, 9), (4, 7)])
def test_case1_rejects_bad_bounds(args):
    with pytest.raises(ParameterError):
        enumerate_case1_labels(*args)


def test_case2_tables():
    table = enumerate_case2_labels(100, 1000, 100)
    assert len(table) == 1000
    assert table[0] == BufferSizes(100, 100, 100)
    assert table[1] == BufferSizes(100, 100, 200)
    assert table[10] == BufferSizes(100, 200, 100)
    assert table[100] == BufferSizes(200, 100, 100)
    assert len(enumerate_case2_labels(100, 200, 100)) == 8


@pytest.mark.parametrize("args", [(100, 1000, 350), (0, 100, 100), (500, 100, 100)])
def test_case2_rejects_bad_grid(args):
    with pytest.raises(ParameterError):
        enumerate_case2_labels(*args)


@pytest.mark.parametrize("x", [1, 2, 3, 4, 5])
def test_case3_count_law(x):
    assert len(enumerate_case3_labels(square_platform(x))) == 3**x * math.factorial(x)


def test_case3_default_platform_has_1944_entries():
    assert len(enumerate_case3_labels(default_platform())) == 1944


def test_case3_id_formula():
    x = 3
    table = enumerate_case3_labels(square_platform(x))
    perms = list(itertools.permutations(range(x)))
    for label_id, entry in enumerate(table.entries):
        perm_index = perms.index(entry.assignment)
        code = sum(int(d) * 3**i for i, d in enumerate(entry.dataflows))
        assert label_id == perm_index * 3**x + code


@pytest.mark.parametrize("case", [1, 2, 3])
def test_bijective_lookup(case):
    table = build_table(case)
    assert len(set(table.entries)) == len(table)
    for label_id in range(len(table)):
        assert table.index_of(table[label_id]) == label_id


@pytest.mark.parametrize("case", [1, 2, 3])
def test_serialisation_is_deterministic_and_round_trips(case):
    a, b = build_table(case), build_table(case)
    assert a.dumps() == b.dumps()
    doc = json.loads(a.dumps())
    assert set(doc) == {"case", "params", "entries"}
    assert doc["case"] == case
    again = LabelTable.from_json(doc)
    assert again.entries == a.entries
    assert again.dumps() == a.dumps()


def test_platform_json_round_trip():
    p = default_platform()
    assert Platform.from_json(json.loads(json.dumps(p.to_json()))) == p
    with pytest.raises(ParameterError):
        Platform.from_json({"units": [{"rows": 4}]})
