import numpy as np
import pytest

from systolic_dse.errors import DataError, ShapeError
from systolic_dse.data import generate_dataset
from systolic_dse.metrics import accuracy, geomean, normalized_performance
from systolic_dse.core import ArrayConfig, ArrayShape, Dataflow


def test_accuracy_examples():
    assert accuracy([3, 4], [3, 4]) == 1.0
    assert accuracy([0, 1], [0, 2]) == 0.5
    rng = np.random.default_rng(0)
    p, y = rng.integers(0, 4, 1000), rng.integers(0, 4, 1000)
    assert accuracy(p, y) == sum(int(a == b) for a, b in zip(p, y)) / 1000
    with pytest.raises(ShapeError):
        accuracy([1], [1, 2])
    with pytest.raises(ShapeError):
        accuracy([], [])


def test_geomean():
    assert geomean([1.0, 0.25]) == pytest.approx(0.5, abs=1e-15)
    rng = np.random.default_rng(2)
    r = rng.uniform(0.1, 1, 500)
    assert geomean(r) == pytest.approx(geomean(rng.permutation(r)), abs=1e-14)


def test_case1_ratio_example(table1):
    feats = [[1000, 32, 32, 8]]
    opt = table1.index_of(ArrayConfig(ArrayShape(16, 16), Dataflow.WS))
    pred = table1.index_of(ArrayConfig(ArrayShape(16, 16), Dataflow.OS))
    rep = normalized_performance(1, feats, [pred], [opt], table1)
    assert rep.ratios[0] == pytest.approx(4184 / 9828, abs=1e-12)
    assert abs(rep.geomean_normalized_perf - 0.4257) < 1e-4
    assert rep.accuracy == 0.0 and rep.infeasible_prediction_rate == 0.0


def test_infeasible_prediction_counted(table1):
    feats = [[1000, 32, 32, 8]]
    opt = table1.index_of(ArrayConfig(ArrayShape(16, 16), Dataflow.WS))
    big = table1.index_of(ArrayConfig(ArrayShape(256, 256), Dataflow.WS))
    rep = normalized_performance(1, feats, [big], [opt], table1)
    assert rep.infeasible_prediction_rate == 1.0
    assert 0 < rep.ratios[0] <= 1.0


def test_stale_label_rejected(table1):
    opt = table1.index_of(ArrayConfig(ArrayShape(16, 16), Dataflow.WS))
    wrong = table1.index_of(ArrayConfig(ArrayShape(16, 16), Dataflow.OS))
    with pytest.raises(DataError):
        normalized_performance(1, [[1000, 32, 32, 8]], [opt], [wrong], table1)
    rep = normalized_performance(1, [[1000, 32, 32, 8]], [opt], [wrong], table1, verify=False)
    assert rep.ratios[0] == 1.0


@pytest.mark.parametrize("case", [1, 2, 3])
def test_identity_predictions(case, table1, table2, table3):
    table = {1: table1, 2: table2, 3: table3}[case]
    ds = generate_dataset(case, 50, 21, table=table)
    rep = normalized_performance(case, ds.features, ds.labels, ds.labels, table)
    assert rep.accuracy == 1.0
    assert abs(rep.geomean_normalized_perf - 1.0) <= 1e-12
    assert rep.to_json() == {"count": 50, "accuracy": 1.0, "geomean": 1.0, "infeasible_rate": 0.0}


def test_accuracy_bounded_by_ratio_one_fraction(table1):
    ds = generate_dataset(1, 200, 8, table=table1)
    rng = np.random.default_rng(0)
    preds = np.where(rng.random(200) < 0.5, ds.labels, rng.integers(0, len(table1), 200))
    rep = normalized_performance(1, ds.features, preds, ds.labels, table1)
    assert np.all((rep.ratios > 0) & (rep.ratios <= 1))
    assert rep.accuracy <= np.mean(rep.ratios == 1.0)


def test_misaligned(table1):
    with pytest.raises(ShapeError):
        normalized_performance(1, [[1, 1, 1, 8]], [0, 1], [0], table1)
