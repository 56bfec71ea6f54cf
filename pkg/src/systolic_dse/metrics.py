"""Accuracy and geometric-mean normalized performance of predicted configurations."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .core import LabelTable
from .data import label_row, query_from_row
from .errors import DataError, ShapeError
from .oracle import case1_runtime, case2_runtime, case3_critical_path


def accuracy(predictions, labels) -> float:
    p = np.asarray(predictions).reshape(-1)
    y = np.asarray(labels).reshape(-1)
    if len(p) != len(y):
        raise ShapeError(f"{len(p)} predictions vs {len(y)} labels")
    if len(y) == 0:
        raise ShapeError("accuracy of an empty sample is undefined")
    return int((p == y).sum()) / len(y)


def geomean(ratios) -> float:
    r = np.asarray(ratios, dtype=np.float64)
    return math.exp(math.fsum(np.log(r)) / len(r))


@dataclass
class EvalReport:
    count: int
    accuracy: float
    geomean_normalized_perf: float
    infeasible_prediction_rate: float
    ratios: np.ndarray = field(repr=False, default_factory=lambda: np.zeros(0))

    def to_json(self) -> dict:
        return {
            "count": self.count,
            "accuracy": self.accuracy,
            "geomean": self.geomean_normalized_perf,
            "infeasible_rate": self.infeasible_prediction_rate,
        }

    def write_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=1)
            fh.write("\n")

    def write_ratios_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["index", "ratio"])
            w.writerows((i, repr(float(r))) for i, r in enumerate(self.ratios))


def _cost_and_feasible(case_id: int, query, entry, table: LabelTable) -> tuple[int, bool]:
    if case_id == 1:
        return case1_runtime(query, entry), entry.shape.macs <= 2**query.mac_exp
    if case_id == 2:
        return case2_runtime(query, entry), entry.total_kb <= query.budget_kb
    return case3_critical_path(query, table.platform, entry), True


def normalized_performance(case_id: int, features, predictions, labels, table: LabelTable,
                           verify: bool = True) -> EvalReport:
    """Score predictions by ``optimal cost / predicted cost`` per sample.

    Costs are compute runtime (case 1), compute plus stall cycles (case 2) and
    critical-path runtime (case 3). Predictions that break the query's MAC or
    capacity constraint are still scored but counted as infeasible; since they
    may undercut the constrained optimum their ratio is capped at 1. With
    ``verify`` every label is re-checked against its oracle.
    """
    features = np.atleast_2d(np.asarray(features, dtype=np.int64))
    predictions = np.asarray(predictions, dtype=np.int64).reshape(-1)
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if not len(features) == len(predictions) == len(labels):
        raise ShapeError("features, predictions and labels must align")
    if len(labels) == 0:
        raise ShapeError("nothing to evaluate")
    if table.case_id != case_id:
        raise ShapeError(f"table is for case {table.case_id}, not {case_id}")

    ratios = np.empty(len(labels))
    infeasible = 0
    for i, (row, pred, label) in enumerate(zip(features, predictions, labels)):
        query = query_from_row(case_id, row)
        opt_cost, _ = _cost_and_feasible(case_id, query, table[label], table)
        if verify:
            best = label_row(case_id, row, table)
            best_cost, _ = _cost_and_feasible(case_id, query, table[best], table)
            if best_cost < opt_cost:
                raise DataError(
                    f"sample {i}: label {label} costs {opt_cost}, oracle finds {best} at {best_cost}"
                )
        pred_cost, ok = _cost_and_feasible(case_id, query, table[pred], table)
        infeasible += not ok
        ratios[i] = min(1.0, opt_cost / pred_cost)
    return EvalReport(
        count=len(labels),
        accuracy=accuracy(predictions, labels),
        geomean_normalized_perf=geomean(ratios),
        infeasible_prediction_rate=infeasible / len(labels),
        ratios=ratios,
    )
