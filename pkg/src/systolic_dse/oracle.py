"""Exhaustive-search labelers: the ground truth the recommender learns to imitate.

Each oracle scans the whole label table for one query and returns the id with
the lexicographically smallest cost key; the id itself is the last component
of the key, so ties always resolve to the smallest id.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import ArrayConfig, BufferSizes, GemmWorkload, LabelTable, Platform, Schedule
from .cost import compute_runtime, fold_arrays, runtime_array
from .errors import InfeasibleError, ParameterError, ShapeError
from .mem import KB, Case2Query, operand_stalls_array, total_stalls
from .sched import schedule_cost, unit_runtime_matrix


@dataclass(frozen=True)
class Case1Query:
    workload: GemmWorkload
    mac_exp: int


def _require_case(table: LabelTable, case_id: int) -> None:
    if table.case_id != case_id:
        raise ParameterError(f"expected a case-{case_id} table, got case {table.case_id}")


def _first_min(*keys: np.ndarray) -> int:
    """Index of the lexicographic minimum of ``keys`` (earliest index on ties)."""
    idx = np.arange(len(keys[0]))
    for key in keys:
        sub = key[idx]
        idx = idx[sub == sub.min()]
    return int(idx[0])


def oracle_case1(q: Case1Query, table: LabelTable) -> int:
    _require_case(table, 1)
    cols = table.arrays
    feasible = np.flatnonzero(cols["rows"] * cols["cols"] <= 2**q.mac_exp)
    if feasible.size == 0:
        raise InfeasibleError(f"no array fits within 2**{q.mac_exp} MACs")
    w = q.workload
    runtime = runtime_array(
        w.m, w.n, w.k, cols["rows"][feasible], cols["cols"][feasible], cols["dataflow"][feasible]
    )
    return int(feasible[_first_min(runtime)])


def oracle_case2(q: Case2Query, table: LabelTable) -> int:
    _require_case(table, 2)
    cols = table.arrays
    kb = cols["ifmap_kb"] + cols["filter_kb"] + cols["ofmap_kb"]
    feasible = np.flatnonzero(kb <= q.budget_kb)
    if feasible.size == 0:
        raise InfeasibleError(f"budget {q.budget_kb} KB is below every table entry")
    w, a = q.workload, q.array
    fold_count, fold_cycles, *demands = (
        int(v) for v in fold_arrays(w.m, w.n, w.k, a.shape.rows, a.shape.cols, int(a.dataflow))
    )
    stalls = sum(
        operand_stalls_array(demand, cols[name][feasible] * KB, q.bandwidth, fold_cycles, fold_count)
        for demand, name in zip(demands, ("ifmap_kb", "filter_kb", "ofmap_kb"))
    )
    return int(feasible[_first_min(stalls, kb[feasible])])


def oracle_case3(workloads: Sequence[GemmWorkload], platform: Platform, table: LabelTable) -> int:
    _require_case(table, 3)
    x = len(platform)
    if len(workloads) != x:
        raise ShapeError(f"expected {x} workloads, got {len(workloads)}")
    runtimes = unit_runtime_matrix(workloads, platform)
    assign, flows = table.arrays["assignment"], table.arrays["dataflows"]
    if assign.shape[1] != x:
        raise ShapeError(f"table built for {assign.shape[1]} units, platform has {x}")
    rows = np.arange(len(assign))[:, None]
    per_workload = runtimes[np.arange(x)[None, :], assign, flows[rows, assign]]
    return _first_min(per_workload.max(axis=1), per_workload.sum(axis=1))


# Scalar cost keys, shared by the metrics module.

def case1_runtime(q: Case1Query, entry: ArrayConfig) -> int:
    return compute_runtime(q.workload, entry.shape, entry.dataflow)


def case2_runtime(q: Case2Query, entry: BufferSizes) -> int:
    return total_stalls(q, entry).total_runtime


def case3_critical_path(workloads: Sequence[GemmWorkload], platform: Platform, entry: Schedule) -> int:
    return schedule_cost(workloads, platform, entry).critical_path
