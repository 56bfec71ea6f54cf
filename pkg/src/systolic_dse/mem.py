"""Stall model for the three operand SRAM buffers behind a shared-bandwidth link.

For one operand with per-fold demand ``D`` bytes, a buffer of ``cap`` bytes and
link bandwidth ``bw`` bytes/cycle, a fold's worth of data takes
``L = ceil(D / bw)`` cycles to move and the buffer holds ``n = cap // D`` folds:

* ``n >= 2``: double buffered. Only the first fill is exposed; afterwards each
  fold hides up to ``fold_cycles`` of transfer.
* ``n == 1``: transfers serialise with compute, every fold pays ``L``.
* ``n == 0``: the fold does not fit and is re-fetched ``ceil(D / cap)`` times.

The output buffer drains with the same formula.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ArrayConfig, BufferSizes, GemmWorkload
from .cost import ceil_div, fold_arrays, fold_geometry

KB = 1024


@dataclass(frozen=True)
class Case2Query:
    workload: GemmWorkload
    array: ArrayConfig
    bandwidth: int
    budget_kb: int


@dataclass(frozen=True)
class StallReport:
    ifmap_stalls: int
    filter_stalls: int
    ofmap_stalls: int
    total_stalls: int
    total_runtime: int


def operand_stalls(demand_bytes: int, capacity_bytes: int, bandwidth: int,
                   fold_cycles: int, fold_count: int) -> int:
    transfer = ceil_div(demand_bytes, bandwidth)
    resident = capacity_bytes // demand_bytes
    if resident >= 2:
        return transfer + (fold_count - 1) * max(0, transfer - fold_cycles)
    if resident == 1:
        return fold_count * transfer
    return fold_count * transfer * ceil_div(demand_bytes, capacity_bytes)


def operand_stalls_array(demand_bytes, capacity_bytes, bandwidth, fold_cycles, fold_count):
    """Vectorised :func:`operand_stalls` (int64 broadcasting)."""
    demand = np.asarray(demand_bytes, dtype=np.int64)
    cap = np.asarray(capacity_bytes, dtype=np.int64)
    transfer = ceil_div(demand, np.asarray(bandwidth, dtype=np.int64))
    resident = cap // demand
    fold_count = np.asarray(fold_count, dtype=np.int64)
    double = transfer + (fold_count - 1) * np.maximum(0, transfer - fold_cycles)
    single = fold_count * transfer
    refetch = single * ceil_div(demand, cap)
    return np.where(resident >= 2, double, np.where(resident == 1, single, refetch))


def total_stalls(q: Case2Query, buffers: BufferSizes) -> StallReport:
    plan = fold_geometry(q.workload, q.array.shape, q.array.dataflow)
    caps = (buffers.ifmap_kb * KB, buffers.filter_kb * KB, buffers.ofmap_kb * KB)
    stalls = [
        operand_stalls(demand, cap, q.bandwidth, plan.fold_cycles, plan.fold_count)
        for demand, cap in zip(plan.demands, caps)
    ]
    total = sum(stalls)
    return StallReport(*stalls, total, plan.fold_count * plan.fold_cycles + total)


def stall_grid(q: Case2Query, sizes_kb: np.ndarray) -> tuple[int, np.ndarray]:
    """Compute runtime and per-operand stalls for every candidate size.

    Returns ``(compute_runtime, stalls)`` where ``stalls`` has shape
    ``(3, len(sizes_kb))``, rows ordered ifmap, filter, ofmap.
    """
    w, a = q.workload, q.array
    fold_count, fold_cycles, *demands = (
        int(v) for v in fold_arrays(w.m, w.n, w.k, a.shape.rows, a.shape.cols, int(a.dataflow))
    )
    caps = np.asarray(sizes_kb, dtype=np.int64) * KB
    stalls = np.stack([
        operand_stalls_array(d, caps, q.bandwidth, fold_cycles, fold_count) for d in demands
    ])
    return fold_count * fold_cycles, stalls
