"""Closed-form compute runtime of a GEMM on a monolithic systolic array.

Each dataflow pins two GEMM dimensions to the array (the spatial dimensions)
and streams the third through it (the temporal dimension):

    ====  ==========  ==========  ========
    flow  rows <- R   cols <- C   temporal
    ====  ==========  ==========  ========
    OS    M           N           K
    WS    K           N           M
    IS    K           M           N
    ====  ==========  ==========  ========

A workload larger than the array is processed in folds. Every fold costs
``2R + C - 2`` cycles of fill/skew plus the temporal dimension; partial folds
are charged in full. Stalls are ignored here (see :mod:`systolic_dse.mem`).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ArrayShape, Dataflow, GemmWorkload


def ceil_div(a, b):
    return -(-a // b)


@dataclass(frozen=True)
class FoldPlan:
    fold_count: int
    fold_cycles: int
    ifmap_bytes: int
    filter_bytes: int
    ofmap_bytes: int

    @property
    def demands(self) -> tuple[int, int, int]:
        return self.ifmap_bytes, self.filter_bytes, self.ofmap_bytes


def _spatial_temporal(w: GemmWorkload, d: Dataflow) -> tuple[int, int, int]:
    if d == Dataflow.OS:
        return w.m, w.n, w.k
    if d == Dataflow.WS:
        return w.k, w.n, w.m
    return w.k, w.m, w.n


def fold_geometry(w: GemmWorkload, s: ArrayShape, d: Dataflow) -> FoldPlan:
    r, c = s.rows, s.cols
    d = Dataflow(d)
    row_dim, col_dim, temporal = _spatial_temporal(w, d)
    fold_count = ceil_div(row_dim, r) * ceil_div(col_dim, c)
    fold_cycles = 2 * r + c + temporal - 2
    # Per-fold operand traffic, one byte per element.
    if d == Dataflow.OS:
        demands = (r * w.k, w.k * c, r * c)
    elif d == Dataflow.WS:
        demands = (w.m * r, r * c, w.m * c)
    else:
        demands = (r * c, r * w.n, c * w.n)
    return FoldPlan(fold_count, fold_cycles, *demands)


def compute_runtime(w: GemmWorkload, s: ArrayShape, d: Dataflow) -> int:
    plan = fold_geometry(w, s, d)
    return plan.fold_count * plan.fold_cycles


def mapping_utilization(w: GemmWorkload, s: ArrayShape, d: Dataflow) -> float:
    """Fraction of PEs doing useful work, averaged over folds."""
    r, c = s.rows, s.cols
    row_dim, col_dim, _ = _spatial_temporal(w, Dataflow(d))
    return (row_dim * col_dim) / (ceil_div(row_dim, r) * r * ceil_div(col_dim, c) * c)


def fold_arrays(m, n, k, rows, cols, dataflow):
    """Vectorised :func:`fold_geometry`; all arguments broadcast as int64 arrays.

    Returns ``(fold_count, fold_cycles, ifmap_bytes, filter_bytes, ofmap_bytes)``.
    """
    m, n, k, rows, cols, dataflow = np.broadcast_arrays(
        *(np.asarray(v, dtype=np.int64) for v in (m, n, k, rows, cols, dataflow))
    )
    os_, ws = dataflow == Dataflow.OS, dataflow == Dataflow.WS
    row_dim = np.where(os_, m, k)
    col_dim = np.where(os_ | ws, n, m)
    temporal = np.select([os_, ws], [k, m], n)
    fold_count = ceil_div(row_dim, rows) * ceil_div(col_dim, cols)
    fold_cycles = 2 * rows + cols + temporal - 2
    ifmap = np.select([os_, ws], [rows * k, m * rows], rows * cols)
    filt = np.select([os_, ws], [k * cols, rows * cols], rows * n)
    ofmap = np.select([os_, ws], [rows * cols, m * cols], cols * n)
    return fold_count, fold_cycles, ifmap, filt, ofmap


def runtime_array(m, n, k, rows, cols, dataflow) -> np.ndarray:
    fold_count, fold_cycles, *_ = fold_arrays(m, n, k, rows, cols, dataflow)
    return fold_count * fold_cycles
