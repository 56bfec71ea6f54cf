"""Runtime of GEMM workloads scheduled one-per-unit on a heterogeneous platform."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import ArrayShape, ComputeUnit, Dataflow, GemmWorkload, Platform, Schedule
from .cost import ceil_div, compute_runtime, runtime_array
from .errors import ShapeError


@dataclass(frozen=True)
class ScheduleCost:
    per_workload_cycles: tuple[int, ...]
    critical_path: int
    cumulative: int


def default_platform() -> Platform:
    return Platform((
        ComputeUnit(1, ArrayShape(128, 128)),
        ComputeUnit(1, ArrayShape(32, 32)),
        ComputeUnit(1, ArrayShape(256, 16)),
        ComputeUnit(1, ArrayShape(16, 256)),
    ))


def load_platform(path) -> Platform:
    return Platform.from_json(json.loads(Path(path).read_text()))


def save_platform(platform: Platform, path) -> None:
    Path(path).write_text(json.dumps(platform.to_json(), indent=1) + "\n")


def unit_runtime(w: GemmWorkload, u: ComputeUnit, d: Dataflow) -> int:
    if u.count == 1:
        return compute_runtime(w, u.shape, d)
    # Sub-arrays split M evenly and run in lockstep; the ragged last chunk
    # is charged as a full one.
    chunk = GemmWorkload(ceil_div(w.m, u.count), w.n, w.k)
    return compute_runtime(chunk, u.shape, d)


def schedule_cost(workloads: Sequence[GemmWorkload], platform: Platform, s: Schedule) -> ScheduleCost:
    x = len(platform)
    if len(workloads) != x or len(s.assignment) != x:
        raise ShapeError(
            f"{len(workloads)} workloads, {x} units and {len(s.assignment)} assignments must match"
        )
    cycles = tuple(
        unit_runtime(w, platform.units[u], s.dataflows[u])
        for w, u in zip(workloads, s.assignment)
    )
    return ScheduleCost(cycles, max(cycles), sum(cycles))


def unit_runtime_matrix(workloads: Sequence[GemmWorkload], platform: Platform) -> np.ndarray:
    """``out[i, u, d]`` is the runtime of workload ``i`` on unit ``u`` under dataflow ``d``."""
    x = len(platform)
    if len(workloads) != x:
        raise ShapeError(f"expected {x} workloads, got {len(workloads)}")
    counts = np.array([u.count for u in platform.units], dtype=np.int64)
    rows = np.array([u.shape.rows for u in platform.units], dtype=np.int64)
    cols = np.array([u.shape.cols for u in platform.units], dtype=np.int64)
    m = np.array([w.m for w in workloads], dtype=np.int64)
    n = np.array([w.n for w in workloads], dtype=np.int64)
    k = np.array([w.k for w in workloads], dtype=np.int64)
    chunk_m = ceil_div(m[:, None], counts[None, :])
    flows = np.arange(3, dtype=np.int64)
    return runtime_array(
        chunk_m[:, :, None], n[:, None, None], k[:, None, None],
        rows[None, :, None], cols[None, :, None], flows[None, None, :],
    )
