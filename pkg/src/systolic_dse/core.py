"""Domain types and deterministic enumeration of the three label spaces.

Every case study turns a search problem into classification by listing all
candidate configurations in a fixed order; the position of a configuration in
that list is its label id.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from enum import IntEnum
from functools import cached_property
from typing import Any, Sequence, Union

import numpy as np

from .errors import ParameterError, ShapeError


class Dataflow(IntEnum):
    OS = 0
    WS = 1
    IS = 2

    @classmethod
    def parse(cls, value: Union[str, int, "Dataflow"]) -> "Dataflow":
        if isinstance(value, str):
            try:
                return cls[value.upper()]
            except KeyError:
                raise ParameterError(f"unknown dataflow {value!r}") from None
        return cls(int(value))


def _is_pow2(v: int) -> bool:
    return v >= 1 and (v & (v - 1)) == 0


@dataclass(frozen=True)
class GemmWorkload:
    """C[m x n] = A[m x k] . B[k x n]."""

    m: int
    n: int
    k: int

    def __post_init__(self):
        if min(self.m, self.n, self.k) < 1:
            raise ParameterError(f"workload dimensions must be >= 1, got {self}")


@dataclass(frozen=True)
class ArrayShape:
    rows: int
    cols: int

    def __post_init__(self):
        if not (_is_pow2(self.rows) and _is_pow2(self.cols)):
            raise ParameterError(f"array dims must be powers of two, got {self.rows}x{self.cols}")

    @property
    def macs(self) -> int:
        return self.rows * self.cols

    def __str__(self):
        return f"{self.rows}x{self.cols}"


@dataclass(frozen=True)
class ArrayConfig:
    shape: ArrayShape
    dataflow: Dataflow

    def to_json(self) -> dict:
        return {"rows": self.shape.rows, "cols": self.shape.cols, "dataflow": self.dataflow.name}

    @classmethod
    def from_json(cls, obj: dict) -> "ArrayConfig":
        return cls(ArrayShape(int(obj["rows"]), int(obj["cols"])), Dataflow.parse(obj["dataflow"]))


@dataclass(frozen=True)
class BufferSizes:
    ifmap_kb: int
    filter_kb: int
    ofmap_kb: int

    def __post_init__(self):
        if min(self.ifmap_kb, self.filter_kb, self.ofmap_kb) < 1:
            raise ParameterError(f"buffer sizes must be positive, got {self}")

    @property
    def total_kb(self) -> int:
        return self.ifmap_kb + self.filter_kb + self.ofmap_kb

    def to_json(self) -> dict:
        return {"ifmap_kb": self.ifmap_kb, "filter_kb": self.filter_kb, "ofmap_kb": self.ofmap_kb}

    @classmethod
    def from_json(cls, obj: dict) -> "BufferSizes":
        return cls(int(obj["ifmap_kb"]), int(obj["filter_kb"]), int(obj["ofmap_kb"]))


@dataclass(frozen=True)
class ComputeUnit:
    """``count`` identical sub-arrays of one shape, working on one GEMM together."""

    count: int
    shape: ArrayShape

    def __post_init__(self):
        if self.count < 1:
            raise ParameterError(f"compute unit count must be >= 1, got {self.count}")


@dataclass(frozen=True)
class Platform:
    units: tuple[ComputeUnit, ...]

    def __post_init__(self):
        object.__setattr__(self, "units", tuple(self.units))
        if len(self.units) < 1:
            raise ParameterError("platform needs at least one compute unit")

    def __len__(self):
        return len(self.units)

    def to_json(self) -> dict:
        return {
            "units": [
                {"count": u.count, "rows": u.shape.rows, "cols": u.shape.cols} for u in self.units
            ]
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Platform":
        try:
            units = [
                ComputeUnit(int(u["count"]), ArrayShape(int(u["rows"]), int(u["cols"])))
                for u in obj["units"]
            ]
        except (KeyError, TypeError) as exc:
            raise ParameterError(f"malformed platform description: {exc}") from None
        return cls(tuple(units))


@dataclass(frozen=True)
class Schedule:
    """Workload ``i`` runs on unit ``assignment[i]``; ``dataflows[u]`` is unit ``u``'s mapping."""

    assignment: tuple[int, ...]
    dataflows: tuple[Dataflow, ...]

    def __post_init__(self):
        object.__setattr__(self, "assignment", tuple(int(a) for a in self.assignment))
        object.__setattr__(self, "dataflows", tuple(Dataflow(d) for d in self.dataflows))
        x = len(self.assignment)
        if sorted(self.assignment) != list(range(x)):
            raise ShapeError(f"assignment {self.assignment} is not a permutation")
        if len(self.dataflows) != x:
            raise ShapeError(f"expected {x} dataflows, got {len(self.dataflows)}")

    def to_json(self) -> dict:
        return {"assignment": list(self.assignment), "dataflows": [d.name for d in self.dataflows]}

    @classmethod
    def from_json(cls, obj: dict) -> "Schedule":
        return cls(tuple(obj["assignment"]), tuple(Dataflow.parse(d) for d in obj["dataflows"]))


Entry = Union[ArrayConfig, BufferSizes, Schedule]
_ENTRY_TYPES = {1: ArrayConfig, 2: BufferSizes, 3: Schedule}


@dataclass(frozen=True)
class LabelTable:
    case_id: int
    entries: tuple
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        if self.case_id not in _ENTRY_TYPES:
            raise ParameterError(f"case_id must be 1, 2 or 3, got {self.case_id}")

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, label_id: int) -> Entry:
        return self.entries[label_id]

    def index_of(self, entry: Entry) -> int:
        try:
            return self._index[entry]
        except KeyError:
            raise ParameterError(f"{entry} is not in the case-{self.case_id} table") from None

    @cached_property
    def _index(self) -> dict:
        return {e: i for i, e in enumerate(self.entries)}

    @cached_property
    def platform(self) -> Platform | None:
        if self.case_id != 3:
            return None
        return Platform.from_json(self.params["platform"])

    # Column views used by vectorised oracle scans.
    @cached_property
    def arrays(self) -> dict[str, np.ndarray]:
        if self.case_id == 1:
            return {
                "rows": np.array([e.shape.rows for e in self.entries], dtype=np.int64),
                "cols": np.array([e.shape.cols for e in self.entries], dtype=np.int64),
                "dataflow": np.array([int(e.dataflow) for e in self.entries], dtype=np.int64),
            }
        if self.case_id == 2:
            return {
                "ifmap_kb": np.array([e.ifmap_kb for e in self.entries], dtype=np.int64),
                "filter_kb": np.array([e.filter_kb for e in self.entries], dtype=np.int64),
                "ofmap_kb": np.array([e.ofmap_kb for e in self.entries], dtype=np.int64),
            }
        return {
            "assignment": np.array([e.assignment for e in self.entries], dtype=np.int64),
            "dataflows": np.array([[int(d) for d in e.dataflows] for e in self.entries], dtype=np.int64),
        }

    def to_json(self) -> dict:
        return {
            "case": self.case_id,
            "params": self.params,
            "entries": [e.to_json() for e in self.entries],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, obj: dict) -> "LabelTable":
        case_id = int(obj["case"])
        entry_type = _ENTRY_TYPES[case_id]
        return cls(case_id, tuple(entry_type.from_json(e) for e in obj["entries"]), dict(obj["params"]))


def enumerate_case1_labels(min_exp: int = 4, max_mac_exp: int = 18) -> LabelTable:
    """All (2**a x 2**b, dataflow) with a, b >= min_exp and a + b <= max_mac_exp."""
    if min_exp < 1 or 2 * min_exp > max_mac_exp:
        raise ParameterError(
            f"need min_exp >= 1 and 2*min_exp <= max_mac_exp, got ({min_exp}, {max_mac_exp})"
        )
    entries = []
    for a in range(min_exp, max_mac_exp - min_exp + 1):
        for b in range(min_exp, max_mac_exp - a + 1):
            shape = ArrayShape(2**a, 2**b)
            entries.extend(ArrayConfig(shape, d) for d in Dataflow)
    return LabelTable(1, tuple(entries), {"min_exp": min_exp, "max_mac_exp": max_mac_exp})


def enumerate_case2_labels(min_kb: int = 100, max_kb: int = 1000, step_kb: int = 100) -> LabelTable:
    if min_kb < 1 or step_kb < 1 or max_kb < min_kb or (max_kb - min_kb) % step_kb:
        raise ParameterError(f"invalid buffer grid ({min_kb}, {max_kb}, {step_kb})")
    sizes = range(min_kb, max_kb + 1, step_kb)
    entries = tuple(BufferSizes(i, f, o) for i, f, o in itertools.product(sizes, repeat=3))
    return LabelTable(2, entries, {"min_kb": min_kb, "max_kb": max_kb, "step_kb": step_kb})


def enumerate_case3_labels(platform: Platform) -> LabelTable:
    """Id = perm_index * 3**x + sum(code(dataflow of unit i) * 3**i)."""
    x = len(platform)
    # Little-endian base-3 digits: unit 0's dataflow varies fastest.
    df_tuples = [tuple(reversed(t)) for t in itertools.product(tuple(Dataflow), repeat=x)]
    entries = tuple(
        Schedule(perm, dfs)
        for perm in itertools.permutations(range(x))
        for dfs in df_tuples
    )
    return LabelTable(3, entries, {"platform": platform.to_json()})


def expected_case3_count(x: int) -> int:
    return 3**x * math.factorial(x)


def build_table(case_id: int, params: dict[str, Any] | None = None) -> LabelTable:
    """Build a table from the ``params`` block of its JSON form."""
    params = dict(params or {})
    if case_id == 1:
        return enumerate_case1_labels(**params)
    if case_id == 2:
        return enumerate_case2_labels(**params)
    if case_id == 3:
        platform = params.get("platform")
        if platform is None:
            from .sched import default_platform

            return enumerate_case3_labels(default_platform())
        if not isinstance(platform, Platform):
            platform = Platform.from_json(platform)
        return enumerate_case3_labels(platform)
    raise ParameterError(f"case_id must be 1, 2 or 3, got {case_id}")


def describe_entry(entry: Entry) -> str:
    if isinstance(entry, ArrayConfig):
        return f"rows={entry.shape.rows} cols={entry.shape.cols} dataflow={entry.dataflow.name}"
    if isinstance(entry, BufferSizes):
        return f"ifmap={entry.ifmap_kb}KB filter={entry.filter_kb}KB ofmap={entry.ofmap_kb}KB"
    pairs = ", ".join(
        f"w{i}->u{u}" for i, u in enumerate(entry.assignment)
    )
    dfs = ",".join(d.name for d in entry.dataflows)
    return f"assignment=[{pairs}] dataflows=[{dfs}]"


def as_workloads(values: Sequence[int]) -> list[GemmWorkload]:
    if len(values) % 3:
        raise ShapeError(f"expected a multiple of 3 dimensions, got {len(values)}")
    return [GemmWorkload(*map(int, values[i : i + 3])) for i in range(0, len(values), 3)]
