"""Query sampling, oracle labelling, CSV persistence and feature encoding."""

from __future__ import annotations

import csv
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import (
    ArrayConfig, ArrayShape, Dataflow, GemmWorkload, LabelTable, as_workloads,
    enumerate_case1_labels,
)
from .errors import DataError, EncodingError, SchemaError, InfeasibleError, ParameterError
from .mem import Case2Query
from .oracle import Case1Query, oracle_case1, oracle_case2, oracle_case3

log = logging.getLogger(__name__)

CASE1_COLUMNS = ("m", "n", "k", "mac_exp")
CASE2_COLUMNS = ("m", "n", "k", "rows", "cols", "dataflow", "bw", "budget_kb")
THREADS_ENV = "SYSTOLIC_DSE_THREADS"
PROGRESS_EVERY = 10_000
DEFAULT_BUCKETS = 1024


def feature_columns(case_id: int, num_units: int = 4) -> tuple[str, ...]:
    if case_id == 1:
        return CASE1_COLUMNS
    if case_id == 2:
        return CASE2_COLUMNS
    if case_id == 3:
        return tuple(f"{d}{i}" for i in range(num_units) for d in "mnk")
    raise ParameterError(f"case_id must be 1, 2 or 3, got {case_id}")


@dataclass(frozen=True)
class SamplingRanges:
    m_max: int = 100_000
    n_max: int = 10_000
    k_max: int = 1_000

    def __post_init__(self):
        if min(self.m_max, self.n_max, self.k_max) < 1:
            raise ParameterError(f"sampling ranges must be >= 1, got {self}")


def sample_workload(rng: np.random.Generator, ranges: SamplingRanges = SamplingRanges()) -> GemmWorkload:
    m, n, k = rng.integers(1, [ranges.m_max + 1, ranges.n_max + 1, ranges.k_max + 1])
    return GemmWorkload(int(m), int(n), int(k))


@dataclass(frozen=True)
class GenParams:
    """Input-space sampling parameters. ``None`` bounds are derived from the label tables."""

    ranges: SamplingRanges = SamplingRanges()
    mac_exp_min: int | None = None
    mac_exp_max: int | None = None
    bw_max: int = 100
    budget_min_kb: int = 300
    budget_max_kb: int = 3000
    budget_step_kb: int = 100
    array_table: LabelTable | None = None

    def to_json(self) -> dict:
        out = {
            "m_max": self.ranges.m_max, "n_max": self.ranges.n_max, "k_max": self.ranges.k_max,
            "mac_exp_min": self.mac_exp_min, "mac_exp_max": self.mac_exp_max,
            "bw_max": self.bw_max, "budget_min_kb": self.budget_min_kb,
            "budget_max_kb": self.budget_max_kb, "budget_step_kb": self.budget_step_kb,
        }
        if self.array_table is not None:
            out["array_table"] = self.array_table.params
        return out


@dataclass
class Dataset:
    case_id: int
    columns: tuple[str, ...]
    features: np.ndarray
    labels: np.ndarray
    skipped: int = 0

    def __post_init__(self):
        self.columns = tuple(self.columns)
        self.features = np.asarray(self.features, dtype=np.int64).reshape(-1, len(self.columns))
        self.labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if len(self.features) != len(self.labels):
            raise DataError(f"{len(self.features)} feature rows but {len(self.labels)} labels")

    def __len__(self):
        return len(self.labels)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.case_id == other.case_id
            and self.columns == other.columns
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.labels, other.labels)
        )

    def subset(self, idx) -> "Dataset":
        return Dataset(self.case_id, self.columns, self.features[idx], self.labels[idx])


def query_from_row(case_id: int, row: Sequence[int]):
    """Rebuild the oracle query a feature row encodes."""
    row = [int(v) for v in row]
    if case_id == 1:
        return Case1Query(GemmWorkload(*row[:3]), row[3])
    if case_id == 2:
        array = ArrayConfig(ArrayShape(row[3], row[4]), Dataflow(row[5]))
        return Case2Query(GemmWorkload(*row[:3]), array, row[6], row[7])
    return as_workloads(row)


def label_row(case_id: int, row: Sequence[int], table: LabelTable) -> int:
    q = query_from_row(case_id, row)
    if case_id == 1:
        return oracle_case1(q, table)
    if case_id == 2:
        return oracle_case2(q, table)
    return oracle_case3(q, table.platform, table)


def _sample_rows(rng: np.random.Generator, case_id: int, size: int, params: GenParams,
                 table: LabelTable) -> np.ndarray:
    r = params.ranges

    def dims():
        return np.stack([
            rng.integers(1, r.m_max + 1, size),
            rng.integers(1, r.n_max + 1, size),
            rng.integers(1, r.k_max + 1, size),
        ], axis=1)

    if case_id == 1:
        lo = params.mac_exp_min if params.mac_exp_min is not None else 2 * table.params["min_exp"]
        hi = params.mac_exp_max if params.mac_exp_max is not None else table.params["max_mac_exp"]
        wl = dims()
        return np.column_stack([wl, rng.integers(lo, hi + 1, size)])
    if case_id == 2:
        arrays = params.array_table or enumerate_case1_labels()
        cols = arrays.arrays
        wl = dims()
        pick = rng.integers(0, len(arrays), size)
        bw = rng.integers(1, params.bw_max + 1, size)
        steps = (params.budget_max_kb - params.budget_min_kb) // params.budget_step_kb
        budget = params.budget_min_kb + params.budget_step_kb * rng.integers(0, steps + 1, size)
        return np.column_stack([
            wl, cols["rows"][pick], cols["cols"][pick], cols["dataflow"][pick], bw, budget,
        ])
    x = len(table.platform)
    return np.concatenate([dims() for _ in range(x)], axis=1)


_worker_state: dict = {}


def _init_worker(case_id: int, table: LabelTable) -> None:
    _worker_state["case_id"] = case_id
    _worker_state["table"] = table


def _label_chunk(rows: np.ndarray) -> list[int]:
    return _label_rows_serial(_worker_state["case_id"], rows, _worker_state["table"])


def _label_rows_serial(case_id: int, rows: np.ndarray, table: LabelTable) -> list[int]:
    out = []
    for row in rows:
        try:
            out.append(label_row(case_id, row, table))
        except InfeasibleError:
            out.append(-1)
    return out


def resolve_threads(threads: int | None = None) -> int:
    if threads is None:
        env = os.environ.get(THREADS_ENV)
        threads = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(threads))


def label_rows(case_id: int, rows: np.ndarray, table: LabelTable, threads: int = 1,
               chunk: int = 2000) -> np.ndarray:
    """Oracle labels for each feature row, ``-1`` where infeasible. Order follows ``rows``."""
    chunks = [rows[i : i + chunk] for i in range(0, len(rows), chunk)]
    labels: list[int] = []
    if threads <= 1 or len(chunks) <= 1:
        for c in chunks:
            labels.extend(_label_rows_serial(case_id, c, table))
            _report_progress(len(labels), len(labels) - len(c))
    else:
        with ProcessPoolExecutor(threads, initializer=_init_worker, initargs=(case_id, table)) as pool:
            for part in pool.map(_label_chunk, chunks):
                labels.extend(part)
                _report_progress(len(labels), len(labels) - len(part))
    return np.asarray(labels, dtype=np.int64)


def _report_progress(done: int, before: int) -> None:
    if done // PROGRESS_EVERY > before // PROGRESS_EVERY:
        log.info("labelled %d records", done)


def generate_dataset(case_id: int, count: int, seed: int, params: GenParams | None = None,
                     table: LabelTable | None = None, threads: int = 1) -> Dataset:
    """Sample ``count`` queries and label each with its oracle.

    Queries come from one seeded generator in index order, so the result does
    not depend on ``threads``. Infeasible queries are dropped and replaced by
    further draws; ``Dataset.skipped`` counts them.
    """
    if table is None:
        raise ParameterError("a label table is required")
    if table.case_id != case_id:
        raise ParameterError(f"table is for case {table.case_id}, not {case_id}")
    params = params or GenParams()
    rng = np.random.default_rng(seed)
    feats, labels, skipped = [], [], 0
    need = count
    while need > 0:
        rows = _sample_rows(rng, case_id, need, params, table)
        lab = label_rows(case_id, rows, table, threads)
        ok = lab >= 0
        skipped += int((~ok).sum())
        feats.append(rows[ok])
        labels.append(lab[ok])
        need -= int(ok.sum())
        if skipped > 10 * count + 1000:
            raise InfeasibleError(f"gave up after {skipped} infeasible queries")
    if skipped:
        log.warning("resampled %d infeasible queries", skipped)
    num_units = len(table.platform) if case_id == 3 else 4
    return Dataset(case_id, feature_columns(case_id, num_units),
                   np.concatenate(feats), np.concatenate(labels), skipped)


def write_csv(ds: Dataset, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([*ds.columns, "label"])
        writer.writerows(np.column_stack([ds.features, ds.labels]).tolist())


def read_csv(path, case_id: int, num_labels: int | None = None) -> Dataset:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty file, header row required")
        columns = tuple(header[:-1])
        if case_id == 3:
            expected = feature_columns(3, max(1, len(columns) // 3))
        else:
            expected = feature_columns(case_id)
        if header[-1:] != ["label"] or columns != expected:
            raise SchemaError(f"{path}:1: header {','.join(header)!r} does not match case {case_id}")
        width = len(header)
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != width:
                raise DataError(f"{path}:{lineno}: expected {width} columns, got {len(row)}")
            try:
                values = [int(v) for v in row]
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-integer field in {row}") from None
            label = values[-1]
            if label < 0 or (num_labels is not None and label >= num_labels):
                raise DataError(f"{path}:{lineno}: label {label} outside [0, {num_labels})")
            rows.append(values)
    arr = np.asarray(rows, dtype=np.int64).reshape(-1, width)
    return Dataset(case_id, columns, arr[:, :-1], arr[:, -1])


# Feature encoding

@dataclass(frozen=True)
class FeatureRule:
    """How one raw integer feature becomes an embedding-row index.

    ``log``: ``min(B-1, floor(B*ln(v)/ln(vmax+1)))`` on ``1 <= v <= vmax``.
    ``offset``: ``v - lo`` on ``lo <= v <= hi``.
    ``pow2``: ``log2(v) - lo`` for powers of two with exponent in ``[lo, hi]``.
    """

    kind: str
    lo: int = 1
    hi: int = 1
    buckets: int = 64

    def __post_init__(self):
        if self.kind not in ("log", "offset", "pow2"):
            raise ParameterError(f"unknown encoding rule {self.kind!r}")
        if self.vocab < 2:
            raise ParameterError(f"rule {self} has vocabulary below 2")

    @classmethod
    def log_bucket(cls, vmax: int, buckets: int = 64) -> "FeatureRule":
        return cls("log", 1, vmax, buckets)

    @classmethod
    def offset(cls, lo: int, hi: int) -> "FeatureRule":
        return cls("offset", lo, hi)

    @classmethod
    def pow2(cls, lo_exp: int, hi_exp: int) -> "FeatureRule":
        return cls("pow2", lo_exp, hi_exp)

    @property
    def vocab(self) -> int:
        return self.buckets if self.kind == "log" else self.hi - self.lo + 1

    def to_json(self) -> dict:
        return {"kind": self.kind, "lo": self.lo, "hi": self.hi, "buckets": self.buckets}

    def apply(self, values: np.ndarray) -> np.ndarray:
        v = np.asarray(values, dtype=np.int64)
        if self.kind == "log":
            if v.size and (v.min() < 1 or v.max() > self.hi):
                raise EncodingError(f"value outside [1, {self.hi}] for log-bucket rule")
            scaled = self.buckets * np.log(v.astype(np.float64)) / math.log(self.hi + 1)
            return np.minimum(self.buckets - 1, np.floor(scaled).astype(np.int64))
        if self.kind == "pow2":
            if v.size and (v.min() < 1 or np.any(v & (v - 1))):
                raise EncodingError("value is not a power of two")
            v = np.log2(v).round().astype(np.int64)
        if v.size and (v.min() < self.lo or v.max() > self.hi):
            raise EncodingError(f"value outside [{self.lo}, {self.hi}] for {self.kind} rule")
        return v - self.lo


@dataclass(frozen=True)
class EncoderSpec:
    rules: tuple[FeatureRule, ...] = field(default_factory=tuple)

    @property
    def vocab_sizes(self) -> tuple[int, ...]:
        return tuple(r.vocab for r in self.rules)

    def __len__(self):
        return len(self.rules)

    def to_json(self) -> list:
        return [r.to_json() for r in self.rules]

    @classmethod
    def from_json(cls, obj: list) -> "EncoderSpec":
        return cls(tuple(FeatureRule(**r) for r in obj))


def encode(features, spec: EncoderSpec) -> np.ndarray:
    """Bucket ids for one feature row or a 2-D batch of rows."""
    arr = np.asarray(features, dtype=np.int64)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[1] != len(spec):
        raise EncodingError(f"expected {len(spec)} features, got {arr.shape[1]}")
    out = np.column_stack([rule.apply(arr[:, i]) for i, rule in enumerate(spec.rules)])
    return out[0] if single else out


def default_encoder(table: LabelTable, params: GenParams | None = None, buckets: int = DEFAULT_BUCKETS) -> EncoderSpec:
    params = params or GenParams()
    r = params.ranges
    dims = (FeatureRule.log_bucket(r.m_max, buckets), FeatureRule.log_bucket(r.n_max, buckets),
            FeatureRule.log_bucket(r.k_max, buckets))
    if table.case_id == 1:
        lo = params.mac_exp_min if params.mac_exp_min is not None else 2 * table.params["min_exp"]
        hi = params.mac_exp_max if params.mac_exp_max is not None else table.params["max_mac_exp"]
        return EncoderSpec(dims + (FeatureRule.offset(lo, hi),))
    if table.case_id == 2:
        arrays = params.array_table or enumerate_case1_labels()
        lo_exp = arrays.params["min_exp"]
        hi_exp = arrays.params["max_mac_exp"] - lo_exp
        return EncoderSpec(dims + (
            FeatureRule.pow2(lo_exp, hi_exp), FeatureRule.pow2(lo_exp, hi_exp),
            FeatureRule.offset(0, 2),
            FeatureRule.log_bucket(params.bw_max, buckets),
            FeatureRule.log_bucket(params.budget_max_kb, buckets),
        ))
    return EncoderSpec(dims * len(table.platform))


def read_dataset(path, table: LabelTable) -> Dataset:
    return read_csv(Path(path), table.case_id, len(table))
