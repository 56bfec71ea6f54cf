"""Class-frequency histograms and two-component PCA of generated datasets."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DataError

POWER_TOL = 1e-9
POWER_MAX_ITER = 1000


def class_histogram(labels) -> list[tuple[int, float]]:
    """(label, relative frequency) pairs, most frequent first, ties by label."""
    labels = np.asarray(getattr(labels, "labels", labels), dtype=np.int64)
    if labels.size == 0:
        raise DataError("cannot build a histogram of an empty dataset")
    ids, counts = np.unique(labels, return_counts=True)
    order = np.lexsort((ids, -counts))
    total = counts.sum()
    return [(int(ids[i]), counts[i] / total) for i in order]


def standardize(x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64)
    mean = x.mean(axis=0)
    scale = x.std(axis=0)
    scale[scale == 0] = 1.0
    return (x - mean) / scale, mean, scale


def _fix_sign(v: np.ndarray) -> np.ndarray:
    return v if v[np.argmax(np.abs(v))] > 0 else -v


def power_iteration(mat: np.ndarray, start: np.ndarray, tol: float = POWER_TOL,
                    max_iter: int = POWER_MAX_ITER) -> np.ndarray:
    v = start / np.linalg.norm(start)
    for _ in range(max_iter):
        w = mat @ v
        norm = np.linalg.norm(w)
        if norm == 0:
            return v
        w /= norm
        # Compare up to sign so negative eigenvalues of round-off size don't stall.
        if min(np.linalg.norm(w - v), np.linalg.norm(w + v)) < tol:
            return w
        v = w
    return v


def top_components(z: np.ndarray, n_components: int = 2) -> np.ndarray:
    """Leading eigenvectors of the covariance of ``z`` by power iteration with deflation."""
    dim = z.shape[1]
    cov = z.T @ z / len(z)
    comps: list[np.ndarray] = []
    for _ in range(n_components):
        # Deterministic start, orthogonal to what has already been found.
        start = np.ones(dim) + np.arange(dim) / dim
        for c in comps:
            start -= (start @ c) * c
        v = power_iteration(cov, start)
        for c in comps:
            v -= (v @ c) * c
        norm = np.linalg.norm(v)
        if norm < 1e-6:
            v = _orthogonal_fill(comps, dim)
        else:
            v /= norm
        v = _fix_sign(v)
        comps.append(v)
        cov = cov - (v @ cov @ v) * np.outer(v, v)
    return np.array(comps)


def _orthogonal_fill(comps: list[np.ndarray], dim: int) -> np.ndarray:
    # Degenerate (rank-deficient) remainder: any unit vector orthogonal to comps.
    for i in range(dim):
        v = np.zeros(dim)
        v[i] = 1.0
        for c in comps:
            v -= (v @ c) * c
        if np.linalg.norm(v) > 1e-6:
            return v / np.linalg.norm(v)
    raise DataError("feature space is too small for the requested components")


@dataclass
class PcaResult:
    mean: np.ndarray
    scale: np.ndarray
    components: np.ndarray
    projections: list[tuple[float, float, int]]


def top2_pca(features, labels, classes: tuple[int, int], min_points: int = 3) -> PcaResult:
    """Project the points of two classes onto their top two principal components.

    The fit uses only the selected classes' points, z-scored per feature.
    """
    x = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if x.ndim != 2 or x.shape[1] < 2:
        raise DataError("PCA needs at least two feature dimensions")
    for c in classes:
        n = int((labels == c).sum())
        if n < min_points:
            raise DataError(f"class {c} has {n} points, need at least {min_points}")
    mask = np.isin(labels, classes)
    z, mean, scale = standardize(x[mask])
    comps = top_components(z, 2)
    proj = z @ comps.T
    rows = [(float(p[0]), float(p[1]), int(c)) for p, c in zip(proj, labels[mask])]
    return PcaResult(mean, scale, comps, rows)


def write_histogram_csv(hist, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label", "frequency"])
        w.writerows((label, repr(float(freq))) for label, freq in hist)


def write_pca_csv(result: PcaResult, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["pc1", "pc2", "class"])
        w.writerows((repr(a), repr(b), c) for a, b, c in result.projections)
