"""Datasets, metrics, cost functions, centroids, and assignments.

The vocabulary every other module consumes. Three cost conventions are
supported: squared Euclidean distances (the k-means objective), plain
Euclidean distances (the k-median objective), and finite metric spaces
given as an explicit distance matrix, where candidate centers are
restricted to input point indices.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import check_points, check_weights
from .exceptions import ValidationError

SQUARED_EUCLIDEAN = "squared_euclidean"
EUCLIDEAN = "euclidean"
FINITE_MATRIX = "finite_matrix"
METRICS = (SQUARED_EUCLIDEAN, EUCLIDEAN, FINITE_MATRIX)

# Cap on intermediate broadcast size for pairwise cost computation.
_CHUNK_ELEMS = 1 << 24


def validate_metric(metric: str) -> str:
    if metric not in METRICS:
        raise ValidationError(f"unknown metric {metric!r}; expected one of {METRICS}")
    return metric


@dataclass(frozen=True)
class Dataset:
    """An indexed point collection under a metric.

    Euclidean modes store coordinates; finite mode stores a symmetric
    cost matrix and points are virtual indices 0..n-1. Optional weights
    are multiplicities honored by total_cost and centroid.
    """

    metric: str
    points: np.ndarray | None = None
    matrix: np.ndarray | None = None
    weights: np.ndarray | None = None

    def __post_init__(self):
        validate_metric(self.metric)
        if self.metric == FINITE_MATRIX:
            if self.matrix is None or self.points is not None:
                raise ValidationError("finite-matrix datasets need a matrix and no coordinates")
            validate_finite_matrix(self.matrix)
        else:
            if self.points is None or self.matrix is not None:
                raise ValidationError("euclidean datasets need coordinates and no matrix")
        object.__setattr__(self, "weights", check_weights(self.weights, self.n))
        if self.weights is not None and float(np.sum(self.weights)) <= 0:
            raise ValidationError("total weight must be positive")

    @classmethod
    def from_points(cls, points, metric: str = SQUARED_EUCLIDEAN, weights=None) -> "Dataset":
        return cls(metric=validate_metric(metric), points=check_points(points), weights=weights)

    @classmethod
    def from_matrix(cls, matrix, weights=None) -> "Dataset":
        m = np.asarray(matrix, dtype=np.float64)
        return cls(metric=FINITE_MATRIX, matrix=m, weights=weights)

    @property
    def n(self) -> int:
        if self.metric == FINITE_MATRIX:
            return self.matrix.shape[0]
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        """Coordinate dimension; 0 for finite metrics."""
        if self.metric == FINITE_MATRIX:
            return 0
        return self.points.shape[1]

    def is_unit_weight(self) -> bool:
        return self.weights is None


@dataclass(frozen=True)
class CandidateSolution:
    """A set of k candidate centers.

    Coordinate vectors in Euclidean modes, point indices in finite mode.
    """

    centers: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.centers)
        if c.ndim == 1 and np.issubdtype(c.dtype, np.integer):
            c = c.astype(np.int64)
        else:
            c = np.atleast_2d(np.asarray(c, dtype=np.float64))
            if not np.all(np.isfinite(c)):
                raise ValidationError("centers must be finite")
        if c.shape[0] < 1:
            raise ValidationError("a solution needs at least one center")
        object.__setattr__(self, "centers", c)

    @property
    def k(self) -> int:
        return self.centers.shape[0]

    @property
    def is_indices(self) -> bool:
        return self.centers.ndim == 1


@dataclass(frozen=True)
class Clustering:
    """A nearest-center assignment with its induced bookkeeping."""

    assignment: np.ndarray      # (n,) center index per point
    cluster_sizes: np.ndarray   # (k,) point counts
    cluster_costs: np.ndarray   # (k,) summed cost per cluster
    total_cost: float

    @property
    def k(self) -> int:
        return self.cluster_sizes.shape[0]


def validate_finite_matrix(matrix: np.ndarray, check_triangle: bool = False,
                           tol: float = 1e-9) -> np.ndarray:
    """Check symmetry, zero diagonal, nonnegativity, and optionally triangles."""
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"distance matrix must be square, got shape {m.shape}")
    if m.shape[0] < 1:
        raise ValidationError("distance matrix must have at least one point")
    if not np.all(np.isfinite(m)):
        raise ValidationError("distance matrix contains non-finite entries")
    if np.any(m < 0):
        raise ValidationError("distance matrix contains negative entries")
    if np.max(np.abs(np.diagonal(m))) > tol:
        raise ValidationError("distance matrix diagonal must be zero")
    if not np.allclose(m, m.T, rtol=0, atol=tol):
        raise ValidationError("distance matrix must be symmetric")
    if check_triangle:
        # d(i,l) <= d(i,j) + d(j,l) + tol for all j, vectorized per pivot.
        for j in range(m.shape[0]):
            slack = m - (m[:, j][:, None] + m[j, :][None, :])
            if np.max(slack) > tol:
                i, l = np.unravel_index(np.argmax(slack), slack.shape)
                raise ValidationError(
                    f"triangle inequality violated via point {j}: "
                    f"d({i},{l}) exceeds d({i},{j}) + d({j},{l}) by {slack[i, l]:.3e}")
    return m


def _coord_costs(points: np.ndarray, centers: np.ndarray, metric: str) -> np.ndarray:
    if points.shape[1] != centers.shape[1]:
        raise ValidationError(
            f"dimension mismatch: points are {points.shape[1]}-d, centers {centers.shape[1]}-d")
    n, k = points.shape[0], centers.shape[0]
    out = np.empty((n, k), dtype=np.float64)
    step = max(1, _CHUNK_ELEMS // max(1, k * points.shape[1]))
    for lo in range(0, n, step):
        hi = min(n, lo + step)
        diff = points[lo:hi, None, :] - centers[None, :, :]
        np.einsum("ijk,ijk->ij", diff, diff, out=out[lo:hi])
    if metric == EUCLIDEAN:
        np.sqrt(out, out=out)
    return out


def cost_matrix(P: Dataset, S: CandidateSolution) -> np.ndarray:
    """Per-(point, center) costs, shape (n, k)."""
    if P.metric == FINITE_MATRIX:
        if not S.is_indices:
            raise ValidationError("finite-matrix solutions must be point indices")
        idx = S.centers
        if np.any(idx < 0) or np.any(idx >= P.n):
            raise ValidationError("center index out of range")
        return P.matrix[:, idx]
    if S.is_indices:
        raise ValidationError("euclidean solutions must be coordinate centers")
    return _coord_costs(P.points, S.centers, P.metric)


def nearest_center(p, S: CandidateSolution, metric: str, *,
                   matrix: np.ndarray | None = None) -> tuple[int, float]:
    """Index of the cheapest center for one point, lowest index on ties.

    In finite mode, p is a point index and the cost matrix is required.
    """
    validate_metric(metric)
    if S.k < 1:
        raise ValidationError("empty solution")
    if metric == FINITE_MATRIX:
        if matrix is None:
            raise ValidationError("finite-matrix mode needs the cost matrix")
        costs = matrix[int(p), S.centers]
    else:
        point = np.asarray(p, dtype=np.float64).reshape(1, -1)
        costs = _coord_costs(point, S.centers, metric)[0]
    j = int(np.argmin(costs))
    return j, float(costs[j])


def point_costs(P: Dataset, S: CandidateSolution) -> tuple[np.ndarray, np.ndarray]:
    """Per-point (assigned center index, cost) under nearest-center assignment."""
    costs = cost_matrix(P, S)
    labels = np.argmin(costs, axis=1)
    return labels, costs[np.arange(P.n), labels]


def total_cost(P, S: CandidateSolution, metric: str | None = None,
               weights=None) -> float:
    """Sum of per-point costs to the nearest center, optionally weighted.

    P may be a Dataset (its metric and weights apply) or a coordinate
    array with an explicit metric. Empty collections cost 0. numpy's
    pairwise summation keeps the accumulation stable at large n.
    """
    if isinstance(P, Dataset):
        if metric is not None and metric != P.metric:
            raise ValidationError("explicit metric contradicts the dataset metric")
        _, costs = point_costs(P, S)
        w = P.weights
    else:
        arr = np.asarray(P, dtype=np.float64)
        if arr.size == 0:
            return 0.0
        if metric is None:
            raise ValidationError("a metric is required for raw point arrays")
        validate_metric(metric)
        if metric == FINITE_MATRIX:
            raise ValidationError("finite-matrix total_cost requires a Dataset")
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        costs = _coord_costs(arr, S.centers, metric).min(axis=1)
        w = check_weights(weights, arr.shape[0])
    if w is not None:
        costs = costs * w
    return float(np.sum(costs))


def assign(P: Dataset, S: CandidateSolution) -> Clustering:
    """Nearest-center assignment with lowest-index tie-break.

    Empty clusters are kept with size 0 and cost 0.
    """
    labels, costs = point_costs(P, S)
    k = S.k
    sizes = np.bincount(labels, minlength=k).astype(np.int64)
    ccosts = np.bincount(labels, weights=costs, minlength=k)
    return Clustering(assignment=labels, cluster_sizes=sizes, cluster_costs=ccosts,
                      total_cost=float(np.sum(costs)))


def centroid(points, weights=None) -> np.ndarray:
    """Weighted mean, the squared-Euclidean cost minimizer."""
    pts = check_points(points)
    w = check_weights(weights, pts.shape[0])
    if w is None:
        return pts.mean(axis=0)
    total = float(np.sum(w))
    if total <= 0:
        raise ValidationError("centroid requires positive total weight")
    return (pts * w[:, None]).sum(axis=0) / total


def centroid_identity_check(points, x) -> tuple[float, float]:
    """Both sides of the centroid decomposition of squared distances.

    lhs = sum of squared distances from x to the points; rhs routes the
    same quantity through the centroid. Agreement is a correctness probe
    for squared-Euclidean cost computations.
    """
    pts = check_points(points)
    xv = np.asarray(x, dtype=np.float64).reshape(-1)
    if xv.shape[0] != pts.shape[1]:
        raise ValidationError("dimension mismatch between x and the points")
    mu = pts.mean(axis=0)
    lhs = float(np.sum((pts - xv) ** 2))
    rhs = pts.shape[0] * float(np.sum((xv - mu) ** 2)) + float(np.sum((pts - mu) ** 2))
    return lhs, rhs
