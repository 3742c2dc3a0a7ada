"""Coreset builders: the sampling distribution, sensitivity sampling,
a uniform baseline, the k-point offset coreset, and merging."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ._validation import check_rng, seed_of
from .data import FINITE_MATRIX, Dataset
from .digests import solution_digest
from .exceptions import ValidationError
from .seeding import ApproxSolution

SENSITIVITY = "sensitivity"
UNIFORM = "uniform"
OFFSET = "offset"


@dataclass(frozen=True)
class SamplingDistribution:
    """Per-point sampling probabilities with their four-term breakdown.

    Term order: uniform-within-cluster share, cost share within the
    cluster, share of the global cost, and cluster-average-cost share.
    Each term family carries total mass 1/4, so the terms sum to 1.
    """

    mu: np.ndarray
    terms: np.ndarray                # (n, 4)
    degenerate_clusters: np.ndarray  # (k,) True where a 0/0 substitution fired

    @property
    def n(self) -> int:
        return self.mu.shape[0]

    def term_family_masses(self) -> np.ndarray:
        return self.terms.sum(axis=0)


@dataclass
class Coreset:
    """A weighted summary of a dataset, plus an optional additive offset.

    Entries are kept as a multiset (one row per draw). points holds
    coordinates in Euclidean modes and is None in finite mode, where
    indices alone identify the entries. indices maps entries back to
    source points and is -1 for synthetic entries such as centroids.
    """

    metric: str
    weights: np.ndarray
    m: int
    points: np.ndarray | None = None
    indices: np.ndarray | None = None
    offset: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        if np.any(self.weights <= 0):
            raise ValidationError("coreset weights must be positive")
        if self.points is None and self.indices is None:
            raise ValidationError("a coreset needs coordinates or indices")
        if self.indices is not None:
            self.indices = np.asarray(self.indices, dtype=np.int64).reshape(-1)
            if self.indices.shape[0] != self.weights.shape[0]:
                raise ValidationError("indices and weights disagree in length")
        if self.points is not None:
            self.points = np.atleast_2d(np.asarray(self.points, dtype=np.float64))
            if self.points.shape[0] != self.weights.shape[0]:
                raise ValidationError("points and weights disagree in length")
        if self.m < 0:
            raise ValidationError("m must be >= 0")

    @property
    def n_entries(self) -> int:
        return self.weights.shape[0]

    @property
    def n_distinct(self) -> int:
        if self.indices is not None and np.all(self.indices >= 0):
            return int(np.unique(self.indices).size)
        return int(np.unique(self.points, axis=0).shape[0])

    @property
    def total_weight(self) -> float:
        return float(np.sum(self.weights))

    @property
    def algorithm(self) -> str | None:
        return self.meta.get("algorithm")


def compute_mu(P: Dataset, A: ApproxSolution) -> SamplingDistribution:
    """The sampling distribution induced by a reference solution.

    Each point in cluster j receives one quarter of each of: uniform
    mass within the cluster, its share of the cluster cost, its share
    of the total cost, and the cluster's average-cost share of the
    total. Zero-cost denominators fall back to uniform substitutes that
    preserve each family's 1/4 mass: a zero-cost cluster spreads its
    cost share uniformly over its members, and a zero total cost turns
    the two global families uniform over all points.
    """
    _check_pair(P, A)
    n, k = P.n, A.k
    labels = A.clustering.assignment
    sizes = A.clustering.cluster_sizes
    ccosts = A.clustering.cluster_costs
    pc = A.point_costs
    total = A.total

    size_of = sizes[labels].astype(np.float64)
    ccost_of = ccosts[labels]
    t1 = 1.0 / (4.0 * k * size_of)
    cluster_degenerate = (ccosts <= 0) & (sizes > 0)
    deg_of = cluster_degenerate[labels]
    t2 = np.where(deg_of, t1, np.divide(pc, 4.0 * k * ccost_of,
                                        out=np.zeros(n), where=ccost_of > 0))
    if total > 0:
        t3 = pc / (4.0 * total)
        t4 = A.delta_of_points() / (4.0 * total)
    else:
        t3 = np.full(n, 1.0 / (4.0 * n))
        t4 = np.full(n, 1.0 / (4.0 * n))
    terms = np.column_stack([t1, t2, t3, t4])
    return SamplingDistribution(mu=terms.sum(axis=1), terms=terms,
                                degenerate_clusters=cluster_degenerate)


def _check_pair(P: Dataset, A: ApproxSolution):
    if A.metric != P.metric:
        raise ValidationError("solution metric does not match the dataset")
    if A.point_costs.shape[0] != P.n:
        raise ValidationError("solution bookkeeping does not match the dataset size")
    if not P.is_unit_weight():
        raise ValidationError("sampling requires unit-weight datasets")


def _entries_from_indices(P: Dataset, idx: np.ndarray):
    if P.metric == FINITE_MATRIX:
        return None
    return P.points[idx]


def sensitivity_sample(P: Dataset, A: ApproxSolution, m: int, rng,
                       mu: SamplingDistribution | None = None) -> Coreset:
    """Draw m points from the sampling distribution, weighted 1/(m*mu).

    Draws use inverse-CDF lookups against a prefix-sum table, so the
    output is a deterministic function of the seed.
    """
    if m < 1:
        raise ValidationError("m must be >= 1")
    seed = seed_of(rng)
    rng = check_rng(rng)
    dist = mu if mu is not None else compute_mu(P, A)
    if dist.n != P.n:
        raise ValidationError("distribution does not match the dataset")
    cdf = np.cumsum(dist.mu)
    u = rng.random(m)
    idx = np.minimum(np.searchsorted(cdf, u, side="right"), P.n - 1).astype(np.int64)
    weights = 1.0 / (m * dist.mu[idx])
    meta = {"algorithm": SENSITIVITY, "seed": seed, "approx_digest": solution_digest(A),
            "metric_kind": P.metric}
    return Coreset(metric=P.metric, weights=weights, m=m,
                   points=_entries_from_indices(P, idx), indices=idx, meta=meta)


def uniform_sample(P: Dataset, m: int, rng) -> Coreset:
    """m uniform draws, each carrying weight n/m (total weight exactly n)."""
    if m < 1:
        raise ValidationError("m must be >= 1")
    seed = seed_of(rng)
    rng = check_rng(rng)
    if not P.is_unit_weight():
        raise ValidationError("sampling requires unit-weight datasets")
    idx = rng.integers(P.n, size=m).astype(np.int64)
    weights = np.full(m, P.n / m, dtype=np.float64)
    meta = {"algorithm": UNIFORM, "seed": seed, "approx_digest": None,
            "metric_kind": P.metric}
    return Coreset(metric=P.metric, weights=weights, m=m,
                   points=_entries_from_indices(P, idx), indices=idx, meta=meta)


def offset_coreset(P: Dataset, A: ApproxSolution) -> Coreset:
    """The k cluster centers weighted by cluster sizes, plus an offset.

    The offset equals the reference cost, so the estimate at any S is
    the weighted center cost plus that constant. Requires centers that
    are the exact centroids of their clusters (squared-Euclidean mode);
    finite metrics have no centroids and are rejected.
    """
    _check_pair(P, A)
    if P.metric == FINITE_MATRIX:
        raise ValidationError("offset coresets need centroids; finite metrics have none")
    labels = A.clustering.assignment
    live = np.flatnonzero(A.clustering.cluster_sizes > 0)
    for j in live:
        mu_j = P.points[labels == j].mean(axis=0)
        gap = float(np.max(np.abs(mu_j - A.centers[j])))
        scale = max(1.0, float(np.max(np.abs(mu_j))))
        if gap > 1e-9 * scale:
            raise ValidationError(
                "offset coresets require centers at the exact cluster centroids; "
                f"center {j} is off by {gap:.3e}")
    weights = A.clustering.cluster_sizes[live].astype(np.float64)
    meta = {"algorithm": OFFSET, "seed": None, "approx_digest": solution_digest(A),
            "metric_kind": P.metric}
    return Coreset(metric=P.metric, weights=weights, m=int(live.size),
                   points=A.centers[live].copy(),
                   indices=np.full(live.size, -1, dtype=np.int64),
                   offset=float(A.total), meta=meta)


def merge(c1: Coreset, c2: Coreset) -> Coreset:
    """Concatenate two coresets; estimates add exactly.

    Requires the same metric, and either two offset-style coresets or
    two plain samples (offsets both zero).
    """
    if c1.metric != c2.metric:
        raise ValidationError("cannot merge coresets over different metrics")
    offset_style = (c1.algorithm == OFFSET, c2.algorithm == OFFSET)
    if offset_style[0] != offset_style[1]:
        raise ValidationError("cannot merge an offset coreset with a plain sample")
    if not all(offset_style) and (c1.offset != 0 or c2.offset != 0):
        raise ValidationError("plain samples must carry zero offset")
    if (c1.points is None) != (c2.points is None):
        raise ValidationError("entry representations disagree")
    points = None if c1.points is None else np.vstack([c1.points, c2.points])
    indices = None
    if c1.indices is not None and c2.indices is not None:
        indices = np.concatenate([c1.indices, c2.indices])
    meta = {"algorithm": c1.algorithm if c1.algorithm == c2.algorithm else "merged",
            "seed": None, "approx_digest": None, "metric_kind": c1.metric,
            "merged_from": [c1.algorithm, c2.algorithm]}
    return Coreset(metric=c1.metric, weights=np.concatenate([c1.weights, c2.weights]),
                   m=c1.m + c2.m, points=points, indices=indices,
                   offset=c1.offset + c2.offset, meta=meta)


def compact(c: Coreset) -> Coreset:
    """Merge duplicate entries by summing weights.

    The draw count m is preserved in the metadata sense: estimates are
    unchanged, only the multiset collapses to its distinct support.
    """
    if c.indices is not None and np.all(c.indices >= 0):
        keys, first, inverse = np.unique(c.indices, return_index=True, return_inverse=True)
        weights = np.bincount(inverse, weights=c.weights, minlength=keys.size)
        points = None if c.points is None else c.points[first]
        indices = keys
    else:
        uniq, inverse = np.unique(c.points, axis=0, return_inverse=True)
        weights = np.bincount(inverse.reshape(-1), weights=c.weights,
                              minlength=uniq.shape[0])
        points = uniq
        indices = None
    meta = dict(c.meta)
    meta["compacted"] = True
    return replace(c, weights=weights, points=points, indices=indices, meta=meta)
