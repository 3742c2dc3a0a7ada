"""Executable structure instruments for clusterings and coresets.

These functions measure, they never steer: dyadic classifications of
clusters (far/close, cost bands, types), per-point rings, the
cluster/center interaction profile, the three-part preservation check
for coresets, per-entry weight bounds, and the stability separation
check for center pairs. Dyadic interval bases and the predicate
constants are fixed, not tunable.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import ceil_log2, floor_log2
from .data import (EUCLIDEAN, FINITE_MATRIX, SQUARED_EUCLIDEAN, CandidateSolution,
                   Clustering, Dataset, _coord_costs)
from .digests import solution_digest
from .exceptions import DigestMismatchError, ValidationError
from .sampling import Coreset
from .seeding import ApproxSolution

KMEANS = "kmeans"
KMEDIAN = "kmedian"

# Interaction predicates: a center must sit outside a cluster's
# average-cost ball by this factor, yet still be an approximate nearest
# center within this factor.
OUTSIDE_FACTOR = 32.0
NEAR_FACTOR = 16.0


def objective_for_metric(metric: str, objective: str | None = None) -> str:
    if objective is not None:
        if objective not in (KMEANS, KMEDIAN):
            raise ValidationError(f"unknown objective {objective!r}")
        return objective
    return KMEDIAN if metric == EUCLIDEAN else KMEANS


def far_threshold_exponent(objective: str) -> int:
    """Far clusters sit beyond delta_j * eps**-2 (k-means) or eps**-1 (k-median)."""
    return 2 if objective == KMEANS else 1


def _snap(values: np.ndarray, rel_tol: float = 1e-9) -> np.ndarray:
    """Snap near-integer floats, so dyadic indices ignore rounding noise."""
    nearest = np.round(values)
    close = np.abs(values - nearest) <= rel_tol * np.maximum(1.0, np.abs(values))
    return np.where(close, nearest, values)


def _dyadic_index(values: np.ndarray, base: np.ndarray, lo: int, hi: int) -> np.ndarray:
    """Largest i with base * 2**i <= value, clamped to [lo, hi]."""
    values = np.asarray(values, dtype=np.float64)
    base = np.broadcast_to(np.asarray(base, dtype=np.float64), values.shape)
    ok = (base > 0) & (values > 0)
    ratio = np.ones_like(values)
    np.divide(values, base, out=ratio, where=ok)
    logs = np.zeros_like(values)
    np.log2(ratio, out=logs, where=ok)
    idx = np.full(values.shape, lo, dtype=np.int64)
    idx[ok] = np.floor(_snap(logs[ok])).astype(np.int64)
    return np.clip(idx, lo, hi)


def _pair_costs(P: Dataset, A: ApproxSolution, S: CandidateSolution) -> np.ndarray:
    """cost(a_j, x) for every reference center and every center of S."""
    if P.metric == FINITE_MATRIX:
        if not S.is_indices:
            raise ValidationError("finite-matrix solutions must be point indices")
        return P.matrix[np.ix_(A.centers.astype(np.int64), S.centers)]
    if S.is_indices:
        raise ValidationError("euclidean solutions must be coordinate centers")
    return _coord_costs(A.centers, S.centers, P.metric)


@dataclass(frozen=True)
class StructureReport:
    """Cluster and point classifications for one candidate solution.

    Close clusters split into a low-cost group and dyadic cost bands;
    each close cluster also gets a dyadic type from its center's cost in
    the candidate solution, and every point gets a ring index from its
    cost within its own cluster. Sentinel -1 marks inapplicable indices.
    """

    eps: float
    objective: str
    low_cost_threshold: float        # the cutoff separating low-cost clusters
    b_max: int
    t_max: int
    l_max: int
    center_cost_in_s: np.ndarray     # (k,) cost of each reference center to S
    far: np.ndarray                  # (k,) bool
    low_cost: np.ndarray             # (k,) bool, only close clusters qualify
    band: np.ndarray                 # (k,) int, -1 below the cost cutoff
    type_index: np.ndarray           # (k,) int, -1 for far clusters
    ring_index: np.ndarray           # (n,) int

    @property
    def k(self) -> int:
        return self.far.shape[0]

    def clusters_in_cell(self, b: int, t: int) -> np.ndarray:
        """Close high-cost clusters in band b with type t."""
        return np.flatnonzero(~self.far & ~self.low_cost
                              & (self.band == b) & (self.type_index == t))

    def ring_histogram(self, assignment: np.ndarray) -> np.ndarray:
        """Per-cluster ring occupancy counts, shape (k, l_max + 2)."""
        counts = np.zeros((self.k, self.l_max + 2), dtype=np.int64)
        np.add.at(counts, (assignment, self.ring_index), 1)
        return counts

    def to_dict(self, assignment: np.ndarray | None = None) -> dict:
        out = {
            "eps": self.eps, "objective": self.objective,
            "low_cost_threshold": self.low_cost_threshold,
            "b_max": self.b_max, "t_max": self.t_max, "l_max": self.l_max,
            "far": self.far.tolist(), "low_cost": self.low_cost.tolist(),
            "band": self.band.tolist(), "type": self.type_index.tolist(),
            "center_cost_in_s": self.center_cost_in_s.tolist(),
        }
        if assignment is not None:
            out["ring_counts"] = self.ring_histogram(assignment).tolist()
        return out


def classify_structure(P: Dataset, A: ApproxSolution, S: CandidateSolution,
                       eps: float, objective: str | None = None) -> StructureReport:
    """Classify clusters and points relative to a candidate solution.

    Interval conventions, all half open: band b covers cluster costs in
    [2^b T, 2^{b+1} T) where T = eps^3 * total / k; type t >= 1 covers
    center costs in [2^{t-1} d_j, 2^t d_j) with type 0 below d_j; ring
    l >= 1 covers point costs in [2^l d_j, 2^{l+1} d_j) with ring 0
    below 2 d_j and one overflow ring at the top. A center cost landing
    exactly on the close/far boundary is clamped into the top type.
    """
    if not 0 < eps <= 0.5:
        raise ValidationError("eps must lie in (0, 1/2]")
    objective = objective_for_metric(P.metric, objective)
    k = A.k
    delta = A.delta
    sizes = A.clustering.cluster_sizes
    center_cost = _pair_costs(P, A, S).min(axis=1)

    far_cut = delta * eps ** (-far_threshold_exponent(objective))
    if objective == KMEANS:
        far = center_cost > far_cut
    else:
        far = (center_cost >= far_cut) & (center_cost > 0)
    far &= sizes > 0

    T = (eps ** 3) * A.total / k
    cluster_costs = A.clustering.cluster_costs
    high_cost = cluster_costs >= T if T > 0 else cluster_costs > 0
    close = ~far & (sizes > 0)
    low_cost = close & ~high_cost

    b_max = floor_log2(k * eps ** -3)
    t_max = ceil_log2(eps ** -2)
    l_max = floor_log2(1.0 / eps)

    band = np.full(k, -1, dtype=np.int64)
    if T > 0:
        band[high_cost] = _dyadic_index(cluster_costs[high_cost], T, 0, b_max)

    t_raw = _dyadic_index(center_cost, delta, -1, t_max - 1) + 1
    t_raw[center_cost <= 0] = 0
    t_raw[(delta <= 0) & (center_cost > 0)] = t_max
    type_index = np.where(close, t_raw, -1).astype(np.int64)

    return StructureReport(eps=eps, objective=objective, low_cost_threshold=float(T),
                           b_max=b_max, t_max=t_max, l_max=l_max,
                           center_cost_in_s=center_cost, far=far, low_cost=low_cost,
                           band=band, type_index=type_index,
                           ring_index=_ring_indices(A, l_max))


def _ring_indices(A: ApproxSolution, l_max: int) -> np.ndarray:
    """Dyadic ring of each point inside its own cluster."""
    delta_p = A.delta_of_points()
    ring = _dyadic_index(A.point_costs, delta_p, 0, l_max + 1)
    ring[A.point_costs < 2 * delta_p] = 0
    ring[delta_p <= 0] = 0  # zero-spread cluster, everything sits at the center
    return ring


@dataclass(frozen=True)
class InteractionReport:
    """How the centers of one solution interact with one (band, type) cell.

    A cluster interacts with a center when the center lies well outside
    the cluster's average-cost ball yet is still approximately nearest
    to the cluster's reference center. class_r buckets the total count
    dyadically, with -1 when there are no interactions.
    """

    band: int
    type_index: int
    clusters: np.ndarray                 # cluster ids in the selected cell
    interacting: tuple[np.ndarray, ...]  # per center of S, interacting cluster ids
    signature: tuple[int, ...]
    N: int
    class_r: int

    @property
    def k_selected(self) -> int:
        return self.clusters.shape[0]

    def to_dict(self) -> dict:
        return {"band": self.band, "type": self.type_index,
                "signature": list(self.signature), "N": self.N, "r": self.class_r}


def interaction_profile(P: Dataset, A: ApproxSolution, S: CandidateSolution,
                        band: int, type_index: int, eps: float,
                        structure: StructureReport | None = None) -> InteractionReport:
    """Evaluate both interaction predicates for one (band, type) cell."""
    report = structure if structure is not None else classify_structure(P, A, S, eps)
    cell = report.clusters_in_cell(band, type_index)
    pair = _pair_costs(P, A, S)
    center_cost = report.center_cost_in_s

    interacting = []
    for i in range(S.k):
        if cell.size == 0:
            interacting.append(np.empty(0, dtype=np.int64))
            continue
        c = pair[cell, i]
        outside = c >= OUTSIDE_FACTOR * A.delta[cell]
        near = c <= NEAR_FACTOR * center_cost[cell]
        interacting.append(cell[outside & near])
    signature = tuple(int(v.size) for v in interacting)
    total = int(sum(signature))
    class_r = floor_log2(total) if total > 0 else -1
    return InteractionReport(band=band, type_index=type_index, clusters=cell,
                             interacting=tuple(interacting), signature=signature,
                             N=total, class_r=class_r)


@dataclass(frozen=True)
class EventEReport:
    """Three-part preservation check of a coreset against its reference.

    Part one compares weighted cluster sizes to true sizes, part two
    bounds weighted ring masses, part three compares weighted cluster
    costs to true costs. Ring masses are reported for every ring, but
    the innermost ring is informational only; the gate covers ring
    indices >= 1.
    """

    eps: float
    cluster_sizes: np.ndarray
    weighted_sizes: np.ndarray
    size_margins: np.ndarray         # signed relative deviations
    size_pass: np.ndarray
    ring_masses: np.ndarray          # (k, l_max + 2)
    ring_bounds: np.ndarray
    ring_pass: np.ndarray
    ring_checked: np.ndarray         # False on the informational ring-0 column
    cluster_costs: np.ndarray
    weighted_costs: np.ndarray
    cost_margins: np.ndarray
    cost_pass: np.ndarray

    @property
    def p1(self) -> bool:
        return bool(np.all(self.size_pass))

    @property
    def p2(self) -> bool:
        return bool(np.all(self.ring_pass[self.ring_checked]))

    @property
    def p3(self) -> bool:
        return bool(np.all(self.cost_pass))

    @property
    def passed(self) -> bool:
        return self.p1 and self.p2 and self.p3

    def to_dict(self) -> dict:
        k = len(self.cluster_sizes)
        return {
            "p1": [{"cluster": j, "size": int(self.cluster_sizes[j]),
                    "weighted_size": float(self.weighted_sizes[j]),
                    "margin": float(self.size_margins[j]),
                    "pass": bool(self.size_pass[j])} for j in range(k)],
            "p2": [{"cluster": j, "ring": l,
                    "weighted_mass": float(self.ring_masses[j, l]),
                    "bound": float(self.ring_bounds[j, l]),
                    "pass": bool(self.ring_pass[j, l]),
                    "checked": bool(self.ring_checked[j, l])}
                   for j in range(k) for l in range(self.ring_masses.shape[1])],
            "p3": [{"cluster": j, "cost": float(self.cluster_costs[j]),
                    "weighted_cost": float(self.weighted_costs[j]),
                    "margin": float(self.cost_margins[j]),
                    "pass": bool(self.cost_pass[j])} for j in range(k)],
            "pass": self.passed,
        }


def _entry_indices(omega: Coreset) -> np.ndarray:
    if omega.indices is None or np.any(omega.indices < 0):
        raise ValidationError(
            "this check needs coreset entries that are identified input points")
    return omega.indices


def check_event_e(P: Dataset, A: ApproxSolution, omega: Coreset,
                  eps: float) -> EventEReport:
    """Run the three preservation checks of a coreset.

    The coreset must have been built over the same reference solution;
    a recorded digest that disagrees is rejected.
    """
    if not 0 < eps <= 0.5:
        raise ValidationError("eps must lie in (0, 1/2]")
    recorded = omega.meta.get("approx_digest")
    if recorded is not None and recorded != solution_digest(A):
        raise DigestMismatchError("coreset was built over a different reference solution")
    idx = _entry_indices(omega)
    k = A.k
    labels = A.clustering.assignment[idx]
    sizes = A.clustering.cluster_sizes.astype(np.float64)
    weighted_sizes = np.bincount(labels, weights=omega.weights, minlength=k)

    size_margins = np.divide(weighted_sizes - sizes, sizes,
                             out=np.zeros(k), where=sizes > 0)
    size_pass = np.abs(weighted_sizes - sizes) <= eps * sizes + 1e-12

    l_max = floor_log2(1.0 / eps)
    entry_ring = _ring_indices(A, l_max)[idx]
    masses = np.zeros((k, l_max + 2))
    np.add.at(masses, (labels, entry_ring), omega.weights)
    ells = np.arange(l_max + 2, dtype=np.float64)
    bounds = sizes[:, None] / (2.0 ** (ells - 1))[None, :]
    ring_pass = masses <= bounds + 1e-12
    checked = np.broadcast_to(ells >= 1, masses.shape).copy()

    costs = A.clustering.cluster_costs
    weighted_costs = np.bincount(labels, weights=omega.weights * A.point_costs[idx],
                                 minlength=k)
    cost_margins = np.divide(weighted_costs - costs, costs,
                             out=np.zeros(k), where=costs > 0)
    cost_pass = np.abs(weighted_costs - costs) <= eps * costs + 1e-12

    return EventEReport(eps=eps, cluster_sizes=A.clustering.cluster_sizes,
                        weighted_sizes=weighted_sizes, size_margins=size_margins,
                        size_pass=size_pass, ring_masses=masses, ring_bounds=bounds,
                        ring_pass=ring_pass, ring_checked=checked,
                        cluster_costs=costs, weighted_costs=weighted_costs,
                        cost_margins=cost_margins, cost_pass=cost_pass)


@dataclass(frozen=True)
class WeightBoundViolation:
    entry: int
    weight: float
    bound: float
    binding_term: str

    def to_dict(self) -> dict:
        return {"entry": self.entry, "weight": self.weight, "bound": self.bound,
                "binding_term": self.binding_term}


_BOUND_NAMES = ("cluster_size", "cluster_cost_share", "global_cost_share",
                "average_cost")


def check_weight_bounds(P: Dataset, A: ApproxSolution, omega: Coreset,
                        rel_tol: float = 1e-9) -> list[WeightBoundViolation]:
    """Per-entry four-way weight bound with constant 4.

    Every entry weight must stay below 4 times the minimum of: cluster
    size over m, cluster cost over (m times the entry cost), total cost
    over (m times the entry cost), and total cost over (m times the
    cluster average cost); zero-denominator terms are skipped.
    Sensitivity samples satisfy this algebraically. Other builders may
    not, and their violations are reported, not raised.
    """
    idx = _entry_indices(omega)
    k = A.k
    m = omega.m
    if m < 1:
        raise ValidationError("coreset has no draws recorded")
    labels = A.clustering.assignment[idx]
    sizes = A.clustering.cluster_sizes[labels].astype(np.float64)
    ccosts = A.clustering.cluster_costs[labels]
    pc = A.point_costs[idx]
    dp = A.delta[labels]

    candidates = np.full((idx.shape[0], 4), np.inf)
    candidates[:, 0] = 4.0 * k * sizes / m
    np.divide(4.0 * k * ccosts, m * pc, out=candidates[:, 1], where=pc > 0)
    np.divide(4.0 * A.total, m * pc, out=candidates[:, 2], where=pc > 0)
    np.divide(4.0 * A.total, m * dp, out=candidates[:, 3], where=dp > 0)
    bound = candidates.min(axis=1)
    binding = candidates.argmin(axis=1)

    bad = np.flatnonzero(omega.weights > bound * (1 + rel_tol))
    return [WeightBoundViolation(entry=int(i), weight=float(omega.weights[i]),
                                 bound=float(bound[i]),
                                 binding_term=_BOUND_NAMES[int(binding[i])])
            for i in bad]


@dataclass(frozen=True)
class SeparationViolation:
    i: int
    j: int
    cost_between: float
    required: float

    @property
    def slack(self) -> float:
        return self.cost_between - self.required

    def to_dict(self) -> dict:
        return {"i": self.i, "j": self.j, "cost_between": self.cost_between,
                "required": self.required, "slack": self.slack}


def check_separation(P: Dataset, clustering: Clustering, beta: float,
                     opt_k: float, rel_tol: float = 1e-9) -> list[SeparationViolation]:
    """Pairwise center separation implied by cost stability.

    For a good enough approximate clustering of a beta-stable instance
    (quality within 1 + beta/2 of optimal, caller asserted), centroids
    of distinct clusters must be at squared distance at least
    beta * opt_k / (2 min(sizes)). Pairs with an empty side are skipped.
    """
    if opt_k <= 0:
        raise ValidationError("opt_k must be positive; stability is undefined at zero")
    if not np.isfinite(beta) or beta < 0:
        raise ValidationError("beta must be finite and nonnegative")
    if P.metric != SQUARED_EUCLIDEAN:
        raise ValidationError("the separation check applies to squared-Euclidean data")
    k = clustering.k
    centroids = np.zeros((k, P.dim))
    for j in range(k):
        members = clustering.assignment == j
        if np.any(members):
            centroids[j] = P.points[members].mean(axis=0)
    sizes = clustering.cluster_sizes
    violations = []
    for i in range(k):
        for j in range(i + 1, k):
            if sizes[i] == 0 or sizes[j] == 0:
                continue
            d2 = float(np.sum((centroids[i] - centroids[j]) ** 2))
            required = beta * opt_k / (2.0 * min(sizes[i], sizes[j]))
            if d2 < required * (1 - rel_tol):
                violations.append(SeparationViolation(i=i, j=j, cost_between=d2,
                                                      required=float(required)))
    return violations
