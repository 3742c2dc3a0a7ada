"""Reference solutions: D^2-style seeding, Lloyd iterations, local search.

The sampler needs a constant-factor reference solution. The default
chain is cost-proportional seeding, Lloyd refinement, and sampled
single-swap local search, with independent restarts. An exact
brute-force oracle over set partitions covers tiny instances.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

import numpy as np

from ._validation import check_rng, parallel_map, spawn_rngs
from .data import (EUCLIDEAN, FINITE_MATRIX, SQUARED_EUCLIDEAN, CandidateSolution,
                   Clustering, Dataset, assign, cost_matrix)
from .exceptions import ValidationError

_BRUTE_FORCE_MAX_N = 14
# Extra assignment-stability rounds after the restart winner is chosen,
# so centers and assignment form an exact fixed point.
_POLISH_ROUNDS = 500


@dataclass(frozen=True)
class SeedConfig:
    """Knobs for the reference-solution chain."""

    lloyd_max_iters: int = 50
    lloyd_rel_tol: float = 1e-7
    local_search_budget: int = 20
    restarts: int = 5
    rng_seed: int = 0
    kmedian_center: str = "weiszfeld"  # or "medoid"

    def __post_init__(self):
        if min(self.lloyd_max_iters, self.local_search_budget, self.restarts) < 0:
            raise ValidationError("config counts must be >= 0")
        if self.lloyd_rel_tol < 0:
            raise ValidationError("lloyd_rel_tol must be >= 0")
        if self.kmedian_center not in ("weiszfeld", "medoid"):
            raise ValidationError("kmedian_center must be 'weiszfeld' or 'medoid'")


@dataclass(frozen=True)
class ApproxSolution:
    """A reference solution with all per-cluster and per-point bookkeeping.

    delta holds per-cluster average costs; point_costs the cost of every
    point to its assigned center; total their sum.
    """

    metric: str
    centers: np.ndarray
    clustering: Clustering
    delta: np.ndarray
    point_costs: np.ndarray
    total: float

    @property
    def k(self) -> int:
        return self.clustering.k

    @property
    def solution(self) -> CandidateSolution:
        return CandidateSolution(self.centers)

    def delta_of_points(self) -> np.ndarray:
        """Average cost of each point's own cluster, shape (n,)."""
        return self.delta[self.clustering.assignment]


@dataclass(frozen=True)
class LloydResult:
    solution: CandidateSolution
    clustering: Clustering
    cost_history: tuple[float, ...]

    @property
    def n_iter(self) -> int:
        return max(0, len(self.cost_history) - 1)


def geometric_median(points, weights=None, max_iter: int = 50,
                     tol: float = 1e-10) -> np.ndarray:
    """Weiszfeld iterations for the Euclidean 1-median.

    Points coincident with the current iterate are skipped (the standard
    singularity guard); iteration stops on relative movement below tol.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    w = np.ones(pts.shape[0]) if weights is None else np.asarray(weights, dtype=np.float64)
    if pts.shape[0] == 1:
        return pts[0].copy()
    scale = float(np.max(np.abs(pts))) or 1.0
    x = (pts * w[:, None]).sum(axis=0) / np.sum(w)
    for _ in range(max_iter):
        d = np.sqrt(np.sum((pts - x) ** 2, axis=1))
        live = d > 1e-15 * scale
        if not np.any(live):
            break
        inv = np.zeros_like(d)
        inv[live] = w[live] / d[live]
        x_new = (pts * inv[:, None]).sum(axis=0) / np.sum(inv)
        move = float(np.sqrt(np.sum((x_new - x) ** 2)))
        x = x_new
        if move <= tol * max(scale, float(np.sqrt(np.sum(x ** 2)))):
            break
    return x


def _medoid(P: Dataset, members: np.ndarray) -> int:
    """Index of the member with minimal summed cost to the others."""
    if P.metric == FINITE_MATRIX:
        sub = P.matrix[np.ix_(members, members)]
    else:
        pts = P.points[members]
        diff = pts[:, None, :] - pts[None, :, :]
        sub = np.einsum("ijk,ijk->ij", diff, diff)
        if P.metric == EUCLIDEAN:
            np.sqrt(sub, out=sub)
    return int(members[np.argmin(sub.sum(axis=1))])


def _update_center(P: Dataset, members: np.ndarray, current, cfg: SeedConfig):
    """New center for one cluster; never worse than the current center."""
    if P.metric == SQUARED_EUCLIDEAN:
        return P.points[members].mean(axis=0)
    if P.metric == FINITE_MATRIX:
        return _medoid(P, members)
    if cfg.kmedian_center == "medoid":
        cand = P.points[_medoid(P, members)]
    else:
        cand = geometric_median(P.points[members])
    pts = P.points[members]
    cand_cost = float(np.sum(np.sqrt(np.sum((pts - cand) ** 2, axis=1))))
    cur_cost = float(np.sum(np.sqrt(np.sum((pts - np.asarray(current)) ** 2, axis=1))))
    return cand if cand_cost <= cur_cost else np.asarray(current, dtype=np.float64)


def _repair_empty(P: Dataset, centers, labels: np.ndarray, costs: np.ndarray,
                  empty: list[int]):
    """Re-seed empty clusters with the currently farthest points."""
    order = np.argsort(-costs, kind="stable")
    taken = 0
    for j in empty:
        idx = int(order[taken])
        taken += 1
        if P.metric == FINITE_MATRIX:
            centers[j] = idx
        else:
            centers[j] = P.points[idx]
    return centers


def d2_seed(P: Dataset, k: int, rng, power: int = 2) -> CandidateSolution:
    """Draw k centers from P, each proportional to its current cost.

    The first center is uniform. Distances enter through the dataset's
    own cost convention, so power 2 pairs with squared-Euclidean data
    and power 1 with plain-Euclidean data. When every remaining point
    has zero cost, the draw falls back to uniform (this only duplicates
    points that literally repeat in P).
    """
    if power not in (1, 2):
        raise ValidationError("power must be 1 or 2")
    expected = 2 if P.metric == SQUARED_EUCLIDEAN else 1
    if P.metric != FINITE_MATRIX and power != expected:
        raise ValidationError(f"power {power} does not match metric {P.metric!r}")
    n = P.n
    if not 1 <= k <= n:
        raise ValidationError(f"need 1 <= k <= n, got k={k}, n={n}")
    rng = check_rng(rng)
    chosen = np.empty(k, dtype=np.int64)
    chosen[0] = rng.integers(n)
    costs = _costs_to_index_set(P, chosen[:1])
    for i in range(1, k):
        total = float(np.sum(costs))
        if total > 0:
            u = rng.random() * total
            idx = int(np.searchsorted(np.cumsum(costs), u, side="right"))
            idx = min(idx, n - 1)
        else:
            idx = int(rng.integers(n))
        chosen[i] = idx
        costs = np.minimum(costs, _costs_to_index_set(P, chosen[i:i + 1]))
    if P.metric == FINITE_MATRIX:
        return CandidateSolution(chosen)
    return CandidateSolution(P.points[chosen])


def _costs_to_index_set(P: Dataset, idx: np.ndarray) -> np.ndarray:
    if P.metric == FINITE_MATRIX:
        sol = CandidateSolution(idx.astype(np.int64))
    else:
        sol = CandidateSolution(P.points[idx])
    return cost_matrix(P, sol).min(axis=1)


def lloyd(P: Dataset, S0: CandidateSolution, cfg: SeedConfig) -> LloydResult:
    """Alternate assignment and center updates until improvement stalls.

    The cost after each iteration never exceeds the cost before it;
    empty clusters are re-seeded with the farthest point.
    """
    centers = S0.centers.copy()
    clustering = assign(P, CandidateSolution(centers))
    history = [clustering.total_cost]
    for _ in range(cfg.lloyd_max_iters):
        labels = clustering.assignment
        _, costs = _labels_costs(P, centers, labels)
        empty = [j for j in range(len(centers)) if clustering.cluster_sizes[j] == 0]
        new_centers = centers.copy()
        for j in range(len(centers)):
            members = np.flatnonzero(labels == j)
            if members.size:
                new_centers[j] = _update_center(P, members, centers[j], cfg)
        if empty:
            new_centers = _repair_empty(P, new_centers, labels, costs, empty)
        new_clustering = assign(P, CandidateSolution(new_centers))
        if new_clustering.total_cost > history[-1] * (1 + 1e-12):
            break  # degenerate update; keep the previous state
        centers, clustering = new_centers, new_clustering
        previous = history[-1]
        history.append(clustering.total_cost)
        if previous - clustering.total_cost <= cfg.lloyd_rel_tol * max(previous, 1e-300):
            break
    return LloydResult(CandidateSolution(centers), clustering, tuple(history))


def _labels_costs(P: Dataset, centers, labels):
    costs = cost_matrix(P, CandidateSolution(centers))
    return labels, costs[np.arange(P.n), labels]


def local_search(P: Dataset, S: CandidateSolution, budget: int, rng) -> CandidateSolution:
    """Sampled single-swap improvement.

    Each attempt replaces one random center with a cost-proportionally
    drawn data point and keeps the swap only on a strict relative
    improvement (1e-12). Runs until the budget is spent or the cost is 0.
    """
    if budget < 0:
        raise ValidationError("budget must be >= 0")
    rng = check_rng(rng)
    centers = S.centers.copy()
    cost = assign(P, CandidateSolution(centers)).total_cost
    n, k = P.n, S.k
    for _ in range(budget):
        if cost <= 0:
            break
        costs = cost_matrix(P, CandidateSolution(centers)).min(axis=1)
        total = float(np.sum(costs))
        if total > 0:
            u = rng.random() * total
            p = min(int(np.searchsorted(np.cumsum(costs), u, side="right")), n - 1)
        else:
            p = int(rng.integers(n))
        j = int(rng.integers(k))
        trial = centers.copy()
        trial[j] = p if P.metric == FINITE_MATRIX else P.points[p]
        trial_cost = assign(P, CandidateSolution(trial)).total_cost
        if trial_cost < cost * (1 - 1e-12):
            centers, cost = trial, trial_cost
    return CandidateSolution(centers)


def _fixed_point(P: Dataset, centers, cfg: SeedConfig):
    """Drive (centers, assignment) to a mutual fixed point.

    Stops when the assignment stabilizes, so centers equal their
    clusters' exact updates and the assignment is nearest-center.
    """
    clustering = assign(P, CandidateSolution(centers))
    for _ in range(_POLISH_ROUNDS):
        labels = clustering.assignment
        new_centers = centers.copy()
        for j in range(len(centers)):
            members = np.flatnonzero(labels == j)
            if members.size:
                new_centers[j] = _update_center(P, members, centers[j], cfg)
        new_clustering = assign(P, CandidateSolution(new_centers))
        if new_clustering.total_cost > clustering.total_cost * (1 + 1e-12):
            break
        moved = not np.array_equal(new_clustering.assignment, labels)
        centers, clustering = new_centers, new_clustering
        if not moved:
            break
    return centers, clustering


def approx_solution(P: Dataset, k: int, cfg: SeedConfig | None = None) -> ApproxSolution:
    """Best of several seeded chains, finalized to a consistent solution.

    Each restart runs seeding, Lloyd, and optional local search on its
    own derived stream; the cheapest result wins (ties by restart
    index). In squared-Euclidean mode the winner is then polished until
    centers are the exact centroids of their own assignment.
    """
    cfg = cfg or SeedConfig()
    if not P.is_unit_weight():
        raise ValidationError("the solver pipeline requires unit-weight datasets")
    if not 1 <= k <= P.n:
        raise ValidationError(f"need 1 <= k <= n, got k={k}, n={P.n}")
    restarts = max(1, cfg.restarts)
    power = 2 if P.metric == SQUARED_EUCLIDEAN else 1

    def run(rng: np.random.Generator):
        seeded = d2_seed(P, k, rng, power=power)
        result = lloyd(P, seeded, cfg)
        sol = result.solution
        if cfg.local_search_budget > 0:
            sol = local_search(P, sol, cfg.local_search_budget, rng)
        return sol, assign(P, sol).total_cost

    results = parallel_map(run, spawn_rngs(cfg.rng_seed, restarts))
    best = min(range(restarts), key=lambda i: (results[i][1], i))
    centers, clustering = _fixed_point(P, results[best][0].centers.copy(), cfg)

    labels = clustering.assignment
    costs = cost_matrix(P, CandidateSolution(centers))[np.arange(P.n), labels]
    sizes = clustering.cluster_sizes
    delta = np.divide(clustering.cluster_costs, sizes,
                      out=np.zeros(len(sizes)), where=sizes > 0)
    return ApproxSolution(metric=P.metric, centers=centers, clustering=clustering,
                          delta=delta, point_costs=costs,
                          total=float(clustering.total_cost))


def solution_from_centers(P: Dataset, centers) -> ApproxSolution:
    """Bookkeeping for externally supplied centers (no refinement)."""
    sol = CandidateSolution(centers)
    clustering = assign(P, sol)
    labels = clustering.assignment
    costs = cost_matrix(P, sol)[np.arange(P.n), labels]
    sizes = clustering.cluster_sizes
    delta = np.divide(clustering.cluster_costs, sizes,
                      out=np.zeros(len(sizes)), where=sizes > 0)
    return ApproxSolution(metric=P.metric, centers=sol.centers, clustering=clustering,
                          delta=delta, point_costs=costs, total=float(clustering.total_cost))


def with_delta(A: ApproxSolution, delta) -> ApproxSolution:
    """Copy of A with the per-cluster average costs replaced."""
    return replace(A, delta=np.asarray(delta, dtype=np.float64))


def _block_cost_euclidean(P: Dataset, members: tuple[int, ...]) -> float:
    pts = P.points[list(members)]
    if P.metric == SQUARED_EUCLIDEAN:
        mu = pts.mean(axis=0)
        return float(np.sum((pts - mu) ** 2))
    center = geometric_median(pts, max_iter=200, tol=1e-12)
    return float(np.sum(np.sqrt(np.sum((pts - center) ** 2, axis=1))))


def _block_cost_finite(P: Dataset, members: tuple[int, ...]) -> float:
    sub = P.matrix[np.ix_(members, members)]
    return float(sub.sum(axis=1).min())


def brute_force_opt(P: Dataset, k: int) -> tuple[float, Clustering]:
    """Exact optimum by enumerating set partitions into at most k parts.

    Squared-Euclidean blocks are costed at their centroid with an
    incremental formula and branch-and-bound pruning; other metrics cost
    completed blocks directly. Enumeration is capped at n = 14.
    """
    n = P.n
    if n > _BRUTE_FORCE_MAX_N:
        raise ValidationError(f"brute force is capped at n = {_BRUTE_FORCE_MAX_N}, got {n}")
    if not 1 <= k <= n:
        raise ValidationError(f"need 1 <= k <= n, got k={k}, n={n}")
    if not P.is_unit_weight():
        raise ValidationError("brute force requires unit-weight datasets")

    if P.metric == SQUARED_EUCLIDEAN:
        best_cost, best_labels = _brute_force_squared(P, k)
    else:
        block_cost = (_block_cost_finite if P.metric == FINITE_MATRIX
                      else _block_cost_euclidean)
        best_cost, best_labels = _brute_force_generic(P, k, block_cost)

    labels = np.asarray(best_labels, dtype=np.int64)
    sizes = np.bincount(labels, minlength=k).astype(np.int64)
    ccosts = np.zeros(k)
    for j in range(k):
        members = tuple(np.flatnonzero(labels == j))
        if members:
            if P.metric == SQUARED_EUCLIDEAN:
                ccosts[j] = _block_cost_euclidean(P, members)
            elif P.metric == FINITE_MATRIX:
                ccosts[j] = _block_cost_finite(P, members)
            else:
                ccosts[j] = _block_cost_euclidean(P, members)
    clustering = Clustering(assignment=labels, cluster_sizes=sizes,
                            cluster_costs=ccosts, total_cost=float(ccosts.sum()))
    return float(best_cost), clustering


def _brute_force_squared(P: Dataset, k: int) -> tuple[float, list[int]]:
    # Centered coordinates keep the sqsum - |vecsum|^2/count formula stable.
    pts = P.points - P.points.mean(axis=0)
    sq = np.sum(pts ** 2, axis=1)
    n, d = pts.shape
    labels = [0] * n
    best = {"cost": np.inf, "labels": list(range(n))}
    counts = [0] * k
    vecsum = np.zeros((k, d))
    sqsum = [0.0] * k
    blockcost = [0.0] * k

    def recurse(i: int, used: int, partial: float):
        if partial >= best["cost"]:
            return
        if i == n:
            best["cost"] = partial
            best["labels"] = labels.copy()
            return
        limit = min(used + 1, k)
        for b in range(limit):
            old_cost = blockcost[b]
            counts[b] += 1
            vecsum[b] += pts[i]
            sqsum[b] += sq[i]
            # cancellation can leave a tiny negative residue; costs are >= 0
            new_cost = max(0.0, sqsum[b] - float(vecsum[b] @ vecsum[b]) / counts[b])
            blockcost[b] = new_cost
            labels[i] = b
            recurse(i + 1, max(used, b + 1), partial - old_cost + new_cost)
            counts[b] -= 1
            vecsum[b] -= pts[i]
            sqsum[b] -= sq[i]
            blockcost[b] = old_cost
        labels[i] = 0

    recurse(0, 0, 0.0)
    return best["cost"], best["labels"]


def _brute_force_generic(P: Dataset, k: int, block_cost) -> tuple[float, list[int]]:
    n = P.n
    best_cost, best_labels = np.inf, list(range(n))
    for labels in _restricted_growth_strings(n, k):
        blocks: dict[int, list[int]] = {}
        for i, b in enumerate(labels):
            blocks.setdefault(b, []).append(i)
        cost = sum(block_cost(P, tuple(members)) for members in blocks.values())
        if cost < best_cost:
            best_cost, best_labels = cost, list(labels)
    return best_cost, best_labels


def _restricted_growth_strings(n: int, k: int):
    """All assignments of n items into at most k unlabeled nonempty blocks."""
    labels = [0] * n

    def recurse(i: int, used: int):
        if i == n:
            yield labels
            return
        for b in range(min(used + 1, k)):
            labels[i] = b
            yield from recurse(i + 1, max(used, b + 1))
        labels[i] = 0

    yield from recurse(0, 0)
