"""Synthetic instance generators and finite-metric loading.

Generators are deterministic functions of their arguments including the
seed, and attach an InstanceTag describing what was built. Separated
instances carry a stability certificate: an exact value from the
brute-force oracle when the instance is small enough, and a rigorous
lower bound from a pigeonhole argument at any size.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_rng
from .data import (SQUARED_EUCLIDEAN, CandidateSolution, Dataset, total_cost,
                   validate_finite_matrix)
from .exceptions import ValidationError
from .seeding import brute_force_opt

STABLE = "stable"
SIMPLEX_LB = "simplex_lb"
BLOBS = "blobs"
FINITE = "finite"

_EXACT_BETA_MAX_N = 12


@dataclass
class InstanceTag:
    """Provenance of a generated dataset.

    blocks maps each point to its simplex copy (simplex instances only).
    beta_exact is the brute-force stability value on small separated
    instances; beta_certified a provable lower bound valid at any size.
    """

    kind: str
    params: dict = field(default_factory=dict)
    blocks: list[int] | None = None
    beta_exact: float | None = None
    beta_certified: float | None = None

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": self.params, "blocks": self.blocks,
                "beta_exact": _inf_to_str(self.beta_exact),
                "beta_certified": _inf_to_str(self.beta_certified)}

    @classmethod
    def from_dict(cls, d: dict) -> "InstanceTag":
        known = {"kind", "params", "blocks", "beta_exact", "beta_certified"}
        unknown = set(d) - known
        if unknown:
            raise ValidationError(f"unknown tag fields: {sorted(unknown)}")
        return cls(kind=d["kind"], params=dict(d.get("params") or {}),
                   blocks=list(d["blocks"]) if d.get("blocks") is not None else None,
                   beta_exact=_str_to_inf(d.get("beta_exact")),
                   beta_certified=_str_to_inf(d.get("beta_certified")))


def _inf_to_str(v: float | None):
    if v is None:
        return None
    return "inf" if math.isinf(v) else float(v)


def _str_to_inf(v) -> float | None:
    if v is None:
        return None
    return math.inf if v == "inf" else float(v)


def _place_centers(k: int, dim: int, gap: float) -> np.ndarray:
    """k centers pairwise at least gap apart (squared distance gap**2).

    Scaled basis vectors when the dimension allows, otherwise collinear
    placement with growing gaps along the first axis.
    """
    centers = np.zeros((k, dim))
    if dim >= k:
        for j in range(k):
            centers[j, j] = gap / math.sqrt(2.0)
    else:
        position = 0.0
        for j in range(k):
            centers[j, 0] = position
            position += gap * (j + 1)
    return centers


def _uniform_ball(rng: np.random.Generator, n: int, dim: int, radius: float) -> np.ndarray:
    if radius == 0:
        return np.zeros((n, dim))
    direction = rng.normal(size=(n, dim))
    norms = np.sqrt(np.sum(direction ** 2, axis=1))
    norms[norms == 0] = 1.0
    r = radius * rng.random(n) ** (1.0 / dim)
    return direction / norms[:, None] * r[:, None]


def gen_separated(k: int, n_per, dim: int, target_beta: float, noise_radius: float,
                  rng, metric: str = SQUARED_EUCLIDEAN) -> tuple[Dataset, InstanceTag]:
    """Well-separated clusters aiming for a target stability value.

    Cluster centers are placed deterministically at pairwise squared
    distance 4 * target_beta * n_total * r^2 / min_size (r^2 bounds any
    point's cost to its own center), and points fall uniformly in a ball
    of radius r around their center. n_per may be one size or a
    per-cluster size sequence.
    """
    if k < 2:
        raise ValidationError("separated instances need k >= 2")
    if noise_radius < 0:
        raise ValidationError("noise_radius must be >= 0")
    sizes = [int(n_per)] * k if np.isscalar(n_per) else [int(v) for v in n_per]
    if len(sizes) != k or min(sizes) < 1:
        raise ValidationError("need one positive size per cluster")
    rng = check_rng(rng)
    n_total = int(sum(sizes))
    cost_bound = noise_radius ** 2 if noise_radius > 0 else 1.0
    D = 4.0 * target_beta * n_total * cost_bound / min(sizes)
    if D <= 0:
        D = 1.0
    centers = _place_centers(k, dim, math.sqrt(D))
    parts = [centers[j] + _uniform_ball(rng, sizes[j], dim, noise_radius)
             for j in range(k)]
    points = np.vstack(parts)
    dataset = Dataset.from_points(points, metric=metric)

    tag = InstanceTag(kind=STABLE, params={
        "k": k, "sizes": sizes, "dim": dim, "target_beta": float(target_beta),
        "noise_radius": float(noise_radius), "center_gap_sq": float(D)})
    tag.beta_certified = _certified_beta(dataset, centers, sizes, noise_radius)
    if n_total <= _EXACT_BETA_MAX_N and metric == SQUARED_EUCLIDEAN:
        opt_k, _ = brute_force_opt(dataset, k)
        opt_km1, _ = brute_force_opt(dataset, k - 1)
        tag.beta_exact = _beta_value(opt_k, opt_km1)
    return dataset, tag


def _beta_value(opt_k: float, opt_km1: float) -> float:
    if opt_k <= 0:
        return math.inf if opt_km1 > 0 else 0.0
    return opt_km1 / opt_k - 1.0


def _certified_beta(dataset: Dataset, centers: np.ndarray, sizes: list[int],
                    radius: float) -> float | None:
    """Provable stability lower bound for a separated instance.

    Any solution with one center fewer leaves two planted centers
    sharing a nearest solution center; one of them sits at least half
    the minimum planted gap away, so its whole cluster pays at least
    (gap/2 - r)^2 each. The planted solution's cost upper-bounds the
    optimum, giving a certified ratio.
    """
    if dataset.metric != SQUARED_EUCLIDEAN:
        return None
    k = centers.shape[0]
    gaps = [float(np.sum((centers[i] - centers[j]) ** 2))
            for i in range(k) for j in range(i + 1, k)]
    half_gap = math.sqrt(min(gaps)) / 2.0
    if half_gap <= radius:
        return None
    lower = min(sizes) * (half_gap - radius) ** 2
    upper = total_cost(dataset, CandidateSolution(centers))
    if upper <= 0:
        return math.inf
    return lower / upper - 1.0


def gen_simplex_lb(k: int, eps: float, separation: float,
                   rng=None, metric: str = SQUARED_EUCLIDEAN) -> tuple[Dataset, InstanceTag]:
    """Orthonormal-basis blocks, the hard instance for input-point coresets.

    Each block is the standard basis of an n-dimensional space with
    n = ceil(eps^-2); block i is translated by i * separation along the
    first axis. Fully deterministic, the rng argument is ignored.
    """
    if not 0 < eps <= 0.5:
        raise ValidationError("eps must lie in (0, 1/2]")
    if k >= 2 and separation <= 0:
        raise ValidationError("separation must be positive for multiple blocks")
    n = _simplex_block_size(eps)
    basis = np.eye(n)
    parts, blocks = [], []
    for i in range(k):
        shift = np.zeros(n)
        shift[0] = i * separation
        parts.append(basis + shift)
        blocks.extend([i] * n)
    dataset = Dataset.from_points(np.vstack(parts), metric=metric)
    tag = InstanceTag(kind=SIMPLEX_LB, blocks=blocks, params={
        "k": k, "eps": float(eps), "separation": float(separation), "block_size": n})
    return dataset, tag


def _simplex_block_size(eps: float) -> int:
    v = 1.0 / (eps * eps)
    nearest = round(v)
    if abs(v - nearest) <= 1e-9 * v:
        return int(nearest)
    return int(math.ceil(v))


def gen_blobs(k: int, n_per: int, dim: int, sigma: float, spread: float,
              rng, metric: str = SQUARED_EUCLIDEAN) -> tuple[Dataset, InstanceTag]:
    """Gaussian blobs with centers uniform in a box, generic test data."""
    if min(k, n_per, dim) < 1:
        raise ValidationError("k, n_per, and dim must be positive")
    if sigma < 0 or spread < 0:
        raise ValidationError("sigma and spread must be >= 0")
    rng = check_rng(rng)
    centers = rng.random((k, dim)) * spread
    noise = rng.normal(size=(k * n_per, dim)) * sigma
    points = np.repeat(centers, n_per, axis=0) + noise
    dataset = Dataset.from_points(points, metric=metric)
    tag = InstanceTag(kind=BLOBS, params={
        "k": k, "n_per": n_per, "dim": dim, "sigma": float(sigma),
        "spread": float(spread)})
    return dataset, tag


def load_finite_metric(matrix, validate_triangle: bool = False) -> Dataset:
    """A finite-metric dataset from an explicit cost matrix.

    The matrix must be square, symmetric to 1e-9, zero on the diagonal,
    and nonnegative; triangle-inequality auditing is optional. Candidate
    centers for such datasets are input point indices.
    """
    m = np.asarray(matrix, dtype=np.float64)
    validate_finite_matrix(m, check_triangle=validate_triangle)
    return Dataset.from_matrix(m)
