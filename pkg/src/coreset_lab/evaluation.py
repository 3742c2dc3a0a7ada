"""Cost estimation, candidate families, sup-error measurement,
stability estimation, and error-vs-size sweeps.

The quality of a coreset is its worst relative error over candidate
solutions. The full supremum is not computable, so it is probed with
finite candidate families that each stress a distinct failure mode:
arbitrary placements, near-reference placements, solutions missing one
reference center, and (on basis-block instances) the normalized-sum
attack centers.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from ._validation import check_rng, spawn_rngs
from .data import (FINITE_MATRIX, CandidateSolution, Dataset, cost_matrix,
                   total_cost)
from .exceptions import ValidationError, ZeroCostError
from .instances import SIMPLEX_LB, InstanceTag
from .sampling import (OFFSET, SENSITIVITY, UNIFORM, Coreset, compute_mu,
                       offset_coreset, sensitivity_sample, uniform_sample)
from .seeding import ApproxSolution, SeedConfig, approx_solution, brute_force_opt, lloyd, d2_seed

FAMILIES = ("random_data_points", "random_box", "lloyd_random_restarts",
            "perturb_reference", "drop_one_center", "adversarial_simplex")


def estimate_cost(omega: Coreset, S: CandidateSolution,
                  dataset: Dataset | None = None) -> float:
    """Weighted coreset cost at S, plus the coreset's additive offset.

    Finite-metric coresets store entry indices, so the source dataset
    must be supplied to look costs up.
    """
    if omega.points is not None:
        costs = _entry_costs(omega.points, S, omega.metric)
    else:
        if dataset is None or dataset.metric != FINITE_MATRIX:
            raise ValidationError("index-based coresets need their finite-metric dataset")
        costs = dataset.matrix[np.ix_(omega.indices, S.centers)].min(axis=1)
    return float(np.sum(omega.weights * costs)) + omega.offset


def _entry_costs(points: np.ndarray, S: CandidateSolution, metric: str) -> np.ndarray:
    ds = Dataset.from_points(points, metric=metric)
    return cost_matrix(ds, S).min(axis=1)


def relative_error(P: Dataset, omega: Coreset, S: CandidateSolution) -> float:
    """|true - estimated| / true at one candidate solution."""
    truth = total_cost(P, S)
    if truth <= 0:
        raise ZeroCostError("the candidate has zero true cost; relative error is undefined")
    return abs(truth - estimate_cost(omega, S, dataset=P)) / truth


@dataclass(frozen=True)
class CandidateSpec:
    """Which candidate families to generate, and how many of each."""

    counts: Mapping[str, int]
    perturb_scale: float = 0.5
    rng_seed: int = 0

    def __post_init__(self):
        for fam, count in self.counts.items():
            if fam not in FAMILIES:
                raise ValidationError(f"unknown candidate family {fam!r}")
            if count < 0:
                raise ValidationError("family counts must be >= 0")


@dataclass(frozen=True)
class Candidate:
    solution: CandidateSolution
    family: str


def generate_candidates(P: Dataset, A: ApproxSolution, spec: CandidateSpec, rng,
                        tag: InstanceTag | None = None,
                        cfg: SeedConfig | None = None) -> list[Candidate]:
    """Materialize the requested families, deterministically per seed."""
    rng = check_rng(rng)
    out: list[Candidate] = []
    k = A.k
    for family in FAMILIES:
        count = spec.counts.get(family, 0)
        if count == 0:
            continue
        if family == "random_data_points":
            for _ in range(count):
                idx = rng.choice(P.n, size=min(k, P.n), replace=False)
                centers = idx if P.metric == FINITE_MATRIX else P.points[idx]
                out.append(Candidate(CandidateSolution(centers), family))
        elif family == "random_box":
            _require_coords(P, family)
            lo, hi = P.points.min(axis=0), P.points.max(axis=0)
            for _ in range(count):
                centers = lo + rng.random((k, P.dim)) * (hi - lo)
                out.append(Candidate(CandidateSolution(centers), family))
        elif family == "lloyd_random_restarts":
            run_cfg = cfg or SeedConfig(lloyd_max_iters=5, local_search_budget=0,
                                        restarts=1)
            power = 2 if P.metric == "squared_euclidean" else 1
            for _ in range(count):
                seeded = d2_seed(P, k, rng, power=power)
                out.append(Candidate(lloyd(P, seeded, run_cfg).solution, family))
        elif family == "perturb_reference":
            _require_coords(P, family)
            scale_j = _perturbation_scales(P, A)
            for _ in range(count):
                noise = rng.normal(size=(k, P.dim)) * (spec.perturb_scale * scale_j[:, None])
                out.append(Candidate(CandidateSolution(A.centers + noise), family))
        elif family == "drop_one_center":
            # any positive count requests the full set: one solution per
            # dropped center, the gap covered by duplicating a neighbor
            for j in range(k):
                centers = A.centers.copy()
                centers[j] = A.centers[(j + 1) % k]
                out.append(Candidate(CandidateSolution(centers), family))
        elif family == "adversarial_simplex":
            out.extend(_simplex_attack_candidates(P, tag, count, rng))
    if not out:
        raise ValidationError("candidate spec produced no solutions")
    return out


def _require_coords(P: Dataset, family: str):
    if P.metric == FINITE_MATRIX:
        raise ValidationError(f"family {family!r} needs coordinate data")


def _perturbation_scales(P: Dataset, A: ApproxSolution) -> np.ndarray:
    """Per-center length scale: the rms radius of its cluster."""
    if P.metric == "squared_euclidean":
        scale = np.sqrt(A.delta)
    else:
        scale = A.delta.copy()
    fallback = float(np.max(np.abs(P.points))) * 1e-3 + 1e-12
    scale[scale <= 0] = fallback
    return scale


def _simplex_attack_candidates(P: Dataset, tag: InstanceTag | None, count: int,
                               rng: np.random.Generator) -> list[Candidate]:
    """Normalized sums of random basis subsets, one center per block."""
    if tag is None or tag.kind != SIMPLEX_LB or tag.blocks is None:
        raise ValidationError("the adversarial family needs a basis-block instance tag")
    blocks = np.asarray(tag.blocks)
    block_ids = np.unique(blocks)
    n_block = int(tag.params.get("block_size", np.sum(blocks == block_ids[0])))
    out = []
    for _ in range(count):
        centers = []
        for b in block_ids:
            members = np.flatnonzero(blocks == b)
            r = int(rng.integers(1, n_block + 1))
            subset = rng.choice(members, size=r, replace=False)
            total = P.points[subset].sum(axis=0)
            centers.append(total / np.sqrt(np.sum(total ** 2)))
        out.append(Candidate(CandidateSolution(np.vstack(centers)),
                             "adversarial_simplex"))
    return out


@dataclass(frozen=True)
class SupError:
    """Worst relative error over a candidate list, with its witness."""

    max_error: float
    argmax: CandidateSolution
    argmax_index: int
    argmax_family: str
    mean_error: float
    skipped_zero_cost: tuple[int, ...]


def _candidate_list(candidates) -> list[Candidate]:
    out = []
    for c in candidates:
        if isinstance(c, Candidate):
            out.append(c)
        else:
            out.append(Candidate(c, "unlabeled"))
    return out


def sup_error(P: Dataset, omega: Coreset, candidates: Sequence,
              true_costs: np.ndarray | None = None) -> SupError:
    """Maximum relative error over candidates, ties to the first.

    Candidates with zero true cost are excluded and flagged, since the
    relative error is undefined there. true_costs, when given, must be
    the precomputed total cost of each candidate (sweeps share them
    across many coresets).
    """
    cands = _candidate_list(candidates)
    if not cands:
        raise ValidationError("candidate list is empty")
    if true_costs is None:
        true_costs = np.array([total_cost(P, c.solution) for c in cands])
    best_idx, best_err = -1, -1.0
    errors, skipped = [], []
    for i, cand in enumerate(cands):
        if true_costs[i] <= 0:
            skipped.append(i)
            continue
        est = estimate_cost(omega, cand.solution, dataset=P)
        err = abs(true_costs[i] - est) / true_costs[i]
        errors.append(err)
        if err > best_err:
            best_idx, best_err = i, err
    if best_idx < 0:
        raise ZeroCostError("every candidate had zero true cost")
    return SupError(max_error=float(best_err), argmax=cands[best_idx].solution,
                    argmax_index=best_idx, argmax_family=cands[best_idx].family,
                    mean_error=float(np.mean(errors)),
                    skipped_zero_cost=tuple(skipped))


def adversarial_center(omega: Coreset) -> np.ndarray:
    """The normalized sum of the coreset's basis-point entries.

    Entries must be distinct standard-basis points of one untranslated
    block; at this center, undersized coresets provably misestimate the
    block's cost.
    """
    if omega.points is None:
        raise ValidationError("adversarial centers need coordinate entries")
    pts = omega.points
    col = np.argmax(pts, axis=1)
    expected = np.zeros_like(pts)
    expected[np.arange(pts.shape[0]), col] = 1.0
    if np.max(np.abs(pts - expected)) > 1e-9:
        raise ValidationError("entries are not standard-basis points")
    if np.unique(col).size != pts.shape[0]:
        raise ValidationError("entries must be distinct basis points")
    total = pts.sum(axis=0)
    norm = float(np.sqrt(np.sum(total ** 2)))
    if norm == 0:
        raise ValidationError("entry sum is zero")
    return total / norm


@dataclass(frozen=True)
class BetaEstimate:
    """Cost-stability value: optimal cost ratio between k-1 and k centers."""

    beta: float
    opt_k: float
    opt_k_minus_1: float
    mode: str
    note: str = ""

    def to_dict(self) -> dict:
        return {"value": "inf" if math.isinf(self.beta) else self.beta,
                "opt_k": self.opt_k, "opt_k_minus_1": self.opt_k_minus_1,
                "mode": self.mode, "note": self.note}


def estimate_beta(P: Dataset, k: int, mode: str = "exact",
                  cfg: SeedConfig | None = None) -> BetaEstimate:
    """Stability from exact or heuristic optima.

    Exact mode uses the brute-force oracle (small n only). Heuristic
    mode substitutes best-of-restarts solver costs, which can err in
    either direction; the result is flagged as such.
    """
    if k < 2:
        raise ValidationError("stability needs k >= 2")
    if mode == "exact":
        opt_k, _ = brute_force_opt(P, k)
        opt_km1, _ = brute_force_opt(P, k - 1)
        note = ""
    elif mode == "heuristic":
        cfg = cfg or SeedConfig()
        opt_k = approx_solution(P, k, cfg).total
        opt_km1 = approx_solution(P, k - 1, cfg).total
        note = "heuristic optima; value may err in either direction"
    else:
        raise ValidationError("mode must be 'exact' or 'heuristic'")
    if opt_k <= 0:
        beta = math.inf if opt_km1 > 0 else 0.0
    else:
        beta = opt_km1 / opt_k - 1.0
    return BetaEstimate(beta=beta, opt_k=float(opt_k), opt_k_minus_1=float(opt_km1),
                        mode=mode, note=note)


@dataclass(frozen=True)
class ErrorRow:
    m: int
    trial: int
    algorithm: str
    family: str
    sup_rel_error: float
    mean_rel_error: float
    evente_pass: bool | None
    wall_time_s: float


@dataclass
class ErrorTable:
    """Sweep results, uniquely keyed by (m, trial, algorithm)."""

    rows: list[ErrorRow] = field(default_factory=list)

    HEADER = "m,trial,algorithm,family,sup_rel_error,mean_rel_error,evente_pass,wall_time_s"

    def median_sup(self, algorithm: str, m: int) -> float:
        vals = [r.sup_rel_error for r in self.rows
                if r.algorithm == algorithm and r.m == m]
        if not vals:
            raise ValidationError(f"no rows for algorithm={algorithm!r}, m={m}")
        return float(np.median(vals))

    def to_csv(self) -> str:
        lines = [self.HEADER]
        for r in self.rows:
            evente = "" if r.evente_pass is None else str(r.evente_pass).lower()
            lines.append(f"{r.m},{r.trial},{r.algorithm},{r.family},"
                         f"{r.sup_rel_error:.17g},{r.mean_rel_error:.17g},"
                         f"{evente},{r.wall_time_s:.6f}")
        return "\n".join(lines) + "\n"


def sweep(P: Dataset, algorithms: Sequence[str], m_list: Sequence[int], trials: int,
          spec: CandidateSpec, rng, *, k: int, cfg: SeedConfig | None = None,
          eps: float = 0.2, tag: InstanceTag | None = None,
          A: ApproxSolution | None = None) -> ErrorTable:
    """Paired error-vs-size experiment.

    One candidate list and one reference solution are shared by every
    cell; each (algorithm, m, trial) cell builds a fresh coreset from
    its own derived stream and records its sup and mean errors, the
    preservation flag, and wall time. Deterministic given the seed.
    """
    from .diagnostics import check_event_e  # local import, avoids a module cycle

    if not algorithms or not m_list or trials < 1:
        raise ValidationError("need nonempty algorithms, m_list, and trials >= 1")
    for algo in algorithms:
        if algo not in (SENSITIVITY, UNIFORM, OFFSET):
            raise ValidationError(f"unknown algorithm {algo!r}")
    rng = check_rng(rng)
    cfg = cfg or SeedConfig()
    if A is None:
        A = approx_solution(P, k, cfg)
    mu = compute_mu(P, A)
    candidates = generate_candidates(P, A, spec, np.random.default_rng(spec.rng_seed),
                                     tag=tag, cfg=None)
    true_costs = np.array([total_cost(P, c.solution) for c in candidates])

    cells = [(algo, m, trial)
             for algo in algorithms for m in m_list for trial in range(trials)]
    streams = spawn_rngs(int(rng.integers(2 ** 63)), len(cells))

    rows = []
    for (algo, m, trial), stream in zip(cells, streams):
        start = time.perf_counter()
        if algo == SENSITIVITY:
            omega = sensitivity_sample(P, A, m, stream, mu=mu)
        elif algo == UNIFORM:
            omega = uniform_sample(P, m, stream)
        else:
            omega = offset_coreset(P, A)
        result = sup_error(P, omega, candidates, true_costs=true_costs)
        evente: bool | None
        if omega.indices is not None and np.all(omega.indices >= 0):
            evente = check_event_e(P, A, omega, eps).passed
        else:
            evente = None
        rows.append(ErrorRow(m=m, trial=trial, algorithm=algo,
                             family=result.argmax_family,
                             sup_rel_error=result.max_error,
                             mean_rel_error=result.mean_error,
                             evente_pass=evente,
                             wall_time_s=time.perf_counter() - start))
    rows.sort(key=lambda r: (r.m, r.trial, r.algorithm))
    return ErrorTable(rows=rows)
