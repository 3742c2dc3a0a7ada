"""Acceptance suite: one test per shipping criterion.

Every test prints a single PASS/FAIL line (run with -s to see them) and
enforces its stated tolerance and wall-clock budget. Statistical checks
run on fixed seeds, so outcomes are reproducible.
"""
import itertools
import math
import time

import numpy as np
import pytest

from coreset_lab import (CandidateSolution, CandidateSpec, Coreset, Dataset,
                         SeedConfig, adversarial_center, approx_solution,
                         brute_force_opt, check_event_e, check_separation,
                         check_weight_bounds, compact, compute_mu, estimate_beta,
                         estimate_cost, gen_blobs, gen_separated, gen_simplex_lb,
                         generate_candidates, merge, offset_coreset,
                         relative_error, sensitivity_sample, sup_error, sweep,
                         total_cost, uniform_sample)
from coreset_lab.data import EUCLIDEAN, SQUARED_EUCLIDEAN


class Criterion:
    def __init__(self, number, description, budget_s):
        self.number = number
        self.description = description
        self.budget_s = budget_s
        self.start = time.perf_counter()

    def finish(self, ok, detail=""):
        elapsed = time.perf_counter() - self.start
        status = "PASS" if ok and elapsed < self.budget_s else "FAIL"
        print(f"[{status}] criterion {self.number}: {self.description} "
              f"({elapsed:.1f}s of {self.budget_s:.0f}s budget){detail}")
        assert elapsed < self.budget_s, f"criterion {self.number} exceeded its budget"
        assert ok, f"criterion {self.number} failed{detail}"


def fast_cfg(seed, restarts=2, iters=12):
    return SeedConfig(rng_seed=seed, restarts=restarts, lloyd_max_iters=iters,
                      local_search_budget=0)


def random_instance(rng, metric):
    n = int(np.exp(rng.uniform(np.log(20), np.log(10_000))))
    k = int(rng.integers(1, 11))
    dim = int(rng.integers(1, 6))
    pts = rng.normal(size=(n, dim)) * rng.uniform(0.5, 4.0)
    if rng.random() < 0.5:  # half the instances get visible cluster structure
        shifts = rng.random((k, dim)) * 30
        pts += shifts[rng.integers(0, k, size=n)]
    P = Dataset.from_points(pts, metric=metric)
    A = approx_solution(P, min(k, n), fast_cfg(int(rng.integers(1 << 31)),
                                               restarts=1, iters=6))
    return P, A


def mu_validity(metric, seed, count):
    rng = np.random.default_rng(seed)
    worst_sum, worst_family = 0.0, 0.0
    for _ in range(count):
        P, A = random_instance(rng, metric)
        dist = compute_mu(P, A)
        worst_sum = max(worst_sum, abs(float(dist.mu.sum()) - 1.0))
        worst_family = max(worst_family,
                           float(np.max(np.abs(dist.term_family_masses() - 0.25))))
        if np.any(dist.mu < 0):
            return False, " negative probability"
    ok = worst_sum <= 1e-9 and worst_family <= 1e-9
    return ok, f"; worst sum dev {worst_sum:.2e}, worst family dev {worst_family:.2e}"


def test_criterion_01_mu_validity():
    crit = Criterion(1, "sampling distribution validity on random instances", 10)
    ok1, d1 = mu_validity(SQUARED_EUCLIDEAN, seed=1, count=60)
    ok2, d2 = mu_validity(EUCLIDEAN, seed=2, count=40)
    crit.finish(ok1 and ok2, d1 + d2)


def unbiasedness_run(metric, seed):
    rng = np.random.default_rng(seed)
    ds, _ = gen_blobs(5, 400, 4, sigma=1.0, spread=60.0, rng=int(rng.integers(1 << 31)),
                      metric=metric)
    A = approx_solution(ds, 5, fast_cfg(0, restarts=3, iters=25))
    mu = compute_mu(ds, A)
    lo, hi = ds.points.min(axis=0), ds.points.max(axis=0)
    solutions = [CandidateSolution(lo + rng.random((5, 4)) * (hi - lo))
                 for _ in range(5)]
    truths = [total_cost(ds, S) for S in solutions]
    draws = np.random.default_rng(seed + 1)
    estimates = np.empty((10_000, 5))
    for i in range(10_000):
        omega = sensitivity_sample(ds, A, 50, draws, mu=mu)
        for j, S in enumerate(solutions):
            estimates[i, j] = estimate_cost(omega, S)
    detail = []
    ok = True
    for j, truth in enumerate(truths):
        se = estimates[:, j].std(ddof=1) / math.sqrt(estimates.shape[0])
        dev = abs(estimates[:, j].mean() - truth)
        ok &= dev <= 3 * se
        detail.append(f"{dev / se:.2f}se")
    return ok, "; deviations " + ",".join(detail)


def test_criterion_02_estimator_unbiasedness():
    crit = Criterion(2, "estimator unbiasedness over 10k coresets", 60)
    ok, detail = unbiasedness_run(SQUARED_EUCLIDEAN, seed=20)
    crit.finish(ok, detail)


def weight_bound_run(metric, seed):
    rng = np.random.default_rng(seed)
    checked = 0
    for i in range(10):
        kind = i % 3
        if kind == 0:
            ds, _ = gen_blobs(int(rng.integers(2, 9)), 500, 3, sigma=1.0,
                              spread=50.0, rng=int(rng.integers(1 << 31)),
                              metric=metric)
        elif kind == 1:
            ds, _ = gen_separated(int(rng.integers(2, 6)), 300, 3,
                                  target_beta=float(rng.uniform(0.5, 8)),
                                  noise_radius=1.0, rng=int(rng.integers(1 << 31)),
                                  metric=metric)
        else:
            ds, _ = gen_simplex_lb(2, 0.2, 1e5, metric=metric)
        k = int(rng.integers(2, 9))
        A = approx_solution(ds, k, fast_cfg(int(rng.integers(1 << 31))))
        omega = sensitivity_sample(ds, A, 100_000, rng)
        if check_weight_bounds(ds, A, omega):
            return False, 0
        checked += omega.n_entries
    return True, checked


def test_criterion_03_weight_bound():
    crit = Criterion(3, "four-way weight bound over a million entries", 30)
    ok, checked = weight_bound_run(SQUARED_EUCLIDEAN, seed=30)
    crit.finish(ok and checked >= 1_000_000, f"; entries checked {checked}")


def test_criterion_04_event_e_frequency():
    crit = Criterion(4, "preservation event frequency at the recommended size", 120)
    k, eps = 5, 0.2
    m = math.ceil(48 * k * eps ** -2 * math.log(10 * k / eps))
    ds, _ = gen_blobs(k, 600, 4, sigma=1.0, spread=80.0, rng=40)
    A = approx_solution(ds, k, fast_cfg(0, restarts=3, iters=25))
    mu = compute_mu(ds, A)
    draws = np.random.default_rng(41)
    passes = sum(check_event_e(ds, A, sensitivity_sample(ds, A, m, draws, mu=mu),
                               eps).passed
                 for _ in range(200))
    crit.finish(passes >= 190, f"; m={m}, passes {passes}/200")


def test_criterion_05_error_vs_size_scaling():
    crit = Criterion(5, "error shrinks like the square root of the size", 600)
    ds, tag = gen_blobs(10, 5000, 6, sigma=1.0, spread=100.0, rng=50)
    spec = CandidateSpec(counts={"random_data_points": 100, "random_box": 50,
                                 "lloyd_random_restarts": 20,
                                 "perturb_reference": 120,
                                 "drop_one_center": 1},
                         rng_seed=51)
    m_list = [200, 800, 3200]
    table = sweep(ds, ["sensitivity"], m_list, 50, spec, 52, k=10,
                  cfg=fast_cfg(0, restarts=3, iters=25), eps=0.2, tag=tag)
    medians = [table.median_sup("sensitivity", m) for m in m_list]
    slope = float(np.polyfit(np.log(m_list), np.log(medians), 1)[0])
    crit.finish(-0.65 <= slope <= -0.35,
                f"; medians {[f'{v:.4f}' for v in medians]}, slope {slope:.3f}")


def _full_family_spec(seed):
    return CandidateSpec(counts={"random_data_points": 50, "random_box": 30,
                                 "lloyd_random_restarts": 10,
                                 "perturb_reference": 50, "drop_one_center": 1},
                         rng_seed=seed)


def test_criterion_06_stable_instance_quality():
    crit = Criterion(6, "stable instances: small sup error, uniform loses on skew", 600)
    eps = 0.25
    m = int(50 * 10 * eps ** -2)

    ds, tag = gen_separated(10, 1000, 5, target_beta=2.0, noise_radius=1.0, rng=60)
    assert tag.beta_certified is not None and tag.beta_certified >= 1.0, \
        f"certified stability {tag.beta_certified} below 1"
    A = approx_solution(ds, 10, fast_cfg(0, restarts=5, iters=30))
    mu = compute_mu(ds, A)
    candidates = generate_candidates(ds, A, _full_family_spec(61), rng=61)
    truths = np.array([total_cost(ds, c.solution) for c in candidates])
    draws = np.random.default_rng(62)
    good = sum(sup_error(ds, sensitivity_sample(ds, A, m, draws, mu=mu),
                         candidates, true_costs=truths).max_error <= eps
               for _ in range(50))

    skew, _ = gen_separated(2, [2, 10_000], 5, target_beta=2.0, noise_radius=1.0,
                            rng=63)
    A2 = approx_solution(skew, 2, fast_cfg(0, restarts=5, iters=30))
    assert sorted(A2.clustering.cluster_sizes.tolist()) == [2, 10_000]
    mu2 = compute_mu(skew, A2)
    cands2 = generate_candidates(skew, A2, _full_family_spec(64), rng=64)
    truths2 = np.array([total_cost(skew, c.solution) for c in cands2])
    paired = np.random.default_rng(65)
    sens_err, unif_err = [], []
    for _ in range(50):
        sens_err.append(sup_error(skew, sensitivity_sample(skew, A2, m, paired, mu=mu2),
                                  cands2, true_costs=truths2).max_error)
        unif_err.append(sup_error(skew, uniform_sample(skew, m, paired),
                                  cands2, true_costs=truths2).max_error)
    sens_med, unif_med = float(np.median(sens_err)), float(np.median(unif_err))
    ok = good >= 45 and unif_med > sens_med
    crit.finish(ok, f"; good trials {good}/50, medians sensitivity {sens_med:.4f} "
                    f"vs uniform {unif_med:.4f} at m={m}")


def test_criterion_07_simplex_lower_bound():
    crit = Criterion(7, "basis-block attack: closed forms and undersized coresets", 10)
    eps = 0.1
    ds, _ = gen_simplex_lb(1, eps, 1e6)
    n = ds.n

    forms_ok = True
    for r in range(1, n + 1):
        omega = Coreset(metric=ds.metric, weights=np.ones(r), m=r,
                        points=np.eye(n)[:r], indices=np.arange(r))
        s = adversarial_center(omega)
        truth = total_cost(ds, CandidateSolution(s.reshape(1, -1)))
        closed = 2 * (n - math.sqrt(r))
        inside = float(np.sum((np.eye(n)[0] - s) ** 2))
        forms_ok &= abs(truth - closed) <= 1e-9 * max(1.0, closed)
        forms_ok &= abs(inside - (2 - 2 / math.sqrt(r))) <= 1e-9

    A = approx_solution(ds, 1, fast_cfg(0))
    mu = compute_mu(ds, A)
    failures = []
    tested = 0
    for m in (5, 10, 20, 30, 40, 50):
        for seed in (0, 1, 2):
            for builder in ("sensitivity", "uniform"):
                if builder == "sensitivity":
                    omega = sensitivity_sample(ds, A, m, 1000 + 10 * m + seed, mu=mu)
                else:
                    omega = uniform_sample(ds, m, 2000 + 10 * m + seed)
                distinct = compact(omega)
                if distinct.n_entries > 50 or omega.total_weight < (1 - eps) * n:
                    continue
                tested += 1
                s = adversarial_center(distinct)
                err = relative_error(ds, omega, CandidateSolution(s.reshape(1, -1)))
                if err <= eps:
                    failures.append((builder, m, seed, distinct.n_entries, err))
    detail = (f"; closed forms ok={forms_ok}, attack tested {tested} coresets, "
              f"{len(failures)} below threshold")
    if failures:
        detail += f" e.g. {failures[0]}"
    crit.finish(forms_ok and not failures, detail)


def _single_center_candidates(A, rng, count, max_shift):
    out = []
    for _ in range(count):
        out.append(CandidateSolution(
            A.centers + rng.normal(size=A.centers.shape) * max_shift))
    return out


def test_criterion_08_offset_coreset():
    crit = Criterion(8, "offset coreset on an extremely stable instance", 30)
    eps = 0.5
    ds, tag = gen_separated(3, 4, 2, target_beta=4096.0, noise_radius=1.0, rng=80)
    assert tag.beta_exact is not None and tag.beta_exact > 512 * eps ** -2, \
        f"exact stability {tag.beta_exact} not above {512 * eps ** -2}"
    opt, _ = brute_force_opt(ds, 3)
    A = approx_solution(ds, 3, SeedConfig(rng_seed=0, restarts=5))
    assert A.total <= opt * (1 + 1e-9), "solver missed the optimum on a tiny instance"
    omega = offset_coreset(ds, A)

    rng = np.random.default_rng(81)
    spec = CandidateSpec(counts={"random_data_points": 200, "random_box": 200,
                                 "perturb_reference": 100}, rng_seed=82)
    candidates = generate_candidates(ds, A, spec, rng=82)
    assert len(candidates) == 500
    worst = sup_error(ds, omega, candidates).max_error

    exact_ok = True
    for S in _single_center_candidates(A, rng, 50, max_shift=2.0):
        clusters_served = set()
        from coreset_lab.data import assign
        c = assign(ds, S)
        served = [set(np.unique(c.assignment[A.clustering.assignment == j]))
                  for j in range(3)]
        if any(len(s) != 1 for s in served):
            continue  # not a single-center candidate; outside the exactness claim
        truth = total_cost(ds, S)
        exact_ok &= abs(estimate_cost(omega, S) - truth) <= 1e-9 * max(1.0, truth)
    crit.finish(worst <= eps and exact_ok,
                f"; sup over 500 candidates {worst:.4f}, single-center exactness "
                f"{exact_ok}")


def exhaustive_reference_opt(points, k):
    """Independent oracle: cost every labeling of points into k groups."""
    n, d = points.shape
    labelings = np.array(list(itertools.product(range(k), repeat=n)), dtype=np.int64)
    onehot = np.eye(k)[labelings]                      # (A, n, k)
    counts = onehot.sum(axis=1)                        # (A, k)
    sums = np.einsum("ank,nd->akd", onehot, points)    # (A, k, d)
    sqnorm = np.einsum("ank,n->ak", onehot, np.sum(points ** 2, axis=1))
    safe = np.maximum(counts, 1)
    block = sqnorm - np.sum(sums ** 2, axis=2) / safe
    block[counts == 0] = 0.0
    return float(np.min(np.maximum(block, 0.0).sum(axis=1)))


def test_criterion_09_oracle_equivalence():
    crit = Criterion(9, "brute-force oracle equals exhaustive recomputation", 60)
    four = Dataset.from_points([[0.], [1.], [10.], [11.]])
    est = estimate_beta(four, 2, mode="exact")
    ok = abs(est.beta - 100.0) <= 1e-9
    rng = np.random.default_rng(90)
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(4, 10))
        k = int(rng.integers(2, 4))
        pts = rng.normal(size=(n, 2)) * rng.uniform(0.5, 5.0)
        opt, _ = brute_force_opt(Dataset.from_points(pts), k)
        ref = exhaustive_reference_opt(pts, k)
        worst = max(worst, abs(opt - ref) / max(1.0, ref))
        ok &= abs(opt - ref) <= 1e-9 * max(1.0, ref)
    crit.finish(ok, f"; worst relative gap {worst:.2e}")


def test_criterion_10_separation_invariant():
    crit = Criterion(10, "stability separation holds on certified instances", 60)
    rng = np.random.default_rng(100)
    checked = 0
    ok = True
    while checked < 50:
        k = int(rng.integers(2, 4))
        n_per = int(rng.integers(2, 4))
        if k * n_per > 10:
            continue
        ds, tag = gen_separated(k, n_per, 2,
                                target_beta=float(rng.uniform(1, 100)),
                                noise_radius=float(rng.uniform(0.2, 1.0)),
                                rng=int(rng.integers(1 << 31)))
        if tag.beta_exact is None or not math.isfinite(tag.beta_exact):
            continue
        opt, clustering = brute_force_opt(ds, k)
        if opt <= 0:
            continue
        violations = check_separation(ds, clustering, tag.beta_exact, opt)
        ok &= not violations
        checked += 1
    crit.finish(ok and checked == 50, f"; instances checked {checked}")


def test_criterion_11_kmedian_parity():
    crit = Criterion(11, "distance-cost parity for validity, bias, and bounds", 120)
    ok1, d1 = mu_validity(EUCLIDEAN, seed=110, count=100)
    ok2, d2 = unbiasedness_run(EUCLIDEAN, seed=111)
    ok3, checked = weight_bound_run(EUCLIDEAN, seed=112)
    crit.finish(ok1 and ok2 and ok3 and checked >= 1_000_000,
                d1 + d2 + f"; entries checked {checked}")


def test_criterion_12_merge_linearity():
    crit = Criterion(12, "merged coresets estimate additively", 5)
    rng = np.random.default_rng(120)
    ds, _ = gen_blobs(3, 60, 2, sigma=1.0, spread=40.0, rng=121)
    A = approx_solution(ds, 3, fast_cfg(0))
    mu = compute_mu(ds, A)
    ok = True
    worst = 0.0
    for _ in range(1000):
        c1 = sensitivity_sample(ds, A, int(rng.integers(1, 30)), rng, mu=mu)
        c2 = (sensitivity_sample(ds, A, int(rng.integers(1, 30)), rng, mu=mu)
              if rng.random() < 0.5 else uniform_sample(ds, int(rng.integers(1, 30)),
                                                        rng))
        S = CandidateSolution(rng.normal(size=(3, 2)) * 30)
        lhs = estimate_cost(merge(c1, c2), S)
        rhs = estimate_cost(c1, S) + estimate_cost(c2, S)
        gap = abs(lhs - rhs) / max(1.0, abs(rhs))
        worst = max(worst, gap)
        ok &= gap <= 1e-9
    crit.finish(ok, f"; worst relative gap {worst:.2e}")
