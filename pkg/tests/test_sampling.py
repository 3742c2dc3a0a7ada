import numpy as np
import pytest

from coreset_lab import (CandidateSolution, Dataset, SeedConfig, ValidationError,
                         approx_solution, compact, compute_mu, estimate_cost,
                         merge, offset_coreset, sensitivity_sample, total_cost,
                         uniform_sample)
from coreset_lab.data import EUCLIDEAN, SQUARED_EUCLIDEAN
from coreset_lab.seeding import solution_from_centers

THREE = Dataset.from_points([[0.], [0.], [3.]])


@pytest.fixture(scope="module")
def three_ref():
    return approx_solution(THREE, 1, SeedConfig(rng_seed=0))


def random_instance(rng, metric=SQUARED_EUCLIDEAN, max_n=200):
    n = int(rng.integers(10, max_n))
    k = int(rng.integers(1, 11))
    dim = int(rng.integers(1, 5))
    pts = rng.normal(size=(n, dim)) * rng.uniform(0.5, 5)
    P = Dataset.from_points(pts, metric=metric)
    cfg = SeedConfig(rng_seed=int(rng.integers(1 << 31)), restarts=2,
                     lloyd_max_iters=10, local_search_budget=0)
    return P, approx_solution(P, min(k, n), cfg)


class TestComputeMu:
    def test_symmetric_pair_is_uniform(self):
        P = Dataset.from_points([[-1.], [1.]])
        A = approx_solution(P, 1, SeedConfig(rng_seed=0))
        np.testing.assert_allclose(compute_mu(P, A).mu, [0.5, 0.5])

    def test_three_point_hand_values(self, three_ref):
        mu = compute_mu(THREE, three_ref)
        np.testing.assert_allclose(mu.mu, [0.25, 0.25, 0.5], atol=1e-12)

    def test_balanced_instance_is_uniform(self):
        # two clusters of two, every point at equal cost from its center
        P = Dataset.from_points([[-1.], [1.], [99.], [101.]])
        A = approx_solution(P, 2, SeedConfig(rng_seed=0))
        np.testing.assert_allclose(compute_mu(P, A).mu, np.full(4, 0.25), atol=1e-12)

    @pytest.mark.parametrize("metric", [SQUARED_EUCLIDEAN, EUCLIDEAN])
    def test_mass_invariants_random_instances(self, metric):
        rng = np.random.default_rng(13 if metric == SQUARED_EUCLIDEAN else 14)
        for _ in range(50):
            P, A = random_instance(rng, metric=metric)
            mu = compute_mu(P, A)
            assert abs(mu.mu.sum() - 1.0) <= 1e-9
            np.testing.assert_allclose(mu.term_family_masses(), 0.25, atol=1e-9)
            assert np.all(mu.mu >= 0)
            np.testing.assert_allclose(mu.terms.sum(axis=1), mu.mu, atol=1e-12)

    def test_zero_cost_cluster_degenerates_to_uniform_share(self):
        P = Dataset.from_points([[0.], [0.], [10.], [12.]])
        A = approx_solution(P, 2, SeedConfig(rng_seed=0))
        mu = compute_mu(P, A)
        assert abs(mu.mu.sum() - 1.0) <= 1e-9
        np.testing.assert_allclose(mu.term_family_masses(), 0.25, atol=1e-9)
        assert mu.degenerate_clusters.any()

    def test_all_zero_cost_dataset(self):
        P = Dataset.from_points([[0.], [5.]])
        A = approx_solution(P, 2, SeedConfig(rng_seed=0))
        mu = compute_mu(P, A)
        np.testing.assert_allclose(mu.mu, [0.5, 0.5], atol=1e-12)


class TestSensitivitySample:
    def test_uniform_mu_single_draw_weight_n(self):
        P = Dataset.from_points(np.array([[-1.], [1.]]))
        A = approx_solution(P, 1, SeedConfig(rng_seed=0))
        omega = sensitivity_sample(P, A, 1, rng=5)
        assert omega.weights[0] == pytest.approx(2.0)

    def test_weights_follow_inverse_probability(self, three_ref):
        mu = compute_mu(THREE, three_ref)
        omega = sensitivity_sample(THREE, three_ref, 4, rng=123)
        np.testing.assert_allclose(omega.weights, 1.0 / (4 * mu.mu[omega.indices]))
        heavy = omega.indices == 2
        assert np.all(omega.weights[heavy] == pytest.approx(0.5))

    def test_multiset_bound(self):
        P = Dataset.from_points([[0.], [9.]])
        A = approx_solution(P, 2, SeedConfig(rng_seed=0))
        omega = sensitivity_sample(P, A, 10, rng=3)
        assert omega.n_entries == 10
        assert omega.n_distinct <= 2

    def test_determinism_bitwise(self, three_ref):
        a = sensitivity_sample(THREE, three_ref, 50, rng=99)
        b = sensitivity_sample(THREE, three_ref, 50, rng=99)
        assert a.points.tobytes() == b.points.tobytes()
        assert a.weights.tobytes() == b.weights.tobytes()

    def test_algebraic_unbiasedness(self):
        # sum over p of mu(p) * w(p) * cost(p, S) equals cost(P, S) / m
        rng = np.random.default_rng(8)
        for _ in range(50):
            P, A = random_instance(rng, max_n=60)
            mu = compute_mu(P, A)
            S = CandidateSolution(rng.normal(size=(3, P.dim)))
            m = 17
            per_draw = float(np.sum(mu.mu * (1.0 / (m * mu.mu))
                                    * _costs(P, S)))
            assert per_draw == pytest.approx(total_cost(P, S) / m, rel=1e-9)

    def test_monte_carlo_unbiasedness_small(self, three_ref):
        S = CandidateSolution(np.array([[1.0]]))
        truth = total_cost(THREE, S)
        mu = compute_mu(THREE, three_ref)
        rng_master = np.random.default_rng(1234)
        estimates = []
        for _ in range(2000):
            omega = sensitivity_sample(THREE, three_ref, 50, rng_master, mu=mu)
            estimates.append(estimate_cost(omega, S))
        estimates = np.array(estimates)
        se = estimates.std(ddof=1) / np.sqrt(len(estimates))
        assert abs(estimates.mean() - truth) <= 3 * se


def _costs(P, S):
    from coreset_lab.data import cost_matrix
    return cost_matrix(P, S).min(axis=1)


class TestUniformSample:
    def test_weights_n_over_m(self):
        P = Dataset.from_points(np.arange(100, dtype=float).reshape(-1, 1))
        omega = uniform_sample(P, 10, rng=0)
        assert np.all(omega.weights == pytest.approx(10.0))
        assert omega.total_weight == pytest.approx(100.0)

    def test_total_weight_exact_at_m_equals_n(self):
        P = Dataset.from_points(np.arange(25, dtype=float).reshape(-1, 1))
        omega = uniform_sample(P, 25, rng=1)
        assert omega.total_weight == pytest.approx(25.0)

    def test_single_point_dataset(self):
        P = Dataset.from_points(np.zeros((4, 1)))
        omega = uniform_sample(P, 6, rng=2)
        assert omega.n_entries == 6
        assert np.all(omega.weights == pytest.approx(4 / 6))


class TestOffsetCoreset:
    def test_estimate_at_own_centers_is_offset(self):
        P = Dataset.from_points([[0.], [1.], [10.], [11.]])
        A = approx_solution(P, 2, SeedConfig(rng_seed=0))
        omega = offset_coreset(P, A)
        assert omega.offset == pytest.approx(1.0)
        assert estimate_cost(omega, A.solution) == pytest.approx(1.0)

    def test_exactness_on_single_center_per_cluster(self):
        P = Dataset.from_points([[0.], [1.], [10.], [11.]])
        A = approx_solution(P, 2, SeedConfig(rng_seed=0))
        omega = offset_coreset(P, A)
        S = CandidateSolution(np.array([[0.], [10.]]))
        assert estimate_cost(omega, S) == pytest.approx(total_cost(P, S))

    def test_random_single_center_candidates_exact(self):
        rng = np.random.default_rng(44)
        P = Dataset.from_points(np.vstack([rng.normal(size=(20, 2)),
                                           rng.normal(size=(20, 2)) + 100]))
        A = approx_solution(P, 2, SeedConfig(rng_seed=0))
        omega = offset_coreset(P, A)
        for _ in range(20):
            S = CandidateSolution(A.centers + rng.normal(size=A.centers.shape))
            truth = total_cost(P, S)
            assert abs(estimate_cost(omega, S) - truth) <= 1e-9 * truth

    def test_rejects_non_centroid_centers(self):
        P = Dataset.from_points([[0.], [1.], [10.], [11.]])
        A = solution_from_centers(P, np.array([[0.2], [10.0]]))
        with pytest.raises(ValidationError):
            offset_coreset(P, A)

    def test_rejects_finite_matrix(self):
        M = np.array([[0., 1.], [1., 0.]])
        P = Dataset.from_matrix(M)
        A = approx_solution(P, 1, SeedConfig(rng_seed=0))
        with pytest.raises(ValidationError):
            offset_coreset(P, A)


class TestMergeAndCompact:
    def test_merge_with_tiny_is_additive(self):
        P = Dataset.from_points(np.arange(20, dtype=float).reshape(-1, 1))
        A = approx_solution(P, 2, SeedConfig(rng_seed=0))
        c1 = sensitivity_sample(P, A, 8, rng=0)
        c2 = sensitivity_sample(P, A, 5, rng=1)
        merged = merge(c1, c2)
        assert merged.m == 13
        rng = np.random.default_rng(2)
        for _ in range(20):
            S = CandidateSolution(rng.normal(size=(2, 1)) * 10)
            lhs = estimate_cost(merged, S)
            rhs = estimate_cost(c1, S) + estimate_cost(c2, S)
            assert lhs == pytest.approx(rhs, rel=1e-9)

    def test_offset_halves_merge_exactly(self):
        left = Dataset.from_points([[0.], [1.]])
        right = Dataset.from_points([[10.], [11.]])
        a_left = approx_solution(left, 1, SeedConfig(rng_seed=0))
        a_right = approx_solution(right, 1, SeedConfig(rng_seed=0))
        merged = merge(offset_coreset(left, a_left), offset_coreset(right, a_right))
        S = CandidateSolution(np.array([[0.5], [10.5]]))
        assert estimate_cost(merged, S) == pytest.approx(1.0)
        assert merged.offset == pytest.approx(1.0)

    def test_mixed_styles_rejected(self):
        P = Dataset.from_points([[0.], [1.], [10.], [11.]])
        A = approx_solution(P, 2, SeedConfig(rng_seed=0))
        with pytest.raises(ValidationError):
            merge(offset_coreset(P, A), sensitivity_sample(P, A, 3, rng=0))

    def test_compact_preserves_estimates(self):
        P = Dataset.from_points([[0.], [0.], [3.]])
        A = approx_solution(P, 1, SeedConfig(rng_seed=0))
        omega = sensitivity_sample(P, A, 40, rng=7)
        small = compact(omega)
        assert small.n_entries == small.n_distinct <= 3
        assert small.m == omega.m
        S = CandidateSolution(np.array([[1.0]]))
        assert estimate_cost(small, S) == pytest.approx(estimate_cost(omega, S))
        assert small.total_weight == pytest.approx(omega.total_weight)
