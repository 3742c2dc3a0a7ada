import math

import numpy as np
import pytest

from coreset_lab import (CandidateSolution, Dataset, InstanceTag, SeedConfig,
                         ValidationError, approx_solution, brute_force_opt,
                         estimate_beta, gen_blobs, gen_separated, gen_simplex_lb,
                         load_finite_metric, total_cost)


class TestGenSeparated:
    def test_small_instance_exact_beta_matches_oracle(self):
        ds, tag = gen_separated(2, 2, 1, target_beta=100.0, noise_radius=0.5, rng=0)
        assert tag.beta_exact is not None
        est = estimate_beta(ds, 2, mode="exact")
        assert tag.beta_exact == pytest.approx(est.beta)

    def test_zero_noise_infinite_beta(self):
        ds, tag = gen_separated(3, 2, 2, target_beta=5.0, noise_radius=0.0, rng=1)
        assert math.isinf(tag.beta_exact)
        assert math.isinf(tag.beta_certified)
        opt, _ = brute_force_opt(ds, 3)
        assert opt == 0.0

    def test_target_scaling_quadruples_squared_gaps(self):
        ds1, tag1 = gen_separated(3, 5, 2, target_beta=2.0, noise_radius=1.0, rng=7)
        ds4, tag4 = gen_separated(3, 5, 2, target_beta=8.0, noise_radius=1.0, rng=7)
        assert tag4.params["center_gap_sq"] == pytest.approx(
            4 * tag1.params["center_gap_sq"])

    def test_certified_beta_hits_point_eight_of_target(self):
        # the generator's own separation formula should land near its target
        hits = 0
        for seed in range(50):
            ds, tag = gen_separated(2, 3, 2, target_beta=50.0, noise_radius=0.3,
                                    rng=seed)
            assert tag.beta_exact is not None
            if tag.beta_exact >= 0.8 * 50.0:
                hits += 1
        assert hits == 50

    def test_certified_bound_is_valid_lower_bound(self):
        for seed in range(20):
            ds, tag = gen_separated(2, 3, 2, target_beta=10.0, noise_radius=0.5,
                                    rng=seed)
            assert tag.beta_certified is not None
            assert tag.beta_exact >= tag.beta_certified - 1e-9

    def test_unequal_sizes(self):
        ds, tag = gen_separated(2, [2, 10], 2, target_beta=4.0, noise_radius=0.5,
                                rng=3)
        assert ds.n == 12
        assert tag.params["sizes"] == [2, 10]

    def test_collinear_fallback_keeps_min_gap(self):
        ds, tag = gen_separated(5, 2, 1, target_beta=3.0, noise_radius=0.1, rng=2)
        assert ds.dim == 1
        assert ds.n == 10

    def test_determinism(self):
        a, _ = gen_separated(3, 4, 2, target_beta=2.0, noise_radius=1.0, rng=9)
        b, _ = gen_separated(3, 4, 2, target_beta=2.0, noise_radius=1.0, rng=9)
        np.testing.assert_array_equal(a.points, b.points)


class TestGenSimplex:
    def test_single_block_geometry(self):
        ds, tag = gen_simplex_lb(1, 0.1, 1e6)
        assert ds.n == 100
        assert ds.dim == 100
        centroid = ds.points.mean(axis=0)
        np.testing.assert_allclose(centroid, np.full(100, 0.01), atol=1e-12)
        cost = total_cost(ds, CandidateSolution(centroid.reshape(1, -1)))
        assert abs(cost - 99.0) <= 1e-9 * 99.0

    def test_within_block_pairwise_distance(self):
        ds, _ = gen_simplex_lb(1, 0.5, 1e6)
        pts = ds.points
        for i in range(pts.shape[0]):
            for j in range(i + 1, pts.shape[0]):
                assert np.sum((pts[i] - pts[j]) ** 2) == pytest.approx(2.0)

    def test_two_blocks_separation(self):
        ds, tag = gen_simplex_lb(2, 0.25, 1e6)
        blocks = np.asarray(tag.blocks)
        a = ds.points[blocks == 0]
        b = ds.points[blocks == 1]
        min_dist = np.sqrt(min(np.sum((p - q) ** 2) for p in a for q in b))
        assert min_dist >= 1e6 - 2

    def test_block_centroid_closed_form(self):
        ds, tag = gen_simplex_lb(3, 0.25, 1e4)
        n = tag.params["block_size"]
        blocks = np.asarray(tag.blocks)
        for i in range(3):
            block_pts = ds.points[blocks == i]
            mu = block_pts.mean(axis=0)
            expected = np.full(n, 1.0 / n)
            expected[0] += i * 1e4
            np.testing.assert_allclose(mu, expected, atol=1e-9)
            within = float(np.sum((block_pts - mu) ** 2))
            assert abs(within - (n - 1)) <= 1e-9 * n

    def test_eps_boundary_sizes(self):
        ds, tag = gen_simplex_lb(1, 0.2, 1e6)
        assert tag.params["block_size"] == 25

    def test_deterministic_no_rng(self):
        a, _ = gen_simplex_lb(2, 0.5, 10.0)
        b, _ = gen_simplex_lb(2, 0.5, 10.0)
        np.testing.assert_array_equal(a.points, b.points)


class TestGenBlobs:
    def test_sigma_zero_repeats_centers(self):
        ds, _ = gen_blobs(4, 5, 2, sigma=0.0, spread=100.0, rng=0)
        assert np.unique(ds.points, axis=0).shape[0] == 4
        opt, _ = brute_force_opt(
            Dataset.from_points(np.unique(ds.points, axis=0)), 4)
        assert opt == 0.0

    def test_single_blob_center_near_mean(self):
        ds, _ = gen_blobs(1, 500, 3, sigma=2.0, spread=10.0, rng=1)
        A = approx_solution(ds, 1, SeedConfig(rng_seed=0))
        np.testing.assert_allclose(A.centers[0], ds.points.mean(axis=0), atol=1e-9)

    def test_n_per_one(self):
        ds, _ = gen_blobs(3, 1, 2, sigma=0.5, spread=50.0, rng=2)
        opt, _ = brute_force_opt(ds, 3)
        assert opt == 0.0

    def test_determinism(self):
        a, _ = gen_blobs(2, 10, 2, sigma=1.0, spread=5.0, rng=11)
        b, _ = gen_blobs(2, 10, 2, sigma=1.0, spread=5.0, rng=11)
        np.testing.assert_array_equal(a.points, b.points)


class TestLoadFiniteMetric:
    def test_single_point(self):
        ds = load_finite_metric([[0.0]])
        assert ds.n == 1
        assert total_cost(ds, CandidateSolution(np.array([0]))) == 0.0

    def test_path_metric_k2(self):
        M = np.abs(np.subtract.outer(np.arange(3.0), np.arange(3.0)))
        ds = load_finite_metric(M, validate_triangle=True)
        opt, _ = brute_force_opt(ds, 2)
        assert opt == pytest.approx(1.0)

    def test_asymmetric_rejected(self):
        with pytest.raises(ValidationError):
            load_finite_metric([[0.0, 1.0], [2.0, 0.0]])


class TestInstanceTag:
    def test_round_trip(self):
        _, tag = gen_separated(2, 2, 1, target_beta=100.0, noise_radius=0.5, rng=0)
        back = InstanceTag.from_dict(tag.to_dict())
        assert back.kind == tag.kind
        assert back.params == tag.params
        assert back.beta_exact == pytest.approx(tag.beta_exact)

    def test_round_trip_infinite_beta(self):
        _, tag = gen_separated(2, 2, 2, target_beta=1.0, noise_radius=0.0, rng=0)
        back = InstanceTag.from_dict(tag.to_dict())
        assert math.isinf(back.beta_exact)

    def test_unknown_fields_rejected(self):
        with pytest.raises(ValidationError):
            InstanceTag.from_dict({"kind": "blobs", "params": {}, "bogus": 1})
