"""Estimator-style wrappers over the coreset builders.

These classes follow the scikit-learn parameter conventions (plain
constructor attributes, get_params/set_params, trailing-underscore
fitted state), so the builders can be cloned, grid-searched, and
composed with the surrounding ecosystem. fit learns the reference
solution and draws the coreset; fit_transform returns the weighted
summary as a single array with the weight in the last column.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_points
from .data import Dataset
from .evaluation import estimate_cost
from .exceptions import ValidationError
from .pipeline import objective_mode
from .sampling import (Coreset, compute_mu, offset_coreset, sensitivity_sample,
                       uniform_sample)
from .seeding import SeedConfig, approx_solution


class _CoresetEstimator(BaseEstimator):
    """Shared fit plumbing; subclasses build the actual coreset."""

    def __init__(self, k=8, objective="kmeans", restarts=5, lloyd_max_iters=50,
                 local_search_budget=20, random_state=0):
        self.k = k
        self.objective = objective
        self.restarts = restarts
        self.lloyd_max_iters = lloyd_max_iters
        self.local_search_budget = local_search_budget
        self.random_state = random_state

    def _seed_config(self) -> SeedConfig:
        return SeedConfig(lloyd_max_iters=self.lloyd_max_iters,
                          local_search_budget=self.local_search_budget,
                          restarts=self.restarts,
                          rng_seed=int(self.random_state))

    def _dataset(self, X) -> Dataset:
        points = check_points(X, name="X")
        return Dataset.from_points(points, metric=objective_mode(self.objective).metric)

    def fit(self, X, y=None):
        self.dataset_ = self._dataset(X)
        self.n_features_in_ = self.dataset_.dim
        self.solution_ = approx_solution(self.dataset_, self.k, self._seed_config())
        self.coreset_ = self._build(self.dataset_)
        return self

    def _build(self, dataset: Dataset) -> Coreset:
        raise NotImplementedError

    def _check_fitted(self):
        if not hasattr(self, "coreset_"):
            raise ValidationError("estimator is not fitted; call fit first")

    def transform(self, X=None) -> np.ndarray:
        """The fitted coreset as an (entries, dim + 1) array, weight last."""
        self._check_fitted()
        c = self.coreset_
        return np.hstack([c.points, c.weights[:, None]])

    def fit_transform(self, X, y=None) -> np.ndarray:
        return self.fit(X).transform()

    def estimate_cost(self, centers) -> float:
        """Coreset cost estimate at a set of candidate centers."""
        self._check_fitted()
        from .data import CandidateSolution
        return estimate_cost(self.coreset_, CandidateSolution(centers),
                             dataset=self.dataset_)


class SensitivityCoreset(_CoresetEstimator):
    """Cost-proportional importance sampling around a reference solution.

    Parameters
    ----------
    k : number of reference centers.
    m : number of draws; entry weights are 1 / (m * probability).
    objective : "kmeans" (squared distances) or "kmedian" (distances).
    restarts, lloyd_max_iters, local_search_budget : reference-solution
        effort knobs.
    random_state : seed controlling both the reference solution and the
        draws; identical inputs and seed give identical coresets.
    """

    def __init__(self, k=8, m=1000, objective="kmeans", restarts=5,
                 lloyd_max_iters=50, local_search_budget=20, random_state=0):
        super().__init__(k=k, objective=objective, restarts=restarts,
                         lloyd_max_iters=lloyd_max_iters,
                         local_search_budget=local_search_budget,
                         random_state=random_state)
        self.m = m

    def fit(self, X, y=None):
        self.dataset_ = self._dataset(X)
        self.n_features_in_ = self.dataset_.dim
        self.solution_ = approx_solution(self.dataset_, self.k, self._seed_config())
        self.mu_ = compute_mu(self.dataset_, self.solution_)
        self.coreset_ = self.sample()
        return self

    def sample(self, m=None, random_state=None) -> Coreset:
        """Draw a fresh coreset from the fitted distribution."""
        if not hasattr(self, "mu_"):
            raise ValidationError("estimator is not fitted; call fit first")
        seed = self.random_state if random_state is None else random_state
        return sensitivity_sample(self.dataset_, self.solution_,
                                  self.m if m is None else m, int(seed), mu=self.mu_)


class UniformCoreset(_CoresetEstimator):
    """Uniform-draw baseline; every entry carries weight n / m."""

    def __init__(self, m=1000, objective="kmeans", random_state=0):
        self.m = m
        self.objective = objective
        self.random_state = random_state

    def fit(self, X, y=None):
        self.dataset_ = self._dataset(X)
        self.n_features_in_ = self.dataset_.dim
        self.coreset_ = uniform_sample(self.dataset_, self.m, int(self.random_state))
        return self


class OffsetCoreset(_CoresetEstimator):
    """The k reference centers weighted by cluster sizes, plus an offset.

    Exact on very stable inputs whenever each cluster is served by a
    single candidate center. Only valid for the k-means objective.
    """

    def _build(self, dataset: Dataset) -> Coreset:
        return offset_coreset(dataset, self.solution_)
