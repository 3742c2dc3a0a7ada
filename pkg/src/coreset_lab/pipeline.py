"""Objective modes and the composed build-and-check pipeline.

The k-median specialization is the same pipeline with distance costs:
datasets carry the cost convention, so selecting the mode selects the
metric, the seeding power, and the center-update rule.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import EUCLIDEAN, FINITE_MATRIX, SQUARED_EUCLIDEAN, Dataset
from .diagnostics import EventEReport, check_event_e
from .exceptions import ValidationError
from .sampling import Coreset, compute_mu, sensitivity_sample
from .seeding import ApproxSolution, SeedConfig, approx_solution


@dataclass(frozen=True)
class ObjectiveMode:
    """A clustering objective: its name, cost exponent, and seeding power."""

    mode: str
    exponent: int
    power: int

    def __post_init__(self):
        expected = {"kmeans": (2, 2), "kmedian": (1, 1)}
        if self.mode not in expected:
            raise ValidationError(f"unknown objective {self.mode!r}")
        if (self.exponent, self.power) != expected[self.mode]:
            raise ValidationError("exponent and power must match the objective")

    @property
    def metric(self) -> str:
        return SQUARED_EUCLIDEAN if self.mode == "kmeans" else EUCLIDEAN


KMEANS_MODE = ObjectiveMode("kmeans", 2, 2)
KMEDIAN_MODE = ObjectiveMode("kmedian", 1, 1)


def objective_mode(name: str) -> ObjectiveMode:
    if name == "kmeans":
        return KMEANS_MODE
    if name == "kmedian":
        return KMEDIAN_MODE
    raise ValidationError(f"unknown objective {name!r}")


def check_mode(P: Dataset, mode: ObjectiveMode):
    """Finite matrices carry their costs verbatim and fit either mode."""
    if P.metric != FINITE_MATRIX and P.metric != mode.metric:
        raise ValidationError(
            f"objective {mode.mode!r} expects metric {mode.metric!r}, "
            f"dataset has {P.metric!r}")


@dataclass(frozen=True)
class PipelineResult:
    approx: ApproxSolution
    coreset: Coreset
    evente: EventEReport


def run_pipeline(P: Dataset, k: int, m: int, mode: ObjectiveMode,
                 cfg: SeedConfig | None = None, rng=None,
                 eps: float = 0.25) -> PipelineResult:
    """Reference solution, sampling distribution, sample, preservation check."""
    check_mode(P, mode)
    cfg = cfg or SeedConfig()
    A = approx_solution(P, k, cfg)
    mu = compute_mu(P, A)
    seed = rng if rng is not None else cfg.rng_seed
    omega = sensitivity_sample(P, A, m, seed, mu=mu)
    report = check_event_e(P, A, omega, eps)
    return PipelineResult(approx=A, coreset=omega, evente=report)
