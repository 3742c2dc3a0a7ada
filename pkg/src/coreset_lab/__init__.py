"""Sensitivity-sampling coresets for k-means and k-median.

Builders compress a dataset into a small weighted point set whose cost
approximates the full data at every candidate solution. The package
also ships the measurement side: structure classifications,
preservation and weight-bound checks, stability estimation, synthetic
instance generators, an error-sweep harness, and a CLI.
"""
from .data import (EUCLIDEAN, FINITE_MATRIX, SQUARED_EUCLIDEAN, CandidateSolution,
                   Clustering, Dataset, assign, centroid, centroid_identity_check,
                   nearest_center, total_cost)
from .diagnostics import (EventEReport, InteractionReport, StructureReport,
                          check_event_e, check_separation, check_weight_bounds,
                          classify_structure, interaction_profile)
from .estimators import OffsetCoreset, SensitivityCoreset, UniformCoreset
from .evaluation import (CandidateSpec, ErrorTable, SupError, adversarial_center,
                         estimate_beta, estimate_cost, generate_candidates,
                         relative_error, sup_error, sweep)
from .exceptions import (CoresetLabError, DigestMismatchError, ParseError,
                         ValidationError, ZeroCostError)
from .instances import (InstanceTag, gen_blobs, gen_separated, gen_simplex_lb,
                        load_finite_metric)
from .pipeline import KMEANS_MODE, KMEDIAN_MODE, ObjectiveMode, run_pipeline
from .sampling import (Coreset, SamplingDistribution, compact, compute_mu, merge,
                       offset_coreset, sensitivity_sample, uniform_sample)
from .seeding import (ApproxSolution, SeedConfig, approx_solution, brute_force_opt,
                      d2_seed, geometric_median, lloyd, local_search)

__version__ = "0.1.0"

__all__ = [
    "EUCLIDEAN", "FINITE_MATRIX", "SQUARED_EUCLIDEAN",
    "ApproxSolution", "CandidateSolution", "CandidateSpec", "Clustering",
    "Coreset", "CoresetLabError", "Dataset", "DigestMismatchError", "ErrorTable",
    "EventEReport", "InstanceTag", "InteractionReport", "KMEANS_MODE",
    "KMEDIAN_MODE", "ObjectiveMode", "OffsetCoreset", "ParseError",
    "SamplingDistribution", "SeedConfig", "SensitivityCoreset", "StructureReport",
    "SupError", "UniformCoreset", "ValidationError", "ZeroCostError",
    "adversarial_center", "assign", "approx_solution", "brute_force_opt",
    "centroid", "centroid_identity_check", "check_event_e", "check_separation",
    "check_weight_bounds", "classify_structure", "compact", "compute_mu",
    "d2_seed", "estimate_beta", "estimate_cost", "gen_blobs", "gen_separated",
    "gen_simplex_lb", "generate_candidates", "geometric_median",
    "interaction_profile", "lloyd", "load_finite_metric", "local_search", "merge",
    "nearest_center", "offset_coreset", "relative_error", "run_pipeline",
    "sensitivity_sample", "sup_error", "sweep", "total_cost", "uniform_sample",
]
