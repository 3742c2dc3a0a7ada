"""Command-line surface tying the pipeline together.

Subcommands: gen (synthetic instances), build (coresets), eval
(candidate-family errors), diag (preservation, weight bounds,
structure), sweep (error-vs-size tables), beta (stability estimates).
Every command is deterministic given --seed. Exit codes: 0 success,
1 validation failure, 2 I/O failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io as cio
from .data import FINITE_MATRIX, CandidateSolution, Dataset
from .digests import dataset_digest, solution_digest
from .evaluation import (CandidateSpec, ErrorTable, estimate_beta,
                         generate_candidates, sup_error, sweep)
from .diagnostics import (check_event_e, check_weight_bounds, classify_structure,
                          interaction_profile)
from .exceptions import CoresetLabError, ValidationError
from .instances import gen_blobs, gen_separated, gen_simplex_lb
from .pipeline import check_mode, objective_mode
from .sampling import OFFSET, SENSITIVITY, UNIFORM, offset_coreset, sensitivity_sample, uniform_sample
from .seeding import SeedConfig, approx_solution


def _seed_cfg(args) -> SeedConfig:
    return SeedConfig(restarts=getattr(args, "restarts", 5), rng_seed=args.seed)


def cmd_gen(args) -> int:
    if args.kind == "stable":
        dataset, tag = gen_separated(args.k, args.n_per, args.dim, args.target_beta,
                                     args.sigma, args.seed)
    elif args.kind == "simplex":
        dataset, tag = gen_simplex_lb(args.k, args.eps, args.separation)
    elif args.kind == "blobs":
        dataset, tag = gen_blobs(args.k, args.n_per, args.dim, args.sigma,
                                 args.spread, args.seed)
    else:
        raise ValidationError(f"unknown kind {args.kind!r}")
    cio.write_dataset(args.out, dataset, tag=tag)
    print(f"wrote {dataset.n} points to {args.out}")
    return 0


def _load(args) -> tuple[Dataset, object]:
    objective = getattr(args, "objective", "kmeans")
    return cio.read_dataset(args.dataset, objective=objective)


def _rebuild_solution(P: Dataset, meta: dict):
    """Recompute the reference solution a coreset was built over."""
    k = meta.get("k")
    if k is None:
        raise ValidationError("coreset sidecar lacks k; cannot rebuild the reference")
    cfg = SeedConfig(restarts=int(meta.get("restarts", 5)),
                     rng_seed=int(meta.get("seed") or 0))
    A = approx_solution(P, int(k), cfg)
    recorded = meta.get("approx_digest")
    if recorded is not None and recorded != solution_digest(A):
        raise ValidationError(
            "rebuilt reference solution does not match the coreset sidecar digest")
    return A


def cmd_build(args) -> int:
    P, _ = _load(args)
    mode = objective_mode(args.objective)
    check_mode(P, mode)
    cfg = _seed_cfg(args)
    extra = {"k": args.k, "restarts": args.restarts,
             "dataset_digest": dataset_digest(P), "objective_mode": args.objective}
    if args.algo == SENSITIVITY:
        A = approx_solution(P, args.k, cfg)
        omega = sensitivity_sample(P, A, args.m, args.seed)
    elif args.algo == UNIFORM:
        A = approx_solution(P, args.k, cfg)
        omega = uniform_sample(P, args.m, args.seed)
        omega.meta["approx_digest"] = solution_digest(A)
    elif args.algo == OFFSET:
        A = approx_solution(P, args.k, cfg)
        omega = offset_coreset(P, A)
    else:
        raise ValidationError(f"unknown algorithm {args.algo!r}")
    omega.meta.update(extra)
    omega.meta["seed"] = args.seed
    cio.write_coreset(args.out, omega)
    print(f"wrote {omega.n_entries} entries (m={omega.m}, algo={args.algo}) to {args.out}")
    return 0


def cmd_eval(args) -> int:
    P, tag = _load(args)
    omega = cio.read_coreset(args.coreset, dataset=P)
    if omega.meta.get("dataset_digest") not in (None, dataset_digest(P)):
        raise ValidationError("coreset was built from a different dataset")
    A = _rebuild_solution(P, omega.meta)
    families = [f.strip() for f in args.families.split(",") if f.strip()]
    spec = CandidateSpec(counts={f: args.count for f in families}, rng_seed=args.seed)
    candidates = generate_candidates(P, A, spec, args.seed, tag=tag)
    result = sup_error(P, omega, candidates)
    report = cio.new_report(P)
    report["coreset_meta"] = dict(omega.meta)
    report["errors"] = {"sup": result.max_error, "mean": result.mean_error,
                        "argmax_family": result.argmax_family}
    cio.write_report(args.report, report)
    print(f"sup error {result.max_error:.6g} (family {result.argmax_family}); "
          f"report at {args.report}")
    return 0


def cmd_diag(args) -> int:
    P, _ = _load(args)
    omega = cio.read_coreset(args.coreset, dataset=P)
    A = _rebuild_solution(P, omega.meta)
    if args.solution:
        centers, _ = cio.read_dataset(args.solution, objective=args.objective)
        if P.metric == FINITE_MATRIX:
            S = CandidateSolution(centers.matrix[:, 0].astype(np.int64))
        else:
            S = CandidateSolution(centers.points)
    else:
        S = A.solution
    evente = check_event_e(P, A, omega, args.eps)
    violations = check_weight_bounds(P, A, omega)
    structure = classify_structure(P, A, S, args.eps)
    band, type_index = args.band, args.type
    if band < 0 or type_index < 0:
        band, type_index = _busiest_cell(structure)
    inter = interaction_profile(P, A, S, band, type_index, args.eps,
                                structure=structure)
    report = cio.new_report(P)
    report["coreset_meta"] = dict(omega.meta)
    report["evente"] = evente.to_dict()
    report["structure"] = structure.to_dict(A.clustering.assignment)
    report["interaction"] = inter.to_dict()
    report["weight_bounds"] = {"checked": omega.n_entries,
                               "violations": [v.to_dict() for v in violations]}
    cio.write_report(args.report, report)
    print(f"preservation pass={evente.passed}, weight-bound violations="
          f"{len(violations)}; report at {args.report}")
    return 0


def _busiest_cell(structure) -> tuple[int, int]:
    best, best_count = (0, 0), -1
    for b in range(structure.b_max + 1):
        for t in range(structure.t_max + 1):
            count = structure.clusters_in_cell(b, t).size
            if count > best_count:
                best, best_count = (b, t), count
    return best


def cmd_sweep(args) -> int:
    P, tag = _load(args)
    algorithms = [a.strip() for a in args.algos.split(",") if a.strip()]
    m_list = [int(v) for v in args.m_list.split(",") if v.strip()]
    families = [f.strip() for f in args.families.split(",") if f.strip()]
    spec = CandidateSpec(counts={f: args.count for f in families}, rng_seed=args.seed)
    table = sweep(P, algorithms, m_list, args.trials, spec, args.seed,
                  k=args.k, cfg=_seed_cfg(args), eps=args.eps, tag=tag)
    Path(args.out).write_text(table.to_csv())
    print(f"wrote {len(table.rows)} rows to {args.out}")
    return 0


def cmd_beta(args) -> int:
    P, _ = _load(args)
    estimate = estimate_beta(P, args.k, mode=args.mode,
                             cfg=SeedConfig(rng_seed=args.seed))
    print(json.dumps(estimate.to_dict()))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coreset-lab",
                                     description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a synthetic dataset")
    gen.add_argument("--kind", choices=["stable", "simplex", "blobs"], required=True)
    gen.add_argument("--k", type=int, default=5)
    gen.add_argument("--eps", type=float, default=0.1)
    gen.add_argument("--n-per", type=int, default=100)
    gen.add_argument("--dim", type=int, default=2)
    gen.add_argument("--sigma", type=float, default=1.0,
                     help="blob std deviation, or noise radius for stable instances")
    gen.add_argument("--separation", type=float, default=1e6)
    gen.add_argument("--target-beta", type=float, default=4.0)
    gen.add_argument("--spread", type=float, default=100.0)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=cmd_gen)

    build = sub.add_parser("build", help="build a coreset from a dataset")
    build.add_argument("--algo", choices=[SENSITIVITY, UNIFORM, OFFSET], required=True)
    build.add_argument("--dataset", required=True)
    build.add_argument("--k", type=int, required=True)
    build.add_argument("--m", type=int, default=1000)
    build.add_argument("--objective", choices=["kmeans", "kmedian"], default="kmeans")
    build.add_argument("--seed", type=int, default=0)
    build.add_argument("--restarts", type=int, default=5)
    build.add_argument("--out", required=True)
    build.set_defaults(func=cmd_build)

    ev = sub.add_parser("eval", help="measure coreset errors over candidate families")
    ev.add_argument("--dataset", required=True)
    ev.add_argument("--coreset", required=True)
    ev.add_argument("--families",
                    default="random_data_points,lloyd_random_restarts,drop_one_center")
    ev.add_argument("--count", type=int, default=100)
    ev.add_argument("--objective", choices=["kmeans", "kmedian"], default="kmeans")
    ev.add_argument("--seed", type=int, default=0)
    ev.add_argument("--report", required=True)
    ev.set_defaults(func=cmd_eval)

    diag = sub.add_parser("diag", help="preservation, weight bounds, and structure")
    diag.add_argument("--dataset", required=True)
    diag.add_argument("--coreset", required=True)
    diag.add_argument("--eps", type=float, default=0.2)
    diag.add_argument("--objective", choices=["kmeans", "kmedian"], default="kmeans")
    diag.add_argument("--solution", default=None,
                      help="CSV of candidate centers; defaults to the reference")
    diag.add_argument("--band", type=int, default=-1)
    diag.add_argument("--type", type=int, default=-1)
    diag.add_argument("--report", required=True)
    diag.set_defaults(func=cmd_diag)

    sw = sub.add_parser("sweep", help="error-vs-size table over algorithms")
    sw.add_argument("--dataset", required=True)
    sw.add_argument("--algos", default="sensitivity,uniform")
    sw.add_argument("--m-list", default="200,800,3200")
    sw.add_argument("--trials", type=int, default=50)
    sw.add_argument("--k", type=int, required=True)
    sw.add_argument("--eps", type=float, default=0.2)
    sw.add_argument("--families",
                    default="random_data_points,lloyd_random_restarts,drop_one_center")
    sw.add_argument("--count", type=int, default=30)
    sw.add_argument("--objective", choices=["kmeans", "kmedian"], default="kmeans")
    sw.add_argument("--restarts", type=int, default=5)
    sw.add_argument("--seed", type=int, default=0)
    sw.add_argument("--out", required=True)
    sw.set_defaults(func=cmd_sweep)

    beta = sub.add_parser("beta", help="estimate cost stability")
    beta.add_argument("--dataset", required=True)
    beta.add_argument("--k", type=int, required=True)
    beta.add_argument("--mode", choices=["exact", "heuristic"], default="exact")
    beta.add_argument("--objective", choices=["kmeans", "kmedian"], default="kmeans")
    beta.add_argument("--seed", type=int, default=0)
    beta.set_defaults(func=cmd_beta)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return 2
    except CoresetLabError as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
