"""Command-line surface: compile, explain, verify, bench, count.

Artifacts are JSON (CNF inputs may also be DIMACS); reports go to
stdout.  Exit codes: 0 success, 2 validation error, 3 resource cap
exceeded, 4 internal-consistency failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from typing import Any, Sequence

import numpy as np

from . import serialize
from .automata import COUNT_ROUTES, cnf_model_count, read_dimacs
from .compilers import ModelSpec
from .engine import efficiency_residual, shap_dense_oracle, shap_tt
from .errors import (
    InternalConsistencyError,
    ResourceLimitError,
    ValidationError,
)
from .router import EnumerableDistribution
from .tensor import DenseTensor
from .train import DEFAULT_DENSE_CAP, ScanStats, TensorTrain, scan_product, tt_eval
from .validation import check_instance, coerce_distribution

VERIFY_REL_TOL = 1e-9
SPOT_CHECK_SAMPLES = 10_000

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RESOURCE = 3
EXIT_INCONSISTENT = 4


def _default_threads() -> int:
    env = os.environ.get("TTSHAP_THREADS")
    if env is None:
        return 1
    try:
        return max(1, int(env))
    except ValueError:
        raise ValidationError(f"TTSHAP_THREADS must be an integer, got {env!r}")


def _load_model_spec(path: str) -> ModelSpec:
    return ModelSpec.from_json(serialize.load_json(path))


def _load_distribution(path: str) -> TensorTrain:
    return coerce_distribution(serialize.load_json(path))


def _emit(report: dict[str, Any]) -> None:
    json.dump(report, sys.stdout, indent=2)
    sys.stdout.write("\n")


def _rel_diff(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(1.0, float(np.max(np.abs(a), initial=0.0)), float(np.max(np.abs(b), initial=0.0)))
    return float(np.max(np.abs(a - b), initial=0.0)) / scale


def cmd_compile(args: argparse.Namespace) -> int:
    spec = _load_model_spec(args.model)
    tt = spec.compile(bond_cap=args.bond_cap, dense_cap=args.dense_cap)
    serialize.dump_json(serialize.tt_to_json(tt), args.out)

    evaluator = spec.evaluator()
    dims = spec.dims()
    domain = math.prod(dims)
    rng = np.random.default_rng(args.seed)
    if domain <= args.dense_cap:
        mode = "exhaustive"
        points = _all_points(dims)
    else:
        mode = "sampled"
        points = [
            tuple(int(rng.integers(1, d + 1)) for d in dims) for _ in range(SPOT_CHECK_SAMPLES)
        ]
    max_diff = 0.0
    for point in points:
        reference = np.asarray(evaluator(point), dtype=np.float64).reshape(-1)
        compiled = tt_eval(tt, point).array.reshape(-1)
        max_diff = max(max_diff, float(np.max(np.abs(reference - compiled))))
    passed = max_diff <= 1e-10
    _emit(
        {
            "command": "compile",
            "model": args.model,
            "out": args.out,
            "sites": len(tt),
            "bonds": [tt.left_boundary] + [c.shape[2] for c in tt.cores],
            "fidelity": {"mode": mode, "checked": len(points), "max_abs_diff": max_diff,
                          "pass": passed},
        }
    )
    return EXIT_OK if passed else EXIT_INCONSISTENT


def _all_points(dims: Sequence[int]):
    grids = np.indices(tuple(dims)).reshape(len(dims), -1).T + 1
    return [tuple(int(v) for v in row) for row in grids]


def _load_for_explain(args: argparse.Namespace) -> tuple[TensorTrain, TensorTrain, tuple[int, ...]]:
    model = _load_model_spec(args.model).compile(
        bond_cap=args.bond_cap, dense_cap=args.dense_cap
    )
    dist = _load_distribution(args.dist)
    x = check_instance(serialize.instance_from_json(serialize.load_json(args.instance)),
                       model.physical_dims)
    return model, dist, x


def cmd_explain(args: argparse.Namespace) -> int:
    model, dist, x = _load_for_explain(args)
    phi = shap_tt(model, dist, x, schedule=args.schedule, threads=args.threads)
    if args.out:
        serialize.dump_json(serialize.shap_matrix_to_json(phi), args.out)
    _emit(
        {
            "command": "explain",
            "schedule": args.schedule,
            "phi": phi.values.tolist(),
            "efficiency_residual": efficiency_residual(phi, model, dist, x),
            "out": args.out,
        }
    )
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    model, dist, x = _load_for_explain(args)
    if len(model) > args.oracle_cap:
        raise ResourceLimitError(
            f"oracle needs 2^{len(model)} coalitions, cap is 2^{args.oracle_cap}"
        )
    engine = shap_tt(model, dist, x, schedule=args.schedule, threads=args.threads)
    enumerable = EnumerableDistribution.from_train(dist, cap=args.dense_cap)
    oracle = shap_dense_oracle(
        lambda point: tt_eval(model, point).array.reshape(-1), enumerable, x
    )
    max_abs = float(np.max(np.abs(engine.values - oracle.values)))
    rel = _rel_diff(engine.values, oracle.values)
    passed = rel <= VERIFY_REL_TOL
    _emit(
        {
            "command": "verify",
            "max_abs_diff": max_abs,
            "max_rel_diff": rel,
            "tolerance": VERIFY_REL_TOL,
            "pass": passed,
        }
    )
    return EXIT_OK if passed else EXIT_INCONSISTENT


def _parse_int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v]
    except ValueError:
        raise ValidationError(f"expected comma-separated integers, got {text!r}")


def cmd_bench(args: argparse.Namespace) -> int:
    lengths = _parse_int_list(args.lengths)
    bonds = _parse_int_list(args.bonds)
    schedules = [s for s in args.schedules.split(",") if s]
    thread_counts = _parse_int_list(args.threads_list)
    rng = np.random.default_rng(args.seed)

    rows = []
    for length in lengths:
        for bond in bonds:
            # Row-stochastic chains keep the product perfectly conditioned at
            # any length, so schedule agreement is meaningful.
            mats = []
            for _ in range(length):
                raw = rng.random((bond, bond)) + 0.1
                mats.append(DenseTensor.from_array(raw / raw.sum(axis=1, keepdims=True)))
            reference = scan_product(mats, schedule="sequential").array
            for schedule in schedules:
                for threads in thread_counts:
                    stats = ScanStats()
                    start = time.perf_counter()
                    result = scan_product(mats, schedule=schedule, threads=threads, stats=stats)
                    elapsed = time.perf_counter() - start
                    rel = _rel_diff(result.array, reference)
                    levels = stats.levels + 1  # plus the level-0 assembly
                    rows.append(
                        {
                            "length": length,
                            "bond": bond,
                            "schedule": schedule,
                            "threads": threads,
                            "wall_seconds": f"{elapsed:.6f}",
                            "levels": levels,
                            "max_rel_diff_vs_sequential": f"{rel:.3e}",
                            "agrees_with_sequential": rel <= 1e-9,
                        }
                    )
                    print(
                        f"bench length={length} bond={bond} schedule={schedule} "
                        f"threads={threads} levels={levels} seconds={elapsed:.6f}",
                        file=sys.stderr,
                    )
    if not rows:
        raise ValidationError("bench produced no rows; check --lengths/--bonds/--schedules")
    with open(args.out, "w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    _emit({"command": "bench", "rows": len(rows), "out": args.out})
    return EXIT_OK


def cmd_count(args: argparse.Namespace) -> int:
    data = open(args.cnf, "r", encoding="utf-8").read()
    cnf = read_dimacs(data)
    count = cnf_model_count(cnf, route=args.route, bond_cap=args.bond_cap)
    _emit(
        {
            "command": "count",
            "cnf": args.cnf,
            "route": args.route,
            "variables": cnf.n,
            "clauses": len(cnf.clauses),
            "count": count,
        }
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ttshap",
        description="Exact marginal attribution for tensor-train models and distributions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--schedule", choices=("sequential", "tree"), default="sequential")
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--dense-cap", type=int, default=DEFAULT_DENSE_CAP, dest="dense_cap")
        p.add_argument("--bond-cap", type=int, default=2 ** 20, dest="bond_cap")
        p.add_argument("--seed", type=int, default=0)

    p_compile = sub.add_parser("compile", help="compile a model spec to a train + fidelity report")
    p_compile.add_argument("--model", required=True)
    p_compile.add_argument("--out", required=True)
    common(p_compile)
    p_compile.set_defaults(func=cmd_compile)

    p_explain = sub.add_parser("explain", help="attribution matrix for one instance")
    p_explain.add_argument("--model", required=True)
    p_explain.add_argument("--dist", required=True)
    p_explain.add_argument("--instance", required=True)
    p_explain.add_argument("--out", default=None)
    common(p_explain)
    p_explain.set_defaults(func=cmd_explain)

    p_verify = sub.add_parser("verify", help="cross-check the engine against the brute-force oracle")
    p_verify.add_argument("--model", required=True)
    p_verify.add_argument("--dist", required=True)
    p_verify.add_argument("--instance", required=True)
    p_verify.add_argument("--oracle-cap", type=int, default=20, dest="oracle_cap")
    common(p_verify)
    p_verify.set_defaults(func=cmd_verify)

    p_bench = sub.add_parser("bench", help="time the scan schedules on random matrix chains")
    p_bench.add_argument("--lengths", required=True)
    p_bench.add_argument("--bonds", required=True)
    p_bench.add_argument("--schedules", default="sequential,tree")
    p_bench.add_argument("--threads", default="1", dest="threads_list")
    p_bench.add_argument("--out", required=True)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.set_defaults(func=cmd_bench)

    p_count = sub.add_parser("count", help="count satisfying assignments of a CNF")
    p_count.add_argument("--cnf", required=True)
    p_count.add_argument("--route", choices=COUNT_ROUTES, default="via_clause_ldfas")
    p_count.add_argument("--bond-cap", type=int, default=2 ** 20, dest="bond_cap")
    p_count.set_defaults(func=cmd_count)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "threads", None) is None and hasattr(args, "threads"):
            args.threads = _default_threads()
        return args.func(args)
    except (ValidationError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ResourceLimitError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except InternalConsistencyError as exc:
        print(f"internal consistency: {exc}", file=sys.stderr)
        return EXIT_INCONSISTENT


if __name__ == "__main__":
    sys.exit(main())
