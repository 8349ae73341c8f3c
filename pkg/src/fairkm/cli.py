"""Command-line surface: fit a fair clustering, benchmark methods across
seeds, sweep the fairness weight, or score an existing assignment file.

Exit codes: 0 success, 1 ingest/engine/benchmark failure, 2 bad arguments
(including missing input files). The FAIRKM_LOG environment variable sets
log verbosity (DEBUG, INFO, WARNING, ...).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import engine
from .bench import BenchSpec, run_bench, run_sweep
from .core import (
    FairKMConfig,
    FairKMError,
    Schema,
    read_assignment_csv,
    save_clustering,
)
from .ingest import IngestOptions, load_csv
from .metrics import DEFAULT_SAMPLE_CAP, compute_report

INIT_CHOICES = {"random": "random_partition", "kmeanspp": "kmeanspp"}
ORDER_CHOICES = {"dataset": "dataset_order", "shuffle": "shuffled_per_iteration"}


def _lambda_arg(text: str):
    if text.lower() == "auto":
        return None
    value = float(text)
    if value < 0:
        raise ValueError("lambda must be nonnegative")
    return value


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(part) for part in text.split(",") if part)


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(part) for part in text.split(",") if part)


def _methods_list(text: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in text.split(",") if part.strip())


def _add_data_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data", required=True, help="input CSV file")
    parser.add_argument("--schema", required=True, help="schema JSON file")
    parser.add_argument(
        "--standardize", choices=["zscore", "minmax", "none"], default="zscore",
        help="feature standardization mode (default zscore)",
    )
    parser.add_argument(
        "--undersample", action="store_true",
        help="undersample rows to parity on the balance_class column",
    )


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--lambda", dest="lambda_", type=_lambda_arg, default=None, metavar="REAL|auto",
        help="fairness weight; 'auto' (default) resolves to (n/k)^2",
    )
    parser.add_argument("--seed", type=int, default=0, help="base random seed")
    parser.add_argument("--max-iter", type=int, default=30)
    parser.add_argument("--init", choices=sorted(INIT_CHOICES), default="random")
    parser.add_argument("--order", choices=sorted(ORDER_CHOICES), default="dataset")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fairkm",
        description="Fair k-means clustering and benchmark harness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit one fair clustering and write it out")
    _add_data_flags(p_fit)
    _add_run_flags(p_fit)
    p_fit.add_argument("--k", type=int, required=True)
    p_fit.add_argument("--out", default="fit_out", help="output directory")
    p_fit.set_defaults(func=cmd_fit)

    p_bench = sub.add_parser("bench", help="multi-restart benchmark across methods")
    _add_data_flags(p_bench)
    _add_run_flags(p_bench)
    p_bench.add_argument("--k", type=_int_list, required=True, metavar="K[,K...]")
    p_bench.add_argument("--restarts", type=int, default=100)
    p_bench.add_argument(
        "--methods", type=_methods_list, default=("kmeans_blind", "fairkm_all"),
        metavar="M[,M...]",
        help="subset of kmeans_blind, fairkm_all, fairkm_single:<attr>",
    )
    p_bench.add_argument("--jobs", type=int, default=1)
    p_bench.add_argument("--sample-cap", type=int, default=DEFAULT_SAMPLE_CAP)
    p_bench.add_argument("--out", default="bench_out")
    p_bench.set_defaults(func=cmd_bench)

    p_sweep = sub.add_parser("sweep-lambda", help="sweep the fairness weight")
    _add_data_flags(p_sweep)
    p_sweep.add_argument("--k", type=int, default=5)
    p_sweep.add_argument(
        "--lambdas", type=_float_list, required=True, metavar="L[,L...]",
        help="grid of at least 2 lambda values",
    )
    p_sweep.add_argument("--restarts", type=int, default=10)
    p_sweep.add_argument("--seed", type=int, default=0)
    p_sweep.add_argument("--max-iter", type=int, default=30)
    p_sweep.add_argument("--init", choices=sorted(INIT_CHOICES), default="random")
    p_sweep.add_argument("--order", choices=sorted(ORDER_CHOICES), default="dataset")
    p_sweep.add_argument("--jobs", type=int, default=1)
    p_sweep.add_argument("--sample-cap", type=int, default=DEFAULT_SAMPLE_CAP)
    p_sweep.add_argument("--out", default="sweep_out")
    p_sweep.set_defaults(func=cmd_sweep_lambda)

    p_metrics = sub.add_parser("metrics", help="score an existing assignment file")
    _add_data_flags(p_metrics)
    p_metrics.add_argument("--assignment", required=True, help="assignment CSV to score")
    p_metrics.add_argument(
        "--reference", default=None,
        help="blind reference assignment CSV for DevC/DevO",
    )
    p_metrics.add_argument("--sample-cap", type=int, default=DEFAULT_SAMPLE_CAP)
    p_metrics.add_argument("--out", default=None, help="write JSON here instead of stdout")
    p_metrics.set_defaults(func=cmd_metrics)
    return parser


def _missing_inputs(*paths: str | None) -> str | None:
    for p in paths:
        if p is not None and not Path(p).is_file():
            return p
    return None


def cmd_fit(args) -> int:
    schema = Schema.load(args.schema)
    schema.require_sensitive()
    options = IngestOptions(
        standardize=args.standardize,
        undersample_balance=args.undersample,
        seed=args.seed,
    )
    dataset, encoding = load_csv(args.data, schema, options)
    config = FairKMConfig(
        k=args.k, lambda_=args.lambda_, max_iter=args.max_iter, seed=args.seed,
        init=INIT_CHOICES[args.init], order=ORDER_CHOICES[args.order],
    )
    clustering = engine.fit(dataset, config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_clustering(clustering, out / "assignment.csv", out / "clustering.json")
    encoding.save(out / "encoding.json")
    obj = clustering.objective
    print(f"km_term={obj.km_term!r}")
    print(f"fairness_term={obj.fairness_term!r}")
    print(f"lambda={clustering.lambda_!r}")
    print(f"total={obj.total!r}")
    print(f"iterations={clustering.iterations_run} converged={clustering.converged}")
    print(f"wrote {out / 'assignment.csv'}")
    print(f"wrote {out / 'clustering.json'}")
    return 0


def cmd_bench(args) -> int:
    try:
        spec = BenchSpec(
            data=args.data, schema=args.schema, ks=args.k, restarts=args.restarts,
            seed_base=args.seed, methods=args.methods, lambda_=args.lambda_,
            max_iter=args.max_iter, init=INIT_CHOICES[args.init],
            order=ORDER_CHOICES[args.order], jobs=args.jobs, out_dir=args.out,
            standardize=args.standardize, undersample=args.undersample,
            sample_cap=args.sample_cap,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    result = run_bench(spec)
    print(f"{result.n_ok} runs ok, {result.n_failed} failed")
    print(f"wrote {result.out_dir / 'runs.csv'}")
    for k in spec.ks:
        print(f"wrote {result.out_dir / f'summary_k{k}.csv'}")
    print(f"wrote {result.out_dir / 'summary.json'}")
    return 0


def cmd_sweep_lambda(args) -> int:
    if len(args.lambdas) < 2:
        print("error: --lambdas needs a grid of at least 2 values", file=sys.stderr)
        return 2
    result = run_sweep(
        data=args.data, schema_path=args.schema, lambdas=args.lambdas, k=args.k,
        restarts=args.restarts, seed_base=args.seed, max_iter=args.max_iter,
        init=INIT_CHOICES[args.init], order=ORDER_CHOICES[args.order],
        jobs=args.jobs, out_dir=args.out, standardize=args.standardize,
        undersample=args.undersample, sample_cap=args.sample_cap,
    )
    print(f"wrote {result.out_dir / 'sweep.csv'}")
    for stem in ("sweep_quality", "sweep_deviation", "sweep_fairness"):
        print(f"wrote {result.out_dir / (stem + '.svg')}")
    return 0


def cmd_metrics(args) -> int:
    schema = Schema.load(args.schema)
    options = IngestOptions(standardize=args.standardize,
                            undersample_balance=args.undersample)
    dataset, _ = load_csv(args.data, schema, options)
    assignment = read_assignment_csv(args.assignment)
    if len(assignment) != dataset.n_objects:
        print(
            f"error: assignment has {len(assignment)} rows, dataset has "
            f"{dataset.n_objects}",
            file=sys.stderr,
        )
        return 1
    reference = None
    if args.reference is not None:
        reference = read_assignment_csv(args.reference)
    report = compute_report(
        dataset, assignment, reference=reference, sample_cap=args.sample_cap
    )
    text = json.dumps(report.to_json_dict(), indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        print(text)
    return 0


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=os.environ.get("FAIRKM_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    missing = _missing_inputs(
        getattr(args, "data", None),
        getattr(args, "schema", None),
        getattr(args, "assignment", None),
        getattr(args, "reference", None),
    )
    if missing is not None:
        print(f"error: input file not found: {missing}", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except FairKMError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
