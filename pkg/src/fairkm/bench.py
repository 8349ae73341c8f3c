"""Multi-restart benchmark harness and lambda sweep.

Protocol: every method x k combination is fitted once per seed in
``seed_base .. seed_base + restarts - 1``; metrics are computed per run, with
the deviation metrics measured against the blind k-means run of the *same*
seed; the summary takes the mean across restarts. Improvement columns for
the fair methods are ``(blind - fair) / blind * 100`` on the fairness
metrics, the blind k-means baseline being the reference.

Outputs per bench: a per-run CSV, a per-k summary CSV shaped rows=metrics /
columns=methods, a JSON summary, and PNG comparison figures next to the
delimited files. The sweep emits a metric-vs-lambda CSV plus SVG/PNG line
charts per metric family. Identical specs and seeds produce byte-identical
files; restarts may run in parallel (``jobs``) without affecting output.
"""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from .baseline import kmeans_fit
from .core import (
    REPORT_SPEC_VERSION,
    Clustering,
    Dataset,
    FairKMConfig,
    FairKMError,
    Schema,
)
from .engine import fit, resolve_lambda
from .ingest import IngestOptions, load_csv
from .metrics import DEFAULT_SAMPLE_CAP, MetricsReport, compute_report
from . import plots

logger = logging.getLogger(__name__)

METHOD_BLIND = "kmeans_blind"
METHOD_FAIR_ALL = "fairkm_all"
METHOD_FAIR_SINGLE = "fairkm_single"

QUALITY_METRICS = ("co", "sh", "dev_c", "dev_o")
FAIRNESS_SUFFIXES = ("ae", "aw", "me", "mw")


class BenchError(FairKMError):
    pass


@dataclass
class BenchSpec:
    data: Union[str, Path]
    schema: Union[str, Path]
    ks: tuple[int, ...] = (5,)
    restarts: int = 100
    seed_base: int = 0
    methods: tuple[str, ...] = (METHOD_BLIND, METHOD_FAIR_ALL)
    lambda_: float | None = None
    max_iter: int = 30
    init: str = "random_partition"
    order: str = "dataset_order"
    jobs: int = 1
    out_dir: Union[str, Path] = "bench_out"
    standardize: str = "zscore"
    undersample: bool = False
    sample_cap: int = DEFAULT_SAMPLE_CAP

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if not self.ks:
            raise ValueError("need at least one k")
        if not self.methods:
            raise ValueError("need at least one method")
        for m in self.methods:
            if m in (METHOD_BLIND, METHOD_FAIR_ALL):
                continue
            if m.startswith(METHOD_FAIR_SINGLE + ":") and m.split(":", 1)[1]:
                continue
            raise ValueError(f"unknown method {m!r}")

    @property
    def seeds(self) -> list[int]:
        return [self.seed_base + i for i in range(self.restarts)]


@dataclass
class BenchResult:
    rows: list[dict]
    summaries: dict[int, dict[str, dict[str, float]]]
    improvements: dict[int, dict[str, dict[str, float]]]
    attr_names: list[str]
    out_dir: Path
    n_ok: int
    n_failed: int


def metric_columns(attr_names: Sequence[str]) -> list[str]:
    cols = list(QUALITY_METRICS)
    for prefix in ("mean",) + tuple(attr_names):
        cols += [f"{prefix}_{s}" for s in FAIRNESS_SUFFIXES]
    return cols


RUN_INFO_COLUMNS = [
    "method", "k", "seed", "status", "error", "lambda", "iterations",
    "converged", "objective_km", "objective_fairness", "objective_total",
]


def _fmt(value) -> str:
    if value is None or value == "":
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def _report_metrics(report: MetricsReport, attr_names: Sequence[str]) -> dict[str, float]:
    out: dict[str, float] = {
        "co": report.co,
        "sh": report.sh,
        "dev_c": report.dev_c,
        "dev_o": report.dev_o,
    }
    mean = report.mean_across_attributes
    if mean is not None:
        for s in FAIRNESS_SUFFIXES:
            out[f"mean_{s}"] = getattr(mean, s)
    for name in attr_names:
        stats = report.per_attribute.get(name)
        if stats is not None:
            for s in FAIRNESS_SUFFIXES:
                out[f"{name}_{s}"] = getattr(stats, s)
    return out


# Worker context for parallel restarts: the dataset (and its per-method
# sensitive views) is shipped once per worker instead of once per task.
_CTX: dict = {}


def _init_worker(dataset: Dataset, views: dict[str, Dataset]) -> None:
    _CTX["dataset"] = dataset
    _CTX["views"] = views


def _pool_map(jobs: int, fn, items: list, dataset: Dataset, views: dict[str, Dataset]) -> list:
    if jobs <= 1:
        _init_worker(dataset, views)
        return [fn(it) for it in items]
    with ProcessPoolExecutor(
        max_workers=jobs, initializer=_init_worker, initargs=(dataset, views)
    ) as ex:
        return list(ex.map(fn, items))


def _reference_task(args) -> Clustering:
    k, seed, max_iter, init = args
    return kmeans_fit(_CTX["dataset"], k, seed, max_iter=max_iter, init=init)


def _method_task(args) -> dict:
    (method, k, seed, lam, max_iter, init, order, sample_cap, ref_assignment,
     attr_names) = args
    dataset: Dataset = _CTX["dataset"]
    row = {"method": method, "k": k, "seed": seed, "status": "ok", "error": ""}
    try:
        if method == METHOD_BLIND:
            clustering = kmeans_fit(dataset, k, seed, max_iter=max_iter, init=init)
        else:
            view = _CTX["views"][method]
            config = FairKMConfig(
                k=k, lambda_=lam, max_iter=max_iter, seed=seed, init=init, order=order
            )
            clustering = fit(view, config)
        report = compute_report(
            dataset, clustering.assignment, reference=ref_assignment,
            sample_cap=sample_cap,
        )
        row.update(
            {
                "lambda": clustering.lambda_,
                "iterations": clustering.iterations_run,
                "converged": clustering.converged,
                "objective_km": clustering.objective.km_term,
                "objective_fairness": clustering.objective.fairness_term,
                "objective_total": clustering.objective.total,
            }
        )
        row.update(_report_metrics(report, attr_names))
    except Exception as exc:  # recorded per run; the bench carries on
        row["status"] = "error"
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def _sensitive_views(dataset: Dataset, methods: Sequence[str]) -> dict[str, Dataset]:
    views: dict[str, Dataset] = {}
    for m in methods:
        if m == METHOD_FAIR_ALL:
            views[m] = dataset
        elif m.startswith(METHOD_FAIR_SINGLE + ":"):
            views[m] = dataset.restrict_sensitive([m.split(":", 1)[1]])
    return views


def _validate_methods(spec: BenchSpec, schema: Schema) -> None:
    sensitive_names = {c.name for c in schema.sensitive}
    fair = [m for m in spec.methods if m != METHOD_BLIND]
    if fair and not sensitive_names:
        raise BenchError("fair methods need at least one sensitive column in the schema")
    for m in fair:
        if m.startswith(METHOD_FAIR_SINGLE + ":"):
            attr = m.split(":", 1)[1]
            if attr not in sensitive_names:
                raise BenchError(f"method {m!r}: {attr!r} is not a sensitive column")


def _load(spec: BenchSpec):
    schema = Schema.load(spec.schema)
    options = IngestOptions(
        standardize=spec.standardize,
        undersample_balance=spec.undersample,
        seed=spec.seed_base,
    )
    dataset, report = load_csv(spec.data, schema, options)
    return schema, dataset, report


def _bench_rows(
    dataset: Dataset,
    spec: BenchSpec,
    methods: Sequence[str],
    k: int,
    lam_values: dict[str, float | None],
) -> list[dict]:
    views = _sensitive_views(dataset, methods)
    attr_names = [a.name for a in dataset.categorical_attributes]
    refs = _pool_map(
        spec.jobs,
        _reference_task,
        [(k, seed, spec.max_iter, spec.init) for seed in spec.seeds],
        dataset,
        views,
    )
    tasks = []
    for method in methods:
        for i, seed in enumerate(spec.seeds):
            tasks.append(
                (
                    method, k, seed, lam_values.get(method), spec.max_iter,
                    spec.init, spec.order, spec.sample_cap, refs[i].assignment,
                    attr_names,
                )
            )
    return _pool_map(spec.jobs, _method_task, tasks, dataset, views)


def _aggregate(rows: list[dict], columns: Sequence[str]) -> dict[str, float]:
    out = {}
    for col in columns:
        values = [r[col] for r in rows if r["status"] == "ok" and col in r]
        if values:
            out[col] = float(np.mean(values))
    return out


def _improvements(
    summary: dict[str, dict[str, float]], methods: Sequence[str], columns: Sequence[str]
) -> dict[str, dict[str, float]]:
    """(blind - fair) / blind * 100 on the fairness metric columns."""
    blind = summary.get(METHOD_BLIND, {})
    out: dict[str, dict[str, float]] = {}
    fairness_cols = [c for c in columns if c.rsplit("_", 1)[-1] in FAIRNESS_SUFFIXES]
    for m in methods:
        if m == METHOD_BLIND or m not in summary:
            continue
        impr = {}
        for col in fairness_cols:
            base = blind.get(col)
            val = summary[m].get(col)
            if base is not None and val is not None and base != 0:
                impr[col] = (base - val) / base * 100.0
        out[m] = impr
    return out


def _write_runs_csv(path: Path, rows: list[dict], attr_names: Sequence[str]) -> None:
    columns = RUN_INFO_COLUMNS + metric_columns(attr_names)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row.get(c, "")) for c in columns])


def _write_summary_csv(
    path: Path,
    summary: dict[str, dict[str, float]],
    improvements: dict[str, dict[str, float]],
    methods: Sequence[str],
    columns: Sequence[str],
) -> None:
    header = ["metric"]
    for m in methods:
        header.append(m)
        if m in improvements:
            header.append(f"{m}_impr_pct")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for col in columns:
            row = [col]
            for m in methods:
                row.append(_fmt(summary.get(m, {}).get(col, "")))
                if m in improvements:
                    row.append(_fmt(improvements[m].get(col, "")))
            writer.writerow(row)


def _bench_figures(
    fig_dir: Path,
    k: int,
    summary: dict[str, dict[str, float]],
    methods: Sequence[str],
) -> None:
    fig_dir.mkdir(parents=True, exist_ok=True)
    present = [m for m in methods if m in summary]
    fairness = {
        label.upper(): [summary[m].get(f"mean_{label}", float("nan")) for m in present]
        for label in FAIRNESS_SUFFIXES
    }
    plots.grouped_bar_png(
        fig_dir / f"fairness_k{k}.png",
        list(fairness.keys()),
        {m: [fairness[lab][i] for lab in fairness] for i, m in enumerate(present)},
        title=f"Fairness deviations, mean across attributes (k={k})",
        y_label="deviation (lower is fairer)",
    )
    quality = {
        name.upper(): {m: summary[m].get(name, float("nan")) for m in present}
        for name in QUALITY_METRICS
    }
    plots.per_metric_bars_png(
        fig_dir / f"quality_k{k}.png", quality,
        title=f"Clustering quality (k={k})",
    )


def run_bench(spec: BenchSpec) -> BenchResult:
    """Execute the full benchmark and write all report files.

    The blind k-means method is always run (it provides the seed-matched
    deviation references and the improvement baseline) and is reported
    alongside the requested methods.
    """
    schema, dataset, encoding_report = _load(spec)
    _validate_methods(spec, schema)
    methods = list(spec.methods)
    if METHOD_BLIND not in methods:
        methods = [METHOD_BLIND] + methods

    lam_values = {m: spec.lambda_ for m in methods if m != METHOD_BLIND}
    attr_names = [a.name for a in dataset.categorical_attributes]
    columns = metric_columns(attr_names)

    out_dir = Path(spec.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    encoding_report.save(out_dir / "encoding.json")

    all_rows: list[dict] = []
    summaries: dict[int, dict[str, dict[str, float]]] = {}
    improvements: dict[int, dict[str, dict[str, float]]] = {}
    for k in spec.ks:
        rows = _bench_rows(dataset, spec, methods, k, lam_values)
        all_rows.extend(rows)
        summary = {
            m: _aggregate([r for r in rows if r["method"] == m], columns)
            for m in methods
        }
        summaries[k] = summary
        improvements[k] = _improvements(summary, methods, columns)
        _write_summary_csv(
            out_dir / f"summary_k{k}.csv", summary, improvements[k], methods, columns
        )
        _bench_figures(out_dir / "figures", k, summary, methods)

    _write_runs_csv(out_dir / "runs.csv", all_rows, attr_names)
    n_ok = sum(r["status"] == "ok" for r in all_rows)
    payload = {
        "spec_version": REPORT_SPEC_VERSION,
        "impr_baseline": METHOD_BLIND,
        "impr_formula": "(baseline - fair) / baseline * 100",
        "restarts": spec.restarts,
        "seed_base": spec.seed_base,
        "methods": methods,
        "n_runs": len(all_rows),
        "n_failed": len(all_rows) - n_ok,
        "ks": {
            str(k): {
                "means": summaries[k],
                "impr_pct": improvements[k],
            }
            for k in spec.ks
        },
    }
    (out_dir / "summary.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    if n_ok == 0:
        raise BenchError("all benchmark runs failed; see runs.csv for details")
    return BenchResult(
        rows=all_rows,
        summaries=summaries,
        improvements=improvements,
        attr_names=attr_names,
        out_dir=out_dir,
        n_ok=n_ok,
        n_failed=len(all_rows) - n_ok,
    )


@dataclass
class SweepResult:
    rows: list[dict]
    lambdas: list[float]
    out_dir: Path


def run_sweep(
    data: Union[str, Path],
    schema_path: Union[str, Path],
    lambdas: Sequence[float],
    k: int = 5,
    restarts: int = 10,
    seed_base: int = 0,
    max_iter: int = 30,
    init: str = "random_partition",
    order: str = "dataset_order",
    jobs: int = 1,
    out_dir: Union[str, Path] = "sweep_out",
    standardize: str = "zscore",
    undersample: bool = False,
    sample_cap: int = DEFAULT_SAMPLE_CAP,
) -> SweepResult:
    """Run the all-attributes fair method once per lambda over a fixed seed
    set; write the metric-vs-lambda table and one chart per metric family."""
    lambdas = [float(v) for v in lambdas]
    if len(lambdas) < 2:
        raise ValueError("lambda sweep needs a grid of at least 2 values")
    spec = BenchSpec(
        data=data, schema=schema_path, ks=(k,), restarts=restarts,
        seed_base=seed_base, methods=(METHOD_FAIR_ALL,), max_iter=max_iter,
        init=init, order=order, jobs=jobs, out_dir=out_dir,
        standardize=standardize, undersample=undersample, sample_cap=sample_cap,
    )
    schema, dataset, _ = _load(spec)
    _validate_methods(spec, schema)
    attr_names = [a.name for a in dataset.categorical_attributes]
    columns = metric_columns(attr_names)
    views = _sensitive_views(dataset, [METHOD_FAIR_ALL])

    # blind references do not depend on lambda, so compute them once
    refs = _pool_map(
        jobs,
        _reference_task,
        [(k, seed, max_iter, init) for seed in spec.seeds],
        dataset,
        views,
    )
    out_rows: list[dict] = []
    for lam in lambdas:
        tasks = [
            (
                METHOD_FAIR_ALL, k, seed, lam, max_iter, init, order,
                sample_cap, refs[i].assignment, attr_names,
            )
            for i, seed in enumerate(spec.seeds)
        ]
        rows = _pool_map(jobs, _method_task, tasks, dataset, views)
        failed = [r for r in rows if r["status"] != "ok"]
        if len(failed) == len(rows):
            raise BenchError(f"all runs failed at lambda={lam}")
        agg = _aggregate(rows, columns)
        agg["lambda"] = lam
        out_rows.append(agg)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_columns = ["lambda"] + columns
    with open(out / "sweep.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(csv_columns)
        for row in out_rows:
            writer.writerow([_fmt(row.get(c, "")) for c in csv_columns])
    (out / "sweep.json").write_text(
        json.dumps(
            {"spec_version": REPORT_SPEC_VERSION, "k": k, "restarts": restarts,
             "seed_base": seed_base, "rows": out_rows},
            indent=2, sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )

    families = [
        ("sweep_quality", "Quality vs lambda", {"CO": "co", "SH": "sh"}),
        ("sweep_deviation", "Deviation from blind k-means vs lambda",
         {"DevC": "dev_c", "DevO": "dev_o"}),
        ("sweep_fairness", "Fairness deviations vs lambda",
         {s.upper(): f"mean_{s}" for s in FAIRNESS_SUFFIXES}),
    ]
    for stem, title, mapping in families:
        series = {
            label: [row.get(col, float("nan")) for row in out_rows]
            for label, col in mapping.items()
        }
        plots.line_chart_svg(out / f"{stem}.svg", lambdas, series, title, "lambda")
        plots.line_chart_png(out / f"{stem}.png", lambdas, series, title, "lambda")
    return SweepResult(rows=out_rows, lambdas=lambdas, out_dir=out)
