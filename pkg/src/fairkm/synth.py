"""Synthetic dataset builders for tests, demos and desk-scale benchmarks.

``write_word_problem_standin`` emits a CSV/schema pair shaped like the
161-item kinematics word-problem benchmark: 100 numeric feature columns and
5 binary sensitive type columns with the fixed type counts 60/36/15/31/19.
Features are Gaussian blobs whose membership matches the type, so a blind
clustering is maximally unfair on the type attributes.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Mapping, Sequence, Union

import numpy as np

from .core import (
    CategoricalSensitive,
    ColumnSpec,
    Dataset,
    NumericSensitive,
    Schema,
)

WORD_PROBLEM_TYPE_COUNTS = (60, 36, 15, 31, 19)


def make_dataset(
    features: np.ndarray,
    categorical: Mapping[str, Sequence[str]] | None = None,
    numeric: Mapping[str, Sequence[float]] | None = None,
    weights: Mapping[str, float] | None = None,
) -> Dataset:
    """Build an encoded Dataset directly from arrays. Categorical labels are
    dictionary-encoded in lexicographic order, like the CSV loader does."""
    features = np.asarray(features, dtype=float)
    weights = dict(weights or {})
    sensitive: list[CategoricalSensitive | NumericSensitive] = []
    for name, labels in (categorical or {}).items():
        labels = [str(v) for v in labels]
        values = sorted(set(labels))
        index = {v: i for i, v in enumerate(values)}
        codes = np.fromiter((index[v] for v in labels), dtype=np.int64, count=len(labels))
        fractions = np.bincount(codes, minlength=len(values)) / len(labels)
        sensitive.append(
            CategoricalSensitive(name, weights.get(name, 1.0), codes, tuple(values), fractions)
        )
    for name, vals in (numeric or {}).items():
        vals = np.asarray(vals, dtype=float)
        sensitive.append(NumericSensitive(name, weights.get(name, 1.0), vals, float(vals.mean())))
    ds = Dataset(features, sensitive)
    ds.validate()
    return ds


def two_blob_dataset(
    n: int = 400,
    d: int = 2,
    separation: float = 6.0,
    seed: int = 0,
) -> Dataset:
    """Two Gaussian blobs whose membership is perfectly correlated with a
    binary sensitive attribute ``group``."""
    rng = np.random.default_rng(seed)
    half = n // 2
    blob = np.concatenate([np.zeros(half, dtype=int), np.ones(n - half, dtype=int)])
    features = rng.normal(size=(n, d))
    features[:, 0] += separation * blob
    order = rng.permutation(n)
    return make_dataset(
        features[order],
        categorical={"group": ["ab"[b] for b in blob[order]]},
    )


def word_problem_arrays(
    seed: int = 0,
    separation: float = 0.35,
    noise: float = 0.095,
    d: int = 100,
    type_counts: Sequence[int] = WORD_PROBLEM_TYPE_COUNTS,
) -> tuple[np.ndarray, np.ndarray]:
    """Feature matrix and type ids for the word-problem stand-in: one blob
    per type, offset along its own axis by ``separation``.

    The defaults mimic document-embedding vectors: per-dimension noise of
    about 0.1 puts the within-blob squared distance near 0.9 per point, so a
    blind 5-clustering scores a few-hundred total, the regime where the
    automatic fairness weight is meaningful.
    """
    rng = np.random.default_rng(seed)
    type_ids = np.concatenate(
        [np.full(c, t, dtype=np.int64) for t, c in enumerate(type_counts)]
    )
    order = rng.permutation(len(type_ids))
    type_ids = type_ids[order]
    features = rng.normal(scale=noise, size=(len(type_ids), d))
    for t in range(len(type_counts)):
        features[type_ids == t, t] += separation
    return features, type_ids


def word_problem_dataset(seed: int = 0, separation: float = 0.35) -> Dataset:
    features, type_ids = word_problem_arrays(seed=seed, separation=separation)
    categorical = {
        f"type_{t + 1}": [str(int(tid == t)) for tid in type_ids]
        for t in range(len(WORD_PROBLEM_TYPE_COUNTS))
    }
    return make_dataset(features, categorical=categorical)


def word_problem_schema(d: int = 100, n_types: int = 5) -> Schema:
    cols = [ColumnSpec(f"f{j}", "nonsensitive", "numeric") for j in range(d)]
    cols += [ColumnSpec(f"type_{t + 1}", "sensitive", "categorical") for t in range(n_types)]
    return Schema(tuple(cols))


def write_word_problem_standin(
    out_dir: Union[str, Path],
    seed: int = 0,
    separation: float = 3.0,
) -> tuple[Path, Path]:
    """Write the stand-in CSV and its schema JSON; returns both paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    features, type_ids = word_problem_arrays(seed=seed, separation=separation)
    d = features.shape[1]
    n_types = len(WORD_PROBLEM_TYPE_COUNTS)
    csv_path = out_dir / "word_problems.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"f{j}" for j in range(d)] + [f"type_{t + 1}" for t in range(n_types)])
        for i in range(len(type_ids)):
            row = [repr(float(v)) for v in features[i]]
            row += [str(int(type_ids[i] == t)) for t in range(n_types)]
            writer.writerow(row)
    schema_path = out_dir / "word_problems_schema.json"
    word_problem_schema(d, n_types).save(schema_path)
    return csv_path, schema_path


def main(argv: list[str] | None = None) -> int:
    import argparse

    parser = argparse.ArgumentParser(
        description="Generate the word-problem stand-in dataset (CSV + schema)."
    )
    parser.add_argument("out_dir", help="directory for word_problems.csv and schema")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--separation", type=float, default=3.0)
    args = parser.parse_args(argv)
    csv_path, schema_path = write_word_problem_standin(
        args.out_dir, seed=args.seed, separation=args.separation
    )
    print(f"wrote {csv_path}")
    print(f"wrote {schema_path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
