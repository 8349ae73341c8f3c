"""Shared domain types: column schema, encoded dataset, cluster state, results.

A dataset is split into task-relevant feature columns (encoded into one dense
numeric matrix) and sensitive attributes over which representational fairness
is enforced. Cluster assignments are summarized by per-cluster sufficient
statistics so the optimizer can price candidate moves without rescanning
cluster members.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence, Union

import numpy as np

REPORT_SPEC_VERSION = "1.0"

ROLE_NONSENSITIVE = "nonsensitive"
ROLE_SENSITIVE = "sensitive"
ROLE_BALANCE = "balance_class"
ROLE_IGNORE = "ignore"
ROLES = frozenset({ROLE_NONSENSITIVE, ROLE_SENSITIVE, ROLE_BALANCE, ROLE_IGNORE})

KIND_NUMERIC = "numeric"
KIND_CATEGORICAL = "categorical"
KINDS = frozenset({KIND_NUMERIC, KIND_CATEGORICAL})


class FairKMError(Exception):
    """Base class for errors raised by this package."""


class SchemaError(FairKMError):
    """Schema violates a structural invariant."""


@dataclass(frozen=True)
class ColumnSpec:
    """Declares one CSV column: its role in the run, its kind, and (for
    sensitive columns) its fairness weight."""

    name: str
    role: str
    kind: str
    weight: float = 1.0


@dataclass(frozen=True)
class Schema:
    columns: tuple[ColumnSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate column names in schema")
        for c in self.columns:
            if c.role not in ROLES:
                raise SchemaError(f"column {c.name!r}: unknown role {c.role!r}")
            if c.kind not in KINDS:
                raise SchemaError(f"column {c.name!r}: unknown kind {c.kind!r}")
            if c.weight < 0:
                raise SchemaError(f"column {c.name!r}: negative weight")
            if c.role == ROLE_SENSITIVE and c.weight <= 0:
                raise SchemaError(f"sensitive column {c.name!r}: weight must be > 0")
        if not any(c.role == ROLE_NONSENSITIVE for c in self.columns):
            raise SchemaError("schema needs at least one nonsensitive column")
        n_balance = sum(c.role == ROLE_BALANCE for c in self.columns)
        if n_balance > 1:
            raise SchemaError("schema allows at most one balance_class column")

    @property
    def nonsensitive(self) -> tuple[ColumnSpec, ...]:
        return tuple(c for c in self.columns if c.role == ROLE_NONSENSITIVE)

    @property
    def sensitive(self) -> tuple[ColumnSpec, ...]:
        return tuple(c for c in self.columns if c.role == ROLE_SENSITIVE)

    @property
    def balance_column(self) -> ColumnSpec | None:
        for c in self.columns:
            if c.role == ROLE_BALANCE:
                return c
        return None

    def require_sensitive(self) -> None:
        """Fair runs need at least one sensitive column; baseline-only runs do not."""
        if not self.sensitive:
            raise SchemaError("schema declares no sensitive columns")

    def to_json_dict(self) -> dict:
        return {
            "columns": [
                {"name": c.name, "role": c.role, "kind": c.kind, "weight": c.weight}
                for c in self.columns
            ]
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "Schema":
        try:
            cols = data["columns"]
        except (TypeError, KeyError):
            raise SchemaError("schema JSON must be an object with a 'columns' list")
        specs = []
        for entry in cols:
            try:
                specs.append(
                    ColumnSpec(
                        name=str(entry["name"]),
                        role=str(entry["role"]),
                        kind=str(entry["kind"]),
                        weight=float(entry.get("weight", 1.0)),
                    )
                )
            except KeyError as exc:
                raise SchemaError(f"schema column entry missing field {exc}")
        return cls(tuple(specs))

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(
            json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Schema":
        return cls.from_json_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass
class CategoricalSensitive:
    """A dictionary-encoded sensitive attribute.

    `codes[i]` indexes into `values`; `fractions` is the dataset-level
    distribution over `values`.
    """

    name: str
    weight: float
    codes: np.ndarray
    values: tuple[str, ...]
    fractions: np.ndarray


@dataclass
class NumericSensitive:
    """A numeric sensitive attribute with its dataset-level mean."""

    name: str
    weight: float
    values: np.ndarray
    mean: float


SensitiveAttribute = Union[CategoricalSensitive, NumericSensitive]


@dataclass
class Dataset:
    """Encoded dataset: feature matrix plus per-object sensitive values."""

    features: np.ndarray
    sensitive: list[SensitiveAttribute] = field(default_factory=list)

    @property
    def n_objects(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def categorical_attributes(self) -> list[CategoricalSensitive]:
        return [a for a in self.sensitive if isinstance(a, CategoricalSensitive)]

    @property
    def numeric_attributes(self) -> list[NumericSensitive]:
        return [a for a in self.sensitive if isinstance(a, NumericSensitive)]

    @property
    def dataset_fractions(self) -> dict[str, np.ndarray]:
        return {a.name: a.fractions for a in self.categorical_attributes}

    @property
    def dataset_means(self) -> dict[str, float]:
        return {a.name: a.mean for a in self.numeric_attributes}

    def validate(self) -> None:
        n = self.n_objects
        if self.features.ndim != 2:
            raise ValueError("features must be a 2-d matrix")
        for attr in self.sensitive:
            if len(attr.values if isinstance(attr, NumericSensitive) else attr.codes) != n:
                raise ValueError(f"sensitive attribute {attr.name!r}: length != n_objects")
            if isinstance(attr, CategoricalSensitive):
                v = len(attr.values)
                if attr.fractions.shape != (v,):
                    raise ValueError(f"{attr.name!r}: fractions shape != domain size")
                if np.any(attr.fractions < 0) or abs(attr.fractions.sum() - 1.0) > 1e-12:
                    raise ValueError(f"{attr.name!r}: fractions must be a distribution")
                if attr.codes.size and (attr.codes.min() < 0 or attr.codes.max() >= v):
                    raise ValueError(f"{attr.name!r}: value index out of range")

    def take(self, indices: np.ndarray) -> "Dataset":
        """Row subset with fractions and means recomputed; value dictionaries
        are kept even when a value vanishes from the subset."""
        indices = np.asarray(indices, dtype=np.int64)
        attrs: list[SensitiveAttribute] = []
        for attr in self.sensitive:
            if isinstance(attr, CategoricalSensitive):
                codes = attr.codes[indices]
                counts = np.bincount(codes, minlength=len(attr.values))
                attrs.append(
                    CategoricalSensitive(
                        attr.name, attr.weight, codes, attr.values,
                        counts / max(len(codes), 1),
                    )
                )
            else:
                vals = attr.values[indices]
                attrs.append(
                    NumericSensitive(attr.name, attr.weight, vals, float(vals.mean()))
                )
        return Dataset(self.features[indices], attrs)

    def restrict_sensitive(self, names: Sequence[str]) -> "Dataset":
        """View with only the named sensitive attributes (same features)."""
        known = {a.name for a in self.sensitive}
        missing = [n for n in names if n not in known]
        if missing:
            raise ValueError(f"unknown sensitive attributes: {missing}")
        keep = [a for a in self.sensitive if a.name in set(names)]
        return Dataset(self.features, keep)


@dataclass
class FairKMConfig:
    """Optimizer configuration. ``lambda_ = None`` means the automatic
    setting ``(n_objects / k)**2``, resolved when fitting starts."""

    k: int
    lambda_: float | None = None
    max_iter: int = 30
    seed: int = 0
    init: str = "random_partition"
    order: str = "dataset_order"

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.lambda_ is not None and self.lambda_ < 0:
            raise ValueError("lambda must be nonnegative")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")
        if self.init not in ("random_partition", "kmeanspp"):
            raise ValueError(f"unknown init policy {self.init!r}")
        if self.order not in ("dataset_order", "shuffled_per_iteration"):
            raise ValueError(f"unknown iteration order {self.order!r}")


@dataclass
class ClusterState:
    """Assignment vector plus per-cluster sufficient statistics.

    For cluster c: ``sizes[c]`` member count, ``feature_sums[c]`` the summed
    feature vectors, ``feature_sumsq[c]`` the summed squared norms,
    ``value_counts[i][c]`` the per-value member counts of the i-th categorical
    sensitive attribute, ``numeric_sums[i][c]`` the summed values of the i-th
    numeric sensitive attribute. Counts are exact integers; fractions are
    derived on demand. Mutation is single-writer (the optimizer's sequential
    move loop); instances are otherwise plain values.
    """

    assignment: np.ndarray
    sizes: np.ndarray
    feature_sums: np.ndarray
    feature_sumsq: np.ndarray
    value_counts: list[np.ndarray]
    numeric_sums: list[np.ndarray]

    @property
    def k(self) -> int:
        return len(self.sizes)

    @classmethod
    def from_assignment(cls, dataset: Dataset, assignment: np.ndarray, k: int) -> "ClusterState":
        assignment = np.asarray(assignment, dtype=np.int64).copy()
        n = dataset.n_objects
        if assignment.shape != (n,):
            raise ValueError("assignment length must equal n_objects")
        if n and (assignment.min() < 0 or assignment.max() >= k):
            raise ValueError("assignment contains a cluster id outside [0, k)")
        sizes = np.bincount(assignment, minlength=k).astype(np.int64)
        feature_sums = np.zeros((k, dataset.n_features))
        np.add.at(feature_sums, assignment, dataset.features)
        feature_sumsq = np.zeros(k)
        np.add.at(feature_sumsq, assignment, (dataset.features ** 2).sum(axis=1))
        value_counts = []
        for attr in dataset.categorical_attributes:
            counts = np.zeros((k, len(attr.values)), dtype=np.int64)
            np.add.at(counts, (assignment, attr.codes), 1)
            value_counts.append(counts)
        numeric_sums = []
        for attr in dataset.numeric_attributes:
            sums = np.zeros(k)
            np.add.at(sums, assignment, attr.values)
            numeric_sums.append(sums)
        return cls(assignment, sizes, feature_sums, feature_sumsq, value_counts, numeric_sums)

    def centroid(self, c: int) -> np.ndarray:
        if self.sizes[c] == 0:
            raise ValueError(f"cluster {c} is empty and has no prototype")
        return self.feature_sums[c] / self.sizes[c]

    def copy(self) -> "ClusterState":
        return ClusterState(
            self.assignment.copy(),
            self.sizes.copy(),
            self.feature_sums.copy(),
            self.feature_sumsq.copy(),
            [c.copy() for c in self.value_counts],
            [s.copy() for s in self.numeric_sums],
        )


def validate_state(dataset: Dataset, state: ClusterState) -> list[str]:
    """Check every maintained statistic against a full recomputation from the
    assignment vector. Returns violation descriptions; empty list means the
    state is consistent. Violations are data, not errors.
    """
    problems: list[str] = []
    n = dataset.n_objects
    if state.assignment.shape != (n,):
        return [f"assignment length {state.assignment.shape} does not match n_objects {n}"]
    k = state.k
    if n and (state.assignment.min() < 0 or state.assignment.max() >= k):
        return [f"assignment contains a cluster id outside [0, {k})"]
    fresh = ClusterState.from_assignment(dataset, state.assignment, k)

    for c in np.flatnonzero(state.sizes != fresh.sizes):
        problems.append(f"cluster {c}: size {state.sizes[c]} != recomputed {fresh.sizes[c]}")
    if state.feature_sums.shape != fresh.feature_sums.shape:
        problems.append("feature_sums has wrong shape")
    else:
        bad = np.abs(state.feature_sums - fresh.feature_sums).max(axis=1) > 1e-9
        for c in np.flatnonzero(bad):
            problems.append(f"cluster {c}: feature sums drifted from recomputation")
    bad = np.abs(state.feature_sumsq - fresh.feature_sumsq) > 1e-9
    for c in np.flatnonzero(bad):
        problems.append(f"cluster {c}: squared-norm sum drifted from recomputation")

    cats = dataset.categorical_attributes
    if len(state.value_counts) != len(cats):
        problems.append("value_counts does not cover every categorical sensitive attribute")
    else:
        for attr, got, want in zip(cats, state.value_counts, fresh.value_counts):
            for c, v in zip(*np.nonzero(got != want)):
                problems.append(
                    f"cluster {c}: count for {attr.name}={attr.values[v]} "
                    f"is {got[c, v]}, recomputed {want[c, v]}"
                )
    nums = dataset.numeric_attributes
    if len(state.numeric_sums) != len(nums):
        problems.append("numeric_sums does not cover every numeric sensitive attribute")
    else:
        for attr, got, want in zip(nums, state.numeric_sums, fresh.numeric_sums):
            for c in np.flatnonzero(np.abs(got - want) > 1e-9):
                problems.append(f"cluster {c}: sum for {attr.name} drifted from recomputation")
    return problems


@dataclass
class ObjectiveBreakdown:
    km_term: float
    fairness_term: float
    total: float


@dataclass
class Clustering:
    """A finished run: assignment, objective breakdown, and convergence info.
    ``lambda_`` is the resolved fairness weight used for ``total``."""

    assignment: np.ndarray
    objective: ObjectiveBreakdown
    iterations_run: int
    converged: bool
    lambda_: float

    def to_json_dict(self) -> dict:
        return {
            "spec_version": REPORT_SPEC_VERSION,
            "n_objects": int(len(self.assignment)),
            "lambda": float(self.lambda_),
            "objective": {
                "km_term": float(self.objective.km_term),
                "fairness_term": float(self.objective.fairness_term),
                "total": float(self.objective.total),
            },
            "iterations_run": int(self.iterations_run),
            "converged": bool(self.converged),
        }


def write_assignment_csv(path: Union[str, Path], assignment: np.ndarray) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["object_id", "cluster"])
        for i, c in enumerate(assignment):
            writer.writerow([i, int(c)])


def read_assignment_csv(path: Union[str, Path]) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["object_id", "cluster"]:
            raise ValueError(f"{path}: expected header object_id,cluster")
        rows = [(int(r[0]), int(r[1])) for r in reader if r]
    rows.sort()
    ids = [r[0] for r in rows]
    if ids != list(range(len(rows))):
        raise ValueError(f"{path}: object ids must be 0..n-1")
    return np.array([r[1] for r in rows], dtype=np.int64)


def save_clustering(clustering: Clustering, csv_path: Union[str, Path],
                    json_path: Union[str, Path]) -> None:
    """Assignment CSV plus a JSON sidecar with the objective breakdown."""
    write_assignment_csv(csv_path, clustering.assignment)
    Path(json_path).write_text(
        json.dumps(clustering.to_json_dict(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )


def load_clustering(csv_path: Union[str, Path], json_path: Union[str, Path]) -> Clustering:
    assignment = read_assignment_csv(csv_path)
    data = json.loads(Path(json_path).read_text(encoding="utf-8"))
    obj = data["objective"]
    return Clustering(
        assignment=assignment,
        objective=ObjectiveBreakdown(obj["km_term"], obj["fairness_term"], obj["total"]),
        iterations_run=int(data["iterations_run"]),
        converged=bool(data["converged"]),
        lambda_=float(data["lambda"]),
    )
