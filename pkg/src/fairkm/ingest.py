"""CSV ingestion under a schema.

Categorical feature columns are one-hot encoded, numeric feature columns are
standardized, categorical sensitive columns are dictionary-encoded with the
domain taken from the observed values (sorted lexicographically), and numeric
sensitive columns are always z-scored so the fairness penalty is comparable
across attributes regardless of their original scales. Optionally the rows
are undersampled so every balance class keeps the same number of rows.

CSV dialect: comma-separated, UTF-8, first row header, quoted fields per
RFC 4180. Loading is a pure function of the file contents.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .core import (
    KIND_CATEGORICAL,
    KIND_NUMERIC,
    REPORT_SPEC_VERSION,
    ROLE_BALANCE,
    ROLE_IGNORE,
    ROLE_NONSENSITIVE,
    ROLE_SENSITIVE,
    CategoricalSensitive,
    Dataset,
    FairKMError,
    NumericSensitive,
    Schema,
    SchemaError,
)

logger = logging.getLogger(__name__)

STANDARDIZE_MODES = ("zscore", "minmax", "none")


class IngestError(FairKMError):
    pass


class MissingColumn(IngestError):
    pass


class EmptyDataset(IngestError):
    pass


class MissingCell(IngestError):
    def __init__(self, row: int, col: str):
        self.row = row
        self.col = col
        super().__init__(f"line {row}: missing value in column {col!r}")


class UnparseableNumeric(IngestError):
    def __init__(self, row: int, col: str, value: str):
        self.row = row
        self.col = col
        self.value = value
        super().__init__(f"line {row}: cannot parse {value!r} in numeric column {col!r}")


@dataclass
class IngestOptions:
    standardize: str = "zscore"
    undersample_balance: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.standardize not in STANDARDIZE_MODES:
            raise ValueError(f"unknown standardize mode {self.standardize!r}")


@dataclass
class ColumnEncoding:
    name: str
    role: str
    kind: str
    width: int
    values: list[str] | None


@dataclass
class EncodingReport:
    columns: list[ColumnEncoding]
    n_rows_read: int
    n_rows: int
    undersampled: bool = False
    single_class: bool = False

    def to_json_dict(self) -> dict:
        return {
            "spec_version": REPORT_SPEC_VERSION,
            "n_rows_read": self.n_rows_read,
            "n_rows": self.n_rows,
            "undersampled": self.undersampled,
            "single_class": self.single_class,
            "columns": [
                {
                    "name": c.name,
                    "role": c.role,
                    "kind": c.kind,
                    "width": c.width,
                    "values": c.values,
                }
                for c in self.columns
            ],
        }

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(
            json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )


@dataclass
class UndersampleResult:
    dataset: Dataset
    kept_indices: np.ndarray
    single_class: bool


def _zscore(values: np.ndarray) -> np.ndarray:
    # Constant columns map to all-zeros rather than erroring.
    if len(values) < 2:
        return np.zeros_like(values)
    std = values.std(ddof=1)
    if std == 0:
        return np.zeros_like(values)
    return (values - values.mean()) / std


def _minmax(values: np.ndarray) -> np.ndarray:
    lo, hi = values.min(), values.max()
    if hi == lo:
        return np.zeros_like(values)
    return (values - lo) / (hi - lo)


def _standardize(values: np.ndarray, mode: str) -> np.ndarray:
    if mode == "zscore":
        return _zscore(values)
    if mode == "minmax":
        return _minmax(values)
    return values


def _balanced_indices(labels: Sequence[str], seed: int) -> tuple[np.ndarray, bool]:
    """Kept row indices with exactly min-class-size rows per class, chosen by
    seeded uniform sampling without replacement; ascending, so the relative
    row order is preserved. Second element flags the single-class case."""
    labels = np.asarray(labels, dtype=object)
    classes, counts = np.unique(labels, return_counts=True)
    if len(classes) < 2:
        return np.arange(len(labels), dtype=np.int64), True
    m = int(counts.min())
    rng = np.random.default_rng(seed)
    kept = []
    for cls in classes:  # sorted class order keeps RNG consumption deterministic
        idx = np.flatnonzero(labels == cls)
        if len(idx) > m:
            idx = rng.choice(idx, size=m, replace=False)
        kept.append(idx)
    return np.sort(np.concatenate(kept)).astype(np.int64), False


def undersample(dataset: Dataset, class_labels: Sequence[str], seed: int) -> UndersampleResult:
    """Balance an encoded dataset so every class keeps min-class-size rows.

    With a single observed class there is nothing to balance: the dataset is
    returned unchanged with ``single_class`` set and a warning logged.
    """
    if len(class_labels) != dataset.n_objects:
        raise ValueError("class_labels length must equal n_objects")
    kept, single = _balanced_indices(class_labels, seed)
    if single:
        logger.warning("undersample: only one class present, nothing to balance")
        return UndersampleResult(dataset, kept, True)
    return UndersampleResult(dataset.take(kept), kept, False)


def _read_rows(path: Union[str, Path]) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if not rows:
        raise EmptyDataset(f"{path}: file has no header row")
    header, data = rows[0], rows[1:]
    if not data:
        raise EmptyDataset(f"{path}: no data rows")
    for i, row in enumerate(data):
        if len(row) != len(header):
            raise IngestError(
                f"line {i + 2}: expected {len(header)} fields, found {len(row)}"
            )
    return header, data


def load_csv(
    path: Union[str, Path],
    schema: Schema,
    options: IngestOptions | None = None,
) -> tuple[Dataset, EncodingReport]:
    """Load a CSV under the schema and encode it into a Dataset.

    Raises MissingColumn when the header and the schema name different column
    sets, MissingCell / UnparseableNumeric with the offending file line and
    column, and EmptyDataset for a file without data rows.
    """
    options = options or IngestOptions()
    if options.undersample_balance and schema.balance_column is None:
        raise SchemaError("undersample_balance requires a balance_class column")

    header, data = _read_rows(path)
    if len(set(header)) != len(header):
        raise IngestError(f"{path}: duplicate column names in header")
    schema_names = {c.name for c in schema.columns}
    header_names = set(header)
    missing = sorted(schema_names - header_names)
    extra = sorted(header_names - schema_names)
    if missing or extra:
        parts = []
        if missing:
            parts.append(f"schema columns missing from file: {missing}")
        if extra:
            parts.append(f"file columns not in schema: {extra}")
        raise MissingColumn(f"{path}: " + "; ".join(parts))

    col_idx = {name: header.index(name) for name in header}
    checked = [c for c in schema.columns if c.role != ROLE_IGNORE]
    for i, row in enumerate(data):
        for col in checked:
            if row[col_idx[col.name]] == "":
                raise MissingCell(i + 2, col.name)

    # Parse all numeric cells up front so errors report original file lines,
    # even for rows that undersampling would drop.
    numeric_raw: dict[str, np.ndarray] = {}
    for col in schema.columns:
        if col.role in (ROLE_NONSENSITIVE, ROLE_SENSITIVE) and col.kind == KIND_NUMERIC:
            j = col_idx[col.name]
            parsed = np.empty(len(data))
            for i, row in enumerate(data):
                try:
                    parsed[i] = float(row[j])
                except ValueError:
                    raise UnparseableNumeric(i + 2, col.name, row[j]) from None
            numeric_raw[col.name] = parsed

    n_read = len(data)
    kept = np.arange(n_read, dtype=np.int64)
    single_class = False
    if options.undersample_balance:
        labels = [row[col_idx[schema.balance_column.name]] for row in data]
        kept, single_class = _balanced_indices(labels, options.seed)
        if single_class:
            logger.warning("undersample_balance: only one class present, keeping all rows")

    blocks: list[np.ndarray] = []
    sensitive: list[CategoricalSensitive | NumericSensitive] = []
    entries: list[ColumnEncoding] = []
    n = len(kept)
    for col in schema.columns:
        j = col_idx[col.name]
        if col.role == ROLE_IGNORE:
            entries.append(ColumnEncoding(col.name, col.role, col.kind, 0, None))
            continue
        if col.role == ROLE_BALANCE:
            values = sorted({data[i][j] for i in kept})
            entries.append(ColumnEncoding(col.name, col.role, col.kind, 0, values))
            continue
        if col.kind == KIND_NUMERIC:
            vec = numeric_raw[col.name][kept]
            if col.role == ROLE_NONSENSITIVE:
                blocks.append(_standardize(vec, options.standardize)[:, None])
                entries.append(ColumnEncoding(col.name, col.role, col.kind, 1, None))
            else:
                vec = _zscore(vec)
                sensitive.append(
                    NumericSensitive(col.name, col.weight, vec, float(vec.mean()))
                )
                entries.append(ColumnEncoding(col.name, col.role, col.kind, 0, None))
            continue
        # categorical
        raw = [data[i][j] for i in kept]
        values = sorted(set(raw))
        index = {v: t for t, v in enumerate(values)}
        codes = np.fromiter((index[v] for v in raw), dtype=np.int64, count=n)
        if col.role == ROLE_NONSENSITIVE:
            onehot = np.zeros((n, len(values)))
            onehot[np.arange(n), codes] = 1.0
            blocks.append(onehot)
            entries.append(
                ColumnEncoding(col.name, col.role, col.kind, len(values), values)
            )
        else:
            fractions = np.bincount(codes, minlength=len(values)) / n
            sensitive.append(
                CategoricalSensitive(col.name, col.weight, codes, tuple(values), fractions)
            )
            entries.append(ColumnEncoding(col.name, col.role, col.kind, 0, values))

    features = np.hstack(blocks) if blocks else np.zeros((n, 0))
    dataset = Dataset(features, sensitive)
    dataset.validate()
    report = EncodingReport(
        columns=entries,
        n_rows_read=n_read,
        n_rows=n,
        undersampled=bool(options.undersample_balance and not single_class),
        single_class=single_class,
    )
    return dataset, report
