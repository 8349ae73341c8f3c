"""Evaluation metrics: clustering quality over the features, representational
fairness over the sensitive attributes.

Quality: CO (k-means objective recomputed from the assignment), SH
(silhouette, plain Euclidean), and two deviations from a reference
clustering: DevC (min-cost matching between the centroid sets) and DevO
(fraction of object pairs whose same/different-cluster verdicts disagree).

Fairness, per categorical sensitive attribute: each non-empty cluster's value
distribution is compared against the dataset distribution with Euclidean
distance and 1-d Wasserstein distance; AE/AW are cluster-cardinality weighted
averages, ME/MW the maxima over clusters. All metrics are pure functions of
their inputs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import REPORT_SPEC_VERSION, Dataset, FairKMError

DEFAULT_SAMPLE_CAP = 5000


class SingleCluster(FairKMError):
    """Silhouette needs at least two non-empty clusters."""


class LengthMismatch(FairKMError):
    pass


class NoCategoricalSensitive(FairKMError):
    pass


@dataclass
class FairnessStats:
    ae: float
    aw: float
    me: float
    mw: float

    def to_json_dict(self) -> dict:
        return {"ae": self.ae, "aw": self.aw, "me": self.me, "mw": self.mw}


@dataclass
class MetricsReport:
    co: float
    sh: float
    dev_c: float | None
    dev_o: float | None
    per_attribute: dict[str, FairnessStats] = field(default_factory=dict)
    mean_across_attributes: FairnessStats | None = None

    def to_json_dict(self) -> dict:
        return {
            "spec_version": REPORT_SPEC_VERSION,
            "co": self.co,
            "sh": self.sh,
            "dev_c": self.dev_c,
            "dev_o": self.dev_o,
            "per_attribute": {
                name: stats.to_json_dict() for name, stats in self.per_attribute.items()
            },
            "mean_across_attributes": (
                None
                if self.mean_across_attributes is None
                else self.mean_across_attributes.to_json_dict()
            ),
        }

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(
            json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )


def clustering_objective(dataset: Dataset, assignment: np.ndarray) -> float:
    """Total squared distance to the assignment's own centroids."""
    assignment = np.asarray(assignment, dtype=np.int64)
    X = dataset.features
    k = int(assignment.max()) + 1 if len(assignment) else 0
    sizes = np.bincount(assignment, minlength=k)
    sums = np.zeros((k, X.shape[1]))
    np.add.at(sums, assignment, X)
    sq = np.zeros(k)
    np.add.at(sq, assignment, (X ** 2).sum(axis=1))
    nonempty = sizes > 0
    return float(np.sum(sq[nonempty] - (sums[nonempty] ** 2).sum(axis=1) / sizes[nonempty]))


def centroids_of(dataset: Dataset, assignment: np.ndarray) -> np.ndarray:
    """Centroids of the non-empty clusters, in ascending cluster-id order."""
    assignment = np.asarray(assignment, dtype=np.int64)
    k = int(assignment.max()) + 1
    sizes = np.bincount(assignment, minlength=k)
    sums = np.zeros((k, dataset.n_features))
    np.add.at(sums, assignment, dataset.features)
    nonempty = sizes > 0
    return sums[nonempty] / sizes[nonempty][:, None]


def silhouette(
    dataset: Dataset,
    assignment: np.ndarray,
    sample_cap: int = DEFAULT_SAMPLE_CAP,
    seed: int = 0,
) -> float:
    """Mean silhouette with plain Euclidean distance over the features.

    Exact when n <= sample_cap; otherwise a seeded uniform sample of
    sample_cap points is scored (each against the full dataset). Points in
    singleton clusters score 0.
    """
    from scipy.spatial.distance import cdist

    assignment = np.asarray(assignment, dtype=np.int64)
    X = dataset.features
    n = len(assignment)
    k = int(assignment.max()) + 1
    sizes = np.bincount(assignment, minlength=k)
    if int((sizes > 0).sum()) < 2:
        raise SingleCluster("silhouette needs at least two non-empty clusters")

    if n > sample_cap:
        rng = np.random.default_rng(seed)
        points = np.sort(rng.choice(n, size=sample_cap, replace=False))
    else:
        points = np.arange(n)

    membership = np.zeros((n, k))
    membership[np.arange(n), assignment] = 1.0

    scores = np.empty(len(points))
    chunk = max(1, (1 << 22) // max(n, 1))
    for start in range(0, len(points), chunk):
        rows = points[start : start + chunk]
        dist = cdist(X[rows], X)
        cluster_sums = dist @ membership
        own = assignment[rows]
        own_size = sizes[own]
        # own-cluster sum includes d(i, i) = 0, so dividing by size-1 is the
        # mean distance to the *other* members
        with np.errstate(invalid="ignore", divide="ignore"):
            a = cluster_sums[np.arange(len(rows)), own] / np.maximum(own_size - 1, 1)
            means = cluster_sums / np.where(sizes > 0, sizes, np.inf)
        means[np.arange(len(rows)), own] = np.inf
        b = means.min(axis=1)
        denom = np.maximum(a, b)
        s = np.where(denom > 0, (b - a) / np.where(denom > 0, denom, 1.0), 0.0)
        s = np.where(own_size == 1, 0.0, s)
        scores[start : start + chunk] = s
    return float(scores.mean())


def dev_c(centroids_a: np.ndarray, centroids_b: np.ndarray) -> float:
    """Deviation between two centroid sets: total Euclidean distance of a
    minimum-cost matching (unmatched centroids of the larger set cost 0).
    Identical sets therefore score exactly 0."""
    a = np.asarray(centroids_a, dtype=float)
    b = np.asarray(centroids_b, dtype=float)
    if len(a) == 0 or len(b) == 0:
        raise ValueError("centroid sets must be non-empty")
    cost = np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2))
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].sum())


def dev_c_dot(centroids_a: np.ndarray, centroids_b: np.ndarray) -> float:
    """Raw cross-clustering dot-product sum over all centroid pairs. Kept as
    a separate, literal reading of 'sum of pair-wise dot-products'; unlike
    dev_c it is not 0 for identical sets."""
    a = np.asarray(centroids_a, dtype=float)
    b = np.asarray(centroids_b, dtype=float)
    return float(a.sum(axis=0) @ b.sum(axis=0))


def _same_pairs(counts: np.ndarray) -> int:
    counts = counts.astype(np.int64)
    return int((counts * (counts - 1) // 2).sum())


def dev_o(assignment_a: np.ndarray, assignment_b: np.ndarray) -> float:
    """Fraction of unordered object pairs whose same-cluster verdicts
    disagree between the two assignments. Computed from the contingency
    table in O(n + k_a * k_b)."""
    a = np.asarray(assignment_a, dtype=np.int64)
    b = np.asarray(assignment_b, dtype=np.int64)
    if a.shape != b.shape:
        raise LengthMismatch(f"assignment lengths differ: {a.shape} vs {b.shape}")
    n = len(a)
    if n < 2:
        return 0.0
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    table = np.zeros((ia.max() + 1, ib.max() + 1), dtype=np.int64)
    np.add.at(table, (ia, ib), 1)
    same_a = _same_pairs(table.sum(axis=1))
    same_b = _same_pairs(table.sum(axis=0))
    same_both = _same_pairs(table)
    disagreements = (same_a - same_both) + (same_b - same_both)
    return disagreements / (n * (n - 1) // 2)


def _distribution_distances(dist: np.ndarray, ref: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Euclidean and 1-d Wasserstein distances of each row of ``dist`` to
    ``ref``. W1 treats the domain as dictionary-ordered with unit spacing:
    the summed absolute CDF differences over the first V-1 positions."""
    diff = dist - ref
    ed = np.sqrt((diff ** 2).sum(axis=1))
    w1 = np.abs(np.cumsum(diff, axis=1)[:, :-1]).sum(axis=1)
    return ed, w1


def fairness_metrics(
    dataset: Dataset, assignment: np.ndarray
) -> tuple[dict[str, FairnessStats], FairnessStats]:
    """Per-attribute fairness stats and their unweighted mean across
    attributes. Empty clusters are excluded from the averages and maxima."""
    cats = dataset.categorical_attributes
    if not cats:
        raise NoCategoricalSensitive("no categorical sensitive attributes in dataset")
    assignment = np.asarray(assignment, dtype=np.int64)
    k = int(assignment.max()) + 1
    sizes = np.bincount(assignment, minlength=k)
    nonempty = sizes > 0
    cluster_sizes = sizes[nonempty].astype(float)

    per: dict[str, FairnessStats] = {}
    for attr in cats:
        counts = np.zeros((k, len(attr.values)), dtype=np.int64)
        np.add.at(counts, (assignment, attr.codes), 1)
        dist = counts[nonempty] / cluster_sizes[:, None]
        ed, w1 = _distribution_distances(dist, attr.fractions)
        total = cluster_sizes.sum()
        per[attr.name] = FairnessStats(
            ae=float((cluster_sizes * ed).sum() / total),
            aw=float((cluster_sizes * w1).sum() / total),
            me=float(ed.max()),
            mw=float(w1.max()),
        )
    stats = list(per.values())
    mean = FairnessStats(
        ae=float(np.mean([s.ae for s in stats])),
        aw=float(np.mean([s.aw for s in stats])),
        me=float(np.mean([s.me for s in stats])),
        mw=float(np.mean([s.mw for s in stats])),
    )
    return per, mean


def compute_report(
    dataset: Dataset,
    assignment: np.ndarray,
    reference: np.ndarray | None = None,
    sample_cap: int = DEFAULT_SAMPLE_CAP,
    seed: int = 0,
) -> MetricsReport:
    """Full metric bundle for one clustering. ``reference`` is the blind
    baseline assignment for DevC/DevO; without one those fields are None.
    Silhouette of a single-cluster result is reported as nan."""
    co = clustering_objective(dataset, assignment)
    try:
        sh = silhouette(dataset, assignment, sample_cap=sample_cap, seed=seed)
    except SingleCluster:
        sh = float("nan")
    dc = do = None
    if reference is not None:
        dc = dev_c(centroids_of(dataset, assignment), centroids_of(dataset, reference))
        do = dev_o(assignment, reference)
    try:
        per, mean = fairness_metrics(dataset, assignment)
    except NoCategoricalSensitive:
        per, mean = {}, None
    return MetricsReport(
        co=co, sh=sh, dev_c=dc, dev_o=do,
        per_attribute=per, mean_across_attributes=mean,
    )
