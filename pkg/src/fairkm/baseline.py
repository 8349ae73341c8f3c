"""Sensitive-blind k-means baseline.

Plain Lloyd iterations over the feature matrix only; sensitive attributes are
never read, so the result is invariant to any change of sensitive values.
Serves as the clustering-quality reference and as the reference clustering
for the deviation metrics.
"""

from __future__ import annotations

import numpy as np

from .core import Clustering, Dataset, ObjectiveBreakdown
from .engine import KTooLarge, kmeanspp_centers, nearest_center_assignment


def _centroids_with_reseed(features: np.ndarray, assignment: np.ndarray, k: int) -> np.ndarray:
    """Cluster means; an empty cluster is re-seeded to the point currently
    farthest from its assigned centroid (distinct points for multiple
    empties, ties to the lowest row index)."""
    sizes = np.bincount(assignment, minlength=k)
    sums = np.zeros((k, features.shape[1]))
    np.add.at(sums, assignment, features)
    centroids = sums / np.maximum(sizes, 1)[:, None]
    empty = np.flatnonzero(sizes == 0)
    if len(empty):
        d2 = ((features - centroids[assignment]) ** 2).sum(axis=1)
        farthest = np.argsort(-d2, kind="stable")
        for slot, c in zip(farthest, empty):
            centroids[c] = features[slot]
    return centroids


def _sse(features: np.ndarray, assignment: np.ndarray, k: int) -> float:
    sizes = np.bincount(assignment, minlength=k)
    sums = np.zeros((k, features.shape[1]))
    np.add.at(sums, assignment, features)
    nonempty = sizes > 0
    sq = np.zeros(k)
    np.add.at(sq, assignment, (features ** 2).sum(axis=1))
    return float(
        np.sum(sq[nonempty] - (sums[nonempty] ** 2).sum(axis=1) / sizes[nonempty])
    )


def kmeans_fit(
    dataset: Dataset,
    k: int,
    seed: int,
    max_iter: int = 30,
    init: str = "random_partition",
) -> Clustering:
    """Lloyd's algorithm with squared Euclidean distance over the features.

    Converges when a pass leaves every assignment unchanged. The returned
    objective carries the SSE as km_term and 0 for the fairness term.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    n = dataset.n_objects
    if n == 0:
        raise ValueError("cannot fit an empty dataset")
    if init not in ("random_partition", "kmeanspp"):
        raise ValueError(f"unknown init policy {init!r}")
    rng = np.random.default_rng(seed)
    X = dataset.features
    if init == "kmeanspp":
        if k > n:
            raise KTooLarge(f"kmeans++ needs k <= n_objects, got k={k}, n={n}")
        centers = kmeanspp_centers(X, k, rng)
        assignment = nearest_center_assignment(X, centers)
    else:
        assignment = rng.integers(0, k, size=n).astype(np.int64)

    converged = False
    iterations = 0
    for _ in range(max_iter):
        iterations += 1
        centroids = _centroids_with_reseed(X, assignment, k)
        new_assignment = nearest_center_assignment(X, centroids)
        if np.array_equal(new_assignment, assignment):
            converged = True
            break
        assignment = new_assignment

    km = _sse(X, assignment, k)
    return Clustering(
        assignment=assignment,
        objective=ObjectiveBreakdown(km, 0.0, km),
        iterations_run=iterations,
        converged=converged,
        lambda_=0.0,
    )
