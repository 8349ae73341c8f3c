"""Fair k-means optimizer.

The objective is the classic k-means coherence term over the feature matrix
plus ``lambda`` times a representational-fairness penalty over the sensitive
attributes: each cluster's sensitive-value distribution is pulled towards the
dataset-level distribution, deviations normalized by domain cardinality so
wide domains do not dominate, and weighted by the squared fractional cluster
cardinality so the penalty cannot be gamed by parking everything in one
cluster. Numeric sensitive attributes contribute the squared gap between the
cluster mean and the dataset mean instead.

Optimization is a round-robin sweep: each object in turn is re-assigned to
the cluster minimizing the exact change in the objective, holding every other
assignment fixed, with cluster statistics updated incrementally after each
accepted move. Staying put is always a candidate (delta exactly 0), so the
objective is non-increasing move by move and the sweep terminates.

Move pricing uses closed forms over the sufficient statistics instead of
rescanning cluster members:

* coherence, removing x from cluster A (size a > 1, centroid mu):
  ``-(a / (a - 1)) * ||x - mu||**2``; adding x to cluster B (size b > 0):
  ``(b / (b + 1)) * ||x - mu_B||**2``. A singleton origin empties its cluster
  and contributes 0; an empty target gains 0.
* fairness, per categorical attribute with dataset fractions f over V values:
  a cluster with value counts c and size m contributes
  ``sum_v (c_v - f_v * m)**2 / (n**2 * V)``, which equals the fractional-
  deviation form ``(m/n)**2 * sum_v (c_v/m - f_v)**2 / V`` and is 0 for empty
  clusters. Move deltas evaluate this before/after with all cardinalities
  taken prior to the move. Numeric attributes use ``(s - mean * m)**2 / n**2``
  where s is the cluster's value sum.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import (
    Clustering,
    ClusterState,
    Dataset,
    FairKMConfig,
    FairKMError,
    ObjectiveBreakdown,
)

logger = logging.getLogger(__name__)

MoveCallback = Callable[[int, int, int, "MoveDelta"], None]


class BadMove(FairKMError):
    """The requested move does not match the current assignment."""


class KTooLarge(FairKMError):
    """kmeans++ needs at least as many objects as centers."""


@dataclass
class MoveDelta:
    """Exact objective change of one candidate reassignment.
    ``total = km + lambda * fair``; a self-move is exactly (0, 0, 0)."""

    km: float
    fair: float
    total: float


def resolve_lambda(config: FairKMConfig, n_objects: int) -> float:
    if config.lambda_ is not None:
        return float(config.lambda_)
    return (n_objects / config.k) ** 2


def kmeanspp_centers(features: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Squared-distance-weighted sampling of k center rows."""
    n = len(features)
    if k > n:
        raise KTooLarge(f"kmeans++ needs k <= n_objects, got k={k}, n={n}")
    centers = np.empty(k, dtype=np.int64)
    centers[0] = rng.integers(n)
    d2 = ((features - features[centers[0]]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total > 0:
            centers[j] = rng.choice(n, p=d2 / total)
        else:  # all remaining points coincide with a chosen center
            centers[j] = rng.integers(n)
        d2 = np.minimum(d2, ((features - features[centers[j]]) ** 2).sum(axis=1))
    return features[centers].copy()


def nearest_center_assignment(features: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Index of the closest center per row; ties go to the lowest center id."""
    # ||x - c||^2 expanded; the ||x||^2 part is constant per row and dropped.
    cross = features @ centers.T
    d2 = (centers ** 2).sum(axis=1)[None, :] - 2.0 * cross
    return np.argmin(d2, axis=1).astype(np.int64)


def initialize(dataset: Dataset, config: FairKMConfig, rng: np.random.Generator) -> ClusterState:
    """Random partition or kmeans++ seeding, with all statistics populated."""
    n = dataset.n_objects
    if config.init == "kmeanspp":
        centers = kmeanspp_centers(dataset.features, config.k, rng)
        assignment = nearest_center_assignment(dataset.features, centers)
    else:
        assignment = rng.integers(0, config.k, size=n).astype(np.int64)
    return ClusterState.from_assignment(dataset, assignment, config.k)


def objective(dataset: Dataset, state: ClusterState, config: FairKMConfig) -> ObjectiveBreakdown:
    """Evaluate both objective terms from the maintained statistics.

    Empty clusters contribute 0 to both terms. The categorical fairness term
    is computed in the fractional-deviation form, so a single all-containing
    cluster scores exactly 0.
    """
    n = dataset.n_objects
    lam = resolve_lambda(config, n)
    nonempty = state.sizes > 0
    sizes = state.sizes[nonempty].astype(float)
    km = float(
        np.sum(
            state.feature_sumsq[nonempty]
            - (state.feature_sums[nonempty] ** 2).sum(axis=1) / sizes
        )
    )
    fairness = 0.0
    cluster_weight = (sizes / n) ** 2
    for attr, counts in zip(dataset.categorical_attributes, state.value_counts):
        fr = counts[nonempty] / sizes[:, None]
        dev = ((fr - attr.fractions) ** 2).sum(axis=1) / len(attr.values)
        fairness += attr.weight * float((cluster_weight * dev).sum())
    for attr, sums in zip(dataset.numeric_attributes, state.numeric_sums):
        means = sums[nonempty] / sizes
        fairness += attr.weight * float((cluster_weight * (means - attr.mean) ** 2).sum())
    return ObjectiveBreakdown(km, fairness, km + lam * fairness)


def _check_move(state: ClusterState, x: int, c_from: int, c_to: int) -> None:
    if not (0 <= c_to < state.k):
        raise BadMove(f"target cluster {c_to} outside [0, {state.k})")
    if state.assignment[x] != c_from:
        raise BadMove(f"object {x} is in cluster {state.assignment[x]}, not {c_from}")
    if c_from == c_to:
        raise BadMove(f"object {x}: origin and target cluster are both {c_to}")


def km_move_delta(dataset: Dataset, state: ClusterState, x: int, c_from: int, c_to: int) -> float:
    """Exact change in the coherence term if x moved from c_from to c_to."""
    _check_move(state, x, c_from, c_to)
    fx = dataset.features[x]
    out = 0.0
    size_from = int(state.sizes[c_from])
    if size_from > 1:
        diff = fx - state.feature_sums[c_from] / size_from
        out = -(size_from / (size_from - 1)) * float(diff @ diff)
    inc = 0.0
    size_to = int(state.sizes[c_to])
    if size_to > 0:
        diff = fx - state.feature_sums[c_to] / size_to
        inc = (size_to / (size_to + 1)) * float(diff @ diff)
    return out + inc


def fairness_move_delta(dataset: Dataset, state: ClusterState, x: int, c_from: int, c_to: int) -> float:
    """Exact change in the (unweighted-by-lambda) fairness term for the move,
    with all cluster cardinalities taken before the move."""
    _check_move(state, x, c_from, c_to)
    n = dataset.n_objects
    delta = 0.0
    for attr, counts in zip(dataset.categorical_attributes, state.value_counts):
        v = int(attr.codes[x])
        norm = n * n * len(attr.values)
        for c, sign in ((c_from, -1), (c_to, +1)):
            size = float(state.sizes[c])
            row = counts[c] - attr.fractions * size
            old = float(row @ row)
            new = row - sign * attr.fractions
            new[v] += sign
            delta += attr.weight * (float(new @ new) - old) / norm
    for attr, sums in zip(dataset.numeric_attributes, state.numeric_sums):
        val = float(attr.values[x])
        for c, sign in ((c_from, -1), (c_to, +1)):
            base = float(sums[c]) - attr.mean * float(state.sizes[c])
            new = base + sign * (val - attr.mean)
            delta += attr.weight * (new * new - base * base) / (n * n)
    return delta


def best_cluster(dataset: Dataset, state: ClusterState, config: FairKMConfig, x: int) -> tuple[int, MoveDelta]:
    """Argmin of the move delta over all clusters, the current one included
    with delta exactly 0. Ties go to the lowest cluster id."""
    n = dataset.n_objects
    lam = resolve_lambda(config, n)
    cur = int(state.assignment[x])
    fx = dataset.features[x]
    sizes = state.sizes.astype(float)

    safe = np.maximum(sizes, 1.0)
    diff = state.feature_sums / safe[:, None] - fx
    d2 = (diff ** 2).sum(axis=1)
    km_in = np.where(sizes > 0, sizes / (sizes + 1.0) * d2, 0.0)
    km_out = 0.0
    if sizes[cur] > 1:
        km_out = -(sizes[cur] / (sizes[cur] - 1.0)) * d2[cur]
    km = km_out + km_in
    km[cur] = 0.0

    fair = np.zeros(state.k)
    for attr, counts in zip(dataset.categorical_attributes, state.value_counts):
        v = int(attr.codes[x])
        norm = n * n * len(attr.values)
        base = counts - np.outer(sizes, attr.fractions)
        g_old = (base ** 2).sum(axis=1)
        entering = base - attr.fractions
        entering[:, v] += 1.0
        g_in = (entering ** 2).sum(axis=1) - g_old
        leaving = base[cur] + attr.fractions
        leaving[v] -= 1.0
        g_out = float(leaving @ leaving) - g_old[cur]
        fair += attr.weight * (g_out + g_in) / norm
    for attr, sums in zip(dataset.numeric_attributes, state.numeric_sums):
        shifted = float(attr.values[x]) - attr.mean
        base = sums - attr.mean * sizes
        g_in = (base + shifted) ** 2 - base ** 2
        g_out = (base[cur] - shifted) ** 2 - base[cur] ** 2
        fair += attr.weight * (g_out + g_in) / (n * n)
    fair[cur] = 0.0

    total = km + lam * fair
    total[cur] = 0.0
    best = int(np.argmin(total))
    if best == cur:
        return cur, MoveDelta(0.0, 0.0, 0.0)
    return best, MoveDelta(float(km[best]), float(fair[best]), float(total[best]))


def apply_move(dataset: Dataset, state: ClusterState, x: int, c_from: int, c_to: int) -> None:
    """Move x between clusters, updating every maintained statistic."""
    _check_move(state, x, c_from, c_to)
    fx = dataset.features[x]
    state.assignment[x] = c_to
    state.sizes[c_from] -= 1
    state.sizes[c_to] += 1
    state.feature_sums[c_from] -= fx
    state.feature_sums[c_to] += fx
    sq = float(fx @ fx)
    state.feature_sumsq[c_from] -= sq
    state.feature_sumsq[c_to] += sq
    for attr, counts in zip(dataset.categorical_attributes, state.value_counts):
        v = int(attr.codes[x])
        counts[c_from, v] -= 1
        counts[c_to, v] += 1
    for attr, sums in zip(dataset.numeric_attributes, state.numeric_sums):
        val = float(attr.values[x])
        sums[c_from] -= val
        sums[c_to] += val


def fit(dataset: Dataset, config: FairKMConfig, on_move: MoveCallback | None = None) -> Clustering:
    """Run round-robin descent until a full pass makes no move or max_iter
    passes complete. Deterministic given (dataset, config)."""
    n = dataset.n_objects
    if n == 0:
        raise ValueError("cannot fit an empty dataset")
    rng = np.random.default_rng(config.seed)
    state = initialize(dataset, config, rng)
    lam = resolve_lambda(config, n)
    converged = False
    iterations = 0
    for _ in range(config.max_iter):
        iterations += 1
        if config.order == "shuffled_per_iteration":
            order = rng.permutation(n)
        else:
            order = np.arange(n)
        moves = 0
        for x in order:
            x = int(x)
            target, delta = best_cluster(dataset, state, config, x)
            cur = int(state.assignment[x])
            if target != cur:
                apply_move(dataset, state, x, cur, target)
                moves += 1
                if on_move is not None:
                    on_move(x, cur, target, delta)
        logger.debug("pass %d: %d moves", iterations, moves)
        if moves == 0:
            converged = True
            break
    breakdown = objective(dataset, state, config)
    return Clustering(
        assignment=state.assignment.copy(),
        objective=breakdown,
        iterations_run=iterations,
        converged=converged,
        lambda_=lam,
    )
