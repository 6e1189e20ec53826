"""K-Means grouping of users and jobs over topic vectors plus attributes."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# default granularity: one group per ~1000 users and per ~500 jobs
USER_RATIO = 1000.0
JOB_RATIO = 500.0


@dataclass
class Clustering:
    centroids: np.ndarray  # [K, dim]
    assignment: np.ndarray  # [n_points]
    inertia: float
    trace: list[float] = field(default_factory=list)
    iterations: int = 0

    @property
    def k(self) -> int:
        return self.centroids.shape[0]


def build_feature(topic_vector, attributes) -> np.ndarray:
    x = np.concatenate([np.asarray(topic_vector, dtype=float).ravel(), np.asarray(attributes, dtype=float).ravel()])
    if not np.all(np.isfinite(x)):
        raise ValueError("feature contains non-finite values")
    return x


def choose_k(n_entities: int, ratio: float) -> int:
    if ratio <= 0:
        raise ValueError("ratio must be positive")
    return max(1, int(round(n_entities / ratio)))


def _sq_dists(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - centroids[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def _kmeans_pp(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = _sq_dists(points, points[chosen])[:, 0]
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            # all remaining points coincide with a centre; take the first unused one
            unused = np.setdiff1d(np.arange(n), chosen)
            idx = int(unused[0])
        else:
            idx = int(np.searchsorted(np.cumsum(d2), rng.random() * total, side="right"))
            idx = min(idx, n - 1)
        chosen.append(idx)
        d2 = np.minimum(d2, _sq_dists(points, points[idx : idx + 1])[:, 0])
    return points[chosen].copy()


def kmeans_fit(points, k: int, max_iters: int = 100, seed: int = 0) -> Clustering:
    """Lloyd iterations from k-means++ seeds until the assignment stops changing.

    ``trace`` records the objective after every assignment step.  An emptied
    cluster takes the farthest point of a cluster with more than one member.
    """
    x = np.asarray(points, dtype=float)
    if x.ndim != 2:
        raise ValueError("points must be a 2-D array")
    n = x.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"K={k} must lie in [1, {n}]")
    rng = np.random.default_rng(seed)
    centroids = _kmeans_pp(x, k, rng)
    assignment = None
    trace: list[float] = []
    it = 0
    for it in range(1, max_iters + 1):
        d2 = _sq_dists(x, centroids)
        new = np.argmin(d2, axis=1)
        own = d2[np.arange(n), new]
        trace.append(float(own.sum()))
        counts = np.bincount(new, minlength=k)
        for c in np.flatnonzero(counts == 0):
            # take the farthest point from a cluster that can spare one
            far = int(np.argmax(np.where(counts[new] > 1, own, -1.0)))
            counts[new[far]] -= 1
            counts[c] = 1
            new[far] = c
            own[far] = 0.0
            centroids[c] = x[far]
        if assignment is not None and np.array_equal(new, assignment):
            break
        assignment = new
        for c in range(k):
            centroids[c] = x[assignment == c].mean(axis=0)
    d2 = _sq_dists(x, centroids)
    inertia = float(d2[np.arange(n), assignment].sum())
    return Clustering(centroids, assignment, inertia, trace, it)


def assign_group(feature, clustering: Clustering) -> int:
    """Nearest centroid by squared distance; ties go to the lowest index."""
    f = np.asarray(feature, dtype=float)
    if f.shape != clustering.centroids.shape[1:]:
        raise ValueError("feature dimension does not match the centroids")
    return int(np.argmin(((clustering.centroids - f) ** 2).sum(axis=1)))


def assign_many(features, clustering: Clustering) -> np.ndarray:
    return np.argmin(_sq_dists(np.asarray(features, dtype=float), clustering.centroids), axis=1)
