"""Deterministic k-means used for per-class RBF centre placement."""

from __future__ import annotations

import numpy as np

from fusedface.errors import DataError


def _sq_dists(X, C):
    d = (X * X).sum(1)[:, None] - 2.0 * X @ C.T + (C * C).sum(1)[None, :]
    return np.maximum(d, 0.0)


def initial_centers(X: np.ndarray, k: int) -> np.ndarray:
    """Pick members at evenly spaced ranks of distance to the sample mean."""
    m = X.shape[0]
    dist = np.linalg.norm(X - X.mean(axis=0), axis=1)
    ranked = np.argsort(dist, kind="stable")
    if k == 1:
        picks = ranked[:1]
    else:
        picks = ranked[np.round(np.linspace(0, m - 1, k)).astype(int)]
    return X[picks].copy()


def _repair_empty(X, labels, centers, empty):
    # split the most populous cluster: its farthest member seeds the empty one
    counts = np.bincount(labels, minlength=centers.shape[0])
    big = int(np.argmax(counts))
    members = np.flatnonzero(labels == big)
    far = members[np.argmax(np.linalg.norm(X[members] - centers[big], axis=1))]
    centers[empty] = X[far]
    labels[far] = empty


def kmeans(X, k: int, max_iter: int = 100):
    """Lloyd's algorithm from :func:`initial_centers`.

    Returns ``(centers, labels)``.  Assignment ties go to the lowest centre
    index, so the result depends only on ``X`` and ``k``.
    """
    X = np.asarray(X, dtype=np.float64)
    m = X.shape[0]
    if not 1 <= k <= m:
        raise DataError(f"cannot form {k} clusters from {m} points")
    centers = initial_centers(X, k)
    labels = np.full(m, -1)
    for _ in range(max_iter):
        new = np.argmin(_sq_dists(X, centers), axis=1)
        for j in range(k):
            if not np.any(new == j):
                _repair_empty(X, new, centers, j)
        if np.array_equal(new, labels):
            break
        labels = new
        for j in range(k):
            centers[j] = X[labels == j].mean(axis=0)
    return centers, labels


def inertia(X, centers, labels) -> float:
    X = np.asarray(X, dtype=np.float64)
    return float(((X - centers[labels]) ** 2).sum())
