"""Shared class-label helpers used by both classifiers."""

import numpy as np

from fusedface.errors import DataError


def class_order(labels) -> tuple:
    """Sorted distinct labels; mixed types fall back to string order."""
    distinct = set(labels)
    if None in distinct:
        raise DataError("every training feature needs a class label")
    try:
        return tuple(sorted(distinct))
    except TypeError:
        return tuple(sorted(distinct, key=str))


def encode(labels, classes) -> np.ndarray:
    index = {c: i for i, c in enumerate(classes)}
    return np.array([index[l] for l in labels], dtype=int)


TIE_RTOL = 1e-12


def argmax_lowest(scores) -> int:
    """Index of the best score; scores within ``TIE_RTOL`` of it count as tied
    and the lowest such index wins."""
    scores = np.asarray(scores, dtype=np.float64)
    best = scores.max()
    tol = TIE_RTOL * max(abs(best), abs(scores.min()), np.finfo(float).tiny)
    return int(np.flatnonzero(scores >= best - tol)[0])
