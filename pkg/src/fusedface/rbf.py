"""Radial basis function classifier with supervised (per-class) centre placement.

Training runs k-means separately inside each class, so no hidden unit
ever averages patterns from two classes.  Every unit gets its own
Gaussian width from its cluster's spread, and a ridge least-squares
output layer maps activations to one-hot class targets.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from fusedface.cluster import kmeans
from fusedface.errors import DataError, NumericError
from fusedface.labels import argmax_lowest, class_order, encode

RIDGE = 1e-8


@dataclass(frozen=True)
class RbfTrainConfig:
    """``clusters_per_class`` is one count for every class or a ``{class: count}`` dict.

    ``seed`` is recorded for provenance only; centre initialisation is
    deterministic and needs no randomness.
    """

    clusters_per_class: int | dict = 1
    width_scale: float = 1.0
    kmeans_max_iter: int = 100
    seed: int = 0

    def __post_init__(self):
        counts = (self.clusters_per_class.values() if isinstance(self.clusters_per_class, dict)
                  else [self.clusters_per_class])
        if any(int(c) < 1 for c in counts) or self.kmeans_max_iter < 1:
            raise DataError("clusters_per_class and kmeans_max_iter must be positive")
        if not self.width_scale > 0:
            raise DataError(f"width_scale must be positive, got {self.width_scale}")

    def clusters_for(self, cls) -> int:
        if isinstance(self.clusters_per_class, dict):
            if cls not in self.clusters_per_class:
                raise DataError(f"no cluster count configured for class {cls!r}")
            return int(self.clusters_per_class[cls])
        return int(self.clusters_per_class)


@dataclass(frozen=True, eq=False)
class RbfModel:
    centers: np.ndarray          # (K, u)
    widths: np.ndarray           # (K,)
    output_weights: np.ndarray   # (K + 1, C); last row is the bias
    classes: tuple
    center_classes: tuple        # class of the training data behind each centre
    config: RbfTrainConfig = field(default_factory=RbfTrainConfig)
    # member indices (into the training set) of each centre's cluster
    members: tuple = ()

    def __post_init__(self):
        for name in ("centers", "widths", "output_weights"):
            arr = np.array(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if np.any(self.widths <= 0):
            raise DataError("RBF widths must be strictly positive")

    @property
    def n_centers(self) -> int:
        return self.centers.shape[0]

    def to_dict(self) -> dict:
        return {
            "centers": self.centers.tolist(),
            "widths": self.widths.tolist(),
            "output_weights": self.output_weights.tolist(),
            "classes": list(self.classes),
            "center_classes": list(self.center_classes),
            "config": asdict(self.config),
        }

    @classmethod
    def from_dict(cls, d: dict) -> RbfModel:
        return cls(
            centers=np.asarray(d["centers"], dtype=np.float64).reshape(len(d["widths"]), -1),
            widths=d["widths"],
            output_weights=d["output_weights"],
            classes=tuple(d["classes"]),
            center_classes=tuple(d["center_classes"]),
            config=RbfTrainConfig(**d["config"]),
        )


def _features(features, labels=None):
    """Accept FeatureVector lists or an (N, u) array plus labels."""
    if labels is None:
        X = np.stack([fv.coords for fv in features])
        labels = [fv.label for fv in features]
    else:
        X = np.atleast_2d(np.asarray(features, dtype=np.float64))
    if X.shape[0] != len(labels):
        raise DataError("need one label per feature vector")
    return X, list(labels)


def _widths(X, centers, member_sets, scale):
    K = centers.shape[0]
    widths = np.empty(K)
    for k in range(K):
        members = member_sets[k]
        spread = np.linalg.norm(X[members] - centers[k], axis=1).mean()
        if len(members) > 1 and spread > 0:
            widths[k] = scale * spread
            continue
        # singleton (or zero-spread) cluster: half the distance to the nearest other centre
        others = np.delete(centers, k, axis=0)
        gap = np.linalg.norm(others - centers[k], axis=1).min() if len(others) else 0.0
        widths[k] = 0.5 * gap
    return widths


def design_matrix(centers, widths, X) -> np.ndarray:
    """Gaussian activations with a trailing column of ones."""
    X = np.atleast_2d(X)
    d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(-1)
    phi = np.exp(-d2 / (2.0 * widths ** 2))
    return np.hstack([phi, np.ones((X.shape[0], 1))])


def ridge_objective(Phi, W, Y, ridge=RIDGE) -> float:
    return float(((Phi @ W - Y) ** 2).sum() + ridge * (W ** 2).sum())


def solve_output_weights(Phi, Y, ridge=RIDGE) -> np.ndarray:
    # augmented least squares is better conditioned than the normal equations
    p = Phi.shape[1]
    A = np.vstack([Phi, np.sqrt(ridge) * np.eye(p)])
    B = np.vstack([Y, np.zeros((p, Y.shape[1]))])
    W, *_ = np.linalg.lstsq(A, B, rcond=None)
    return W


def train_rbf(features, cfg: RbfTrainConfig | None = None, labels=None) -> RbfModel:
    cfg = cfg or RbfTrainConfig()
    X, labels = _features(features, labels)
    if X.shape[0] == 0:
        raise DataError("no training features")
    classes = class_order(labels)
    if np.all(X == X[0]) and len(classes) > 1:
        raise DataError("all training features are identical; classes cannot be separated")
    lab = encode(labels, classes)

    centers, center_classes, member_sets = [], [], []
    for ci, cls in enumerate(classes):
        idx = np.flatnonzero(lab == ci)
        k = cfg.clusters_for(cls)
        if k > idx.size:
            raise DataError(f"class {cls!r} has {idx.size} samples, fewer than {k} clusters")
        c, assign = kmeans(X[idx], k, cfg.kmeans_max_iter)
        for j in range(k):
            centers.append(c[j])
            center_classes.append(cls)
            member_sets.append(idx[assign == j])
    centers = np.array(centers)
    widths = _widths(X, centers, member_sets, cfg.width_scale)
    if np.any(widths <= 0):
        raise DataError("degenerate training data: an RBF unit would get zero width")

    Phi = design_matrix(centers, widths, X)
    Y = np.eye(len(classes))[lab]
    W = solve_output_weights(Phi, Y)
    if not np.all(np.isfinite(W)):
        raise NumericError("RBF output layer solve produced non-finite weights")
    return RbfModel(centers, widths, W, classes, tuple(center_classes), cfg,
                    tuple(tuple(int(i) for i in m) for m in member_sets))


def _query(model: RbfModel, x) -> np.ndarray:
    coords = getattr(x, "coords", x)
    coords = np.asarray(coords, dtype=np.float64)
    if coords.shape[-1] != model.centers.shape[1]:
        raise DataError(f"feature length {coords.shape[-1]} != centre dimension {model.centers.shape[1]}")
    return coords


def rbf_activations(model: RbfModel, x) -> np.ndarray:
    """``exp(-|x - c_k|^2 / (2 sigma_k^2))`` for every centre."""
    return design_matrix(model.centers, model.widths, _query(model, x).reshape(1, -1))[0, :-1]


def rbf_scores(model: RbfModel, X) -> np.ndarray:
    X = _query(model, X)
    return design_matrix(model.centers, model.widths, np.atleast_2d(X)) @ model.output_weights


def rbf_predict(model: RbfModel, x):
    """Return ``(class, scores)`` for one feature vector."""
    scores = rbf_scores(model, _query(model, x).reshape(1, -1))[0]
    return model.classes[argmax_lowest(scores)], scores


def rbf_predict_many(model: RbfModel, X) -> list:
    S = rbf_scores(model, X)
    return [model.classes[argmax_lowest(s)] for s in S]
