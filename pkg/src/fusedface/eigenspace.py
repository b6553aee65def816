"""Eigenface subspace: fit via the snapshot (Gram-matrix) method, project, reconstruct.

The covariance of the mean-centred training matrix ``A`` (M images by n
pixels) is ``A.T @ A / M``.  Since n >> M for real images, eigenvectors
are obtained from the M x M matrix ``A @ A.T / M`` instead and lifted back
to pixel space with ``A.T``.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from fusedface.errors import DataError, NumericError
from fusedface.imageio import GrayImage

RANK_CUTOFF = 1e-10
TEXT_MAGIC = "fusedface-eigenspace"
TEXT_VERSION = 1

# int -> fixed U; float -> energy fraction; None -> every nonzero direction
Selector = Union[int, float, None]


@dataclass(frozen=True, eq=False)
class Eigenspace:
    """Mean face, orthonormal eigenface columns, and their covariance eigenvalues."""

    mean: np.ndarray
    basis: np.ndarray
    eigenvalues: np.ndarray

    def __post_init__(self):
        for name in ("mean", "basis", "eigenvalues"):
            arr = np.array(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.basis.ndim != 2 or self.basis.shape[0] != self.mean.shape[0]:
            raise DataError(f"basis shape {self.basis.shape} does not match mean length {self.n}")
        if self.eigenvalues.shape != (self.basis.shape[1],):
            raise DataError("need one eigenvalue per basis column")

    @property
    def n(self) -> int:
        return self.mean.shape[0]

    @property
    def u(self) -> int:
        return self.basis.shape[1]

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "u": self.u,
            "mean": self.mean.tolist(),
            "basis": self.basis.tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> Eigenspace:
        n, u = int(d["n"]), int(d["u"])
        basis = np.asarray(d["basis"], dtype=np.float64).reshape(n, u)
        es = cls(np.asarray(d["mean"], dtype=np.float64), basis,
                 np.asarray(d["eigenvalues"], dtype=np.float64))
        if es.n != n:
            raise DataError("eigenspace header disagrees with mean length")
        return es


@dataclass(frozen=True, eq=False)
class FeatureVector:
    coords: np.ndarray
    label: object = None

    def __post_init__(self):
        arr = np.array(self.coords, dtype=np.float64).ravel()
        arr.setflags(write=False)
        object.__setattr__(self, "coords", arr)

    def __len__(self):
        return self.coords.shape[0]


def _as_matrix(images: Sequence[GrayImage]) -> np.ndarray:
    if len(images) < 2:
        raise DataError(f"need at least 2 training images, got {len(images)}")
    size = images[0].size
    for i, img in enumerate(images):
        if img.size != size:
            raise DataError(f"training image {i} is {img.width}x{img.height}, expected {size[0]}x{size[1]}")
    return np.stack([img.vector() for img in images])


def _orient(basis: np.ndarray) -> np.ndarray:
    # make each column's largest-magnitude entry positive
    idx = np.argmax(np.abs(basis), axis=0)
    signs = np.sign(basis[idx, np.arange(basis.shape[1])])
    signs[signs == 0] = 1.0
    return basis * signs


def _select(eigvals: np.ndarray, selector: Selector, skip: int) -> int:
    available = eigvals.shape[0] - skip
    if available < 0:
        raise DataError(f"cannot skip {skip} leading eigenfaces; only {eigvals.shape[0]} exist")
    if selector is None:
        return available
    if isinstance(selector, (bool, np.bool_)):
        raise DataError("dimension selector must be an int or an energy fraction")
    if isinstance(selector, (int, np.integer)):
        if selector < 0:
            raise DataError(f"retained dimension must be >= 0, got {selector}")
        if selector > available:
            raise DataError(f"requested U={selector} exceeds available rank {available}")
        return int(selector)
    frac = float(selector)
    if not 0.0 < frac <= 1.0:
        raise DataError(f"energy fraction must be in (0, 1], got {frac}")
    kept = eigvals[skip:]
    if kept.size == 0:
        return 0
    cum = np.cumsum(kept)
    target = frac * cum[-1]
    # guard against cum[-1] * 1.0 comparing below itself after rounding
    return int(min(np.searchsorted(cum, target * (1 - 1e-12), side="left") + 1, kept.size))


def fit_eigenspace(training: Sequence[GrayImage] | np.ndarray, selector: Selector = None,
                   skip: int = 0) -> Eigenspace:
    """Build the eigenspace of ``training``.

    ``selector`` is a fixed dimension (int), an energy fraction (float in
    (0, 1]), or None for all nonzero directions.  ``skip`` drops that many
    leading eigenfaces before selection.  ``training`` may also be an
    (M, n) array of flattened images.
    """
    if isinstance(training, np.ndarray):
        X = np.asarray(training, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] < 2:
            raise DataError(f"need an (M>=2, n) training matrix, got shape {X.shape}")
    else:
        X = _as_matrix(training)
    m = X.shape[0]
    mean = X.mean(axis=0)
    A = X - mean
    gram = (A @ A.T) / m
    vals, vecs = np.linalg.eigh(gram)
    if not np.all(np.isfinite(vals)):
        raise NumericError("non-finite eigenvalues in Gram matrix")
    order = np.argsort(vals, kind="stable")[::-1]
    vals, vecs = vals[order], vecs[:, order]
    vals = np.where(vals < 0, 0.0, vals)
    lam_max = vals[0] if vals.size else 0.0
    keep = vals > RANK_CUTOFF * lam_max if lam_max > 0 else np.zeros_like(vals, dtype=bool)
    vals, vecs = vals[keep], vecs[:, keep]

    u = _select(vals, selector, skip)
    vals = vals[skip:skip + u]
    vecs = vecs[:, skip:skip + u]
    basis = A.T @ vecs
    norms = np.linalg.norm(basis, axis=0)
    if u:
        basis = basis / norms
    basis = _orient(basis) if u else np.zeros((X.shape[1], 0))
    return Eigenspace(mean=mean, basis=basis, eigenvalues=vals)


def _vec(es: Eigenspace, img) -> np.ndarray:
    v = img.vector() if isinstance(img, GrayImage) else np.asarray(img, dtype=np.float64).ravel()
    if v.shape[0] != es.n:
        raise DataError(f"image has {v.shape[0]} pixels, eigenspace expects {es.n}")
    return v


def project(es: Eigenspace, img, label=None) -> FeatureVector:
    """Eigenspace coordinates ``basis.T @ (x - mean)`` of one image."""
    return FeatureVector(es.basis.T @ (_vec(es, img) - es.mean), label)


def project_many(es: Eigenspace, images) -> np.ndarray:
    """Project a sequence of images (or an (M, n) array) to an (M, u) matrix."""
    if isinstance(images, np.ndarray):
        X = np.atleast_2d(images)
        if X.shape[1] != es.n:
            raise DataError(f"images have {X.shape[1]} pixels, eigenspace expects {es.n}")
    else:
        X = np.stack([_vec(es, img) for img in images]) if len(images) else np.zeros((0, es.n))
    return (X - es.mean) @ es.basis


def reconstruct(es: Eigenspace, fv: FeatureVector | np.ndarray) -> np.ndarray:
    coords = fv.coords if isinstance(fv, FeatureVector) else np.asarray(fv, dtype=np.float64)
    if coords.shape != (es.u,):
        raise DataError(f"feature vector has length {coords.shape[0]}, eigenspace has u={es.u}")
    return es.mean + es.basis @ coords


def dumps(es: Eigenspace) -> str:
    """Textual serialization: header line, then mean, eigenvalues, basis rows."""
    out = io.StringIO()
    out.write(f"{TEXT_MAGIC} {TEXT_VERSION}\n{es.n} {es.u}\n")
    out.write(" ".join(repr(float(v)) for v in es.mean) + "\n")
    out.write(" ".join(repr(float(v)) for v in es.eigenvalues) + "\n")
    for row in es.basis:
        out.write(" ".join(repr(float(v)) for v in row) + "\n")
    return out.getvalue()


def loads(text: str) -> Eigenspace:
    lines = text.split("\n")
    head = lines[0].split()
    if len(head) != 2 or head[0] != TEXT_MAGIC:
        raise DataError("not an eigenspace text file")
    if int(head[1]) != TEXT_VERSION:
        raise DataError(f"unsupported eigenspace text version {head[1]}")
    n, u = (int(t) for t in lines[1].split())
    mean = np.array(lines[2].split(), dtype=np.float64)
    eig = np.array(lines[3].split(), dtype=np.float64)
    rows = lines[4:4 + n]
    if len(rows) != n:
        raise DataError(f"expected {n} basis rows, found {len(rows)}")
    basis = np.array([r.split() for r in rows], dtype=np.float64).reshape(n, u)
    return Eigenspace(mean, basis, eig)
