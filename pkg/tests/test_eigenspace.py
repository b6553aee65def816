import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fusedface.eigenspace import (
    Eigenspace,
    FeatureVector,
    dumps,
    fit_eigenspace,
    loads,
    project,
    project_many,
    reconstruct,
)
from fusedface.errors import DataError
from fusedface.imageio import GrayImage


def dense_covariance_eigs(X):
    """Brute-force oracle: eigendecomposition of the full n x n covariance."""
    A = X - X.mean(axis=0)
    C = A.T @ A / X.shape[0]
    vals, vecs = np.linalg.eigh(C)
    order = np.argsort(vals)[::-1]
    return vals[order], vecs[:, order]


def test_identical_images_have_no_eigenfaces():
    im = GrayImage.from_array(np.full((2, 2), 0.3))
    es = fit_eigenspace([im, im])
    np.testing.assert_array_equal(es.mean, im.vector())
    assert es.u == 0


def test_small_instance_matches_dense_covariance(rng):
    X = rng.uniform(size=(3, 4))
    es = fit_eigenspace(X)
    vals, vecs = dense_covariance_eigs(X)
    assert es.u == 2
    np.testing.assert_allclose(es.eigenvalues, vals[:2], atol=1e-8)
    # eigenvectors agree up to sign
    for k in range(2):
        assert abs(abs(es.basis[:, k] @ vecs[:, k]) - 1.0) < 1e-8


def test_orthogonal_equal_norm_spectrum():
    # +/- pairs of orthonormal directions scaled by r: mean zero, and the
    # covariance is (2 r^2 / M) times a projector of rank M / 2
    M, r = 6, 3.0
    Q, _ = np.linalg.qr(np.random.default_rng(0).normal(size=(10, 10)))
    B = r * np.vstack([s * Q[:, k] for k in range(M // 2) for s in (1, -1)])
    es = fit_eigenspace(B + 0.25)
    assert es.u == M // 2
    np.testing.assert_allclose(es.eigenvalues, [2 * r * r / M] * (M // 2), rtol=1e-12)


def test_sign_convention(rng):
    es = fit_eigenspace(rng.uniform(size=(6, 10)))
    for k in range(es.u):
        col = es.basis[:, k]
        assert col[np.argmax(np.abs(col))] > 0


def test_selector_fixed_and_energy(rng):
    X = rng.uniform(size=(8, 20))
    full = fit_eigenspace(X)
    assert full.u == 7
    assert fit_eigenspace(X, 3).u == 3
    frac = full.eigenvalues.cumsum() / full.eigenvalues.sum()
    want = int(np.argmax(frac >= 0.8)) + 1
    assert fit_eigenspace(X, 0.8).u == want
    assert fit_eigenspace(X, 1.0).u == 7
    with pytest.raises(DataError):
        fit_eigenspace(X, 8)
    with pytest.raises(DataError):
        fit_eigenspace(X, 1.5)


def test_skip_leading(rng):
    X = rng.uniform(size=(8, 20))
    full = fit_eigenspace(X)
    skipped = fit_eigenspace(X, 3, skip=2)
    np.testing.assert_allclose(skipped.eigenvalues, full.eigenvalues[2:5])
    np.testing.assert_allclose(skipped.basis, full.basis[:, 2:5])


def test_fit_errors():
    a = GrayImage.from_array(np.zeros((2, 2)))
    with pytest.raises(DataError):
        fit_eigenspace([a])
    with pytest.raises(DataError):
        fit_eigenspace([a, GrayImage.from_array(np.zeros((2, 3)))])


def test_project_mean_and_eigenface(rng):
    es = fit_eigenspace(rng.uniform(size=(5, 12)))
    np.testing.assert_allclose(project(es, es.mean).coords, 0.0, atol=1e-15)
    c = 0.37
    coords = project(es, es.mean + c * es.basis[:, 0]).coords
    expected = np.zeros(es.u)
    expected[0] = c
    np.testing.assert_allclose(coords, expected, atol=1e-12)
    with pytest.raises(DataError):
        project(es, np.zeros(5))


def test_reconstruct_roundtrip(rng):
    X = rng.uniform(size=(5, 12))
    es = fit_eigenspace(X)
    np.testing.assert_array_equal(reconstruct(es, project(es, es.mean)), es.mean)
    # with every nonzero direction kept, training images lie in the span
    for x in X:
        np.testing.assert_allclose(reconstruct(es, project(es, x)), x, atol=1e-8)
    with pytest.raises(DataError):
        reconstruct(es, FeatureVector(np.zeros(es.u + 1)))


def test_reconstruction_error_equals_dropped_energy(rng):
    X = rng.uniform(size=(7, 15))
    es = fit_eigenspace(X, 3)
    _, vecs = dense_covariance_eigs(X)
    for x in X:
        full_coords = vecs.T @ (x - X.mean(0))
        err = np.sum((x - reconstruct(es, project(es, x))) ** 2)
        assert err == pytest.approx(np.sum(full_coords[3:] ** 2), rel=1e-8, abs=1e-12)


def test_random_projection_matches_oracle(rng):
    X = rng.uniform(size=(6, 16))
    es = fit_eigenspace(X, 4)
    _, vecs = dense_covariance_eigs(X)
    x = X[2]
    got = project(es, x).coords
    want = vecs[:, :4].T @ (x - X.mean(0))
    np.testing.assert_allclose(np.abs(got), np.abs(want), atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 16), st.integers(2, 64), st.integers(0, 2**32 - 1))
def test_snapshot_equivalence(m, n, seed):
    X = np.random.default_rng(seed).uniform(size=(m, n))
    es = fit_eigenspace(X)
    vals, _ = dense_covariance_eigs(X)
    nonzero = vals[vals > 1e-10 * vals[0]]
    assert es.u == nonzero.size
    np.testing.assert_allclose(es.eigenvalues, nonzero, rtol=1e-8)
    np.testing.assert_allclose(es.basis.T @ es.basis, np.eye(es.u), atol=1e-8)
    assert np.all(np.diff(es.eigenvalues) <= 0) and np.all(es.eigenvalues >= 0)


def test_reconstruction_error_monotone_in_u(rng):
    X = rng.uniform(size=(10, 30))
    errs = []
    for u in range(0, 10):
        es = fit_eigenspace(X, u)
        errs.append(np.mean([np.sum((x - reconstruct(es, project(es, x))) ** 2) for x in X]))
    assert all(b <= a + 1e-12 for a, b in zip(errs, errs[1:]))


@given(st.integers(0, 2**32 - 1))
def test_projection_is_affine(seed):
    r = np.random.default_rng(seed)
    X = r.uniform(size=(5, 9))
    es = fit_eigenspace(X)
    a, b = r.uniform(size=9), r.uniform(size=9)
    np.testing.assert_allclose(project(es, (a + b) / 2).coords,
                               (project(es, a).coords + project(es, b).coords) / 2, atol=1e-12)


def test_project_many_matches_single(rng):
    X = rng.uniform(size=(5, 9))
    es = fit_eigenspace(X)
    np.testing.assert_allclose(project_many(es, X), np.stack([project(es, x).coords for x in X]), atol=1e-14)


def test_text_and_dict_serialization(rng):
    es = fit_eigenspace(rng.uniform(size=(5, 9)), 3)
    for back in (loads(dumps(es)), Eigenspace.from_dict(es.to_dict())):
        np.testing.assert_array_equal(back.mean, es.mean)
        np.testing.assert_array_equal(back.basis, es.basis)
        np.testing.assert_array_equal(back.eigenvalues, es.eigenvalues)
    assert dumps(loads(dumps(es))) == dumps(es)
    with pytest.raises(DataError):
        loads("garbage 1\n")
