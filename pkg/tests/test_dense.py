import numpy as np
import pytest
import scipy.linalg as la

from wilsonmg.dense import (
    dense_svd,
    generalized_hermitian_eig,
    hermitian_eig,
    lu_factor,
    lu_solve,
)
from wilsonmg.errors import SingularOperatorError
from wilsonmg.gauge import random_start
from wilsonmg.wilson import assemble_wilson, form_z, gamma5_signature


def random_hermitian(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return 0.5 * (a + a.conj().T)


def random_hpd(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return a @ a.conj().T + n * np.eye(n)


def test_hermitian_eig_basics():
    w, v = hermitian_eig(np.eye(3))
    assert np.allclose(w, 1.0)
    w, _ = hermitian_eig(np.array([[1.0, 0.0], [0.0, -1.0]]))
    assert np.allclose(w, [-1.0, 1.0])
    with pytest.raises(ValueError, match="Hermitian"):
        hermitian_eig(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_hermitian_eig_trace_det_unitarity():
    rng = np.random.default_rng(1)
    a = random_hermitian(rng, 16)
    w, v = hermitian_eig(a)
    assert np.sum(w) == pytest.approx(np.trace(a).real, rel=1e-10)
    assert np.prod(w) == pytest.approx(np.linalg.det(a).real, rel=1e-10)
    assert la.norm(v.conj().T @ v - np.eye(16)) < 1e-10


def test_hermitian_eig_deterministic():
    rng = np.random.default_rng(2)
    a = random_hermitian(rng, 12)
    w1, v1 = hermitian_eig(a)
    w2, v2 = hermitian_eig(a)
    assert np.array_equal(w1, w2) and np.array_equal(v1, v2)


def test_generalized_diagonal_case():
    lam, v = generalized_hermitian_eig(np.diag([3.0, -1.0, 2.0]), np.eye(3), 2)
    assert np.allclose(sorted(lam), [-1.0, 2.0])


def test_generalized_2x2_closed_form():
    z = np.array([[0.0, 2.0], [2.0, 0.0]])
    lam, v = generalized_hermitian_eig(z, np.eye(2), 2)
    assert np.allclose(np.sort(lam), [-2.0, 2.0])
    for j in range(2):
        ratio = np.abs(v[:, j])
        assert np.allclose(ratio, [1 / np.sqrt(2)] * 2, atol=1e-12)


def test_generalized_random_pencil_with_oracles():
    rng = np.random.default_rng(3)
    n, k = 12, 5
    z = random_hermitian(rng, n)
    t = random_hpd(rng, n)
    lam, v = generalized_hermitian_eig(z, t, k)
    # residuals, T-orthonormality, Ritz stationarity
    for j in range(k):
        assert la.norm(z @ v[:, j] - lam[j] * (t @ v[:, j])) < 1e-10 * la.norm(z)
        rq = (v[:, j].conj() @ z @ v[:, j]) / (v[:, j].conj() @ t @ v[:, j])
        assert abs(rq.real - lam[j]) < 1e-12 * max(1.0, abs(lam[j]))
    assert la.norm(v.conj().T @ t @ v - np.eye(k)) < 1e-10
    # companion-style oracle: eigenvalues of T^-1 Z
    oracle = np.sort(np.abs(la.eigvals(la.solve(t, z))))[:k]
    assert np.allclose(np.sort(np.abs(lam)), oracle, rtol=1e-8)
    # determinant sign-change count below a threshold on a scan grid
    thresh = np.sort(np.abs(lam))[2]
    grid = np.linspace(-thresh, thresh, 4001)
    dets = [np.sign(np.real(la.det(z - x * t))) for x in grid]
    crossings = int(np.sum(np.asarray(dets[:-1]) != np.asarray(dets[1:])))
    n_below = int(np.sum(np.abs(la.eigvals(la.solve(t, z))) < thresh))
    assert crossings == n_below


def test_generalized_rejects_bad_inputs():
    rng = np.random.default_rng(4)
    z = random_hermitian(rng, 4)
    with pytest.raises(SingularOperatorError, match="positive definite"):
        generalized_hermitian_eig(z, -np.eye(4), 2)
    with pytest.raises(ValueError):
        generalized_hermitian_eig(z, np.eye(3), 2)
    with pytest.raises(ValueError):
        generalized_hermitian_eig(z, np.eye(4), 0)


def test_lu_solve():
    assert np.allclose(lu_solve(np.eye(4), np.arange(4.0)), np.arange(4.0))
    p = np.eye(5)[[2, 0, 4, 1, 3]]
    b = np.arange(5.0) + 1j
    assert np.allclose(lu_solve(p, b), p.T @ b)
    rng = np.random.default_rng(5)
    a = rng.standard_normal((20, 20)) + 1j * rng.standard_normal((20, 20))
    b = rng.standard_normal(20)
    x = lu_solve(a, b)
    assert la.norm(a @ x - b) <= 1e-10 * la.norm(a) * la.norm(x)
    with pytest.raises(SingularOperatorError, match="pivot"):
        lu_factor(np.ones((3, 3)))


def test_dense_svd_cases():
    u, s, v = dense_svd(np.diag([3.0, -1.0, 2.0]))
    assert np.allclose(s, [3.0, 2.0, 1.0])
    rng = np.random.default_rng(6)
    q, _ = np.linalg.qr(rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6)))
    _, s, _ = dense_svd(q)
    assert np.allclose(s, 1.0, atol=1e-10)
    a = rng.standard_normal((10, 10)) + 1j * rng.standard_normal((10, 10))
    u, s, v = dense_svd(a)
    assert la.norm(a - u @ np.diag(s) @ v.conj().T) <= 1e-9 * la.norm(a)
    assert la.norm(u.conj().T @ u - np.eye(10)) < 1e-9
    with pytest.raises(ValueError, match="guard"):
        dense_svd(a, max_dim=4)


def test_svd_of_wilson_equals_z_spectrum():
    cfg = random_start(8, 0.0, seed=7)
    D = assemble_wilson(cfg, 0.2)
    Z = form_z(D, gamma5_signature(D.shape[0]))
    _, s, _ = dense_svd(D.toarray())
    lam = np.linalg.eigvalsh(Z.toarray())
    assert np.min(s) == pytest.approx(np.min(np.abs(lam)), abs=1e-10)
    assert np.allclose(np.sort(s), np.sort(np.abs(lam)), atol=1e-9)
