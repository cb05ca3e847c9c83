"""Dense complex kernels: Hermitian and generalized eigensolvers, LU, SVD.

These back the coarsest-grid eigenproblem and direct solve of the multigrid
hierarchy and serve as oracles in tests.  Sizes stay small (coarsest grids),
so LAPACK-backed dense routines are used throughout; the generalized problem
is reduced explicitly through a Cholesky factor of the mass matrix.
"""

from __future__ import annotations

import warnings

import numpy as np
import scipy.linalg as la

from .errors import SingularOperatorError

HERM_RTOL = 1e-10


def _as_dense(a) -> np.ndarray:
    m = np.asarray(a.toarray() if hasattr(a, "toarray") else a, dtype=complex)
    if m.ndim != 2:
        raise ValueError("expected a matrix")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix contains NaN/Inf entries")
    return m


def _check_hermitian(m: np.ndarray, what: str) -> np.ndarray:
    scale = la.norm(m)
    if scale > 0 and la.norm(m - m.conj().T) > HERM_RTOL * scale:
        raise ValueError(f"{what} is not Hermitian to relative {HERM_RTOL:g}")
    return 0.5 * (m + m.conj().T)


def hermitian_eig(a) -> tuple[np.ndarray, np.ndarray]:
    """Full spectrum of a Hermitian matrix: real ascending eigenvalues, unitary vectors."""
    m = _check_hermitian(_as_dense(a), "matrix")
    w, v = np.linalg.eigh(m)
    return w, v


def generalized_hermitian_eig(z, t, k: int, context: str = "") -> tuple[np.ndarray, np.ndarray]:
    """k eigenpairs of Z v = lambda T v with smallest |lambda|, T-orthonormal.

    Z must be Hermitian and T Hermitian positive definite.  The pencil is
    reduced via T = L L^H to the standard Hermitian problem for
    L^-1 Z L^-H and back-transformed, which keeps V^H T V = I exactly up to
    rounding.  Returns eigenvalues ordered by increasing modulus.
    """
    zm = _check_hermitian(_as_dense(z), f"Z {context}".strip())
    tm = _check_hermitian(_as_dense(t), f"T {context}".strip())
    if zm.shape != tm.shape:
        raise ValueError("Z and T must have identical shapes")
    n = zm.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"requested {k} pairs from size-{n} pencil")
    try:
        L = np.linalg.cholesky(tm)
    except np.linalg.LinAlgError as exc:
        raise SingularOperatorError(
            f"mass matrix not positive definite {context}".strip() + f": {exc}"
        ) from exc
    # C = L^-1 Z L^-H
    zl = la.solve_triangular(L, zm, lower=True)
    c = la.solve_triangular(L, zl.conj().T, lower=True).conj().T
    w, y = np.linalg.eigh(0.5 * (c + c.conj().T))
    order = np.argsort(np.abs(w), kind="stable")[:k]
    v = la.solve_triangular(L.conj().T, y[:, order], lower=False)
    return w[order], v


def lu_solve(a, rhs: np.ndarray, pivot_rtol: float = 1e-14) -> np.ndarray:
    """Backward-stable dense solve with partial pivoting and a singularity guard."""
    m = _as_dense(a)
    if m.shape[0] != m.shape[1]:
        raise ValueError("matrix must be square")
    factor = lu_factor(m, pivot_rtol)
    return lu_apply(factor, rhs)


def lu_factor(a, pivot_rtol: float = 1e-14):
    """Factorize once for repeated solves; raises on a singular-to-tolerance matrix."""
    m = _as_dense(a)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", la.LinAlgWarning)  # the pivot guard below reports it
        lu, piv = la.lu_factor(m)
    pivmin = float(np.min(np.abs(np.diag(lu)))) if m.size else 0.0
    if pivmin <= pivot_rtol * la.norm(m):
        raise SingularOperatorError(
            f"matrix singular to tolerance: min pivot {pivmin:.3e} vs norm {la.norm(m):.3e}"
        )
    return lu, piv

def lu_apply(factor, rhs: np.ndarray) -> np.ndarray:
    return la.lu_solve(factor, np.asarray(rhs, dtype=complex))


def dense_svd(a, max_dim: int = 4096) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """SVD through the doubled Hermitian embedding [[0, A], [A^H, 0]].

    The embedding's positive eigenpairs (sigma, (u; v)/sqrt(2)) give the
    singular triplets directly; values are returned descending.  Intended as a
    structural oracle at small sizes rather than a performance kernel.
    """
    m = _as_dense(a)
    if max(m.shape) > max_dim:
        raise ValueError(f"matrix size {m.shape} exceeds guard {max_dim}")
    nr, nc = m.shape
    h = np.zeros((nr + nc, nr + nc), dtype=complex)
    h[:nr, nr:] = m
    h[nr:, :nr] = m.conj().T
    w, q = np.linalg.eigh(h)
    order = np.argsort(w)[::-1][: min(nr, nc)]
    sigma = w[order]
    u = q[:nr, order]
    v = q[nr:, order]
    # positive-eigenvalue vectors split their mass evenly between the blocks
    for j in range(u.shape[1]):
        nu, nv = la.norm(u[:, j]), la.norm(v[:, j])
        u[:, j] /= nu if nu > 0 else 1.0
        v[:, j] /= nv if nv > 0 else 1.0
    return u, np.maximum(sigma, 0.0), v
