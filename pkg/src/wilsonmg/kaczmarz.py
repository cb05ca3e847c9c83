"""Kaczmarz relaxation for complex sparse systems and eigenvector updates.

One sweep runs over the variables in a fixed order and annihilates the
component of the residual along each operator column in turn,

    x_i <- x_i + <r, A e_i> / ||A e_i||^2,

which is Gauss-Seidel on the normal equations A^H A x = A^H b.  The running
residual r = b - A x is updated incrementally (cost ~ nnz per sweep) and
recomputed every 50 sweeps to control drift.  Column access and squared
column norms are cached in a workspace; the inner loop is numba-compiled.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from numba import njit

RECOMPUTE_EVERY = 50


@njit(cache=True)
def _sweep_kernel(indptr, indices, data, inv_norms, order, x, r):
    for idx in range(order.shape[0]):
        i = order[idx]
        s = 0.0 + 0.0j
        for k in range(indptr[i], indptr[i + 1]):
            s += np.conj(data[k]) * r[indices[k]]
        s *= inv_norms[i]
        x[i] += s
        for k in range(indptr[i], indptr[i + 1]):
            r[indices[k]] -= s * data[k]


class KaczmarzWorkspace:
    """Cached column structure of one operator plus the sweep ordering.

    order: 'forward' (default), 'reverse', or 'symmetric' (forward then
    backward within a single sweep).
    """

    def __init__(self, op: sp.spmatrix, order: str = "forward"):
        self.op = op.tocsr()
        csc = self.op.tocsc()
        csc.sort_indices()
        self.indptr = csc.indptr
        self.indices = csc.indices
        self.data = np.ascontiguousarray(csc.data, dtype=np.complex128)
        col_ids = np.repeat(np.arange(op.shape[1]), np.diff(self.indptr))
        norms = np.bincount(col_ids, weights=np.abs(self.data) ** 2, minlength=op.shape[1])
        if np.any(norms <= 0.0):
            raise ValueError(f"operator has {int(np.sum(norms <= 0))} zero columns; Kaczmarz undefined")
        self.inv_norms = 1.0 / norms
        fwd = np.arange(op.shape[1], dtype=np.int64)
        if order == "forward":
            self.order = fwd
        elif order == "reverse":
            self.order = fwd[::-1].copy()
        elif order == "symmetric":
            self.order = np.concatenate([fwd, fwd[::-1]])
        else:
            raise ValueError(f"unknown sweep order {order!r}")
        self.n = op.shape[1]

    def _check(self, x: np.ndarray, b: np.ndarray):
        if x.shape != (self.n,) or b.shape != (self.n,):
            raise ValueError(f"vector shapes {x.shape}/{b.shape} do not match operator size {self.n}")

    def residual(self, x: np.ndarray, b: np.ndarray) -> np.ndarray:
        return b - self.op @ x


def kaczmarz_sweep(ws: KaczmarzWorkspace, x: np.ndarray, b: np.ndarray, r: np.ndarray | None = None):
    """One sweep in place; returns (x, r) with the maintained residual."""
    ws._check(x, b)
    if r is None:
        r = ws.residual(x, b)
    _sweep_kernel(ws.indptr, ws.indices, ws.data, ws.inv_norms, ws.order, x, r)
    return x, r


def kaczmarz_sweeps(ws: KaczmarzWorkspace, x: np.ndarray, b: np.ndarray, n_sweeps: int) -> np.ndarray:
    """n_sweeps sweeps with periodic residual recomputation."""
    ws._check(x, b)
    r = ws.residual(x, b)
    for s in range(n_sweeps):
        if s and s % RECOMPUTE_EVERY == 0:
            r = ws.residual(x, b)
        _sweep_kernel(ws.indptr, ws.indices, ws.data, ws.inv_norms, ws.order, x, r)
    return x


def kaczmarz_eig_sweep(
    ws: KaczmarzWorkspace, T: sp.spmatrix, v: np.ndarray, lam: float
) -> np.ndarray:
    """One sweep on Z v = lam * T v with the right-hand side frozen at entry.

    ``ws`` must be built for the Hermitian operator Z.  The frozen right-hand
    side makes the sweep a plain Kaczmarz pass for Z x = b, so an exact
    eigenpair is a fixed point.
    """
    b = lam * (T @ v)
    ws._check(v, b)
    r = b - ws.op @ v
    _sweep_kernel(ws.indptr, ws.indices, ws.data, ws.inv_norms, ws.order, v, r)
    return v


def ritz_value(Z: sp.spmatrix, T: sp.spmatrix, v: np.ndarray, imag_tol: float = 1e-10) -> float:
    """Generalized Rayleigh quotient <Zv, v> / <Tv, v>, real by Hermiticity."""
    num = np.vdot(v, Z @ v)
    den = np.vdot(v, T @ v)
    if den.real <= 0.0:
        raise ValueError(f"T-norm of the vector is not positive ({den.real:.3e})")
    lam = num / den
    if abs(lam.imag) > imag_tol * max(1.0, abs(lam)):
        raise ValueError(f"Rayleigh quotient has a large imaginary part ({lam.imag:.3e})")
    return float(lam.real)


def t_normalize(T: sp.spmatrix, v: np.ndarray) -> np.ndarray:
    """Scale v so that <Tv, v> = 1."""
    den = np.vdot(v, T @ v).real
    if den <= 0.0:
        raise ValueError("cannot T-normalize a vector with nonpositive T-norm")
    v /= np.sqrt(den)
    return v
