"""Krylov baselines: CGNR and restarted GMRES, optionally preconditioned.

CGNR runs conjugate gradients on the normal equations A^H A x = A^H b while
tracking the true residual b - A x incrementally; its residual norms are
non-increasing because each iterate minimizes ||b - A x|| over the grown
Krylov space.  GMRES uses Arnoldi with modified Gram-Schmidt plus one
unconditional reorthogonalization pass and Givens rotations for the small
least-squares problem.  Preconditioning is applied from the right, so the
quantity driven below the tolerance is the true relative residual; with a
stationary preconditioner (one fixed multigrid cycle at zero initial guess)
standard GMRES remains sound.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp


@dataclass
class SolveReport:
    iterations: int
    converged: bool
    relative_residual: float
    relative_error: float | None = None
    residual_history: np.ndarray = field(default_factory=lambda: np.zeros(0))
    breakdown: bool = False
    stagnated: bool = False


def cgnr(
    op: sp.spmatrix,
    b: np.ndarray,
    tol: float = 1e-8,
    max_iter: int = 4096,
    x0: np.ndarray | None = None,
) -> tuple[np.ndarray, SolveReport]:
    """Conjugate gradients on the normal equations; stops on the true relative residual."""
    x = np.zeros(op.shape[1], dtype=complex) if x0 is None else np.array(x0, dtype=complex)
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        bnorm = 1.0
    r = b - op @ x
    history = [float(np.linalg.norm(r))]
    if history[0] / bnorm <= tol:
        return x, SolveReport(0, True, history[0] / bnorm, residual_history=np.array(history))
    opH = op.getH().tocsr()
    z = opH @ r
    p = z.copy()
    zz = float(np.vdot(z, z).real)
    for it in range(1, max_iter + 1):
        w = op @ p
        ww = float(np.vdot(w, w).real)
        if ww == 0.0:
            return x, SolveReport(
                it - 1, False, history[-1] / bnorm, residual_history=np.array(history), breakdown=True
            )
        alpha = zz / ww
        x += alpha * p
        r -= alpha * w
        history.append(float(np.linalg.norm(r)))
        if history[-1] / bnorm <= tol:
            return x, SolveReport(it, True, history[-1] / bnorm, residual_history=np.array(history))
        z = opH @ r
        zz_new = float(np.vdot(z, z).real)
        p = z + (zz_new / zz) * p
        zz = zz_new
    return x, SolveReport(max_iter, False, history[-1] / bnorm, residual_history=np.array(history))


def gmres_restarted(
    op: sp.spmatrix,
    b: np.ndarray,
    restart: int = 32,
    tol: float = 1e-8,
    max_iter: int = 4096,
    preconditioner=None,
    x0: np.ndarray | None = None,
) -> tuple[np.ndarray, SolveReport]:
    """Right-preconditioned restarted GMRES counting total inner iterations.

    ``preconditioner`` is a linear callable M(r) ~ A^-1 r (e.g. one multigrid
    cycle with a zero initial guess); identity when omitted.  Happy breakdown
    counts as convergence; a restart block with no residual decrease sets the
    stagnation flag and stops.
    """
    n = op.shape[1]
    M = (lambda r: r) if preconditioner is None else preconditioner
    x = np.zeros(n, dtype=complex) if x0 is None else np.array(x0, dtype=complex)
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        bnorm = 1.0
    history = []
    total = 0
    stagnated = False
    while True:
        r = b - op @ x
        beta = float(np.linalg.norm(r))
        if not history:
            history.append(beta)
        if beta / bnorm <= tol:
            return x, SolveReport(total, True, beta / bnorm, residual_history=np.array(history))
        if total >= max_iter or stagnated:
            return x, SolveReport(
                total, False, beta / bnorm, residual_history=np.array(history), stagnated=stagnated
            )
        m = min(restart, max_iter - total)
        V = np.zeros((n, m + 1), dtype=complex)
        H = np.zeros((m + 1, m), dtype=complex)
        cs = np.zeros(m)  # real
        sn = np.zeros(m, dtype=complex)
        g = np.zeros(m + 1, dtype=complex)
        V[:, 0] = r / beta
        g[0] = beta
        k_used = 0
        happy = False
        for k in range(m):
            w = op @ M(V[:, k])
            # modified Gram-Schmidt with one reorthogonalization pass
            for _ in range(2):
                for i in range(k + 1):
                    hik = np.vdot(V[:, i], w)
                    H[i, k] += hik
                    w -= hik * V[:, i]
            hk1 = float(np.linalg.norm(w))
            # apply accumulated rotations to the new column
            for i in range(k):
                t = cs[i] * H[i, k] + sn[i] * H[i + 1, k]
                H[i + 1, k] = -np.conj(sn[i]) * H[i, k] + cs[i] * H[i + 1, k]
                H[i, k] = t
            # new rotation zeroing the (real, nonnegative) subdiagonal hk1
            a = H[k, k]
            rr = np.hypot(abs(a), hk1)
            if rr == 0.0:
                c, s = 1.0, 0.0 + 0.0j
            elif a == 0.0:
                c, s = 0.0, 1.0 + 0.0j
            else:
                c = abs(a) / rr
                s = (a / abs(a)) * (hk1 / rr)
            cs[k], sn[k] = c, s
            H[k, k] = c * a + s * hk1
            g[k + 1] = -np.conj(s) * g[k]
            g[k] = c * g[k]
            k_used = k + 1
            total += 1
            history.append(abs(g[k + 1]))
            if abs(g[k + 1]) / bnorm <= tol:
                break
            if hk1 <= 1e-14 * bnorm:
                happy = True  # Krylov space exhausted: solution is exact in it
                break
            V[:, k + 1] = w / hk1
        y = np.linalg.solve(H[:k_used, :k_used], g[:k_used])
        x = x + M(V[:, :k_used] @ y)
        if happy:
            r = b - op @ x
            return x, SolveReport(
                total, True, float(np.linalg.norm(r)) / bnorm, residual_history=np.array(history)
            )
        if k_used == m and history[-1] >= beta * (1.0 - 1e-12):
            stagnated = True


def error_vs_residual_study(
    op: sp.spmatrix, solver, shifts_ops: list, rng: np.random.Generator | int = 0
) -> list[dict]:
    """Run a solver over a family of operators with manufactured solutions.

    ``shifts_ops`` is a list of (label, operator); for each one a random true
    solution defines the right-hand side, and the final relative residual and
    relative error are tabulated.
    """
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    rows = []
    for label, A in shifts_ops:
        x_true = (
            rng.standard_normal(A.shape[1]) + 1j * rng.standard_normal(A.shape[1])
        ) / np.sqrt(2.0)
        bvec = A @ x_true
        x, rep = solver(A, bvec)
        err = float(np.linalg.norm(x - x_true) / np.linalg.norm(x_true))
        rows.append(
            {
                "shift": label,
                "iterations": rep.iterations,
                "converged": rep.converged,
                "relative_residual": rep.relative_residual,
                "relative_error": err,
                "ratio": err / max(rep.relative_residual, 1e-300),
            }
        )
    return rows
