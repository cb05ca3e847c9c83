"""Assembly of the 2-d Wilson lattice Dirac operator and its reductions.

The operator acts on spinor fields with two components per site,

    (D psi)_z = m_q psi_z - sum_mu [ conj(U_mu^z) P_mu^- psi_{z+e_mu}
                                     + U_mu^{z-e_mu} P_mu^+ psi_{z-e_mu} ],

with m_q = m + 2, spin projectors P_mu^{+-} = (I +- gamma_mu)/2 and

    gamma_1 = [[0, 1], [1, 0]],   gamma_2 = [[0, i], [-i, 0]].

The forward hop carries the conjugated link, the backward hop the plain link
of the departure edge; with that orientation the spin-permuted matrix equals
(1/2) [[A, B], [-B^H, A]] entrywise, where A is the gauge Laplacian and B the
covariant central difference (see :func:`block_spin_form`).

Global variable layout is site-major, spin-minor (index 2*site + spin), so
Gamma5 = diag(+1, -1, +1, ...).  All operators are scipy CSR matrices with
complex128 entries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.io import mmwrite

from .errors import SingularOperatorError
from .gauge import GaugeConfiguration
from .lattice import LatticeDims, X, Y, even_site_indices, odd_site_indices, shift_index

# spin blocks of the hopping terms: HOP_COEF[(mu, sign)][sigma, tau] scales the
# link factor of the hop z -> z + sign*e_mu
HOP_COEF = {
    (X, +1): -0.5 * np.array([[1, -1], [-1, 1]], dtype=complex),  # -P_x^-
    (X, -1): -0.5 * np.array([[1, 1], [1, 1]], dtype=complex),  # -P_x^+
    (Y, +1): -0.5 * np.array([[1, -1j], [1j, 1]], dtype=complex),  # -P_y^-
    (Y, -1): -0.5 * np.array([[1, 1j], [-1j, 1]], dtype=complex),  # -P_y^+
}


def _hop_links(cfg: GaugeConfiguration, mu: int, sign: int) -> np.ndarray:
    """Link factor per departure site for the hop z -> z + sign*e_mu."""
    theta = cfg.phases[:, :, mu].ravel()
    if sign == +1:
        return np.exp(-1j * theta)  # conj(U_mu^z)
    back = shift_index(cfg.dims, mu, -1)
    return np.exp(1j * theta[back])  # U_mu^{z-e_mu}


def assemble_wilson(cfg: GaugeConfiguration, m: float) -> sp.csr_matrix:
    """Assemble D = (m+2) I - hopping terms as a CSR matrix of size 2*n^2."""
    dims = cfg.dims
    ns = dims.n_sites
    mq = m + 2.0
    sites = np.arange(ns)

    rows = [np.arange(2 * ns)]
    cols = [np.arange(2 * ns)]
    vals = [np.full(2 * ns, mq, dtype=complex)]
    for (mu, sign), coef in HOP_COEF.items():
        nb = shift_index(dims, mu, sign)
        link = _hop_links(cfg, mu, sign)
        for sigma in (0, 1):
            for tau in (0, 1):
                rows.append(2 * sites + sigma)
                cols.append(2 * nb + tau)
                vals.append(coef[sigma, tau] * link)
    D = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(2 * ns, 2 * ns),
    ).tocsr()
    D.sort_indices()
    return D


def block_spin_form(cfg: GaugeConfiguration, m: float) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Gauge Laplacian A and covariant gradient B of the spin-permuted form.

    With all links at unity A is the 5-point Laplacian plus the diagonal shift
    4 + 2m and B is the central difference stencil (+-1 along x, +-i along y).
    The spin permutation of :func:`assemble_wilson` output equals
    (1/2) [[A, B], [-B^H, A]] entrywise.
    """
    dims = cfg.dims
    ns = dims.n_sites
    sites = np.arange(ns)
    fwd_x = shift_index(dims, X, +1)
    bwd_x = shift_index(dims, X, -1)
    fwd_y = shift_index(dims, Y, +1)
    bwd_y = shift_index(dims, Y, -1)
    cU_x = _hop_links(cfg, X, +1)
    U_xb = _hop_links(cfg, X, -1)
    cU_y = _hop_links(cfg, Y, +1)
    U_yb = _hop_links(cfg, Y, -1)

    def build(diag, terms):
        rows = [sites]
        cols = [sites]
        vals = [np.full(ns, diag, dtype=complex)] if diag is not None else [np.zeros(ns, complex)]
        for nb, v in terms:
            rows.append(sites)
            cols.append(nb)
            vals.append(v)
        M = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(ns, ns)
        ).tocsr()
        M.sort_indices()
        return M

    A = build(
        4.0 + 2.0 * m,
        [(fwd_x, -cU_x), (bwd_x, -U_xb), (fwd_y, -cU_y), (bwd_y, -U_yb)],
    )
    B = build(
        None,
        [(fwd_x, cU_x), (bwd_x, -U_xb), (fwd_y, 1j * cU_y), (bwd_y, -1j * U_yb)],
    )
    return A, B


def spin_permutation(n_sites: int) -> np.ndarray:
    """Variable permutation listing all spin-0 components before all spin-1."""
    return np.concatenate([2 * np.arange(n_sites), 2 * np.arange(n_sites) + 1])


def gamma5_signature(n_vars: int) -> np.ndarray:
    """Diagonal of Gamma5 in site-major/spin-minor layout: (+1, -1, +1, ...)."""
    if n_vars % 2 != 0:
        raise ValueError("variable count must be even")
    return np.tile(np.array([1.0, -1.0]), n_vars // 2)


def gamma5_multiply(signs: np.ndarray, v: np.ndarray) -> np.ndarray:
    if signs.shape[0] != v.shape[0]:
        raise ValueError(f"signature length {signs.shape[0]} does not match vector {v.shape[0]}")
    return signs * v if v.ndim == 1 else signs[:, None] * v


def form_z(D: sp.csr_matrix, signs: np.ndarray) -> sp.csr_matrix:
    """Z = Gamma5 D; rows of D scaled by the signature.  Hermitian for gamma5-symmetric D."""
    if D.shape[0] != signs.shape[0]:
        raise ValueError("signature length does not match operator")
    Z = D.copy()
    Z.data = Z.data * np.repeat(signs, np.diff(D.indptr))
    return Z


@dataclass
class OddEvenSystem:
    """Schur complement of D on the even sites, scaled so both diagonal blocks are I.

    ``dhat = I - deo @ doe`` acts on even-site variables ordered by even-site
    rank, site-major/spin-minor.  ``deo``/``doe`` are the off-diagonal blocks of
    D/scale.  Solving D psi = b reduces to dhat psi_e = reduce_rhs(b) followed
    by back_substitute.
    """

    dims: LatticeDims
    dhat: sp.csr_matrix
    deo: sp.csr_matrix
    doe: sp.csr_matrix
    scale: float
    even_sites: np.ndarray
    odd_sites: np.ndarray

    @property
    def even_vars(self) -> np.ndarray:
        return (2 * self.even_sites[:, None] + np.arange(2)).ravel()

    @property
    def odd_vars(self) -> np.ndarray:
        return (2 * self.odd_sites[:, None] + np.arange(2)).ravel()

    @property
    def gamma_e(self) -> np.ndarray:
        return gamma5_signature(self.dhat.shape[0])

    def reduce_rhs(self, b: np.ndarray) -> np.ndarray:
        return (b[self.even_vars] - self.deo @ b[self.odd_vars]) / self.scale

    def back_substitute(self, psi_e: np.ndarray, b: np.ndarray) -> np.ndarray:
        return b[self.odd_vars] / self.scale - self.doe @ psi_e

    def expand(self, psi_e: np.ndarray, psi_o: np.ndarray) -> np.ndarray:
        out = np.empty(self.dims.n_vars, dtype=complex)
        out[self.even_vars] = psi_e
        out[self.odd_vars] = psi_o
        return out


def odd_even_reduce(D: sp.csr_matrix, dims: LatticeDims, tol: float = 1e-12) -> OddEvenSystem:
    """Eliminate the odd-site variables of a nearest-neighbor operator.

    Requires both same-parity diagonal blocks to equal c*I to within ``tol``
    (true for the Wilson operator with c = m + 2); the returned system is
    scaled by 1/c.
    """
    ev = even_site_indices(dims)
    od = odd_site_indices(dims)
    evars = (2 * ev[:, None] + np.arange(2)).ravel()
    ovars = (2 * od[:, None] + np.arange(2)).ravel()

    Dee = D[evars][:, evars]
    Doo = D[ovars][:, ovars]
    diag = Dee.diagonal()
    c = float(np.mean(diag.real))
    if abs(c) < tol:
        raise SingularOperatorError(f"even/even diagonal ~ 0 (c = {c:.3e}); cannot scale")
    for name, blk in (("even/even", Dee), ("odd/odd", Doo)):
        resid = blk - c * sp.identity(blk.shape[0], dtype=complex, format="csr")
        err = np.max(np.abs(resid.data)) if resid.nnz else 0.0
        if err > tol:
            raise ValueError(f"{name} block is not a scalar identity (residual {err:.3e}); not a Wilson-type operator")

    deo = (D[evars][:, ovars] / c).tocsr()
    doe = (D[ovars][:, evars] / c).tocsr()
    dhat = (sp.identity(len(evars), dtype=complex, format="csr") - deo @ doe).tocsr()
    dhat.eliminate_zeros()
    dhat.sort_indices()
    return OddEvenSystem(dims, dhat, deo, doe, c, ev, od)


def eta_min_dense(D: sp.spmatrix, max_vars: int = 8192) -> float:
    """Smallest real part of the spectrum via dense nonsymmetric eigendecomposition."""
    if D.shape[0] > max_vars:
        raise ValueError(f"operator size {D.shape[0]} exceeds dense guard {max_vars}")
    return float(np.min(np.linalg.eigvals(D.toarray()).real))


def spectrum_dense(D: sp.spmatrix, max_vars: int = 8192) -> np.ndarray:
    if D.shape[0] > max_vars:
        raise ValueError(f"operator size {D.shape[0]} exceeds dense guard {max_vars}")
    return np.linalg.eigvals(D.toarray())


def export_matrix_market(op: sp.spmatrix, path) -> None:
    """Write a complex-general Matrix Market coordinate file."""
    mmwrite(path, sp.coo_matrix(op))
