"""Grid hierarchy geometry and least-squares transfer operators.

Every level of the hierarchy is a rotated square sublattice of the original
n x n grid: level 1 holds the even sites (x + y even), and each full
coarsening keeps every other point in each intrinsic dimension of the
current sublattice, so the effective extent halves per level (grid points
drop by 4x, which keeps the grid and operator complexities below 4/3 + eps).
Coarse/fine splitting, interpolation patterns and the spin-block structure
are all derived from the level operator's graph: a fine variable interpolates
from the same-spin variables of neighboring coarse grid points, at most four
of them, so interpolation commutes with Gamma5 exactly and Galerkin products
preserve the 9-grid-point / 18-entry row structure on all levels.

Interpolation weights are fit row-wise by a weighted least-squares problem
over the current test vectors (ridge-regularized normal equations, at most
4 unknowns per row).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .lattice import LatticeDims
from .wilson import gamma5_signature

RIDGE_SCALE = 1e-12
MAX_INTERP = 4


@dataclass(frozen=True)
class LevelGrid:
    """Sites of one hierarchy level, as coordinates on the original lattice.

    ``step`` is the sublattice scale: sites are {s*(a+b), s*(a-b)} for integer
    intrinsic coordinates (a, b).  Sites are stored sorted by y*n + x.
    """

    n: int
    step: int
    x: np.ndarray
    y: np.ndarray

    @property
    def extent(self) -> int:
        return self.n // self.step

    @property
    def n_sites(self) -> int:
        return self.x.shape[0]

    @property
    def n_vars(self) -> int:
        return 2 * self.n_sites

    def intrinsic(self) -> tuple[np.ndarray, np.ndarray]:
        """Integer coordinates along the sublattice generators (parity-safe for extent % 4 == 0)."""
        a = (self.x + self.y) // (2 * self.step)
        b = ((self.x - self.y) % self.n) // (2 * self.step)
        return a, b


def even_grid(dims: LatticeDims) -> LevelGrid:
    """Level-1 grid: the even sites of the full lattice."""
    idx = np.arange(dims.n_sites)
    x = idx % dims.n
    y = idx // dims.n
    keep = (x + y) % 2 == 0
    return LevelGrid(dims.n, 1, x[keep], y[keep])


@dataclass
class CoarseningMap:
    """Coarse/fine splitting of one level plus per-variable interpolatory sets."""

    fine: LevelGrid
    coarse: LevelGrid
    coarse_site_mask: np.ndarray  # (n_sites,) bool
    coarse_rank: np.ndarray  # (n_sites,) int, rank among coarse sites or -1
    # grouped by interpolatory-set size c: fine var ids, their coarse var ids
    # (columns of P) and the fine-level var ids of those coarse variables
    # (for reading test-vector values)
    groups: dict = field(default_factory=dict)  # c -> (fine_vars, coarse_cols, donor_vars)

    @property
    def n_coarse_vars(self) -> int:
        return self.coarse.n_vars

    def coarse_var_of_fine(self) -> tuple[np.ndarray, np.ndarray]:
        """(fine var ids of coarse sites, matching coarse var ids) for the unit rows."""
        sites = np.flatnonzero(self.coarse_site_mask)
        ranks = self.coarse_rank[sites]
        fine_vars = (2 * sites[:, None] + np.arange(2)).ravel()
        coarse_vars = (2 * ranks[:, None] + np.arange(2)).ravel()
        return fine_vars, coarse_vars


def full_coarsen(grid: LevelGrid, Z: sp.csr_matrix) -> CoarseningMap:
    """Mark every other point per intrinsic dimension coarse and build interpolatory sets.

    The set for a fine variable holds the same-spin coarse variables its
    operator row couples to, truncated to the four of largest magnitude
    (ties broken by variable index).
    """
    if grid.extent % 4 != 0:
        raise ValueError(f"cannot coarsen a level of extent {grid.extent}; need a multiple of 4")
    if Z.shape[0] != grid.n_vars:
        raise ValueError("operator size does not match grid")
    a, b = grid.intrinsic()
    cmask = (a % 2 == 0) & (b % 2 == 0)
    n_coarse = int(np.count_nonzero(cmask))
    assert n_coarse * 4 == grid.n_sites
    rank = np.full(grid.n_sites, -1, dtype=np.int64)
    rank[cmask] = np.arange(n_coarse)
    coarse = LevelGrid(grid.n, 2 * grid.step, grid.x[cmask], grid.y[cmask])

    coo = Z.tocoo()
    r, c, v = coo.row, coo.col, np.abs(coo.data)
    fine_site = ~cmask
    keep = (
        (r % 2 == c % 2)
        & fine_site[r // 2]
        & cmask[c // 2]
        & (v > 0)
    )
    r, c, v = r[keep], c[keep], v[keep]
    # strongest couplings first within each row; stable index tie-break
    order = np.lexsort((c, -v, r))
    r, c = r[order], c[order]
    row_starts = np.searchsorted(r, np.arange(grid.n_vars))
    row_ends = np.searchsorted(r, np.arange(grid.n_vars) + 1)

    fine_vars = np.flatnonzero(np.repeat(fine_site, 2))
    counts = np.minimum(row_ends[fine_vars] - row_starts[fine_vars], MAX_INTERP)
    if np.any(counts == 0):
        bad = fine_vars[counts == 0][:5]
        raise ValueError(f"fine variables with empty interpolatory sets: {bad.tolist()}")

    groups: dict = {}
    for cc in range(1, MAX_INTERP + 1):
        sel = fine_vars[counts == cc]
        if sel.size == 0:
            continue
        take = row_starts[sel][:, None] + np.arange(cc)[None, :]
        donors = c[take]
        coarse_cols = 2 * rank[donors // 2] + donors % 2
        groups[cc] = (sel, coarse_cols, donors)
    return CoarseningMap(grid, coarse, cmask, rank, groups)


def build_ls_interpolation(
    cmap: CoarseningMap, vectors: np.ndarray, weights: np.ndarray
) -> tuple[sp.csr_matrix, int]:
    """Spin-block-diagonal P fitted to the test vectors; returns (P, fallback_rows).

    Row i of P minimizes sum_k w_k |v_k[i] - sum_j p_j v_k[j]|^2 over its
    interpolatory set, via the ridge-regularized normal equations.  Rows whose
    local test-vector data vanishes fall back to equal weights and are counted
    in ``fallback_rows``.
    """
    if vectors.ndim != 2 or vectors.shape[0] != cmap.fine.n_vars:
        raise ValueError("test vector array must be (n_vars, k)")
    k = vectors.shape[1]
    if k < 1:
        raise ValueError("need at least one test vector")
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (k,) or np.any(weights <= 0):
        raise ValueError("weights must be positive, one per test vector")

    rows = []
    cols = []
    vals = []
    unit_rows, unit_cols = cmap.coarse_var_of_fine()
    rows.append(unit_rows)
    cols.append(unit_cols)
    vals.append(np.ones(unit_rows.shape[0], dtype=complex))

    fallback = 0
    for cc, (fine_vars, coarse_cols, donors) in sorted(cmap.groups.items()):
        V = vectors[donors]  # (m, cc, k) values at donor variables
        V = np.swapaxes(V, 1, 2)  # (m, k, cc)
        t = vectors[fine_vars]  # (m, k)
        G = np.einsum("mkc,k,mkd->mcd", V.conj(), weights, V)
        g = np.einsum("mkc,k,mk->mc", V.conj(), weights, t)
        tr = np.einsum("mcc->m", G).real
        degenerate = tr <= 0.0
        ridge = RIDGE_SCALE * tr / cc
        G = G + (ridge[:, None, None] + np.where(degenerate, 1.0, 0.0)[:, None, None]) * np.eye(cc)
        p = np.linalg.solve(G, g[..., None])[..., 0]
        if np.any(degenerate):
            fallback += int(np.count_nonzero(degenerate))
            p[degenerate] = 1.0 / cc
        rows.append(np.repeat(fine_vars, cc))
        cols.append(coarse_cols.ravel())
        vals.append(p.ravel())

    P = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(cmap.fine.n_vars, cmap.n_coarse_vars),
    ).tocsr()
    P.sort_indices()
    return P, fallback


def check_spin_structure(P: sp.spmatrix) -> None:
    """Reject cross-spin entries (they would break Gamma5 commutation)."""
    coo = P.tocoo()
    if np.any((coo.row % 2) != (coo.col % 2)):
        raise ValueError("interpolation has cross-spin entries")


def galerkin_coarsen(
    Z: sp.csr_matrix, P: sp.csr_matrix, T: sp.csr_matrix
) -> tuple[sp.csr_matrix, sp.csr_matrix, np.ndarray]:
    """Coarse operator pair (P^H Z P, P^H T P), Hermitian-symmetrized, plus coarse Gamma5."""
    check_spin_structure(P)
    PH = P.getH().tocsr()

    def product(M):
        C = (PH @ (M @ P)).tocsr()
        C = ((C + C.getH()) * 0.5).tocsr()
        C.sort_indices()
        return C

    Zc = product(Z)
    Tc = product(T)
    return Zc, Tc, gamma5_signature(P.shape[1])


def prolong_vector(P: sp.spmatrix, v: np.ndarray) -> np.ndarray:
    return P @ v


def restrict_vector(P: sp.spmatrix, v: np.ndarray) -> np.ndarray:
    return P.getH() @ v


def restrict_vector_t_weighted(
    P: sp.spmatrix, T_fine: sp.spmatrix, T_coarse: sp.spmatrix, v: np.ndarray
) -> np.ndarray:
    """T-weighted projection T_c^-1 P^H T v (off by default in the setup)."""
    rhs = P.getH() @ (T_fine @ v)
    return splu(T_coarse.tocsc()).solve(rhs)
