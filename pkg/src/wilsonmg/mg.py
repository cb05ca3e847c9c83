"""Bootstrap multigrid hierarchy: setup cycles, adaptive step, and the solver.

The hierarchy is built for the Hermitian indefinite form Z of a
gamma5-symmetric operator (in practice the odd-even reduced Wilson operator),
with Galerkin coarse operators Z_c = P^H Z P and mass matrices T_c = P^H T P,
T = I on the finest level.  Interpolation is least-squares-fit to two test
vector sets per level: 'relaxed' vectors smoothed on the homogeneous system
Z v = 0 and 'eigen' vectors approximating the smallest eigenpairs of
(Z_l, T_l), seeded by a dense generalized eigensolve on the coarsest grid and
refined by Kaczmarz sweeps with Ritz-value refreshes on the way up.

One setup cycle visits levels recursively (gamma = 2 gives the W schedule).
A visit runs a descend stage (relax both sets, rebuild P, re-coarsen below,
restrict the sets), recurses into the next level, and an ascend stage
(prolong the eigen set, relax with Ritz refresh, T-normalize, relax the
homogeneous set, rebuild P, re-coarsen below).  The level above the coarsest
recurses once; repeating the coarsest eigensolve back-to-back would
reproduce identical pairs.  The super-V variant visits every level once with
mu*2^l pre- and post-sweeps at (0-based) level l, which matches the W(mu,mu)
cycle's per-level relaxation work while running the coarsest eigensolve only
once.

The solve phase is a standard W(nu, nu) correction scheme with Kaczmarz
smoothing and a direct LU solve on the coarsest grid, posed as Z x = Gamma5 b.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .dense import generalized_hermitian_eig, lu_apply, lu_factor
from .errors import DivergenceError
from .kaczmarz import (
    KaczmarzWorkspace,
    kaczmarz_eig_sweep,
    kaczmarz_sweeps,
    ritz_value,
    t_normalize,
)
from .krylov import gmres_restarted
from .transfer import CoarseningMap, LevelGrid, build_ls_interpolation, full_coarsen, galerkin_coarsen
from .wilson import gamma5_signature

EIGEN_WEIGHT_FLOOR = 1e-10
DIVERGENCE_FACTOR = 10.0
DEFLATION_SAFETY = 1e-3
DEFLATION_REL_THRESHOLD = 0.05
DEFLATION_RANK_CUT = 1e-8
COARSE_CLIP_REL = 1e-5
PROBE_CYCLES = 6
PROBE_TARGET = 0.6
PROBE_ROUNDS = 2


@dataclass
class CycleParams:
    """Cycle counts and test-vector budgets.

    Defaults follow the reference schedule: a W(10,10) bootstrap cycle, an
    adaptive step of two W(4,4) solve cycles on the weakest eigenvector, a
    second W(5,5) bootstrap cycle, and a W(4,4) solve phase with k_r = k_e = 8
    test vectors.  The hierarchy is coarsened down to extent 16 (8 when the
    fine lattice is at most 32).
    """

    nu_pre: int = 4
    nu_post: int = 4
    gamma: int = 2
    k_r: int = 8
    k_e: int = 8
    setup_nu1: int = 10
    setup_nu2: int = 5
    adaptive_nu: int = 4
    adaptive_cycles: int = 2
    floor_extent: int | None = None
    ritz_deflation: bool = True

    def __post_init__(self):
        if min(self.nu_pre, self.nu_post, self.setup_nu1, self.setup_nu2) < 0:
            raise ValueError("sweep counts must be >= 0")
        if self.gamma not in (1, 2):
            raise ValueError("cycle index gamma must be 1 (V) or 2 (W)")
        if self.k_r < 1 or self.k_e < 1:
            raise ValueError("test vector counts must be >= 1")

    def floor_for(self, extent: int) -> int:
        if self.floor_extent is not None:
            return self.floor_extent
        return 16 if extent > 32 else 8


@dataclass
class Level:
    grid: LevelGrid
    Z: sp.csr_matrix
    T: sp.csr_matrix
    gamma5: np.ndarray
    ws: KaczmarzWorkspace
    cmap: CoarseningMap | None = None
    P: sp.csr_matrix | None = None
    PH: sp.csr_matrix | None = None
    relaxed: np.ndarray | None = None  # (n_vars, k_r)
    eigen: np.ndarray | None = None  # (n_vars, k_e) once populated
    ritz: np.ndarray | None = None  # (k_e,)
    deflation: tuple | None = None  # frozen (basis, lu of basis^H Z basis)

    @property
    def has_eigen(self) -> bool:
        return self.eigen is not None and self.eigen.shape[1] > 0


class Hierarchy:
    """Levels plus the coarsest LU factor, relaxation-work counters and a setup log."""

    def __init__(self, params: CycleParams):
        self.params = params
        self.levels: list[Level] = []
        self.coarse_factor = None
        self.coarse_clip = None  # (T-orthonormal pencil basis, clipped inverse eigenvalues)
        self.setup_log: list[dict] = []
        self.sweep_work: dict[int, int] = {}

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    def finest(self) -> Level:
        return self.levels[0]

    def coarsest(self) -> Level:
        return self.levels[-1]

    def grid_complexity(self) -> float:
        n1 = self.levels[0].grid.n_sites
        return sum(lvl.grid.n_sites for lvl in self.levels) / n1

    def operator_complexity(self) -> float:
        nnz1 = self.levels[0].Z.nnz
        return sum(lvl.Z.nnz for lvl in self.levels) / nnz1

    def max_row_nnz(self) -> int:
        return max(int(np.max(np.diff(lvl.Z.indptr))) for lvl in self.levels)

    def count_sweeps(self, l: int, n: int) -> None:
        if n:
            self.sweep_work[l] = self.sweep_work.get(l, 0) + n

    def refactor_coarsest(self) -> None:
        self.coarse_factor = lu_factor(self.coarsest().Z.toarray())
        self.coarse_clip = None

    def coarse_solve(self, b: np.ndarray) -> np.ndarray:
        if self.coarse_clip is not None:
            V, finv = self.coarse_clip
            return V @ (finv * (V.conj().T @ b))
        return lu_apply(self.coarse_factor, b)

    def clip_coarsest(self) -> None:
        """Replace the coarsest LU solve by a pencil inverse with near-zero modes removed.

        Pencil modes of (Z_L, T_L) whose |lambda| sits below the interpolation
        floor are displaced images of finer near-kernel modes (those are
        handled by the per-level deflation) and act as resonances under an
        exact inverse; their contribution is clipped instead."""
        lvl = self.coarsest()
        lam, V = generalized_hermitian_eig(
            lvl.Z.toarray(), lvl.T.toarray(), lvl.Z.shape[0], context="(coarsest clip)"
        )
        tau = COARSE_CLIP_REL * float(np.max(np.abs(lam)))
        finv = np.where(np.abs(lam) >= tau, 1.0 / np.where(lam == 0, 1.0, lam), 0.0)
        # Z^-1 = V f(Lam) V^H for a T-orthonormal complete pencil basis
        self.coarse_clip = (V, finv)
        self.setup_log.append(
            {"stage": "coarse_clip", "clipped": int(np.count_nonzero(np.abs(lam) < tau)), "tau": tau}
        )

    def _refine_vector(self, l: int, v: np.ndarray) -> np.ndarray | None:
        """One inverse-iteration step at level l, solved by cycle-preconditioned GMRES."""
        lvl = self.levels[l]
        zeros = np.zeros(lvl.grid.n_vars, dtype=complex)
        p = self.params
        precond = lambda r: solve_cycle(self, l, zeros, r, p.nu_pre, p.nu_post, p.gamma)
        y, _ = gmres_restarted(lvl.Z, lvl.T @ v, 32, 1e-10, 160, preconditioner=precond)
        if np.linalg.norm(y) == 0.0:
            return None
        return t_normalize(lvl.T, y)

    def _freeze_basis(self, l: int, columns: list[np.ndarray]) -> None:
        lvl = self.levels[l]
        V = np.column_stack(columns)
        G = V.conj().T @ (lvl.T @ V)
        w, U = np.linalg.eigh(0.5 * (G + G.conj().T))
        keep = w > DEFLATION_RANK_CUT * float(w.max())
        W = V @ (U[:, keep] / np.sqrt(w[keep]))
        A = W.conj().T @ (lvl.Z @ W)
        lvl.deflation = (W, lu_factor(0.5 * (A + A.conj().T)))

    def _probe_rate(self, l: int, rng: np.random.Generator) -> tuple[float, np.ndarray]:
        """Error-propagation estimate: level-l cycles on Z x = 0 from a random start."""
        lvl = self.levels[l]
        p = self.params
        x = (
            rng.standard_normal(lvl.grid.n_vars) + 1j * rng.standard_normal(lvl.grid.n_vars)
        ) / np.sqrt(2.0)
        b = np.zeros(lvl.grid.n_vars, dtype=complex)
        n0 = float(np.linalg.norm(x))
        for _ in range(PROBE_CYCLES):
            x = solve_cycle(self, l, x, b, p.nu_pre, p.nu_post, p.gamma)
        rate = (float(np.linalg.norm(x)) / n0) ** (1.0 / PROBE_CYCLES)
        return rate, x

    def _finalize_level(self, l: int, rng: np.random.Generator) -> None:
        lvl = self.levels[l]
        lvl.deflation = None  # refinement below must run the not-yet-deflated cycle
        scale = float(np.max(np.abs(lvl.ritz)))
        selected: list[np.ndarray] = []
        refined = 0
        dropped = 0
        for j in range(lvl.eigen.shape[1]):
            lam = float(lvl.ritz[j])
            if abs(lam) > DEFLATION_REL_THRESHOLD * scale:
                continue
            v = np.ascontiguousarray(lvl.eigen[:, j])
            for _ in range(2):
                res = float(np.linalg.norm(lvl.Z @ v - lam * (lvl.T @ v)))
                if res * res <= DEFLATION_SAFETY * abs(lam):
                    break
                vn = self._refine_vector(l, v)
                if vn is None:
                    break
                v = vn
                lam = ritz_value(lvl.Z, lvl.T, v)
                refined += 1
            res = float(np.linalg.norm(lvl.Z @ v - lam * (lvl.T @ v)))
            if res * res <= DEFLATION_SAFETY * abs(lam):
                lvl.eigen[:, j] = v
                lvl.ritz[j] = lam
                selected.append(v)
            else:
                dropped += 1
        if selected:
            self._freeze_basis(l, selected)

        rates = []
        for _ in range(PROBE_ROUNDS):
            rate, slow = self._probe_rate(l, rng)
            rates.append(rate)
            if rate <= PROBE_TARGET:
                break
            v = self._refine_vector(l, slow / np.linalg.norm(slow))
            if v is None:
                break
            lam = ritz_value(lvl.Z, lvl.T, v)
            res = float(np.linalg.norm(lvl.Z @ v - lam * (lvl.T @ v)))
            if res * res > DEFLATION_SAFETY * abs(lam):
                break
            selected.append(v)
            self._freeze_basis(l, selected)
        self.setup_log.append(
            {
                "stage": "deflation",
                "level": l,
                "rank": 0 if lvl.deflation is None else lvl.deflation[0].shape[1],
                "refined": refined,
                "dropped": dropped,
                "probe_rates": [float(r) for r in rates],
            }
        )

    def finalize_deflation(self, rng: np.random.Generator | int | None = None) -> None:
        """Freeze per-level Galerkin corrections over the near-kernel Ritz pairs.

        The plain coarse-grid correction is resonance-unstable on eigenmodes
        whose |lambda| falls below the interpolation-error floor of the next
        coarser pencil; correcting those directions with their exact Rayleigh
        data removes the instability.  Per level (coarsest excluded, finalized
        bottom-up so finer refinements run on already-stabilized sub-cycles):
        eigen test vectors with small |ritz| relative to the largest are
        refined by inverse iteration (cycle-preconditioned GMRES) until the
        deflation-safety bound res^2 <= safety * |ritz| holds; vectors that
        stay unsafe would amplify rather than correct and are dropped.  A
        short error-propagation probe then tests each level's cycle and, if
        the rate is poor, refines and adjoins the surviving slow mode.  All
        corrections are frozen afterwards, so the deflated cycle remains a
        fixed linear operator (sound as a GMRES preconditioner)."""
        if not self.finest().has_eigen:
            raise ValueError("deflation requires populated eigen sets")
        rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        if self.n_levels > 1:
            self.clip_coarsest()
        for l in range(self.n_levels - 2, -1, -1):
            if self.levels[l].has_eigen:
                self._finalize_level(l, rng)

    def diagnostics(self) -> dict:
        return {
            "levels": [
                {
                    "extent": lvl.grid.extent,
                    "sites": lvl.grid.n_sites,
                    "vars": lvl.grid.n_vars,
                    "nnz": int(lvl.Z.nnz),
                    "ritz": None if lvl.ritz is None else [float(v) for v in lvl.ritz],
                }
                for lvl in self.levels
            ],
            "grid_complexity": self.grid_complexity(),
            "operator_complexity": self.operator_complexity(),
            "max_row_nnz": self.max_row_nnz(),
            "sweep_work": {str(k): v for k, v in sorted(self.sweep_work.items())},
        }


def _symmetrize(M: sp.spmatrix) -> sp.csr_matrix:
    S = ((M + M.getH()) * 0.5).tocsr()
    S.sort_indices()
    return S


def _ls_weights(lvl: Level, k_r_present: int) -> np.ndarray:
    """Unit weights for relaxed vectors; 1/|ritz| (floored) for eigen vectors."""
    w = [np.ones(k_r_present)]
    if lvl.has_eigen:
        mags = np.abs(lvl.ritz)
        mean = float(np.mean(mags))
        if mean <= 0.0:
            w.append(np.ones(len(mags)))
        else:
            w.append(1.0 / np.maximum(mags, EIGEN_WEIGHT_FLOOR * mean))
    return np.concatenate(w)


def _rebuild_p(h: Hierarchy, l: int) -> None:
    """Refit P_l from the current test vectors and re-coarsen everything below."""
    lvl = h.levels[l]
    vectors = lvl.relaxed if not lvl.has_eigen else np.hstack([lvl.relaxed, lvl.eigen])
    weights = _ls_weights(lvl, lvl.relaxed.shape[1])
    P, fallback = build_ls_interpolation(lvl.cmap, vectors, weights)
    lvl.P = P
    lvl.PH = P.getH().tocsr()
    lvl.deflation = None  # frozen corrections are stale once P changes
    if fallback:
        h.setup_log.append({"stage": "ls_fallback", "level": l, "rows": fallback})
    _recoarsen_below(h, l)


def _recoarsen_below(h: Hierarchy, l: int) -> None:
    """Propagate Z/T Galerkin products from level l downward; refresh the LU."""
    for j in range(l, h.n_levels - 1):
        lvl = h.levels[j]
        Zc, Tc, _ = galerkin_coarsen(lvl.Z, lvl.P, lvl.T)
        nxt = h.levels[j + 1]
        nxt.Z = Zc
        nxt.T = Tc
        nxt.ws = KaczmarzWorkspace(Zc)
        nxt.deflation = None
        if nxt.has_eigen:
            # keep the stored pairs consistent with the refreshed operators
            for k in range(nxt.eigen.shape[1]):
                v = t_normalize(Tc, np.ascontiguousarray(nxt.eigen[:, k]))
                nxt.eigen[:, k] = v
                nxt.ritz[k] = ritz_value(Zc, Tc, v)
    h.refactor_coarsest()


def _relax_homogeneous(h: Hierarchy, l: int, nu: int) -> None:
    if nu == 0:
        return
    lvl = h.levels[l]
    zero = np.zeros(lvl.grid.n_vars, dtype=complex)
    for j in range(lvl.relaxed.shape[1]):
        v = np.ascontiguousarray(lvl.relaxed[:, j])
        kaczmarz_sweeps(lvl.ws, v, zero, nu)
        nrm = np.linalg.norm(v)
        lvl.relaxed[:, j] = v / (nrm if nrm > 0 else 1.0)
    h.count_sweeps(l, nu * lvl.relaxed.shape[1])


def _relax_eigen(h: Hierarchy, l: int, nu: int) -> None:
    """nu Kaczmarz eigen-sweeps per vector with a Ritz refresh after each; T-normalize."""
    lvl = h.levels[l]
    if not lvl.has_eigen or nu == 0:
        return
    for j in range(lvl.eigen.shape[1]):
        v = np.ascontiguousarray(lvl.eigen[:, j])
        lam = float(lvl.ritz[j])
        for _ in range(nu):
            v = kaczmarz_eig_sweep(lvl.ws, lvl.T, v, lam)
            lam = ritz_value(lvl.Z, lvl.T, v)
        lvl.eigen[:, j] = t_normalize(lvl.T, v)
        lvl.ritz[j] = lam
    h.count_sweeps(l, nu * lvl.eigen.shape[1])


def _restrict_test_vectors(h: Hierarchy, l: int) -> None:
    """Move both sets to level l+1 as initial guesses (plain P^H restriction)."""
    lvl = h.levels[l]
    nxt = h.levels[l + 1]
    R = lvl.PH
    rel = R @ lvl.relaxed
    norms = np.linalg.norm(rel, axis=0)
    norms[norms == 0] = 1.0
    nxt.relaxed = rel / norms
    if lvl.has_eigen:
        eig = R @ lvl.eigen
        ritz = np.empty(eig.shape[1])
        for j in range(eig.shape[1]):
            v = t_normalize(nxt.T, np.ascontiguousarray(eig[:, j]))
            eig[:, j] = v
            ritz[j] = ritz_value(nxt.Z, nxt.T, v)
        nxt.eigen = eig
        nxt.ritz = ritz


def _prolong_eigen(h: Hierarchy, l: int) -> None:
    """Pull the eigen set up from level l+1; Ritz values carry over."""
    lvl = h.levels[l]
    nxt = h.levels[l + 1]
    if nxt.eigen is None:
        return
    lvl.eigen = lvl.P @ nxt.eigen
    lvl.ritz = nxt.ritz.copy()


def _coarsest_eigensolve(h: Hierarchy) -> None:
    lvl = h.coarsest()
    lam, V = generalized_hermitian_eig(
        lvl.Z.toarray(), lvl.T.toarray(), h.params.k_e, context=f"(level {h.n_levels})"
    )
    lvl.eigen = V
    lvl.ritz = lam.astype(float)
    h.setup_log.append({"stage": "coarsest_eig", "ritz": [float(v) for v in lam]})


def initial_setup(
    Z1: sp.csr_matrix,
    grid: LevelGrid,
    params: CycleParams | None = None,
    rng: np.random.Generator | int | None = None,
) -> Hierarchy:
    """Build the initial hierarchy from relaxed random test vectors only.

    Starting from k_r unit-variance complex normal vectors on the finest
    level, each level applies ``setup_nu1`` homogeneous Kaczmarz sweeps,
    fits P, Galerkin-coarsens, and restricts the vectors as the next level's
    initial guesses, until the extent floor is reached.  The coarsest Z is
    LU-factorized.
    """
    params = params or CycleParams()
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    if Z1.shape[0] != grid.n_vars:
        raise ValueError("operator size does not match grid")
    h = Hierarchy(params)
    Z1 = _symmetrize(Z1)
    T1 = sp.identity(grid.n_vars, dtype=complex, format="csr")
    lvl = Level(grid, Z1, T1, gamma5_signature(grid.n_vars), KaczmarzWorkspace(Z1))
    lvl.relaxed = (
        rng.standard_normal((grid.n_vars, params.k_r))
        + 1j * rng.standard_normal((grid.n_vars, params.k_r))
    ) / np.sqrt(2.0)
    h.levels.append(lvl)

    floor = params.floor_for(grid.extent)
    if floor < 4:
        raise ValueError("coarsest extent floor must be >= 4")
    l = 0
    while h.levels[l].grid.extent > floor and h.levels[l].grid.extent % 4 == 0:
        lvl = h.levels[l]
        _relax_homogeneous(h, l, params.setup_nu1)
        lvl.cmap = full_coarsen(lvl.grid, lvl.Z)
        P, _ = build_ls_interpolation(lvl.cmap, lvl.relaxed, np.ones(params.k_r))
        lvl.P = P
        lvl.PH = P.getH().tocsr()
        Zc, Tc, g5c = galerkin_coarsen(lvl.Z, P, lvl.T)
        nxt = Level(lvl.cmap.coarse, Zc, Tc, g5c, KaczmarzWorkspace(Zc))
        h.levels.append(nxt)
        _restrict_test_vectors(h, l)
        l += 1
    if h.coarsest().grid.n_vars < params.k_e:
        raise ValueError(
            f"coarsest level has {h.coarsest().grid.n_vars} variables < k_e = {params.k_e}"
        )
    h.refactor_coarsest()
    h.setup_log.append(
        {
            "stage": "initial",
            "levels": h.n_levels,
            "grid_complexity": h.grid_complexity(),
            "operator_complexity": h.operator_complexity(),
        }
    )
    return h


def _setup_visit(h: Hierarchy, l: int, nu_of_level, gamma: int) -> None:
    if l == h.n_levels - 1:
        _coarsest_eigensolve(h)
        return
    nu = nu_of_level(l)
    # descend stage
    _relax_homogeneous(h, l, nu)
    _relax_eigen(h, l, nu)
    _rebuild_p(h, l)
    _restrict_test_vectors(h, l)
    reps = 1 if l + 1 == h.n_levels - 1 else gamma
    for _ in range(reps):
        _setup_visit(h, l + 1, nu_of_level, gamma)
    # ascend stage
    _prolong_eigen(h, l)
    _relax_eigen(h, l, nu)
    _relax_homogeneous(h, l, nu)
    _rebuild_p(h, l)
    h.setup_log.append({"stage": "ascend", "level": l, "ritz": [float(v) for v in h.levels[l].ritz]})


def bootstrap_cycle(h: Hierarchy, nu: int, gamma: int = 2) -> Hierarchy:
    """One recursive bootstrap setup cycle with nu pre/post sweeps per level."""
    _setup_visit(h, 0, lambda l: nu, gamma)
    return h


def super_v_setup(h: Hierarchy, mu: int) -> Hierarchy:
    """Single-pass setup with mu*2^l sweeps per stage at (0-based) level l.

    Per level the descend and ascend stages together apply mu*2^(l+1) sweeps
    per test vector, the same total as a W(mu,mu) cycle, but the coarsest
    eigensolve runs exactly once.
    """
    _setup_visit(h, 0, lambda l: mu * 2**l, gamma=1)
    return h


def adaptive_step(h: Hierarchy, nu: int | None = None, n_cycles: int | None = None) -> Hierarchy:
    """Improve the finest-level eigenvector with the smallest |ritz| using the
    current solver: n_cycles W(nu, nu) solve cycles on Z v = ritz * T v with the
    right-hand side frozen per cycle and the Ritz value refreshed between
    cycles.  Only the finest-level copy of the vector is replaced."""
    lvl = h.finest()
    if not lvl.has_eigen:
        raise ValueError("adaptive step requires a populated eigen set on the finest level")
    nu = h.params.adaptive_nu if nu is None else nu
    n_cycles = h.params.adaptive_cycles if n_cycles is None else n_cycles
    j = int(np.argmin(np.abs(lvl.ritz)))
    v = np.ascontiguousarray(lvl.eigen[:, j])
    lam = float(lvl.ritz[j])
    for _ in range(n_cycles):
        b = lam * (lvl.T @ v)
        v = solve_cycle(h, 0, v, b, nu, nu, h.params.gamma)
        lam = ritz_value(lvl.Z, lvl.T, v)
    lvl.eigen[:, j] = t_normalize(lvl.T, v)
    lvl.ritz[j] = lam
    h.setup_log.append({"stage": "adaptive", "vector": j, "ritz": lam})
    return h


def default_setup(
    Z1: sp.csr_matrix,
    grid: LevelGrid,
    params: CycleParams | None = None,
    rng: np.random.Generator | int | None = None,
    schedule: str = "w",
) -> Hierarchy:
    """Full setup: initial build, first cycle, adaptive step, second cycle.

    schedule 'w' runs W(setup_nu1) and W(setup_nu2) bootstrap cycles;
    'super-v' runs the V(mu 2^l) variant with mu = setup_nu1, setup_nu2.
    """
    params = params or CycleParams()
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    h = initial_setup(Z1, grid, params, rng)
    if schedule == "w":
        bootstrap_cycle(h, params.setup_nu1, params.gamma)
        adaptive_step(h)
        bootstrap_cycle(h, params.setup_nu2, params.gamma)
    elif schedule == "super-v":
        super_v_setup(h, params.setup_nu1)
        adaptive_step(h)
        super_v_setup(h, params.setup_nu2)
    else:
        raise ValueError(f"unknown setup schedule {schedule!r}")
    if params.ritz_deflation:
        h.finalize_deflation(rng)
    return h


def solve_cycle(
    h: Hierarchy,
    l: int,
    x: np.ndarray,
    b: np.ndarray,
    nu_pre: int,
    nu_post: int,
    gamma: int,
) -> np.ndarray:
    """One multigrid cycle on Z_l x = b; coarsest level solves directly."""
    if l == h.n_levels - 1:
        return h.coarse_solve(b)
    lvl = h.levels[l]
    x = np.array(x, dtype=complex, copy=True)
    if nu_pre:
        kaczmarz_sweeps(lvl.ws, x, b, nu_pre)
        h.count_sweeps(l, nu_pre)
    rc = lvl.PH @ (b - lvl.Z @ x)
    e = np.zeros(lvl.P.shape[1], dtype=complex)
    reps = 1 if l + 1 == h.n_levels - 1 else gamma
    for _ in range(reps):
        e = solve_cycle(h, l + 1, e, rc, nu_pre, nu_post, gamma)
    x += lvl.P @ e
    if lvl.deflation is not None:
        W, af = lvl.deflation
        x += W @ lu_apply(af, W.conj().T @ (b - lvl.Z @ x))
    if nu_post:
        kaczmarz_sweeps(lvl.ws, x, b, nu_post)
        h.count_sweeps(l, nu_post)
    return x


@dataclass
class MgReport:
    iterations: int
    converged: bool
    relative_residual: float
    rho_residual: float
    rho_error: float | None
    relative_error: float | None
    residual_history: np.ndarray


def mg_solve(
    h: Hierarchy,
    b: np.ndarray,
    tol: float = 1e-8,
    max_iter: int = 100,
    x0: np.ndarray | None = None,
    x_true: np.ndarray | None = None,
    nu_pre: int | None = None,
    nu_post: int | None = None,
) -> tuple[np.ndarray, MgReport]:
    """Repeat W(nu_pre, nu_post) cycles until the relative residual meets tol.

    The convergence-rate estimate rho is the last residual-norm ratio, and the
    last error-norm ratio as well when the true solution is supplied.  A
    residual growing past 10x its initial value raises DivergenceError.
    """
    lvl = h.finest()
    nu_pre = h.params.nu_pre if nu_pre is None else nu_pre
    nu_post = h.params.nu_post if nu_post is None else nu_post
    x = np.zeros(lvl.grid.n_vars, dtype=complex) if x0 is None else np.array(x0, dtype=complex)
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        if np.linalg.norm(x) == 0.0:
            return x, MgReport(0, True, 0.0, 0.0, None, None, np.zeros(0))
        bnorm = 1.0
    rnorms = [float(np.linalg.norm(b - lvl.Z @ x))]
    enorms = None if x_true is None else [float(np.linalg.norm(x - x_true))]
    converged = False
    for _ in range(max_iter):
        x = solve_cycle(h, 0, x, b, nu_pre, nu_post, h.params.gamma)
        rnorms.append(float(np.linalg.norm(b - lvl.Z @ x)))
        if enorms is not None:
            enorms.append(float(np.linalg.norm(x - x_true)))
        if rnorms[-1] / bnorm <= tol:
            converged = True
            break
        if rnorms[-1] > DIVERGENCE_FACTOR * rnorms[0]:
            raise DivergenceError(
                f"multigrid residual grew from {rnorms[0]:.3e} to {rnorms[-1]:.3e} "
                f"after {len(rnorms) - 1} cycles"
            )
    iters = len(rnorms) - 1
    rho_res = rnorms[-1] / rnorms[-2] if iters and rnorms[-2] > 0 else 0.0
    rho_err = None
    rel_err = None
    if enorms is not None:
        rel_err = enorms[-1] / max(np.linalg.norm(x_true), 1e-300)
        if iters and enorms[-2] > 0:
            rho_err = enorms[-1] / enorms[-2]
    return x, MgReport(
        iters, converged, rnorms[-1] / bnorm, rho_res, rho_err, rel_err, np.array(rnorms)
    )
