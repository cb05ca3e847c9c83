"""Quenched U(1) gauge configurations on the periodic 2-d lattice.

Link variables are unit-modulus complex numbers ``U_mu^z = exp(i*theta)``
stored as phases in ``(-pi, pi]``, one per (site, direction).  Configurations
are drawn with a Metropolis chain for the Wilson plaquette action

    S = -beta * sum_z Re(plaq(z)),

so beta -> infinity orders the field toward U = 1 while beta = 0 gives
i.i.d. uniform phases.  The phase array has shape ``(n, n, 2)`` indexed
``[y, x, mu]``; its C-order flattening is exactly the site-major, mu-minor
layout of the on-disk format.

Within one sweep, links are updated in four deterministic groups (x-links on
even/odd rows, y-links on even/odd columns).  Links inside a group share no
plaquette, so the group update factorizes into independent single-link
Metropolis decisions; the sequence of random draws is fixed by the seed,
which makes generation bit-reproducible.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace

import numpy as np

from .errors import GaugeFileError
from .lattice import LatticeDims, Site

_MAGIC = b"WGF1"
_HEADER = struct.Struct("<4sIdQQ")


@dataclass(eq=False)
class GaugeConfiguration:
    dims: LatticeDims
    beta: float
    phases: np.ndarray  # (n, n, 2) float64, [y, x, mu], values in (-pi, pi]
    seed: int = 0
    sweep_count: int = 0

    def __post_init__(self):
        n = self.dims.n
        self.phases = np.ascontiguousarray(self.phases, dtype=np.float64)
        if self.phases.shape != (n, n, 2):
            raise ValueError(f"phase array must have shape {(n, n, 2)}, got {self.phases.shape}")

    def __eq__(self, other):
        return (
            isinstance(other, GaugeConfiguration)
            and self.dims == other.dims
            and self.beta == other.beta
            and self.seed == other.seed
            and self.sweep_count == other.sweep_count
            and np.array_equal(self.phases, other.phases)
        )

    def links(self) -> np.ndarray:
        """Complex link variables exp(i*theta), shape (n, n, 2)."""
        return np.exp(1j * self.phases)


def cold_start(n: int, beta: float, seed: int = 0) -> GaugeConfiguration:
    """All links at unity (theta = 0)."""
    dims = LatticeDims(n)
    return GaugeConfiguration(dims, beta, np.zeros((n, n, 2)), seed=seed)


def random_start(n: int, beta: float, seed: int) -> GaugeConfiguration:
    """I.i.d. uniform phases; the beta = 0 equilibrium distribution."""
    dims = LatticeDims(n)
    rng = np.random.default_rng(seed)
    phases = rng.uniform(-np.pi, np.pi, size=(n, n, 2))
    return GaugeConfiguration(dims, beta, _wrap(phases), seed=seed)


def _wrap(theta: np.ndarray) -> np.ndarray:
    """Reduce phases to (-pi, pi]."""
    w = np.mod(theta + np.pi, 2.0 * np.pi) - np.pi
    return np.where(w == -np.pi, np.pi, w)


def plaquette_angles(cfg: GaugeConfiguration) -> np.ndarray:
    """Oriented phase sum around the elementary square at every site, shape (n, n)."""
    tx = cfg.phases[:, :, 0]
    ty = cfg.phases[:, :, 1]
    # theta_x(z) + theta_y(z+ex) - theta_x(z+ey) - theta_y(z)
    return tx + np.roll(ty, -1, axis=1) - np.roll(tx, -1, axis=0) - ty


def plaquette(cfg: GaugeConfiguration, z: Site) -> complex:
    """conj(U_y^z) conj(U_x^{z+ey}) U_y^{z+ex} U_x^z as a unit-modulus complex number."""
    z = z.reduced(cfg.dims)
    return complex(np.exp(1j * plaquette_angles(cfg)[z.y, z.x]))


def mean_plaquette(cfg: GaugeConfiguration) -> float:
    """Lattice average of Re(plaq)."""
    return float(np.mean(np.cos(plaquette_angles(cfg))))


def total_action(cfg: GaugeConfiguration) -> float:
    return -cfg.beta * float(np.sum(np.cos(plaquette_angles(cfg))))


def _link_group_masks(n: int) -> list[tuple[int, np.ndarray]]:
    rows = np.arange(n)
    even = rows % 2 == 0
    mask_row = np.broadcast_to(even[:, None], (n, n))
    mask_col = np.broadcast_to(even[None, :], (n, n))
    return [
        (0, mask_row),  # x-links, even rows
        (0, ~mask_row),  # x-links, odd rows
        (1, mask_col),  # y-links, even columns
        (1, ~mask_col),  # y-links, odd columns
    ]


def _staple_angles(phases: np.ndarray, mu: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-link angles (a, b) such that the local action is -beta*(cos(theta+a) + cos(b-theta))."""
    tx = phases[:, :, 0]
    ty = phases[:, :, 1]
    if mu == 0:
        # plaq(z): +theta_x(z);  plaq(z-ey): -theta_x(z)
        a = np.roll(ty, -1, axis=1) - np.roll(tx, -1, axis=0) - ty
        ty_dn = np.roll(ty, 1, axis=0)
        b = np.roll(tx, 1, axis=0) + np.roll(ty_dn, -1, axis=1) - ty_dn
    else:
        # plaq(z-ex): +theta_y(z);  plaq(z): -theta_y(z)
        tx_lf = np.roll(tx, 1, axis=1)
        a = tx_lf - np.roll(tx_lf, -1, axis=0) - np.roll(ty, 1, axis=1)
        b = tx + np.roll(ty, -1, axis=1) - np.roll(tx, -1, axis=0)
    return a, b


def metropolis_sweeps(
    cfg: GaugeConfiguration,
    n_sweeps: int,
    proposal_width: float = 1.0,
    rng_seed: int | np.random.Generator | None = None,
) -> GaugeConfiguration:
    """Run full-lattice Metropolis sweeps and return the updated configuration.

    Each link receives one proposal theta' = theta + U(-w, w) per sweep,
    accepted with probability min(1, exp(-dS)).  ``rng_seed`` may be an integer
    (a fresh generator is created) or an existing ``numpy.random.Generator``
    (advanced in place, for snapshot chains); defaults to the configuration's
    stored seed.  ``n_sweeps = 0`` returns the input unchanged.
    """
    if n_sweeps < 0:
        raise ValueError("n_sweeps must be >= 0")
    if proposal_width <= 0:
        raise ValueError("proposal_width must be > 0")
    if n_sweeps == 0:
        return cfg
    if rng_seed is None:
        rng_seed = cfg.seed
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)

    n = cfg.dims.n
    beta = cfg.beta
    phases = cfg.phases.copy()
    groups = _link_group_masks(n)
    for _ in range(n_sweeps):
        for mu, mask in groups:
            theta = phases[:, :, mu]
            a, b = _staple_angles(phases, mu)
            prop = rng.uniform(-proposal_width, proposal_width, size=(n, n))
            u = rng.random((n, n))
            theta_new = theta + prop
            ds = -beta * (
                np.cos(theta_new + a) + np.cos(b - theta_new) - np.cos(theta + a) - np.cos(b - theta)
            )
            accept = mask & (u < np.exp(-np.maximum(ds, -700.0)))
            phases[:, :, mu] = _wrap(np.where(accept, theta_new, theta))
    return replace(cfg, phases=phases, sweep_count=cfg.sweep_count + n_sweeps)


def acceptance_rate(
    cfg: GaugeConfiguration, proposal_width: float, rng: np.random.Generator, n_sweeps: int = 5
) -> float:
    """Empirical acceptance fraction of a few trial sweeps (does not modify cfg)."""
    n = cfg.dims.n
    beta = cfg.beta
    phases = cfg.phases.copy()
    accepted = 0
    total = 0
    for _ in range(n_sweeps):
        for mu, mask in _link_group_masks(n):
            theta = phases[:, :, mu]
            a, b = _staple_angles(phases, mu)
            prop = rng.uniform(-proposal_width, proposal_width, size=(n, n))
            u = rng.random((n, n))
            theta_new = theta + prop
            ds = -beta * (
                np.cos(theta_new + a) + np.cos(b - theta_new) - np.cos(theta + a) - np.cos(b - theta)
            )
            accept = mask & (u < np.exp(-np.maximum(ds, -700.0)))
            accepted += int(np.count_nonzero(accept))
            total += int(np.count_nonzero(mask))
            phases[:, :, mu] = _wrap(np.where(accept, theta_new, theta))
    return accepted / total


def tune_proposal_width(
    cfg: GaugeConfiguration, rng_seed: int, target: float = 0.5, w0: float = 1.0, rounds: int = 8
) -> float:
    """Bisection-style width tuning toward a target acceptance rate."""
    rng = np.random.default_rng(rng_seed)
    w = w0
    for _ in range(rounds):
        rate = acceptance_rate(cfg, w, rng)
        if rate < target:
            w *= 0.7
        else:
            w = min(w / 0.7, np.pi)
    return w


def gauge_transform(cfg: GaugeConfiguration, g_phases: np.ndarray) -> GaugeConfiguration:
    """Apply U_mu^z -> g_z U_mu^z conj(g_{z+e_mu}) with g_z = exp(i*g_phases[y, x])."""
    n = cfg.dims.n
    if g_phases.shape != (n, n):
        raise ValueError(f"gauge function must have shape {(n, n)}")
    out = cfg.phases.copy()
    out[:, :, 0] += g_phases - np.roll(g_phases, -1, axis=1)
    out[:, :, 1] += g_phases - np.roll(g_phases, -1, axis=0)
    return replace(cfg, phases=_wrap(out))


def generate_snapshots(
    n: int,
    beta: float,
    seed: int,
    first_sweep: int = 11_000,
    spacing: int = 1_000,
    count: int = 9,
    proposal_width: float = 1.0,
) -> list[GaugeConfiguration]:
    """Snapshots of one Metropolis chain at sweeps first, first+spacing, ...

    The chain starts cold and uses a single generator throughout, so the whole
    ensemble is a deterministic function of (n, beta, seed).
    """
    rng = np.random.default_rng(seed)
    cfg = cold_start(n, beta, seed=seed)
    out = []
    cfg = metropolis_sweeps(cfg, first_sweep, proposal_width, rng)
    out.append(cfg)
    for _ in range(count - 1):
        cfg = metropolis_sweeps(cfg, spacing, proposal_width, rng)
        out.append(cfg)
    return out


def save_config(cfg: GaugeConfiguration, path) -> None:
    """Write the binary format: magic, u32 n, f64 beta, u64 seed, u64 sweeps, phases."""
    header = _HEADER.pack(
        _MAGIC, cfg.dims.n, cfg.beta, cfg.seed & (2**64 - 1), cfg.sweep_count & (2**64 - 1)
    )
    with open(path, "wb") as f:
        f.write(header)
        f.write(cfg.phases.astype("<f8").tobytes())


def load_config(path) -> GaugeConfiguration:
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < _HEADER.size:
        raise GaugeFileError(f"{path}: file shorter than header ({len(raw)} bytes)")
    magic, n, beta, seed, sweeps = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise GaugeFileError(f"{path}: bad magic {magic!r}, expected {_MAGIC!r}")
    expected = _HEADER.size + 2 * n * n * 8
    if len(raw) != expected:
        raise GaugeFileError(f"{path}: length mismatch, expected {expected} bytes for n={n}, got {len(raw)}")
    phases = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(n, n, 2).copy()
    return GaugeConfiguration(LatticeDims(n), beta, phases, seed=seed, sweep_count=sweeps)
