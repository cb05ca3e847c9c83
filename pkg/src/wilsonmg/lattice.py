"""Periodic 2-d lattice indexing, parity and neighbor maps.

Coordinates are 0-based and always reduced modulo the extent ``n``.  The
global layout is y-major lexicographic: ``site_index((x, y)) = y*n + x``.
Spinor degrees of freedom live at index ``2*site + spin`` (site-major,
spin-minor).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

X, Y = 0, 1
PLUS, MINUS = +1, -1


@dataclass(frozen=True)
class LatticeDims:
    """Square periodic lattice with ``n`` points per dimension (d = 2)."""

    n: int
    d: int = 2

    def __post_init__(self):
        if self.d != 2:
            raise ValueError(f"only d=2 lattices are supported, got d={self.d}")
        if self.n < 4 or self.n % 2 != 0:
            raise ValueError(f"extent must be even and >= 4, got n={self.n}")

    @property
    def n_sites(self) -> int:
        return self.n * self.n

    @property
    def n_vars(self) -> int:
        # two spin components per site
        return 2 * self.n_sites


@dataclass(frozen=True)
class Site:
    """Grid point; coordinates are stored reduced modulo the extent."""

    x: int
    y: int

    def reduced(self, dims: LatticeDims) -> "Site":
        return Site(self.x % dims.n, self.y % dims.n)


def site_index(s: Site, dims: LatticeDims) -> int:
    """Map a site to its lexicographic index ``y*n + x``."""
    s = s.reduced(dims)
    return s.y * dims.n + s.x


def site_from_index(i: int, dims: LatticeDims) -> Site:
    return Site(i % dims.n, i // dims.n)


def neighbor(s: Site, mu: int, sign: int, dims: LatticeDims) -> Site:
    """Shift one step along ``mu`` (X or Y); ``sign`` is +1 or -1."""
    if mu == X:
        return Site((s.x + sign) % dims.n, s.y % dims.n)
    if mu == Y:
        return Site(s.x % dims.n, (s.y + sign) % dims.n)
    raise ValueError(f"invalid direction {mu}")


def parity(s: Site) -> int:
    """0 for even sites (x + y even), 1 for odd."""
    return (s.x + s.y) % 2


def site_coords(dims: LatticeDims) -> tuple[np.ndarray, np.ndarray]:
    """(x, y) coordinate arrays for all sites in site_index order."""
    idx = np.arange(dims.n_sites)
    return idx % dims.n, idx // dims.n


def shift_index(dims: LatticeDims, mu: int, sign: int) -> np.ndarray:
    """Vectorized neighbor map: entry i is site_index of the mu/sign neighbor of site i."""
    x, y = site_coords(dims)
    if mu == X:
        x = (x + sign) % dims.n
    elif mu == Y:
        y = (y + sign) % dims.n
    else:
        raise ValueError(f"invalid direction {mu}")
    return y * dims.n + x


def even_site_indices(dims: LatticeDims) -> np.ndarray:
    x, y = site_coords(dims)
    return np.flatnonzero((x + y) % 2 == 0)


def odd_site_indices(dims: LatticeDims) -> np.ndarray:
    x, y = site_coords(dims)
    return np.flatnonzero((x + y) % 2 == 1)
