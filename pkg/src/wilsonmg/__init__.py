"""Bootstrap algebraic multigrid for the 2-d Wilson lattice Dirac operator.

Subpackages cover the full pipeline: quenched U(1) gauge generation
(:mod:`wilsonmg.gauge`), assembly of the Wilson operator and its odd-even
reduction (:mod:`wilsonmg.wilson`), Kaczmarz relaxation
(:mod:`wilsonmg.kaczmarz`), least-squares transfer operators
(:mod:`wilsonmg.transfer`), dense kernels (:mod:`wilsonmg.dense`), the
bootstrap multigrid setup and solver (:mod:`wilsonmg.mg`), Krylov baselines
(:mod:`wilsonmg.krylov`) and the experiment harness (:mod:`wilsonmg.cli`).
"""

from .errors import DivergenceError, GaugeFileError, SingularOperatorError
from .lattice import LatticeDims, Site, neighbor, parity, site_index
from .gauge import GaugeConfiguration, load_config, metropolis_sweeps, plaquette, save_config
from .wilson import assemble_wilson, block_spin_form, form_z, gamma5_signature, odd_even_reduce
from .kaczmarz import KaczmarzWorkspace, kaczmarz_sweep, kaczmarz_eig_sweep, ritz_value
from .mg import CycleParams, Hierarchy, default_setup, mg_solve

__all__ = [
    "CycleParams",
    "DivergenceError",
    "GaugeConfiguration",
    "GaugeFileError",
    "Hierarchy",
    "KaczmarzWorkspace",
    "LatticeDims",
    "SingularOperatorError",
    "Site",
    "assemble_wilson",
    "block_spin_form",
    "default_setup",
    "form_z",
    "gamma5_signature",
    "kaczmarz_eig_sweep",
    "kaczmarz_sweep",
    "load_config",
    "metropolis_sweeps",
    "mg_solve",
    "neighbor",
    "odd_even_reduce",
    "parity",
    "plaquette",
    "ritz_value",
    "save_config",
    "site_index",
]
