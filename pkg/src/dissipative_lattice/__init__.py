"""Dissipatively driven condensates on Hubbard lattices.

Submodules:

- :mod:`.lattice`: lattice geometry, parameters, momentum grids, jump families
- :mod:`.fock`: Fock sectors and sparse operators (bosons and spinful fermions)
- :mod:`.lindblad`: exact master-equation evolution, steady states, dark-state checks
- :mod:`.meanfield`: linearized Bogoliubov moments, depletion and relaxation
- :mod:`.phase`: phase-only model for 1D/2D correlations
- :mod:`.eta`: doublon condensates of the Fermi-Hubbard model
- :mod:`.cli`: the ``sim`` command
"""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:
    __version__ = "0.1.0"

from .lattice import (
    Boundary,
    HubbardParams,
    JumpFamily,
    JumpKind,
    LatticeSpec,
    ModeIndex,
    MomentumUnavailable,
    bloch_energy,
    enumerate_links,
    mode_grid,
)
from .fock import (
    FockSector,
    IncompatibleFamily,
    Statistics,
    bec_state,
    boson_sector,
    build_hamiltonian,
    build_jump_operators,
    fermion_sector,
)
from .lindblad import (
    DarkStateReport,
    Observables,
    SteadyState,
    dark_state_check,
    evolve,
    liouvillian_apply,
    liouvillian_matrix,
    maximally_mixed,
    observables,
    steady_state,
)
from .meanfield import (
    ModeMomentState,
    ModeParams,
    depletion,
    evolve_moments,
    mode_params,
    relax,
    steady_moments,
    steady_squeezing,
)
from .phase import (
    InitialDisorderSpec,
    LatticeGrid,
    PhaseModelParams,
    RadialGrid,
    derived_scales,
    evolve_correlations,
    steady_correlation,
)
from .eta import build_eta_state, simulate_eta_convergence, verify_eigenstate

__all__ = [name for name in dir() if not name.startswith("_") and name not in ("version", "PackageNotFoundError")]
