"""Doublon (eta-pairing) condensates of the two-species Fermi-Hubbard model.

``eta^dag = K^{-1/2} sum_i phi_i f_iu^dag f_id^dag`` with the checkerboard
sign ``phi_i = (-1)^(sum of coordinates)`` (site 0 positive).  The state
``(eta^dag)^N |0>`` is an eigenstate of the Hubbard Hamiltonian with energy
``N U`` and is dark for the link operators
``(eta_i^dag - eta_j^dag)(eta_i + eta_j)`` and
``n_iu f_id^dag f_jd + n_ju f_jd^dag f_id``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .fock import FockSector, build_hamiltonian, build_jump_operators, eta, eta_dagger, fermion_sector, operator
from .lattice import HubbardParams, JumpFamily, JumpKind, LatticeSpec
from .lindblad import evolve, steady_state

log = logging.getLogger(__name__)


class SectorMismatch(ValueError):
    """The initial density matrix does not live on the expected sector."""


def checkerboard(lattice: LatticeSpec) -> np.ndarray:
    """``phi_i = (-1)^(x_0 + ... + x_{d-1})``; requires a bipartite lattice."""
    if lattice.periodic and lattice.M % 2:
        raise ValueError("a periodic lattice with odd M is not bipartite")
    return np.array([(-1) ** sum(lattice.coords(i)) for i in range(lattice.num_sites)], dtype=float)


@dataclass(frozen=True, eq=False)
class EtaState:
    N: int
    sector: FockSector
    vector: np.ndarray
    signs: np.ndarray


def build_eta_state(lattice: LatticeSpec, N: int) -> EtaState:
    """Normalized ``(eta^dag)^N |0>`` on the ``(N, N)`` sector.

    Built by applying the eta creation operator ``N`` times, so the
    Jordan-Wigner signs are those of :mod:`.fock`.
    """
    K = lattice.num_sites
    if N > K:
        raise ValueError(f"N = {N} doublons do not fit on {K} sites")
    if N < 0:
        raise ValueError(f"N must be >= 0, got {N}")
    phi = checkerboard(lattice)
    src = fermion_sector(lattice, 0, 0)
    psi = np.ones(1, dtype=complex)
    for k in range(1, N + 1):
        dst = fermion_sector(lattice, k, k)
        create = operator(src, [(phi[i] / np.sqrt(K), eta_dagger(i)) for i in range(K)], target=dst)
        psi = create @ psi
        src = dst
    psi = psi / np.linalg.norm(psi)
    return EtaState(N, src, psi, phi)


def verify_eigenstate(state: EtaState, params: HubbardParams) -> float:
    """``|| H |eta_N> - N U |eta_N> ||``."""
    H = build_hamiltonian(state.sector, params)
    return float(np.linalg.norm(H @ state.vector - state.N * params.U * state.vector))


def eta_family(kappa1: float = 1.0, kappa2: float | None = None) -> JumpFamily:
    """Both eta jump operators; ``kappa2`` defaults to ``kappa1``."""
    return JumpFamily.make(JumpKind.ETA_FERMION, kappa1=kappa1, kappa2=kappa1 if kappa2 is None else kappa2)


@dataclass(frozen=True)
class EtaConvergence:
    times: np.ndarray
    fidelity: np.ndarray
    final_state: np.ndarray
    kernel_dimension: int | None


def simulate_eta_convergence(
    rho0: np.ndarray,
    lattice: LatticeSpec,
    params: HubbardParams,
    rates: JumpFamily | tuple[float, float] | None,
    t_grid: Sequence[float],
    N: int = 1,
    check_kernel: bool = True,
    tol: float = 1e-12,
) -> EtaConvergence:
    """Fidelity ``<eta_N| rho(t) |eta_N>`` under the Hubbard Hamiltonian and both eta jumps.

    ``rho0`` must be a density matrix on the ``(N, N)`` sector.  With
    ``check_kernel`` the Liouvillian kernel dimension is reported too.
    """
    if lattice.periodic:
        log.warning("eta preparation is specified for open chains; running on a periodic lattice")
    state = build_eta_state(lattice, N)
    sector = state.sector
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (sector.dim, sector.dim):
        raise SectorMismatch(f"rho0 has shape {rho0.shape}, the ({N},{N}) sector has dimension {sector.dim}")
    family = rates if isinstance(rates, JumpFamily) else eta_family(*(rates or (1.0,)))
    H = build_hamiltonian(sector, params)
    jumps = build_jump_operators(sector, family)
    states = evolve(rho0, H, jumps, t_grid, tol=tol)
    psi = state.vector
    fid = np.array([np.real(np.vdot(psi, rho @ psi)) for rho in states])
    kernel = steady_state(H, jumps).kernel_dimension if check_kernel else None
    return EtaConvergence(np.asarray(t_grid, dtype=float), fid, states[-1], kernel)


def doublon_momentum_distribution(state: EtaState) -> tuple[np.ndarray, np.ndarray]:
    """``<eta_k^dag eta_k>`` on the quasimomentum grid of a periodic lattice.

    ``eta_k = K^{-1/2} sum_j exp(i k.x_j) eta_j``.  Returns ``(k, n_k)`` with
    ``k`` of shape ``(K, d)``.
    """
    lat = state.sector.lattice
    lat.require_periodic()
    K = lat.num_sites
    x = np.array([lat.coords(i) for i in range(K)], dtype=float)
    ks = 2 * np.pi * x / lat.M
    psi = state.vector
    corr = np.empty((K, K), dtype=complex)
    for i in range(K):
        for j in range(K):
            op = operator(state.sector, [(1.0, eta_dagger(i) + eta(j))])
            corr[i, j] = np.vdot(psi, op @ psi)
    phase = np.exp(1j * ks @ x.T) / np.sqrt(K)
    n_k = np.real(np.einsum("ki,ij,kj->k", phase.conj(), corr, phase))
    return ks, n_k
