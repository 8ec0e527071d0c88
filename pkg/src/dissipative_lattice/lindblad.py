"""Master-equation dynamics, steady states and dark-state diagnostics.

The generator is

    drho/dt = -i[H, rho] + sum_l k_l (2 c rho c^dag - c^dag c rho - rho c^dag c)

with the factor 2 on the sandwich term.  Density matrices are dense complex
arrays; Hamiltonians and jumps are scipy sparse matrices.  Vectorization is
row-major, ``vec(A rho B) = (A kron B^T) vec(rho)``.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import solve_ivp

from .fock import FockSector, Statistics, bilinear, number_operator

log = logging.getLogger(__name__)

Jumps = Sequence[tuple[sp.spmatrix, float]]

TRACE_TOL = 1e-9
POSITIVITY_TOL = 1e-10
KERNEL_RTOL = 1e-10
DEFAULT_SQUARED_DIM_CAP = 4096
DENSE_SQUARED_DIM = 1600


class IntegrationError(RuntimeError):
    """The adaptive integrator could not reach the requested time."""


class SteadyStateTooLarge(ValueError):
    """The vectorized Liouvillian exceeds the configured size cap."""


class InvariantWarning(UserWarning):
    """A density-matrix invariant drifted beyond tolerance during evolution."""


def _check_dims(rho, H, jumps):
    D = H.shape[0]
    if H.shape != (D, D) or rho.shape != (D, D):
        raise ValueError(f"dimension mismatch: rho {rho.shape}, H {H.shape}")
    for c, _ in jumps:
        if c.shape != (D, D):
            raise ValueError(f"dimension mismatch: jump {c.shape}, H {H.shape}")


def liouvillian_apply(rho: np.ndarray, H, jumps: Jumps) -> np.ndarray:
    """Time derivative of ``rho`` under the master equation."""
    rho = np.asarray(rho, dtype=complex)
    H = sp.csr_matrix(H)
    _check_dims(rho, H, jumps)
    out = -1j * (H @ rho - rho @ H)
    for c, rate in jumps:
        if rate == 0:
            continue
        c = sp.csr_matrix(c)
        cd = c.conj().T
        cdc = cd @ c
        out += rate * (2 * (c @ rho) @ cd - cdc @ rho - rho @ cdc)
    return np.asarray(out)


def liouvillian_matrix(H, jumps: Jumps) -> sp.csr_matrix:
    """Sparse ``D^2 x D^2`` superoperator acting on row-major ``vec(rho)``."""
    H = sp.csr_matrix(H, dtype=complex)
    D = H.shape[0]
    eye = sp.identity(D, dtype=complex, format="csr")
    L = -1j * (sp.kron(H, eye) - sp.kron(eye, H.T))
    for c, rate in jumps:
        if rate == 0:
            continue
        c = sp.csr_matrix(c, dtype=complex)
        cdc = c.conj().T @ c
        L = L + rate * (2 * sp.kron(c, c.conj()) - sp.kron(cdc, eye) - sp.kron(eye, cdc.T))
    return sp.csr_matrix(L)


def validate_density_matrix(rho: np.ndarray, trace_tol: float = TRACE_TOL, eig_tol: float = POSITIVITY_TOL) -> dict:
    """Deviations from Hermiticity, unit trace and positivity."""
    herm = float(np.max(np.abs(rho - rho.conj().T))) if rho.size else 0.0
    tr = complex(np.trace(rho))
    evals = la.eigvalsh(0.5 * (rho + rho.conj().T))
    return {
        "hermiticity": herm,
        "trace_error": abs(tr - 1.0),
        "min_eigenvalue": float(evals[0]),
        "ok": herm <= 1e-10 and abs(tr - 1.0) <= trace_tol and evals[0] >= -eig_tol,
    }


def maximally_mixed(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=complex) / dim


def pure(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def random_pure_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random state vector drawn from ``rng``."""
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def evolve(
    rho0: np.ndarray,
    H,
    jumps: Jumps,
    t_grid: Sequence[float],
    tol: float = 1e-12,
    method: str = "DOP853",
) -> list[np.ndarray]:
    """Integrate the master equation and return ``rho`` at each time in ``t_grid``.

    ``rho0`` is the state at ``t_grid[0]``.  Uses an embedded Runge-Kutta
    pair with ``rtol = tol`` and ``atol = tol``.  Trace drift beyond 1e-9 or
    negative eigenvalues below -1e-10 raise an :class:`InvariantWarning`;
    the state is reported as integrated, without renormalization.

    Raises:
        IntegrationError: if the step size collapses before the last time.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be a non-empty increasing sequence")
    rho0 = np.asarray(rho0, dtype=complex)
    _check_dims(rho0, sp.csr_matrix(H), jumps)
    D = rho0.shape[0]
    if t_grid.size == 1:
        return [rho0.copy()]
    L = liouvillian_matrix(H, jumps)
    if L.nnz == 0:
        return [rho0.copy() for _ in t_grid]

    sol = solve_ivp(
        lambda t, y: L @ y,
        (t_grid[0], t_grid[-1]),
        rho0.ravel(),
        method=method,
        t_eval=t_grid,
        rtol=tol,
        atol=tol,
    )
    if sol.status != 0:
        reached = sol.t[-1] if sol.t.size else t_grid[0]
        raise IntegrationError(
            f"{method} failed at t={reached:.6g} of {t_grid[-1]:.6g} after {sol.nfev} "
            f"evaluations (D={D}, tol={tol:g}): {sol.message}"
        )
    states = [sol.y[:, k].reshape(D, D) for k in range(t_grid.size)]
    for t, rho in zip(t_grid, states):
        report = validate_density_matrix(rho)
        if not report["ok"]:
            warnings.warn(
                f"density matrix invariants violated at t={t:.6g}: trace error "
                f"{report['trace_error']:.3g}, min eigenvalue {report['min_eigenvalue']:.3g}",
                InvariantWarning,
                stacklevel=2,
            )
    return states


class SteadyState(NamedTuple):
    rho: np.ndarray
    kernel_dimension: int


def liouvillian_kernel(
    H, jumps: Jumps, cap: int = DEFAULT_SQUARED_DIM_CAP, rtol: float = KERNEL_RTOL
) -> tuple[np.ndarray, float]:
    """Orthonormal basis of the Liouvillian null space and the norm ``||L||_2``.

    Small problems use a dense SVD; up to ``cap`` a shift-invert Arnoldi
    search near zero is used instead.  A direction counts as stationary when
    its singular value (dense) or eigenvalue modulus (Arnoldi) is at most
    ``rtol * ||L||``.
    """
    D = H.shape[0]
    n = D * D
    if n > cap:
        raise SteadyStateTooLarge(
            f"vectorized Liouvillian has dimension {n} > cap {cap}; "
            "integrate with evolve() until convergence instead, or raise the cap"
        )
    L = liouvillian_matrix(H, jumps)
    if n <= DENSE_SQUARED_DIM:
        _, s, vh = la.svd(L.toarray())
        norm = s[0] if s.size else 0.0
        null = vh[s <= rtol * norm].conj().T
        return null, norm
    norm = spla.svds(L, k=1, return_singular_vectors=False)[0]
    k = min(8, n - 2)
    vals, vecs = spla.eigs(L, k=k, sigma=-1e-3 * norm / n, which="LM")
    keep = np.abs(vals) <= rtol * norm
    null, _ = la.qr(vecs[:, keep], mode="economic")
    if keep.all():
        log.warning("all %d Arnoldi eigenvalues are stationary; kernel dimension may be larger", k)
    return null, norm


def steady_state(H, jumps: Jumps, cap: int = DEFAULT_SQUARED_DIM_CAP, rtol: float = KERNEL_RTOL) -> SteadyState:
    """Stationary state and Liouvillian kernel dimension.

    When the kernel is degenerate the returned state is the projection of
    the maximally mixed state onto the kernel, normalized to unit trace.
    """
    null, _ = liouvillian_kernel(H, jumps, cap=cap, rtol=rtol)
    D = H.shape[0]
    dim = null.shape[1]
    if dim == 0:
        raise RuntimeError("no stationary state found within tolerance")
    ident = np.eye(D, dtype=complex).ravel() / D
    v = null @ (null.conj().T @ ident)
    if abs(v.reshape(D, D).trace()) < 1e-12:
        v = null[:, 0]
    rho = v.reshape(D, D)
    rho = rho / np.trace(rho)
    rho = 0.5 * (rho + rho.conj().T)
    return SteadyState(rho, dim)


@dataclass(frozen=True)
class DarkStateReport:
    annihilation_residual: float
    hamiltonian_residual: float
    energy: float
    kernel_dimension: int | None
    is_dark: bool


def dark_state_check(
    state: np.ndarray, H, jumps: Jumps, tol: float = 1e-10, with_kernel: bool = True
) -> DarkStateReport:
    """Check ``c|D> = 0`` for every jump and ``H|D> = E|D>``.

    The kernel dimension is included when the Liouvillian fits under the
    default size cap and ``with_kernel`` is set.
    """
    psi = np.asarray(state, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    residuals = [np.linalg.norm(c @ psi) for c, rate in jumps if rate > 0]
    ann = float(max(residuals, default=0.0))
    Hpsi = H @ psi
    E = float(np.real(np.vdot(psi, Hpsi)))
    ham = float(np.linalg.norm(Hpsi - E * psi))
    kernel = None
    if with_kernel and psi.size**2 <= DEFAULT_SQUARED_DIM_CAP:
        kernel = liouvillian_kernel(H, jumps)[0].shape[1]
    return DarkStateReport(ann, ham, E, kernel, ann <= tol and ham <= tol)


@dataclass(frozen=True)
class Observables:
    purity: float
    total_N: float
    condensate_fraction: float | None = None
    fidelity: float | None = None


def condensate_operator(sector: FockSector):
    """``a_0^dag a_0`` for the uniform (zero quasimomentum) mode."""
    K = sector.lattice.num_sites
    return bilinear(sector, np.full((K, K), 1.0 / K))


def observables(rho: np.ndarray, sector: FockSector, target: np.ndarray | None = None) -> Observables:
    """Purity, particle number, condensate fraction (bosons) and target fidelity."""
    rho = np.asarray(rho, dtype=complex)
    purity = float(np.real(np.vdot(rho.conj().T, rho)))
    total = float(np.real(np.trace(number_operator(sector) @ rho)))
    fraction = None
    if sector.statistics is Statistics.BOSON and total > 0:
        fraction = float(np.real(np.trace(condensate_operator(sector) @ rho))) / total
    fid = None
    if target is not None:
        t = np.asarray(target, dtype=complex)
        t = t / np.linalg.norm(t)
        fid = float(np.real(np.vdot(t, rho @ t)))
    return Observables(purity, total, fraction, fid)


def trajectory_records(times, states, sector: FockSector, target=None) -> list[dict]:
    """Rows of (time, fidelity, purity, condensate_fraction, total_N)."""
    rows = []
    for t, rho in zip(times, states):
        obs = observables(rho, sector, target)
        rows.append(
            {
                "time": float(t),
                "fidelity": obs.fidelity,
                "purity": obs.purity,
                "condensate_fraction": obs.condensate_fraction,
                "total_N": obs.total_N,
            }
        )
    return rows


def commutator_norm(A, B) -> float:
    """Largest absolute entry of ``[A, B]`` for sparse operators."""
    C = sp.csr_matrix(A @ B - B @ A)
    return float(np.max(np.abs(C.data))) if C.nnz else 0.0
