"""Linearized (Bogoliubov) fluctuations around the dissipative condensate.

Each nonzero quasimomentum mode decouples.  With ``x = <a^dag a>``,
``y = <a a>``, ``s = eps + Un`` and ``u = Un`` the second moments obey

    dx/dt      = -4u Im y - 4k x
    d(Re y)/dt =  4s Im y - 4k Re y
    d(Im y)/dt = -4u (x + 1/2) - 4s Re y - 4k Im y

where ``k`` is the mode damping ``16 n kappa sum_l sin^2(q_l/2)``.  The
Hamiltonian part rotates the deviation from the fixed point at frequency
``4E`` with ``E^2 = eps^2 + 2 Un eps``, so the propagator is known in closed
form.  All functions accept scalars or arrays of modes and broadcast.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .lattice import HubbardParams, LatticeSpec, bloch_energy, momentum_array, sin2_sum

PHYSICALITY_RTOL = 1e-9


class PhysicalityError(ArithmeticError):
    """A moment state violates ``x (x + 1) >= |y|^2``."""


class CondensateModeError(ValueError):
    """The q = 0 mode is not part of the linearized description."""


@dataclass(frozen=True)
class ModeParams:
    """Parameters of one or many linearized modes.

    Attributes:
        eps: Kinetic energy of the mode.
        kappa_q: Damping rate of the mode.
        Un: Interaction scale.  May differ per mode after the phase-model map.
        q: Optional quasimomentum (last axis holds components).
    """

    eps: np.ndarray
    kappa_q: np.ndarray
    Un: np.ndarray
    q: np.ndarray | None = None

    def __post_init__(self):
        for name in ("eps", "kappa_q", "Un"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))

    @property
    def E2(self) -> np.ndarray:
        return self.eps**2 + 2 * self.Un * self.eps

    @property
    def E(self) -> np.ndarray:
        return np.sqrt(np.maximum(self.E2, 0.0))

    @property
    def shape(self) -> tuple[int, ...]:
        return np.broadcast_shapes(self.eps.shape, self.kappa_q.shape, self.Un.shape)


@dataclass(frozen=True)
class ModeMomentState:
    """Second moments ``x = <a^dag a>`` and ``y = <a a>`` of one or many modes."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "y", np.asarray(self.y, dtype=complex))

    def physicality_margin(self) -> np.ndarray:
        """``x (x + 1) - |y|^2``; non-negative for a Gaussian state."""
        return self.x * (self.x + 1) - np.abs(self.y) ** 2

    def check(self, rtol: float = PHYSICALITY_RTOL) -> "ModeMomentState":
        scale = np.maximum(1.0, self.x * (self.x + 1))
        margin = self.physicality_margin()
        if np.any(self.x < -rtol * scale) or np.any(margin < -rtol * scale):
            worst = float(np.min(margin / scale))
            raise PhysicalityError(f"moment state is unphysical (relative margin {worst:.3e})")
        return self


@dataclass(frozen=True)
class SqueezedSpec:
    """Squeezed-thermal form of a steady mode.

    ``beta`` is None when the mode is pure (``Un = 0``).  ``phi`` is the
    argument of ``-<a a>`` so that ``cot(phi) = (eps + Un) / kappa_q``.
    """

    theta: float
    beta: float | None
    phi: float

    @property
    def pure(self) -> bool:
        return self.beta is None


def mode_rate(q, params: HubbardParams, a: float = 1.0):
    """Damping ``16 n kappa sum_l sin^2(q_l a / 2)``."""
    return 16.0 * params.n * params.kappa * sin2_sum(q, a)


def mode_params(q, params: HubbardParams, a: float = 1.0) -> ModeParams:
    q = np.asarray(q, dtype=float)
    return ModeParams(bloch_energy(q, params.J, a), mode_rate(q, params, a), np.full(q.shape[:-1], params.Un), q)


def lattice_modes(params: HubbardParams, lattice: LatticeSpec) -> ModeParams:
    """All ``M**d - 1`` nonzero grid modes as a flat :class:`ModeParams`.

    Both members of each ``(q, -q)`` pair are kept, which makes plain sums
    over the result equal to Brillouin-zone sums.
    """
    q = momentum_array(lattice).reshape(-1, lattice.d)[1:]
    return mode_params(q, params, lattice.a)


def _require_damped(mode: ModeParams):
    if np.any((mode.kappa_q <= 0) & (mode.Un != 0)):
        raise CondensateModeError("undamped interacting mode (q = 0?) has no unique fixed point")


def steady_moments(mode: ModeParams) -> ModeMomentState:
    """Fixed point ``x = Un^2 / (2 (k^2 + E^2))``, ``y = -i Un (x + 1/2) / (k + i s)``."""
    _require_damped(mode)
    k, u = mode.kappa_q, mode.Un
    s = mode.eps + u
    with np.errstate(invalid="ignore", divide="ignore"):
        x = np.where(u == 0, 0.0, u**2 / (2 * (k**2 + mode.E2)))
        y = np.where(u == 0, 0.0, -1j * u * (x + 0.5) / (k + 1j * s))
    return ModeMomentState(x, y).check()


def moment_rhs(mode: ModeParams, state: ModeMomentState) -> tuple[np.ndarray, np.ndarray]:
    """Right-hand side ``(dx/dt, dy/dt)`` of the moment equations."""
    k, u = mode.kappa_q, mode.Un
    s = mode.eps + u
    x, yr, yi = state.x, state.y.real, state.y.imag
    dx = -4 * u * yi - 4 * k * x
    dyr = 4 * s * yi - 4 * k * yr
    dyi = -4 * u * (x + 0.5) - 4 * s * yr - 4 * k * yi
    return dx, dyr + 1j * dyi


def steady_squeezing(mode: ModeParams) -> SqueezedSpec:
    """Squeezing ``theta``, occupation parameter ``beta`` and phase ``phi`` of a single mode.

    Uses ``cosh^2(2 theta) = coth^2(beta/2) = (k^2 + (eps + Un)^2) / (k^2 + E^2)``.
    """
    k, u, eps = (float(np.asarray(v).reshape(())) for v in (mode.kappa_q, mode.Un, mode.eps))
    if k == 0 and eps == 0:
        raise CondensateModeError("steady_squeezing is undefined for the condensate mode")
    s = eps + u
    phi = math.atan2(k, s)
    if u == 0:
        return SqueezedSpec(0.0, None, phi)
    ratio = (k**2 + s**2) / (k**2 + float(mode.E2))
    root = math.sqrt(ratio)
    theta = 0.5 * math.acosh(root)
    beta = math.log((root + 1) / (root - 1))
    return SqueezedSpec(theta, beta, phi)


def squeezing_ratio(mode: ModeParams) -> np.ndarray:
    """``(k^2 + (eps + Un)^2) / (k^2 + E^2)`` for many modes at once."""
    return (mode.kappa_q**2 + (mode.eps + mode.Un) ** 2) / (mode.kappa_q**2 + mode.E2)


def _drift_matrix(mode: ModeParams):
    u = mode.Un
    s = mode.eps + u
    z = np.zeros(np.broadcast_shapes(u.shape, s.shape))
    u = u + z
    s = s + z
    return np.array([[z, z, -4 * u], [z, z, 4 * s], [-4 * u, -4 * s, z]])


def propagate_deviation(mode: ModeParams, dev: np.ndarray, t) -> np.ndarray:
    """Apply ``exp(A t)`` to deviations ``(dx, dRe y, dIm y)`` stacked on axis 0.

    ``A = B - 4k`` with ``B^3 = -(4E)^2 B`` so that
    ``exp(B t) = 1 + sin(wt)/w B + (1 - cos(wt))/w^2 B^2`` with ``w = 4E``.
    ``t`` may be an array; its axes are prepended to the mode axes.
    """
    t = np.asarray(t, dtype=float)
    B = _drift_matrix(mode)
    w2 = 16.0 * mode.E2
    tt = t.reshape(t.shape + (1,) * np.ndim(w2))
    w = np.sqrt(w2 + 0j)
    # sin(wt)/w and (1 - cos wt)/w^2 written to stay finite as w -> 0
    s1 = (tt * np.sinc(w * tt / np.pi)).real
    s2 = (0.5 * tt**2 * np.sinc(w * tt / (2 * np.pi)) ** 2).real
    Bd = np.einsum("ij...,j...->i...", B, dev)
    B2d = np.einsum("ij...,j...->i...", B, Bd)
    damp = np.exp(-4.0 * mode.kappa_q * tt)
    return damp * (_expand(dev, t.ndim) + s1 * _expand(Bd, t.ndim) + s2 * _expand(B2d, t.ndim))


def _expand(v: np.ndarray, nt: int) -> np.ndarray:
    return v.reshape(v.shape[:1] + (1,) * nt + v.shape[1:])


def _as_vector(state: ModeMomentState) -> np.ndarray:
    x, y = np.broadcast_arrays(state.x, state.y)
    return np.stack([x.real.astype(float), y.real, y.imag])


def evolve_moments(
    mode: ModeParams,
    initial: ModeMomentState,
    t_grid: Sequence[float],
    method: str = "exact",
    rtol: float = 1e-12,
) -> list[ModeMomentState]:
    """Moment trajectory at the times in ``t_grid`` (the initial state sits at t = 0).

    ``method="exact"`` uses the closed-form propagator around the fixed
    point; ``method="ode"`` integrates the equations with an adaptive
    Runge-Kutta scheme and serves as an independent cross-check.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if method == "exact":
        if np.all(mode.kappa_q > 0):
            fixed = steady_moments(mode)
        else:
            fixed = _fixed_point_linear(mode)
        v_inf = _as_vector(fixed)
        dev = _as_vector(initial) - v_inf
        v = _expand(v_inf, 1) + propagate_deviation(mode, dev, t_grid)
    elif method == "ode":
        v = _integrate_moments(mode, initial, t_grid, rtol)
    else:
        raise ValueError(f"unknown method {method!r}")
    out = []
    for k in range(t_grid.size):
        state = ModeMomentState(v[0, k], v[1, k] + 1j * v[2, k])
        out.append(state.check())
    return out


def _fixed_point_linear(mode: ModeParams) -> ModeMomentState:
    # Undamped modes: the Hamiltonian flow conserves the deviation norm, so
    # any point works as the expansion origin; use the vacuum when Un = 0.
    if np.any(mode.Un != 0):
        raise CondensateModeError("undamped interacting mode has no fixed point")
    shape = mode.shape
    return ModeMomentState(np.zeros(shape), np.zeros(shape, dtype=complex))


def _integrate_moments(mode, initial, t_grid, rtol):
    v0 = _as_vector(initial)
    shape = v0.shape[1:]
    k = np.broadcast_to(mode.kappa_q, shape).ravel()
    u = np.broadcast_to(mode.Un, shape).ravel()
    s = np.broadcast_to(mode.eps, shape).ravel() + u

    def rhs(_, v):
        x, yr, yi = v.reshape(3, -1)
        return np.concatenate(
            [-4 * u * yi - 4 * k * x, 4 * s * yi - 4 * k * yr, -4 * u * (x + 0.5) - 4 * s * yr - 4 * k * yi]
        )

    sol = solve_ivp(rhs, (0.0, t_grid[-1]), v0.reshape(-1), method="DOP853", t_eval=t_grid, rtol=rtol, atol=rtol)
    if sol.status != 0:
        raise RuntimeError(f"moment integration failed: {sol.message}")
    return sol.y.reshape((3,) + shape + (t_grid.size,)).transpose((0, len(shape) + 1) + tuple(range(1, len(shape) + 1)))


@dataclass(frozen=True)
class DepletionResult:
    n_D: float
    n_D_doubled: float
    growth_ratio: float
    M: int


def depletion_sum(params: HubbardParams, lattice: LatticeSpec) -> float:
    """``(1/M^d) sum_{q != 0} x_q`` with ``x_q`` the steady occupation."""
    if params.U == 0:
        return 0.0
    modes = lattice_modes(params, lattice)
    x = steady_moments(modes).x
    return math.fsum(x.tolist()) / lattice.num_sites


def depletion(params: HubbardParams, lattice: LatticeSpec) -> DepletionResult:
    """Condensate depletion with a doubling diagnostic.

    Returns ``n_D`` on ``lattice`` together with its value on a lattice of
    twice the linear size and the ratio of the two.  A ratio that stays
    well above 1 under repeated doubling signals an infrared divergence.
    """
    lattice.require_periodic()
    nd = depletion_sum(params, lattice)
    bigger = LatticeSpec(lattice.d, 2 * lattice.M, lattice.a, lattice.boundary)
    nd2 = depletion_sum(params, bigger)
    ratio = nd2 / nd if nd > 0 else float("nan")
    return DepletionResult(nd, nd2, ratio, lattice.M)


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    prefactor: float
    window: tuple[float, float]
    slope_variation: float
    asymptotic: bool


def fit_tail(t: np.ndarray, deficit: np.ndarray, decades: float = 1.0, max_variation: float = 0.05) -> PowerLawFit:
    """Log-log least squares over the final ``decades`` of ``t``.

    The fit is flagged non-asymptotic when the local slope varies by
    ``max_variation`` or more inside the window, or the deficit changes sign.
    """
    t = np.asarray(t, dtype=float)
    deficit = np.asarray(deficit, dtype=float)
    t_hi = t[-1]
    t_lo = t_hi / 10**decades
    if t[0] > t_lo * (1 + 1e-12):
        raise ValueError(f"time grid spans less than {decades:g} decade(s) ending at t={t_hi:g}")
    m = (t >= t_lo * (1 - 1e-12)) & (deficit != 0)
    if m.sum() < 3:
        raise ValueError("need at least three nonzero points in the fit window")
    lt, ld = np.log(t[m]), np.log(np.abs(deficit[m]))
    slope, intercept = np.polyfit(lt, ld, 1)
    local = np.gradient(ld, lt)
    variation = float(np.ptp(local))
    same_sign = bool(np.all(np.sign(deficit[m]) == np.sign(deficit[m][0])))
    return PowerLawFit(float(slope), float(math.exp(intercept)), (float(t_lo), float(t_hi)), variation,
                       variation < max_variation and same_sign)


@dataclass(frozen=True)
class RelaxationCurve:
    """Condensate build-up ``n0(t)`` with a fitted power-law tail.

    ``deficit`` is ``n0(inf) - n0(t)``.  ``tail_t_deficit`` is the mean of
    ``t * deficit`` over the fit window, the amplitude of a ``1/t`` law.
    """

    times: np.ndarray
    n0_of_t: np.ndarray
    deficit: np.ndarray
    n0_inf: float
    tail: PowerLawFit
    tail_t_deficit: float
    monotone: bool
    flags: tuple[str, ...] = field(default=())

    @property
    def fitted_tail_exponent(self) -> float:
        return self.tail.exponent


def relax(
    params: HubbardParams,
    lattice: LatticeSpec,
    t_grid: Sequence[float],
    initial_occupation: float | None = None,
    initial_anomalous: complex = 0.0,
    chunk: int = 64,
) -> RelaxationCurve:
    """Condensate density ``n0(t) = n - (1/M^d) sum_{q != 0} x_q(t)``.

    By default every nonzero mode starts with ``x_q = n M^d / (M^d - 1)``,
    so the condensate is empty at ``t = 0``, and ``y_q = 0``.
    """
    lattice.require_periodic()
    t = np.asarray(t_grid, dtype=float)
    modes = lattice_modes(params, lattice)
    K = lattice.num_sites
    x0 = params.n * K / (K - 1) if initial_occupation is None else float(initial_occupation)
    fixed = steady_moments(modes)
    v_inf = _as_vector(fixed)
    v0 = np.stack([np.full_like(modes.eps, x0), np.full_like(modes.eps, np.real(initial_anomalous)),
                   np.full_like(modes.eps, np.imag(initial_anomalous))])
    dev = v0 - v_inf
    excess = np.empty(t.size)
    for start in range(0, t.size, chunk):
        sl = slice(start, start + chunk)
        dx = propagate_deviation(modes, dev, t[sl])[0]
        excess[sl] = dx.sum(axis=-1) / K
    n_inf = params.n - math.fsum(fixed.x.tolist()) / K
    n0 = n_inf - excess
    flags = []
    if np.any(n0 < -1e-12) or np.any(n0 > params.n + 1e-12):
        flags.append("n0 outside [0, n]")
    tail = fit_tail(t, excess)
    if not tail.asymptotic:
        flags.append("asymptotic regime not reached")
    window = t >= tail.window[0] * (1 - 1e-12)
    t_def = float(np.mean(t[window] * excess[window]))
    half = t >= t[-1] / 100
    monotone = bool(np.all(np.diff(n0[half]) >= -1e-14))
    if not monotone:
        flags.append("n0 not monotone after transient")
    if flags:
        warnings.warn("; ".join(flags), RuntimeWarning, stacklevel=2)
    return RelaxationCurve(t, n0, excess, n_inf, tail, t_def, monotone, tuple(flags))


def effective_temperature_ratio(mode: ModeParams) -> np.ndarray:
    """``beta * T_eff / E`` with ``T_eff = Un/2``; close to 1 for soft modes."""
    root = np.sqrt(squeezing_ratio(mode))
    beta = np.log((root + 1) / (root - 1))
    return beta * (0.5 * mode.Un) / mode.E


def mode_table(params: HubbardParams, lattice: LatticeSpec) -> list[dict]:
    """Per-mode steady data for export: q, kappa_q, E_q, theta, beta, x."""
    modes = lattice_modes(params, lattice)
    x = steady_moments(modes).x
    ratio = squeezing_ratio(modes)
    root = np.sqrt(ratio)
    theta = 0.5 * np.arccosh(root)
    rows = []
    for k in range(x.size):
        beta = None if params.U == 0 else float(np.log((root[k] + 1) / (root[k] - 1)))
        row = {f"q{ax}": float(modes.q[k, ax]) for ax in range(lattice.d)}
        row.update(kappa_q=float(modes.kappa_q[k]), E_q=float(modes.E[k]), theta=float(theta[k]), beta=beta, x=float(x[k]))
        rows.append(row)
    return rows
