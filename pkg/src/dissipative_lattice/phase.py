"""Long-wavelength phase-density model in one and two dimensions.

Writing ``a_j = sqrt(n + n_j) exp(i phi_j)`` and keeping quadratic terms maps
every nonzero quasimomentum onto a single damped mode

    d_q = (n_q / sqrt(2n) - i sqrt(2n) phi_q) / sqrt(2)

whose moments obey the same linear equations as the Bogoliubov modes in
:mod:`.meanfield`, with kinetic energy ``eps = 4J sum_l sin^2(q_l/2)`` and
interaction ``Un - eps/2``.  The jump operator becomes ``d_q`` itself with
damping ``16 n kappa sum_l sin^2(q_l/2)``.  Phase and density spectra follow
from the moments:

    <phi_q phi_-q> = (2x + 1 - 2 Re y) / (4n)
    <n_q n_-q>     = n (2x + 1 + 2 Re y)

Two mode grids are provided.  :class:`LatticeGrid` sums over the discrete
Brillouin zone of a periodic lattice.  :class:`RadialGrid` replaces the sum
by a radial quadrature of the isotropic small-q model (``eps = J q^2``,
damping ``4 n kappa q^2``) and is used when the relevant length scales
outgrow any lattice that fits in memory.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import optimize, special

from .lattice import HubbardParams, LatticeSpec, momentum_array, sin2_sum
from .meanfield import ModeMomentState, ModeParams, propagate_deviation, steady_moments

VALIDITY_TEFF_OVER_TKT = 0.5


class PhaseModelUndefined(ValueError):
    """The phase model needs U > 0."""


class FitWindowError(ValueError):
    """Too few usable points to perform a fit."""


@dataclass(frozen=True)
class PhaseModelParams:
    """Derived scales of the phase model (lattice units, hbar = 1)."""

    c: float
    K: float
    T_KT: float
    T_eff: float
    coherence_length: float
    x0: float
    tau0: float
    xi_1d: float

    @property
    def teff_over_tkt(self) -> float:
        return self.T_eff / self.T_KT

    @property
    def eta(self) -> float:
        """Algebraic exponent ``T_eff / (4 T_KT)`` of the 2D correlations."""
        return self.T_eff / (4 * self.T_KT)

    @property
    def valid(self) -> bool:
        return self.teff_over_tkt <= VALIDITY_TEFF_OVER_TKT


def derived_scales(params: HubbardParams, a: float = 1.0) -> PhaseModelParams:
    """Sound velocity, Luttinger parameter, temperatures and length scales.

    ``x0`` and ``tau0`` are order-of-magnitude scales with no fixed
    prefactor.
    """
    if params.U <= 0:
        raise PhaseModelUndefined("the phase model is undefined for U = 0")
    J, U, n, kappa = params.J, params.U, params.n, params.kappa
    c = math.sqrt(2 * U * n * J) * a
    K = math.pi * math.sqrt(2 * J * n / U)
    T_KT = math.pi * J * n
    T_eff = U * n / 2
    x0 = c / (kappa * n)
    tau0 = (kappa * n * a / c) ** 2 * a / c
    return PhaseModelParams(c, K, T_KT, T_eff, math.sqrt(J / (U * n)) * a, x0, tau0, 4 * c * K / (math.pi * T_eff))


@dataclass(frozen=True)
class MappedModes:
    modes: ModeParams
    valid: np.ndarray


def map_mode(q, params: HubbardParams, a: float = 1.0) -> MappedModes:
    """Linear-mode parameters of the phase model at quasimomenta ``q``.

    ``valid`` is False outside the long-wavelength window
    ``|q| a < sqrt(Un/J)``; the parameters are returned regardless.
    """
    q = np.asarray(q, dtype=float)
    s2 = sin2_sum(q, a)
    eps = 4 * params.J * s2
    modes = ModeParams(eps, 16 * params.n * params.kappa * s2, params.Un - eps / 2, q)
    valid = np.linalg.norm(q, axis=-1) * a < math.sqrt(params.Un / params.J)
    return MappedModes(modes, valid)


def phase_spectrum(state: ModeMomentState, n: float) -> np.ndarray:
    """``<phi_q phi_-q>`` from d-mode moments."""
    return (2 * state.x + 1 - 2 * state.y.real) / (4 * n)


def density_spectrum(state: ModeMomentState, n: float) -> np.ndarray:
    """``<n_q n_-q>`` from d-mode moments."""
    return n * (2 * state.x + 1 + 2 * state.y.real)


def steady_spectra(modes: ModeParams, n: float) -> tuple[np.ndarray, np.ndarray]:
    """Steady ``(<phi phi>, <n n>)`` without the cancellation in ``2x + 1 +- 2 Re y``.

    At the fixed point ``2x + 1 = (k^2 + s^2) / (k^2 + E^2)`` and
    ``Re y = -(x + 1/2) u s / (k^2 + s^2)`` with ``s = eps + u``.
    """
    k2 = modes.kappa_q**2
    u = modes.Un
    s = modes.eps + u
    den = k2 + modes.E2
    return (k2 + s * s + u * s) / den / (4 * n), n * (k2 + s * modes.eps) / den


def moments_from_spectra(P_phi, P_n, n: float) -> ModeMomentState:
    """Inverse of the two spectrum maps for states with ``Im <dd> = 0``."""
    A = 4 * n * np.asarray(P_phi)
    B = np.asarray(P_n) / n
    x = (A + B) / 4 - 0.5
    return ModeMomentState(x, (B - A) / 4 + 0j)


def _one_minus_j0(z):
    z = np.asarray(z, dtype=float)
    small = z < 1e-3
    zs = np.where(small, z, 0.0)
    return np.where(small, zs**2 / 4 - zs**4 / 64, 1 - special.j0(np.where(small, 1.0, z)))


def _one_minus_sinc(z):
    z = np.asarray(z, dtype=float)
    small = z < 1e-3
    zs = np.where(small, z, 0.0)
    zb = np.where(small, 1.0, z)
    return np.where(small, zs**2 / 6 - zs**4 / 120, 1 - np.sin(zb) / zb)


class LatticeGrid:
    """Discrete Brillouin-zone sums on a periodic lattice.

    Separations are measured along axis 0 in units of the lattice spacing.
    """

    kind = "lattice"

    def __init__(self, lattice: LatticeSpec):
        lattice.require_periodic()
        self.lattice = lattice
        self.d = lattice.d
        self.q = momentum_array(lattice)

    @property
    def max_separation(self) -> float:
        return self.lattice.M * self.lattice.a / 2

    def mapped(self, params: HubbardParams) -> MappedModes:
        return map_mode(self.q.reshape(-1, self.d)[1:], params, self.lattice.a)

    def variance(self, P: np.ndarray, x) -> np.ndarray:
        """``(2/M^d) sum_q (1 - cos(q_0 x)) P(q)`` for a spectrum over nonzero modes."""
        lat = self.lattice
        full = np.concatenate([[0.0], np.asarray(P, dtype=float)]).reshape((lat.M,) * lat.d)
        marginal = full.reshape(lat.M, -1).sum(axis=1) / lat.num_sites
        q0 = self.q[(slice(None),) + (0,) * (lat.d - 1) + (0,)]
        x = np.atleast_1d(np.asarray(x, dtype=float))
        # 1 - cos = 2 sin^2 keeps small separations accurate
        kern = 2 * np.sin(0.5 * np.outer(x, q0) * lat.a) ** 2
        return 2 * kern @ marginal

    def lorentzian_profile(self) -> np.ndarray:
        """``1 / qhat^(d+1)`` with ``qhat^2 = 4 sum_l sin^2(q_l/2)``."""
        qhat = 2 * np.sqrt(sin2_sum(self.q.reshape(-1, self.d)[1:], self.lattice.a)) / self.lattice.a
        return qhat ** -(self.d + 1)


class RadialGrid:
    """Isotropic continuum quadrature up to the Brillouin-zone-volume cutoff.

    Nodes are composite 8-point Gauss-Legendre panels whose width resolves
    the oscillation of the separation kernel up to ``x_max`` and, at time
    ``t``, the rotation of the undamped deviation.  The quadrature weights
    include the angular measure, so ``sum(w * f(q))`` approximates
    ``int d^d q / (2 pi)^d f(|q|)``.
    """

    kind = "radial"
    ORDER = 8
    DAMPING_CUTOFF = 81.0
    MAX_NODES = 20_000_000
    WORK_SIZE = 2_000_000

    def __init__(self, d: int, a: float = 1.0, x_max: float = 512.0, min_panels: int = 400):
        if d not in (1, 2, 3):
            raise ValueError(f"d must be 1, 2 or 3, got {d}")
        self.d = d
        self.a = a
        self.x_max = float(x_max)
        self.min_panels = min_panels
        unit = {1: math.pi, 2: 2 * math.sqrt(math.pi), 3: (6 * math.pi**2) ** (1 / 3)}[d]
        self.q_max = unit / a
        self._gl = np.polynomial.legendre.leggauss(self.ORDER)

    @property
    def max_separation(self) -> float:
        return self.x_max

    def _measure(self, q):
        if self.d == 1:
            return np.full_like(q, 1 / math.pi)
        if self.d == 2:
            return q / (2 * math.pi)
        return q**2 / (2 * math.pi**2)

    def nodes(self, q_hi: float, h_max: float) -> tuple[np.ndarray, np.ndarray]:
        q_hi = min(q_hi, self.q_max)
        h = min(h_max, math.pi / self.x_max, q_hi / self.min_panels)
        panels = max(1, int(math.ceil(q_hi / h)))
        if panels * self.ORDER > self.MAX_NODES:
            raise ValueError(
                f"radial quadrature needs {panels * self.ORDER} nodes (cap {self.MAX_NODES}); "
                "use a shorter time or pass t = inf for the steady curve"
            )
        edges = np.linspace(0.0, q_hi, panels + 1)
        mid = 0.5 * (edges[1:] + edges[:-1])
        half = 0.5 * (edges[1:] - edges[:-1])
        g, gw = self._gl
        q = (mid[:, None] + half[:, None] * g).ravel()
        w = (half[:, None] * gw).ravel() * self._measure(q)
        return q, w

    def modes_at(self, q: np.ndarray, params: HubbardParams) -> ModeParams:
        eps = params.J * (q * self.a) ** 2
        return ModeParams(eps, 4 * params.n * params.kappa * (q * self.a) ** 2, params.Un - eps / 2, q)

    def kernel(self, z):
        if self.d == 1:
            return 2 * np.sin(0.5 * z) ** 2
        if self.d == 2:
            return _one_minus_j0(z)
        return _one_minus_sinc(z)

    def variance(self, q, w, P, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        wp = 2 * w * P
        chunk = max(1, self.WORK_SIZE // max(q.size, 1))
        out = np.empty(x.size)
        for s in range(0, x.size, chunk):
            out[s:s + chunk] = self.kernel(np.outer(x[s:s + chunk], q)) @ wp
        return out

    def steady_nodes(self):
        return self.nodes(self.q_max, self.q_max)

    def transient_nodes(self, params: HubbardParams, t: float):
        """Nodes for the decaying deviation at time ``t``."""
        if t <= 0:
            return self.steady_nodes()
        rate = 16 * params.n * params.kappa * self.a**2
        q_cut = math.sqrt(self.DAMPING_CUTOFF / (rate * t))
        c = math.sqrt(2 * params.U * params.n * params.J) * self.a
        h = math.pi / (4 * c * t) if c > 0 else self.q_max
        return self.nodes(q_cut, h)

    def lorentzian_profile(self, q) -> np.ndarray:
        return (q * self.a) ** -(self.d + 1) * self.a ** (self.d + 1)


Grid = LatticeGrid | RadialGrid


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    window: tuple[float, float]
    max_residual: float
    npoints: int


@dataclass
class CorrelationCurve:
    """Equal-time phase correlation ``G(x) = exp(-<(phi_x - phi_0)^2>/2)``.

    ``G`` is normalized so that ``G(0) = 1``.  ``valid`` marks separations
    beyond the coherence length for a model inside its validity range.
    """

    x: np.ndarray
    G: np.ndarray
    t: float | None = None
    valid: np.ndarray | None = None
    variance: np.ndarray | None = None
    fit: LinearFit | None = None
    closed_form: np.ndarray | None = None
    flags: list[str] = field(default_factory=list)


def _fit_line(u, v, window_mask, x) -> LinearFit:
    if window_mask.sum() < 3:
        raise FitWindowError(f"only {int(window_mask.sum())} points inside the fit window")
    slope, intercept = np.polyfit(u[window_mask], v[window_mask], 1)
    resid = np.exp(v[window_mask] - (slope * u[window_mask] + intercept)) - 1
    xs = x[window_mask]
    return LinearFit(float(slope), float(intercept), (float(xs.min()), float(xs.max())),
                     float(np.max(np.abs(resid))), int(window_mask.sum()))


def default_fit_window(grid: Grid, params: HubbardParams) -> tuple[float, float]:
    """Window beyond the coherence length and clear of the box size.

    On a ring or torus the variance bends over near half the box, so the
    upper edge is ``M/8`` (2D) or ``M/16`` (1D) lattice spacings.
    """
    scales = derived_scales(params)
    lo = max(2.0, 2 * scales.coherence_length)
    if isinstance(grid, LatticeGrid):
        hi = grid.lattice.M * grid.lattice.a / (8 if grid.d == 2 else 16)
    else:
        hi = grid.x_max
    return lo, hi


def grid_modes(grid: Grid, params: HubbardParams, q=None) -> ModeParams:
    if isinstance(grid, LatticeGrid):
        return grid.mapped(params).modes
    return grid.modes_at(q, params)


def steady_variance(grid: Grid, params: HubbardParams, x) -> np.ndarray:
    if isinstance(grid, LatticeGrid):
        P_phi, _ = steady_spectra(grid_modes(grid, params), params.n)
        return grid.variance(P_phi, x)
    q, w = grid.steady_nodes()
    P_phi, _ = steady_spectra(grid_modes(grid, params, q), params.n)
    return grid.variance(q, w, P_phi, x)


def steady_correlation(
    params: HubbardParams,
    grid: Grid,
    x_grid: Sequence[float],
    fit_window: tuple[float, float] | None = None,
) -> CorrelationCurve:
    """Steady correlation with a power-law (2D) or exponential (1D) fit.

    The companion closed form is ``G_fit = exp(intercept) * x^slope`` in 2D
    and ``exp(intercept) * exp(-x / xi_1d)`` in 1D, the amplitude being a
    fitted normalization.  In 3D no fit is attempted.
    """
    x = np.asarray(x_grid, dtype=float)
    scales = derived_scales(params)
    var = steady_variance(grid, params, x)
    G = np.exp(-0.5 * var)
    valid = (x > scales.coherence_length) & scales.valid
    curve = CorrelationCurve(x, G, math.inf, valid, var)
    if not scales.valid:
        curve.flags.append("unvalidated: T_eff not small against T_KT")
    lo, hi = fit_window or default_fit_window(grid, params)
    mask = (x >= lo) & (x <= hi) & (x > 0)
    if grid.d == 2:
        with np.errstate(divide="ignore"):
            curve.fit = _fit_line(np.log(x), np.log(G), mask, x)
        amp = np.exp(np.mean(np.log(G[mask]) + scales.eta * np.log(x[mask])))
        with np.errstate(divide="ignore"):
            curve.closed_form = amp * x ** (-scales.eta)
    elif grid.d == 1:
        curve.fit = _fit_line(x, np.log(G), mask, x)
        amp = np.exp(np.mean(np.log(G[mask]) + x[mask] / scales.xi_1d))
        curve.closed_form = amp * np.exp(-x / scales.xi_1d)
    if np.any(np.diff(G[x > 0]) > 1e-12):
        curve.flags.append("G not monotone in x")
    return curve


def phase_autocorrelation(modes: ModeParams, n: float, tau) -> np.ndarray:
    """Steady ``<phi_q(tau) phi_-q(0)>`` per mode by the quantum regression theorem.

    The first moments of ``d_q`` relax at rate ``2 kappa_q`` and rotate at
    ``2 E_q``; contracting the regression matrix with the steady second
    moments gives

        C(tau) = e^{-2k tau} [cos(2E tau) P - S (eps + 2u) (4 Im y + 2i) / (4n)]

    with ``S = sin(2E tau) / (2E)`` and ``P`` the equal-time spectrum.
    ``tau`` axes are prepended to the mode axes.
    """
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise ValueError("tau must be >= 0")
    tt = tau.reshape(tau.shape + (1,) * np.ndim(modes.E2))
    P, _ = steady_spectra(modes, n)
    im_y = steady_moments(modes).y.imag
    w = 2 * np.sqrt(modes.E2 + 0j)
    S = (tt * np.sinc(w * tt / np.pi)).real
    C = np.cos(w * tt).real * P - S * (modes.eps + 2 * modes.Un) * (4 * im_y + 2j) / (4 * n)
    return np.exp(-2 * modes.kappa_q * tt) * C


@dataclass
class TwoTimeCorrelation:
    """``G(x, tau) = <exp(i phi_x(tau)) exp(-i phi_0(0))>`` in the steady state (complex)."""

    x: np.ndarray
    tau: np.ndarray
    G: np.ndarray


def two_time_correlation(params: HubbardParams, grid: Grid, x_grid, tau_grid) -> TwoTimeCorrelation:
    """Unequal-time steady correlations, a diagnostic beside the equal-time curves.

    For Gaussian states ``ln G = -(1/V) sum_q [P_q - cos(q x) C_q(tau)]``;
    on a radial grid the angular average of ``cos`` replaces it.  At
    ``tau = 0`` this equals :func:`steady_correlation`.
    """
    x = np.atleast_1d(np.asarray(x_grid, dtype=float))
    tau = np.atleast_1d(np.asarray(tau_grid, dtype=float))
    if isinstance(grid, LatticeGrid):
        modes = grid.mapped(params).modes
        weight = np.full(modes.eps.shape, 1.0 / grid.lattice.num_sites)
        cos_qx = np.cos(np.outer(x, modes.q[:, 0]) * grid.lattice.a)
    else:
        q, weight = grid.steady_nodes()
        modes = grid.modes_at(q, params)
        cos_qx = 1 - grid.kernel(np.outer(x, q))
    P, _ = steady_spectra(modes, params.n)
    C = phase_autocorrelation(modes, params.n, tau)
    # difference taken per mode: P and C nearly cancel at small q
    expo = np.stack([-((P - cos_qx * c) @ weight) for c in C])
    return TwoTimeCorrelation(x, tau, np.exp(expo))


def power_law_exponent(curve: CorrelationCurve) -> float:
    return -curve.fit.slope


def decay_length(curve: CorrelationCurve) -> float:
    return -1.0 / curve.fit.slope


@dataclass(frozen=True)
class InitialDisorderSpec:
    """Disordered start whose correlations decay as ``exp(-x / xi)``."""

    xi: float

    def __post_init__(self):
        if not self.xi > 0:
            raise ValueError(f"xi must be > 0, got {self.xi}")


def _initial_spectrum(profile, amplitude, P_n):
    # clip to the uncertainty bound <phi phi><n n> >= 1/4
    return np.maximum(amplitude * profile, 0.25 / P_n)


def _continuum_amplitude(d: int, xi: float) -> float:
    # A/q^(d+1) gives a variance exactly linear in x in the continuum
    return {1: 2.0, 2: 2 * math.pi, 3: 8 * math.pi}[d] / xi


def fit_initial_amplitude(grid: Grid, params: HubbardParams, spec: InitialDisorderSpec) -> float:
    """Least-squares amplitude ``A`` of ``P_phi = A / qhat^(d+1)``.

    The target is ``<(phi_x - phi_0)^2> = 2x/xi`` for ``0 < x <= 10 xi``,
    which gives ``G = exp(-x/xi)``.  On a lattice the window also stops at
    ``M/16`` because the variance of a ring or torus bends over further out.
    """
    x_hi = min(10 * spec.xi, grid.max_separation / (8 if isinstance(grid, LatticeGrid) else 2))
    x = np.linspace(x_hi / 40, x_hi, 40)
    target = 2 * x / spec.xi
    if isinstance(grid, LatticeGrid):
        profile = grid.lorentzian_profile()
        _, P_n = steady_spectra(grid_modes(grid, params), params.n)

        def var(A):
            return grid.variance(_initial_spectrum(profile, A, P_n), x)
    else:
        q, w = grid.steady_nodes()
        profile = grid.lorentzian_profile(q)
        _, P_n = steady_spectra(grid_modes(grid, params, q), params.n)

        def var(A):
            return grid.variance(q, w, _initial_spectrum(profile, A, P_n), x)

    A0 = _continuum_amplitude(grid.d, spec.xi)
    res = optimize.minimize_scalar(
        lambda logA: float(np.sum((var(math.exp(logA)) - target) ** 2)),
        bounds=(math.log(A0) - 3, math.log(A0) + 3),
        method="bounded",
        options={"xatol": 1e-10},
    )
    return math.exp(res.x)


def initial_disorder_state(grid: Grid, params: HubbardParams, spec: InitialDisorderSpec, q=None):
    """d-mode moments of the disordered start on ``grid`` (or at radial nodes ``q``).

    Density fluctuations sit at their steady value and ``Im <dd> = 0``.
    """
    A = fit_initial_amplitude(grid, params, spec)
    if isinstance(grid, LatticeGrid):
        profile = grid.lorentzian_profile()
    else:
        profile = grid.lorentzian_profile(q)
    _, P_n = steady_spectra(grid_modes(grid, params, q), params.n)
    return moments_from_spectra(_initial_spectrum(profile, A, P_n), P_n, params.n).check(), A


@dataclass
class CorrelationEvolution:
    """Family of curves ``G_t(x)`` plus the ordering-front analysis.

    ``x_t`` is the Gaussian-envelope scale of ``G_t / G_inf`` per time (nan
    where the window is too small) and ``front`` the log-log fit of ``x_t``
    against ``t``.
    """

    curves: list[CorrelationCurve]
    steady: CorrelationCurve
    amplitude: float
    x_t: np.ndarray
    front: LinearFit | None
    flags: list[str] = field(default_factory=list)


def gaussian_envelope(x: np.ndarray, excess: np.ndarray, threshold: float = 1.0) -> float:
    """Scale ``x_t`` of ``G_t / G_inf = exp(-x^2 / x_t^2)``.

    ``excess`` is ``-ln(G_t / G_inf)``; the fit is least squares through the
    origin over points with ``0 < excess < threshold``.
    """
    m = (excess > 0) & (excess < threshold) & (x > 0)
    if m.sum() < 3:
        raise FitWindowError("fewer than three separations below the envelope threshold")
    x_t = math.sqrt(np.sum(x[m] ** 4) / np.sum(x[m] ** 2 * excess[m]))
    if x_t > x.max():
        raise FitWindowError(f"envelope scale {x_t:.3g} exceeds the largest separation {x.max():.3g}")
    return x_t


def _excess_variance(grid: Grid, params: HubbardParams, spec: InitialDisorderSpec, amplitude: float, t: float, x):
    """Variance of ``G_t`` minus that of ``G_inf`` at separations ``x``."""
    if isinstance(grid, LatticeGrid):
        modes = grid.mapped(params).modes
        profile = grid.lorentzian_profile()
    else:
        q, w = grid.transient_nodes(params, t)
        modes = grid.modes_at(q, params)
        profile = grid.lorentzian_profile(q)
    P_phi, P_n = steady_spectra(modes, params.n)
    # the start differs from the fixed point only in the phase spectrum and Im y
    dA = 4 * params.n * (_initial_spectrum(profile, amplitude, P_n) - P_phi) / 4
    im_inf = steady_moments(modes).y.imag
    dev = np.stack([dA, -dA, -im_inf])
    dv = propagate_deviation(modes, dev, t)
    dP = (2 * dv[0] - 2 * dv[1]) / (4 * params.n)
    if isinstance(grid, LatticeGrid):
        return grid.variance(dP, x)
    return grid.variance(q, w, dP, x)


def evolve_correlations(
    init: InitialDisorderSpec,
    params: HubbardParams,
    grid: Grid,
    t_grid: Sequence[float],
    x_grid: Sequence[float],
    front_window: tuple[float, float] | None = None,
    envelope_threshold: float = 1.0,
) -> CorrelationEvolution:
    """Correlations after a quench from a disordered state.

    Each mode relaxes with the closed-form moment propagator;
    ``G_t = G_inf * exp(-(var_t - var_inf)/2)``.  ``t = inf`` returns the
    steady curve.  The front exponent is fitted over ``front_window``
    (default: all finite positive times with a usable envelope).
    """
    x = np.asarray(x_grid, dtype=float)
    t_grid = [float(t) for t in t_grid]
    A = fit_initial_amplitude(grid, params, init)
    steady = steady_correlation(params, grid, x, fit_window=None) if grid.d in (1, 2) else None
    var_inf = steady.variance if steady is not None else steady_variance(grid, params, x)
    G_inf = np.exp(-0.5 * var_inf)
    scales = derived_scales(params)
    curves, x_t = [], []
    flags = []
    for t in t_grid:
        if math.isinf(t):
            ex = np.zeros_like(x)
        else:
            ex = _excess_variance(grid, params, init, A, t, x)
        var_t = var_inf + ex
        curve = CorrelationCurve(x, np.exp(-0.5 * var_t), t, (x > scales.coherence_length) & scales.valid, var_t)
        curves.append(curve)
        try:
            x_t.append(gaussian_envelope(x, 0.5 * ex, envelope_threshold) if t > 0 and not math.isinf(t) else math.nan)
        except FitWindowError:
            x_t.append(math.nan)
    for prev, cur in zip(curves, curves[1:]):
        if np.any(cur.G < prev.G * (1 - 1e-9)):
            cur.flags.append("G decreased since previous time")
    x_t = np.array(x_t)
    ts = np.array(t_grid)
    ok = np.isfinite(x_t) & np.isfinite(ts) & (ts > 0)
    if front_window is not None:
        ok &= (ts >= front_window[0]) & (ts <= front_window[1])
    front = None
    if ok.sum() >= 3:
        with np.errstate(divide="ignore"):
            front = _fit_line(np.log(ts), np.log(np.where(ok, x_t, 1.0)), ok, ts)
    else:
        flags.append("fit window insufficient for the front exponent")
        warnings.warn(flags[-1], RuntimeWarning, stacklevel=2)
    return CorrelationEvolution(curves, steady, A, x_t, front, flags)
