"""Lattice geometry, couplings, mode grids and jump-operator families.

Everything here is an immutable value type or a pure function, so objects
can be shared freely between worker processes.

Conventions
-----------
* hbar = 1 and the lattice spacing ``a`` defaults to 1.
* Sites are labelled by a flat index ``i = sum_l x_l * M**l`` (axis 0 fastest).
* Quasimomenta live on the grid ``2*pi*k/(M*a)`` folded into ``(-pi/a, pi/a]``.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Iterator, Mapping

import numpy as np


class Boundary(str, enum.Enum):
    PERIODIC = "periodic"
    OPEN = "open"


class MomentumUnavailable(ValueError):
    """Raised when a quasimomentum representation is requested on an open lattice."""


@dataclass(frozen=True)
class LatticeSpec:
    """Hypercubic lattice with ``M`` sites per axis in ``d`` dimensions.

    Args:
        d: Spatial dimension, 1, 2 or 3.
        M: Sites per axis.
        a: Lattice spacing.
        boundary: ``"periodic"`` or ``"open"``.
    """

    d: int
    M: int
    a: float = 1.0
    boundary: Boundary = Boundary.PERIODIC

    def __post_init__(self):
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        if self.d not in (1, 2, 3):
            raise ValueError(f"d must be 1, 2 or 3, got {self.d}")
        if self.M < 2:
            raise ValueError(f"M must be >= 2, got {self.M}")
        if not self.a > 0:
            raise ValueError(f"lattice spacing must be positive, got {self.a}")

    @classmethod
    def parse(cls, text: str) -> "LatticeSpec":
        """Build from the compact form ``"<d>d:<M>:<boundary>"``, e.g. ``"1d:3:periodic"``."""
        try:
            dim, m, *rest = text.split(":")
            boundary = rest[0] if rest else "periodic"
            return cls(d=int(dim.rstrip("dD")), M=int(m), boundary=Boundary(boundary))
        except (ValueError, IndexError) as exc:
            raise ValueError(f"cannot parse lattice {text!r}: expected e.g. '2d:8:periodic'") from exc

    @property
    def periodic(self) -> bool:
        return self.boundary is Boundary.PERIODIC

    @property
    def num_sites(self) -> int:
        return self.M**self.d

    def coords(self, site: int) -> tuple[int, ...]:
        return tuple((site // self.M**ax) % self.M for ax in range(self.d))

    def site(self, coords) -> int:
        return int(sum((c % self.M) * self.M**ax for ax, c in enumerate(coords)))

    def neighbor(self, site: int, axis: int, step: int = 1) -> int | None:
        """Site reached from ``site`` by ``step`` lattice vectors along ``axis``.

        Returns None when the move leaves an open lattice.
        """
        c = list(self.coords(site))
        c[axis] += step
        if not self.periodic and not 0 <= c[axis] < self.M:
            return None
        return self.site(c)

    def require_periodic(self) -> None:
        if not self.periodic:
            raise MomentumUnavailable(
                "quasimomentum representation needs periodic boundaries; got an open lattice"
            )


@dataclass(frozen=True)
class HubbardParams:
    """Physical couplings in units where hbar = 1.

    ``n0`` is the condensate density; it defaults to ``n`` which is the
    leading-order choice used by all linearized solvers.
    """

    J: float = 1.0
    U: float = 0.0
    kappa: float = 1.0
    n: float = 1.0
    n0: float | None = None

    def __post_init__(self):
        if not self.J > 0:
            raise ValueError(f"J must be > 0, got {self.J}")
        if not self.kappa > 0:
            raise ValueError(f"kappa must be > 0, got {self.kappa}")
        if self.U < 0:
            raise ValueError(f"U must be >= 0, got {self.U}")
        if not self.n > 0:
            raise ValueError(f"n must be > 0, got {self.n}")
        if self.n0 is not None and not 0 <= self.n0 <= self.n:
            raise ValueError(f"n0 must lie in [0, n], got {self.n0}")

    @property
    def Un(self) -> float:
        return self.U * self.n

    @property
    def condensate_density(self) -> float:
        return self.n if self.n0 is None else self.n0


@dataclass(frozen=True)
class ModeIndex:
    """Quasimomentum label with parity ``sigma``.

    ``(q, sigma)`` and ``(-q, sigma)`` denote the same mode up to sign, so
    :func:`mode_grid` keeps a single representative of each pair.
    """

    q: tuple[float, ...]
    sigma: int = 1

    @property
    def norm(self) -> float:
        return float(np.sqrt(sum(c * c for c in self.q)))


def enumerate_links(lattice: LatticeSpec) -> list[tuple[int, int]]:
    """Ordered nearest-neighbour pairs ``(i, i + e_axis)``.

    Sites are visited in increasing flat index and, for each site, the axes
    in increasing order.  Periodic lattices contribute ``d * M**d`` links.
    For ``M = 2`` this means the two wrap directions of a bond both appear,
    so the hopping sum visits the 2-ring twice.
    """
    links = []
    for i in range(lattice.num_sites):
        for axis in range(lattice.d):
            j = lattice.neighbor(i, axis)
            if j is not None:
                links.append((i, j))
    return links


def bloch_energy(q, J: float = 1.0, a: float = 1.0):
    """Single-particle energy ``2J * sum_l sin^2(q_l a / 2)``.

    ``q`` may be a single vector or an array whose last axis holds the
    components.  The bandwidth is 2J per axis.
    """
    q = np.asarray(q, dtype=float)
    return 2.0 * J * np.sum(np.sin(0.5 * q * a) ** 2, axis=-1)


def sin2_sum(q, a: float = 1.0):
    """``sum_l sin^2(q_l a/2)``, the shape factor shared by energies and rates."""
    q = np.asarray(q, dtype=float)
    return np.sum(np.sin(0.5 * q * a) ** 2, axis=-1)


def momentum_axis(lattice: LatticeSpec) -> np.ndarray:
    """1D quasimomenta in FFT order, folded into ``(-pi/a, pi/a]``."""
    k = np.arange(lattice.M)
    q = 2 * np.pi * k / (lattice.M * lattice.a)
    return np.where(k > lattice.M // 2, q - 2 * np.pi / lattice.a, q)


def momentum_array(lattice: LatticeSpec) -> np.ndarray:
    """All quasimomenta as an array of shape ``(M,)*d + (d,)`` in FFT order."""
    lattice.require_periodic()
    axes = [momentum_axis(lattice)] * lattice.d
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


def mode_grid(lattice: LatticeSpec, exclude_zero: bool = True) -> list[ModeIndex]:
    """Distinct modes of the Brillouin zone with the ``q ~ -q`` pairs merged.

    A pair ``{q, -q}`` with ``q != -q`` carries the two parity modes
    ``sigma = +1, -1``; self-conjugate momenta (components 0 or pi) carry
    only ``sigma = +1``.  The returned list therefore has exactly
    ``M**d`` entries, minus one when the condensate mode is excluded.
    """
    lattice.require_periodic()
    M = lattice.M
    seen = set()
    modes = []
    for ks in itertools.product(range(M), repeat=lattice.d):
        if exclude_zero and not any(ks):
            continue
        partner = tuple((-k) % M for k in ks)
        if ks in seen:
            continue
        seen.add(ks)
        seen.add(partner)
        q = tuple(_fold(k, M) * 2 * np.pi / (M * lattice.a) for k in ks)
        modes.append(ModeIndex(q, +1))
        if partner != ks:
            modes.append(ModeIndex(q, -1))
    return modes


def _fold(k: int, M: int) -> int:
    return k - M if k > M // 2 else k


class JumpKind(str, enum.Enum):
    LINK_BEC = "link-bec"
    MOMENTUM_BEC = "momentum-bec"
    LAMBDA_V = "lambda-v"
    ETA_FERMION = "eta-fermion"


_RATE_NAMES: Mapping[JumpKind, tuple[str, ...]] = {
    JumpKind.LINK_BEC: ("kappa",),
    JumpKind.MOMENTUM_BEC: ("kappa",),
    JumpKind.LAMBDA_V: ("kappa_lambda_plus", "kappa_lambda_minus", "kappa_v_plus", "kappa_v_minus"),
    JumpKind.ETA_FERMION: ("kappa1", "kappa2"),
}


@dataclass(frozen=True)
class JumpFamily:
    """A named family of jump operators together with its rates.

    Rates are keyed by name; see :meth:`rate_names` for the accepted keys.
    Missing rates default to 1.
    """

    kind: JumpKind
    rates: tuple[tuple[str, float], ...] = field(default=())

    def __post_init__(self):
        kind = JumpKind(self.kind)
        object.__setattr__(self, "kind", kind)
        rates = dict(self.rates)
        unknown = set(rates) - set(_RATE_NAMES[kind])
        if unknown:
            raise ValueError(f"unknown rate(s) {sorted(unknown)} for {kind.value}")
        full = {name: float(rates.get(name, 1.0)) for name in _RATE_NAMES[kind]}
        for name, value in full.items():
            if value < 0:
                raise ValueError(f"rate {name} must be >= 0, got {value}")
        object.__setattr__(self, "rates", tuple(full.items()))

    @classmethod
    def make(cls, kind, default_rate: float = 1.0, **rates: float) -> "JumpFamily":
        kind = JumpKind(kind)
        full = {name: float(rates.pop(name, default_rate)) for name in _RATE_NAMES[kind]}
        if rates:
            raise ValueError(f"unknown rate(s) {sorted(rates)} for {kind.value}")
        return cls(kind, tuple(full.items()))

    @staticmethod
    def rate_names(kind) -> tuple[str, ...]:
        return _RATE_NAMES[JumpKind(kind)]

    def rate(self, name: str) -> float:
        return dict(self.rates)[name]

    @property
    def fermionic(self) -> bool:
        return self.kind is JumpKind.ETA_FERMION

    def __iter__(self) -> Iterator[tuple[str, float]]:
        return iter(self.rates)
