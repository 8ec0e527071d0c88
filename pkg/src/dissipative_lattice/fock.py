"""Fixed-particle-number Fock sectors and sparse operators acting on them.

Bosonic configurations are tuples of site occupations.  Fermionic
configurations are tuples of mode occupations with the Jordan-Wigner
ordering ``mode = 2*site + spin`` (spin 0 is up, 1 is down), i.e. site-major
and spin-minor.  A fermionic operator acting on ``mode`` picks up the sign
``(-1)**(number of occupied modes with a smaller index)``.

Operators are written as products of ladder operators in the usual reading
order, e.g. ``((i, True), (j, False))`` is ``a_i^dag a_j``; the rightmost
factor acts first.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .lattice import HubbardParams, JumpFamily, JumpKind, LatticeSpec, enumerate_links

UP, DOWN = 0, 1

Ladder = tuple[int, bool]
Term = tuple[complex, Sequence[Ladder]]


class Statistics(str, enum.Enum):
    BOSON = "boson"
    FERMION = "fermion"


class IncompatibleFamily(ValueError):
    """Jump family and particle statistics do not match."""


@dataclass(frozen=True, eq=False)
class FockSector:
    """An ordered occupation basis for a lattice.

    ``N`` is the total boson number, the pair ``(N_up, N_down)`` for
    fermions, or None for a space that mixes particle numbers (used when
    checking number conservation).
    """

    lattice: LatticeSpec
    statistics: Statistics
    N: int | tuple[int, int] | None
    basis: tuple[tuple[int, ...], ...]

    @cached_property
    def index(self) -> dict[tuple[int, ...], int]:
        return {cfg: k for k, cfg in enumerate(self.basis)}

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def num_modes(self) -> int:
        return len(self.basis[0])

    @cached_property
    def occupations(self) -> np.ndarray:
        """Array of shape ``(dim, num_modes)`` with the occupation numbers."""
        return np.array(self.basis, dtype=np.int64).reshape(self.dim, self.num_modes)

    @cached_property
    def _hop_cache(self) -> dict:
        return {}

    def __repr__(self):
        return f"FockSector({self.statistics.value}, N={self.N}, dim={self.dim}, lattice={self.lattice})"


def _compositions(total: int, parts: int) -> Iterable[tuple[int, ...]]:
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def boson_sector(lattice: LatticeSpec, N: int) -> FockSector:
    """All ways to place ``N`` bosons on the lattice, sorted lexicographically."""
    if N < 0:
        raise ValueError(f"N must be >= 0, got {N}")
    basis = tuple(sorted(_compositions(N, lattice.num_sites)))
    return FockSector(lattice, Statistics.BOSON, N, basis)


def boson_space(lattice: LatticeSpec, n_max: int) -> FockSector:
    """Direct sum of the boson sectors with ``0 <= N <= n_max``."""
    basis = tuple(sorted(cfg for N in range(n_max + 1) for cfg in _compositions(N, lattice.num_sites)))
    return FockSector(lattice, Statistics.BOSON, None, basis)


def fermion_sector(lattice: LatticeSpec, n_up: int, n_down: int) -> FockSector:
    K = lattice.num_sites
    if not (0 <= n_up <= K and 0 <= n_down <= K):
        raise ValueError(f"need 0 <= N_up, N_down <= {K}, got ({n_up}, {n_down})")
    basis = []
    for ups in itertools.combinations(range(K), n_up):
        for downs in itertools.combinations(range(K), n_down):
            cfg = [0] * (2 * K)
            for i in ups:
                cfg[2 * i + UP] = 1
            for i in downs:
                cfg[2 * i + DOWN] = 1
            basis.append(tuple(cfg))
    return FockSector(lattice, Statistics.FERMION, (n_up, n_down), tuple(sorted(basis)))


def fermion_space(lattice: LatticeSpec) -> FockSector:
    """The full ``4**K`` dimensional two-species Fock space."""
    basis = tuple(itertools.product((0, 1), repeat=2 * lattice.num_sites))
    return FockSector(lattice, Statistics.FERMION, None, basis)


def mode(site: int, spin: int) -> int:
    return 2 * site + spin


def _apply_ladders(cfg: tuple[int, ...], ops: Sequence[Ladder], fermionic: bool):
    occ = list(cfg)
    amp = 1.0
    for m, dagger in reversed(ops):
        n = occ[m]
        if fermionic:
            if n == int(dagger):
                return 0.0, None
            if sum(occ[:m]) % 2:
                amp = -amp
            occ[m] = 1 - n
        elif dagger:
            amp *= math.sqrt(n + 1)
            occ[m] = n + 1
        else:
            if n == 0:
                return 0.0, None
            amp *= math.sqrt(n)
            occ[m] = n - 1
    return amp, tuple(occ)


def operator(sector: FockSector, terms: Iterable[Term], target: FockSector | None = None) -> sp.csr_matrix:
    """Sparse matrix of ``sum_k coef_k * prod(ladders_k)`` from ``sector`` to ``target``.

    Components that land outside ``target`` are dropped, which only happens
    for number-changing products or on a truncated mixed-number space.
    """
    target = sector if target is None else target
    fermionic = sector.statistics is Statistics.FERMION
    rows, cols, vals = [], [], []
    terms = [(complex(c), tuple(ops)) for c, ops in terms if c != 0]
    for col, cfg in enumerate(sector.basis):
        for coef, ops in terms:
            amp, new = _apply_ladders(cfg, ops, fermionic)
            if new is None:
                continue
            row = target.index.get(new)
            if row is None:
                continue
            rows.append(row)
            cols.append(col)
            vals.append(coef * amp)
    mat = sp.coo_matrix((vals, (rows, cols)), shape=(target.dim, sector.dim), dtype=complex)
    return mat.tocsr()


def hop(sector: FockSector, i: int, j: int) -> sp.csr_matrix:
    """``a_i^dag a_j`` on a bosonic sector (cached per sector)."""
    key = (i, j)
    cache = sector._hop_cache
    if key not in cache:
        cache[key] = operator(sector, [(1.0, ((i, True), (j, False)))])
    return cache[key]


def bilinear(sector: FockSector, A) -> sp.csr_matrix:
    """``sum_ij A[i, j] a_i^dag a_j`` for a bosonic sector."""
    A = np.asarray(A, dtype=complex)
    K = sector.lattice.num_sites
    if A.shape != (K, K):
        raise ValueError(f"coefficient matrix must be {K}x{K}, got {A.shape}")
    out = sp.csr_matrix((sector.dim, sector.dim), dtype=complex)
    for i, j in zip(*np.nonzero(A)):
        out = out + A[i, j] * hop(sector, i, j)
    return out.tocsr()


def number_operator(sector: FockSector, modes: Iterable[int] | None = None) -> sp.csr_matrix:
    """Diagonal operator counting particles in ``modes`` (all modes by default)."""
    occ = sector.occupations
    cols = list(range(occ.shape[1])) if modes is None else list(modes)
    return sp.diags(occ[:, cols].sum(axis=1).astype(complex), format="csr")


def build_hamiltonian(sector: FockSector, params: HubbardParams) -> sp.csr_matrix:
    """Hubbard Hamiltonian on a sector.

    Bosons: ``-J sum_links (a_i^dag a_j + h.c.) + U/2 sum_i n_i (n_i - 1)``.
    Fermions: ``-J sum_links,s (f_is^dag f_js + h.c.) + U sum_i n_iu n_id``.
    """
    if not isinstance(params, HubbardParams):
        raise TypeError(f"expected HubbardParams, got {type(params).__name__}")
    links = enumerate_links(sector.lattice)
    occ = sector.occupations
    if sector.statistics is Statistics.BOSON:
        terms = []
        for i, j in links:
            terms.append((-params.J, ((i, True), (j, False))))
            terms.append((-params.J, ((j, True), (i, False))))
        diag = 0.5 * params.U * np.sum(occ * (occ - 1), axis=1)
    elif sector.statistics is Statistics.FERMION:
        terms = []
        for i, j in links:
            for s in (UP, DOWN):
                terms.append((-params.J, ((mode(i, s), True), (mode(j, s), False))))
                terms.append((-params.J, ((mode(j, s), True), (mode(i, s), False))))
        diag = params.U * np.sum(occ[:, UP::2] * occ[:, DOWN::2], axis=1)
    else:
        raise ValueError(f"unknown statistics {sector.statistics!r}")
    H = operator(sector, terms) + sp.diags(diag.astype(complex))
    return H.tocsr()


def eta_dagger(i: int) -> tuple[Ladder, Ladder]:
    """``eta_i^dag = f_iu^dag f_id^dag``."""
    return ((mode(i, UP), True), (mode(i, DOWN), True))


def eta(i: int) -> tuple[Ladder, Ladder]:
    """``eta_i = f_id f_iu``, the adjoint of :func:`eta_dagger`."""
    return ((mode(i, DOWN), False), (mode(i, UP), False))


def _link_bec(sector, links, kappa):
    K = sector.lattice.num_sites
    jumps = []
    for i, j in links:
        u = np.zeros(K)
        v = np.zeros(K)
        u[[i, j]] = 1.0
        v[i], v[j] = 1.0, -1.0
        jumps.append((bilinear(sector, np.outer(u, v)), kappa))
    return jumps


def _momentum_bec(sector, kappa):
    lat = sector.lattice
    lat.require_periodic()
    K = lat.num_sites
    x = np.array([lat.coords(s) for s in range(K)], dtype=float)
    ks = list(itertools.product(range(lat.M), repeat=lat.d))
    qs = 2 * np.pi * np.array(ks, dtype=float) / lat.M
    # a_p^dag a_k = (1/K) sum_ij exp(-i p.x_i + i k.x_j) a_i^dag a_j
    plane = np.exp(1j * qs @ x.T) / np.sqrt(K)
    jumps = []
    for axis in range(lat.d):
        e = np.zeros(lat.d)
        e[axis] = 1.0
        for q in qs:
            A = np.zeros((K, K), dtype=complex)
            for kvec, pk in zip(qs, plane):
                p = kvec - q
                w = (1 + np.exp(1j * p @ e)) * (1 - np.exp(-1j * kvec @ e))
                if abs(w) < 1e-14:
                    continue
                A += w * np.outer(np.exp(-1j * x @ p) / np.sqrt(K), pk)
            jumps.append((bilinear(sector, A / np.sqrt(K)), kappa))
    return jumps


def _lambda_v(sector, family):
    lat = sector.lattice
    K = lat.num_sites
    kl = {+1: family.rate("kappa_lambda_plus"), -1: family.rate("kappa_lambda_minus")}
    kv = {+1: family.rate("kappa_v_plus"), -1: family.rate("kappa_v_minus")}
    jumps = []
    for j in range(K):
        for axis in range(lat.d):
            right = lat.neighbor(j, axis, +1)
            if right is not None:
                for sign in (+1, -1):
                    u = np.zeros(K)
                    v = np.zeros(K)
                    u[j] += 1.0
                    u[right] += sign
                    v[j] += 1.0
                    v[right] -= 1.0
                    jumps.append((bilinear(sector, np.outer(u, v) / 2), kl[sign]))
            left = lat.neighbor(j, axis, -1)
            if right is None or left is None:
                continue
            u = np.zeros(K)
            u[j] = 1.0
            v_plus = np.zeros(K)
            v_plus[left] -= 1.0
            v_plus[j] += 2.0
            v_plus[right] -= 1.0
            v_minus = np.zeros(K)
            v_minus[left] -= 1.0
            v_minus[right] += 1.0
            jumps.append((bilinear(sector, np.outer(u, v_plus) / 2), kv[+1]))
            jumps.append((bilinear(sector, np.outer(u, v_minus) / 2), kv[-1]))
    return jumps


def _eta_fermion(sector, links, k1, k2):
    jumps = []
    for i, j in links:
        c1 = []
        for a, sa in ((i, 1), (j, -1)):
            for b in (i, j):
                c1.append((sa, eta_dagger(a) + eta(b)))
        c2 = [
            (1.0, ((mode(i, UP), True), (mode(i, UP), False), (mode(i, DOWN), True), (mode(j, DOWN), False))),
            (1.0, ((mode(j, UP), True), (mode(j, UP), False), (mode(j, DOWN), True), (mode(i, DOWN), False))),
        ]
        jumps.append((operator(sector, c1), k1))
        jumps.append((operator(sector, c2), k2))
    return jumps


def build_jump_operators(sector: FockSector, family: JumpFamily) -> list[tuple[sp.csr_matrix, float]]:
    """Jump operators of ``family`` on ``sector`` paired with their rates.

    * link-bec: ``(a_i^dag + a_j^dag)(a_i - a_j)`` per link.
    * momentum-bec: the Fourier transform of link-bec along each axis, one
      operator per quasimomentum and axis.  Equal rates make the two
      families generate the same dissipator.
    * lambda-v: per link ``(a_j^dag +- a_{j+1}^dag)(a_j - a_{j+1})/2`` and per
      site with two neighbours along an axis
      ``a_j^dag(-a_{j-1} + 2a_j - a_{j+1})/2`` and ``a_j^dag(-a_{j-1} + a_{j+1})/2``.
    * eta-fermion: ``(eta_i^dag - eta_j^dag)(eta_i + eta_j)`` and
      ``n_iu f_id^dag f_jd + n_ju f_jd^dag f_id`` per link.
    """
    fermions = sector.statistics is Statistics.FERMION
    if family.fermionic != fermions:
        raise IncompatibleFamily(
            f"{family.kind.value} jumps need {'fermions' if family.fermionic else 'bosons'}, "
            f"sector holds {sector.statistics.value}s"
        )
    links = enumerate_links(sector.lattice)
    if family.kind is JumpKind.LINK_BEC:
        return _link_bec(sector, links, family.rate("kappa"))
    if family.kind is JumpKind.MOMENTUM_BEC:
        return _momentum_bec(sector, family.rate("kappa"))
    if family.kind is JumpKind.LAMBDA_V:
        return _lambda_v(sector, family)
    return _eta_fermion(sector, links, family.rate("kappa1"), family.rate("kappa2"))


def bec_state(sector: FockSector) -> np.ndarray:
    """``(a_0^dag)^N |0> / sqrt(N!)`` for the zero-quasimomentum mode.

    Amplitude of configuration ``n`` is ``sqrt(N!/prod n_i!) / K**(N/2)``.
    """
    if sector.statistics is not Statistics.BOSON or sector.N is None:
        raise ValueError("the condensate state lives in a fixed-N boson sector")
    N = sector.N
    K = sector.lattice.num_sites
    occ = sector.occupations
    logs = math.lgamma(N + 1) - np.sum([[math.lgamma(n + 1) for n in row] for row in occ], axis=1)
    amp = np.exp(0.5 * logs - 0.5 * N * np.log(K))
    return amp.astype(complex)


def momentum_occupation(sector: FockSector, q) -> sp.csr_matrix:
    """``a_q^dag a_q`` with ``a_q = K**-1/2 sum_j exp(i q.x_j) a_j``."""
    lat = sector.lattice
    K = lat.num_sites
    x = np.array([lat.coords(s) for s in range(K)], dtype=float)
    phase = np.exp(1j * x @ np.asarray(q, dtype=float)) / np.sqrt(K)
    return bilinear(sector, np.outer(phase.conj(), phase))
