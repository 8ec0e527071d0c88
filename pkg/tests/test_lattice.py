import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dissipative_lattice.lattice import (
    Boundary,
    HubbardParams,
    JumpFamily,
    JumpKind,
    LatticeSpec,
    MomentumUnavailable,
    bloch_energy,
    enumerate_links,
    mode_grid,
    momentum_array,
)


def test_parse_compact_form():
    lat = LatticeSpec.parse("1d:3:periodic")
    assert (lat.d, lat.M, lat.boundary) == (1, 3, Boundary.PERIODIC)
    assert LatticeSpec.parse("2d:4:open").boundary is Boundary.OPEN
    with pytest.raises(ValueError):
        LatticeSpec.parse("nonsense")


@pytest.mark.parametrize("kwargs", [dict(d=4, M=3), dict(d=1, M=1), dict(d=1, M=3, a=0.0)])
def test_lattice_validation(kwargs):
    with pytest.raises(ValueError):
        LatticeSpec(**kwargs)


def test_ring_of_three_links():
    assert enumerate_links(LatticeSpec(1, 3)) == [(0, 1), (1, 2), (2, 0)]


def test_open_chain_links():
    assert enumerate_links(LatticeSpec(1, 4, boundary="open")) == [(0, 1), (1, 2), (2, 3)]


@given(st.integers(1, 3), st.integers(3, 6))
def test_periodic_link_count(d, M):
    links = enumerate_links(LatticeSpec(d, M))
    assert len(links) == d * M**d
    assert len({frozenset(l) for l in links}) == d * M**d


@given(st.integers(1, 3), st.integers(2, 6))
def test_open_link_count(d, M):
    links = enumerate_links(LatticeSpec(d, M, boundary="open"))
    assert len(links) == d * (M - 1) * M ** (d - 1)


def test_neighbor_off_open_edge():
    lat = LatticeSpec(2, 3, boundary="open")
    assert lat.neighbor(lat.site((2, 0)), 0) is None
    assert lat.neighbor(lat.site((1, 2)), 1, -1) == lat.site((1, 1))


def test_hubbard_params_validation():
    with pytest.raises(ValueError):
        HubbardParams(U=-1)
    with pytest.raises(ValueError):
        HubbardParams(kappa=0)
    with pytest.raises(ValueError):
        HubbardParams(n=1, n0=2)
    assert HubbardParams(U=0.3, n=2).Un == pytest.approx(0.6)


def test_bloch_energy_values():
    assert bloch_energy(np.array([0.0])) == 0.0
    assert bloch_energy(np.array([math.pi])) == pytest.approx(2.0)
    assert bloch_energy(np.array([math.pi, math.pi]), J=0.5) == pytest.approx(2.0)


@given(st.floats(-10, 10), st.floats(0.1, 3))
def test_bloch_energy_periodic_and_even(q, J):
    e = bloch_energy(np.array([q]), J)
    assert bloch_energy(np.array([-q]), J) == pytest.approx(e)
    assert bloch_energy(np.array([q + 2 * math.pi]), J) == pytest.approx(e, abs=1e-12)


@given(st.integers(1, 3), st.integers(2, 7))
def test_mode_grid_counts_every_nonzero_mode_once(d, M):
    modes = mode_grid(LatticeSpec(d, M))
    assert len(modes) == M**d - 1
    assert all(m.sigma in (1, -1) for m in modes)


def test_momentum_array_layout():
    q = momentum_array(LatticeSpec(2, 4))
    assert q.shape == (4, 4, 2)
    np.testing.assert_allclose(q[1, 0], [math.pi / 2, 0.0])


def test_momentum_needs_periodic():
    with pytest.raises(MomentumUnavailable):
        mode_grid(LatticeSpec(1, 4, boundary="open"))


def test_jump_family_rates():
    fam = JumpFamily.make(JumpKind.LAMBDA_V, default_rate=0.5, kappa_v_minus=2.0)
    assert fam.rate("kappa_lambda_plus") == 0.5
    assert fam.rate("kappa_v_minus") == 2.0
    assert JumpFamily(JumpKind.ETA_FERMION).rate("kappa2") == 1.0
    with pytest.raises(ValueError):
        JumpFamily.make(JumpKind.LINK_BEC, kappa1=1.0)
    with pytest.raises(ValueError):
        JumpFamily.make(JumpKind.LINK_BEC, kappa=-1.0)
