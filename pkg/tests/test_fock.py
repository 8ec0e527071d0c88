import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from dissipative_lattice.fock import (
    IncompatibleFamily,
    bec_state,
    boson_sector,
    boson_space,
    build_hamiltonian,
    build_jump_operators,
    fermion_sector,
    fermion_space,
    mode,
    momentum_occupation,
    number_operator,
    operator,
)
from dissipative_lattice.lattice import HubbardParams, JumpFamily, JumpKind, LatticeSpec
from dissipative_lattice.lindblad import commutator_norm, liouvillian_matrix


@given(st.integers(2, 5), st.integers(0, 4))
def test_boson_sector_dimension(M, N):
    assert boson_sector(LatticeSpec(1, M), N).dim == math.comb(N + M - 1, N)


def test_fermion_sector_dimension():
    sec = fermion_sector(LatticeSpec(1, 3, boundary="open"), 1, 2)
    assert sec.dim == 3 * 3
    assert fermion_space(LatticeSpec(1, 2, boundary="open")).dim == 16


def test_two_site_interaction_diagonal():
    # two bosons on one site of an open dimer: U/2 * 2 * 1 = U
    sec = boson_sector(LatticeSpec(1, 2, boundary="open"), 2)
    H = build_hamiltonian(sec, HubbardParams(J=1.0, U=0.7)).toarray()
    assert H[sec.index[(2, 0)], sec.index[(2, 0)]] == pytest.approx(0.7)
    assert H[sec.index[(1, 1)], sec.index[(1, 1)]] == pytest.approx(0.0)
    assert H[sec.index[(1, 1)], sec.index[(2, 0)]] == pytest.approx(-math.sqrt(2))


def test_build_hamiltonian_rejects_plain_mapping():
    sec = boson_sector(LatticeSpec(1, 3), 1)
    with pytest.raises(TypeError):
        build_hamiltonian(sec, {"J": 1.0})


@pytest.mark.parametrize("M,N,U,periodic", [(3, 2, 0.4, True), (4, 2, 1.1, False), (3, 3, 0.0, True)])
def test_hamiltonian_matches_tensor_product_oracle(M, N, U, periodic):
    H_ref, jumps_ref, _ = oracles.bose_hubbard_block(M, N, 1.0, U, 1.0, periodic)
    lat = LatticeSpec(1, M, boundary="periodic" if periodic else "open")
    sec = boson_sector(lat, N)
    H = build_hamiltonian(sec, HubbardParams(U=U)).toarray()
    # the oracle basis is the tensor order (site 0 most significant), same as the sorted basis
    np.testing.assert_allclose(H, H_ref, atol=1e-13)
    jumps = build_jump_operators(sec, JumpFamily(JumpKind.LINK_BEC))
    for (c, rate), c_ref in zip(jumps, jumps_ref):
        np.testing.assert_allclose(math.sqrt(rate) * c.toarray(), c_ref, atol=1e-13)


def test_ring_of_two_has_doubled_bond():
    sec = boson_sector(LatticeSpec(1, 2), 1)
    evals = np.linalg.eigvalsh(build_hamiltonian(sec, HubbardParams()).toarray())
    np.testing.assert_allclose(evals, [-2.0, 2.0])


def test_fermion_anticommutation():
    sec = fermion_space(LatticeSpec(1, 2, boundary="open"))
    f = [operator(sec, [(1.0, ((m, False),))]).toarray() for m in range(4)]
    fd = [operator(sec, [(1.0, ((m, True),))]).toarray() for m in range(4)]
    for a in range(4):
        for b in range(4):
            np.testing.assert_allclose(f[a] @ fd[b] + fd[b] @ f[a], np.eye(sec.dim) * (a == b), atol=1e-14)
            np.testing.assert_allclose(f[a] @ f[b] + f[b] @ f[a], 0, atol=1e-14)


def test_fermion_operators_match_jordan_wigner_oracle():
    # an occupation tuple read as binary digits is the tensor-product index
    sec = fermion_space(LatticeSpec(1, 2, boundary="open"))
    ref = oracles.fermion_ops(4)
    perm = [int("".join(str(b) for b in occ), 2) for occ in sec.basis]
    for m in range(4):
        mine = operator(sec, [(1.0, ((m, False),))]).toarray()
        np.testing.assert_allclose(mine, ref[m][np.ix_(perm, perm)], atol=1e-14)


def test_mode_layout():
    assert [mode(0, 0), mode(0, 1), mode(3, 1)] == [0, 1, 7]


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 4), st.integers(1, 3), st.floats(0, 3))
def test_hamiltonian_hermitian_and_number_conserving(M, N, U):
    sec = boson_space(LatticeSpec(1, M), N)
    H = build_hamiltonian(sec, HubbardParams(U=U))
    assert abs(H - H.conj().T).max() < 1e-14
    assert commutator_norm(H, number_operator(sec)) < 1e-13


def test_bec_state_normalized_and_uniform_occupation():
    lat = LatticeSpec(1, 4)
    sec = boson_sector(lat, 3)
    psi = bec_state(sec)
    assert np.linalg.norm(psi) == pytest.approx(1.0)
    n0 = momentum_occupation(sec, [0.0])
    assert np.real(np.vdot(psi, n0 @ psi)) == pytest.approx(3.0)
    np.testing.assert_allclose(psi, oracles.bec_vector(4, 3), atol=1e-14)


def test_momentum_family_generates_link_dissipator():
    sec = boson_sector(LatticeSpec(1, 4), 2)
    H = sp.csr_matrix((sec.dim, sec.dim))
    L_link = liouvillian_matrix(H, build_jump_operators(sec, JumpFamily(JumpKind.LINK_BEC)))
    L_mom = liouvillian_matrix(H, build_jump_operators(sec, JumpFamily(JumpKind.MOMENTUM_BEC)))
    assert abs(L_link - L_mom).max() < 1e-12


def test_statistics_mismatch_raises():
    with pytest.raises(IncompatibleFamily):
        build_jump_operators(boson_sector(LatticeSpec(1, 3), 1), JumpFamily(JumpKind.ETA_FERMION))
    with pytest.raises(IncompatibleFamily):
        build_jump_operators(fermion_sector(LatticeSpec(1, 2), 1, 1), JumpFamily(JumpKind.LINK_BEC))


@pytest.mark.parametrize("kind", [JumpKind.LINK_BEC, JumpKind.MOMENTUM_BEC, JumpKind.LAMBDA_V])
def test_bose_families_annihilate_condensate(kind):
    sec = boson_sector(LatticeSpec(1, 4), 2)
    psi = bec_state(sec)
    for c, _ in build_jump_operators(sec, JumpFamily(kind)):
        assert np.linalg.norm(c @ psi) < 1e-12
