import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from bosonlr import fock
from bosonlr.lattice import Lattice, build_torus, translations


def basis(L, sector, D=1):
    return fock.build_basis(build_torus(L, D), sector)


@pytest.mark.parametrize("M,sector,dim", [(3, fock.FixedN(2), 6), (2, fock.Capped(2), 9),
                                          (1, fock.FixedN(5), 1), (8, fock.FixedN(4), 330)])
def test_dimensions(M, sector, dim):
    lat = build_torus(M, 1) if M > 1 else Lattice(1, [])
    b = fock.build_basis(lat, sector)
    assert b.dim == dim == fock.sector_size(M, sector)


def test_lexicographic_order_and_lookup():
    b = basis(3, fock.FixedN(2))
    assert b.states.tolist() == [[0, 0, 2], [0, 1, 1], [0, 2, 0], [1, 0, 1], [1, 1, 0], [2, 0, 0]]
    assert b.index([1, 0, 1]) == 3
    assert b.index([3, 0, 0]) == -1
    assert list(b.index(b.states)) == list(range(b.dim))
    with pytest.raises(KeyError):
        b.index_of([0, 0, 1])


def test_basis_cap():
    with pytest.raises(fock.BasisTooLarge):
        fock.build_basis(build_torus(10, 1), fock.FixedN(10), max_dim=1000)


def test_number_operator_powers():
    b = basis(2, fock.FixedN(3))
    k = b.index([2, 1])
    assert fock.number_operator(b, 0)[k, k] == 2
    k3 = b.index([3, 0])
    assert fock.number_operator(b, 0, 4)[k3, k3] == 81
    b4 = basis(2, fock.FixedN(4))
    k4 = b4.index([4, 0])
    assert fock.number_operator(b4, 0, 2.5)[k4, k4] == pytest.approx(32.0, abs=1e-12)


def test_transfer_matrix_elements():
    b = basis(2, fock.FixedN(2))
    A = fock.transfer_operator(b, 0, 1)
    assert A[b.index([1, 1]), b.index([0, 2])] == pytest.approx(math.sqrt(2))
    assert A[b.index([2, 0]), b.index([1, 1])] == pytest.approx(math.sqrt(2))
    b1 = basis(2, fock.FixedN(1))
    h = fock.hopping_operator(b1, 0, 1).toarray()
    assert np.allclose(h, [[0, 1], [1, 0]])


def test_capped_ladder_operators_commutator():
    b = basis(2, fock.Capped(3))
    a = fock.annihilation_operator(b, 0).toarray()
    ad = fock.creation_operator(b, 0).toarray()
    assert np.allclose(ad, a.conj().T)
    comm = a @ ad - ad @ a
    n0 = b.states[:, 0]
    # canonical below the cap
    assert np.allclose(np.diag(comm)[n0 < 3], 1.0)
    with pytest.raises(Exception):
        fock.annihilation_operator(basis(2, fock.FixedN(1)), 0)


def test_projectors():
    b = basis(2, fock.FixedN(2))
    Pi = fock.site_projector(b, 0, 1, "le")
    v = b.basis_vector([2, 0])
    assert np.allclose(Pi @ v, 0)
    P = fock.projector_region(b, [0, 1], 1)
    assert abs(P @ P - P).max() == 0
    assert abs(fock.projector_region(b, [0, 1], 2) - fock.identity(b)).max() == 0


def test_weighted_number_operator():
    lat = build_torus(3, 1)
    b = fock.build_basis(lat, fock.FixedN(3))
    assert abs(fock.weighted_number_operator(b, np.ones(3)) - fock.total_number(b)).max() == 0
    D = fock.decay_number_operator(b, lat, 0)
    k = b.index([1, 1, 1])
    assert D[k, k] == pytest.approx(1 + 2 * math.exp(-0.75), abs=1e-14)
    ind = np.array([1.0, 1.0, 0.0])
    nX = fock.weighted_number_operator(b, ind).diagonal()
    assert np.array_equal(nX, fock.region_number(b, [0, 1]))


def test_lift_translation():
    lat = build_torus(3, 1)
    b = fock.build_basis(lat, fock.FixedN(3))
    (T,) = translations(lat)
    G = fock.lift_translation(b, T)
    out = G @ b.basis_vector([2, 0, 1])
    assert np.allclose(out, b.basis_vector([1, 2, 0]))
    Gi = fock.lift_translation(b, T.inverse(3))
    assert abs(G @ Gi - fock.identity(b)).max() == 0
    N = fock.total_number(b)
    assert abs(G @ N - N @ G).max() == 0


def test_observable_q0():
    b = basis(3, fock.Capped(2))
    assert fock.observable_q0(fock.site_projector(b, 0, 0, "eq"), b, [0]) == 0
    x = fock.annihilation_operator(b, 0) + fock.creation_operator(b, 0)
    assert fock.observable_q0(x, b, [0]) == 1
    assert fock.observable_q0(fock.number_operator(b, 0), b, [0]) == 0
    with pytest.raises(fock.SupportError):
        fock.observable_q0(fock.hopping_operator(b, 0, 1), b, [0])
    assert fock.observable_q0(fock.hopping_operator(b, 0, 1), b, [0, 1]) == 0


def test_triplet_round_trip(tmp_path):
    b = basis(3, fock.FixedN(2))
    A = fock.hopping_operator(b, 0, 1) + 1j * fock.number_operator(b, 2)
    path = tmp_path / "op.txt"
    fock.dump_triplets(A, path)
    B = fock.load_triplets(path, b.dim)
    assert abs(A - B).max() == 0


@settings(max_examples=25, deadline=None)
@given(M=st.integers(2, 4), N=st.integers(0, 5), i=st.integers(0, 3), j=st.integers(0, 3))
def test_transfer_adjoint_and_number_change(M, N, i, j):
    i, j = i % M, j % M
    if i == j:
        return
    b = basis(M, fock.FixedN(N))
    A = fock.transfer_operator(b, i, j)
    assert abs(A.conj().T - fock.transfer_operator(b, j, i)).max() < 1e-15
    # b_i^dag b_j raises n_i by one
    ni = fock.number_operator(b, i)
    comm = ni @ A - A @ ni
    assert abs(comm - A).max() < 1e-12
    # A^dag A = n_j (n_i + 1) on FixedN
    AtA = (A.conj().T @ A).toarray()
    expect = b.states[:, j] * (b.states[:, i] + 1.0)
    assert np.allclose(AtA, np.diag(expect))


@settings(max_examples=25, deadline=None)
@given(M=st.integers(1, 4), N=st.integers(0, 6))
def test_fixed_n_states_unique_and_complete(M, N):
    lat = build_torus(M, 1) if M > 1 else Lattice(1, [])
    b = fock.build_basis(lat, fock.FixedN(N))
    assert np.all(b.states.sum(axis=1) == N)
    assert len({tuple(r) for r in b.states}) == b.dim == math.comb(N + M - 1, M - 1)


def test_operators_are_csr_with_sorted_indices():
    b = basis(4, fock.FixedN(3))
    for op in (fock.hopping_operator(b, 0, 1), fock.number_operator(b, 2)):
        assert sp.isspmatrix_csr(op) or isinstance(op, sp.csr_array)
        assert op.has_sorted_indices
