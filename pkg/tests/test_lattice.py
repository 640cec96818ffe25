import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bosonlr.lattice import (Lattice, all_translations, annulus, ball, boundary, build_torus,
                             column, diam, distance_to_set, surface_constant, translation,
                             translations)


@pytest.mark.parametrize("L,D,n,ne,deg", [(3, 1, 3, 3, 2), (3, 2, 9, 18, 4), (2, 1, 2, 1, 1),
                                          (2, 2, 4, 4, 2), (4, 3, 64, 192, 6)])
def test_torus_counts(L, D, n, ne, deg):
    lat = build_torus(L, D)
    assert lat.n == n
    assert len(lat.edges) == ne
    assert all(lat.degree(i) == deg for i in lat.vertices)


def test_torus_rejects_bad_sizes():
    with pytest.raises(ValueError):
        build_torus(1, 1)
    with pytest.raises(ValueError):
        build_torus(3, 0)


def test_lattice_normalises_edges():
    lat = Lattice(3, [(1, 0), (0, 1), (2, 2), (1, 2)])
    assert lat.edges == ((0, 1), (1, 2))
    with pytest.raises(ValueError):
        Lattice(2, [(0, 5)])


def test_balls_on_ring():
    lat = build_torus(5, 1)
    assert ball(lat, {0}, 1) == {4, 0, 1}
    assert ball(lat, {0}, 3) == set(range(5))
    assert ball(lat, {1, 3}, 0) == {1, 3}
    assert list(distance_to_set(lat, {0})) == [0, 1, 2, 2, 1]


def test_disconnected_graph_distance():
    lat = Lattice(3, [(0, 1)])
    assert lat.dist[0, 2] < 0
    assert ball(lat, {0}, 5) == {0, 1}


def test_boundary():
    lat = build_torus(5, 1)
    assert boundary(lat, {0, 1, 2}) == {0, 2}
    assert boundary(lat, set(range(5))) == set()
    t = build_torus(5, 2)
    b = ball(t, {0}, 1)
    assert boundary(t, b) == set(t.neighbors[0])


def test_diam_and_annulus():
    lat = build_torus(8, 1)
    assert diam(lat, {0}) == 1
    assert diam(lat, {0, 3}) == 4
    assert annulus(lat, {0}, 4) == {3, 4, 5}
    assert annulus(lat, {0}, 1) == {1, 7}


@pytest.mark.parametrize("L,D,gamma", [(7, 1, 2), (9, 2, 4), (3, 1, 1), (3, 2, 4)])
def test_surface_constant(L, D, gamma):
    assert surface_constant(build_torus(L, D)) == gamma
    assert build_torus(L, D).gamma == gamma


def test_surface_constant_small_ring_is_finite():
    g = surface_constant(build_torus(2, 1))
    assert 1 <= g < np.inf


def test_translation_ring():
    lat = build_torus(3, 1)
    (T,) = translations(lat)
    assert [T(v) for v in range(3)] == [1, 2, 0]
    acc = T
    for _ in range(2):
        acc = acc.compose(T, 3)
    assert list(acc.perm) == [0, 1, 2]
    a, b = T(0), T(1)
    assert (min(a, b), max(a, b)) in lat.edges


def test_translation_inverse_and_group_size():
    lat = build_torus(4, 2)
    T = translation(lat, (1, 3))
    Ti = T.inverse(4)
    assert list(T.compose(Ti, 4).perm) == list(range(16))
    assert len(all_translations(lat)) == 16


@settings(max_examples=30, deadline=None)
@given(L=st.integers(2, 6), D=st.integers(1, 2), shift=st.lists(st.integers(-7, 7), min_size=2,
                                                                    max_size=2))
def test_translations_are_graph_automorphisms(L, D, shift):
    lat = build_torus(L, D)
    T = translation(lat, shift[:D])
    moved = {tuple(sorted((T(a), T(b)))) for a, b in lat.edges}
    assert moved == set(lat.edges)
    assert np.array_equal(lat.dist[np.ix_(T.perm, T.perm)], lat.dist)


@settings(max_examples=30, deadline=None)
@given(L=st.integers(3, 7), r=st.integers(0, 4), x=st.integers(0, 48))
def test_balls_grow_and_annulus_disjoint(L, r, x):
    lat = build_torus(L, 2)
    X = {x % lat.n}
    assert ball(lat, X, r) <= ball(lat, X, r + 1)
    A = annulus(lat, X, r)
    assert not (A & ball(lat, X, r // 2))


def test_columns_and_coords():
    lat = build_torus(3, 2)
    for v in lat.vertices:
        assert lat.index(lat.coords(v)) == v
    assert sorted(sum((column(lat, x) for x in range(3)), [])) == list(range(9))
    with pytest.raises(ValueError):
        column(build_torus(3, 1), 0)


def test_induced_sublattice():
    lat = build_torus(5, 1)
    sub, labels = lat.induced([1, 2, 3])
    assert labels == [1, 2, 3]
    assert sub.edges == ((0, 1), (1, 2))
