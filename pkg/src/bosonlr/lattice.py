"""Finite lattice geometry: tori, graph distances, balls, boundaries and
translations.

Vertices of a torus of side ``L`` in ``D`` dimensions are numbered in C order
of their coordinate tuples, so that ``coords[0]`` varies slowest.  For ``D=2``
we call ``coords[0]`` the horizontal (column) index and ``coords[1]`` the
vertical (row) index.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
import itertools

import numpy as np
import scipy.sparse as sp


class Lattice:
    """Simple undirected graph with cached all-pairs distances.

    Parameters
    ----------
    n : int
        Number of vertices.
    edges : iterable of pairs
        Unordered vertex pairs.  Duplicates and orientation are normalised,
        self loops are dropped.
    D : int, optional
        Nominal spatial dimension (used by the surface constant).
    L : int, optional
        Side length when the graph is a torus.
    """

    def __init__(self, n, edges, D=1, L=None):
        if n < 1:
            raise ValueError("lattice needs at least one vertex")
        es = set()
        for a, b in edges:
            a, b = int(a), int(b)
            if not (0 <= a < n and 0 <= b < n):
                raise ValueError(f"edge ({a}, {b}) out of range")
            if a != b:
                es.add((min(a, b), max(a, b)))
        self.n = int(n)
        self.D = int(D)
        self.L = None if L is None else int(L)
        self.edges = tuple(sorted(es))
        nbrs = [[] for _ in range(n)]
        for a, b in self.edges:
            nbrs[a].append(b)
            nbrs[b].append(a)
        self.neighbors = tuple(tuple(sorted(x)) for x in nbrs)
        self.dist = _bfs_distances(self.neighbors)
        self.dist.setflags(write=False)

    @property
    def vertices(self):
        return range(self.n)

    def __len__(self):
        return self.n

    def __repr__(self):
        return f"Lattice(n={self.n}, D={self.D}, L={self.L}, edges={len(self.edges)})"

    @cached_property
    def adjacency(self):
        rows = [a for a, b in self.edges] + [b for a, b in self.edges]
        cols = [b for a, b in self.edges] + [a for a, b in self.edges]
        return sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(self.n, self.n))

    @cached_property
    def diameter(self):
        d = self.dist
        return int(d[d >= 0].max()) if self.n > 1 else 0

    @cached_property
    def gamma(self):
        return surface_constant(self)

    def degree(self, i):
        return len(self.neighbors[i])

    # torus coordinates
    def coords(self, v):
        if self.L is None:
            raise ValueError("coordinates are only defined on tori")
        return tuple(int(c) for c in np.unravel_index(int(v), (self.L,) * self.D))

    def index(self, coords):
        if self.L is None:
            raise ValueError("coordinates are only defined on tori")
        c = tuple(int(x) % self.L for x in coords)
        return int(np.ravel_multi_index(c, (self.L,) * self.D))

    def induced(self, sites, extra_edges=()):
        """Subgraph on ``sites`` relabelled 0..len(sites)-1.

        ``extra_edges`` are given in the original labels and added on top of
        the induced edges.  Returns the subgraph and the list of original
        labels in order.
        """
        sites = sorted(set(int(s) for s in sites))
        pos = {s: k for k, s in enumerate(sites)}
        es = [(pos[a], pos[b]) for a, b in self.edges if a in pos and b in pos]
        es += [(pos[a], pos[b]) for a, b in extra_edges]
        return Lattice(len(sites), es, D=self.D), sites


def _bfs_distances(neighbors):
    n = len(neighbors)
    dist = np.full((n, n), -1, dtype=np.int64)
    for s in range(n):
        row = dist[s]
        row[s] = 0
        dq = deque([s])
        while dq:
            u = dq.popleft()
            for v in neighbors[u]:
                if row[v] < 0:
                    row[v] = row[u] + 1
                    dq.append(v)
    return dist


def build_torus(L, D):
    """Discrete torus (Z/LZ)^D with nearest-neighbour edges.

    For ``L = 2`` the two neighbours along an axis coincide and the pair is
    kept as a single edge, so every vertex has degree ``D``.
    """
    if int(L) != L or L < 2:
        raise ValueError("torus side L must be an integer >= 2")
    if int(D) != D or D < 1:
        raise ValueError("dimension D must be a positive integer")
    L, D = int(L), int(D)
    shape = (L,) * D
    n = L ** D
    edges = []
    for v in range(n):
        c = np.unravel_index(v, shape)
        for ax in range(D):
            c2 = list(c)
            c2[ax] = (c2[ax] + 1) % L
            edges.append((v, int(np.ravel_multi_index(c2, shape))))
    return Lattice(n, edges, D=D, L=L)


def _as_set(X):
    if isinstance(X, (int, np.integer)):
        return {int(X)}
    return set(int(x) for x in X)


def distance_to_set(lat, X):
    """Array of d(X, i) over all vertices i."""
    X = sorted(_as_set(X))
    if not X:
        raise ValueError("distance to an empty set is undefined")
    return lat.dist[X].min(axis=0)


def ball(lat, X, r):
    """X[r] = {i : d(X, i) <= r}."""
    if r < 0:
        raise ValueError("radius must be nonnegative")
    d = distance_to_set(lat, X)
    return set(np.flatnonzero((d >= 0) & (d <= r)).tolist())


def boundary(lat, X):
    """Interior boundary {i in X : i has a neighbour outside X}."""
    X = _as_set(X)
    return {i for i in X if any(j not in X for j in lat.neighbors[i])}


def diam(lat, X):
    """1 + largest pairwise distance inside X."""
    X = sorted(_as_set(X))
    if not X:
        return 0
    return 1 + int(lat.dist[np.ix_(X, X)].max())


def annulus(lat, X, r):
    """X[r] minus X[floor(r/2)]."""
    return ball(lat, X, r) - ball(lat, X, r // 2)


def surface_constant(lat):
    """Smallest gamma >= 1 with |boundary(i[l])| <= gamma * max(l,1)^(D-1).

    Every vertex and every radius up to the diameter is checked.
    """
    A = lat.adjacency
    gamma = 1.0
    for i in range(lat.n):
        di = lat.dist[i]
        for ell in range(lat.diameter + 1):
            inside = (di >= 0) & (di <= ell)
            outside = (~inside).astype(float)
            nb = inside & (A @ outside > 0)
            count = int(nb.sum())
            gamma = max(gamma, count / max(ell, 1) ** (lat.D - 1))
    return gamma


@dataclass(frozen=True)
class Translation:
    """Lattice shift together with the induced vertex permutation.

    ``perm[v]`` is the image of vertex ``v``.
    """
    shift: tuple
    perm: np.ndarray = field(repr=False, compare=False)

    def __call__(self, v):
        return int(self.perm[v])

    def compose(self, other, L):
        s = tuple((a + b) % L for a, b in zip(self.shift, other.shift))
        return Translation(s, self.perm[other.perm])

    def inverse(self, L):
        inv = np.empty_like(self.perm)
        inv[self.perm] = np.arange(len(self.perm))
        return Translation(tuple((-a) % L for a in self.shift), inv)


def translation(lat, shift):
    """Translation of a torus by an integer vector."""
    if lat.L is None:
        raise ValueError("translations need a torus")
    shift = tuple(int(s) % lat.L for s in shift)
    if len(shift) != lat.D:
        raise ValueError("shift length must equal D")
    grid = np.indices((lat.L,) * lat.D).reshape(lat.D, -1)
    moved = (grid + np.array(shift)[:, None]) % lat.L
    perm = np.ravel_multi_index(tuple(moved), (lat.L,) * lat.D)
    return Translation(shift, perm.astype(np.int64))


def translations(lat):
    """One unit shift per axis."""
    gens = []
    for ax in range(lat.D):
        s = [0] * lat.D
        s[ax] = 1
        gens.append(translation(lat, s))
    return gens


def all_translations(lat):
    """Every element of the translation group."""
    return [translation(lat, s) for s in itertools.product(range(lat.L), repeat=lat.D)]


def column(lat, x):
    """Vertices of the vertical line with horizontal coordinate x (D=2)."""
    if lat.D != 2:
        raise ValueError("columns are defined for D=2 tori")
    return [lat.index((x, y)) for y in range(lat.L)]
