"""Occupation-number bases and elementary bosonic operators.

All operators are ``scipy.sparse.csr_matrix`` objects with complex entries,
canonical (sorted, duplicate free) index order, on a :class:`FockBasis`.
Basis states are stored as rows of an integer array in ascending
lexicographic order of the occupation vector.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np
import scipy.sparse as sp

DEFAULT_MAX_DIM = 5_000_000


@dataclass(frozen=True)
class FixedN:
    """Sector with exactly ``N`` particles."""
    N: int


@dataclass(frozen=True)
class Capped:
    """All configurations with at most ``n_max`` particles per site."""
    n_max: int


class BasisTooLarge(ValueError):
    pass


def sector_size(n_sites, sector):
    if isinstance(sector, FixedN):
        return comb(sector.N + n_sites - 1, n_sites - 1)
    if isinstance(sector, Capped):
        return (sector.n_max + 1) ** n_sites
    raise TypeError(f"unknown sector {sector!r}")


def _fixed_n_states(M, N):
    # ascending lexicographic order: first site varies slowest
    if M == 1:
        return np.array([[N]], dtype=np.int64)
    blocks = []
    for n0 in range(N + 1):
        rest = _fixed_n_states(M - 1, N - n0)
        blocks.append(np.hstack([np.full((len(rest), 1), n0, dtype=np.int64), rest]))
    return np.vstack(blocks)


def _capped_states(M, n_max):
    grids = np.indices((n_max + 1,) * M).reshape(M, -1).T
    return np.ascontiguousarray(grids, dtype=np.int64)


class FockBasis:
    """Enumerated occupation-number configurations of a sector.

    Parameters
    ----------
    lattice : Lattice
        Underlying graph; only its vertex count and distances are used here.
    sector : FixedN or Capped
    max_dim : int
        Hard cap on the number of states.
    """

    def __init__(self, lattice, sector, max_dim=DEFAULT_MAX_DIM):
        M = lattice.n
        if isinstance(sector, FixedN) and sector.N < 0:
            raise ValueError("particle number must be nonnegative")
        if isinstance(sector, Capped) and sector.n_max < 0:
            raise ValueError("n_max must be nonnegative")
        size = sector_size(M, sector)
        if size > max_dim:
            raise BasisTooLarge(f"basis of {size} states exceeds the cap {max_dim}")
        self.lattice = lattice
        self.sector = sector
        self.n_sites = M
        if isinstance(sector, FixedN):
            states = _fixed_n_states(M, sector.N)
            self._base = sector.N + 1
        else:
            states = _capped_states(M, sector.n_max)
            self._base = sector.n_max + 1
        states.setflags(write=False)
        self.states = states
        self.dim = len(states)
        self._use_keys = self._base ** M < 2 ** 62
        if self._use_keys:
            self._weights = self._base ** np.arange(M - 1, -1, -1, dtype=np.int64)
            self._keys = states @ self._weights
            assert np.all(np.diff(self._keys) > 0)
        else:
            self._lookup = {row.tobytes(): k for k, row in enumerate(states)}

    def __repr__(self):
        return f"FockBasis(sites={self.n_sites}, sector={self.sector}, dim={self.dim})"

    @property
    def max_occupation(self):
        if isinstance(self.sector, FixedN):
            return self.sector.N
        return self.sector.n_max

    def index(self, configs):
        """Indices of occupation vectors (rows); -1 where absent."""
        configs = np.asarray(configs, dtype=np.int64)
        single = configs.ndim == 1
        configs = np.atleast_2d(configs)
        if self._use_keys:
            ok = np.all((configs >= 0) & (configs < self._base), axis=1)
            keys = configs @ self._weights
            pos = np.searchsorted(self._keys, keys)
            pos = np.minimum(pos, self.dim - 1)
            found = ok & (self._keys[pos] == keys)
            out = np.where(found, pos, -1)
        else:
            out = np.array([self._lookup.get(np.ascontiguousarray(c).tobytes(), -1)
                            for c in configs], dtype=np.int64)
        return int(out[0]) if single else out

    def index_of(self, config):
        k = self.index(config)
        if k < 0:
            raise KeyError(f"configuration {tuple(config)} not in basis")
        return k

    def basis_vector(self, config):
        v = np.zeros(self.dim, dtype=complex)
        v[self.index_of(config)] = 1.0
        return v

    def occupations(self, i):
        return self.states[:, i]


def build_basis(lat, sector, max_dim=DEFAULT_MAX_DIM):
    return FockBasis(lat, sector, max_dim=max_dim)


def diag(values):
    return sp.diags(np.asarray(values, dtype=complex), 0, format="csr")


def identity(basis):
    return sp.identity(basis.dim, dtype=complex, format="csr")


def number_operator(basis, i, p=1):
    """Diagonal n_i**p (p > 0 real; 0**p = 0)."""
    n = basis.states[:, i].astype(float)
    return diag(np.power(n, p))


def total_number(basis):
    return diag(basis.states.sum(axis=1).astype(float))


def transfer_operator(basis, i, j):
    """b_i^dagger b_j: move one particle from site j to site i.

    In capped bases transitions that would exceed ``n_max`` are dropped.
    """
    if i == j:
        return number_operator(basis, i)
    st = basis.states
    src = np.flatnonzero(st[:, j] > 0)
    new = st[src].copy()
    new[:, i] += 1
    new[:, j] -= 1
    dst = basis.index(new)
    keep = dst >= 0
    src, dst = src[keep], dst[keep]
    amp = np.sqrt((st[src, i] + 1.0) * st[src, j])
    m = sp.csr_matrix((amp.astype(complex), (dst, src)), shape=(basis.dim, basis.dim))
    m.sort_indices()
    return m


def hopping_operator(basis, i, j):
    """b_i^dagger b_j + b_j^dagger b_i."""
    if i == j:
        raise ValueError("hopping needs two distinct sites")
    a = transfer_operator(basis, i, j)
    h = (a + a.conj().T).tocsr()
    h.sort_indices()
    return h


def annihilation_operator(basis, i):
    """b_i on a capped basis (changes the particle number)."""
    if not isinstance(basis.sector, Capped):
        raise ValueError("b_i leaves a fixed-N sector; use a capped basis")
    st = basis.states
    src = np.flatnonzero(st[:, i] > 0)
    new = st[src].copy()
    new[:, i] -= 1
    dst = basis.index(new)
    amp = np.sqrt(st[src, i].astype(float))
    m = sp.csr_matrix((amp.astype(complex), (dst, src)), shape=(basis.dim, basis.dim))
    m.sort_indices()
    return m


def creation_operator(basis, i):
    return annihilation_operator(basis, i).conj().T.tocsr()


_SITE_TESTS = {
    "le": np.less_equal,
    "lt": np.less,
    "eq": np.equal,
    "ge": np.greater_equal,
    "gt": np.greater,
}


def site_projector(basis, i, q, kind="le"):
    """Pi_{n_i <= q} and friends; kind in {'le','lt','eq','ge','gt'}."""
    test = _SITE_TESTS[kind]
    return diag(test(basis.states[:, i], q).astype(float))


def region_mask(basis, X, q):
    """Boolean mask of states with n_i <= q for every i in X."""
    X = sorted(set(X))
    if not X:
        return np.ones(basis.dim, dtype=bool)
    return np.all(basis.states[:, X] <= q, axis=1)


def projector_region(basis, X, q):
    """Product over i in X of Pi_{n_i <= q}."""
    if q < 0:
        raise ValueError("cutoff must be nonnegative")
    return diag(region_mask(basis, X, q).astype(float))


def region_number(basis, X):
    X = sorted(set(X))
    if not X:
        return np.zeros(basis.dim, dtype=np.int64)
    return basis.states[:, X].sum(axis=1)


def weighted_number_operator(basis, weights):
    """Diagonal sum_j nu_j n_j for nonnegative weights nu."""
    w = np.asarray(weights, dtype=float)
    if w.shape != (basis.n_sites,):
        raise ValueError("one weight per site expected")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    return diag(basis.states @ w)


def decay_weights(lat, i, rate=0.75):
    return np.exp(-rate * lat.dist[i].astype(float))


def decay_number_operator(basis, lat, i, rate=0.75):
    """sum_j exp(-rate * d(i,j)) n_j."""
    return weighted_number_operator(basis, decay_weights(lat, i, rate))


def lift_translation(basis, t):
    """Permutation matrix sending the configuration w to w o t^{-1}."""
    perm = np.asarray(t.perm if hasattr(t, "perm") else t)
    new = np.empty_like(basis.states)
    new[:, perm] = basis.states
    dst = basis.index(new)
    if np.any(dst < 0):
        raise ValueError("sector is not closed under this translation")
    m = sp.csr_matrix((np.ones(basis.dim, dtype=complex), (dst, np.arange(basis.dim))),
                      shape=(basis.dim, basis.dim))
    m.sort_indices()
    return m


class SupportError(ValueError):
    pass


def observable_q0(op, basis, X0, tol=1e-12):
    """Largest change of the particle number on X0 that ``op`` can cause.

    The operator must commute with every n_i outside X0 (checked entrywise up
    to ``tol``); otherwise :class:`SupportError` is raised.
    """
    X0 = set(X0)
    A = sp.coo_matrix(op)
    big = np.abs(A.data) > tol
    rows, cols = A.row[big], A.col[big]
    st = basis.states
    outside = [i for i in range(basis.n_sites) if i not in X0]
    if outside and len(rows):
        diff = st[rows][:, outside] != st[cols][:, outside]
        if np.any(diff):
            raise SupportError("operator changes occupations outside X0")
    if not len(rows):
        return 0
    nX = region_number(basis, X0)
    return int(np.abs(nX[rows] - nX[cols]).max())


def is_hermitian(op, tol=0.0):
    op = sp.csr_matrix(op)
    d = op - op.conj().T
    d.eliminate_zeros()
    if d.nnz == 0:
        return True
    return bool(np.abs(d.data).max() <= tol)


def dump_triplets(op, path):
    """Write 'row col re im' lines sorted by (row, col)."""
    A = sp.coo_matrix(op)
    order = np.lexsort((A.col, A.row))
    with open(path, "w") as fh:
        for k in order:
            z = complex(A.data[k])
            fh.write(f"{A.row[k]} {A.col[k]} {z.real:.17g} {z.imag:.17g}\n")


def load_triplets(path, dim):
    rows, cols, vals = [], [], []
    with open(path) as fh:
        for line in fh:
            r, c, re, im = line.split()
            rows.append(int(r))
            cols.append(int(c))
            vals.append(complex(float(re), float(im)))
    return sp.csr_matrix((vals, (rows, cols)), shape=(dim, dim))
