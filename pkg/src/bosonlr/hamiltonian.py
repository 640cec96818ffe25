"""Bose-Hubbard type Hamiltonians

    H = sum_{edges {i,j}} J_ij (b_i^dagger b_j + b_j^dagger b_i) + sum_i w(n_i)

Each unordered edge contributes once.  Subsystem, boundary, periodised and
cutoff-truncated variants are built from the same pieces.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
import scipy.sparse as sp

from . import fock


@dataclass(frozen=True)
class Interaction:
    """On-site interaction w(n), vectorised over integer occupations."""
    name: str
    func: Callable = field(repr=False, compare=False)
    params: tuple = ()

    def __call__(self, n):
        return self.func(np.asarray(n))


def power_p(p, U=1.0, mu=0.0):
    """w(n) = U n^p - mu n."""
    def w(n):
        n = np.asarray(n, dtype=float)
        return U * np.power(n, p) - mu * n
    return Interaction("power_p", w, (("p", p), ("U", U), ("mu", mu)))


def power_p_shifted(p, U=1.0, mu=0.0):
    """w(n) = U (n-1)^p - mu n.  For non-integer p the base is |n-1|."""
    def w(n):
        n = np.asarray(n, dtype=float)
        base = n - 1.0
        if float(p) == int(p):
            val = np.power(base, int(p))
        else:
            val = np.power(np.abs(base), p)
        return U * val - mu * n
    return Interaction("power_p_shifted", w, (("p", p), ("U", U), ("mu", mu)))


def custom_table(values, mu=0.0):
    """w(n) = values[n] - mu n; occupations beyond the table are an error."""
    table = np.asarray(values, dtype=float)

    def w(n):
        n = np.asarray(n, dtype=np.int64)
        if n.size and n.max() >= len(table):
            raise ValueError(f"interaction table has {len(table)} entries, "
                             f"occupation {int(n.max())} requested")
        return table[n] - mu * n
    return Interaction("custom_table", w, (("table", tuple(table)), ("mu", mu)))


def zero_interaction():
    return Interaction("zero", lambda n: np.zeros(np.shape(n)))


@dataclass(frozen=True)
class ModelSpec:
    """Hopping amplitudes and on-site interaction.

    ``J`` is either a number (uniform on all edges) or a mapping from
    unordered edges to amplitudes; missing edges then have amplitude 0.
    """
    J: float | Mapping = 1.0
    interaction: Interaction = field(default_factory=zero_interaction)
    k: int = 1

    def coupling(self, a, b):
        if isinstance(self.J, Mapping):
            key = (min(a, b), max(a, b))
            return float(self.J.get(key, self.J.get((key[1], key[0]), 0.0)))
        return float(self.J)

    @property
    def uniform(self):
        return not isinstance(self.J, Mapping)

    def Jbar(self, lat=None):
        if isinstance(self.J, Mapping):
            return max((abs(v) for v in self.J.values()), default=0.0)
        return abs(float(self.J))


def _check(basis, lat):
    if basis.n_sites != lat.n:
        raise ValueError("basis and lattice have different numbers of sites")


def hopping_sum(basis, spec, edges):
    """sum over the given edges of J_e (b_i^dagger b_j + h.c.)."""
    H = sp.csr_matrix((basis.dim, basis.dim), dtype=complex)
    for a, b in edges:
        J = spec.coupling(a, b)
        if J != 0.0:
            H = H + J * fock.hopping_operator(basis, a, b)
    H = H.tocsr()
    H.sum_duplicates()
    H.sort_indices()
    return H


def interaction_diagonal(basis, spec, sites=None):
    """Values of sum_{i in sites} w(n_i) on every basis state."""
    sites = range(basis.n_sites) if sites is None else sorted(set(sites))
    out = np.zeros(basis.dim)
    for i in sites:
        out += spec.interaction(basis.states[:, i])
    return out


def interaction_operator(basis, spec, sites=None):
    return fock.diag(interaction_diagonal(basis, spec, sites))


def hopping_part(basis, lat, spec):
    _check(basis, lat)
    return hopping_sum(basis, spec, lat.edges)


def assemble(basis, lat, spec):
    """Full Hamiltonian H = H_0 + W as a sparse complex matrix."""
    _check(basis, lat)
    H = (hopping_part(basis, lat, spec) + interaction_operator(basis, spec)).tocsr()
    H.sort_indices()
    return H


def edges_inside(lat, X):
    X = set(X)
    return [(a, b) for a, b in lat.edges if a in X and b in X]


def edges_crossing(lat, X):
    X = set(X)
    return [(a, b) for a, b in lat.edges if (a in X) != (b in X)]


def strip_wrap_edges(lat, X):
    """Edges closing a vertical strip of columns into a cylinder (D = 2).

    ``X`` must be a union of whole columns forming a contiguous (cyclic) run
    that is not the full torus.  The last column is joined row by row to the
    first one.  Pairs that already are lattice edges are skipped.
    """
    if lat.D != 2 or lat.L is None:
        raise ValueError("strip wrapping needs a two dimensional torus")
    L = lat.L
    X = set(X)
    cols = sorted({lat.coords(v)[0] for v in X})
    for x in cols:
        if any(lat.index((x, y)) not in X for y in range(L)):
            raise ValueError("X is not a union of full columns")
    if len(cols) == L:
        return []
    # rotate so that the run starts right after a missing column
    start = next(x for x in cols if (x - 1) % L not in cols)
    run = [(start + k) % L for k in range(len(cols))]
    if set(run) != set(cols):
        raise ValueError("columns of X are not contiguous")
    first, last = run[0], run[-1]
    existing = set(lat.edges)
    out = []
    for y in range(L):
        a, b = lat.index((last, y)), lat.index((first, y))
        e = (min(a, b), max(a, b))
        if a != b and e not in existing and e not in out:
            out.append(e)
    return out


def subsystem(basis, lat, spec, X, periodic_wrap=False):
    """(H_X, H_{0,X}, W_X) for the vertex set X.

    With ``periodic_wrap`` the strip X is closed into a cylinder by the
    edges of :func:`strip_wrap_edges`, which carry the uniform amplitude.
    """
    _check(basis, lat)
    edges = edges_inside(lat, X)
    if periodic_wrap:
        edges = edges + strip_wrap_edges(lat, X)
    H0 = hopping_sum(basis, spec, edges)
    W = interaction_operator(basis, spec, X)
    return (H0 + W).tocsr(), H0, W


def boundary_hopping(basis, lat, spec, X):
    """Hopping terms on edges with exactly one endpoint in X."""
    _check(basis, lat)
    return hopping_sum(basis, spec, edges_crossing(lat, X))


def truncate(H, basis, Xtilde, qbar):
    """Pi H Pi with Pi the projector onto n_i <= qbar for all i in Xtilde."""
    if qbar < 0:
        raise ValueError("cutoff must be nonnegative")
    P = fock.projector_region(basis, Xtilde, qbar)
    Ht = (P @ H @ P).tocsr()
    Ht.eliminate_zeros()
    Ht.sort_indices()
    return Ht


def commutator_norm(A, B):
    """Largest absolute entry of AB - BA (0 means exact commutation)."""
    C = (A @ B - B @ A).tocsr()
    C.eliminate_zeros()
    return float(np.abs(C.data).max()) if C.nnz else 0.0
