"""Special states: Mott patterns, the alternating strip superposition, pair
trial states, periodised-strip ground states, the translation-averaged
high-line state, and single-site moment measurements.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from . import fock, hamiltonian as ham
from .lattice import column, translation
from .propagator import (DEFAULT_SETTINGS, DEFAULT_DENSE_THRESHOLD, StateEnsemble,
                         ground_state, lowest_eigenspace)


# ---------------------------------------------------------------- basics

def _pattern_array(basis, pattern):
    if isinstance(pattern, dict):
        arr = np.zeros(basis.n_sites, dtype=np.int64)
        for v, n in pattern.items():
            arr[int(v)] = int(n)
        return arr
    arr = np.asarray(pattern, dtype=np.int64)
    if arr.shape != (basis.n_sites,):
        raise ValueError("pattern needs one occupation per site")
    return arr


def mott(basis, pattern):
    """Product state with the given integer occupation on every site."""
    arr = _pattern_array(basis, pattern)
    if np.any(arr < 0):
        raise ValueError("occupations must be nonnegative")
    if isinstance(basis.sector, fock.FixedN) and arr.sum() != basis.sector.N:
        raise ValueError(f"pattern holds {arr.sum()} particles, sector has {basis.sector.N}")
    return StateEnsemble.pure(basis, basis.basis_vector(arr))


def uniform_mott(basis, fill=1):
    return mott(basis, [fill] * basis.n_sites)


def random_state(basis, rng, real=False):
    v = rng.normal(size=basis.dim)
    if not real:
        v = v + 1j * rng.normal(size=basis.dim)
    return v / np.linalg.norm(v)


def random_ensemble(basis, rng, members=1, real=False):
    w = rng.random(members) + 0.1
    w /= w.sum()
    w[-1] = 1.0 - w[:-1].sum()
    return StateEnsemble(basis, w, [random_state(basis, rng, real) for _ in range(members)])


def translation_average(rho, lifts):
    """Uniform mixture of rho and its images under the given operators."""
    W, V = [], []
    for P in lifts:
        for w, v in rho:
            W.append(w / len(lifts))
            V.append(P @ v)
    return StateEnsemble(rho.basis, W, V)


def ensembles_equal_up_to_phase(a, b, tol=1e-12):
    """Set equality of (weight, vector) pairs with vectors compared up to a
    global phase."""
    if len(a) != len(b):
        return False
    used = set()
    for w, v in a:
        match = None
        for k, (w2, v2) in enumerate(b):
            if k in used or abs(w - w2) > tol:
                continue
            if abs(abs(np.vdot(v2, v)) - 1.0) <= tol:
                match = k
                break
        if match is None:
            return False
        used.add(match)
    return True


def invariance_defect(rho, P):
    """|| P rho P^dagger - rho ||_F computed from member overlaps."""
    W, V = rho.weights, rho.vectors
    PV = np.array([P @ v for v in V])

    def tr_prod(A, B):
        G = A.conj() @ B.T
        return float(np.real(np.sum(np.outer(W, W) * np.abs(G) ** 2)))

    val = tr_prod(PV, PV) + tr_prod(V, V) - 2 * tr_prod(PV, V)
    return math.sqrt(max(val, 0.0))


def is_translation_invariant(rho, lifts, tol=1e-10):
    return all(invariance_defect(rho, P) <= tol for P in lifts)


def embed_product(basis, parts):
    """Vector of a product state in ``basis``.

    Each part is ``(sites, configs, amplitudes)``: the local configurations
    (rows, one entry per site in ``sites``) with their amplitudes.  Sites
    not covered by any part are empty.
    """
    configs = np.zeros((1, basis.n_sites), dtype=np.int64)
    amps = np.ones(1, dtype=complex)
    for sites, cfgs, a in parts:
        cfgs = np.atleast_2d(np.asarray(cfgs, dtype=np.int64))
        a = np.asarray(a, dtype=complex)
        keep = a != 0
        cfgs, a = cfgs[keep], a[keep]
        n0, n1 = len(configs), len(cfgs)
        configs = np.repeat(configs, n1, axis=0)
        configs[:, list(sites)] = np.tile(cfgs, (n0, 1))
        amps = np.repeat(amps, n1) * np.tile(a, n0)
    idx = basis.index(configs)
    if np.any(idx < 0):
        raise ValueError("product state leaves the basis sector")
    v = np.zeros(basis.dim, dtype=complex)
    np.add.at(v, idx, amps)
    return v


# ------------------------------------------------------- strip superposition

def strip_patterns(lat):
    """Occupation patterns with 2 on even (resp. odd) columns, 0 elsewhere."""
    if lat.D != 2 or lat.L is None or lat.L % 2:
        raise ValueError("strip patterns need a 2D torus of even side")
    ev = np.zeros(lat.n, dtype=np.int64)
    od = np.zeros(lat.n, dtype=np.int64)
    for v in range(lat.n):
        x = lat.coords(v)[0]
        (ev if x % 2 == 0 else od)[v] = 2
    return ev, od


def strip_superposition(basis, lat):
    """(|m_ev> + |m_odd>)/sqrt(2) with alternating columns of occupation 2 and 0."""
    if not isinstance(basis.sector, fock.FixedN) or basis.sector.N != lat.n:
        raise ValueError("strip superposition lives in the sector N = |Lambda|")
    ev, od = strip_patterns(lat)
    v = (basis.basis_vector(ev) + basis.basis_vector(od)) / math.sqrt(2.0)
    return StateEnsemble.pure(basis, v)


def strip_superposition_moments(basis, lat, spec, J, U):
    """Exact <m|H|m>, <m|H_0|m>, <m|H^2|m> against 4J^2R^2 + U^2R^4."""
    rho = strip_superposition(basis, lat)
    H = ham.assemble(basis, lat, spec)
    H0 = ham.hopping_part(basis, lat, spec)
    m = rho.vectors[0]
    Hm = H @ m
    R = lat.L
    return {
        "energy_per_site": float(np.vdot(m, Hm).real) / lat.n,
        "hopping_expectation": float(np.vdot(m, H0 @ m).real),
        "H2_exact": float(np.vdot(Hm, Hm).real),
        "H2_reference": 4 * J ** 2 * R ** 2 + U ** 2 * R ** 4,
    }


# ------------------------------------------------------------- pair states

def pair_energy_functional(l1, l2, J, U):
    """2U(l2^2 - T1 l1 l2), T1 = |J|/U."""
    return 2.0 * U * (l2 ** 2 - abs(J) / U * l1 * l2)


def optimize_pair_params(J, U):
    """Minimiser of the pair functional on l1^2 + 2 l2^2 = 1.

    With l1 = cos(th), l2 = sin(th)/sqrt(2) the functional reads
    U(sin^2 th - sqrt(2) T1 sin th cos th), minimised at
    tan(2 th) = sqrt(2) T1 with value (U/2)(1 - sqrt(1 + 2 T1^2)).
    """
    if not U > 0:
        raise ValueError("U must be positive")
    T1 = abs(J) / U
    th = 0.5 * math.atan2(math.sqrt(2.0) * T1, 1.0)
    l1, l2 = math.cos(th), math.sin(th) / math.sqrt(2.0)
    e = 0.5 * U * (1.0 - math.sqrt(1.0 + 2.0 * T1 ** 2))
    return l1, l2, e


def grid_search_pair(J, U, n=200_001):
    """Brute-force minimum of the pair functional over a theta grid."""
    th = np.linspace(0.0, math.pi, n)
    l1, l2 = np.cos(th), np.sin(th) / math.sqrt(2.0)
    f = pair_energy_functional(l1, l2, J, U)
    k = int(np.argmin(f))
    return float(l1[k]), float(l2[k]), float(f[k])


def pair_amplitudes(l1, l2, J):
    """Local two-site configurations and amplitudes of the pair state."""
    s = 1.0 if J >= 0 else -1.0
    cfgs = np.array([[1, 1], [2, 0], [0, 2]])
    return cfgs, np.array([l1, -l2 * s, -l2 * s], dtype=complex)


# ------------------------------------------------------------ strip states

@dataclass
class StripState:
    """Ground state of a periodised strip at density one.

    ``sites`` are the filled sites (original labels), ``basis`` the local
    basis on them and ``xi`` the amplitude vector.
    """
    sites: list
    empty_sites: list
    basis: fock.FockBasis
    xi: np.ndarray
    energy: float
    hamiltonian: object = field(repr=False)
    residual: float = 0.0
    degeneracy: int = 1
    U: float = 1.0

    @property
    def e1(self):
        return -self.energy / len(self.sites)

    @property
    def e2(self):
        return self.U

    @property
    def energy_density(self):
        return self.energy / len(self.sites)

    def local(self):
        keep = np.abs(self.xi) > 0
        return self.basis.states[keep], self.xi[keep]

    def ensemble(self, basis):
        cfgs, amps = self.local()
        v = embed_product(basis, [(self.sites, cfgs, amps)])
        return StateEnsemble.pure(basis, v)


def strip_hamiltonian(lat, spec, columns):
    """Periodised Hamiltonian on the given contiguous columns, together
    with the local lattice, its basis (density one) and the site labels."""
    sites = sorted(v for x in columns for v in column(lat, x))
    wrap = ham.strip_wrap_edges(lat, sites)
    sub, labels = lat.induced(sites, wrap)
    basis = fock.build_basis(sub, fock.FixedN(len(sites)))
    H = ham.assemble(basis, sub, spec)
    return H, sub, basis, labels


def _vertical_shift(lat, labels):
    pos = {s: k for k, s in enumerate(labels)}
    perm = np.empty(len(labels), dtype=np.int64)
    for k, s in enumerate(labels):
        x, y = lat.coords(s)
        perm[k] = pos[lat.index((x, y + 1))]
    return perm


def low_energy_strip(lat, spec, columns, ell0, settings=DEFAULT_SETTINGS, U=1.0,
                     dense_threshold=DEFAULT_DENSE_THRESHOLD, max_dim=200_000):
    """Density-one ground state on the first ``ell0`` of ``columns``; the
    remaining columns are left empty.

    The strip is closed into a cylinder.  The ground state comes from
    restarted Lanczos; when the ground space is small enough for a dense
    check and turns out degenerate, an eigenvector of the vertical shift is
    selected inside it so the state is translation covariant.
    """
    columns = list(columns)
    if not 1 <= ell0 <= len(columns):
        raise ValueError("ell0 must be between 1 and the strip width")
    filled = columns[:ell0]
    H, sub, basis, labels = strip_hamiltonian(lat, spec, filled)
    if basis.dim > max_dim:
        raise ValueError(f"strip basis of size {basis.dim} exceeds {max_dim}")
    E, xi = ground_state(H, settings)
    degeneracy = 1
    if basis.dim <= dense_threshold:
        E_dense, G = lowest_eigenspace(H)
        degeneracy = G.shape[1]
        if abs(E_dense - E) > 1e-7 * max(1.0, abs(E)):
            raise RuntimeError("Lanczos and dense ground energies disagree")
        if degeneracy > 1:
            P = fock.lift_translation(basis, _vertical_shift(lat, labels))
            M = G.conj().T @ (P @ G)
            vals, vecs = np.linalg.eig(M)
            k = int(np.argmin(np.abs(vals - 1.0)))
            xi = G @ vecs[:, k]
        else:
            xi = G[:, 0].astype(complex)
        E = E_dense
        xi = xi / np.linalg.norm(xi)
        # fix the global phase on the largest entry for reproducibility
        k = int(np.argmax(np.abs(xi)))
        xi = xi * (abs(xi[k]) / xi[k])
    residual = float(np.linalg.norm(H @ xi - E * xi))
    empty = sorted(v for x in columns[ell0:] for v in column(lat, x))
    return StripState(labels, empty, basis, xi, float(E), H, residual, degeneracy, U)


def pair_trial_vector(strip, lat, l1, l2, J):
    """Pair product state on the filled columns of a strip.

    Consecutive columns are paired row by row; a leftover column carries
    one particle per site.
    """
    cols = sorted({lat.coords(s)[0] for s in strip.sites},
                  key=lambda x: x)
    pos = {s: k for k, s in enumerate(strip.sites)}
    st = strip.basis.states
    amp = np.ones(strip.basis.dim, dtype=complex)
    cfgs, pa = pair_amplitudes(l1, l2, J)
    table = {tuple(c): a for c, a in zip(cfgs, pa)}
    for j in range(0, len(cols) - 1, 2):
        for y in range(lat.L):
            a = pos[lat.index((cols[j], y))]
            b = pos[lat.index((cols[j + 1], y))]
            local = [table.get((int(na), int(nb)), 0.0) for na, nb in zip(st[:, a], st[:, b])]
            amp *= np.asarray(local)
    if len(cols) % 2:
        for y in range(lat.L):
            a = pos[lat.index((cols[-1], y))]
            amp *= (st[:, a] == 1)
    return amp / np.linalg.norm(amp)


# ---------------------------------------------------------- high-line state

@dataclass(frozen=True)
class BadStateParams:
    """Geometry of the translation-averaged high-line state.

    ``gamma0`` is the requested dilution; the line occupation is
    q = round((1 - gamma0)(ell - 1) + 1), ell0 = ell - q filled strip
    columns per period, and the effective gamma0 = ell0/(ell - 1) makes the
    total particle number exactly R^2.
    """
    R: int
    ell: int
    gamma0_requested: float

    def __post_init__(self):
        if self.ell < 3:
            raise ValueError("ell must be at least 3")
        if self.R % self.ell:
            raise ValueError("R must be a multiple of ell")
        if not 0 < self.gamma0_requested < 1:
            raise ValueError("gamma0 must lie in (0, 1)")
        if self.q < 2:
            raise ValueError(f"line occupation q = {self.q} must be at least 2")
        if self.ell0 < 1:
            raise ValueError("no filled strip columns; increase gamma0")

    @property
    def q(self):
        return int(round((1.0 - self.gamma0_requested) * (self.ell - 1) + 1.0))

    @property
    def ell0(self):
        return self.ell - self.q

    @property
    def gamma0(self):
        return self.ell0 / (self.ell - 1)

    @property
    def particles(self):
        return (self.q + self.ell0) * self.R * (self.R // self.ell)


@dataclass
class BadState:
    rho: StateEnsemble
    params: BadStateParams
    strip: StripState
    psi0: np.ndarray = field(repr=False)


def bad_state(basis, lat, spec, params, settings=DEFAULT_SETTINGS, U=1.0):
    """Average over ell horizontal shifts of (q-lines) x (diluted strips)."""
    if lat.D != 2 or lat.L != params.R:
        raise ValueError("bad state needs the R x R torus")
    if not isinstance(basis.sector, fock.FixedN) or basis.sector.N != lat.n:
        raise ValueError("bad state lives in the sector N = |Lambda|")
    R, ell, q, ell0 = params.R, params.ell, params.q, params.ell0
    strip = low_energy_strip(lat, spec, list(range(1, ell)), ell0, settings, U=U)
    cfgs, amps = strip.local()
    shift_lat = {}
    parts = []
    for s in range(R // ell):
        line = column(lat, s * ell)
        parts.append((line, [[q] * len(line)], [1.0]))
        if s == 0:
            sites = strip.sites
        else:
            if s not in shift_lat:
                shift_lat[s] = translation(lat, (s * ell, 0))
            sites = [shift_lat[s](v) for v in strip.sites]
        parts.append((sites, cfgs, amps))
    psi0 = embed_product(basis, parts)
    psi0 /= np.linalg.norm(psi0)
    P = fock.lift_translation(basis, translation(lat, (1, 0)))
    vecs = [psi0]
    for _ in range(ell - 1):
        vecs.append(P @ vecs[-1])
    rho = StateEnsemble(basis, np.full(ell, 1.0 / ell), vecs)
    return BadState(rho, params, strip, psi0)


def designed_first_moment(params, e1, e2, p):
    """Both sides of gamma0 e1 ell = (1-gamma0)^p (ell-1)^p + (1-gamma0) e2 ell."""
    g, ell = params.gamma0, params.ell
    lhs = g * e1 * ell
    rhs = (1 - g) ** p * (ell - 1) ** p + (1 - g) * e2 * ell
    return lhs, rhs


# ----------------------------------------------------------- measurements

@dataclass
class MomentReport:
    site: int
    p: float
    value: float
    tail: dict
    energy_density: float


def occupation_distribution(rho, i):
    """Probabilities P(n_i = n) for n = 0..max occupation."""
    nmax = rho.basis.max_occupation
    occ = rho.basis.states[:, i]
    probs = np.zeros(nmax + 1)
    for w, v in rho:
        probs += w * np.bincount(occ, weights=np.abs(v) ** 2, minlength=nmax + 1)
    return probs


def measure_moments(rho, H, p, q_list, sites=None):
    """tr(rho n_i^p), tails tr(rho Pi_{n_i >= q}) and the energy density."""
    sites = range(rho.basis.n_sites) if sites is None else sites
    e = float(rho.expectation(H).real) / rho.basis.n_sites if H is not None else float("nan")
    out = []
    for i in sites:
        probs = occupation_distribution(rho, i)
        n = np.arange(len(probs), dtype=float)
        value = float(np.dot(probs, np.power(n, p)))
        tail = {int(q): float(probs[int(q):].sum()) for q in q_list}
        out.append(MomentReport(int(i), float(p), value, tail, e))
    return out
