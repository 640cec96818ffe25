"""Time evolution and measurements.

Sparse Krylov (Lanczos) propagation of state vectors with adaptive
sub-stepping, expectation values of Heisenberg-evolved observables and of
commutators, dense trace norms for small systems, Frobenius-norm terms of
operators against mixed states, and ground states by restarted Lanczos.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp


class PropagationError(RuntimeError):
    pass


class DimensionTooLarge(ValueError):
    pass


DEFAULT_DENSE_THRESHOLD = 4096


@dataclass(frozen=True)
class PropagatorSettings:
    krylov_dim: int = 30
    step_tolerance: float = 1e-10
    max_substeps: int = 100_000

    def __post_init__(self):
        if self.krylov_dim < 2:
            raise ValueError("krylov_dim must be at least 2")
        if not self.step_tolerance > 0:
            raise ValueError("step_tolerance must be positive")
        if self.max_substeps < 1:
            raise ValueError("max_substeps must be positive")


DEFAULT_SETTINGS = PropagatorSettings()


class StateEnsemble:
    """Mixed state rho = sum_k w_k |psi_k><psi_k|.

    Parameters
    ----------
    basis : FockBasis
    weights : array_like, shape (K,)
        Positive weights summing to one.
    vectors : array_like, shape (K, dim)
        Normalised amplitude vectors, one per row.
    """

    def __init__(self, basis, weights, vectors, check=True):
        w = np.atleast_1d(np.asarray(weights, dtype=float))
        V = np.atleast_2d(np.asarray(vectors, dtype=complex))
        if V.shape != (len(w), basis.dim):
            raise ValueError(f"vectors must have shape ({len(w)}, {basis.dim})")
        if check:
            if np.any(w <= 0):
                raise ValueError("weights must be positive")
            if abs(w.sum() - 1.0) > 1e-12:
                raise ValueError(f"weights sum to {w.sum()!r}, not 1")
            norms = np.linalg.norm(V, axis=1)
            if np.any(np.abs(norms - 1.0) > 1e-10):
                raise ValueError("ensemble members must be normalised")
        self.basis = basis
        self.weights = w
        self.vectors = V

    @classmethod
    def pure(cls, basis, psi):
        return cls(basis, [1.0], [psi])

    def __len__(self):
        return len(self.weights)

    def __iter__(self):
        return iter(zip(self.weights, self.vectors))

    def expectation(self, op):
        """tr(rho op), summed over members in index order."""
        total = 0j
        for w, v in self:
            total += w * np.vdot(v, op @ v)
        return total

    def dense(self):
        return (self.vectors.T * self.weights) @ self.vectors.conj()

    def sqrt_dense(self):
        vals, vecs = np.linalg.eigh(self.dense())
        vals = np.clip(vals, 0.0, None)
        return (vecs * np.sqrt(vals)) @ vecs.conj().T

    def map(self, f):
        """Apply f to every member vector (no renormalisation)."""
        return StateEnsemble(self.basis, self.weights,
                             np.array([f(v) for v in self.vectors]), check=False)

    def evolved(self, H, t, settings=DEFAULT_SETTINGS):
        return StateEnsemble(self.basis, self.weights,
                             np.array([evolve(H, v, t, settings) for v in self.vectors]),
                             check=False)


def _lanczos(H, v, m):
    """m-step Lanczos with full reorthogonalisation.

    Returns (V, alpha, beta, beta_last); V has the Krylov vectors as rows.
    beta_last is 0 on an invariant subspace.
    """
    n = v.shape[0]
    m = min(m, n)
    V = np.zeros((m, n), dtype=complex)
    alpha = np.zeros(m)
    beta = np.zeros(m)
    V[0] = v
    scale = 0.0
    for j in range(m):
        w = H @ V[j]
        a = np.vdot(V[j], w).real
        alpha[j] = a
        w = w - a * V[j]
        if j > 0:
            w = w - beta[j - 1] * V[j - 1]
        for _ in range(2):
            w = w - V[: j + 1].T @ (V[: j + 1].conj() @ w)
        b = np.linalg.norm(w)
        beta[j] = b
        scale = max(scale, abs(a), b)
        if b <= 1e-13 * max(scale, 1.0):
            return V[: j + 1], alpha[: j + 1], beta[:j], 0.0
        if j + 1 < m:
            V[j + 1] = w / b
    return V, alpha, beta[: m - 1], beta[m - 1]


def evolve(H, psi, t, settings=DEFAULT_SETTINGS):
    """Approximate exp(-i t H) psi by adaptive Krylov sub-steps."""
    psi = np.asarray(psi, dtype=complex)
    if t == 0:
        return psi.copy()
    nrm = np.linalg.norm(psi)
    if nrm == 0:
        return psi.copy()
    v = psi / nrm
    remaining = float(t)
    sign = 1.0 if remaining > 0 else -1.0
    steps = 0
    tol = settings.step_tolerance
    last = abs(remaining)
    while abs(remaining) > 0:
        V, alpha, beta, b_last = _lanczos(H, v, settings.krylov_dim)
        theta, S = la.eigh_tridiagonal(alpha, beta) if len(alpha) > 1 else (alpha, np.ones((1, 1)))
        e1 = S[0].conj()

        def coeffs(dt):
            return S @ (np.exp(-1j * theta * dt) * e1)

        # start from twice the last accepted step
        dt = sign * min(abs(remaining), 2.0 * last)
        while True:
            c = coeffs(dt)
            err = abs(b_last * c[-1])
            if err <= tol:
                break
            shrink = 0.9 * (tol / err) ** (1.0 / max(len(alpha), 1))
            dt = sign * abs(dt) * min(0.5, max(0.05, shrink))
            steps += 1
            if steps > settings.max_substeps:
                raise PropagationError(
                    f"Krylov propagation did not converge; residual estimate {err:.3e}")
        v = V.T @ c
        last = abs(dt)
        remaining -= dt
        if abs(remaining) < 1e-15 * abs(t):
            remaining = 0.0
        steps += 1
        if steps > settings.max_substeps:
            raise PropagationError(
                f"exceeded {settings.max_substeps} substeps; last residual {err:.3e}")
    return nrm * v


def evolve_times(H, psi, times, settings=DEFAULT_SETTINGS):
    """States exp(-i t H) psi for each t of a nondecreasing grid (rows)."""
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) < 0):
        raise ValueError("time grid must be sorted")
    out = np.empty((len(times), len(psi)), dtype=complex)
    cur, tcur = np.asarray(psi, dtype=complex), 0.0
    for k, t in enumerate(times):
        cur = evolve(H, cur, t - tcur, settings)
        tcur = t
        out[k] = cur
    return out


def heisenberg_expectation(rho, O, H, t, settings=DEFAULT_SETTINGS):
    """tr(rho O(t)) with O(t) = exp(iHt) O exp(-iHt)."""
    total = 0j
    for w, v in rho:
        phi = evolve(H, v, t, settings)
        total += w * np.vdot(phi, O @ phi)
    return total


def _is_hermitian(op):
    if sp.issparse(op):
        d = (op - op.conj().T)
        return d.nnz == 0 or np.abs(d.data).max() == 0
    return np.array_equal(op, op.conj().T)


def commutator_expectation(rho, O, Otilde, H, t, settings=DEFAULT_SETTINGS):
    """tr(rho [O(t), Otilde]).

    Per member: phi = U psi, chi = U Otilde psi and, unless Otilde is
    Hermitian, chi' = U Otilde^dagger psi, with U = exp(-iHt).  Then
    <psi|O(t) Otilde|psi> = <phi|O chi> and <psi|Otilde O(t)|psi> =
    <chi'|O phi>.
    """
    return commutator_series(rho, O, Otilde, H, [t], settings)[0]


def commutator_series(rho, O, Otilde, H, times, settings=DEFAULT_SETTINGS):
    """commutator_expectation on a sorted time grid, propagating incrementally."""
    herm = _is_hermitian(Otilde)
    OtH = None if herm else Otilde.conj().T
    out = np.zeros(len(times), dtype=complex)
    for w, v in rho:
        phis = evolve_times(H, v, times, settings)
        chis = evolve_times(H, Otilde @ v, times, settings)
        chips = chis if herm else evolve_times(H, OtH @ v, times, settings)
        for k in range(len(times)):
            a = np.vdot(phis[k], O @ chis[k])
            b = np.vdot(chips[k], O @ phis[k])
            out[k] += w * (a - b)
    return out


class DenseEvolver:
    """Full eigendecomposition of a (small) Hamiltonian."""

    def __init__(self, H, dense_threshold=DEFAULT_DENSE_THRESHOLD):
        n = H.shape[0]
        if n > dense_threshold:
            raise DimensionTooLarge(
                f"dimension {n} exceeds the dense threshold {dense_threshold}; "
                "use the expectation-value path instead")
        Hd = H.toarray() if sp.issparse(H) else np.asarray(H)
        self.energies, self.vectors = np.linalg.eigh(Hd)

    def unitary(self, t):
        """exp(-i t H)."""
        return (self.vectors * np.exp(-1j * self.energies * t)) @ self.vectors.conj().T

    def heisenberg(self, O, t):
        U = self.unitary(t)
        Od = O.toarray() if sp.issparse(O) else np.asarray(O)
        return U.conj().T @ Od @ U


def trace_norm(A):
    return float(np.linalg.svd(A, compute_uv=False).sum())


def weighted_commutator_trace_norm(rho, O, Otilde, H, t, dense_threshold=DEFAULT_DENSE_THRESHOLD,
                                   evolver=None):
    """|| rho [O(t), Otilde] ||_1 by dense linear algebra."""
    if rho.basis.dim > dense_threshold:
        raise DimensionTooLarge(
            f"dimension {rho.basis.dim} exceeds the dense threshold {dense_threshold}; "
            "use commutator_expectation instead")
    ev = evolver if evolver is not None else DenseEvolver(H, dense_threshold)
    Ot = ev.heisenberg(O, t)
    Tt = Otilde.toarray() if sp.issparse(Otilde) else np.asarray(Otilde)
    K = rho.dense() @ (Ot @ Tt - Tt @ Ot)
    return trace_norm(K)


def apply_chain(chain, v):
    """Apply a product of operators A_1 A_2 ... A_n to v (A_n acts first).

    ``chain`` may be a single operator, a callable, or a list of either.
    """
    if callable(chain) and not hasattr(chain, "shape"):
        return chain(v)
    if isinstance(chain, (list, tuple)):
        for A in reversed(chain):
            v = apply_chain(A, v)
        return v
    return chain @ v


def frobenius_term(chain, rho):
    """|| M sqrt(rho) ||_F = sqrt(sum_k w_k ||M psi_k||^2)."""
    total = 0.0
    for w, v in rho:
        total += w * float(np.linalg.norm(apply_chain(chain, v)) ** 2)
    return float(np.sqrt(total))


def ground_state(H, settings=DEFAULT_SETTINGS, tol=1e-8, max_restarts=2000, v0=None, seed=0):
    """Lowest eigenpair by explicitly restarted Lanczos.

    Each cycle runs ``settings.krylov_dim`` Lanczos steps from the current
    Ritz vector; iteration stops once ||H x - E x|| <= tol.
    """
    n = H.shape[0]
    if n == 1:
        E = float(np.real(H[0, 0] if not sp.issparse(H) else H.toarray()[0, 0]))
        return E, np.ones(1, dtype=complex)
    if v0 is None:
        rng = np.random.default_rng(seed)
        v = rng.normal(size=n) + 0j
    else:
        v = np.asarray(v0, dtype=complex).copy()
    v /= np.linalg.norm(v)
    m = max(settings.krylov_dim, 2)
    res = np.inf
    for _ in range(max_restarts):
        V, alpha, beta, _ = _lanczos(H, v, m)
        if len(alpha) > 1:
            _, S = la.eigh_tridiagonal(alpha, beta)
        else:
            S = np.ones((1, 1))
        x = V.T @ S[:, 0]
        x /= np.linalg.norm(x)
        Hx = H @ x
        E = float(np.vdot(x, Hx).real)
        res = float(np.linalg.norm(Hx - E * x))
        if res <= tol:
            return E, x
        v = x
    raise PropagationError(f"ground state did not converge; residual {res:.3e}")


def lowest_eigenspace(H, rel_tol=1e-9, dense_threshold=DEFAULT_DENSE_THRESHOLD):
    """Ground energy and an orthonormal basis (columns) of the ground space.

    Dense; meant for small strip Hamiltonians where degeneracies matter.
    """
    if H.shape[0] > dense_threshold:
        raise DimensionTooLarge("ground space resolution needs a dense eigensolve")
    Hd = H.toarray() if sp.issparse(H) else np.asarray(H)
    vals, vecs = np.linalg.eigh(Hd)
    scale = max(1.0, float(np.abs(vals).max()))
    sel = vals <= vals[0] + rel_tol * scale
    return float(vals[0]), vecs[:, sel]
