"""Closed-form evaluators: light-cone velocities and envelopes, the moment
constant, the short-time step tau0, the time/radius schedule, short-time
envelopes, improvement thresholds and the interpolated particle bound.

Strict inequalities on p are checked with exact rational arithmetic.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
import math

import numpy as np

TRACE = "trace"
EXPECT = "expect"
MODES = (TRACE, EXPECT)


class BoundConstraintError(ValueError):
    """Raised when p does not satisfy the mode's strict lower bound."""


def _frac(x):
    return Fraction(x) if not isinstance(x, Fraction) else x


def _check_mode(mode):
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


def decay_exponent(D, p, mode):
    """p/2 - D - 1 (trace) or p - D - 1 (expect), as an exact fraction."""
    _check_mode(mode)
    p = _frac(p)
    return p / 2 - D - 1 if mode == TRACE else p - D - 1


def check_p(D, p, mode):
    """Raise unless p > 2D+2 (trace) or p > D+1 (expect)."""
    if _frac(p) <= 1:
        raise BoundConstraintError(f"p must exceed 1, got {p}")
    if decay_exponent(D, p, mode) <= 0:
        need = 2 * D + 2 if mode == TRACE else D + 1
        raise BoundConstraintError(f"{mode} mode needs p > {need}, got p = {p}")


def velocity(t, D, p, mode, numerator="D"):
    """t**(D/(p/2-D-1)) (trace) or t**(D/(p-D-1)) (expect).

    ``numerator='D-1'`` selects the alternative exponent with D-1 on top.
    """
    check_p(D, p, mode)
    num = D if numerator == "D" else D - 1
    if numerator not in ("D", "D-1"):
        raise ValueError("numerator must be 'D' or 'D-1'")
    return float(t) ** (num / float(decay_exponent(D, p, mode)))


@dataclass
class BoundParams:
    """Analytic side of a light-cone bound.

    C is a calibration constant (fitted or supplied); the remaining fields
    record the model data it depends on.
    """
    D: int
    p: float
    Jbar: float = 1.0
    gamma: float = 1.0
    k: int = 1
    C_p: float = 1.0
    q0: int = 0
    C: float = 1.0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if _frac(self.p) <= 1:
            raise BoundConstraintError("p must exceed 1")


def envelope(t, R, params, mode, numerator="D"):
    """C (v(t) t / R)**e with e = p/2-D-1 (trace) or p-D-1 (expect)."""
    if t < 1 or R < 1:
        raise ValueError("envelope is defined for t >= 1 and R >= 1")
    check_p(params.D, params.p, mode)
    v = velocity(t, params.D, params.p, mode, numerator)
    e = float(decay_exponent(params.D, params.p, mode))
    return params.C * (v * t / R) ** e


def _moment_expr(n, p, eps, c_wtilde, J, D):
    return -(n ** p) / 2.0 + c_wtilde * (n + 1.0) ** (p - eps) + 4.0 * J * D * n


def moment_constant(J, p, D, eps=1.0, c_wtilde=0.0, n_cap=10 ** 6, return_argmax=False):
    """max over integers n >= 0 of -n^p/2 + c (n+1)^(p-eps) + 4 J D n.

    J enters through |J|.  The scan stops once -n^p/2 strictly dominates the
    positive terms and the expression has decreased three times in a row.
    """
    if not p > 1:
        raise ValueError("p must exceed 1")
    if not eps > 0:
        raise ValueError("eps must be positive")
    if c_wtilde < 0:
        raise ValueError("c_wtilde must be nonnegative")
    J = abs(J)
    best, arg = _moment_expr(0, p, eps, c_wtilde, J, D), 0
    prev = best
    decreases = 0
    n = 0
    while n < n_cap:
        n += 1
        val = _moment_expr(n, p, eps, c_wtilde, J, D)
        if val > best:
            best, arg = val, n
        decreases = decreases + 1 if val < prev else 0
        prev = val
        dominated = n ** p / 2.0 > c_wtilde * (n + 1.0) ** (p - eps) + 4.0 * J * D * n
        if dominated and decreases >= 3:
            break
    return (best, arg) if return_argmax else best


def moment_bound(E_rho, C):
    """2 (E_rho + C)."""
    return 2.0 * (E_rho + C)


def tau0(Jbar, gamma, k, D):
    """1 / (2^6 e^2 Jbar gamma^3 k (2k)^(2D))."""
    for name, val in (("Jbar", Jbar), ("gamma", gamma), ("k", k), ("D", D)):
        if not val > 0:
            raise ValueError(f"{name} must be positive")
    return 1.0 / (2 ** 6 * math.e ** 2 * Jbar * gamma ** 3 * k * (2 * k) ** (2 * D))


@dataclass(frozen=True)
class Schedule:
    t: float
    R: int
    r0: int
    tau0: float
    mbar: int
    tau_exact: Fraction
    r: int
    zeta: float | None

    @property
    def tau(self):
        return float(self.tau_exact)

    @property
    def radii(self):
        return [self.r0 + j * self.r for j in range(self.mbar + 1)]


def schedule(t, R, r0, tau0, D=None, p=None):
    """Split [0, t] into mbar = ceil(t/tau0) steps of length tau = t/mbar and
    radii r0 + j r, r = floor((R - r0)/mbar).

    tau is held as an exact fraction of the binary value of t, so that
    mbar * tau == t holds exactly.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    if not R > r0:
        raise ValueError("R must exceed r0")
    if not tau0 > 0:
        raise ValueError("tau0 must be positive")
    T, T0 = Fraction(t), Fraction(tau0)
    mbar = math.ceil(T / T0)
    tau = T / mbar
    r = (int(R) - int(r0)) // mbar
    if r < 1:
        raise ValueError(f"R - r0 = {R - r0} is smaller than the number of steps {mbar}")
    zeta = None
    if D is not None and p is not None and decay_exponent(D, p, TRACE) > 0:
        zeta = 1.0 + (D - 1) / float(decay_exponent(D, p, TRACE))
    return Schedule(float(t), int(R), int(r0), float(tau0), mbar, tau, r, zeta)


def short_time_envelope(r, boundary_size, shell_size, p, k, C, mode):
    """C (|bd| r e^{-r/(4k)} + |shell| r^{-p/2+1}); exponent -p+1 in expect mode."""
    _check_mode(mode)
    if r < 1:
        raise ValueError("r must be at least 1")
    poly = -p / 2.0 + 1.0 if mode == TRACE else -p + 1.0
    return C * (boundary_size * r * math.exp(-r / (4.0 * k)) + shell_size * r ** poly)


def improvement_threshold(D, mode):
    """Threshold on p above which the velocity beats t^(D-1), and the
    smallest integer strictly above it."""
    _check_mode(mode)
    if D < 2:
        raise ValueError("D must be at least 2")
    D = Fraction(D)
    if mode == TRACE:
        thr = 2 * D + 2 + 2 * D / (D - 1)
    else:
        thr = D + 1 + D / (D - 1)
    smallest = math.floor(thr) + 1
    return float(thr), smallest


def interpolated_particle_bound(t, q, p, D, C):
    """C t^(D(1 - p/q)) for q >= p; exactly C at q = p."""
    if q < p:
        raise ValueError("q must be at least p")
    if t < 1:
        raise ValueError("t must be at least 1")
    if q == p:
        return C
    return C * float(t) ** (D * (1.0 - p / q))


def interpolation_theta(p, q, q1):
    """theta with 1/q = (1-theta)/p + theta/q1 (p <= q <= q1; q1 may be inf)."""
    if not p <= q <= q1:
        raise ValueError("need p <= q <= q1")
    if p == q1:
        return 0.0
    inv_q1 = 0.0 if math.isinf(q1) else 1.0 / q1
    return (1.0 / p - 1.0 / q) / (1.0 / p - inv_q1)


def theta_choice(p, q, t, D):
    """theta = (1 - p/q) / (1 - p/t^D), the choice pairing the p-norm with
    a t^D-norm."""
    return (1.0 - p / q) / (1.0 - p / float(t) ** D)


def lp_norm(values, probs, q):
    """(sum_n p(n) |x_n|^q)^(1/q); the sup over the support for q = inf."""
    x = np.abs(np.asarray(values, dtype=float))
    w = np.asarray(probs, dtype=float)
    if math.isinf(q):
        return float(x[w > 0].max()) if np.any(w > 0) else 0.0
    return float(np.dot(w, x ** q) ** (1.0 / q))


def lyapunov_gap(values, probs, p, q, q1):
    """rhs - lhs of ||X||_q <= ||X||_p^(1-theta) ||X||_q1^theta."""
    th = interpolation_theta(p, q, q1)
    lhs = lp_norm(values, probs, q)
    rhs = lp_norm(values, probs, p) ** (1 - th) * lp_norm(values, probs, q1) ** th
    return rhs - lhs, lhs, rhs, th
