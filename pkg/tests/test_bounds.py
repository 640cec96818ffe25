import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bosonlr import bounds as B


def test_velocity_values():
    assert B.velocity(10, 2, 8, B.TRACE) == pytest.approx(100.0, rel=1e-14)
    assert B.velocity(10, 2, 6, B.EXPECT) == pytest.approx(10 ** (2 / 3), rel=1e-14)
    for D, p in ((1, 5), (2, 9), (3, 20)):
        for mode in B.MODES:
            assert B.velocity(1.0, D, p, mode) == 1.0


def test_velocity_alternative_numerator():
    assert B.velocity(10, 2, 8, B.TRACE, numerator="D-1") == pytest.approx(10.0)
    with pytest.raises(ValueError):
        B.velocity(10, 2, 8, B.TRACE, numerator="D+1")


def test_strict_thresholds_are_exact():
    with pytest.raises(B.BoundConstraintError):
        B.velocity(2, 2, 6, B.TRACE)          # p/2 - D - 1 = 0
    with pytest.raises(B.BoundConstraintError):
        B.velocity(2, 2, 3, B.EXPECT)         # p - D - 1 = 0
    with pytest.raises(B.BoundConstraintError):
        B.velocity(2, 1, Fraction(4), B.TRACE)
    assert B.velocity(1, 1, Fraction(4) + Fraction(1, 10 ** 12), B.TRACE) == 1.0
    with pytest.raises(B.BoundConstraintError):
        B.BoundParams(D=1, p=1)


def test_velocity_tends_to_one_for_large_p():
    t = 7.0
    vals = [B.velocity(t, 2, p, B.TRACE) for p in (10, 20, 50, 200, 2000)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert abs(vals[-1] - 1) < 0.01


def test_decay_exponent():
    assert B.decay_exponent(2, 8, B.TRACE) == 1
    assert B.decay_exponent(2, 8, B.EXPECT) == 5


def test_envelope():
    prm = B.BoundParams(D=2, p=10)
    t = 3.0
    v = B.velocity(t, 2, 10, B.TRACE)
    assert B.envelope(t, v * t, prm, B.TRACE) == pytest.approx(1.0)
    Rs = [B.envelope(t, R, prm, B.TRACE) for R in (2, 4, 8, 16)]
    assert all(b < a for a, b in zip(Rs, Rs[1:]))
    ts = [B.envelope(t, 40, prm, B.EXPECT) for t in (1, 2, 4, 8)]
    assert all(b > a for a, b in zip(ts, ts[1:]))
    with pytest.raises(ValueError):
        B.envelope(0.5, 3, prm, B.TRACE)


def test_moment_constant():
    assert B.moment_constant(0.0, 4, 1) == 0.0
    C, n = B.moment_constant(1.0, 2, 1, return_argmax=True)
    assert (C, n) == (8.0, 4)
    C, n = B.moment_constant(1.0, 4, 1, return_argmax=True)
    assert (C, n) == (3.5, 1)
    assert B.moment_bound(1.0, 3.5) == 9.0
    with pytest.raises(ValueError):
        B.moment_constant(1.0, 4, 1, eps=0)


@settings(max_examples=40, deadline=None)
@given(J=st.floats(0, 5), p=st.floats(1.5, 8), D=st.integers(1, 3), eps=st.floats(0.2, 1.4),
       c=st.floats(0, 0.4))
def test_moment_constant_matches_brute_force(J, p, D, eps, c):
    n = np.arange(10 ** 4 + 1, dtype=float)
    ref = np.max(-(n ** p) / 2 + c * (n + 1) ** (p - eps) + 4 * J * D * n)
    C = B.moment_constant(J, p, D, eps, c)
    assert abs(C - ref) <= 1e-9 * max(1.0, abs(ref))


def test_tau0():
    assert abs(B.tau0(1, 1, 1, 1) - 1 / (256 * math.e ** 2)) <= 1e-12
    assert B.tau0(2, 1, 1, 1) == pytest.approx(B.tau0(1, 1, 1, 1) / 2)
    base = B.tau0(1, 1, 1, 1)
    for args in ((2, 1, 1, 1), (1, 2, 1, 1), (1, 1, 2, 1), (1, 1, 1, 2)):
        assert B.tau0(*args) < base
    with pytest.raises(ValueError):
        B.tau0(0, 1, 1, 1)


def test_schedule_examples():
    s = B.schedule(1.0, 10, 0, 0.5)
    assert (s.mbar, s.tau) == (2, 0.5)
    s = B.schedule(1.2, 10, 0, 0.5)
    assert s.mbar == 3 and s.mbar * s.tau_exact == Fraction(1.2)
    assert s.tau == pytest.approx(0.4)
    assert B.schedule(1.2, 100, 2, 0.5).r == 32
    with pytest.raises(ValueError):
        B.schedule(10.0, 5, 0, 0.5)


@settings(max_examples=100, deadline=None)
@given(t=st.floats(1.0, 20.0), tau0=st.floats(0.01, 2.0), r0=st.integers(0, 5),
       extra=st.integers(0, 500))
def test_schedule_invariants(t, tau0, r0, extra):
    mbar = math.ceil(Fraction(t) / Fraction(tau0))
    R = r0 + mbar + extra
    s = B.schedule(t, R, r0, tau0)
    assert s.mbar * s.tau_exact == Fraction(t)
    assert s.tau_exact <= Fraction(tau0)
    assert s.tau >= min(t, tau0) / 2
    assert s.radii[0] == r0 and s.radii[-1] <= R


def test_schedule_zeta():
    s = B.schedule(2.0, 50, 0, 0.5, D=2, p=10)
    assert s.zeta == pytest.approx(1 + 1 / 2)


def test_short_time_envelope():
    assert B.short_time_envelope(3, 4, 0, 4, 1, 1.0, B.TRACE) == pytest.approx(
        4 * 3 * math.exp(-3 / 4))
    r, p = 5.0, 6.0
    tr = B.short_time_envelope(r, 0, 1, p, 1, 1.0, B.TRACE)
    ex = B.short_time_envelope(r, 0, 1, p, 1, 1.0, B.EXPECT)
    assert tr / ex == pytest.approx(r ** (p / 2))
    # past the turnover the envelope decreases
    vals = [B.short_time_envelope(r, 2, 3, 6, 1, 1.0, B.TRACE) for r in range(4, 60)]
    assert all(b < a for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("D,mode,thr,smallest", [(2, B.EXPECT, 5.0, 6), (3, B.EXPECT, 5.5, 6),
                                                (2, B.TRACE, 10.0, 11), (3, B.TRACE, 11.0, 12)])
def test_improvement_threshold(D, mode, thr, smallest):
    assert B.improvement_threshold(D, mode) == (thr, smallest)


def test_improvement_threshold_is_where_velocity_beats_t_power():
    # just above the threshold v(t) grows slower than t^(D-1)
    t = 1e3
    for D in (2, 3):
        thr, smallest = B.improvement_threshold(D, B.EXPECT)
        assert B.velocity(t, D, smallest, B.EXPECT) < t ** (D - 1)
        assert B.velocity(t, D, thr - 0.01, B.EXPECT) > t ** (D - 1)


def test_interpolated_particle_bound():
    assert B.interpolated_particle_bound(4.0, 8.0, 4.0, 2, 1.0) == pytest.approx(4.0)
    assert B.interpolated_particle_bound(9.0, 3.0, 3.0, 2, 0.7) == 0.7
    big = B.interpolated_particle_bound(10.0, 1e12, 4.0, 2, 1.0)
    assert big == pytest.approx(100.0, rel=1e-9)
    with pytest.raises(ValueError):
        B.interpolated_particle_bound(2.0, 1.0, 4.0, 2, 1.0)


def test_interpolation_theta():
    assert B.interpolation_theta(2, 2, 5) == 0.0
    assert B.interpolation_theta(2, 5, 5) == pytest.approx(1.0)
    assert B.interpolation_theta(2, 4, math.inf) == pytest.approx(0.5)
    th = B.theta_choice(4, 8, 3.0, 2)
    assert th == pytest.approx(0.5 / (1 - 4 / 9))


def test_lyapunov_endpoints_and_equality():
    x, w = [1.0, 3.0], [0.4, 0.6]
    gap, lhs, rhs, th = B.lyapunov_gap(x, w, 2.0, 2.0, 6.0)
    assert th == 0 and gap == pytest.approx(0.0, abs=1e-14)
    gap, lhs, rhs, th = B.lyapunov_gap(x, w, 2.0, 6.0, 6.0)
    assert th == pytest.approx(1.0) and gap == pytest.approx(0.0, abs=1e-12)
    gap, *_ = B.lyapunov_gap([2.5], [1.0], 1.5, 3.0, 7.0)
    assert abs(gap) <= 1e-14


@settings(max_examples=100, deadline=None)
@given(a=st.floats(0, 10), b=st.floats(0, 10), w=st.floats(0.01, 0.99), p=st.floats(1, 4),
       dq=st.floats(0, 5), dq1=st.floats(0, 10))
def test_lyapunov_two_point_sweep(a, b, w, p, dq, dq1):
    q, q1 = p + dq, p + dq + dq1
    gap, lhs, rhs, _ = B.lyapunov_gap([a, b], [w, 1 - w], p, q, q1)
    assert gap >= -1e-12 * max(1.0, rhs)


def test_lp_norm_inf():
    assert B.lp_norm([1, 5, 9], [0.5, 0.5, 0.0], math.inf) == 5
