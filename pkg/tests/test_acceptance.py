"""The thirteen acceptance criteria, each at its stated tolerance and runtime."""
import os
import time

import numpy as np

from bosonlr import fock, hamiltonian as ham, propagator as P, states as S
from bosonlr.config import load_config, parse_config
from bosonlr.experiments import audits as A
from bosonlr.experiments import lightcone_report, lightcone_scan
from bosonlr.lattice import build_torus

from conftest import ACCEPTANCE_LINES

CONFIGS = os.path.join(os.path.dirname(__file__), os.pardir, "configs")


def record(num, title, ok, elapsed, limit, detail=""):
    ok = bool(ok) and elapsed < limit
    line = (f"{num:>2} {'PASS' if ok else 'FAIL'}  {title}  ({elapsed:.2f}s, limit {limit}s)"
            + (f"  {detail}" if detail else ""))
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def config(name):
    return load_config(os.path.join(CONFIGS, f"{name}.yaml"))


def test_01_two_level_dynamics():
    t0 = time.perf_counter()
    lat = build_torus(2, 1)
    b = fock.build_basis(lat, fock.FixedN(1))
    J = 1.0
    H = ham.assemble(b, lat, ham.ModelSpec(J=J, interaction=ham.zero_interaction()))
    n0 = fock.number_operator(b, 0)
    ts = np.linspace(0.0, 5.0, 100)
    traj = P.evolve_times(H, b.basis_vector([1, 0]), ts)
    err = max(abs(np.vdot(v, n0 @ v).real - np.cos(J * t) ** 2) for t, v in zip(ts, traj))
    dt = time.perf_counter() - t0
    assert record(1, "two-level dynamics", err <= 1e-8, dt, 1, f"max error {err:.2e}")


def test_02_conservation_laws():
    t0 = time.perf_counter()
    lat = build_torus(6, 1)
    b = fock.build_basis(lat, fock.FixedN(4))
    H = ham.assemble(b, lat, ham.ModelSpec(J=1.0, interaction=ham.power_p(4)))
    N = fock.total_number(b)
    rho = S.random_ensemble(b, np.random.default_rng(2), 2)
    ts = np.linspace(0.0, 5.0, 51)
    dn = de = dN = 0.0
    for w, v in rho:
        E0, N0 = np.vdot(v, H @ v).real, np.vdot(v, N @ v).real
        for phi in P.evolve_times(H, v, ts):
            dn = max(dn, abs(np.linalg.norm(phi) - 1))
            de = max(de, abs(np.vdot(phi, H @ phi).real - E0))
            dN = max(dN, abs(np.vdot(phi, N @ phi).real - N0))
    dt = time.perf_counter() - t0
    ok = dn <= 1e-9 and de <= 1e-8 and dN <= 1e-10
    assert record(2, "conservation laws", ok, dt, 30,
                  f"norm {dn:.1e}, energy {de:.1e}, number {dN:.1e}")


def test_03_moment_bound():
    t0 = time.perf_counter()
    cfg = config("moments")
    assert cfg.L == 4 and cfg.N == 4 and len(cfg.times) == 50
    rep = A.moment_conservation_audit(cfg)
    dt = time.perf_counter() - t0
    worst = max(rep.data["sup_moment"])
    assert record(3, "moment bound", rep.passed, dt, 60,
                  f"sup moment {worst:.4f} <= {rep.data['bound']}, C = "
                  f"{rep.data['moment_constant']}")


def test_04_markov_tails():
    t0 = time.perf_counter()
    bad = []
    states = A.markov_samples(np.random.default_rng(4), 200)
    for rho in states:
        bad += A.markov_violations(rho)
    dt = time.perf_counter() - t0
    assert record(4, "Markov tails", not bad and len(states) == 200, dt, 10,
                  f"{len(bad)} violations")


def test_05_weighted_number_psd():
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    worst, fails = np.inf, 0
    insts = A.weighted_number_instances(rng, 50)
    for inst in insts:
        assert inst[0].n_sites in (2, 3) and inst[5] <= 3
        gap, scale, _ = A.weighted_number_check(*inst)
        worst = min(worst, gap / scale)
        fails += gap < -1e-9 * scale
    dt = time.perf_counter() - t0
    assert record(5, "weighted number operator inequality", fails == 0 and len(insts) == 50, dt,
                  60, f"min eig/||RHS|| = {worst:.2e}")


def test_06_hopping_bound():
    t0 = time.perf_counter()
    worst, fails, pairs = np.inf, 0, 0
    for b in A.hopping_bound_bases():
        assert b.dim <= 500
        for i in range(b.n_sites):
            for j in range(b.n_sites):
                if i != j:
                    gap, scale = A.hopping_bound_gap(b, i, j)
                    worst = min(worst, gap / scale)
                    fails += gap < -1e-9 * scale
                    pairs += 1
    dt = time.perf_counter() - t0
    assert record(6, "hopping bound", fails == 0, dt, 30,
                  f"{pairs} pairs, min eig/scale = {worst:.2e}")


def test_07_duhamel_inequality():
    t0 = time.perf_counter()
    cfg = parse_config(dict(lattice={"L": 5, "D": 1}, sector={"N": 3},
                            model={"J": 1.0, "p": 4, "U": 1.0},
                            state={"preset": "random", "members": 2, "seed": 7},
                            observables={"O": {"preset": "empty_site", "site": 0}},
                            options={"X": [0], "r": 2, "qbars": [1, 2, 3]},
                            tolerances={"quadrature": 1e-6}))
    rep = A.duhamel_inequality_audit(cfg)
    assert max(rep.data["taus"]) <= rep.data["tau0"]
    dt = time.perf_counter() - t0
    ratio = rep.checks[0].value
    assert record(7, "Duhamel inequality", rep.passed, dt, 120,
                  f"max LHS/RHS = {ratio:.3g}")


def test_08_truncation_trend():
    t0 = time.perf_counter()
    cfg = config("truncation")
    rep = A.truncation_error_audit(cfg)
    dt = time.perf_counter() - t0
    assert rep.data["qbars"] == list(range(1, cfg.N + 1))
    fit = rep.data.get("fit", {}).get("exponent")
    assert record(8, "truncation error trend", rep.passed, dt, 120,
                  f"fitted exponent {fit:.2f} <= {-(cfg.p / 2 - 1) + 0.5}")


def test_09_lightcone_leading_order():
    t0 = time.perf_counter()
    cfg = config("lightcone")
    assert (cfg.L, cfg.N, cfg.distances) == (8, 4, [2, 3])
    recs = lightcone_scan(cfg)
    rep = lightcone_report(cfg, recs)
    dt = time.perf_counter() - t0
    slopes = rep.data["slopes"]
    dom = all(r.trace_norm >= r.value - 1e-12 for r in recs)
    assert record(9, "light-cone leading order", rep.passed and dom, dt, 120,
                  "slopes " + ", ".join(f"d={k}: {v:.3f}" for k, v in slopes.items()))


def test_10_pair_optimisation():
    t0 = time.perf_counter()
    worst = A.pair_grid_check()
    dt = time.perf_counter() - t0
    assert record(10, "pair-state optimisation", worst <= 1e-6, dt, 1,
                  f"max deviation {worst:.1e}")


def test_11_bad_state():
    t0 = time.perf_counter()
    rep = A.badstate_audit(config("badstate"))
    dt = time.perf_counter() - t0
    assert record(11, "bad-state audit", rep.passed, dt, 120,
                  f"tail(q=2) = {rep.data['tail_q']:.4f} >= 1/3")


def test_12_formula_checks():
    t0 = time.perf_counter()
    rep = A.bounds_audit(config("bounds"))
    dt = time.perf_counter() - t0
    assert record(12, "formula checks", rep.passed, dt, 1)


def test_13_interpolation():
    t0 = time.perf_counter()
    rep = A.interpolation_audit(config("interp"))
    dt = time.perf_counter() - t0
    assert record(13, "interpolation audit", rep.passed, dt, 5)
