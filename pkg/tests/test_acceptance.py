"""One check per acceptance criterion, each printing a single PASS/FAIL line.

Independent oracles: the naive double loop and finite differences in
``fracwell.oracle``, closed forms for power N-functions, and plain re-runs.
"""
from __future__ import annotations

import time

import numpy as np
import pytest

from fracwell import nfunc
from fracwell.analyze import detect_blowup, ground_state_solve, omega_limit_check, verify_decay, bracket_value
from fracwell.cli import main
from fracwell.evolve import Stepper, energy_monitor, integrate, rho_gradient
from fracwell.functionals import (
    ProblemParams,
    _report_from_values,
    classify,
    energy_report,
    monotone_operator_check,
    nonlinear_lipschitz_check,
    scale_to_nehari,
    trial_fields,
    well_constants,
)
from fracwell.grid import Domain1D, Field, MagneticField
from fracwell.nfunc import Power, PowerLog, PowerSum
from fracwell.oracle import fd_gradient, naive_energies

SPECS = [Power(2.0), Power(3.0), PowerSum(2.0, 4.0)]
FIELDS = [MagneticField("zero"), MagneticField("constant", 0.8), MagneticField("linear", 1.7)]

# s = 1/2 makes the modular scale-free in 1-D, so the bump must be wide for
# both the bump (sub-M energy, I > 0) and 20x the bump (sub-M energy, I < 0)
# to fit under M = 1/4; see the README.
WELL_DOMAIN = Domain1D(-4.0, 4.0, 64)
BUMP_WIDTH, BUMP_SCALE = 1.5, 0.2


def _bump(domain, scale=BUMP_SCALE):
    x = domain.x_interior
    return Field(scale * np.exp(-0.5 * (x / BUMP_WIDTH) ** 2), domain)


@pytest.fixture(scope="module")
def well_problem():
    P = ProblemParams(0.5, 3.0, WELL_DOMAIN, Power(2.0))
    T = P.kernel()
    wc = well_constants(P, T, trials=64, rng=np.random.default_rng(7), cstar_trials=64)
    return P, T, wc


@pytest.fixture(scope="module")
def w_runs(well_problem):
    P, T, _ = well_problem
    u0 = _bump(WELL_DOMAIN)
    runs = {}
    for dt in (1e-3, 5e-4):
        runs[dt] = integrate(u0, Stepper(P, T, dt), 2.0, record_every=int(round(1e-2 / dt)))
    return runs


def test_01_oracle_equivalence(accept):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    worst = 0.0
    for G in SPECS:
        for A in FIELDS:
            P = ProblemParams(0.5, 3.0, Domain1D(-1, 1, 6, 6), G, A)
            T = P.kernel()
            for _ in range(20):
                u = rng.normal(size=6) + 1j * rng.normal(size=6)
                r = energy_report(Field(u, P.domain), P, T, with_norm=False)
                ref = naive_energies(u, -1.0, 1.0, 6, 6, 0.5, 3.0, G.G, G.g, (A.kind, A.c))
                for mine, key in ((r.rho_A, "rho"), (r.seminorm2, "seminorm2"), (r.pairing, "pairing"),
                                  (r.J, "J"), (r.I, "I")):
                    worst = max(worst, abs(mine - ref[key]) / abs(ref[key]))
    dt = time.perf_counter() - t0
    accept(1, "oracle equivalence", worst < 1e-12 and dt < 10, f"max rel err {worst:.1e} in {dt:.1f}s")


def test_02_gradient_check(accept):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    worst = 0.0
    for G in SPECS:
        for A in FIELDS:
            P = ProblemParams(0.5, 3.0, Domain1D(-1, 1, 8, 8), G, A)
            T = P.kernel()
            u = rng.normal(size=8) + 1j * rng.normal(size=8)
            grad = rho_gradient(u, P, T)
            fd = fd_gradient(lambda v: _report_from_values(v, P, T, with_norm=False).rho_A, u, 1e-6)
            worst = max(worst, float(np.max(np.abs(grad - fd)) / np.max(np.abs(fd))))
    dt = time.perf_counter() - t0
    accept(2, "gradient vs central differences", worst < 1e-6 and dt < 10, f"max rel err {worst:.1e} in {dt:.1f}s")


def test_03_energy_identity(accept, well_problem, w_runs):
    P, T, wc = well_problem
    r0 = energy_report(_bump(WELL_DOMAIN), P, T)
    pre = r0.J < wc.M_const and r0.I > 0
    d1, d2 = energy_monitor(w_runs[1e-3].trace), energy_monitor(w_runs[5e-4].trace)
    ratio = d1 / d2
    ok = pre and d1 < 1e-2 and 1.5 <= ratio <= 3.0
    accept(3, "energy identity", ok,
           f"J0={r0.J:.4f} < M={wc.M_const:.4f}, drift {d1:.2e} (dt=1e-3), {d2:.2e} (dt=5e-4), ratio {ratio:.2f}")


def test_04_decay(accept, well_problem, w_runs):
    P, T, wc = well_problem
    tr = w_runs[1e-3].trace
    l2h = np.array([r.l2h for r in tr])
    strict = bool(np.all(np.diff(l2h) < 0))
    v = verify_decay(tr, wc)
    worst_bracket = float(np.max(bracket_value([r.pairing for r in tr], wc)))
    ok = strict and v.applicable and v.fit_r2 > 0.99 and v.fit_rate < 0 and v.bracket_ok
    accept(4, "global decay", ok,
           f"strictly decreasing={strict}, rate {v.fit_rate:.3f}, R2 {v.fit_r2:.6f}, max bracket {worst_bracket:.3f}")


def test_05_blowup(accept, well_problem):
    P, T, wc = well_problem
    u0 = Field(20 * _bump(WELL_DOMAIN).values, WELL_DOMAIN)
    r0 = energy_report(u0, P, T)
    res = integrate(u0, Stepper(P, T, 1e-3), 5.0, record_every=1)
    v = detect_blowup(res.trace, P, overflow=res.status == "blowup-detected")
    K = wc.decay_threshold
    pair_ok = all(r.pairing > K * wc.M_const for r in res.trace)
    ok = (r0.I < 0 and r0.J < wc.M_const and v.detected and res.trace[-1].t < 5.0
          and v.I_always_negative and v.xi_min > 0 and pair_ok)
    accept(5, "finite-time blowup", ok,
           f"J0={r0.J:.2f}, stopped at t={res.trace[-1].t:.4f} ({res.status}), t_est={v.t_blow_est:.4f}, "
           f"min xi={v.xi_min:.3g}, pairing > {K * wc.M_const:.3g} throughout={pair_ok}")


def test_06_well_landscape(accept, well_problem):
    P0, T0, wc0 = well_problem
    msgs, ok = [], True
    cases = [(P0, T0, wc0)]
    for G in (PowerSum(2.0, 3.0), PowerLog(3.0)):
        P = ProblemParams(0.5, 3.0, Domain1D(-4, 4, 48), G, MagneticField("linear", 0.5))
        T = P.kernel()
        cases.append((P, T, well_constants(P, T, trials=32, rng=np.random.default_rng(8), cstar_trials=32)))
    for P, T, wc in cases:
        x, y = wc.delta_grid, wc.d_curve
        b = wc.b_root if wc.b_root is not None else x[-1]
        left, right = y[x <= 1.0], y[(x >= 1.0) & (x <= b)]
        inc = np.all(np.diff(left) >= -1e-6 * np.abs(left[1:]))
        dec = np.all(np.diff(right) <= 1e-6 * np.abs(right[:-1]))
        this = wc.d_est >= wc.M_const and wc.d_at(1.0) >= wc.M_const and inc and dec
        msgs.append(f"{P.G.describe()}: d_est={wc.d_est:.4g} >= M={wc.M_const:.4g}")
        ok &= bool(this)
    q, p = 2.0, P0.p
    closed = (1 / q - 1 / (p + 1)) * float(wc0.h(1.0))
    gap = abs(wc0.d_est - closed)
    ok &= gap <= 0.1 * wc0.d_est
    msgs.append(f"power gap |d_est - (1/q-1/(p+1))h(1)| = {gap:.2e}")
    accept(6, "well landscape", ok, "; ".join(msgs))


def test_07_nehari_sign_pattern(accept):
    rng = np.random.default_rng(9)
    bad, worst = 0, 0.0
    for G, A in ((Power(2.0), MagneticField("zero")), (PowerSum(2.0, 3.0), MagneticField("linear", 1.2))):
        P = ProblemParams(0.5, 3.0, Domain1D(-1, 1, 48), G, A)
        T = P.kernel()
        for v in trial_fields(P.domain, 50, rng):
            lam = scale_to_nehari(v, P, T)
            at = _report_from_values(lam * v, P, T, with_norm=False)
            worst = max(worst, abs(at.I) / at.pairing)
            bad += _report_from_values(0.5 * lam * v, P, T, with_norm=False).I <= 0
            bad += _report_from_values(2.0 * lam * v, P, T, with_norm=False).I >= 0
    accept(7, "Nehari sign pattern", bad == 0 and worst < 1e-9,
           f"{bad} sign violations over 100 fields, max |I|/pairing {worst:.1e}")


def test_08_inequality_suite(accept):
    rng = np.random.default_rng(10)
    n = 10_000
    counts = dict.fromkeys(("zeta", "young", "conjugate", "holder", "power", "lipschitz", "monotone"), 0)
    # random members of the power families; PowerLog joins every check except the
    # g-analogue of the power comparison, which it genuinely violates (see test_nfunc)
    specs = [Power(float(q)) for q in rng.uniform(1.2, 5.0, 3)]
    specs += [PowerSum(*map(float, rng.uniform(1.2, 5.0, 2))) for _ in range(3)]
    for G in specs + [PowerLog(3.0)]:
        t = np.exp(rng.uniform(-5, 5, n))
        a = np.exp(rng.uniform(-5, 5, n))
        counts["young"] += int(np.sum(~nfunc.young_check(G, a, t)))
        counts["conjugate"] += int(np.sum(~nfunc.conjugate_bound_check(G, t)))
        if not isinstance(G, PowerLog):
            counts["power"] += int(np.sum(~nfunc.power_comparison_check(G, a, t)))
        z1 = (rng.normal(size=n) + 1j * rng.normal(size=n)) * np.exp(rng.uniform(-3, 3, n))
        z2 = (rng.normal(size=n) + 1j * rng.normal(size=n)) * np.exp(rng.uniform(-3, 3, n))
        lhs, _ = monotone_operator_check(z1, z2, G)
        counts["monotone"] += int(np.sum(lhs < 0))
    for p in (1.5, 3.0, 5.0):
        z1 = rng.normal(size=n) + 1j * rng.normal(size=n)
        z2 = rng.normal(size=n) + 1j * rng.normal(size=n)
        counts["lipschitz"] += int(np.sum(~nonlinear_lipschitz_check(z1, z2, p)))
    zeta_specs = [PowerSum(2.0, 4.0), PowerLog(3.0)]
    for i in range(n):
        k = int(rng.integers(1, 12))
        vals = np.exp(rng.uniform(-3, 3, k))
        w = np.exp(rng.uniform(-3, 1, k))
        Z = zeta_specs[i % 2]
        nrm = nfunc.luxemburg_norm(vals, w, Z)
        counts["zeta"] += not bool(nfunc.zeta_sandwich_check(nfunc.modular(vals, w, Z), nrm, Z))
        G = Power(float(rng.uniform(1.2, 5.0)))
        counts["holder"] += not nfunc.holder_orlicz_check(vals, np.exp(rng.uniform(-3, 3, k)), w, G)
    total = sum(counts.values())
    accept(8, "inequality suite", total == 0,
           ", ".join(f"{k}={v}" for k, v in counts.items()) + " violations (power comparison: power families only)")


def test_09_ground_state_and_omega_limit(accept):
    P = ProblemParams(0.5, 3.0, Domain1D(-4, 4, 48), Power(2.0))
    T = P.kernel()
    x = P.domain.x_interior
    gs = ground_state_solve(P, T, Field(np.exp(-x**2), P.domain), iters=2000, tol=1e-10)
    st = Stepper(P, T, 1e-3)
    stay = integrate(gs.u_star, st, 1.0, record_every=100, snapshot_every=100)
    om = omega_limit_check(stay.snapshots, gs, P, T)
    drift = float(np.max(om.dist_star))
    wc = well_constants(P, T, trials=16, rng=np.random.default_rng(11), cstar_trials=16)
    u0 = _bump(P.domain)
    r0 = energy_report(u0, P, T)
    label = classify(u0, wc, r0)
    run = integrate(u0, Stepper(P, T, 1e-3), 2.0, record_every=100, snapshot_every=200)
    om2 = omega_limit_check(run.snapshots, gs, P, T)
    ok = (gs.dual_residual < 1e-6 and drift < 1e-3 and label == "W" and om2.J_monotone and om2.dual_decreasing
          and om2.selected == "0")
    accept(9, "ground state and omega-limit", ok,
           f"dual residual {gs.dual_residual:.1e}, J*={gs.J_star:.5f}, max [u(t)-u*] {drift:.1e}, "
           f"global run: J monotone={om2.J_monotone}, dual decreasing={om2.dual_decreasing}, limit {om2.selected}")


def test_10_determinism(accept, tmp_path):
    cfg = tmp_path / "det.cfg"
    cfg.write_text(
        "frac.s=0.5\np=3\ng.kind=power\ng.q=2\ndomain.a=-4\ndomain.b=4\ndomain.m=32\n"
        "initial.width=1.5\ninitial.scale=0.2\ninitial.phase=0.3\nevolve.dt=1e-3\nevolve.t_end=0.5\n"
        "evolve.record_every=5\nwells.trials=8\nwells.cstar_trials=8\nwells.curve_candidates=2\nseed=42\n"
    )
    codes = [main(["simulate", "--config", str(cfg), "--out", str(tmp_path / d), "--deterministic"]) for d in "ab"]
    same = (tmp_path / "a" / "trace.csv").read_bytes() == (tmp_path / "b" / "trace.csv").read_bytes()
    same_rep = (tmp_path / "a" / "report.txt").read_bytes() == (tmp_path / "b" / "report.txt").read_bytes()
    accept(10, "determinism", codes == [0, 0] and same and same_rep,
           f"exit codes {codes}, trace identical={same}, report identical={same_rep}")
