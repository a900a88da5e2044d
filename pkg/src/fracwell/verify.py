"""Property suite behind ``fracwell verify``.

Each check returns a :class:`CheckResult`; none of them raise on failure.
Grids are kept small so the whole suite runs in well under a minute.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import nfunc
from .evolve import Stepper, energy_monitor, integrate, rho_gradient
from .functionals import (
    ProblemParams,
    _report_from_values,
    energy_report,
    monotone_operator_check,
    nonlinear_lipschitz_check,
    scale_to_nehari,
    trial_fields,
    well_constants,
)
from .grid import Domain1D, Field
from .oracle import fd_gradient, naive_energies


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


def _timed(name, fn):
    t0 = time.perf_counter()
    try:
        ok, detail = fn()
    except Exception as exc:  # a crashing check is a failing check
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    return CheckResult(name, bool(ok), detail, time.perf_counter() - t0)


def _small(params: ProblemParams, M: int) -> ProblemParams:
    d = params.domain
    return ProblemParams(params.s, params.p, Domain1D(d.a, d.b, M, M), params.G, params.magnetic)


def check_oracle(params, rng, n_fields=5):
    P = _small(params, 6)
    T = P.kernel()
    d = P.domain
    worst = 0.0
    for _ in range(n_fields):
        u = rng.normal(size=d.M) + 1j * rng.normal(size=d.M)
        rep = energy_report(Field(u, d), P, T, with_norm=False)
        ref = naive_energies(u, d.a, d.b, d.M, d.pad, P.s, P.p, P.G.G, P.G.g,
                             (P.magnetic.kind, P.magnetic.c))
        got = {"rho": rep.rho_A, "seminorm2": rep.seminorm2, "pairing": rep.pairing, "lp1": rep.lp1,
               "J": rep.J, "I": rep.I}
        for k, v in got.items():
            worst = max(worst, abs(v - ref[k]) / max(abs(ref[k]), 1e-300))
    return worst < 1e-12, f"max rel err {worst:.2e}"


def check_gradient(params, rng):
    P = _small(params, 8)
    T = P.kernel()
    u = rng.normal(size=8) + 1j * rng.normal(size=8)
    grad = rho_gradient(u, P, T)

    def rho(v):
        return _report_from_values(v, P, T, with_norm=False).rho_A

    fd = fd_gradient(rho, u, 1e-6)
    err = float(np.max(np.abs(grad - fd)) / np.max(np.abs(fd)))
    return err < 1e-6, f"max rel err {err:.2e}"


def check_identities(params, table, rng, n=50):
    G = params.G
    bad = 0
    for v in trial_fields(params.domain, n, rng):
        r = _report_from_values(v, params, table)
        tol = 1e-9 * max(r.pairing, r.rho_A, r.lp1, 1e-300)
        bad += abs(r.J - (r.rho_A - r.lp1 / (params.p + 1))) > tol
        bad += abs(r.I - (r.pairing - r.lp1)) > tol
        bad += not (G.q_minus * r.rho_A * (1 - 1e-9) <= r.pairing <= G.q_plus * r.rho_A * (1 + 1e-9))
        bad += not bool(nfunc.zeta_sandwich_check(r.rho_A, r.seminorm_A, G))
        lower = (1 / G.q_plus - 1 / (params.p + 1)) * r.pairing + r.I / (params.p + 1)
        bad += r.J < lower - tol
    return bad == 0, f"{bad} violations over {n} fields"


def check_nehari(params, table, rng, n=50):
    bad, worst = 0, 0.0
    for v in trial_fields(params.domain, n, rng):
        lam = scale_to_nehari(v, params, table)
        r = _report_from_values(lam * v, params, table, with_norm=False)
        worst = max(worst, abs(r.I) / r.pairing)
        bad += _report_from_values(0.5 * lam * v, params, table, with_norm=False).I <= 0
        bad += _report_from_values(2.0 * lam * v, params, table, with_norm=False).I >= 0
    return bad == 0 and worst < 1e-9, f"{bad} sign violations, max |I|/pairing {worst:.1e}"


def check_inequalities(params, rng, n=10_000):
    G, p = params.G, params.p
    t = np.exp(rng.uniform(-6, 6, n))
    a = np.exp(rng.uniform(-6, 6, n))
    counts = {}
    counts["young"] = int(np.sum(~nfunc.young_check(G, a, t)))
    counts["conjugate"] = int(np.sum(~nfunc.conjugate_bound_check(G, t)))
    counts["power"] = int(np.sum(~nfunc.power_comparison_check(G, a, t)))
    z1 = rng.normal(size=n) + 1j * rng.normal(size=n)
    z2 = rng.normal(size=n) + 1j * rng.normal(size=n)
    counts["lipschitz"] = int(np.sum(~nonlinear_lipschitz_check(z1, z2, p)))
    lhs, _ = monotone_operator_check(z1, z2, G)
    counts["monotone"] = int(np.sum(lhs < -1e-12 * np.abs(z1 - z2) ** 2))
    # Luxemburg sandwich and Hoelder on random weighted samples
    zs = hs = 0
    for _ in range(200):
        k = int(rng.integers(2, 40))
        vals = np.exp(rng.uniform(-3, 3, k))
        w = np.exp(rng.uniform(-3, 1, k))
        nrm = nfunc.luxemburg_norm(vals, w, G)
        zs += not bool(nfunc.zeta_sandwich_check(nfunc.modular(vals, w, G), nrm, G))
        F = np.exp(rng.uniform(-3, 3, k))
        hs += not nfunc.holder_orlicz_check(vals, F, w, G)
    counts["zeta"] = zs
    counts["holder"] = hs
    total = sum(counts.values())
    return total == 0, ", ".join(f"{k}={v}" for k, v in counts.items())


def check_wells(params, table, rng, trials=32):
    wc = well_constants(params, table, trials=trials, rng=rng, cstar_trials=trials)
    x, y = wc.delta_grid, wc.d_curve
    left, right = x <= 1.0, (x >= 1.0) & (x <= (wc.b_root or x[-1]))
    inc = np.diff(y[left]) >= -1e-6 * np.abs(y[left][1:])
    dec = np.diff(y[right]) <= 1e-6 * np.abs(y[right][:-1])
    ok = wc.d_est >= wc.M_const and wc.d_at(1.0) >= wc.M_const and inc.all() and dec.all()
    return ok, f"d_est={wc.d_est:.4g} M={wc.M_const:.4g} C*={wc.C_star:.4g}"


def check_energy(params, table, u0: Field, t_end=0.2, dt=1e-3):
    st = Stepper(params, table, dt)
    res = integrate(u0, st, t_end, record_every=10)
    diss = np.array([r.diss for r in res.trace])
    drift = energy_monitor(res.trace)
    ok = drift < 1e-2 and bool(np.all(np.diff(diss) >= 0))
    return ok, f"drift {drift:.2e} status {res.status}"


def run_suite(params: ProblemParams, u0: Field | None = None, seed: int = 12345) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    table = params.kernel()
    checks = [
        ("oracle equivalence", lambda: check_oracle(params, rng)),
        ("gradient vs finite differences", lambda: check_gradient(params, rng)),
        ("definitional identities and sandwiches", lambda: check_identities(params, table, rng)),
        ("Nehari sign pattern", lambda: check_nehari(params, table, rng)),
        ("inequality suite", lambda: check_inequalities(params, rng)),
        ("well landscape", lambda: check_wells(params, table, rng)),
    ]
    if u0 is not None:
        checks.append(("energy identity", lambda: check_energy(params, table, u0)))
    return [_timed(name, fn) for name, fn in checks]


def format_table(results) -> str:
    width = max(len(r.name) for r in results)
    lines = []
    for r in results:
        lines.append(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<{width}}  {r.seconds:6.2f}s  {r.detail}")
    return "\n".join(lines)
