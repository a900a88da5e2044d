"""Post-processing of traces: decay, blowup, ground states and omega-limit behaviour."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .evolve import _rhs
from .functionals import (
    ProblemParams,
    ProjectionUndefined,
    WellConstants,
    _report_from_values,
    scale_to_nehari,
)
from .grid import Field, KernelTable
from .nfunc import luxemburg_norm

__all__ = [
    "DecayVerdict",
    "BlowupVerdict",
    "GroundState",
    "OmegaReport",
    "verify_decay",
    "bracket_value",
    "blowup_functional",
    "fill_blowup_functional",
    "detect_blowup",
    "convexity_residuals",
    "dual_residual",
    "ground_state_solve",
    "omega_limit_check",
]


@dataclass
class DecayVerdict:
    monotone: bool
    fit_rate: float
    fit_r2: float
    bracket_ok: bool
    comparable_ok: bool
    comparable_C: float = float("nan")
    applicable: bool = True
    note: str = ""


def bracket_value(pairing, consts: WellConstants):
    """max{C*^{p+1} / (q-)^{(p+1)/q-}, 1} * pairing^{(p+1-q+)/q+}; must stay below 1 in the well."""
    qm, qp, p = consts.q_minus, consts.q_plus, consts.p
    lead = max(consts.C_star ** (p + 1) / qm ** ((p + 1) / qm), 1.0)
    return lead * np.asarray(pairing, dtype=float) ** ((p + 1 - qp) / qp)


def _pairing(r) -> float:
    pr = getattr(r, "pairing", float("nan"))
    return pr if math.isfinite(pr) else r.I + r.lp1


def verify_decay(trace, consts: WellConstants) -> DecayVerdict:
    t = np.array([r.t for r in trace])
    l2h = np.array([r.l2h for r in trace])
    pairing = np.array([_pairing(r) for r in trace])
    r0 = trace[0]
    applicable = (r0.J < consts.M_const and r0.I > 0) or (r0.l2h == 0)
    monotone = bool(np.all(np.diff(l2h) <= 0))
    if np.all(l2h == 0):
        rate, r2 = 0.0, 1.0
    else:
        half = len(trace) // 2
        tt, yy = t[half:], l2h[half:]
        pos = yy > 0
        if pos.sum() >= 3:
            fit = stats.linregress(tt[pos], np.log(yy[pos]))
            rate, r2 = float(fit.slope), float(fit.rvalue**2)
        else:
            rate, r2 = float("nan"), 0.0
    bracket_ok = bool(np.all(bracket_value(pairing, consts) < 1.0))
    # [u]^2_{s,2} <= C * pairing; l2h bounds the seminorm when the trace came from disk
    semi = np.array([getattr(r, "seminorm2", float("nan")) for r in trace])
    semi = np.where(np.isfinite(semi), semi, l2h)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(pairing > 0, semi / pairing, 0.0)
    C = float(np.max(ratio)) if ratio.size else float("nan")
    note = "" if applicable else "initial state is not in the sub-M well"
    return DecayVerdict(
        monotone=monotone,
        fit_rate=rate,
        fit_r2=r2,
        bracket_ok=bracket_ok,
        comparable_ok=bool(math.isfinite(C)),
        comparable_C=C,
        applicable=applicable,
        note=note,
    )


@dataclass
class BlowupVerdict:
    detected: bool
    t_blow_est: float
    theta: float
    xi_min: float
    I_always_negative: bool
    inconclusive: bool = False
    F: np.ndarray = field(default=None, repr=False)
    xi: np.ndarray = field(default=None, repr=False)


def blowup_functional(trace, T0: float | None = None) -> np.ndarray:
    """F(t) = int_0^t ||u||^2 + (T0 - t) ||u0||^2 by the trapezoid rule."""
    t = np.array([r.t for r in trace])
    l2h = np.array([r.l2h for r in trace])
    T0 = t[-1] if T0 is None else T0
    integral = np.concatenate([[0.0], np.cumsum(0.5 * (l2h[1:] + l2h[:-1]) * np.diff(t))])
    return integral + (T0 - t) * l2h[0]


def fill_blowup_functional(trace, T0: float | None = None):
    F = blowup_functional(trace, T0)
    for r, f in zip(trace, F):
        r.F = float(f)
    return trace


def detect_blowup(trace, params: ProblemParams, overflow: bool = False, T0: float | None = None,
                  threshold: float = 1e6) -> BlowupVerdict:
    p = params.p
    theta = (p - 1) / 4
    if theta <= 0:
        raise ValueError("p must exceed 1")
    I = np.array([r.I for r in trace])
    diss = np.array([r.diss for r in trace])
    xi = -2 * I - (p + 3) * diss
    neg = bool(np.all(I < 0))
    if len(trace) < 10:
        return BlowupVerdict(bool(overflow), float("nan"), theta, float(np.min(xi)), neg, inconclusive=True, xi=xi)
    l2h = np.array([r.l2h for r in trace])
    accel = len(l2h) >= 3 and l2h[-1] - l2h[-2] > l2h[-2] - l2h[-3] > 0
    detected = bool(overflow or (l2h.max() > threshold and accel))
    F = blowup_functional(trace, T0)
    t = np.array([r.t for r in trace])
    t_est = float("nan")
    if detected and np.all(F > 0):
        q = max(len(trace) // 4, 2)
        y = F[-q:] ** (-theta)
        fit = stats.linregress(t[-q:], y)
        if fit.slope < 0:
            t_est = float(-fit.intercept / fit.slope)
    return BlowupVerdict(detected, t_est, theta, float(np.min(xi)), neg, F=F, xi=xi)


def convexity_residuals(trace, T0: float | None = None) -> dict:
    """F'' + 2I (second differences) and max of (F')^2 / (4 F diss)."""
    t = np.array([r.t for r in trace])
    l2h = np.array([r.l2h for r in trace])
    I = np.array([r.I for r in trace])
    diss = np.array([r.diss for r in trace])
    F = blowup_functional(trace, T0)
    # F' = l2h - l2h(0) exactly; differentiate that once more
    dF = l2h - l2h[0]
    d2F = np.diff(dF) / np.diff(t)
    res = d2F + (I[1:] + I[:-1])
    scale = max(np.max(np.abs(I)), 1e-300)
    with np.errstate(divide="ignore", invalid="ignore"):
        cs = np.where(diss > 0, dF**2 / (4 * F * diss), 0.0)
    return {"F2": float(np.max(np.abs(res)) / (2 * scale)), "cauchy_schwarz": float(np.max(cs))}


def dual_residual(values, params: ProblemParams, table: KernelTable) -> float:
    """sqrt(h sum |J'(u)/h|^2); a grid surrogate for the dual norm."""
    h = table.domain.h
    r = _rhs(np.asarray(values, dtype=complex), params, table) / h
    return math.sqrt(h * float(np.sum(np.abs(r) ** 2)))


@dataclass
class GroundState:
    u_star: Field
    J_star: float
    dual_residual: float
    nehari_residual: float
    iterations: int = 0
    stagnated: bool = False


def ground_state_solve(params: ProblemParams, table: KernelTable, seed: Field, iters: int = 2000,
                       tol: float = 1e-6) -> GroundState:
    """Minimise J over the Nehari set by projected residual descent.

    Barzilai-Borwein step lengths with backtracking on J(P u), where P is the
    Nehari projection. Stops when the dual residual drops below
    ``tol * max(1, |J|)``.
    """
    table.check_field(seed)
    h = table.domain.h

    def project(v):
        lam = scale_to_nehari(v, params, table)
        w = lam * v
        return w, _report_from_values(w, params, table, with_norm=False).J

    u, J = project(seed.values.astype(complex))
    r = -_rhs(u, params, table) / h
    res = math.sqrt(h * float(np.sum(np.abs(r) ** 2)))
    alpha = 1.0 / max(np.max(np.abs(r)), 1.0)
    alpha = min(alpha, 1e-2)
    u_prev = r_prev = None
    best = (res, u, J)
    stagnated = False
    fails = 0
    history = [J]
    it = 0
    for it in range(1, iters + 1):
        if res < tol * max(1.0, abs(J)):
            break
        if u_prev is not None:
            s = u - u_prev
            y = r - r_prev
            sy = float(np.vdot(s, y).real)
            if sy > 0:
                alpha = float(np.vdot(s, s).real) / sy
        accepted = False
        a = alpha
        for _ in range(40):
            try:
                cand, Jc = project(u - a * r)
            except ProjectionUndefined:
                a *= 0.5
                continue
            # non-monotone Armijo test against the worst of the last 10 energies
            if Jc <= max(history[-10:]) - 1e-4 * a * h * float(np.sum(np.abs(r) ** 2)):
                accepted = True
                break
            a *= 0.5
        if not accepted:
            fails += 1
            if fails > 3:
                stagnated = True
                break
            u_prev = r_prev = None
            alpha = a
            continue
        fails = 0
        u_prev, r_prev = u, r
        u, J = cand, Jc
        history.append(J)
        r = -_rhs(u, params, table) / h
        res = math.sqrt(h * float(np.sum(np.abs(r) ** 2)))
        if res < best[0]:
            best = (res, u, J)
    res, u, J = best
    rep = _report_from_values(u, params, table, with_norm=False)
    return GroundState(
        u_star=Field(u, seed.domain),
        J_star=rep.J,
        dual_residual=res,
        nehari_residual=abs(rep.I),
        iterations=it,
        stagnated=stagnated or res >= tol * max(1.0, abs(J)),
    )


@dataclass
class OmegaReport:
    times: np.ndarray
    J: np.ndarray
    dual: np.ndarray
    dist_zero: np.ndarray
    dist_star: np.ndarray
    J_monotone: bool
    J_limit: float
    limit_in_range: bool
    dual_decreasing: bool
    selected: str


def _aligned(u, ref):
    z = np.vdot(ref, u)
    return ref * (z / abs(z)) if abs(z) > 0 else ref


def omega_limit_check(snapshots, ground: GroundState | None, params: ProblemParams, table: KernelTable,
                      rtol: float = 1e-12) -> OmegaReport | None:
    """Energy, dual residual and distances to {0, u*} along (t_k, values_k) snapshots.

    Distances are Luxemburg seminorms; u* is rotated by the best global phase.
    """
    if not snapshots:
        return None
    w2 = 2.0 * table.w
    ts, Js, duals, d0s, dss = [], [], [], [], []
    for t, vals in snapshots:
        vals = np.asarray(vals, dtype=complex)
        ts.append(t)
        Js.append(_report_from_values(vals, params, table, with_norm=False).J)
        duals.append(dual_residual(vals, params, table))
        ue = np.concatenate([vals, [0.0]])
        d0s.append(_seminorm(ue, table, params, w2))
        if ground is not None:
            ref = _aligned(vals, ground.u_star.values)
            de = np.concatenate([vals - ref, [0.0]])
            dss.append(_seminorm(de, table, params, w2))
        else:
            dss.append(float("nan"))
    Js = np.array(Js)
    duals = np.array(duals)
    scale = max(abs(Js[0]), 1.0)
    J_mono = bool(np.all(np.diff(Js) <= rtol * scale))
    J_lim = float(Js[-1])
    in_range = bool(-rtol * scale <= J_lim <= Js[0] + rtol * scale)
    dual_dec = bool(np.all(np.diff(duals) <= rtol * max(duals[0], 1e-300)))
    d0s, dss = np.array(d0s), np.array(dss)
    selected = "u_star" if ground is not None and dss[-1] < d0s[-1] else "0"
    return OmegaReport(np.array(ts), Js, duals, d0s, dss, J_mono, J_lim, in_range, dual_dec, selected)


def _seminorm(ue, table, params, w2):
    D = (ue[table.I] - table.phase * ue[table.J]) * table.rs
    return luxemburg_norm(np.abs(D), w2, params.G)
