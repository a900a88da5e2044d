"""Energy J, Nehari functional I, the potential-well landscape and its estimators.

All integrals over Q are realised through a :class:`~fracwell.grid.KernelTable`
(factor 2 for ordered pairs); integrals over the domain are nodal Riemann sums.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import _kernels
from .grid import ConfigError, Domain1D, Field, KernelTable, MagneticField, build_kernel
from .nfunc import NFunction, luxemburg_norm

__all__ = [
    "ProblemParams",
    "ProjectionUndefined",
    "EnergyReport",
    "WellConstants",
    "energy_report",
    "modular_A",
    "seminorm_A",
    "nehari_project",
    "scale_to_nehari",
    "trial_fields",
    "embedding_ratio",
    "estimate_C_star",
    "h_of_delta",
    "well_constants",
    "estimate_lambda_alpha",
    "classify",
    "invariance_audit",
    "nonlinear_lipschitz_check",
    "monotone_operator_check",
]


class ProjectionUndefined(ValueError):
    pass


@dataclass(frozen=True)
class ProblemParams:
    """One instance of the evolution problem: order s, power p, grid, field A, N-function G."""

    s: float
    p: float
    domain: Domain1D
    G: NFunction
    magnetic: MagneticField = field(default_factory=MagneticField)

    def __post_init__(self):
        if not 0 < self.s < 1:
            raise ConfigError("s must lie in (0, 1)")
        if not self.p > 1:
            raise ConfigError("p must exceed 1")

    def kernel(self) -> KernelTable:
        return build_kernel(self.domain, self.s, self.magnetic)

    @property
    def q_minus(self) -> float:
        return self.G.q_minus

    @property
    def q_plus(self) -> float:
        return self.G.q_plus


@dataclass(frozen=True)
class EnergyReport:
    rho_A: float
    J: float
    I: float
    pairing: float
    lp1: float
    l2h: float
    seminorm_A: float
    l2: float = 0.0
    seminorm2: float = 0.0


def _abs_quotients(values, table: KernelTable) -> np.ndarray:
    ue = np.concatenate([np.asarray(values, dtype=complex), [0.0]])
    return np.abs(_kernels.pair_quotients(ue, table.I, table.J, table.phase, table.rs))


def modular_A(u: Field, params: ProblemParams, table: KernelTable) -> float:
    table.check_field(u)
    a = _abs_quotients(u.values, table)
    return 2.0 * _kernels.weighted_sum(table.w, params.G.G(a))


def seminorm_A(u: Field, params: ProblemParams, table: KernelTable) -> float:
    """Luxemburg seminorm of D_s^A u in L^G(Q, mu)."""
    table.check_field(u)
    return luxemburg_norm(_abs_quotients(u.values, table), 2.0 * table.w, params.G)


def _report_from_values(values, params: ProblemParams, table: KernelTable, with_norm=True) -> EnergyReport:
    G = params.G
    h = table.domain.h
    values = np.asarray(values, dtype=complex)
    a = _abs_quotients(values, table)
    w2 = 2.0 * table.w
    rho = _kernels.weighted_sum(w2, G.G(a))
    pairing = _kernels.weighted_sum(w2, G.g(a) * a)
    absu = np.abs(values)
    lp1 = h * float(np.sum(absu ** (params.p + 1)))
    l2 = h * float(np.sum(absu**2))
    ue = np.concatenate([values, [0.0]])
    plain = np.abs(ue[table.I] - ue[table.J]) ** 2 * table.rs2
    semi2 = _kernels.weighted_sum(w2, plain)
    sem = luxemburg_norm(a, w2, G) if with_norm else float("nan")
    return EnergyReport(
        rho_A=rho,
        J=rho - lp1 / (params.p + 1),
        I=pairing - lp1,
        pairing=pairing,
        lp1=lp1,
        l2h=l2 + semi2,
        seminorm_A=sem,
        l2=l2,
        seminorm2=semi2,
    )


def energy_report(u: Field, params: ProblemParams, table: KernelTable, with_norm: bool = True) -> EnergyReport:
    table.check_field(u)
    return _report_from_values(u.values, params, table, with_norm=with_norm)


def _pairing_scaled(a, w2, G: NFunction, lam: float) -> float:
    la = lam * a
    return float(np.dot(w2, G.g(la) * la))


def scale_to_nehari(values, params: ProblemParams, table: KernelTable, delta: float = 1.0):
    """Return lam > 0 with delta * pairing(lam u) = ||lam u||_{p+1}^{p+1}.

    Works on the pair magnitudes once, so each bracketing step is a single
    weighted sum.
    """
    values = np.asarray(values, dtype=complex)
    a = _abs_quotients(values, table)
    w2 = 2.0 * table.w
    lp1 = table.domain.h * float(np.sum(np.abs(values) ** (params.p + 1)))
    if not lp1 > 0:
        raise ProjectionUndefined("zero nonlinear mass")
    if not np.any(a > 0):
        raise ProjectionUndefined("zero modular")
    p1 = params.p + 1
    G = params.G

    def f(log_lam):
        lam = math.exp(log_lam)
        # I_delta(lam u) / lam^{p+1}: same sign, better scaled
        return delta * _pairing_scaled(a, w2, G, lam) / lam**p1 - lp1

    lo, hi = 0.0, 0.0
    while f(lo) <= 0:
        lo -= 2.0
        if lo < -700:
            raise ProjectionUndefined("no positive branch for small scales")
    while f(hi) >= 0:
        hi += 2.0
        if hi > 700:
            raise ProjectionUndefined("no negative branch for large scales")
    if lo == hi:  # pragma: no cover - f(0) cannot be both > 0 and < 0
        return 1.0
    if lo == 0.0:
        lo = hi - 2.0 if f(hi - 2.0) > 0 else lo
    if hi == 0.0:
        hi = lo + 2.0 if f(lo + 2.0) < 0 else hi
    log_lam = brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    return math.exp(log_lam)


def nehari_project(u: Field, params: ProblemParams, table: KernelTable):
    """(lam*, J(lam* u)) with I(lam* u) = 0."""
    table.check_field(u)
    lam = scale_to_nehari(u.values, params, table)
    rep = _report_from_values(lam * u.values, params, table, with_norm=False)
    return lam, rep.J


def trial_fields(domain: Domain1D, n: int, rng: np.random.Generator, complex_phase: bool = True) -> list[np.ndarray]:
    """Gaussian bumps x random low-order polynomials x random phases, log-uniform amplitude."""
    x = domain.x_interior
    L = domain.b - domain.a
    mid = 0.5 * (domain.a + domain.b)
    out = []
    for _ in range(n):
        c = mid + 0.3 * L * rng.uniform(-1, 1)
        width = L * rng.uniform(0.08, 0.4)
        y = (x - c) / width
        coeffs = rng.normal(size=rng.integers(1, 4))
        poly = 1.0 + sum(cf * y ** (k + 1) * 0.5 for k, cf in enumerate(coeffs))
        amp = math.exp(rng.uniform(math.log(0.05), math.log(20.0)))
        v = amp * np.exp(-0.5 * y * y) * poly
        if complex_phase:
            v = v * np.exp(1j * (rng.uniform(0, 2 * np.pi) + rng.normal() * y))
        out.append(np.asarray(v, dtype=complex))
    return out


def embedding_ratio(values, params: ProblemParams, table: KernelTable) -> float:
    """||u||_{p+1} / [u]^A_{s,G}; scale invariant."""
    values = np.asarray(values, dtype=complex)
    a = _abs_quotients(values, table)
    sem = luxemburg_norm(a, 2.0 * table.w, params.G)
    lp1 = table.domain.h * float(np.sum(np.abs(values) ** (params.p + 1)))
    if sem == 0:
        return 0.0
    return lp1 ** (1.0 / (params.p + 1)) / sem


def _smooth_perturbation(domain: Domain1D, rng):
    x = domain.x_interior
    L = domain.b - domain.a
    c = domain.a + L * rng.uniform(0, 1)
    width = L * rng.uniform(0.05, 0.3)
    return (rng.normal() + 1j * rng.normal()) * np.exp(-0.5 * ((x - c) / width) ** 2)


def _c_star_search(params, table, trials, rng, climb_steps=None):
    if trials < 1:
        raise ValueError("need at least one trial")
    cands = trial_fields(table.domain, trials, rng)
    ratios = np.array([embedding_ratio(v, params, table) for v in cands])
    order = np.argsort(ratios)[::-1]
    best_val, best = float(ratios[order[0]]), cands[order[0]]
    if climb_steps is None:
        climb_steps = 4 * trials
    starts = [cands[k] for k in order[: min(3, trials)]]
    per_start = max(1, climb_steps // len(starts))
    for u in starts:
        cur = u / np.max(np.abs(u))
        cur_val = embedding_ratio(cur, params, table)
        sigma = 0.2
        for _ in range(per_start):
            prop = cur + sigma * _smooth_perturbation(table.domain, rng)
            val = embedding_ratio(prop, params, table)
            if val > cur_val:
                cur, cur_val = prop / np.max(np.abs(prop)), val
                sigma = min(sigma * 1.3, 1.0)
            else:
                sigma = max(sigma * 0.8, 1e-3)
        if cur_val > best_val:
            best_val, best = cur_val, cur
    return best_val, best


def estimate_C_star(params: ProblemParams, table: KernelTable, trials: int = 50, rng=None, climb_steps=None) -> float:
    """Largest ||u||_{p+1} / [u]^A found over random trials plus hill climbing.

    A lower bound on the true embedding constant.
    """
    rng = np.random.default_rng(rng)
    return _c_star_search(params, table, trials, rng, climb_steps)[0]


def h_of_delta(delta, C_star: float, q_minus: float, q_plus: float, p: float):
    delta = np.asarray(delta, dtype=float)
    base = q_minus ** ((p + 1) / q_minus) * delta / C_star ** (p + 1)
    return np.minimum(base ** (q_minus / (p + 1 - q_minus)), base ** (q_plus / (p + 1 - q_plus)))


@dataclass
class WellConstants:
    C_star: float
    q_minus: float
    q_plus: float
    p: float
    M_const: float
    d_est: float
    delta_grid: np.ndarray
    d_curve: np.ndarray
    d0: float
    b_root: float | None
    nehari_J: np.ndarray = field(repr=False)
    nehari_l2h: np.ndarray = field(repr=False)
    best_field: np.ndarray | None = field(default=None, repr=False)

    def h(self, delta):
        return h_of_delta(delta, self.C_star, self.q_minus, self.q_plus, self.p)

    def lambda_alpha(self, alpha: float) -> float | None:
        ok = self.nehari_J <= alpha
        if not ok.any():
            return None
        return float(np.min(self.nehari_l2h[ok]))

    @property
    def decay_threshold(self) -> float:
        """q+ (p+1) / (p+1-q+): the factor linking J(u0) to the pairing bound."""
        return self.q_plus * (self.p + 1) / (self.p + 1 - self.q_plus)

    def d_at(self, delta: float) -> float:
        return float(np.interp(delta, self.delta_grid, self.d_curve))

    def summary(self) -> dict:
        return {
            "C_star": self.C_star,
            "h1": float(self.h(1.0)),
            "M": self.M_const,
            "d_est": self.d_est,
            "d0": self.d0,
            "b_root": self.b_root if self.b_root is not None else float("nan"),
        }


def _J_on_scaled(values, params, table, delta):
    lam = scale_to_nehari(values, params, table, delta)
    return _report_from_values(lam * values, params, table, with_norm=False).J


def default_delta_grid(p: float, q_minus: float, n: int = 64) -> np.ndarray:
    end = (p + 1) / q_minus
    grid = np.logspace(math.log10(0.01), math.log10(end), n)
    return np.unique(np.concatenate([grid, [1.0]]))


def well_constants(
    params: ProblemParams,
    table: KernelTable,
    trials: int = 64,
    rng=None,
    cstar_trials: int = 64,
    curve_candidates: int = 8,
    delta_grid=None,
) -> WellConstants:
    """Estimate C*, h, M, d, d(delta), d0, b and the lambda_alpha sample set."""
    rng = np.random.default_rng(rng)
    c_best, best_field = _c_star_search(params, table, cstar_trials, rng)
    samples = trial_fields(table.domain, trials, rng) + [best_field]
    Js, l2hs, ratios, kept = [], [], [], []
    for v in samples:
        try:
            lam = scale_to_nehari(v, params, table)
        except ProjectionUndefined:
            continue
        rep = _report_from_values(lam * v, params, table, with_norm=True)
        Js.append(rep.J)
        l2hs.append(rep.l2h)
        ratios.append(rep.lp1 ** (1.0 / (params.p + 1)) / rep.seminorm_A)
        kept.append(v)
    Js = np.asarray(Js)
    l2hs = np.asarray(l2hs)
    # every Nehari sample must satisfy ||u||_{p+1} <= C* [u]^A
    C_star = max(c_best, float(np.max(ratios)))
    qm, qp, p = params.q_minus, params.q_plus, params.p
    h1 = float(h_of_delta(1.0, C_star, qm, qp, p))
    M_const = (1.0 / qp - 1.0 / (p + 1)) * min(h1, 1.0)
    d_est = float(np.min(Js))

    grid = default_delta_grid(p, qm) if delta_grid is None else np.asarray(delta_grid, dtype=float)
    cand = [kept[k] for k in np.argsort(Js)[:curve_candidates]]

    def d_of(delta):
        return min(_J_on_scaled(v, params, table, delta) for v in cand)

    curve = np.array([d_of(dl) for dl in grid])
    # d0: linear extrapolation of the two smallest-delta samples to 0, clipped at 0
    d0 = curve[0] - grid[0] * (curve[1] - curve[0]) / (grid[1] - grid[0])
    d0 = float(max(d0, 0.0))

    b_root = None
    right = grid > 1.0
    scale = max(abs(d_est), 1e-300)
    gr, cr = grid[right], curve[right]
    if gr.size and abs(cr[-1]) <= 1e-10 * scale:
        b_root = float(gr[-1])
    else:
        sign_change = np.nonzero((cr[:-1] > 0) & (cr[1:] <= 0))[0]
        if sign_change.size:
            k = sign_change[0]
            b_root = float(brentq(d_of, gr[k], gr[k + 1], xtol=1e-12))
    return WellConstants(
        C_star=C_star,
        q_minus=qm,
        q_plus=qp,
        p=p,
        M_const=M_const,
        d_est=d_est,
        delta_grid=grid,
        d_curve=curve,
        d0=d0,
        b_root=b_root,
        nehari_J=Js,
        nehari_l2h=l2hs,
        best_field=best_field,
    )


def estimate_lambda_alpha(alpha: float, params: ProblemParams, table: KernelTable, trials: int = 64, rng=None):
    """min ||u||^2_{s,2,0} over Nehari-projected trials with J <= alpha; None when no trial qualifies."""
    rng = np.random.default_rng(rng)
    best = None
    for v in trial_fields(table.domain, trials, rng):
        try:
            lam = scale_to_nehari(v, params, table)
        except ProjectionUndefined:
            continue
        rep = _report_from_values(lam * v, params, table, with_norm=False)
        if rep.J <= alpha and (best is None or rep.l2h < best):
            best = rep.l2h
    return best


W, V, NEHARI, HIGH_STABLE, HIGH_UNKNOWN = "W", "V", "Nehari-boundary", "HighEnergy-stable", "HighEnergy-unknown"


def classify(u0: Field | None, consts: WellConstants, report: EnergyReport, tol: float = 1e-8) -> str:
    if u0 is not None and not np.any(u0.values):
        return W
    if report.pairing == 0 and report.lp1 == 0:
        return W
    on_nehari = abs(report.I) <= tol * max(report.pairing, report.lp1)
    if report.J < consts.d_est:
        if on_nehari:
            return NEHARI
        return W if report.I > 0 else V
    if report.J > consts.d_est and report.I > 0 and not on_nehari:
        lam = consts.lambda_alpha(report.J)
        if lam is not None and report.l2h <= lam:
            return HIGH_STABLE
    return HIGH_UNKNOWN


def _crossings(x, y, level):
    """All x where the piecewise-linear curve y(x) crosses ``level``."""
    out = []
    for k in range(len(x) - 1):
        y0, y1 = y[k] - level, y[k + 1] - level
        if y0 == 0:
            out.append(float(x[k]))
        elif y0 * y1 < 0:
            out.append(float(x[k] - y0 * (x[k + 1] - x[k]) / (y1 - y0)))
    return out


def delta_window(J0: float, consts: WellConstants):
    """Open delta interval on which the sign of I_delta is invariant along a trajectory.

    None when J0 >= d_est (audit not applicable).
    """
    if J0 >= consts.d_est:
        return None
    if J0 <= 0:
        # J < 0 forces I_delta < 0 for every delta up to (p+1)/q+
        return (0.0, (consts.p + 1) / consts.q_plus)
    # the curve starts from (0, d0)
    x = np.concatenate([[0.0], consts.delta_grid])
    y = np.concatenate([[consts.d0], consts.d_curve])
    left = _crossings(x[x <= 1.0], y[x <= 1.0], J0)
    right = _crossings(x[x >= 1.0], y[x >= 1.0], J0)
    d2 = right[0] if right else float(x[-1])
    if J0 <= consts.d0 or not left:
        return (1.0, d2)
    return (left[-1], d2)


def invariance_audit(trace, consts: WellConstants, delta_grid) -> dict:
    """Sign history of I_delta(u(t)) for every delta inside the invariance window.

    ``trace`` is a sequence of records with ``J``, ``I`` and ``lp1``.
    """
    J0 = trace[0].J
    window = delta_window(J0, consts)
    if window is None:
        return {"skipped": True, "reason": f"J(u0)={J0:.6g} >= d_est={consts.d_est:.6g}", "signs": {}}
    lo, hi = window
    I = np.array([r.I for r in trace])
    lp1 = np.array([r.lp1 for r in trace])
    pairing = I + lp1
    signs = {}
    for dl in np.asarray(delta_grid, dtype=float):
        if not lo < dl < hi:
            continue
        s = np.sign(dl * pairing - lp1)
        if np.all(s > 0):
            signs[float(dl)] = 1
        elif np.all(s < 0):
            signs[float(dl)] = -1
        else:
            signs[float(dl)] = 0
    return {"skipped": False, "window": window, "signs": signs}


def nonlinear_lipschitz_check(u1, u2, p: float, rtol: float = 1e-12):
    """| |u1|^{p-1}u1 - |u2|^{p-1}u2 | <= p (|u1|+|u2|)^{p-1} |u1-u2|, element-wise."""
    u1 = np.asarray(u1, dtype=complex)
    u2 = np.asarray(u2, dtype=complex)
    lhs = np.abs(np.abs(u1) ** (p - 1) * u1 - np.abs(u2) ** (p - 1) * u2)
    rhs = p * (np.abs(u1) + np.abs(u2)) ** (p - 1) * np.abs(u1 - u2)
    return lhs <= rhs * (1 + rtol) + 1e-300


def _flux(z, G: NFunction):
    z = np.asarray(z, dtype=complex)
    r = np.abs(z)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(r > 0, G.g(r) / np.where(r > 0, r, 1.0) * z, 0.0)
    return out


def monotone_operator_check(a, b, spec: NFunction):
    """lhs = Re[(g(|a|)a/|a| - g(|b|)b/|b|) conj(a-b)] and G(|a-b|), element-wise."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    lhs = np.real((_flux(a, spec) - _flux(b, spec)) * np.conj(a - b))
    return lhs, spec.G(np.abs(a - b))
