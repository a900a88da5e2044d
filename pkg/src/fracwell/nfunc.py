"""N-functions, their conjugates, Luxemburg norms and the classical inequalities.

An N-function is represented by an object exposing ``G``, ``g`` and the
exponent bounds ``q_minus <= t g(t) / G(t) <= q_plus``. All evaluations are
vectorised over numpy arrays. The ``*_check`` predicates return numpy booleans
(element-wise when given arrays) so that randomized suites can count
violations without python loops.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import integrate, optimize, special

__all__ = [
    "DomainError",
    "InvalidNFunction",
    "HypothesisViolation",
    "NFunction",
    "Power",
    "PowerSum",
    "PowerLog",
    "Tabulated",
    "Complementary",
    "make_nfunction",
    "eval_G",
    "exponent_bounds",
    "power_comparison_check",
    "luxemburg_norm",
    "modular",
    "zeta_minus",
    "zeta_plus",
    "zeta_sandwich_check",
    "young_check",
    "conjugate_bound_check",
    "holder_orlicz_check",
    "sobolev_conjugate_inv",
    "sobolev_conjugate",
    "ess_stronger_check",
    "delta2_check",
    "h3_convexity_check",
]

SCAN_GRID = np.logspace(-6.0, 6.0, 10_000)


class DomainError(ValueError):
    pass


class InvalidNFunction(ValueError):
    pass


class HypothesisViolation(ValueError):
    pass


def _asarray(t):
    t = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(t)):
        raise DomainError("non-finite argument")
    if np.any(t < 0):
        raise DomainError("N-functions are evaluated on t >= 0")
    return t


def _invert_increasing(f, y, iters=110):
    """Solve f(t) = y for t >= 0 by geometric bisection, element-wise."""
    y = np.asarray(y, dtype=float)
    flat = np.atleast_1d(y).astype(float).ravel()
    out = np.zeros_like(flat)
    pos = flat > 0
    if np.any(pos):
        yy = flat[pos]
        lo = np.ones_like(yy)
        hi = np.ones_like(yy)
        for _ in range(2100):
            bad = f(lo) > yy
            if not bad.any():
                break
            lo[bad] *= 0.5
        for _ in range(2100):
            bad = f(hi) < yy
            if not bad.any():
                break
            hi[bad] *= 2.0
        for _ in range(iters):
            mid = np.sqrt(lo * hi)
            up = f(mid) < yy
            lo = np.where(up, mid, lo)
            hi = np.where(up, hi, mid)
        out[pos] = 0.5 * (lo + hi)
    return out.reshape(y.shape) if y.ndim else float(out[0])


class NFunction:
    """Base class. Subclasses implement ``G`` and ``g`` on arrays of t >= 0."""

    kind = "abstract"
    q_minus: float
    q_plus: float

    def G(self, t):
        raise NotImplementedError

    def g(self, t):
        raise NotImplementedError

    def dg(self, t, rel_step=1e-6):
        # central difference; only used by validation predicates
        t = np.asarray(t, dtype=float)
        h = rel_step * np.maximum(t, 1e-300)
        return (self.g(t + h) - self.g(t - h)) / (2 * h)

    def G_inv(self, y):
        return _invert_increasing(self.G, y)

    def g_inv(self, y):
        return _invert_increasing(self.g, y)

    def conjugate(self) -> "Complementary":
        return Complementary(self)

    def describe(self) -> str:
        return self.kind

    def __repr__(self):
        return f"<{type(self).__name__} {self.describe()} q-={self.q_minus:g} q+={self.q_plus:g}>"


class Power(NFunction):
    """G(t) = t**q."""

    kind = "power"

    def __init__(self, q: float):
        if not q > 1:
            raise InvalidNFunction(f"power exponent must exceed 1, got {q}")
        self.q = float(q)
        self.q_minus = self.q_plus = self.q

    def G(self, t):
        return np.power(t, self.q)

    def g(self, t):
        return self.q * np.power(t, self.q - 1.0)

    def dg(self, t, rel_step=None):
        return self.q * (self.q - 1.0) * np.power(t, self.q - 2.0)

    def G_inv(self, y):
        return np.power(y, 1.0 / self.q)

    def g_inv(self, y):
        return np.power(np.asarray(y, dtype=float) / self.q, 1.0 / (self.q - 1.0))

    def describe(self):
        return f"power(q={self.q:g})"


class PowerSum(NFunction):
    """G(t) = t**q1 + t**q2, optionally scaled so that G(1) = 1."""

    kind = "power_sum"

    def __init__(self, q1: float, q2: float, normalize: bool = False):
        q1, q2 = sorted((float(q1), float(q2)))
        if not q1 > 1:
            raise InvalidNFunction(f"exponents must exceed 1, got {q1}")
        self.q1, self.q2 = q1, q2
        self.scale = 0.5 if normalize else 1.0
        self.q_minus, self.q_plus = q1, q2

    def G(self, t):
        return self.scale * (np.power(t, self.q1) + np.power(t, self.q2))

    def g(self, t):
        return self.scale * (self.q1 * np.power(t, self.q1 - 1) + self.q2 * np.power(t, self.q2 - 1))

    def dg(self, t, rel_step=None):
        return self.scale * (
            self.q1 * (self.q1 - 1) * np.power(t, self.q1 - 2) + self.q2 * (self.q2 - 1) * np.power(t, self.q2 - 2)
        )

    def describe(self):
        return f"power_sum(q1={self.q1:g}, q2={self.q2:g})"


class PowerLog(NFunction):
    """G(t) = int_0^t [q s^(q-1) (|log s| + 1) + s^(q-1)/(1+s)] ds.

    Closed form: the log part integrates piecewise, the rational part is a
    Gauss hypergeometric function.
    """

    kind = "power_log"

    def __init__(self, q: float):
        if not q >= 2:
            # g is monotone only for q >= 2
            raise InvalidNFunction(f"power_log needs q >= 2, got {q}")
        self.q = float(q)
        lo, hi = _scan_ratio(self)
        self.q_minus, self.q_plus = lo, hi

    def _rational_part(self, t):
        q = self.q
        return np.power(t, q) / q * special.hyp2f1(1.0, q, q + 1.0, -t)

    def G(self, t):
        t = np.asarray(t, dtype=float)
        q = self.q
        with np.errstate(divide="ignore", invalid="ignore"):
            lt = np.log(np.where(t > 0, t, 1.0))
            tq = np.power(t, q)
            small = tq * (1.0 - lt) + tq / q
            large = tq * (1.0 + lt) - tq / q + 2.0 / q
        logpart = np.where(t <= 1.0, small, large)
        return np.where(t > 0, logpart + self._rational_part(t), 0.0)

    def g(self, t):
        t = np.asarray(t, dtype=float)
        q = self.q
        with np.errstate(divide="ignore", invalid="ignore"):
            lt = np.abs(np.log(np.where(t > 0, t, 1.0)))
            val = q * np.power(t, q - 1) * (lt + 1.0) + np.power(t, q - 1) / (1.0 + t)
        return np.where(t > 0, val, 0.0)

    def describe(self):
        return f"power_log(q={self.q:g})"


class Tabulated(NFunction):
    """g given on a grid, linear in between, power-law tails; G integrates it exactly."""

    kind = "custom"

    def __init__(self, t_grid, g_values):
        t = np.asarray(t_grid, dtype=float)
        gv = np.asarray(g_values, dtype=float)
        if t.ndim != 1 or t.shape != gv.shape or t.size < 3:
            raise InvalidNFunction("need matching 1-D grids with at least 3 points")
        if np.any(t <= 0) or np.any(np.diff(t) <= 0):
            raise InvalidNFunction("t grid must be positive and strictly increasing")
        if np.any(gv <= 0) or np.any(np.diff(gv) < 0):
            raise InvalidNFunction("g must be positive and nondecreasing on the grid")
        self.t = t
        self.gv = gv
        self.a0 = math.log(gv[1] / gv[0]) / math.log(t[1] / t[0])
        self.a1 = math.log(gv[-1] / gv[-2]) / math.log(t[-1] / t[-2])
        if self.a0 <= 0:
            raise InvalidNFunction("g must vanish at 0 (positive leading exponent)")
        G0 = t[0] * gv[0] / (self.a0 + 1.0)
        self.Gnodes = G0 + np.concatenate([[0.0], np.cumsum(0.5 * (gv[1:] + gv[:-1]) * np.diff(t))])
        lo, hi = _scan_ratio(self)
        self.q_minus, self.q_plus = lo, hi

    def g(self, t):
        t = np.asarray(t, dtype=float)
        inner = np.interp(t, self.t, self.gv)
        with np.errstate(divide="ignore", invalid="ignore"):
            below = self.gv[0] * np.power(t / self.t[0], self.a0)
            above = self.gv[-1] * np.power(t / self.t[-1], self.a1)
        return np.where(t < self.t[0], below, np.where(t > self.t[-1], above, inner))

    def G(self, t):
        t = np.asarray(t, dtype=float)
        tt = np.clip(t, self.t[0], self.t[-1])
        k = np.clip(np.searchsorted(self.t, tt, side="right") - 1, 0, self.t.size - 2)
        gk = self.gv[k]
        gt = np.interp(tt, self.t, self.gv)
        inner = self.Gnodes[k] + 0.5 * (gk + gt) * (tt - self.t[k])
        with np.errstate(divide="ignore", invalid="ignore"):
            below = self.Gnodes[0] * np.power(t / self.t[0], self.a0 + 1.0)
            a1 = self.a1 + 1.0
            above = self.Gnodes[-1] + self.gv[-1] * self.t[-1] / a1 * (np.power(t / self.t[-1], a1) - 1.0)
        return np.where(t < self.t[0], below, np.where(t > self.t[-1], above, inner))

    def describe(self):
        return f"custom({self.t.size} nodes)"


class Complementary(NFunction):
    """G~(s) = sup_t (s t - G(t)) = s g^-1(s) - G(g^-1(s))."""

    kind = "complementary"

    def __init__(self, base: NFunction):
        self.base = base
        # conjugate exponents swap the roles of the bounds
        self.q_minus = base.q_plus / (base.q_plus - 1.0)
        self.q_plus = base.q_minus / (base.q_minus - 1.0)

    def g(self, s):
        return self.base.g_inv(s)

    def g_inv(self, t):
        return self.base.g(t)

    def G(self, s):
        s = np.asarray(s, dtype=float)
        if isinstance(self.base, Power):
            q = self.base.q
            return (q - 1.0) * np.power(s / q, q / (q - 1.0))
        t = self.base.g_inv(s)
        return s * t - self.base.G(t)

    def describe(self):
        return f"conjugate of {self.base.describe()}"


def _scan_ratio(spec: NFunction, grid=SCAN_GRID):
    def ratio(t):
        return t * spec.g(t) / spec.G(t)

    r = ratio(grid)
    out = []
    for k, sign in ((int(np.argmin(r)), 1.0), (int(np.argmax(r)), -1.0)):
        best = float(r[k])
        # the grid misses interior extrema by O(spacing^2); polish in log t
        if 0 < k < grid.size - 1:
            res = optimize.minimize_scalar(
                lambda lt: sign * float(ratio(np.exp(lt))),
                bounds=(math.log(grid[k - 1]), math.log(grid[k + 1])),
                method="bounded", options={"xatol": 1e-12},
            )
            best = min(best, sign * res.fun) if sign > 0 else max(best, -res.fun)
        out.append(best)
    return out[0], out[1]


def make_nfunction(kind: str, **params) -> NFunction:
    """Factory used by the config layer."""
    if kind == "power":
        return Power(params["q"])
    if kind == "power_sum":
        return PowerSum(params["q1"], params["q2"], normalize=bool(params.get("normalize", False)))
    if kind == "power_log":
        return PowerLog(params["q"])
    if kind == "custom":
        return Tabulated(params["t"], params["g"])
    raise InvalidNFunction(f"unknown g.kind {kind!r}")


def eval_G(spec: NFunction, t):
    return spec.G(_asarray(t))


def exponent_bounds(spec: NFunction, grid=SCAN_GRID):
    """Scanned (inf, sup) of t g(t) / G(t) over ``grid``."""
    lo, hi = _scan_ratio(spec, grid)
    if not (lo > 1.0):
        raise InvalidNFunction(f"lower exponent bound {lo:g} does not exceed 1")
    return lo, hi


def zeta_minus(t, spec):
    t = np.asarray(t, dtype=float)
    return np.minimum(np.power(t, spec.q_minus), np.power(t, spec.q_plus))


def zeta_plus(t, spec):
    t = np.asarray(t, dtype=float)
    return np.maximum(np.power(t, spec.q_minus), np.power(t, spec.q_plus))


def power_comparison_check(spec: NFunction, a, b, rtol=1e-12):
    """Both power-comparison sandwiches, for G (exponents q-, q+) and g (q- - 1, q+ - 1)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    lo_G = np.minimum(a**spec.q_minus, a**spec.q_plus) * spec.G(b)
    hi_G = np.maximum(a**spec.q_minus, a**spec.q_plus) * spec.G(b)
    lo_g = np.minimum(a ** (spec.q_minus - 1), a ** (spec.q_plus - 1)) * spec.g(b)
    hi_g = np.maximum(a ** (spec.q_minus - 1), a ** (spec.q_plus - 1)) * spec.g(b)
    Gab, gab = spec.G(a * b), spec.g(a * b)
    ok_G = (lo_G <= Gab * (1 + rtol)) & (Gab <= hi_G * (1 + rtol))
    ok_g = (lo_g <= gab * (1 + rtol)) & (gab <= hi_g * (1 + rtol))
    return ok_G & ok_g


def modular(values, weights, spec: NFunction, scale: float = 1.0) -> float:
    """sum_i w_i G(|v_i| / scale)."""
    return float(np.dot(weights, spec.G(np.abs(values) / scale)))


def luxemburg_norm(values, weights, spec: NFunction, rtol: float = 1e-12) -> float:
    """inf{lam > 0 : sum_i w_i G(|v_i|/lam) <= 1} by bisection on log(lam)."""
    v = np.abs(np.asarray(values))
    w = np.asarray(weights, dtype=float)
    if np.any(~np.isfinite(v)) or np.any(~np.isfinite(w)):
        raise DomainError("non-finite sample")
    if np.any(w < 0):
        raise DomainError("negative weight")
    keep = (v > 0) & (w > 0)
    if not keep.any():
        return 0.0
    v, w = v[keep], w[keep]
    mass = float(w.sum())
    vmax = float(v.max())
    lam0 = vmax / float(spec.G_inv(1.0 / mass))

    def phi(lam):
        return float(np.dot(w, spec.G(v / lam)))

    lo, hi = lam0 * 1e-3, lam0 * 1e3
    while phi(lo) <= 1.0:
        lo *= 1e-3
    while phi(hi) > 1.0:
        hi *= 1e3
    # phi decreasing in lam: phi(lo) > 1 >= phi(hi)
    while hi / lo - 1.0 > rtol:
        mid = math.sqrt(lo * hi)
        if phi(mid) > 1.0:
            lo = mid
        else:
            hi = mid
    return hi


def zeta_sandwich_check(modular_value, norm, spec: NFunction, rtol=1e-9):
    m = np.asarray(modular_value, dtype=float)
    return (zeta_minus(norm, spec) * (1 - rtol) <= m) & (m <= zeta_plus(norm, spec) * (1 + rtol))


def young_check(spec: NFunction, a, t, rtol=1e-10):
    """a t <= G(t) + G~(a)."""
    a = np.asarray(a, dtype=float)
    t = np.asarray(t, dtype=float)
    conj = spec.conjugate()
    rhs = spec.G(t) + conj.G(a)
    return a * t <= rhs * (1 + rtol) + 1e-300


def conjugate_bound_check(spec: NFunction, t, rtol=1e-10):
    """G~(g(t)) <= (q+ - 1) G(t)."""
    t = np.asarray(t, dtype=float)
    lhs = spec.conjugate().G(spec.g(t))
    return lhs <= (spec.q_plus - 1.0) * spec.G(t) * (1 + rtol)


def holder_orlicz_check(M_samples, F_samples, weights, spec: NFunction, rtol=1e-9) -> bool:
    """int M F dmu <= 2 ||M||_G ||F||_G~ on a weighted sample set."""
    M = np.asarray(M_samples, dtype=float)
    F = np.asarray(F_samples, dtype=float)
    lhs = float(np.dot(weights, M * F))
    nM = luxemburg_norm(M, weights, spec)
    nF = luxemburg_norm(F, weights, spec.conjugate())
    return lhs <= 2.0 * nM * nF * (1 + rtol) + 1e-300


def _small_t_exponent(spec: NFunction) -> float:
    t = np.array([1e-12])
    return float((t * spec.g(t) / spec.G(t))[0])


def sobolev_conjugate_inv(spec: NFunction, t: float, s: float, N: int = 1) -> float:
    """(G*)^{-1}(t) = int_0^t G^{-1}(w) / w^((N+s)/N) dw."""
    if t < 0:
        raise DomainError("t must be >= 0")
    # near 0, G^{-1}(w) ~ w^(1/q0); integrable iff 1/q0 > s/N
    q0 = _small_t_exponent(spec)
    if not (1.0 / q0 > s / N):
        raise HypothesisViolation(
            f"G^-1(w) w^-(N+s)/N is not integrable at 0 (s*q={s * q0:g} >= N={N})"
        )
    if t == 0:
        return 0.0

    # power-law tail below w0, quadrature in log w above it
    w0 = min(1e-10, t)
    alpha = 1.0 / q0
    val = float(spec.G_inv(w0)) * w0 ** (-s / N) / (alpha - s / N)
    if t > w0:

        def integrand(y):
            w = math.exp(y)
            return float(spec.G_inv(w)) * w ** (-s / N)

        part, _ = integrate.quad(integrand, math.log(w0), math.log(t), epsabs=0.0, epsrel=1e-12, limit=400)
        val += part
    return val


def sobolev_conjugate(spec: NFunction, s: float, N: int = 1):
    """Return a callable evaluating G*(x), the inverse of ``sobolev_conjugate_inv``."""
    if isinstance(spec, Power):
        beta = 1.0 / spec.q - s / N
        if beta <= 0:
            raise HypothesisViolation("s q >= N")
        return lambda x: np.power(beta * np.asarray(x, dtype=float), 1.0 / beta)

    from scipy.optimize import brentq

    def G_star(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty_like(x)
        for k, xv in enumerate(x):
            if xv == 0:
                out[k] = 0.0
                continue
            f = lambda lt: sobolev_conjugate_inv(spec, math.exp(lt), s, N) - xv  # noqa: E731
            a, b = -5.0, 5.0
            while f(a) > 0:
                a -= 10.0
            while f(b) < 0:
                b += 10.0
            out[k] = math.exp(brentq(f, a, b, xtol=1e-12))
        return out

    return G_star


def _as_callable(f):
    return f.G if isinstance(f, NFunction) else f


def ess_stronger_check(A, B, k: float, t_max: float = 1e8, n: int = 60) -> bool:
    """Heuristic test that A(k t) / B(t) -> 0 as t -> infinity.

    True when the sampled ratio is nonincreasing over the upper half of a
    geometric grid and ends at least three decades below its peak.
    """
    A, B = _as_callable(A), _as_callable(B)
    t = np.logspace(0.0, math.log10(t_max), n)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        r = np.asarray(A(k * t), dtype=float) / np.asarray(B(t), dtype=float)
    if not np.all(np.isfinite(r)):
        return False
    tail = r[n // 2:]
    decreasing = bool(np.all(np.diff(tail) <= 1e-12 * np.abs(tail[:-1])))
    return decreasing and r[-1] <= 1e-3 * r.max()


def delta2_check(spec: NFunction, grid=SCAN_GRID, rtol=1e-10) -> bool:
    """G(2t) <= 2**q+ G(t) on the grid."""
    return bool(np.all(spec.G(2 * grid) <= 2.0**spec.q_plus * spec.G(grid) * (1 + rtol)))


def h3_convexity_check(spec: NFunction, grid=None, tol=1e-9) -> bool:
    """Second differences of t -> G(sqrt t) are nonnegative on a log grid."""
    if grid is None:
        grid = np.logspace(-4, 4, 2001)
    f = spec.G(np.sqrt(grid))
    # nonuniform second divided differences
    x0, x1, x2 = grid[:-2], grid[1:-1], grid[2:]
    d1 = (f[1:-1] - f[:-2]) / (x1 - x0)
    d2 = (f[2:] - f[1:-1]) / (x2 - x1)
    return bool(np.all(d2 - d1 >= -tol * np.maximum(np.abs(d1), np.abs(d2))))
