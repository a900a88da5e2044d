from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import integrate, optimize

from fracwell import nfunc
from fracwell.nfunc import Complementary, Power, PowerLog, PowerSum, Tabulated


def test_power_values():
    assert Power(2).G(3.0) == 9.0
    assert Power(3.7).G(1.0) == 1.0
    for spec in (Power(2), PowerSum(2, 4), PowerLog(3), Tabulated([0.5, 1, 2], [0.5, 1.5, 5])):
        assert spec.G(0.0) == 0.0


def test_exponent_bounds_scan():
    assert nfunc.exponent_bounds(Power(3)) == pytest.approx((3, 3))
    lo, hi = nfunc.exponent_bounds(PowerSum(2, 4))
    # brute-force ratio on an independent grid
    t = np.logspace(-6, 6, 2001)
    r = t * (2 * t + 4 * t**3) / (t**2 + t**4)
    assert lo == pytest.approx(r.min(), rel=1e-6) and hi == pytest.approx(r.max(), rel=1e-6)


def test_powerlog_bounds_bracket_q():
    lo, hi = nfunc.exponent_bounds(PowerLog(3))
    assert 2 < lo < 3 < hi < 4


def test_powerlog_G_matches_quadrature():
    spec = PowerLog(3)
    for t in (0.3, 1.0, 4.0):
        ref, _ = integrate.quad(lambda x: float(spec.g(x)), 0, t, epsrel=1e-12)
        assert float(spec.G(t)) == pytest.approx(ref, rel=1e-9)


def test_exponent_bounds_rejects_linear_growth():
    with pytest.raises(nfunc.InvalidNFunction):
        Power(1.0)


def test_power_comparison_examples(rng):
    assert nfunc.power_comparison_check(Power(2), 0.5, 1.0)
    spec = PowerSum(2, 4)
    a, b = np.exp(rng.uniform(-3, 3, 100)), np.exp(rng.uniform(-3, 3, 100))
    assert nfunc.power_comparison_check(spec, a, b).all()
    assert nfunc.power_comparison_check(spec, 1.0, b).all()


def test_luxemburg_single_cell_and_zero():
    assert nfunc.luxemburg_norm([5.0], [1.0], Power(2)) == pytest.approx(5.0, rel=1e-12)
    assert nfunc.luxemburg_norm(np.zeros(4), np.ones(4), Power(2)) == 0.0


def test_luxemburg_substitution(rng):
    spec = Power(3)
    v, w = rng.normal(size=30), rng.uniform(0.1, 1, 30)
    lam = nfunc.luxemburg_norm(v, w, spec)
    assert nfunc.modular(v, w, spec, lam) == pytest.approx(1.0, abs=1e-10)


def test_zeta_sandwich(rng):
    assert nfunc.zeta_sandwich_check(1.0, 1.0, PowerSum(2, 4))
    assert not nfunc.zeta_sandwich_check(1.1, 1.0, PowerSum(2, 4))
    spec = PowerSum(2, 4)
    for _ in range(100):
        v, w = np.exp(rng.normal(size=10)), rng.uniform(0.1, 2, 10)
        assert nfunc.zeta_sandwich_check(nfunc.modular(v, w, spec), nfunc.luxemburg_norm(v, w, spec), spec)


def test_conjugate_power2_closed_form():
    s = np.linspace(0.01, 10, 50)
    assert np.allclose(Complementary(Power(2)).G(s), s**2 / 4, rtol=1e-10)


def test_conjugate_matches_sup_formula():
    spec = PowerSum(2, 4)
    conj = spec.conjugate()
    for s in (0.3, 2.0, 15.0):
        res = optimize.minimize_scalar(lambda t: -(s * t - float(spec.G(t))), bounds=(0, 50), method="bounded",
                                       options={"xatol": 1e-12})
        assert float(conj.G(s)) == pytest.approx(-res.fun, rel=1e-8)


def test_young_and_conjugate_bound_grid():
    for spec in (Power(2.5), PowerSum(2, 4), PowerLog(3)):
        a, t = np.meshgrid(np.logspace(-2, 2, 100), np.logspace(-2, 2, 100))
        assert nfunc.young_check(spec, a, t).all()
        assert nfunc.conjugate_bound_check(spec, t).all()


def test_holder_orlicz():
    assert nfunc.holder_orlicz_check([1.0], [0.0], [1.0], Power(2))
    # single cell: M F w vs 2 |M| |F| scaled norms, by hand for G=t^2 (conjugate s^2/4)
    M, F, w = 3.0, 5.0, 0.5
    nM = M * math.sqrt(w)
    nF = F * math.sqrt(w) / 2
    assert M * F * w <= 2 * nM * nF
    assert nfunc.holder_orlicz_check([M], [F], [w], Power(2))


def test_sobolev_conjugate_inv_power():
    q, s = 2.0, 0.3
    for t in (1e-3, 0.5, 7.0):
        ref = t ** (1 / q - s) / (1 / q - s)
        assert nfunc.sobolev_conjugate_inv(Power(q), t, s) == pytest.approx(ref, rel=1e-6)
    assert nfunc.sobolev_conjugate_inv(Power(q), 0.0, s) == 0.0
    with pytest.raises(nfunc.HypothesisViolation):
        nfunc.sobolev_conjugate_inv(Power(2), 1.0, 0.5)


def test_ess_stronger():
    q, s, p = 2.0, 0.3, 3.0
    Gstar = nfunc.sobolev_conjugate(Power(q), s)
    assert nfunc.ess_stronger_check(lambda t: t ** (p + 1), Gstar, 2.0)
    assert not nfunc.ess_stronger_check(Power(2), Power(2), 2.0)
    assert nfunc.ess_stronger_check(lambda t: t**2, lambda t: t**3, 3.0)


def test_tabulated_is_consistent():
    spec = Tabulated([0.5, 1.0, 2.0, 4.0], [0.4, 1.2, 3.0, 8.0])
    t = np.linspace(0.1, 6, 40)
    ref = np.array([integrate.quad(lambda x: float(spec.g(x)), 0, tv, points=[0.5, 1, 2, 4])[0] for tv in t])
    assert np.allclose(spec.G(t), ref, rtol=1e-9)
    lo, hi = nfunc.exponent_bounds(spec)
    assert 1 < lo <= hi


def test_derivative_exponent_bounds():
    spec = PowerSum(2, 4)
    t = np.logspace(-3, 3, 200)
    r = t * spec.dg(t) / spec.g(t)
    assert np.all(r >= spec.q_minus - 1 - 1e-6) and np.all(r <= spec.q_plus - 1 + 1e-6)


def test_delta2_and_h3_gates():
    assert nfunc.delta2_check(PowerSum(2, 4))
    assert nfunc.h3_convexity_check(Power(2.5))
    # t^1.5 composed with sqrt is t^0.75: concave, so the gate must refuse it
    assert not nfunc.h3_convexity_check(Power(1.5))


def test_power_log_breaks_g_comparison_with_G_exponents():
    # The g-analogue needs tg'/g in [q- - 1, q+ - 1]; for PowerLog that index
    # range is wider than the one of tg/G, so a counterexample exists.
    G = PowerLog(3.0)
    s = np.exp(np.linspace(-12, 12, 4001))
    idx = np.gradient(np.log(G.g(s)), np.log(s)) + 1
    assert idx.min() < G.q_minus and idx.max() > G.q_plus
    a, b = np.array([0.42337459]), np.array([2.32470073])
    assert not nfunc.power_comparison_check(G, a, b)[0]
    assert bool(np.all(G.G(a * b) >= np.minimum(a**G.q_minus, a**G.q_plus) * G.G(b)))
