import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special, stats

from supweibull.closed_forms import (
    VarianceModel,
    brownian_exp_exact,
    flm_sup_tail,
    gamma_tail,
    ig_effective_d,
    m_h,
    resolve_pickands,
    sigma_tail_class,
    sup_fbm_unit_interval,
    sup_tail_fbm,
    sup_tail_general,
    sup_tail_ig,
)
from supweibull.errors import DomainError
from supweibull.tail_algebra import WeibullTailClass, normal_sf, normal_tail_class, power, product, scale

horizons = st.builds(
    WeibullTailClass, st.floats(0.3, 4.0), st.floats(0.2, 4.0), st.floats(-2.0, 2.0), st.floats(0.1, 5.0)
)


def assert_close(w1, w2, rel=1e-12):
    for a, b in zip(w1.as_tuple(), w2.as_tuple()):
        assert a == pytest.approx(b, rel=rel, abs=rel)


# ---------------------------------------------------------------------------
# general variance model
# ---------------------------------------------------------------------------


@settings(max_examples=150, deadline=None)
@given(horizons, st.floats(0.1, 10.0), st.floats(1.05, 1.95))
def test_general_equals_sigma_times_normal(horizon, d, a_inf):
    direct = sup_tail_general(VarianceModel.power_law(d, a_inf), horizon)
    composed = product(sigma_tail_class(d, a_inf, horizon), normal_tail_class())
    assert_close(direct, composed)


@settings(max_examples=100, deadline=None)
@given(horizons, st.floats(0.1, 10.0), st.floats(1.05, 1.95))
def test_general_d_enters_as_scaling(horizon, d, a_inf):
    # sup of sqrt(D) X equals sqrt(D) sup X
    unit = sup_tail_general(VarianceModel.power_law(1.0, a_inf), horizon)
    assert_close(sup_tail_general(VarianceModel.power_law(d, a_inf), horizon), scale(unit, math.sqrt(d)))


def test_sigma_class_fields():
    w = sigma_tail_class(3.0, 1.5, WeibullTailClass(1.0, 2.0, 0.5, 0.7))
    assert w.as_tuple() == pytest.approx((2 / 1.5, 2.0 * 3.0 ** (-1 / 1.5), 1 / 1.5, 0.7 * 3.0 ** (-0.5 / 1.5)))


@pytest.mark.parametrize("h", [0.55, 0.65, 0.75, 0.85, 0.95])
def test_general_matches_fbm_case_iii(h):
    rng = np.random.default_rng(int(h * 100))
    for _ in range(30):
        horizon = WeibullTailClass(*rng.uniform([0.3, 0.2, -2.0, 0.1], [4.0, 4.0, 2.0, 5.0]).tolist())
        assert_close(sup_tail_general(VarianceModel.power_law(1.0, 2 * h), horizon), sup_tail_fbm(h, horizon))


def test_general_gamma_zero_prefactor():
    a_inf, al = 1.5, 2.0
    w = sup_tail_general(VarianceModel.power_law(4.0, a_inf), WeibullTailClass(al, 1.3, 0.0, 0.8))
    assert w.c == pytest.approx(0.8 * math.sqrt(a_inf / (2 * (al + a_inf))), rel=1e-14)


@pytest.mark.parametrize("a_inf", [1.0, 2.0, 0.5, 2.5])
def test_general_alpha_inf_domain(a_inf):
    with pytest.raises(DomainError):
        sup_tail_general(VarianceModel.power_law(1.0, a_inf), WeibullTailClass(1, 1, 0, 1))


def _log_endpoint_tail(d, a_inf, rate, u):
    # log P(sqrt(d) T^(a/2) N > u) for T ~ Exp(rate), by quadrature in z = log t
    def g(z):
        sd = math.sqrt(d) * math.exp(0.5 * a_inf * z)
        return math.log(rate) + z - rate * math.exp(z) + special.log_ndtr(-u / sd)

    grid = np.linspace(-5, 12, 3401)
    vals = np.array([g(z) for z in grid])
    z0 = grid[vals.argmax()]
    g0 = vals.max()
    edges = [z0 + k for k in (-8, -2, -0.5, 0, 0.5, 2, 8)]
    total = sum(integrate.quad(lambda z: math.exp(g(z) - g0), lo, hi, epsrel=1e-11, limit=200)[0]
                for lo, hi in zip(edges[:-1], edges[1:]))
    return g0 + math.log(total)


@pytest.mark.parametrize("d,a_inf,rate", [(1.0, 1.5, 1.0), (8 / 3, 1.5, 0.05), (0.5, 1.2, 2.0)])
def test_general_tail_against_endpoint_quadrature(d, a_inf, rate):
    # the class describes P(X(T) > u) as well; compare with an exact quadrature
    w = sup_tail_general(VarianceModel.power_law(d, a_inf), WeibullTailClass(1.0, rate, 0.0, 1.0))
    errs = []
    for target in (20.0, 80.0, 320.0):
        u = (target / w.beta) ** (1 / w.alpha)
        errs.append(abs(math.exp(_log_endpoint_tail(d, a_inf, rate, u) - w.log_tail_value(u)) - 1))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 0.01


def test_variance_model_checks():
    v = VarianceModel.integrated_cauchy(1.5)
    assert v.d == pytest.approx(8 / 3)
    times = np.logspace(-2, 3, 26)
    assert v.looks_convex(times)
    assert v.satisfies_bound(times)
    assert v.eval(0.0) == 0.0
    assert v.leading_ratio([1e5])[0] == pytest.approx(1.0, abs=0.02)
    assert np.all(np.diff([v.eval(t) for t in times]) > 0)


def test_integrated_cauchy_variance_exact_value():
    # closed form of 2 int_0^t (t - v)(1 + v^2)^(-1/4) dv via hypergeometric antiderivatives
    t = 3.0
    first = t * t * special.hyp2f1(0.25, 0.5, 1.5, -t * t)
    second = ((1 + t * t) ** 0.75 - 1) / 1.5
    assert VarianceModel.integrated_cauchy(1.5).eval(t) == pytest.approx(2 * (first - second), rel=1e-10)


def test_general_warns_on_nonconvex_model():
    v = VarianceModel(1.0, 1.5, lambda t: float(t) ** 1.5 * (1 + 0.5 * math.sin(float(t))), 0.0, "wiggly")
    with pytest.warns(RuntimeWarning):
        sup_tail_general(v, WeibullTailClass(1, 1, 0, 1))


def test_power_law_model_does_not_warn():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        sup_tail_general(VarianceModel.power_law(2.0, 1.5), WeibullTailClass(1, 1, 0, 1))


def test_ig_reduces_to_general():
    a_inf = 1.5
    horizon = WeibullTailClass(1, 1, 0, 1)
    d_cov = a_inf * (a_inf - 1) / 2
    assert ig_effective_d(d_cov, a_inf) == pytest.approx(1.0)
    assert_close(sup_tail_ig(d_cov, a_inf, horizon), sup_tail_general(VarianceModel.power_law(1.0, a_inf), horizon))


def test_ig_unit_example():
    w = sup_tail_ig(1.0, 1.5, WeibullTailClass(1, 1, 0, 1))
    d = 8 / 3
    s = 2.5
    beta = (1 / (2 * d)) ** (1 / s) * ((1 / 1.5) ** (1.5 / s) + 1.5 ** (1 / s))
    assert w.as_tuple() == pytest.approx((0.8, beta, 0.0, math.sqrt(1.5 / 5)), rel=1e-14)
    assert w.beta == pytest.approx(1.003427, abs=1e-6)
    assert_close(w, product(sigma_tail_class(d, 1.5, WeibullTailClass(1, 1, 0, 1)), normal_tail_class()))


def test_ig_domain():
    with pytest.raises(DomainError):
        sup_tail_ig(-1.0, 1.5, WeibullTailClass(1, 1, 0, 1))
    with pytest.raises(DomainError):
        sup_tail_ig(1.0, 2.0, WeibullTailClass(1, 1, 0, 1))


# ---------------------------------------------------------------------------
# fBm
# ---------------------------------------------------------------------------


def test_unit_interval_classes():
    assert sup_fbm_unit_interval(0.5).as_tuple() == pytest.approx((2, 0.5, -1, 0.7978845608))
    assert sup_fbm_unit_interval(1.0).as_tuple() == pytest.approx((2, 0.5, -1, 0.3989422804))
    assert sup_fbm_unit_interval(0.8) == normal_tail_class()


@pytest.mark.parametrize("u", [3.0, 6.0, 10.0])
def test_unit_interval_brownian_reflection(u):
    # P(sup_[0,1] B > u) = 2 Psi(u); the surrogate is twice the normal surrogate
    assert sup_fbm_unit_interval(0.5).tail_value(u) / (2 * normal_sf(u)) == pytest.approx(1.0, abs=1.5 / u**2)


def test_unit_interval_small_h_prefactor():
    w = sup_fbm_unit_interval(0.25, pickands=1.7)
    assert w.as_tuple() == pytest.approx((2, 0.5, 1.0, 1.7 * 2 ** -2.5 / (0.25 * math.sqrt(math.pi))))
    assert w.meta["pickands"]["source"] == "pinned"


def test_unit_interval_small_h_needs_pickands():
    with pytest.raises(DomainError):
        sup_fbm_unit_interval(0.25)
    with pytest.raises(DomainError):
        sup_fbm_unit_interval(0.25, pickands="guess")
    with pytest.raises(DomainError):
        sup_fbm_unit_interval(0.25, pickands=-1.0)


@pytest.mark.parametrize("h", [0.0, -0.5, 1.01])
def test_hurst_domain(h):
    with pytest.raises(DomainError):
        sup_fbm_unit_interval(h)
    with pytest.raises(DomainError):
        sup_tail_fbm(h, WeibullTailClass(1, 1, 0, 1))
    with pytest.raises(DomainError):
        m_h(h)


@pytest.mark.parametrize("rate", [0.5, 1.0, 3.0])
def test_fbm_brownian_exponential(rate):
    w = sup_tail_fbm(0.5, WeibullTailClass(1.0, rate, 0.0, 1.0))
    assert_close(w, WeibullTailClass(1.0, math.sqrt(2 * rate), 0.0, 1.0))


def test_fbm_three_quarters_exponential_example():
    w = sup_tail_fbm(0.75, WeibullTailClass(1, 1, 0, 1))
    assert w.alpha == pytest.approx(0.8)
    assert w.beta == pytest.approx(0.5 * (4 / 3) ** 0.6 + (4 / 3) ** -0.4, rel=1e-14)
    assert w.beta == pytest.approx(1.4855, abs=1e-4)
    assert w.gamma == 0.0
    assert w.c == pytest.approx(math.sqrt(0.75 / 2.5), rel=1e-14)


@pytest.mark.parametrize("h", [0.1, 0.25, 0.4, 0.5, 0.6, 0.75, 0.9, 1.0])
def test_fbm_equals_product_of_power_and_unit_sup(h):
    rng = np.random.default_rng(int(h * 1000))
    for _ in range(25):
        horizon = WeibullTailClass(*rng.uniform([0.3, 0.2, -2.0, 0.1], [4.0, 4.0, 2.0, 5.0]).tolist())
        pk = float(rng.uniform(0.5, 3.0))
        direct = sup_tail_fbm(h, horizon, pickands=pk)
        composed = product(power(horizon, h), sup_fbm_unit_interval(h, pickands=pk))
        assert_close(direct, composed)


def test_fbm_small_h_gamma_exponent():
    al, ga, h = 1.3, 0.7, 0.3
    w = sup_tail_fbm(h, WeibullTailClass(al, 1.0, ga, 1.0), pickands=1.0)
    assert w.gamma == pytest.approx((al / h - 2 * al + 2 * ga) / (al + 2 * h), rel=1e-14)


# ---------------------------------------------------------------------------
# fractional Laplace motion
# ---------------------------------------------------------------------------


def test_m_h_values():
    assert m_h(0.5) == pytest.approx(math.sqrt(2), rel=1e-15)
    assert m_h(0.75) == pytest.approx(1.4855020483, rel=1e-10)
    # equals the fBm rate over a unit exponential horizon
    for h in np.linspace(0.05, 1.0, 20):
        assert m_h(h) == pytest.approx(sup_tail_fbm(h, WeibullTailClass(1, 1, 0, 1), pickands=1.0).beta, rel=1e-13)


def test_gamma_tail_examples():
    assert gamma_tail(1.0).as_tuple() == (1.0, 1.0, 0.0, 1.0)
    assert gamma_tail(3.0).as_tuple() == pytest.approx((1, 1, 2, 0.5))
    assert gamma_tail(3.0, 1.5).as_tuple() == pytest.approx((1, 1, 1, 1.0))
    with pytest.raises(DomainError):
        gamma_tail(0.0)


def test_gamma_tail_monte_carlo():
    rng = np.random.default_rng(99)
    x = rng.gamma(3.0, 1.0, 10**6)
    p = np.mean(x > 15.0)
    se = math.sqrt(p * (1 - p) / x.size)
    target = gamma_tail(3.0).tail_value(15.0)
    assert abs(p - target) <= 3 * se + 0.1 * target
    # the exact gamma tail lies within the same slack
    assert abs(stats.gamma.sf(15.0, 3.0) - target) <= 0.15 * target


def test_flm_three_quarters():
    r = flm_sup_tail(0.75, 1.0)
    assert r.regime == "exact"
    assert r.tail.as_tuple() == pytest.approx((0.8, 1.4855020483, 0.0, 0.5477225575), rel=1e-9)
    assert r.tail.beta == m_h(0.75)
    assert_close(r.tail, product(power(gamma_tail(1.0), 0.75), normal_tail_class()))
    assert r.lower is None and r.upper is None and not r.extension


@pytest.mark.parametrize("h", [0.55, 0.7, 0.85, 1.0])
@pytest.mark.parametrize("s", [0.5, 1.0, 2.5, 4.0])
def test_flm_exact_equals_composition(h, s):
    r = flm_sup_tail(h, s)
    assert_close(r.tail, product(power(gamma_tail(s), h), normal_tail_class()))
    assert_close(r.tail, sup_tail_fbm(h, gamma_tail(s)))
    assert r.tail.beta == m_h(h)


def test_flm_half_sandwich():
    r = flm_sup_tail(0.5, 1.0)
    assert r.regime == "bounds"
    for u in (1.0, 3.0, 7.0):
        assert r.lower.tail_value(u) == pytest.approx(0.5 * math.exp(-math.sqrt(2) * u), rel=1e-13)
        assert r.upper.tail_value(u) == pytest.approx(math.exp(-math.sqrt(2) * u), rel=1e-13)
    assert r.lower.alpha == r.upper.alpha == r.log_exponent == 1.0
    assert r.lower.beta == pytest.approx(r.upper.beta) and r.m_h == pytest.approx(math.sqrt(2))


@pytest.mark.parametrize("s", [0.5, 1.0, 2.0])
def test_flm_small_h_bounds(s):
    h = 0.3
    r = flm_sup_tail(h, s, pickands=1.5)
    assert r.upper.gamma == pytest.approx((2 * s * h - 4 * h + 1) / (h * (2 * h + 1)), rel=1e-13)
    assert r.lower.alpha == pytest.approx(2 / (2 * h + 1))
    assert r.lower.beta == pytest.approx(m_h(h)) and r.upper.beta == pytest.approx(m_h(h))
    assert_close(r.upper, product(power(gamma_tail(s), h), sup_fbm_unit_interval(h, pickands=1.5)))
    # lower bound polynomially smaller than the upper bound far out
    assert r.lower.tail_value(50.0) < r.upper.tail_value(50.0)


def test_flm_nu_extension_flag():
    r = flm_sup_tail(0.75, 2.0, nu=2.0)
    assert r.extension
    assert_close(r.tail, flm_sup_tail(0.75, 1.0).tail)


def test_flm_domain():
    with pytest.raises(DomainError):
        flm_sup_tail(0.75, 0.0)
    with pytest.raises(DomainError):
        flm_sup_tail(0.75, 1.0, nu=0.0)
    with pytest.raises(DomainError):
        flm_sup_tail(0.3, 1.0)


def test_flm_to_dict_round_trip():
    d = flm_sup_tail(0.5, 1.0).to_dict()
    assert d["regime"] == "bounds" and d["tail"] is None
    assert d["lower"]["c"] == pytest.approx(0.5)


def test_brownian_exact_examples():
    assert brownian_exp_exact(0.5, 1.0) == pytest.approx(math.exp(-1))
    assert brownian_exp_exact(0.5, 0.0) == 1.0
    assert brownian_exp_exact(2.0, 3.0) == pytest.approx(math.exp(-6))
    with pytest.raises(DomainError):
        brownian_exp_exact(0.0, 1.0)
    with pytest.raises(DomainError):
        brownian_exp_exact(1.0, -1.0)


def test_brownian_exact_against_quadrature():
    # E[2 Psi(u / sqrt(T))] for T ~ Exp(A)
    a, u = 0.7, 1.3
    val = integrate.quad(lambda t: a * math.exp(-a * t) * 2 * normal_sf(u / math.sqrt(t)), 0, np.inf)[0]
    assert val == pytest.approx(brownian_exp_exact(a, u), rel=1e-8)


def test_resolve_pickands_pinned_and_auto():
    value, meta = resolve_pickands(0.3, 1.25)
    assert value == 1.25 and meta["pickands"]["source"] == "pinned"
    value, meta = resolve_pickands(0.5, "auto", seed=3, t_window=5.0, grid_n=512, n_paths=200)
    assert 0.7 < value < 1.3
    assert meta["pickands"]["seed"] == 3 and meta["pickands"]["n_paths"] == 200
