import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from liouville import errors
from liouville.specfun import (
    CheckReport,
    HypParams,
    UpsilonConfig,
    bpz_basis,
    connection_coefficients,
    connection_residuals,
    hyp2f1,
    l_func,
    lemma_integral_check,
    log_gamma,
    make_report,
    planar_degenerate_check,
    planar_identity_check,
    upsilon,
    upsilon_prime_zero,
    upsilon_suite,
    upsilon_tagged,
)

CFG1 = UpsilonConfig(gamma=1.0)


# ---------------------------------------------------------------------------
# log_gamma / l_func


def test_log_gamma_real_positive_is_float():
    v = log_gamma(4.5)
    assert isinstance(v, float)
    assert v == pytest.approx(math.lgamma(4.5), rel=1e-14)


def test_log_gamma_complex():
    v = log_gamma(0.3 + 0.7j)
    w = complex(v)
    # |Gamma(z)| from the reflection-free scipy reference
    import scipy.special as sp

    assert np.allclose(w, sp.loggamma(0.3 + 0.7j), rtol=1e-13)


def test_log_gamma_pole():
    with pytest.raises(errors.PoleError):
        log_gamma(-3.0)
    with pytest.raises(errors.PoleError):
        log_gamma(0.0)


def test_l_func_values():
    assert l_func(0.5) == pytest.approx(1.0)
    # l(1/4) = Gamma(1/4)/Gamma(3/4)
    assert l_func(0.25) == pytest.approx(math.gamma(0.25) / math.gamma(0.75), rel=1e-14)


def test_l_func_zero_and_pole():
    assert l_func(1.0) == 0.0
    assert l_func(3.0) == 0.0
    with pytest.raises(errors.PoleError):
        l_func(0.0)
    with pytest.raises(errors.PoleError):
        l_func(-2.0)


@given(st.floats(min_value=0.07, max_value=0.93))
@settings(max_examples=60, deadline=None)
def test_l_reflection_product(x):
    # l(x) l(-x) = -1/x^2 away from the integers
    assert l_func(x) * l_func(-x) == pytest.approx(-1.0 / x**2, rel=1e-11)


@given(st.floats(min_value=0.07, max_value=0.93))
@settings(max_examples=60, deadline=None)
def test_l_recursion(x):
    # l(x+1) = -x^2 l(x)
    assert l_func(x + 1.0) == pytest.approx(-(x**2) * l_func(x), rel=1e-11)


def test_l_inverse_pair():
    for x in (0.3, 0.71, 1.4):
        assert l_func(1.0 - x) * l_func(x) == pytest.approx(1.0, rel=1e-12)


# ---------------------------------------------------------------------------
# Upsilon


def test_upsilon_golden_values(golden):
    cases = [
        ("gamma=1 z=1.0", 1.0, 1.0),
        ("gamma=1 z=0.5", 1.0, 0.5),
        ("gamma=1 z=1.8", 1.0, 1.8),
        ("gamma=0.7 z=0.9", 0.7, 0.9),
        ("gamma=1.4 z=0.9", 1.4, 0.9),
    ]
    for params, g, z in cases:
        want = golden[("upsilon", params)]
        got = upsilon(z, UpsilonConfig(gamma=g))
        assert abs(got.value - want) <= max(got.err_bound, 1e-12), params


def test_upsilon_golden_complex(golden):
    want = golden[("upsilon", "gamma=1 z=0.6+0.8j")]
    got = upsilon(0.6 + 0.8j, CFG1)
    assert abs(got.value - want) <= max(2.0 * got.err_bound, 1e-12)


def test_upsilon_normalization_q_half():
    for g in (0.7, 1.0, 1.4):
        cfg = UpsilonConfig(gamma=g)
        r = upsilon(cfg.q_parameter / 2.0, cfg)
        assert abs(r.value - 1.0) <= max(r.err_bound, 1e-13)


def test_upsilon_symmetry_sweep():
    rng = np.random.default_rng(7)
    for g in (0.8, 1.2):
        cfg = UpsilonConfig(gamma=g)
        q = cfg.q_parameter
        for _ in range(25):
            z = complex(rng.uniform(0.1, q - 0.1), rng.uniform(-0.5, 0.5))
            a = upsilon(z, cfg)
            b = upsilon(q - z, cfg)
            assert abs(a.value - b.value) <= 2.0 * (a.err_bound + b.err_bound) + 1e-14


def test_upsilon_exact_zeros():
    # lattice zeros are detected exactly and tagged
    cfg = UpsilonConfig(gamma=1.0)
    for z in (0.0, -0.5, -2.0, 2.5, 3.0, 4.5):
        val, _err, order = upsilon_tagged(z, cfg)
        assert order >= 1
        assert val == 0.0
    # near-zero values are small
    for z0 in (-0.5, 2.5):
        r = upsilon(z0 + 1e-7, cfg)
        assert abs(r.value) <= 1e-6


def test_upsilon_shift_relations():
    rng = np.random.default_rng(3)
    for g in (0.7, 1.0, 1.4):
        cfg = UpsilonConfig(gamma=g)
        q = cfg.q_parameter
        for _ in range(12):
            z = rng.uniform(0.3, q - 0.3)
            if min(abs(g * z / 2 - round(g * z / 2)), abs(2 * z / g - round(2 * z / g))) < 0.03:
                continue
            u0 = upsilon(z, cfg).value
            lhs = upsilon(z + g / 2, cfg).value
            rhs = l_func(g * z / 2) * (g / 2) ** (1 - g * z) * u0
            assert abs(lhs - rhs) / abs(rhs) < 1e-11
            lhs = upsilon(z + 2 / g, cfg).value
            rhs = l_func(2 * z / g) * (g / 2) ** (4 * z / g - 1) * u0
            assert abs(lhs - rhs) / abs(rhs) < 1e-11


def test_upsilon_duality():
    # the defining integrand is symmetric under gamma/2 <-> 2/gamma
    for g in (0.7, 1.3):
        cfg = UpsilonConfig(gamma=g)
        cfg_dual = UpsilonConfig(gamma=4.0 / g)
        for z in (0.4, 0.9, 1.7):
            a = upsilon(z, cfg).value
            b = upsilon(z, cfg_dual).value
            assert abs(a - b) / abs(a) < 1e-13


def test_upsilon_prime_zero_golden(golden):
    for g in (0.7, 1.0, 1.4):
        want = golden[("upsilon_prime_zero", f"gamma={g:g}" if g != 1.0 else "gamma=1.0")]
        got = upsilon_prime_zero(UpsilonConfig(gamma=g))
        assert abs(got.value - want) <= max(got.err_bound, 1e-10)


def test_upsilon_prime_zero_two_routes_agree():
    # the primary route (shift relation collapsed at 0) and the centered
    # finite difference are compared internally; a PrecisionError would mean
    # they disagree
    r = upsilon_prime_zero(UpsilonConfig(gamma=1.1))
    assert complex(r.value).real > 0
    assert abs(complex(r.value).imag) < 1e-12


def test_upsilon_nonpositive_gamma_rejected():
    with pytest.raises(ValueError):
        UpsilonConfig(gamma=0.0)
    with pytest.raises(ValueError):
        UpsilonConfig(gamma=-1.0)


# ---------------------------------------------------------------------------
# hypergeometric layer


def _hyp_series_oracle(a, b, c, z, n=4000):
    """Brute-force partial sum, no cleverness."""
    total = 1.0 + 0.0j
    term = 1.0 + 0.0j
    for k in range(n):
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z
        total += term
    return total


def test_hyp2f1_golden(golden):
    cases = [
        ("a=1 b=1 c=2 z=0.5", (1, 1, 2, 0.5)),
        ("a=0.37 b=1.21 c=2.5 z=0.55", (0.37, 1.21, 2.5, 0.55)),
        ("a=0.37 b=1.21 c=2.5 z=0.3+0.4j", (0.37, 1.21, 2.5, 0.3 + 0.4j)),
        ("a=-0.8 b=2.3 c=1.7 z=-0.6", (-0.8, 2.3, 1.7, -0.6)),
    ]
    for params, args in cases:
        want = golden[("hyp2f1", params)]
        assert np.allclose(hyp2f1(*args), want, rtol=1e-12), params


def test_hyp2f1_against_series_oracle():
    rng = np.random.default_rng(11)
    for _ in range(40):
        a = rng.uniform(-1.5, 2.0)
        b = rng.uniform(0.1, 2.5)
        c = rng.uniform(0.3, 3.0)
        z = complex(rng.uniform(-0.7, 0.7), rng.uniform(-0.4, 0.4))
        if abs(z) > 0.75:
            continue
        got = hyp2f1(a, b, c, z)
        want = _hyp_series_oracle(a, b, c, z)
        assert abs(got - want) <= 1e-11 * max(1.0, abs(want))


def test_hyp2f1_rejections():
    with pytest.raises(errors.DivergenceError):
        hyp2f1(0.5, 0.5, -2.0, 0.3)  # c at a nonpositive integer
    with pytest.raises(errors.DivergenceError):
        hyp2f1(0.5, 0.5, 1.5, 1.0)
    with pytest.raises(errors.DivergenceError):
        hyp2f1(0.5, 0.5, 1.5, 1.2)


def test_hyp2f1_polynomial_case():
    # a = -2 terminates: 2F1(-2, b; c; z) is a quadratic in z
    a, b, c, z = -2.0, 0.7, 1.9, 0.83
    want = 1 + a * b / c * z + a * (a + 1) * b * (b + 1) / (c * (c + 1) * 2) * z**2
    assert hyp2f1(a, b, c, z) == pytest.approx(want, rel=1e-13)


def test_connection_identity_grid():
    rng = np.random.default_rng(5)
    for _ in range(25):
        p = HypParams(
            rng.uniform(0.05, 1.3),
            rng.uniform(0.05, 1.3),
            rng.uniform(1.35, 2.6),
        )
        cab = complex(p.c - p.a - p.b).real
        if min(abs(cab - round(cab)), abs(complex(p.c).real - round(complex(p.c).real))) < 0.05:
            continue
        z = rng.uniform(0.2, 0.75)
        r1, r2 = connection_residuals(p, z)
        assert r1 < 1e-10 and r2 < 1e-10


def test_connection_coefficients_shape():
    p = HypParams(0.3, 0.9, 1.7)
    A, B, D, E = connection_coefficients(p)
    basis = bpz_basis(p, 0.4)
    assert np.allclose(basis.f_minus, A * basis.g_minus + B * basis.g_plus, rtol=1e-10)
    assert np.allclose(basis.f_plus, D * basis.g_minus + E * basis.g_plus, rtol=1e-10)


# ---------------------------------------------------------------------------
# closed-form integral identities


def test_lemma_integral_special_case_pi():
    # p=1, a=3/2: int ((1+v)^-1 - 1) v^-3/2 dv = -pi
    rep = lemma_integral_check(1.0, 1.5)
    assert rep.passed
    assert rep.lhs == pytest.approx(-math.pi, rel=1e-10)


def test_lemma_integral_random_draws():
    rng = np.random.default_rng(2)
    for _ in range(10):
        a = rng.uniform(1.1, 1.9)
        p = rng.uniform(a - 0.9, 3.0)
        if p <= a - 1 + 0.05:
            continue
        assert lemma_integral_check(p, a).passed


def test_lemma_integral_domain():
    with pytest.raises(ValueError):
        lemma_integral_check(1.0, 2.3)
    with pytest.raises(ValueError):
        lemma_integral_check(0.2, 1.5)


def test_planar_identity_moments():
    reports = planar_identity_check(gamma=1.0, alpha1=1.3)
    assert reports
    assert all(r.passed for r in reports)


def test_planar_degenerate_returns_zero():
    rep = planar_degenerate_check(1.0)
    assert rep.passed
    assert rep.lhs == 0.0


# ---------------------------------------------------------------------------
# reports and the layer suite


def test_check_report_roundtrip():
    rep = make_report("thing", 1.0 + 2.0j, 1.0 + 2.0j, 1e-9)
    d = json.loads(json.dumps(rep.as_dict()))
    assert d["name"] == "thing"
    assert d["lhs"] == [1.0, 2.0]
    assert d["passed"] is True


def test_upsilon_suite_all_pass():
    for g in (1.0, 1.4):
        reports = upsilon_suite(g, n_points=6, seed=1)
        failures = [r.name for r in reports if not r.passed]
        assert failures == []


def test_upsilon_suite_deterministic():
    a = upsilon_suite(0.9, n_points=4, seed=42)
    b = upsilon_suite(0.9, n_points=4, seed=42)
    assert [(r.name, r.residual) for r in a] == [(r.name, r.residual) for r in b]
