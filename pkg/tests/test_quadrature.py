import math

import numpy as np
import pytest
from hypothesis import example, given, settings, strategies as st

from bosonic_meter.quadrature import (
    QuadratureError,
    QuadratureSettings,
    gauss_kronrod,
    integrate,
    integrate_log_abs,
    integrate_semi_infinite,
    principal_value,
)


def expo_osc(t):
    return lambda w: np.exp(-w) * (np.exp(1j * w * t) - 1.0)


def test_settings_validation():
    with pytest.raises(ValueError):
        QuadratureSettings(rel_tol=0)
    with pytest.raises(ValueError):
        QuadratureSettings(abs_tol=-1)
    with pytest.raises(ValueError):
        QuadratureSettings(max_subdivisions=0)


def test_exponential_oscillation_vanishes_at_t0():
    assert integrate_semi_infinite(expo_osc(0.0), "inv_omega", 0.0) == 0


def test_gamma_2():
    assert integrate_semi_infinite(lambda w: w * np.exp(-w)) == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("t", [0.3, 1.0, 7.0, 100.0])
def test_log_closed_form(t):
    # int e^{-w} (e^{iwt} - 1) / w = -ln(1 - it)
    val = integrate_semi_infinite(expo_osc(t), "inv_omega", t)
    assert abs(val - (-np.log(1 - 1j * t))) < 1e-9 * max(1.0, abs(val))


def test_sin_squared_closed_form():
    t = 1.0
    exact = 0.5 * (t * math.atan(t) - 0.5 * math.log1p(t * t))
    val = integrate_semi_infinite(
        lambda w: np.exp(-w) * np.sin(0.5 * w * t) ** 2, "inv_omega_sq_coth", t
    )
    assert val.real == pytest.approx(exact, rel=1e-10)
    assert exact == pytest.approx(0.2194122866, abs=1e-10)


def test_oscillation_splitting_invariance():
    t = 100.0
    split = integrate_semi_infinite(expo_osc(t), "inv_omega", t)
    plain = integrate_semi_infinite(
        expo_osc(t), "inv_omega", t, QuadratureSettings(oscillation_splitting=False)
    )
    assert abs(split - plain) < 1e-7


def test_coth_weight_at_positive_temperature():
    # coth(w/2) = 1 + 2 sum_n e^{-nw} gives int w e^{-w} coth(w/2) dw = pi^2/3 - 1
    val = integrate_semi_infinite(
        lambda w: w**2 * np.exp(-w), "inv_omega_coth", 0.0, temperature=1.0
    )
    assert val.real == pytest.approx(math.pi**2 / 3 - 1, rel=1e-10)


def test_non_convergence_reports_estimate():
    f = lambda x: np.sin(1e4 * x) ** 2  # noqa: E731
    with pytest.raises(QuadratureError) as info:
        gauss_kronrod(f, [0.0, 1.0], QuadratureSettings(rel_tol=1e-14, max_subdivisions=2))
    assert info.value.error > 0
    assert np.isfinite(info.value.value)


def test_principal_value_analytic():
    val = principal_value(lambda x: np.ones_like(x), 1.0, -5.0, 5.0)
    assert val == pytest.approx(math.log(4 / 6), rel=1e-12)


def test_principal_value_even_about_pole_vanishes():
    val = principal_value(lambda x: np.exp(-(x - 0.3) ** 2), 0.3)
    assert abs(val) < 1e-12


def test_principal_value_odd_numerator():
    # PV int x/(x^2+1) / x dx = int 1/(x^2+1) = pi; an odd f gives an even integrand
    val = principal_value(lambda x: x / (x * x + 1.0), 0.0)
    assert val == pytest.approx(math.pi, rel=1e-9)


def test_principal_value_dawson_identity():
    from scipy.special import dawsn

    f = lambda x: np.exp(-x * x)  # noqa: E731
    # 1/(1 - x^2) = (1/2) [1/(x + 1) - 1/(x - 1)]
    val = 0.5 * (principal_value(f, -1.0) - principal_value(f, 1.0))
    assert val == pytest.approx(2 * math.sqrt(math.pi) * dawsn(1.0), rel=1e-10)
    assert val == pytest.approx(1.90744, abs=1e-5)


def test_principal_value_epsilon_sequence():
    # symmetric excision leaves an error linear in eps; extrapolate it away
    from scipy.integrate import quad

    f = lambda x: np.exp(-x * x)  # noqa: E731
    pv = principal_value(f, 1.0, -8.0, 8.0)

    def excised(eps):
        g = lambda x: f(x) / (x - 1)  # noqa: E731
        return quad(g, -8, 1 - eps, limit=400, epsabs=1e-14)[0] + quad(
            g, 1 + eps, 8, limit=400, epsabs=1e-14
        )[0]

    eps = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6]
    vals = [excised(e) for e in eps]
    errors = [abs(v - pv) for v in vals]
    assert errors == sorted(errors, reverse=True)
    extrapolated = (10 * vals[-1] - vals[-2]) / 9
    assert abs(extrapolated - pv) < 1e-8


def test_principal_value_pole_at_boundary():
    with pytest.raises(ValueError):
        principal_value(lambda x: x, 1.0, 1.0, 2.0)


def test_integrate_infinite_limits():
    assert integrate(lambda x: np.exp(-x * x), -np.inf, np.inf).real == pytest.approx(
        math.sqrt(math.pi), rel=1e-12
    )
    assert integrate(lambda x: np.exp(-x), 0, 2) == pytest.approx(1 - math.exp(-2), rel=1e-12)
    assert integrate(lambda x: np.exp(-x), 2, 0) == pytest.approx(math.exp(-2) - 1, rel=1e-12)


def test_log_weighted_integral():
    # int_{-1}^{1} ln|x| dx = -2
    assert integrate_log_abs(lambda x: 1.0, 0.0, -1.0, 1.0) == pytest.approx(-2.0, rel=1e-12)
    # centre outside the interval
    ref = 3 * math.log(3) - 3 - (2 * math.log(2) - 2)
    assert integrate_log_abs(lambda x: 1.0, -1.0, 1.0, 2.0) == pytest.approx(ref, rel=1e-12)


smooth = st.tuples(st.floats(0.1, 3.0), st.floats(-2.0, 2.0))


@settings(max_examples=25, deadline=None)
@given(smooth, smooth, st.floats(-3, 3), st.floats(-3, 3))
@example(p=(0.125, 0.125), q=(1.0, 0.0), alpha=0.0, beta=0.0)
@example(p=(1.0, 0.0), q=(0.40625, 1.0), alpha=0.0, beta=1.0)
def test_linearity(p, q, alpha, beta):
    f = lambda w: np.exp(-p[0] * w) * np.cos(p[1] * w) * w  # noqa: E731
    g = lambda w: np.exp(-q[0] * w) * np.sin(q[1] * w) * w  # noqa: E731
    scale_f = abs(integrate_semi_infinite(lambda w: np.abs(f(w))))
    scale_g = abs(integrate_semi_infinite(lambda w: np.abs(g(w))))
    # integrals that cancel to ~0 cannot meet a relative target; bound absolutely by int |f|
    s = QuadratureSettings(abs_tol=max(1e-9 * max(scale_f, scale_g), 1e-12))
    lhs = integrate_semi_infinite(lambda w: alpha * f(w) + beta * g(w), "none", 0.0, s)
    rhs = alpha * integrate_semi_infinite(f, "none", 0.0, s) + beta * integrate_semi_infinite(
        g, "none", 0.0, s
    )
    scale = abs(alpha) * scale_f + abs(beta) * scale_g
    assert abs(lhs - rhs) <= 10 * s.rel_tol * max(scale, 1e-12) + 3 * s.abs_tol


def _error_cases():
    """Twenty integrals with closed forms, standing in for a dense reference grid."""
    cases = []
    for t in (0.5, 2.0, 10.0, 40.0, 90.0):
        cases.append((expo_osc(t), "inv_omega", t, -np.log(1 - 1j * t)))
    for b in (0.5, 1.0, 2.5, 4.0, 7.0):
        cases.append((lambda w, b=b: np.exp(-b * w) * w**2, "none", 0.0, 2 / b**3))
    for n, t in ((1, 3.0), (2, 5.0), (3, 1.0), (1, 20.0), (2, 60.0)):
        cases.append((
            lambda w, n=n, t=t: w**n * np.exp(-w) * np.exp(1j * w * t), "none", t,
            math.factorial(n) / (1 - 1j * t) ** (n + 1),
        ))
    for t in (0.2, 1.0, 4.0, 15.0, 70.0):
        exact = 0.5 * (t * math.atan(t) - 0.5 * math.log1p(t * t))
        cases.append((
            lambda w, t=t: np.exp(-w) * np.sin(0.5 * w * t) ** 2, "inv_omega_sq_coth", t, exact,
        ))
    return cases


@pytest.mark.parametrize("case", range(20))
def test_error_bound_honesty(case):
    f, weight, t, exact = _error_cases()[case]
    res = integrate_semi_infinite(f, weight, t, full_output=True, cutoff=60.0)
    # the bound may be tighter than the double-precision floor of the reference
    assert abs(res.value - exact) <= max(res.error, 1e-14 * max(1.0, abs(exact)))
