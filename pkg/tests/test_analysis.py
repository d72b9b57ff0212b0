import numpy as np
import pytest
from scipy.integrate import trapezoid
from hypothesis import given, settings, strategies as st

from nlreg.analysis import (caccioppoli_check, counterexample_suite, energy_lower_bound,
                            fit_regularity_exponent, half_line_power, pointwise_frac_laplacian,
                            profile_frac_laplacian_2d, truncated_energy, varpi_constant)
from nlreg.errors import (BallNotCompactlyContained, ParameterOutOfRange, PVDivergence,
                          WindowTooNarrow)
from nlreg.increments import Domain1D, GridFunction
from nlreg.kernels import frac_laplacian_kernel
from nlreg.solver import WeakProblem, solve

gauss = lambda t: np.exp(-np.asarray(t) ** 2)


def test_constant_annihilated():
    assert pointwise_frac_laplacian(lambda t: np.full_like(np.asarray(t, float), 3.0), 0.2, 0.4) == 0.0


@pytest.mark.parametrize("s", [0.5, 0.75])
@pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
def test_half_line_power_is_harmonic(s, t):
    assert abs(pointwise_frac_laplacian(half_line_power(s), t, s, breakpoints=[0.0])) < 1e-6


@pytest.mark.parametrize("s", [0.1, 0.3])
def test_capped_square_at_concave_point(s):
    # D(r) = -2 min(r², 1), so the value is -4 (1/(2-2s) + 1/(2s))
    u = lambda t: np.minimum(np.asarray(t, float) ** 2, 1.0)
    got = pointwise_frac_laplacian(u, 0.0, s, breakpoints=[-1.0, 1.0])
    assert got < 0
    assert got == pytest.approx(-4 * (1 / (2 - 2 * s) + 1 / (2 * s)), rel=1e-9)


@settings(max_examples=15, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_linearity(a, b):
    f = lambda t: 1.0 / (1.0 + np.asarray(t) ** 2)
    lhs = pointwise_frac_laplacian(lambda t: a * gauss(t) + b * f(t), 0.3, 0.4)
    rhs = a * pointwise_frac_laplacian(gauss, 0.3, 0.4) + b * pointwise_frac_laplacian(f, 0.3, 0.4)
    assert lhs == pytest.approx(rhs, rel=1e-8, abs=1e-9)


def test_kink_diverges_for_large_s():
    u = GridFunction.from_function(lambda x: 1 - np.abs(x), -1, 1, 8, keep_closed_form=False)
    with pytest.raises(PVDivergence):
        pointwise_frac_laplacian(u, 0.0, 0.6)
    assert np.isfinite(pointwise_frac_laplacian(u, 0.0, 0.3))


def test_grid_function_with_zero_exterior_tail():
    # P1 hat off its nodes, compared with a direct fine-grid oracle
    u = GridFunction(-1, 1, [0.0, 1.0, 0.0])
    s, x = 0.4, 0.3
    r = np.geomspace(1e-9, 1e4, 400_001)
    D = 2 * u(x) - u(x + r) - u(x - r)
    ref = 2 * trapezoid(D * r ** (-1 - 2 * s), r) + 2 * 2 * u(x) * 1e4 ** (-2 * s) / (2 * s)
    assert pointwise_frac_laplacian(u, x, s) == pytest.approx(ref, rel=1e-5)


@pytest.mark.parametrize("t", [0.0, 0.7])
def test_planar_profile_factorizes(t):
    s = 0.5
    two_d = profile_frac_laplacian_2d(gauss, t, s)
    assert two_d == pytest.approx(varpi_constant(2, s) * pointwise_frac_laplacian(gauss, t, s), rel=1e-8)


def test_varpi_values():
    assert varpi_constant(1, 0.3) == 1.0
    assert varpi_constant(2, 0.5) == pytest.approx(2.0, abs=1e-10)
    assert varpi_constant(3, 0.5) == pytest.approx(np.pi, rel=1e-10)


@pytest.mark.parametrize("n", [2, 3, 4])
@pytest.mark.parametrize("s", [0.2, 0.5, 0.9])
def test_varpi_gamma_formula(n, s):
    from math import gamma
    ref = np.pi ** ((n - 1) / 2) * gamma((1 + 2 * s) / 2) / gamma((n + 2 * s) / 2)
    assert varpi_constant(n, s) == pytest.approx(ref, rel=1e-10)


def test_caccioppoli_zero():
    u = GridFunction(-1, 1, np.zeros(9))
    rep = caccioppoli_check(u, 0.0, Domain1D(-1, 1), 0.0, 0.5, frac_laplacian_kernel(0.5))
    assert rep.lhs == 0.0 and sum(rep.rhs_terms) == 0.0 and rep.ratio == 0.0


def test_caccioppoli_ball_must_fit():
    u = GridFunction(-1, 1, np.zeros(9))
    with pytest.raises(BallNotCompactlyContained):
        caccioppoli_check(u, 0.0, Domain1D(-1, 1), 0.5, 0.5, frac_laplacian_kernel(0.5))


def test_caccioppoli_scaling_and_boundary_growth():
    K = frac_laplacian_kernel(0.5)
    om = Domain1D(-1, 1)
    u = solve(WeakProblem(K, om, 1.0, 64))
    base = caccioppoli_check(u, 1.0, om, 0.0, 0.25, K)
    scaled = caccioppoli_check(u.scaled(-2.5), -2.5, om, 0.0, 0.25, K)
    assert scaled.ratio == pytest.approx(base.ratio, rel=1e-10)
    ratios = [caccioppoli_check(u, 1.0, om, x0, 0.25, K).ratio for x0 in (0.0, 0.4, 0.6, 0.7)]
    assert ratios == sorted(ratios)


def test_fit_x_plus():
    u = GridFunction.from_function(lambda x: np.maximum(x, 0), -1, 1, 1024)
    fit = fit_regularity_exponent(u, Domain1D(-0.5, 0.5))
    assert fit.slope == pytest.approx(1.5, abs=1e-6)
    assert fit.intercept == pytest.approx(0.5 * np.log(2 / 3), abs=1e-6)


def test_fit_smooth_saturates():
    u = GridFunction.from_function(lambda x: np.cos(3 * x), -1, 1, 1024)
    assert fit_regularity_exponent(u, Domain1D(-0.5, 0.5), window=(2**-9, 2**-5)).slope == pytest.approx(2.0, abs=0.01)


def test_fit_scale_invariance():
    u = GridFunction.from_function(lambda x: np.where(x > 0, np.abs(x) ** 0.7, 0), -1, 1, 2048)
    a = fit_regularity_exponent(u, Domain1D(-0.5, 0.5))
    b = fit_regularity_exponent(u.scaled(-4.0), Domain1D(-0.5, 0.5))
    assert b.slope == pytest.approx(a.slope, abs=1e-12)
    assert b.intercept - a.intercept == pytest.approx(np.log(4.0), abs=1e-12)


def test_fit_window_too_narrow():
    u = GridFunction.from_function(np.sin, -1, 1, 64)
    with pytest.raises(WindowTooNarrow):
        fit_regularity_exponent(u, Domain1D(-0.5, 0.5), window=(0.02, 0.1))


def test_truncated_energy_against_direct_quadrature():
    from scipy import integrate
    s, eps = 0.75, 0.05
    d = lambda t: s * t ** (s - 1)
    f = lambda r, t: (d(t) - d(r)) ** 2 * abs(t - r) ** (1 - 4 * s)
    # integrate r < t and double; the diagonal singularity is integrable
    val = integrate.dblquad(lambda r, t: f(r, t), eps, 1, eps, lambda t: t, epsabs=1e-11, epsrel=1e-10)[0]
    assert truncated_energy(s, eps) == pytest.approx(2 * val, rel=1e-7)


@pytest.mark.parametrize("s", [0.5, 0.6, 0.9])
def test_energy_increasing_and_above_bound(s):
    eps = 2.0 ** -np.arange(2, 16)
    E = np.array([truncated_energy(s, e) for e in eps])
    assert np.all(np.diff(E) > 0)
    assert np.all(E >= [energy_lower_bound(s, e) for e in eps])


def test_counterexample_rejects_small_s():
    with pytest.raises(ParameterOutOfRange):
        counterexample_suite(0.4)


def test_counterexample_rejects_unsorted_eps():
    with pytest.raises(ParameterOutOfRange):
        counterexample_suite(0.6, [0.1, 0.2])


def test_counterexample_report():
    rep = counterexample_suite(0.75, 2.0 ** -np.arange(2, 8), points=(1.0,))
    assert rep.divergence_slope == pytest.approx(-0.5, abs=1e-6)
    assert rep.lower_bound_check
    assert rep.varpi[1] == 1.0
    assert len(rep.csv_rows()) == 1 + 3 + 6 + 2


def test_half_energy_grows_like_log_squared():
    # at s = 1/2 the energy over log(1/eps) keeps growing; over log^2 it settles at 1/4
    eps = 2.0 ** -np.array([20.0, 40.0, 60.0])
    L = np.log(1 / eps)
    E = np.array([truncated_energy(0.5, e) for e in eps])
    assert np.all(np.diff(E / L) > 0.5)
    # equally spaced log(1/eps): the second difference cancels the linear and constant terms
    assert (E[2] - 2 * E[1] + E[0]) / (2 * (L[1] - L[0]) ** 2) == pytest.approx(0.25, rel=1e-3)
    rep = counterexample_suite(0.5, points=())
    assert rep.log_divergent
    assert rep.diagnostics["log_square_coefficient"] == pytest.approx(0.25, abs=1e-3)
