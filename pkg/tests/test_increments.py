import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlreg import hot
from nlreg.errors import ShiftTooLarge, SupportViolation
from nlreg.increments import (Ball, ClosedFormTail, Domain1D, GridFunction, ball_defect,
                              ball_defect_bound, ball_defect_mc, binomial_weights, difference,
                              difference_eval, difference_lp, discrete_parts_check, shrink_domain)
from nlreg.kernels import frac_laplacian_kernel


def test_binomial_weights():
    assert binomial_weights(2).tolist() == [1.0, -2.0, 1.0]
    assert binomial_weights(3).sum() == 0.0


@pytest.mark.parametrize("z,k,expected", [
    (0.1, 1, (0.0, 0.9)),
    (-0.1, 1, (0.1, 1.0)),
    (0.2, 2, (0.0, 0.6)),
    (0.6, 2, (0.0, 0.0)),
])
def test_shrink_domain(z, k, expected):
    V = shrink_domain(Domain1D(0.0, 1.0), z, k)
    assert (V.lo, V.hi) == pytest.approx(expected)


def test_grid_function_interpolates_and_extends():
    u = GridFunction(0.0, 1.0, [0.0, 1.0, 0.0])
    assert u(np.array([0.25, 0.5, 2.0])).tolist() == [0.5, 1.0, 0.0]
    v = GridFunction.from_function(lambda x: x, 0.0, 1.0, 4, exterior="tail")
    assert v(3.0) == 3.0
    assert isinstance(v.exterior, ClosedFormTail)


def test_grid_function_rejects_nonfinite():
    with pytest.raises(ValueError):
        GridFunction(0, 1, [0.0, np.nan])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=3, max_size=30),
       st.floats(-0.5, 0.5), st.integers(1, 4))
def test_binomial_matches_recursive(vals, z, k):
    u = GridFunction(-1.0, 1.0, vals)
    x = np.linspace(-1.5, 1.5, 41)
    a = difference_eval(u, z, k, x)
    b = difference_eval(u, z, k, x, recursive=True)
    assert np.max(np.abs(a - b)) <= 1e-12 * max(1.0, np.max(np.abs(vals)))


@pytest.mark.parametrize("a,b", [(0.0, 1.0), (3.0, -2.0), (-1e3, 7.5)])
def test_second_difference_annihilates_affine(a, b):
    u = GridFunction.from_function(lambda x: a + b * x, -1, 1, 16, exterior="tail")
    x = np.linspace(-2, 2, 101)
    assert np.all(difference_eval(u, 0.37, 2, x) == pytest.approx(0.0, abs=1e-12 * (abs(a) + abs(b))))


def test_difference_carries_exact_values():
    u = GridFunction.from_function(np.sin, 0, 2, 32)
    d = difference(u, 0.3, 2)
    x = np.linspace(d.lo, d.hi, 17)
    assert np.allclose(d.exact(x), difference_eval(u, 0.3, 2, x))


def test_difference_lp_for_x_plus():
    # ‖Δ_z² x_+‖²_{L²} = (2/3) z³ once the kink is inside
    u = GridFunction.from_function(lambda x: np.maximum(x, 0), -1, 1, 64, exterior="tail")
    for z in (0.05, 0.125, 0.3):
        assert difference_lp(u, u.domain, z, 2, 2.0) == pytest.approx(2.0 / 3.0 * z**3, rel=1e-12)


@pytest.mark.parametrize("backend", hot.backends())
def test_difference_lp_backends_agree(backend, rng):
    u = GridFunction(0, 1, rng.standard_normal(40))
    ref = difference_lp(u, Domain1D(0.1, 0.9), 0.037, 2, 1.5, backend="numpy")
    assert difference_lp(u, Domain1D(0.1, 0.9), 0.037, 2, 1.5, backend=backend) == pytest.approx(ref, rel=1e-13)


@pytest.mark.parametrize("dim", [1, 2, 3])
def test_ball_defect_bounded(dim, rng):
    for _ in range(200):
        R = rng.uniform(0.1, 3.0)
        z = rng.normal(size=dim) * rng.uniform(0, 2 * R)
        B = Ball(np.zeros(dim), R)
        assert ball_defect(B, z) <= ball_defect_bound(B, z) * (1 + 1e-12)


def test_ball_defect_limits():
    B = Ball([0.0, 0.0], 1.0)
    assert ball_defect(B, [0.0, 0.0]) == 0.0
    assert ball_defect(B, [5.0, 0.0]) == pytest.approx(2 * np.pi)


def test_ball_defect_mc_agrees():
    B = Ball([0.0, 0.0], 0.8)
    est, sig = ball_defect_mc(B, [0.3, -0.2], samples=200_000, seed=3)
    assert abs(est - ball_defect(B, [0.3, -0.2])) < 4 * sig


def test_parts_check_preconditions():
    K = frac_laplacian_kernel(0.5)
    u = GridFunction.from_function(np.cos, -4, 4, 16)
    v = GridFunction.from_function(lambda x: np.maximum(1 - x * x, 0), -1, 1, 8)
    with pytest.raises(ShiftTooLarge):
        discrete_parts_check(u, v, K, 0.5, 0.6)
    with pytest.raises(SupportViolation):
        discrete_parts_check(u, v, K, 0.25, 0.1)
    assert tuple(discrete_parts_check(u, v, K, 0.5, 0.0)) == (0.0, 0.0, 0.0)


def test_parts_identity_fractional():
    K = frac_laplacian_kernel(0.4)
    u = GridFunction.from_function(lambda x: np.sin(x) + 0.3 * x * x, -5, 5, 20)
    v = GridFunction.from_function(lambda x: np.maximum(0.36 - x * x, 0), -0.6, 0.6, 6)
    chk = discrete_parts_check(u, v, K, 0.3, 0.08)
    assert chk.terms[1] == 0.0
    assert chk.gap <= 10 * chk.quad_error
