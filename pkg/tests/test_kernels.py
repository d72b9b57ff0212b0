import numpy as np
import pytest

from nlreg.errors import ParameterOutOfRange, TailNotIntegrable
from nlreg.increments import GridFunction
from nlreg.kernels import (Weight, frac_laplacian_kernel, holder_coefficient_kernel,
                           truncated_kernel, verify_bounds, verify_holder, weighted_l1_norm)


def smooth_coef(x, y):
    return 2.0 + np.sin(x + y) * np.exp(-(x * x + y * y))


def step_coef(x, y):
    return np.where(x + y > 0, 2.0, 1.0)


@pytest.mark.parametrize("s", [0.0, 1.0, -0.2, 1.5])
def test_s_out_of_range(s):
    with pytest.raises(ParameterOutOfRange):
        frac_laplacian_kernel(s)


def test_truncated_needs_unit_cutoff():
    with pytest.raises(ParameterOutOfRange):
        truncated_kernel(0.5, 0.5)


def test_diagonal_is_infinite():
    K = frac_laplacian_kernel(0.3)
    assert np.isinf(K(0.2, 0.2))
    assert K(0.0, 2.0) == pytest.approx(2.0**-1.6)


@pytest.mark.parametrize("K", [frac_laplacian_kernel(0.25), truncated_kernel(0.7, 2.0),
                               holder_coefficient_kernel(0.5, smooth_coef, 1.0, 3.0, 4.0)])
def test_bounds_pass(K):
    rep = verify_bounds(K, 20_000, seed=1)
    assert rep.passed
    assert K.lam * (1 - 1e-12) <= rep.near_min <= rep.near_max <= K.Lam * (1 + 1e-12)


def test_bounds_flag_wrong_constants():
    K = holder_coefficient_kernel(0.5, smooth_coef, 1.5, 3.0, 4.0)
    assert verify_bounds(K, 20_000, seed=1).violations > 0


@pytest.mark.parametrize("K", [frac_laplacian_kernel(0.6), truncated_kernel(0.3, 1.0)])
def test_translation_invariant_holder_is_zero(K):
    rep = verify_holder(K, 20_000)
    assert rep.estimate == 0.0
    assert rep.passed


def test_holder_estimate_close_to_analytic():
    a = lambda x, y: 2.0 + np.sin(x + y)
    K = holder_coefficient_kernel(0.5, a, 1.0, 3.0, 2.0)
    rep = verify_holder(K, 100_000, seed=0)
    # sup |sin(u + 2z) - sin(u)| / |z|^(1/2) over |z| < 1 is about 1.683
    assert 1.6 < rep.estimate < 1.684
    assert rep.passed


def test_discontinuous_coefficient_flagged():
    K = holder_coefficient_kernel(0.5, step_coef, 1.0, 2.0, 10.0)
    rep = verify_holder(K, 100_000, seed=0)
    assert rep.diverging and not rep.passed


def test_weighted_l1_of_one_is_pi():
    u = GridFunction.from_function(np.ones_like, -1, 1, 8, exterior="tail")
    assert weighted_l1_norm(u, Weight(0.0, 1.0)) == pytest.approx(np.pi, rel=1e-8)


def test_weighted_l1_rejects_heavy_tail():
    u = GridFunction.from_function(lambda x: np.abs(x) ** 1.5, -1, 1, 8, exterior="tail")
    with pytest.raises(TailNotIntegrable):
        weighted_l1_norm(u, Weight(0.0, 1.0))
