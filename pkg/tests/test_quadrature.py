import numpy as np
import pytest

from nlreg.quadrature import (double_integral, far_order, gauss_legendre, integrate_panels,
                              singular_rule)


def test_gauss_legendre_exact_for_polynomials():
    t, w = gauss_legendre(6)
    for k in range(12):
        assert np.sum(w * t**k) == pytest.approx(1.0 / (k + 1), rel=1e-13)


@pytest.mark.parametrize("alpha", [-0.7, -0.2, 0.0, 0.5])
def test_singular_rule_integrates_weighted_monomials(alpha):
    t, w = singular_rule(10, alpha)
    for k in range(6):
        assert np.sum(w * t ** (k + alpha)) == pytest.approx(1.0 / (k + alpha + 1), rel=1e-12)


def test_singular_rule_rejects_nonintegrable_weight():
    with pytest.raises(ValueError):
        singular_rule(8, -1.0)


def test_integrate_panels():
    assert integrate_panels(np.sin, [0.0, 1.0, np.pi], 10) == pytest.approx(2.0, rel=1e-13)


@pytest.mark.parametrize("alpha", [-0.8, -0.4, 0.3])
def test_double_integral_of_distance_power(alpha):
    # ∫_0^1∫_0^1 |x-y|^α = 2 / ((α+1)(α+2))
    breaks = np.linspace(0.0, 1.0, 9)
    val = double_integral(lambda x, y: np.abs(x - y) ** alpha, breaks, alpha)
    assert val == pytest.approx(2.0 / ((alpha + 1) * (alpha + 2)), rel=1e-10)


def test_double_integral_with_cutoff():
    # |x-y|^-0.5 restricted to |x-y| < 0.3 on the unit square
    c, a = 0.3, -0.5
    G = lambda x, y: np.where(np.abs(x - y) < c, np.abs(x - y) ** a, 0.0)
    val = double_integral(G, np.linspace(0, 1, 7), a, cutoff=c)
    exact = 2 * (c ** (a + 1) / (a + 1) - c ** (a + 2) / (a + 2))
    assert val == pytest.approx(exact, rel=1e-10)


def test_far_order_decreases_with_separation():
    orders = [far_order(r) for r in (0.5, 2.0, 5.0, 20.0)]
    assert orders == sorted(orders, reverse=True)
