import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlreg.errors import DegenerateGap, ParameterOutOfRange
from nlreg.increments import Domain1D, GridFunction
from nlreg.seminorms import (besov, besov_far_part, embed_N_in_W, embed_W_in_N, gagliardo,
                             gagliardo_bruteforce, modulus_curve, modulus_of_smoothness, nikolskii,
                             restriction_bound)

SQRT23 = np.sqrt(2.0 / 3.0)


def x_plus(n=64):
    return GridFunction.from_function(lambda x: np.maximum(x, 0), -1, 1, n, exterior="tail")


@pytest.mark.parametrize("method", ["panel", "shifted", "bruteforce"])
def test_gagliardo_of_identity(method):
    # ∫_0^1∫_0^1 |x-y|^(2-2-1) ... = 1 at σ = 1/2
    u = GridFunction.from_function(lambda x: x, 0, 1, 4)
    assert gagliardo(u, u.domain, 0.5, method=method).value == pytest.approx(1.0, rel=1e-10)


@pytest.mark.parametrize("sigma", [0.1, 0.5, 0.9])
def test_gagliardo_routes_agree(sigma, rng):
    u = GridFunction(0, 1, rng.standard_normal(33))
    ref = gagliardo_bruteforce(u, u.domain, sigma).value
    assert gagliardo(u, u.domain, sigma).value == pytest.approx(ref, rel=1e-8)
    assert gagliardo(u, u.domain, sigma, method="shifted").value == pytest.approx(ref, rel=1e-8)


def test_gagliardo_constant_is_zero():
    u = GridFunction.from_function(np.ones_like, 0, 1, 8)
    assert gagliardo(u, u.domain, 0.3).value == pytest.approx(0.0, abs=1e-14)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.1, 10.0))
def test_gagliardo_homogeneous(c):
    u = GridFunction.from_function(np.sin, 0, 2, 12)
    a = gagliardo(u, u.domain, 0.4).value
    assert gagliardo(u.scaled(c), u.domain, 0.4).value == pytest.approx(c * a, rel=1e-10)


def test_gagliardo_rejects_bad_index():
    u = GridFunction.from_function(np.sin, 0, 1, 4)
    with pytest.raises(ParameterOutOfRange):
        gagliardo(u, u.domain, 1.2)


def test_nikolskii_of_x_plus():
    rep = nikolskii(x_plus(), Domain1D(-1, 1), 1.5)
    assert rep.value == pytest.approx(SQRT23, rel=1e-9)


def test_modulus_of_x_plus():
    etas = 2.0 ** -np.arange(1, 9)
    omega, _, _ = modulus_curve(x_plus(), Domain1D(-1, 1), 2, 2, etas)
    assert np.max(np.abs(omega / (SQRT23 * etas**1.5) - 1)) < 1e-6
    assert modulus_of_smoothness(x_plus(), Domain1D(-1, 1), 2, 2, 0.25) == pytest.approx(SQRT23 / 8, rel=1e-6)


def test_besov_first_order_is_gagliardo():
    w = GridFunction.from_function(lambda x: np.exp(-10 * x * x), -1, 1, 48)
    a = besov(w, w.domain, 0.4, 2, 2, l=1).value
    assert a == pytest.approx(gagliardo(w, w.domain, 0.4).value, rel=1e-8)


def test_besov_infinite_index_is_nikolskii():
    u = x_plus(32)
    assert besov(u, u.domain, 1.2, 2, np.inf).value == nikolskii(u, u.domain, 1.2).value


def test_far_part_bounded_by_restriction_bound():
    w = GridFunction.from_function(lambda x: np.exp(-10 * x * x), -1, 1, 48)
    assert besov_far_part(w, w.domain, 0.7, 2, 0.2) <= restriction_bound(w, w.domain, 0.7, 2, 0.2)


@pytest.mark.parametrize("alpha", [0.3, 0.6, 1.0, 1.4])
def test_embeddings_hold_on_powers(alpha):
    u = GridFunction.from_function(lambda x: np.where(x > 0, np.abs(x) ** alpha, 0.0), -1, 1, 128)
    assert embed_W_in_N(u, u.domain, 0.7).holds
    assert embed_N_in_W(u, u.domain, 0.7, 0.5).holds


def test_embedding_needs_gap():
    u = x_plus(16)
    with pytest.raises(DegenerateGap):
        embed_N_in_W(u, u.domain, 0.5, 0.5)
