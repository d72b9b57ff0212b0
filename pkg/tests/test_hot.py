import os
import subprocess
import sys

import numpy as np
import pytest
from scipy.integrate import trapezoid

from nlreg import hot
from nlreg.increments import Ball, ball_defect, ball_defect_mc

BACKENDS = hot.backends()


def test_default_backend_is_numba():
    if "NLREG_BACKEND" not in os.environ:
        assert hot.BACKEND == "numba"


@pytest.mark.parametrize("value,expected", [("numpy", "numpy"), ("NumPy", "numpy"), ("numba", "numba")])
def test_env_selects_backend(value, expected):
    out = subprocess.run([sys.executable, "-c", "from nlreg import hot; print(hot.BACKEND)"],
                         env={**os.environ, "NLREG_BACKEND": value}, capture_output=True, text=True,
                         check=True)
    assert out.stdout.strip() == expected


def test_env_rejects_unknown_backend():
    out = subprocess.run([sys.executable, "-c", "import nlreg.hot"],
                         env={**os.environ, "NLREG_BACKEND": "fortran"}, capture_output=True, text=True)
    assert out.returncode != 0 and "NLREG_BACKEND" in out.stderr


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 3.0])
@pytest.mark.parametrize("l", [1, 2, 3])
def test_difference_lp_matches_fine_quadrature(backend, p, l, rng):
    vals = rng.standard_normal(21)
    coeffs = np.array([1.0, -1.0]) if l == 1 else (np.array([1.0, -2.0, 1.0]) if l == 2
                                                    else np.array([-1.0, 3.0, -3.0, 1.0]))
    A, B, z = -0.2, 0.7, 0.113
    got = hot.difference_lp(0.0, 0.05, vals, A, B, z, coeffs, p, backend=backend)
    x = np.linspace(A, B, 400_001)
    f = sum(c * hot._numpy.interp_zero(0.0, 0.05, vals, x + i * z) for i, c in enumerate(coeffs))
    assert got == pytest.approx(trapezoid(np.abs(f) ** p, x), rel=1e-6)


def _pair_inputs(n_el=10, q=3):
    rng = np.random.default_rng(0)
    m_list = np.array([0, 1, 3])
    npts = q * len(m_list)
    rule_off = np.arange(0, npts + 1, q)
    rx = rng.uniform(0, 0.1, npts)
    rd = rng.uniform(-0.1, 0.3, npts)
    P = rng.standard_normal((npts, 4, 4))
    node_off = np.array([[0, 1, 0, 1], [0, 1, 1, 2], [0, 1, 3, 4]])
    return n_el, m_list, rule_off, rx, rd, P, node_off


def coef(x, y):
    return 2.0 + np.sin(x + y) * np.exp(-(x * x + y * y))


@pytest.mark.parametrize("backend", BACKENDS)
def test_pair_loop_matches_reference(backend):
    n_el, m_list, rule_off, rx, rd, P, node_off = _pair_inputs()
    A = np.zeros((n_el + 1, n_el + 1))
    hot.pair_loop(n_el, -1.0, 0.1, m_list, rule_off, rx, rd, P, node_off, coef, A, backend=backend)
    ref = np.zeros_like(A)
    for k, m in enumerate(m_list):
        for e in range(n_el - m):
            for pt in range(rule_off[k], rule_off[k + 1]):
                x = -1.0 + e * 0.1 + rx[pt]
                c = coef(x, x + rd[pt])
                for a in range(4):
                    for b in range(4):
                        ref[e + node_off[k, a], e + node_off[k, b]] += c * P[pt, a, b]
    assert np.allclose(A, ref, rtol=1e-13, atol=1e-13)


def test_pair_loop_falls_back_for_uncompilable_coefficient():
    n_el, m_list, rule_off, rx, rd, P, node_off = _pair_inputs()
    weird = lambda x, y, table={}: 1.0 + 0.0 * x  # default dict arg defeats numba
    A = np.zeros((n_el + 1, n_el + 1))
    hot.pair_loop(n_el, -1.0, 0.1, m_list, rule_off, rx, rd, P, node_off, weird, A)
    B = np.zeros_like(A)
    hot.pair_loop(n_el, -1.0, 0.1, m_list, rule_off, rx, rd, P, node_off, weird, B, backend="numpy")
    assert np.array_equal(A, B)


@pytest.mark.parametrize("backend", BACKENDS)
def test_ball_mc_deterministic_and_unbiased(backend):
    B = Ball([0.0, 0.0], 1.0)
    a = ball_defect_mc(B, [0.4, 0.1], 400_000, seed=5, backend=backend)
    b = ball_defect_mc(B, [0.4, 0.1], 400_000, seed=5, backend=backend)
    assert a == b
    assert abs(a[0] - ball_defect(B, [0.4, 0.1])) < 5 * a[1]
