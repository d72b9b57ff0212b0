"""Hot loops with a numba backend and a pure-numpy fallback.

The backend is chosen once at import from ``NLREG_BACKEND`` (``numba`` by
default, ``numpy`` to force the fallback).  If numba cannot be imported the
numpy backend is used with a warning.
"""
import importlib
import logging
import os

import numpy as np

from . import _numpy

log = logging.getLogger(__name__)

_requested = os.environ.get("NLREG_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ImportError(f"NLREG_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

_numba = None
if _requested == "numba":
    try:
        _numba = importlib.import_module(__name__ + "._numba")
    except ImportError:  # pragma: no cover - depends on the environment
        log.warning("numba unavailable, using the numpy backend")

BACKEND = "numba" if _numba is not None else "numpy"


def backends():
    """Names of the importable backends."""
    return ["numba", "numpy"] if _numba is not None else ["numpy"]


def _impl(backend):
    backend = backend or BACKEND
    if backend == "numba":
        if _numba is None:
            raise RuntimeError("numba backend not available")
        return _numba
    return _numpy


def difference_lp(m0, h, values, A, B, z, coeffs, p, backend=None):
    """∫_A^B |Σ_i coeffs[i] u(x + i z)|**p dx, u the zero-extended P1 function."""
    impl = _impl(backend)
    return float(impl.difference_lp(float(m0), float(h), np.ascontiguousarray(values, dtype=float),
                                    float(A), float(B), float(z),
                                    np.ascontiguousarray(coeffs, dtype=float), float(p)))


_jit_cache = {}


def _jitted(coef):
    """Compile a scalar coefficient callable with numba, or return None."""
    key = id(coef)
    if key in _jit_cache:
        return _jit_cache[key][1]
    from numba import njit

    try:
        fn = coef if hasattr(coef, "py_func") else njit(coef)
        fn(0.25, 0.5)
    except Exception:  # numba raises a variety of typing errors
        log.info("coefficient %r is not numba-compilable, using numpy loop", coef)
        fn = None
    _jit_cache[key] = (coef, fn)
    return fn


def pair_loop(n_el, a0, h, m_list, rule_off, rx, rd, P, node_off, coef, A, backend=None):
    """Add Σ_pts coef(x, y) P[pt] into A for every element pair (e, e + m)."""
    impl = _impl(backend)
    if impl is _numba:
        fn = _jitted(coef)
        if fn is None:
            impl = _numpy
        else:
            coef = fn
    impl.pair_loop(int(n_el), float(a0), float(h), np.asarray(m_list, dtype=np.int64),
                   np.asarray(rule_off, dtype=np.int64), rx, rd, P,
                   np.asarray(node_off, dtype=np.int64), coef, A)
    return A


def ball_mc_count(R, z, lo, hi, samples, seed, backend=None):
    """Number of box samples falling in B_R(0) Δ B_R(z)."""
    impl = _impl(backend)
    return int(impl.ball_mc_count(float(R), np.asarray(z, dtype=float), np.asarray(lo, dtype=float),
                                  np.asarray(hi, dtype=float), int(samples), int(seed)))
