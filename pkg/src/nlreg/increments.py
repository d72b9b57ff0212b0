"""Finite differences on translated domains, plus the ball geometry they need.

Conventions: τ_z u(x) = u(x + z), Δ_z u = τ_z u - u and
Δ_z^k u = Σ_i (-1)^(k-i) C(k, i) τ_{iz} u.  For a domain U,
U_{kz} = {x ∈ U : x + i z ∈ U for i = 1..k} is where Δ_z^k u only sees U.
"""
from dataclasses import dataclass, field
from math import comb, gamma, pi, sqrt, acos
from typing import Callable, Optional, Sequence

import numpy as np

from . import hot
from .errors import ShiftTooLarge, SupportViolation
from .quadrature import double_integral, gauss_legendre

__all__ = [
    "Domain1D",
    "shrink_domain",
    "ZeroOutside",
    "ClosedFormTail",
    "GridFunction",
    "binomial_weights",
    "difference",
    "difference_eval",
    "difference_lp",
    "Ball",
    "ball_defect",
    "ball_defect_bound",
    "ball_defect_mc",
    "PartsCheck",
    "discrete_parts_check",
]


@dataclass(frozen=True)
class Domain1D:
    """Open interval (lo, hi); lo == hi encodes the empty set."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)):
            raise ValueError("domain endpoints must be finite")
        if self.hi < self.lo:
            raise ValueError(f"invalid domain ({self.lo}, {self.hi})")

    @property
    def is_empty(self) -> bool:
        return self.hi <= self.lo

    @property
    def length(self) -> float:
        return max(self.hi - self.lo, 0.0)

    def issubset(self, other: "Domain1D") -> bool:
        if self.is_empty:
            return True
        return other.lo <= self.lo and self.hi <= other.hi

    def __contains__(self, x):
        return self.lo < x < self.hi


def shrink_domain(U: Domain1D, z: float, k: int) -> Domain1D:
    """U_{kz}: points of U whose translates by z, 2z, ..., kz stay in U."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    if U.is_empty:
        return U
    lo, hi = U.lo, U.hi
    if z >= 0:
        hi = U.hi - k * z
    else:
        lo = U.lo - k * z
    if hi <= lo:
        return Domain1D(U.lo, U.lo)
    return Domain1D(lo, hi)


class ZeroOutside:
    """Exterior rule u = 0 off the mesh."""

    def __call__(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def __repr__(self):
        return "ZeroOutside()"


@dataclass(frozen=True)
class ClosedFormTail:
    """Exterior rule given by an explicit vectorized formula."""

    formula: Callable

    def __call__(self, x):
        return np.asarray(self.formula(np.asarray(x, dtype=float)), dtype=float)


class GridFunction:
    """Nodal values on a uniform mesh of [lo, hi], P1 in between, exterior rule outside.

    ``closed_form`` optionally carries the exact function the values were
    sampled from; only pointwise operators that need more than P1 accuracy
    (the principal-value evaluator) look at it.
    """

    def __init__(self, lo, hi, values, exterior=None, closed_form=None):
        values = np.array(values, dtype=float)
        if values.ndim != 1 or values.size < 2:
            raise ValueError("need at least two nodal values")
        if not np.all(np.isfinite(values)):
            raise ValueError("nodal values must be finite")
        if not hi > lo:
            raise ValueError("mesh needs lo < hi")
        values.setflags(write=False)
        self.lo = float(lo)
        self.hi = float(hi)
        self.values = values
        self.exterior = exterior if exterior is not None else ZeroOutside()
        self.closed_form = closed_form

    @classmethod
    def from_function(cls, f, lo, hi, n_intervals, exterior="zero", keep_closed_form=True):
        """Sample f at n_intervals + 1 nodes; exterior is "zero" or "tail" (f itself)."""
        x = np.linspace(lo, hi, int(n_intervals) + 1)
        vals = np.asarray(f(x), dtype=float)
        if exterior == "zero":
            ext = ZeroOutside()
        elif exterior == "tail":
            ext = ClosedFormTail(f)
        else:
            ext = exterior
        return cls(lo, hi, vals, ext, f if keep_closed_form else None)

    @property
    def n_intervals(self) -> int:
        return self.values.size - 1

    @property
    def h(self) -> float:
        return (self.hi - self.lo) / self.n_intervals

    @property
    def nodes(self):
        return np.linspace(self.lo, self.hi, self.values.size)

    @property
    def domain(self) -> Domain1D:
        return Domain1D(self.lo, self.hi)

    @property
    def zero_exterior(self) -> bool:
        return isinstance(self.exterior, ZeroOutside)

    def evaluate(self, x):
        """Global evaluation: P1 interpolation on the mesh, exterior rule elsewhere."""
        x = np.asarray(x, dtype=float)
        inside = (x >= self.lo) & (x <= self.hi)
        out = hot._numpy.interp_zero(self.lo, self.h, self.values, x)
        if self.zero_exterior:
            return out
        if np.all(inside):
            return out
        return np.where(inside, out, self.exterior(np.where(inside, self.lo - 1.0, x)))

    __call__ = evaluate

    def exact(self, x):
        """The closed form when available, else the global evaluation."""
        if self.closed_form is not None:
            return np.asarray(self.closed_form(np.asarray(x, dtype=float)), dtype=float)
        return self.evaluate(x)

    def scaled(self, c):
        ext = self.exterior
        if not self.zero_exterior:
            ext = ClosedFormTail(lambda x, e=ext: c * e(x))
        cf = None if self.closed_form is None else (lambda x, g=self.closed_form: c * g(x))
        return GridFunction(self.lo, self.hi, c * self.values, ext, cf)

    def support(self):
        """Closed hull of the P1 support on the mesh (None if identically zero)."""
        nz = np.flatnonzero(self.values != 0.0)
        if nz.size == 0:
            return None
        h = self.h
        return (self.lo + max(nz[0] - 1, 0) * h, self.lo + min(nz[-1] + 1, self.n_intervals) * h)

    def __repr__(self):
        return (f"GridFunction([{self.lo}, {self.hi}], n_intervals={self.n_intervals}, "
                f"exterior={self.exterior!r})")


def binomial_weights(k: int):
    """Coefficients c_i with Δ_z^k u = Σ c_i τ_{iz} u."""
    return np.array([(-1) ** (k - i) * comb(k, i) for i in range(k + 1)], dtype=float)


def difference_eval(u: GridFunction, z: float, k: int, x, recursive: bool = False):
    """Δ_z^k u at x via the binomial formula, or via Δ_z(Δ_z^{k-1} u)."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    x = np.asarray(x, dtype=float)
    if recursive:
        if k == 0:
            return u.evaluate(x)
        return difference_eval(u, z, k - 1, x + z, True) - difference_eval(u, z, k - 1, x, True)
    out = np.zeros_like(x)
    for i, c in enumerate(binomial_weights(k)):
        out = out + c * u.evaluate(x + i * z)
    return out


def difference(u: GridFunction, z: float, k: int) -> GridFunction:
    """Δ_z^k u sampled on a mesh of U_{kz} (U the mesh of u).

    The returned object carries the exact increment as its closed form and
    exterior rule, so evaluation off its own nodes is still exact.
    """
    U = shrink_domain(u.domain, z, k)
    exact = lambda x: difference_eval(u, z, k, x)
    if U.is_empty:
        return GridFunction(u.lo, u.lo + u.h, np.zeros(2), ClosedFormTail(exact), exact)
    n = max(int(np.ceil(U.length / u.h - 1e-9)), 1)
    return GridFunction.from_function(exact, U.lo, U.hi, n, exterior=ClosedFormTail(exact))


def _generic_difference_lp(u, A, B, z, coeffs, p, q=8):
    l = coeffs.size - 1
    nodes = u.nodes
    cuts = [np.array([A, B])]
    for i in range(l + 1):
        cuts.append(nodes - i * z)
    b = np.unique(np.concatenate(cuts))
    b = b[(b >= A) & (b <= B)]
    # subdivide long pieces (the exterior formula need not be linear)
    pieces = []
    step = max(u.h, (B - A) / 256.0)
    for lo, hi in zip(b[:-1], b[1:]):
        m = max(int(np.ceil((hi - lo) / step)), 1)
        pieces.append(np.linspace(lo, hi, m + 1))
    b = np.unique(np.concatenate(pieces))
    t, w = gauss_legendre(q)
    lo, length = b[:-1], np.diff(b)
    x = lo[:, None] + length[:, None] * t[None, :]
    val = np.zeros_like(x)
    for i, c in enumerate(coeffs):
        val += c * u.evaluate(x + i * z)
    return float(np.sum(np.abs(val) ** p * (length[:, None] * w[None, :])))


def difference_lp(u: GridFunction, U: Domain1D, z: float, l: int, p: float, backend=None) -> float:
    """‖Δ_z^l u‖_{L^p(U_{lz})}**p.

    Exact for the P1 part (piecewise-linear integrands are integrated in
    closed form); exterior formulas are integrated by Gauss-Legendre.
    """
    V = shrink_domain(U, z, l)
    if V.is_empty:
        return 0.0
    A, B = V.lo, V.hi
    coeffs = binomial_weights(l)
    reach_lo = A + min(0.0, l * z)
    reach_hi = B + max(0.0, l * z)
    if u.zero_exterior or (reach_lo >= u.lo and reach_hi <= u.hi):
        return hot.difference_lp(u.lo, u.h, u.values, A, B, z, coeffs, p, backend=backend)
    return _generic_difference_lp(u, A, B, z, coeffs, p)


# ---------------------------------------------------------------- balls


@dataclass(frozen=True)
class Ball:
    center: Sequence[float]
    radius: float

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.center, dtype=float))
        if c.size not in (1, 2, 3):
            raise ValueError("only dimensions 1, 2, 3 are supported")
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        object.__setattr__(self, "center", c)

    @property
    def dim(self) -> int:
        return self.center.size

    @property
    def volume(self) -> float:
        n = self.dim
        return pi ** (n / 2) / gamma(n / 2 + 1) * self.radius**n


def _shift(B, z):
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if z.size != B.dim:
        raise ValueError("shift dimension does not match the ball")
    return z


def ball_defect(B: Ball, z) -> float:
    """Lebesgue measure of B Δ (B + z), in closed form."""
    z = _shift(B, z)
    d = float(np.linalg.norm(z))
    R = B.radius
    if d >= 2 * R:
        return 2.0 * B.volume
    if B.dim == 1:
        inter = 2 * R - d
    elif B.dim == 2:
        inter = 2 * R * R * acos(d / (2 * R)) - 0.5 * d * sqrt(4 * R * R - d * d)
    else:
        inter = pi * (4 * R + d) * (2 * R - d) ** 2 / 12.0
    return max(2.0 * (B.volume - inter), 0.0)


def ball_defect_bound(B: Ball, z) -> float:
    """C R^(n-1) |z| with C = 2 |∂B_1| (4, 4π and 8π for n = 1, 2, 3)."""
    z = _shift(B, z)
    n = B.dim
    sphere = 2 * pi ** (n / 2) / gamma(n / 2)
    return 2.0 * sphere * B.radius ** (n - 1) * float(np.linalg.norm(z))


def ball_defect_mc(B: Ball, z, samples: int = 10**6, seed: int = 0, backend=None):
    """Monte Carlo estimate of |B Δ (B + z)| and its standard error."""
    z = _shift(B, z)
    R = B.radius
    lo = np.minimum(-R, z - R)
    hi = np.maximum(R, z + R)
    box = float(np.prod(hi - lo))
    hits = hot.ball_mc_count(R, z, lo, hi, samples, seed, backend=backend)
    frac = hits / samples
    return box * frac, box * sqrt(frac * (1 - frac) / samples)


# ------------------------------------------------ discrete integration by parts


@dataclass
class PartsCheck:
    """Both sides of the discrete integration-by-parts identity.

    Unpacks as (lhs, rhs, gap); ``terms`` holds the three right-hand groups
    and ``quad_error`` the estimated quadrature error of ``gap``.
    """

    lhs: float
    rhs: float
    gap: float
    quad_error: float = 0.0
    terms: tuple = field(default=(0.0, 0.0, 0.0))

    def __iter__(self):
        return iter((self.lhs, self.rhs, self.gap))


def _parts_terms(u, v, K, R, z, c, q):
    s = K.s
    alpha = 1.0 - 2.0 * s
    w2 = binomial_weights(2)
    r8 = (c - 8 * R, c + 8 * R)
    r6 = (c - 6 * R, c + 6 * R)
    kinks = [np.array([r8[0], r8[1], r6[0], r6[1]])]
    for g in (u, v):
        nd = g.nodes
        for i in range(-2, 3):
            kinks.append(nd + i * z)
        for i in range(3):
            kinks.append(np.array([r6[0] + i * z, r6[1] + i * z]))

    def panels(lo, hi):
        b = np.unique(np.concatenate(kinks))
        b = b[(b > lo) & (b < hi)]
        b = np.concatenate([[lo], b, [hi]])
        # merge slivers, they only cost points
        keep = np.concatenate([[True], np.diff(b) > 1e-12 * (hi - lo)])
        return b[keep]

    def d2v(x):
        return sum(w * v.evaluate(x - i * z) for i, w in enumerate(w2))

    def d2u(x):
        return sum(w * u.evaluate(x + i * z) for i, w in enumerate(w2))

    K_ = K.evaluate

    lhs = double_integral(
        lambda x, y: (u(x) - u(y)) * (d2v(x) - d2v(y)) * K_(x, y),
        panels(*r8), alpha, q=q, cutoff=K.cutoff)
    t1 = double_integral(
        lambda x, y: (d2u(x) - d2u(y)) * (v(x) - v(y)) * K_(x, y),
        panels(*r6), alpha, q=q, cutoff=K.cutoff)
    if K.translation_invariant:
        t2 = 0.0
    else:
        t2 = 0.0
        for i in (1, 2):
            sh = i * z
            t2 += (-1) ** i * comb(2, i) * double_integral(
                lambda x, y, sh=sh: (u(x + sh) - u(y + sh)) * (v(x) - v(y))
                * (K_(x + sh, y + sh) - K_(x, y)),
                panels(*r6), alpha, q=q, cutoff=K.cutoff)
    t3 = 0.0
    for i in range(3):
        sh = i * z

        def G(x, y, sh=sh):
            outside = (x <= r6[0] + sh) | (x >= r6[1] + sh)
            return np.where(outside, (u(x) - u(y)) * v(y - sh) * K_(x, y), 0.0)

        t3 += -2.0 * (-1) ** i * comb(2, i) * double_integral(
            G, panels(*r8), 0.0, q=q, cutoff=K.cutoff, symmetric=False)
    return lhs, (t1, t2, t3)


def discrete_parts_check(u: GridFunction, v: GridFunction, K, R: float, z: float,
                         center: float = 0.0, q: int = 8) -> PartsCheck:
    """Evaluate both sides of the second-order discrete integration by parts.

    Left:  ∫∫_{B8R} (u(x)-u(y)) (Δ_{-z}²v(x) - Δ_{-z}²v(y)) K.
    Right: the Δ_z²u pairing over B6R, the kernel-increment corrections
    Σ_{i=1,2} (-1)^i C(2,i) ∫∫_{B6R} (τ_{iz}u(x)-τ_{iz}u(y))(v(x)-v(y)) Δ_{iz}K,
    and the far terms -2 Σ_{i=0..2} (-1)^i C(2,i) ∫∫_{B8R} (u(x)-u(y))
    1[x ∉ B6R + iz] v(y - iz) K.  Balls are centred at ``center``.
    """
    if abs(z) >= R:
        raise ShiftTooLarge(f"|z| = {abs(z)} must be below R = {R}")
    if not v.zero_exterior:
        raise SupportViolation("v needs the zero exterior rule")
    sup = v.support()
    tol = 1e-12 * max(R, 1.0)
    if sup is not None and (sup[0] < center - 2 * R - tol or sup[1] > center + 2 * R + tol):
        raise SupportViolation(f"v is supported on {sup}, outside B_2R = "
                               f"({center - 2 * R}, {center + 2 * R})")
    if z == 0.0:
        return PartsCheck(0.0, 0.0, 0.0, 0.0, (0.0, 0.0, 0.0))
    lhs, terms = _parts_terms(u, v, K, R, z, center, q)
    lhs2, terms2 = _parts_terms(u, v, K, R, z, center, q + 4)
    rhs, rhs2 = sum(terms), sum(terms2)
    scale = abs(lhs) + sum(abs(t) for t in terms)
    err = abs(lhs - lhs2) + abs(rhs - rhs2) + 64 * np.finfo(float).eps * scale
    return PartsCheck(lhs2, rhs2, abs(lhs2 - rhs2), err, tuple(terms2))
