"""Jump kernels K(x, y) on the line and sampling checks of their structural bounds.

A kernel is admissible with constants (s, λ, Λ, β, M, Γ) when

    λ ≤ |x-y|^(1+2s) K(x, y) ≤ Λ          for |x - y| < 1,
    0 ≤ |x-y|^(1+β) K(x, y) ≤ M            for |x - y| ≥ 1,
    |x-y|^(1+2s) |K(x+z, y+z) - K(x, y)| ≤ Γ |z|^s   for |x-y|, |z| < 1.
"""
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy import integrate

from .errors import ParameterOutOfRange, TailNotIntegrable
from .quadrature import gauss_legendre

__all__ = [
    "KernelSpec",
    "Weight",
    "frac_laplacian_kernel",
    "truncated_kernel",
    "holder_coefficient_kernel",
    "BoundsReport",
    "HolderReport",
    "verify_bounds",
    "verify_holder",
    "weighted_l1_norm",
]


def _unit(x, y):
    return 1.0 + 0.0 * (x + y)


@dataclass(frozen=True)
class KernelSpec:
    """Kernel evaluator plus its declared constants.

    ``coefficient`` is the factor a(x, y) in K = a(x, y) |x-y|^(-1-2s) (kept
    separately because the assembly loop integrates the power exactly);
    ``cutoff`` marks kernels that vanish for |x - y| ≥ cutoff.
    """

    s: float
    lam: float
    Lam: float
    beta: float
    M: float
    Gamma: float
    evaluator: Callable
    translation_invariant: bool
    name: str = "custom"
    coefficient: Optional[Callable] = None
    cutoff: Optional[float] = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 < self.s < 1.0:
            raise ParameterOutOfRange(f"s = {self.s} outside (0, 1)")
        if not 0.0 < self.lam <= self.Lam:
            raise ParameterOutOfRange("need 0 < lam <= Lam")
        if not self.beta > 0.0 or self.M < 0.0 or self.Gamma < 0.0:
            raise ParameterOutOfRange("need beta > 0, M >= 0, Gamma >= 0")

    def evaluate(self, x, y):
        """K(x, y); +inf on the diagonal."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            k = np.asarray(self.evaluator(x, y), dtype=float)
        return np.where(x == y, np.inf, k)

    __call__ = evaluate

    def coefficient_or_unit(self):
        return self.coefficient if self.coefficient is not None else _unit


@dataclass(frozen=True)
class Weight:
    """w(x) = 1 / (1 + |x - x0|^(1+β))."""

    x0: float
    beta: float

    def __post_init__(self):
        if not self.beta > 0:
            raise ParameterOutOfRange("weight exponent must be positive")

    def __call__(self, x):
        return 1.0 / (1.0 + np.abs(np.asarray(x, dtype=float) - self.x0) ** (1.0 + self.beta))


def _check_s(s):
    if not 0.0 < s < 1.0:
        raise ParameterOutOfRange(f"s = {s} outside (0, 1)")


def frac_laplacian_kernel(s: float) -> KernelSpec:
    """K = |x-y|^(-1-2s)."""
    _check_s(s)
    p = -1.0 - 2.0 * s
    return KernelSpec(s, 1.0, 1.0, 2.0 * s, 1.0, 0.0,
                      lambda x, y: np.abs(x - y) ** p, True, name="fractional",
                      params={"s": s})


def truncated_kernel(s: float, cutoff: float) -> KernelSpec:
    """|x-y|^(-1-2s) for |x-y| < cutoff, zero beyond."""
    _check_s(s)
    if not cutoff >= 1.0:
        raise ParameterOutOfRange("cutoff must be at least 1")
    p = -1.0 - 2.0 * s
    c = float(cutoff)

    def ev(x, y):
        d = np.abs(x - y)
        return np.where(d < c, d ** p, 0.0)

    return KernelSpec(s, 1.0, 1.0, 2.0 * s, 1.0, 0.0, ev, True, name="truncated",
                      cutoff=c, params={"s": s, "cutoff": c})


def holder_coefficient_kernel(s: float, a: Callable, lam: float, Lam: float,
                              Gamma: float = np.inf, name: str = "holder") -> KernelSpec:
    """K = a(x, y) |x-y|^(-1-2s) with a symmetric, λ ≤ a ≤ Λ.

    `a` must accept numpy arrays; when it is also numba-compilable the fast
    assembly loop is used.  Γ is the declared joint Hölder constant of a.
    """
    _check_s(s)
    p = -1.0 - 2.0 * s
    return KernelSpec(s, lam, Lam, 2.0 * s, Lam, float(Gamma),
                      lambda x, y: a(x, y) * np.abs(x - y) ** p, False, name=name,
                      coefficient=a, params={"s": s})


# ---------------------------------------------------------------- sampling checks


class BoundsReport(NamedTuple):
    samples: int
    near_min: float
    near_max: float
    far_max: float
    far_min: float
    violations: int

    @property
    def passed(self) -> bool:
        return self.violations == 0


def verify_bounds(K: KernelSpec, samples: int = 10_000, seed: int = 0, rtol: float = 1e-12) -> BoundsReport:
    """Sample pairs at short range (|x-y| < 1) and long range and check the bounds.

    Short-range distances are log-uniform in (1e-8, 1), long-range ones in
    (1, 1e4); the reported extremes are the normalized values
    |x-y|^(1+2s) K and |x-y|^(1+β) K.
    """
    if samples < 1:
        raise ValueError("samples must be positive")
    rng = np.random.default_rng(seed)
    n_near = (samples + 1) // 2
    n_far = samples - n_near
    x = rng.uniform(-4.0, 4.0, samples)
    sign = rng.choice([-1.0, 1.0], samples)
    d = np.concatenate([10.0 ** rng.uniform(-8.0, 0.0, n_near), 10.0 ** rng.uniform(0.0, 4.0, n_far)])
    y = x + sign * d
    dist = np.abs(x - y)
    near = dist < 1.0
    k = K.evaluate(x, y)
    bad = ~np.isfinite(k) | (k < 0.0)
    rn = dist[near] ** (1 + 2 * K.s) * k[near]
    rf = dist[~near] ** (1 + K.beta) * k[~near]
    viol = int(np.count_nonzero(bad))
    viol += int(np.count_nonzero((rn < K.lam * (1 - rtol)) | (rn > K.Lam * (1 + rtol))))
    viol += int(np.count_nonzero(rf > K.M * (1 + rtol)))
    nan = float("nan")
    return BoundsReport(samples,
                        float(rn.min()) if rn.size else nan, float(rn.max()) if rn.size else nan,
                        float(rf.max()) if rf.size else nan, float(rf.min()) if rf.size else nan,
                        viol)


class HolderReport(NamedTuple):
    estimate: float
    coarse_estimate: float
    declared: float
    samples: int

    @property
    def diverging(self) -> bool:
        """True when 16x more samples raised the estimate by more than half."""
        if self.coarse_estimate == 0.0:
            return self.estimate > 0.0
        return self.estimate > 1.5 * self.coarse_estimate

    @property
    def passed(self) -> bool:
        return self.estimate <= self.declared * (1 + 1e-9) and not self.diverging


_LATTICE = 2.0**-24


def _quantize(v):
    return np.round(v / _LATTICE) * _LATTICE


def verify_holder(K: KernelSpec, samples: int = 10_000, seed: int = 0) -> HolderReport:
    """Sampled sup of |x-y|^(1+2s)|K(x+z,y+z) - K(x,y)| / |z|^s.

    Points live on a dyadic lattice so that translation is exact in floating
    point, which makes the estimate exactly 0 for translation-invariant
    kernels.  Distances and shifts are log-uniform in (2^-20, 1).
    """
    if samples < 1:
        raise ValueError("samples must be positive")
    rng = np.random.default_rng(seed)
    x = _quantize(rng.uniform(-2.0, 2.0, samples))
    d = _quantize(2.0 ** rng.uniform(-20.0, 0.0, samples) * rng.choice([-1.0, 1.0], samples))
    z = _quantize(2.0 ** rng.uniform(-20.0, 0.0, samples) * rng.choice([-1.0, 1.0], samples))
    d = np.where(np.abs(d) >= 1.0, np.sign(d) * (1.0 - _LATTICE), d)
    z = np.where(np.abs(z) >= 1.0, np.sign(z) * (1.0 - _LATTICE), z)
    y = x + d
    k0 = K.evaluate(x, y)
    k1 = K.evaluate(x + z, y + z)
    q = np.abs(d) ** (1 + 2 * K.s) * np.abs(k1 - k0) / np.abs(z) ** K.s
    coarse = max(samples // 16, 1)
    return HolderReport(float(q.max()), float(q[:coarse].max()), float(K.Gamma), samples)


# ---------------------------------------------------------------- weighted norms


def _abs_p1_integral(u, w, q=8):
    """∫_lo^hi |u_P1| w, splitting elements where u changes sign."""
    nodes, vals = u.nodes, u.values
    a, b = nodes[:-1], nodes[1:]
    va, vb = vals[:-1], vals[1:]
    cross = va * vb < 0
    root = np.where(cross, a + (b - a) * va / np.where(cross, va - vb, 1.0), b)
    lo = np.concatenate([a, root[cross]])
    hi = np.concatenate([root, b[cross]])
    t, wt = gauss_legendre(q)
    length = hi - lo
    x = lo[:, None] + length[:, None] * t[None, :]
    return float(np.sum(np.abs(u.evaluate(x)) * w(x) * length[:, None] * wt[None, :]))


def _tail_growth(f, start, direction):
    r1, r2 = 1e3 * max(1.0, abs(start)), 1e6 * max(1.0, abs(start))
    f1 = abs(float(f(np.array([direction * r1]))[0]))
    f2 = abs(float(f(np.array([direction * r2]))[0]))
    if f1 == 0.0 and f2 == 0.0:
        return -np.inf
    if f1 == 0.0 or not np.isfinite(f2):
        return np.inf
    return np.log(f2 / f1) / np.log(r2 / r1)


def weighted_l1_norm(u, w: Weight) -> float:
    """∫_R |u| w with the exterior rule handled by x = x0 + tan θ."""
    total = _abs_p1_integral(u, w)
    if u.zero_exterior:
        return total
    f = u.exterior
    for direction, (t0, t1) in ((-1, (-np.pi / 2, np.arctan(u.lo - w.x0))),
                                (1, (np.arctan(u.hi - w.x0), np.pi / 2))):
        if _tail_growth(f, u.lo if direction < 0 else u.hi, direction) >= w.beta - 1e-9:
            raise TailNotIntegrable("exterior grows at least as fast as the weight decays")

        def g(th):
            x = w.x0 + np.tan(th)
            return abs(float(f(np.array([x]))[0])) * float(w(x)) / np.cos(th) ** 2

        val, _ = integrate.quad(g, t0, t1, limit=200)
        if not np.isfinite(val):
            raise TailNotIntegrable("tail integral did not converge")
        total += val
    return total
