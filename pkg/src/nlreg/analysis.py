"""Empirical checks of interior regularity: pointwise PV evaluation, the
Caccioppoli ratio, Nikol'skii exponent fits and the half-line counterexample
u(t) = t_+^s whose second-order energy diverges.
"""
from dataclasses import dataclass, field
from math import gamma, pi
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate
from scipy.special import roots_jacobi, roots_legendre

from .errors import (BallNotCompactlyContained, ParameterOutOfRange, PVDivergence,
                     QuadratureFailure, WindowTooNarrow)
from .increments import Domain1D, GridFunction, difference_lp
from .kernels import KernelSpec, Weight, weighted_l1_norm
from .seminorms import _lp_norm, gagliardo

__all__ = [
    "half_line_power",
    "pointwise_frac_laplacian",
    "profile_frac_laplacian_2d",
    "varpi_constant",
    "CaccioppoliReport",
    "caccioppoli_check",
    "ExponentFit",
    "fit_regularity_exponent",
    "truncated_energy",
    "energy_lower_bound",
    "CounterexampleReport",
    "counterexample_suite",
]

_QUAD = dict(epsabs=1e-13, epsrel=1e-11, limit=400)


def half_line_power(s: float) -> Callable:
    """t ↦ t_+^s, vectorized."""
    def f(t):
        t = np.asarray(t, dtype=float)
        return np.where(t > 0.0, np.abs(t) ** s, 0.0)
    return f


# ---------------------------------------------------------------- principal values


def _as_pointwise(u, breakpoints):
    """Scalar-friendly evaluator plus the points where it may fail to be smooth."""
    pts = [float(b) for b in (breakpoints or ())]
    if isinstance(u, GridFunction):
        if u.closed_form is None:
            f = u.evaluate
            pts += list(u.nodes)
        else:
            cf, ext, lo, hi = u.closed_form, u.exterior, u.lo, u.hi

            def f(y):
                y = np.asarray(y, dtype=float)
                inside = (y >= lo) & (y <= hi)
                return np.where(inside, cf(np.clip(y, lo, hi)), ext(np.where(inside, lo - 1.0, y)))
            pts += [u.lo, u.hi]
        tail = 0.0 if u.zero_exterior else None
        reach = max(abs(u.lo), abs(u.hi))
    else:
        f = u
        tail, reach = None, 0.0
    return f, np.unique(pts), tail, reach


def _scalar(f, y):
    return float(np.asarray(f(np.array([y], dtype=float)))[0])


def pointwise_frac_laplacian(u, x: float, s: float, breakpoints: Sequence[float] = (),
                             q: int = 40) -> float:
    """2 ∫_0^∞ (2u(x) - u(x+r) - u(x-r)) r^(-1-2s) dr.

    `u` is a GridFunction (its closed form is used when present) or a
    vectorized callable; `breakpoints` lists points where u is not smooth.
    The integral splits at r0/2, r0 the distance to the nearest breakpoint:
    below it a Gauss-Jacobi rule absorbs the r^(1-2s) weight, above it
    adaptive quadrature runs between breakpoint distances.  For zero-exterior
    grid functions the tail beyond the mesh is integrated in closed form.
    """
    if not 0.0 < s < 1.0:
        raise ParameterOutOfRange("s must lie in (0, 1)")
    x = float(x)
    f, pts, tail, reach = _as_pointwise(u, breakpoints)
    ux = _scalar(f, x)

    def D(r):
        r = np.asarray(r, dtype=float)
        return 2.0 * ux - f(x + r) - f(x - r)

    dist = np.abs(pts - x)
    at_kink = bool(np.any(dist < 1e-14 * max(1.0, abs(x))))
    far = dist[dist >= 1e-14 * max(1.0, abs(x))]
    r0 = float(far.min()) if far.size else 1.0

    # divergence probe: r |integrand| must decay toward r = 0
    ra, rb = r0 * 2.0**-4, r0 * 2.0**-16
    qa, qb = abs(float(D(ra))) * ra ** (-2 * s), abs(float(D(rb))) * rb ** (-2 * s)
    noise = 64 * np.finfo(float).eps * (abs(ux) + 1.0) * rb ** (-2 * s)
    if (at_kink and s >= 0.5) or (qb > max(0.5 * qa, noise)):
        raise PVDivergence(f"integrand not integrable at r = 0 for x = {x}")

    # near part on (0, r0/2]
    c = 0.5 * r0
    alpha = -2.0 * s if at_kink else 1.0 - 2.0 * s
    t, w = roots_jacobi(q, 0.0, alpha)
    r = c * (t + 1.0) / 2.0
    with np.errstate(invalid="ignore", divide="ignore"):
        g = D(r) / (r if at_kink else r * r)
    near = float(np.sum(w * g)) * (c / 2.0) ** (1.0 + alpha)

    # far part between breakpoint distances
    grid = np.unique(np.concatenate([[c], far[far > c]]))
    R = max(grid[-1], reach + abs(x), 1.0) * 2.0
    grid = np.append(grid, R)
    integrand = lambda r: float(D(r)) * r ** (-1.0 - 2.0 * s)
    mid = 0.0
    for a, b in zip(grid[:-1], grid[1:]):
        if b > a:
            mid += integrate.quad(integrand, a, b, **_QUAD)[0]
    if tail is not None:
        mid += 2.0 * ux * R ** (-2.0 * s) / (2.0 * s)
    else:
        val, _ = integrate.quad(integrand, R, np.inf, **_QUAD)
        if not np.isfinite(val):
            raise PVDivergence("tail integral does not converge")
        mid += val
    return 2.0 * (near + mid)


def profile_frac_laplacian_2d(mu: Callable, t: float, s: float, breakpoints: Sequence[float] = (),
                              q: int = 24) -> float:
    """The planar operator 2 PV ∫_{R²} (U(X) - U(Y)) |X-Y|^(-2-2s) dY at X = (0, t), U(y1, y2) = mu(y2).

    Integrated in polar coordinates around X (radius outer, angle inner) with
    no reduction to one dimension, so it checks the factorization
    independently.
    """
    if not 0.0 < s < 1.0:
        raise ParameterOutOfRange("s must lie in (0, 1)")
    t = float(t)
    mt = _scalar(mu, t)
    dists = np.array(sorted({abs(float(b) - t) for b in breakpoints} - {0.0}))
    r0 = float(dists[0]) if dists.size else 1.0

    def D(rho):
        return 2.0 * mt - _scalar(mu, t + rho) - _scalar(mu, t - rho)

    def angular(r):
        # 2 ∫_0^{π/2} D(r sin θ) dθ, split where r sin θ hits a breakpoint distance
        cuts = [np.arcsin(d / r) for d in dists if d < r]
        edges = [0.0] + cuts + [pi / 2]
        return 2.0 * sum(integrate.quad(lambda th: D(r * np.sin(th)), a, b, **_QUAD)[0]
                         for a, b in zip(edges[:-1], edges[1:]) if b > a)

    c = 0.5 * r0
    alpha = 1.0 - 2.0 * s
    x, w = roots_jacobi(q, 0.0, alpha)
    r = c * (x + 1.0) / 2.0
    near = sum(wi * angular(ri) / ri**2 for ri, wi in zip(r, w)) * (c / 2.0) ** (1.0 + alpha)
    grid = np.unique(np.concatenate([[c], dists[dists > c], [max(4.0 * r0, 2.0 * dists.max(initial=0.0), 4.0)]]))
    outer = lambda r: angular(r) * r ** (-1.0 - 2.0 * s)
    far = sum(integrate.quad(outer, a, b, epsabs=1e-11, epsrel=1e-9, limit=200)[0]
              for a, b in zip(grid[:-1], grid[1:]))
    far += integrate.quad(outer, grid[-1], np.inf, epsabs=1e-11, epsrel=1e-9, limit=200)[0]
    return 2.0 * (near + far)


def varpi_constant(n: int, s: float) -> float:
    """∫_{R^(n-1)} (1 + |y|²)^(-(n+2s)/2) dy by radial quadrature; 1 for n = 1."""
    if n < 1 or int(n) != n:
        raise ParameterOutOfRange("dimension must be a positive integer")
    if not 0.0 < s < 1.0:
        raise ParameterOutOfRange("s must lie in (0, 1)")
    n = int(n)
    if n == 1:
        return 1.0
    sphere = 2.0 * pi ** ((n - 1) / 2.0) / gamma((n - 1) / 2.0)
    e = -(n + 2.0 * s) / 2.0
    radial = sum(integrate.quad(lambda r: r ** (n - 2) * (1.0 + r * r) ** e, a, b, **_QUAD)[0]
                 for a, b in ((0.0, 1.0), (1.0, np.inf)))
    return sphere * radial


# ---------------------------------------------------------------- Caccioppoli


CACCIOPPOLI_HEADER = ("x0", "r", "lhs", "u_l2", "u_weighted_l1", "f_l2", "ratio")


@dataclass
class CaccioppoliReport:
    lhs: float
    rhs_terms: tuple
    ratio: float
    x0: float = 0.0
    r: float = 0.0

    def csv_rows(self):
        return [(self.x0, self.r, self.lhs, *self.rhs_terms, self.ratio)]


def _l2_of(f, U: Domain1D, points=()):
    if f is None:
        return 0.0
    if isinstance(f, GridFunction):
        return _lp_norm(f, U, 2.0)
    if np.isscalar(f):
        return abs(float(f)) * np.sqrt(U.length)
    cuts = sorted({U.lo, U.hi, *[p for p in points if U.lo < p < U.hi]})
    total = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        val, _ = integrate.quad(lambda x: _scalar(f, x) ** 2, a, b, limit=400)
        total += val
    return float(np.sqrt(total))


def caccioppoli_check(u: GridFunction, f, omega: Domain1D, x0: float, r: float, kernel: KernelSpec,
                      f_singular_points: Sequence[float] = (), backend=None) -> CaccioppoliReport:
    """Both sides of the interior energy bound on B_r(x0) ⊂⊂ Ω.

    lhs is [u]_{H^s(B_r(x0))}; the right-hand terms are ‖u‖_{L²(Ω)},
    ‖u‖_{L¹} against 1/(1+|x-x0|^(1+β)) with β from the kernel, and
    ‖f‖_{L²(Ω)}.  `f` may be None, a number, a GridFunction or a callable;
    `f_singular_points` tells the quadrature where f blows up.
    """
    if not r > 0.0:
        raise ParameterOutOfRange("radius must be positive")
    if not (omega.lo < x0 - r and x0 + r < omega.hi):
        raise BallNotCompactlyContained(f"B_{r}({x0}) is not compactly inside {omega}")
    ball = Domain1D(x0 - r, x0 + r)
    lhs = float(gagliardo(u, ball, kernel.s, 2.0, backend=backend).value)
    terms = (_lp_norm(u, omega, 2.0), weighted_l1_norm(u, Weight(x0, kernel.beta)),
             _l2_of(f, omega, f_singular_points))
    total = sum(terms)
    ratio = 0.0 if total == 0.0 and lhs == 0.0 else lhs / total
    return CaccioppoliReport(lhs, tuple(float(t) for t in terms), float(ratio), float(x0), float(r))


# ---------------------------------------------------------------- exponent fits


FIT_HEADER = ("z", "norm", "slope", "intercept", "residual")


@dataclass
class ExponentFit:
    slope: float
    intercept: float
    residual: float
    window: tuple
    samples: int
    zs: np.ndarray = field(default_factory=lambda: np.empty(0))
    norms: np.ndarray = field(default_factory=lambda: np.empty(0))

    def csv_rows(self):
        return [(z, n, self.slope, self.intercept, self.residual) for z, n in zip(self.zs, self.norms)]


def fit_regularity_exponent(u: GridFunction, omega_prime: Domain1D, l: int = 2, p: float = 2.0,
                            window: Optional[tuple] = None, backend=None) -> ExponentFit:
    """Least-squares slope of log ‖Δ_z^l u‖_{L^p(Ω'_{lz})} against log z.

    The shifts form a dyadic ladder z_max, z_max/2, ... down to z_min.  The
    default window runs from 8 mesh widths to |Ω'|/(4l).
    """
    if omega_prime.is_empty:
        raise ParameterOutOfRange("empty fitting domain")
    if window is None:
        window = (8.0 * u.h, omega_prime.length / (4.0 * l))
    z_min, z_max = float(window[0]), float(window[1])
    if not 0.0 < z_min <= z_max:
        raise WindowTooNarrow(f"bad window {window}")
    if l * z_max >= omega_prime.length:
        raise ParameterOutOfRange("window reaches past the fitting domain")
    k = int(np.floor(np.log2(z_max / z_min) + 1e-9))
    if k + 1 < 4:
        raise WindowTooNarrow(f"window {window} holds {k + 1} dyadic levels, need 4")
    zs = z_max * 2.0 ** -np.arange(k + 1)
    norms = np.array([difference_lp(u, omega_prime, z, l, p, backend=backend) ** (1.0 / p) for z in zs])
    if np.any(norms <= 0.0):
        raise ParameterOutOfRange("increments vanish on the window; exponent undefined")
    X, Y = np.log(zs), np.log(norms)
    slope, intercept = np.polyfit(X, Y, 1)
    res = float(np.sqrt(np.mean((Y - (slope * X + intercept)) ** 2)))
    return ExponentFit(float(slope), float(intercept), res, (z_min, z_max), int(zs.size), zs, norms)


# ---------------------------------------------------------------- truncated energy


def _T(b, s):
    """∫_b^1 t^(-2s) dt."""
    if s == 0.5:
        return np.log(1.0 / b)
    return (b ** (1.0 - 2.0 * s) - 1.0) / (2.0 * s - 1.0)


def _energy_sum(eps, s, q):
    # after r = ρ t and swapping the order the energy is 2 s² ∫_ε^1 g(ρ) T(ε/ρ) dρ
    x, w = roots_jacobi(q, 0.0, 3.0 - 4.0 * s)
    rho = 1.0 - (1.0 + x) / 4.0          # [1/2, 1], 1 - ρ carries the Jacobi weight
    gt = ((rho ** (s - 1.0) - 1.0) / (1.0 - rho)) ** 2
    upper = np.sum(w * gt * _T(eps / rho, s)) * 0.25 ** (4.0 - 4.0 * s)
    tl, wl = roots_legendre(q)
    L0, L1 = np.log(eps), np.log(0.5)
    n = max(int(np.ceil((L1 - L0) / 0.5)), 1)
    edges = np.linspace(L0, L1, n + 1)
    a, b = edges[:-1, None], edges[1:, None]
    rr = np.exp(a + (b - a) * (tl[None, :] + 1.0) / 2.0)
    g = (rr ** (s - 1.0) - 1.0) ** 2 / (1.0 - rr) ** (4.0 * s - 1.0)
    lower = np.sum(wl * g * _T(eps / rr, s) * rr * (b - a) / 2.0)
    return 2.0 * s * s * (upper + lower)


def truncated_energy(s: float, eps: float, q: int = 16) -> float:
    """∫_ε^1∫_ε^1 |μ'(t) - μ'(r)|² / |t-r|^(4s-1) dt dr for μ(t) = t^s.

    Exact one-dimensional reduction (substitute r = ρ t and integrate t out);
    the remaining integral in ρ is regular after a Jacobi weight at ρ = 1 and
    a log substitution toward ρ = ε.
    """
    if not 0.5 <= s < 1.0:
        raise ParameterOutOfRange("energy is defined here for s in [1/2, 1)")
    if not 0.0 < eps < 0.5:
        raise ParameterOutOfRange("eps must lie in (0, 1/2)")
    v1, v2 = _energy_sum(eps, s, q), _energy_sum(eps, s, q + 8)
    if abs(v1 - v2) > 1e-9 * abs(v2):
        raise QuadratureFailure(f"energy quadrature unresolved at eps = {eps}")
    return float(v2)


def energy_lower_bound(s: float, eps: float) -> float:
    """s²(1-s)/4 ∫_ε^1 t^(-2s) dt."""
    return s * s * (1.0 - s) / 4.0 * float(_T(eps, s))


# ---------------------------------------------------------------- counterexample


COUNTEREXAMPLE_HEADER = ("kind", "key", "value", "reference")


@dataclass
class CounterexampleReport:
    s: float
    harmonicity_residuals: list
    varpi: dict
    energy_table: list
    divergence_slope: float
    lower_bound_check: bool
    lower_bounds: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    @property
    def log_divergent(self) -> bool:
        """Zero power-law exponent with increments that stay bounded below."""
        return abs(self.divergence_slope) <= 0.05 and self.diagnostics.get("min_increment", 0.0) > 0.0

    def csv_rows(self):
        rows = [("harmonicity", t, v, 0.0) for t, v in self.harmonicity_residuals]
        rows += [("varpi", n, v, 0.0) for n, v in sorted(self.varpi.items())]
        rows += [("energy", e, E, lb) for (e, E), lb in zip(self.energy_table, self.lower_bounds)]
        rows.append(("divergence_slope", "", self.divergence_slope, 1.0 - 2.0 * self.s))
        rows.append(("lower_bound_check", "", int(self.lower_bound_check), 1))
        return rows


def counterexample_suite(s: float, epsilons: Sequence[float] = tuple(2.0 ** -np.arange(2, 21)),
                         points: Sequence[float] = (0.5, 1.0, 2.0), dims: Sequence[int] = (1, 2, 3),
                         ladder: tuple = (4, 60)) -> CounterexampleReport:
    """Quantities showing t_+^s is s-harmonic on the half-line yet not in H^(2s).

    The divergence slope is the log-log slope of the energy increments
    E(ε_{k+1}) - E(ε_k) over the deeper half of the dyadic ladder
    ε_k = 2^-k, k in `ladder`; increments cancel the finite part of E, so the
    slope is 1 - 2s for s > 1/2 and tends to 0 at s = 1/2.
    """
    if not 0.5 <= s < 1.0:
        raise ParameterOutOfRange("the counterexample needs s in [1/2, 1)")
    eps = np.asarray(epsilons, dtype=float)
    if eps.size == 0 or np.any(eps <= 0.0) or np.any(eps >= 0.5) or np.any(np.diff(eps) >= 0.0):
        raise ParameterOutOfRange("epsilons must be strictly decreasing in (0, 1/2)")
    mu = half_line_power(s)
    residuals = [(float(t), pointwise_frac_laplacian(mu, t, s, breakpoints=[0.0])) for t in points]
    varpi = {int(n): varpi_constant(n, s) for n in dims}
    table = [(float(e), truncated_energy(s, e)) for e in eps]
    bounds = [energy_lower_bound(s, e) for e in eps]

    ks = np.arange(ladder[0], ladder[1] + 1)
    le = 2.0 ** -ks.astype(float)
    lE = np.array([truncated_energy(s, e) for e in le])
    inc = np.diff(lE)
    half = inc.size // 2
    slope = float(np.polyfit(np.log(le[1:][half:]), np.log(inc[half:]), 1)[0])
    lb_ok = all(E >= b for (_, E), b in zip(table, bounds)) and all(
        E >= energy_lower_bound(s, e) for e, E in zip(le, lE))
    diag = {"ladder_eps": le, "ladder_energy": lE, "min_increment": float(inc.min()),
            "min_bound_ratio": float(min(E / energy_lower_bound(s, e) for e, E in zip(le, lE)))}
    if s == 0.5:
        L = np.log(1.0 / le)
        diag["log_square_coefficient"] = float(np.polyfit(L[half:], lE[half:], 2)[0])
    return CounterexampleReport(float(s), residuals, varpi, table, slope, bool(lb_ok), bounds, diag)
