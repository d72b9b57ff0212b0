"""Fractional seminorms of grid functions on intervals.

All increment-based quantities reduce to F(z) = ‖Δ_z^l u‖_{L^p(U_{lz})}^p,
which `increments.difference_lp` evaluates exactly for the P1 part.  In one
dimension F(-z) = F(z), so only z > 0 is sampled.
"""
from dataclasses import dataclass, field
from math import comb, factorial
from typing import NamedTuple, Optional

import numpy as np
from numpy.polynomial import Polynomial

from .errors import DegenerateGap, ParameterOutOfRange
from .increments import Domain1D, GridFunction, difference_lp
from .quadrature import double_integral, gauss_legendre, singular_rule

__all__ = [
    "SeminormReport",
    "CSV_HEADER",
    "gagliardo",
    "gagliardo_bruteforce",
    "nikolskii",
    "besov",
    "modulus_of_smoothness",
    "modulus_curve",
    "EmbeddingCheck",
    "embed_W_in_N",
    "embed_N_in_W",
]

CSV_HEADER = ("name", "s", "p", "l", "lambda", "delta", "value", "error_estimate")


@dataclass
class SeminormReport:
    name: str
    value: float
    s: float
    p: float
    l: int
    lambda_index: float
    delta: float
    sample_set: np.ndarray = field(default_factory=lambda: np.empty(0))
    quadrature_error: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    def csv_row(self):
        return (self.name, self.s, self.p, self.l, self.lambda_index, self.delta,
                self.value, self.quadrature_error)

    def __float__(self):
        return float(self.value)


def _check_sp(s, p):
    if not s > 0:
        raise ParameterOutOfRange("smoothness index must be positive")
    if not p >= 1:
        raise ParameterOutOfRange("integrability index must be at least 1")


def _z_breaks(u: GridFunction, U: Domain1D, l: int, z_max: float):
    """Shifts in (0, z_max) where F(z) = ‖Δ_z^l u‖^p may lose smoothness.

    These are the z at which two breakpoints of x ↦ Δ_z^l u(x) (shifted mesh
    nodes and the ends of U_{lz}) collide.
    """
    h = u.h
    nodes = u.nodes
    out = [np.array([z_max])]
    for m in range(1, l + 1):
        k = np.arange(1, int(np.floor(z_max * m / h)) + 1)
        out.append(k * h / m)
    for i in range(1, l + 1):
        out.append((nodes - U.lo) / i)
    for i in range(l):
        out.append((U.hi - nodes) / (l - i))
    b = np.concatenate(out)
    b = np.unique(b[(b > 0) & (b <= z_max)])
    # collapse near-duplicates produced by rounding
    keep = np.concatenate([[True], np.diff(b) > 1e-12 * z_max])
    return b[keep]


def _small_z_exponent(l):
    """Growth a in ‖Δ_z^l u‖_p ~ z^a at small z for P1 data: 1 (l = 1) or 1 + 1/p."""
    return (lambda p: 1.0) if l == 1 else (lambda p: 1.0 + 1.0 / p)


def _increment_integral(u, U, s, p, lam, l, q, z_lo=0.0, z_hi=np.inf, backend=None):
    """2 ∫_{z_lo}^{z_hi} (z^-s F(z)^(1/p))^lam dz / z  over z with U_{lz} nonempty."""
    z_max = min(U.length / l, z_hi)
    if z_max <= z_lo:
        return 0.0, np.empty(0)
    breaks = _z_breaks(u, U, l, z_max)
    breaks = breaks[breaks > z_lo]
    breaks = np.concatenate([[z_lo], breaks])
    if breaks[-1] < z_max:
        breaks = np.append(breaks, z_max)
    F = lambda z: difference_lp(u, U, z, l, p, backend=backend)

    def integrand(z):
        f = np.array([F(zz) for zz in np.atleast_1d(z)])
        return 2.0 * (z ** (-s) * np.maximum(f, 0.0) ** (1.0 / p)) ** lam / z

    total = 0.0
    used = []
    tl, wl = gauss_legendre(q)
    for a, b in zip(breaks[:-1], breaks[1:]):
        if a == 0.0:
            alpha = (_small_z_exponent(l)(p) - s) * lam - 1.0
            if alpha <= -1.0:
                return np.inf, np.array(used)
            t, w = singular_rule(q, alpha)
            z = b * t
            total += float(np.sum(integrand(z) * w) * b)
        else:
            # logarithmic variable: the dz / z weight and the power decay become mild
            la, lb = np.log(a), np.log(b)
            z = np.exp(la + (lb - la) * tl)
            total += float(np.sum(integrand(z) * z * wl) * (lb - la))
        used.append(z)
    return total, np.concatenate(used) if used else np.empty(0)


def _panel_breaks(u, U):
    h = u.h
    nodes = u.nodes
    inner = nodes[(nodes > U.lo) & (nodes < U.hi)]
    b = np.unique(np.concatenate([[U.lo, U.hi], inner]))
    # off-mesh stretches (closed-form exterior) get panels of mesh size
    pieces = []
    for lo, hi in zip(b[:-1], b[1:]):
        m = max(int(np.ceil((hi - lo) / h - 1e-9)), 1)
        pieces.append(np.linspace(lo, hi, m + 1))
    return np.unique(np.concatenate(pieces))


def gagliardo(u: GridFunction, U: Domain1D, sigma: float, p: float = 2.0,
              method: str = "panel", q: int = 8, backend=None) -> SeminormReport:
    """[u]_{W^{σ,p}(U)} = (∫_U∫_U |u(x)-u(y)|^p / |x-y|^(1+σp))^(1/p).

    method "panel" integrates the double integral over panel pairs with the
    diagonal singularity absorbed; "shifted" integrates
    2 ∫_0^|U| z^(-1-σp) ‖Δ_z u‖_{L^p(U_z)}^p dz; "bruteforce" is the exact
    element-pair sum (p = 2, mesh-aligned U).
    """
    if not 0.0 < sigma < 1.0:
        raise ParameterOutOfRange("sigma must lie in (0, 1)")
    _check_sp(sigma, p)
    if U.is_empty:
        return SeminormReport("gagliardo", 0.0, sigma, p, 1, p, np.inf)
    if method == "bruteforce":
        return gagliardo_bruteforce(u, U, sigma)
    if method == "shifted":
        v1, zs = _increment_integral(u, U, sigma, p, p, 1, q, backend=backend)
        v2, _ = _increment_integral(u, U, sigma, p, p, 1, q + 4, backend=backend)
        val = v2 ** (1.0 / p)
        err = abs(v1 ** (1.0 / p) - val)
        return SeminormReport("gagliardo", val, sigma, p, 1, p, np.inf, zs, err,
                              {"method": "shifted"})
    if method != "panel":
        raise ValueError(f"unknown method {method!r}")
    breaks = _panel_breaks(u, U)
    expo = -1.0 - sigma * p
    G = lambda x, y: np.abs(u(x) - u(y)) ** p * np.abs(x - y) ** expo
    alpha = p - 1.0 - sigma * p
    I1 = double_integral(G, breaks, alpha, q=q)
    I2 = double_integral(G, breaks, alpha, q=q + 4)
    val = max(I2, 0.0) ** (1.0 / p)
    err = abs(max(I1, 0.0) ** (1.0 / p) - val)
    return SeminormReport("gagliardo", val, sigma, p, 1, p, np.inf, np.empty(0), err,
                          {"method": "panel"})


# -------------------------------------------------------- exact element-pair sum


def _adjacent_moments(gam):
    """∫∫_{[0,1]^2} P^j E^k (P+E)^gam for (j, k) = (2, 0) and (1, 1)."""
    out = {}
    for j, k in ((2, 0), (1, 1)):
        # lower triangle P + E <= 1 in polar-like coordinates r = P + E, P = r c
        beta = factorial(j) * factorial(k) / factorial(j + k + 1)
        low = beta / (j + k + gam + 2)
        # upper triangle: r in [1, 2], P in [r - 1, 1]
        r = Polynomial([0.0, 1.0])
        inner = Polynomial([0.0])
        for m in range(k + 1):
            c = comb(k, m) * (-1) ** m
            deg = j + m + 1
            inner += c * r ** (k - m) * (1.0 - (r - 1.0) ** deg) / deg
        out[(j, k)] = low + _power_moment(inner, 1.0, 2.0, gam)
    return out


def _power_moment(poly: Polynomial, a, b, gam):
    """∫_a^b poly(r) r^gam dr for 0 < a < b."""
    total = 0.0
    for n, c in enumerate(poly.coef):
        e = n + gam + 1
        if abs(e) < 1e-13:
            total += c * np.log(b / a)
        else:
            total += c * (b**e - a**e) / e
    return total


def gagliardo_bruteforce(u: GridFunction, U: Optional[Domain1D] = None, sigma: float = 0.5) -> SeminormReport:
    """Exact [u]_{W^{σ,2}(U)} of the P1 function by summing all element pairs.

    O(N^2) work; U must be a union of mesh elements.  Intended as an oracle
    on small meshes.
    """
    if not 0.0 < sigma < 1.0:
        raise ParameterOutOfRange("sigma must lie in (0, 1)")
    h = u.h
    nodes = u.nodes
    if U is None:
        U = u.domain
    i0 = int(round((U.lo - u.lo) / h))
    i1 = int(round((U.hi - u.lo) / h))
    if (i0 < 0 or i1 > u.n_intervals or abs(nodes[i0] - U.lo) > 1e-9 * h
            or abs(nodes[i1] - U.hi) > 1e-9 * h):
        raise ValueError("brute-force sum needs U aligned with the mesh")
    vals = u.values[i0:i1 + 1]
    delta = np.diff(vals)
    n = delta.size
    gam = -1.0 - 2.0 * sigma
    scale = h ** (1.0 - 2.0 * sigma)
    self_m = 2.0 / ((2.0 - 2.0 * sigma) * (3.0 - 2.0 * sigma))
    total = scale * self_m * float(np.sum(delta**2))
    mom = _adjacent_moments(gam)
    # neighbours: diff = δ_i P + δ_{i+1} E, distance P + E (units of h), both orders
    a, b = delta[:-1], delta[1:]
    total += 2.0 * scale * float(np.sum((a**2 + b**2) * mom[(2, 0)] + 2 * a * b * mom[(1, 1)]))
    r = Polynomial([0.0, 1.0])
    for i in range(n):
        for j in range(i + 2, n):
            # x in element j, y in element i; r = (x - y)/h = D + ξ - η
            D = j - i
            c0 = vals[j] - vals[i]
            c1, c2 = delta[j], delta[i]
            L = Polynomial([c0 - c2 * D, c2])
            beta = c1 - c2
            part = 0.0
            for lo_r, hi_r, xa, xb in ((D - 1, D, Polynomial([0.0]), r - D + 1),
                                       (D, D + 1, r - D, Polynomial([1.0]))):
                poly = (L**2 * (xb - xa) + L * beta * (xb**2 - xa**2)
                        + beta**2 * (xb**3 - xa**3) / 3.0)
                part += _power_moment(poly, lo_r, hi_r, gam)
            total += 2.0 * scale * part
    val = max(total, 0.0) ** 0.5
    return SeminormReport("gagliardo", val, sigma, 2.0, 1, 2.0, np.inf,
                          quadrature_error=64 * np.finfo(float).eps * val,
                          diagnostics={"method": "bruteforce"})


# -------------------------------------------------------- Nikol'skii and Besov


def _ladder(U, l, delta, h, levels, random_fill, seed):
    z_max = min(delta, U.length / l)
    if levels is None:
        levels = int(np.clip(np.ceil(np.log2(z_max / (h / 8.0))), 1, 40))
    ladder = z_max * 2.0 ** -np.arange(levels + 1)
    ladder[0] = z_max * (1 - 1e-12)
    rng = np.random.default_rng(seed)
    fill = np.exp(rng.uniform(np.log(ladder[-1]), np.log(z_max), random_fill))
    return ladder, np.sort(fill)[::-1]


def nikolskii(u: GridFunction, U: Domain1D, s: float, p: float = 2.0, l: int = 2,
              delta: float = np.inf, levels: Optional[int] = None, random_fill: int = 16,
              seed: int = 0, backend=None) -> SeminormReport:
    """sup_{0<z<δ} z^-s ‖Δ_z^l u‖_{L^p(U_{lz})}, sampled.

    The sup is taken over a dyadic ladder from min(δ, |U|/l) down to about h/8
    plus `random_fill` log-uniform shifts, so the value is a lower bound.
    ``diagnostics["ladder_value"]`` is the ladder-only sup and
    ``diagnostics["argmax"]`` the maximizing shift.
    """
    _check_sp(s, p)
    if not l > s:
        raise ParameterOutOfRange("need l > s")
    if U.is_empty:
        return SeminormReport("nikolskii", 0.0, s, p, l, np.inf, delta)
    ladder, fill = _ladder(U, l, delta, u.h, levels, random_fill, seed)
    zs = np.concatenate([ladder, fill])
    vals = np.array([z ** (-s) * difference_lp(u, U, z, l, p, backend=backend) ** (1.0 / p) for z in zs])
    k = int(np.argmax(vals))
    value = float(vals[k])
    lad = float(vals[:ladder.size].max())
    return SeminormReport("nikolskii", value, s, p, l, np.inf, delta, zs,
                          64 * np.finfo(float).eps * value,
                          {"ladder_value": lad, "argmax": float(zs[k]),
                           "at_smallest_shift": bool(zs[k] == zs.min())})


def besov(u: GridFunction, U: Domain1D, s: float, p: float = 2.0, lambda_index: float = 2.0,
          l: int = 2, delta: float = np.inf, q: int = 8, backend=None, **kw) -> SeminormReport:
    """(∫_{|z|<δ} (|z|^-s ‖Δ_z^l u‖_{L^p(U_{lz})})^λ dz/|z|)^(1/λ); λ = ∞ is `nikolskii`.

    With l = 1 and λ = p this is exactly the Gagliardo seminorm.
    """
    _check_sp(s, p)
    if not lambda_index >= 1:
        raise ParameterOutOfRange("lambda_index must be at least 1")
    if not l > s:
        raise ParameterOutOfRange("need l > s")
    if np.isinf(lambda_index):
        rep = nikolskii(u, U, s, p, l, delta, backend=backend, **kw)
        rep.name = "besov"
        return rep
    if U.is_empty:
        return SeminormReport("besov", 0.0, s, p, l, lambda_index, delta)
    lam = float(lambda_index)
    v1, zs = _increment_integral(u, U, s, p, lam, l, q, z_hi=delta, backend=backend)
    v2, _ = _increment_integral(u, U, s, p, lam, l, q + 4, z_hi=delta, backend=backend)
    val = v2 ** (1.0 / lam)
    err = abs(v1 ** (1.0 / lam) - val) if np.isfinite(val) else np.inf
    return SeminormReport("besov", val, s, p, l, lam, delta, zs, err)


def besov_far_part(u, U, s, p, delta, l=2, q=8, backend=None):
    """(∫_{|z|≥δ} (|z|^-s ‖Δ_z^l u‖_p)^p dz/|z|)^(1/p), the piece a δ-restriction drops."""
    v, _ = _increment_integral(u, U, s, p, p, l, q, z_lo=delta, backend=backend)
    return v ** (1.0 / p)


def _lp_norm(u, U, p, q=8):
    t, w = gauss_legendre(q)
    b = _panel_breaks(u, U)
    lo, length = b[:-1], np.diff(b)
    x = lo[:, None] + length[:, None] * t[None, :]
    return float(np.sum(np.abs(u(x)) ** p * length[:, None] * w[None, :])) ** (1.0 / p)


def restriction_bound(u, U, s, p, delta, l=2):
    """2^l (2 / (sp))^(1/p) δ^-s ‖u‖_{L^p(U)}: bound on the far part for any u."""
    return 2.0**l * (2.0 / (s * p)) ** (1.0 / p) * delta ** (-s) * _lp_norm(u, U, p)


# -------------------------------------------------------- moduli and embeddings


def _shift_grid(u, U, l, per_octave, z_min, extra=()):
    z_max = U.length / l
    octaves = max(np.log2(z_max / z_min), 0.0)
    k = np.arange(int(np.ceil(octaves * per_octave)) + 1)
    g = z_max * 2.0 ** (-k / per_octave)
    g[0] = z_max * (1 - 1e-12)
    g = np.concatenate([g, np.asarray(extra, dtype=float)])
    g = g[(g > 0) & (g < z_max)]
    return np.unique(g)


def modulus_curve(u: GridFunction, U: Domain1D, p: float, l: int, etas, per_octave: int = 128,
                  z_min: Optional[float] = None, backend=None):
    """ω_p^l(u; η) for each η, by a running max over one shared sample grid.

    The grid is geometric (``per_octave`` points per octave) below |U|/l plus
    the points just below each η, so the result is nondecreasing in η.
    Returns (omega_at_etas, grid, running_max_on_grid).
    """
    etas = np.atleast_1d(np.asarray(etas, dtype=float))
    if np.any(etas <= 0):
        raise ParameterOutOfRange("eta must be positive")
    if U.is_empty:
        return np.zeros_like(etas), np.empty(0), np.empty(0)
    if z_min is None:
        z_min = min(u.h / 8.0, etas.min() / 2.0)
    grid = _shift_grid(u, U, l, per_octave, z_min, extra=etas * (1 - 1e-12))
    F = np.array([difference_lp(u, U, z, l, p, backend=backend) ** (1.0 / p) for z in grid])
    run = np.maximum.accumulate(F)
    idx = np.searchsorted(grid, etas, side="left") - 1
    omega = np.where(idx >= 0, run[np.clip(idx, 0, None)], 0.0)
    return omega, grid, run


def modulus_of_smoothness(u: GridFunction, U: Domain1D, p: float, l: int, eta: float, **kw) -> float:
    """ω_p^l(u; η) = sup_{0<|z|<η} ‖Δ_z^l u‖_{L^p(U_{lz})} (sampled)."""
    return float(modulus_curve(u, U, p, l, [eta], **kw)[0][0])


class EmbeddingCheck(NamedTuple):
    lhs: float
    rhs: float
    constant: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs * (1 + 1e-10) + 1e-300


def _step_modulus(u, U, p, l, per_octave, z_min, backend):
    """Sampled modulus as a step function: value M_k on (g_k, g_{k+1}]."""
    grid = _shift_grid(u, U, l, per_octave, z_min)
    F = np.array([difference_lp(u, U, z, l, p, backend=backend) ** (1.0 / p) for z in grid])
    return grid, np.maximum.accumulate(F)


def embed_W_in_N(u: GridFunction, U: Domain1D, s: float, p: float = 2.0, l: int = 2,
                 per_octave: int = 32, z_min: Optional[float] = None, backend=None) -> EmbeddingCheck:
    """sup_t t^-s ω(t) ≤ (sp)^(1/p) (∫_0^∞ (η^-s ω(η))^p dη/η)^(1/p).

    Both sides are computed exactly for the sampled (step-function) modulus.
    """
    _check_sp(s, p)
    const = (s * p) ** (1.0 / p)
    if U.is_empty:
        return EmbeddingCheck(0.0, 0.0, const)
    if z_min is None:
        z_min = u.h / 16.0
    g, M = _step_modulus(u, U, p, l, per_octave, z_min, backend)
    lhs = float(np.max(g ** (-s) * M))
    sp = s * p
    upper = np.append(g[1:], np.inf)
    seg = (g ** (-sp) - np.where(np.isinf(upper), 0.0, upper ** (-sp))) / sp
    integral = float(np.sum(M**p * seg))
    return EmbeddingCheck(lhs, const * integral ** (1.0 / p), const)


def embed_N_in_W(u: GridFunction, U: Domain1D, s: float, r: float, p: float = 2.0, l: int = 2,
                 per_octave: int = 32, z_min: Optional[float] = None, backend=None) -> EmbeddingCheck:
    """(∫_0^1 (η^-r ω(η))^p dη/η)^(1/p) ≤ ((s-r)p)^(-1/p) sup_{0<η<1} η^-s ω(η)."""
    _check_sp(s, p)
    if not r > 0:
        raise ParameterOutOfRange("r must be positive")
    if s <= r:
        raise DegenerateGap(f"need r < s, got r = {r}, s = {s}")
    const = ((s - r) * p) ** (-1.0 / p)
    if U.is_empty:
        return EmbeddingCheck(0.0, 0.0, const)
    if z_min is None:
        z_min = u.h / 16.0
    g, M = _step_modulus(u, U, p, l, per_octave, z_min, backend)
    keep = g < 1.0
    g, M = g[keep], M[keep]
    if g.size == 0:
        return EmbeddingCheck(0.0, 0.0, const)
    upper = np.append(g[1:], 1.0)
    rp = r * p
    lhs = float(np.sum(M**p * (g ** (-rp) - upper ** (-rp)) / rp)) ** (1.0 / p)
    rhs = const * float(np.max(g ** (-s) * M))
    return EmbeddingCheck(lhs, rhs, const)
