"""P1 Galerkin solver for E_K(u, φ) = ⟨f, φ⟩ on an interval with zero exterior data.

For hat functions φ_i, φ_j supported in Ω = (a, b),

    E_K(φ_i, φ_j) = ∫_Ω∫_Ω (φ_i(x)-φ_i(y))(φ_j(x)-φ_j(y)) K + 2 ∫_Ω φ_i φ_j κ,

with κ(x) = ∫_{R∖Ω} K(x, y) dy.  The double integral is split by element
offset m; touching offsets (m ≤ 1) use the (d, x) rule with the |d|^(1-2s)
behaviour absorbed, far offsets a tensor Gauss rule.
"""
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy import linalg

from . import hot
from .errors import ParameterOutOfRange, QuadratureFailure, SingularSystem, TailNotIntegrable
from .increments import Domain1D, GridFunction
from .kernels import KernelSpec, _tail_growth
from .quadrature import _dx_points, double_integral, far_order, gauss_legendre, singular_rule

__all__ = [
    "Singularity",
    "WeakProblem",
    "StiffnessSystem",
    "complement_integral",
    "assemble",
    "solve",
    "solve_many",
    "energy",
    "residual",
]


@dataclass(frozen=True)
class Singularity:
    """Declared behaviour |x - location|^(-exponent) of the right-hand side."""

    location: float
    exponent: float

    def __post_init__(self):
        if not 0.0 <= self.exponent < 0.5:
            raise ParameterOutOfRange("singular exponent must lie in [0, 1/2) to keep f in L^2")


@dataclass
class WeakProblem:
    kernel: KernelSpec
    domain: Domain1D
    rhs: Union[Callable, GridFunction, float]
    n_intervals: int
    singularities: Sequence[Singularity] = ()

    def __post_init__(self):
        if not isinstance(self.domain, Domain1D):
            self.domain = Domain1D(*self.domain)
        if self.domain.is_empty:
            raise ParameterOutOfRange("empty domain")
        self.n_intervals = int(self.n_intervals)
        if self.n_intervals < 4:
            raise ParameterOutOfRange("need at least 3 interior nodes")
        self.singularities = tuple(self.singularities)

    @classmethod
    def with_mesh_size(cls, kernel, domain, rhs, mesh_size, singularities=()):
        domain = domain if isinstance(domain, Domain1D) else Domain1D(*domain)
        n = int(round(domain.length / mesh_size))
        return cls(kernel, domain, rhs, n, singularities)

    @property
    def h(self) -> float:
        return self.domain.length / self.n_intervals

    @property
    def nodes(self):
        return np.linspace(self.domain.lo, self.domain.hi, self.n_intervals + 1)

    def f(self, x):
        x = np.asarray(x, dtype=float)
        if callable(self.rhs):
            return np.asarray(self.rhs(x), dtype=float) * np.ones_like(x)
        return float(self.rhs) * np.ones_like(x)


@dataclass
class StiffnessSystem:
    """Interior Galerkin matrix, load vector and mesh data."""

    matrix: np.ndarray
    load: np.ndarray
    nodes: np.ndarray
    kernel: KernelSpec
    problem: WeakProblem
    quad_check: float = 0.0
    _factor: Optional[tuple] = field(default=None, repr=False)

    @property
    def h(self):
        return self.nodes[1] - self.nodes[0]

    def factor(self):
        if self._factor is None:
            try:
                self._factor = linalg.cho_factor(self.matrix, lower=False, check_finite=True)
            except linalg.LinAlgError as exc:
                raise SingularSystem("stiffness matrix is not positive definite") from exc
        return self._factor

    def solve(self, load=None):
        load = self.load if load is None else load
        return linalg.cho_solve(self.factor(), load)


# ------------------------------------------------------------ complement integral


def _analytic_complement(K, lo, hi, x):
    s = K.s
    tl, tr = x - lo, hi - x
    if K.name == "fractional":
        return (tl ** (-2 * s) + tr ** (-2 * s)) / (2 * s)
    c = K.cutoff

    def side(t):
        return np.where(t < c, (t ** (-2 * s) - c ** (-2 * s)) / (2 * s), 0.0)

    return side(tl) + side(tr)


def _numeric_side(K, x, t0, sign, g, q, width):
    """∫_{t0}^∞ g(x + sign t) K(x, x + sign t) dt for arrays x, t0."""
    gfun = (lambda y: 1.0) if g is None else g
    tl, wl = gauss_legendre(q)
    total = np.zeros_like(x)
    end = np.full_like(x, np.inf) if K.cutoff is None else np.full_like(x, K.cutoff)
    T1 = np.minimum(t0 + width, end)
    live = t0 < T1
    # near range: equal panels in log t
    la = np.log(np.where(live, t0, 1.0))
    lb = np.log(np.where(live, T1, 2.0))
    P = 48
    for k in range(P):
        a = la + (lb - la) * k / P
        b = la + (lb - la) * (k + 1) / P
        u = a[:, None] + (b - a)[:, None] * tl[None, :]
        t = np.exp(u)
        y = x[:, None] + sign * t
        val = gfun(y) * K.evaluate(x[:, None], y) * t
        total += np.where(live, np.sum(val * wl[None, :], axis=1) * (b - a), 0.0)
    if K.cutoff is not None:
        return total
    # far range: t = T1 v^(-1/β), geometric panels in v
    beta = K.beta
    for k in range(60):
        a, b = 2.0 ** -(k + 1), 2.0**-k
        v = a + (b - a) * tl
        t = T1[:, None] * v[None, :] ** (-1.0 / beta)
        y = x[:, None] + sign * t
        jac = (T1[:, None] / beta) * v[None, :] ** (-1.0 / beta - 1.0)
        total += np.sum(gfun(y) * K.evaluate(x[:, None], y) * jac * wl[None, :], axis=1) * (b - a)
    return total


def complement_integral(K: KernelSpec, lo: float, hi: float, x, g=None, tol: float = 1e-7):
    """∫_{R∖(lo,hi)} g(y) K(x, y) dy for x in (lo, hi); g = None means g ≡ 1.

    Closed form for the fractional and truncated kernels with g ≡ 1; otherwise
    log-graded panels up to |x-y| = |Ω| + 1 and the substitution
    t = T v^(-1/β) beyond, checked against a higher order.
    """
    x = np.asarray(x, dtype=float)
    if g is None and K.coefficient is None and K.name in ("fractional", "truncated"):
        return _analytic_complement(K, lo, hi, x)
    if g is not None:
        for direction, start in ((-1, lo), (1, hi)):
            if _tail_growth(g, start, direction) >= K.beta - 1e-9:
                raise TailNotIntegrable("exterior data grow too fast for the kernel tail")
    width = (hi - lo) + 1.0
    out = []
    for q in (8, 12):
        out.append(_numeric_side(K, x, x - lo, -1.0, g, q, width)
                   + _numeric_side(K, x, hi - x, 1.0, g, q, width))
    err = np.max(np.abs(out[1] - out[0]) / np.maximum(np.abs(out[1]), 1e-300))
    if err > tol:
        raise QuadratureFailure(f"complement integral unresolved (relative change {err:.2e}); "
                                "oscillating coefficients need a kernel cutoff")
    return out[1]


# ------------------------------------------------------------------- assembly


def _pair_rules(n_el, h, s, cutoff, q):
    """Quadrature points for every element offset m with their 4x4 product tables."""
    alpha = 1.0 - 2.0 * s
    ms, offs, RX, RD, PP, NO = [], [0], [], [], [], []
    for m in range(n_el):
        gap = (m - 1) * h
        if cutoff is not None and m >= 1 and gap >= cutoff:
            break
        far_end = (m + 1) * h
        crosses = cutoff is not None and gap < cutoff < far_end
        if m <= 1 or crosses:
            x, y, w = _dx_points(0.0, h, m * h, (m + 1) * h, alpha, q, cutoff)
            rx, rd = x, y - x
        else:
            qq = far_order(m - 1) + max(q - 8, 0)
            t, wt = gauss_legendre(qq)
            X, Y = np.meshgrid(t * h, t * h, indexing="ij")
            rx = X.ravel()
            rd = (m * h + Y - X).ravel()
            w = (np.outer(wt, wt) * h * h).ravel()
        if m >= 1:
            w = 2.0 * w
        ad = np.abs(rd)
        kpow = ad ** (-1.0 - 2.0 * s)
        if cutoff is not None:
            kpow = np.where(ad < cutoff, kpow, 0.0)
        xi_x = rx / h
        xi_y = (rx + rd) / h - m
        D = np.zeros((rx.size, 4))
        if m == 0:
            D[:, 0] = rd / h
            D[:, 1] = -rd / h
            node_off = [0, 1, 0, 0]
        elif m == 1:
            D[:, 0] = 1.0 - xi_x
            D[:, 1] = xi_x - 1.0 + xi_y
            D[:, 2] = -xi_y
            node_off = [0, 1, 2, 2]
        else:
            D[:, 0] = 1.0 - xi_x
            D[:, 1] = xi_x
            D[:, 2] = -(1.0 - xi_y)
            D[:, 3] = -xi_y
            node_off = [0, 1, m, m + 1]
        P = (w * kpow)[:, None, None] * D[:, :, None] * D[:, None, :]
        ms.append(m)
        offs.append(offs[-1] + rx.size)
        RX.append(rx)
        RD.append(rd)
        PP.append(P)
        NO.append(node_off)
    return (np.array(ms, dtype=np.int64), np.array(offs, dtype=np.int64), np.concatenate(RX),
            np.concatenate(RD), np.ascontiguousarray(np.concatenate(PP)), np.array(NO, dtype=np.int64))


def _scatter_invariant(A, n_el, ms, offs, P, node_off):
    """Translation-invariant kernels: one local 4x4 table per offset."""
    for k, m in enumerate(ms):
        L = P[offs[k]:offs[k + 1]].sum(axis=0)
        e = np.arange(n_el - m)
        for a in range(4):
            for b in range(4):
                if L[a, b] != 0.0:
                    A[e + node_off[k, a], e + node_off[k, b]] += L[a, b]


def _pair_matrix(K, n_el, a0, h, q, backend=None):
    ms, offs, rx, rd, P, node_off = _pair_rules(n_el, h, K.s, K.cutoff, q)
    A = np.zeros((n_el + 1, n_el + 1))
    if K.coefficient is None and K.translation_invariant:
        _scatter_invariant(A, n_el, ms, offs, P, node_off)
    else:
        hot.pair_loop(n_el, a0, h, ms, offs, rx, rd, P, node_off, K.coefficient_or_unit(), A,
                      backend=backend)
    return A


def _exterior_matrix(K, lo, hi, n_el, q):
    """2 ∫_Ω φ_i φ_j κ on the full node set (boundary hats included)."""
    h = (hi - lo) / n_el
    s = K.s
    A = np.zeros((n_el + 1, n_el + 1))
    t, w = gauss_legendre(q)
    e = np.arange(1, n_el - 1)
    x = lo + (e[:, None] + t[None, :]) * h
    kap = complement_integral(K, lo, hi, x.ravel()).reshape(x.shape)
    phi = [1.0 - t, t]
    for a in range(2):
        for b in range(2):
            val = 2.0 * h * np.sum(w[None, :] * phi[a][None, :] * phi[b][None, :] * kap, axis=1)
            A[e + a, e + b] += val
    # boundary elements: only the interior hat lives there, φ^2 κ ~ dist^(2-2s)
    ts, ws = singular_rule(q + 4, 2.0 - 2.0 * s)
    xl = lo + h * ts
    xr = hi - h * ts
    A[1, 1] += 2.0 * h * np.sum(ws * ts**2 * complement_integral(K, lo, hi, xl))
    A[n_el - 1, n_el - 1] += 2.0 * h * np.sum(ws * ts**2 * complement_integral(K, lo, hi, xr))
    return A


def _singular_points(problem):
    """Declared singular locations inside Ω (snapped onto nearby nodes) -> exponent."""
    nodes = problem.nodes
    h = problem.h
    out = {}
    for sg in problem.singularities:
        c = sg.location
        k = int(np.argmin(np.abs(nodes - c)))
        if abs(nodes[k] - c) < 1e-9 * h:
            c = float(nodes[k])
        if problem.domain.lo <= c <= problem.domain.hi:
            out[c] = max(out.get(c, 0.0), sg.exponent)
    return out


def _load_vector(problem: WeakProblem, q=8):
    """⟨f, φ_i⟩ for all nodes, with Gauss-Jacobi next to declared singularities."""
    n_el = problem.n_intervals
    lo = problem.domain.lo
    h = problem.h
    F = np.zeros(n_el + 1)
    t, w = gauss_legendre(q)
    exps = _singular_points(problem)
    cuts = sorted(exps)
    for e in range(n_el):
        a, b = lo + e * h, lo + (e + 1) * h
        pts = [a] + [c for c in cuts if a < c < b] + [b]
        for pa, pb in zip(pts[:-1], pts[1:]):
            sl, sr = exps.get(pa, 0.0), exps.get(pb, 0.0)
            if sl == 0.0 and sr == 0.0:
                segs = [(pa, pb, None, 0.0)]
            else:
                mid = 0.5 * (pa + pb)
                segs = [(pa, mid, "left", -sl), (mid, pb, "right", -sr)]
            for sa, sb, side, alpha in segs:
                if side is None or alpha == 0.0:
                    x = sa + (sb - sa) * t
                    ww = (sb - sa) * w
                else:
                    ts, ws = singular_rule(q + 4, alpha)
                    x = sa + (sb - sa) * ts if side == "left" else sb - (sb - sa) * ts
                    ww = (sb - sa) * ws
                fx = problem.f(x)
                xi = (x - a) / h
                F[e] += np.sum(ww * fx * (1.0 - xi))
                F[e + 1] += np.sum(ww * fx * xi)
    return F


def assemble(problem: WeakProblem, q: int = 8, check: bool = True, tol: float = 1e-8,
             backend=None) -> StiffnessSystem:
    """Galerkin matrix on the interior hats and the load vector.

    With ``check`` the touching offsets (m ≤ 2) are recomputed at a higher
    order; a relative change above ``tol`` raises QuadratureFailure.
    """
    K = problem.kernel
    n_el = problem.n_intervals
    lo, hi = problem.domain.lo, problem.domain.hi
    h = problem.h
    A = _pair_matrix(K, n_el, lo, h, q, backend=backend)
    A += _exterior_matrix(K, lo, hi, n_el, q)
    change = 0.0
    if check:
        small = 4
        hs = (hi - lo) / n_el
        ref = _pair_rules(min(n_el, small), hs, K.s, K.cutoff, q)
        fine = _pair_rules(min(n_el, small), hs, K.s, K.cutoff, q + 6)
        for k in range(min(3, ref[0].size)):
            L1 = ref[4][ref[1][k]:ref[1][k + 1]].sum(axis=0)
            L2 = fine[4][fine[1][k]:fine[1][k + 1]].sum(axis=0)
            change = max(change, float(np.max(np.abs(L1 - L2)) / np.max(np.abs(L2))))
        if change > tol:
            raise QuadratureFailure(f"near-diagonal entries changed by {change:.2e} under refinement")
    A = 0.5 * (A + A.T)
    inner = slice(1, n_el)
    F = _load_vector(problem, q)
    return StiffnessSystem(A[inner, inner].copy(), F[inner].copy(), problem.nodes, K, problem, change)


def solve(problem: WeakProblem, system: Optional[StiffnessSystem] = None, **kw) -> GridFunction:
    """Galerkin solution as a zero-exterior GridFunction."""
    if system is None:
        system = assemble(problem, **kw)
    c = system.solve()
    vals = np.concatenate([[0.0], c, [0.0]])
    return GridFunction(problem.domain.lo, problem.domain.hi, vals)


def solve_many(problems, **kw):
    """Solve problems sharing kernel and mesh with one assembly and factorization."""
    problems = list(problems)
    system = assemble(problems[0], **kw)
    out = []
    for pb in problems:
        F = _load_vector(pb)[1:-1]
        c = system.solve(F)
        out.append(GridFunction(pb.domain.lo, pb.domain.hi, np.concatenate([[0.0], c, [0.0]])))
    return out, system


# -------------------------------------------------------------- energy form


def _end_alpha(s, zero_u, zero_v):
    k = int(zero_u) + int(zero_v)
    return k - 2.0 * s


def _energy_on_interval(uf, vf, K, lo, hi, breaks, q, u_end=(0.0, 0.0), v_end=(0.0, 0.0)):
    """E_K(u, v) for u, v vanishing outside [lo, hi] (given as callables)."""
    s = K.s
    G = lambda x, y: (uf(x) - uf(y)) * (vf(x) - vf(y)) * K.evaluate(x, y)
    pair = double_integral(G, breaks, 1.0 - 2.0 * s, q=q, cutoff=K.cutoff)
    ext = 0.0
    b = np.asarray(breaks)
    if b.size == 2:
        b = np.array([b[0], 0.5 * (b[0] + b[1]), b[1]])
    # interior panels: plain Gauss; end panels: weight matched to the boundary values
    t, w = gauss_legendre(q)
    lo_p, hi_p = b[1:-2], b[2:-1]
    if lo_p.size:
        x = lo_p[:, None] + (hi_p - lo_p)[:, None] * t[None, :]
        kap = complement_integral(K, lo, hi, x.ravel()).reshape(x.shape)
        ext += float(np.sum(uf(x) * vf(x) * kap * (hi_p - lo_p)[:, None] * w[None, :]))
    for k, (a, c) in enumerate(((b[0], b[1]), (b[-2], b[-1]))):
        zero_u = abs(u_end[k]) == 0.0
        zero_v = abs(v_end[k]) == 0.0
        alpha = _end_alpha(s, zero_u, zero_v)
        if alpha <= -1.0:
            return np.inf
        ts, ws = singular_rule(q + 4, alpha)
        x = a + (c - a) * ts if k == 0 else c - (c - a) * ts
        kap = complement_integral(K, lo, hi, x)
        ext += float(np.sum(uf(x) * vf(x) * kap * ws) * (c - a))
    return pair + 2.0 * ext


def energy(u: GridFunction, v: GridFunction, K: KernelSpec, q: int = 8) -> float:
    """E_K(u, v) = ∫∫ (u(x)-u(y))(v(x)-v(y)) K(x, y) dx dy over R^2.

    Zero-exterior inputs are integrated over the hull S of both meshes plus
    the complement term 2 ∫_S u v κ_S.  If u has a closed-form exterior, v
    must have zero exterior and the extra cross term
    -2 ∫_S v(x) ∫_{R∖S} u(y) K(x, y) dy dx is added.
    """
    if not v.zero_exterior:
        if not u.zero_exterior:
            raise TailNotIntegrable("at least one argument needs zero exterior data")
        u, v = v, u
    lo, hi = min(u.lo, v.lo), max(u.hi, v.hi)
    if not u.zero_exterior:
        lo, hi = v.lo, v.hi
    nodes = np.concatenate([u.nodes, v.nodes])
    breaks = np.unique(np.concatenate([[lo, hi], nodes[(nodes > lo) & (nodes < hi)]]))
    u_end = tuple(float(val) for val in u(np.array([lo, hi])))
    v_end = tuple(float(val) for val in v(np.array([lo, hi])))
    val = _energy_on_interval(u, v, K, lo, hi, breaks, q, u_end, v_end)
    if not u.zero_exterior:
        t, w = gauss_legendre(q)
        a_, b_ = breaks[:-1], breaks[1:]
        x = a_[:, None] + (b_ - a_)[:, None] * t[None, :]
        cross = complement_integral(K, lo, hi, x.ravel(), g=u.exterior).reshape(x.shape)
        val -= 2.0 * float(np.sum(v(x) * cross * (b_ - a_)[:, None] * w[None, :]))
    return val


def _inner_with_f(problem, phi, q=8):
    """⟨f, φ⟩ over Ω with the same singular handling as the load vector."""
    lo, hi = problem.domain.lo, problem.domain.hi
    exps = _singular_points(problem)
    pts = np.unique(np.concatenate([problem.nodes, list(exps)]))
    t, w = gauss_legendre(q)
    total = 0.0
    for pa, pb in zip(pts[:-1], pts[1:]):
        sl, sr = exps.get(pa, 0.0), exps.get(pb, 0.0)
        mid = 0.5 * (pa + pb)
        for sa, sb, side, alpha in ((pa, mid, "left", -sl), (mid, pb, "right", -sr)):
            if alpha == 0.0:
                x = sa + (sb - sa) * t
                ww = (sb - sa) * w
            else:
                ts, ws = singular_rule(q + 4, alpha)
                x = sa + (sb - sa) * ts if side == "left" else sb - (sb - sa) * ts
                ww = (sb - sa) * ws
            total += float(np.sum(ww * problem.f(x) * phi(x)))
    return total


def residual(u: GridFunction, problem: WeakProblem, test_count: int = 4, family: str = "sine",
             q: int = 8, system: Optional[StiffnessSystem] = None) -> float:
    """max_k |E_K(u, φ_k) - ⟨f, φ_k⟩| / ‖φ_k‖_{L^2}.

    family "sine": φ_k = sin(kπ(x-a)/(b-a)) on Ω, zero outside, k = 1..test_count
    (smooth inside, not in the P1 space); family "basis": all interior hats,
    using the assembled matrix.
    """
    if test_count < 1:
        raise ValueError("test_count must be positive")
    lo, hi = problem.domain.lo, problem.domain.hi
    if family == "basis":
        if system is None:
            system = assemble(problem)
        c = u.values[1:-1]
        r = system.matrix @ c - system.load
        h = problem.h
        return float(np.max(np.abs(r)) / np.sqrt(2.0 * h / 3.0))
    if family != "sine":
        raise ValueError(f"unknown test family {family!r}")
    L = hi - lo
    breaks = np.unique(np.concatenate([u.nodes, [lo, hi]]))
    breaks = breaks[(breaks >= lo) & (breaks <= hi)]
    worst = 0.0
    for k in range(1, test_count + 1):
        phi = lambda x, k=k: np.where((x > lo) & (x < hi), np.sin(k * np.pi * (x - lo) / L), 0.0)
        e = _energy_on_interval(u, phi, problem.kernel, lo, hi, breaks, q)
        worst = max(worst, abs(e - _inner_with_f(problem, phi, q)) / np.sqrt(L / 2.0))
    return worst
