"""Pure-numpy versions of the hot loops (reference implementation)."""
import numpy as np

_G1 = 0.5 - np.sqrt(3.0) / 6.0
_G2 = 0.5 + np.sqrt(3.0) / 6.0


def interp_zero(m0, h, values, t):
    """P1 interpolant of nodal values on m0 + j*h, extended by zero."""
    n = values.size
    u = (np.asarray(t, dtype=float) - m0) / h
    inside = (u >= 0.0) & (u <= n - 1)
    j = np.clip(np.floor(u).astype(np.int64), 0, n - 2)
    r = u - j
    out = values[j] * (1.0 - r) + values[j + 1] * r
    return np.where(inside, out, 0.0)


def abs_pow_integral(La, Lb, length, p):
    """∫ |L|**p over a piece on which L is linear with end values La, Lb."""
    a, b = np.abs(La), np.abs(Lb)
    cross = La * Lb < 0.0
    hi, lo = np.maximum(a, b), np.minimum(a, b)
    near = (hi - lo) <= 1e-3 * hi
    with np.errstate(divide="ignore", invalid="ignore"):
        generic = (hi ** (p + 1) - lo ** (p + 1)) / ((p + 1) * (hi - lo))
        crossing = (a ** (p + 1) + b ** (p + 1)) / ((p + 1) * (a + b))
    simpson = (a**p + 4.0 * (0.5 * (a + b)) ** p + b**p) / 6.0
    val = np.where(cross, crossing, np.where(near, simpson, generic))
    val = np.where(hi == 0.0, 0.0, val)
    return float(np.sum(length * val))


def _break_candidates(m0, h, n, A, B, z, l):
    pts = [np.array([A, B])]
    for i in range(l + 1):
        lo = int(np.ceil((A + i * z - m0) / h))
        hi = int(np.floor((B + i * z - m0) / h))
        lo, hi = max(lo, 0), min(hi, n - 1)
        if hi >= lo:
            pts.append(m0 + np.arange(lo, hi + 1) * h - i * z)
    b = np.sort(np.concatenate(pts))
    return b[(b >= A) & (b <= B)]


def difference_lp(m0, h, values, A, B, z, coeffs, p):
    """∫_A^B |Σ_i coeffs[i] ũ(x + i z)|**p dx for the zero-extended P1 ũ."""
    if not B > A:
        return 0.0
    l = coeffs.size - 1
    b = _break_candidates(m0, h, values.size, A, B, z, l)
    lo, hi = b[:-1], b[1:]
    length = hi - lo
    keep = length > 0.0
    lo, length = lo[keep], length[keep]
    x1 = lo + _G1 * length
    x2 = lo + _G2 * length
    f1 = np.zeros_like(x1)
    f2 = np.zeros_like(x2)
    for i, c in enumerate(coeffs):
        if c != 0.0:
            f1 += c * interp_zero(m0, h, values, x1 + i * z)
            f2 += c * interp_zero(m0, h, values, x2 + i * z)
    slope = (f2 - f1) / (_G2 - _G1)
    La = f1 - slope * _G1
    Lb = La + slope
    return abs_pow_integral(La, Lb, length, p)


def pair_loop(n_el, a0, h, m_list, rule_off, rx, rd, P, node_off, coef, A):
    """Accumulate coefficient-weighted local pair matrices into A (in place).

    For offset m = m_list[k] and element e the quadrature points are
    x = a0 + e h + rx, y = x + rd, each carrying the 4x4 product table
    P[pt] (weight, kernel power and hat differences folded in); local slot a
    maps to node e + node_off[k, a].
    """
    for k, m in enumerate(m_list):
        s0, s1 = rule_off[k], rule_off[k + 1]
        if s1 == s0:
            continue
        e = np.arange(n_el - m)
        x = a0 + e[:, None] * h + rx[None, s0:s1]
        y = x + rd[None, s0:s1]
        c = coef(x, y)
        local = c @ P[s0:s1].reshape(s1 - s0, 16)
        for a in range(4):
            for b in range(4):
                A[e + node_off[k, a], e + node_off[k, b]] += local[:, 4 * a + b]


def ball_mc_count(R, z, lo, hi, samples, seed, chunk=1_000_000):
    """Count uniform samples of the box [lo, hi] lying in B_R(0) Δ B_R(z)."""
    rng = np.random.default_rng(seed)
    count = 0
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        x = lo + (hi - lo) * rng.random((m, z.size))
        in1 = np.sum(x * x, axis=1) < R * R
        in2 = np.sum((x - z) ** 2, axis=1) < R * R
        count += int(np.count_nonzero(in1 != in2))
        done += m
    return count
