"""numba-compiled versions of the hot loops.

Signatures mirror `nlreg.hot._numpy`; results agree to rounding (the Monte
Carlo counter uses numba's own generator, so counts agree only statistically).
"""
import numpy as np
from numba import njit

_G1 = 0.5 - np.sqrt(3.0) / 6.0
_G2 = 0.5 + np.sqrt(3.0) / 6.0


@njit(cache=True)
def _interp(m0, h, values, t):
    n = values.size
    u = (t - m0) / h
    if u < 0.0 or u > n - 1:
        return 0.0
    j = int(np.floor(u))
    if j > n - 2:
        j = n - 2
    r = u - j
    return values[j] * (1.0 - r) + values[j + 1] * r


@njit(cache=True)
def _piece(La, Lb, length, p):
    a, b = abs(La), abs(Lb)
    hi, lo = max(a, b), min(a, b)
    if hi == 0.0:
        return 0.0
    if La * Lb < 0.0:
        return length * (a ** (p + 1) + b ** (p + 1)) / ((p + 1) * (a + b))
    if hi - lo <= 1e-3 * hi:
        return length * (a**p + 4.0 * (0.5 * (a + b)) ** p + b**p) / 6.0
    return length * (hi ** (p + 1) - lo ** (p + 1)) / ((p + 1) * (hi - lo))


@njit(cache=True)
def difference_lp(m0, h, values, A, B, z, coeffs, p):
    if not B > A:
        return 0.0
    n = values.size
    l = coeffs.size - 1
    cnt = 2
    for i in range(l + 1):
        lo = max(int(np.ceil((A + i * z - m0) / h)), 0)
        hi = min(int(np.floor((B + i * z - m0) / h)), n - 1)
        if hi >= lo:
            cnt += hi - lo + 1
    pts = np.empty(cnt)
    pts[0] = A
    pts[1] = B
    k = 2
    for i in range(l + 1):
        lo = max(int(np.ceil((A + i * z - m0) / h)), 0)
        hi = min(int(np.floor((B + i * z - m0) / h)), n - 1)
        for j in range(lo, hi + 1):
            pts[k] = m0 + j * h - i * z
            k += 1
    pts = np.sort(pts)
    total = 0.0
    for q in range(cnt - 1):
        a, b = pts[q], pts[q + 1]
        if a < A or b > B:
            continue
        length = b - a
        if length <= 0.0:
            continue
        x1 = a + _G1 * length
        x2 = a + _G2 * length
        f1 = 0.0
        f2 = 0.0
        for i in range(l + 1):
            c = coeffs[i]
            if c != 0.0:
                f1 += c * _interp(m0, h, values, x1 + i * z)
                f2 += c * _interp(m0, h, values, x2 + i * z)
        slope = (f2 - f1) / (_G2 - _G1)
        La = f1 - slope * _G1
        total += _piece(La, La + slope, length, p)
    return total


# not cached: each coefficient function is a distinct type, and the on-disk
# index would pickle references to the modules that defined them
@njit
def pair_loop(n_el, a0, h, m_list, rule_off, rx, rd, P, node_off, coef, A):
    for k in range(m_list.size):
        m = m_list[k]
        s0, s1 = rule_off[k], rule_off[k + 1]
        for e in range(n_el - m):
            xe = a0 + e * h
            local = np.zeros(16)
            for t in range(s0, s1):
                x = xe + rx[t]
                c = coef(x, x + rd[t])
                for ab in range(16):
                    local[ab] += c * P[t, ab // 4, ab % 4]
            for a in range(4):
                for b in range(4):
                    A[e + node_off[k, a], e + node_off[k, b]] += local[4 * a + b]


@njit(cache=True)
def ball_mc_count(R, z, lo, hi, samples, seed):
    np.random.seed(seed)
    n = z.size
    count = 0
    R2 = R * R
    for _ in range(samples):
        r1 = 0.0
        r2 = 0.0
        for d in range(n):
            x = lo[d] + (hi[d] - lo[d]) * np.random.random()
            r1 += x * x
            r2 += (x - z[d]) ** 2
        if (r1 < R2) != (r2 < R2):
            count += 1
    return count
