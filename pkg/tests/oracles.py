"""Independent reference values computed with nested adaptive quadrature.

``hat_energy`` evaluates E(φ_i, φ_j) for the fractional kernel on a uniform
mesh of (-1, 1) directly from the definition: the interior double integral
in (x, d = y - x) coordinates with scipy's adaptive quad, plus twice the
exterior term ∫ φ_i φ_j κ with κ(x) = ((1+x)^-2s + (1-x)^-2s) / (2s).
It shares no code with the package.  ``FROZEN_HAT_ENERGY`` holds its output
for 16 intervals, produced by ``python tests/oracles.py``.
"""
import numpy as np
from scipy import integrate


def _hat(i, n):
    h = 2.0 / n
    xi = -1.0 + i * h
    return lambda x: max(0.0, 1.0 - abs(x - xi) / h)


def hat_energy(i, j, n, s, tol=1e-12):
    phi, psi = _hat(i, n), _hat(j, n)
    nodes = np.linspace(-1.0, 1.0, n + 1)
    e = -1.0 - 2.0 * s

    def inner(x):
        fx, gx = phi(x), psi(x)
        cuts = sorted({-1.0 - x, 1.0 - x, 0.0, *(nodes - x)})
        total = 0.0
        for a, b in zip(cuts[:-1], cuts[1:]):
            if b - a < 1e-15:
                continue
            f = lambda d: (fx - phi(x + d)) * (gx - psi(x + d)) * abs(d) ** e
            total += integrate.quad(f, a, b, epsabs=tol, epsrel=tol, limit=200)[0]
        return total

    double = 0.0
    for a, b in zip(nodes[:-1], nodes[1:]):
        double += integrate.quad(inner, a, b, epsabs=tol, epsrel=tol, limit=200)[0]
    kappa = lambda x: ((1.0 + x) ** (-2 * s) + (1.0 - x) ** (-2 * s)) / (2 * s)
    ext = 0.0
    for a, b in zip(nodes[:-1], nodes[1:]):
        ext += integrate.quad(lambda x: phi(x) * psi(x) * kappa(x), a, b,
                              epsabs=tol, epsrel=tol, limit=200)[0]
    return double + 2.0 * ext


ENTRIES = [(1, 1), (8, 8), (8, 9), (8, 10), (3, 12), (1, 15)]
S_VALUES = [0.3, 0.5, 0.75]

FROZEN_HAT_ENERGY = {
    (0.3, 1, 1): 2.7594026954455444,
    (0.3, 8, 8): 2.7594026954455444,
    (0.3, 8, 9): -0.15709249776062814,
    (0.3, 8, 10): -0.3677307239972346,
    (0.3, 3, 12): -0.02610749994015253,
    (0.3, 1, 15): -0.01280950939116126,
    (0.5, 1, 1): 5.545177444479563,
    (0.5, 8, 8): 5.545177444479563,
    (0.5, 8, 9): -1.2028442909461374,
    (0.5, 8, 10): -0.7338002806950117,
    (0.5, 3, 12): -0.02500196994046342,
    (0.5, 1, 15): -0.010256545587720774,
    (0.75, 1, 1): 23.564149326113984,
    (0.75, 8, 8): 23.564149326113803,
    (0.75, 8, 9): -8.87441183972406,
    (0.75, 8, 10): -1.8700610566701727,
    (0.75, 3, 12): -0.02370823063848528,
    (0.75, 1, 15): -0.007771502941137414,
}


if __name__ == "__main__":
    for s in S_VALUES:
        for i, j in ENTRIES:
            print(f"    ({s}, {i}, {j}): {hat_energy(i, j, 16, s)!r},", flush=True)
