"""Independent reference values used by the tests."""

import math

import numpy as np
from scipy import optimize, special


def interval_density_sup(q, half_width=1.0):
    """``max w`` for ``-w'' = w^(q-1)`` on ``(-L, L)``.

    From the first integral ``w'^2/2 + w^q/q = M^q/q``:
    ``L = M^(1-q/2) sqrt(q/2) I_q`` with ``I_q = B(1/q, 1/2)/q``.
    """
    I = special.beta(1 / q, 0.5) / q
    return (half_width / (math.sqrt(q / 2) * I)) ** (2 / (2 - q))


def bessel_j01():
    """First zero of J_0 by bracketing the series-backed ``special.j0``."""
    return optimize.brentq(special.j0, 2.0, 3.0, xtol=1e-15)


def discrete_interval_eigenvalue(length, h):
    return 4 / h ** 2 * math.sin(math.pi * h / (2 * length)) ** 2


def minimize_energy(A, cell, q, x0):
    """Discrete Lane-Emden density by L-BFGS on the energy functional."""

    def energy(u):
        pos = np.maximum(u, 0)
        Au = A @ u
        return (0.5 * cell * u @ Au - cell / q * np.sum(pos ** q),
                cell * (Au - pos ** (q - 1)))

    res = optimize.minimize(energy, x0, jac=True, method="L-BFGS-B",
                            options={"ftol": 1e-16, "gtol": 1e-14, "maxiter": 20000})
    return res.x


def xorshift64star(seed, n):
    """Reference stream computed with numpy uint64 wraparound arithmetic."""
    x = np.uint64(seed if seed else 0x9E3779B97F4A7C15)
    out = []
    with np.errstate(over="ignore"):
        for _ in range(n):
            x ^= x >> np.uint64(12)
            x ^= x << np.uint64(25)
            x ^= x >> np.uint64(27)
            out.append(int(x * np.uint64(0x2545F4914F6CDD1D)))
    return out
