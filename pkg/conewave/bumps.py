"""
Smooth cutoffs built from the e^{-1/x} glue.

    glue(x)        = exp(-1/x) for x > 0, else 0
    smooth_step(x) = glue(x) / (glue(x) + glue(1 - x))      0 for x <= 0, 1 for x >= 1
    psi(rho)       = smooth_step(2 - rho)                    1 on (0, 1], 0 on [2, inf)
    lp_bump(rho)   = psi(rho) - psi(2 rho)                   supported in [1/2, 2]
    chi(rho)       = smooth_step(2(rho-1)) smooth_step(2(2-rho))   supported in [1, 2], chi(1.5) = 1
    cutoff(theta)  = smooth_step((2 delta - |theta|) / delta)      1 on [-delta, delta], 0 off [-2 delta, 2 delta]

The dyadic pieces lp_bump(rho / M), M = 2^j, telescope to psi(rho / 2^b) - psi(rho / 2^(a-1)),
which is identically 1 on [2^a, 2^b].
"""

from __future__ import annotations

import numpy as np


def glue(x):
    x = np.asarray(x, dtype=float)
    positive = x > 0
    safe = np.where(positive, x, 1.0)
    return np.where(positive, np.exp(-1.0 / safe), 0.0)


def smooth_step(x):
    x = np.asarray(x, dtype=float)
    left = glue(x)
    right = glue(1.0 - x)
    return left / (left + right)


def psi(rho):
    return smooth_step(2.0 - np.asarray(rho, dtype=float))


def lp_bump(rho):
    rho = np.asarray(rho, dtype=float)
    return psi(rho) - psi(2.0 * rho)


def chi(rho):
    rho = np.asarray(rho, dtype=float)
    return smooth_step(2.0 * (rho - 1.0)) * smooth_step(2.0 * (2.0 - rho))


def cutoff(theta, delta: float):
    theta = np.asarray(theta, dtype=float)
    return smooth_step((2.0 * delta - np.abs(theta)) / delta)


def dyadic_scales(lo: float, hi: float) -> list[float]:
    """Dyadic M whose pieces lp_bump(rho/M) sum to one on [lo, hi]."""
    a = int(np.floor(np.log2(lo)))
    b = int(np.ceil(np.log2(hi)))
    return [2.0 ** j for j in range(a, b + 1)]
