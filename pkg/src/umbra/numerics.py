"""Finite differences with Richardson extrapolation.

These are used as independent checks of the exact jet algebra and as the
derivative source of the integrability test.
"""

from __future__ import annotations

from typing import Callable

import numpy as np


def richardson(estimate: Callable[[float], np.ndarray], h: float, levels: int = 3, power: int = 2):
    """Richardson table for an estimate with error expansion in h**power, h**(2*power), ...

    ``estimate(h)`` is evaluated at h, h/2, ..., h/2**(levels-1); returns the
    extrapolated value and the magnitude of the last correction.
    """
    rows = [np.asarray(estimate(h / 2**k), dtype=float) for k in range(levels)]
    table = [rows]
    for j in range(1, levels):
        factor = 2.0 ** (power * j)
        prev = table[-1]
        table.append([(factor * prev[i + 1] - prev[i]) / (factor - 1.0) for i in range(len(prev) - 1)])
    best = table[-1][0]
    err = np.max(np.abs(best - table[-2][-1])) if levels > 1 else np.inf
    return best, float(err)


def central_derivative(f: Callable[[float], float], x: float, k: int, h: float) -> float:
    """k-th derivative (k <= 4) by the standard central stencil."""
    if k == 1:
        return (f(x + h) - f(x - h)) / (2 * h)
    if k == 2:
        return (f(x + h) - 2 * f(x) + f(x - h)) / h**2
    if k == 3:
        return (f(x + 2 * h) - 2 * f(x + h) + 2 * f(x - h) - f(x - 2 * h)) / (2 * h**3)
    if k == 4:
        return (f(x + 2 * h) - 4 * f(x + h) + 6 * f(x) - 4 * f(x - h) + f(x - 2 * h)) / h**4
    raise ValueError("only derivatives of order 1..4 are supported")


def derivative(f: Callable[[float], float], x: float, k: int, h: float = 1e-2, levels: int = 3) -> float:
    """k-th derivative of a scalar function, central differences + Richardson."""
    val, _ = richardson(lambda s: central_derivative(f, x, k, s), h, levels)
    return float(val)


def directional_derivative(f: Callable[[np.ndarray], float], x, direction, k: int, h: float = 1e-2, levels: int = 3) -> float:
    """k-th derivative of f along ``direction`` at ``x``."""
    x = np.asarray(x, dtype=float)
    d = np.asarray(direction, dtype=float)
    return derivative(lambda t: f(x + t * d), 0.0, k, h, levels)


def gradient(f: Callable[[np.ndarray], float], x, h: float = 1e-5, levels: int = 2) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    eye = np.eye(x.size)
    return np.array([directional_derivative(f, x, e, 1, h, levels) for e in eye])


def jacobian(F: Callable[[np.ndarray], np.ndarray], x, h: float = 1e-5, levels: int = 2) -> np.ndarray:
    """J[i, j] = dF_i/dx_j by Richardson-extrapolated central differences."""
    x = np.asarray(x, dtype=float)
    cols = []
    for e in np.eye(x.size):
        est = lambda s, e=e: (np.asarray(F(x + s * e)) - np.asarray(F(x - s * e))) / (2 * s)
        val, _ = richardson(est, h, levels)
        cols.append(val)
    return np.stack(cols, axis=-1)
