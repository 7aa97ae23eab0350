"""Chebyshev polynomials of the first kind and their first two derivatives.

Everything is evaluated with the three-term recurrence
``T_j = 2 x T_{j-1} - T_{j-2}`` and its differentiated forms, which keeps
the evaluation stable for the large degrees used by stabilized integrators.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

__all__ = ["ChebEval", "cheb_eval", "cheb_table", "cheb_values"]


class ChebEval(NamedTuple):
    """Value and first two derivatives of ``T_degree`` at a point."""

    value: float
    first_derivative: float
    second_derivative: float


def _check_degree(degree: int) -> None:
    if int(degree) != degree or degree < 0:
        raise ValueError(f"degree must be a nonnegative integer, got {degree!r}")


def cheb_table(degree: int, x: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``T_j(x)``, ``T_j'(x)`` and ``T_j''(x)`` for ``j = 0..degree``.

    Derivatives come from differentiating the recurrence:

        T'_j  = 2 T_{j-1}  + 2 x T'_{j-1}  - T'_{j-2}
        T''_j = 4 T'_{j-1} + 2 x T''_{j-1} - T''_{j-2}
    """
    _check_degree(degree)
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"x must be finite, got {x!r}")
    t = np.zeros(degree + 1)
    dt = np.zeros(degree + 1)
    ddt = np.zeros(degree + 1)
    t[0] = 1.0
    if degree >= 1:
        t[1] = x
        dt[1] = 1.0
    for j in range(2, degree + 1):
        t[j] = 2.0 * x * t[j - 1] - t[j - 2]
        dt[j] = 2.0 * t[j - 1] + 2.0 * x * dt[j - 1] - dt[j - 2]
        ddt[j] = 4.0 * dt[j - 1] + 2.0 * x * ddt[j - 1] - ddt[j - 2]
    return t, dt, ddt


def cheb_eval(degree: int, x: float) -> ChebEval:
    """Evaluate ``T_degree`` and its first two derivatives at ``x``.

    >>> cheb_eval(2, 1.0)
    ChebEval(value=1.0, first_derivative=4.0, second_derivative=4.0)
    """
    t, dt, ddt = cheb_table(degree, x)
    return ChebEval(float(t[-1]), float(dt[-1]), float(ddt[-1]))


def cheb_values(degree: int, x) -> np.ndarray:
    """Vectorized ``T_j(x)`` for ``j = 0..degree`` over an array of points.

    Returns an array of shape ``(degree + 1,) + np.shape(x)``.
    """
    _check_degree(degree)
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("x must be finite")
    out = np.empty((degree + 1,) + x.shape)
    out[0] = 1.0
    if degree >= 1:
        out[1] = x
    for j in range(2, degree + 1):
        out[j] = 2.0 * x * out[j - 1] - out[j - 2]
    return out
