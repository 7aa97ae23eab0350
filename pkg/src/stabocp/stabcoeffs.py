"""Coefficients of the stabilized Chebyshev (order 1) and RKC (order 2) methods.

Both methods share the internal recurrence

    y_{k_1} = y_k + mu_1 h F(y_{k_0})
    y_{k_i} = mu_i h F(y_{k_{i-1}}) + nu_i y_{k_{i-1}} + (1 - nu_i) y_{k_{i-2}}

and differ in the final combination (``y_{k_s}`` for order 1,
``a_s y_{k_0} + b_s T_s(omega_0) y_{k_s}`` for order 2). The classical RKC
coefficients are kept for comparison of internal stages.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .chebkernel import cheb_table
from .errors import InvalidInputError
from .tableau import ButcherTableau

__all__ = [
    "StabilizedCoefficients",
    "ClassicalRkcCoefficients",
    "cheb1_coeffs",
    "rkc2_coeffs",
    "classical_rkc_coeffs",
    "coefficients",
    "select_stages",
    "stage_abscissae",
    "unroll_tableau",
    "DEFAULT_ETA",
]

DEFAULT_ETA = {1: 0.05, 2: 0.15}


def _frozen(x) -> np.ndarray:
    arr = np.array(x, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class StabilizedCoefficients:
    """Recurrence coefficients for one ``(s, eta, order)``.

    ``mu`` holds ``mu_1..mu_s``, ``nu`` holds ``nu_2..nu_s`` and ``alpha``
    holds the costate rescaling factors ``alpha_1..alpha_s``. ``omega`` is
    ``omega_1`` for order 1 and ``omega_2`` for order 2.
    """

    s: int
    eta: float
    order: int
    omega0: float
    omega: float
    mu: np.ndarray
    nu: np.ndarray
    a_final: float
    b_final_T: float
    alpha: np.ndarray

    def mu_at(self, i: int) -> float:
        return float(self.mu[i - 1])

    def nu_at(self, i: int) -> float:
        return float(self.nu[i - 2])

    def alpha_at(self, j: int) -> float:
        return float(self.alpha[j - 1])

    def padded(self) -> tuple[list[float], list[float], list[float]]:
        """``mu``, ``nu``, ``alpha`` as 1-based lists (index 0 unused, tail zero-padded)."""
        s = self.s
        mu = [math.nan] + [float(v) for v in self.mu] + [0.0]
        nu = [math.nan, math.nan] + [float(v) for v in self.nu] + [0.0]
        alpha = [math.nan] + [float(v) for v in self.alpha] + [0.0]
        assert len(mu) == len(nu) == len(alpha) == s + 2
        return mu, nu, alpha


@dataclass(frozen=True, eq=False)
class ClassicalRkcCoefficients:
    """Coefficients of the classical RKC formulation, 0-based by stage index.

    ``a``/``b`` have length ``s+1`` (``b_0 = b_1 = b_2``); ``mu_prime``,
    ``nu_prime``, ``kappa_prime`` have length ``s+1`` with entries 0 and 1
    set to NaN (they are used for ``i = 2..s`` only).
    """

    s: int
    eta: float
    omega0: float
    omega2: float
    mu_prime: np.ndarray
    nu_prime: np.ndarray
    kappa_prime: np.ndarray
    a: np.ndarray
    b: np.ndarray


def _alpha(s: int, nu: list[float], alpha_s: float) -> np.ndarray:
    # nu is 1-based, padded so that nu[s + 1] exists
    alpha = [0.0] * (s + 2)
    alpha[s] = alpha_s
    if s >= 2:
        alpha[s - 1] = nu[s] * alpha[s]
    for j in range(2, s):
        alpha[s - j] = nu[s - j + 1] * alpha[s - j + 1] + (1.0 - nu[s - j + 2]) * alpha[s - j + 2]
    return np.array(alpha[1:s + 1])


def _check_stages(s, minimum: int) -> int:
    if int(s) != s or s < minimum:
        raise InvalidInputError(f"stage count must be an integer >= {minimum}, got {s!r}")
    return int(s)


def _check_eta(eta) -> float:
    eta = float(eta)
    if not math.isfinite(eta) or eta < 0.0:
        raise InvalidInputError(f"damping eta must be finite and >= 0, got {eta!r}")
    return eta


def _recurrence(s: int, omega0: float, omega: float, t: np.ndarray):
    mu = [omega / omega0]
    nu = []
    for i in range(2, s + 1):
        mu.append(2.0 * omega * t[i - 1] / t[i])
        nu.append(2.0 * omega0 * t[i - 1] / t[i])
    return mu, nu


@lru_cache(maxsize=None)
def _cheb1(s: int, eta: float) -> StabilizedCoefficients:
    omega0 = 1.0 + eta / s**2
    t, dt, _ = cheb_table(s, omega0)
    omega1 = t[s] / dt[s]
    mu, nu = _recurrence(s, omega0, omega1, t)
    alpha = _alpha(s, [math.nan, math.nan] + nu + [0.0], 1.0)
    return StabilizedCoefficients(s, eta, 1, omega0, float(omega1), _frozen(mu), _frozen(nu),
                                  0.0, 1.0, _frozen(alpha))


@lru_cache(maxsize=None)
def _rkc2(s: int, eta: float) -> StabilizedCoefficients:
    omega0 = 1.0 + eta / s**2
    t, dt, ddt = cheb_table(s, omega0)
    omega2 = dt[s] / ddt[s]
    b_s = ddt[s] / dt[s] ** 2
    bT = b_s * t[s]
    a_s = 1.0 - bT
    mu, nu = _recurrence(s, omega0, omega2, t)
    alpha = _alpha(s, [math.nan, math.nan] + nu + [0.0], bT)
    return StabilizedCoefficients(s, eta, 2, omega0, float(omega2), _frozen(mu), _frozen(nu),
                                  float(a_s), float(bT), _frozen(alpha))


def cheb1_coeffs(s: int, eta: float = DEFAULT_ETA[1]) -> StabilizedCoefficients:
    """First-order Chebyshev coefficients (``s = 1`` is explicit Euler)."""
    return _cheb1(_check_stages(s, 1), _check_eta(eta))


def rkc2_coeffs(s: int, eta: float = DEFAULT_ETA[2]) -> StabilizedCoefficients:
    """Second-order RKC coefficients in the Chebyshev-like formulation."""
    return _rkc2(_check_stages(s, 2), _check_eta(eta))


def coefficients(order: int, s: int, eta: float | None = None) -> StabilizedCoefficients:
    if order == 1:
        return cheb1_coeffs(s, DEFAULT_ETA[1] if eta is None else eta)
    if order == 2:
        return rkc2_coeffs(s, DEFAULT_ETA[2] if eta is None else eta)
    raise InvalidInputError(f"order must be 1 or 2, got {order!r}")


@lru_cache(maxsize=None)
def _classical(s: int, eta: float) -> ClassicalRkcCoefficients:
    omega0 = 1.0 + eta / s**2
    t, dt, ddt = cheb_table(s, omega0)
    b = np.empty(s + 1)
    b[2:] = ddt[2:] / dt[2:] ** 2
    b[0] = b[1] = b[2]
    a = 1.0 - b * t
    omega2 = dt[s] / ddt[s]
    mu_p = np.full(s + 1, np.nan)
    nu_p = np.full(s + 1, np.nan)
    kappa_p = np.full(s + 1, np.nan)
    for i in range(2, s + 1):
        mu_p[i] = 2.0 * b[i] * omega2 / b[i - 1]
        nu_p[i] = 2.0 * b[i] * omega0 / b[i - 1]
        kappa_p[i] = -b[i] / b[i - 2]
    return ClassicalRkcCoefficients(s, eta, omega0, float(omega2), _frozen(mu_p), _frozen(nu_p),
                                    _frozen(kappa_p), _frozen(a), _frozen(b))


def classical_rkc_coeffs(s: int, eta: float = DEFAULT_ETA[2]) -> ClassicalRkcCoefficients:
    return _classical(_check_stages(s, 2), _check_eta(eta))


def select_stages(h: float, lambda_max: float, order: int, eta: float | None = None) -> int:
    """Stage count covering ``h * lambda_max`` by the stability interval.

    Uses ``[sqrt((h lambda + 1.5) / C) + 0.5]`` with ``C = 2 - 4 eta / 3``
    (order 1) or ``C = 0.65`` (order 2), rounded half-up, and clamped to
    the minimum stage count of the method.
    """
    h = float(h)
    lambda_max = float(lambda_max)
    if not (math.isfinite(h) and h > 0.0):
        raise InvalidInputError(f"step size must be positive, got {h!r}")
    if not (math.isfinite(lambda_max) and lambda_max >= 0.0):
        raise InvalidInputError(f"spectral radius must be >= 0, got {lambda_max!r}")
    if order == 1:
        eta = DEFAULT_ETA[1] if eta is None else _check_eta(eta)
        denom = 2.0 - 4.0 * eta / 3.0
        minimum = 1
    elif order == 2:
        denom = 0.65
        minimum = 2
    else:
        raise InvalidInputError(f"order must be 1 or 2, got {order!r}")
    x = math.sqrt((h * lambda_max + 1.5) / denom) + 0.5
    return max(minimum, math.floor(x + 0.5))


def stage_abscissae(c: StabilizedCoefficients) -> np.ndarray:
    """Times ``c_0..c_s`` (in units of ``h``) at which the internal stages sit."""
    mu, nu, _ = c.padded()
    out = np.zeros(c.s + 1)
    out[1] = mu[1]
    for i in range(2, c.s + 1):
        out[i] = mu[i] + nu[i] * out[i - 1] + (1.0 - nu[i]) * out[i - 2]
    return out


def unroll_tableau(c: StabilizedCoefficients) -> ButcherTableau:
    """Standard-form tableau of the recurrence (stage ``i+1`` is ``y_{k_i}``).

    Only meant for small ``s``: the dense form loses the round-off stability
    of the two-term recurrence.
    """
    s = c.s
    mu, nu, _ = c.padded()
    rows = np.zeros((s + 1, s))
    rows[1, 0] = mu[1]
    for i in range(2, s + 1):
        rows[i] = nu[i] * rows[i - 1] + (1.0 - nu[i]) * rows[i - 2]
        rows[i, i - 1] += mu[i]
    b = rows[s] * c.b_final_T
    tag = "Chebyshev" if c.order == 1 else "RKC"
    return ButcherTableau(rows[:s], b, name=f"{tag} s={s} eta={c.eta}")
