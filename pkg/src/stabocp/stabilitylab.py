"""Internal-stage stability functions on the negative real axis.

For the scalar test equation ``y' = lambda y`` with ``z = h lambda`` every
internal stage is a polynomial ``R_{s,i}(z)`` in ``z``. This module
evaluates them for the forward methods (closed Chebyshev forms and the
recurrences) and for the double-adjoint costate recurrences, scans their
bounds, and checks the Chebyshev expansion of the undamped double-adjoint
stages via the integer coefficients ``gamma~``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .chebkernel import cheb_values
from .errors import InvalidInputError
from .stabcoeffs import classical_rkc_coeffs, coefficients

__all__ = [
    "STAGE_METHODS",
    "StageStabilityProfile",
    "GammaTable",
    "stage_stability",
    "stage_values",
    "scan_internal_bound",
    "gamma_table",
    "chebyshev_expansion_check",
    "emit_stability_csv",
    "default_grid",
    "stability_interval",
]

STAGE_METHODS = ("cheb1", "rkc2-new", "rkc-classical", "cheb1-da", "rkc2-da")
BOUND_SLACK = 1e-12


@dataclass(frozen=True)
class StageStabilityProfile:
    """Internal stages ``R_{s,0..s}(z)`` and the step amplification ``R_s(z)``.

    For forward methods ``closed_form`` holds the same stages from the
    Chebyshev expressions (``values`` come from running the recurrence).
    For double adjoints, ``values[i]`` is the ``i``-th stage reached by the
    backward sweep: ``values[0] = p_{k+1} = 1`` and ``values[s] = p_k``.
    """

    method: str
    s: int
    eta: float
    z: float
    values: np.ndarray
    final: float
    closed_form: Optional[np.ndarray] = None
    closed_final: Optional[float] = None


@dataclass(frozen=True)
class GammaTable:
    """Integer coefficients ``gamma~^i_j`` (rows ``i = 0..s-1``) by induction and closed form."""

    s: int
    gamma_tilde: np.ndarray
    closed_form: np.ndarray

    @property
    def normalized(self) -> np.ndarray:
        """``gamma^i_j = gamma~^i_j / (i + 1)``."""
        return self.gamma_tilde / (np.arange(self.s)[:, None] + 1.0)

    @property
    def agree(self) -> bool:
        return bool(np.array_equal(self.gamma_tilde, self.closed_form))


def _check_method(method: str) -> None:
    if method not in STAGE_METHODS:
        raise InvalidInputError(f"unknown method {method!r}; choose from {STAGE_METHODS}")


def _default_eta(method: str) -> float:
    return 0.05 if method.startswith("cheb1") else 0.15


def stage_values(method: str, s: int, eta: float | None, z) -> tuple[np.ndarray, np.ndarray]:
    """Recurrence-evaluated stages, vectorized over ``z``.

    Returns ``(values, final)`` with ``values`` of shape ``(s+1, len(z))``.
    """
    _check_method(method)
    eta = _default_eta(method) if eta is None else eta
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if method == "rkc-classical":
        cc = classical_rkc_coeffs(s, eta)
        out = np.empty((s + 1, z.size))
        out[0] = 1.0
        out[1] = 1.0 + cc.b[1] * cc.omega2 * z
        for i in range(2, s + 1):
            out[i] = (1.0 + cc.mu_prime[i] * z * (out[i - 1] - cc.a[i - 1])
                      + cc.nu_prime[i] * (out[i - 1] - 1.0) + cc.kappa_prime[i] * (out[i - 2] - 1.0))
        return out, out[s].copy()
    order = 1 if method.startswith("cheb1") else 2
    c = coefficients(order, s, eta)
    mu, nu, al = c.padded()
    out = np.empty((s + 1, z.size))
    if not method.endswith("-da"):
        out[0] = 1.0
        out[1] = 1.0 + mu[1] * z
        for i in range(2, s + 1):
            out[i] = mu[i] * z * out[i - 1] + nu[i] * out[i - 1] + (1.0 - nu[i]) * out[i - 2]
        final = c.a_final + c.b_final_T * out[s] if order == 2 else out[s].copy()
        return out, final
    # backward costate recurrence with grad_y H = lambda p; ph[i] is the rescaled p_{k_i}
    ph = [None] * (s + 2)
    ph[s] = np.ones_like(z)
    if s >= 2:
        ph[s - 1] = ph[s] + mu[s] / nu[s] * z * ph[s]
        for i in range(s - 2, 0, -1):
            ph[i] = (mu[i + 1] * al[i + 1] * z * ph[i + 1] + nu[i + 1] * al[i + 1] * ph[i + 1]
                     + (1.0 - nu[i + 2]) * al[i + 2] * ph[i + 2]) / al[i]
        pk = mu[1] * al[1] * z * ph[1] + al[1] * ph[1] + (1.0 - nu[2]) * al[2] * ph[2]
    else:
        pk = mu[1] * al[1] * z * ph[1] + al[1] * ph[1]
    if order == 2:
        pk = pk + c.a_final
    for i in range(s):
        out[i] = ph[s - i]
    out[s] = pk
    return out, pk.copy()


def _closed_forms(method: str, s: int, eta: float, z: np.ndarray):
    if method == "rkc-classical":
        cc = classical_rkc_coeffs(s, eta)
        T = cheb_values(s, cc.omega0 + cc.omega2 * z)
        out = cc.a[:, None] + cc.b[:, None] * T
        return out, out[s].copy()
    order = 1 if method == "cheb1" else 2
    c = coefficients(order, s, eta)
    T = cheb_values(s, c.omega0 + c.omega * z)
    T0 = cheb_values(s, np.array([c.omega0]))[:, 0]
    out = T / T0[:, None]
    final = c.a_final + c.b_final_T * out[s] if order == 2 else out[s].copy()
    return out, final


def stage_stability(method: str, s: int, eta: float | None, z: float) -> StageStabilityProfile:
    """Profile of all internal stages at one real ``z``."""
    eta = _default_eta(method) if eta is None else float(eta)
    vals, final = stage_values(method, s, eta, [z])
    closed = closed_final = None
    if not method.endswith("-da"):
        cf, cfin = _closed_forms(method, s, eta, np.array([float(z)]))
        closed, closed_final = cf[:, 0], float(cfin[0])
    return StageStabilityProfile(method, s, eta, float(z), vals[:, 0], float(final[0]), closed, closed_final)


def stability_interval(method: str, s: int, eta: float | None = None) -> tuple[float, float]:
    """Real interval ``[-beta, 0]`` on which ``|R_s| <= 1``, ``beta = (1 + omega_0) / omega``.

    For ``eta = 0`` this is ``[-2 s^2, 0]`` (Chebyshev) and ``[-(2/3)(s^2 - 1), 0]`` (RKC).
    """
    _check_method(method)
    eta = _default_eta(method) if eta is None else float(eta)
    if method == "rkc-classical":
        cc = classical_rkc_coeffs(s, eta)
        return (-(1.0 + cc.omega0) / cc.omega2, 0.0)
    c = coefficients(1 if method.startswith("cheb1") else 2, s, eta)
    return (-(1.0 + c.omega0) / c.omega, 0.0)


def default_grid(interval, s: int, points: int | None = None) -> np.ndarray:
    """``20 s^2`` uniform points on ``interval``, endpoints included."""
    lo, hi = interval
    n = 20 * s * s if points is None else int(points)
    if n <= 0 or hi < lo:
        return np.empty(0)
    return np.linspace(lo, hi, n)


def scan_internal_bound(method: str, s: int, eta: float | None, interval, grid_points: int | None = None,
                        open_interval: bool = False, skip_first: bool = False) -> float:
    """``max_z max_i |R_{s,i}(z)|`` over a uniform grid (final amplification included).

    With ``open_interval`` the two endpoints are dropped; ``skip_first``
    leaves out the trivial stage ``R_{s,0} = 1``.
    """
    z = default_grid(interval, s, grid_points)
    if open_interval:
        z = z[1:-1]
    if z.size == 0:
        return 0.0
    vals, final = stage_values(method, s, eta, z)
    if skip_first:
        vals = vals[1:]
    return float(max(np.max(np.abs(vals)), np.max(np.abs(final))))


def gamma_table(s: int) -> GammaTable:
    """Integer table ``gamma~`` by the three-term induction and by the parity formula."""
    if int(s) != s or s < 1:
        raise InvalidInputError(f"s must be a positive integer, got {s!r}")
    s = int(s)
    g = np.zeros((s, s + 2), dtype=np.int64)  # two spare columns absorb j+1 > i
    g[0, 0] = 1
    if s >= 2:
        g[1, 0], g[1, 1] = 0, 2
    for i in range(2, s):
        g[i, 0] = g[i - 1, 1] - g[i - 2, 0]
        g[i, 1] = 2 * g[i - 1, 0] + g[i - 1, 2] - g[i - 2, 1]
        for j in range(2, i + 1):
            g[i, j] = g[i - 1, j - 1] + g[i - 1, j + 1] - g[i - 2, j]
    closed = np.zeros((s, s), dtype=np.int64)
    for i in range(s):
        closed[i, 0] = 1 if i % 2 == 0 else 0
        for j in range(1, i + 1):
            closed[i, j] = 2 if (i - j) % 2 == 0 else 0
    return GammaTable(s, g[:, :s].copy(), closed)


def chebyshev_expansion_check(s: int, z, method: str = "cheb1-da") -> float:
    """Max residual between undamped double-adjoint stages and ``sum_j gamma^i_j T_j(x)``.

    ``x = 1 + z/s^2`` for the Chebyshev method and ``1 + 3z/(s^2-1)`` for RKC,
    over stages ``i = 0..s-1``.
    """
    if method not in ("cheb1-da", "rkc2-da"):
        raise InvalidInputError("expansion check applies to cheb1-da or rkc2-da")
    z = np.atleast_1d(np.asarray(z, dtype=float))
    vals, _ = stage_values(method, s, 0.0, z)
    x = 1.0 + z / s**2 if method == "cheb1-da" else 1.0 + 3.0 * z / (s**2 - 1)
    T = cheb_values(s - 1, x)
    gam = gamma_table(s).normalized
    expansion = gam @ T
    return float(np.max(np.abs(vals[:s] - expansion))) if z.size else 0.0


def emit_stability_csv(method: str, s: int, eta: float | None, interval, grid=None) -> str:
    """CSV text ``z,R0..Rs,Rfinal`` with 17 significant digits.

    ``grid`` is a point count (default ``20 s^2``) or an explicit array of
    ``z`` values.
    """
    _check_method(method)
    if grid is None or np.isscalar(grid):
        z = default_grid(interval, s, grid)
    else:
        z = np.asarray(grid, dtype=float)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["z"] + [f"R{i}" for i in range(s + 1)] + ["Rfinal"])
    if z.size:
        vals, final = stage_values(method, s, eta, z)
        for k in range(z.size):
            w.writerow([format(v, ".17g") for v in (z[k], *vals[:, k], final[k])])
    return buf.getvalue()
