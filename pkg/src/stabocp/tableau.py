"""Butcher-tableau algebra.

Small dense tableaus only: building the double adjoint and the time adjoint,
the symplectic costate partner, the stability function by determinants, the
order-two conditions, and a brute-force RK stepper used to cross-check the
low-memory recurrences.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    DegenerateWeightsError,
    InvalidInputError,
    OracleSizeError,
    PoleError,
    UnsupportedTableauError,
)

__all__ = [
    "ButcherTableau",
    "PartitionedPair",
    "double_adjoint",
    "time_adjoint",
    "hat_tableau",
    "reverse_stages",
    "is_explicit",
    "is_explicit_after_reversal",
    "stage_order",
    "symplecticity_residual",
    "stability_function",
    "check_order_two",
    "apply_generic_rk",
    "explicit_euler",
    "implicit_euler",
    "heun",
    "dirk2",
    "ORDER_TOL",
    "MAX_ORACLE_STAGES",
]

ORDER_TOL = 1e-12
MAX_ORACLE_STAGES = 12


@dataclass(frozen=True, eq=False)
class ButcherTableau:
    """Runge-Kutta coefficients ``(a_ij, b_i)``; arrays are read-only copies."""

    A: np.ndarray
    b: np.ndarray
    name: str = ""

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        b = np.array(self.b, dtype=float).reshape(-1)
        if A.ndim != 2 or A.shape != (b.size, b.size):
            raise InvalidInputError(f"A must be {b.size}x{b.size}, got shape {A.shape}")
        if not (np.isfinite(A).all() and np.isfinite(b).all()):
            raise InvalidInputError("tableau entries must be finite")
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def s(self) -> int:
        return self.b.size

    @property
    def c(self) -> np.ndarray:
        """Stage abscissae ``c_i = sum_j a_ij``."""
        return self.A.sum(axis=1)

    def allclose(self, other: "ButcherTableau", atol: float = 1e-14) -> bool:
        return (self.s == other.s
                and np.allclose(self.A, other.A, rtol=0, atol=atol)
                and np.allclose(self.b, other.b, rtol=0, atol=atol))

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"ButcherTableau{label}(s={self.s}, A={self.A.tolist()}, b={self.b.tolist()})"


@dataclass(frozen=True)
class PartitionedPair:
    """State tableau and the costate tableau tied to it by symplecticity."""

    state_tableau: ButcherTableau
    costate_tableau: ButcherTableau


def _require_nonzero_weights(t: ButcherTableau) -> None:
    if np.any(t.b == 0.0):
        zero = np.flatnonzero(t.b == 0.0).tolist()
        raise DegenerateWeightsError(f"weights b_i vanish at stages {zero}")


def double_adjoint(t: ButcherTableau) -> ButcherTableau:
    """Costate integrator run backward in time: ``(b_j / b_i) a_ji`` and ``b_i``."""
    _require_nonzero_weights(t)
    b = t.b
    A = (t.A.T * b[np.newaxis, :]) / b[:, np.newaxis]
    return ButcherTableau(A, b, name=f"double adjoint of {t.name}" if t.name else "")


def time_adjoint(t: ButcherTableau) -> ButcherTableau:
    """Inverse method with reversed step: ``a*_ij = b_{s+1-j} - a_{s+1-i,s+1-j}``."""
    b_rev = t.b[::-1]
    A = b_rev[np.newaxis, :] - t.A[::-1, ::-1]
    return ButcherTableau(A, b_rev.copy(), name=f"time adjoint of {t.name}" if t.name else "")


def hat_tableau(t: ButcherTableau) -> PartitionedPair:
    """Pair ``t`` with ``a^_ij = b_j - (b_j/b_i) a_ji``, ``b^_i = b_i``."""
    _require_nonzero_weights(t)
    b = t.b
    A_hat = b[np.newaxis, :] - (t.A.T * b[np.newaxis, :]) / b[:, np.newaxis]
    return PartitionedPair(t, ButcherTableau(A_hat, b.copy()))


def symplecticity_residual(pair: PartitionedPair) -> np.ndarray:
    """Entrywise ``b_i a^_ij + b^_j a_ji - b_i b^_j`` (zero for a symplectic pair)."""
    A, b = pair.state_tableau.A, pair.state_tableau.b
    Ah, bh = pair.costate_tableau.A, pair.costate_tableau.b
    return b[:, None] * Ah + bh[None, :] * A.T - b[:, None] * bh[None, :]


def reverse_stages(t: ButcherTableau) -> ButcherTableau:
    """Relabel stages ``i -> s+1-i``; the method itself is unchanged."""
    return ButcherTableau(t.A[::-1, ::-1], t.b[::-1], name=t.name)


def is_explicit(t: ButcherTableau) -> bool:
    return not np.any(np.triu(t.A))


def is_explicit_after_reversal(t: ButcherTableau) -> bool:
    return is_explicit(reverse_stages(t))


def stage_order(t: ButcherTableau) -> tuple[list[int], bool]:
    """Order in which stages can be solved one at a time.

    Returns ``(order, implicit)`` where ``implicit`` flags a nonzero diagonal
    (diagonally implicit stages). Raises for coupled implicit tableaus.
    """
    A = t.A
    implicit = bool(np.any(np.diag(A)))
    if not np.any(np.triu(A, 1)):
        return list(range(t.s)), implicit
    if not np.any(np.tril(A, -1)):
        return list(range(t.s - 1, -1, -1)), implicit
    raise UnsupportedTableauError("stages are coupled; only (diagonally) explicit "
                                  "tableaus, possibly after stage reversal, are supported")


def stability_function(t: ButcherTableau, z):
    """``det(I - zA + z 1 b^T) / det(I - zA)`` by LU determinants."""
    eye = np.eye(t.s)
    ones_bt = np.outer(np.ones(t.s), t.b)
    den = np.linalg.det(eye - z * t.A)
    if abs(den) < 1e-14:
        raise PoleError(f"I - zA is singular at z={z!r}")
    num = np.linalg.det(eye - z * t.A + z * ones_bt)
    return num / den


def check_order_two(t: ButcherTableau) -> bool:
    """Order conditions ``sum b_i = 1`` and ``sum b_i a_ij = 1/2``."""
    c1 = abs(t.b.sum() - 1.0) <= ORDER_TOL
    c2 = abs(t.b @ t.A.sum(axis=1) - 0.5) <= ORDER_TOL
    return bool(c1 and c2)


def apply_generic_rk(t: ButcherTableau, F: Callable[[np.ndarray], np.ndarray],
                     y, h: float) -> np.ndarray:
    """One step of the standard-form RK method (test oracle only)."""
    if t.s > MAX_ORACLE_STAGES:
        raise OracleSizeError(f"oracle limited to {MAX_ORACLE_STAGES} stages, got s={t.s}")
    order, implicit = stage_order(t)
    if implicit:
        raise UnsupportedTableauError("apply_generic_rk only handles explicit tableaus")
    y = np.asarray(y, dtype=float)
    K = [None] * t.s
    for i in order:
        yi = y.copy()
        for j in range(t.s):
            if t.A[i, j] != 0.0:
                yi = yi + h * t.A[i, j] * K[j]
        K[i] = np.asarray(F(yi), dtype=float)
    out = y.copy()
    for i in range(t.s):
        out = out + h * t.b[i] * K[i]
    return out


explicit_euler = ButcherTableau([[0.0]], [1.0], name="explicit Euler")
implicit_euler = ButcherTableau([[1.0]], [1.0], name="implicit Euler")
heun = ButcherTableau([[0.0, 0.0], [1.0, 0.0]], [0.5, 0.5], name="Heun")

_GAMMA = 1.0 - np.sqrt(2.0) / 2.0
# L-stable, order two
dirk2 = ButcherTableau([[_GAMMA, 0.0], [1.0 - 2.0 * _GAMMA, _GAMMA]], [0.5, 0.5], name="DIRK2")
