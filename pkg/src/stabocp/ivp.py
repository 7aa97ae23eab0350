"""Forward time stepping with the low-memory stabilized recurrences."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InvalidInputError, StepOverflowError
from .stabcoeffs import (
    ClassicalRkcCoefficients,
    StabilizedCoefficients,
    classical_rkc_coeffs,
    coefficients,
    select_stages,
)

__all__ = [
    "IvpStepOutput",
    "Trajectory",
    "cheb1_step",
    "rkc2_step",
    "classical_rkc_step",
    "stabilized_step",
    "integrate",
]

VectorField = Callable[[np.ndarray], np.ndarray]


@dataclass
class IvpStepOutput:
    next_state: np.ndarray
    internal_stages: Optional[list[np.ndarray]]
    evals: int


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    stages: list[int] = field(default_factory=list)
    evals: int = 0


def _finite(y, stage: int) -> None:
    if not np.all(np.isfinite(y)):
        raise StepOverflowError(f"non-finite value at internal stage {stage}", stage=stage)


def _recurrence_stages(F: VectorField, y, h: float, c: StabilizedCoefficients, keep: bool):
    """Run the shared internal recurrence; return ``(y_{k_s}, stages or None)``."""
    mu, nu, _ = c.padded()
    y0 = np.asarray(y, dtype=float)
    prev = y0
    cur = y0 + mu[1] * h * np.asarray(F(y0), dtype=float)
    _finite(cur, 1)
    stages = [y0, cur] if keep else None
    for i in range(2, c.s + 1):
        prev, cur = cur, mu[i] * h * np.asarray(F(cur), dtype=float) + nu[i] * cur + (1.0 - nu[i]) * prev
        _finite(cur, i)
        if keep:
            stages.append(cur)
    return cur, stages


def cheb1_step(F: VectorField, y, h: float, c: StabilizedCoefficients,
               keep_stages: bool = False) -> IvpStepOutput:
    """One step of the first-order Chebyshev method."""
    if c.order != 1:
        raise InvalidInputError("cheb1_step needs order-1 coefficients")
    last, stages = _recurrence_stages(F, y, h, c, keep_stages)
    return IvpStepOutput(last, stages, c.s)


def rkc2_step(F: VectorField, y, h: float, c: StabilizedCoefficients,
              keep_stages: bool = False) -> IvpStepOutput:
    """One step of second-order RKC: ``a_s y_{k_0} + b_s T_s(omega_0) y_{k_s}``."""
    if c.order != 2:
        raise InvalidInputError("rkc2_step needs order-2 coefficients")
    y0 = np.asarray(y, dtype=float)
    last, stages = _recurrence_stages(F, y0, h, c, keep_stages)
    return IvpStepOutput(c.a_final * y0 + c.b_final_T * last, stages, c.s)


def stabilized_step(F: VectorField, y, h: float, c: StabilizedCoefficients,
                    keep_stages: bool = False) -> IvpStepOutput:
    step = cheb1_step if c.order == 1 else rkc2_step
    return step(F, y, h, c, keep_stages)


def classical_rkc_step(F: VectorField, y, h: float, cc: ClassicalRkcCoefficients,
                       keep_stages: bool = False) -> IvpStepOutput:
    """One step of the classical RKC formulation (``a_{i-1}``-shifted evaluations)."""
    y0 = np.asarray(y, dtype=float)
    f0 = np.asarray(F(y0), dtype=float)
    prev = y0
    cur = y0 + h * cc.b[1] * cc.omega2 * f0
    _finite(cur, 1)
    stages = [y0, cur] if keep_stages else None
    for i in range(2, cc.s + 1):
        nxt = (y0 + cc.mu_prime[i] * h * (np.asarray(F(cur), dtype=float) - cc.a[i - 1] * f0)
               + cc.nu_prime[i] * (cur - y0) + cc.kappa_prime[i] * (prev - y0))
        prev, cur = cur, nxt
        _finite(cur, i)
        if keep_stages:
            stages.append(cur)
    return IvpStepOutput(cur, stages, cc.s)


def integrate(F: VectorField, y0, T: float, N: int, *, method: str = "rkc2",
              s: int | None = None, eta: float | None = None,
              lambda_max: Callable[[np.ndarray], float] | None = None) -> Trajectory:
    """Integrate ``y' = F(y)`` on ``[0, T]`` with ``N`` constant steps.

    ``method`` is ``"cheb1"``, ``"rkc2"`` or ``"rkc-classical"``. Either a
    fixed stage count ``s`` or a spectral-radius estimator ``lambda_max``
    (stage count chosen per step from the current state) must be given.
    """
    if int(N) != N or N < 1:
        raise InvalidInputError(f"N must be a positive integer, got {N!r}")
    if (s is None) == (lambda_max is None):
        raise InvalidInputError("give exactly one of a fixed s or a lambda_max estimator")
    order = {"cheb1": 1, "rkc2": 2, "rkc-classical": 2}.get(method)
    if order is None:
        raise InvalidInputError(f"unknown method {method!r}")
    h = T / N
    y = np.array(y0, dtype=float)
    states = np.empty((N + 1,) + y.shape)
    states[0] = y
    used, evals = [], 0
    for k in range(N):
        sk = s if s is not None else select_stages(h, lambda_max(y), order, eta)
        try:
            if method == "rkc-classical":
                out = classical_rkc_step(F, y, h, classical_rkc_coeffs(sk, 0.15 if eta is None else eta))
            else:
                out = stabilized_step(F, y, h, coefficients(order, sk, eta))
        except StepOverflowError as exc:
            raise StepOverflowError(f"step {k}: {exc}", step=k, stage=exc.stage) from exc
        y = out.next_state
        states[k + 1] = y
        used.append(sk)
        evals += out.evals
    return Trajectory(np.linspace(0.0, T, N + 1), states, used, evals)
