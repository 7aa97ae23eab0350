"""Forward state sweeps, backward costate sweeps and control stationarity.

Two families of discretizations share one storage layout
(:class:`SweepRecord`):

* :class:`RecurrenceScheme` - the stabilized Chebyshev / RKC recurrences for
  the state and their explicit double-adjoint recurrences (with the
  ``alpha``-rescaled costate stages) for the costate;
* :class:`TableauScheme` - any standard-form tableau (explicit or
  diagonally implicit, possibly after stage reversal) for the state with a
  costate tableau (its double adjoint by default).

In both, control stage ``i`` enters the dynamics together with state stage
``state_stages[k, i]`` and is paired for stationarity with
``costate_stages[k, i]``. For the recurrence this costate entry is the
rescaled ``p_{k_{i+1}}``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    DegenerateRescalingError,
    InvalidInputError,
    NewtonError,
    StationarityError,
    StepOverflowError,
)
from .problems import ControlProblem, dense_state_jacobian
from .stabcoeffs import StabilizedCoefficients, stage_abscissae, unroll_tableau
from .tableau import ButcherTableau, double_adjoint, stage_order

__all__ = [
    "SweepRecord",
    "StationaritySolver",
    "RecurrenceScheme",
    "TableauScheme",
    "NaiveCostateScheme",
    "forward_sweep",
    "costate_sweep_cheb",
    "costate_sweep_rkc",
    "tableau_forward_sweep",
    "tableau_costate_sweep",
    "stationarity_update",
    "solve_control_stationarity",
]

NEWTON_TOL = 1e-12
NEWTON_MAX_ITERS = 25
ALPHA_TINY = 1e-300


@dataclass
class SweepRecord:
    """Storage for one forward/backward pass over a uniform grid."""

    h: float
    grid: np.ndarray
    states: np.ndarray
    state_stages: np.ndarray
    controls: np.ndarray
    costates: np.ndarray
    costate_stages: np.ndarray
    f_evals: int = 0
    adjoint_evals: int = 0

    @classmethod
    def allocate(cls, problem: ControlProblem, N: int, s: int, stage_slots: int) -> "SweepRecord":
        n, m = problem.state_dim, problem.control_dim
        h = problem.horizon / N
        return cls(
            h=h,
            grid=np.linspace(0.0, problem.horizon, N + 1),
            states=np.zeros((N + 1, n)),
            state_stages=np.zeros((N, stage_slots, n)),
            controls=np.zeros((N, s, m)),
            costates=np.zeros((N + 1, n)),
            costate_stages=np.zeros((N, s, n)),
        )

    @property
    def N(self) -> int:
        return self.controls.shape[0]

    @property
    def s(self) -> int:
        return self.controls.shape[1]


def _check_controls(problem: ControlProblem, controls, s: int) -> np.ndarray:
    controls = np.asarray(controls, dtype=float)
    if controls.ndim != 3 or controls.shape[1:] != (s, problem.control_dim):
        raise InvalidInputError(
            f"controls must have shape (N, {s}, {problem.control_dim}), got {controls.shape}")
    return controls


def _overflow(k: int, i: int) -> StepOverflowError:
    return StepOverflowError(f"non-finite state at step {k}, internal stage {i}", step=k, stage=i)


# --- stabilized recurrences ---------------------------------------------------------

def forward_sweep(problem: ControlProblem, controls, c: StabilizedCoefficients,
                  rec: Optional[SweepRecord] = None) -> float:
    """State recurrence driven by stage controls; returns ``Psi(y_N)``.

    With ``rec`` given, grid states, all internal stages and the controls are
    stored in it; without, only the cost is computed.
    """
    controls = _check_controls(problem, controls, c.s)
    N = controls.shape[0]
    h = problem.horizon / N
    f = problem.dynamics
    mu, nu, _ = c.padded()
    s = c.s
    step1 = mu[1] * h
    hmu = [0.0] + [mu[i] * h for i in range(1, s + 1)]
    final2 = c.order == 2
    a_s, bT = c.a_final, c.b_final_T
    y = np.array(problem.initial_state, dtype=float)
    if rec is not None:
        rec.controls[...] = controls
        rec.states[0] = y
    for k in range(N):
        U = controls[k]
        y0 = y
        prev = y0
        cur = y0 + step1 * f(U[0], y0)
        if rec is not None:
            st = rec.state_stages[k]
            st[0] = y0
            st[1] = cur
        for i in range(2, s + 1):
            nxt = f(U[i - 1], cur)
            nxt *= hmu[i]
            nxt += nu[i] * cur
            nxt += (1.0 - nu[i]) * prev
            prev, cur = cur, nxt
            if rec is not None:
                st[i] = cur
        y = a_s * y0 + bT * cur if final2 else cur
        if not np.isfinite(y).all():
            raise _overflow(k, _first_bad_stage(f, U, y0, h, c))
        if rec is not None:
            rec.states[k + 1] = y
    if rec is not None:
        rec.f_evals += N * s
    return float(problem.cost(y))


def _first_bad_stage(f, U, y0, h, c) -> int:
    """Re-run one step to find the first internal stage that is not finite."""
    mu, nu, _ = c.padded()
    prev, cur = y0, y0 + mu[1] * h * f(U[0], y0)
    with np.errstate(all="ignore"):
        for i in range(1, c.s + 1):
            if not np.isfinite(cur).all():
                return i
            if i < c.s:
                prev, cur = cur, mu[i + 1] * h * f(U[i], cur) + nu[i + 1] * cur + (1.0 - nu[i + 1]) * prev
    return c.s


def _costate_recurrence(problem: ControlProblem, rec: SweepRecord, c: StabilizedCoefficients,
                        closing_shift: float) -> None:
    s = c.s
    mu, nu, al = c.padded()
    for j in range(1, s + 1):
        if abs(al[j]) < ALPHA_TINY:
            raise DegenerateRescalingError(f"alpha_{j} vanishes for s={s}, eta={c.eta}")
    h = rec.h
    g = problem.adjoint_product
    # coefficients of the rescaled stages i = s-2 .. 1
    grad_w = [0.0] * (s + 1)
    keep_w = [0.0] * (s + 1)
    back_w = [0.0] * (s + 1)
    for i in range(1, s - 1):
        grad_w[i] = mu[i + 1] * al[i + 1] / al[i] * h
        keep_w[i] = nu[i + 1] * al[i + 1] / al[i]
        back_w[i] = (1.0 - nu[i + 2]) * al[i + 2] / al[i]
    first_w = mu[s] / nu[s] * h if s >= 2 else 0.0
    close_grad = mu[1] * al[1] * h
    close_1 = al[1]
    close_2 = (1.0 - nu[2]) * al[2] if s >= 2 else 0.0

    N = rec.N
    p = np.asarray(problem.cost_gradient(rec.states[N]), dtype=float)
    rec.costates[N] = p
    ph = [None] * (s + 2)
    for k in range(N - 1, -1, -1):
        Y = rec.state_stages[k]
        U = rec.controls[k]
        ph[s] = p
        if s >= 2:
            ph[s - 1] = p + first_w * g(U[s - 1], Y[s - 1], p)
            for i in range(s - 2, 0, -1):
                ph[i] = (grad_w[i] * g(U[i], Y[i], ph[i + 1])
                         + keep_w[i] * ph[i + 1] + back_w[i] * ph[i + 2])
            pk = close_grad * g(U[0], Y[0], ph[1]) + close_1 * ph[1] + close_2 * ph[2]
        else:
            pk = close_grad * g(U[0], Y[0], ph[1]) + close_1 * ph[1]
        if closing_shift:
            pk = pk + closing_shift * p
        if not np.isfinite(pk).all():
            raise StepOverflowError(f"non-finite costate at step {k}", step=k)
        for i in range(1, s + 1):
            rec.costate_stages[k, i - 1] = ph[i]
        p = pk
        rec.costates[k] = p
    rec.adjoint_evals += N * s


def costate_sweep_cheb(problem: ControlProblem, rec: SweepRecord, c: StabilizedCoefficients) -> None:
    """Explicit backward recurrence of the double adjoint of the Chebyshev scheme."""
    if c.order != 1:
        raise InvalidInputError("costate_sweep_cheb needs order-1 coefficients")
    _costate_recurrence(problem, rec, c, 0.0)


def costate_sweep_rkc(problem: ControlProblem, rec: SweepRecord, c: StabilizedCoefficients) -> None:
    """Explicit backward recurrence of the double adjoint of the RKC scheme."""
    if c.order != 2:
        raise InvalidInputError("costate_sweep_rkc needs order-2 coefficients")
    _costate_recurrence(problem, rec, c, c.a_final)


# --- standard-form tableaus ------------------------------------------------------------

def _newton_stage(problem, u, rhs, ha, k, i):
    """Solve ``Y = rhs + ha f(u, Y)``; returns ``(Y, f(u, Y), evals)``."""
    f = problem.dynamics
    Y = rhs.copy()
    n = Y.size
    evals = 0
    for _ in range(NEWTON_MAX_ITERS):
        fy = f(u, Y)
        evals += 1
        G = Y - rhs - ha * fy
        J = np.eye(n) - ha * dense_state_jacobian(problem, u, Y)
        try:
            dY = np.linalg.solve(J, G)
        except np.linalg.LinAlgError as exc:
            raise NewtonError(f"singular Newton matrix at step {k}, stage {i}", k, i) from exc
        Y = Y - dY
        if not np.isfinite(Y).all():
            raise NewtonError(f"Newton diverged at step {k}, stage {i}", k, i)
        if np.max(np.abs(dY)) <= NEWTON_TOL * (1.0 + np.max(np.abs(Y))):
            fy = f(u, Y)
            return Y, fy, evals + 1
    res = float(np.max(np.abs(Y - rhs - ha * f(u, Y))))
    raise NewtonError(f"Newton did not converge at step {k}, stage {i}", k, i, res)


def tableau_forward_sweep(problem: ControlProblem, controls, t: ButcherTableau,
                          rec: Optional[SweepRecord] = None) -> tuple[float, int]:
    """Standard-form RK state sweep; returns ``(Psi(y_N), f-evaluations)``."""
    controls = _check_controls(problem, controls, t.s)
    N = controls.shape[0]
    h = problem.horizon / N
    f = problem.dynamics
    order, implicit = stage_order(t)
    A, b = t.A, t.b
    s = t.s
    y = np.array(problem.initial_state, dtype=float)
    evals = 0
    if rec is not None:
        rec.controls[...] = controls
        rec.states[0] = y
    K = [None] * s
    for k in range(N):
        U = controls[k]
        for i in order:
            rhs = y.copy()
            for j in range(s):
                if j != i and A[i, j] != 0.0:
                    rhs += (h * A[i, j]) * K[j]
            if A[i, i] != 0.0:
                Yi, K[i], ev = _newton_stage(problem, U[i], rhs, h * A[i, i], k, i)
                evals += ev
            else:
                Yi = rhs
                K[i] = f(U[i], Yi)
                evals += 1
            if not np.isfinite(K[i]).all():
                raise _overflow(k, i)
            if rec is not None:
                rec.state_stages[k, i] = Yi
        for i in range(s):
            y = y + (h * b[i]) * K[i]
        if rec is not None:
            rec.states[k + 1] = y
    if rec is not None:
        rec.f_evals += evals
    return float(problem.cost(y)), evals


def tableau_costate_sweep(problem: ControlProblem, rec: SweepRecord, ct: ButcherTableau) -> None:
    """Backward costate sweep ``P_i = p_{k+1} + h sum_j ct_ij grad_y H(u_j, Y_j, P_j)``.

    ``rec.state_stages[k, i]`` must hold the state at RK stage ``i``.
    Diagonal entries make a stage implicit; since ``H`` is linear in ``p``
    that stage is one linear solve with ``(df/dy)^T``.
    """
    order, _ = stage_order(ct)
    A, b = ct.A, ct.b
    s = ct.s
    h = rec.h
    g = problem.adjoint_product
    N = rec.N
    p = np.asarray(problem.cost_gradient(rec.states[N]), dtype=float)
    rec.costates[N] = p
    n = p.size
    G = [None] * s
    for k in range(N - 1, -1, -1):
        Y = rec.state_stages[k]
        U = rec.controls[k]
        for i in order:
            rhs = p.copy()
            for j in range(s):
                if j != i and A[i, j] != 0.0:
                    rhs += (h * A[i, j]) * G[j]
            if A[i, i] != 0.0:
                Jt = dense_state_jacobian(problem, U[i], Y[i]).T
                P = np.linalg.solve(np.eye(n) - (h * A[i, i]) * Jt, rhs)
            else:
                P = rhs
            rec.costate_stages[k, i] = P
            G[i] = g(U[i], Y[i], P)
        for i in range(s):
            p = p + (h * b[i]) * G[i]
        if not np.isfinite(p).all():
            raise StepOverflowError(f"non-finite costate at step {k}", step=k)
        rec.costates[k] = p
    rec.adjoint_evals += N * s


# --- stationarity -----------------------------------------------------------------------

@dataclass(frozen=True)
class StationaritySolver:
    """Solves ``grad_u H(u, y, p) = 0`` at every stage.

    ``mode`` is ``"analytic"`` (problem callback), ``"newton"`` or ``None``
    (analytic when the problem provides it, Newton otherwise).
    """

    mode: Optional[str] = None
    newton_tol: float = 1e-12
    newton_max_iters: int = 50

    def __post_init__(self):
        if self.mode not in (None, "analytic", "newton"):
            raise InvalidInputError(f"unknown stationarity mode {self.mode!r}")


def _control_hessian(problem, u, y, p):
    if problem.control_hessian is not None:
        return np.atleast_2d(np.asarray(problem.control_hessian(u, y, p), dtype=float))
    m = u.size
    H = np.empty((m, m))
    step = 1e-6 * (1.0 + np.abs(u))
    for j in range(m):
        e = np.zeros(m)
        e[j] = step[j]
        H[:, j] = (problem.control_gradient(u + e, y, p) - problem.control_gradient(u - e, y, p)) / (2 * step[j])
    return H


def solve_control_stationarity(problem, u, y, p, k=None, i=None,
                               solver: StationaritySolver | None = None):
    """Newton solve of ``grad_u H(u, y, p) = 0`` from the guess ``u``."""
    return _newton_control(problem, u, y, p, solver or StationaritySolver(), k, i)


def _newton_control(problem, u, y, p, solver: StationaritySolver, k, i):
    scale = solver.newton_tol * (1.0 + float(np.linalg.norm(p)))
    u = np.array(u, dtype=float)
    r = np.asarray(problem.control_gradient(u, y, p), dtype=float)
    for _ in range(solver.newton_max_iters):
        if np.linalg.norm(r) <= scale:
            return u
        H = _control_hessian(problem, u, y, p)
        if not np.isfinite(H).all() or np.linalg.cond(H) > 1e14:
            raise StationarityError(f"singular control Hessian at step {k}, stage {i}",
                                    k, i, float(np.linalg.norm(r)))
        u = u - np.linalg.solve(H, r)
        r = np.asarray(problem.control_gradient(u, y, p), dtype=float)
    res = float(np.linalg.norm(r))
    if res <= scale:
        return u
    raise StationarityError(f"Newton stationarity solve failed at step {k}, stage {i}", k, i, res)


def stationarity_update(problem: ControlProblem, rec: SweepRecord,
                        solver: StationaritySolver | None = None) -> np.ndarray:
    """New stage controls solving ``grad_u H(u, y_{k_i}, p_{k_{i+1}}) = 0``."""
    solver = solver or StationaritySolver()
    mode = solver.mode
    if mode is None:
        mode = "analytic" if problem.analytic_stationarity is not None else "newton"
    if mode == "analytic" and problem.analytic_stationarity is None:
        raise InvalidInputError(f"{problem.name} has no analytic stationarity formula")
    N, s = rec.N, rec.s
    out = np.empty_like(rec.controls)
    for k in range(N):
        for i in range(s):
            y = rec.state_stages[k, i]
            p = rec.costate_stages[k, i]
            if mode == "analytic":
                u = np.asarray(problem.analytic_stationarity(y, p), dtype=float)
                if not np.isfinite(u).all():
                    raise StationarityError(f"analytic stationarity is singular at step {k}, stage {i}",
                                            k, i, float("inf"))
            else:
                u = _newton_control(problem, rec.controls[k, i], y, p, solver, k, i)
            out[k, i] = u
    return out


# --- scheme objects used by the solver ------------------------------------------------------

class RecurrenceScheme:
    """Stabilized recurrence for the state with its double-adjoint recurrence for the costate."""

    def __init__(self, coeffs: StabilizedCoefficients):
        self.coeffs = coeffs
        self.s = coeffs.s
        self.stage_slots = coeffs.s + 1
        self.name = "cheb1" if coeffs.order == 1 else "rkc2"

    def abscissae(self) -> np.ndarray:
        return stage_abscissae(self.coeffs)[: self.s]

    def forward(self, problem, controls, rec=None):
        cost = forward_sweep(problem, controls, self.coeffs, rec)
        return cost, np.asarray(controls).shape[0] * self.s

    def backward(self, problem, rec):
        if self.coeffs.order == 1:
            costate_sweep_cheb(problem, rec, self.coeffs)
        else:
            costate_sweep_rkc(problem, rec, self.coeffs)


class NaiveCostateScheme(RecurrenceScheme):
    """Recurrence state sweep but costate integrated with the *same* tableau.

    This breaks the symplectic pairing and is kept as an order-reduction
    witness only.
    """

    def __init__(self, coeffs: StabilizedCoefficients):
        super().__init__(coeffs)
        self.costate_tableau = unroll_tableau(coeffs)
        self.name += "-naive"

    def backward(self, problem, rec):
        tableau_costate_sweep(problem, rec, self.costate_tableau)


class TableauScheme:
    """Standard-form tableau for the state; costate tableau defaults to its double adjoint."""

    def __init__(self, tableau: ButcherTableau, costate_tableau: ButcherTableau | None = None,
                 name: str | None = None):
        self.tableau = tableau
        self.costate_tableau = double_adjoint(tableau) if costate_tableau is None else costate_tableau
        self.s = tableau.s
        self.stage_slots = tableau.s
        self.name = name or tableau.name or "tableau"

    def abscissae(self) -> np.ndarray:
        return self.tableau.c

    def forward(self, problem, controls, rec=None):
        return tableau_forward_sweep(problem, controls, self.tableau, rec)

    def backward(self, problem, rec):
        tableau_costate_sweep(problem, rec, self.costate_tableau)
