"""Outer fixed-point iteration for the discrete optimality system.

Each iteration runs a forward state sweep and a backward costate sweep,
solves control stationarity stagewise to get a candidate ``U~``, and moves
to ``U + theta (U~ - U)`` with ``theta`` chosen by trisection on the cost.
Also provides the DIRK2 comparator, a brute-force direct minimizer of the
discrete problem for tiny instances, and helpers for convergence ladders.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import optimize

from .errors import (
    InvalidInputError,
    LineSearchError,
    OracleSizeError,
    SolverAbort,
    StabOCPError,
)
from .problems import ControlProblem
from .stabcoeffs import DEFAULT_ETA, coefficients, select_stages, stage_abscissae
from .sweeps import (
    NaiveCostateScheme,
    RecurrenceScheme,
    StationaritySolver,
    SweepRecord,
    TableauScheme,
    stationarity_update,
)
from .tableau import dirk2

__all__ = [
    "METHODS",
    "SolverConfig",
    "SolveReport",
    "OracleResult",
    "LadderRow",
    "make_scheme",
    "trisection_minimize",
    "solve",
    "dirk2_solve",
    "direct_discrete_oracle",
    "grid_controls",
    "fit_slope",
    "interpolate_controls",
    "run_ladder",
]

log = logging.getLogger(__name__)

METHODS = ("cheb1", "rkc2", "dirk2", "rkc2-naive")
_ORDER = {"cheb1": 1, "rkc2": 2, "rkc2-naive": 2}


@dataclass
class SolverConfig:
    """Settings of one optimal-control solve.

    ``stages=None`` picks ``s`` from the problem's spectral-radius estimate
    at the initial state; ``refresh_stages`` re-estimates it from the
    current trajectory each iteration (for nonlinear problems).
    """

    N: int
    method: str = "rkc2"
    tol: float = 1e-8
    max_iters: int = 500
    theta_interval: tuple[float, float] = (0.0, 1.0)
    trisection_iters: int = 40
    initial_control: Optional[object] = None
    eta: Optional[float] = None
    stages: Optional[int] = None
    refresh_stages: bool = False
    stationarity: StationaritySolver = field(default_factory=StationaritySolver)

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise InvalidInputError(f"N must be a positive integer, got {self.N!r}")
        self.N = int(self.N)
        if self.method not in METHODS:
            raise InvalidInputError(f"unknown method {self.method!r}; choose from {METHODS}")
        if not (self.tol > 0):
            raise InvalidInputError("tol must be positive")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise InvalidInputError("max_iters must be a positive integer")
        lo, hi = self.theta_interval
        if not (hi > lo):
            raise InvalidInputError("theta_interval must have positive width")
        if int(self.trisection_iters) != self.trisection_iters or self.trisection_iters < 1:
            raise InvalidInputError("trisection_iters must be a positive integer")
        if self.stages is not None and (int(self.stages) != self.stages or self.stages < 1):
            raise InvalidInputError(f"stages must be a positive integer, got {self.stages!r}")


@dataclass
class SolveReport:
    iterations: int
    cost_history: list[float]
    update_norms: list[float]
    stage_count_per_step: list[int]
    total_f_evals: int
    converged: bool
    final_record: Optional[SweepRecord]
    method: str = ""
    total_adjoint_evals: int = 0
    thetas: list[float] = field(default_factory=list)

    @property
    def s(self) -> int:
        return self.stage_count_per_step[0] if self.stage_count_per_step else 0

    @property
    def controls(self) -> np.ndarray:
        return self.final_record.controls


def make_scheme(method: str, s: int, eta: float | None = None):
    """Sweep pair for ``method`` at ``s`` stages (``s`` ignored for ``dirk2``)."""
    if method == "dirk2":
        return TableauScheme(dirk2, name="dirk2")
    if method not in _ORDER:
        raise InvalidInputError(f"unknown method {method!r}; choose from {METHODS}")
    c = coefficients(_ORDER[method], s, eta)
    return NaiveCostateScheme(c) if method == "rkc2-naive" else RecurrenceScheme(c)


def _stage_count(problem: ControlProblem, cfg: SolverConfig, y, u) -> int:
    if cfg.method == "dirk2":
        return 2
    order = _ORDER[cfg.method]
    if cfg.stages is not None:
        if order == 2 and cfg.stages < 2:
            raise InvalidInputError("RKC needs at least 2 stages")
        return int(cfg.stages)
    h = problem.horizon / cfg.N
    return select_stages(h, problem.lambda_max_estimator(y, u), order, cfg.eta)


def _initial_controls(problem: ControlProblem, cfg: SolverConfig, s: int) -> np.ndarray:
    m = problem.control_dim
    u0 = cfg.initial_control
    if u0 is None:
        return np.zeros((cfg.N, s, m))
    arr = np.asarray(u0, dtype=float)
    if arr.ndim <= 1:
        return np.broadcast_to(arr.reshape(-1) if arr.ndim else arr, (cfg.N, s, m)).copy()
    if arr.shape != (cfg.N, s, m):
        raise InvalidInputError(f"initial control must have shape ({cfg.N}, {s}, {m}), got {arr.shape}")
    return arr.copy()


def _probe_control(problem: ControlProblem, cfg: SolverConfig) -> np.ndarray:
    """First stage control of the initial guess (argument of the lambda_max estimate)."""
    u0 = cfg.initial_control
    if u0 is not None and np.ndim(u0) == 3:
        return np.asarray(u0, dtype=float)[0, 0]
    return _initial_controls(problem, replace(cfg, initial_control=u0, N=1), 1)[0, 0]


def _remap_controls(U: np.ndarray, c_old: np.ndarray, c_new: np.ndarray) -> np.ndarray:
    """Carry stage controls to a new stage layout by interpolation in time."""
    N = U.shape[0]
    t_old = (np.arange(N)[:, None] + c_old[None, :]).ravel()
    t_new = (np.arange(N)[:, None] + c_new[None, :]).ravel()
    order = np.argsort(t_old, kind="stable")
    flat = U.reshape(N * c_old.size, -1)[order]
    out = np.column_stack([np.interp(t_new, t_old[order], flat[:, j]) for j in range(flat.shape[1])])
    return out.reshape(N, c_new.size, -1)


def trisection_minimize(phi: Callable[[float], float], interval=(0.0, 1.0), iters: int = 40) -> float:
    """Midpoint of the bracket left after ``iters`` trisection steps.

    Each step evaluates ``phi`` at the two interior third-points and drops
    the outer third next to the larger value (both on a tie).
    """
    lo, hi = float(interval[0]), float(interval[1])
    if not hi > lo:
        raise InvalidInputError("interval must have positive width")
    for _ in range(int(iters)):
        third = (hi - lo) / 3.0
        a, b = lo + third, hi - third
        fa, fb = phi(a), phi(b)
        if not (math.isfinite(fa) and math.isfinite(fb)):
            raise LineSearchError(f"non-finite line-search value near theta={a:.6g}")
        if fa > fb:
            lo = a
        elif fb > fa:
            hi = b
        else:  # a tie brackets the minimum of a unimodal function
            lo, hi = a, b
    return 0.5 * (lo + hi)


def solve(problem: ControlProblem, cfg: SolverConfig) -> SolveReport:
    """Fixed-point iteration with trisection line search on the blend parameter."""
    y0 = problem.initial_state
    u_probe = _probe_control(problem, cfg)
    s = _stage_count(problem, cfg, y0, u_probe)
    scheme = make_scheme(cfg.method, s, cfg.eta)
    U = _initial_controls(problem, cfg, scheme.s)
    report = SolveReport(0, [], [], [scheme.s] * cfg.N, 0, False, None, method=cfg.method)

    def abort(msg, exc=None):
        log.warning("solve aborted: %s", msg)
        return SolverAbort(msg, report=report, cause=exc)

    if cfg.method == "rkc2-naive":
        return _root_fixed_point(problem, cfg, scheme, U, report, abort)

    def line_cost(V):
        try:
            cost, ev = scheme.forward(problem, V)
        except StabOCPError:
            return math.nan
        report.total_f_evals += ev
        return cost

    for it in range(1, cfg.max_iters + 1):
        rec = SweepRecord.allocate(problem, cfg.N, scheme.s, scheme.stage_slots)
        try:
            cost, _ = scheme.forward(problem, U, rec)
            scheme.backward(problem, rec)
            U_new = stationarity_update(problem, rec, cfg.stationarity)
        except StabOCPError as exc:
            raise abort(f"iteration {it}: {exc}", exc) from exc
        report.total_f_evals += rec.f_evals
        report.total_adjoint_evals += rec.adjoint_evals
        report.final_record = rec
        report.iterations = it
        if not report.cost_history:
            report.cost_history.append(cost)
        D = U_new - U
        if not np.any(D):
            theta = 0.0
        else:
            def phi(theta):
                return line_cost(U + theta * D)
            try:
                theta = trisection_minimize(phi, cfg.theta_interval, cfg.trisection_iters)
            except LineSearchError as exc:
                full = phi(1.0)
                if not (math.isfinite(full) and full < cost):
                    raise abort(f"iteration {it}: {exc}", exc) from exc
                theta = 1.0
        step = theta * D
        norm = float(np.max(np.abs(step))) if step.size else 0.0
        report.thetas.append(theta)
        report.update_norms.append(norm)
        U = U + step
        if norm <= cfg.tol:
            report.converged = True
            break
        new_cost = line_cost(U)
        if not math.isfinite(new_cost):
            raise abort(f"iteration {it}: non-finite cost after update")
        report.cost_history.append(new_cost)
        if cfg.refresh_stages and cfg.method != "dirk2" and cfg.stages is None:
            lam = max(problem.lambda_max_estimator(y, U[0, 0]) for y in rec.states)
            s_new = select_stages(problem.horizon / cfg.N, lam, _ORDER[cfg.method], cfg.eta)
            if s_new != scheme.s:
                new_scheme = make_scheme(cfg.method, s_new, cfg.eta)
                U = _remap_controls(U, scheme.abscissae(), new_scheme.abscissae())
                scheme = new_scheme
                report.stage_count_per_step = [s_new] * cfg.N
    return report


def _root_fixed_point(problem, cfg, scheme, U0, report, abort) -> SolveReport:
    """Fixed point ``U = U~(U)`` by a hybrid Powell root solve.

    Used for the non-symplectic witness, whose update direction is not a
    descent direction of the discrete cost, so a cost line search stalls.
    """
    shape = U0.shape

    def sweep(x):
        rec = SweepRecord.allocate(problem, cfg.N, scheme.s, scheme.stage_slots)
        cost, _ = scheme.forward(problem, x.reshape(shape), rec)
        scheme.backward(problem, rec)
        report.total_f_evals += rec.f_evals
        report.total_adjoint_evals += rec.adjoint_evals
        return cost, rec

    def residual(x):
        _, rec = sweep(x)
        return (stationarity_update(problem, rec, cfg.stationarity) - x.reshape(shape)).ravel()

    try:
        report.cost_history.append(sweep(U0.ravel())[0])
        sol = optimize.root(residual, U0.ravel(), method="hybr",
                            options={"xtol": 1e-13, "maxfev": cfg.max_iters * (U0.size + 1)})
        cost, rec = sweep(sol.x)
        res = float(np.max(np.abs(residual(sol.x))))
    except StabOCPError as exc:
        raise abort(str(exc), exc) from exc
    report.iterations = int(sol.nfev)
    report.cost_history.append(cost)
    report.update_norms.append(res)
    report.final_record = rec
    report.converged = res <= cfg.tol
    return report


def dirk2_solve(problem: ControlProblem, cfg: SolverConfig) -> SolveReport:
    """:func:`solve` with the L-stable two-stage DIRK and its double adjoint."""
    return solve(problem, replace(cfg, method="dirk2"))


# --- direct discrete oracle ----------------------------------------------------------

@dataclass
class OracleResult:
    controls: np.ndarray
    cost: float
    gradient_norm: float
    inconclusive: bool
    message: str = ""


ORACLE_MAX_VARIABLES = 64


def direct_discrete_oracle(problem: ControlProblem, method: str, N: int, s: int,
                           eta: float | None = None, x0=None, fd_step: float = 1e-6,
                           gtol: float = 1e-9) -> OracleResult:
    """Minimize ``Psi(y_N(U))`` over all stage controls by BFGS.

    The gradient is taken by central differences, so this only scales to
    ``N * s * m <= 64`` unknowns. It never touches the costate sweeps and
    is meant as an independent check of the fixed point of :func:`solve`.
    """
    scheme = make_scheme(method, s, eta)
    shape = (N, scheme.s, problem.control_dim)
    size = int(np.prod(shape))
    if size > ORACLE_MAX_VARIABLES:
        raise OracleSizeError(f"oracle limited to {ORACLE_MAX_VARIABLES} unknowns, got {size}")

    def J(x):
        cost, _ = scheme.forward(problem, x.reshape(shape))
        return cost

    def grad(x):
        g = np.empty_like(x)
        for i in range(x.size):
            e = np.zeros_like(x)
            e[i] = fd_step
            g[i] = (J(x + e) - J(x - e)) / (2.0 * fd_step)
        return g

    start = np.zeros(size) if x0 is None else np.asarray(x0, dtype=float).ravel()
    res = optimize.minimize(J, start, jac=grad, method="BFGS",
                            options={"gtol": gtol, "maxiter": 2000})
    gnorm = float(np.max(np.abs(grad(res.x))))
    inconclusive = not (res.success or gnorm <= 1e3 * gtol)
    return OracleResult(res.x.reshape(shape), float(res.fun), gnorm, inconclusive, str(res.message))


# --- convergence studies ------------------------------------------------------------

def grid_controls(problem: ControlProblem, rec: SweepRecord, method: str) -> np.ndarray:
    """Computed controls at the grid points ``t_0..t_{N-1}``.

    The recurrences place stage 0 at the grid point (``y_{k_0} = y_k``), so
    this is the control stage ``u_{k_0}`` itself. DIRK2 has no stage there;
    its grid control is reconstructed from stationarity at ``(y_k, p_k)``.
    """
    if method != "dirk2":
        return rec.controls[:, 0].copy()
    from .sweeps import solve_control_stationarity

    out = np.empty((rec.N, problem.control_dim))
    for k in range(rec.N):
        y, p = rec.states[k], rec.costates[k]
        if problem.analytic_stationarity is not None:
            out[k] = problem.analytic_stationarity(y, p)
        else:
            out[k] = solve_control_stationarity(problem, rec.controls[k, 0], y, p, k, 0)
    return out


def fit_slope(h: Sequence[float], err: Sequence[float]) -> float:
    """Least-squares slope of ``log(err)`` against ``log(h)``."""
    return float(np.polyfit(np.log(np.asarray(h, float)), np.log(np.asarray(err, float)), 1)[0])


@dataclass
class LadderRow:
    h: float
    state_error: float
    control_error: float
    s_used: int
    f_evals: int
    iterations: int
    converged: bool
    component_errors: tuple[float, ...] = ()


def interpolate_controls(report: SolveReport, problem: ControlProblem, cfg: SolverConfig) -> np.ndarray:
    """Stage controls of ``report`` carried to the stage layout of ``cfg`` (warm start)."""
    rec = report.final_record
    old = make_scheme(report.method, report.s)
    h_old = problem.horizon / rec.N
    t_old = (rec.grid[:-1, None] + h_old * old.abscissae()[None, :]).ravel()
    order = np.argsort(t_old, kind="stable")
    flat = rec.controls.reshape(t_old.size, -1)[order]
    s_new = _stage_count(problem, cfg, problem.initial_state, _probe_control(problem, cfg))
    new = make_scheme(cfg.method, s_new, cfg.eta)
    h_new = problem.horizon / cfg.N
    t_new = (np.arange(cfg.N)[:, None] * h_new + h_new * new.abscissae()[None, :]).ravel()
    cols = [np.interp(t_new, t_old[order], flat[:, j]) for j in range(flat.shape[1])]
    return np.column_stack(cols).reshape(cfg.N, new.s, -1)


def run_ladder(problem: ControlProblem, method: str, Ns: Sequence[int], *,
               reference: str | SolveReport = "exact", N_ref: int | None = None,
               ref_method: str | None = None, warm_start: bool = False,
               **cfg_kw) -> tuple[list[LadderRow], Optional[SolveReport]]:
    """Solve at each ``N`` and measure sup-norm errors at the grid points.

    ``reference="exact"`` compares with the problem's ``x_star``/``u_star``;
    ``reference="fine"`` solves once at ``N_ref`` (a multiple of every
    ``N``) and compares at shared grid points. A finished
    :class:`SolveReport` can also be passed as the reference. The cost
    channel (state component 0) is left out of the state error;
    ``component_errors`` lists the errors of components ``1..n-1``.
    With ``warm_start`` each solve starts from the previous solution.
    """
    if reference == "fine" and N_ref is None:
        raise InvalidInputError("a fine reference needs N_ref")
    if not (reference in ("exact", "fine") or isinstance(reference, SolveReport)):
        raise InvalidInputError(f"unknown reference {reference!r}")
    reports = []
    prev = None
    for N in Ns:
        cfg = SolverConfig(N=N, method=method, **cfg_kw)
        if warm_start and prev is not None:
            cfg.initial_control = interpolate_controls(prev, problem, cfg)
        prev = solve(problem, cfg)
        reports.append(prev)
    ref_rep = reference if isinstance(reference, SolveReport) else None
    if reference == "fine":
        cfg = SolverConfig(N=N_ref, method=ref_method or method, **cfg_kw)
        if warm_start and prev is not None:
            cfg.initial_control = interpolate_controls(prev, problem, cfg)
        ref_rep = solve(problem, cfg)
    if ref_rep is not None:
        N_ref = ref_rep.final_record.N
        ref_u = grid_controls(problem, ref_rep.final_record, ref_rep.method)
    rows = []
    for N, rep in zip(Ns, reports):
        rec = rep.final_record
        u = grid_controls(problem, rec, method)
        if ref_rep is None:
            t = rec.grid
            x_ref = np.asarray(problem.x_star(t)).reshape(N + 1, -1)
            u_ref = np.asarray(problem.u_star(t[:-1])).reshape(N, -1)
        else:
            if N_ref % N:
                raise InvalidInputError(f"N_ref={N_ref} is not a multiple of N={N}")
            r = N_ref // N
            x_ref = ref_rep.final_record.states[::r, 1:]
            u_ref = ref_u[::r]
        comp = np.max(np.abs(rec.states[:, 1:] - x_ref), axis=0)
        ct = float(np.max(np.abs(u - u_ref)))
        rows.append(LadderRow(problem.horizon / N, float(comp.max()), ct, rep.s, rep.total_f_evals,
                              rep.iterations, rep.converged, tuple(float(e) for e in comp)))
    return rows, ref_rep
