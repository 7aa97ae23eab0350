"""Benchmark optimal-control problems in Mayer form.

Each problem minimizes a terminal cost ``Psi(y(T))`` subject to
``y' = f(u, y)``; running costs are carried by an extra cost state whose
costate is constant in time. Callbacks take single stage vectors
(``u`` of length ``m``, ``y`` and ``p`` of length ``n``) and use the
pseudo-Hamiltonian ``H(u, y, p) = p . f(u, y)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "ControlProblem",
    "HagerProblem",
    "BurgersGrid",
    "hager_problem",
    "stiff_sp_problem",
    "burgers_problem",
    "estimate_lambda_max_burgers",
    "dense_state_jacobian",
    "make_problem",
    "PROBLEMS",
]

Array = np.ndarray


@dataclass(frozen=True, eq=False)
class ControlProblem:
    """Callback bundle describing ``min Psi(y(T))`` s.t. ``y' = f(u, y)``.

    ``adjoint_product(u, y, p)`` returns ``(df/dy)^T p`` and
    ``control_gradient(u, y, p)`` returns ``(df/du)^T p``. The optional
    ``analytic_stationarity(y, p)`` solves ``control_gradient = 0`` in closed
    form; ``control_hessian`` and ``state_jacobian`` are used by Newton solves
    when present.
    """

    name: str
    state_dim: int
    control_dim: int
    horizon: float
    initial_state: Array
    dynamics: Callable[[Array, Array], Array]
    adjoint_product: Callable[[Array, Array, Array], Array]
    control_gradient: Callable[[Array, Array, Array], Array]
    cost: Callable[[Array], float]
    cost_gradient: Callable[[Array], Array]
    lambda_max_estimator: Callable[[Array, Array], float]
    analytic_stationarity: Optional[Callable[[Array, Array], Array]] = None
    control_hessian: Optional[Callable[[Array, Array, Array], Array]] = None
    state_jacobian: Optional[Callable[[Array, Array], Array]] = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        y0 = np.array(self.initial_state, dtype=float)
        if y0.shape != (self.state_dim,):
            raise InvalidInputError(f"initial state must have shape ({self.state_dim},)")
        y0.setflags(write=False)
        object.__setattr__(self, "initial_state", y0)


@dataclass(frozen=True, eq=False)
class HagerProblem(ControlProblem):
    """Linear-quadratic test problem with a closed-form optimum."""

    @staticmethod
    def u_star(t):
        t = np.asarray(t, dtype=float)
        e3 = math.exp(3.0)
        return 2.0 * (np.exp(3.0 * t) - e3) / (np.exp(1.5 * t) * (2.0 + e3))

    @staticmethod
    def x_star(t):
        t = np.asarray(t, dtype=float)
        e3 = math.exp(3.0)
        return (2.0 * np.exp(3.0 * t) + e3) / (np.exp(1.5 * t) * (2.0 + e3))


def dense_state_jacobian(problem: ControlProblem, u, y) -> Array:
    """``df/dy`` at ``(u, y)``; analytic when available, else from ``n`` adjoint products."""
    if problem.state_jacobian is not None:
        return np.asarray(problem.state_jacobian(u, y), dtype=float)
    n = problem.state_dim
    if n > 64:
        raise InvalidInputError(f"{problem.name}: no analytic Jacobian and n={n} > 64")
    jt = np.empty((n, n))
    eye = np.eye(n)
    for i in range(n):
        jt[:, i] = problem.adjoint_product(u, y, eye[i])
    return jt.T


# --- Hager ------------------------------------------------------------------

def hager_problem() -> HagerProblem:
    """``min 1/2 int (u^2 + 2 x^2)`` s.t. ``x' = x/2 + u``, ``x(0) = 1`` on ``[0, 1]``.

    State is ``(c, x)`` with ``c' = (u^2 + 2 x^2)/2`` and ``Psi = c(1)``.
    """

    def f(u, y):
        x = y[1]
        return np.array([0.5 * (u[0] ** 2 + 2.0 * x * x), 0.5 * x + u[0]])

    def adj(u, y, p):
        return np.array([0.0, 2.0 * p[0] * y[1] + 0.5 * p[1]])

    def grad_u(u, y, p):
        return np.array([p[0] * u[0] + p[1]])

    def stat(y, p):
        return np.array([-p[1] / p[0]])

    def hess(u, y, p):
        return np.array([[p[0]]])

    def jac(u, y):
        return np.array([[0.0, 2.0 * y[1]], [0.0, 0.5]])

    return HagerProblem(
        name="hager", state_dim=2, control_dim=1, horizon=1.0,
        initial_state=np.array([0.0, 1.0]),
        dynamics=f, adjoint_product=adj, control_gradient=grad_u,
        cost=lambda y: float(y[0]), cost_gradient=lambda y: np.array([1.0, 0.0]),
        lambda_max_estimator=lambda y, u: 0.5,
        analytic_stationarity=stat, control_hessian=hess, state_jacobian=jac,
    )


# --- singularly perturbed variant --------------------------------------------

def stiff_sp_problem(epsilon: float) -> ControlProblem:
    """Stiff variant with fast variable ``z' = (x/2 - z)/epsilon``.

    State ``(c, x, z)``: ``c' = (u^2 + x^2 + 4 z^2)/2``, ``x' = z + u``,
    ``c(0) = 0``, ``x(0) = 1``, ``z(0) = 1/2``, ``Psi = c(1)``.
    """
    epsilon = float(epsilon)
    if not (math.isfinite(epsilon) and epsilon > 0.0):
        raise InvalidInputError(f"epsilon must be positive, got {epsilon!r}")
    inv = 1.0 / epsilon

    def f(u, y):
        x, z = y[1], y[2]
        return np.array([0.5 * (u[0] ** 2 + x * x + 4.0 * z * z), z + u[0], inv * (0.5 * x - z)])

    def adj(u, y, p):
        x, z = y[1], y[2]
        return np.array([0.0, p[0] * x + 0.5 * inv * p[2], 4.0 * p[0] * z + p[1] - inv * p[2]])

    def jac(u, y):
        x, z = y[1], y[2]
        return np.array([[0.0, x, 4.0 * z], [0.0, 0.0, 1.0], [0.0, 0.5 * inv, -inv]])

    return ControlProblem(
        name="stiff-sp", state_dim=3, control_dim=1, horizon=1.0,
        initial_state=np.array([0.0, 1.0, 0.5]),
        dynamics=f, adjoint_product=adj,
        control_gradient=lambda u, y, p: np.array([p[0] * u[0] + p[1]]),
        cost=lambda y: float(y[0]), cost_gradient=lambda y: np.array([1.0, 0.0, 0.0]),
        lambda_max_estimator=lambda y, u: inv,
        analytic_stationarity=lambda y, p: np.array([-p[1] / p[0]]),
        control_hessian=lambda u, y, p: np.array([[p[0]]]),
        state_jacobian=jac,
        params={"epsilon": epsilon},
    )


# --- Burgers -------------------------------------------------------------------

def _default_g(x):
    return 1.5 * x * (1.0 - x) ** 2


def _default_target(x):
    return 0.5 * np.sin(10.0 * x) * (1.0 - x)


@dataclass(frozen=True, eq=False)
class BurgersGrid:
    """Uniform grid on ``[0, 1]`` with ``M`` interior nodes and Dirichlet ends."""

    M: int = 99
    mu: float = 0.1
    nu: float = 0.02
    alpha: float = 0.01
    g: Callable[[Array], Array] = _default_g
    y_target: Callable[[Array], Array] = _default_target

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 2:
            raise InvalidInputError(f"Burgers grid needs M >= 2 interior points, got {self.M!r}")
        if self.mu < 0 or self.alpha <= 0:
            raise InvalidInputError("need mu >= 0 and alpha > 0")

    @property
    def dx(self) -> float:
        return 1.0 / (self.M + 1)

    @property
    def x(self) -> Array:
        return np.linspace(0.0, 1.0, self.M + 2)

    @property
    def weights(self) -> Array:
        """Trapezoid weights: ``1/(M+1)`` inside, half that at both ends."""
        w = np.full(self.M + 2, 1.0 / (self.M + 1))
        w[0] *= 0.5
        w[-1] *= 0.5
        return w


def estimate_lambda_max_burgers(grid: BurgersGrid, Y) -> float:
    """Gershgorin bound ``4 mu / dx^2 + (nu / dx) max |y_m|`` on the Jacobian."""
    Y = np.asarray(Y, dtype=float)
    if Y.shape != (grid.M + 2,):
        raise InvalidInputError(f"Y must have length M+2={grid.M + 2}")
    return 4.0 * grid.mu / grid.dx**2 + grid.nu / grid.dx * float(np.max(np.abs(Y)))


def burgers_problem(grid: BurgersGrid | None = None, T: float = 2.5) -> ControlProblem:
    """Central-difference semi-discretization of the controlled viscous Burgers equation.

    State is ``(c, y_0, ..., y_{M+1})`` and control ``(u_0, ..., u_{M+1})``;
    boundary rows are frozen at zero so ``y_0 = y_{M+1} = 0`` at every stage
    and the boundary controls decouple (their optimum is zero).
    """
    grid = BurgersGrid() if grid is None else grid
    M = grid.M
    dx = grid.dx
    diff = grid.mu / dx**2
    adv = grid.nu / (4.0 * dx)
    w = grid.weights
    xs = grid.x
    tgt = np.asarray(grid.y_target(xs), dtype=float)
    y0 = np.zeros(M + 3)
    y0[1:] = grid.g(xs)
    y0[1] = y0[-1] = 0.0
    interior = np.ones(M + 2)
    interior[0] = interior[-1] = 0.0
    n = M + 3
    # f(u, y) = L y + Q (y*y) + (control terms); rows 0 and the boundary rows vanish
    nodes = np.arange(2, M + 2)  # state indices of interior nodes 1..M
    L = np.zeros((n, n))
    L[nodes, nodes] = -2.0 * diff
    L[nodes, nodes + 1] = diff
    L[nodes, nodes - 1] = diff
    Q = np.zeros((n, n))
    Q[nodes, nodes + 1] = adv
    Q[nodes, nodes - 1] = -adv
    Lt, Qt = L.T.copy(), Q.T.copy()

    def f(u, y):
        out = L @ y + Q @ (y * y)
        out[2:-1] += u[1:-1]
        out[0] = 0.5 * np.dot(w, u * u)
        return out

    def adj(u, y, p):
        return Lt @ p + 2.0 * y * (Qt @ p)

    def grad_u(u, y, p):
        return p[0] * w * u + interior * p[1:]

    def stat(y, p):
        return -interior * p[1:] / (p[0] * w)

    def hess(u, y, p):
        return np.diag(p[0] * w)

    def jac(u, y):
        return L + Q * (2.0 * y)[np.newaxis, :]

    def cost(y):
        e = y[1:] - tgt
        return float(0.5 * np.dot(w, e * e) + grid.alpha * y[0])

    def cost_grad(y):
        out = np.empty(n)
        out[0] = grid.alpha
        out[1:] = w * (y[1:] - tgt)
        return out

    return ControlProblem(
        name="burgers", state_dim=n, control_dim=M + 2, horizon=float(T),
        initial_state=y0, dynamics=f, adjoint_product=adj, control_gradient=grad_u,
        cost=cost, cost_gradient=cost_grad,
        lambda_max_estimator=lambda y, u: estimate_lambda_max_burgers(grid, y[1:]),
        analytic_stationarity=stat, control_hessian=hess, state_jacobian=jac,
        params={"grid": grid, "target": tgt, "x": xs},
    )


PROBLEMS = ("hager", "stiff-sp", "burgers")


def make_problem(name: str, **params) -> ControlProblem:
    """Build a shipped problem by name (``hager``, ``stiff-sp``, ``burgers``)."""
    if name == "hager":
        if params:
            raise InvalidInputError(f"hager takes no parameters, got {sorted(params)}")
        return hager_problem()
    if name == "stiff-sp":
        eps = params.pop("epsilon", 1e-3)
        if params:
            raise InvalidInputError(f"stiff-sp only takes epsilon, got {sorted(params)}")
        return stiff_sp_problem(eps)
    if name == "burgers":
        T = params.pop("T", 2.5)
        unknown = set(params) - {"M", "mu", "nu", "alpha"}
        if unknown:
            raise InvalidInputError(f"unknown Burgers parameters {sorted(unknown)}")
        return burgers_problem(BurgersGrid(**params), T)
    raise InvalidInputError(f"unknown problem {name!r}; choose from {PROBLEMS}")
