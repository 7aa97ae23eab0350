"""Test helpers: small smooth control problems and finite-difference checks."""

import numpy as np

from stabocp.problems import ControlProblem

# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def smooth_problem(seed: int, n: int = 3, m: int = 2, T: float = 1.0) -> ControlProblem:
    """Random nonlinear problem ``y' = A y + 0.3 (1 + 0.1 u_0) sin y + B u``.

    Terminal cost ``Psi = 1/2 |y|^2 + sum(y)``. Only used to drive sweeps
    with prescribed controls, so no stationarity formula is provided.
    """
    rng = np.random.default_rng(seed)
    A = rng.normal(scale=0.8, size=(n, n))
    B = rng.normal(size=(n, m))

    def f(u, y):
        return A @ y + 0.3 * (1.0 + 0.1 * u[0]) * np.sin(y) + B @ u

    def adj(u, y, p):
        return A.T @ p + 0.3 * (1.0 + 0.1 * u[0]) * np.cos(y) * p

    def grad_u(u, y, p):
        g = B.T @ p
        g[0] += 0.03 * np.dot(np.sin(y), p)
        return g

    return ControlProblem(
        name=f"smooth-{seed}", state_dim=n, control_dim=m, horizon=T,
        initial_state=rng.normal(size=n),
        dynamics=f, adjoint_product=adj, control_gradient=grad_u,
        cost=lambda y: float(0.5 * y @ y + y.sum()), cost_gradient=lambda y: y + 1.0,
        lambda_max_estimator=lambda y, u: float(np.max(np.abs(np.linalg.eigvals(A)))) + 0.4,
    )


def scalar_lq_problem() -> ControlProblem:
    """``min 1/2 int_0^1 (u^2 + x^2)`` s.t. ``x' = -x + u``, ``x(0) = 1``; state ``(c, x)``."""

    def f(u, y):
        return np.array([0.5 * (u[0] ** 2 + y[1] ** 2), -y[1] + u[0]])

    return ControlProblem(
        name="scalar-lq", state_dim=2, control_dim=1, horizon=1.0,
        initial_state=np.array([0.0, 1.0]),
        dynamics=f,
        adjoint_product=lambda u, y, p: np.array([0.0, p[0] * y[1] - p[1]]),
        control_gradient=lambda u, y, p: np.array([p[0] * u[0] + p[1]]),
        cost=lambda y: float(y[0]), cost_gradient=lambda y: np.array([1.0, 0.0]),
        lambda_max_estimator=lambda y, u: 1.0,
        analytic_stationarity=lambda y, p: np.array([-p[1] / p[0]]),
    )


def fd_gradient(fun, x, rel_step=1e-5):
    """Central-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        d = rel_step * (1.0 + abs(x[i]))
        e = np.zeros_like(x)
        e[i] = d
        g[i] = (fun(x + e) - fun(x - e)) / (2.0 * d)
    return g


def rel_err(approx, exact):
    approx, exact = np.asarray(approx), np.asarray(exact)
    return float(np.max(np.abs(approx - exact)) / max(1.0, float(np.max(np.abs(exact)))))


def random_point(problem, rng, scale=1.0):
    """Random ``(u, y, p)``; the cost-channel costate is kept positive."""
    u = rng.normal(scale=scale, size=problem.control_dim)
    y = rng.normal(scale=scale, size=problem.state_dim)
    p = rng.normal(size=problem.state_dim)
    p[0] = 0.5 + rng.random()
    return u, y, p


def fd_check(problem, rng, points=100, scale=1.0, sanitize=None):
    """Worst relative finite-difference error of each shipped derivative callback.

    ``sanitize(u, y, p)`` may project the random point onto the admissible
    set (for example zero Dirichlet entries).
    """
    worst = {"adjoint_product": 0.0, "control_gradient": 0.0, "cost_gradient": 0.0}
    if problem.state_jacobian is not None:
        worst["state_jacobian"] = 0.0
    if problem.control_hessian is not None:
        worst["control_hessian"] = 0.0
    if problem.analytic_stationarity is not None:
        worst["analytic_stationarity"] = 0.0
    for _ in range(points):
        u, y, p = random_point(problem, rng, scale)
        if sanitize is not None:
            u, y, p = sanitize(u, y, p)
        adj = problem.adjoint_product(u, y, p)
        fd = fd_gradient(lambda v: float(p @ problem.dynamics(u, v)), y)
        worst["adjoint_product"] = max(worst["adjoint_product"], rel_err(fd, adj))
        gu = problem.control_gradient(u, y, p)
        fd = fd_gradient(lambda v: float(p @ problem.dynamics(v, y)), u)
        worst["control_gradient"] = max(worst["control_gradient"], rel_err(fd, gu))
        worst["cost_gradient"] = max(worst["cost_gradient"],
                                     rel_err(fd_gradient(problem.cost, y), problem.cost_gradient(y)))
        if "state_jacobian" in worst:
            worst["state_jacobian"] = max(worst["state_jacobian"],
                                          rel_err(problem.state_jacobian(u, y).T @ p, adj))
        if "control_hessian" in worst:
            H = np.atleast_2d(problem.control_hessian(u, y, p))
            fdH = np.column_stack([
                fd_gradient(lambda v, j=j: float(problem.control_gradient(v, y, p)[j]), u)
                for j in range(u.size)])
            worst["control_hessian"] = max(worst["control_hessian"], rel_err(fdH.T, H))
        if "analytic_stationarity" in worst:
            us = problem.analytic_stationarity(y, p)
            worst["analytic_stationarity"] = max(worst["analytic_stationarity"],
                                                 rel_err(problem.control_gradient(us, y, p), 0.0 * us))
    return worst
