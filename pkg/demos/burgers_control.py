"""
Controlling a viscous Burgers equation
======================================

Distributed control of ``y_t = mu y_xx - nu y y_x + u`` on ``(0, 1)`` with
homogeneous Dirichlet data, driving the state towards a target profile at
the final time. The explicit RKC pair takes far larger steps than the
diffusive limit of forward Euler. A heavier control weight ``alpha``
gives a looser fit to the target.

A reduced grid keeps the run short; raise ``M`` to 99 for the full
resolution.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from stabocp.problems import make_problem
from stabocp.solver import SolverConfig, solve

OUT = Path(__file__).with_name("output")
OUT.mkdir(exist_ok=True)
M, N = 49, 30

fig, (ax_f, ax_c) = plt.subplots(1, 2, figsize=(11, 4))
for alpha in (0.01, 0.02):
    p = make_problem("burgers", M=M, alpha=alpha)
    grid = p.params["grid"]
    rep = solve(p, SolverConfig(N=N, trisection_iters=20, max_iters=2000, tol=1e-6))
    rec = rep.final_record
    dt = p.horizon / N
    print(f"alpha={alpha}: s={rep.s}, {rep.iterations} iterations, cost {rep.cost_history[-1]:.4e}, "
          f"euler factor {dt / (rep.s * grid.dx**2 / 2):.1f}")
    ax_f.plot(grid.x, rec.states[-1, 1:], label=f"y(T), alpha = {alpha}")
    ax_c.plot(rep.cost_history, label=f"alpha = {alpha}")
ax_f.plot(grid.x, p.params["target"], "k--", label="target")
ax_f.set_xlabel("x")
ax_f.legend()
ax_c.set_yscale("log")
ax_c.set_xlabel("iteration")
ax_c.set_title("cost")
ax_c.legend()
fig.tight_layout()
fig.savefig(OUT / "burgers_final.png", dpi=120)

###############################################################################
# State and control surfaces for the last run.

T, X = np.meshgrid(rec.grid[:-1], grid.x, indexing="ij")
fig = plt.figure(figsize=(11, 4))
for k, (data, name) in enumerate(((rec.states[:-1, 1:], "state"), (rec.controls[:, 0], "control"))):
    ax = fig.add_subplot(1, 2, k + 1, projection="3d")
    ax.plot_surface(T, X, data, cmap="viridis")
    ax.set_xlabel("t")
    ax.set_ylabel("x")
    ax.set_title(name)
fig.tight_layout()
fig.savefig(OUT / "burgers_surfaces.png", dpi=120)
