"""
Order of the control on the Hager problem
=========================================

The scalar problem ``x' = x/2 + u`` with cost ``1/2 int u^2 + 2 x^2`` has a
closed-form optimum, so sup-norm errors at the grid points can be measured
exactly. The Chebyshev pair is first order and the RKC pair second order
in both state and control. Reusing the forward tableau for the costate
(the naive sweep) keeps the state second order but drops the control to
first order.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from stabocp.problems import hager_problem
from stabocp.solver import fit_slope, run_ladder

OUT = Path(__file__).with_name("output")
OUT.mkdir(exist_ok=True)
problem = hager_problem()
Ns = [8, 16, 32, 64, 128]

fig, (ax_x, ax_u) = plt.subplots(1, 2, figsize=(10, 4), sharex=True)
for method, marker in (("cheb1", "o"), ("rkc2", "s"), ("rkc2-naive", "^")):
    rows, _ = run_ladder(problem, method, Ns)
    h = [r.h for r in rows]
    ex = [r.state_error for r in rows]
    eu = [r.control_error for r in rows]
    print(f"{method:11s} state slope {fit_slope(h, ex):5.2f}   control slope {fit_slope(h, eu):5.2f}")
    ax_x.loglog(h, ex, marker=marker, label=method)
    ax_u.loglog(h, eu, marker=marker, label=method)

ax_x.set_title("state error")
ax_u.set_title("control error")
for ax in (ax_x, ax_u):
    ax.set_xlabel("h")
    ax.legend()
fig.tight_layout()
fig.savefig(OUT / "hager_convergence.png", dpi=120)
