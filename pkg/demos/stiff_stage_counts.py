"""
Stage counts and work on a singularly perturbed problem
=======================================================

The fast variable relaxes on the scale ``epsilon``, so the spectral radius
of the Jacobian is ``1/epsilon``. The stage count grows like
``sqrt(h / epsilon)`` rather than ``h / epsilon``, and the work at a fixed
step grows like ``epsilon^(-1/2)``.
"""

import numpy as np

from stabocp.problems import stiff_sp_problem
from stabocp.solver import SolverConfig, fit_slope, run_ladder, solve
from stabocp.stabcoeffs import select_stages

###############################################################################
# Stages selected at each step size for ``epsilon = 1e-3``.

p = stiff_sp_problem(1e-3)
lam = p.lambda_max_estimator(p.initial_state, np.zeros(1))
for i in range(8):
    print(f"h = 2^-{i}: s = {select_stages(2.0**-i, lam, 2)}")

###############################################################################
# Second-order convergence of the fast and slow components against a fine run.

rows, ref = run_ladder(p, "rkc2", [1, 2, 4, 8, 16, 32], reference="fine", N_ref=128)
h = [r.h for r in rows]
print("x slope", round(fit_slope(h, [r.component_errors[0] for r in rows]), 3))
print("z slope", round(fit_slope(h, [r.component_errors[1] for r in rows]), 3))

###############################################################################
# Function evaluations at fixed tolerance.

eps = np.array([1e-2, 1e-3, 1e-4])
evals = [solve(stiff_sp_problem(e), SolverConfig(N=8)).total_f_evals for e in eps]
print("f-evals", evals, "log-log slope", round(np.polyfit(np.log(eps), np.log(evals), 1)[0], 3))
