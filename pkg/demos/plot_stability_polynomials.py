"""
Internal stage stability of the double-adjoint sweeps
=====================================================

The backward costate sweep of a stabilized method is itself an explicit
Chebyshev recurrence. Here we draw every internal stage function
``R_{s,i}(z)`` on the real stability interval and check that none of them
leaves the unit band, with and without damping.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from stabocp.stabilitylab import scan_internal_bound, stability_interval, stage_values

OUT = Path(__file__).with_name("output")
OUT.mkdir(exist_ok=True)
s = 8

###############################################################################
# Undamped and damped stage curves for both orders.

fig, axes = plt.subplots(2, 2, figsize=(10, 7), sharey=True)
for row, method in enumerate(("cheb1-da", "rkc2-da")):
    for col, eta in enumerate((0.0, None)):
        lo, _ = stability_interval(method, s, eta)
        z = np.linspace(lo, 0.0, 2000)
        vals, final = stage_values(method, s, eta, z)
        ax = axes[row, col]
        for i in range(1, s):
            ax.plot(z, vals[i], lw=0.8, color=plt.cm.viridis(i / s))
        ax.plot(z, final, "k", lw=1.5, label="step amplification")
        ax.axhline(1, ls=":", c="grey")
        ax.axhline(-1, ls=":", c="grey")
        damp = "eta = 0" if eta == 0.0 else "default damping"
        ax.set_title(f"{method}, s = {s}, {damp}")
        ax.set_xlabel("z")
axes[0, 0].legend(loc="lower right")
fig.tight_layout()
fig.savefig(OUT / "stage_stability.png", dpi=120)

###############################################################################
# The largest stage value over ``[-beta, 0]`` stays at 1 up to round-off.

for method in ("cheb1-da", "rkc2-da"):
    worst = max(scan_internal_bound(method, n, 0.0, stability_interval(method, n, 0.0)) for n in range(2, 31))
    print(f"{method}: max_s<=30 max_i |R_s,i| - 1 = {worst - 1:.1e}")
