"""
Survival and ruin probabilities for three strategies
====================================================

Normalising the density fixes Phi(0) and the whole curve.  An aggressive
share lowers the ruin probability for small capital (higher expected
return) but its power tail is far heavier, so the curves cross.
"""

import csv

import numpy as np

from ruinheun import BASELINE, solve

sols = {k: solve(BASELINE.with_kappa(k)) for k in (0.2, 0.4, 0.9)}
for k, s in sols.items():
    print(f"kappa={k}: C={s.C:.8f}  Phi(0)={s.phi0:.8f}  grid to u={s.grid.u_max:.3g}")

u = np.array([0.0, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0])
print(f"{'u':>6}" + "".join(f"{'Psi k=' + str(k):>14}" for k in sols))
for x in u:
    print(f"{x:6.1f}" + "".join(f"{s.psi(x):14.6e}" for s in sols.values()))

# Locate the crossing of the aggressive and conservative curves.
grid = np.linspace(0.0, 20.0, 2001)
diff = sols[0.9].psi(grid) - sols[0.2].psi(grid)
i = np.flatnonzero(np.diff(np.sign(diff)))[0]
print(f"aggressive and conservative curves cross near u = {grid[i]:.2f}")

# Figure-ready table on a semilog grid.
with open("survival_curves.csv", "w", newline="") as fh:
    w = csv.writer(fh)
    w.writerow(["u"] + [f"psi_kappa={k}" for k in sols])
    for x in np.linspace(0.0, 60.0, 121):
        w.writerow([x] + [s.psi(x) for s in sols.values()])
print("wrote survival_curves.csv")
