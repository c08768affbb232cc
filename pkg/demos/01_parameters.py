"""
Market parameters and the tail exponent
=======================================

The risky share kappa sets both the effective drift and volatility of the
capital, and through them the exponent gamma that governs how slowly the
ruin probability decays.
"""

from ruinheun import BASELINE, derive, gamma_of_kappa, heun_params

# The baseline market: unit claim rate and mean claim, premium 0.5,
# risk-free rate 5%, risky drift 15%, volatility 40%.
print(BASELINE)

# Effective parameters for the moderate share kappa = 0.4.
d = derive(BASELINE)
print(d)
print(heun_params(d, BASELINE.mu))

# gamma falls quickly as more capital goes into the risky asset; the ruin
# probability decays like u ** -(gamma - 1).
print(f"{'kappa':>6} {'gamma':>10} {'tail order':>11}")
for kappa, gamma in gamma_of_kappa(BASELINE, [0.1, 0.2, 0.4, 0.6, 0.9, 1.0]):
    print(f"{kappa:6.2f} {gamma:10.5f} {gamma - 1:11.5f}")

# Above kappa = 1 nothing is defined; below gamma = 1 ruin is certain and the
# solver refuses to run.  With sigma = 0.6 and kappa = 1, gamma = 0.83.
bad = BASELINE.__class__(lam=1, mu=1, c=0.5, r=0.05, a=0.15, sigma=0.6, kappa=1.0)
print("gamma at sigma=0.6, kappa=1:", derive(bad).gamma)
