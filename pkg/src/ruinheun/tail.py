"""Power-law tail of the density and of the ruin probability.

For large u, H(u) ~ K1 (mu u)**-gamma, hence
Psi(u) ~ K u**-(gamma-1) with K = C K1 mu**-gamma / (gamma - 1).
K1 is read off the integrated density; it is never computed from
connection-coefficient theory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .density import DensityGrid
from .errors import PlateauNotReached
from .params import DerivedParams

__all__ = ["TailFit", "fit_K1", "default_window", "psi_tail", "loglog_slope", "DEFAULT_SPREAD_CAP"]

DEFAULT_SPREAD_CAP = 0.01


@dataclass(frozen=True)
class TailFit:
    """Fitted connection constant and the derived ruin-tail constant.

    ``K_ruin`` is NaN until the normalisation constant is known (see
    :func:`ruinheun.survival.normalize`).
    """

    K1: float
    fit_window: tuple[float, float]
    rel_spread: float
    gamma: float
    mu: float
    K_ruin: float = math.nan

    def to_dict(self) -> dict:
        return {
            "K1": self.K1,
            "K_ruin": self.K_ruin,
            "fit_window": list(self.fit_window),
            "rel_spread": self.rel_spread,
            "gamma": self.gamma,
            "mu": self.mu,
        }


def _plateau(grid: DensityGrid, gamma: float, mu: float, lo: float, hi: float):
    x = grid.nodes
    m = (x >= lo) & (x <= hi)
    if np.count_nonzero(m) < 3:
        return math.nan, math.inf
    logp = np.log(grid.h[m]) + gamma * np.log(mu * x[m])
    logk = float(np.mean(logp))
    spread = float(np.max(np.abs(np.expm1(logp - logk))))
    return math.exp(logk), spread


def default_window(grid: DensityGrid, cap: float = DEFAULT_SPREAD_CAP) -> tuple[float, float]:
    """Fit window [u_lo, 0.9 u_max].

    u_lo starts at max(50, 20/mu), is pushed past the point where the
    exp(-mu u) branch is below ``grid.tol`` relative to the power branch,
    and is then raised geometrically until the plateau spread drops below
    half the cap.  If no such u_lo exists the starting window is returned
    and the fit reports the failure.
    """
    mu, gamma = grid.mu, grid.derived.gamma
    hi = 0.9 * grid.u_max
    lo = max(50.0, 20.0 / mu)
    # exp(-mu u) (mu u)**(gamma - 2) < tol
    while -mu * lo + (gamma - 2.0) * math.log(mu * lo) > math.log(grid.tol) and lo < hi:
        lo *= 1.1
    start = lo
    while lo < hi / 4:
        _, spread = _plateau(grid, gamma, mu, lo, hi)
        if spread <= 0.5 * cap:
            return lo, hi
        lo *= 1.25
    return start, hi


def fit_K1(grid: DensityGrid, d: DerivedParams, mu: float,
           window: tuple[float, float] | None = None,
           cap: float = DEFAULT_SPREAD_CAP) -> TailFit:
    """Geometric mean of H(u) (mu u)**gamma over the grid nodes in ``window``.

    Raises
    ------
    PlateauNotReached
        If the maximum relative deviation from that mean exceeds ``cap`` or
        the window holds fewer than three nodes.
    """
    if window is None:
        window = default_window(grid, cap)
    lo, hi = float(window[0]), float(window[1])
    if not (grid.nodes[0] <= lo < hi <= grid.nodes[-1]):
        raise ValueError(f"fit window [{lo}, {hi}] is not inside [{grid.nodes[0]}, {grid.nodes[-1]}]")
    K1, spread = _plateau(grid, d.gamma, mu, lo, hi)
    if not spread <= cap:
        raise PlateauNotReached((lo, hi), spread, cap)
    return TailFit(K1=K1, fit_window=(lo, hi), rel_spread=spread, gamma=d.gamma, mu=mu)


def psi_tail(fit: TailFit, u):
    """Leading-order ruin probability K u**-(gamma-1)."""
    if math.isnan(fit.K_ruin):
        raise ValueError("TailFit has no K_ruin yet; normalise the solution first")
    u = np.asarray(u, dtype=float)
    out = fit.K_ruin * u ** (1.0 - fit.gamma)
    return out if out.ndim else float(out)


def loglog_slope(sol, window: tuple[float, float], n: int = 50) -> float:
    """Least-squares slope of log Psi against log u on n log-spaced probes.

    ``sol`` is a SurvivalSolution or any callable returning Psi(u).
    """
    psi = sol.psi if hasattr(sol, "psi") else sol
    u = np.geomspace(window[0], window[1], n)
    y = np.log(np.asarray(psi(u), dtype=float))
    x = np.log(u)
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)
