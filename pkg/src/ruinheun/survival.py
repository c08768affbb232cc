"""Survival and ruin probabilities from the normalised regular-branch density.

    Phi(u) = C (c/lambda + int_0^u H),
    C^-1   = c/lambda + int_0^inf H.

Phi and Psi = 1 - Phi are both accumulated from positive pieces (Phi from
the left, Psi from the right) so that neither loses relative accuracy
where it is small.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy.integrate import quad

from .density import (
    DensityGrid,
    _locate,
    _partial_integral,
    _series_partial,
    eval_H,
    eval_H_prime,
    integrate,
)
from .errors import PlateauNotReached, TailTooHeavy
from .params import DerivedParams, ModelParams, check_nondegeneracy, derive
from .tail import DEFAULT_SPREAD_CAP, TailFit, fit_K1

__all__ = [
    "SurvivalSolution",
    "normalize",
    "phi",
    "psi",
    "phi_prime",
    "ide_residual",
    "scaled_ide_residual",
    "solve",
    "probe_grid",
    "write_table",
    "DEFAULT_TAIL_CAP",
]

DEFAULT_TAIL_CAP = 1e-6


@dataclass(frozen=True)
class SurvivalSolution:
    """Normalised solution; immutable once built by :func:`normalize`."""

    C: float
    phi0: float
    cumint: np.ndarray  # int_0^{u_i} H at the grid nodes
    tail: TailFit
    grid: DensityGrid
    params: ModelParams
    derived: DerivedParams
    quad_grid: float  # int_0^{u_max} H
    remainder: float  # analytic tail beyond u_max
    tailint: np.ndarray  # int_{u_i}^inf H at the grid nodes

    def phi(self, u):
        return phi(self, u)

    def psi(self, u):
        return psi(self, u)


def _tail_remainder(tail: TailFit, u):
    g, mu = tail.gamma, tail.mu
    return tail.K1 * mu ** (-g) * np.asarray(u, dtype=float) ** (1.0 - g) / (g - 1.0)


def normalize(grid: DensityGrid, tail: TailFit, p: ModelParams,
              cap: float = DEFAULT_TAIL_CAP) -> SurvivalSolution:
    """Fix C from the normalisation Phi(inf) = 1.

    The integral of H is the series part on [0, u0], the Hermite quadrature
    on [u0, u_max] and the analytic remainder of the leading power law.

    Raises
    ------
    TailTooHeavy
        If remainder / (quadrature + c/lambda) exceeds ``cap``.
    """
    d = grid.derived
    check_nondegeneracy(d)
    ratio_cl = p.c / p.lam
    cum = np.concatenate([[grid.series_int], grid.series_int + np.cumsum(grid.seg_int)])
    Q = float(cum[-1])
    R = float(_tail_remainder(tail, grid.u_max))
    if not R / (Q + ratio_cl) <= cap:
        raise TailTooHeavy(R / (Q + ratio_cl), cap, grid.u_max)
    C = 1.0 / (ratio_cl + Q + R)
    rev = np.concatenate([np.cumsum(grid.seg_int[::-1])[::-1], [0.0]]) + R
    phi0 = ratio_cl * C
    K_ruin = C * tail.K1 * tail.mu ** (-tail.gamma) / (tail.gamma - 1.0)
    for arr in (cum, rev):
        arr.setflags(write=False)
    return SurvivalSolution(C=C, phi0=phi0, cumint=cum, tail=replace(tail, K_ruin=K_ruin),
                            grid=grid, params=p, derived=d, quad_grid=Q, remainder=R,
                            tailint=rev)


def _split(sol: SurvivalSolution, u):
    u = np.asarray(u, dtype=float)
    if np.any(u < 0) or np.any(np.isnan(u)):
        raise ValueError("capital must be >= 0")
    g = sol.grid
    return u, u <= g.u0, (u > g.u0) & (u <= g.u_max), u > g.u_max


def _int_from_zero(sol: SurvivalSolution, u):
    """int_0^u H for u <= u_max, and the two pieces needed for the right tail."""
    g = sol.grid
    u, low, mid, high = _split(sol, u)
    left = np.zeros_like(u)
    right = np.zeros_like(u)
    if np.any(low):
        part = _series_partial(g.series, g.mu, g.kstar, u[low])[2]
        left[low] = part
        right[low] = sol.tailint[0] + (g.series_int - part)
    if np.any(mid):
        i, t = _locate(g, u[mid])
        part = _partial_integral(g, i, t)
        left[mid] = sol.cumint[i] + part
        right[mid] = sol.tailint[i + 1] + (g.seg_int[i] - part)
    if np.any(high):
        r = _tail_remainder(sol.tail, u[high])
        left[high] = sol.quad_grid + sol.remainder - r
        right[high] = r
    return left, right


def phi(sol: SurvivalSolution, u):
    """Survival probability; beyond u_max the fitted power tail is used."""
    left, _ = _int_from_zero(sol, u)
    out = np.clip(sol.C * (sol.params.c / sol.params.lam + left), 0.0, 1.0)
    return out if out.ndim else float(out)


def psi(sol: SurvivalSolution, u):
    """Ruin probability, accumulated from the right so tiny values stay accurate."""
    _, right = _int_from_zero(sol, u)
    out = np.clip(sol.C * right, 0.0, 1.0)
    return out if out.ndim else float(out)


def _H_and_prime(sol: SurvivalSolution, u: float):
    g = sol.grid
    if u <= g.u0:
        val, der, _ = _series_partial(g.series, g.mu, g.kstar, u)
        return float(val), float(der)
    if u <= g.u_max:
        return eval_H(g, u), eval_H_prime(g, u)
    tail = sol.tail
    h = tail.K1 * (tail.mu * u) ** (-tail.gamma)
    return h, -tail.gamma * h / u


def phi_prime(sol: SurvivalSolution, u: float) -> float:
    return sol.C * _H_and_prime(sol, u)[0]


def ide_residual(sol: SurvivalSolution, u: float, qtol: float = 1e-9) -> float:
    """Signed residual of the integro-differential equation at ``u``.

    Phi' = C H and Phi'' = C H'; the convolution is integrated adaptively
    over y in [0, min(u, y_cut)], y_cut chosen so that exp(-mu y_cut) is far
    below ``qtol`` (the dropped part is bounded by that factor).
    """
    if not u > 0:
        raise ValueError("the residual is defined for u > 0")
    p, d = sol.params, sol.derived
    H, dH = _H_and_prime(sol, u)
    d1 = sol.C * H
    d2 = sol.C * dH
    # Phi from the left and the convolution from Psi differences keep the
    # residual homogeneous in C, so a rescaled C leaves it unchanged.
    psi_u = psi(sol, u)
    phi_u = phi(sol, u)
    y_cut = min(u, math.log(1e3 / qtol) / p.mu)

    def integrand(y):
        # Phi(u - y) - Phi(u) = Psi(u) - Psi(u - y)
        return (psi_u - psi(sol, u - y)) * p.mu * math.exp(-p.mu * y)

    breaks = [y for y in (sol.grid.u0, 1.0, 5.0) if 0 < u - y < y_cut]
    conv, _ = quad(integrand, 0.0, y_cut, epsabs=qtol, epsrel=qtol, limit=400,
                   points=breaks or None)
    return (0.5 * d.sigma_kappa ** 2 * u * u * d2 + (d.a_kappa * u + p.c) * d1
            - p.lam * phi_u * math.exp(-p.mu * u) + p.lam * conv)


def scaled_ide_residual(sol: SurvivalSolution, u: float, qtol: float = 1e-9) -> float:
    """|ide_residual| / max(1, a_kappa u + c)."""
    scale = max(1.0, sol.derived.a_kappa * u + sol.params.c)
    return abs(ide_residual(sol, u, qtol)) / scale


def solve(p: ModelParams, tol: float = 1e-10, u_max: float | None = None,
          window: tuple[float, float] | None = None,
          tail_cap: float = DEFAULT_TAIL_CAP, spread_cap: float = DEFAULT_SPREAD_CAP,
          max_u: float = 1e9) -> SurvivalSolution:
    """Integrate, fit the tail and normalise.

    With ``u_max=None`` the right end is grown until both the plateau fit and
    the tail-remainder cap succeed, using the measured shortfall to size each
    enlargement.  An explicit ``u_max`` is used as given.
    """
    d = derive(p)
    check_nondegeneracy(d)
    auto = u_max is None
    um = 1e3 / p.mu if auto else float(u_max)
    while True:
        grid = integrate(d, p.mu, um, tol)
        try:
            tail = fit_K1(grid, d, p.mu, window, spread_cap)
            return normalize(grid, tail, p, tail_cap)
        except PlateauNotReached as exc:
            if not auto or um >= max_u:
                raise
            # spread decays roughly like 1/u_lo
            factor = 4.0 * max(exc.rel_spread / spread_cap, 1.0) if math.isfinite(exc.rel_spread) else 10.0
        except TailTooHeavy as exc:
            if not auto or um >= max_u:
                raise
            factor = 2.0 * (exc.ratio / exc.cap) ** (1.0 / (d.gamma - 1.0))
        um = min(um * min(max(factor, 2.0), 1e4), max_u)


def probe_grid(u_min: float, u_max: float, n: int, scale: str = "log") -> np.ndarray:
    """Probe capitals, linearly or logarithmically spaced."""
    if scale in ("log", "loglog"):
        if u_min <= 0:
            raise ValueError("log-spaced probes need u_min > 0")
        return np.geomspace(u_min, u_max, n)
    if scale in ("linear", "semilog"):
        return np.linspace(u_min, u_max, n)
    raise ValueError(f"unknown probe scale {scale!r}")


def write_table(sol: SurvivalSolution, u, path: str | Path) -> None:
    """Write (u, Phi, Psi) rows as CSV with a header."""
    u = np.asarray(u, dtype=float)
    ph = np.atleast_1d(phi(sol, u))
    ps = np.atleast_1d(psi(sol, u))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["u", "phi", "psi"])
        for row in zip(np.atleast_1d(u), ph, ps):
            w.writerow([repr(float(v)) for v in row])
