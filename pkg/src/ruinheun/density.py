"""Regular-branch survival density H(u), normalised so that H(0) = 1.

H solves

    u^2 H'' + [mu u^2 + (gamma+2) u + beta] H' + [mu gamma u + a_H] H = 0

and is the only solution bounded at the irregular singular point u = 0.
Near zero it is represented by its (divergent) Maclaurin series in
zeta = -mu u, optimally truncated; from a small seed point u0 outwards the
equation is integrated numerically.

The problem is stiff at both ends: the singular branch decays like
exp(beta/u) near zero and the second solution at infinity decays like
exp(-mu u), so an implicit Radau IIA (order 5) integrator is used.  Between
the accepted steps H is represented by quintic Hermite polynomials built
from (H, H', H'') at the step ends, H'' being taken from the equation.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp

from .errors import NegativeDensity, OutOfRange, SeedDiverged, StepSizeUnderflow
from .params import DerivedParams, HeunParams, check_nondegeneracy, heun_params

__all__ = [
    "SeriesExpansion",
    "DensityGrid",
    "recurrence_coeffs",
    "seed_at",
    "choose_seed",
    "ode_residual",
    "scaled_ode_residual",
    "integrate",
    "eval_H",
    "eval_H_prime",
    "eval_H_second",
    "seed_consistency",
    "grid_to_csv",
]

ATOL_FLOOR = 1e-300
DEFAULT_ORDER = 80
SEED_CEILING = 1e-2  # in units of 1/mu

# Monomial coefficients (rows: t**0..t**5) of the quintic Hermite basis on
# [0, 1]; columns act on [f0, f1, h f0', h f1', h^2 f0'', h^2 f1''].
_HERMITE5 = np.array(
    [
        [1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.5, 0.0],
        [-10.0, 10.0, -6.0, -4.0, -1.5, 0.5],
        [15.0, -15.0, 8.0, 7.0, 1.5, -1.0],
        [-6.0, 6.0, -3.0, -3.0, -0.5, 0.5],
    ]
)


@dataclass(frozen=True)
class SeriesExpansion:
    """Coefficients f_0..f_K of the regular branch sum f_k zeta**k."""

    coeffs: np.ndarray
    order: int
    heun: HeunParams


def recurrence_coeffs(heun: HeunParams, K: int = DEFAULT_ORDER) -> SeriesExpansion:
    """Run the three-term recurrence from f_{-1} = 0, f_0 = 1 up to f_K.

    Substituting sum f_k zeta**k into the canonical equation gives

        d_H (k+1) f_{k+1} + [k (k + c_H - 1) + a_H] f_k - (k - 1 + b_H) f_{k-1} = 0.

    Note the ``+ b_H``: the ``-b_H zeta y`` and ``-zeta**2 y'`` terms both
    feed f_{k-1} with the same sign.
    """
    if K < 1:
        raise ValueError(f"series order must be >= 1, got {K}")
    if heun.d_H == 0:
        raise ValueError("d_H = 0: the recurrence cannot be solved for f_{k+1}")
    a, b, c, d = heun.a_H, heun.b_H, heun.c_H, heun.d_H
    f = np.empty(K + 1)
    f[0] = 1.0
    prev = 0.0
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(K):
            f[k + 1] = -((k * (k + c - 1.0) + a) * f[k] - (k - 1.0 + b) * prev) / (d * (k + 1))
            prev = f[k]
    f.setflags(write=False)
    return SeriesExpansion(coeffs=f, order=K, heun=heun)


def _optimal_index(mags: np.ndarray) -> int:
    """Index of the smallest term, judged on the envelope max(|t_k|, |t_k+1|).

    The envelope keeps isolated exact zeros (e.g. f_1 = 0 when a_H = 0)
    from being mistaken for convergence.
    """
    env = np.maximum(mags[1:-1], mags[2:])
    return int(np.argmin(env)) + 1


def _truncated_terms(series: SeriesExpansion, mu: float, u0: float):
    zeta = -mu * u0
    k = np.arange(series.order + 1)
    with np.errstate(over="ignore", invalid="ignore"):
        terms = series.coeffs * zeta ** k
    mags = np.abs(terms)
    mags[~np.isfinite(mags)] = np.inf
    kstar = _optimal_index(mags)
    return terms, kstar, max(mags[kstar], mags[kstar + 1])


def seed_at(series: SeriesExpansion, mu: float, u0: float,
            threshold: float = 1e-3) -> tuple[float, float, float]:
    """H(u0), H'(u0) from the optimally truncated series, with an error estimate.

    The sum stops before the smallest term; the error estimate is the
    magnitude of the first omitted term (envelope of the next two).
    ``SeedDiverged`` is raised when that error exceeds ``threshold`` relative
    to the sum.
    """
    if series.order < 2:
        raise ValueError("seed_at needs a series of order >= 2")
    if u0 < 0:
        raise ValueError(f"seed point must be >= 0, got {u0}")
    if u0 == 0:
        return 1.0, -mu * float(series.coeffs[1]), 0.0
    terms, kstar, err = _truncated_terms(series, mu, u0)
    kept = terms[:kstar]
    H = float(np.sum(kept))
    dH = float(np.sum(np.arange(kstar) * kept)) / u0
    if not np.isfinite(err) or err > threshold * abs(H):
        raise SeedDiverged(
            f"series at u0={u0:.3g} is not usable: smallest term {err:.3g} vs sum {H:.3g}"
        )
    return H, dH, float(err)


def choose_seed(series: SeriesExpansion, mu: float, tol: float) -> float:
    """Largest u0 = 1e-2/mu * 2**-j whose truncation error is below tol/10."""
    u = SEED_CEILING / mu
    for _ in range(60):
        try:
            H, _, err = seed_at(series, mu, u)
        except SeedDiverged:
            pass
        else:
            if err <= 0.1 * tol * abs(H):
                return u
        u *= 0.5
    raise SeedDiverged(f"no seed point below {SEED_CEILING / mu:.3g} reaches tol={tol:.3g}")


def _series_partial(series: SeriesExpansion, mu: float, kstar: int, u):
    """Truncated series value, derivative and integral from 0 at points u."""
    u = np.asarray(u, dtype=float)
    f = series.coeffs[:kstar]
    k = np.arange(kstar)
    powers = (-mu * u[..., None]) ** k
    terms = f * powers
    val = terms.sum(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        der = np.where(u > 0, (k * terms).sum(axis=-1) / u, -mu * (f[1] if kstar > 1 else 0.0))
    integ = u * (terms / (k + 1)).sum(axis=-1)
    return val, der, integ


def ode_residual(u, g, g1, g2, d: DerivedParams, mu: float):
    """Residual of the density equation (vectorised over arrays)."""
    u = np.asarray(u, dtype=float)
    a_H = mu * d.beta + d.gamma - d.nu
    return (u * u * g2
            + (mu * u * u + (d.gamma + 2.0) * u + d.beta) * g1
            + (mu * d.gamma * u + a_H) * g)


def scaled_ode_residual(u, g, g1, g2, d: DerivedParams, mu: float):
    """|residual| / max(1, u^2, |g|, |g'|, |g''|)."""
    res = np.abs(ode_residual(u, g, g1, g2, d, mu))
    u = np.asarray(u, dtype=float)
    scale = np.maximum.reduce([np.ones_like(u), u * u, np.abs(g), np.abs(g1), np.abs(g2)])
    return res / scale


def _second_derivative(u, g, g1, gamma, beta, a_H, mu):
    return -((mu * u * u + (gamma + 2.0) * u + beta) * g1 + (mu * gamma * u + a_H) * g) / (u * u)


@dataclass(frozen=True)
class DensityGrid:
    """Adaptive-node representation of H on [u0, u_max].

    ``coef[i]`` holds the monomial coefficients (in t = (u - u_i)/h_i) of the
    quintic Hermite interpolant on step i; ``seg_int[i]`` is its integral.
    ``series_int`` is the integral of the truncated series over [0, u0].
    """

    nodes: np.ndarray
    h: np.ndarray
    h_prime: np.ndarray
    h_second: np.ndarray
    u_max: float
    tol: float
    u0: float
    seed_err: float
    series: SeriesExpansion
    kstar: int
    derived: DerivedParams
    mu: float
    coef: np.ndarray
    seg_int: np.ndarray
    series_int: float

    @property
    def n_steps(self) -> int:
        return len(self.nodes) - 1

    def __call__(self, u):
        return eval_H(self, u)


def _rhs_factory(d: DerivedParams, mu: float):
    g, b = d.gamma, d.beta
    a_H = mu * b + g - d.nu

    def rhs(u, y):
        return np.array([y[1], _second_derivative(u, y[0], y[1], g, b, a_H, mu)])

    def jac(u, y):
        u2 = u * u
        return np.array([[0.0, 1.0],
                         [-(mu * g * u + a_H) / u2, -(mu * u2 + (g + 2.0) * u + b) / u2]])

    return rhs, jac


def _hermite_coefficients(x, f, f1, f2):
    hstep = np.diff(x)
    data = np.stack([f[:-1], f[1:], hstep * f1[:-1], hstep * f1[1:],
                     hstep ** 2 * f2[:-1], hstep ** 2 * f2[1:]], axis=1)
    return data @ _HERMITE5.T


def integrate(d: DerivedParams, mu: float, u_max: float, tol: float = 1e-10,
              order: int = DEFAULT_ORDER) -> DensityGrid:
    """Integrate the density equation from the series seed point to ``u_max``.

    Parameters
    ----------
    d : DerivedParams
        Must satisfy gamma > 1.
    mu : float
        Claim-size rate.
    u_max : float
        Right end of the grid.
    tol : float
        Relative tolerance in [1e-12, 1e-6]; the absolute floor is 1e-300.
    order : int
        Number of series coefficients computed for the seed.

    Raises
    ------
    StepSizeUnderflow
        If the integrator cannot advance.
    NegativeDensity
        If H becomes non-positive at some node.
    """
    if not 1e-12 <= tol <= 1e-6:
        raise ValueError(f"tol must lie in [1e-12, 1e-6], got {tol}")
    check_nondegeneracy(d)
    heun = heun_params(d, mu)
    series = recurrence_coeffs(heun, order)
    u0 = choose_seed(series, mu, tol)
    if not u_max > u0:
        raise ValueError(f"u_max={u_max} must exceed the seed point {u0}")
    H0, dH0, err0 = seed_at(series, mu, u0)
    _, kstar, _ = _truncated_terms(series, mu, u0)

    rhs, jac = _rhs_factory(d, mu)
    sol = solve_ivp(rhs, (u0, u_max), [H0, dH0], method="Radau", rtol=tol,
                    atol=ATOL_FLOOR, jac=jac)
    if sol.status != 0:
        reached = sol.t[-1] if sol.t.size else u0
        raise StepSizeUnderflow(f"integration stopped at u={reached:.6g}: {sol.message}")

    x = sol.t
    H, dH = sol.y
    bad = np.flatnonzero(H <= 0)
    if bad.size:
        raise NegativeDensity(float(x[bad[0]]), float(H[bad[0]]))
    a_H = heun.a_H
    d2H = _second_derivative(x, H, dH, d.gamma, d.beta, a_H, mu)

    coef = _hermite_coefficients(x, H, dH, d2H)
    hstep = np.diff(x)
    seg_int = hstep * (coef / np.arange(1, 7)).sum(axis=1)
    series_int = float(_series_partial(series, mu, kstar, u0)[2])
    for arr in (x, H, dH, d2H, coef, seg_int):
        arr.setflags(write=False)
    return DensityGrid(nodes=x, h=H, h_prime=dH, h_second=d2H, u_max=float(u_max),
                       tol=tol, u0=u0, seed_err=err0, series=series, kstar=kstar,
                       derived=d, mu=mu, coef=coef, seg_int=seg_int, series_int=series_int)


def _locate(grid: DensityGrid, u: np.ndarray):
    x = grid.nodes
    lo = x[0] * (1 - 1e-15)
    hi = x[-1] * (1 + 1e-15)
    if np.any((u < lo) | (u > hi)) or np.any(np.isnan(u)):
        raise OutOfRange(f"u outside the integrated interval [{x[0]:.6g}, {x[-1]:.6g}]")
    i = np.clip(np.searchsorted(x, u, side="right") - 1, 0, len(x) - 2)
    t = np.clip((u - x[i]) / (x[i + 1] - x[i]), 0.0, 1.0)
    return i, t


def _pin_nodes(grid: DensityGrid, u, i, stored, val):
    # stored values at both ends of the located step
    val = np.where(u == grid.nodes[i + 1], stored[i + 1], val)
    return np.where(u == grid.nodes[i], stored[i], val)


def eval_H(grid: DensityGrid, u):
    """Dense-output value of H on [u0, u_max]; stored values at the nodes."""
    u = np.asarray(u, dtype=float)
    i, t = _locate(grid, u)
    val = np.polynomial.polynomial.polyval(t, grid.coef[i].T, tensor=False)
    val = _pin_nodes(grid, u, i, grid.h, val)
    return val if val.ndim else float(val)


def eval_H_prime(grid: DensityGrid, u):
    u = np.asarray(u, dtype=float)
    i, t = _locate(grid, u)
    dcoef = grid.coef[i] * np.arange(6)
    hstep = grid.nodes[i + 1] - grid.nodes[i]
    val = np.polynomial.polynomial.polyval(t, dcoef[..., 1:].T, tensor=False) / hstep
    val = _pin_nodes(grid, u, i, grid.h_prime, val)
    return val if val.ndim else float(val)


def eval_H_second(grid: DensityGrid, u):
    """Second derivative of the interpolant (not taken from the equation)."""
    u = np.asarray(u, dtype=float)
    i, t = _locate(grid, u)
    k = np.arange(6)
    dcoef = grid.coef[i] * (k * (k - 1))
    hstep = grid.nodes[i + 1] - grid.nodes[i]
    val = np.polynomial.polynomial.polyval(t, dcoef[..., 2:].T, tensor=False) / hstep ** 2
    return val if val.ndim else float(val)


def _partial_integral(grid: DensityGrid, i, t):
    """Integral of H from node i to node i + t*h_i."""
    hstep = grid.nodes[i + 1] - grid.nodes[i]
    k = np.arange(1, 7)
    anti = grid.coef[i] / k
    return hstep * (anti * t[..., None] ** k).sum(axis=-1)


def seed_consistency(d: DerivedParams, mu: float, tol: float = 1e-10) -> dict:
    """Compare the series with the integrated solution at twice the seed point.

    The ODE error estimate is the propagated seed error plus one tolerance
    unit per accepted step (local errors are not amplified on this interval).
    """
    u0 = choose_seed(recurrence_coeffs(heun_params(d, mu)), mu, tol)
    grid = integrate(d, mu, u_max=2.0 * u0, tol=tol)
    H_ode = float(grid.h[-1])
    ode_err = grid.seed_err + grid.n_steps * tol * float(np.max(np.abs(grid.h)))
    H_ser, _, ser_err = seed_at(grid.series, mu, 2.0 * u0)
    return {
        "u0": u0,
        "u": 2.0 * u0,
        "series": H_ser,
        "series_err": ser_err,
        "ode": H_ode,
        "ode_err": ode_err,
        "diff": abs(H_ser - H_ode),
        "ok": abs(H_ser - H_ode) <= ser_err + ode_err,
    }


def grid_to_csv(grid: DensityGrid, path: str | Path) -> None:
    """Write (u, H, H') rows, for debugging."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["u", "H", "H_prime"])
        for u, h, hp in zip(grid.nodes, grid.h, grid.h_prime):
            w.writerow([repr(float(u)), repr(float(h)), repr(float(hp))])
