"""Monte Carlo estimate of the ruin probability of the capital SDE.

Euler-Maruyama on X with step ``dt``; claim arrival times are drawn as an
exponential renewal sequence and inserted into the time grid exactly, so the
jump timing carries no discretisation bias.  Each path owns an independent
xoshiro256** stream whose state is derived from (seed, path index) through
splitmix64, so results do not depend on how paths are scheduled.

Draw order on a path (relied upon by the replay tests):

1. an Exp(lambda) inter-arrival time;
2. one standard normal per Euler step (polar method, second variate cached);
3. at a claim: the Exp(mu) claim size, then the next inter-arrival time.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numba as nb
import numpy as np

from .params import ModelParams

__all__ = [
    "MCConfig",
    "MCResult",
    "PathStream",
    "PathOutcome",
    "simulate_path",
    "estimate_psi",
    "convergence_sweep",
    "classical_psi",
    "write_outcomes_csv",
    "RUINED",
    "LEAKED",
    "ALIVE",
    "ABSORBED",
]

RUINED, LEAKED, ALIVE, ABSORBED = 0, 1, 2, 3
_KIND = {RUINED: "ruined", LEAKED: "ruined", ALIVE: "alive", ABSORBED: "absorbed"}

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_INV_2_53 = 1.0 / 9007199254740992.0


@dataclass(frozen=True)
class MCConfig:
    """Simulation settings.

    ``safe_barrier=None`` means the default 50 * max(u, 1); pass ``math.inf``
    to disable early absorption.
    """

    n_paths: int = 10_000
    dt: float = 1e-3
    horizon: float = 200.0
    seed: int = 0
    safe_barrier: float | None = None

    def __post_init__(self):
        if int(self.n_paths) != self.n_paths or self.n_paths < 1:
            raise ValueError(f"n_paths must be a positive integer, got {self.n_paths}")
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not self.horizon > 0:
            raise ValueError(f"horizon must be > 0, got {self.horizon}")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.safe_barrier is not None and not self.safe_barrier > 0:
            raise ValueError(f"safe_barrier must be > 0, got {self.safe_barrier}")

    def barrier_for(self, u: float) -> float:
        return 50.0 * max(u, 1.0) if self.safe_barrier is None else float(self.safe_barrier)


@dataclass(frozen=True)
class PathStream:
    """Identifies the random stream of one path."""

    seed: int
    index: int


@dataclass(frozen=True)
class PathOutcome:
    kind: str  # "ruined" | "alive" | "absorbed"
    time: float
    capital: float
    leaked: bool = False  # ruin between claims: a discretisation artefact


@dataclass
class MCResult:
    """Aggregated outcome counts.

    ``psi_hat`` counts paths alive at the horizon as survivors, so it
    estimates the finite-horizon ruin probability (a lower bound for the
    infinite-horizon one); ``survived_censored / n_paths`` bounds that bias.
    ``leaked`` counts ruins that happened between claims.
    """

    u: float
    psi_hat: float
    stderr: float
    ruined: int
    survived_censored: int
    survived_early: int
    leaked: int
    n_paths: int
    config: dict
    outcomes: tuple | None = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("outcomes")
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "MCResult":
        return cls(**d)


# --------------------------------------------------------------------------
# numba kernels

@nb.njit(inline="always")
def _mix64(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


@nb.njit(inline="always")
def _rotl(x, k):
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


@nb.njit
def _stream_state(seed, index):
    s = np.empty(4, dtype=np.uint64)
    z = _mix64(np.uint64(seed) + _GOLDEN) ^ _mix64(np.uint64(index) * _GOLDEN + _M2)
    for j in range(4):
        z = z + _GOLDEN
        s[j] = _mix64(z)
    return s


@nb.njit(inline="always")
def _next(s):
    result = _rotl(s[1] * np.uint64(5), 7) * np.uint64(9)
    t = s[1] << np.uint64(17)
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], 45)
    return result


@nb.njit(inline="always")
def _uniform_open0(s):
    # (0, 1]
    return (float(_next(s) >> np.uint64(11)) + 1.0) * _INV_2_53


@nb.njit(inline="always")
def _polar_pair(s):
    """Two independent standard normals (Marsaglia polar method)."""
    while True:
        a = 2.0 * _uniform_open0(s) - 1.0
        b = 2.0 * _uniform_open0(s) - 1.0
        q = a * a + b * b
        if 0.0 < q < 1.0:
            f = math.sqrt(-2.0 * math.log(q) / q)
            return a * f, b * f


@nb.njit
def _path(s, u, c, ak, sk, lam, mu, dt, horizon, barrier):
    """Simulate one path; returns (code, time, capital)."""
    sqdt = math.sqrt(dt)
    spare = 0.0
    have_spare = False
    t = 0.0
    x = u
    if x >= barrier:
        return ABSORBED, 0.0, x
    tj = -math.log(_uniform_open0(s)) / lam
    while True:
        t_stop = tj if tj < horizon else horizon
        n = int((t_stop - t) / dt)
        rem = (t_stop - t) - n * dt
        for k in range(n + 1):
            if k < n:
                h = dt
                sh = sqdt
            else:
                if rem <= 0.0:
                    break
                h = rem
                sh = math.sqrt(rem)
            if have_spare:
                z = spare
                have_spare = False
            else:
                z, spare = _polar_pair(s)
                have_spare = True
            x = x + (c + ak * x) * h + sk * x * sh * z
            if x < 0.0:
                return LEAKED, t + (k + 1) * dt if k < n else t_stop, x
            if x >= barrier:
                return ABSORBED, t + (k + 1) * dt if k < n else t_stop, x
        t = t_stop
        if tj >= horizon:
            return ALIVE, horizon, x
        x -= -math.log(_uniform_open0(s)) / mu
        if x < 0.0:
            return RUINED, t, x
        tj = t - math.log(_uniform_open0(s)) / lam


@nb.njit(nogil=True)
def _block(start, stop, seed, u, c, ak, sk, lam, mu, dt, horizon, barrier,
           codes, times, values):
    for i in range(start, stop):
        s = _stream_state(seed, i)
        code, t, x = _path(s, u, c, ak, sk, lam, mu, dt, horizon, barrier)
        codes[i] = code
        times[i] = t
        values[i] = x


# --------------------------------------------------------------------------

def _dynamics(p: ModelParams):
    ak = p.r + p.kappa * (p.a - p.r)
    sk = p.kappa * p.sigma
    return p.c, ak, sk, p.lam, p.mu


def simulate_path(u: float, p: ModelParams, cfg: MCConfig, stream: PathStream) -> PathOutcome:
    """Simulate a single path of the capital process."""
    if u < 0:
        raise ValueError("initial capital must be >= 0")
    c, ak, sk, lam, mu = _dynamics(p)
    s = _stream_state(np.uint64(stream.seed), np.uint64(stream.index))
    code, t, x = _path(s, float(u), c, ak, sk, lam, mu, cfg.dt, cfg.horizon, cfg.barrier_for(u))
    return PathOutcome(kind=_KIND[code], time=float(t), capital=float(x), leaked=code == LEAKED)


def estimate_psi(u: float, p: ModelParams, cfg: MCConfig, workers: int = 1,
                 keep_paths: bool = False, chunk: int = 4096) -> MCResult:
    """Estimate the ruin probability from ``cfg.n_paths`` independent paths.

    Paths are split into fixed chunks that may run on ``workers`` threads;
    each path's stream depends only on (seed, index), so the result is
    identical for any worker count.
    """
    if u < 0:
        raise ValueError("initial capital must be >= 0")
    n = int(cfg.n_paths)
    c, ak, sk, lam, mu = _dynamics(p)
    barrier = cfg.barrier_for(u)
    codes = np.empty(n, dtype=np.int8)
    times = np.empty(n)
    values = np.empty(n)
    seed = np.uint64(cfg.seed)
    bounds = [(i, min(i + chunk, n)) for i in range(0, n, chunk)]

    def run(b):
        _block(b[0], b[1], seed, float(u), c, ak, sk, lam, mu, cfg.dt, cfg.horizon,
               barrier, codes, times, values)

    if workers <= 1:
        for b in bounds:
            run(b)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, bounds))

    counts = np.bincount(codes, minlength=4)
    ruined = int(counts[RUINED] + counts[LEAKED])
    psi_hat = ruined / n
    cfg_echo = asdict(cfg)
    cfg_echo["safe_barrier"] = barrier
    return MCResult(
        u=float(u),
        psi_hat=psi_hat,
        stderr=math.sqrt(psi_hat * (1.0 - psi_hat) / n),
        ruined=ruined,
        survived_censored=int(counts[ALIVE]),
        survived_early=int(counts[ABSORBED]),
        leaked=int(counts[LEAKED]),
        n_paths=n,
        config=cfg_echo,
        outcomes=(codes, times, values) if keep_paths else None,
    )


def convergence_sweep(u: float, p: ModelParams, dts: Sequence[float], cfg: MCConfig,
                      workers: int = 1) -> list[MCResult]:
    """Re-run :func:`estimate_psi` for each step size (same seed and paths)."""
    dts = [float(x) for x in dts]
    if any(b > a for a, b in zip(dts, dts[1:])):
        raise ValueError("dts must be non-increasing")
    return [estimate_psi(u, p, replace(cfg, dt=dt), workers=workers) for dt in dts]


def classical_psi(u, lam: float, mu: float, c: float):
    """Ruin probability of the classical model with Exp(mu) claims (c > lam/mu)."""
    u = np.asarray(u, dtype=float)
    out = lam / (c * mu) * np.exp(-(mu - lam / c) * u)
    return out if out.ndim else float(out)


def write_outcomes_csv(result: MCResult, path: str | Path) -> None:
    """Per-path outcome table; needs ``estimate_psi(..., keep_paths=True)``."""
    if result.outcomes is None:
        raise ValueError("result carries no per-path outcomes (use keep_paths=True)")
    codes, times, values = result.outcomes
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["path", "outcome", "leaked", "time", "capital"])
        for i, (k, t, x) in enumerate(zip(codes, times, values)):
            w.writerow([i, _KIND[int(k)], int(k == LEAKED), repr(float(t)), repr(float(x))])
