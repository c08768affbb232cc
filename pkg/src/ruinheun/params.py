"""Model parameters, derived dimensionless groups and the Heun invariants.

The capital process is

    dX = (c + a_kappa X) dt + sigma_kappa X dW - dZ,

with ``a_kappa = r + kappa (a - r)`` and ``sigma_kappa = kappa sigma``;
Z is compound Poisson with intensity ``lambda`` and Exp(``mu``) claims.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping

from .errors import DegenerateModel, InvalidParameter

__all__ = [
    "ModelParams",
    "DerivedParams",
    "HeunParams",
    "derive",
    "heun_params",
    "check_nondegeneracy",
    "gamma_of_kappa",
    "params_from_mapping",
    "load_params",
    "BASELINE",
]

# JSON key -> attribute name
_JSON_FIELDS = {
    "lambda": "lam",
    "mu": "mu",
    "c": "c",
    "r": "r",
    "a": "a",
    "sigma": "sigma",
    "kappa": "kappa",
}


def _finite(name, value):
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise InvalidParameter(name, value, "a real number")
    if not math.isfinite(value):
        raise InvalidParameter(name, value, "finite")


@dataclass(frozen=True)
class ModelParams:
    """Raw insurance and market parameters.

    Attributes
    ----------
    lam : float
        Poisson claim intensity (1/time), > 0.
    mu : float
        Rate of the exponential claim size (1/money), > 0.
    c : float
        Premium rate (money/time), > 0.
    r : float
        Risk-free rate, >= 0.
    a : float
        Drift of the risky asset, > r.
    sigma : float
        Volatility of the risky asset, > 0.
    kappa : float
        Share of capital held in the risky asset, in (0, 1].
    """

    lam: float
    mu: float
    c: float
    r: float
    a: float
    sigma: float
    kappa: float
    # Only the simulator's classical-limit check relaxes a > r; see classical().
    check_market: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        for name in ("lam", "mu", "c", "r", "a", "sigma", "kappa"):
            _finite(name, getattr(self, name))
        if self.lam <= 0:
            raise InvalidParameter("lambda", self.lam, "lambda > 0")
        if self.mu <= 0:
            raise InvalidParameter("mu", self.mu, "mu > 0")
        if self.c <= 0:
            raise InvalidParameter("c", self.c, "c > 0")
        if self.sigma <= 0:
            raise InvalidParameter("sigma", self.sigma, "sigma > 0")
        if self.r < 0:
            raise InvalidParameter("r", self.r, "r >= 0")
        if not 0 < self.kappa <= 1:
            raise InvalidParameter("kappa", self.kappa, "0 < kappa <= 1")
        if self.check_market and not self.a > self.r:
            raise InvalidParameter("a", self.a, f"a > r = {self.r}")

    @classmethod
    def classical(cls, lam: float, mu: float, c: float, sigma: float = 1e-6) -> "ModelParams":
        """Near-classical Cramer-Lundberg model (a = r = 0, kappa = 1).

        Violates ``a > r`` on purpose; only meaningful for the Monte Carlo
        simulator, whose classical limit has a closed-form ruin probability.
        """
        return cls(lam=lam, mu=mu, c=c, r=0.0, a=0.0, sigma=sigma, kappa=1.0,
                   check_market=False)

    def with_kappa(self, kappa: float) -> "ModelParams":
        return replace(self, kappa=kappa)

    def to_dict(self) -> dict:
        return {key: getattr(self, attr) for key, attr in _JSON_FIELDS.items()}


@dataclass(frozen=True)
class DerivedParams:
    """Effective portfolio parameters and the dimensionless groups."""

    a_kappa: float
    sigma_kappa: float
    gamma: float
    beta: float
    nu: float

    def to_dict(self) -> dict:
        return {
            "a_kappa": self.a_kappa,
            "sigma_kappa": self.sigma_kappa,
            "gamma": self.gamma,
            "beta": self.beta,
            "nu": self.nu,
        }


@dataclass(frozen=True)
class HeunParams:
    """Invariants of the canonical doubly confluent Heun form (variable -mu u)."""

    a_H: float
    b_H: float
    c_H: float
    d_H: float

    def to_dict(self) -> dict:
        return {"a_H": self.a_H, "b_H": self.b_H, "c_H": self.c_H, "d_H": self.d_H}


def _gamma(r, a, sigma, kappa):
    a_k = r + kappa * (a - r)
    s_k = kappa * sigma
    return 2.0 * a_k / (s_k * s_k)


def derive(params: ModelParams) -> DerivedParams:
    """Effective drift/volatility and the groups gamma, beta, nu."""
    a_k = params.r + params.kappa * (params.a - params.r)
    s_k = params.kappa * params.sigma
    s2 = s_k * s_k
    return DerivedParams(
        a_kappa=a_k,
        sigma_kappa=s_k,
        gamma=_gamma(params.r, params.a, params.sigma, params.kappa),
        beta=2.0 * params.c / s2,
        nu=2.0 * params.lam / s2,
    )


def heun_params(d: DerivedParams, mu: float) -> HeunParams:
    mb = mu * d.beta
    return HeunParams(a_H=mb + d.gamma - d.nu, b_H=d.gamma, c_H=d.gamma + 2.0, d_H=-mb)


def check_nondegeneracy(d: DerivedParams) -> None:
    """Raise :class:`DegenerateModel` unless gamma > 1."""
    if not d.gamma > 1.0:
        raise DegenerateModel(d.gamma)


def gamma_of_kappa(params: ModelParams, kappa_grid: Iterable[float]) -> list[tuple[float, float]]:
    """Tail exponent gamma as a function of the risky share.

    Each kappa must lie in (0, 1]. Values are bitwise identical to
    ``derive(params.with_kappa(k)).gamma``.
    """
    out = []
    for k in kappa_grid:
        _finite("kappa", k)
        if not 0 < k <= 1:
            raise InvalidParameter("kappa", k, "0 < kappa <= 1")
        out.append((float(k), _gamma(params.r, params.a, params.sigma, k)))
    return out


def params_from_mapping(obj: Mapping) -> ModelParams:
    """Build :class:`ModelParams` from a flat mapping with exactly the seven keys.

    Keys are ``lambda, mu, c, r, a, sigma, kappa``; missing or unknown keys
    raise ``ValueError``.
    """
    if not isinstance(obj, Mapping):
        raise ValueError(f"model parameters must be a JSON object, got {type(obj).__name__}")
    unknown = sorted(set(obj) - set(_JSON_FIELDS))
    if unknown:
        raise ValueError(f"unknown model parameter(s): {', '.join(unknown)}")
    missing = [k for k in _JSON_FIELDS if k not in obj]
    if missing:
        raise ValueError(f"missing model parameter(s): {', '.join(missing)}")
    return ModelParams(**{attr: obj[key] for key, attr in _JSON_FIELDS.items()})


def load_params(path: str | Path) -> ModelParams:
    with open(path, encoding="utf-8") as fh:
        return params_from_mapping(json.load(fh))


#: Baseline market used for the numerical illustrations (moderate share).
BASELINE = ModelParams(lam=1.0, mu=1.0, c=0.5, r=0.05, a=0.15, sigma=0.4, kappa=0.4)
