"""Ruin probabilities for the Cramer-Lundberg model with proportional investment.

The survival probability is built from the regular branch of a doubly
confluent Heun equation (series seed at zero, implicit integration outward,
power-law tail fit), and cross-checked by a Monte Carlo simulator of the
capital process.
"""

from .density import DensityGrid, SeriesExpansion, eval_H, integrate, recurrence_coeffs, seed_at
from .errors import (
    DegenerateModel,
    InvalidParameter,
    NegativeDensity,
    OutOfRange,
    PlateauNotReached,
    RuinHeunError,
    SeedDiverged,
    StepSizeUnderflow,
    TailTooHeavy,
)
from .montecarlo import MCConfig, MCResult, convergence_sweep, estimate_psi, simulate_path
from .params import (
    BASELINE,
    DerivedParams,
    HeunParams,
    ModelParams,
    check_nondegeneracy,
    derive,
    gamma_of_kappa,
    heun_params,
)
from .report import RunReport
from .survival import SurvivalSolution, ide_residual, normalize, phi, psi, solve
from .tail import TailFit, fit_K1, loglog_slope, psi_tail

__version__ = "0.1.0"

__all__ = [
    "BASELINE",
    "ModelParams",
    "DerivedParams",
    "HeunParams",
    "derive",
    "heun_params",
    "check_nondegeneracy",
    "gamma_of_kappa",
    "SeriesExpansion",
    "DensityGrid",
    "recurrence_coeffs",
    "seed_at",
    "integrate",
    "eval_H",
    "TailFit",
    "fit_K1",
    "psi_tail",
    "loglog_slope",
    "SurvivalSolution",
    "normalize",
    "phi",
    "psi",
    "ide_residual",
    "solve",
    "MCConfig",
    "MCResult",
    "simulate_path",
    "estimate_psi",
    "convergence_sweep",
    "RunReport",
    "RuinHeunError",
    "InvalidParameter",
    "DegenerateModel",
    "SeedDiverged",
    "StepSizeUnderflow",
    "NegativeDensity",
    "OutOfRange",
    "PlateauNotReached",
    "TailTooHeavy",
]
