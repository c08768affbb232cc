"""Structured run report written next to the CSV outputs."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields

__all__ = ["RunReport"]


@dataclass
class RunReport:
    """Everything a run computed, as plain JSON-compatible values.

    ``probes`` holds [u, phi, psi] rows and ``mc`` one dict per Monte Carlo
    comparison.  ``timings`` (seconds per stage) is the only field that
    varies between identical runs; ``to_json(timings=False)`` drops it.
    """

    command: str
    params: dict
    derived: dict
    heun: dict
    C: float | None = None
    phi0: float | None = None
    tail: dict | None = None
    probes: list = field(default_factory=list)
    residuals: dict = field(default_factory=dict)
    mc: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)

    def to_dict(self, timings: bool = True) -> dict:
        d = asdict(self)
        if not timings:
            d.pop("timings")
        return d

    def to_json(self, timings: bool = True) -> str:
        # allow_nan=False: every number in a report must be finite
        return json.dumps(self.to_dict(timings), indent=2, sort_keys=True, allow_nan=False) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown report field(s): {', '.join(sorted(unknown))}")
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        return cls.from_dict(json.loads(text))
