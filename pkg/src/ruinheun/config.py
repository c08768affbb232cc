"""Run configuration: one JSON document with sections model/solver/mc/output.

Sections missing from a user file fall back to the shipped baseline; keys
inside a section are merged individually, except ``model`` which must be
complete (all seven parameters) when given.  Unknown sections or keys are
rejected so that typos cannot silently fall back to defaults.
"""

from __future__ import annotations

import copy
import json
from importlib import resources
from pathlib import Path

from .params import ModelParams, params_from_mapping

__all__ = ["ConfigError", "default_config", "load_config", "model_params"]

SECTIONS = ("model", "solver", "mc", "output")


class ConfigError(ValueError):
    """Malformed or inconsistent configuration file."""


def default_config() -> dict:
    text = resources.files("ruinheun").joinpath("data/baseline.json").read_text(encoding="utf-8")
    return json.loads(text)


def _parse(text: str, source: str) -> dict:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        lines = text.splitlines()
        line = lines[exc.lineno - 1] if 0 < exc.lineno <= len(lines) else ""
        caret = " " * max(exc.colno - 1, 0) + "^"
        raise ConfigError(
            f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}\n    {line}\n    {caret}"
        ) from None
    if not isinstance(obj, dict):
        raise ConfigError(f"{source}: top level must be a JSON object")
    return obj


def load_config(path: str | Path | None = None) -> dict:
    """Baseline config, overlaid with the file at ``path`` if given."""
    cfg = default_config()
    if path is None:
        return cfg
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    user = _parse(text, str(path))
    unknown = sorted(set(user) - set(SECTIONS))
    if unknown:
        raise ConfigError(f"{path}: unknown section(s): {', '.join(unknown)}")
    for name, body in user.items():
        if not isinstance(body, dict):
            raise ConfigError(f"{path}: section '{name}' must be an object")
        if name == "model":
            cfg["model"] = copy.deepcopy(body)
            continue
        bad = sorted(set(body) - set(cfg[name]))
        if bad:
            raise ConfigError(f"{path}: unknown key(s) in '{name}': {', '.join(bad)}")
        cfg[name].update(body)
    return cfg


def model_params(cfg: dict) -> ModelParams:
    try:
        return params_from_mapping(cfg["model"])
    except ValueError as exc:
        raise ConfigError(f"model section: {exc}") from exc
