"""Flat ``key = value`` config files with environment and flag overrides.

Precedence, lowest first: built-in defaults, config file, ``POQSIM_*``
environment variables, command-line flags.
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path
from typing import Any, Mapping

from .core import RewardParams
from .simulation import GRID_KEYS, SimConfig

ENV_PREFIX = "POQSIM_"

_CASTS = {
    "rounds": int,
    "seed": int,
    "alpha_f": float,
    "beta_f": float,
    "alpha_m": float,
    "beta_m": float,
    "k": int,
    "k_policy": str,
    "scheduling": str,
}
CONFIG_KEYS = tuple(_CASTS)


class ConfigError(ValueError):
    pass


def parse_kv(text: str, source: str = "<config>") -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment, blank lines are ignored."""
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        if key in out:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = value.strip("\"'")
    return out


def _cast(key: str, value: Any, source: str) -> Any:
    if key not in _CASTS:
        raise ConfigError(f"{source}: unknown key {key!r}; known keys: {', '.join(CONFIG_KEYS)}")
    try:
        return _CASTS[key](value)
    except (TypeError, ValueError):
        raise ConfigError(f"{source}: bad value {value!r} for {key!r}") from None


def resolve_settings(
    config_path: str | Path | None = None,
    overrides: Mapping[str, Any] | None = None,
    environ: Mapping[str, str] | None = None,
) -> dict[str, Any]:
    settings: dict[str, Any] = {}
    if config_path is not None:
        path = Path(config_path)
        for key, value in parse_kv(path.read_text(encoding="utf-8"), str(path)).items():
            settings[key] = _cast(key, value, str(path))
    environ = os.environ if environ is None else environ
    for key in CONFIG_KEYS:
        env_key = ENV_PREFIX + key.upper()
        if env_key in environ:
            settings[key] = _cast(key, environ[env_key], env_key)
    for key, value in (overrides or {}).items():
        if value is not None:
            settings[key] = _cast(key, value, f"--{key.replace('_', '-')}")
    return settings


def build_sim_config(settings: Mapping[str, Any]) -> SimConfig:
    defaults = SimConfig()
    p = defaults.params
    try:
        params = RewardParams(
            alpha_f=settings.get("alpha_f", p.alpha_f),
            beta_f=settings.get("beta_f", p.beta_f),
            alpha_m=settings.get("alpha_m", p.alpha_m),
            beta_m=settings.get("beta_m", p.beta_m),
            k=settings.get("k", p.k),
        )
        return SimConfig(
            rounds=settings.get("rounds", defaults.rounds),
            seed=settings.get("seed", defaults.seed),
            params=params,
            scheduling=settings.get("scheduling", defaults.scheduling),
            k_policy=settings.get("k_policy", defaults.k_policy),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_grid(path: str | Path) -> dict[str, list[Any]]:
    """Grid file: one ``key = v1, v2, ...`` line per swept parameter."""
    path = Path(path)
    grid: dict[str, list[Any]] = {}
    for key, value in parse_kv(path.read_text(encoding="utf-8"), str(path)).items():
        if key not in GRID_KEYS:
            raise ConfigError(f"{path}: cannot sweep {key!r}; sweepable keys: {', '.join(GRID_KEYS)}")
        values = [v.strip() for v in value.split(",") if v.strip()]
        if not values:
            raise ConfigError(f"{path}: no values for {key!r}")
        grid[key] = [_cast(key, v, str(path)) for v in values]
    if not grid:
        raise ConfigError(f"{path}: empty grid")
    return grid


def config_hash(config: Mapping[str, Any]) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()
