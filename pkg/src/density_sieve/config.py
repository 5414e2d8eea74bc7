"""Load and validate ``.density-sieve.yml`` configuration.

Typical usage::

    from density_sieve.config import load_config
    cfg = load_config()                               # auto-detect + env
    cfg = load_config("path/to/.density-sieve.yml")   # explicit

Environment variables are layered on top of the file (or the built-in
defaults when no file is found):

- ``DENSITY_SIEVE_ITER_CAP``: iteration / scan budget (default 10**6)
- ``DENSITY_SIEVE_CHECK_FACTOR``: density scans cover ``[t, c*t]``
- ``DENSITY_SIEVE_CANTOR_DEPTH_CAP``: deepest Cantor system allowed
- ``DENSITY_SIEVE_MIN_SEEDS``: smallest seed ensemble for bound checks
"""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Any, Dict, Optional

import yaml

from .errors import SpecError

# ------------------------------------------------------------------
# Data structures
# ------------------------------------------------------------------


@dataclass(frozen=True)
class SieveConfig:
    """Budgets and constants shared by the extractor, scans and checks."""

    iter_cap: int = 1_000_000
    check_factor: int = 10
    cantor_depth_cap: int = 6
    cantor_range_cap: int = 1_000_000
    slack_sigmas: int = 3
    min_seeds: int = 30
    default_seed: int = 0

    def __post_init__(self) -> None:
        if self.iter_cap < 1:
            raise SpecError(f"iter_cap must be positive, got {self.iter_cap}")
        if self.check_factor < 10:
            raise SpecError(f"check_factor must be >= 10, got {self.check_factor}")
        if self.cantor_depth_cap < 1 or self.cantor_range_cap < 1:
            raise SpecError("Cantor caps must be positive")
        if self.min_seeds < 1 or self.slack_sigmas < 0:
            raise SpecError("min_seeds must be positive and slack_sigmas non-negative")

    def to_dict(self) -> Dict[str, int]:
        return asdict(self)


DEFAULT_CONFIG = SieveConfig()

# ------------------------------------------------------------------
# Environment helpers
# ------------------------------------------------------------------


def get_env_int(key: str, default: int) -> int:
    """Integer from the environment, *default* when unset or unparseable."""
    value = os.getenv(key)
    if value is None:
        return default
    try:
        return int(value)
    except ValueError:
        return default


_ENV_KEYS = {
    "iter_cap": "DENSITY_SIEVE_ITER_CAP",
    "check_factor": "DENSITY_SIEVE_CHECK_FACTOR",
    "cantor_depth_cap": "DENSITY_SIEVE_CANTOR_DEPTH_CAP",
    "min_seeds": "DENSITY_SIEVE_MIN_SEEDS",
}


def apply_env_overrides(config: SieveConfig) -> SieveConfig:
    """Return *config* with ``DENSITY_SIEVE_*`` variables applied."""
    overrides = {
        field_name: get_env_int(env_key, getattr(config, field_name))
        for field_name, env_key in _ENV_KEYS.items()
    }
    return replace(config, **overrides)


def default_config() -> SieveConfig:
    """Built-in defaults with environment overrides; never reads files."""
    return apply_env_overrides(DEFAULT_CONFIG)


# ------------------------------------------------------------------
# Loader
# ------------------------------------------------------------------

_SEARCH_NAMES = (".density-sieve.yml", ".density-sieve.yaml", "density-sieve.yml")


def load_config(path: Optional[str] = None) -> SieveConfig:
    """Load config from *path* or auto-detect in the working directory.

    Raises:
        FileNotFoundError: If an explicit *path* does not exist.
        ValueError: If the YAML is invalid or holds unknown keys.
    """
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise FileNotFoundError(f"Config file not found: {path}")
        return apply_env_overrides(_parse(p))

    for name in _SEARCH_NAMES:
        p = Path(name)
        if p.exists():
            return apply_env_overrides(_parse(p))

    return default_config()


def _parse(path: Path) -> SieveConfig:
    raw = path.read_text(encoding="utf-8")
    try:
        data: Any = yaml.safe_load(raw) or {}
    except yaml.YAMLError as exc:
        raise SpecError(f"Invalid YAML in {path}: {exc}") from exc

    if not isinstance(data, dict):
        raise SpecError(f"Expected mapping at top level in {path}")

    known = set(DEFAULT_CONFIG.to_dict())
    unknown = sorted(set(data) - known)
    if unknown:
        raise SpecError(f"Unknown config keys in {path}: {', '.join(unknown)}")

    try:
        values = {key: int(value) for key, value in data.items()}
    except (TypeError, ValueError) as exc:
        raise SpecError(f"Config values must be integers in {path}: {exc}") from exc
    return replace(DEFAULT_CONFIG, **values)
