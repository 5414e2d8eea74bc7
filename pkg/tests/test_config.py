"""Tests for density_sieve.config – YAML loader and environment overrides.

Covers:
- SieveConfig defaults and validation
- get_env_int() / apply_env_overrides()
- load_config() with explicit path / auto-detect / missing
- _parse() rejection of bad YAML, unknown keys and non-integers
"""

from __future__ import annotations

from pathlib import Path

import pytest

from density_sieve.config import (
    DEFAULT_CONFIG,
    SieveConfig,
    apply_env_overrides,
    default_config,
    get_env_int,
    load_config,
)
from density_sieve.errors import SpecError

# ========================================================================
# Helpers
# ========================================================================

SMALL_YAML = """\
iter_cap: 5000
check_factor: 20
"""


def _write(tmp_path: Path, text: str, name: str = ".density-sieve.yml") -> Path:
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


# ========================================================================
# SieveConfig
# ========================================================================


class TestSieveConfig:
    """Defaults and validation."""

    def test_defaults(self):
        cfg = SieveConfig()
        assert cfg.iter_cap == 1_000_000
        assert cfg.check_factor == 10
        assert cfg.cantor_depth_cap == 6
        assert cfg.slack_sigmas == 3
        assert cfg.min_seeds == 30
        assert cfg.default_seed == 0

    def test_to_dict(self):
        d = DEFAULT_CONFIG.to_dict()
        assert d["check_factor"] == 10
        assert set(d) == {
            "iter_cap",
            "check_factor",
            "cantor_depth_cap",
            "cantor_range_cap",
            "slack_sigmas",
            "min_seeds",
            "default_seed",
        }

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"iter_cap": 0},
            {"check_factor": 9},
            {"cantor_depth_cap": 0},
            {"min_seeds": 0},
            {"slack_sigmas": -1},
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(SpecError):
            SieveConfig(**kwargs)


# ========================================================================
# Environment
# ========================================================================


class TestEnvOverrides:
    """DENSITY_SIEVE_* variables."""

    def test_get_env_int_valid(self, monkeypatch):
        monkeypatch.setenv("TEST_INT", "42")
        assert get_env_int("TEST_INT", 0) == 42

    def test_get_env_int_invalid(self, monkeypatch):
        monkeypatch.setenv("TEST_INT", "lots")
        assert get_env_int("TEST_INT", 10) == 10

    def test_get_env_int_default(self, monkeypatch):
        monkeypatch.delenv("TEST_INT", raising=False)
        assert get_env_int("TEST_INT", 99) == 99

    def test_no_env_keeps_config(self):
        assert apply_env_overrides(DEFAULT_CONFIG) == DEFAULT_CONFIG

    def test_overrides(self, monkeypatch):
        monkeypatch.setenv("DENSITY_SIEVE_ITER_CAP", "777")
        monkeypatch.setenv("DENSITY_SIEVE_MIN_SEEDS", "5")
        cfg = default_config()
        assert cfg.iter_cap == 777
        assert cfg.min_seeds == 5
        assert cfg.check_factor == 10

    def test_invalid_override_rejected(self, monkeypatch):
        monkeypatch.setenv("DENSITY_SIEVE_CHECK_FACTOR", "3")
        with pytest.raises(SpecError):
            default_config()


# ========================================================================
# load_config
# ========================================================================


class TestLoadConfig:
    """File loading and auto-detection."""

    def test_explicit_path(self, tmp_path):
        cfg = load_config(str(_write(tmp_path, SMALL_YAML, "custom.yml")))
        assert cfg.iter_cap == 5000
        assert cfg.check_factor == 20
        assert cfg.min_seeds == 30

    def test_missing_explicit_path(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_config(str(tmp_path / "nope.yml"))

    def test_auto_detect(self, tmp_path, monkeypatch):
        _write(tmp_path, SMALL_YAML)
        monkeypatch.chdir(tmp_path)
        assert load_config().iter_cap == 5000

    def test_no_file_defaults(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        assert load_config() == DEFAULT_CONFIG

    def test_env_beats_file(self, tmp_path, monkeypatch):
        path = _write(tmp_path, SMALL_YAML)
        monkeypatch.setenv("DENSITY_SIEVE_ITER_CAP", "12")
        assert load_config(str(path)).iter_cap == 12

    def test_empty_file(self, tmp_path):
        assert load_config(str(_write(tmp_path, ""))) == DEFAULT_CONFIG

    def test_shipped_defaults(self):
        shipped = Path(__file__).resolve().parent.parent / "configs" / "default.yaml"
        assert load_config(str(shipped)) == DEFAULT_CONFIG

    @pytest.mark.parametrize(
        "text",
        [
            "iter_cap: [1, 2\n",
            "- 1\n- 2\n",
            "bogus_key: 1\n",
            "iter_cap: many\n",
        ],
    )
    def test_invalid(self, tmp_path, text):
        with pytest.raises(SpecError):
            load_config(str(_write(tmp_path, text)))
