"""Shared fixtures for the density-sieve test suite."""

import pytest

ENV_KEYS = (
    "DENSITY_SIEVE_ITER_CAP",
    "DENSITY_SIEVE_CHECK_FACTOR",
    "DENSITY_SIEVE_CANTOR_DEPTH_CAP",
    "DENSITY_SIEVE_MIN_SEEDS",
)


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    """Tests never see budget overrides from the calling shell."""
    for key in ENV_KEYS:
        monkeypatch.delenv(key, raising=False)

