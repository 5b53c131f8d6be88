"""
Test Configuration
Environment-driven limits
"""

import pytest

from config import DEFAULT_ATOM_CAP, load_settings
from errors import ValidationError


def test_defaults(monkeypatch):
    for name in ("RULEBENCH_ATOM_CAP", "RULEBENCH_QUERY_CAP", "RULEBENCH_SEED"):
        monkeypatch.delenv(name, raising=False)
    settings = load_settings()
    assert settings.atom_cap == DEFAULT_ATOM_CAP
    assert settings.seed == 7


def test_environment_overrides(monkeypatch):
    monkeypatch.setenv("RULEBENCH_ATOM_CAP", "2_000")
    monkeypatch.setenv("RULEBENCH_SEED", "11")
    settings = load_settings()
    assert settings.atom_cap == 2000
    assert settings.seed == 11


@pytest.mark.parametrize("raw", ["lots", "-5"])
def test_bad_values_are_rejected(monkeypatch, raw):
    monkeypatch.setenv("RULEBENCH_QUERY_CAP", raw)
    with pytest.raises(ValidationError):
        load_settings()
