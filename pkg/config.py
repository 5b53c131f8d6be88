"""
Configuration
Settings loaded from the environment (and an optional .env file)
"""

import os
from dataclasses import dataclass

from dotenv import load_dotenv

from errors import ValidationError

DEFAULT_ATOM_CAP = 1_000_000
DEFAULT_QUERY_CAP = 20_000
DEFAULT_SEED = 7


@dataclass(frozen=True)
class Settings:
    """Runtime limits and defaults"""
    atom_cap: int = DEFAULT_ATOM_CAP
    query_cap: int = DEFAULT_QUERY_CAP
    seed: int = DEFAULT_SEED


def _int_from_env(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw.replace("_", ""))
    except ValueError:
        raise ValidationError(f"{name} must be an integer, got '{raw}'")
    if value < 0:
        raise ValidationError(f"{name} must be non-negative, got {value}")
    return value


def load_settings() -> Settings:
    """Read RULEBENCH_* variables; .env values never override the real environment"""
    load_dotenv(override=False)
    return Settings(
        atom_cap=_int_from_env("RULEBENCH_ATOM_CAP", DEFAULT_ATOM_CAP),
        query_cap=_int_from_env("RULEBENCH_QUERY_CAP", DEFAULT_QUERY_CAP),
        seed=_int_from_env("RULEBENCH_SEED", DEFAULT_SEED),
    )
