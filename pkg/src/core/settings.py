"""Configuration management for the finite-blocklength toolkit."""

from __future__ import annotations

import os
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field

PROJECT_ROOT = Path(__file__).resolve().parents[2]
CONFIG_DIR = PROJECT_ROOT / "config"
SETTINGS_FILE = CONFIG_DIR / "settings.yaml"


class AppSettings(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str = Field(default="eh-finite-blocklength")
    environment: str = Field(default="development")
    log_level: str = Field(default="INFO")
    log_format: str = Field(default="json")


class NumericsSettings(BaseModel):
    model_config = ConfigDict(frozen=True)

    abs_tol: float = Field(default=1e-10, gt=0)
    rel_tol: float = Field(default=1e-9, gt=0)
    max_iter: int = Field(default=200, ge=1)
    gauss_hermite_order: int = Field(default=64, ge=64)
    verification_order: int = Field(default=128, ge=64)


class BoundsSettings(BaseModel):
    model_config = ConfigDict(frozen=True)

    berry_esseen_constant: float = Field(default=0.5, gt=0, le=0.5)
    lambda_grid_points: int = Field(default=25, ge=3)
    lambda_min: float = Field(default=0.01, gt=0, lt=1)
    lambda_max: float = Field(default=0.99, gt=0, lt=1)
    eta_fraction: float = Field(default=0.01, gt=0)
    default_mode: str = Field(default="explicit")


class BlahutArimotoSettings(BaseModel):
    model_config = ConfigDict(frozen=True)

    tol: float = Field(default=1e-11, gt=0)
    max_iter: int = Field(default=20000, ge=1)
    restarts: int = Field(default=20, ge=1)
    restart_seed: int = Field(default=20240101)
    bisection_steps: int = Field(default=80, ge=1)


class SimulationSettings(BaseModel):
    model_config = ConfigDict(frozen=True)

    default_seed: int = Field(default=12345)
    default_trials: int = Field(default=100_000, ge=1)
    chunk_size: int = Field(default=4096, ge=1)
    workers: int = Field(default=1, ge=1)


class OutputSettings(BaseModel):
    model_config = ConfigDict(frozen=True)

    significant_digits: int = Field(default=12, ge=1, le=17)
    artifacts_dir: str = Field(default="artifacts")


class Settings(BaseModel):
    app: AppSettings = AppSettings()
    numerics: NumericsSettings = NumericsSettings()
    bounds: BoundsSettings = BoundsSettings()
    blahut_arimoto: BlahutArimotoSettings = BlahutArimotoSettings()
    simulation: SimulationSettings = SimulationSettings()
    output: OutputSettings = OutputSettings()
    raw: Dict[str, Any] = Field(default_factory=dict)

    @classmethod
    def load(cls, path: Path = SETTINGS_FILE) -> "Settings":
        load_dotenv()
        data = _load_yaml(path)
        merged = _interpolate_env(data)
        return cls(
            app=AppSettings(**merged.get("app", {})),
            numerics=NumericsSettings(**merged.get("numerics", {})),
            bounds=BoundsSettings(**merged.get("bounds", {})),
            blahut_arimoto=BlahutArimotoSettings(**merged.get("blahut_arimoto", {})),
            simulation=SimulationSettings(**merged.get("simulation", {})),
            output=OutputSettings(**merged.get("output", {})),
            raw=merged,
        )


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    return Settings.load()


def _load_yaml(path: Path) -> Dict[str, Any]:
    if not path.exists():
        raise FileNotFoundError(f"Configuration file not found: {path}")
    return yaml.safe_load(path.read_text()) or {}


def _interpolate_env(data: Dict[str, Any]) -> Dict[str, Any]:
    def resolve(value: Any) -> Any:
        if isinstance(value, str) and value.startswith("${") and value.endswith("}"):
            expression = value[2:-1]
            env_key, default = expression, ""
            if ":-" in expression:
                env_key, default = expression.split(":-", 1)
            return os.getenv(env_key.strip(), default)
        if isinstance(value, dict):
            return {k: resolve(v) for k, v in value.items()}
        if isinstance(value, list):
            return [resolve(v) for v in value]
        return value

    return {key: resolve(val) for key, val in data.items()}


__all__ = ["PROJECT_ROOT", "Settings", "get_settings"]
