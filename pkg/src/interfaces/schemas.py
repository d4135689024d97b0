"""Run configuration model and the CSV column contracts of every command."""

from __future__ import annotations

from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.bounds.ehmodel import AwgnSpec, DmcSpec, EnergyProcess

COMMANDS = ("bounds-awgn", "bounds-dmc", "simulate", "verify", "sweep")

AWGN_COLUMNS: Tuple[str, ...] = (
    "n",
    "epsilon",
    "lambda_star",
    "mode",
    "ach_log2M",
    "conv_log2M",
    "ach_rate",
    "conv_rate",
    "capacity_bits",
    "N_n",
    "eps_n",
    "delta_n",
    "tau_n",
    "zeta_n",
    "valid_ach",
    "valid_conv",
)
DMC_COLUMNS: Tuple[str, ...] = (
    "n",
    "epsilon",
    "eta",
    "C_ED_bits",
    "V_star",
    "ach_log2M",
    "conv_log2M",
    "multiplier",
    "eps_R",
    "valid_ach",
    "valid_conv",
)
SIMULATE_COLUMNS: Tuple[str, ...] = (
    "event",
    "empirical",
    "ci_low",
    "ci_high",
    "analytic_bound",
    "trials",
    "seed",
)
VERIFY_COLUMNS: Tuple[str, ...] = ("check", "cases", "violations", "worst", "passed")
SWEEP_PREFIX: Tuple[str, ...] = ("param", "value")

DEFAULT_N_MIN = 1000
DEFAULT_N_MAX = 100000
DEFAULT_POINTS = 5


class RunConfig(BaseModel):
    """A validated command plus its key-value parameters.

    ``options`` holds flag-only settings that have no configuration key
    (``fast`` for verify, ``sweep_param``/``sweep_values`` for sweep).
    """

    model_config = ConfigDict(frozen=True)

    command: str
    parameters: Dict[str, Any] = Field(default_factory=dict)
    output_path: Optional[Path] = None
    options: Dict[str, Any] = Field(default_factory=dict)

    def get(self, key: str, default: Any = None) -> Any:
        return self.parameters.get(key, default)

    @property
    def is_dmc(self) -> bool:
        return "w" in self.parameters

    def energy_process(self) -> EnergyProcess:
        spec = {key: value for key, value in self.parameters.items() if key in ENERGY_KEYS}
        spec["kind"] = self.parameters.get("energy_process", "constant")
        return EnergyProcess.from_mapping(spec)

    def awgn_spec(self) -> AwgnSpec:
        return AwgnSpec(float(self.parameters["noise_var"]))

    def dmc_spec(self) -> DmcSpec:
        return DmcSpec(np.asarray(self.parameters["w"], dtype=float), np.asarray(self.parameters["cost"], dtype=float))

    def with_parameters(self, **updates: Any) -> "RunConfig":
        return self.model_copy(update={"parameters": {**self.parameters, **updates}})


ENERGY_KEYS = ("mean_energy", "level", "low", "high", "rate", "p", "mu", "sd", "floor")


__all__ = [
    "AWGN_COLUMNS",
    "COMMANDS",
    "DEFAULT_N_MAX",
    "DEFAULT_N_MIN",
    "DEFAULT_POINTS",
    "DMC_COLUMNS",
    "ENERGY_KEYS",
    "RunConfig",
    "SIMULATE_COLUMNS",
    "SWEEP_PREFIX",
    "VERIFY_COLUMNS",
]
