import sys
from pathlib import Path

import pytest

PROJECT_ROOT = Path(__file__).resolve().parents[1]
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))

from src.bounds.ehmodel import AwgnSpec, DmcSpec, EnergyProcess


@pytest.fixture()
def unit_awgn() -> AwgnSpec:
    return AwgnSpec(noise_var=1.0)


@pytest.fixture()
def constant_energy() -> EnergyProcess:
    return EnergyProcess.constant(1.0)


@pytest.fixture()
def exponential_energy() -> EnergyProcess:
    return EnergyProcess.exponential(1.0)


@pytest.fixture()
def bsc() -> DmcSpec:
    return DmcSpec.bsc(0.11)
