import math

import numpy as np
import pytest

from src.bounds.ehmodel import (
    DmcSpec,
    EnergyKind,
    EnergyProcess,
    apply_outage_policy,
    buffer_evolve,
    sample_energies,
)
from src.core.errors import DomainError


def test_energy_moments() -> None:
    uniform = EnergyProcess.uniform(0.0, 2.0)
    assert (uniform.mean, uniform.variance) == pytest.approx((1.0, 1.0 / 3.0))
    assert uniform.third_central_abs == pytest.approx(0.25)

    exponential = EnergyProcess.exponential(1.0)
    assert exponential.third_central_abs == pytest.approx(12.0 / math.e - 2.0)

    bernoulli = EnergyProcess.scaled_bernoulli(0.3, 2.0)
    assert bernoulli.mean == pytest.approx(0.6)
    assert bernoulli.variance == pytest.approx(0.84)
    assert bernoulli.third_central_abs == pytest.approx(0.9744)

    constant = EnergyProcess.constant(2.5)
    assert (constant.variance, constant.third_central_abs) == (0.0, 0.0)


def test_truncated_gaussian_moments_are_consistent() -> None:
    proc = EnergyProcess.truncated_gaussian(1.0, 0.5)
    samples = proc.sample(200_000, np.random.default_rng(7))
    assert samples.min() >= 0.0
    assert samples.mean() == pytest.approx(proc.mean, abs=1e-2)
    assert samples.var() == pytest.approx(proc.variance, rel=3e-2)


def test_from_mapping_uses_mean_energy() -> None:
    proc = EnergyProcess.from_mapping({"kind": "exponential", "mean_energy": 2.0})
    assert proc.kind is EnergyKind.EXPONENTIAL
    assert proc.mean == pytest.approx(2.0)
    bern = EnergyProcess.from_mapping({"kind": "scaled_bernoulli", "p": 0.5, "mean_energy": 1.0})
    assert bern.parameters["level"] == pytest.approx(2.0)
    with pytest.raises(DomainError):
        EnergyProcess.from_mapping({"kind": "uniform", "low": 0.0})


def test_invalid_processes_rejected() -> None:
    with pytest.raises(DomainError):
        EnergyProcess.constant(0.0)
    with pytest.raises(DomainError):
        EnergyProcess.uniform(2.0, 1.0)
    with pytest.raises(DomainError):
        EnergyProcess.scaled_bernoulli(0.0, 1.0)


def test_sample_energies_is_deterministic(exponential_energy: EnergyProcess) -> None:
    first = sample_energies(exponential_energy, 50, seed=3)
    assert np.array_equal(first, sample_energies(exponential_energy, 50, seed=3))
    assert not np.array_equal(first, sample_energies(exponential_energy, 50, seed=4))


def test_buffer_outage_in_first_slot() -> None:
    trace = buffer_evolve([2.0], [5.0])
    assert np.allclose(trace.levels, [0.0, 0.0])
    assert trace.outage_index == 1


def test_buffer_stores_surplus() -> None:
    trace = buffer_evolve([1.0, 1.0], [0.0, 2.0])
    assert np.allclose(trace.levels, [0.0, 1.0, 0.0])
    assert not trace.outage


def test_buffer_levels_never_negative() -> None:
    rng = np.random.default_rng(11)
    trace = buffer_evolve(rng.exponential(size=500), rng.exponential(size=500))
    assert trace.levels.min() >= 0.0


def test_buffer_rejects_mismatched_lengths() -> None:
    with pytest.raises(DomainError):
        buffer_evolve([1.0, 2.0], [1.0])


def test_outage_policy_silences_after_first_infeasible_slot() -> None:
    result = apply_outage_policy([1.0, 0.0, 5.0, 0.0], [1.0, 1.0, 1.0, 1.0])
    assert result.trace.outage_index == 2
    assert np.allclose(result.consumptions, [1.0, 0.0, 0.0, 0.0])
    assert result.extras["silenced_slots"] == 3
    assert result.trace.levels.min() >= 0.0


def test_dmc_spec_validation() -> None:
    with pytest.raises(DomainError):
        DmcSpec(np.array([[0.5, 0.4], [0.5, 0.5]]), np.array([0.0, 1.0]))
    with pytest.raises(DomainError):
        DmcSpec(np.array([[1.0, 0.0], [0.0, 1.0]]), np.array([1.0, 1.0]))
    with pytest.raises(DomainError):
        DmcSpec(np.array([[1.0, 0.0], [0.0, 1.0]]), np.array([0.0, 1.0, 2.0]))


def test_dmc_spec_is_immutable_and_hashable(bsc: DmcSpec) -> None:
    with pytest.raises(ValueError):
        bsc.w[0, 0] = 0.5
    assert bsc == DmcSpec.bsc(0.11)
    assert hash(bsc) == hash(DmcSpec.bsc(0.11))
    assert list(bsc.zero_cost_symbols) == [0]
