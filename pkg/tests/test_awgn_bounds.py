import math

import numpy as np
import pytest
from pydantic import ValidationError

from src.bounds.awgn import (
    AchParams,
    BoundMode,
    ConvParams,
    achievability,
    capacity_eh_awgn,
    converse,
    converse_coefficient,
    error_budget,
    k_epsilon,
    sandwich_curve,
    saving_slots,
    smallest_feasible_blocklength,
    transmission_split,
)
from src.bounds.ehmodel import AwgnSpec, EnergyProcess

GRID = [1000, 10_000, 100_000, 1_000_000]


def test_capacity_matches_shannon(constant_energy: EnergyProcess, unit_awgn: AwgnSpec) -> None:
    assert capacity_eh_awgn(constant_energy, unit_awgn) == pytest.approx(0.5)


def test_k_epsilon_constant_arrivals(constant_energy: EnergyProcess) -> None:
    assert k_epsilon(constant_energy, 0.08, 0.5) == pytest.approx(10.0 * math.sqrt(2.0))


@pytest.mark.parametrize("n_hat", [10, 1000, 12_345, 10**6])
def test_transmission_split_is_maximal(n_hat: int) -> None:
    k_eps = 12.65
    n, slots = transmission_split(n_hat, k_eps)
    assert n + slots == n_hat
    assert n + saving_slots(k_eps, n) <= n_hat
    assert n + 1 + saving_slots(k_eps, n + 1) > n_hat


def test_error_budget_accounts_for_every_event(
    exponential_energy: EnergyProcess, unit_awgn: AwgnSpec
) -> None:
    budget = error_budget(exponential_energy, unit_awgn, 10_000, 0.1, 0.5)
    total = budget.saving + budget.confusion + budget.info_density
    assert budget.eps_n == pytest.approx(0.05 - total)
    assert budget.confusion == pytest.approx(1e-4)
    assert budget.saving_slots == saving_slots(budget.k_eps, 10_000)
    assert budget.e0_threshold == pytest.approx(0.5 * budget.saving_slots)


def test_lambda_auto_is_accepted() -> None:
    assert AchParams(n_hat=10, epsilon=0.1, lam="auto").lam is None
    with pytest.raises(ValidationError):
        AchParams(n_hat=10, epsilon=1.5)


def test_explicit_achievability_at_ten_thousand(
    constant_energy: EnergyProcess, unit_awgn: AwgnSpec
) -> None:
    result = achievability(constant_energy, unit_awgn, AchParams(n_hat=10_000, epsilon=0.1, lam=0.5))
    assert result.valid
    assert 0.38 < result.log2_M / 10_000 < 0.5
    assert result.terms_total == pytest.approx(result.log2_M)
    assert result.diagnostics["eps_n"] > 0


def test_explicit_achievability_invalid_when_too_short(
    exponential_energy: EnergyProcess, unit_awgn: AwgnSpec
) -> None:
    result = achievability(exponential_energy, unit_awgn, AchParams(n_hat=1000, epsilon=0.1, lam=0.5))
    assert not result.valid
    assert math.isnan(result.log2_M)
    assert result.reason


def test_smallest_feasible_blocklength_is_feasible(
    constant_energy: EnergyProcess, unit_awgn: AwgnSpec
) -> None:
    n_min = smallest_feasible_blocklength(constant_energy, unit_awgn, 0.1, 0.5)
    assert n_min is not None
    assert achievability(constant_energy, unit_awgn, AchParams(n_hat=n_min, epsilon=0.1, lam=0.5)).valid


@pytest.mark.parametrize("proc", [EnergyProcess.constant(1.0), EnergyProcess.exponential(1.0)])
def test_converse_dominates_achievability(proc: EnergyProcess, unit_awgn: AwgnSpec) -> None:
    for point in sandwich_curve(proc, unit_awgn, 0.1, GRID):
        assert point.conv.valid
        if point.ach.valid:
            assert point.ach.log2_M <= point.conv.log2_M
            assert point.region == "ordered"


def test_rates_close_to_capacity(constant_energy: EnergyProcess, unit_awgn: AwgnSpec) -> None:
    for n in (10_000, 100_000, 1_000_000):
        ach = achievability(constant_energy, unit_awgn, AchParams(n_hat=n, epsilon=0.1))
        conv = converse(constant_energy, unit_awgn, ConvParams(n=n, epsilon=0.1))
        assert abs(ach.log2_M / n - 0.5) <= 10 / math.sqrt(n)
        assert abs(conv.log2_M / n - 0.5) <= 10 / math.sqrt(n)


def test_asymptotic_converse_uses_coefficient(
    exponential_energy: EnergyProcess, unit_awgn: AwgnSpec
) -> None:
    coefficient = converse_coefficient(exponential_energy, unit_awgn, 0.1)
    for n in GRID:
        result = converse(exponential_energy, unit_awgn, ConvParams(n=n, epsilon=0.1, mode=BoundMode.ASYMPTOTIC))
        assert result.approximation
        assert (result.log2_M - 0.5 * n) / math.sqrt(n) == pytest.approx(coefficient)


def test_asymptotic_converse_monotone_in_epsilon(
    exponential_energy: EnergyProcess, unit_awgn: AwgnSpec
) -> None:
    values = [
        converse(exponential_energy, unit_awgn, ConvParams(n=10_000, epsilon=float(e), mode=BoundMode.ASYMPTOTIC)).log2_M
        for e in np.linspace(0.01, 0.9, 12)
    ]
    assert all(b >= a for a, b in zip(values, values[1:]))


def test_explicit_converse_u_rule(exponential_energy: EnergyProcess, constant_energy: EnergyProcess,
                                  unit_awgn: AwgnSpec) -> None:
    random_arrivals = converse(exponential_energy, unit_awgn, ConvParams(n=10_000, epsilon=0.1))
    assert random_arrivals.diagnostics["u_n_rule"] == "2*tau_n"
    assert random_arrivals.diagnostics["tau_n"] == pytest.approx(0.9 / 4)
    fixed = converse(constant_energy, unit_awgn, ConvParams(n=10_000, epsilon=0.1))
    assert fixed.diagnostics["u_n_rule"] == "optimized"
    override = converse(constant_energy, unit_awgn, ConvParams(n=10_000, epsilon=0.1, u_n_override=0.95))
    assert not override.valid


def test_asymptotic_achievability_flags_approximation(
    exponential_energy: EnergyProcess, unit_awgn: AwgnSpec
) -> None:
    result = achievability(
        exponential_energy, unit_awgn, AchParams(n_hat=10_000, epsilon=0.1, lam=0.5, mode=BoundMode.ASYMPTOTIC)
    )
    assert result.valid and result.approximation
    assert result.terms["second_order"] < 0
