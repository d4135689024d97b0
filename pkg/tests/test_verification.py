import pytest

from src.bounds.ehmodel import AwgnSpec, EnergyProcess
from src.core.errors import DomainError
from src.pipelines.bound_sweeps import awgn_rows, backoff_exponent, n_grid, sweep
from src.pipelines.verification import CHECKS, check_birge_dominance, check_ttt, run_suite


def test_fast_suite_passes() -> None:
    report = run_suite(fast=True)
    assert report.passed, report.render()
    assert [row["check"] for row in report.rows()] == list(CHECKS)
    assert "|" in report.render()


@pytest.mark.slow
def test_full_suite_passes() -> None:
    report = run_suite(fast=False)
    assert report.passed, report.render()
    by_name = {check.name: check for check in report.checks}
    assert by_name["birge_dominance"].cases >= 5000
    assert by_name["beta_lower_bound"].cases >= 1000
    assert by_name["blahut_arimoto_vs_grid"].cases >= 100


def test_single_checks_count_cases() -> None:
    birge = check_birge_dominance(fast=True)
    assert birge.cases > 100 and birge.passed
    ttt = check_ttt(fast=True)
    assert ttt.cases == 20 and ttt.worst <= 0.0


def test_n_grid() -> None:
    assert n_grid(1000, 1000000, 4) == [1000, 10000, 100000, 1000000]
    assert n_grid(5, 5, 3) == [5]
    with pytest.raises(DomainError):
        n_grid(10, 5, 2)


def test_backoff_is_square_root(constant_energy: EnergyProcess, unit_awgn: AwgnSpec) -> None:
    rows = awgn_rows(constant_energy, unit_awgn, 0.1, [10_000, 100_000, 1_000_000], lam=0.5)
    assert 0.45 <= backoff_exponent(rows) <= 0.55


def test_sweep_adds_prefix() -> None:
    rows = sweep("epsilon", [0.1, 0.2], lambda value: [{"n": 1, "x": value}])
    assert rows == [
        {"param": "epsilon", "value": 0.1, "n": 1, "x": 0.1},
        {"param": "epsilon", "value": 0.2, "n": 1, "x": 0.2},
    ]
    with pytest.raises(DomainError):
        sweep("epsilon", [], lambda value: [])
