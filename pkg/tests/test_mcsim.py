import math

import pytest

from src.bounds.awgn import AchParams, BoundMode, achievability
from src.bounds.ehmodel import AwgnSpec, DmcSpec, EnergyProcess
from src.bounds.numkernel import LOG2E, gaussian_info_density_moments
from src.core.errors import DomainError
from src.simulation.mcsim import (
    SimConfig,
    design_log2M,
    end_to_end_code,
    simulate_confusion,
    simulate_events,
    simulate_info_density_cdf,
    simulate_outage,
    simulate_saving_phase,
    wilson_interval,
)


def make_config(**overrides) -> SimConfig:
    values = {
        "seed": 12345,
        "trials": 2000,
        "n": 1000,
        "epsilon": 0.1,
        "lam": 0.5,
        "proc": EnergyProcess.exponential(1.0),
        "ch": AwgnSpec(1.0),
        "chunk_size": 500,
    }
    values.update(overrides)
    return SimConfig(**values)


def test_wilson_interval_contains_estimate() -> None:
    low, high = wilson_interval(30, 1000)
    assert low <= 0.03 <= high
    assert wilson_interval(0, 100)[0] == 0.0
    assert wilson_interval(100, 100)[1] == 1.0


def test_simulation_is_reproducible() -> None:
    cfg = make_config()
    assert simulate_outage(cfg).empirical == simulate_outage(cfg).empirical
    other = simulate_outage(make_config(seed=54321))
    assert other.seed == 54321


def test_result_independent_of_worker_count() -> None:
    serial = simulate_saving_phase(make_config(workers=1))
    parallel = simulate_saving_phase(make_config(workers=4))
    assert serial.empirical == parallel.empirical


ENERGY_MATRIX = {
    "constant": EnergyProcess.constant(1.0),
    "exponential": EnergyProcess.exponential(1.0),
    "uniform": EnergyProcess.uniform(0.0, 2.0),
    "scaled_bernoulli": EnergyProcess.scaled_bernoulli(0.5, 2.0),
    "truncated_gaussian": EnergyProcess.truncated_gaussian(1.0, 0.5),
}


@pytest.mark.parametrize("n", [100, 400, 1000])
@pytest.mark.parametrize("kind", list(ENERGY_MATRIX))
def test_saving_and_outage_respect_chebyshev_bounds(kind: str, n: int) -> None:
    cfg = make_config(proc=ENERGY_MATRIX[kind], n=n)
    saving, outage = simulate_saving_phase(cfg), simulate_outage(cfg)
    assert abs(outage.analytic_bound - (1 - cfg.lam) * cfg.epsilon) <= 1e-12
    for estimate in (saving, outage):
        if estimate.analytic_bound < 1e-4:
            assert estimate.empirical == 0.0
        else:
            assert estimate.ci_low <= estimate.analytic_bound
        assert estimate.ci_low <= estimate.empirical <= estimate.ci_high


def test_outage_walk_has_expected_drift() -> None:
    estimate = simulate_outage(make_config(n=200))
    # E[E_1 - X_1^2] = 0 for a Gaussian codebook at the mean energy
    assert abs(estimate.extras["increment_mean"]) <= 5 * estimate.extras["increment_se"]


def test_info_density_centred_at_capacity() -> None:
    cfg = make_config(n=200, trials=5000)
    n_c_bits = 200 * 0.5
    estimate = simulate_info_density_cdf(cfg, n_c_bits - cfg.n * cfg.eta)
    moments = gaussian_info_density_moments(1.0, 1.0)
    be_term = cfg.berry_esseen_constant * moments.berry_esseen_ratio / math.sqrt(cfg.n)
    assert estimate.analytic_bound == pytest.approx(0.5 + be_term)
    assert abs(estimate.empirical - 0.5) < 0.05
    assert estimate.extras["berry_esseen_holds"]


@pytest.mark.slow
@pytest.mark.parametrize("n", [100, 1000])
def test_info_density_within_berry_esseen_envelope(n: int) -> None:
    cfg = make_config(n=n, trials=20_000)
    estimate = simulate_info_density_cdf(cfg, 0.5 * n - cfg.n * cfg.eta)
    assert estimate.extras["berry_esseen_holds"]
    assert estimate.extras["ks_distance"] <= estimate.extras["berry_esseen_envelope"]


def test_confusion_below_union_bound() -> None:
    cfg = make_config(n=100, trials=5000)
    estimate = simulate_confusion(cfg, 20.0)
    assert estimate.extras["per_pair_ci_low"] <= estimate.extras["per_pair_bound"]
    assert estimate.ci_low <= estimate.analytic_bound


def test_confusion_needs_awgn(bsc: DmcSpec) -> None:
    with pytest.raises(DomainError):
        simulate_confusion(make_config(ch=bsc, proc=EnergyProcess.uniform(0.0, 0.6)), 10.0)


def test_dmc_simulates_outage_only(bsc: DmcSpec) -> None:
    events = simulate_events(make_config(ch=bsc, proc=EnergyProcess.uniform(0.0, 0.6), trials=500))
    assert [e.event for e in events] == ["E1"]


def test_awgn_simulates_all_events() -> None:
    cfg = make_config(trials=500, n=400)
    assert design_log2M(cfg) >= 0.0
    assert [e.event for e in simulate_events(cfg)] == ["E0", "E1", "E2", "E3"]


def test_end_to_end_bookkeeping() -> None:
    cfg = make_config(n=128, trials=40, proc=EnergyProcess.constant(1.0), chunk_size=10)
    report = end_to_end_code(cfg, 16)
    counts = report.event_counts
    assert report.trials == 40 and report.M == 16
    assert counts["errors"] <= counts["E2"] + counts["E3"]
    assert 0.0 <= report.avg_error <= 1.0
    assert report.error_ci[0] <= report.avg_error <= report.error_ci[1]


def test_end_to_end_rejects_large_codebooks() -> None:
    with pytest.raises(DomainError):
        end_to_end_code(make_config(n=2048), 16)
    with pytest.raises(DomainError):
        end_to_end_code(make_config(n=128), 1 << 17)


@pytest.mark.slow
def test_end_to_end_error_within_target() -> None:
    proc = EnergyProcess.constant(1.0)
    design = achievability(
        proc, AwgnSpec(1.0), AchParams(n_hat=512, epsilon=0.1, lam=0.5, mode=BoundMode.ASYMPTOTIC)
    )
    assert design.valid
    M = 2 ** min(8, int(math.floor(design.log2_M)))
    assert M == 2**8
    cfg = make_config(n=512, trials=1000, proc=proc)
    report = end_to_end_code(cfg, M)
    assert report.error_ci[0] <= cfg.epsilon


@pytest.mark.slow
def test_single_message_errs_only_below_threshold() -> None:
    n = 512
    moments = gaussian_info_density_moments(1.0, 1.0)
    margin_nats = n * moments.mean - 5.0 * math.sqrt(n * moments.variance)
    cfg = make_config(n=n, trials=1000, proc=EnergyProcess.constant(1.0), eta_n=margin_nats * LOG2E / n)
    report = end_to_end_code(cfg, 1)
    assert report.event_counts["E2"] == 0
    assert report.avg_error <= 0.05
