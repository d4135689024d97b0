"""Seeded Monte Carlo checks of the save-and-transmit error events.

Trials run in fixed-size chunks; chunk ``k`` draws from the stream keyed by
``(seed, label, first trial index of k)``, so estimates do not depend on how
many workers execute the chunks. Only integer counts (or per-trial samples
concatenated in chunk order) leave a chunk.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple, TypeVar, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import stats

from src.bounds.awgn import (
    capacity_eh_awgn,
    delta_variance_awgn,
    k_epsilon,
    k_epsilon_from_variance,
    saving_slots,
)
from src.bounds.dmc import blahut_arimoto_constrained
from src.bounds.ehmodel import AwgnSpec, DmcSpec, EnergyKind, EnergyProcess, apply_outage_policy
from src.bounds.numkernel import LOG2E, gaussian_info_density_moments, phi_cdf, phi_inv
from src.core.errors import DomainError
from src.core.settings import get_settings
from src.utils.logger import get_logger
from src.utils.seeding import stream

logger = get_logger(__name__)

T = TypeVar("T")

TIME_BLOCK = 512
CODEBOOK_BLOCK = 4096
MAX_END_TO_END_M = 1 << 16
MAX_END_TO_END_N = 1 << 10
KS_ALPHA = 0.05


class SimConfig(BaseModel):
    """One simulation scenario; ``n`` is the transmission length (saving slots come on top)."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    seed: int = Field(ge=0, le=(1 << 64) - 1)
    trials: int = Field(ge=1)
    n: int = Field(ge=1)
    epsilon: float = Field(gt=0, lt=1)
    lam: float = Field(default=0.5, gt=0, lt=1)
    proc: EnergyProcess
    ch: Union[AwgnSpec, DmcSpec]
    berry_esseen_constant: float = Field(
        default_factory=lambda: get_settings().bounds.berry_esseen_constant, gt=0
    )
    eta_n: Optional[float] = Field(default=None, ge=0)
    k_eps_override: Optional[float] = Field(default=None, ge=0)
    input_distribution: Optional[Tuple[float, ...]] = None
    chunk_size: Optional[int] = Field(default=None, ge=1)
    workers: Optional[int] = Field(default=None, ge=1)

    @property
    def eta(self) -> float:
        return math.log2(self.n) / self.n if self.eta_n is None else float(self.eta_n)

    def awgn(self) -> AwgnSpec:
        if not isinstance(self.ch, AwgnSpec):
            raise DomainError("this simulation needs an AWGN channel")
        return self.ch


@dataclass
class EventEstimate:
    event: str
    empirical: float
    ci_low: float
    ci_high: float
    analytic_bound: float
    trials: int
    seed: int
    extras: Dict[str, Any] = field(default_factory=dict)

    def as_row(self) -> Dict[str, Any]:
        return {
            "event": self.event,
            "empirical": self.empirical,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "analytic_bound": self.analytic_bound,
            "trials": self.trials,
            "seed": self.seed,
        }


@dataclass
class EndToEndReport:
    avg_error: float
    outage_rate: float
    trials: int
    M: int
    n: int
    saving_slots: int
    threshold_bits: float
    error_ci: Tuple[float, float]
    event_counts: Dict[str, int] = field(default_factory=dict)

    def as_tuple(self) -> Tuple[float, float]:
        return self.avg_error, self.outage_rate


def wilson_interval(hits: int, trials: int) -> Tuple[float, float]:
    ci = stats.binomtest(int(hits), int(trials)).proportion_ci(confidence_level=0.95, method="wilson")
    p_hat = hits / trials
    return min(float(ci.low), p_hat), max(float(ci.high), p_hat)


def _estimate(
    event: str, hits: int, cfg: SimConfig, bound: float, extras: Optional[Dict[str, Any]] = None
) -> EventEstimate:
    low, high = wilson_interval(hits, cfg.trials)
    estimate = EventEstimate(
        event=event,
        empirical=hits / cfg.trials,
        ci_low=low,
        ci_high=high,
        analytic_bound=float(min(1.0, max(0.0, bound))),
        trials=cfg.trials,
        seed=cfg.seed,
        extras=dict(extras or {}),
    )
    logger.debug("mcsim.event.estimated", event_name=event, hits=hits, trials=cfg.trials)
    return estimate


def _map_chunks(cfg: SimConfig, label: str, kernel: Callable[[np.random.Generator, int], T]) -> List[T]:
    settings = get_settings().simulation
    chunk = cfg.chunk_size or settings.chunk_size
    workers = cfg.workers or settings.workers
    plan = [(start, min(chunk, cfg.trials - start)) for start in range(0, cfg.trials, chunk)]

    def run(item: Tuple[int, int]) -> T:
        start, size = item
        return kernel(stream(cfg.seed, label, start), size)

    if workers <= 1 or len(plan) == 1:
        return [run(item) for item in plan]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(run, plan))


def _saving_design(cfg: SimConfig, var_delta: float) -> Tuple[float, int, float]:
    """(K_eps, N_n, E_0n) for the configured scenario."""
    if cfg.k_eps_override is not None:
        k_eps = float(cfg.k_eps_override)
    else:
        k_eps = k_epsilon_from_variance(var_delta, cfg.proc.mean, cfg.epsilon, cfg.lam)
    slots = saving_slots(k_eps, cfg.n)
    return k_eps, slots, 0.5 * slots * cfg.proc.mean


def _energy_sums(proc: EnergyProcess, rng: np.random.Generator, size: int, length: int) -> np.ndarray:
    """Per-trial sums of ``length`` arrivals, drawn from the exact law of the sum when it has one."""
    if length == 0:
        return np.zeros(size)
    p = proc.parameters
    if proc.kind is EnergyKind.CONSTANT:
        return np.full(size, length * p["level"])
    if proc.kind is EnergyKind.EXPONENTIAL:
        return rng.gamma(length, 1.0 / p["rate"], size=size)
    if proc.kind is EnergyKind.SCALED_BERNOULLI:
        return p["level"] * rng.binomial(length, p["p"], size=size)
    total = np.zeros(size)
    for offset in range(0, length, TIME_BLOCK):
        cols = min(TIME_BLOCK, length - offset)
        total += proc.sample(size * cols, rng).reshape(size, cols).sum(axis=1)
    return total


@dataclass
class _WalkChunk:
    minima: np.ndarray
    increment_sum: float
    increment_sq: float


def _walk_minima(
    rng: np.random.Generator,
    size: int,
    steps: int,
    increments: Callable[[np.random.Generator, int, int], np.ndarray],
) -> _WalkChunk:
    running = np.zeros(size)
    minima = np.full(size, np.inf)
    total = 0.0
    total_sq = 0.0
    for offset in range(0, steps, TIME_BLOCK):
        block = increments(rng, size, min(TIME_BLOCK, steps - offset))
        path = running[:, None] + np.cumsum(block, axis=1)
        minima = np.minimum(minima, path.min(axis=1))
        running = path[:, -1]
        total += float(block.sum())
        total_sq += float(np.square(block).sum())
    return _WalkChunk(minima, total, total_sq)


def simulate_saving_phase(cfg: SimConfig) -> EventEstimate:
    """Frequency of harvesting less than E_0n during the N_n saving slots."""
    var_delta = _delta_variance(cfg)
    k_eps, slots, threshold = _saving_design(cfg, var_delta)
    if slots < 1:
        raise DomainError("the saving phase has no slots for this configuration")

    def kernel(rng: np.random.Generator, size: int) -> int:
        return int(np.count_nonzero(_energy_sums(cfg.proc, rng, size, slots) < threshold))

    hits = sum(_map_chunks(cfg, "saving", kernel))
    bound = 4.0 * cfg.proc.variance / (slots * cfg.proc.mean**2)
    return _estimate("E0", hits, cfg, bound, {"K_eps": k_eps, "N_n": slots, "E0n": threshold})


def _dmc_input(cfg: SimConfig, ch: DmcSpec) -> np.ndarray:
    if cfg.input_distribution is not None:
        p = np.asarray(cfg.input_distribution, dtype=float)
        if p.shape != (ch.input_size,) or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
            raise DomainError("input_distribution must be a probability vector over the input alphabet")
        return p / p.sum()
    return blahut_arimoto_constrained(ch, cfg.proc.mean).optimal_input


def _delta_variance(cfg: SimConfig) -> float:
    if isinstance(cfg.ch, AwgnSpec):
        return delta_variance_awgn(cfg.proc)
    p = _dmc_input(cfg, cfg.ch)
    cost = cfg.ch.cost
    return cfg.proc.variance + max(0.0, float(p @ cost**2 - (p @ cost) ** 2))


def simulate_outage(cfg: SimConfig) -> EventEstimate:
    """Frequency of the energy walk S_k = sum(E_i - cost_i) dipping below -E_0n within n steps."""
    var_delta = _delta_variance(cfg)
    k_eps, slots, threshold = _saving_design(cfg, var_delta)
    proc = cfg.proc

    if isinstance(cfg.ch, AwgnSpec):
        power_sd = math.sqrt(proc.mean)

        def increments(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
            energy = proc.sample(rows * cols, rng).reshape(rows, cols)
            return energy - np.square(rng.normal(0.0, power_sd, size=(rows, cols)))

    else:
        p = _dmc_input(cfg, cfg.ch)
        cost = np.asarray(cfg.ch.cost)

        def increments(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
            energy = proc.sample(rows * cols, rng).reshape(rows, cols)
            return energy - cost[rng.choice(cost.size, size=(rows, cols), p=p)]

    def kernel(rng: np.random.Generator, size: int) -> _WalkChunk:
        return _walk_minima(rng, size, cfg.n, increments)

    chunks = _map_chunks(cfg, "outage", kernel)
    hits = sum(int(np.count_nonzero(c.minima < -threshold)) for c in chunks)
    count = cfg.trials * cfg.n
    mean = sum(c.increment_sum for c in chunks) / count
    second = sum(c.increment_sq for c in chunks) / count
    bound = 4.0 * var_delta / (k_eps**2 * proc.mean**2) if k_eps > 0 else 1.0
    extras = {
        "K_eps": k_eps,
        "N_n": slots,
        "E0n": threshold,
        "var_delta": var_delta,
        "increment_mean": mean,
        "increment_se": math.sqrt(max(second - mean * mean, 0.0) / count),
    }
    return _estimate("E1", hits, cfg, bound, extras)


def _gram_sums(rng: np.random.Generator, size: int, n: int, var_a: float, var_b: float) -> np.ndarray:
    """Gram matrices of two independent Gaussian n-vectors, shape (size, 2, 2)."""
    if n >= 2:
        law = stats.wishart(df=n, scale=np.diag([var_a, var_b]))
        return np.asarray(law.rvs(size=size, random_state=rng)).reshape(size, 2, 2)
    a = rng.normal(0.0, math.sqrt(var_a), size=(size, n))
    b = rng.normal(0.0, math.sqrt(var_b), size=(size, n))
    gram = np.empty((size, 2, 2))
    gram[:, 0, 0] = np.sum(a * a, axis=1)
    gram[:, 0, 1] = gram[:, 1, 0] = np.sum(a * b, axis=1)
    gram[:, 1, 1] = np.sum(b * b, axis=1)
    return gram


def _info_density_sums(cfg: SimConfig, rng: np.random.Generator, size: int) -> np.ndarray:
    """sum_i G_i in nats for X ~ N(0, E[E_1]) sent over the channel."""
    power, s2 = cfg.proc.mean, cfg.awgn().noise_var
    gram = _gram_sums(rng, size, cfg.n, power, s2)
    xx, xz, zz = gram[:, 0, 0], gram[:, 0, 1], gram[:, 1, 1]
    yy = xx + 2.0 * xz + zz
    capacity = 0.5 * math.log1p(power / s2)
    return cfg.n * capacity + yy / (2.0 * (power + s2)) - zz / (2.0 * s2)


def _confusion_sums(cfg: SimConfig, rng: np.random.Generator, size: int) -> np.ndarray:
    """sum_i i(Xbar_i; W_i) in nats for a codeword independent of the channel output."""
    power, s2 = cfg.proc.mean, cfg.awgn().noise_var
    gram = _gram_sums(rng, size, cfg.n, power, power + s2)
    xx, xw, ww = gram[:, 0, 0], gram[:, 0, 1], gram[:, 1, 1]
    capacity = 0.5 * math.log1p(power / s2)
    return cfg.n * capacity + ww / (2.0 * (power + s2)) - (ww - 2.0 * xw + xx) / (2.0 * s2)


def simulate_info_density_cdf(cfg: SimConfig, threshold_log2M: float) -> EventEstimate:
    """P(sum G_i <= log2 M + n eta_n) with a Kolmogorov-Smirnov check against the normal limit."""
    ch = cfg.awgn()
    moments = gaussian_info_density_moments(cfg.proc.mean, ch.noise_var)
    level_nats = (threshold_log2M + cfg.n * cfg.eta) / LOG2E

    samples = np.concatenate(_map_chunks(cfg, "info-density", lambda rng, size: _info_density_sums(cfg, rng, size)))
    hits = int(np.count_nonzero(samples <= level_nats))

    scale = math.sqrt(cfg.n * moments.variance)
    normalized = (samples - cfg.n * moments.mean) / scale
    ks = float(stats.kstest(normalized, "norm").statistic)
    be_term = cfg.berry_esseen_constant * moments.berry_esseen_ratio / math.sqrt(cfg.n)
    envelope = be_term + 3.0 * math.sqrt(math.log(2.0 / KS_ALPHA) / (2.0 * cfg.trials))
    if math.isfinite(level_nats):
        bound = phi_cdf((level_nats - cfg.n * moments.mean) / scale) + be_term
    else:
        bound = 0.0 if level_nats < 0 else 1.0
    extras = {
        "ks_distance": ks,
        "berry_esseen_envelope": envelope,
        "berry_esseen_holds": ks <= envelope,
        "eta_n": cfg.eta,
    }
    if ks > envelope:
        logger.warning("mcsim.info_density.envelope_violated", n=cfg.n, ks=ks, envelope=envelope)
    return _estimate("E3", hits, cfg, bound, extras)


def simulate_confusion(cfg: SimConfig, log2M: float) -> EventEstimate:
    """Exceedance of log2 M + n eta_n by an independent codeword, union-scaled by M.

    ``extras`` carries the per-pair frequency, its Wilson interval and the per-pair
    bound 2^{-n eta_n} / M.
    """
    cfg.awgn()
    level_nats = (log2M + cfg.n * cfg.eta) / LOG2E
    counts = _map_chunks(
        cfg, "confusion", lambda rng, size: int(np.count_nonzero(_confusion_sums(cfg, rng, size) > level_nats))
    )
    hits = int(sum(counts))
    per_pair = hits / cfg.trials
    low, high = wilson_interval(hits, cfg.trials)
    m = 2.0**log2M
    union_bound = 2.0 ** (-cfg.n * cfg.eta)
    return EventEstimate(
        event="E2",
        empirical=min(1.0, m * per_pair),
        ci_low=min(1.0, m * low),
        ci_high=min(1.0, m * high),
        analytic_bound=min(1.0, union_bound),
        trials=cfg.trials,
        seed=cfg.seed,
        extras={
            "per_pair": per_pair,
            "per_pair_ci_low": low,
            "per_pair_ci_high": high,
            "per_pair_bound": min(1.0, union_bound / m),
            "log2M": log2M,
        },
    )


def design_log2M(cfg: SimConfig) -> float:
    """Message size (bits) the explicit achievability argument supports at transmission length n."""
    ch = cfg.awgn()
    k_eps = k_epsilon(cfg.proc, cfg.epsilon, cfg.lam) if cfg.k_eps_override is None else cfg.k_eps_override
    slots = max(1, saving_slots(k_eps, cfg.n))
    moments = gaussian_info_density_moments(cfg.proc.mean, ch.noise_var)
    eps_n = (
        cfg.lam * cfg.epsilon
        - 4.0 * cfg.proc.variance / (slots * cfg.proc.mean**2)
        - 2.0 ** (-cfg.n * cfg.eta)
        - cfg.berry_esseen_constant * moments.berry_esseen_ratio / math.sqrt(cfg.n)
    )
    if eps_n <= 0:
        return 0.0
    value = cfg.n * capacity_eh_awgn(cfg.proc, ch) + math.sqrt(cfg.n * moments.variance) * LOG2E * phi_inv(eps_n)
    return max(0.0, value - cfg.n * cfg.eta - 1.0)


def simulate_events(cfg: SimConfig, log2M: Optional[float] = None) -> List[EventEstimate]:
    """All events that apply to the configured channel (only E1 for a DMC)."""
    if isinstance(cfg.ch, DmcSpec):
        return [simulate_outage(cfg)]
    log2M = design_log2M(cfg) if log2M is None else float(log2M)
    logger.info("mcsim.events.start", n=cfg.n, trials=cfg.trials, seed=cfg.seed, log2M=log2M)
    return [
        simulate_saving_phase(cfg),
        simulate_outage(cfg),
        simulate_confusion(cfg, log2M),
        simulate_info_density_cdf(cfg, log2M),
    ]


@dataclass
class _TrialOutcome:
    error: bool
    e0: bool
    e1: bool
    e2: bool
    e3: bool


def _run_code_trial(
    cfg: SimConfig, rng: np.random.Generator, M: int, slots: int, e0_threshold: float, threshold_nats: float
) -> _TrialOutcome:
    ch = cfg.awgn()
    power, s2, n = cfg.proc.mean, ch.noise_var, cfg.n
    energies = cfg.proc.sample(slots + n, rng)
    message = int(rng.integers(M))

    # codebook rows are drawn block by block; only the sent row is kept
    sent = np.empty(n)
    row_blocks: List[Tuple[int, np.ndarray]] = []
    for offset in range(0, M, CODEBOOK_BLOCK):
        block = rng.normal(0.0, math.sqrt(power), size=(min(CODEBOOK_BLOCK, M - offset), n))
        row_blocks.append((offset, block))
        if offset <= message < offset + block.shape[0]:
            sent = block[message - offset].copy()

    demand = np.concatenate((np.zeros(slots), np.square(sent)))
    policy = apply_outage_policy(energies, demand)
    transmitted = sent * (policy.consumptions[slots:] > 0)
    y = transmitted + rng.normal(0.0, math.sqrt(s2), size=n)

    capacity = 0.5 * math.log1p(power / s2)
    base = n * capacity + float(y @ y) / (2.0 * (power + s2))
    above = 0
    true_density = -math.inf
    for offset, block in row_blocks:
        densities = base - np.sum(np.square(y[None, :] - block), axis=1) / (2.0 * s2)
        passed = densities > threshold_nats
        if offset <= message < offset + block.shape[0]:
            true_density = float(densities[message - offset])
            passed[message - offset] = False
        above += int(np.count_nonzero(passed))

    e3 = true_density <= threshold_nats
    e2 = above > 0
    return _TrialOutcome(
        error=e2 or e3,
        e0=float(energies[:slots].sum()) < e0_threshold,
        e1=policy.trace.outage,
        e2=e2,
        e3=e3,
    )


def end_to_end_code(cfg: SimConfig, M: int) -> EndToEndReport:
    """Random Gaussian codebook, saving phase, harvest-use-store buffer and threshold decoding.

    A fresh codebook is drawn per trial. The decoder outputs the unique codeword whose
    information density exceeds log2 M + n eta_n and errs otherwise.
    """
    if not (1 <= M <= MAX_END_TO_END_M) or cfg.n > MAX_END_TO_END_N:
        raise DomainError(f"end-to-end simulation needs 1 <= M <= {MAX_END_TO_END_M} and n <= {MAX_END_TO_END_N}")
    cfg.awgn()
    k_eps, slots, e0_threshold = _saving_design(cfg, delta_variance_awgn(cfg.proc))
    threshold_bits = math.log2(M) + cfg.n * cfg.eta
    threshold_nats = threshold_bits / LOG2E

    def kernel(rng: np.random.Generator, size: int) -> List[_TrialOutcome]:
        return [_run_code_trial(cfg, rng, M, slots, e0_threshold, threshold_nats) for _ in range(size)]

    outcomes = [o for chunk in _map_chunks(cfg, "end-to-end", kernel) for o in chunk]
    counts = {
        "errors": sum(o.error for o in outcomes),
        "E0": sum(o.e0 for o in outcomes),
        "E1": sum(o.e1 for o in outcomes),
        "E2": sum(o.e2 for o in outcomes),
        "E3": sum(o.e3 for o in outcomes),
    }
    report = EndToEndReport(
        avg_error=counts["errors"] / cfg.trials,
        outage_rate=counts["E1"] / cfg.trials,
        trials=cfg.trials,
        M=M,
        n=cfg.n,
        saving_slots=slots,
        threshold_bits=threshold_bits,
        error_ci=wilson_interval(counts["errors"], cfg.trials),
        event_counts=counts,
    )
    logger.info("mcsim.end_to_end.done", n=cfg.n, M=M, K_eps=k_eps, avg_error=report.avg_error)
    return report


__all__ = [
    "EndToEndReport",
    "EventEstimate",
    "SimConfig",
    "design_log2M",
    "end_to_end_code",
    "simulate_confusion",
    "simulate_events",
    "simulate_info_density_cdf",
    "simulate_outage",
    "simulate_saving_phase",
    "wilson_interval",
]
