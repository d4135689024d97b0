"""Achievability and converse bounds for the energy-harvesting AWGN channel.

Two evaluation modes are offered. ``explicit`` tracks every constant of the
save-and-transmit and meta-converse arguments and yields certified bounds;
``asymptotic`` drops the unquantified remainders and is labelled as an
approximation. All internal arithmetic is in nats; returned ``log2_M`` values
and breakdown terms are in bits.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy import optimize

from src.bounds.ehmodel import AwgnSpec, EnergyProcess
from src.bounds.numkernel import LOG2E, InfoDensityMoments, gaussian_info_density_moments, phi_inv
from src.core.errors import DomainError
from src.core.settings import get_settings
from src.utils.logger import get_logger

logger = get_logger(__name__)

_INVALID_OBJECTIVE = 1e300


class BoundMode(str, enum.Enum):
    EXPLICIT = "explicit"
    ASYMPTOTIC = "asymptotic"


class AchParams(BaseModel):
    """Achievability inputs; ``lam=None`` asks for the best lambda."""

    model_config = ConfigDict(frozen=True)

    n_hat: int = Field(ge=1)
    epsilon: float = Field(gt=0, lt=1)
    lam: Optional[float] = Field(default=None, gt=0, lt=1)
    mode: BoundMode = BoundMode.EXPLICIT
    berry_esseen_constant: float = Field(
        default_factory=lambda: get_settings().bounds.berry_esseen_constant, gt=0, le=0.5
    )

    @field_validator("lam", mode="before")
    @classmethod
    def _auto_lambda(cls, value: Union[str, float, None]) -> Optional[float]:
        if isinstance(value, str) and value.strip().lower() == "auto":
            return None
        return value


class ConvParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=1)
    epsilon: float = Field(gt=0, lt=1)
    mode: BoundMode = BoundMode.EXPLICIT
    delta_n_override: Optional[float] = Field(default=None, gt=0)
    u_n_override: Optional[float] = Field(default=None, gt=0)


@dataclass
class BoundResult:
    log2_M: float
    terms: Dict[str, float]
    valid: bool
    diagnostics: Dict[str, Any] = field(default_factory=dict)
    reason: Optional[str] = None
    approximation: bool = False

    @property
    def terms_total(self) -> float:
        return float(sum(self.terms.values()))

    @classmethod
    def invalid(cls, reason: str, diagnostics: Dict[str, Any]) -> "BoundResult":
        return cls(
            log2_M=float("nan"),
            terms={"first_order": float("nan"), "second_order": float("nan"), "log": float("nan"), "constant": float("nan")},
            valid=False,
            diagnostics=diagnostics,
            reason=reason,
        )


@dataclass(frozen=True)
class ErrorBudget:
    """Analytic bounds on the four error events of the save-and-transmit code."""

    n: int
    saving_slots: int
    k_eps: float
    e0_threshold: float
    saving: float
    outage: float
    confusion: float
    info_density: float
    eps_n: float
    eta_n: float


@lru_cache(maxsize=256)
def _moments(mean_energy: float, noise_var: float) -> InfoDensityMoments:
    return gaussian_info_density_moments(mean_energy, noise_var)


def capacity_eh_awgn(proc: EnergyProcess, ch: AwgnSpec) -> float:
    return 0.5 * math.log2(1.0 + proc.mean / ch.noise_var)


def delta_variance_awgn(proc: EnergyProcess) -> float:
    """Var(E_1 - X_1^2) for a Gaussian(0, E[E_1]) codebook letter."""
    return proc.variance + 2.0 * proc.mean**2


def k_epsilon_from_variance(var_delta: float, mean_energy: float, epsilon: float, lam: float) -> float:
    if not (0 < lam < 1) or not (0 < epsilon < 1):
        raise DomainError("lambda and epsilon must lie in (0,1)")
    if var_delta < 0 or not mean_energy > 0:
        raise DomainError("need var_delta >= 0 and a positive mean energy")
    return 2.0 * math.sqrt(var_delta) / (mean_energy * math.sqrt((1.0 - lam) * epsilon))


def k_epsilon(proc: EnergyProcess, epsilon: float, lam: float) -> float:
    return k_epsilon_from_variance(delta_variance_awgn(proc), proc.mean, epsilon, lam)


def saving_slots(k_eps: float, n: int) -> int:
    return int(math.ceil(k_eps * math.sqrt(n) - 1e-12)) if k_eps > 0 else 0


def transmission_split(n_hat: int, k_eps: float) -> Tuple[int, int]:
    """Largest transmission length n with n + ceil(K sqrt(n)) <= n_hat, and the saving length."""
    if n_hat < 1:
        return 0, 0
    if k_eps <= 0:
        return n_hat, 0
    root = 0.5 * (-k_eps + math.sqrt(k_eps * k_eps + 4.0 * n_hat))
    n = max(0, int(math.floor(root * root)))
    while n > 0 and n + saving_slots(k_eps, n) > n_hat:
        n -= 1
    while n + 1 + saving_slots(k_eps, n + 1) <= n_hat:
        n += 1
    return n, n_hat - n


def error_budget(
    proc: EnergyProcess,
    ch: AwgnSpec,
    n: int,
    epsilon: float,
    lam: float,
    berry_esseen_constant: float = 0.5,
    n_saving: Optional[int] = None,
    eta_n: Optional[float] = None,
) -> ErrorBudget:
    """Per-event bounds for transmission length ``n``.

    The saving phase defaults to ceil(K_eps sqrt(n)) slots; a longer one only
    shrinks the Chebyshev term. ``eta_n`` defaults to log2(n)/n.
    """
    if n < 1:
        raise DomainError("transmission length must be at least 1")
    k_eps = k_epsilon(proc, epsilon, lam)
    slots = saving_slots(k_eps, n) if n_saving is None else int(n_saving)
    if slots < 1:
        raise DomainError("the saving phase needs at least one slot")
    eta = math.log2(n) / n if eta_n is None else float(eta_n)
    moments = _moments(proc.mean, ch.noise_var)

    saving = min(1.0, 4.0 * proc.variance / (slots * proc.mean**2))
    outage = min(1.0, 4.0 * delta_variance_awgn(proc) / (k_eps**2 * proc.mean**2))
    confusion = 2.0 ** (-n * eta)
    info_density = berry_esseen_constant * moments.berry_esseen_ratio / math.sqrt(n)
    eps_n = lam * epsilon - saving - confusion - info_density
    return ErrorBudget(
        n=n,
        saving_slots=slots,
        k_eps=k_eps,
        e0_threshold=0.5 * slots * proc.mean,
        saving=saving,
        outage=outage,
        confusion=confusion,
        info_density=info_density,
        eps_n=eps_n,
        eta_n=eta,
    )


def _explicit_achievability(
    proc: EnergyProcess, ch: AwgnSpec, n_hat: int, epsilon: float, lam: float, be_const: float
) -> BoundResult:
    k_eps = k_epsilon(proc, epsilon, lam)
    n, slots = transmission_split(n_hat, k_eps)
    diagnostics: Dict[str, Any] = {"K_eps": k_eps, "lambda": lam, "n_hat": n_hat, "n": n, "N_n": slots}
    if n < 1 or slots < 1:
        return BoundResult.invalid("saving phase leaves no transmission slots", diagnostics)

    budget = error_budget(proc, ch, n, epsilon, lam, be_const, n_saving=slots)
    moments = _moments(proc.mean, ch.noise_var)
    capacity_bits = moments.mean * LOG2E
    diagnostics.update(
        {
            "E0n": budget.e0_threshold,
            "eps_n": budget.eps_n,
            "eta_n": budget.eta_n,
            "pr_E0": budget.saving,
            "pr_E1": budget.outage,
            "pr_E2": budget.confusion,
            "pr_E3_remainder": budget.info_density,
            "C_EG_bits": capacity_bits,
            "V_EG_nats2": moments.variance,
            "berry_esseen_ratio": moments.berry_esseen_ratio,
        }
    )
    if budget.eps_n <= 0:
        return BoundResult.invalid("eps_n is not positive at this blocklength", diagnostics)

    terms = {
        "first_order": n * capacity_bits,
        "second_order": math.sqrt(n * moments.variance) * LOG2E * phi_inv(budget.eps_n),
        "log": -n * budget.eta_n,
        "constant": -1.0,
    }
    return BoundResult(log2_M=float(sum(terms.values())), terms=terms, valid=True, diagnostics=diagnostics)


def _asymptotic_achievability(
    proc: EnergyProcess, ch: AwgnSpec, n_hat: int, epsilon: float, lam: float
) -> BoundResult:
    k_eps = k_epsilon(proc, epsilon, lam)
    moments = _moments(proc.mean, ch.noise_var)
    capacity_bits = moments.mean * LOG2E
    diagnostics: Dict[str, Any] = {
        "K_eps": k_eps,
        "lambda": lam,
        "n_hat": n_hat,
        "N_n": k_eps * math.sqrt(n_hat),
        "E0n": 0.5 * k_eps * math.sqrt(n_hat) * proc.mean,
        "C_EG_bits": capacity_bits,
        "V_EG_nats2": moments.variance,
        "dropped_terms": "O(1)",
    }
    if k_eps * math.sqrt(n_hat) >= n_hat:
        return BoundResult.invalid("saving phase exceeds the blocklength", diagnostics)
    terms = {
        "first_order": n_hat * capacity_bits,
        "second_order": -math.sqrt(n_hat) * k_eps * capacity_bits
        + math.sqrt(n_hat * moments.variance / 2.0) * LOG2E * phi_inv(lam * epsilon),
        "log": -math.log2(n_hat),
        "constant": 0.0,
    }
    return BoundResult(
        log2_M=float(sum(terms.values())), terms=terms, valid=True, diagnostics=diagnostics, approximation=True
    )


def _evaluate_achievability(
    proc: EnergyProcess, ch: AwgnSpec, n_hat: int, epsilon: float, lam: float, mode: BoundMode, be_const: float
) -> BoundResult:
    if mode is BoundMode.EXPLICIT:
        return _explicit_achievability(proc, ch, n_hat, epsilon, lam, be_const)
    return _asymptotic_achievability(proc, ch, n_hat, epsilon, lam)


def optimize_lambda(evaluate: Callable[[float], BoundResult]) -> Tuple[float, BoundResult]:
    """Best lambda for ``evaluate(lam) -> BoundResult`` by grid seed plus bounded search."""
    cfg = get_settings().bounds
    grid = np.linspace(cfg.lambda_min, cfg.lambda_max, cfg.lambda_grid_points)
    results = [evaluate(float(lam)) for lam in grid]
    scores = [r.log2_M if r.valid else -math.inf for r in results]
    best = int(np.argmax(scores))
    best_lam, best_result = float(grid[best]), results[best]
    if not best_result.valid:
        return best_lam, best_result

    lo = float(grid[max(best - 1, 0)])
    hi = float(grid[min(best + 1, len(grid) - 1)])

    def objective(lam: float) -> float:
        result = evaluate(lam)
        return -result.log2_M if result.valid else _INVALID_OBJECTIVE

    if hi > lo:
        found = optimize.minimize_scalar(objective, bounds=(lo, hi), method="bounded", options={"xatol": 1e-6})
        candidate = evaluate(float(found.x))
        if candidate.valid and candidate.log2_M > best_result.log2_M:
            best_lam, best_result = float(found.x), candidate
    return best_lam, best_result


@lru_cache(maxsize=512)
def smallest_feasible_blocklength(
    proc: EnergyProcess, ch: AwgnSpec, epsilon: float, lam: float, be_const: float = 0.5, limit: int = 2**48
) -> Optional[int]:
    """Smallest n_hat at which the explicit achievability bound is valid (None beyond ``limit``)."""

    def feasible(n_hat: int) -> bool:
        return _explicit_achievability(proc, ch, n_hat, epsilon, lam, be_const).valid

    hi = 2
    while not feasible(hi):
        hi *= 2
        if hi > limit:
            return None
    lo = hi // 2
    if lo >= 1 and feasible(lo):
        return lo
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return hi


def achievability(proc: EnergyProcess, ch: AwgnSpec, p: AchParams) -> BoundResult:
    be_const = p.berry_esseen_constant

    def evaluate(lam: float) -> BoundResult:
        return _evaluate_achievability(proc, ch, p.n_hat, p.epsilon, lam, p.mode, be_const)

    if p.lam is None:
        lam, result = optimize_lambda(evaluate)
    else:
        lam, result = p.lam, evaluate(p.lam)
    result.diagnostics["lambda_star"] = lam
    result.diagnostics["mode"] = p.mode.value
    if p.mode is BoundMode.EXPLICIT:
        result.diagnostics["n_hat_min"] = smallest_feasible_blocklength(proc, ch, p.epsilon, lam, be_const)
    if not result.valid:
        logger.info("awgn.achievability.invalid", n_hat=p.n_hat, reason=result.reason)
    return result


def _converse_bits(n: int, v_n_bits2: float, epsilon: float, tau: float, u: float) -> Tuple[float, float]:
    """(-zeta_n, -log2(u - tau)) for the explicit meta-converse chain."""
    zeta = -math.sqrt(-2.0 * n * v_n_bits2 * math.log(1.0 - epsilon - u))
    return -zeta, -math.log2(u - tau)


def _explicit_converse(proc: EnergyProcess, ch: AwgnSpec, p: ConvParams) -> BoundResult:
    n, eps = p.n, p.epsilon
    d_eps = math.sqrt(4.0 * proc.variance / (1.0 - eps))
    delta = p.delta_n_override if p.delta_n_override is not None else d_eps / math.sqrt(n)
    if proc.variance == 0:
        tau = 0.0
    elif delta > 0:
        tau = min(1.0, proc.variance / (n * delta**2))
    else:
        tau = 1.0
    power = proc.mean + delta
    s2 = ch.noise_var
    c_n = 0.5 * math.log2(1.0 + power / s2)
    v_n = power * (power + 2 * s2) / (2 * (power + s2) ** 2) * LOG2E**2
    diagnostics: Dict[str, Any] = {
        "D_eps": d_eps,
        "delta_n": delta,
        "P_n": power,
        "tau_n": tau,
        "C_n": c_n,
        "V_n": v_n,
        "C_EG_bits": capacity_eh_awgn(proc, ch),
    }

    if p.u_n_override is not None:
        u, rule = p.u_n_override, "override"
    elif tau > 0:
        u, rule = 2.0 * tau, "2*tau_n"
    else:
        upper = 1.0 - eps

        def objective(candidate: float) -> float:
            return sum(_converse_bits(n, v_n, eps, tau, candidate))

        found = optimize.minimize_scalar(
            objective, bounds=(1e-12 * upper, upper * (1 - 1e-9)), method="bounded", options={"xatol": 1e-10}
        )
        u, rule = float(found.x), "optimized"
    diagnostics.update({"u_n": u, "u_n_rule": rule})

    if not (tau < u < 1.0 - eps):
        return BoundResult.invalid("need tau_n < u_n < 1 - epsilon", diagnostics)
    minus_zeta, slack = _converse_bits(n, v_n, eps, tau, u)
    diagnostics["zeta_n"] = -minus_zeta
    diagnostics["log2_gamma_n"] = n * c_n + minus_zeta
    capacity_bits = diagnostics["C_EG_bits"]
    terms = {
        "first_order": n * capacity_bits,
        "second_order": n * (c_n - capacity_bits) + minus_zeta,
        "log": 0.0,
        "constant": slack,
    }
    return BoundResult(log2_M=float(sum(terms.values())), terms=terms, valid=True, diagnostics=diagnostics)


def converse_coefficient(proc: EnergyProcess, ch: AwgnSpec, epsilon: float) -> float:
    """sqrt(n) coefficient of the asymptotic converse, in bits."""
    moments = _moments(proc.mean, ch.noise_var)
    d_eps = math.sqrt(4.0 * proc.variance / (1.0 - epsilon))
    return (
        d_eps * LOG2E / (2.0 * (proc.mean + ch.noise_var))
        + math.sqrt(moments.variance * math.log(1.0 / (1.0 - epsilon) ** 2)) * LOG2E
        + math.sqrt(1.0 - epsilon)
    )


def _asymptotic_converse(proc: EnergyProcess, ch: AwgnSpec, p: ConvParams) -> BoundResult:
    moments = _moments(proc.mean, ch.noise_var)
    capacity_bits = moments.mean * LOG2E
    d_eps = math.sqrt(4.0 * proc.variance / (1.0 - p.epsilon))
    delta = d_eps / math.sqrt(p.n)
    diagnostics: Dict[str, Any] = {
        "D_eps": d_eps,
        "delta_n": delta,
        "tau_n": 0.0 if proc.variance == 0 else (1.0 - p.epsilon) / 4.0,
        "C_EG_bits": capacity_bits,
        "V_EG_nats2": moments.variance,
        "dropped_terms": "O(n^{1/4})",
    }
    terms = {
        "first_order": p.n * capacity_bits,
        "second_order": math.sqrt(p.n) * converse_coefficient(proc, ch, p.epsilon),
        "log": 0.0,
        "constant": 0.0,
    }
    return BoundResult(
        log2_M=float(sum(terms.values())), terms=terms, valid=True, diagnostics=diagnostics, approximation=True
    )


def converse(proc: EnergyProcess, ch: AwgnSpec, p: ConvParams) -> BoundResult:
    if p.mode is BoundMode.EXPLICIT:
        result = _explicit_converse(proc, ch, p)
    else:
        result = _asymptotic_converse(proc, ch, p)
    result.diagnostics["mode"] = p.mode.value
    if not result.valid:
        logger.info("awgn.converse.invalid", n=p.n, reason=result.reason)
    return result


def normal_approximation(proc: EnergyProcess, ch: AwgnSpec, n: int, epsilon: float) -> float:
    """nC + sqrt(nV) Phi^{-1}(eps) for a plain AWGN channel at power E[E_1], in bits."""
    power, s2 = proc.mean, ch.noise_var
    dispersion = power * (power + 2 * s2) / (2 * (power + s2) ** 2) * LOG2E**2
    return n * capacity_eh_awgn(proc, ch) + math.sqrt(n * dispersion) * phi_inv(epsilon)


@dataclass
class SandwichPoint:
    n: int
    ach: BoundResult
    conv: BoundResult
    normal_approx: float

    @property
    def region(self) -> str:
        if not (self.ach.valid and self.conv.valid):
            return "invalid"
        return "ordered" if self.ach.log2_M <= self.conv.log2_M else "crossover"


def sandwich_curve(
    proc: EnergyProcess,
    ch: AwgnSpec,
    epsilon: float,
    n_grid: Sequence[int],
    ach_mode: BoundMode = BoundMode.EXPLICIT,
    conv_mode: BoundMode = BoundMode.EXPLICIT,
    lam: Optional[float] = None,
) -> List[SandwichPoint]:
    grid = [int(n) for n in n_grid]
    if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
        raise DomainError("n_grid must be nonempty and strictly increasing")
    points = []
    for n in grid:
        ach = achievability(proc, ch, AchParams(n_hat=n, epsilon=epsilon, lam=lam, mode=ach_mode))
        conv = converse(proc, ch, ConvParams(n=n, epsilon=epsilon, mode=conv_mode))
        points.append(SandwichPoint(n, ach, conv, normal_approximation(proc, ch, n, epsilon)))
    crossings = [pt.n for pt in points if pt.region == "crossover"]
    if crossings:
        logger.warning("awgn.sandwich.crossover", n=crossings)
    return points


__all__ = [
    "AchParams",
    "BoundMode",
    "BoundResult",
    "ConvParams",
    "ErrorBudget",
    "SandwichPoint",
    "achievability",
    "capacity_eh_awgn",
    "converse",
    "converse_coefficient",
    "delta_variance_awgn",
    "error_budget",
    "k_epsilon",
    "k_epsilon_from_variance",
    "normal_approximation",
    "optimize_lambda",
    "sandwich_curve",
    "saving_slots",
    "smallest_feasible_blocklength",
    "transmission_split",
]
