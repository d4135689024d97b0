"""Capacity-cost machinery and second-order bounds for the energy-harvesting DMC."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from scipy import optimize, special

from src.bounds.awgn import BoundResult, k_epsilon_from_variance, optimize_lambda
from src.bounds.ehmodel import DmcSpec, EnergyProcess
from src.bounds.numkernel import LOG2E, phi_inv, phi_inv_deriv
from src.core.errors import ComputationError, DomainError, ExoticChannelError
from src.core.settings import get_settings
from src.utils.logger import get_logger
from src.utils.seeding import stream

logger = get_logger(__name__)

# iterates closer than this (sup norm) count as the same input distribution
CAID_MATCH_TOL = 1e-6
# uniform weight blended into warm starts of the multiplier search
WARM_START_MIX = 1e-3


@dataclass
class CapacityCostResult:
    optimal_input: np.ndarray
    capacity: float
    multiplier: float
    active: bool
    output_distribution: np.ndarray
    iterations: int = 0
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    @property
    def mean_cost(self) -> float:
        return float(self.diagnostics.get("mean_cost", float("nan")))


@dataclass
class LagrangianSolution:
    input: np.ndarray
    output: np.ndarray
    objective: float
    gap: float
    iterations: int
    converged: bool
    history: List[float] = field(default_factory=list)


@dataclass(frozen=True)
class DispersionRange:
    v_min: float
    v_max: float
    unique: bool
    candidates: int


def _check_input(ch: DmcSpec, input_dist: Sequence[float]) -> np.ndarray:
    p = np.asarray(input_dist, dtype=float).reshape(-1)
    if p.shape != (ch.input_size,) or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise DomainError("input distribution must be a probability vector over the input alphabet")
    return p


def information_density_matrix(ch: DmcSpec, input_dist: Sequence[float]) -> np.ndarray:
    """ln W(y|x)/PW(y); -inf where W(y|x) = 0, NaN where both W and PW vanish."""
    p = _check_input(ch, input_dist)
    output = p @ ch.w
    if np.any((ch.w > 0) & (output[None, :] == 0)):
        raise DomainError("W(y|x) > 0 at an output the input distribution never produces")
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log(ch.w) - np.log(output)[None, :]


def information_density(ch: DmcSpec, input_dist: Sequence[float], x: int, y: int) -> float:
    p = _check_input(ch, input_dist)
    w_xy = float(ch.w[x, y])
    output_y = float(p @ ch.w[:, y])
    if w_xy > 0 and output_y == 0:
        raise DomainError("W(y|x) > 0 but PW(y) = 0")
    if w_xy == 0:
        return -math.inf
    return math.log(w_xy) - math.log(output_y)


def _divergences(w: np.ndarray, output: np.ndarray) -> np.ndarray:
    """D(W(.|x) || output) for every row, in nats (inf where W_x leaves the output support)."""
    with np.errstate(divide="ignore"):
        return np.sum(special.xlogy(w, w) - special.xlogy(w, output[None, :]), axis=1)


def mutual_information(ch: DmcSpec, input_dist: Sequence[float]) -> float:
    p = _check_input(ch, input_dist)
    used = p > 0
    return float(p[used] @ _divergences(ch.w[used], p @ ch.w))


def dispersion(ch: DmcSpec, input_dist: Sequence[float]) -> float:
    """Variance of i(X;Y) under P(x)W(y|x), nats^2."""
    p = _check_input(ch, input_dist)
    density = information_density_matrix(ch, p)
    joint = p[:, None] * ch.w
    mask = joint > 0
    mean = float(np.sum(joint[mask] * density[mask]))
    second = float(np.sum(joint[mask] * density[mask] ** 2))
    return max(0.0, second - mean * mean)


def blahut_arimoto_lagrangian(
    ch: DmcSpec,
    multiplier: float,
    initial: Optional[np.ndarray] = None,
    allowed: Optional[np.ndarray] = None,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
    record: bool = False,
    raise_on_cap: bool = True,
) -> LagrangianSolution:
    """Maximise I(P;W) - s E_P[Lambda] by alternating maximisation.

    Stops when max_x [D(W_x||PW) - s Lambda(x)] minus the current objective,
    an upper bound on the suboptimality, drops below ``tol``.
    """
    cfg = get_settings().blahut_arimoto
    tol = cfg.tol if tol is None else tol
    max_iter = cfg.max_iter if max_iter is None else max_iter
    mask = np.ones(ch.input_size, dtype=bool) if allowed is None else np.asarray(allowed, dtype=bool)
    if not mask.any():
        raise DomainError("no input symbol is allowed")

    r = np.where(mask, 1.0, 0.0) if initial is None else np.where(mask, np.asarray(initial, dtype=float), 0.0)
    r = np.where(mask, np.maximum(r / r.sum(), 1e-300), 0.0)
    penalty = multiplier * ch.cost
    history: List[float] = []
    gap = math.inf
    objective = -math.inf
    for iteration in range(1, max_iter + 1):
        output = r @ ch.w
        score = _divergences(ch.w, output) - penalty
        objective = float(r[mask] @ score[mask])
        if record:
            history.append(objective)
        gap = float(score[mask].max()) - objective
        if gap < tol:
            return LagrangianSolution(r, output, objective, gap, iteration, True, history)
        shifted = np.where(mask, score - score[mask].max(), -np.inf)
        r = r * np.exp(shifted)
        r = np.where(mask, np.maximum(r / r.sum(), 1e-300), 0.0)
    if raise_on_cap:
        raise ComputationError(
            "Blahut-Arimoto iteration cap exceeded",
            {"last_input": r.tolist(), "gap": gap, "multiplier": multiplier, "iterations": max_iter},
        )
    output = r @ ch.w
    score = _divergences(ch.w, output) - penalty
    return LagrangianSolution(r, output, float(r[mask] @ score[mask]), gap, max_iter, False, history)


def _finish(
    ch: DmcSpec, solution: LagrangianSolution, multiplier: float, active: bool, **extra: Any
) -> CapacityCostResult:
    p = solution.input
    return CapacityCostResult(
        optimal_input=p,
        capacity=max(0.0, mutual_information(ch, p)),
        multiplier=multiplier,
        active=active,
        output_distribution=p @ ch.w,
        iterations=solution.iterations,
        diagnostics={"mean_cost": float(p @ ch.cost), "gap": solution.gap, **extra},
    )


def _warm_start(ch: DmcSpec, previous: np.ndarray) -> np.ndarray:
    """Previous iterate mixed with a little uniform mass so no symbol starts near zero."""
    uniform = np.full(ch.input_size, 1.0 / ch.input_size)
    return (1.0 - WARM_START_MIX) * previous + WARM_START_MIX * uniform


def blahut_arimoto_constrained(
    ch: DmcSpec, cost_limit: float, tol: Optional[float] = None
) -> CapacityCostResult:
    """C_F(a) = max I(P;W) over E_P[Lambda] <= a, with its Lagrange multiplier.

    Multipliers tried during the search may put the Lagrangian optimum on the
    boundary of the simplex, where the iteration converges only sublinearly.
    Those solves run without the iteration cap check and are judged by their
    mean cost alone; only the reported solution must meet ``tol``.
    """
    if cost_limit < 0 or not math.isfinite(cost_limit):
        raise DomainError("cost_limit must be finite and nonnegative")
    cfg = get_settings().blahut_arimoto
    tol = cfg.tol if tol is None else tol
    has_costly = bool(np.any(ch.cost > 0))

    if cost_limit == 0:
        solution = blahut_arimoto_lagrangian(ch, 0.0, allowed=ch.cost == 0, tol=tol)
        return _finish(ch, solution, 0.0, has_costly, degenerate="zero cost limit")

    free = blahut_arimoto_lagrangian(ch, 0.0, tol=tol)
    if float(free.input @ ch.cost) <= cost_limit + tol:
        return _finish(ch, free, 0.0, False)

    def solve(multiplier: float, previous: np.ndarray) -> LagrangianSolution:
        return blahut_arimoto_lagrangian(
            ch, multiplier, initial=_warm_start(ch, previous), tol=tol, raise_on_cap=False
        )

    lo, lo_solution = 0.0, free
    hi = 1.0
    hi_solution = solve(hi, free.input)
    while float(hi_solution.input @ ch.cost) > cost_limit:
        lo, lo_solution = hi, hi_solution
        hi *= 2.0
        if hi > 1e12:
            raise ComputationError("multiplier search diverged", {"cost_limit": cost_limit})
        hi_solution = solve(hi, hi_solution.input)

    for _ in range(cfg.bisection_steps):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        candidate = solve(mid, hi_solution.input)
        if float(candidate.input @ ch.cost) > cost_limit:
            lo, lo_solution = mid, candidate
        else:
            hi, hi_solution = mid, candidate

    if not hi_solution.converged:
        hi_solution = blahut_arimoto_lagrangian(ch, hi, initial=_warm_start(ch, hi_solution.input), tol=tol)

    cost_hi = float(hi_solution.input @ ch.cost)
    cost_lo = float(lo_solution.input @ ch.cost)
    solution = hi_solution
    if cost_limit - cost_hi > tol and cost_lo > cost_hi:
        # flat stretch of C_F: mix the two sides to land on the constraint
        theta = (cost_limit - cost_hi) / (cost_lo - cost_hi)
        mixed = theta * lo_solution.input + (1.0 - theta) * hi_solution.input
        solution = LagrangianSolution(mixed, mixed @ ch.w, hi_solution.objective, hi_solution.gap,
                                      hi_solution.iterations, hi_solution.converged)
    result = _finish(ch, solution, hi, True)
    logger.debug(
        "dmc.blahut_arimoto.converged",
        cost_limit=cost_limit,
        capacity=result.capacity,
        multiplier=hi,
    )
    return result


def capacity_cost_derivative(ch: DmcSpec, a: float) -> float:
    if not a > 0:
        raise DomainError("a must be positive")
    return blahut_arimoto_constrained(ch, a).multiplier


def caid_dispersion_range(ch: DmcSpec, a: float, seed: Optional[int] = None) -> DispersionRange:
    """Range of dispersions over capacity-achieving inputs found from random restarts."""
    cfg = get_settings().blahut_arimoto
    primary = blahut_arimoto_constrained(ch, a)
    allowed = ch.cost == 0 if a == 0 else None
    seed = cfg.restart_seed if seed is None else seed
    candidates = [primary.optimal_input]
    for restart in range(cfg.restarts):
        start = stream(seed, "caid-restart", restart).dirichlet(np.ones(ch.input_size))
        solution = blahut_arimoto_lagrangian(
            ch, primary.multiplier, initial=start, allowed=allowed,
            tol=min(cfg.tol, 1e-14), raise_on_cap=False,
        )
        p = solution.input
        if float(p @ ch.cost) <= a + 1e-7 and abs(mutual_information(ch, p) - primary.capacity) <= 1e-7:
            candidates.append(p)
    spread = max(float(np.max(np.abs(c - primary.optimal_input))) for c in candidates)
    unique = spread <= CAID_MATCH_TOL
    values = [dispersion(ch, primary.optimal_input)] if unique else [dispersion(ch, c) for c in candidates]
    if not unique:
        logger.info("dmc.caid.non_unique", cost_limit=a, spread=spread, candidates=len(candidates))
    return DispersionRange(min(values), max(values), unique, len(candidates))


def check_not_exotic(ch: DmcSpec, result: CapacityCostResult, v_max: float) -> None:
    """Refuse channels with zero maximal dispersion and an unused symbol at full divergence."""
    if v_max > 1e-12:
        return
    output = result.output_distribution
    if np.any((ch.w > 0) & (output[None, :] == 0)):
        return
    scores = _divergences(ch.w, output) - result.multiplier * ch.cost
    top = float(scores[result.optimal_input > 1e-9].max())
    density = information_density_matrix(ch, result.optimal_input)
    for x in np.flatnonzero(result.optimal_input <= 1e-9):
        if abs(scores[x] - top) > 1e-9:
            continue
        row = ch.w[x]
        mask = row > 0
        centred = density[x, mask] - float(np.sum(row[mask] * density[x, mask]))
        if float(np.sum(row[mask] * centred**2)) > 1e-12:
            raise ExoticChannelError(f"exotic channel: unused symbol {int(x)} attains capacity with positive variance")


def eh_dmc_achievability(
    ch: DmcSpec,
    proc: EnergyProcess,
    n_hat: int,
    epsilon: float,
    lam: Optional[float] = None,
) -> BoundResult:
    if n_hat < 1 or not (0 < epsilon < 1):
        raise DomainError("need n_hat >= 1 and epsilon in (0,1)")
    caid = blahut_arimoto_constrained(ch, proc.mean)
    spread = caid_dispersion_range(ch, proc.mean)
    p = caid.optimal_input
    cost_var = float(p @ ch.cost**2 - (p @ ch.cost) ** 2)
    var_delta = proc.variance + max(cost_var, 0.0)
    capacity_bits = caid.capacity * LOG2E
    support_cost = float(ch.cost[p > 1e-12].max())

    def evaluate(lam_value: float) -> BoundResult:
        k_eps = k_epsilon_from_variance(var_delta, proc.mean, epsilon, lam_value)
        guard = False
        saving = k_eps * math.sqrt(n_hat)
        if k_eps == 0 and not (proc.variance == 0 and support_cost <= proc.mean):
            saving, guard = float(math.ceil(math.sqrt(n_hat))), True
        v_ed = spread.v_max if epsilon <= 1.0 / (2.0 * lam_value) else spread.v_min
        diagnostics: Dict[str, Any] = {
            "K_eps": k_eps,
            "lambda": lam_value,
            "N_n": saving,
            "saving_guard": guard,
            "C_ED_bits": capacity_bits,
            "V_ED": v_ed,
            "V_min": spread.v_min,
            "V_max": spread.v_max,
            "caid_unique": spread.unique,
            "var_delta": var_delta,
            "dropped_terms": "O(1)",
        }
        if saving >= n_hat:
            return BoundResult.invalid("saving phase exceeds the blocklength", diagnostics)
        terms = {
            "first_order": n_hat * capacity_bits,
            "second_order": -saving * capacity_bits
            + math.sqrt(n_hat * v_ed / 2.0) * LOG2E * phi_inv(lam_value * epsilon),
            "log": -math.log2(n_hat),
            "constant": 0.0,
        }
        return BoundResult(float(sum(terms.values())), terms, True, diagnostics, approximation=True)

    if lam is None:
        lam_star, result = optimize_lambda(evaluate)
    else:
        lam_star, result = lam, evaluate(lam)
    result.diagnostics["lambda_star"] = lam_star
    return result


def _taylor_constant(epsilon: float) -> float:
    """sup of phi_inv_deriv on [eps, eps + (1-eps)/4]; the derivative is convex so an endpoint wins."""
    return max(phi_inv_deriv(epsilon), phi_inv_deriv(epsilon + 0.25 * (1.0 - epsilon)))


def _second_order_coefficient(epsilon: float) -> float:
    return phi_inv(epsilon) + _taylor_constant(epsilon) * 0.25 * (1.0 - epsilon)


@lru_cache(maxsize=1)
def root_epsilon() -> float:
    """Smallest epsilon where Phi^{-1}(eps) + K_T(eps)(1-eps)/4 changes sign (NaN if none)."""
    grid = np.linspace(1e-6, 1.0 - 1e-6, 2001)
    values = np.array([_second_order_coefficient(float(e)) for e in grid])
    changes = np.flatnonzero(np.sign(values[:-1]) != np.sign(values[1:]))
    if changes.size == 0:
        return float("nan")
    i = int(changes[0])
    return float(optimize.brentq(_second_order_coefficient, grid[i], grid[i + 1], xtol=1e-14))


def eh_dmc_converse(
    ch: DmcSpec,
    proc: EnergyProcess,
    n: int,
    epsilon: float,
    eta: Optional[float] = None,
) -> BoundResult:
    if n < 1 or not (0 < epsilon < 1):
        raise DomainError("need n >= 1 and epsilon in (0,1)")
    eta = get_settings().bounds.eta_fraction * proc.mean if eta is None else float(eta)
    if not eta > 0:
        raise DomainError("eta must be positive")

    d_eps = math.sqrt(4.0 * proc.variance / (1.0 - epsilon))
    delta = d_eps / math.sqrt(n)
    tau = 0.0 if proc.variance == 0 else proc.variance / (n * delta**2)
    caid = blahut_arimoto_constrained(ch, proc.mean)
    relaxed = caid_dispersion_range(ch, proc.mean + eta)
    check_not_exotic(ch, caid, relaxed.v_max)

    k_t = _taylor_constant(epsilon)
    coefficient = phi_inv(epsilon) + (k_t * 0.25 * (1.0 - epsilon) if tau > 0 else 0.0)
    v_star = relaxed.v_min if coefficient < 0 else relaxed.v_max
    capacity_bits = caid.capacity * LOG2E
    diagnostics: Dict[str, Any] = {
        "D_eps": d_eps,
        "delta_n": delta,
        "tau_n": tau,
        "eta": eta,
        "multiplier": caid.multiplier,
        "K_T": k_t,
        "eps_R": root_epsilon(),
        "V_star": v_star,
        "V_min": relaxed.v_min,
        "V_max": relaxed.v_max,
        "caid_unique": relaxed.unique,
        "C_ED_bits": capacity_bits,
        "second_order_coefficient": coefficient,
        "dropped_terms": "O(log n)",
    }
    if tau > 0.25 * (1.0 - epsilon) + 1e-12:
        return BoundResult.invalid("tau_n exceeds (1 - epsilon)/4", diagnostics)
    terms = {
        "first_order": n * capacity_bits,
        "second_order": math.sqrt(n) * LOG2E * (caid.multiplier * d_eps + math.sqrt(v_star) * coefficient),
        "log": 0.0,
        "constant": 0.0,
    }
    return BoundResult(float(sum(terms.values())), terms, True, diagnostics, approximation=True)


def dmc_normal_approximation(ch: DmcSpec, cost_limit: float, n: int, epsilon: float) -> float:
    """n C_F(a) + sqrt(n V) Phi^{-1}(eps) in bits, V_min below eps = 1/2 and V_max above."""
    caid = blahut_arimoto_constrained(ch, cost_limit)
    spread = caid_dispersion_range(ch, cost_limit)
    v = spread.v_min if epsilon < 0.5 else spread.v_max
    return LOG2E * (n * caid.capacity + math.sqrt(n * v) * phi_inv(epsilon))


__all__ = [
    "CapacityCostResult",
    "DispersionRange",
    "LagrangianSolution",
    "blahut_arimoto_constrained",
    "blahut_arimoto_lagrangian",
    "caid_dispersion_range",
    "capacity_cost_derivative",
    "check_not_exotic",
    "dispersion",
    "dmc_normal_approximation",
    "eh_dmc_achievability",
    "eh_dmc_converse",
    "information_density",
    "information_density_matrix",
    "mutual_information",
    "root_epsilon",
]
