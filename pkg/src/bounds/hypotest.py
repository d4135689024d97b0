"""Neyman-Pearson beta functions and the tail bounds behind the meta-converse."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from scipy import optimize

from src.bounds.numkernel import LOG2E, Tolerances, noncentral_chisq_cdf
from src.core.errors import ComputationError, DomainError

LN2 = math.log(2.0)


@dataclass(frozen=True)
class NPTestResult:
    threshold: float
    randomization: float
    beta: float
    achieved_power: float


@dataclass(frozen=True)
class TailBounds:
    """Exact tail of P[dP/dQ >= 2^{nC_S - zeta}] and three bounds on it, tightest first."""

    exact: float
    birge: float
    full_power: float
    dispersion_form: float


def _as_distribution(values: Sequence[float], name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float).reshape(-1)
    if arr.size == 0 or np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be a nonempty nonnegative vector")
    if abs(arr.sum() - 1.0) > 1e-9:
        raise DomainError(f"{name} must sum to 1")
    return arr


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not (0.0 < alpha < 1.0):
        raise DomainError(f"alpha must lie in (0,1), got {alpha!r}")
    return alpha


def likelihood_ratios(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(q > 0, p / np.where(q > 0, q, 1.0), np.inf)
    return np.where((p == 0) & (q == 0), np.nan, ratio)


def beta_discrete_exact(p: Sequence[float], q: Sequence[float], alpha: float) -> NPTestResult:
    """Optimal randomized test: accept outcomes in decreasing likelihood-ratio order.

    Outcomes with p > 0 = q come first at no q-cost; ties are broken by index.
    """
    p_arr = _as_distribution(p, "p")
    q_arr = _as_distribution(q, "q")
    if p_arr.shape != q_arr.shape:
        raise DomainError("p and q must share an alphabet")
    alpha = _check_alpha(alpha)
    ratio = likelihood_ratios(p_arr, q_arr)
    support = np.flatnonzero(~np.isnan(ratio))
    order = support[np.argsort(-ratio[support], kind="stable")]

    p_cum = 0.0
    q_cum = 0.0
    for index in order:
        p_mass = p_arr[index]
        if p_cum + p_mass >= alpha and p_mass > 0:
            fraction = min(1.0, max(0.0, (alpha - p_cum) / p_mass))
            beta = q_cum + fraction * q_arr[index]
            return NPTestResult(
                threshold=float(ratio[index]),
                randomization=float(fraction),
                beta=float(min(1.0, beta)),
                achieved_power=float(p_cum + fraction * p_mass),
            )
        p_cum += p_mass
        q_cum += q_arr[index]
    # only reachable through rounding of p's total mass
    return NPTestResult(threshold=0.0, randomization=1.0, beta=float(min(1.0, q_cum)), achieved_power=float(p_cum))


def beta_lower_bound(
    p_tail: Callable[[float], float], alpha: float, gamma_grid: Iterable[float]
) -> float:
    """max over the grid of (alpha - P[dP/dQ >= gamma])^+ / gamma."""
    grid = [float(g) for g in gamma_grid]
    if not grid:
        raise DomainError("gamma_grid must not be empty")
    if any(g <= 0 for g in grid):
        raise DomainError("gamma_grid must be positive")
    return max(max(alpha - p_tail(g), 0.0) / g for g in grid)


def discrete_lr_tail(p: Sequence[float], q: Sequence[float]) -> Callable[[float], float]:
    p_arr = _as_distribution(p, "p")
    q_arr = _as_distribution(q, "q")
    ratio = likelihood_ratios(p_arr, q_arr)
    mass = np.where(np.isnan(ratio), 0.0, p_arr)
    ratio = np.nan_to_num(ratio, nan=0.0, posinf=np.inf)

    def tail(gamma: float) -> float:
        return float(mass[ratio >= gamma].sum())

    return tail


@dataclass(frozen=True)
class _GaussianPair:
    """P = N(x, sigma^2 I_n), Q = N(0, (s + sigma^2) I_n) through T = |y - (s'/s)x|^2 / sigma^2.

    log dP/dQ = (n/2) ln(s'/sigma^2) + |x|^2/(2s) - (s/(2s')) T, with
    T ~ ncx2(n, sigma^2 |x|^2 / s^2) under P and
    T ~ (s'/sigma^2) ncx2(n, s' |x|^2 / s^2) under Q.
    """

    x_norm_sq: float
    n: int
    noise_var: float
    s: float

    def __post_init__(self) -> None:
        if self.x_norm_sq < 0 or self.n < 1 or not self.s > 0 or not self.noise_var > 0:
            raise DomainError("need x_norm_sq >= 0, n >= 1, s > 0 and noise_var > 0")

    @property
    def total(self) -> float:
        return self.s + self.noise_var

    @property
    def nc_p(self) -> float:
        return self.noise_var * self.x_norm_sq / self.s**2

    @property
    def nc_q(self) -> float:
        return self.total * self.x_norm_sq / self.s**2

    def log_lr_offset(self) -> float:
        return 0.5 * self.n * math.log(self.total / self.noise_var) + self.x_norm_sq / (2 * self.s)

    def statistic_threshold(self, log_gamma: float) -> float:
        return (2 * self.total / self.s) * (self.log_lr_offset() - log_gamma)

    def cdf_p(self, t: float, tol: Optional[Tolerances] = None) -> float:
        return noncentral_chisq_cdf(max(t, 0.0), self.n, self.nc_p, tol)

    def cdf_q(self, t: float, tol: Optional[Tolerances] = None) -> float:
        return noncentral_chisq_cdf(max(t, 0.0) * self.noise_var / self.total, self.n, self.nc_q, tol)


def gaussian_lr_tail(
    x_norm_sq: float, n: int, noise_var: float, s: float, tol: Optional[Tolerances] = None
) -> Callable[[float], float]:
    pair = _GaussianPair(x_norm_sq, n, noise_var, s)

    def tail(gamma: float) -> float:
        return pair.cdf_p(pair.statistic_threshold(math.log(gamma)), tol)

    return tail


def beta_gaussian_product_exact(
    x_norm_sq: float,
    n: int,
    noise_var: float,
    s: float,
    alpha: float,
    tol: Optional[Tolerances] = None,
) -> float:
    alpha = _check_alpha(alpha)
    tol = tol or Tolerances.from_settings()
    pair = _GaussianPair(x_norm_sq, n, noise_var, s)

    nc = pair.nc_p
    upper = n + nc + 10.0 * math.sqrt(2.0 * (n + 2.0 * nc)) + 10.0
    for _ in range(tol.max_iter):
        if pair.cdf_p(upper, tol) >= alpha:
            break
        upper *= 2.0
    else:
        raise ComputationError("could not bracket the Neyman-Pearson threshold", {"upper": upper})
    try:
        threshold = optimize.brentq(
            lambda t: pair.cdf_p(t, tol) - alpha,
            0.0,
            upper,
            xtol=tol.abs_tol,
            rtol=4 * np.finfo(float).eps,
            maxiter=max(tol.max_iter, 100),
        )
    except (ValueError, RuntimeError) as exc:
        raise ComputationError("Neyman-Pearson threshold bisection failed", {"alpha": alpha}) from exc
    return pair.cdf_q(threshold, tol)


def info_density_tail(
    x_norm_sq: float,
    n: int,
    noise_var: float,
    s: float,
    zeta: float,
    tol: Optional[Tolerances] = None,
) -> TailBounds:
    """Bounds on P[log2 dP/dQ >= n C_S - zeta] for zeta < 0 (bits)."""
    if not zeta < 0:
        raise DomainError("zeta must be negative")
    pair = _GaussianPair(x_norm_sq, n, noise_var, s)
    if x_norm_sq > n * s * (1 + 1e-12):
        raise DomainError("x_norm_sq must not exceed n * s")

    zeta_nats = zeta * LN2
    exact = pair.cdf_p((pair.total / s**2) * x_norm_sq + (2 * pair.total / s) * zeta_nats, tol)

    rho = s * LOG2E / (2 * pair.total)
    birge = math.exp(-(zeta**2) / (4 * rho**2 * (n + 2 * pair.nc_p)))
    full_power = math.exp(-(zeta**2) / (4 * rho**2 * n * (1 + 2 * noise_var / s)))
    v_s = s * (s + 2 * noise_var) / (2 * pair.total**2) * LOG2E**2
    dispersion_form = math.exp(-(zeta**2) / (2 * n * v_s))
    return TailBounds(exact=exact, birge=birge, full_power=full_power, dispersion_form=dispersion_form)


__all__ = [
    "NPTestResult",
    "TailBounds",
    "beta_discrete_exact",
    "beta_gaussian_product_exact",
    "beta_lower_bound",
    "discrete_lr_tail",
    "gaussian_lr_tail",
    "info_density_tail",
    "likelihood_ratios",
]
