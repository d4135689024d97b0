"""Special functions and probability kernels shared by every bound.

All information quantities are in nats here; conversion to bits happens at the
presentation boundary (see :data:`LOG2E`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy import integrate, special, stats

from src.core.errors import ComputationError, DomainError
from src.core.settings import get_settings
from src.utils.logger import get_logger

logger = get_logger(__name__)

LOG2E = 1.0 / math.log(2.0)
SQRT_2PI = math.sqrt(2.0 * math.pi)
# E[(chi^2_2)^3] = 2^3 * 3!
_CHI2_2_THIRD_MOMENT = 48.0


@dataclass(frozen=True)
class Tolerances:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-9
    max_iter: int = 200

    def __post_init__(self) -> None:
        if not self.abs_tol > 0:
            raise DomainError("abs_tol must be positive")
        if not self.rel_tol > 0:
            raise DomainError("rel_tol must be positive")
        if self.max_iter < 1:
            raise DomainError("max_iter must be at least 1")

    @classmethod
    def from_settings(cls) -> "Tolerances":
        numerics = get_settings().numerics
        return cls(abs_tol=numerics.abs_tol, rel_tol=numerics.rel_tol, max_iter=numerics.max_iter)


@dataclass(frozen=True)
class InfoDensityMoments:
    """Moments of the per-letter Gaussian information density, in nats."""

    mean: float
    variance: float
    abs_third_central: float

    @property
    def berry_esseen_ratio(self) -> float:
        """rho / V^{3/2}; multiply by the Berry-Esseen constant for the remainder."""
        return self.abs_third_central / self.variance**1.5


def _require_probability(p: float, name: str = "p") -> float:
    p = float(p)
    if not (0.0 < p < 1.0):
        raise DomainError(f"{name} must lie in (0,1), got {p!r}")
    return p


def phi_cdf(x: float) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"phi_cdf needs a finite argument, got {x!r}")
    return float(special.ndtr(x))


def phi_inv(p: float) -> float:
    return float(special.ndtri(_require_probability(p)))


def phi_inv_deriv(p: float) -> float:
    """f'(p) = 1 / phi(Phi^{-1}(p)); minimised at p = 1/2 where it equals sqrt(2 pi)."""
    z = phi_inv(p)
    return SQRT_2PI * math.exp(0.5 * z * z)


def noncentral_chisq_cdf(
    x: float, dof: int, noncentrality: float, tol: Optional[Tolerances] = None
) -> float:
    """Exact CDF as a Poisson(nc/2) mixture of central chi-square CDFs.

    Terms below the Poisson mode are always summed; ``tol.max_iter`` caps the terms
    past the mode. Truncating after index J leaves at most
    ``P(Pois > J) * P(dof/2 + J + 1, x/2)`` of mass, which must fall below
    ``rel_tol`` times the partial sum.
    """
    tol = tol or Tolerances.from_settings()
    x = float(x)
    nc = float(noncentrality)
    if dof < 1:
        raise DomainError("dof must be at least 1")
    if nc < 0 or not math.isfinite(nc):
        raise DomainError("noncentrality must be finite and nonnegative")
    if x < 0 or math.isnan(x):
        raise DomainError("x must be nonnegative")
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return 1.0
    half_dof = 0.5 * dof
    if nc == 0.0:
        return float(special.gammainc(half_dof, 0.5 * x))

    mu = 0.5 * nc
    mode = int(math.floor(mu))
    indices = np.arange(mode + tol.max_iter + 1)
    weights = stats.poisson.pmf(indices, mu)
    central = special.gammainc(half_dof + indices, 0.5 * x)
    partial = np.cumsum(weights * central)
    omitted = stats.poisson.sf(indices, mu) * special.gammainc(half_dof + indices + 1, 0.5 * x)
    converged = (indices >= mode) & (
        (omitted <= tol.rel_tol * partial) | (omitted <= np.finfo(float).tiny)
    )
    hits = np.flatnonzero(converged)
    if hits.size == 0:
        raise ComputationError(
            "noncentral chi-square series did not converge",
            {"partial_sum": float(partial[-1]), "omitted_bound": float(omitted[-1]),
             "terms": int(indices.size), "x": x, "dof": dof, "noncentrality": nc},
        )
    return float(min(1.0, partial[hits[0]]))


def birge_tail_bound(dof: int, noncentrality: float, t: float) -> Tuple[float, float]:
    """Lower-tail quantile with P(chi <= q) <= e^{-t} for a noncentral chi-square."""
    if t <= 0 or not math.isfinite(t):
        raise DomainError(f"t must be positive, got {t!r}")
    if dof < 1 or noncentrality < 0:
        raise DomainError("dof must be >= 1 and noncentrality >= 0")
    quantile = dof + noncentrality - 2.0 * math.sqrt((dof + 2.0 * noncentrality) * t)
    return quantile, math.exp(-t)


def _quadratic_form(mean_energy: float, noise_var: float) -> np.ndarray:
    """Matrix A with G - C = xi^T A xi for xi = (X/sqrt(P), Z/sigma) standard normal."""
    p, s2 = mean_energy, noise_var
    total = p + s2
    cross = math.sqrt(p * s2)
    return 0.5 * np.array([[p / total, cross / total], [cross / total, s2 / total - 1.0]])


def _abs_third_central_polar(eigenvalues: np.ndarray) -> float:
    lam1, lam2 = float(eigenvalues.max()), float(eigenvalues.min())

    def angular(theta: float) -> float:
        c, s = math.cos(theta), math.sin(theta)
        return abs(lam1 * c * c + lam2 * s * s) ** 3

    points = None
    if lam1 > 0 > lam2:
        points = [math.atan(math.sqrt(-lam1 / lam2))]
    value, _ = integrate.quad(angular, 0.0, 0.5 * math.pi, points=points, epsabs=0, epsrel=1e-13)
    return _CHI2_2_THIRD_MOMENT * value / (0.5 * math.pi)


def gauss_hermite_moments(
    mean_energy: float, noise_var: float, order: int
) -> Tuple[float, float, float]:
    """2-D Gauss-Hermite estimates of (E[G], Var G, E|G - C|^3) in nats."""
    nodes, weights = hermegauss(order)
    xi1, xi2 = np.meshgrid(nodes, nodes, indexing="ij")
    w = np.outer(weights, weights) / (2.0 * math.pi)
    capacity = 0.5 * math.log1p(mean_energy / noise_var)
    x = math.sqrt(mean_energy) * xi1
    z = math.sqrt(noise_var) * xi2
    g = capacity + (x + z) ** 2 / (2.0 * (mean_energy + noise_var)) - z**2 / (2.0 * noise_var)
    mean = float(np.sum(w * g))
    variance = float(np.sum(w * (g - mean) ** 2))
    third = float(np.sum(w * np.abs(g - capacity) ** 3))
    return mean, variance, third


def gaussian_info_density_moments(mean_energy: float, noise_var: float) -> InfoDensityMoments:
    if not (mean_energy > 0 and noise_var > 0):
        raise DomainError("mean_energy and noise_var must be positive")
    mean = 0.5 * math.log1p(mean_energy / noise_var)
    variance = mean_energy / (mean_energy + noise_var)
    eigenvalues = np.linalg.eigvalsh(_quadratic_form(mean_energy, noise_var))
    third = _abs_third_central_polar(eigenvalues)
    logger.debug(
        "numkernel.info_density_moments.computed",
        mean_energy=mean_energy,
        noise_var=noise_var,
        third=third,
    )
    return InfoDensityMoments(mean=mean, variance=variance, abs_third_central=third)


__all__ = [
    "LOG2E",
    "InfoDensityMoments",
    "Tolerances",
    "birge_tail_bound",
    "gauss_hermite_moments",
    "gaussian_info_density_moments",
    "noncentral_chisq_cdf",
    "phi_cdf",
    "phi_inv",
    "phi_inv_deriv",
]
