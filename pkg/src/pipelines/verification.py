"""Oracle suite: every bound-level inequality the toolkit relies on, checked numerically."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List

import numpy as np
from scipy import optimize, stats
from tabulate import tabulate

from src.bounds.dmc import blahut_arimoto_constrained, mutual_information
from src.bounds.ehmodel import DmcSpec
from src.bounds.hypotest import (
    beta_discrete_exact,
    beta_gaussian_product_exact,
    beta_lower_bound,
    discrete_lr_tail,
    gaussian_lr_tail,
    likelihood_ratios,
)
from src.bounds.method_of_types import beta_type_invariance_check, enumerate_types, ttt_check
from src.bounds.numkernel import (
    LOG2E,
    birge_tail_bound,
    gauss_hermite_moments,
    gaussian_info_density_moments,
    noncentral_chisq_cdf,
)
from src.core.settings import get_settings
from src.utils.logger import get_logger
from src.utils.seeding import stream

logger = get_logger(__name__)

VERIFY_SEED = 20240607


@dataclass
class CheckResult:
    name: str
    cases: int
    violations: int
    worst: float
    details: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def as_row(self) -> Dict[str, Any]:
        return {
            "check": self.name,
            "cases": self.cases,
            "violations": self.violations,
            "worst": self.worst,
            "passed": self.passed,
        }


@dataclass
class VerificationReport:
    checks: List[CheckResult]

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def rows(self) -> List[Dict[str, Any]]:
        return [check.as_row() for check in self.checks]

    def render(self) -> str:
        return tabulate(
            [(c.name, c.cases, c.violations, f"{c.worst:.3e}", "ok" if c.passed else "FAIL") for c in self.checks],
            headers=["Check", "Cases", "Violations", "Worst excess", "Status"],
            tablefmt="github",
        )


class _Tally:
    """Counts cases and violations; ``worst`` is the largest excess seen (negative if all held)."""

    def __init__(self, name: str, tolerance: float = 0.0) -> None:
        self.name = name
        self.tolerance = tolerance
        self.cases = 0
        self.violations = 0
        self.worst = -math.inf

    def record(self, excess: float) -> None:
        self.cases += 1
        self.worst = max(self.worst, excess)
        if excess > self.tolerance:
            self.violations += 1

    def result(self, **details: Any) -> CheckResult:
        return CheckResult(self.name, self.cases, self.violations, self.worst, details)


def check_birge_dominance(fast: bool = False) -> CheckResult:
    """Exact lower tail at the Birge quantile never exceeds e^{-t}."""
    tally = _Tally("birge_dominance", tolerance=1e-12)
    dofs = range(1, 51, 7 if fast else 1)
    ncs = np.arange(0.0, 25.0 + 1e-9, 2.5 if fast else 0.5)
    ts = [0.1, 1.0, 5.0, 10.0] if fast else [0.1, 0.25, 0.5, 1.0, 2.0, 3.0, 5.0, 7.5, 10.0]
    for dof in dofs:
        for nc in ncs:
            for t in ts:
                q, bound = birge_tail_bound(dof, float(nc), t)
                tally.record(noncentral_chisq_cdf(max(q, 0.0), dof, float(nc)) - bound)
    return tally.result()


def check_noncentral_chisq(fast: bool = False) -> CheckResult:
    """Series CDF against scipy's ncx2 on a grid (relative error)."""
    tally = _Tally("noncentral_chisq_vs_scipy", tolerance=1e-7)
    dofs = (1, 3, 10, 40) if fast else (1, 2, 3, 5, 10, 20, 40, 80)
    for dof in dofs:
        for nc in (0.0, 0.5, 4.0, 25.0, 100.0):
            mean = dof + nc
            for x in np.linspace(0.05 * mean, 2.5 * mean + 10, 6 if fast else 15):
                reference = float(stats.ncx2.cdf(x, dof, nc)) if nc > 0 else float(stats.chi2.cdf(x, dof))
                if reference < 1e-100:
                    continue
                ours = noncentral_chisq_cdf(float(x), dof, nc)
                tally.record(abs(ours - reference) / max(reference, 1e-12))
    return tally.result()


def check_quadrature_moments(fast: bool = False) -> CheckResult:
    """Gauss-Hermite mean/variance against the closed forms, and 64 vs verification order."""
    numerics = get_settings().numerics
    tally = _Tally("gauss_hermite_moments", tolerance=1e-8)
    pairs = [(1.0, 1.0), (3.0, 1.0)] if fast else [(0.1, 1.0), (1.0, 1.0), (3.0, 1.0), (10.0, 0.5), (1.0, 4.0)]
    for mean_energy, noise_var in pairs:
        exact = gaussian_info_density_moments(mean_energy, noise_var)
        for order in (numerics.gauss_hermite_order, numerics.verification_order):
            mean, variance, _ = gauss_hermite_moments(mean_energy, noise_var, order)
            tally.record(abs(mean - exact.mean))
            tally.record(abs(variance - exact.variance))
    return tally.result()


def _gamma_grid(ratios: np.ndarray) -> np.ndarray:
    finite = ratios[np.isfinite(ratios) & (ratios > 0)]
    return np.unique(np.concatenate((np.geomspace(1e-4, 1e4, 41), finite)))


def check_beta_lower_bound(fast: bool = False) -> CheckResult:
    """(alpha - P[LR >= gamma])^+ / gamma never exceeds the exact beta."""
    tally = _Tally("beta_lower_bound", tolerance=1e-12)
    rng = stream(VERIFY_SEED, "verify-beta")
    for _ in range(100 if fast else 1000):
        k = int(rng.integers(2, 9))
        p = rng.dirichlet(np.ones(k))
        q = rng.dirichlet(np.ones(k))
        alpha = float(rng.uniform(0.02, 0.98))
        exact = beta_discrete_exact(p, q, alpha).beta
        bound = beta_lower_bound(discrete_lr_tail(p, q), alpha, _gamma_grid(likelihood_ratios(p, q)))
        tally.record(bound - exact)
    for n in (1, 4, 16):
        for alpha in (0.1, 0.5, 0.9):
            exact = beta_gaussian_product_exact(float(n), n, 1.0, 1.0, alpha)
            tail = gaussian_lr_tail(float(n), n, 1.0, 1.0)
            grid = np.exp(np.linspace(-4.0, 4.0 + n, 25 if fast else 81))
            tally.record(beta_lower_bound(tail, alpha, grid) - exact * (1 + 1e-9))
    return tally.result()


def _binary_test_channels() -> List[DmcSpec]:
    channels = [
        DmcSpec.bsc(0.11),
        DmcSpec.bsc(0.3),
        DmcSpec(np.array([[1.0, 0.0], [0.2, 0.8]]), np.array([0.0, 1.0])),
        DmcSpec(np.array([[0.9, 0.1], [0.25, 0.75]]), np.array([0.0, 1.0])),
    ]
    rng = stream(VERIFY_SEED, "verify-channels")
    for _ in range(2):
        channels.append(DmcSpec(rng.dirichlet(np.ones(2), size=2), np.array([0.0, 1.0])))
    return channels


def check_beta_type_invariance(fast: bool = False) -> CheckResult:
    """beta_alpha(W^n(.|x), Q^n) is constant on every input type class."""
    tally = _Tally("beta_type_invariance", tolerance=1e-9)
    max_n = 4 if fast else 6
    for ch in _binary_test_channels():
        for q_y in ([0.5, 0.5], [0.3, 0.7]):
            for n in range(1, max_n + 1):
                for tv in enumerate_types(2, n):
                    for alpha in (0.1, 0.5, 0.9):
                        tally.record(beta_type_invariance_check(ch, q_y, tv, alpha))
    return tally.result()


def check_ttt(fast: bool = False) -> CheckResult:
    """Supremum over cost-feasible sequences equals supremum over feasible types of class suprema."""
    tally = _Tally("ttt_equality")
    rng = stream(VERIFY_SEED, "verify-ttt")
    ch = DmcSpec.bsc(0.11)
    for _ in range(20 if fast else 100):
        n = int(rng.integers(1, 9))
        a = float(rng.uniform(0.0, 1.0))
        table = rng.normal(size=2**n)
        weights = 2 ** np.arange(n)[::-1]

        def h(x: tuple, table: np.ndarray = table, weights: np.ndarray = weights) -> float:
            return float(table[int(np.dot(weights, x))])

        tally.record(0.0 if ttt_check(ch, a, n, h) else 1.0)
    return tally.result()


def _grid_capacity(ch: DmcSpec, a: float) -> float:
    """Binary-input oracle: maximise I over P(x=1) in [0, min(a, 1)]."""
    upper = min(a, 1.0)

    def info(p1: float) -> float:
        return mutual_information(ch, np.array([1.0 - p1, p1]))

    grid = np.linspace(0.0, upper, 2001)
    values = np.array([info(float(p)) for p in grid])
    best = int(np.argmax(values))
    lo, hi = grid[max(best - 1, 0)], grid[min(best + 1, grid.size - 1)]
    if hi > lo:
        found = optimize.minimize_scalar(lambda p: -info(p), bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
        return max(float(values[best]), -float(found.fun))
    return float(values[best])


def check_blahut_arimoto(fast: bool = False) -> CheckResult:
    tally = _Tally("blahut_arimoto_vs_grid", tolerance=1e-6)
    rng = stream(VERIFY_SEED, "verify-ba")
    budgets = (0.1, 0.5, 1.0) if fast else tuple(np.round(np.arange(0.1, 1.01, 0.1), 2))
    for _ in range(3 if fast else 10):
        outputs = int(rng.integers(2, 4))
        ch = DmcSpec(rng.dirichlet(np.ones(outputs), size=2), np.array([0.0, 1.0]))
        for a in budgets:
            tally.record(abs(blahut_arimoto_constrained(ch, float(a)).capacity - _grid_capacity(ch, float(a))))
    crossover = 0.11
    h2 = -(crossover * math.log2(crossover) + (1 - crossover) * math.log2(1 - crossover))
    bsc_bits = blahut_arimoto_constrained(DmcSpec.bsc(crossover), 1.0).capacity * LOG2E
    tally.record(abs(bsc_bits - (1.0 - h2)))
    return tally.result()


CHECKS: Dict[str, Callable[[bool], CheckResult]] = {
    "birge_dominance": check_birge_dominance,
    "noncentral_chisq_vs_scipy": check_noncentral_chisq,
    "gauss_hermite_moments": check_quadrature_moments,
    "beta_lower_bound": check_beta_lower_bound,
    "beta_type_invariance": check_beta_type_invariance,
    "ttt_equality": check_ttt,
    "blahut_arimoto_vs_grid": check_blahut_arimoto,
}


def run_suite(fast: bool = False) -> VerificationReport:
    checks = []
    for name, check in CHECKS.items():
        result = check(fast)
        log = logger.info if result.passed else logger.warning
        log("verify.check.done", check=name, cases=result.cases, violations=result.violations, worst=result.worst)
        checks.append(result)
    return VerificationReport(checks)


__all__ = ["CHECKS", "CheckResult", "VerificationReport", "run_suite"]
