import math

import numpy as np
import pytest

from src.bounds.hypotest import (
    beta_discrete_exact,
    beta_gaussian_product_exact,
    beta_lower_bound,
    discrete_lr_tail,
    gaussian_lr_tail,
    info_density_tail,
)
from src.core.errors import DomainError


def test_beta_with_disjoint_mass() -> None:
    result = beta_discrete_exact([1.0, 0.0], [0.5, 0.5], 0.6)
    assert result.beta == pytest.approx(0.3)
    assert result.achieved_power == pytest.approx(0.6)


def test_beta_of_identical_laws_is_alpha() -> None:
    p = [0.2, 0.3, 0.5]
    for alpha in (0.1, 0.45, 0.9):
        assert beta_discrete_exact(p, p, alpha).beta == pytest.approx(alpha)


def test_beta_increases_with_alpha() -> None:
    p, q = [0.6, 0.3, 0.1], [0.1, 0.3, 0.6]
    betas = [beta_discrete_exact(p, q, a).beta for a in np.linspace(0.05, 0.95, 19)]
    assert all(b2 >= b1 for b1, b2 in zip(betas, betas[1:]))


def test_beta_rejects_bad_inputs() -> None:
    with pytest.raises(DomainError):
        beta_discrete_exact([0.5, 0.5], [0.5, 0.5], 1.0)
    with pytest.raises(DomainError):
        beta_discrete_exact([0.5, 0.6], [0.5, 0.5], 0.5)
    with pytest.raises(DomainError):
        beta_discrete_exact([0.5, 0.5], [1.0], 0.5)


def test_lower_bound_never_exceeds_exact_beta() -> None:
    rng = np.random.default_rng(2024)
    for _ in range(200):
        k = int(rng.integers(2, 7))
        p, q = rng.dirichlet(np.ones(k)), rng.dirichlet(np.ones(k))
        alpha = float(rng.uniform(0.05, 0.95))
        bound = beta_lower_bound(discrete_lr_tail(p, q), alpha, np.geomspace(1e-3, 1e3, 61))
        assert bound <= beta_discrete_exact(p, q, alpha).beta + 1e-12


def test_lower_bound_rejects_nonpositive_grid() -> None:
    with pytest.raises(DomainError):
        beta_lower_bound(lambda g: 0.0, 0.5, [0.0, 1.0])


def test_gaussian_beta_is_sandwiched() -> None:
    n, alpha = 8, 0.5
    exact = beta_gaussian_product_exact(float(n), n, 1.0, 1.0, alpha)
    assert 0.0 < exact < alpha
    bound = beta_lower_bound(gaussian_lr_tail(float(n), n, 1.0, 1.0), alpha, np.exp(np.linspace(-4, 12, 81)))
    assert bound <= exact * (1 + 1e-9)


def test_gaussian_beta_stein_exponent() -> None:
    # -log(beta)/n approaches D(N(1,1) || N(0,2)) as n grows
    divergence = 0.5 * math.log(2.0)

    def rate(n: int) -> float:
        return -math.log(beta_gaussian_product_exact(float(n), n, 1.0, 1.0, 0.5)) / n

    assert abs(rate(12) - divergence) < abs(rate(1) - divergence)


@pytest.mark.parametrize("n", [10, 100, 1000])
@pytest.mark.parametrize("zeta", [-1.0, -5.0, -20.0])
def test_info_density_tail_ordering(n: int, zeta: float) -> None:
    tails = info_density_tail(float(n), n, 1.0, 1.0, zeta)
    assert tails.exact <= tails.birge + 1e-12
    assert tails.birge <= tails.full_power * (1 + 1e-12)
    assert tails.full_power <= tails.dispersion_form * (1 + 1e-12)


def test_info_density_tail_rejects_nonnegative_zeta() -> None:
    with pytest.raises(DomainError):
        info_density_tail(10.0, 10, 1.0, 1.0, 0.0)
