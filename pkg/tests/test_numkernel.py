import math

import pytest
from scipy import stats

from src.bounds.numkernel import (
    Tolerances,
    birge_tail_bound,
    gauss_hermite_moments,
    gaussian_info_density_moments,
    noncentral_chisq_cdf,
    phi_cdf,
    phi_inv,
    phi_inv_deriv,
)
from src.core.errors import ComputationError, DomainError


def test_phi_inverse_round_trip() -> None:
    for p in (1e-12, 0.01, 0.3, 0.5, 0.9, 1 - 1e-9):
        assert phi_cdf(phi_inv(p)) == pytest.approx(p, rel=1e-10)


def test_phi_inv_rejects_endpoints() -> None:
    for p in (0.0, 1.0, -0.1, 1.5):
        with pytest.raises(DomainError):
            phi_inv(p)


def test_phi_inv_deriv_minimum_at_half() -> None:
    assert phi_inv_deriv(0.5) == pytest.approx(math.sqrt(2 * math.pi))
    assert phi_inv_deriv(0.1) > phi_inv_deriv(0.5)
    assert phi_inv_deriv(0.9) == pytest.approx(phi_inv_deriv(0.1))


def test_noncentral_chisq_edge_values() -> None:
    assert noncentral_chisq_cdf(0.0, 3, 2.0) == 0.0
    assert noncentral_chisq_cdf(math.inf, 3, 2.0) == 1.0
    assert noncentral_chisq_cdf(2.0, 2, 0.0) == pytest.approx(1 - math.exp(-1), rel=1e-12)


@pytest.mark.parametrize("dof,nc,x", [(1, 0.5, 0.3), (4, 10.0, 12.0), (20, 3.0, 15.0), (50, 80.0, 160.0)])
def test_noncentral_chisq_matches_scipy(dof: int, nc: float, x: float) -> None:
    assert noncentral_chisq_cdf(x, dof, nc) == pytest.approx(float(stats.ncx2.cdf(x, dof, nc)), rel=1e-7)


def test_noncentral_chisq_reports_non_convergence() -> None:
    with pytest.raises(ComputationError) as info:
        noncentral_chisq_cdf(1e4, 2, 100.0, Tolerances(max_iter=1))
    assert "partial_sum" in info.value.diagnostics


def test_noncentral_chisq_rejects_bad_arguments() -> None:
    with pytest.raises(DomainError):
        noncentral_chisq_cdf(-1.0, 2, 1.0)
    with pytest.raises(DomainError):
        noncentral_chisq_cdf(1.0, 0, 1.0)
    with pytest.raises(DomainError):
        noncentral_chisq_cdf(1.0, 2, -1.0)


def test_birge_quantile_and_bound() -> None:
    q, bound = birge_tail_bound(10, 5.0, 1.0)
    assert q == pytest.approx(15.0 - 2.0 * math.sqrt(20.0))
    assert bound == pytest.approx(math.exp(-1.0))
    assert noncentral_chisq_cdf(q, 10, 5.0) <= bound


def test_birge_rejects_nonpositive_t() -> None:
    with pytest.raises(DomainError):
        birge_tail_bound(3, 1.0, 0.0)


def test_info_density_moments_closed_form() -> None:
    moments = gaussian_info_density_moments(1.0, 1.0)
    assert moments.mean == pytest.approx(0.5 * math.log(2.0))
    assert moments.variance == pytest.approx(0.5)
    assert moments.abs_third_central > 0
    assert moments.berry_esseen_ratio == pytest.approx(2.546, abs=0.02)


def test_quadrature_agrees_with_closed_form() -> None:
    exact = gaussian_info_density_moments(3.0, 1.0)
    mean, variance, third = gauss_hermite_moments(3.0, 1.0, 64)
    assert mean == pytest.approx(exact.mean, abs=1e-10)
    assert variance == pytest.approx(exact.variance, abs=1e-10)
    # |.|^3 is not polynomial so quadrature converges slowly
    assert third == pytest.approx(exact.abs_third_central, rel=2e-2)


def test_info_density_moments_reject_nonpositive() -> None:
    with pytest.raises(DomainError):
        gaussian_info_density_moments(0.0, 1.0)
