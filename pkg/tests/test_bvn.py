import numpy as np
import pytest
from scipy.stats import multivariate_normal, norm

from qspec.bvn import bivariate_normal_cdf


def test_examples():
    assert bivariate_normal_cdf(0.0, 0.0, 0.0) == pytest.approx(0.25, abs=1e-15)
    assert bivariate_normal_cdf(np.inf, 0.7, 0.3) == pytest.approx(norm.cdf(0.7), abs=1e-15)
    assert bivariate_normal_cdf(0.0, 0.0, 0.5) == pytest.approx(1 / 3, abs=1e-14)


@pytest.mark.parametrize("rho", [-0.99, -0.95, -0.6, -0.1, 0.2, 0.5, 0.8, 0.93, 0.999])
def test_against_scipy(rho):
    h = np.array([-2.5, -1.0, 0.0, 0.3, 1.7])
    k = np.array([-0.5, 0.4, 2.2, -1.9, 1.7])
    mvn = multivariate_normal(mean=[0, 0], cov=[[1, rho], [rho, 1]])
    ref = np.array([mvn.cdf([a, b]) for a, b in zip(h, k)])
    np.testing.assert_allclose(bivariate_normal_cdf(h, k, rho), ref, atol=1e-7)


def test_arcsin_identity():
    for rho in np.linspace(-0.95, 0.95, 11):
        assert bivariate_normal_cdf(0.0, 0.0, rho) == pytest.approx(0.25 + np.arcsin(rho) / (2 * np.pi), abs=1e-14)


def test_monte_carlo_oracle():
    rng = np.random.default_rng(0)
    n = 10**7
    z1 = rng.standard_normal(n)
    z2 = 0.5 * z1 + np.sqrt(0.75) * rng.standard_normal(n)
    p = np.mean((z1 <= 0) & (z2 <= 0))
    se = np.sqrt(p * (1 - p) / n)
    assert abs(p - bivariate_normal_cdf(0.0, 0.0, 0.5)) < 4 * se


def test_degenerate_and_errors():
    assert bivariate_normal_cdf(0.3, 0.5, 1.0) == pytest.approx(norm.cdf(0.3))
    assert bivariate_normal_cdf(0.3, 0.5, -1.0) == pytest.approx(norm.cdf(0.3) - norm.cdf(-0.5))
    assert bivariate_normal_cdf(-np.inf, 0.5, 0.2) == 0.0
    with pytest.raises(ValueError):
        bivariate_normal_cdf(0.0, 0.0, 1.5)
