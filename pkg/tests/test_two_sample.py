import warnings

import numpy as np
import pytest
from scipy.stats import norm

from qspec.estimator import estimate_qsd
from qspec.gof import null_moments
from qspec.indicators import QuantileGrid
from qspec.lag_window import LagWindow
from qspec.null_models import AR1, IID, null_tables, simulate
from qspec.simulation import model_pair
from qspec.two_sample import (
    TwoSampleReport,
    align_lengths,
    p_statistic,
    r_statistic,
    r_statistic_lag,
    reversibility_test,
    two_sample_moments,
    two_sample_test,
)
from qspec.validation import DataError

LEVELS9 = np.linspace(0.1, 0.9, 9)


def test_p_zero_for_identical_series(rng):
    x = rng.standard_normal(150)
    assert p_statistic(x, x, None, LagWindow("bartlett", 8)) == 0.0


def test_p_symmetric(rng):
    x, y = rng.standard_normal(150), rng.standard_exponential(150)
    w = LagWindow("bartlett", 8)
    assert p_statistic(x, y, None, w) == pytest.approx(p_statistic(y, x, None, w), rel=1e-12)


def test_length_alignment(rng):
    x = rng.standard_normal(100)
    with pytest.warns(UserWarning, match="truncating"):
        a, b = align_lengths(x, x[:95])
    assert a.size == b.size == 95
    with pytest.raises(DataError):
        align_lengths(x, x[:80])


def test_moments_double_for_equal_spectra():
    tables = null_tables(IID("norm"), None, 0)
    window = LagWindow("bartlett", 10)
    T = 256
    G = tables.spectrum(T)
    E, V = null_moments(tables, window, T)
    E3, V3 = two_sample_moments(G, G, window, T, tables.grid.weights)
    assert E3 == pytest.approx(2 * E, rel=1e-12)
    assert V3 == pytest.approx(4 * V, rel=1e-12)


def test_moment_scaling_in_bandwidth():
    tables = null_tables(IID("norm"), None, 0)
    T = 512
    G = tables.spectrum(T)
    res = [two_sample_moments(G, G, LagWindow("bartlett", M), T, tables.grid.weights) for M in (8, 16, 32)]
    for (E1, V1), (E2, V2) in zip(res, res[1:]):
        assert E2 / E1 == pytest.approx(2.0, rel=0.15)
        assert V2 / V1 == pytest.approx(2.0, rel=0.15)


def test_p_mean_matches_two_sample_mean():
    T, M = 512, 16
    model = AR1(0, 0.5, 1)
    tables = null_tables(model, None, 40)
    window = LagWindow("bartlett", M)
    E, _ = null_moments(tables, window, T)
    P = []
    for c in np.random.SeedSequence(21).spawn(500):
        a, b = (simulate(model, T, np.random.default_rng(s)) for s in c.spawn(2))
        P.append(p_statistic(a, b, tables.grid, window))
    assert np.mean(P) == pytest.approx(2 * E, rel=0.15)


def test_two_sample_report(rng):
    model = AR1(0, 0.5, 1)
    x, y = simulate(model, 300, rng), simulate(model, 300, rng)
    rep = two_sample_test(x, y, LagWindow("bartlett", 10))
    assert isinstance(rep, TwoSampleReport)
    assert rep.P_T >= 0 and rep.E_T3 > 0 and rep.V_T3 > 0
    assert rep.z == pytest.approx((rep.P_T - rep.E_T3) / np.sqrt(rep.V_T3))
    assert rep.p_normal == pytest.approx(norm.sf(abs(rep.z)))
    assert rep.reject(0.05) == (abs(rep.z) > norm.ppf(0.95))


def test_two_sample_power_against_matched_arch():
    ar, arch = model_pair("ar1", 0.5)
    window = LagWindow("bartlett", 14)
    rej = []
    for c in np.random.SeedSequence(31).spawn(30):
        a, b = c.spawn(2)
        rej.append(two_sample_test(simulate(ar, 500, np.random.default_rng(a)),
                                   simulate(arch, 500, np.random.default_rng(b)), window).reject(0.05))
    assert np.mean(rej) >= 0.95


def test_r_zero_for_single_point(rng):
    x = rng.standard_normal(100)
    grid = QuantileGrid(np.array([0.0]), np.array([0.5]))
    assert r_statistic(x, grid, LagWindow("bartlett", 5)) == 0.0


def test_r_lag_and_frequency_forms_agree(rng):
    x = rng.standard_exponential(300) ** 2
    grid = QuantileGrid.from_sample(x, LEVELS9)
    window = LagWindow("bartlett", 10)
    assert r_statistic_lag(estimate_qsd(x, grid, window)) == pytest.approx(r_statistic(x, grid, window), rel=1e-8)


def test_r_invariant_under_time_reversal(rng):
    z = rng.standard_normal(301)
    x = z[1:] + z[:-1] ** 2
    grid = QuantileGrid.from_sample(x, LEVELS9)
    window = LagWindow("bartlett", 8)
    assert r_statistic(x[::-1], grid, window) == pytest.approx(r_statistic(x, grid, window), rel=1e-10)


def test_r_small_for_gaussian_relative_to_irreversible():
    window = LagWindow("bartlett", 10)
    g = np.random.default_rng(3)
    x = simulate(AR1(0, 0.5, 1), 4000, g)
    z = g.standard_normal(4001)
    y = z[1:] + z[:-1] ** 2
    assert r_statistic(x, None, window) < 0.2 * r_statistic(y, None, window)


def test_reversibility_degenerate_and_labels():
    x = np.tile([0.0, 1.0], 30)
    grid = QuantileGrid(np.array([0.5]), np.array([0.5]))
    rep = reversibility_test(x, grid, LagWindow("bartlett", 4), reps=100, seed=1)
    assert rep.statistic == 0.0 and rep.p_bootstrap == 1.0
    assert "extension" in rep.settings["null"]
    with pytest.raises(ValueError):
        reversibility_test(x, grid, LagWindow("bartlett", 4), reps=50)


def test_reversibility_power():
    window = LagWindow("bartlett", 10)
    p = []
    for c in np.random.SeedSequence(3).spawn(20):
        z = np.random.default_rng(c).standard_normal(1001)
        p.append(reversibility_test(z[1:] + z[:-1] ** 2, None, window, reps=100, seed=1).p_bootstrap)
    assert np.mean(np.array(p) < 0.05) > 0.8


@pytest.mark.slow
def test_reversibility_level_iid():
    window = LagWindow("bartlett", 5)
    p = []
    for c in np.random.SeedSequence(4).spawn(300):
        x = np.random.default_rng(c).standard_normal(128)
        grid = QuantileGrid.from_sample(x, LEVELS9)
        p.append(reversibility_test(x, grid, window, reps=100, seed=c).p_bootstrap)
    assert 0.02 <= np.mean(np.array(p) < 0.05) <= 0.10
