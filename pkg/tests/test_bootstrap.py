import numpy as np
import pytest
from scipy.stats import skew

import qspec.bootstrap as bs
from qspec.bootstrap import (
    NotPSDError,
    bootstrap_pvalue,
    bootstrap_samples,
    draw_bootstrap_periodograms,
    hermitian_sqrt,
    plus_one_pvalue,
    smooth_periodograms,
    spectral_matrix_set,
)
from qspec.gof import null_moments
from qspec.lag_window import LagWindow
from qspec.null_models import AR1, null_tables

LEVELS = np.linspace(0.1, 0.9, 5)


def _identity_set(T, q):
    G = np.broadcast_to(np.eye(q)[:, :, None], (q, q, T)).astype(complex)
    return spectral_matrix_set(G)


def test_sqrt_examples(rng):
    np.testing.assert_allclose(hermitian_sqrt(np.eye(3)), np.eye(3), atol=1e-14)
    np.testing.assert_allclose(hermitian_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]), atol=1e-14)
    B = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    A = B @ B.conj().T
    R = hermitian_sqrt(A)
    np.testing.assert_allclose(R @ R, A, atol=1e-8)
    np.testing.assert_allclose(R, R.conj().T, atol=1e-12)
    assert np.linalg.eigvalsh(R).min() >= -1e-10


def test_sqrt_clips_tiny_and_rejects_negative():
    R = hermitian_sqrt(np.diag([1.0, -1e-10]))
    np.testing.assert_allclose(R, np.diag([1.0, 0.0]), atol=1e-14)
    with pytest.raises(NotPSDError):
        hermitian_sqrt(np.diag([1.0, -1e-3]))


def test_spectral_matrix_set_invariants():
    tables = null_tables(AR1(0, 0.6, 1), LEVELS, 10)
    T = 64
    mset = spectral_matrix_set(tables.spectrum(T))
    G = mset.matrices
    np.testing.assert_allclose(G, np.conj(np.swapaxes(G, 1, 2)), atol=1e-12)
    assert np.linalg.eigvalsh(G).min() >= -1e-10
    np.testing.assert_allclose(mset.sqrts @ mset.sqrts, G, atol=1e-8)
    k = np.arange(1, T)
    np.testing.assert_array_equal(G[k - 1], np.conj(G[T - k - 1]))


def test_complex_wishart_mean_identity():
    T, q, n = 4, 5, 10_000
    mset = _identity_set(T, q)
    acc = np.zeros((q, q), dtype=complex)
    for c in np.random.SeedSequence(1).spawn(n):
        acc += draw_bootstrap_periodograms(mset, np.random.default_rng(c))[0]
    np.testing.assert_allclose(acc / n, np.eye(q), atol=0.05)


def test_periodogram_mean_matches_spectrum():
    tables = null_tables(AR1(0, 0.7, 1), LEVELS, 20)
    T, n, k = 16, 10_000, 3
    mset = spectral_matrix_set(tables.spectrum(T))
    draws = np.stack([draw_bootstrap_periodograms(mset, np.random.default_rng(c))[[k - 1, T - 1]]
                      for c in np.random.SeedSequence(2).spawn(n)])
    mean = draws.mean(axis=0)
    se_re = draws.real.std(axis=0, ddof=1) / np.sqrt(n)
    se_im = draws.imag.std(axis=0, ddof=1) / np.sqrt(n)
    target = mset.matrices[[k - 1, T - 1]]
    assert np.all(np.abs(mean.real - target.real) <= 3 * se_re + 1e-15)
    assert np.all(np.abs(mean.imag - target.imag) <= 3 * se_im + 1e-15)


def test_draw_structure(rng):
    tables = null_tables(AR1(0, 0.5, 1), LEVELS, 8)
    for T in (31, 32):
        mset = spectral_matrix_set(tables.spectrum(T))
        I = draw_bootstrap_periodograms(mset, rng)
        k = np.arange(1, T)
        np.testing.assert_array_equal(I[k - 1], np.conj(I[T - k - 1]))
        for kk in bs.self_conjugate_indices(T):
            assert np.all(I[kk - 1].imag == 0)
        np.testing.assert_allclose(I, np.conj(np.swapaxes(I, 1, 2)), atol=1e-14)
        assert np.all(np.linalg.matrix_rank(I, tol=1e-10) <= 1)
        assert np.linalg.eigvalsh(I).min() >= -1e-12
        smooth = smooth_periodograms(I, LagWindow("bartlett", 8))
        assert np.linalg.eigvalsh(smooth).min() >= -1e-10


def test_same_seed_same_draw():
    mset = _identity_set(10, 3)
    np.testing.assert_array_equal(draw_bootstrap_periodograms(mset, 5), draw_bootstrap_periodograms(mset, 5))


def test_lag_scoring_equals_frequency_smoothing():
    tables = null_tables(AR1(0, 0.5, 1), LEVELS, 6)
    T = 40
    window = LagWindow("bartlett", 6)
    mset = spectral_matrix_set(tables.spectrum(T))
    w = tables.grid.weights
    lag = bootstrap_samples(mset, window, w, 5, seed=8, C0=tables.lags(6))
    # the sampler drops the zero-weight threshold before drawing
    keep = w > 0
    sub = bs.SpectralMatrixSet(mset.matrices[:, keep][:, :, keep], mset.sqrts[:, keep][:, :, keep])
    G0 = np.moveaxis(tables.tapered_spectrum(window, T), -1, 0)[:, keep][:, :, keep]
    freq = []
    for g in bs._replicate_rngs(8, 5):
        I = draw_bootstrap_periodograms(sub, g)
        d = np.abs(smooth_periodograms(I, window) - G0) ** 2
        freq.append(2 * np.pi / T * np.einsum("kij,i,j->", d, w[keep], w[keep]))
    np.testing.assert_allclose(lag, freq, rtol=1e-8)


def test_batching_does_not_change_samples(monkeypatch):
    tables = null_tables(AR1(0, 0.5, 1), LEVELS, 6)
    mset = spectral_matrix_set(tables.spectrum(50))
    args = (mset, LagWindow("bartlett", 6), tables.grid.weights, 40)
    a = bootstrap_samples(*args, seed=4, C0=tables.lags(6))
    monkeypatch.setattr(bs, "CHUNK", 7)
    b = bootstrap_samples(*args, seed=4, C0=tables.lags(6))
    np.testing.assert_array_equal(a, b)


def test_pvalue_limits():
    tables = null_tables(AR1(0, 0.5, 1), LEVELS, 6)
    window = LagWindow("bartlett", 6)
    p0, s = bootstrap_pvalue(0.0, tables, window, 60, reps=100, seed=1)
    assert p0 == 1.0 and np.all(s >= 0)
    pinf, _ = bootstrap_pvalue(np.inf, tables, window, 60, reps=100, seed=1)
    assert pinf == pytest.approx(1 / 101)
    with pytest.raises(ValueError):
        bootstrap_pvalue(1.0, tables, window, 60, reps=99)
    assert plus_one_pvalue(1.0, np.array([0.5, 1.0, 2.0])) == pytest.approx(3 / 4)


def test_bootstrap_mean_matches_exact_finite_sample_mean():
    # the exact Wishart mean carries the (w, -w) pair term on top of E_T
    tables = null_tables(AR1(0, 0.5, 1), None, 40)
    T, M = 256, 12
    window = LagWindow("bartlett", M)
    E_exact, _ = null_moments(tables, window, T, conjugate_term=True)
    mset = spectral_matrix_set(tables.spectrum(T))
    s = bootstrap_samples(mset, window, tables.grid.weights, 1000, seed=6, C0=tables.lags(M))
    assert abs(s.mean() - E_exact) <= 3 * s.std(ddof=1) / np.sqrt(s.size)
    assert skew(s) > 0


def test_unknown_statistic():
    mset = _identity_set(20, 2)
    with pytest.raises(ValueError):
        bootstrap_samples(mset, LagWindow("bartlett", 3), np.array([0, 1.0]), 2, statistic="other")
