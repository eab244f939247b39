"""Lag-window estimation of the quantile spectral density.

``Ghat(x, y; omega_k) = (1/2pi) sum_{|r|<=M} lambda(r/M) Chat_r(x, y) exp(i r omega_k)``
on the Fourier frequencies ``omega_k = 2 pi k / T``, ``k = 1..T``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sp_fft
from scipy.stats import norm
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .indicators import (
    QuantileGrid,
    build_panel,
    default_levels,
    quantile_cov_all,
    rank_panel,
)
from .lag_window import LagWindow, kernel_K_fourier
from .validation import check_bandwidth, check_series

__all__ = [
    "QsdEstimate",
    "fourier_frequencies",
    "spectrum_from_cov",
    "estimate_qsd",
    "estimate_qsd_periodogram",
    "estimate_copula_qsd",
    "circular_smooth",
    "band_variances",
    "confidence_band",
    "confidence_bands",
    "QuantileSpectralDensity",
]


def fourier_frequencies(T: int) -> np.ndarray:
    """``omega_k = 2 pi k / T`` for ``k = 1..T`` (the last one is ``2 pi``, i.e. zero)."""
    return 2 * np.pi * np.arange(1, T + 1) / T


@dataclass(frozen=True)
class QsdEstimate:
    """Estimated ``Ghat`` with shape ``(q, q, T)``; ``values[..., k-1]`` is frequency ``omega_k``."""

    values: np.ndarray
    grid: QuantileGrid
    window: LagWindow
    T: int
    cov: np.ndarray = field(repr=False, default=None)
    copula: bool = False

    @property
    def omega(self) -> np.ndarray:
        return fourier_frequencies(self.T)

    @property
    def q(self) -> int:
        return self.grid.q


def spectrum_from_cov(cov: np.ndarray, lag_weights: np.ndarray, T: int) -> np.ndarray:
    """``(1/2pi) sum_r w_r cov_r exp(i r omega_k)`` for ``k = 1..T``.

    ``cov`` has shape ``(2M+1, ...)`` indexed by ``r = -M..M``; the result has
    the frequency axis last.  Lags larger than ``T/2`` are folded onto the grid,
    which is exact because ``exp(i r omega_k)`` is ``T``-periodic in ``r``.
    """
    M = (cov.shape[0] - 1) // 2
    tapered = cov * np.reshape(lag_weights, (-1,) + (1,) * (cov.ndim - 1))
    buf = np.zeros((T,) + cov.shape[1:], dtype=cov.dtype)
    np.add.at(buf, np.arange(-M, M + 1) % T, tapered)
    # sum_r a_r exp(i r omega_k) = T * ifft(a)[k]; rotate so k = 1..T
    spec = sp_fft.ifft(buf, axis=0) * (T / (2 * np.pi))
    spec = np.roll(spec, -1, axis=0)
    return np.moveaxis(spec, 0, -1)


def _hermitize(values: np.ndarray) -> np.ndarray:
    values = 0.5 * (values + np.conj(np.swapaxes(values, 0, 1)))
    idx = np.arange(values.shape[0])
    values[idx, idx, :] = values[idx, idx, :].real
    return values


def _estimate_from_panel(panel, grid, window, copula):
    T = panel.T
    check_bandwidth(window.M, T)
    cov = quantile_cov_all(panel, window.M)
    values = _hermitize(spectrum_from_cov(cov, window.weights(), T))
    return QsdEstimate(values, grid, window, T, cov, copula)


def estimate_qsd(series, grid: QuantileGrid, window: LagWindow) -> QsdEstimate:
    """Lag-window estimate of the quantile spectral density at the grid thresholds."""
    x = check_series(series)
    panel = build_panel(x, grid)
    return _estimate_from_panel(panel, grid, window, copula=False)


def estimate_copula_qsd(series, levels, window: LagWindow) -> QsdEstimate:
    """Copula (rank-based) variant; invariant under strictly increasing transforms."""
    x = check_series(series)
    levels = np.asarray(levels, dtype=float)
    panel = rank_panel(x, levels)
    grid = QuantileGrid(levels, levels)
    return _estimate_from_panel(panel, grid, window, copula=True)


def estimate_qsd_periodogram(series, grid: QuantileGrid, window: LagWindow, n_freq=None) -> np.ndarray:
    """Kernel-smoothed cross-periodogram form of the estimator.

    Computes ``sum_s K_N(omega_k - nu_s) J(x_i; nu_s) conj(J(x_j; nu_s))`` with
    ``J(x; nu) = (2 pi T)^{-1/2} sum_t Z_t(x) exp(-i t nu)`` on the grid
    ``nu_s = 2 pi s / N``, evaluated at the ``T`` Fourier frequencies.

    With ``N >= T + M`` (the default) no lag wraps around and the result
    equals :func:`estimate_qsd`; with ``N = T`` the periodogram carries
    circular covariances and the two differ by ``O(M/T)``.
    """
    x = check_series(series)
    T = x.size
    M = check_bandwidth(window.M, T)
    N = sp_fft.next_fast_len(T + M + 1) if n_freq is None else int(n_freq)
    Z = build_panel(x, grid).Z
    D = sp_fft.fft(Z, n=N, axis=0)  # sum_t Z_t exp(-i t nu_s), t from 0
    I = D[:, :, None] * np.conj(D)[:, None, :] / (2 * np.pi * T)  # [s, i, j]
    # smoothing against K_N on the N-grid: sum_s K_N(theta - nu_s) I(nu_s)
    # = (1/2pi) sum_r lambda_r c_r exp(i r theta) with c_r = (2pi/N) sum_s I(nu_s) exp(-i r nu_s)
    c = sp_fft.fft(I, axis=0) * (2 * np.pi / N)
    r = np.arange(-M, M + 1)
    c_lags = c[r % N]
    lam = window.weights()
    omega = fourier_frequencies(T)
    phase = np.exp(1j * np.outer(r, omega))  # [r, k]
    vals = np.einsum("r,rij,rk->ijk", lam, c_lags, phase) / (2 * np.pi)
    return vals


def circular_smooth(values: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """``out[..., k] = sum_s kernel[(k - s) mod T] values[..., s]`` along the last axis."""
    kf = sp_fft.fft(kernel)
    return sp_fft.ifft(sp_fft.fft(values, axis=-1) * kf, axis=-1)


def band_variances(est: QsdEstimate):
    """Plug-in asymptotic covariance of ``(Re Ghat, Im Ghat)`` at every ``(i, j, k)``.

    Returns ``(V_re, V_im, V_cross)``, each ``(q, q, T)``: the entries of
    ``sum_s K(omega_k - omega_s)^2 [[A, C], [C, B]](omega_s)``.
    """
    G = est.values
    d = np.real(np.einsum("iik->ik", G))
    prod = d[:, None, :] * d[None, :, :]
    re2, im2 = G.real**2, G.imag**2
    A = 0.5 * (prod + re2 - im2)
    B = 0.5 * (prod + im2 - re2)
    C = G.real * G.imag
    K2 = kernel_K_fourier(est.window, est.T) ** 2
    # values[..., k-1] is omega_k, so index offsets are unchanged
    return tuple(np.real(circular_smooth(X, K2)) for X in (A, B, C))


def _check_interior(T: int, k: int) -> None:
    if not 0 < 2 * k < T:
        raise ValueError(f"frequency index k={k} (omega={2 * np.pi * k / T:.4f}) is not in (0, pi)")


def confidence_band(est: QsdEstimate, i: int, j: int, k: int, alpha: float = 0.05):
    """Pointwise Gaussian intervals for ``Re`` and ``Im`` of ``Ghat(x_i, x_j; omega_k)``.

    ``k`` is the 1-based Fourier index; only ``0 < omega_k < pi`` is allowed.
    Returns ``((re_lo, re_hi), (im_lo, im_hi))``.
    """
    _check_interior(est.T, k)
    G = est.values
    d = np.real(np.einsum("iik->ik", G))
    g = G[i, j]
    prod = d[i] * d[j]
    A = 0.5 * (prod + g.real**2 - g.imag**2)
    B = 0.5 * (prod + g.imag**2 - g.real**2)
    K = kernel_K_fourier(est.window, est.T)
    s = np.arange(est.T)
    K2 = K[(k - 1 - s) % est.T] ** 2
    v_re, v_im = float(K2 @ A), float(K2 @ B)
    z = norm.ppf(1 - alpha / 2)
    c = G[i, j, k - 1]
    return (
        (c.real - z * np.sqrt(v_re), c.real + z * np.sqrt(v_re)),
        (c.imag - z * np.sqrt(v_im), c.imag + z * np.sqrt(v_im)),
    )


def confidence_bands(est: QsdEstimate, alpha: float = 0.05) -> dict:
    """Vectorised :func:`confidence_band` over all entries; NaN outside ``(0, pi)``."""
    v_re, v_im, _ = band_variances(est)
    z = norm.ppf(1 - alpha / 2)
    k = np.arange(1, est.T + 1)
    interior = (2 * k > 0) & (2 * k < est.T)
    half_re = np.where(interior, z * np.sqrt(np.maximum(v_re, 0)), np.nan)
    half_im = np.where(interior, z * np.sqrt(np.maximum(v_im, 0)), np.nan)
    G = est.values
    return {
        "re_lo": G.real - half_re,
        "re_hi": G.real + half_re,
        "im_lo": G.imag - half_im,
        "im_hi": G.imag + half_im,
    }


class QuantileSpectralDensity(BaseEstimator):
    """Quantile (or copula) spectral density estimator with a scikit-learn interface.

    Parameters
    ----------
    M : int
        Lag-window bandwidth; lags ``|r| <= M`` are kept.
    window : {"bartlett", "truncated"} or LagWindow
        Taper applied to the sample quantile covariances.
    levels : array-like, optional
        CDF levels of the grid; defaults to 0.05, 0.10, ..., 0.95.
    grid : QuantileGrid, optional
        Explicit thresholds.  Overrides ``levels`` (plain estimator only).
    copula : bool
        Estimate the rank-based copula spectral density instead.

    Attributes
    ----------
    estimate_ : QsdEstimate
    values_ : ndarray of shape (q, q, T)
    grid_ : QuantileGrid
    omega_ : ndarray of shape (T,)
    """

    def __init__(self, M=10, window="bartlett", levels=None, grid=None, copula=False):
        self.M = M
        self.window = window
        self.levels = levels
        self.grid = grid
        self.copula = copula

    def _window(self) -> LagWindow:
        if isinstance(self.window, LagWindow):
            return LagWindow(self.window.kind, self.M, self.window.a, self.window.b)
        return LagWindow(self.window, self.M)

    def fit(self, X, y=None):
        x = check_series(X)
        window = self._window()
        levels = default_levels() if self.levels is None else np.asarray(self.levels, dtype=float)
        if self.copula:
            est = estimate_copula_qsd(x, levels, window)
        else:
            grid = self.grid if self.grid is not None else QuantileGrid.from_sample(x, levels)
            est = estimate_qsd(x, grid, window)
        self.estimate_ = est
        self.values_ = est.values
        self.grid_ = est.grid
        self.omega_ = est.omega
        return self

    def confidence_bands(self, alpha=0.05) -> dict:
        check_is_fitted(self, "estimate_")
        return confidence_bands(self.estimate_, alpha)
