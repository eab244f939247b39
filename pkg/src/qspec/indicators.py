"""Indicator processes and their lagged cross-covariances.

A threshold ``x`` turns a series into ``Z_t(x) = 1{X_t <= x} - Fhat(x)``; the
quantile covariance at lag ``r`` is ``Chat_r(x, y) = (1/T) sum_t Z_t(x) Z_{t+r}(y)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft as sp_fft

__all__ = [
    "QuantileGrid",
    "IndicatorPanel",
    "empirical_cdf",
    "build_panel",
    "rank_panel",
    "quantile_cov_all",
    "default_levels",
    "parse_levels",
]


def default_levels() -> np.ndarray:
    """Levels 0.05, 0.10, ..., 0.95."""
    return np.round(np.arange(1, 20) * 0.05, 10)


def parse_levels(text: str) -> np.ndarray:
    """Parse ``start:stop:step`` (inclusive stop) or a comma list of levels."""
    if ":" in text:
        start, stop, step = (float(v) for v in text.split(":"))
        n = int(round((stop - start) / step)) + 1
        return np.round(start + step * np.arange(n), 10)
    return np.array([float(v) for v in text.split(",")])


@dataclass(frozen=True)
class QuantileGrid:
    """Thresholds ``x_1 < ... < x_q`` with their null CDF levels.

    ``weights[i] = levels[i] - levels[i-1]`` for ``i >= 1`` and ``weights[0] = 0``,
    so the first threshold never enters a weighted sum.
    """

    thresholds: np.ndarray
    levels: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.thresholds, dtype=float).ravel()
        u = np.asarray(self.levels, dtype=float).ravel()
        if x.size == 0:
            raise ValueError("quantile grid is empty")
        if x.shape != u.shape:
            raise ValueError("thresholds and levels must have the same length")
        if not np.all(np.isfinite(x)):
            raise ValueError("grid thresholds must be finite")
        if np.any(np.diff(x) <= 0):
            raise ValueError("grid thresholds must be strictly increasing")
        if np.any(np.diff(u) <= 0) or u[0] <= 0 or u[-1] >= 1:
            raise ValueError("grid levels must be strictly increasing inside (0, 1)")
        x.setflags(write=False)
        u.setflags(write=False)
        object.__setattr__(self, "thresholds", x)
        object.__setattr__(self, "levels", u)

    @property
    def q(self) -> int:
        return self.thresholds.size

    @property
    def weights(self) -> np.ndarray:
        w = np.empty(self.q)
        w[0] = 0.0
        w[1:] = np.diff(self.levels)
        return w

    def to_dict(self) -> dict:
        return {"thresholds": self.thresholds.tolist(), "levels": self.levels.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "QuantileGrid":
        return cls(np.asarray(d["thresholds"]), np.asarray(d["levels"]))

    def __eq__(self, other):
        if not isinstance(other, QuantileGrid):
            return NotImplemented
        return np.array_equal(self.thresholds, other.thresholds) and np.array_equal(
            self.levels, other.levels
        )

    def __hash__(self):
        return hash((self.thresholds.tobytes(), self.levels.tobytes()))

    @classmethod
    def from_sample(cls, x, levels=None) -> "QuantileGrid":
        """Grid at the empirical quantiles of ``x``; levels are the empirical CDF there."""
        x = np.asarray(x, dtype=float)
        levels = default_levels() if levels is None else np.asarray(levels, dtype=float)
        xs = np.sort(x)
        n = xs.size
        # smallest order statistic with Fhat >= level
        idx = np.ceil(levels * n - 1e-9).astype(int) - 1
        thr = xs[np.clip(idx, 0, n - 1)]
        thr, first = np.unique(thr, return_index=True)
        lev = np.searchsorted(xs, thr, side="right") / n
        keep = (lev > 0) & (lev < 1)
        return cls(thr[keep], lev[keep])


@dataclass(frozen=True)
class IndicatorPanel:
    """``Z[t, i] = 1{X_t <= x_i} - Fhat(x_i)`` together with ``Fhat``."""

    Z: np.ndarray
    Fhat: np.ndarray

    @property
    def T(self) -> int:
        return self.Z.shape[0]


def empirical_cdf(series, x):
    """Fraction of observations ``<= x`` (right-continuous)."""
    xs = np.sort(np.asarray(series, dtype=float))
    out = np.searchsorted(xs, x, side="right") / xs.size
    return out if np.ndim(out) else float(out)


def _panel_from_indicators(ind: np.ndarray) -> IndicatorPanel:
    T = ind.shape[0]
    counts = ind.sum(axis=0)
    Fhat = counts / T
    Z = ind - Fhat
    return IndicatorPanel(Z, Fhat)


def build_panel(series, grid) -> IndicatorPanel:
    """Centered indicator panel of ``series`` at the grid thresholds."""
    x = np.asarray(series, dtype=float)
    thr = grid.thresholds if isinstance(grid, QuantileGrid) else np.asarray(grid, dtype=float)
    thr = np.atleast_1d(thr)
    if thr.size == 0:
        raise ValueError("quantile grid is empty")
    if not np.all(np.isfinite(thr)):
        raise ValueError("grid thresholds must be finite")
    ind = (x[:, None] <= thr[None, :]).astype(float)
    return _panel_from_indicators(ind)


def rank_panel(series, levels) -> IndicatorPanel:
    """Panel built from ``Fhat(X_t)`` thresholded at ``levels``.

    Depends on the data only through ranks, so any strictly increasing
    transform of the input gives a bit-identical panel.
    """
    x = np.asarray(series, dtype=float)
    u = np.atleast_1d(np.asarray(levels, dtype=float))
    if u.size == 0:
        raise ValueError("level grid is empty")
    if np.any(u <= 0) or np.any(u >= 1):
        raise ValueError("levels must lie strictly inside (0, 1)")
    if np.any(np.diff(u) <= 0):
        raise ValueError("levels must be strictly increasing")
    T = x.size
    ranks = np.searchsorted(np.sort(x), x, side="right")  # rank_<=(X_t)
    ind = (ranks[:, None] <= u[None, :] * T).astype(float)
    return _panel_from_indicators(ind)


def _fft_size(T: int) -> int:
    return sp_fft.next_fast_len(2 * T, real=True)


def quantile_cov_all(panel: IndicatorPanel | np.ndarray, max_lag: int, method: str = "auto") -> np.ndarray:
    """All quantile covariances up to ``max_lag``.

    Returns ``C`` with shape ``(2M+1, q, q)`` where ``C[M + r, i, j] = Chat_r(x_i, x_j)``
    for ``r = -M..M``; negative lags satisfy ``Chat_{-r}(x, y) = Chat_r(y, x)``.

    ``method="fft"`` correlates zero-padded columns in the frequency domain;
    ``"direct"`` forms one ``q x q`` lagged product per lag, which is cheaper
    for very long panels with few lags.  ``"auto"`` picks by cost.
    """
    Z = panel.Z if isinstance(panel, IndicatorPanel) else np.asarray(panel, dtype=float)
    T, q = Z.shape
    M = int(max_lag)
    if M >= T:
        raise ValueError(f"max_lag={M} must be smaller than T={T}")
    if method == "auto":
        method = "direct" if (T * q > 2_000_000 or M + 1 < np.log2(T)) else "fft"
    if method == "fft":
        pos = _lagged_fft(Z, M)
    elif method == "direct":
        pos = np.stack([Z[: T - r].T @ Z[r:] for r in range(M + 1)]) / T
    else:
        raise ValueError(f"unknown method {method!r}")
    C = np.empty((2 * M + 1, q, q))
    C[M:] = pos
    C[:M] = np.transpose(pos[1:][::-1], (0, 2, 1))
    if isinstance(panel, IndicatorPanel):
        # (1/T) sum_t Z_t(x)^2 equals Fhat(1 - Fhat) for binary indicators
        idx = np.arange(q)
        C[M, idx, idx] = panel.Fhat * (1.0 - panel.Fhat)
    return C


def _lagged_fft(Z: np.ndarray, M: int) -> np.ndarray:
    T, q = Z.shape
    n = _fft_size(T)
    F = sp_fft.rfft(Z, n=n, axis=0)
    pos = np.empty((M + 1, q, q))
    # sum_t Z_t(i) Z_{t+r}(j) = irfft(conj(F_i) F_j)[r]
    for i in range(q):
        cross = sp_fft.irfft(np.conj(F[:, i : i + 1]) * F, n=n, axis=0)
        pos[:, i, :] = cross[: M + 1]
    return pos / T
