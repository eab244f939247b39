"""Goodness-of-fit test of a conjectured quantile spectral density.

The statistic is the weighted squared distance between the estimate and the
lag-window-tapered null spectrum,

    Q_T = (2 pi / T) sum_k sum_{i, j >= 2} |Ghat(x_i, x_j; w_k) - G0^M(x_i, x_j; w_k)|^2 w_i w_j,

which by Parseval equals ``(1/2pi) sum_r lambda_M(r)^2 sum w_i w_j (Chat_r - C0_r)^2``.
Its null mean ``E_T`` and variance ``V_T`` are computed from the null spectral
matrices under the same normalisation, and ``(Q_T - E_T)/sqrt(V_T)`` is
referred to the upper tail of a standard normal.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import norm
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .estimator import QsdEstimate, estimate_qsd
from .indicators import QuantileGrid
from .lag_window import LagWindow, delta_M
from .null_models import NullModelTables
from .validation import NumericalIntegrityError, check_series

__all__ = [
    "TestReport",
    "q_statistic",
    "q_statistic_lag",
    "q_statistic_freq",
    "null_moments",
    "moments_from_spectra",
    "gof_test",
    "deviation_measure",
    "QuantileGOFTest",
]

TWO_PI = 2 * np.pi


@dataclass
class TestReport:
    """Outcome of a quadratic-distance test.

    ``p_normal`` is the upper-tail normal p-value ``1 - Phi(z)``;
    ``p_bootstrap`` is filled when a bootstrap was requested.
    """

    __test__ = False  # not a pytest class despite the name

    statistic: float
    E_T: float
    V_T: float
    z: float
    p_normal: float
    p_bootstrap: float | None = None
    bootstrap_reps: int | None = None
    test: str = "gof"
    settings: dict = field(default_factory=dict)

    def reject(self, alpha: float, method: str = "normal") -> bool:
        p = self.p_normal if method == "normal" else self.p_bootstrap
        if p is None:
            raise ValueError(f"no {method} p-value in this report")
        return bool(p < alpha)

    def to_dict(self) -> dict:
        return asdict(self)

    def summary(self) -> str:
        line = f"{self.test}: statistic={self.statistic:.6g} z={self.z:.4f} p_normal={self.p_normal:.4g}"
        if self.p_bootstrap is not None:
            line += f" p_bootstrap={self.p_bootstrap:.4g} (reps={self.bootstrap_reps})"
        return line


def _check_grid(tables: NullModelTables, grid: QuantileGrid) -> None:
    if tables.grid != grid:
        raise ValueError("estimate grid does not match the null tables grid")


def q_statistic_lag(est: QsdEstimate, tables: NullModelTables) -> float:
    """Lag-domain form of ``Q_T``."""
    _check_grid(tables, est.grid)
    M = est.window.M
    w = est.grid.weights
    lam2 = est.window.weights() ** 2
    diff = est.cov - tables.lags(M)
    return float(np.einsum("r,rij,i,j->", lam2, diff**2, w, w) / TWO_PI)


def q_statistic_freq(est: QsdEstimate, tables: NullModelTables) -> float:
    """Frequency-domain form of ``Q_T``."""
    _check_grid(tables, est.grid)
    G0 = tables.tapered_spectrum(est.window, est.T)
    w = est.grid.weights
    d2 = np.abs(est.values - G0) ** 2
    return float(TWO_PI / est.T * np.einsum("ijk,i,j->", d2, w, w))


def q_statistic(series, tables: NullModelTables, window: LagWindow) -> float:
    """``Q_T`` of ``series`` against ``tables`` (lag-domain evaluation)."""
    est = estimate_qsd(series, tables.grid, window)
    return q_statistic_lag(est, tables)


def _weighted_block(G: np.ndarray, w: np.ndarray):
    keep = w > 0
    return G[np.ix_(keep, keep)], w[keep]


def moments_from_spectra(spectra, window: LagWindow, T: int, w: np.ndarray, block: int = 256,
                         variance: bool = True, conjugate_term: bool = False):
    """Null mean and variance of a quadratic-distance statistic.

    ``spectra`` is a list of independent contributions, each a ``(q, q, T)``
    array of spectral matrices: one for the goodness-of-fit statistic, two
    for the two-sample statistic.  With ``Delta = delta_M`` this evaluates

        E = (2 pi / T^2) Delta(0) sum_s sum_a [sum_i w_i G_a(x_i, x_i; w_s)]^2
        V = (16 pi^2 / T^4) sum_{s, s'} Delta(w_s - w_s')^2 sum_{a, b} A_ab(s, s')^2,

    where ``A_ab(s, s') = sum_{i, j} w_i w_j G_a(x_i, x_j; w_s) conj(G_b(x_i, x_j; w_s'))``.

    ``conjugate_term=True`` adds the finite-sample contribution of the pairs
    ``(w_s, -w_s)``, ``(2 pi / T^2) sum_s Delta(2 w_s) sum w_i w_j G(x_i, x_j; w_s)^2``,
    which makes ``E`` the exact mean of the Wishart bootstrap statistic.
    ``variance=False`` skips the ``O(T^2)`` variance sum and returns ``V = nan``.
    """
    blocks = []
    E = 0.0
    D0 = float(delta_M(window, 0.0))
    for G in spectra:
        Gw, ww = _weighted_block(G, w)
        sw = np.sqrt(np.outer(ww, ww)).ravel()
        diag = np.real(np.einsum("iik->ik", Gw))
        g = ww @ diag
        E += TWO_PI / T**2 * D0 * float(g @ g)
        if conjugate_term:
            d2 = delta_M(window, 2 * TWO_PI * np.arange(1, T + 1) / T)
            E += TWO_PI / T**2 * float(np.real(np.einsum("s,ijs,i,j->", d2, Gw**2, ww, ww)))
        blocks.append(np.reshape(Gw, (-1, T)).T * sw)  # (T, p) with p = (i, j) pairs
    if not variance:
        return E, float("nan")
    d = delta_M(window, TWO_PI * np.arange(T) / T) ** 2
    total = 0.0
    s_all = np.arange(T)
    for start in range(0, T, block):
        rows = s_all[start : start + block]
        D2 = d[(rows[:, None] - s_all[None, :]) % T]
        for Fa in blocks:
            for Fb in blocks:
                A = Fa[rows] @ np.conj(Fb).T
                total += float(np.real(np.sum(D2 * A * A)))
    V = 16 * np.pi**2 / T**4 * total
    return E, V


def null_moments(tables: NullModelTables, window: LagWindow, T: int, spectrum=None,
                 conjugate_term: bool = False):
    """``(E_T, V_T)`` of ``Q_T`` under the null described by ``tables``.

    ``spectrum`` overrides the null spectral matrices (plug-in mode).  See
    :func:`moments_from_spectra` for ``conjugate_term``.
    """
    G0 = tables.spectrum(T) if spectrum is None else spectrum
    E, V = moments_from_spectra([G0], window, T, tables.grid.weights, conjugate_term=conjugate_term)
    if not (E > 0 and V > 0):
        raise NumericalIntegrityError(f"null moments must be positive, got E_T={E}, V_T={V}")
    return E, V


def gof_test(series, tables: NullModelTables, window: LagWindow, bootstrap: int = 0,
             seed=None, plugin: bool = False, return_samples: bool = False):
    """Goodness-of-fit test of ``series`` against the null ``tables``.

    Parameters
    ----------
    bootstrap : int
        Number of Wishart bootstrap replicates; 0 skips the bootstrap.
    seed : int, optional
        Master seed of the bootstrap.
    plugin : bool
        Compute ``E_T`` and ``V_T`` from the estimate instead of the null.
    """
    from .bootstrap import bootstrap_pvalue

    x = check_series(series)
    T = x.size
    est = estimate_qsd(x, tables.grid, window)
    Q = q_statistic_lag(est, tables)
    E, V = null_moments(tables, window, T, spectrum=est.values if plugin else None)
    z = (Q - E) / np.sqrt(V)
    report = TestReport(
        statistic=Q,
        E_T=E,
        V_T=V,
        z=float(z),
        p_normal=float(norm.sf(z)),
        settings={
            "window": window.to_dict(),
            "T": T,
            "grid": tables.grid.to_dict(),
            "null": tables.provenance,
            "moments": "plugin" if plugin else "null",
        },
    )
    samples = None
    if bootstrap:
        p, samples = bootstrap_pvalue(Q, tables, window, T, bootstrap, seed)
        report.p_bootstrap = p
        report.bootstrap_reps = int(bootstrap)
        report.settings["seed"] = seed
    return (report, samples) if return_samples else report


def deviation_measure(tables_null: NullModelTables, tables_alt: NullModelTables,
                      window: LagWindow, T: int) -> float:
    """Mean shift ``(2 pi/T) sum_k sum w_i w_j |G_1 - G_0|^2`` a fixed alternative induces.

    Both tables must share the grid; the lags compared are ``|r| <= window.M``.
    """
    _check_grid(tables_null, tables_alt.grid)
    M = window.M
    G0 = tables_null.tapered_spectrum(LagWindow("truncated", M), T)
    G1 = tables_alt.tapered_spectrum(LagWindow("truncated", M), T)
    w = tables_null.grid.weights
    return float(TWO_PI / T * np.einsum("ijk,i,j->", np.abs(G1 - G0) ** 2, w, w))


class QuantileGOFTest(BaseEstimator):
    """Scikit-learn style wrapper around :func:`gof_test`.

    ``fit(X)`` runs the test on the series ``X`` and stores ``report_``.
    ``null_tables`` may be given directly; otherwise ``null`` (a model) is
    tabulated at ``levels`` for the requested ``M``.
    """

    def __init__(self, null=None, M=10, window="bartlett", levels=None, null_tables=None,
                 bootstrap=0, random_state=None, plugin=False, mc_config=None):
        self.null = null
        self.M = M
        self.window = window
        self.levels = levels
        self.null_tables = null_tables
        self.bootstrap = bootstrap
        self.random_state = random_state
        self.plugin = plugin
        self.mc_config = mc_config

    def fit(self, X, y=None):
        from .null_models import null_tables

        window = self.window if isinstance(self.window, LagWindow) else LagWindow(self.window, self.M)
        tables = self.null_tables
        if tables is None:
            if self.null is None:
                raise ValueError("either null or null_tables must be given")
            tables = null_tables(self.null, self.levels, window.M, self.mc_config)
        self.tables_ = tables
        self.report_ = gof_test(X, tables, window, self.bootstrap, self.random_state, self.plugin)
        self.statistic_ = self.report_.statistic
        self.pvalue_ = self.report_.p_normal
        return self

    def score(self, X=None, y=None):
        """Normal-approximation p-value of the fitted test."""
        check_is_fitted(self, "report_")
        return self.report_.p_normal
