"""Conjectured null processes and their quantile covariance tables.

Each model simulates with Gaussian innovations after a burn-in of 1000
steps.  :func:`null_tables` returns ``C_{0,r}(x_i, x_j)`` for ``|r| <= M`` at
thresholds placed on the null marginal's quantiles: analytically for AR(1)
and i.i.d. models, from one long Monte Carlo path otherwise.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats
from scipy.signal import lfilter

from .bvn import bivariate_normal_cdf
from .estimator import spectrum_from_cov
from .indicators import QuantileGrid, default_levels
from .lag_window import LagWindow

logger = logging.getLogger(__name__)

BURN_IN = 1000
MIN_MC_LENGTH = 10_000

__all__ = [
    "NullModel",
    "IID",
    "AR1",
    "ARCH1",
    "GARCH11",
    "SquaredARCH1",
    "MCConfig",
    "NullModelTables",
    "simulate",
    "null_tables",
    "matched_ar1_for_squared_arch",
    "model_from_dict",
    "PRESETS",
]


class NullModel:
    """Base class; subclasses are frozen dataclasses with a ``kind`` tag."""

    kind: str = ""

    def simulate(self, T: int, seed=None) -> np.ndarray:
        return simulate(self, T, seed)

    def to_dict(self) -> dict:
        return {"kind": self.kind, **asdict(self)}


@dataclass(frozen=True)
class IID(NullModel):
    """i.i.d. draws from a ``scipy.stats`` distribution (``dist`` name + keyword params)."""

    dist: str = "norm"
    params: dict = field(default_factory=dict)
    kind = "iid"

    def __post_init__(self):
        if not hasattr(stats, self.dist):
            raise ValueError(f"unknown scipy.stats distribution {self.dist!r}")
        object.__setattr__(self, "params", dict(self.params))

    def __hash__(self):
        return hash((self.dist, tuple(sorted(self.params.items()))))

    @property
    def marginal(self):
        return getattr(stats, self.dist)(**self.params)


@dataclass(frozen=True)
class AR1(NullModel):
    """``X_t = mu + a X_{t-1} + eps_t``, ``eps_t ~ N(0, sigma_eps^2)``."""

    mu: float = 0.0
    a: float = 0.0
    sigma_eps: float = 1.0
    kind = "ar1"

    def __post_init__(self):
        if not abs(self.a) < 1:
            raise ValueError(f"AR(1) needs |a| < 1, got a={self.a}")
        if not self.sigma_eps > 0:
            raise ValueError("sigma_eps must be positive")

    @property
    def mean(self) -> float:
        return self.mu / (1 - self.a)

    @property
    def std(self) -> float:
        return self.sigma_eps / math.sqrt(1 - self.a**2)


@dataclass(frozen=True)
class ARCH1(NullModel):
    """``X_t = mu + eps_t``, ``eps_t = sigma_t Z_t``, ``sigma_t^2 = a0 + a1 eps_{t-1}^2``."""

    mu: float = 0.0
    a0: float = 1.0
    a1: float = 0.0
    kind = "arch1"

    def __post_init__(self):
        if not self.a0 > 0:
            raise ValueError("ARCH(1) needs a0 > 0")
        if not 0 <= self.a1 < 1:
            raise ValueError(f"ARCH(1) needs 0 <= a1 < 1, got a1={self.a1}")


@dataclass(frozen=True)
class GARCH11(NullModel):
    """``sigma_t^2 = a0 + a1 eps_{t-1}^2 + b sigma_{t-1}^2``, ``X_t = mu + sigma_t Z_t``."""

    mu: float = 0.0
    a0: float = 1.0
    a1: float = 0.0
    b: float = 0.0
    kind = "garch11"

    def __post_init__(self):
        if not self.a0 > 0:
            raise ValueError("GARCH(1,1) needs a0 > 0")
        if self.a1 < 0 or self.b < 0:
            raise ValueError("GARCH(1,1) needs a1 >= 0 and b >= 0")
        if not self.a1 + self.b < 1:
            raise ValueError("GARCH(1,1) needs a1 + b < 1")


@dataclass(frozen=True)
class SquaredARCH1(NullModel):
    """Squares of a zero-mean ARCH(1): ``Y_t = Z_t^2 (a0 + a Y_{t-1})``.

    Equivalently ``Y_t = a0 + a Y_{t-1} + (Z_t^2 - 1)(a0 + a Y_{t-1})``.  The
    fourth moment of the ARCH (the variance of ``Y``) is finite iff ``3 a^2 < 1``.
    """

    a0: float = 0.4
    a: float = 0.0
    kind = "squared_arch1"

    def __post_init__(self):
        if not self.a0 > 0:
            raise ValueError("squared ARCH(1) needs a0 > 0")
        if not (0 <= self.a and 3 * self.a**2 < 1):
            raise ValueError(f"squared ARCH(1) needs 0 <= a and 3a^2 < 1, got a={self.a}")


_KINDS = {cls.kind: cls for cls in (IID, AR1, ARCH1, GARCH11, SquaredARCH1)}

PRESETS = {
    # daily MSFT log returns 1986-2003, Gaussian GARCH(1,1) fit
    "msft_garch11": GARCH11(mu=1.56e-3, a0=1.03e-5, a1=0.06, b=0.925),
    # monthly Intel log returns 1973-2003, Gaussian ARCH(1) fit
    "intel_arch1": ARCH1(mu=0.0166, a0=0.0125, a1=0.363),
}


def model_from_dict(d: dict) -> NullModel:
    """Build a model from ``{"kind": ..., **params}`` or ``{"preset": name}``."""
    d = dict(d)
    if "preset" in d:
        try:
            return PRESETS[d["preset"]]
        except KeyError:
            raise ValueError(f"unknown preset {d['preset']!r}; have {sorted(PRESETS)}") from None
    kind = d.pop("kind", None)
    if kind not in _KINDS:
        raise ValueError(f"unknown model kind {kind!r}; expected one of {sorted(_KINDS)}")
    cls = _KINDS[kind]
    if cls is IID:
        dist = d.pop("dist", "norm")
        return IID(dist, d.pop("params", d))
    return cls(**{k: float(v) for k, v in d.items()})


def matched_ar1_for_squared_arch(a0: float, a: float) -> AR1:
    """AR(1) with the mean and autocovariances of :class:`SquaredARCH1` ``(a0, a)``.

    The squared ARCH has mean ``m = a0/(1-a)``, autocovariance ``a^|r| var(Y)``
    with ``var(Y) = E X^4 - m^2`` and ``E X^4 = 3(a0^2 + 2 a0 a m) / (1 - 3a^2)``.
    """
    if not 3 * a**2 < 1:
        raise ValueError(f"3a^2 must be < 1 for a finite fourth moment, got a={a}")
    m = a0 / (1 - a)
    ex4 = 3 * (a0**2 + 2 * a0 * a * m) / (1 - 3 * a**2)
    var_y = ex4 - m**2
    return AR1(mu=a0, a=a, sigma_eps=math.sqrt((1 - a**2) * var_y))


def _affine_recursion(c: np.ndarray, d: np.ndarray, y0: float) -> np.ndarray:
    """``y_t = c_t + d_t y_{t-1}`` started from ``y0``."""
    out = np.empty(c.size)
    y = float(y0)
    cl, dl = c.tolist(), d.tolist()
    for t in range(c.size):
        y = cl[t] + dl[t] * y
        out[t] = y
    return out


def simulate(model: NullModel, T: int, seed=None) -> np.ndarray:
    """Draw a stationary path of length ``T`` (burn-in of 1000 steps discarded)."""
    if T < 1:
        raise ValueError("T must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n = T + BURN_IN
    if isinstance(model, IID):
        return model.marginal.rvs(size=T, random_state=rng)
    z = rng.standard_normal(n)
    if isinstance(model, AR1):
        x0 = model.mean + model.std * rng.standard_normal()
        zi = np.array([model.a * x0])
        x, _ = lfilter([1.0], [1.0, -model.a], model.mu + model.sigma_eps * z, zi=zi)
        return x[BURN_IN:]
    if isinstance(model, ARCH1):
        z2 = z**2
        # eps_t^2 = z_t^2 (a0 + a1 eps_{t-1}^2)
        e2 = _affine_recursion(model.a0 * z2, model.a1 * z2, model.a0 / (1 - model.a1))
        return (model.mu + np.sqrt(e2) * np.sign(z))[BURN_IN:]
    if isinstance(model, GARCH11):
        # sigma_t^2 = a0 + (a1 z_{t-1}^2 + b) sigma_{t-1}^2
        coef = np.empty(n)
        coef[0] = model.a1 + model.b
        coef[1:] = model.a1 * z[:-1] ** 2 + model.b
        s2 = _affine_recursion(np.full(n, model.a0), coef, model.a0 / (1 - model.a1 - model.b))
        return (model.mu + np.sqrt(s2) * z)[BURN_IN:]
    if isinstance(model, SquaredARCH1):
        z2 = z**2
        y = _affine_recursion(model.a0 * z2, model.a * z2, model.a0 / (1 - model.a))
        return y[BURN_IN:]
    raise TypeError(f"cannot simulate {type(model).__name__}")


@dataclass(frozen=True)
class MCConfig:
    """Monte Carlo settings for models without closed-form tables."""

    N: int = 1_000_000
    seed: int = 20120512
    cache_dir: str | None = None
    with_se: bool = False
    n_batches: int = 100


@dataclass(frozen=True)
class NullModelTables:
    """``C0[L + r, i, j] = C_{0,r}(x_i, x_j)`` for ``r = -L..L`` on ``grid``.

    ``C0_se`` holds batch-means Monte Carlo standard errors when requested.
    """

    grid: QuantileGrid
    C0: np.ndarray
    provenance: dict
    C0_se: np.ndarray | None = field(default=None, repr=False)

    @property
    def max_lag(self) -> int:
        return (self.C0.shape[0] - 1) // 2

    def lags(self, M: int) -> np.ndarray:
        """Sub-table for ``|r| <= M``."""
        L = self.max_lag
        if M > L:
            raise ValueError(f"tables hold lags up to {L}, need {M}")
        return self.C0[L - M : L + M + 1]

    def spectrum(self, T: int) -> np.ndarray:
        """Null spectral matrices ``G_0(x_i, x_j; omega_k)``, shape ``(q, q, T)``."""
        L = self.max_lag
        return spectrum_from_cov(self.C0, np.ones(2 * L + 1), T)

    def tapered_spectrum(self, window: LagWindow, T: int) -> np.ndarray:
        """``(1/2pi) sum_{|r|<=M} lambda(r/M) C_{0,r} exp(i r omega_k)``."""
        return spectrum_from_cov(self.lags(window.M), window.weights(), T)

    def to_dict(self) -> dict:
        out = {
            "grid": self.grid.to_dict(),
            "C0": self.C0.tolist(),
            "provenance": self.provenance,
        }
        if self.C0_se is not None:
            out["C0_se"] = self.C0_se.tolist()
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "NullModelTables":
        se = d.get("C0_se")
        return cls(
            QuantileGrid.from_dict(d["grid"]),
            np.asarray(d["C0"], dtype=float),
            d["provenance"],
            None if se is None else np.asarray(se, dtype=float),
        )


def _analytic_ar1(model: AR1, levels: np.ndarray, L: int) -> NullModelTables:
    z = stats.norm.ppf(levels)
    thr = model.mean + model.std * z
    Phi = levels
    q = levels.size
    C0 = np.zeros((2 * L + 1, q, q))
    hh, kk = np.meshgrid(z, z, indexing="ij")
    indep = np.outer(Phi, Phi)
    for r in range(L + 1):
        rho = model.a**r
        C = bivariate_normal_cdf(hh, kk, rho) - indep
        C0[L + r] = C
        C0[L - r] = C.T
    return NullModelTables(QuantileGrid(thr, levels), C0, {"method": "analytic", "model": model.to_dict()})


def _analytic_iid(model: IID, levels: np.ndarray, L: int) -> NullModelTables:
    thr = model.marginal.ppf(levels)
    q = levels.size
    C0 = np.zeros((2 * L + 1, q, q))
    lo = np.minimum.outer(levels, levels)
    C0[L] = lo - np.outer(levels, levels)
    return NullModelTables(QuantileGrid(thr, levels), C0, {"method": "analytic", "model": model.to_dict()})


def _mc_tables(model: NullModel, levels: np.ndarray, L: int, cfg: MCConfig) -> NullModelTables:
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(1,)))
    path = simulate(model, cfg.N, rng)
    grid = QuantileGrid.from_sample(path, levels)
    N = path.size
    ind = path[:, None] <= grid.thresholds[None, :]
    F = ind.mean(axis=0)
    Z = ind - F
    q = grid.q
    C0 = np.empty((2 * L + 1, q, q))
    for r in range(L + 1):
        C = (Z[: N - r].T @ Z[r:]) / (N - r)
        C0[L + r] = C
        C0[L - r] = C.T
    se = None
    if cfg.with_se:
        B = cfg.n_batches
        n = N // B
        batch = np.empty((B, L + 1, q, q))
        for b in range(B):
            Zb = Z[b * n : (b + 1) * n]
            for r in range(L + 1):
                batch[b, r] = (Zb[: n - r].T @ Zb[r:]) / (n - r)
        s = batch.std(axis=0, ddof=1) / math.sqrt(B)
        se = np.empty_like(C0)
        se[L:] = s
        se[:L] = np.transpose(s[1:][::-1], (0, 2, 1))
    prov = {
        "method": "monte_carlo",
        "model": model.to_dict(),
        "N": cfg.N,
        "seed": cfg.seed,
    }
    return NullModelTables(grid, C0, prov, se)


def _cache_path(cache_dir: str, key: dict) -> str:
    digest = hashlib.sha256(json.dumps(key, sort_keys=True).encode()).hexdigest()[:24]
    return os.path.join(cache_dir, f"tables-{digest}.json")


def null_tables(model: NullModel, levels=None, M: int = 0, mc_config: MCConfig | None = None,
                method: str = "auto") -> NullModelTables:
    """Quantile covariance tables of ``model`` for lags ``|r| <= M``.

    ``method`` is ``"auto"`` (analytic when available), ``"analytic"`` or
    ``"monte_carlo"``.  Monte Carlo uses one path of ``mc_config.N`` points
    after burn-in; results are cached under ``mc_config.cache_dir`` if set.
    """
    levels = default_levels() if levels is None else np.asarray(levels, dtype=float)
    cfg = mc_config or MCConfig()
    if M < 0:
        raise ValueError("M must be non-negative")
    has_closed_form = isinstance(model, (AR1, IID))
    if method == "auto":
        method = "analytic" if has_closed_form else "monte_carlo"
    if method == "analytic":
        if isinstance(model, AR1):
            return _analytic_ar1(model, levels, M)
        if isinstance(model, IID):
            return _analytic_iid(model, levels, M)
        raise ValueError(f"no closed-form tables for {model.kind}")
    if method != "monte_carlo":
        raise ValueError(f"unknown method {method!r}")
    if cfg.N < MIN_MC_LENGTH:
        raise ValueError(f"Monte Carlo length N={cfg.N} is below the minimum {MIN_MC_LENGTH}")
    key = {"model": model.to_dict(), "levels": levels.tolist(), "M": M, "N": cfg.N,
           "seed": cfg.seed, "se": cfg.with_se}
    if cfg.cache_dir:
        path = _cache_path(cfg.cache_dir, key)
        if os.path.exists(path):
            with open(path) as fh:
                return NullModelTables.from_dict(json.load(fh))
    tables = _mc_tables(model, levels, M, cfg)
    if cfg.cache_dir:
        os.makedirs(cfg.cache_dir, exist_ok=True)
        tmp = path + f".{os.getpid()}.tmp"
        with open(tmp, "w") as fh:
            json.dump(tables.to_dict(), fh)
        os.replace(tmp, path)
        logger.info("cached null tables at %s", path)
    return tables
