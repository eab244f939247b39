"""Frequency-domain Wishart bootstrap for quadratic spectral statistics.

Periodogram matrices at the Fourier frequencies are replaced by independent
rank-one Wishart draws ``G(w_k)^{1/2} z z^H G(w_k)^{1/2}`` (complex ``z`` at
interior frequencies, real ``z`` at the self-conjugate ones ``k = T/2, T``,
conjugate mirror images above ``T/2``), smoothed with the lag window and
re-scored.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import fft as sp_fft

from .estimator import circular_smooth
from .lag_window import LagWindow, kernel_K_fourier
from .null_models import NullModelTables

logger = logging.getLogger(__name__)

__all__ = [
    "SpectralMatrixSet",
    "NotPSDError",
    "hermitian_sqrt",
    "spectral_matrix_set",
    "draw_bootstrap_periodograms",
    "smooth_periodograms",
    "bootstrap_samples",
    "bootstrap_pvalue",
    "plus_one_pvalue",
]

CHUNK = 32


class NotPSDError(ValueError):
    """A spectral matrix has an eigenvalue below the tolerance."""


def hermitian_sqrt(matrix, tol: float = 1e-8):
    """Hermitian PSD square root via a unitary eigendecomposition.

    Accepts a single ``(q, q)`` matrix or a stack ``(..., q, q)``.  The input
    is symmetrised; eigenvalues in ``[-tol, 0)`` are clipped to zero and
    anything more negative raises :class:`NotPSDError`.
    """
    A = np.asarray(matrix)
    A = 0.5 * (A + np.conj(np.swapaxes(A, -1, -2)))
    vals, vecs = np.linalg.eigh(A)
    if np.any(vals < -tol):
        raise NotPSDError(f"matrix is not positive semidefinite (min eigenvalue {vals.min():.3e})")
    root = np.sqrt(np.clip(vals, 0.0, None))
    return (vecs * root[..., None, :]) @ np.conj(np.swapaxes(vecs, -1, -2))


@dataclass(frozen=True)
class SpectralMatrixSet:
    """``matrices[k-1] = G_Z(w_k)`` (Hermitian PSD) and their square roots, ``k = 1..T``."""

    matrices: np.ndarray
    sqrts: np.ndarray
    clipped: float = 0.0

    @property
    def T(self) -> int:
        return self.matrices.shape[0]

    @property
    def q(self) -> int:
        return self.matrices.shape[1]


def spectral_matrix_set(spectrum: np.ndarray) -> SpectralMatrixSet:
    """Build the set from a ``(q, q, T)`` spectrum, projecting onto the PSD cone.

    Negative eigenvalues (Monte Carlo noise, lag truncation) are clipped to
    zero and the largest clipped magnitude is logged.
    """
    G = np.moveaxis(np.asarray(spectrum, dtype=complex), -1, 0)
    G = 0.5 * (G + np.conj(np.swapaxes(G, -1, -2)))
    vals, vecs = np.linalg.eigh(G)
    clipped = float(max(0.0, -vals.min()))
    if clipped > 0:
        logger.info("clipped negative spectral eigenvalues (max magnitude %.3e)", clipped)
    vals = np.clip(vals, 0.0, None)
    vh = np.conj(np.swapaxes(vecs, -1, -2))
    mats = (vecs * vals[..., None, :]) @ vh
    roots = (vecs * np.sqrt(vals)[..., None, :]) @ vh
    # enforce G(2pi - w) = conj G(w) exactly
    T = G.shape[0]
    k = np.arange(1, T)
    mirror = T - k
    upper = k > T - k
    mats[k[upper] - 1] = np.conj(mats[mirror[upper] - 1])
    roots[k[upper] - 1] = np.conj(roots[mirror[upper] - 1])
    for kk in self_conjugate_indices(T):
        mats[kk - 1] = mats[kk - 1].real
        roots[kk - 1] = roots[kk - 1].real
    return SpectralMatrixSet(mats, roots, clipped)


def self_conjugate_indices(T: int):
    return (T // 2, T) if T % 2 == 0 else (T,)


def _draw_vectors(sqrts: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """``v_k = G(w_k)^{1/2} z_k`` with the required conjugate structure; shape ``(T, q)``."""
    T, q, _ = sqrts.shape
    half = (T - 1) // 2  # interior frequencies k = 1..half
    z = np.empty((T, q), dtype=complex)
    zc = (rng.standard_normal((half, q)) + 1j * rng.standard_normal((half, q))) / np.sqrt(2.0)
    z[:half] = zc
    for kk in self_conjugate_indices(T):
        z[kk - 1] = rng.standard_normal(q)
    v = np.empty((T, q), dtype=complex)
    idx = np.r_[np.arange(half), [kk - 1 for kk in self_conjugate_indices(T)]]
    v[idx] = np.einsum("kij,kj->ki", sqrts[idx], z[idx])
    for kk in self_conjugate_indices(T):
        v[kk - 1] = v[kk - 1].real
    # k > T/2 mirrors k' = T - k
    k_up = np.arange(T - half, T)  # 1-based k in (T/2, T)
    v[k_up - 1] = np.conj(v[T - k_up - 1])
    return v


def draw_bootstrap_periodograms(mset: SpectralMatrixSet, seed=None) -> np.ndarray:
    """One bootstrap draw of ``I*(w_k)``, shape ``(T, q, q)``; rank one at every frequency."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    v = _draw_vectors(mset.sqrts, rng)
    return v[:, :, None] * np.conj(v)[:, None, :]


def smooth_periodograms(I: np.ndarray, window: LagWindow) -> np.ndarray:
    """``Ghat*(w_k) = sum_s K_M(w_k - w_s) I*(w_s)``; input and output ``(T, q, q)``."""
    T = I.shape[0]
    K = kernel_K_fourier(window, T)
    out = circular_smooth(np.moveaxis(I, 0, -1), K)
    return np.moveaxis(out, -1, 0)


def _replicate_rngs(seed, reps: int):
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [np.random.default_rng(s) for s in ss.spawn(reps)]


def _lag_cov(v: np.ndarray, M: int) -> np.ndarray:
    """``c*_r(i, j) = (2pi/T) sum_s v_i(s) conj(v_j(s)) exp(-i r w_s)`` for ``r = -M..M``.

    ``v`` is ``(R, T, q)`` with ``v[:, s-1]`` at ``w_s``; returns real ``(R, 2M+1, q, q)``.
    """
    R, T, q = v.shape
    P = v[:, :, :, None] * np.conj(v)[:, :, None, :]  # (R, T, q, q)
    # fft over s = 1..T: sum_s P(s) exp(-i r w_s); index 0 holds s = T
    P = np.roll(P, 1, axis=1)
    F = sp_fft.fft(P, axis=1)
    r = np.arange(-M, M + 1)
    return np.real(F[:, r % T]) * (2 * np.pi / T)


def _score_gof(c, C0, lam2, w):
    diff = c - C0
    return np.einsum("r,Rrij,i,j->R", lam2, diff**2, w, w) / (2 * np.pi)


def _score_reversibility(c, lam2, w):
    anti = c - np.swapaxes(c, -1, -2)
    return np.einsum("r,Rrij,i,j->R", lam2, anti**2, w, w) / (16 * np.pi**2)


def bootstrap_samples(mset: SpectralMatrixSet, window: LagWindow, w: np.ndarray, reps: int,
                      seed=None, C0: np.ndarray | None = None, statistic: str = "gof") -> np.ndarray:
    """Bootstrap replicates of a quadratic statistic.

    ``statistic="gof"`` scores ``Q*_T = (2pi/T) sum_k sum |Ghat* - G0^M|^2 w w``
    against the lag table ``C0`` (``(2M+1, q, q)``); ``"reversibility"``
    scores ``R*_T = (1/T) sum_k sum (Im Ghat*)^2 w w``.  Both are evaluated in
    the lag domain, which is exact for ``2M < T``.

    Each replicate has its own RNG stream spawned from ``seed``, so the
    output does not depend on how replicates are batched.
    """
    T, q, _ = mset.matrices.shape
    M = window.M
    lam2 = window.weights() ** 2
    keep = w > 0
    sqrts = mset.sqrts[:, keep][:, :, keep]
    ww = w[keep]
    if statistic == "gof":
        if C0 is None:
            raise ValueError("gof bootstrap needs the null lag table C0")
        C0k = C0[:, keep][:, :, keep]
    rngs = _replicate_rngs(seed, reps)
    out = np.empty(reps)
    for start in range(0, reps, CHUNK):
        batch = rngs[start : start + CHUNK]
        v = np.stack([_draw_vectors(sqrts, g) for g in batch])
        c = _lag_cov(v, M)
        if statistic == "gof":
            out[start : start + len(batch)] = _score_gof(c, C0k, lam2, ww)
        elif statistic == "reversibility":
            out[start : start + len(batch)] = _score_reversibility(c, lam2, ww)
        else:
            raise ValueError(f"unknown statistic {statistic!r}")
    return out


def plus_one_pvalue(observed: float, samples: np.ndarray) -> float:
    """``(1 + #{samples >= observed}) / (reps + 1)``."""
    samples = np.asarray(samples)
    return float((1 + np.count_nonzero(samples >= observed)) / (samples.size + 1))


def bootstrap_pvalue(observed: float, tables: NullModelTables, window: LagWindow, T: int,
                     reps: int = 500, seed=None):
    """Bootstrap p-value of an observed ``Q_T``; returns ``(p, samples)``."""
    if reps < 100:
        raise ValueError(f"need at least 100 bootstrap replicates, got {reps}")
    mset = spectral_matrix_set(tables.spectrum(T))
    samples = bootstrap_samples(mset, window, tables.grid.weights, reps, seed, C0=tables.lags(window.M))
    return plus_one_pvalue(observed, samples), samples
