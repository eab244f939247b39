"""Lag windows and the frequency-domain kernels derived from them.

A lag window is an even taper ``lambda(u)`` supported on ``[-1, 1]``; with a
bandwidth ``M`` it weights lag ``r`` by ``lambda(r / M)``.  Three derived
kernels appear throughout the package:

``K_M(theta) = (1/T) sum_r lambda_M(r) cos(r theta)``
    smoothing kernel applied to periodogram ordinates,
``W_M(theta) = (1/2pi) sum_r lambda_M(r) cos(r theta) = T K_M(theta) / 2pi``
    the same kernel normalised as a density on ``[0, 2pi)``,
``Delta_M(theta) = sum_r lambda_M(r)^2 cos(r theta)``
    the lag-domain form of the kernel self-convolution (no ``1/2pi``).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

__all__ = [
    "LagWindow",
    "truncated",
    "bartlett",
    "tukey",
    "parse_window",
    "eval_lambda",
    "kernel_K",
    "kernel_W",
    "delta_M",
]

_KINDS = ("truncated", "bartlett", "tukey")


@dataclass(frozen=True)
class LagWindow:
    """A lag window of the form

    ``lambda(u) = (sum_{r=-R..R} a_r exp(i 2 pi r u) - sum_{j=1..R} b_j |u|^j) 1{|u| <= 1}``

    Only ``truncated`` and ``bartlett`` are named presets; ``tukey`` takes
    user supplied coefficients ``a`` (length ``2R+1``, index ``-R..R``) and
    ``b`` (length ``R``, index ``1..R``).
    """

    kind: str
    M: int
    a: tuple = field(default=())
    b: tuple = field(default=())

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown lag window kind {self.kind!r}; expected one of {_KINDS}")
        if int(self.M) != self.M or self.M < 0:
            raise ValueError(f"bandwidth M must be a non-negative integer, got {self.M!r}")
        object.__setattr__(self, "M", int(self.M))
        if self.kind == "tukey":
            a = tuple(complex(v) for v in self.a)
            b = tuple(float(v) for v in self.b)
            if len(a) % 2 != 1:
                raise ValueError("tukey coefficients a must have odd length 2R+1")
            object.__setattr__(self, "a", a)
            object.__setattr__(self, "b", b)

    def __call__(self, u):
        return eval_lambda(self, u)

    def weights(self) -> np.ndarray:
        """``lambda(r / M)`` for ``r = -M..M`` (length ``2M+1``)."""
        return _lag_weights(self)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "M": self.M}
        if self.kind == "tukey":
            out["a"] = [[v.real, v.imag] for v in self.a]
            out["b"] = list(self.b)
        return out


def truncated(M: int) -> LagWindow:
    return LagWindow("truncated", M)


def bartlett(M: int) -> LagWindow:
    return LagWindow("bartlett", M)


def tukey(M: int, a: Sequence[complex], b: Sequence[float] = ()) -> LagWindow:
    return LagWindow("tukey", M, tuple(a), tuple(b))


def parse_window(text: str, M: int) -> LagWindow:
    """Parse a CLI window selector: ``truncated``, ``bartlett`` or ``tukey:<file>``.

    The coefficient file is JSON ``{"a": [...], "b": [...]}``; entries of ``a``
    may be numbers or ``[re, im]`` pairs.
    """
    import json

    if text in ("truncated", "bartlett"):
        return LagWindow(text, M)
    if text.startswith("tukey:"):
        with open(text[len("tukey:"):]) as fh:
            coeffs = json.load(fh)
        a = [complex(*v) if isinstance(v, (list, tuple)) else complex(v) for v in coeffs["a"]]
        return tukey(M, a, coeffs.get("b", ()))
    raise ValueError(f"unrecognised window {text!r}")


def eval_lambda(window: LagWindow, u):
    """Evaluate the taper ``lambda(u)``; exactly zero for ``|u| > 1``."""
    u = np.asarray(u, dtype=float)
    au = np.abs(u)
    if window.kind == "truncated":
        val = np.ones_like(u)
    elif window.kind == "bartlett":
        val = 1.0 - au
    else:
        R = (len(window.a) - 1) // 2
        val = np.zeros_like(u, dtype=complex)
        for r, coef in zip(range(-R, R + 1), window.a):
            val = val + coef * np.exp(2j * np.pi * r * u)
        for j, coef in enumerate(window.b, start=1):
            val = val - coef * au**j
        if np.allclose(np.imag(val), 0.0):
            val = np.real(val)
    val = np.where(au <= 1.0, val, 0.0)
    return val if val.ndim else val[()]


@lru_cache(maxsize=256)
def _lag_weights(window: LagWindow) -> np.ndarray:
    M = window.M
    r = np.arange(-M, M + 1)
    if M == 0:
        w = np.atleast_1d(np.asarray(eval_lambda(window, 0.0), dtype=float))
    else:
        w = np.real(np.asarray(eval_lambda(window, r / M)))
    w = np.array(w, dtype=float)
    w.setflags(write=False)
    return w


def _check_T(window: LagWindow, T: int) -> None:
    if T < 2 * window.M + 1:
        warnings.warn(
            f"T={T} < 2M+1={2 * window.M + 1}: lags alias on the Fourier grid",
            RuntimeWarning,
            stacklevel=3,
        )


def _cos_sum(weights: np.ndarray, theta) -> np.ndarray:
    M = (len(weights) - 1) // 2
    theta = np.asarray(theta, dtype=float)
    r = np.arange(-M, M + 1)
    return np.tensordot(np.cos(np.multiply.outer(theta, r)), weights, axes=([-1], [0]))


def kernel_K(window: LagWindow, T: int, theta):
    """``K_M(theta) = (1/T) sum_{|r|<=M} lambda(r/M) cos(r theta)``."""
    _check_T(window, T)
    out = _cos_sum(window.weights(), theta) / T
    return out if np.ndim(out) else float(out)


@lru_cache(maxsize=64)
def kernel_K_fourier(window: LagWindow, T: int) -> np.ndarray:
    """``K_M(omega_d)`` for ``d = 0..T-1`` on the Fourier grid ``omega_d = 2 pi d / T``.

    Cached per ``(window, T)``; the smoothing ``sum_s K(omega_k - omega_s) f(s)``
    is a circular convolution with this vector.
    """
    _check_T(window, T)
    out = _cos_sum(window.weights(), 2 * np.pi * np.arange(T) / T) / T
    out.setflags(write=False)
    return out


def kernel_W(window: LagWindow, theta):
    """``W_M(theta) = (1/2pi) sum_{|r|<=M} lambda(r/M) cos(r theta)``."""
    out = _cos_sum(window.weights(), theta) / (2 * np.pi)
    return out if np.ndim(out) else float(out)


def delta_M(window: LagWindow, theta):
    """``Delta_M(theta) = sum_{|r|<=M} lambda(r/M)^2 cos(r theta)``."""
    out = _cos_sum(window.weights() ** 2, theta)
    return out if np.ndim(out) else float(out)
