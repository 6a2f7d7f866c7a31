"""Hermite polynomials and Hermite functions.

Conventions
-----------
``hermite_poly(n, x)`` is the probabilists' polynomial ``He_n``:
``He_0 = 1``, ``He_1 = x``, ``He_{n+1} = x He_n - n He_{n-1}``. With
independent standard normal ``z_j`` the products ``prod_j He_{alpha_j}(z_j)``
are orthogonal with ``E[H_alpha^2] = alpha!``.

``hermite_fn(k, x)`` for ``k >= 1`` is the orthonormal Hermite function
``psi_{k-1}(x) = (2^n n! sqrt(pi))^{-1/2} H_n(x) exp(-x^2/2)`` with
``n = k - 1`` and ``H_n`` the physicists' polynomial. These satisfy
``int psi_j psi_k = delta_jk`` and are eigenfunctions of the Fourier
transform ``f^(u) = int exp(-iux) f(x) dx`` with
``psi_n^ = sqrt(2 pi) (-i)^n psi_n``.

Evaluation uses the normalized three-term recurrence on a mantissa with a
separately tracked log-scale, so ``K`` in the hundreds and ``|x|`` beyond
the underflow point of ``exp(-x^2/2)`` are handled without factorials.
Reliable for ``n`` up to a few thousand; no asymptotic expansions.
"""
from __future__ import annotations

import numpy as np

from .errors import ParameterError

_RESCALE = 1e100
_LOG_RESCALE = np.log(_RESCALE)


def hermite_poly(n: int, x):
    """Probabilists' Hermite polynomial ``He_n(x)`` by forward recurrence."""
    if n < 0:
        raise ParameterError("polynomial degree must be >= 0")
    x = np.asarray(x, dtype=float)
    prev = np.zeros_like(x)
    cur = np.ones_like(x)
    for j in range(n):
        prev, cur = cur, x * cur - j * prev
    return cur if cur.ndim else float(cur)


def hermite_poly_table(nmax: int, x) -> np.ndarray:
    """Stack ``[He_0(x), ..., He_nmax(x)]`` along a new leading axis."""
    x = np.asarray(x, dtype=float)
    out = np.empty((nmax + 1,) + x.shape)
    out[0] = 1.0
    if nmax >= 1:
        out[1] = x
    for j in range(1, nmax):
        out[j + 1] = x * out[j] - j * out[j - 1]
    return out


def hermite_fn_table(K: int, x) -> np.ndarray:
    """Orthonormal Hermite functions ``h~_1..h~_K`` at ``x``; shape ``(K,) + x.shape``."""
    if K < 1:
        raise ParameterError("need at least one Hermite function")
    x = np.asarray(x, dtype=float)
    out = np.empty((K,) + x.shape)
    logscale = -0.5 * x * x - 0.25 * np.log(np.pi)
    prev = np.zeros_like(x)
    cur = np.ones_like(x)
    with np.errstate(divide="ignore", under="ignore"):
        out[0] = np.exp(logscale)
        for n in range(K - 1):
            nxt = np.sqrt(2.0 / (n + 1)) * x * cur - np.sqrt(n / (n + 1.0)) * prev
            prev, cur = cur, nxt
            big = np.abs(cur) > _RESCALE
            if big.any():
                cur = np.where(big, cur / _RESCALE, cur)
                prev = np.where(big, prev / _RESCALE, prev)
                logscale = np.where(big, logscale + _LOG_RESCALE, logscale)
            out[n + 1] = np.sign(cur) * np.exp(np.log(np.abs(cur)) + logscale)
    return out


def hermite_fn(k: int, x):
    """Orthonormal Hermite function ``h~_k`` (``k >= 1``)."""
    if k < 1:
        raise ParameterError("Hermite functions are indexed from 1")
    val = hermite_fn_table(k, x)[k - 1]
    return val if np.ndim(val) else float(val)
