"""The process ``X(t) = sum_k c_k(t) H_eps(k)`` and its derivative ``W(t)``.

Coefficients
------------
``w_k(t) = (T_m h~_k)(t)`` and ``c_k(t) = int_0^t w_k``. Because the Hermite
functions are Fourier eigenfunctions (``psi_n^ = sqrt(2 pi)(-i)^n psi_n``),
with ``n = k - 1``, ``g = sqrt(2 pi m)`` and ``s_n = (-1)^(n // 2)``::

    n even:  w = s_n sqrt(2/pi) int_0^inf cos(ut) g psi_n du
             c = s_n sqrt(2/pi) int_0^inf sin(ut)/u g psi_n du
    n odd:   w = s_n sqrt(2/pi) int_0^inf sin(ut) g psi_n du
             c = s_n sqrt(2/pi) int_0^inf (1 - cos ut)/u g psi_n du

These are evaluated with a fixed composite Gauss-Legendre rule on
``(0, sqrt(2K+1) + margin]``, directly at the requested times. The FFT route
(:func:`wickito.spectral.Tm_indicator_coeff`) computes the same numbers and
serves as a cross-check.

Truncation
----------
The partial sums ``sum_{k<=K} c_k(t) c_k(s)`` miss the frequencies that the
first K Hermite functions cannot resolve. :meth:`ProcessModel.series_covariance`
adds the spectral mass above ``sqrt(2K + 1 - (t^2 + s^2)/4)`` (the edge of
the phase-space box covered by the first K modes) unless ``corrected=False``.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import optimize, special

from . import __version__
from .chaos import ChaosVector, dual_norm
from .errors import ParameterError, RangeError
from .hermite import hermite_fn_table
from .spectral import (SpectralDensity, covariance_integral, half_line_rule, r_of_t, r_prime,
                       tail_covariance)

CACHE_ENV = "WICKITO_CACHE"


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``start, start + step, ..., stop`` (both ends included)."""

    start: float = -4.0
    stop: float = 4.0
    n: int = 801

    def __post_init__(self):
        if self.n < 2 or not self.stop > self.start:
            raise ParameterError("grid needs n >= 2 and stop > start")

    @classmethod
    def parse(cls, text: str) -> "TimeGrid":
        """``"start:stop:step"``; the stop point is included when it lies on the grid."""
        start, stop, step = parse_range(text)
        n = int(round((stop - start) / step)) + 1
        return cls(start, start + (n - 1) * step, n)

    @property
    def step(self) -> float:
        return (self.stop - self.start) / (self.n - 1)

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.n)

    def contains(self, t) -> bool:
        t = np.asarray(t, dtype=float)
        slack = 1e-12 * max(1.0, abs(self.start), abs(self.stop))
        return bool(np.all((t >= self.start - slack) & (t <= self.stop + slack)))


def parse_range(text: str) -> tuple[float, float, float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise ParameterError(f"expected start:stop:step, got {text!r}")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError as exc:
        raise ParameterError(f"expected start:stop:step, got {text!r}") from exc
    if not step > 0 or not stop >= start:
        raise ParameterError("need step > 0 and stop >= start")
    return start, stop, step


def time_points(text: str) -> np.ndarray:
    start, stop, step = parse_range(text)
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(n)


@dataclass(frozen=True)
class Quadrature:
    """Frequency rule: Gauss-Legendre panels of width ``panel`` up to ``sqrt(2K+1) + margin``."""

    panel: float = 0.25
    order: int = 20
    grading: int = 48
    graded_order: int = 12
    margin: float = 10.0


@dataclass(frozen=True)
class CoefficientTable:
    times: np.ndarray
    c: np.ndarray
    w: np.ndarray
    key: str


@dataclass(frozen=True)
class LipschitzFit:
    """Envelope ``sup_t |w_k'(t)| <= C1 k^((N+2)/2) + C2`` fitted over ``k <= k_max``."""

    C1: float
    C2: float
    N: int
    k_max: int
    exponent: float
    sup: np.ndarray = field(repr=False)

    @property
    def C_N(self) -> float:
        """``sum_k (C1 k^((N+2)/2) + C2) (2k)^(-N-3)`` summed to infinity."""
        N = self.N
        scale = 2.0 ** (-N - 3)
        return scale * (self.C1 * special.zeta(N / 2 + 2) + self.C2 * special.zeta(N + 3))

    def envelope(self, k) -> np.ndarray:
        return self.C1 * np.asarray(k, dtype=float) ** ((self.N + 2) / 2) + self.C2

    def C_N_l2(self, modes: int) -> float:
        """``(sum_{k<=K} envelope_k^2 (2k)^-(N+3))^{1/2}``.

        Since ``||H_eps(k)||'_{N+3} = (2k)^{-(N+3)/2}``, this is the Lipschitz
        constant of ``W`` in ``H'_{N+3}`` implied by the envelope at truncation K.
        It grows like ``sqrt(log K)`` when ``C1 > 0``.
        """
        k = np.arange(1, modes + 1, dtype=float)
        return float(np.sqrt(np.sum(self.envelope(k) ** 2 * (2 * k) ** (-(self.N + 3)))))


class ProcessModel:
    """Truncated chaos model of ``X`` and ``W`` for a spectral density.

    Parameters
    ----------
    density : SpectralDensity
    modes : number K of Hermite modes
    grid : time range on which the model is defined (and the coefficient
        table is tabulated)
    quadrature : frequency quadrature settings
    """

    def __init__(self, density: SpectralDensity, modes: int = 200, grid: TimeGrid | None = None,
                 quadrature: Quadrature | None = None):
        if modes < 1:
            raise ParameterError("need at least one mode")
        self.density = density
        self.modes = int(modes)
        self.grid = grid or TimeGrid()
        self.quadrature = quadrature or Quadrature()
        self._rule = None
        self._table = None

    # -- identity -------------------------------------------------------------

    @property
    def N(self) -> int:
        return int(self.density.N)

    def config(self) -> dict:
        return {"preset": self.density.spec, "modes": self.modes, "grid": asdict(self.grid),
                "quadrature": asdict(self.quadrature)}

    @property
    def key(self) -> str:
        blob = json.dumps({"config": self.config(), "version": __version__}, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def __repr__(self) -> str:
        return f"ProcessModel({self.density.spec}, K={self.modes}, grid={self.grid})"

    # -- coefficients ---------------------------------------------------------

    def _frequency_rule(self):
        if self._rule is None:
            q = self.quadrature
            upper = math.sqrt(2 * self.modes + 1) + q.margin
            u, wt = half_line_rule(upper, q.panel, q.order, q.grading, q.graded_order)
            n = np.arange(self.modes)
            sign = np.where((n // 2) % 2 == 0, 1.0, -1.0)
            psi = hermite_fn_table(self.modes, u)  # (K, nodes)
            G = (math.sqrt(2 / math.pi) * wt * self.density.multiplier(u))[:, None] * psi.T * sign
            even = n % 2 == 0
            self._rule = (u, np.ascontiguousarray(G[:, even]), np.ascontiguousarray(G[:, ~even]), even)
        return self._rule

    def _check_range(self, times):
        if not self.grid.contains(times):
            raise RangeError(f"time outside the model grid [{self.grid.start}, {self.grid.stop}]")

    def coefficients(self, times, derivative: bool = False):
        """``(c, w)`` (and ``w'`` if requested), each of shape ``(len(times), K)``."""
        t = np.atleast_1d(np.asarray(times, dtype=float))
        self._check_range(t)
        if not derivative and self._table is not None:
            hit = self._lookup(t)
            if hit is not None:
                return self._table.c[hit].copy(), self._table.w[hit].copy()
        u, Ge, Go, even = self._frequency_rule()
        K = self.modes
        c = np.empty((len(t), K))
        w = np.empty((len(t), K))
        dw = np.empty((len(t), K)) if derivative else None
        # one matrix-vector product per time: results do not depend on how times are batched
        for i, ti in enumerate(t):
            tu = ti * u
            S, C = np.sin(tu), np.cos(tu)
            c[i, even] = (S / u) @ Ge
            c[i, ~even] = ((1.0 - C) / u) @ Go
            w[i, even] = C @ Ge
            w[i, ~even] = S @ Go
            if derivative:
                dw[i, even] = -(S * u) @ Ge
                dw[i, ~even] = (C * u) @ Go
        c[t == 0.0] = 0.0
        return (c, w, dw) if derivative else (c, w)

    def _lookup(self, t: np.ndarray):
        """Row indices into the loaded table when every time is exactly a grid point."""
        pts = self._table.times
        idx = np.clip(np.searchsorted(pts, t), 0, len(pts) - 1)
        return idx if np.array_equal(pts[idx], t) else None

    def c(self, t) -> np.ndarray:
        out = self.coefficients(t)[0]
        return out if np.ndim(t) else out[0]

    def w(self, t) -> np.ndarray:
        out = self.coefficients(t)[1]
        return out if np.ndim(t) else out[0]

    def X_chaos(self, t: float) -> ChaosVector:
        return ChaosVector.first_order(self.c(float(t)), max_length=self.modes)

    def W_chaos(self, t: float) -> ChaosVector:
        return ChaosVector.first_order(self.w(float(t)), max_length=self.modes)

    # -- coefficient table and cache -----------------------------------------

    def coeff_table(self, cache_dir: str | os.PathLike | None = None) -> CoefficientTable:
        """Coefficients on the model grid; cached as ``<key>.npz`` when a cache dir is given.

        The cache directory defaults to ``$WICKITO_CACHE`` (no caching when unset).
        Custom densities are never cached since their key cannot identify them.
        """
        if self._table is not None:
            return self._table
        cache_dir = cache_dir if cache_dir is not None else os.environ.get(CACHE_ENV)
        path = None
        if cache_dir and self.density.name != "custom":
            path = Path(cache_dir) / f"{self.key}.npz"
            if path.exists():
                with np.load(path) as data:
                    if str(data["key"]) == self.key:
                        self._table = CoefficientTable(data["times"], data["c"], data["w"], self.key)
                        return self._table
        times = self.grid.points
        c, w = self.coefficients(times)
        self._table = CoefficientTable(times, c, w, self.key)
        if path is not None:
            path.parent.mkdir(parents=True, exist_ok=True)
            tmp = path.with_suffix(".tmp.npz")
            np.savez(tmp, times=times, c=c, w=w, key=np.array(self.key),
                     config=np.array(json.dumps(self.config(), sort_keys=True)))
            os.replace(tmp, path)
        return self._table

    # -- second-order structure ----------------------------------------------

    def r(self, t: float) -> float:
        """``Var X(t)`` by spectral quadrature."""
        return r_of_t(t, self.density)

    def r_prime(self, t: float) -> float:
        return r_prime(t, self.density)

    def covariance(self, t: float, s: float) -> float:
        return covariance_integral(t, s, self.density)

    def tail_cutoff(self, t: float, s: float) -> float:
        return math.sqrt(max(2 * self.modes + 1 - (t * t + s * s) / 4, 1.0))

    def series_covariance(self, t: float, s: float, corrected: bool = True) -> float:
        """``sum_{k<=K} c_k(t) c_k(s)``, plus the unresolved spectral tail when ``corrected``."""
        c = self.c(np.array([t, s], dtype=float))
        raw = float(c[0] @ c[1])
        if not corrected:
            return raw
        return raw + tail_covariance(t, s, self.density, self.tail_cutoff(t, s))

    def series_variance(self, t: float, corrected: bool = True) -> float:
        return self.series_covariance(t, t, corrected)

    # -- regularity -----------------------------------------------------------

    def derivative_check(self, t: float, h: float, index: float | None = None) -> float:
        """``dual_norm_{N+3}((X(t+h) - X(t))/h - W(t))``."""
        if not h > 0:
            raise ParameterError("h must be positive")
        p = self.N + 3 if index is None else index
        c, w = self.coefficients(np.array([t, t + h]))
        diff = (c[1] - c[0]) / h - w[0]
        return dual_norm(ChaosVector.first_order(diff), p)

    def lipschitz_fit(self, k_max: int = 50, times=None) -> LipschitzFit:
        """Fit ``C1, C2 >= 0`` with ``C1 k^((N+2)/2) + C2 >= sup_t |w_k'(t)|`` for ``k <= k_max``.

        Non-negative least squares first, then ``C2`` is raised until the
        envelope holds at every fitted k. ``exponent`` is the free log-log
        slope of the sup over ``k >= 5``, to compare with ``(N+2)/2``.
        """
        k_max = min(k_max, self.modes)
        if times is None:
            lo, hi = max(self.grid.start, -2.0), min(self.grid.stop, 2.0)
            times = np.linspace(lo, hi, 801)
        _, _, dw = self.coefficients(times, derivative=True)
        sup = np.max(np.abs(dw[:, :k_max]), axis=0)
        k = np.arange(1, k_max + 1, dtype=float)
        a = (self.N + 2) / 2
        A = np.column_stack([k**a, np.ones_like(k)])
        (C1, C2), _ = optimize.nnls(A, sup)
        C2 += max(0.0, float(np.max(sup - A @ np.array([C1, C2]))))
        sel = k >= 5
        exponent = float(np.polyfit(np.log(k[sel]), np.log(sup[sel]), 1)[0]) if sel.sum() >= 2 else float("nan")
        return LipschitzFit(float(C1), float(C2), self.N, int(k_max), exponent, sup)

    def w_membership_bound(self, times=None) -> np.ndarray:
        """Partial sums ``sum_{k<=K} sup_t |w_k(t)| (2k)^-(N+3)`` for K = 1..modes."""
        if times is None:
            lo, hi = max(self.grid.start, 0.0), min(self.grid.stop, 2.0)
            times = np.linspace(lo, hi, 401)
        _, w = self.coefficients(times)
        k = np.arange(1, self.modes + 1)
        return np.cumsum(np.max(np.abs(w), axis=0) * (2.0 * k) ** (-(self.N + 3)))


# ----------------------------------------------------------------------------
# sampling


def coordinates(n_modes: int, n_paths: int, seed: int, stream: int = 0) -> np.ndarray:
    """I.i.d. standard normal coordinates ``z`` of shape ``(n_paths, n_modes)``.

    The generator is ``np.random.default_rng([seed, stream])``, so distinct
    streams under one master seed are independent and reproducible.
    """
    if n_paths < 1:
        raise ParameterError("need at least one path")
    rng = np.random.default_rng([int(seed), int(stream)])
    return rng.standard_normal((n_paths, n_modes))


def sample_paths(model: ProcessModel, times, n_paths: int, seed: int, stream: int = 0,
                 return_coordinates: bool = False):
    """Paths ``X(t_i; w_j) = sum_k z_k^(j) c_k(t_i)``, shape ``(len(times), n_paths)``."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    z = coordinates(model.modes, n_paths, seed, stream)
    c, _ = model.coefficients(times)
    paths = c @ z.T
    return (paths, z) if return_coordinates else paths


def paths_csv_text(times, paths, header_lines: list[str] | None = None) -> str:
    """CSV with header ``t,path_0,...``; optional ``#``-prefixed lines go first."""
    times = np.asarray(times, dtype=float)
    paths = np.asarray(paths, dtype=float)
    buf = io.StringIO()
    for line in header_lines or []:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t"] + [f"path_{j}" for j in range(paths.shape[1])])
    for t, row in zip(times, paths):
        writer.writerow([repr(float(t))] + [repr(float(v)) for v in row])
    return buf.getvalue()


def write_paths_csv(path, times, paths, header_lines: list[str] | None = None) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(paths_csv_text(times, paths, header_lines))


def read_paths_csv(path) -> tuple[np.ndarray, np.ndarray]:
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    data = np.loadtxt(lines[1:], delimiter=",", ndmin=2)
    return data[:, 0], data[:, 1:]
