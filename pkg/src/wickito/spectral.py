"""Spectral densities, the Fourier multiplier T_m, and the variance function r.

Normalization
-------------
The forward transform is ``f^(u) = int exp(-iux) f(x) dx`` and the
multiplier applied by :func:`apply_Tm` is ``sqrt(2 pi m(u))``. With this
calibration the white preset ``m = 1/(2 pi)`` is the identity operator and

    r(t) = ||T_m 1_[0,t]||^2 = int 2 (1 - cos tu) m(u) / u^2 du = Var X(t),

so white noise integrates to standard Brownian motion (``r(t) = |t|``) and
fBm has ``r(t) = V_H |t|^{2H}``. The covariance is
``C(t, s) = (r(t) + r(s) - r(t - s)) / 2``.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate, interpolate, special

from .errors import AccuracyError, DomainError, ParameterError, ResolutionError
from .hermite import hermite_fn_table

TWO_PI = 2.0 * math.pi

# default FFT window for apply_Tm-based coefficients
DEFAULT_WINDOW = (-80.0, 80.0)
DEFAULT_POINTS = 2**14
DEFAULT_PAD = 4

# |t| below which r' is refused when it is singular at 0 (fBm with H < 1/2)
SINGULAR_T_MIN = 1e-6

_QUAD_OPTS = dict(epsabs=1e-13, epsrel=1e-12, limit=1000)


@dataclass(frozen=True)
class SpectralDensity:
    """Even nonnegative spectral density ``m`` with its growth-bound parameters.

    ``func`` is evaluated on ``|u|``; the bound is
    ``m(u) <= K |u|^-b`` for ``|u| <= 1`` and ``m(u) <= K |u|^{2N}`` beyond.
    """

    func: Callable[[np.ndarray], np.ndarray]
    K: float
    b: float
    N: int
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.K > 0:
            raise ParameterError("bound constant K must be positive")
        if not self.b < 2:
            raise ParameterError("bound exponent b must be < 2")
        if self.N < 0 or int(self.N) != self.N:
            raise ParameterError("N must be a nonnegative integer")

    def __call__(self, u):
        u = np.abs(np.asarray(u, dtype=float))
        return self.func(u)

    def multiplier(self, u):
        """Calibrated Fourier symbol ``sqrt(2 pi m(u))``."""
        with np.errstate(divide="ignore"):
            return np.sqrt(TWO_PI * self(u))

    @property
    def spec(self) -> str:
        """Preset string that reproduces this density (``custom`` otherwise)."""
        if self.name == "fbm":
            return f"fbm:H={self.params['H']!r}"
        return self.name

    def check_bound(self, grid=None, rtol: float = 1e-12) -> bool:
        """Evenness and the growth bound on a log-spaced grid."""
        if grid is None:
            grid = np.logspace(-6, 3, 2000)
        u = np.asarray(grid, dtype=float)
        m_pos = self.func(u)
        if np.any(m_pos < 0):
            return False
        # evenness of the raw function, not of the |u| wrapper in __call__
        if not np.allclose(self.func(-u), m_pos, rtol=rtol, atol=0):
            return False
        small = u <= 1
        bound = np.where(small, self.K * u ** (-self.b), self.K * u ** (2 * self.N))
        return bool(np.all(m_pos <= bound * (1 + rtol)))


def _white(u):
    return np.full_like(u, 1.0 / TWO_PI)


def _quartic(u):
    return u**4 * np.exp(-2.0 * u * u)


def fbm_constant(H: float) -> float:
    """``V_H = Gamma(2-2H) cos(pi H) / (pi (1-2H) H)``, continuous at H = 1/2."""
    if not 0 < H < 1:
        raise ParameterError("Hurst parameter must lie in (0, 1)")
    if abs(H - 0.5) < 1e-9:
        return 1.0
    return special.gamma(2 - 2 * H) * math.cos(math.pi * H) / (math.pi * (1 - 2 * H) * H)


def preset(name: str, **params) -> SpectralDensity:
    """Named densities: ``white``, ``fbm`` (needs ``H``) and ``quartic``."""
    allowed = {"white": set(), "quartic": set(), "fbm": {"H"}}.get(name)
    if allowed is not None and set(params) - allowed:
        raise ParameterError(f"preset {name!r} takes no parameter(s) {sorted(set(params) - allowed)}")
    if name == "white":
        return SpectralDensity(_white, K=1 / TWO_PI, b=0.0, N=0, name="white")
    if name == "quartic":
        return SpectralDensity(_quartic, K=1.0, b=-4.0, N=2, name="quartic")
    if name == "fbm":
        if "H" not in params:
            raise ParameterError("fbm preset needs H")
        H = float(params["H"])
        if not 0 < H < 1:
            raise ParameterError(f"Hurst parameter must lie in (0, 1), got {H}")
        expo = 1.0 - 2.0 * H

        def _fbm(u, expo=expo):
            with np.errstate(divide="ignore"):
                return np.abs(u) ** expo / TWO_PI

        N = 0 if H >= 0.5 else 1
        return SpectralDensity(_fbm, K=1 / TWO_PI, b=2 * H - 1, N=N, name="fbm", params={"H": H})
    raise ParameterError(f"unknown preset {name!r}")


def parse_preset(text: str) -> SpectralDensity:
    """Parse ``white``, ``quartic`` or ``fbm:H=<x>``."""
    head, _, rest = text.strip().partition(":")
    params = {}
    if rest:
        for item in rest.split(","):
            key, eq, val = item.partition("=")
            if not eq:
                raise ParameterError(f"malformed preset parameter {item!r}")
            try:
                params[key.strip()] = float(val)
            except ValueError as exc:
                raise ParameterError(f"malformed preset parameter {item!r}") from exc
    return preset(head, **params)


# ----------------------------------------------------------------------------
# sampled functions and the FFT route for T_m


@dataclass(frozen=True)
class SampledFunction:
    """Values on the uniform grid ``start + i * step``, ``i = 0..n-1``."""

    start: float
    step: float
    values: np.ndarray

    def __post_init__(self):
        if not self.step > 0:
            raise ParameterError("grid step must be positive")
        object.__setattr__(self, "values", np.asarray(self.values))

    @classmethod
    def on_window(cls, fn, t_min: float, t_max: float, n: int) -> "SampledFunction":
        """Sample ``fn`` on ``n`` points of ``[t_min, t_max)`` (right endpoint excluded)."""
        step = (t_max - t_min) / n
        grid = t_min + step * np.arange(n)
        return cls(t_min, step, np.asarray(fn(grid), dtype=float))

    @property
    def grid(self) -> np.ndarray:
        return self.start + self.step * np.arange(len(self.values))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "value"])
            for t, v in zip(self.grid, self.values):
                w.writerow([repr(float(t)), repr(float(v))])

    @classmethod
    def from_csv(cls, path) -> "SampledFunction":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))[1:]
        t = np.array([float(r[0]) for r in rows])
        v = np.array([float(r[1]) for r in rows])
        steps = np.diff(t)
        if len(t) < 2 or not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
            raise ParameterError("CSV grid is not uniform")
        return cls(float(t[0]), float(steps.mean()), v)


def _dc_multiplier(m: SpectralDensity, du: float) -> float:
    # bin average over [-du/2, du/2]; finite even when sqrt(m) is singular at 0
    half = du / 2
    val, _ = integrate.quad(lambda u: float(m.multiplier(u)), 0.0, half, limit=200)
    return val / half


def apply_Tm(f: SampledFunction, m: SpectralDensity, pad: int = DEFAULT_PAD,
             tail_tol: float = 1e-10, nyquist_tol: float = 1e-8) -> SampledFunction:
    """``T_m f`` on the grid of ``f`` by zero-padded FFT.

    Raises :class:`ResolutionError` when the product ``sqrt(2 pi m) f^``
    still carries weight near the Nyquist frequency.
    """
    vals = np.asarray(f.values, dtype=float)
    n = len(vals)
    scale = np.max(np.abs(vals)) if n else 0.0
    if scale == 0.0:
        return SampledFunction(f.start, f.step, np.zeros(n))
    edge = max(1, n // 64)
    if max(np.max(np.abs(vals[:edge])), np.max(np.abs(vals[-edge:]))) > tail_tol * max(scale, 1.0):
        raise ParameterError("input is not negligible at the grid edges; enlarge the window")
    size = pad * n
    buf = np.zeros(size)
    buf[:n] = vals
    u = TWO_PI * np.fft.fftfreq(size, d=f.step)
    g = np.empty(size)
    g[1:] = m.multiplier(u[1:])
    g[0] = _dc_multiplier(m, TWO_PI / (size * f.step))
    spec = g * np.fft.fft(buf)
    mag = np.abs(spec)
    high = np.abs(u) > 0.8 * np.max(np.abs(u))
    if np.max(mag[high]) > nyquist_tol * np.max(mag):
        raise ResolutionError("grid too coarse: multiplied spectrum is not resolved below Nyquist")
    out = np.fft.ifft(spec)[:n]
    if np.max(np.abs(out.imag)) > 1e-8 * max(1.0, np.max(np.abs(out.real))):
        raise AccuracyError("T_m f has a non-negligible imaginary part; is m even?")
    return SampledFunction(f.start, f.step, out.real)


def Tm_indicator_coeff(t, k: int, m: SpectralDensity, window=DEFAULT_WINDOW,
                       points: int = DEFAULT_POINTS) -> np.ndarray | float:
    """``c_k(t) = int_0^t (T_m h~_k)(u) du`` through the FFT route.

    Cumulative integration uses the cubic spline of ``T_m h~_k``.
    """
    if k < 1:
        raise ParameterError("modes are indexed from 1")
    f = SampledFunction.on_window(lambda x: hermite_fn_table(k, x)[k - 1], *window, points)
    tf = apply_Tm(f, m)
    spline = interpolate.CubicSpline(tf.grid, tf.values)
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(ts < window[0]) or np.any(ts > window[1] - f.step):
        raise ParameterError("t outside the sampling window")
    out = np.array([spline.integrate(0.0, ti) for ti in ts])
    return out if np.ndim(t) else float(out[0])


# ----------------------------------------------------------------------------
# spectral integrals


def _quad(fn, a, b, **kw):
    opts = dict(_QUAD_OPTS)
    opts.update(kw)
    if "weight" in opts:
        opts.pop("limit")
        opts.pop("epsrel")
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(fn, a, b, **opts)
        except integrate.IntegrationWarning as exc:
            # QAWF's extrapolation can stall at the tightest tolerance: retry looser, judge by the estimate
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", integrate.IntegrationWarning)
                for epsabs in (opts["epsabs"], 1e-12, 1e-11, 1e-10):
                    val, err = integrate.quad(fn, a, b, **{**opts, "epsabs": epsabs})
                    if err <= 1e-7 * max(1.0, abs(val)):
                        break
                else:
                    raise AccuracyError(f"quadrature did not converge: {exc}") from exc
    return val


def _split(t_scale: float) -> float:
    # oscillatory tail starts after one radian of phase
    return 1.0 / t_scale


def _head(fn, lower: float, upper: float) -> float:
    """Plain quadrature on ``[lower, upper]`` split at 1, 2, 4, ... so peaks are not missed."""
    if upper <= lower:
        return 0.0
    edges = [lower]
    b = 1.0
    while b < upper:
        if b > lower:
            edges.append(b)
        b *= 2.0
    edges.append(upper)
    return sum(_quad(fn, a, c) for a, c in zip(edges[:-1], edges[1:]))


def _minus_cos_tail(m: SpectralDensity, freqs, coeffs, U: float) -> float:
    """``int_U^inf [sum_i a_i (1 - cos(w_i u))] m(u)/u^2 du`` via a plain and QAWF pieces.

    Integrated in ``x = u / U`` on ``[1, inf)`` so the integrand is O(1)-scaled.
    """
    def base(x):
        return float(m(U * x)) / (x * x)

    total = sum(coeffs) * _quad(base, 1.0, np.inf)
    for a, w in zip(coeffs, freqs):
        if w != 0.0:
            total -= a * _quad(base, 1.0, np.inf, weight="cos", wvar=abs(w) * U)
        else:
            total -= a * _quad(base, 1.0, np.inf)
    return total / U


def _cos_combination(m: SpectralDensity, freqs, coeffs, lower: float = 0.0) -> float:
    """``2 int_lower^inf sum_i a_i (1 - cos(w_i u)) m(u)/u^2 du``."""
    scale = max([abs(w) for w in freqs] + [1e-300])
    U = max(_split(scale), lower)

    def near(u):
        s = sum(a * 2.0 * math.sin(0.5 * w * u) ** 2 for a, w in zip(coeffs, freqs))
        return s * float(m(u)) / (u * u)

    head = _head(near, lower, U)
    return 2.0 * (head + _minus_cos_tail(m, freqs, coeffs, U))


def r_of_t(t: float, m: SpectralDensity) -> float:
    """Variance function ``r(t) = Var X(t) = int 2(1-cos tu) m(u)/u^2 du``."""
    t = abs(float(t))
    if t == 0.0:
        return 0.0
    return _cos_combination(m, [t], [2.0])


def r_levy(t: float, m: SpectralDensity) -> float:
    """The half-variance ``r(t)/2`` appearing in the second line of the covariance formula."""
    return 0.5 * r_of_t(t, m)


def r_prime(t: float, m: SpectralDensity, singular_t_min: float = SINGULAR_T_MIN) -> float:
    """``r'(t) = int 2 sin(tu) m(u)/u du``."""
    t = float(t)
    if m.name == "fbm" and m.params["H"] < 0.5 and abs(t) < singular_t_min:
        raise DomainError(f"|t| < {singular_t_min}: r' is singular at 0 for H < 1/2")
    if t == 0.0:
        return 0.0
    sgn = math.copysign(1.0, t)
    t = abs(t)
    U = _split(t)

    def near(u):
        return math.sin(t * u) * float(m(u)) / u

    def far(x):  # u = U x
        return float(m(U * x)) / x

    head = _head(near, 0.0, U)
    tail = _quad(far, 1.0, np.inf, weight="sin", wvar=t * U)
    return sgn * 4.0 * (head + tail)


def covariance_integral(t: float, s: float, m: SpectralDensity) -> float:
    """``E[X(t)X(s)] = int (e^{iut}-1)(e^{-ius}-1) m(u)/u^2 du`` by direct quadrature."""
    t, s = float(t), float(s)
    if t == 0.0 or s == 0.0:
        return 0.0
    # Re[(e^{iut}-1)(e^{-ius}-1)] = (1-cos ut) + (1-cos us) - (1-cos u(t-s))
    return _cos_combination(m, [t, s, t - s], [1.0, 1.0, -1.0])


def tail_covariance(t: float, s: float, m: SpectralDensity, cutoff: float) -> float:
    """Contribution of ``|u| > cutoff`` to the covariance integral."""
    t, s = float(t), float(s)
    if t == 0.0 or s == 0.0:
        return 0.0
    return 2.0 * _minus_cos_tail(m, [t, s, t - s], [1.0, 1.0, -1.0], cutoff)


# ----------------------------------------------------------------------------
# closed forms for the presets


def fbm_covariance(t: float, s: float, H: float) -> float:
    """``(V_H / 2)(|t|^2H + |s|^2H - |t-s|^2H)``, consistent with ``r(t) = V_H |t|^2H``."""
    v = fbm_constant(H)
    return 0.5 * v * (abs(t) ** (2 * H) + abs(s) ** (2 * H) - abs(t - s) ** (2 * H))


def quartic_r_printed(t: float) -> float:
    """The closed form as printed for ``m = u^4 exp(-2u^2)``; negative for all t > 0."""
    return math.sqrt(TWO_PI) / 8 * (1 - math.exp(-t * t / 8) * (1 + t * t))


def quartic_variance(t: float) -> float:
    """Exact ``Var X(t)`` for ``m = u^4 exp(-2u^2)``."""
    return math.sqrt(TWO_PI) / 4 * (1 - math.exp(-t * t / 8) * (1 - t * t / 4))


# ----------------------------------------------------------------------------
# frequency-domain Gauss-Legendre rule on (0, U]


def half_line_rule(upper: float, panel: float = 0.25, order: int = 20,
                   grading: int = 48, graded_order: int = 12) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes and weights on ``(0, upper]``.

    The first panel ``[0, panel]`` is split geometrically toward 0 so that
    integrable power singularities of ``sqrt(m)`` at the origin converge.
    """
    xg, wg = leggauss(order)
    xs, ws = leggauss(graded_order)
    nodes, weights = [], []
    edges = [panel * 2.0 ** (-j) for j in range(grading, -1, -1)]
    edges = [0.0] + edges
    for a, b in zip(edges[:-1], edges[1:]):
        h = 0.5 * (b - a)
        nodes.append(a + h * (xs + 1))
        weights.append(h * ws)
    n_uniform = max(1, int(math.ceil((upper - panel) / panel)))
    for i in range(n_uniform):
        a = panel * (i + 1)
        b = a + panel
        h = 0.5 * (b - a)
        nodes.append(a + h * (xg + 1))
        weights.append(h * wg)
    return np.concatenate(nodes), np.concatenate(weights)
