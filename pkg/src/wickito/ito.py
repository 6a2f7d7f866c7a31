"""Numerical verification of the Ito formula

    f(X(t)) = f(X(t0)) + int_{t0}^t f'(X(s)) <> W(s) ds + 1/2 int_{t0}^t f''(X(s)) r'(s) ds

in three regimes.

exact
    ``f(x) = x^d`` (``d <= 4``). Powers of a first-order vector expand as
    ``X^d = sum_j d! / (j! (d-2j)! 2^j) v^j X^{<>(d-2j)}`` with ``v = Var X``,
    so every term is a finite chaos vector.
wick-exp
    ``f(x) = exp(i a x)`` carried as the (cos, sin) pair. ``e^{iaX} =
    e^{-a^2 v/2} exp<>(i a X)``, whose coefficient at ``gamma`` is
    ``e^{-a^2 v/2} (i a)^{|gamma|} c^gamma / gamma!``: even orders feed the
    cosine part, odd orders the sine part.
monte-carlo
    General ``f`` along sampled paths. The Wick product with the increment
    is realized by the Gaussian identity ``(F <> dX)(w) = F(w) dX(w) -
    <DF, dx>``, which for ``F = f'(X_k)`` gives ``f'(X_k) dX_k - f''(X_k)
    E[X_k dX_k]``.

Variance semantics: the chaos regimes default to the exact variance
``v = r`` (the truncated vector is the projection of the full process, exact
on modes <= K). Sampled paths realize the K-mode series, whose variance is
``r_K = sum c_k^2`` with ``r_K' = 2 sum c_k w_k``; the Monte Carlo regime uses
that, and ``variance="series"`` selects it in the chaos regimes too.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .chaos import ChaosVector, dual_norm, enumerate_rows, gaussian_monomials, run_ranks, unit_rows, wick_sum
from .errors import AccuracyError, DomainError, ParameterError
from .integrator import IntegrandFn, reference_weights, riemann_weights
from .process import ProcessModel, coordinates
from .spectral import SINGULAR_T_MIN

MAX_DEGREE = 4
_TOL = 1e-10


@dataclass
class ItoReport:
    """Both sides of the Ito formula and the residual ``||lhs - rhs||'_p``.

    ``terms`` holds ChaosVectors (chaos regimes) or mean/standard-error pairs
    (Monte Carlo). ``residual_by_order`` is filled by the wick-exp regime.
    """

    regime: str
    f: str
    interval: tuple[float, float]
    p: float | None
    residual: float
    terms: dict
    residual_by_order: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        def enc(v):
            if isinstance(v, ChaosVector):
                return v.to_json()
            if isinstance(v, dict):
                return {k: enc(x) for k, x in v.items()}
            if isinstance(v, (np.floating, np.integer)):
                return v.item()
            return v

        return {"regime": self.regime, "f": self.f, "interval": list(self.interval), "p": self.p,
                "residual": self.residual, "residual_by_order": {str(k): v for k, v in self.residual_by_order.items()},
                "terms": enc(self.terms), "diagnostics": enc(self.diagnostics)}

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)


def default_t0(model: ProcessModel) -> float:
    """0, except 0.01 when ``r'`` is singular at 0 (fBm with H < 1/2)."""
    d = model.density
    return 0.01 if d.name == "fbm" and d.params["H"] < 0.5 else 0.0


def _check_interval(model: ProcessModel, t0: float, t: float) -> None:
    if not t > t0:
        raise ParameterError("need t > t0")
    d = model.density
    if d.name == "fbm" and d.params["H"] < 0.5 and t0 < SINGULAR_T_MIN and t > -SINGULAR_T_MIN:
        raise DomainError("r' is singular at 0 for H < 1/2; start the interval at t0 > 0")


class _Variance:
    """``v(s)`` and ``v'(s)`` under exact or series semantics."""

    def __init__(self, model: ProcessModel, mode: str):
        if mode not in ("exact", "series"):
            raise ParameterError("variance must be 'exact' or 'series'")
        self.model, self.mode = model, mode
        self._cache: dict[float, float] = {}

    def v(self, s: float) -> float:
        s = float(s)
        if s not in self._cache:
            if self.mode == "exact":
                self._cache[s] = self.model.r(s)
            else:
                c = self.model.c(s)
                self._cache[s] = float(c @ c)
        return self._cache[s]

    def vs(self, times) -> np.ndarray:
        return np.array([self.v(s) for s in np.atleast_1d(times)])

    def dv(self, s: float) -> float:
        if self.mode == "exact":
            return self.model.r_prime(s)
        c, w = self.model.coefficients(np.array([float(s)]))
        return float(2.0 * c[0] @ w[0])


def _hermite_expansion(d: int) -> list[tuple[int, int, float]]:
    """``x^d = sum (j, n, a) a v^j x^{<>n}`` with ``n = d - 2j``."""
    return [(j, d - 2 * j, math.factorial(d) / (math.factorial(j) * math.factorial(d - 2 * j) * 2**j))
            for j in range(d // 2 + 1)]


def _power_support(d: int, K: int) -> tuple[np.ndarray, np.ndarray]:
    """Rows of all orders ``d, d-2, ...`` and the order of each row."""
    blocks = [enumerate_rows(n, K, min_order=n) for _, n, _ in _hermite_expansion(d)]
    width = max(d, 1)
    rows = np.concatenate([np.pad(b, ((0, 0), (0, width - b.shape[1]))) for b in blocks])
    return rows, (rows > 0).sum(axis=1)


def _power_coeffs(d: int, rows, orders, c: np.ndarray, v: np.ndarray, scale: float = 1.0,
                  ranks: np.ndarray | None = None) -> np.ndarray:
    """Coefficients of ``scale * X^d`` on ``rows`` for coefficient rows ``c`` (T, K) and variances ``v`` (T,)."""
    mono = gaussian_monomials(rows, c, ranks)
    out = np.zeros_like(mono)
    for j, n, a in _hermite_expansion(d):
        sel = orders == n
        out[:, sel] = scale * a * math.factorial(n) * v[:, None] ** j * mono[:, sel]
    return out


def polynomial_integrand(model: ProcessModel, d: int, var: _Variance, scale: float = 1.0,
                         p: float | None = None) -> IntegrandFn:
    """``Y(s) = scale * X(s)^d`` as an integrand (``d = 0`` gives the constant ``scale``)."""
    if d == 0:
        return IntegrandFn.constant_value(scale, model.N + 4 if p is None else p)
    rows, orders = _power_support(d, model.modes)
    ranks = run_ranks(rows)

    def coeffs(times):
        times = np.atleast_1d(times)
        return _power_coeffs(d, rows, orders, model.c(times), var.vs(times), scale, ranks)

    return IntegrandFn(rows, coeffs, model.N + 4 if p is None else p, d, model.modes, name=f"{scale:g}*X^{d}")


def _power_vector(model: ProcessModel, d: int, var: _Variance, s: float) -> ChaosVector:
    if d == 0:
        return ChaosVector.constant(1.0)
    rows, orders = _power_support(d, model.modes)
    vals = _power_coeffs(d, rows, orders, model.c(np.array([s])), np.array([var.v(s)]))[0]
    return ChaosVector.from_rows(rows, vals, d, model.modes)


def _correction_vector(model: ProcessModel, d: int, var: _Variance, t0: float, t: float) -> ChaosVector:
    """``1/2 int f''(X(s)) v'(s) ds`` for ``f = x^d``, coefficientwise by adaptive quadrature."""
    if d < 2:
        return ChaosVector.zero()
    k = d - 2
    if k == 0:
        val, err = integrate.quad(var.dv, t0, t, epsabs=_TOL, epsrel=1e-12, limit=200)
        return ChaosVector.constant(0.5 * d * (d - 1) * val)
    rows, orders = _power_support(k, model.modes)
    ranks = run_ranks(rows)

    def f(s):
        c = model.c(np.array([s]))
        return _power_coeffs(k, rows, orders, c, np.array([var.v(s)]), 1.0, ranks)[0] * var.dv(s)

    val, err, info = integrate.quad_vec(f, t0, t, epsabs=_TOL, epsrel=0.0, norm="max", full_output=True)
    if not info.success or err > _TOL:
        raise AccuracyError(f"correction quadrature did not converge (estimate {err:.2e})")
    return ChaosVector.from_rows(rows, 0.5 * d * (d - 1) * val, k, model.modes)


def _wick_term(Y: IntegrandFn, model: ProcessModel, t0: float, t: float, n_steps: int | None):
    ref_w = reference_weights(Y, model, t0, t, _TOL)
    ref = wick_sum(Y.support, unit_rows(model.modes), ref_w, Y.max_order + 1, model.modes)
    if n_steps is None:
        return ref, None
    rs = wick_sum(Y.support, unit_rows(model.modes), riemann_weights(Y, model, t0, t, n_steps),
                  Y.max_order + 1, model.modes)
    return ref, rs


def ito_polynomial(model: ProcessModel, degree: int, t0: float | None = None, t: float = 1.0,
                   n_steps: int | None = 1024, p: float | None = None, variance: str = "exact",
                   drop_correction: bool = False) -> ItoReport:
    """Exact-regime check for ``f(x) = x^degree``.

    The residual uses the reference Wick integral; the ``n_steps`` Riemann
    sum is reported in ``diagnostics`` (``riemann_residual`` and the
    Wick-term discretization error). ``drop_correction`` omits the
    ``1/2 f'' r'`` term, which should leave a residual of ``v(t) - v(t0)``
    for ``degree = 2``.
    """
    if not 0 <= degree <= MAX_DEGREE:
        raise ParameterError(f"polynomial degree must be in 0..{MAX_DEGREE}")
    t0 = default_t0(model) if t0 is None else float(t0)
    _check_interval(model, t0, t)
    p = model.N + 4 if p is None else p
    var = _Variance(model, variance)

    lhs = _power_vector(model, degree, var, t)
    init = _power_vector(model, degree, var, t0)
    if degree == 0:
        wick_ref = ChaosVector.zero()
        wick_rs = None if n_steps is None else ChaosVector.zero()
    else:
        Y = polynomial_integrand(model, degree - 1, var, scale=degree, p=p)
        wick_ref, wick_rs = _wick_term(Y, model, t0, t, n_steps)
    corr = ChaosVector.zero() if drop_correction else _correction_vector(model, degree, var, t0, t)

    residual = dual_norm(lhs - (init + wick_ref + corr), p)
    terms = {"lhs": lhs, "initial": init, "wick_integral": wick_ref, "correction": corr}
    diagnostics = {"n_steps": n_steps, "modes": model.modes, "variance": variance, "preset": model.density.spec,
                   "drop_correction": drop_correction, "t0_default": default_t0(model)}
    if wick_rs is not None:
        diagnostics["riemann_residual"] = dual_norm(lhs - (init + wick_rs + corr), p)
        diagnostics["wick_term_error"] = dual_norm(wick_rs - wick_ref, p)
    return ItoReport("exact", f"x^{degree}", (t0, t), p, residual, terms, {}, diagnostics)


# ----------------------------------------------------------------------------
# Wick exponential regime


def _exp_parts(alpha: float, rows, orders, c: np.ndarray, v: np.ndarray, ranks=None):
    """Coefficients of cos(aX) and sin(aX) on ``rows``; ``c`` (T, K), ``v`` (T,)."""
    mono = gaussian_monomials(rows, c, ranks) * np.exp(-0.5 * alpha**2 * v)[:, None]
    powers = alpha ** orders.astype(float)
    phase = orders % 4  # i^n = 1, i, -1, -i
    cos_sign = np.select([phase == 0, phase == 2], [1.0, -1.0], 0.0)
    sin_sign = np.select([phase == 1, phase == 3], [1.0, -1.0], 0.0)
    return mono * powers * cos_sign, mono * powers * sin_sign


def exp_truncation_bound(alpha: float, v: float, order: int, p: float) -> tuple[float, float]:
    """Neglected chaos mass of ``e^{iaX}`` beyond ``order``: (Wiener norm, ``H'_p`` bound).

    The order-n part has Wiener norm ``|a|^n v^{n/2} e^{-a^2 v/2} / sqrt(n!)``
    and, since every ``|gamma| = n`` has ``(2N)^{-p gamma} <= 2^{-pn}``,
    dual norm at most ``2^{-pn/2}`` times that.
    """
    if alpha == 0.0 or v <= 0.0:
        return 0.0, 0.0
    log_base = -0.5 * alpha**2 * v
    wiener, dual = 0.0, 0.0
    for n in range(order + 1, order + 400):
        log_term = log_base + n * math.log(abs(alpha)) + 0.5 * n * math.log(v) - 0.5 * math.lgamma(n + 1)
        wiener += math.exp(2 * log_term)
        dual += math.exp(2 * log_term - p * n * math.log(2.0))
        if log_term < -700 and n > alpha**2 * v:
            break
    return math.sqrt(wiener), math.sqrt(dual)


def ito_exponential(model: ProcessModel, alpha: float, t0: float | None = None, t: float = 1.0,
                    n_steps: int | None = 1024, order: int = 12, p: float | None = None,
                    variance: str = "exact", tol: float = 1e-6) -> ItoReport:
    """Wick-exponential check of ``e^{iaX(t)} = e^{iaX(t0)} + int ia e^{iaX} <> W + 1/2 int (ia)^2 e^{iaX} r'``.

    Both sides are truncated at chaos order ``order`` and compared order by
    order (the comparison is exact up to that order). Raises
    :class:`AccuracyError` when the neglected chaos mass beyond ``order``,
    bounded in ``H'_p``, exceeds ``tol``.
    """
    t0 = default_t0(model) if t0 is None else float(t0)
    _check_interval(model, t0, t)
    p = model.N + 4 if p is None else p
    var = _Variance(model, variance)
    vt = var.v(t)
    wiener_tail, dual_tail = exp_truncation_bound(alpha, vt, order, p)
    if dual_tail > tol:
        raise AccuracyError(f"chaos order {order} leaves an H'_{p:g} tail of {dual_tail:.2e} > tol={tol:g} "
                            f"(alpha={alpha}, Var X(t)={vt:.4g}); raise the order or lower alpha")
    K = model.modes
    rows = enumerate_rows(order, K)
    orders = (rows > 0).sum(axis=1)
    ranks = run_ranks(rows)
    last = {}

    def parts(times):
        times = np.atleast_1d(np.asarray(times, dtype=float))
        key = times.tobytes()
        if key not in last:
            last.clear()  # Yc and Ys ask for the same times back to back
            last[key] = _exp_parts(alpha, rows, orders, model.c(times), var.vs(times), ranks)
        return last[key]

    def vec(vals, top=order):
        return ChaosVector.from_rows(rows, vals, top, K)

    gc_t, gs_t = (x[0] for x in parts(t))
    gc_0, gs_0 = (x[0] for x in parts(t0))

    # cos:  gc(t) = gc(t0) - a int gs <> W - a^2/2 int gc r'
    # sin:  gs(t) = gs(t0) + a int gc <> W - a^2/2 int gs r'
    low = orders < order  # order-`order` parts times W only reach order+1
    sub = rows[low]

    def integrand(which):
        def coeffs(times):
            gc, gs = parts(times)
            return (gc if which == "c" else gs)[:, low]
        return IntegrandFn(sub, coeffs, p, order - 1, K, name=f"g{which}")

    Yc, Ys = integrand("c"), integrand("s")
    wick_c_ref, wick_c_rs = _wick_term(Ys, model, t0, t, n_steps)
    wick_s_ref, wick_s_rs = _wick_term(Yc, model, t0, t, n_steps)

    def corr_fn(s):
        gc, gs = parts(s)
        return np.concatenate([gc[0], gs[0]]) * var.dv(s)

    val, err, info = integrate.quad_vec(corr_fn, t0, t, epsabs=_TOL, epsrel=0.0, norm="max", full_output=True)
    if not info.success or err > _TOL:
        raise AccuracyError(f"correction quadrature did not converge (estimate {err:.2e})")
    n_rows = len(rows)
    corr_c = vec(-0.5 * alpha**2 * val[:n_rows])
    corr_s = vec(-0.5 * alpha**2 * val[n_rows:])

    def residual_parts(wc, ws):
        rc = vec(gc_t) - (vec(gc_0) + (-alpha) * wc + corr_c)
        rs = vec(gs_t) - (vec(gs_0) + alpha * ws + corr_s)
        # restrict to orders <= order (Wick terms reach order + 1)
        keep = lambda F: F.from_rows(F.rows[F.orders <= order], F.coeffs[F.orders <= order], order, K)
        return keep(rc), keep(rs)

    rc, rs = residual_parts(wick_c_ref, wick_s_ref)
    by_order = {}
    for n in range(order + 1):
        by_order[n] = math.hypot(dual_norm(rc.order_part(n), p), dual_norm(rs.order_part(n), p))
    residual = math.hypot(dual_norm(rc, p), dual_norm(rs, p))
    diagnostics = {"alpha": alpha, "order": order, "modes": K, "variance": variance, "preset": model.density.spec,
                   "n_steps": n_steps, "truncation_tail_wiener": wiener_tail, "truncation_tail_dual": dual_tail,
                   "expectation_lhs": gc_t[0] if orders[0] == 0 else 0.0,
                   "t0_default": default_t0(model)}
    if n_steps is not None:
        rcr, rsr = residual_parts(wick_c_rs, wick_s_rs)
        diagnostics["riemann_residual"] = math.hypot(dual_norm(rcr, p), dual_norm(rsr, p))
    terms = {"lhs_cos": vec(gc_t), "lhs_sin": vec(gs_t), "initial_cos": vec(gc_0), "initial_sin": vec(gs_0),
             "wick_integral_cos": -alpha * wick_c_ref, "wick_integral_sin": alpha * wick_s_ref,
             "correction_cos": corr_c, "correction_sin": corr_s}
    return ItoReport("wick-exp", f"exp(i*{alpha:g}*x)", (t0, t), p, residual, terms, by_order, diagnostics)


def expected_terms_cos(model: ProcessModel, t0: float, t: float, variance: str = "series") -> dict:
    """Expectations of the Ito terms for ``f = cos`` from the wick-exp verifier.

    Expectations are the order-0 chaos coefficients, which the wick-exp
    regime computes exactly at any truncation order, so order 1 suffices.
    """
    rep = ito_exponential(model, 1.0, t0, t, n_steps=None, order=1, variance=variance, tol=math.inf)
    return {"lhs": rep.terms["lhs_cos"].expectation(), "initial": rep.terms["initial_cos"].expectation(),
            "wick_integral": rep.terms["wick_integral_cos"].expectation(),
            "correction": rep.terms["correction_cos"].expectation()}


def expected_terms_power(model: ProcessModel, degree: int, t0: float, t: float, variance: str = "series") -> dict:
    """Expectations of the Ito terms for ``f = x^degree`` from the exact verifier."""
    rep = ito_polynomial(model, degree, t0, t, n_steps=None, variance=variance)
    return {k: rep.terms[k].expectation() for k in ("lhs", "initial", "wick_integral", "correction")}


# ----------------------------------------------------------------------------
# pathwise Monte Carlo


NAMED_FUNCTIONS: dict[str, tuple[Callable, Callable, Callable]] = {
    "x": (lambda x: x, lambda x: np.ones_like(x), lambda x: np.zeros_like(x)),
    "x2": (lambda x: x**2, lambda x: 2 * x, lambda x: 2 * np.ones_like(x)),
    "x3": (lambda x: x**3, lambda x: 3 * x**2, lambda x: 6 * x),
    "x4": (lambda x: x**4, lambda x: 4 * x**3, lambda x: 12 * x**2),
    "cos": (np.cos, lambda x: -np.sin(x), lambda x: -np.cos(x)),
    "sin": (np.sin, np.cos, lambda x: -np.sin(x)),
}


def _stats(x: np.ndarray) -> dict:
    return {"mean": float(np.mean(x)), "se": float(np.std(x, ddof=1) / math.sqrt(len(x))) if len(x) > 1 else 0.0}


def ito_pathwise(model: ProcessModel, f: Callable, fp: Callable, fpp: Callable, t0: float | None = None,
                 t: float = 1.0, n_steps: int = 1024, n_paths: int = 10_000, seed: int = 0,
                 name: str = "f", stream: int = 0) -> ItoReport:
    """Monte Carlo check of the Ito formula along sampled K-mode paths.

    Per path, with ``X_j = X(s_j)`` on a uniform grid:

    * Wick term ``sum_j f'(X_j) dX_j - f''(X_j) E[X_j dX_j]``
    * correction ``1/2 int f''(X(s)) r_K'(s) ds`` by the trapezoid rule

    and the residual ``f(X(t)) - f(X(t0)) - wick - correction``. The report
    gives mean and standard error of every term and of the residual.
    """
    t0 = default_t0(model) if t0 is None else float(t0)
    _check_interval(model, t0, t)
    s = np.linspace(t0, t, n_steps + 1)
    c, w = model.coefficients(s)
    z = coordinates(model.modes, n_paths, seed, stream)
    X = c @ z.T  # (n+1, P)
    dC = np.diff(c, axis=0)
    dX = np.diff(X, axis=0)
    cross = np.einsum("jk,jk->j", c[:-1], dC)  # E[X_j dX_j]
    rp = 2.0 * np.einsum("jk,jk->j", c, w)  # r_K'
    dt = (t - t0) / n_steps

    F2 = fpp(X)
    wick_term = np.sum(fp(X[:-1]) * dX - F2[:-1] * cross[:, None], axis=0)
    g = F2 * rp[:, None]
    correction = 0.5 * dt * (0.5 * g[0] + g[1:-1].sum(axis=0) + 0.5 * g[-1])
    lhs = f(X[-1])
    init = f(X[0])
    res = lhs - init - wick_term - correction

    terms = {"lhs": _stats(lhs), "initial": _stats(init), "wick_integral": _stats(wick_term),
             "correction": _stats(correction)}
    st = _stats(res)
    diagnostics = {"n_steps": n_steps, "n_paths": n_paths, "seed": seed, "stream": stream, "modes": model.modes,
                   "preset": model.density.spec, "variance": "series", "residual_mean": st["mean"],
                   "residual_se": st["se"], "residual_max_abs": float(np.max(np.abs(res))),
                   "t0_default": default_t0(model)}
    return ItoReport("monte-carlo", name, (t0, t), None, abs(st["mean"]), terms, {}, diagnostics)
