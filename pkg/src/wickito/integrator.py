"""Wick-Ito integrals ``int_a^b Y(t) <> W(t) dt``.

An integrand lives on a fixed finite support ``S`` of multi-indices and is
given by a vectorized map ``times -> (len(times), |S|)`` of coefficients.
With ``W(t) = sum_k w_k(t) H_eps(k)`` every quantity below is a bilinear
form ``sum_{a in S, k} M[a, k] H_{alpha_a + eps(k)}`` evaluated by
:func:`wickito.chaos.wick_sum`:

* Riemann sum:  ``M = sum_j y(t_j) (c(t_{j+1}) - c(t_j))^T``
* reference:    ``M = int_a^b y(t) w(t)^T dt`` (adaptive, ``scipy.integrate.quad_vec``)

The Riemann sum is accumulated by summation by parts, so a constant
integrand telescopes to ``Y <> (X(b) - X(a))`` with no rounding residue.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .chaos import (ChaosVector, dual_norm, dual_weights, gaussian_monomials, unit_rows,
                    vage_constant, wick_sum)
from .errors import AccuracyError, DivergenceError, ParameterError
from .process import ProcessModel


@dataclass(frozen=True)
class IntegrandFn:
    """Chaos-valued ``Y(t)`` on a fixed support, declared bounded in ``H'_p``."""

    support: np.ndarray
    coeffs: Callable[[np.ndarray], np.ndarray]
    p: float
    max_order: int
    max_length: int
    name: str = "Y"
    constant: bool = False

    def __call__(self, t: float) -> ChaosVector:
        vals = np.asarray(self.coeffs(np.array([float(t)])))[0]
        return ChaosVector.from_rows(self.support, vals, self.max_order, self.max_length)

    # -- constructors -------------------------------------------------------

    @classmethod
    def fixed(cls, F: ChaosVector, p: float = 0.0, name: str = "const") -> "IntegrandFn":
        """``Y(t) = F`` for all t."""
        rows = F.rows if len(F) else np.zeros((1, 0), dtype=np.int64)
        vals = F.coeffs if len(F) else np.zeros(1)

        def coeffs(times, vals=vals):
            return np.broadcast_to(vals, (len(np.atleast_1d(times)), len(vals)))

        return cls(rows, coeffs, p, F.max_order, F.max_length, name, constant=True)

    @classmethod
    def constant_value(cls, value: float = 1.0, p: float = 0.0) -> "IntegrandFn":
        return cls.fixed(ChaosVector.constant(value), p, name=f"const({value:g})")

    @classmethod
    def process(cls, model: ProcessModel, p: float | None = None, scale: float = 1.0) -> "IntegrandFn":
        """``Y(t) = scale * X(t)``."""
        K = model.modes

        def coeffs(times):
            return scale * model.c(np.atleast_1d(times))

        return cls(unit_rows(K), coeffs, model.N + 4 if p is None else p, 1, K, name="X")

    @classmethod
    def wick_power(cls, model: ProcessModel, n: int, p: float | None = None) -> "IntegrandFn":
        """``Y(t) = X(t)^{<>n}``, coefficients ``n! c(t)^gamma / gamma!``."""
        from .chaos import enumerate_rows

        rows = enumerate_rows(n, model.modes, min_order=n)
        fact = math.factorial(n)

        def coeffs(times):
            return fact * gaussian_monomials(rows, model.c(np.atleast_1d(times)))

        return cls(rows, coeffs, model.N + 4 if p is None else p, n, model.modes, name=f"X^<>{n}")

    @classmethod
    def from_callable(cls, fn: Callable[[float], ChaosVector], support, p: float,
                      name: str = "Y") -> "IntegrandFn":
        """Wrap ``t -> ChaosVector``; coefficients outside ``support`` are an error."""
        if isinstance(support, ChaosVector):
            support = support.rows
        support = np.asarray(support, dtype=np.int64)
        max_order = int((support > 0).sum(axis=1).max()) if len(support) else 0
        max_length = int(support.max()) if support.size else 0

        def coeffs(times):
            out = np.empty((len(np.atleast_1d(times)), len(support)))
            for i, t in enumerate(np.atleast_1d(times)):
                F = fn(float(t))
                vals = F.project(support)
                if len(F) and not math.isclose(float(np.sum(vals**2)), float(np.sum(F.coeffs**2)),
                                                rel_tol=1e-12, abs_tol=1e-300):
                    raise ParameterError("integrand left its declared support")
                out[i] = vals
            return out

        return cls(support, coeffs, p, max_order, max_length, name)

    # -- algebra --------------------------------------------------------------

    def combine(self, other: "IntegrandFn", a: float = 1.0, b: float = 1.0) -> "IntegrandFn":
        """``a * self + b * other`` on the union support."""
        width = max(self.support.shape[1], other.support.shape[1])
        pad = lambda r: np.pad(r, ((0, 0), (0, width - r.shape[1])))
        both = np.concatenate([pad(self.support), pad(other.support)])
        union, inverse = np.unique(both, axis=0, return_inverse=True)
        inverse = inverse.ravel()
        i1, i2 = inverse[: len(self.support)], inverse[len(self.support):]

        def coeffs(times):
            t = np.atleast_1d(times)
            out = np.zeros((len(t), len(union)))
            np.add.at(out.T, i1, a * np.asarray(self.coeffs(t)).T)
            np.add.at(out.T, i2, b * np.asarray(other.coeffs(t)).T)
            return out

        return IntegrandFn(union, coeffs, max(self.p, other.p), max(self.max_order, other.max_order),
                           max(self.max_length, other.max_length), f"{a:g}*{self.name}+{b:g}*{other.name}",
                           constant=self.constant and other.constant)

    # -- diagnostics ----------------------------------------------------------

    def dual_norms(self, times, p: float | None = None) -> np.ndarray:
        wts = dual_weights(self.support, self.p if p is None else p)
        vals = np.asarray(self.coeffs(np.atleast_1d(times)))
        return np.sqrt((vals**2) @ wts)

    def check_bounded(self, a: float, b: float, samples: int = 65) -> float:
        """Largest sampled ``||Y(t)||'_p`` on ``[a, b]``; raises if not finite."""
        sup = float(np.max(self.dual_norms(np.linspace(a, b, samples))))
        if not math.isfinite(sup):
            raise ParameterError(f"integrand is not bounded in H'_{self.p:g} on [{a}, {b}]")
        return sup

    def modulus(self, delta: float, a: float, b: float, samples: int = 129, p: float | None = None) -> float:
        """Sampled modulus of continuity ``sup_{|t-s|<=delta} ||Y(t) - Y(s)||'_p``."""
        if self.constant:
            return 0.0
        wts = dual_weights(self.support, self.p if p is None else p)
        t = np.linspace(a, max(a, b - delta), samples)
        diff = np.asarray(self.coeffs(t + delta)) - np.asarray(self.coeffs(t))
        return float(np.max(np.sqrt((diff**2) @ wts)))


# ----------------------------------------------------------------------------


def partition_points(a: float, b: float, partition) -> np.ndarray:
    """Uniform ``n`` subintervals or an explicit increasing array from ``a`` to ``b``."""
    if not a < b:
        raise ParameterError("need a < b")
    if np.isscalar(partition):
        n = int(partition)
        if n < 1:
            raise ParameterError("partition needs at least one subinterval")
        return np.linspace(a, b, n + 1)
    pts = np.asarray(partition, dtype=float)
    if pts.ndim != 1 or len(pts) < 2:
        raise ParameterError("empty partition")
    if pts[0] != a or pts[-1] != b or np.any(np.diff(pts) <= 0):
        raise ParameterError("partition must increase strictly from a to b")
    return pts


def _result(Y: IntegrandFn, model: ProcessModel, M: np.ndarray) -> ChaosVector:
    return wick_sum(Y.support, unit_rows(model.modes), M, max_order=Y.max_order + 1,
                    max_length=max(Y.max_length, model.modes))


def riemann_weights(Y: IntegrandFn, model: ProcessModel, a: float, b: float, partition) -> np.ndarray:
    t = partition_points(a, b, partition)
    C = model.c(t)
    Yv = np.asarray(Y.coeffs(t[:-1]))
    # sum_j y_j (C_{j+1} - C_j) = y_{n-1} C_n - y_0 C_0 - sum_{j=1}^{n-1} (y_j - y_{j-1}) C_j
    M = np.outer(Yv[-1], C[-1]) - np.outer(Yv[0], C[0])
    if len(Yv) > 1:
        M -= np.diff(Yv, axis=0).T @ C[1:-1]
    return M


def riemann_sum(Y: IntegrandFn, model: ProcessModel, a: float, b: float, partition) -> ChaosVector:
    """Left-endpoint Wick-Riemann sum ``sum_j Y(t_j) <> (X(t_{j+1}) - X(t_j))``."""
    return _result(Y, model, riemann_weights(Y, model, a, b, partition))


def reference_weights(Y: IntegrandFn, model: ProcessModel, a: float, b: float,
                      tol: float = 1e-10, limit: int = 4000) -> np.ndarray:
    if not tol > 0:
        raise ParameterError("tol must be positive")
    if Y.constant:
        # exact antiderivative: int w = c(b) - c(a)
        C = model.c(np.array([a, b]))
        return np.outer(np.asarray(Y.coeffs(np.array([a])))[0], C[1] - C[0])

    def f(t):
        y = np.asarray(Y.coeffs(np.array([t])))[0]
        return np.outer(y, model.w(t)).ravel()

    val, err, info = integrate.quad_vec(f, a, b, epsabs=tol, epsrel=0.0, norm="max",
                                        limit=limit, full_output=True)
    if not info.success or err > tol:
        raise AccuracyError(f"reference integral did not reach tol={tol:g} (estimate {err:.2e}, "
                            f"{info.intervals.shape[0]} intervals)")
    return val.reshape(len(Y.support), model.modes)


def reference_integral(Y: IntegrandFn, model: ProcessModel, a: float, b: float,
                       tol: float = 1e-10) -> ChaosVector:
    """Adaptive quadrature of ``t -> Y(t) <> W(t)``, coefficientwise error ``<= tol``."""
    return _result(Y, model, reference_weights(Y, model, a, b, tol))


# ----------------------------------------------------------------------------


@dataclass
class ConvergenceReport:
    partitions: list[int]
    errors: list[float]
    slope: float | None
    p: float
    bounds: list[float] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if any(e < 0 for e in self.errors):
            raise ParameterError("errors must be nonnegative")
        if any(b <= a for a, b in zip(self.partitions, self.partitions[1:])):
            raise ParameterError("partitions must increase strictly")

    def to_dict(self) -> dict:
        return {"partitions": list(map(int, self.partitions)), "errors": list(map(float, self.errors)),
                "slope": self.slope, "p": self.p, "bounds": list(map(float, self.bounds)), **self.meta}

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)

    def csv_text(self, header_lines: Sequence[str] = ()) -> str:
        buf = io.StringIO()
        for line in header_lines:
            buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "error", "bound"])
        bounds = self.bounds or [float("nan")] * len(self.errors)
        for n, e, b in zip(self.partitions, self.errors, bounds):
            w.writerow([int(n), repr(float(e)), repr(float(b))])
        return buf.getvalue()

    def write_csv(self, path, header_lines: Sequence[str] = ()) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.csv_text(header_lines))


def fit_slope(ns: Sequence[int], errors: Sequence[float], skip: int = 2) -> float | None:
    """Least-squares slope of log error vs log n, dropping the ``skip`` coarsest partitions."""
    ns, errors = np.asarray(ns, dtype=float)[skip:], np.asarray(errors, dtype=float)[skip:]
    keep = errors > 0
    if keep.sum() < 2:
        return None
    return float(np.polyfit(np.log(ns[keep]), np.log(errors[keep]), 1)[0])


def riemann_error_bound(Y: IntegrandFn, model: ProcessModel, a: float, b: float, n: int, p: float) -> float:
    """``A(p - N - 3) * omega_Y(|Delta|) * sup ||W||'_{N+3} * (b - a)``; inf when ``p - N - 3 <= 1``."""
    l = model.N + 3
    try:
        A = vage_constant(p, l)
    except DivergenceError:
        return math.inf
    t = np.linspace(a, b, 65)
    w = model.w(t)
    wsup = float(np.max(np.sqrt((w**2) @ dual_weights(unit_rows(model.modes), l))))
    return A * Y.modulus((b - a) / n, a, b, p=p) * wsup * (b - a)


def convergence_study(Y: IntegrandFn, model: ProcessModel, a: float, b: float,
                      n_list: Sequence[int], p: float | None = None, tol: float = 1e-10) -> ConvergenceReport:
    """Errors ``||riemann_sum(n) - reference||'_p`` over ``n_list`` with fitted rate."""
    p = Y.p if p is None else p
    if p < model.N + 4:
        raise ParameterError(f"need p >= N+4 = {model.N + 4}, got {p}")
    Y.check_bounded(a, b)
    ref = reference_weights(Y, model, a, b, tol)
    errors, bounds = [], []
    for n in n_list:
        diff = _result(Y, model, riemann_weights(Y, model, a, b, n) - ref)
        errors.append(dual_norm(diff, p))
        bounds.append(riemann_error_bound(Y, model, a, b, n, p))
    meta = {"integrand": Y.name, "interval": [a, b], "preset": model.density.spec, "modes": model.modes}
    return ConvergenceReport(list(n_list), errors, fit_slope(n_list, errors), p, bounds, meta)
