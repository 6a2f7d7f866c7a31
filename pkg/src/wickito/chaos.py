"""Sparse chaos expansions ``F = sum_alpha f_alpha H_alpha``.

Storage
-------
A :class:`ChaosVector` keeps its support as an integer array of *mode rows*:
row ``i`` lists the occupied modes of ``alpha_i`` in ascending order, padded
with zeros on the right (``(2,0,1) -> [1, 1, 3]``). Under this encoding the
Wick product ``H_alpha <> H_beta = H_{alpha+beta}`` is "concatenate and
sort", which vectorizes over all pairs at once. Duplicate rows are merged
through an integer key (Horner encoding in base ``max_mode + 1``), falling
back to row-wise ``np.unique`` when the key would overflow int64.

Rows are kept in canonical order (graded, then lexicographic in the mode
list) and exact zero coefficients are dropped, so two vectors with the same
coefficients have identical arrays.

Norms
-----
``norm(F, k)``      = (sum (alpha!)^2 f^2 (2N)^{k alpha})^{1/2}
``dual_norm(G, k)`` = (sum g^2 (2N)^{-k alpha})^{1/2}
``wiener_norm(F)``  = (sum alpha! f^2)^{1/2}
``pairing(G, F)``   = sum alpha! f g

The factorial conventions are deliberately asymmetric (squared factorial in
the primal norm, none in the dual norm). All norm sums run in log-space.
"""
from __future__ import annotations

import json
import math
from typing import Iterable, Iterator, Mapping

import numpy as np
from scipy import special

from .errors import DimensionError, DivergenceError, ParameterError, TruncationOverflowError
from .hermite import hermite_poly_table
from .multi_index import MultiIndex, count_indices

# caps for Wick products; raise instead of silently truncating
PAIR_CAP = 60_000_000
ORDER_CAP = 64
_CHUNK_CELLS = 20_000_000
_INT64_LOG2 = 62.0


# ----------------------------------------------------------------------------
# mode-row kernels


def _as_rows(modes: np.ndarray) -> np.ndarray:
    modes = np.asarray(modes, dtype=np.int64)
    if modes.ndim != 2:
        raise DimensionError("mode rows must be a 2-d array")
    return modes


def _sort_rows(rows: np.ndarray) -> np.ndarray:
    """Sort each row ascending with zeros moved to the end."""
    if rows.shape[1] <= 1:
        return rows
    big = np.iinfo(np.int64).max
    tmp = np.where(rows == 0, big, rows)
    tmp.sort(axis=1)
    tmp[tmp == big] = 0
    return tmp


def _trim_cols(rows: np.ndarray) -> np.ndarray:
    if rows.size == 0:
        return rows[:, :0] if rows.shape[0] == 0 else rows
    width = int((rows > 0).sum(axis=1).max())
    return rows[:, :width]


def _keys(rows: np.ndarray) -> np.ndarray | None:
    """Horner keys, monotone in lexicographic row order; None if they would overflow."""
    n, D = rows.shape
    if D == 0:
        return np.zeros(n, dtype=np.int64)
    base = int(rows.max()) + 1
    if D * math.log2(base) > _INT64_LOG2:
        return None
    keys = np.zeros(n, dtype=np.int64)
    for j in range(D):
        keys = keys * base + rows[:, j]
    return keys


def _unique_rows(rows: np.ndarray):
    """Unique rows in lexicographic order with the inverse map."""
    keys = _keys(rows)
    if keys is not None:
        _, first, inverse = np.unique(keys, return_index=True, return_inverse=True)
        return rows[first], inverse.ravel()
    uniq, inverse = np.unique(rows, axis=0, return_inverse=True)
    return uniq, inverse.ravel()


def _canonical(rows: np.ndarray, coeffs: np.ndarray, drop_zeros: bool = True):
    rows = _as_rows(rows)
    coeffs = np.asarray(coeffs, dtype=float)
    if rows.shape[0] == 0:
        return np.zeros((0, 0), dtype=np.int64), np.zeros(0)
    rows = _trim_cols(rows)
    uniq, inverse = _unique_rows(rows)
    summed = np.bincount(inverse, weights=coeffs, minlength=len(uniq))
    order = (uniq > 0).sum(axis=1)
    # unique rows are already lexicographic; a stable sort by order makes them graded
    perm = np.argsort(order, kind="stable")
    uniq, summed = uniq[perm], summed[perm]
    if drop_zeros:
        keep = summed != 0.0
        uniq, summed = uniq[keep], summed[keep]
    return _trim_cols(uniq) if len(uniq) else np.zeros((0, 0), dtype=np.int64), summed


def _pad(rows: np.ndarray, width: int) -> np.ndarray:
    if rows.shape[1] >= width:
        return rows
    return np.pad(rows, ((0, 0), (0, width - rows.shape[1])))


def run_ranks(rows: np.ndarray) -> np.ndarray:
    """Multiplicity rank of each entry within its run (reusable by :func:`gaussian_monomials`)."""
    return _run_ranks(_as_rows(rows))


def _run_ranks(rows: np.ndarray) -> np.ndarray:
    """Position-wise multiplicity rank: [1,1,1,3] -> [1,2,3,1]; 0 where the row is padding."""
    ranks = np.zeros_like(rows)
    if rows.shape[1] == 0:
        return ranks
    ranks[:, 0] = (rows[:, 0] > 0).astype(np.int64)
    for i in range(1, rows.shape[1]):
        same = (rows[:, i] == rows[:, i - 1]) & (rows[:, i] > 0)
        ranks[:, i] = np.where(same, ranks[:, i - 1] + 1, (rows[:, i] > 0).astype(np.int64))
    return ranks


def _log_factorials(rows: np.ndarray) -> np.ndarray:
    ranks = _run_ranks(rows)
    with np.errstate(divide="ignore"):
        return np.where(ranks > 0, np.log(np.maximum(ranks, 1)), 0.0).sum(axis=1)


def _factorials(rows: np.ndarray) -> np.ndarray:
    return np.exp(_log_factorials(rows))


def _log_weights(rows: np.ndarray) -> np.ndarray:
    """``log (2N)^{alpha} = sum_j alpha_j log(2j)``."""
    with np.errstate(divide="ignore"):
        return np.where(rows > 0, np.log(2.0 * np.maximum(rows, 1)), 0.0).sum(axis=1)


def dual_weights(rows: np.ndarray, k: float) -> np.ndarray:
    """``(2N)^{-k alpha}`` for each support row."""
    return np.exp(-k * _log_weights(_as_rows(rows)))


def unit_rows(n_modes: int) -> np.ndarray:
    """Rows of ``eps(1), ..., eps(n_modes)``."""
    return np.arange(1, n_modes + 1, dtype=np.int64)[:, None]


def rows_of(indices: Iterable[MultiIndex]) -> np.ndarray:
    lists = [MultiIndex(a).modes() for a in indices]
    width = max((len(m) for m in lists), default=0)
    out = np.zeros((len(lists), width), dtype=np.int64)
    for i, m in enumerate(lists):
        out[i, : len(m)] = m
    return out


def enumerate_rows(max_order: int, n_modes: int, min_order: int = 0) -> np.ndarray:
    """Mode rows of all multi-indices with ``min_order <= |alpha| <= max_order`` on modes 1..n_modes."""
    from itertools import combinations_with_replacement

    total = count_indices(max_order, n_modes) - (count_indices(min_order - 1, n_modes) if min_order > 0 else 0)
    if total * max(max_order, 1) > _CHUNK_CELLS * 4:
        raise TruncationOverflowError(f"{total} multi-indices exceed the enumeration cap")
    out = np.zeros((total, max_order), dtype=np.int64)
    i = 0
    for n in range(min_order, max_order + 1):
        combos = list(combinations_with_replacement(range(1, n_modes + 1), n))
        block = np.array(combos, dtype=np.int64).reshape(len(combos), n)
        out[i : i + len(block), :n] = block
        i += len(block)
    return out


def wick_sum(left_rows: np.ndarray, right_rows: np.ndarray, weights: np.ndarray,
             max_order: int | None = None, max_length: int | None = None) -> "ChaosVector":
    """``sum_{a,b} weights[a, b] H_{left_a + right_b}``.

    This is the bilinear core of the Wick product: ``F <> G`` is the case
    ``weights = outer(f, g)``, and a Wick-Riemann sum over a fixed support is
    the case ``weights = sum_k y(t_k) dx_k^T``.
    """
    left_rows, right_rows = _as_rows(left_rows), _as_rows(right_rows)
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (len(left_rows), len(right_rows)):
        raise DimensionError("weight matrix does not match the supports")
    I, J = np.nonzero(weights)
    if len(I) > PAIR_CAP:
        raise TruncationOverflowError(f"{len(I)} Wick pairs exceed PAIR_CAP={PAIR_CAP}")
    width = left_rows.shape[1] + right_rows.shape[1]
    if width > ORDER_CAP:
        raise TruncationOverflowError(f"Wick product order {width} exceeds ORDER_CAP={ORDER_CAP}")
    if len(I) == 0:
        return ChaosVector.zero(max_order=max_order, max_length=max_length)
    chunk = max(1, _CHUNK_CELLS // max(width, 1))
    parts_r, parts_c = [], []
    for s in range(0, len(I), chunk):
        ii, jj = I[s : s + chunk], J[s : s + chunk]
        rows = _sort_rows(np.concatenate([left_rows[ii], right_rows[jj]], axis=1))
        r, c = _canonical(rows, weights[ii, jj], drop_zeros=False)
        parts_r.append(_pad(r, width))
        parts_c.append(c)
    if len(parts_r) == 1:
        rows, coeffs = parts_r[0], parts_c[0]
    else:
        rows, coeffs = np.concatenate(parts_r), np.concatenate(parts_c)
    return ChaosVector._from_rows(rows, coeffs, max_order=max_order, max_length=max_length)


# ----------------------------------------------------------------------------


class ChaosVector:
    """Finite chaos expansion with tracked truncation bounds.

    ``max_order`` and ``max_length`` bound the box of multi-indices inside
    which the coefficients are exact; they default to the support's own
    order and length and widen under Wick products.
    """

    __slots__ = ("_rows", "_coeffs", "max_order", "max_length", "_lookup")

    def __init__(self, terms: Mapping | None = None, max_order: int | None = None,
                 max_length: int | None = None):
        terms = dict(terms or {})
        keys = [k if isinstance(k, MultiIndex) else
                (MultiIndex.parse(k) if isinstance(k, str) else MultiIndex(k)) for k in terms]
        rows = rows_of(keys)
        coeffs = np.array([float(v) for v in terms.values()])
        self._set(*_canonical(rows, coeffs), max_order, max_length)

    def _set(self, rows, coeffs, max_order, max_length):
        self._rows = rows
        self._coeffs = coeffs
        self._rows.setflags(write=False)
        self._coeffs.setflags(write=False)
        order = int((rows > 0).sum(axis=1).max()) if len(rows) else 0
        length = int(rows.max()) if rows.size else 0
        self.max_order = max(order, max_order if max_order is not None else 0)
        self.max_length = max(length, max_length if max_length is not None else 0)
        self._lookup = None

    @classmethod
    def _from_rows(cls, rows, coeffs, max_order=None, max_length=None, canonical=False):
        obj = cls.__new__(cls)
        if canonical:
            rows = _as_rows(rows)
            keep = np.asarray(coeffs) != 0.0
            rows, coeffs = _trim_cols(rows[keep]) if keep.any() else np.zeros((0, 0), np.int64), np.asarray(coeffs, float)[keep]
        else:
            rows, coeffs = _canonical(rows, coeffs)
        obj._set(np.ascontiguousarray(rows), np.ascontiguousarray(coeffs), max_order, max_length)
        return obj

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, max_order=None, max_length=None) -> "ChaosVector":
        return cls({}, max_order=max_order, max_length=max_length)

    @classmethod
    def constant(cls, value: float) -> "ChaosVector":
        return cls({MultiIndex(): value})

    @classmethod
    def basis(cls, alpha, coeff: float = 1.0) -> "ChaosVector":
        alpha = MultiIndex.parse(alpha) if isinstance(alpha, str) else MultiIndex(alpha)
        return cls({alpha: coeff})

    @classmethod
    def first_order(cls, coeffs, max_length: int | None = None) -> "ChaosVector":
        """``sum_k c_k H_{eps(k)}`` for ``k = 1..len(coeffs)``."""
        c = np.asarray(coeffs, dtype=float).ravel()
        rows = np.arange(1, len(c) + 1, dtype=np.int64)[:, None]
        keep = c != 0
        return cls._from_rows(rows[keep], c[keep], max_order=1,
                              max_length=len(c) if max_length is None else max_length, canonical=True)

    @classmethod
    def from_rows(cls, rows, coeffs, max_order=None, max_length=None) -> "ChaosVector":
        return cls._from_rows(rows, coeffs, max_order=max_order, max_length=max_length)

    # -- access ---------------------------------------------------------------

    @property
    def rows(self) -> np.ndarray:
        return self._rows

    @property
    def coeffs(self) -> np.ndarray:
        return self._coeffs

    @property
    def truncation(self) -> tuple[int, int]:
        return (self.max_order, self.max_length)

    @property
    def orders(self) -> np.ndarray:
        return (self._rows > 0).sum(axis=1)

    def __len__(self) -> int:
        return len(self._coeffs)

    def indices(self) -> list[MultiIndex]:
        return [MultiIndex.from_modes(r) for r in self._rows]

    def items(self) -> Iterator[tuple[MultiIndex, float]]:
        return zip(self.indices(), map(float, self._coeffs))

    def to_dict(self) -> dict[MultiIndex, float]:
        return dict(self.items())

    def __getitem__(self, alpha) -> float:
        if self._lookup is None:
            self._lookup = self.to_dict()
        alpha = MultiIndex.parse(alpha) if isinstance(alpha, str) else MultiIndex(alpha)
        return self._lookup.get(alpha, 0.0)

    def first_order_coeffs(self, n_modes: int | None = None) -> np.ndarray:
        """Dense ``c_k`` for the order-1 part."""
        n = self.max_length if n_modes is None else n_modes
        out = np.zeros(n)
        sel = self.orders == 1
        modes = self._rows[sel, 0] if self._rows.shape[1] else np.zeros(0, np.int64)
        ok = modes <= n
        out[modes[ok] - 1] = self._coeffs[sel][ok]
        return out

    def order_part(self, n: int) -> "ChaosVector":
        sel = self.orders == n
        return ChaosVector._from_rows(self._rows[sel], self._coeffs[sel], self.max_order,
                                      self.max_length, canonical=True)

    def project(self, rows: np.ndarray) -> np.ndarray:
        """Coefficients of ``self`` on the given support rows (0 where absent)."""
        rows = _as_rows(rows)
        width = max(rows.shape[1], self._rows.shape[1])
        both = np.concatenate([_pad(rows, width), _pad(self._rows, width)])
        _, inverse = _unique_rows(both)
        n = len(rows)
        lookup = np.zeros(inverse.max() + 1 if len(inverse) else 0)
        lookup[inverse[n:]] = self._coeffs
        return lookup[inverse[:n]]

    # -- linear structure ----------------------------------------------------

    def _combine(self, other: "ChaosVector", sign: float) -> "ChaosVector":
        width = max(self._rows.shape[1], other._rows.shape[1])
        rows = np.concatenate([_pad(self._rows, width), _pad(other._rows, width)])
        coeffs = np.concatenate([self._coeffs, sign * other._coeffs])
        return ChaosVector._from_rows(rows, coeffs, max(self.max_order, other.max_order),
                                      max(self.max_length, other.max_length))

    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = ChaosVector.constant(other)
        if not isinstance(other, ChaosVector):
            return NotImplemented
        return self._combine(other, 1.0)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, (int, float)):
            other = ChaosVector.constant(other)
        if not isinstance(other, ChaosVector):
            return NotImplemented
        return self._combine(other, -1.0)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return self * -1.0

    def __mul__(self, scalar):
        if not isinstance(scalar, (int, float, np.floating, np.integer)):
            return NotImplemented
        if scalar == 0:
            return ChaosVector.zero(self.max_order, self.max_length)
        return ChaosVector._from_rows(self._rows, self._coeffs * float(scalar), self.max_order,
                                      self.max_length, canonical=True)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def __eq__(self, other):
        if not isinstance(other, ChaosVector):
            return NotImplemented
        return (self._rows.shape == other._rows.shape and np.array_equal(self._rows, other._rows)
                and np.array_equal(self._coeffs, other._coeffs))

    __hash__ = None

    def allclose(self, other: "ChaosVector", atol: float = 1e-12) -> bool:
        return max_abs_diff(self, other) <= atol

    def __repr__(self) -> str:
        head = ", ".join(f"{a}: {c:.6g}" for a, c in list(self.items())[:6])
        more = ", ..." if len(self) > 6 else ""
        return f"ChaosVector({{{head}{more}}}, truncation={self.truncation})"

    # -- serialization -------------------------------------------------------

    def to_json(self) -> list[dict]:
        return [{"alpha": str(a), "coeff": c} for a, c in self.items()]

    @classmethod
    def from_json(cls, data) -> "ChaosVector":
        if isinstance(data, str):
            data = json.loads(data)
        return cls({MultiIndex.parse(d["alpha"]): float(d["coeff"]) for d in data})

    # -- algebra --------------------------------------------------------------

    def wick(self, other: "ChaosVector") -> "ChaosVector":
        return wick(self, other)

    def expectation(self) -> float:
        """Coefficient of ``H_0``."""
        if len(self) and self.orders[0] == 0:
            return float(self._coeffs[0])
        return 0.0


def max_abs_diff(a: ChaosVector, b: ChaosVector) -> float:
    d = a - b
    return float(np.max(np.abs(d.coeffs))) if len(d) else 0.0


# ----------------------------------------------------------------------------
# norms and pairing


def _logsumexp_sqrt(logs: np.ndarray) -> float:
    if logs.size == 0:
        return 0.0
    return float(np.exp(0.5 * special.logsumexp(logs)))


def norm(F: ChaosVector, k: float) -> float:
    """Primal weighted norm ``||F||_k`` (squared factorials)."""
    if len(F) == 0:
        return 0.0
    logs = 2 * _log_factorials(F.rows) + 2 * np.log(np.abs(F.coeffs)) + k * _log_weights(F.rows)
    return _logsumexp_sqrt(logs)


def dual_norm(G: ChaosVector, k: float) -> float:
    """Dual weighted norm ``||G||'_k`` (no factorials)."""
    if len(G) == 0:
        return 0.0
    logs = 2 * np.log(np.abs(G.coeffs)) - k * _log_weights(G.rows)
    return _logsumexp_sqrt(logs)


def dual_norm_by_order(G: ChaosVector, k: float) -> dict[int, float]:
    orders = G.orders
    return {int(n): dual_norm(G.order_part(int(n)), k) for n in np.unique(orders)}


def wiener_norm(F: ChaosVector) -> float:
    """``||F||_W = (sum alpha! f^2)^{1/2}``, the L2 norm of the random variable."""
    if len(F) == 0:
        return 0.0
    logs = _log_factorials(F.rows) + 2 * np.log(np.abs(F.coeffs))
    return _logsumexp_sqrt(logs)


def pairing(G: ChaosVector, F: ChaosVector) -> float:
    """Duality pairing ``<G, F> = sum alpha! f_alpha g_alpha``."""
    if len(G) == 0 or len(F) == 0:
        return 0.0
    g_on_f = G.project(F.rows)
    return float(np.sum(_factorials(F.rows) * F.coeffs * g_on_f))


# ----------------------------------------------------------------------------
# Wick product, Wick exponential, Vage constant


def wick(F: ChaosVector, G: ChaosVector) -> ChaosVector:
    """Wick product, ``H_alpha <> H_beta = H_{alpha+beta}`` extended bilinearly."""
    return wick_sum(F.rows, G.rows, np.outer(F.coeffs, G.coeffs),
                    max_order=F.max_order + G.max_order,
                    max_length=max(F.max_length, G.max_length))


def wick_power(F: ChaosVector, n: int) -> ChaosVector:
    if n < 0:
        raise ParameterError("Wick power must be >= 0")
    out = ChaosVector.constant(1.0)
    for _ in range(n):
        out = wick(out, F)
    return out


def wick_exp(F: ChaosVector, terms: int) -> ChaosVector:
    """Truncated Wick exponential ``e^{f_0} sum_{n<=terms} (F - f_0)^{<>n} / n!``."""
    if terms < 1:
        raise ParameterError("need at least one term")
    f0 = F.expectation()
    G = F - f0
    out = ChaosVector.constant(1.0)
    power = ChaosVector.constant(1.0)
    for n in range(1, terms + 1):
        power = wick(power, G) / n
        out = out + power
    return out * math.exp(f0)


def gaussian_monomials(rows: np.ndarray, coeffs, ranks: np.ndarray | None = None) -> np.ndarray:
    """``c^gamma / gamma!`` for each row; ``coeffs`` is ``(K,)`` or ``(T, K)``.

    These are the coefficients of ``exp<>(sum_k c_k H_eps(k))``; the Wick
    power ``X^{<>n}`` has coefficients ``n! c^gamma / gamma!`` on ``|gamma| = n``.
    """
    rows = _as_rows(rows)
    c = np.asarray(coeffs, dtype=float)
    single = c.ndim == 1
    c2 = np.atleast_2d(c)
    if rows.size and rows.max() > c2.shape[1]:
        raise DimensionError("support uses more modes than coefficients given")
    vals = np.ones((c2.shape[0], len(rows)))
    ranks = _run_ranks(rows) if ranks is None else ranks
    for i in range(rows.shape[1]):
        occ = np.nonzero(rows[:, i] > 0)[0]
        vals[:, occ] *= c2[:, rows[occ, i] - 1] / ranks[occ, i]
    return vals[0] if single else vals


def gaussian_wick_exp(coeffs, order: int, scale: float = 1.0) -> ChaosVector:
    """Closed form of ``scale * exp<>(sum_k c_k H_eps(k))`` truncated at ``order``.

    The coefficient of ``H_gamma`` is ``scale * prod_k c_k^{gamma_k} / gamma!``.
    """
    c = np.asarray(coeffs, dtype=float)
    rows = enumerate_rows(order, len(c))
    vals = float(scale) * gaussian_monomials(rows, c)
    return ChaosVector._from_rows(rows, vals, max_order=order, max_length=len(c))


def vage_constant(k: float, l: float) -> float:
    """``A(k-l) = (sum_alpha (2N)^{(l-k) alpha})^{1/2}``.

    Uses ``sum_alpha (2N)^{-c alpha} = prod_j (1 - (2j)^{-c})^{-1}`` and
    ``log prod = sum_{m>=1} 2^{-cm} zeta(cm) / m``; the neglected tail is
    bounded by ``zeta(c(M+1)) 2^{-c(M+1)} / ((M+1)(1 - 2^{-c}))``.
    """
    c = float(k) - float(l)
    if c <= 1.0:
        raise DivergenceError(f"the series defining A(k-l) diverges for k-l = {c} <= 1")
    total = 0.0
    m = 1
    while True:
        total += 2.0 ** (-c * m) * special.zeta(c * m) / m
        nxt = m + 1
        bound = special.zeta(c * nxt) * 2.0 ** (-c * nxt) / (nxt * (1 - 2.0 ** (-c)))
        if bound < 1e-17 * max(total, 1e-300) or bound < 1e-300:
            break
        m = nxt
    return math.sqrt(math.exp(total))


# ----------------------------------------------------------------------------
# realization


def eval_realization(F: ChaosVector, z) -> np.ndarray | float:
    """``sum_alpha f_alpha prod_j He_{alpha_j}(z_j)`` for coordinates ``z``.

    ``z`` has shape ``(n_modes,)`` or ``(n_samples, n_modes)``.
    """
    z = np.asarray(z, dtype=float)
    single = z.ndim == 1
    z2 = np.atleast_2d(z)
    if F.max_length > 0 and len(F) and z2.shape[1] < int(F.rows.max()):
        raise DimensionError(f"need {int(F.rows.max())} coordinates, got {z2.shape[1]}")
    if len(F) == 0:
        out = np.zeros(len(z2))
        return float(out[0]) if single else out
    rows = F.rows
    ranks = _run_ranks(rows)
    D = rows.shape[1]
    table = hermite_poly_table(max(D, 1), z2.T)  # (D+1, n_modes, n_samples)
    out = np.zeros(len(z2))
    step = max(1, _CHUNK_CELLS // max(len(z2), 1))
    for s in range(0, len(rows), step):
        r, rk, c = rows[s : s + step], ranks[s : s + step], F.coeffs[s : s + step]
        prod = np.ones((len(r), len(z2)))
        for i in range(D):
            is_end = r[:, i] > 0
            if i < D - 1:
                is_end &= r[:, i + 1] != r[:, i]
            sel = np.nonzero(is_end)[0]
            if len(sel):
                prod[sel] *= table[rk[sel, i], r[sel, i] - 1, :]
        out += c @ prod
    return float(out[0]) if single else out
