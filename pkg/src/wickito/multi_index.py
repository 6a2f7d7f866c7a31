"""Multi-indices: finitely supported sequences of nonnegative integers.

A multi-index ``alpha = (alpha_1, alpha_2, ...)`` labels the chaos basis
element ``H_alpha``. Positions are 1-based, so the weight of position ``j``
is ``2j``. The stored tuple never has trailing zeros, which makes equality
and hashing structural.

Canonical order (used everywhere output is sorted): graded by order
``|alpha|``, then lexicographic in the ascending list of occupied modes.
For example ``(2) < (1,1) < (0,2)`` because their mode lists are
``[1,1] < [1,2] < [2,2]``.
"""
from __future__ import annotations

import itertools
import math
from typing import Iterable, Iterator

from .errors import ParameterError, TruncationOverflowError

DEFAULT_ENUMERATION_CAP = 2_000_000

# |k * alpha_j * log(2j)| above this switches weight() to log-space
_LOG_THRESHOLD = 600.0


class MultiIndex(tuple):
    """Trimmed tuple of nonnegative integers.

    ``+`` is componentwise addition (not tuple concatenation).
    """

    __slots__ = ()

    def __new__(cls, entries: Iterable[int] = ()) -> "MultiIndex":
        vals = [int(a) for a in entries]
        if any(a < 0 for a in vals):
            raise ParameterError(f"multi-index entries must be >= 0, got {vals}")
        while vals and vals[-1] == 0:
            vals.pop()
        return super().__new__(cls, vals)

    @classmethod
    def unit(cls, k: int) -> "MultiIndex":
        """``epsilon^(k)``: a single 1 in (1-based) position k."""
        if k < 1:
            raise ParameterError("unit index position starts at 1")
        return cls([0] * (k - 1) + [1])

    @classmethod
    def from_modes(cls, modes: Iterable[int]) -> "MultiIndex":
        """Build from a list of occupied modes with repetition, e.g. [1,1,3] -> (2,0,1)."""
        modes = [int(m) for m in modes if int(m) != 0]
        if not modes:
            return cls()
        if min(modes) < 1:
            raise ParameterError("modes are 1-based")
        vals = [0] * max(modes)
        for m in modes:
            vals[m - 1] += 1
        return cls(vals)

    @classmethod
    def parse(cls, text: str) -> "MultiIndex":
        text = text.strip()
        if text in ("", "0"):
            return cls()
        try:
            return cls(int(a) for a in text.split(","))
        except ValueError as exc:
            raise ParameterError(f"cannot parse multi-index {text!r}") from exc

    @property
    def order(self) -> int:
        return sum(self)

    @property
    def length(self) -> int:
        return len(self)

    def modes(self) -> tuple[int, ...]:
        """Ascending list of occupied modes, with multiplicity."""
        return tuple(j for j, a in enumerate(self, start=1) for _ in range(a))

    def sort_key(self) -> tuple[int, tuple[int, ...]]:
        return (self.order, self.modes())

    def __add__(self, other: "MultiIndex") -> "MultiIndex":  # type: ignore[override]
        return add(self, MultiIndex(other))

    def __radd__(self, other):  # sum() starts from 0
        if other == 0:
            return self
        return add(MultiIndex(other), self)

    def __mul__(self, other):  # tuple repetition makes no sense here
        return NotImplemented

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"MultiIndex({', '.join(map(str, self))})"

    def __str__(self) -> str:
        return ",".join(map(str, self)) if self else "0"


ZERO = MultiIndex()


def factorial(alpha: MultiIndex) -> int:
    """``alpha! = prod_j alpha_j!`` as an exact integer."""
    out = 1
    for a in alpha:
        out *= math.factorial(a)
    return out


def log_weight(alpha: MultiIndex, k: float) -> float:
    return k * sum(a * math.log(2 * j) for j, a in enumerate(alpha, start=1) if a)


def weight(alpha: MultiIndex, k: float) -> float:
    """``(2N)^{k alpha} = prod_j (2j)^{k alpha_j}``.

    Evaluated as a direct product when every factor is moderate and via
    ``exp(log_weight)`` otherwise; the result may still be 0.0 or inf if it
    lies outside double range.
    """
    if any(abs(k * a * math.log(2 * j)) > _LOG_THRESHOLD for j, a in enumerate(alpha, start=1) if a):
        lw = log_weight(alpha, k)
        if lw > 709.0:
            return math.inf
        return math.exp(lw)
    out = 1.0
    for j, a in enumerate(alpha, start=1):
        if a:
            out *= float(2 * j) ** (k * a)
    return out


def add(alpha: MultiIndex, beta: MultiIndex) -> MultiIndex:
    n = max(len(alpha), len(beta))
    a = tuple(alpha) + (0,) * (n - len(alpha))
    b = tuple(beta) + (0,) * (n - len(beta))
    return MultiIndex(x + y for x, y in zip(a, b))


def count_indices(max_order: int, max_length: int) -> int:
    """Number of multi-indices with ``|alpha| <= max_order`` and length ``<= max_length``."""
    return math.comb(max_order + max_length, max_length)


def iter_indices(max_order: int, max_length: int) -> Iterator[MultiIndex]:
    for n in range(max_order + 1):
        for modes in itertools.combinations_with_replacement(range(1, max_length + 1), n):
            yield MultiIndex.from_modes(modes)


def enumerate_indices(max_order: int, max_length: int, cap: int = DEFAULT_ENUMERATION_CAP) -> list[MultiIndex]:
    """All multi-indices within the bounds, in canonical order.

    >>> [str(a) for a in enumerate_indices(2, 2)]
    ['0', '1', '0,1', '2', '1,1', '0,2']
    """
    if max_order < 0 or max_length < 1:
        raise ParameterError("need max_order >= 0 and max_length >= 1")
    n = count_indices(max_order, max_length)
    if n > cap:
        raise TruncationOverflowError(f"{n} multi-indices exceed the enumeration cap {cap}")
    return list(iter_indices(max_order, max_length))
