"""Exact dyadic rationals and closed enclosures with dyadic endpoints.

Every truth value handled by the package is a :class:`Dyadic`.  Arithmetic is
exact; nothing here ever rounds.  An exponent cap guards memory, and crossing
it raises :class:`PrecisionError` instead of silently losing bits.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering

DEFAULT_EXPONENT_CAP = 1 << 16
_exponent_cap = DEFAULT_EXPONENT_CAP


class PrecisionError(ArithmeticError):
    """Raised when a result would need more than the configured exponent cap."""


class InconsistencyError(ValueError):
    """Two enclosures of the same quantity failed to overlap."""


def exponent_cap() -> int:
    return _exponent_cap


def set_exponent_cap(cap: int) -> int:
    """Set the global exponent cap and return the previous value."""
    global _exponent_cap
    if cap < 0:
        raise ValueError("exponent cap must be non-negative")
    old, _exponent_cap = _exponent_cap, cap
    return old


def _normalize(m: int, e: int) -> tuple[int, int]:
    if m == 0:
        return 0, 0
    tz = (m & -m).bit_length() - 1
    shift = tz if tz < e else e
    return m >> shift, e - shift


@total_ordering
@dataclass(frozen=True, slots=True)
class Dyadic:
    """The number ``mantissa / 2**exponent`` in canonical form.

    Canonical means the mantissa is odd, or the whole value is ``0/2^0``.
    The constructor rejects anything else; use :meth:`make` to normalize.
    """

    mantissa: int
    exponent: int = 0

    def __post_init__(self):
        m, e = self.mantissa, self.exponent
        if not isinstance(m, int) or not isinstance(e, int):
            raise TypeError("mantissa and exponent must be integers")
        if e < 0:
            raise ValueError("exponent must be non-negative")
        if (m == 0 and e != 0) or (e > 0 and m % 2 == 0):
            raise ValueError(f"non-canonical dyadic {m}/2^{e}")
        if e > _exponent_cap:
            raise PrecisionError(f"exponent {e} exceeds cap {_exponent_cap}")

    @classmethod
    def make(cls, mantissa: int, exponent: int = 0) -> Dyadic:
        if exponent < 0:
            return cls(mantissa << -exponent, 0)
        return cls(*_normalize(mantissa, exponent))

    @classmethod
    def from_fraction(cls, value: Fraction | int) -> Dyadic:
        value = Fraction(value)
        den = value.denominator
        if den & (den - 1):
            raise ValueError(f"{value} is not a dyadic rational")
        return cls.make(value.numerator, den.bit_length() - 1)

    @classmethod
    def parse(cls, text: str) -> Dyadic:
        """Read ``m/2^e``, ``m/d`` with ``d`` a power of two, an integer or a decimal."""
        s = text.strip().replace(" ", "")
        match = re.fullmatch(r"([+-]?\d+)/2\^(\d+)", s)
        if match:
            return cls.make(int(match.group(1)), int(match.group(2)))
        try:
            value = Fraction(s)
        except (ValueError, ZeroDivisionError):
            raise ValueError(f"cannot read {text!r} as a dyadic rational") from None
        return cls.from_fraction(value)

    def to_fraction(self) -> Fraction:
        return Fraction(self.mantissa, 1 << self.exponent)

    def __float__(self) -> float:
        return self.mantissa / (1 << self.exponent)

    def __str__(self) -> str:
        if self.exponent == 0:
            return str(self.mantissa)
        return f"{self.mantissa}/2^{self.exponent}"

    def __repr__(self) -> str:
        return f"Dyadic({self})"

    def decimal(self) -> str:
        """Exact decimal expansion (a dyadic always has a finite one)."""
        m, e = self.mantissa, self.exponent
        sign = "-" if m < 0 else ""
        digits = str(abs(m) * 5**e).rjust(e + 1, "0")
        if e == 0:
            return sign + digits
        return f"{sign}{digits[:-e]}.{digits[-e:]}"

    # exact arithmetic
    def __add__(self, other: Dyadic) -> Dyadic:
        if not isinstance(other, Dyadic):
            return NotImplemented
        m1, e1, m2, e2 = self.mantissa, self.exponent, other.mantissa, other.exponent
        if e1 >= e2:
            return Dyadic(*_normalize(m1 + (m2 << (e1 - e2)), e1))
        return Dyadic(*_normalize((m1 << (e2 - e1)) + m2, e2))

    def __neg__(self) -> Dyadic:
        return Dyadic(-self.mantissa, self.exponent)

    def __abs__(self) -> Dyadic:
        return self if self.mantissa >= 0 else -self

    def __sub__(self, other: Dyadic) -> Dyadic:
        if not isinstance(other, Dyadic):
            return NotImplemented
        return self + (-other)

    def __mul__(self, other: Dyadic | int) -> Dyadic:
        if isinstance(other, int):
            return Dyadic(*_normalize(self.mantissa * other, self.exponent))
        if not isinstance(other, Dyadic):
            return NotImplemented
        return Dyadic(*_normalize(self.mantissa * other.mantissa, self.exponent + other.exponent))

    __rmul__ = __mul__

    def scale(self, k: int) -> Dyadic:
        """Multiply by ``2**k`` (``k`` may be negative)."""
        if k >= 0:
            return Dyadic(*_normalize(self.mantissa << k, self.exponent))
        return Dyadic.make(self.mantissa, self.exponent - k)

    def __lt__(self, other: Dyadic) -> bool:
        if not isinstance(other, Dyadic):
            return NotImplemented
        e1, e2 = self.exponent, other.exponent
        if e1 >= e2:
            return self.mantissa < other.mantissa << (e1 - e2)
        return self.mantissa << (e2 - e1) < other.mantissa

    @property
    def is_truth_value(self) -> bool:
        return self.mantissa >= 0 and self.mantissa <= (1 << self.exponent)


ZERO = Dyadic(0)
ONE = Dyadic(1)
HALF = Dyadic(1, 1)


def pow2(k: int) -> Dyadic:
    """``2**k`` for any integer ``k``."""
    return Dyadic(1, -k) if k < 0 else Dyadic(1 << k)


def _truth(a: Dyadic) -> Dyadic:
    if not isinstance(a, Dyadic):
        raise TypeError(f"expected Dyadic, got {type(a).__name__}")
    if not a.is_truth_value:
        raise ValueError(f"{a} is not a truth value in [0, 1]")
    return a


def d_add(a: Dyadic, b: Dyadic) -> Dyadic:
    return a + b


def d_half(a: Dyadic) -> Dyadic:
    return a.scale(-1)


def d_neg(a: Dyadic) -> Dyadic:
    """Continuous negation ``1 - a``."""
    return ONE - _truth(a)


def d_tsub(a: Dyadic, b: Dyadic) -> Dyadic:
    """Truncated subtraction ``max(a - b, 0)``."""
    _truth(a), _truth(b)
    return a - b if b < a else ZERO


def d_min(a: Dyadic, b: Dyadic) -> Dyadic:
    return a if a <= b else b


def d_max(a: Dyadic, b: Dyadic) -> Dyadic:
    return a if a >= b else b


def d_avg(a: Dyadic, b: Dyadic) -> Dyadic:
    """Mean of two truth values, built only from ``half``, ``tsub`` and ``max``."""
    return d_max(d_tsub(a, d_half(d_tsub(a, b))), d_tsub(b, d_half(d_tsub(b, a))))


def tail_weight(K: int) -> Dyadic:
    """Total weight ``2^-(K+1)`` of the series terms past index ``K``."""
    if K < 0:
        raise ValueError("K must be non-negative")
    return pow2(-(K + 1))


@dataclass(frozen=True, slots=True)
class Enclosure:
    """A closed interval ``[lo, hi]`` known to contain some real quantity."""

    lo: Dyadic
    hi: Dyadic

    def __post_init__(self):
        if self.hi < self.lo:
            raise ValueError(f"empty enclosure [{self.lo}, {self.hi}]")

    @property
    def width(self) -> Dyadic:
        return self.hi - self.lo

    @property
    def pinned(self) -> bool:
        return self.lo == self.hi

    def contains(self, x: Dyadic) -> bool:
        return self.lo <= x <= self.hi

    def within(self, other: Enclosure) -> bool:
        return other.lo <= self.lo and self.hi <= other.hi

    def __str__(self) -> str:
        return f"[{self.lo}, {self.hi}]"

    def to_json(self) -> dict:
        return {
            "lo": str(self.lo),
            "hi": str(self.hi),
            "lo_decimal": self.lo.decimal(),
            "hi_decimal": self.hi.decimal(),
        }


UNIT = Enclosure(ZERO, ONE)


def enclose(lo: Dyadic, hi: Dyadic) -> Enclosure:
    return Enclosure(lo, hi)


def point(x: Dyadic) -> Enclosure:
    return Enclosure(x, x)


def intersect(e1: Enclosure, e2: Enclosure) -> Enclosure:
    lo, hi = d_max(e1.lo, e2.lo), d_min(e1.hi, e2.hi)
    if hi < lo:
        raise InconsistencyError(f"disjoint enclosures {e1} and {e2}")
    return Enclosure(lo, hi)


def clip_unit(e: Enclosure) -> Enclosure:
    """Clamp an enclosure of a truth value into ``[0, 1]``."""
    lo = d_min(d_max(e.lo, ZERO), ONE)
    hi = d_max(d_min(e.hi, ONE), ZERO)
    return Enclosure(lo, hi)
