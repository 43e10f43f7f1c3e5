"""Truncated p-adic scalars with relative-precision bookkeeping.

A :class:`PadicScalar` stores ``p**v * u`` where the unit ``u`` is known
modulo ``p**N``.  Multiplicative operations keep ``min(N_x, N_y)`` digits;
addition follows absolute-precision rules and raises
:class:`~padic_hua.errors.PrecisionExhausted` instead of inventing a
valuation when every tracked digit cancels.

Scalars built from rationals also remember their exact value.  Arithmetic
between two exact scalars is carried out on the rationals and re-rendered,
so exact cancellation produces the exact zero rather than an error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import DivisionByZero, PrecisionExhausted

INF = math.inf
DEFAULT_PRECISION = 32


def valuation(n: int, p: int) -> int | float:
    """p-adic valuation of an integer; ``INF`` for zero."""
    if n == 0:
        return INF
    n = abs(n)
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def split_unit(n: int, p: int) -> tuple[int, int]:
    """Return ``(v, m)`` with ``n == p**v * m`` and ``p`` not dividing ``m``."""
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v, n


def parse_rational(text) -> Fraction:
    """Accept ``"num/den"``, plain integers, or anything :class:`Fraction` takes."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    return Fraction(str(text).strip())


def format_rational(q: Fraction) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class PadicScalar:
    p: int
    v: int | float
    u: int
    N: int
    exact: Fraction | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("relative precision must be positive")
        if self.v != INF and self.u % self.p == 0:
            raise ValueError("unit part must be prime to p")

    # construction -------------------------------------------------------

    @classmethod
    def zero(cls, p: int, N: int = DEFAULT_PRECISION) -> PadicScalar:
        return cls(p, INF, 0, N, Fraction(0))

    @classmethod
    def one(cls, p: int, N: int = DEFAULT_PRECISION) -> PadicScalar:
        return cls(p, 0, 1, N, Fraction(1))

    @classmethod
    def from_fraction(cls, q, p: int, N: int = DEFAULT_PRECISION) -> PadicScalar:
        q = Fraction(q)
        if q == 0:
            return cls.zero(p, N)
        vn, num = split_unit(q.numerator, p)
        vd, den = split_unit(q.denominator, p)
        mod = p**N
        unit = num * pow(den, -1, mod) % mod
        return cls(p, vn - vd, unit, N, q)

    @classmethod
    def from_digits(cls, p: int, v: int, u: int, N: int) -> PadicScalar:
        """An inexact scalar: ``p**v * u`` with ``u`` known mod ``p**N``."""
        u %= p**N
        return cls(p, v, u, N)

    # inspection ---------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return self.v == INF

    @property
    def is_exact(self) -> bool:
        return self.exact is not None

    @property
    def abs_precision(self) -> int | float:
        return INF if self.is_zero else self.v + self.N

    def norm(self) -> Fraction:
        if self.is_zero:
            return Fraction(0)
        return Fraction(self.p) ** (-self.v)

    def to_fraction(self) -> Fraction:
        """Exact value when known, otherwise the truncated representative."""
        if self.exact is not None:
            return self.exact
        return Fraction(self.p) ** self.v * self.u

    def agrees(self, other: PadicScalar) -> bool:
        """Equality at precision: same valuation, units congruent mod p**min(N)."""
        if self.p != other.p:
            return False
        if self.is_zero or other.is_zero:
            return self.is_zero and other.is_zero
        if self.v != other.v:
            return False
        mod = self.p ** min(self.N, other.N)
        return (self.u - other.u) % mod == 0

    # arithmetic ---------------------------------------------------------

    def _check(self, other: PadicScalar):
        if self.p != other.p:
            raise ValueError(f"prime mismatch: {self.p} vs {other.p}")

    def _coerce(self, other) -> PadicScalar:
        if isinstance(other, PadicScalar):
            self._check(other)
            return other
        if isinstance(other, (int, Fraction)):
            return PadicScalar.from_fraction(other, self.p, self.N)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return add(self, other)

    __radd__ = __add__

    def __neg__(self):
        return neg(self)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return add(self, neg(other))

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return add(other, neg(self))

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return mul(self, inv(other))

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return mul(other, inv(self))

    # serialisation ------------------------------------------------------

    def __str__(self):
        if self.is_zero:
            return "0"
        return f"{self.p}^{self.v} * {self.u} (mod {self.p}^{self.N})"

    def to_json(self) -> dict:
        out = {"v": "inf" if self.is_zero else self.v, "u": self.u, "N": self.N}
        if self.exact is not None:
            out["q"] = format_rational(self.exact)
        return out

    @classmethod
    def from_json(cls, obj: dict, p: int) -> PadicScalar:
        N = int(obj["N"])
        if "q" in obj:
            return cls.from_fraction(parse_rational(obj["q"]), p, N)
        if obj["v"] == "inf":
            return cls(p, INF, 0, N)
        return cls.from_digits(p, int(obj["v"]), int(obj["u"]), N)


def add(x: PadicScalar, y: PadicScalar) -> PadicScalar:
    x._check(y)
    if x.is_zero:
        return y
    if y.is_zero:
        return x
    N = min(x.N, y.N)
    if x.exact is not None and y.exact is not None:
        return PadicScalar.from_fraction(x.exact + y.exact, x.p, N)
    p = x.p
    A = min(x.v + x.N, y.v + y.N)
    m = min(x.v, y.v)
    span = A - m
    if span <= 0:
        raise PrecisionExhausted("no overlapping digits", x=str(x), y=str(y))
    mod = p**span
    total = (x.u * p ** (x.v - m) + y.u * p ** (y.v - m)) % mod
    if total == 0:
        raise PrecisionExhausted(
            f"sum is zero modulo p^{A}", x=str(x), y=str(y)
        )
    dv, unit = split_unit(total, p)
    return PadicScalar.from_digits(p, m + dv, unit, span - dv)


def neg(x: PadicScalar) -> PadicScalar:
    if x.is_zero:
        return x
    ex = -x.exact if x.exact is not None else None
    return PadicScalar(x.p, x.v, (-x.u) % x.p**x.N, x.N, ex)


def mul(x: PadicScalar, y: PadicScalar) -> PadicScalar:
    x._check(y)
    N = min(x.N, y.N)
    if x.is_zero or y.is_zero:
        return PadicScalar.zero(x.p, N)
    if x.exact is not None and y.exact is not None:
        return PadicScalar.from_fraction(x.exact * y.exact, x.p, N)
    mod = x.p**N
    return PadicScalar(x.p, x.v + y.v, x.u * y.u % mod, N)


def inv(x: PadicScalar) -> PadicScalar:
    if x.is_zero:
        raise DivisionByZero("inverse of zero")
    if x.exact is not None:
        return PadicScalar.from_fraction(1 / x.exact, x.p, x.N)
    mod = x.p**x.N
    return PadicScalar(x.p, -x.v, pow(x.u, -1, mod), x.N)


def norm(x: PadicScalar) -> Fraction:
    return x.norm()


def from_rational(num: int, den: int, p: int, N: int = DEFAULT_PRECISION) -> PadicScalar:
    if den == 0:
        raise DivisionByZero("zero denominator")
    return PadicScalar.from_fraction(Fraction(num, den), p, N)
