"""Full-rank O_p-lattices in Q_p^n with exact rational bases.

A lattice is stored through its canonical basis: upper triangular, diagonal
``p**a_i``, and every entry above the diagonal reduced modulo the diagonal
entry of its row to a representative ``m * p**-k`` with ``0 <= m < p**(a_i+k)``.
Columns of the basis generate the lattice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import NamedTuple, Sequence

from .errors import ConvergenceDomain, ShapeMismatch, SingularMatrix
from .linalg import PadicMatrix, exact_det, exact_inverse, qval
from .padic import INF, split_unit


def _unit_part(x: Fraction, p: int):
    """``(v, u)`` with ``x = p**v * u`` and ``u`` a rational p-adic unit."""
    vn, num = split_unit(x.numerator, p)
    vd, den = split_unit(x.denominator, p)
    return vn - vd, Fraction(num, den)


def reduce_mod(h: Fraction, a: int, p: int) -> Fraction:
    """Canonical representative of ``h`` modulo ``p**a O_p``."""
    if h == 0:
        return Fraction(0)
    v, u = _unit_part(h, p)
    if v >= a:
        return Fraction(0)
    q = p ** (a - v)
    digits = u.numerator * pow(u.denominator, -1, q) % q
    return Fraction(digits) * Fraction(p) ** v


def hermite_form(gens: Sequence[Sequence[Fraction]], p: int):
    """Canonical basis of the O_p-span of the columns of ``gens``.

    Returns ``(H, a)`` where ``H`` is the n x n canonical matrix and ``a`` the
    diagonal exponents.  Raises :class:`SingularMatrix` if the span has rank
    below ``n``.
    """
    n = len(gens)
    cols = [[Fraction(gens[i][j]) for i in range(n)] for j in range(len(gens[0]))]
    chosen = [None] * n
    for i in reversed(range(n)):
        best = None
        for idx, c in enumerate(cols):
            if c[i] != 0:
                v = qval(c[i], p)
                if best is None or v < best[0]:
                    best = (v, idx)
        if best is None:
            raise SingularMatrix("generators do not span a full-rank lattice")
        v, idx = best
        piv = cols.pop(idx)
        scale = Fraction(p) ** v / piv[i]
        piv = [x * scale for x in piv]
        for c in cols:
            if c[i] != 0:
                f = c[i] / piv[i]
                for r in range(n):
                    c[r] -= f * piv[r]
        chosen[i] = piv
    a = [qval(chosen[i][i], p) for i in range(n)]
    for j in range(n):
        col = chosen[j]
        for i in reversed(range(j)):
            rep = reduce_mod(col[i], a[i], p)
            if rep != col[i]:
                f = (col[i] - rep) / chosen[i][i]
                for r in range(i + 1):
                    col[r] -= f * chosen[i][r]
                col[i] = rep
    H = tuple(tuple(chosen[j][i] for j in range(n)) for i in range(n))
    return H, tuple(a)


@dataclass(frozen=True)
class Lattice:
    """Lattice spanned by the columns of an invertible matrix (canonicalized)."""

    p: int
    canonical: tuple
    exponents: tuple

    @classmethod
    def from_columns(cls, gens, p: int) -> Lattice:
        if isinstance(gens, PadicMatrix):
            gens = gens.to_fractions()
        H, a = hermite_form(gens, p)
        return cls(p, H, a)

    @classmethod
    def standard(cls, n: int, p: int) -> Lattice:
        return cls.from_columns([[int(i == j) for j in range(n)] for i in range(n)], p)

    @property
    def n(self) -> int:
        return len(self.canonical)

    @property
    def basis(self) -> PadicMatrix:
        return PadicMatrix.from_rationals(self.canonical, self.p)

    def volume(self) -> Fraction:
        return Fraction(self.p) ** -sum(self.exponents)

    def contains(self, x: Sequence[Fraction]) -> bool:
        """Whether the column vector ``x`` lies in the lattice."""
        x = [Fraction(t) for t in x]
        H = self.canonical
        for i in reversed(range(self.n)):
            coef = x[i] / H[i][i]
            if qval(coef, self.p) < 0:
                return False
            for r in range(i + 1):
                x[r] -= coef * H[r][i]
        return True

    def dual(self) -> Lattice:
        Ht = [list(r) for r in zip(*self.canonical)]
        return Lattice.from_columns(exact_inverse(Ht), self.p)

    def __add__(self, other: Lattice) -> Lattice:
        return lattice_sum(self, other)

    def __and__(self, other: Lattice) -> Lattice:
        return intersect(self, other)


def _check_pair(L1: Lattice, L2: Lattice):
    if L1.p != L2.p:
        raise ValueError("lattices over different primes")
    if L1.n != L2.n:
        raise ShapeMismatch("lattices of different rank")


def lattice_sum(L1: Lattice, L2: Lattice) -> Lattice:
    _check_pair(L1, L2)
    gens = [list(r1) + list(r2) for r1, r2 in zip(L1.canonical, L2.canonical)]
    return Lattice.from_columns(gens, L1.p)


def intersect(L1: Lattice, L2: Lattice) -> Lattice:
    _check_pair(L1, L2)
    return lattice_sum(L1.dual(), L2.dual()).dual()


def volume(L: Lattice) -> Fraction:
    return L.volume()


def image_lattice(z: PadicMatrix) -> Lattice:
    """The lattice ``z O_p^n``."""
    F = z.to_fractions()
    if exact_det(F) == 0:
        raise SingularMatrix("z is singular")
    return Lattice.from_columns(F, z.p)


# ---------------------------------------------------------------------------
# the equal-parameter beta sum over Lat(n)


class BetaSum(NamedTuple):
    partial_sum: Fraction
    tail_bound: float
    count: int


def _phi(m: int, p: int) -> Fraction:
    out = Fraction(1)
    for j in range(1, m + 1):
        out *= 1 - Fraction(1, p**j)
    return out


def type_count(b: Sequence[int], p: int) -> Fraction:
    """Number of lattices ``A diag(p**b) O^n`` with ``A`` in ``GL(n, O_p)``."""
    b = sorted(b)
    n = len(b)
    exp = sum(b[j] - b[i] for i in range(n) for j in range(i + 1, n))
    mult = {}
    for x in b:
        mult[x] = mult.get(x, 0) + 1
    denom = Fraction(1)
    for m in mult.values():
        denom *= _phi(m, p)
    return Fraction(p) ** exp * _phi(n, p) / denom


def _partitions(n, largest=None):
    largest = n if largest is None else largest
    if n == 0:
        yield ()
        return
    for k in range(min(n, largest), 0, -1):
        for rest in _partitions(n - k, k):
            yield (k,) + rest


@lru_cache(maxsize=None)
def _type_constant(n: int, p: int) -> Fraction:
    best = Fraction(0)
    for part in _partitions(n):
        val = _phi(n, p)
        for m in part:
            val /= _phi(m, p)
        best = max(best, val)
    return best


def _summand_exponent(b, n, t):
    # log_p of vol(Q)^(n-t) * vol(Q ∩ O^n)^t for a lattice of type b
    pos = sum(x for x in b if x > 0)
    return (t - n) * sum(b) - t * pos


def _beta_box(n: int, t, M: int, p: int):
    """Exact sum over lattice types with every exponent in ``[-M, M]``."""
    total = Fraction(0)
    for b in _sorted_tuples(n, -M, M):
        total += type_count(b, p) * _ppow(p, _summand_exponent(b, n, t))
    return total


def _sorted_tuples(n, lo, hi):
    if n == 0:
        yield ()
        return
    for first in range(lo, hi + 1):
        for rest in _sorted_tuples(n - 1, first, hi):
            yield (first,) + rest


def _ppow(p, e):
    if isinstance(e, Fraction) and e.denominator != 1:
        return Fraction(float(p) ** float(e))
    return Fraction(p) ** int(e)


def _beta_far_bound(n: int, t, M: int, p: int) -> float:
    """Bound for the types with some exponent outside ``[-M, M]``.

    Each type is counted by ``C * p**(sum_{i<j} (b_j - b_i))`` at most; the
    summand then factorises into per-coordinate weights ``p**-b`` for
    ``b >= 0`` and ``p**(delta * b)`` for ``b < 0`` with ``delta = t-2n+1``.
    """
    delta = float(t) - 2 * n + 1
    C = float(_type_constant(n, p))
    q = float(p)
    full = 1 / (1 - q**-1) + q**-delta / (1 - q**-delta)
    tail = q ** -(M + 1) / (1 - q**-1) + q ** (-delta * (M + 1)) / (1 - q**-delta)
    return n * C * tail * full ** (n - 1)


def enumerate_lattices(n: int, M: int, p: int):
    """Canonical lattices between ``p**M O^n`` and ``p**-M O^n``."""
    for a in product(range(-M, M + 1), repeat=n):
        choices = []
        for j in range(n):
            for i in range(j):
                choices.append([Fraction(m, p**M) for m in range(p ** (a[i] + M))])
        for offs in product(*choices):
            H = [[Fraction(0)] * n for _ in range(n)]
            it = iter(offs)
            for j in range(n):
                for i in range(j):
                    H[i][j] = next(it)
                H[j][j] = Fraction(p) ** a[j]
            L = Lattice(p, tuple(tuple(r) for r in H), tuple(a))
            if all(L.contains([p**M if r == i else 0 for r in range(n)]) for i in range(n)):
                yield L


def lattice_beta_partial_sum(n: int, t, M: int, p: int, near: int | None = None) -> BetaSum:
    """Partial sum of ``vol(Q)**(n-t) * vol(Q ∩ O^n)**t`` over the depth-M window.

    The tail bound adds the exact contribution of a wider window of lattice
    types to a geometric bound for everything beyond it.
    """
    t = Fraction(t)
    if t <= 2 * n - 1:
        raise ConvergenceDomain(f"t={t} must exceed {2 * n - 1}", n=n, t=str(t))
    if M < 1:
        raise ValueError("depth must be at least 1")
    std = Lattice.standard(n, p)
    total = Fraction(0)
    count = 0
    for Q in enumerate_lattices(n, M, p):
        count += 1
        e = (t - n) * sum(Q.exponents) - t * -qval(intersect(Q, std).volume(), p)
        total += _ppow(p, e)
    if near is None:
        near = _near_margin(n, t, M, p)
    wide = M + near
    tail = float(_beta_box(n, t, wide, p) - _beta_box(n, t, M, p))
    far = _beta_far_bound(n, t, wide, p)
    return BetaSum(total, (tail + far) * (1 + 1e-9), count)


def _near_margin(n, t, M, p):
    delta = min(1.0, float(t) - 2 * n + 1)
    for extra in range(0, 200):
        if _beta_far_bound(n, t, M + extra, p) < 2.0**-50:
            return extra
    return 200


def beta_closed_form(n: int, t, p: int):
    from .measures import hua_constant, vol_GL

    return hua_constant(n, t, p) / vol_GL(n, p)
