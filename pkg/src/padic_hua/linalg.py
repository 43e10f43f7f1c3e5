"""Matrices over Q_p: products, determinants, inverses and singular profiles.

Two evaluation routes sit behind every operation.  When all entries carry
exact rational values the work is done on :class:`~fractions.Fraction`
matrices, so rank deficiency is detected exactly and reported as ``-inf``
exponents.  Otherwise the matrix is rewritten as ``p**-m Z`` with ``Z``
integral and known modulo ``p**P``, and the integer kernels of
:mod:`padic_hua._pykernels` do the elimination.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from . import _pykernels as K
from .errors import PrecisionExhausted, ShapeMismatch, SingularMatrix
from .padic import (
    DEFAULT_PRECISION,
    INF,
    PadicScalar,
    format_rational,
    parse_rational,
    split_unit,
)

NEG_INF = -INF


def qval(x: Fraction, p: int):
    """Valuation of a rational; ``INF`` for zero."""
    if x == 0:
        return INF
    return split_unit(x.numerator, p)[0] - split_unit(x.denominator, p)[0]


# ---------------------------------------------------------------------------
# singular profiles


@dataclass(frozen=True)
class SingularProfile:
    """Exponents ``k_1 >= ... >= k_n`` of the singular numbers ``p**k_j``."""

    p: int
    ks: tuple

    def __post_init__(self):
        ks = tuple(self.ks)
        if any(a < b for a, b in zip(ks, ks[1:])):
            raise ValueError(f"profile must be nonincreasing: {ks}")
        object.__setattr__(self, "ks", ks)

    @property
    def n(self) -> int:
        return len(self.ks)

    @property
    def finite(self) -> bool:
        return all(k != NEG_INF for k in self.ks)

    @property
    def rank(self) -> int:
        return sum(1 for k in self.ks if k != NEG_INF)

    def positive_sum(self) -> int:
        return sum(k for k in self.ks if k > 0)

    def gamma(self) -> Fraction:
        return Fraction(self.p) ** self.positive_sum()

    def det_norm(self) -> Fraction:
        if not self.finite:
            return Fraction(0)
        return Fraction(self.p) ** sum(self.ks)

    def shifted(self, m: int) -> SingularProfile:
        return SingularProfile(self.p, tuple(k + m if k != NEG_INF else k for k in self.ks))

    def to_json(self) -> dict:
        return {"p": self.p, "ks": [k if k != NEG_INF else "-inf" for k in self.ks]}

    @classmethod
    def from_json(cls, obj) -> SingularProfile:
        ks = [NEG_INF if k == "-inf" else int(k) for k in obj["ks"]]
        return cls(int(obj["p"]), tuple(ks))

    @classmethod
    def from_exponents(cls, p: int, exps: Iterable[int], shift: int = 0) -> SingularProfile:
        """Profile of ``p**-shift Z`` from the elementary divisors ``p**e`` of ``Z``."""
        return cls(p, tuple(sorted((shift - e for e in exps), reverse=True)))


# ---------------------------------------------------------------------------
# matrices


@dataclass(frozen=True)
class PadicMatrix:
    p: int
    rows: int
    cols: int
    entries: tuple

    def __post_init__(self):
        entries = tuple(tuple(r) for r in self.entries)
        if len(entries) != self.rows or any(len(r) != self.cols for r in entries):
            raise ShapeMismatch("entry table does not match declared shape")
        for r in entries:
            for x in r:
                if x.p != self.p:
                    raise ValueError("entries must share the prime")
        object.__setattr__(self, "entries", entries)

    # construction -------------------------------------------------------

    @classmethod
    def from_rationals(cls, data: Sequence[Sequence], p: int, N: int = DEFAULT_PRECISION):
        rows = [[PadicScalar.from_fraction(parse_rational(x), p, N) for x in r] for r in data]
        return cls(p, len(rows), len(rows[0]) if rows else 0, rows)

    @classmethod
    def identity(cls, n: int, p: int, N: int = DEFAULT_PRECISION):
        return cls.from_rationals([[int(i == j) for j in range(n)] for i in range(n)], p, N)

    @classmethod
    def zeros(cls, rows: int, cols: int, p: int, N: int = DEFAULT_PRECISION):
        return cls.from_rationals([[0] * cols for _ in range(rows)], p, N)

    @classmethod
    def diag(cls, values: Sequence, p: int, N: int = DEFAULT_PRECISION):
        n = len(values)
        return cls.from_rationals(
            [[values[i] if i == j else 0 for j in range(n)] for i in range(n)], p, N
        )

    @classmethod
    def from_scaled(cls, X, shift: int, P: int, p: int, zeros=()) -> PadicMatrix:
        """Matrix ``p**-shift X`` where ``X`` is integral and known mod ``p**P``.

        Positions listed in ``zeros`` are exact zeros (the diagonal of an
        antisymmetric matrix, say); any other vanishing entry is an error.
        """
        q = p**P
        zeros = set(zeros)
        rows = []
        for i, r in enumerate(X):
            row = []
            for j, x in enumerate(r):
                if (i, j) in zeros:
                    row.append(PadicScalar.zero(p, P - shift))
                    continue
                x = int(x) % q
                if x == 0:
                    raise PrecisionExhausted("entry vanishes at working precision")
                v0, u = split_unit(x, p)
                row.append(PadicScalar.from_digits(p, v0 - shift, u, P - v0))
            rows.append(row)
        return cls(p, len(rows), len(rows[0]) if rows else 0, rows)

    @classmethod
    def block(cls, a, b, c, d) -> PadicMatrix:
        if not (a.rows == b.rows and c.rows == d.rows and a.cols == c.cols and b.cols == d.cols):
            raise ShapeMismatch("incompatible block shapes")
        top = [ra + rb for ra, rb in zip(a.entries, b.entries)]
        bottom = [rc + rd for rc, rd in zip(c.entries, d.entries)]
        rows = top + bottom
        return cls(a.p, len(rows), a.cols + b.cols, rows)

    # inspection ---------------------------------------------------------

    def __getitem__(self, idx):
        i, j = idx
        return self.entries[i][j]

    @property
    def shape(self):
        return (self.rows, self.cols)

    @property
    def is_square(self) -> bool:
        return self.rows == self.cols

    @property
    def is_exact(self) -> bool:
        return all(x.exact is not None for r in self.entries for x in r)

    def is_integral(self) -> bool:
        return all(x.v >= 0 for r in self.entries for x in r)

    def submatrix(self, r0: int, r1: int, c0: int, c1: int) -> PadicMatrix:
        rows = [r[c0:c1] for r in self.entries[r0:r1]]
        return PadicMatrix(self.p, r1 - r0, c1 - c0, rows)

    def to_fractions(self) -> list:
        return [[x.to_fraction() for x in r] for r in self.entries]

    def agrees(self, other: PadicMatrix) -> bool:
        if self.shape != other.shape or self.p != other.p:
            return False
        return all(
            x.agrees(y) for rx, ry in zip(self.entries, other.entries) for x, y in zip(rx, ry)
        )

    def is_symmetric(self) -> bool:
        return self.is_square and all(
            self[i, j].agrees(self[j, i]) for i in range(self.rows) for j in range(i)
        )

    def is_antisymmetric(self) -> bool:
        n = self.rows
        if not self.is_square:
            return False
        for i in range(n):
            if not self[i, i].is_zero and not self[i, i].agrees(self[i, i] * 0):
                return False
            for j in range(i):
                if not self[i, j].agrees(-self[j, i]):
                    return False
        return True

    def min_precision(self) -> int:
        return min((x.N for r in self.entries for x in r), default=DEFAULT_PRECISION)

    # scaled-integer view -----------------------------------------------

    def scaled(self):
        """Return ``(Z, m, P)`` with ``self = p**-m Z``, ``Z`` integral mod ``p**P``.

        ``m`` makes the minimal entry valuation zero (``m = 0`` for the zero
        matrix).  ``P`` is ``INF`` when every entry is exact.
        """
        p = self.p
        vals = [x.v for r in self.entries for x in r if not x.is_zero]
        m = -min(vals) if vals else 0
        P = INF
        for r in self.entries:
            for x in r:
                if not x.is_zero and x.exact is None:
                    P = min(P, x.v + x.N + m)
        Z = []
        if P == INF:
            for r in self.entries:
                Z.append([x.exact * Fraction(p) ** m for x in r])
            return Z, m, P
        q = p**P
        for r in self.entries:
            row = []
            for x in r:
                if x.is_zero:
                    row.append(0)
                elif x.exact is not None:
                    y = x.exact * Fraction(p) ** m
                    row.append(y.numerator * pow(y.denominator, -1, q) % q)
                else:
                    row.append(x.u * p ** (x.v + m) % q)
            Z.append(row)
        return Z, m, P

    # serialisation ------------------------------------------------------

    def to_json(self) -> dict:
        if self.is_exact:
            entries = [[format_rational(x.exact) for x in r] for r in self.entries]
        else:
            entries = [[x.to_json() for x in r] for r in self.entries]
        return {"p": self.p, "rows": self.rows, "cols": self.cols, "entries": entries}

    @classmethod
    def from_json(cls, obj: dict, N: int = DEFAULT_PRECISION) -> PadicMatrix:
        p = int(obj["p"])
        N = int(obj.get("N", N))
        rows = []
        for r in obj["entries"]:
            row = []
            for x in r:
                if isinstance(x, dict):
                    row.append(PadicScalar.from_json(x, p))
                else:
                    row.append(PadicScalar.from_fraction(parse_rational(x), p, N))
            rows.append(row)
        m = cls(p, len(rows), len(rows[0]) if rows else 0, rows)
        if (m.rows, m.cols) != (int(obj.get("rows", m.rows)), int(obj.get("cols", m.cols))):
            raise ShapeMismatch("declared shape disagrees with entries")
        return m

    def __str__(self):
        return "\n".join("[" + ", ".join(_short(x) for x in r) + "]" for r in self.entries)

    # operators ------------------------------------------------------------

    def __matmul__(self, other):
        return matmul(self, other)

    def __add__(self, other):
        return matadd(self, other)

    def __neg__(self):
        return PadicMatrix(self.p, self.rows, self.cols, [[-x for x in r] for r in self.entries])

    def __sub__(self, other):
        return matadd(self, -other)

    @property
    def T(self):
        return transpose(self)


def _short(x: PadicScalar) -> str:
    if x.exact is not None:
        return format_rational(x.exact)
    return str(x)


def _check_same_prime(x: PadicMatrix, y: PadicMatrix):
    if x.p != y.p:
        raise ValueError(f"prime mismatch: {x.p} vs {y.p}")


def matmul(x: PadicMatrix, y: PadicMatrix) -> PadicMatrix:
    _check_same_prime(x, y)
    if x.cols != y.rows:
        raise ShapeMismatch(f"cannot multiply {x.shape} by {y.shape}")
    cols = list(zip(*y.entries)) if y.rows else [()] * y.cols
    out = []
    for r in x.entries:
        row = []
        for c in cols:
            acc = PadicScalar.zero(x.p, min(r[0].N, c[0].N) if r else DEFAULT_PRECISION)
            for a, b in zip(r, c):
                if a.is_zero or b.is_zero:
                    continue
                acc = acc + a * b
            row.append(acc)
        out.append(row)
    return PadicMatrix(x.p, x.rows, y.cols, out)


def matadd(x: PadicMatrix, y: PadicMatrix) -> PadicMatrix:
    _check_same_prime(x, y)
    if x.shape != y.shape:
        raise ShapeMismatch(f"cannot add {x.shape} and {y.shape}")
    rows = [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(x.entries, y.entries)]
    return PadicMatrix(x.p, x.rows, x.cols, rows)


def transpose(x: PadicMatrix) -> PadicMatrix:
    return PadicMatrix(x.p, x.cols, x.rows, [list(c) for c in zip(*x.entries)] if x.rows else [])


def _require_square(z: PadicMatrix):
    if not z.is_square:
        raise ShapeMismatch(f"square matrix required, got {z.shape}")


# ---------------------------------------------------------------------------
# exact rational routines


def _pick_pivot(M, t, p):
    best = None
    for i in range(t, len(M)):
        for j in range(t, len(M)):
            x = M[i][j]
            if x != 0:
                v = qval(x, p)
                if best is None or v < best[0]:
                    best = (v, i, j)
    return best


def exact_smith_valuations(M, p):
    """Pivot valuations of the rational matrix ``M`` (``INF`` for rank loss)."""
    M = [[Fraction(x) for x in r] for r in M]
    n = len(M)
    vals = []
    for t in range(n):
        best = _pick_pivot(M, t, p)
        if best is None:
            vals.extend([INF] * (n - t))
            break
        v, bi, bj = best
        M[t], M[bi] = M[bi], M[t]
        for r in M:
            r[t], r[bj] = r[bj], r[t]
        piv = M[t][t]
        for i in range(t + 1, n):
            f = M[i][t] / piv
            if f:
                M[i] = [a - f * b for a, b in zip(M[i], M[t])]
        vals.append(v)
    return vals


def exact_det(M) -> Fraction:
    M = [[Fraction(x) for x in r] for r in M]
    n = len(M)
    det = Fraction(1)
    for t in range(n):
        piv_row = next((i for i in range(t, n) if M[i][t] != 0), None)
        if piv_row is None:
            return Fraction(0)
        if piv_row != t:
            M[t], M[piv_row] = M[piv_row], M[t]
            det = -det
        piv = M[t][t]
        det *= piv
        for i in range(t + 1, n):
            f = M[i][t] / piv
            if f:
                M[i] = [a - f * b for a, b in zip(M[i], M[t])]
    return det


def exact_inverse(M):
    n = len(M)
    aug = [[Fraction(x) for x in r] + [Fraction(int(i == j)) for j in range(n)] for i, r in enumerate(M)]
    for t in range(n):
        piv_row = next((i for i in range(t, n) if aug[i][t] != 0), None)
        if piv_row is None:
            raise SingularMatrix("matrix is singular")
        aug[t], aug[piv_row] = aug[piv_row], aug[t]
        piv = aug[t][t]
        aug[t] = [x / piv for x in aug[t]]
        for i in range(n):
            if i != t and aug[i][t] != 0:
                f = aug[i][t]
                aug[i] = [a - f * b for a, b in zip(aug[i], aug[t])]
    return [r[n:] for r in aug]


def exact_matmul(A, B):
    cols = list(zip(*B))
    return [[sum((a * b for a, b in zip(r, c)), Fraction(0)) for c in cols] for r in A]


# ---------------------------------------------------------------------------
# public operations


def smith_profile(z: PadicMatrix) -> SingularProfile:
    """Exponents ``k`` with ``z = A diag(p**-k) B``, ``A, B`` in ``GL(n, O_p)``."""
    _require_square(z)
    p = z.p
    if z.is_exact:
        vals = exact_smith_valuations(z.to_fractions(), p)
        return SingularProfile(p, tuple(sorted((-v for v in vals), reverse=True)))
    Z, m, P = z.scaled()
    exps, status = K.smith_exponents(Z, p, P)
    if status != K.OK:
        raise PrecisionExhausted(
            "residual block is zero at working precision", precision=P
        )
    return SingularProfile.from_exponents(p, exps, m)


def gamma(z: PadicMatrix) -> Fraction:
    """Product of ``p**k_j`` over the positive profile exponents."""
    return smith_profile(z).gamma()


def det_norm(z: PadicMatrix) -> Fraction:
    return smith_profile(z).det_norm()


def det(z: PadicMatrix) -> PadicScalar:
    _require_square(z)
    p = z.p
    N = z.min_precision()
    if z.is_exact:
        return PadicScalar.from_fraction(exact_det(z.to_fractions()), p, N)
    Z, m, P = z.scaled()
    res = K.determinant(Z, p, P)
    if res is None:
        raise PrecisionExhausted("determinant vanishes at working precision", precision=P)
    v, unit, rel = res
    return PadicScalar.from_digits(p, v - m * z.rows, unit, min(rel, N))


def inverse(z: PadicMatrix) -> PadicMatrix:
    _require_square(z)
    p = z.p
    n = z.rows
    if z.is_exact:
        M = z.to_fractions()
        if exact_det(M) == 0:
            raise SingularMatrix("matrix is singular")
        N = z.min_precision()
        inv = exact_inverse(M)
        return PadicMatrix(
            p, n, n, [[PadicScalar.from_fraction(x, p, N) for x in r] for r in inv]
        )
    Z, m, P = z.scaled()
    ident = [[int(i == j) for j in range(n)] for i in range(n)]
    X, w, Pout, _, status = K.chart(Z, ident, p, P)
    if status != K.OK:
        raise PrecisionExhausted("matrix is singular at working precision", precision=P)
    return PadicMatrix.from_scaled(X, w - m, Pout, p)


def solve_left(a: PadicMatrix, b: PadicMatrix) -> PadicMatrix:
    """``a^{-1} b`` for square ``a``."""
    _require_square(a)
    if a.rows != b.rows:
        raise ShapeMismatch("row counts differ")
    p = a.p
    if a.is_exact and b.is_exact:
        A = a.to_fractions()
        if exact_det(A) == 0:
            raise SingularMatrix("matrix is singular")
        N = min(a.min_precision(), b.min_precision())
        out = exact_matmul(exact_inverse(A), b.to_fractions())
        return PadicMatrix(
            p, a.rows, b.cols, [[PadicScalar.from_fraction(x, p, N) for x in r] for r in out]
        )
    joint = PadicMatrix(p, a.rows, a.cols + b.cols, [ra + rb for ra, rb in zip(a.entries, b.entries)])
    Z, m, P = joint.scaled()
    if P == INF:
        P = DEFAULT_PRECISION + 64
    A = [r[: a.cols] for r in Z]
    B = [r[a.cols :] for r in Z]
    if isinstance(A[0][0] if A and A[0] else 0, Fraction):
        q = p**P
        A = [[x.numerator * pow(x.denominator, -1, q) % q for x in r] for r in A]
        B = [[x.numerator * pow(x.denominator, -1, q) % q for x in r] for r in B]
    X, w, Pout, _, status = K.chart(A, B, p, P)
    if status != K.OK:
        raise PrecisionExhausted("matrix is singular at working precision", precision=P)
    return PadicMatrix.from_scaled(X, w, Pout, p)


def product_agrees(x: PadicMatrix, y: PadicMatrix, target: PadicMatrix) -> bool:
    """Whether ``x @ y`` agrees with ``target`` to every digit both sides know.

    Entries that cancel completely are accepted when their known absolute
    precision reaches that of the target entry.
    """
    if x.cols != y.rows or (x.rows, y.cols) != target.shape:
        raise ShapeMismatch("incompatible shapes")
    prod = None
    try:
        prod = matmul(x, y)
    except PrecisionExhausted:
        pass
    if prod is not None:
        return all(
            a.agrees(b) or _within(a, b) for ra, rb in zip(prod.entries, target.entries) for a, b in zip(ra, rb)
        )
    for i in range(x.rows):
        for j in range(y.cols):
            acc = PadicScalar.zero(x.p)
            try:
                for k in range(x.cols):
                    acc = acc + x[i, k] * y[k, j]
                acc = acc - target[i, j]
            except PrecisionExhausted:
                continue
            if not acc.is_zero:
                return False
    return True


def _within(a: PadicScalar, b: PadicScalar) -> bool:
    try:
        d = a - b
    except PrecisionExhausted:
        return True
    return d.is_zero
