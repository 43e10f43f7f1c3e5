"""The linear-fractional action ``z * g = (a + z c)^{-1} (b + z d)``.

Group elements act on the right: ``z * (g1 g2) = (z * g1) * g2``.  The
Radon-Nikodym factor of ``mu_s`` under ``g`` at ``z`` is
``|det(a + z c)|**s``; it is carried as the exact base-p exponent
``-s * v(det(a + z c))``.

Flavors: ``GL`` acts on all square matrices, ``Sp`` (preserving
``J = (0, 1; -1, 0)``) on symmetric ones and ``O`` (preserving
``J' = (0, 1; 1, 0)``) on antisymmetric ones.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import _pykernels as K
from .errors import BasePointSingular, PrecisionExhausted, ShapeMismatch
from .linalg import PadicMatrix, exact_det, exact_inverse, exact_matmul, qval
from .padic import INF, format_rational, parse_rational

GROUP_FLAVORS = ("GL", "Sp", "O")
SPACE_OF = {"GL": "GL", "Sp": "Symm", "O": "ASymm"}


def _form(n: int, flavor: str):
    sign = -1 if flavor == "Sp" else 1
    J = [[0] * (2 * n) for _ in range(2 * n)]
    for i in range(n):
        J[i][n + i] = 1
        J[n + i][i] = sign
    return J


@dataclass(frozen=True)
class BlockGroupElement:
    """Integral ``2n x 2n`` matrix ``(a, b; c, d)`` with exact rational entries.

    Entries are p-integral rationals; words in integer generators stay
    integer matrices, inverses may acquire denominators prime to ``p``.
    """

    n: int
    g: tuple
    flavor: str = "GL"

    def __post_init__(self):
        if self.flavor not in GROUP_FLAVORS:
            raise ValueError(f"unknown flavor {self.flavor!r}")
        g = tuple(tuple(Fraction(x) for x in row) for row in self.g)
        if len(g) != 2 * self.n or any(len(r) != 2 * self.n for r in g):
            raise ShapeMismatch("group element must be 2n x 2n")
        object.__setattr__(self, "g", g)

    @classmethod
    def from_blocks(cls, a, b, c, d, flavor="GL"):
        n = len(a)
        rows = [list(a[i]) + list(b[i]) for i in range(n)] + [list(c[i]) + list(d[i]) for i in range(n)]
        return cls(n, tuple(map(tuple, rows)), flavor)

    @classmethod
    def identity(cls, n, flavor="GL"):
        return cls(n, tuple(tuple(int(i == j) for j in range(2 * n)) for i in range(2 * n)), flavor)

    @property
    def a(self):
        return [list(r[: self.n]) for r in self.g[: self.n]]

    @property
    def b(self):
        return [list(r[self.n :]) for r in self.g[: self.n]]

    @property
    def c(self):
        return [list(r[: self.n]) for r in self.g[self.n :]]

    @property
    def d(self):
        return [list(r[self.n :]) for r in self.g[self.n :]]

    def __matmul__(self, other: BlockGroupElement) -> BlockGroupElement:
        if self.n != other.n:
            raise ShapeMismatch("group elements of different size")
        prod = exact_matmul(self.g, other.g)
        flavor = self.flavor if self.flavor == other.flavor else "GL"
        return BlockGroupElement(self.n, tuple(map(tuple, prod)), flavor)

    def inverse(self) -> BlockGroupElement:
        return BlockGroupElement(self.n, tuple(map(tuple, exact_inverse(self.g))), self.flavor)

    def reduced(self, q: int) -> list:
        """Integer representatives of the entries modulo ``q``."""
        return [[x.numerator * pow(x.denominator, -1, q) % q for x in r] for r in self.g]

    def is_member(self, p: int) -> bool:
        """Membership in the flavor's group over ``O_p`` (checked exactly)."""
        if any(qval(x, p) < 0 for r in self.g for x in r):
            return False
        if qval(exact_det(self.g), p) != 0:
            return False
        if self.flavor == "GL":
            return True
        J = _form(self.n, self.flavor)
        gt = [list(r) for r in zip(*self.g)]
        return exact_matmul(exact_matmul(gt, J), self.g) == [[Fraction(x) for x in r] for r in J]

    def to_json(self) -> dict:
        return {"n": self.n, "flavor": self.flavor, "g": [[format_rational(x) for x in r] for r in self.g]}

    @classmethod
    def from_json(cls, obj) -> BlockGroupElement:
        g = tuple(tuple(parse_rational(x) for x in r) for r in obj["g"])
        return cls(int(obj["n"]), g, obj.get("flavor", "GL"))


# ---------------------------------------------------------------------------
# action on single matrices


def _check_z(z: PadicMatrix, n: int):
    if z.shape != (n, n):
        raise ShapeMismatch(f"z must be {n}x{n}, got {z.shape}")


def _chart(z: PadicMatrix):
    """``(X, w, P)`` with ``z = p**-w X``, ``w >= 0``, ``X`` known mod ``p**P``."""
    Z, m, P = z.scaled()
    w = max(m, 0)
    shift = w - m
    return [[x * z.p**shift for x in r] for r in Z], w, P + shift


def moebius_exact(z: PadicMatrix, g: BlockGroupElement):
    """Exact image and ``det(a + z c)`` for a matrix with rational entries."""
    Z = z.to_fractions()
    A = [[x + y for x, y in zip(ra, ry)] for ra, ry in zip(g.a, exact_matmul(Z, g.c))]
    B = [[x + y for x, y in zip(rb, ry)] for rb, ry in zip(g.b, exact_matmul(Z, g.d))]
    det = exact_det(A)
    if det == 0:
        raise BasePointSingular("a + z c is singular")
    W = exact_matmul(exact_inverse(A), B)
    N = z.min_precision()
    return PadicMatrix.from_rationals(W, z.p, N), det


def moebius_with_det(z: PadicMatrix, g: BlockGroupElement):
    """Return ``(z * g, v(det(a + z c)))``."""
    _check_z(z, g.n)
    if z.is_exact:
        W, det = moebius_exact(z, g)
        return W, qval(det, z.p)
    X, w, P = _chart(z)
    if P == INF:
        raise AssertionError("inexact matrix without finite precision")
    res = K.moebius(X, w, P, g.reduced(z.p**P), z.p)
    X2, w2, P2, vdet, status = res
    if status != K.OK:
        raise PrecisionExhausted("a + z c undetermined at working precision", precision=P)
    return PadicMatrix.from_scaled(X2, w2, P2, z.p), vdet


def moebius(z: PadicMatrix, g: BlockGroupElement) -> PadicMatrix:
    return moebius_with_det(z, g)[0]


def rn_derivative(z: PadicMatrix, g: BlockGroupElement, s) -> Fraction:
    """Exponent ``e`` with ``|det(a + z c)|**s = p**e``."""
    return -Fraction(s) * moebius_with_det(z, g)[1]


def cocycle_check(g1: BlockGroupElement, g2: BlockGroupElement, z: PadicMatrix, s) -> bool:
    """Chain rule ``c(g1 g2, z) = c(g1, z) c(g2, z * g1)`` in exponents."""
    w1, v1 = moebius_with_det(z, g1)
    _, v2 = moebius_with_det(w1, g2)
    _, v12 = moebius_with_det(z, g1 @ g2)
    s = Fraction(s)
    return -s * v12 == -s * v1 + -s * v2


# ---------------------------------------------------------------------------
# generators and random words


def _rand_int_matrix(gen, n, p, k=2):
    return gen.integers(0, p**k, size=(n, n)).tolist()


def _rand_unimodular(gen, n, p):
    while True:
        a = _rand_int_matrix(gen, n, p)
        if exact_det(a) % p:
            return a


def _zeros(n):
    return [[0] * n for _ in range(n)]


def _eye(n):
    return [[int(i == j) for j in range(n)] for i in range(n)]


def _sym(gen, n, p, kind):
    m = _rand_int_matrix(gen, n, p)
    out = _zeros(n)
    for i in range(n):
        for j in range(n):
            if kind == "Symm":
                out[i][j] = m[min(i, j)][max(i, j)]
            elif i != j:
                out[i][j] = m[i][j] if i < j else -m[j][i]
    return out


def generator_names(n: int, flavor: str):
    names = ["levi", "upper", "lower"]
    if flavor in ("GL", "Sp") or n % 2 == 0:
        names.append("flip")
    return names


def generator(name: str, n: int, p: int, flavor: str, gen) -> BlockGroupElement:
    """One random generator of the flavor's group.

    ``levi`` is ``diag(a, d)`` (``d = a^{-t}`` for Sp and O), ``upper`` and
    ``lower`` are unipotent with an integral (symmetric or antisymmetric)
    off-diagonal block, and ``flip`` is the form-preserving swap.  The Levi
    block ``a^{-t}`` is an integer matrix because ``a`` is drawn unimodular
    over the integers.
    """
    I, Z = _eye(n), _zeros(n)
    if name == "levi":
        if flavor == "GL":
            return BlockGroupElement.from_blocks(_rand_unimodular(gen, n, p), Z, Z, _rand_unimodular(gen, n, p))
        a = _rand_integer_unimodular(gen, n)
        ainv_t = [list(r) for r in zip(*exact_inverse(a))]
        return BlockGroupElement.from_blocks(a, Z, Z, ainv_t, flavor)
    if name in ("upper", "lower"):
        if flavor == "GL":
            m = _rand_int_matrix(gen, n, p)
        else:
            m = _sym(gen, n, p, SPACE_OF[flavor])
        if name == "upper":
            return BlockGroupElement.from_blocks(I, m, Z, I, flavor)
        return BlockGroupElement.from_blocks(I, Z, m, I, flavor)
    if name == "flip":
        if flavor == "O" and n % 2:
            raise ValueError("the O flip acts nowhere for odd n")
        neg = [[-x for x in r] for r in I] if flavor == "Sp" else I
        return BlockGroupElement.from_blocks(Z, I, neg, Z, flavor)
    raise ValueError(f"unknown generator {name!r}")


def _rand_integer_unimodular(gen, n):
    """Product of elementary integer matrices: determinant +-1 over Z."""
    a = _eye(n)
    for _ in range(2 * n):
        i, j = gen.integers(0, n, size=2)
        if i == j:
            continue
        k = int(gen.integers(-2, 3))
        for r in range(n):
            a[r][j] += k * a[r][i]
    return a


def random_group_element(n: int, p: int, flavor: str, L: int, stream) -> BlockGroupElement:
    """Product of ``L`` random generators drawn from ``stream``."""
    gen = stream.gen
    names = generator_names(n, flavor)
    g = BlockGroupElement.identity(n, flavor)
    for _ in range(L):
        name = names[int(gen.integers(0, len(names)))]
        g = g @ generator(name, n, p, flavor, gen)
    if not g.is_member(p):
        raise AssertionError("generator word left the group")
    return g


# ---------------------------------------------------------------------------
# the representation


@dataclass(frozen=True)
class Cylinder:
    """Bounded function of the valuations of finitely many entries."""

    name: str
    entries: tuple
    fn: Callable

    def __call__(self, z: PadicMatrix) -> float:
        return float(self.fn(*(z[i, j].v for i, j in self.entries)))

    def on_batch(self, charts):
        vals, oks = [], np.ones(len(charts), dtype=bool)
        for i, j in self.entries:
            v, ok = charts.entry_valuation(i, j)
            vals.append(v)
            oks &= ok
        out = np.array([float(self.fn(*col)) for col in zip(*vals)]) if vals else np.ones(len(charts))
        return out, oks


def _ind_integral(v):
    return 1.0 if v >= 0 else 0.0


STANDARD_CYLINDERS = (
    Cylinder("z11_integral", ((0, 0),), _ind_integral),
    Cylinder("z12_within_p", ((0, 1),), lambda v: 1.0 if v >= -1 else 0.0),
    Cylinder("z11_damped_z22_integral", ((0, 0), (1, 1)),
             lambda v, u: (1.0 if u >= 0 else 0.0) / (1 + max(0, -v))),
)


def rep_apply(f: Callable, g: BlockGroupElement, s, theta: float = 0.0):
    """``(rho f)(z) = f(z * g) |det(a + z c)|**(s/2) exp(i theta v)``."""
    s = Fraction(s)

    def rho_f(z: PadicMatrix) -> complex:
        w, v = moebius_with_det(z, g)
        return f(w) * float(z.p) ** float(-v * s / 2) * cmath.exp(1j * theta * v)

    return rho_f
