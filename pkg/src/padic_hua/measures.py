"""Hua constants, stratum volumes and the stratified series for the total mass.

Three matrix spaces carry a Hua-type measure, labelled by ``flavor``:

``GL``     all of ``Mat(n, Q_p)``, dimension ``n**2``;
``Symm``   symmetric matrices, dimension ``n(n+1)/2``;
``ASymm``  antisymmetric matrices, dimension ``n(n-1)/2``.

Strata are indexed by singular profiles.  Their volumes come from a recursion
on the rank modulo ``p``: a matrix over ``O_p`` whose reduction has rank ``r``
is equivalent to ``1_r (+) p w`` with ``w`` uniform in the same kind of space
of size ``n - r``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import NamedTuple

import mpmath

from .errors import ConvergenceDomain
from .linalg import NEG_INF, PadicMatrix, SingularProfile, smith_profile

FLAVORS = ("GL", "Symm", "ASymm")
_MP_PREC = 128


def _check_flavor(flavor: str):
    if flavor not in FLAVORS:
        raise ValueError(f"unknown flavor {flavor!r}; expected one of {FLAVORS}")


def space_dim(n: int, flavor: str) -> int:
    _check_flavor(flavor)
    if flavor == "GL":
        return n * n
    if flavor == "Symm":
        return n * (n + 1) // 2
    return n * (n - 1) // 2


@dataclass(frozen=True)
class MeasureSpec:
    p: int
    n: int
    s: Fraction
    flavor: str = "GL"

    def __post_init__(self):
        _check_flavor(self.flavor)
        object.__setattr__(self, "s", Fraction(self.s))
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.flavor == "GL" and self.s <= -1:
            raise ConvergenceDomain("GL measures need s > -1", s=str(self.s))
        if self.flavor != "GL" and self.s < 0:
            raise ConvergenceDomain(f"{self.flavor} measures need s >= 0", s=str(self.s))

    @property
    def exponent(self) -> Fraction:
        """Power ``e`` in the density ``gamma(z)**-e``."""
        if self.flavor == "GL":
            return self.s + 2 * self.n
        if self.flavor == "Symm":
            return self.s + self.n + 1
        return self.s + self.n - 1

    @property
    def dim(self) -> int:
        return space_dim(self.n, self.flavor)

    def to_json(self) -> dict:
        s = self.s
        return {
            "p": self.p,
            "n": self.n,
            "s": str(s.numerator) if s.denominator == 1 else f"{s.numerator}/{s.denominator}",
            "flavor": self.flavor,
        }


# ---------------------------------------------------------------------------
# closed forms


def _ppow(p: int, e):
    """``p**e`` as a Fraction for integral ``e``, else a 128-bit mpf."""
    e = Fraction(e)
    if e.denominator == 1:
        return Fraction(p) ** int(e)
    with mpmath.workprec(_MP_PREC):
        return mpmath.power(p, mpmath.mpf(e.numerator) / e.denominator)


def hua_constant(n: int, alpha, p: int):
    """Total mass of ``gamma(z)**-alpha dvol`` on ``Mat(n, Q_p)``.

    Exact for integral ``alpha``; otherwise an mpf at 128 bits.
    """
    alpha = Fraction(alpha)
    if alpha <= 2 * n - 1:
        raise ConvergenceDomain(f"alpha={alpha} must exceed {2 * n - 1}", n=n, alpha=str(alpha))
    if alpha.denominator == 1:
        out = Fraction(1)
        for j in range(1, n + 1):
            out *= (1 - _ppow(p, -alpha + n - j)) / (1 - _ppow(p, -alpha + n + j - 1))
        return out
    with mpmath.workprec(_MP_PREC):
        out = mpmath.mpf(1)
        for j in range(1, n + 1):
            out *= (1 - _ppow(p, -alpha + n - j)) / (1 - _ppow(p, -alpha + n + j - 1))
        return out


def vol_GL(n: int, p: int) -> Fraction:
    out = Fraction(1)
    for j in range(1, n + 1):
        out *= 1 - Fraction(1, p**j)
    return out


# ---------------------------------------------------------------------------
# rank counts over F_p


def _rank_mod_p(M, p):
    M = [list(r) for r in M]
    rank = 0
    n = len(M)
    for c in range(n):
        piv = next((i for i in range(rank, n) if M[i][c] % p), None)
        if piv is None:
            continue
        M[rank], M[piv] = M[piv], M[rank]
        inv = pow(M[rank][c], -1, p)
        for i in range(rank + 1, n):
            f = M[i][c] * inv % p
            if f:
                M[i] = [(a - f * b) % p for a, b in zip(M[i], M[rank])]
        rank += 1
    return rank


def _flavor_matrices(n, p, flavor):
    if flavor == "GL":
        for flat in product(range(p), repeat=n * n):
            yield [list(flat[i * n : (i + 1) * n]) for i in range(n)]
        return
    cells = [(i, j) for i in range(n) for j in range(i, n) if flavor == "Symm" or i < j]
    for vals in product(range(p), repeat=len(cells)):
        M = [[0] * n for _ in range(n)]
        for (i, j), x in zip(cells, vals):
            M[i][j] = x
            M[j][i] = x if flavor == "Symm" else (-x) % p
        yield M


@lru_cache(maxsize=None)
def rank_counts_enumerated(n: int, p: int, flavor: str) -> tuple:
    """Number of matrices of each rank in the flavor's space over F_p."""
    counts = [0] * (n + 1)
    for M in _flavor_matrices(n, p, flavor):
        counts[_rank_mod_p(M, p)] += 1
    return tuple(counts)


def _gl_rank_count(n: int, r: int, p: int) -> int:
    num = 1
    den = 1
    for i in range(r):
        num *= (p**n - p**i) ** 2
        den *= p**r - p**i
    return num // den


@lru_cache(maxsize=None)
def rank_fraction(m: int, r: int, p: int, flavor: str) -> Fraction:
    """Proportion of the flavor's ``m x m`` space over F_p having rank ``r``."""
    if r > m:
        return Fraction(0)
    d = space_dim(m, flavor)
    if flavor == "GL":
        return Fraction(_gl_rank_count(m, r, p), p**d)
    return Fraction(rank_counts_enumerated(m, p, flavor)[r], p**d)


# ---------------------------------------------------------------------------
# strata


@lru_cache(maxsize=None)
def _integral_stratum(es: tuple, p: int, flavor: str) -> Fraction:
    # es: ascending elementary-divisor exponents, all >= 0, math.inf allowed
    m = len(es)
    if m == 0:
        return Fraction(1)
    if all(e == math.inf for e in es):
        return Fraction(1) if (flavor == "ASymm" and m == 1) else Fraction(0)
    r = sum(1 for e in es if e == 0)
    rest = tuple(e - 1 if e != math.inf else e for e in es[r:])
    frac = rank_fraction(m, r, p, flavor)
    if frac == 0:
        return Fraction(0)
    return frac * _integral_stratum(rest, p, flavor)


def stratum_volume(profile, flavor: str = "GL", p: int | None = None) -> Fraction:
    """Volume of ``{z : profile(z) = ks}`` inside the flavor's matrix space."""
    if isinstance(profile, SingularProfile):
        p, ks = profile.p, profile.ks
    else:
        ks = tuple(profile)
    _check_flavor(flavor)
    n = len(ks)
    finite = [k for k in ks if k != NEG_INF]
    if not finite:
        return Fraction(1) if (flavor == "ASymm" and n == 1) else Fraction(0)
    top = max(finite)
    es = tuple(sorted(math.inf if k == NEG_INF else top - k for k in ks))
    return Fraction(p) ** (top * space_dim(n, flavor)) * _integral_stratum(es, p, flavor)


# ---------------------------------------------------------------------------
# profile enumeration and the stratified series


def _free_layout(n: int, flavor: str):
    """Coefficients and multiplicities of the free profile variables.

    Strata volumes satisfy ``vol(k) <= C**n * p**L(k)`` where ``L`` is linear
    in the profile sorted decreasingly; ASymm profiles come in equal pairs
    (plus a trailing ``-inf`` for odd ``n``) so pairs share one variable.
    """
    if flavor == "GL":
        coef = [2 * n + 1 - 2 * j for j in range(1, n + 1)]
    elif flavor == "Symm":
        coef = [n - j + 1 for j in range(1, n + 1)]
    else:
        coef = [n - j for j in range(1, n + 1)]
    if flavor != "ASymm":
        return [(c, 1) for c in coef]
    return [(coef[2 * i] + coef[2 * i + 1], 2) for i in range(n // 2)]


def profiles_in_box(n: int, flavor: str, kmax: int, kmin: int):
    """All attainable profiles with ``kmax >= k_1`` and ``k_n >= kmin``."""
    _check_flavor(flavor)
    free = n // 2 if flavor == "ASymm" else n
    for vals in _descending(free, kmax, kmin):
        if flavor == "ASymm":
            ks = tuple(x for v in vals for x in (v, v))
            if n % 2:
                ks = ks + (NEG_INF,)
            yield ks
        else:
            yield vals


def _descending(m, hi, lo):
    if m == 0:
        yield ()
        return
    for first in range(hi, lo - 1, -1):
        for rest in _descending(m - 1, first, lo):
            yield (first,) + rest


@lru_cache(maxsize=None)
def _majorant_constant(n: int, p: int, flavor: str) -> Fraction:
    best = Fraction(1)
    for m in range(1, n + 1):
        for r in range(m + 1):
            val = rank_fraction(m, r, p, flavor) * Fraction(p) ** space_dim(m - r, flavor)
            best = max(best, val)
    return best


def _positive_sum(ks):
    return sum(k for k in ks if k != NEG_INF and k > 0)


def _box_sum(n, alpha, p, flavor, kmax, kmin):
    total = Fraction(0) if Fraction(alpha).denominator == 1 else mpmath.mpf(0)
    for ks in profiles_in_box(n, flavor, kmax, kmin):
        vol = stratum_volume(ks, flavor, p)
        if vol:
            w = _ppow(p, -Fraction(alpha) * _positive_sum(ks))
            total += vol * w if isinstance(w, Fraction) else mpmath.mpf(vol.numerator) / vol.denominator * w
    return total


def _rates(n, alpha, flavor):
    layout = _free_layout(n, flavor)
    if not layout:
        return None
    dplus = min(float(alpha) * mult - c for c, mult in layout)
    dminus = min(c for c, _ in layout)
    if dplus <= 0:
        raise ConvergenceDomain(
            f"series diverges for alpha={alpha} on the {flavor} space", n=n, alpha=str(alpha)
        )
    return dplus, dminus, len(layout)


def _far_bound(n, alpha, p, flavor, kmax, kmin) -> float:
    rates = _rates(n, alpha, flavor)
    if rates is None:
        return 0.0
    dplus, dminus, m = rates
    q = float(p)
    C = float(_majorant_constant(n, p, flavor))
    full = 1 / (1 - q**-dminus) + q**-dplus / (1 - q**-dplus)
    tail = q ** (-dplus * (kmax + 1)) / (1 - q**-dplus) + q ** (-dminus * (1 - kmin)) / (
        1 - q**-dminus
    )
    return C**n * m * tail * full ** (m - 1)


_FAR_TARGET = 2.0**-50
_BOX_LIMIT = 60000


def _margin(n, alpha, p, flavor, kmax, kmin):
    free = len(_free_layout(n, flavor))
    extra = 0
    while _far_bound(n, alpha, p, flavor, kmax + extra, kmin - extra) > _FAR_TARGET:
        width = kmax - kmin + 2 * (extra + 1) + 1
        if free and math.comb(width + free - 1, free) > _BOX_LIMIT:
            break
        extra += 1
    return extra


class SeriesResult(NamedTuple):
    partial_sum: object
    tail_bound: float


def hua_series(n: int, alpha, p: int, kmax: int, depth: int, flavor: str = "GL") -> SeriesResult:
    """Stratified partial sum of ``gamma(z)**-alpha dvol`` over a profile box.

    The box is ``kmax >= k_1 >= ... >= k_n >= -depth``.  The tail bound is the
    exact mass of a wider box beyond this one plus a geometric bound on the
    rest, inflated by ``1e-9`` relative to absorb float rounding.
    """
    _check_flavor(flavor)
    _rates(n, alpha, flavor)
    kmin = -depth
    inner = _box_sum(n, alpha, p, flavor, kmax, kmin)
    extra = _margin(n, alpha, p, flavor, kmax, kmin)
    if extra:
        outer = _box_sum(n, alpha, p, flavor, kmax + extra, kmin - extra)
        near = float(outer - inner)
    else:
        near = 0.0
    far = _far_bound(n, alpha, p, flavor, kmax + extra, kmin - extra)
    return SeriesResult(inner, (near + far) * (1 + 1e-9))


@lru_cache(maxsize=None)
def normalization_numeric(spec: MeasureSpec, kmax: int = 4, depth: int = 4):
    """Total mass of ``gamma**-e dvol`` on the flavor's space, with error bound."""
    n, p = spec.n, spec.p
    alpha = spec.exponent
    _rates(n, alpha, spec.flavor)
    extra = _margin(n, alpha, p, spec.flavor, kmax, -depth)
    value = _box_sum(n, alpha, p, spec.flavor, kmax + extra, -depth - extra)
    far = _far_bound(n, alpha, p, spec.flavor, kmax + extra, -depth - extra)
    return SeriesResult(value, far * (1 + 1e-9) + _rounding(value))


def _rounding(value) -> float:
    if isinstance(value, Fraction):
        return 0.0
    return float(abs(value)) * 2.0**-100


def normalization(spec: MeasureSpec):
    """Normalizing constant: closed form for GL, series value otherwise."""
    if spec.flavor == "GL":
        return hua_constant(spec.n, spec.exponent, spec.p)
    return normalization_numeric(spec).partial_sum


def profile_weight(ks, spec: MeasureSpec):
    """Unnormalized ``gamma**-e`` mass of one stratum."""
    vol = stratum_volume(ks, spec.flavor, spec.p)
    w = _ppow(spec.p, -spec.exponent * _positive_sum(ks))
    if isinstance(w, Fraction):
        return vol * w
    return mpmath.mpf(vol.numerator) / vol.denominator * w


def profile_probability(ks, spec: MeasureSpec):
    """mu_s mass of the stratum with profile ``ks``."""
    num, den = profile_weight(ks, spec), normalization(spec)
    if isinstance(num, Fraction) and isinstance(den, Fraction):
        return num / den
    with mpmath.workprec(_MP_PREC):
        return _mpf(num) / _mpf(den)


def _mpf(x):
    return mpmath.mpf(x.numerator) / x.denominator if isinstance(x, Fraction) else x


def density(z: PadicMatrix, spec: MeasureSpec):
    """Density of mu_s against the flavor's additive Haar measure at ``z``."""
    prof = smith_profile(z)
    w, den = _ppow(spec.p, -spec.exponent * prof.positive_sum()), normalization(spec)
    if isinstance(w, Fraction) and isinstance(den, Fraction):
        return w / den
    with mpmath.workprec(_MP_PREC):
        return _mpf(w) / _mpf(den)
