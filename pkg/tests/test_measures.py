from collections import Counter
from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import rank_mod_p, smith_by_minors

from padic_hua.errors import ConvergenceDomain
from padic_hua.linalg import PadicMatrix
from padic_hua.measures import (
    MeasureSpec,
    density,
    hua_constant,
    hua_series,
    normalization,
    normalization_numeric,
    profile_probability,
    profiles_in_box,
    rank_counts_enumerated,
    rank_fraction,
    space_dim,
    stratum_volume,
    vol_GL,
)

F = Fraction


def test_hua_constant_examples():
    assert hua_constant(1, 3, 2) == F(7, 6)
    assert hua_constant(2, 4, 2) == F(35, 16)
    assert abs(float(hua_constant(2, 60, 3)) - 1) < 2.0**-50


def test_hua_constant_domain():
    with pytest.raises(ConvergenceDomain):
        hua_constant(2, 3, 2)
    with pytest.raises(ConvergenceDomain):
        hua_constant(1, 1, 5)


def test_hua_constant_real_alpha():
    # non-integral alpha goes through 128-bit floats; compare with the product formula
    a = F(5, 2)
    want = (1 - 2 ** -2.5) / (1 - 2 ** -1.5)
    assert abs(float(hua_constant(1, a, 2)) - want) < 1e-15


def test_vol_gl_examples():
    assert vol_GL(1, 2) == F(1, 2)
    assert vol_GL(2, 2) == F(3, 8)
    assert vol_GL(2, 3) == F(16, 27)


@pytest.mark.parametrize("n,p", [(1, 2), (2, 2), (2, 3), (3, 2)])
def test_vol_gl_by_enumeration(n, p):
    good = total = 0
    for flat in product(range(p), repeat=n * n):
        M = [list(flat[i * n : (i + 1) * n]) for i in range(n)]
        good += rank_mod_p(M, p) == n
        total += 1
    assert F(good, total) == vol_GL(n, p)


@pytest.mark.parametrize("n,p", [(2, 2), (2, 3), (3, 2)])
def test_gl_rank_fraction_closed_form(n, p):
    counts = rank_counts_enumerated(n, p, "GL")
    for r in range(n + 1):
        assert rank_fraction(n, r, p, "GL") == F(counts[r], p ** (n * n))


def test_stratum_examples():
    assert stratum_volume((0,), "GL", 2) == F(1, 2)
    assert stratum_volume((1,), "GL", 2) == 1
    assert stratum_volume((0, 0), "GL", 2) == F(3, 8)


def _strata_by_counting(n, p, M, flavor):
    """Profile frequencies of the flavor space over Z/p^M, via determinantal divisors."""
    cells = [(i, j) for i in range(n) for j in range(n)]
    if flavor == "Symm":
        cells = [(i, j) for i in range(n) for j in range(i, n)]
    elif flavor == "ASymm":
        cells = [(i, j) for i in range(n) for j in range(i + 1, n)]
    freq = Counter()
    q = p**M
    for vals in product(range(q), repeat=len(cells)):
        Z = [[F(0)] * n for _ in range(n)]
        for (i, j), x in zip(cells, vals):
            Z[i][j] = F(x)
            if flavor != "GL":
                Z[j][i] = F(x) if flavor == "Symm" else F(-x)
        ks = smith_by_minors(Z, p)
        # exponents below M are fixed by the residue mod p^M
        structural = n % 2 if flavor == "ASymm" else 0
        finite = [k for k in ks if k > -M]
        if len(finite) == n - structural:
            freq[ks] += 1
    return {ks: F(c, q ** len(cells)) for ks, c in freq.items()}


@pytest.mark.parametrize("n,p,M,flavor", [(1, 3, 3, "GL"), (2, 2, 2, "GL"), (2, 2, 3, "Symm"),
                                          (2, 3, 2, "Symm"), (3, 2, 3, "ASymm"), (2, 2, 3, "ASymm")])
def test_stratum_volume_matches_counting(n, p, M, flavor):
    counted = _strata_by_counting(n, p, M, flavor)
    assert counted
    for ks, frac in counted.items():
        assert stratum_volume(ks, flavor, p) == frac, ks


def test_stratum_scaling():
    for ks in [(2, 0), (1, -1), (0, -3)]:
        shifted = tuple(k + 2 for k in ks)
        assert stratum_volume(shifted, "GL", 3) == F(3) ** (2 * 4) * stratum_volume(ks, "GL", 3)


@pytest.mark.parametrize("n,flavor", [(2, "Symm"), (3, "Symm"), (3, "ASymm"), (4, "ASymm")])
def test_rank_counts_add_up(n, flavor):
    counts = rank_counts_enumerated(n, 2, flavor)
    assert sum(counts) == 2 ** space_dim(n, flavor)
    if flavor == "ASymm":
        assert all(c == 0 for r, c in enumerate(counts) if r % 2)


@pytest.mark.parametrize("n,p", [(1, 2), (1, 3), (2, 2), (2, 3)])
@pytest.mark.parametrize("extra", [0, 1, 2])
def test_series_brackets_closed_form(n, p, extra):
    alpha = 2 * n + extra
    res = hua_series(n, alpha, p, 10, 4)
    gap = abs(float(hua_constant(n, alpha, p) - res.partial_sum))
    assert gap <= res.tail_bound


def test_series_worked_value():
    # n=1, alpha=3: k <= 0 strata give 1, k >= 1 give sum 2^(k-1) 2^(-3k) = 1/6
    total = sum(stratum_volume((k,), "GL", 2) * F(2) ** (-3 * max(k, 0)) for k in range(-80, 81))
    assert abs(total - F(7, 6)) < F(1, 2**70)
    res = hua_series(2, 4, 2, 8, 3)
    assert abs(float(F(35, 16) - res.partial_sum)) <= res.tail_bound


def test_series_large_alpha():
    res = hua_series(2, 60, 2, 3, 3, "Symm")
    assert abs(float(res.partial_sum) - 1) <= res.tail_bound + 2.0**-50


def test_series_domain():
    with pytest.raises(ConvergenceDomain):
        hua_series(2, 3, 2, 4, 4)


def test_symm_asymm_normalization():
    # Symm(1) is Mat(1) with the same exponent, so the series brackets c(1,2) = 3/2
    res = normalization_numeric(MeasureSpec(2, 1, 0, "Symm"))
    assert abs(float(res.partial_sum - F(3, 2))) <= res.tail_bound
    assert normalization(MeasureSpec(2, 1, 0, "ASymm")) == 1
    a = hua_series(2, 3, 2, 4, 4, "Symm")
    b = hua_series(2, 3, 2, 7, 6, "Symm")
    assert abs(float(a.partial_sum - b.partial_sum)) <= a.tail_bound + b.tail_bound


def test_spec_validation():
    with pytest.raises(ConvergenceDomain):
        MeasureSpec(2, 2, -1)
    with pytest.raises(ConvergenceDomain):
        MeasureSpec(2, 2, F(-1, 2), "Symm")
    with pytest.raises(ValueError):
        MeasureSpec(2, 2, 0, "Herm")
    assert MeasureSpec(2, 3, 1, "GL").exponent == 7
    assert MeasureSpec(2, 3, 1, "Symm").exponent == 5
    assert MeasureSpec(2, 3, 1, "ASymm").exponent == 3


def test_density_examples():
    spec = MeasureSpec(2, 1, 1)
    assert density(PadicMatrix.from_rationals([[3]], 2), spec) == F(6, 7)
    assert density(PadicMatrix.from_rationals([["1/2"]], 2), spec) == F(1, 8) / F(7, 6)
    assert profile_probability((1,), spec) == F(3, 28)


@settings(max_examples=40, deadline=None)
@given(st.integers(-4, 4), st.integers(-4, 4), st.integers(-4, 4), st.integers(-4, 4))
def test_density_ratio_independent_of_normalization(a, b, c, d):
    spec = MeasureSpec(3, 2, 1)
    z1 = PadicMatrix.diag([F(3) ** a, F(3) ** b], 3)
    z2 = PadicMatrix.diag([F(3) ** c, F(3) ** d], 3)
    g1 = F(3) ** (max(-a, 0) + max(-b, 0))
    g2 = F(3) ** (max(-c, 0) + max(-d, 0))
    assert density(z1, spec) / density(z2, spec) == (g1 / g2) ** -5


@pytest.mark.parametrize("n,flavor", [(1, "GL"), (2, "GL"), (2, "Symm"), (3, "ASymm")])
def test_profile_probabilities_sum_to_one(n, flavor):
    spec = MeasureSpec(2, n, 1, flavor)
    total = sum(float(profile_probability(ks, spec)) for ks in profiles_in_box(n, flavor, 16, -40))
    assert abs(total - 1) < 1e-6
