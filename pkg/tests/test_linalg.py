from fractions import Fraction
from math import inf

import pytest
from conftest import random_invertible, random_unimodular
from oracles import all_matrices, smith_by_minors

from padic_hua.errors import PrecisionExhausted, ShapeMismatch, SingularMatrix
from padic_hua.linalg import (
    PadicMatrix,
    SingularProfile,
    det,
    det_norm,
    gamma,
    inverse,
    matmul,
    product_agrees,
    smith_profile,
    transpose,
)

M = PadicMatrix.from_rationals


def test_matmul_examples():
    x = M([[1, "1/3"], [4, 5]], 2)
    assert (x @ PadicMatrix.identity(2, 2)).agrees(x)
    assert (M([[2, 0], [0, 4]], 2) @ M([["1/2", 0], [0, "1/4"]], 2)).agrees(PadicMatrix.identity(2, 2))
    assert transpose(transpose(x)).agrees(x)
    with pytest.raises(ShapeMismatch):
        matmul(M([[1, 2]], 2), M([[1, 2]], 2))


def test_profile_examples():
    assert smith_profile(M([["1/4", 0, 0], [0, 2, 0], [0, 0, 3]], 2)).ks == (2, 0, -1)
    assert smith_profile(PadicMatrix.identity(3, 5)).ks == (0, 0, 0)
    assert smith_profile(M([[2, 1], [0, 2]], 2)).ks == (0, -2)


def test_gamma_examples():
    assert gamma(M([[3, 4], [1, 7]], 2)) == 1
    assert gamma(M([["1/4", 0, 0], [0, 2, 0], [0, 0, 3]], 2)) == 4
    z = M([["1/2", "1/2"], ["1/2", "1/2"]], 2)
    assert gamma(z) == 2
    assert smith_profile(z).ks == (1, -inf)
    assert det_norm(z) == 0


def test_det_examples():
    assert det_norm(PadicMatrix.identity(2, 2)) == 1
    assert det_norm(M([["1/4", 0, 0], [0, 2, 0], [0, 0, 3]], 2)) == 2
    d = det(M([[2, 1], [0, 2]], 2))
    assert (d.v, d.u) == (2, 1)


def test_singular_inverse():
    with pytest.raises(SingularMatrix):
        inverse(M([[1, 2], [2, 4]], 3))


def test_inexact_inverse_and_profile():
    x = PadicMatrix.from_scaled([[5, 3], [7, 2]], 1, 20, 3)
    assert smith_profile(x).ks == (1, 1)
    assert product_agrees(x, inverse(x), PadicMatrix.identity(2, 3))
    assert not product_agrees(x, inverse(x), PadicMatrix.diag([1, 2], 3))


def test_inexact_zero_block_exhausts():
    x = PadicMatrix.from_scaled([[1, 2], [2, 4]], 0, 6, 5)
    with pytest.raises(PrecisionExhausted):
        smith_profile(x)


def test_json_round_trip():
    z = M([["1/4", 3], [0, "-2/9"]], 3)
    assert PadicMatrix.from_json(z.to_json()).agrees(z)
    prof = SingularProfile(2, (1, -inf))
    assert prof.to_json() == {"p": 2, "ks": [1, "-inf"]}
    assert SingularProfile.from_json(prof.to_json()) == prof


@pytest.mark.parametrize("n,p", [(1, 2), (1, 3), (2, 2), (2, 3)])
def test_oracle_equivalence(n, p):
    values = [Fraction(k, p) for k in range(p * p)]
    for z in all_matrices(n, values):
        assert smith_profile(M(z, p)).ks == smith_by_minors(z, p), z


@pytest.mark.parametrize("n,p", [(2, 2), (3, 3), (4, 2)])
def test_two_sided_invariance(rng, n, p):
    for _ in range(60):
        z = random_invertible(rng, n, p)
        a, b = random_unimodular(rng, n, p), random_unimodular(rng, n, p)
        assert smith_profile(a @ z @ b) == smith_profile(z)


@pytest.mark.parametrize("n,p", [(2, 2), (3, 3)])
def test_gamma_ratio_and_scaling(rng, n, p):
    for _ in range(60):
        z = random_invertible(rng, n, p)
        prof = smith_profile(z)
        assert det_norm(z) == Fraction(p) ** sum(prof.ks)
        assert gamma(z) / gamma(inverse(z)) == det_norm(z)
        pz = PadicMatrix.diag([p] * n, p) @ z
        assert smith_profile(pz) == prof.shifted(-1)
