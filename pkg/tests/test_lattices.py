from fractions import Fraction
from itertools import product

import pytest
from conftest import random_invertible
from hypothesis import given, settings
from hypothesis import strategies as st

from padic_hua.errors import ConvergenceDomain, SingularMatrix
from padic_hua.lattices import (
    Lattice,
    beta_closed_form,
    enumerate_lattices,
    image_lattice,
    intersect,
    lattice_beta_partial_sum,
    lattice_sum,
    type_count,
    volume,
)
from padic_hua.linalg import PadicMatrix, det_norm, gamma, inverse

F = Fraction


def lat(cols, p=2):
    return Lattice.from_columns(cols, p)


def test_volume_examples():
    assert volume(Lattice.standard(2, 2)) == 1
    assert volume(lat([[F(1, 2)]])) == 2
    assert volume(lat([[F(1, 4), 0], [0, 1]])) == 4


def test_sum_intersect_rank_one():
    a, b = lat([[2]]), lat([[F(1, 2)]])
    assert lattice_sum(a, b) == b and volume(lattice_sum(a, b)) == 2
    assert intersect(a, b) == a and volume(intersect(a, b)) == F(1, 2)


def test_sum_intersect_rank_two():
    # columns (1,0),(0,1) and (1/2,1/2),(0,1)
    l1 = Lattice.standard(2, 2)
    l2 = lat([[F(1, 2), 0], [F(1, 2), 1]])
    assert volume(lattice_sum(l1, l2)) == 2
    # (1,0) = 2(1/2,1/2) - (0,1), so O^2 lies inside l2 and the meet is O^2
    assert l2.contains([1, 0]) and l2.contains([0, 1])
    assert intersect(l1, l2) == l1 and volume(intersect(l1, l2)) == 1


def test_sum_idempotent_and_canonical():
    L = lat([[F(1, 2), 3], [5, F(1, 4)]])
    assert lattice_sum(L, L) == L
    again = lat(L.basis.to_fractions())
    assert again.canonical == L.canonical


def test_change_of_basis_keeps_lattice():
    cols = [[F(1, 2), 3], [5, F(1, 4)]]
    # right multiplication by a unimodular integer matrix
    u = [[1, 1], [2, 3]]
    moved = [[sum(cols[i][k] * u[k][j] for k in range(2)) for j in range(2)] for i in range(2)]
    assert lat(cols) == lat(moved)


def _volume_by_counting(cols, p, a, b):
    """Count points of p^-a O^2 / p^b O^2 lying in the 2x2 column span; divide by p^(2b)."""
    (x, y), (z, w) = cols
    det = x * w - y * z
    inv = [[w / det, -y / det], [-z / det, x / det]]
    hits = 0
    q = p ** (a + b)
    for i, j in product(range(q), repeat=2):
        v = (F(i, p**a), F(j, p**a))
        c = [inv[r][0] * v[0] + inv[r][1] * v[1] for r in range(2)]
        hits += all(t.denominator % p for t in c)
    return F(hits, p ** (2 * b))


def test_volume_against_point_count():
    cols = [[F(1, 2), 0], [F(1, 2), 1]]
    for L in (lat(cols), lat([[F(1, 4), 3], [0, 2]]), lattice_sum(lat(cols), lat([[2, F(1, 2)], [0, 1]]))):
        assert _volume_by_counting(L.basis.to_fractions(), 2, 3, 2) == volume(L)


def test_contains_and_dual():
    L = lat([[F(1, 2), 0], [0, 2]])
    assert L.contains([F(1, 2), 0]) and L.contains([0, 4])
    assert not L.contains([F(1, 4), 0]) and not L.contains([0, 1])
    assert L.dual().dual() == L
    assert volume(L) * volume(L.dual()) == 1


def test_image_lattice_singular():
    with pytest.raises(SingularMatrix):
        image_lattice(PadicMatrix.from_rationals([[1, 2], [2, 4]], 3))


@pytest.mark.parametrize("n,p", [(1, 2), (2, 2), (2, 3), (3, 2)])
def test_gamma_lattice_identities(rng, n, p):
    O = Lattice.standard(n, p)
    for _ in range(40):
        z = random_invertible(rng, n, p)
        L = image_lattice(z)
        assert gamma(z) == volume(lattice_sum(L, O))
        assert 1 / gamma(inverse(z)) == volume(intersect(L, O))
        assert gamma(z) / gamma(inverse(z)) == det_norm(z)


entries = st.fractions(min_value=-8, max_value=8, max_denominator=8).filter(lambda x: x != 0)


@settings(max_examples=60, deadline=None)
@given(st.lists(entries, min_size=4, max_size=4), st.lists(entries, min_size=4, max_size=4))
def test_modular_law_of_volumes(a, b):
    m1 = [a[:2], a[2:]]
    m2 = [b[:2], b[2:]]
    if m1[0][0] * m1[1][1] == m1[0][1] * m1[1][0] or m2[0][0] * m2[1][1] == m2[0][1] * m2[1][0]:
        return
    L1, L2 = lat(m1, 3), lat(m2, 3)
    assert volume(lattice_sum(L1, L2)) * volume(intersect(L1, L2)) == volume(L1) * volume(L2)
    assert lattice_sum(L1, L2) == lattice_sum(L2, L1)
    assert intersect(L1, lattice_sum(L1, L2)) == L1


def test_enumeration_counts_small():
    # sublattice-containment shells of Z_2: lattices p^k O for |k| <= M
    assert len(list(enumerate_lattices(1, 2, 2))) == 5
    assert len(list(enumerate_lattices(2, 1, 2))) == 15


def test_type_count_rank_one():
    assert type_count([3], 2) == 1


def test_beta_closed_form_examples():
    assert beta_closed_form(1, 3, 2) == F(7, 3)
    assert beta_closed_form(2, 4, 2) == F(35, 6)


@pytest.mark.parametrize("n,t", [(1, 3), (1, 4), (2, 4)])
def test_beta_partial_sums_converge_monotonically(n, t):
    closed = beta_closed_form(n, t, 2)
    prev = F(0)
    for M in range(1, 4):
        res = lattice_beta_partial_sum(n, t, M, 2)
        assert res.partial_sum >= prev
        assert 0 <= closed - res.partial_sum <= res.tail_bound
        prev = res.partial_sum


def test_beta_domain():
    with pytest.raises(ConvergenceDomain):
        lattice_beta_partial_sum(2, 3, 2, 2)
