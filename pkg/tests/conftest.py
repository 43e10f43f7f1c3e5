import random
import sys
from fractions import Fraction
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from padic_hua.linalg import PadicMatrix, exact_det  # noqa: E402


def random_rational_matrix(rng, n, p, spread=3):
    rows = []
    for _ in range(n):
        row = []
        for _ in range(n):
            num = rng.randrange(-(p**spread), p**spread)
            row.append(Fraction(num, p ** rng.randrange(0, spread)))
        rows.append(row)
    return rows


def random_invertible(rng, n, p, spread=3):
    while True:
        z = random_rational_matrix(rng, n, p, spread)
        if exact_det(z) != 0:
            return PadicMatrix.from_rationals(z, p)


def random_unimodular(rng, n, p):
    while True:
        m = [[rng.randrange(p**3) for _ in range(n)] for _ in range(n)]
        if exact_det(m) % p:
            return PadicMatrix.from_rationals(m, p)


@pytest.fixture
def rng():
    return random.Random(20240611)
