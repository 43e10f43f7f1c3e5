from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from padic_hua.errors import ConvergenceDomain
from padic_hua.linalg import det_norm
from padic_hua.measures import MeasureSpec, profile_probability
from padic_hua.samplers import (
    RandomStream,
    draw_haar_gl,
    draw_integral,
    draw_mu0,
    draw_mu_s,
    evaluate,
    expected_acceptance,
    profiles_of,
    sample_haar_GL,
    sample_integral_matrix,
    sample_mu0,
    sample_mu_s,
    truncation_bias,
    weighted_samples,
)
from padic_hua.experiments import profile_gof
from padic_hua.stats import proportion_check

F = Fraction
SIGMAS = 4


def within(successes, trials, p):
    return proportion_check("t", successes, trials, p).passed


def test_stream_determinism_and_splitting():
    a = RandomStream(7).split("x", 1).residues(3, 10, 50)
    b = RandomStream(7).split("x", 1).residues(3, 10, 50)
    c = RandomStream(7).split("x", 2).residues(3, 10, 50)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, RandomStream(8).split("x", 1).residues(3, 10, 50))


def test_wide_residues_use_python_ints():
    r = RandomStream(1).residues(3, 80, 200)
    assert r.dtype == object
    assert all(0 <= int(x) < 3**80 for x in r)
    # the top digits are used
    assert max(int(x) for x in r) > 3**79


def test_fixed_seed_same_matrix():
    x = sample_integral_matrix(2, 5, 12, RandomStream(3))
    y = sample_integral_matrix(2, 5, 12, RandomStream(3))
    assert x.to_json() == y.to_json()


def test_integral_digit_uniformity():
    raw = draw_integral(1, 3, 100_000, RandomStream(11))
    hits = int((raw.digits[:, 0, 0] % 3 == 0).sum())
    assert within(hits, 100_000, F(1, 3))


def test_integral_zero_mod_p():
    raw = draw_integral(2, 2, 100_000, RandomStream(12))
    zero = int(np.all(raw.digits % 2 == 0, axis=(1, 2)).sum())
    assert within(zero, 100_000, F(1, 16))


def test_haar_acceptance_and_unit_det():
    raw = draw_haar_gl(2, 2, 20_000, RandomStream(13))
    assert within(20_000, raw.info["candidates"], F(3, 8))
    for t in range(20):
        assert det_norm(sample_haar_GL(3, 3, 10, RandomStream(13, (t,)))) == 1


def test_haar_left_translation_smoke():
    raw = draw_haar_gl(2, 3, 20_000, RandomStream(14))
    h = np.array([[1, 2], [0, 1]])
    moved = np.einsum("ij,tjk->tik", h, raw.digits % 3) % 3
    fresh = draw_haar_gl(2, 3, 20_000, RandomStream(15)).digits % 3
    a = Counter(tuple(m.ravel()) for m in moved)
    b = Counter(tuple(m.ravel()) for m in fresh)
    from padic_hua.stats import two_sample_chisquare

    rep = two_sample_chisquare("haar", [tuple(m.ravel()) for m in moved], [tuple(m.ravel()) for m in fresh])
    assert rep.passed and len(a) == len(b) == 48


def _fractions(profiles, pred):
    return sum(1 for ks in profiles if pred(ks))


def test_mu0_rank_one_values():
    raw = draw_mu0(1, 2, 60_000, RandomStream(16))
    profs, bad = profiles_of(raw)
    assert not bad.any()
    assert within(_fractions(profs, lambda ks: ks[0] <= 0), 60_000, F(2, 3))
    assert within(_fractions(profs, lambda ks: ks[0] == 1), 60_000, F(1, 6))
    assert within(_fractions(profs, lambda ks: ks[0] == 0), 60_000, F(1, 3))


def test_mu0_inversion_symmetry():
    # z -> z^-1 maps profile k to -k reversed; the density predicts the ratio
    spec = MeasureSpec(3, 2, 0)
    profs, _ = profiles_of(draw_mu0(2, 3, 40_000, RandomStream(17)))
    counts = Counter(profs)
    for ks in [(1, 0), (2, -1), (1, 1)]:
        rev = tuple(-k for k in reversed(ks))
        pk, pr = profile_probability(ks, spec), profile_probability(rev, spec)
        assert within(counts[ks], counts[ks] + counts[rev], pk / (pk + pr))


def test_escalation_is_prefix_consistent():
    raw = draw_mu0(2, 2, 3000, RandomStream(18), N=3)

    def run(charts):
        ks, ok = charts.profiles()
        return {"ks": ks}, ok

    low, bad_low = evaluate(raw, run)
    high, bad_high = evaluate(raw.at_precision(24), run)
    assert not bad_low.any() and not bad_high.any()
    assert np.array_equal(low["ks"], high["ks"])
    # digits at 24 reduce to the base digits
    ext = raw.at_precision(24)
    assert np.array_equal(np.asarray(ext.digits, dtype=object) % 8, np.asarray(raw.digits, dtype=object))


def test_escalation_beyond_fast_precision():
    raw = draw_mu0(2, 3, 500, RandomStream(19), N=30)
    wide = raw.at_precision(60)
    assert wide.digits.dtype == object

    def run(charts):
        ks, ok = charts.profiles()
        return {"ks": ks}, ok

    a, _ = evaluate(raw, run)
    b, _ = evaluate(wide, run)
    assert np.array_equal(a["ks"], b["ks"])


def test_mu_s_acceptance_rate():
    spec = MeasureSpec(2, 1, 1)
    assert expected_acceptance(spec) == F(7, 9)
    raw = draw_mu_s(spec, 30_000, RandomStream(20))
    assert within(30_000, raw.info["candidates"], F(7, 9))
    profs, _ = profiles_of(raw)
    assert within(_fractions(profs, lambda ks: ks[0] <= 0), 30_000, F(6, 7))
    assert within(_fractions(profs, lambda ks: ks[0] == 1), 30_000, F(3, 28))


def test_mu_s_zero_is_mu0():
    spec = MeasureSpec(2, 2, 0)
    raw = draw_mu_s(spec, 100, RandomStream(21))
    ref = draw_mu0(2, 2, 100, RandomStream(21))
    assert raw.info["accepted"] == raw.info["candidates"] == 100
    assert np.array_equal(raw.digits, ref.digits)


@pytest.mark.parametrize("spec", [MeasureSpec(2, 1, 0), MeasureSpec(3, 2, 2), MeasureSpec(2, 2, 1)])
def test_profile_gof_exact_samplers(spec):
    assert profile_gof(spec, 20_000, RandomStream(22, (spec.p, spec.n))).passed


def test_weighted_negative_s():
    spec = MeasureSpec(2, 2, F(-1, 4))
    raw = draw_mu_s(spec, 5, RandomStream(23))
    assert all(isinstance(w, Fraction) and w >= 0 for w in raw.log_weights)
    assert profile_gof(spec, 20_000, RandomStream(23)).passed


@pytest.mark.parametrize("flavor,n", [("Symm", 2), ("ASymm", 2), ("ASymm", 3)])
def test_space_flavors_small_radius(flavor, n):
    spec = MeasureSpec(2, n, 1, flavor)
    assert profile_gof(spec, 20_000, RandomStream(24, (flavor, n)), radius=1).passed


def test_space_flavor_info():
    spec = MeasureSpec(2, 2, 0, "Symm")
    raw = draw_mu_s(spec, 10, RandomStream(25))
    bias = raw.info["truncation_bias"]
    assert bias == truncation_bias(spec, 8)
    assert 0 < truncation_bias(spec, 12) < bias < truncation_bias(spec, 4) < 1
    with pytest.raises(ConvergenceDomain):
        MeasureSpec(2, 2, F(-1, 2), "Symm")


def test_single_sample_api():
    z = sample_mu0(2, 3, 20, RandomStream(26))
    assert z.shape == (2, 2)
    ws = sample_mu_s(MeasureSpec(2, 2, 1), 20, RandomStream(27))
    assert ws.flag == "accepted" and ws.log_p_weight == 0
    js = ws.to_json()
    assert js["flag"] == "accepted" and js["z"]["rows"] == 2


@pytest.mark.parametrize("flavor", ["Symm", "ASymm"])
def test_space_samples_have_shape(flavor):
    for ws in weighted_samples(MeasureSpec(3, 3, 1, flavor), 5, RandomStream(28), radius=2):
        z = ws.z
        assert ws.flag == "weighted"
        assert z.is_symmetric() if flavor == "Symm" else z.is_antisymmetric()


def test_rejection_uses_gamma():
    # every accepted sample passed a coin with probability gamma^-s; the rate of
    # samples with gamma = p^k equals the exact stratum mass
    spec = MeasureSpec(3, 1, 2)
    profs, _ = profiles_of(draw_mu_s(spec, 20_000, RandomStream(29)))
    k1 = _fractions(profs, lambda ks: ks[0] == 1)
    assert within(k1, 20_000, profile_probability((1,), spec))
