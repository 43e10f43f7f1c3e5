"""Monte Carlo checks built on the batch samplers.

Each function returns a :class:`~padic_hua.stats.TestReport`.  Samples that
stay undetermined at the maximal precision are dropped and counted in the
report detail; they occur with probability below ``p**-256``.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .actions import STANDARD_CYLINDERS, BlockGroupElement
from .linalg import NEG_INF
from .measures import MeasureSpec, hua_series, normalization, profile_weight
from .padic import format_rational
from .samplers import (
    DEFAULT_RADIUS,
    RandomStream,
    draw_mu0,
    draw_mu_s,
    evaluate,
    expected_acceptance,
    profile_tuple,
)
from .stats import (
    OVERFLOW,
    TestReport,
    assign,
    chisquare_gof,
    expected_probabilities,
    profile_bins,
    mean_comparison,
    proportion_check,
    two_sample_chisquare,
    weighted_gof,
)


def _nulls(spec: MeasureSpec, n: int) -> int:
    return n % 2 if spec.flavor == "ASymm" else 0


def _profiles_after(raw, corner: int | None = None, g: BlockGroupElement | None = None, nulls: int = 0):
    def run(charts):
        ok = np.ones(len(charts), dtype=bool)
        if g is not None:
            charts, _, ok = charts.moebius(g)
        if corner is not None:
            charts = charts.corner(corner)
        ks, ok2 = charts.profiles(nulls)
        return {"ks": ks}, ok & ok2

    res, bad = evaluate(raw, run)
    return [profile_tuple(r) for r, b in zip(res["ks"], bad) if not b], int(bad.sum()), ~bad


def _weights(raw, keep):
    lw = [w for w, k in zip(raw.log_weights, keep) if k]
    top = max(lw)
    return np.array([float(raw.p) ** float(w - top) for w in lw])


def _box_mass(spec: MeasureSpec, radius: int):
    return hua_series(spec.n, spec.exponent, spec.p, radius, 60, spec.flavor).partial_sum


def _box_expected(spec: MeasureSpec, radius: int) -> dict:
    """Stratum masses conditioned on ``p**-radius`` times the integral space."""
    inside = _box_mass(spec, radius)
    probs = {}
    for ks in profile_bins(spec.n, spec.flavor, 3):
        if max(k for k in ks if k != NEG_INF) <= radius:
            probs[ks] = float(profile_weight(ks, spec)) / float(inside)
    probs[OVERFLOW] = 1 - sum(probs.values())
    return probs


def profile_gof(spec: MeasureSpec, count: int, stream: RandomStream, corner: int | None = None,
                name: str | None = None, radius: int = DEFAULT_RADIUS) -> TestReport:
    """Chi-square of sampled profiles against exact stratum masses.

    With ``corner`` set the samples come from ``mu_s`` one size up and are
    projected before binning; the expected masses are those of ``spec``.
    Symm and ASymm draws live on a box of the given radius, so their
    expected masses are conditioned on that box.
    """
    src = spec if corner is None else MeasureSpec(spec.p, spec.n + 1, spec.s, spec.flavor)
    raw = draw_mu_s(src, count, stream, radius=radius)
    profs, dropped, keep = _profiles_after(raw, spec.n if corner else None, nulls=_nulls(spec, spec.n))
    if raw.kind == "space":
        expected = _box_expected(spec, radius)
    else:
        expected = expected_probabilities(spec)
    labels = assign(profs, [k for k in expected if k != "overflow"])
    name = name or f"profile_gof[{spec.flavor},n={spec.n},p={spec.p},s={spec.s}]"
    integral = np.array([all(k <= 0 for k in ks) for ks in profs], dtype=float)
    if raw.log_weights is None:
        rep = chisquare_gof(name, labels, expected)
        observed = float(integral.mean())
    else:
        w = _weights(raw, keep)
        rep = weighted_gof(name, labels, w, expected)
        observed = float((w * integral).sum() / w.sum())
    # integral matrices have volume 1 and density 1/normalization there
    mass = _box_mass(spec, radius) if raw.kind == "space" else normalization(spec)
    exact = isinstance(mass, Fraction) and mass.numerator < 10**6
    rep.detail["integral"] = {"observed": observed, "expected": format_rational(1 / mass) if exact else float(1 / mass)}
    rep.detail["dropped"] = dropped
    return rep


def pushforward_test(spec: MeasureSpec, count: int, stream: RandomStream) -> TestReport:
    """Corner-projected ``mu_s^{n+1}`` against the exact ``mu_s^n`` strata."""
    return profile_gof(
        spec, count, stream, corner=spec.n,
        name=f"pushforward[{spec.flavor},n={spec.n + 1}->{spec.n},p={spec.p},s={spec.s}]",
    )


def acceptance_rate_test(spec: MeasureSpec, count: int, stream: RandomStream) -> TestReport:
    raw = draw_mu_s(spec, count, stream)
    trials = raw.info["candidates"]
    return proportion_check(
        f"acceptance[n={spec.n},p={spec.p},s={spec.s}]", count, trials, expected_acceptance(spec)
    )


def invariance_test(n: int, p: int, g: BlockGroupElement, count: int, stream: RandomStream) -> TestReport:
    """Profiles of ``z * g`` and of an independent ``z'`` under ``mu_0``."""
    moved, d1, _ = _profiles_after(draw_mu0(n, p, count, stream.split("moved")), g=g)
    fresh, d2, _ = _profiles_after(draw_mu0(n, p, count, stream.split("fresh")))
    bins = {ks for ks in moved + fresh if all(abs(k) <= 3 for k in ks)}
    rep = two_sample_chisquare(f"invariance[n={n},p={p}]", assign(moved, bins), assign(fresh, bins))
    rep.detail["dropped"] = d1 + d2
    return rep


def _cylinder_values(raw, cyl, g=None, s=Fraction(0), square=False):
    def run(charts):
        ok = np.ones(len(charts), dtype=bool)
        factor = np.ones(len(charts))
        if g is not None:
            charts, vdet, ok = charts.moebius(g)
            factor = np.power(float(charts.p), -float(s) * vdet.astype(float))
        vals, ok2 = cyl.on_batch(charts)
        if square:
            vals = vals * vals
        return {"x": vals * factor}, ok & ok2

    res, bad = evaluate(raw, run)
    return res["x"][~bad], int(bad.sum())


def transport_test(spec: MeasureSpec, g: BlockGroupElement, count: int, stream: RandomStream,
                   cylinders=STANDARD_CYLINDERS, square: bool = False, label: str = "transport"):
    """``E[f(z*g) |det(a+zc)|**s] = E[f(w)]`` for independent ``z, w ~ mu_s``.

    With ``square`` the functions are squared first, which is the unitarity
    identity ``E|rho f|**2 = E|f|**2``.
    """
    first = draw_mu_s(spec, count, stream.split("moved"))
    second = draw_mu_s(spec, count, stream.split("fresh"))
    reports = []
    for cyl in cylinders:
        if max(i for ij in cyl.entries for i in ij) >= spec.n:
            continue
        x, d1 = _cylinder_values(first, cyl, g, spec.s, square)
        y, d2 = _cylinder_values(second, cyl, None, 0, square)
        rep = mean_comparison(f"{label}[{cyl.name},n={spec.n},p={spec.p},s={spec.s}]", x, y)
        rep.detail["dropped"] = d1 + d2
        reports.append(rep)
    return reports


def tower_test(spec: MeasureSpec, levels: int, count: int, stream: RandomStream):
    """Each level of a tower against direct samples of that size."""
    top = MeasureSpec(spec.p, levels, spec.s, spec.flavor)
    raw = draw_mu_s(top, count, stream.split("tower"))
    reports = []
    for k in range(1, levels + 1):
        towers, d1, _ = _profiles_after(raw, corner=k)
        direct_raw = draw_mu_s(MeasureSpec(spec.p, k, spec.s, spec.flavor), count, stream.split("direct", k))
        direct, d2, _ = _profiles_after(direct_raw)
        bins = {ks for ks in towers + direct if all(abs(x) <= 3 for x in ks)}
        rep = two_sample_chisquare(f"tower[level={k}/{levels},p={spec.p},s={spec.s}]",
                                   assign(towers, bins), assign(direct, bins))
        rep.detail["dropped"] = d1 + d2
        reports.append(rep)
    return reports
