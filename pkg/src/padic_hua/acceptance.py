"""The acceptance suite: one function per criterion, two tiers.

The fast tier caps Monte Carlo runs at 10**4 samples and matrix sizes at
n <= 2; the full tier runs the stated parameters.  Each criterion gets its
own random stream split from the suite seed, so reports are reproducible
and independent of execution order.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from itertools import permutations, product

import numpy as np

from .actions import (
    STANDARD_CYLINDERS,
    BlockGroupElement,
    cocycle_check,
    generator,
    moebius,
    random_group_element,
)
from .errors import BasePointSingular
from .experiments import (
    acceptance_rate_test,
    invariance_test,
    profile_gof,
    pushforward_test,
    transport_test,
)
from .lattices import (
    Lattice,
    beta_closed_form,
    image_lattice,
    intersect,
    lattice_beta_partial_sum,
    lattice_sum,
    volume,
)
from .linalg import PadicMatrix, exact_det, gamma, inverse, qval
from .measures import MeasureSpec, hua_constant, hua_series, profile_probability, vol_GL
from .projective import act_level, corner, embed_generator, random_band_element, stabilized_det
from .samplers import RandomStream, draw_haar_gl, expected_acceptance
from .stats import proportion_check

TIERS = {
    "fast": {"samples": 10_000, "max_n": 2, "exact_trials": 1000, "beta_depth": 3},
    "full": {"samples": 100_000, "max_n": 3, "exact_trials": 1000, "beta_depth": 3},
}


@dataclass
class CriterionResult:
    number: int
    title: str
    anchor: str
    passed: bool
    checks: list = field(default_factory=list)
    seconds: float = 0.0

    def to_json(self) -> dict:
        out = asdict(self)
        out.pop("seconds")
        return out


class _Checks:
    def __init__(self):
        self.items = []

    def add(self, name, passed, **info):
        self.items.append({"check": name, "passed": bool(passed), **info})

    def report(self, rep):
        self.add(rep.name, rep.passed, statistic=rep.statistic, dof=rep.dof, p_value=rep.p_value)

    @property
    def passed(self):
        return all(c["passed"] for c in self.items)


def _random_rational(gen, rows, cols, p, spread=2, kind="GL"):
    def entry():
        return Fraction(int(gen.integers(0, p * p))) * Fraction(p) ** int(gen.integers(-spread, spread + 1))

    z = [[entry() for _ in range(cols)] for _ in range(rows)]
    if kind != "GL":
        sign = 1 if kind == "Symm" else -1
        for i in range(rows):
            for j in range(i):
                z[i][j] = sign * z[j][i]
            if kind == "ASymm":
                z[i][i] = Fraction(0)
    return z


def _exact(F, p):
    return PadicMatrix.from_rationals(F, p)


def _non_parabolic(n, p, flavor, stream):
    """A word that passes through the flip, so ``c`` is generically nonzero."""
    left = random_group_element(n, p, flavor, 2, stream.split("left"))
    right = random_group_element(n, p, flavor, 2, stream.split("right"))
    return left @ generator("flip", n, p, flavor, stream.gen) @ right


# ---------------------------------------------------------------------------
# criteria


def crit_hua_closed_form(cfg, stream):
    c = _Checks()
    start = time.perf_counter()
    for n, p in product((1, 2), (2, 3)):
        for alpha in (2 * n, 2 * n + 1, 2 * n + 2):
            closed = hua_constant(n, alpha, p)
            series = hua_series(n, alpha, p, 10, 4)
            gap = abs(float(closed - series.partial_sum))
            c.add(f"series[n={n},p={p},alpha={alpha}]", gap <= series.tail_bound,
                  closed_form=str(closed), gap=gap, tail_bound=series.tail_bound)
            if n == 1:
                q = Fraction(p)
                geometric = (1 - q**-alpha) / (1 - q ** (1 - alpha))
                c.add(f"geometric[p={p},alpha={alpha}]", closed == geometric)
    elapsed = time.perf_counter() - start
    c.add("runtime_under_30s", elapsed < 30)
    return c


def _count_invertible(n, p):
    mats = np.array(list(product(range(p), repeat=n * n)), dtype=np.int64).reshape(-1, n, n)
    det = np.zeros(len(mats), dtype=np.int64)
    for perm in permutations(range(n)):
        sign = np.linalg.det(np.eye(n)[list(perm)])
        term = np.ones(len(mats), dtype=np.int64)
        for i, j in enumerate(perm):
            term = term * mats[:, i, j]
        det += int(round(sign)) * term
    return int((det % p != 0).sum()), len(mats)


def crit_vol_gl(cfg, stream):
    c = _Checks()
    for n, p in product(range(1, cfg["max_n"] + 1), (2, 3)):
        good, total = _count_invertible(n, p)
        c.add(f"enumeration[n={n},p={p}]", Fraction(good, total) == vol_GL(n, p),
              count=good, total=total, product=str(vol_GL(n, p)))
    n, p = 2, 2
    vol = vol_GL(n, p)
    want = max(1, round(cfg["samples"] * float(vol)))
    raw = draw_haar_gl(n, p, want, stream.split("haar"))
    c.report(proportion_check(f"haar_rejection[n={n},p={p}]", want, raw.info["candidates"], vol))
    return c


def crit_gamma_lattice(cfg, stream):
    c = _Checks()
    gen = stream.gen
    for n, p in product(range(1, cfg["max_n"] + 1), (2, 3)):
        bad = 0
        O = Lattice.standard(n, p)
        for _ in range(cfg["exact_trials"]):
            while True:
                F = _random_rational(gen, n, n, p)
                det = exact_det(F)
                if det:
                    break
            z = _exact(F, p)
            L = image_lattice(z)
            ok = gamma(z) == volume(lattice_sum(L, O))
            ok &= 1 / gamma(inverse(z)) == volume(intersect(L, O))
            ok &= gamma(z) / gamma(inverse(z)) == Fraction(p) ** -qval(det, p)
            bad += not ok
        c.add(f"identities[n={n},p={p}]", bad == 0, trials=cfg["exact_trials"], failures=bad)
    return c


def crit_cocycle(cfg, stream):
    c = _Checks()
    gen = stream.gen
    cases = [("GL", n, "GL") for n in range(1, cfg["max_n"] + 1)]
    cases += [("Sp", n, "Symm") for n in (1, 2)] + [("O", 2, "ASymm")]
    p = 2
    for flavor, n, kind in cases:
        bad = skipped = 0
        for t in range(cfg["exact_trials"]):
            g1 = random_group_element(n, p, flavor, 3, stream.split(flavor, n, t, 1))
            g2 = random_group_element(n, p, flavor, 3, stream.split(flavor, n, t, 2))
            z = _exact(_random_rational(gen, n, n, p, kind=kind), p)
            try:
                bad += not cocycle_check(g1, g2, z, 1)
            except BasePointSingular:
                skipped += 1
        c.add(f"chain_rule[{flavor},n={n}]", bad == 0, trials=cfg["exact_trials"], failures=bad,
              singular_base_points=skipped)
    for n, s in product((1, 2), (0, 1)):
        g = _non_parabolic(n, p, "GL", stream.split("transport-g", n, s))
        for rep in transport_test(MeasureSpec(p, n, s), g, cfg["samples"], stream.split("transport", n, s)):
            c.report(rep)
    return c


def crit_invariance(cfg, stream):
    c = _Checks()
    for n, p in product((1, 2), (2, 3)):
        for j in range(5):
            g = _non_parabolic(n, p, "GL", stream.split("g", n, p, j))
            c.report(invariance_test(n, p, g, cfg["samples"], stream.split("run", n, p, j)))
    return c


def crit_pushforward(cfg, stream):
    c = _Checks()
    spec = MeasureSpec(2, 1, 1)
    integral = sum(profile_probability((k,), spec) for k in range(-60, 1))
    # strata below -60 halve each step, so they sum to the last included term
    tail = profile_probability((-60,), spec)
    c.add("P(integral)=6/7", abs(integral - Fraction(6, 7)) <= tail, value=float(integral))
    c.add("P(|z|=2)=3/28", profile_probability((1,), spec) == Fraction(3, 28))
    start = time.perf_counter()
    for n, p, s in product(range(1, cfg["max_n"]), (2, 3), (0, 1, 2)):
        c.report(pushforward_test(MeasureSpec(p, n, s), cfg["samples"], stream.split(n, p, s)))
    c.add("runtime_under_5min", time.perf_counter() - start < 300)
    return c


def _fractions_equal(x: PadicMatrix, y: PadicMatrix) -> bool:
    return x.to_fractions() == y.to_fractions()


def crit_generator_compat(cfg, stream):
    c = _Checks()
    gen = stream.gen
    p = 2
    for n in range(1, cfg["max_n"] + 1):
        for name in ("levi", "upper", "flip"):
            bad = skipped = 0
            for _ in range(cfg["exact_trials"]):
                g = generator(name, n, p, "GL", gen)
                z = _exact(_random_rational(gen, n + 1, n + 1, p), p)
                try:
                    lhs = corner(moebius(z, embed_generator(g)), n)
                    rhs = moebius(corner(z, n), g)
                except BasePointSingular:
                    skipped += 1
                    continue
                bad += not _fractions_equal(lhs, rhs)
            c.add(f"compatibility[{name},n={n}]", bad == 0, trials=cfg["exact_trials"], failures=bad,
                  singular_base_points=skipped)
    z = _exact([[Fraction(3, 2), 5], [7, Fraction(1, 4)]], p)
    flip = BlockGroupElement.from_blocks([[0]], [[1]], [[1]], [[0]])
    c.add("flip_corner_is_inverse", moebius(z, embed_generator(flip)).to_fractions()[0][0] == Fraction(2, 3))
    up = BlockGroupElement.from_blocks([[1]], [[5]], [[0]], [[1]])
    c.add("upper_corner_is_shift", moebius(z, embed_generator(up)).to_fractions()[0][0] == Fraction(13, 2))
    return c


def crit_stabilization(cfg, stream):
    c = _Checks()
    gen = stream.gen
    p = 2
    bad_det = bad_rn = bad_comp = skipped = 0
    for _ in range(cfg["exact_trials"]):
        k0 = int(gen.integers(1, 3))
        g = random_band_element(k0, p, 1, 3, gen)
        z = _exact(_random_rational(gen, k0 + 3, k0 + 3, p), p)
        levels = (k0, k0 + 1, k0 + 3)
        try:
            dets = {stabilized_det(g, z, k).exact for k in levels}
            images = {k: act_level(g, corner(z, k), 1) for k in range(k0, k0 + 4)}
        except BasePointSingular:
            skipped += 1
            continue
        bad_det += len(dets) != 1
        bad_rn += len({images[k][1] for k in levels}) != 1
        bad_comp += any(
            not _fractions_equal(corner(images[k + 1][0], k), images[k][0]) for k in range(k0, k0 + 3)
        )
    trials = cfg["exact_trials"]
    c.add("stabilized_det", bad_det == 0, trials=trials, failures=bad_det, singular_base_points=skipped)
    c.add("cocycle_exponent_levels", bad_rn == 0, trials=trials, failures=bad_rn)
    c.add("level_compatibility", bad_comp == 0, trials=trials, failures=bad_comp)
    return c


def crit_sampler(cfg, stream):
    c = _Checks()
    c.add("expected_rate[n=1,p=2,s=1]=7/9", expected_acceptance(MeasureSpec(2, 1, 1)) == Fraction(7, 9))
    for p, n, s in [(2, 1, 1), (2, 2, 1), (3, 1, 2), (3, 2, 1)]:
        c.report(acceptance_rate_test(MeasureSpec(p, n, s), cfg["samples"], stream.split("rate", p, n, s)))
    gof = [
        (MeasureSpec(2, 1, 0), 8),
        (MeasureSpec(2, 1, 1), 8),
        (MeasureSpec(3, 2, 2), 8),
        (MeasureSpec(2, 2, Fraction(-1, 4)), 8),
        (MeasureSpec(2, 2, 1, "Symm"), 1),
        (MeasureSpec(2, 2, 1, "ASymm"), 1),
    ]
    for spec, radius in gof:
        c.report(profile_gof(spec, cfg["samples"], stream.split("gof", str(spec.to_json())), radius=radius))
    return c


def crit_beta_sum(cfg, stream):
    c = _Checks()
    p = 2
    for n in (1, 2):
        for t in (2 * n + 1, 2 * n + 2):
            closed = beta_closed_form(n, t, p)
            prev = Fraction(0)
            for M in range(1, cfg["beta_depth"] + 1):
                res = lattice_beta_partial_sum(n, t, M, p)
                gap = closed - res.partial_sum
                c.add(f"beta[n={n},t={t},depth={M}]",
                      res.partial_sum >= prev and 0 <= gap <= res.tail_bound,
                      partial=float(res.partial_sum), gap=float(gap), tail_bound=res.tail_bound)
                prev = res.partial_sum
    return c


def crit_unitarity(cfg, stream):
    c = _Checks()
    n, p = 2, 2
    for s in (0, 1):
        for j in range(5):
            g = _non_parabolic(n, p, "GL", stream.split("g", s, j))
            for rep in transport_test(MeasureSpec(p, n, s), g, cfg["samples"], stream.split("run", s, j),
                                      STANDARD_CYLINDERS, square=True, label=f"unitarity[g{j}]"):
                c.report(rep)
    return c


CRITERIA = [
    (1, "Hua integral closed form vs series", "closed form of the Hua integral", crit_hua_closed_form),
    (2, "Volume of GL(n, O_p)", "lemma: vol(K) = prod(1 - p^-j)", crit_vol_gl),
    (3, "gamma-lattice identities", "lemma: gamma(z) = vol(zO^n + O^n)", crit_gamma_lattice),
    (4, "Cocycle and measure transport", "theorem: transformation of mu_s under z*g", crit_cocycle),
    (5, "Invariance of mu_0", "theorem: mu_0 is invariant", crit_invariance),
    (6, "Pushforward under the corner map", "theorem: Pi pushes mu_s^{n+1} to mu_s^n", crit_pushforward),
    (7, "Generator compatibility", "Pi(z*g_j) = (Pi z)*g_j", crit_generator_compat),
    (8, "Determinant stabilization", "det(a+zc) is well defined on the completion", crit_stabilization),
    (9, "Sampler calibration", "E_mu0[gamma^-s] = c(n,s+2n)/c(n,2n)", crit_sampler),
    (10, "Lattice beta sum", "beta sum over lattices", crit_beta_sum),
    (11, "Unitarity of the representation", "rho_s is unitary on L^2(mu_s)", crit_unitarity),
]


def run_criterion(number: int, tier: str = "fast", seed: int = 0) -> CriterionResult:
    _, title, anchor, fn = CRITERIA[number - 1]
    start = time.perf_counter()
    checks = fn(TIERS[tier], RandomStream(seed, ("criterion", number)))
    return CriterionResult(number, title, anchor, checks.passed, checks.items, time.perf_counter() - start)


def _run(args):
    return run_criterion(*args)


def acceptance_suite(tier: str = "fast", seed: int = 0, jobs: int = 1, only=None) -> dict:
    """Run the criteria and return a report; ``timing`` holds the wall-clock data."""
    if tier not in TIERS:
        raise ValueError(f"unknown tier {tier!r}")
    numbers = [num for num, *_ in CRITERIA if only is None or num in only]
    tasks = [(num, tier, seed) for num in numbers]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run, tasks))
    else:
        results = [_run(t) for t in tasks]
    return {
        "tier": tier,
        "seed": seed,
        "passed": all(r.passed for r in results),
        "criteria": [r.to_json() for r in results],
        "timing": {str(r.number): round(r.seconds, 3) for r in results},
    }
