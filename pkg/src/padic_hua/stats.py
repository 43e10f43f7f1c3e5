"""Goodness-of-fit helpers for profile histograms and Monte Carlo means."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, asdict

import numpy as np
from scipy import stats as sps

from .linalg import NEG_INF
from .measures import MeasureSpec, profile_probability, profiles_in_box

OVERFLOW = "overflow"
MIN_EXPECTED = 5.0
SIGNIFICANCE = 1e-3
SIGMAS = 4.0


@dataclass
class TestReport:
    name: str
    statistic: float
    dof: int
    p_value: float
    passed: bool
    detail: dict

    def to_json(self) -> dict:
        return asdict(self)


def bin_label(ks) -> str:
    return "(" + ",".join("-inf" if k == NEG_INF else str(k) for k in ks) + ")"


def profile_bins(n: int, flavor: str = "GL", bound: int = 3):
    """Profiles with every finite exponent in ``[-bound, bound]``."""
    return list(profiles_in_box(n, flavor, bound, -bound))


def expected_probabilities(spec: MeasureSpec, bound: int = 3) -> dict:
    """Exact stratum masses of the bins plus the overflow remainder."""
    probs = {}
    for ks in profile_bins(spec.n, spec.flavor, bound):
        probs[ks] = profile_probability(ks, spec)
    rest = 1 - sum(probs.values())
    probs[OVERFLOW] = rest
    return probs


def assign(profiles, bins) -> list:
    known = set(bins)
    return [ks if ks in known else OVERFLOW for ks in profiles]


def _merge_plan(expected: dict, total: float) -> dict:
    """Bins whose expected count is below ``MIN_EXPECTED`` go to the overflow bin."""
    plan = {}
    for key, prob in expected.items():
        plan[key] = key if key == OVERFLOW or float(prob) * total >= MIN_EXPECTED else OVERFLOW
    return plan


def chisquare_gof(name: str, labels, expected: dict) -> TestReport:
    """Pearson chi-square of observed bin labels against exact probabilities."""
    total = len(labels)
    plan = _merge_plan(expected, total)
    obs = Counter(plan.get(x, OVERFLOW) for x in labels)
    exp = Counter()
    for key, prob in expected.items():
        exp[plan[key]] += float(prob)
    keys = [k for k in exp if k != OVERFLOW] + ([OVERFLOW] if exp[OVERFLOW] * total >= MIN_EXPECTED else [])
    if OVERFLOW not in keys:
        # fold a negligible overflow into the least likely kept bin
        smallest = min(keys, key=lambda k: exp[k])
        exp[smallest] += exp[OVERFLOW]
        obs[smallest] += obs[OVERFLOW]
    f_obs = np.array([obs[k] for k in keys], dtype=float)
    f_exp = np.array([exp[k] for k in keys], dtype=float) * total
    f_exp *= f_obs.sum() / f_exp.sum()
    stat = float(((f_obs - f_exp) ** 2 / f_exp).sum())
    dof = len(keys) - 1
    pval = float(sps.chi2.sf(stat, dof)) if dof > 0 else 1.0
    detail = {
        "bins": [
            {"bin": bin_label(k) if k != OVERFLOW else OVERFLOW, "observed": int(o), "expected": float(e)}
            for k, o, e in zip(keys, f_obs, f_exp)
        ],
        "samples": total,
    }
    return TestReport(name, stat, dof, pval, pval >= SIGNIFICANCE, detail)


def two_sample_chisquare(name: str, labels1, labels2) -> TestReport:
    """Homogeneity chi-square of two label samples; sparse bins are pooled."""
    c1, c2 = Counter(labels1), Counter(labels2)
    n1, n2 = len(labels1), len(labels2)
    keys = sorted(set(c1) | set(c2), key=lambda k: (k == OVERFLOW, str(k)))
    kept, pooled = [], [0, 0]
    for k in keys:
        tot = c1[k] + c2[k]
        if min(tot * n1, tot * n2) / (n1 + n2) >= MIN_EXPECTED and k != OVERFLOW:
            kept.append((k, c1[k], c2[k]))
        else:
            pooled[0] += c1[k]
            pooled[1] += c2[k]
    rows = [(k, a, b) for k, a, b in kept]
    if sum(pooled):
        rows.append((OVERFLOW, pooled[0], pooled[1]))
    table = np.array([[a, b] for _, a, b in rows], dtype=float).T
    if table.shape[1] < 2:
        return TestReport(name, 0.0, 0, 1.0, True, {"bins": len(rows)})
    stat, pval, dof, _ = sps.chi2_contingency(table, correction=False)
    detail = {
        "bins": [{"bin": bin_label(k) if k != OVERFLOW else OVERFLOW, "first": int(a), "second": int(b)} for k, a, b in rows],
        "samples": [n1, n2],
    }
    return TestReport(name, float(stat), int(dof), float(pval), pval >= SIGNIFICANCE, detail)


def weighted_gof(name: str, labels, weights, expected: dict) -> TestReport:
    """Wald test of self-normalized weighted bin frequencies.

    The covariance of the ratio estimator comes from the linearized
    influence terms ``w_i (1[bin_i = j] - p_j) / mean(w)`` centred at the
    null probabilities, so sparsely hit bins do not collapse it.  Bins are
    merged using the effective sample size rather than the raw count.
    """
    w = np.asarray(weights, dtype=float)
    total = len(labels)
    ess = float(w.sum() ** 2 / (w**2).sum())
    plan = _merge_plan(expected, ess)
    merged = [plan.get(x, OVERFLOW) for x in labels]
    exp = Counter()
    for key, prob in expected.items():
        exp[plan[key]] += float(prob)
    keys = [k for k in exp if k != OVERFLOW]
    if exp[OVERFLOW] * ess < MIN_EXPECTED and len(keys) > 1:
        # the kept bins nearly exhaust the mass; drop one to keep cov invertible
        keys = keys[:-1]
    if not keys:
        return TestReport(name, 0.0, 0, 1.0, True, {"samples": total, "effective_samples": ess})
    ind = np.array([[1.0 if m == k else 0.0 for k in keys] for m in merged])
    p0 = np.array([exp[k] for k in keys])
    phat = (w[:, None] * ind).sum(axis=0) / w.sum()
    psi = w[:, None] * (ind - p0[None, :]) / w.mean()
    cov = psi.T @ psi / total**2
    diff = phat - p0
    stat = float(diff @ np.linalg.pinv(cov) @ diff)
    dof = len(keys)
    pval = float(sps.chi2.sf(stat, dof))
    detail = {
        "bins": [{"bin": bin_label(k), "estimate": float(phat[i]), "expected": exp[k]} for i, k in enumerate(keys)],
        "samples": total,
        "effective_samples": ess,
    }
    return TestReport(name, stat, dof, pval, pval >= SIGNIFICANCE, detail)


def mean_comparison(name: str, x, y) -> TestReport:
    """Two independent sample means agree within ``SIGMAS`` standard errors."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    se = math.sqrt(x.var(ddof=1) / len(x) + y.var(ddof=1) / len(y))
    diff = float(x.mean() - y.mean())
    z = diff / se if se > 0 else (0.0 if diff == 0 else math.inf)
    detail = {"mean_first": float(x.mean()), "mean_second": float(y.mean()), "std_error": se}
    return TestReport(name, z, 0, float(2 * sps.norm.sf(abs(z))), abs(z) <= SIGMAS, detail)


def proportion_check(name: str, successes: int, trials: int, expected: float) -> TestReport:
    """Binomial proportion within ``SIGMAS`` standard deviations of ``expected``."""
    expected = float(expected)
    sd = math.sqrt(expected * (1 - expected) / trials)
    phat = successes / trials
    z = (phat - expected) / sd if sd > 0 else 0.0
    detail = {"observed": phat, "expected": expected, "trials": trials}
    return TestReport(name, z, 0, float(2 * sps.norm.sf(abs(z))), abs(z) <= SIGMAS, detail)
