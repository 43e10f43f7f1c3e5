"""Command line driver.

Every subcommand prints one JSON report holding the configuration, library
versions, the result and a verdict.  Wall-clock data sits under
``runtime`` so the rest of the report is byte-stable for a fixed seed.
Exit status: 0 pass, 1 failed check, 2 usage error, 3 numeric-domain error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import platform
import sys
import time
from fractions import Fraction

import mpmath
import numpy as np
import scipy

from . import __version__, kernels
from .acceptance import CRITERIA, _non_parabolic, _random_rational, acceptance_suite
from .actions import GROUP_FLAVORS, SPACE_OF, cocycle_check, random_group_element
from .errors import BasePointSingular, HuaError
from .experiments import pushforward_test, tower_test, transport_test
from .lattices import beta_closed_form, lattice_beta_partial_sum
from .linalg import NEG_INF, PadicMatrix, gamma, smith_profile
from .measures import FLAVORS, MeasureSpec, hua_constant, hua_series
from .padic import format_rational, parse_rational
from .projective import BandElement, act_level, corner, stabilized_det
from .samplers import DEFAULT_RADIUS, RandomStream, truncation_bias, weighted_samples


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _number(x):
    if isinstance(x, Fraction):
        return format_rational(x)
    if isinstance(x, mpmath.mpf):
        return mpmath.nstr(x, 30)
    return x


def _json_default(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, (Fraction, mpmath.mpf)):
        return _number(x)
    return str(x)


def _rational_arg(text):
    try:
        return parse_rational(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational: {text!r}") from exc


def _matrix_arg(text):
    try:
        data = json.loads(text)
        return [[parse_rational(x) for x in row] for row in data]
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError("matrix must be a JSON list of rows of rationals") from exc


def _spec(args) -> MeasureSpec:
    return MeasureSpec(args.p, args.n, args.s, args.flavor)


def _seed(args) -> int:
    env = os.environ.get("HUA_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise UsageError(f"HUA_SEED must be an integer, got {env!r}") from exc
    return args.seed


def _report_json(rep) -> dict:
    return {"name": rep.name, "statistic": rep.statistic, "dof": rep.dof, "p_value": rep.p_value,
            "passed": rep.passed, "detail": rep.detail}


# ---------------------------------------------------------------------------
# subcommands; each returns (result dict, passed)


def cmd_hua_const(args):
    value = hua_constant(args.n, args.alpha, args.p)
    return {"closed_form": _number(value), "value": float(value)}, True


def cmd_hua_series(args):
    res = hua_series(args.n, args.alpha, args.p, args.kmax, args.depth, args.flavor)
    out = {"partial_sum": _number(res.partial_sum), "value": float(res.partial_sum), "tail_bound": res.tail_bound}
    passed = True
    if args.flavor == "GL":
        closed = hua_constant(args.n, args.alpha, args.p)
        gap = abs(float(closed - res.partial_sum))
        passed = gap <= res.tail_bound
        out.update(closed_form=_number(closed), gap=gap, within_tail_bound=passed)
    return out, passed


def cmd_lattice_beta(args):
    res = lattice_beta_partial_sum(args.n, args.t, args.depth, args.p)
    closed = beta_closed_form(args.n, args.t, args.p)
    gap = closed - res.partial_sum
    passed = 0 <= gap <= res.tail_bound
    return {
        "partial_sum": _number(res.partial_sum),
        "tail_bound": res.tail_bound,
        "lattices": res.count,
        "closed_form": _number(closed),
        "gap": float(gap),
        "within_tail_bound": passed,
    }, passed


def _profile_json(prof):
    return ["-inf" if k == NEG_INF else k for k in prof.ks]


def cmd_gamma(args):
    z = PadicMatrix.from_rationals(args.matrix, args.p, args.precision)
    prof = smith_profile(z)
    return {"gamma": _number(gamma(z)), "profile": _profile_json(prof), "det_norm": _number(prof.det_norm())}, True


def cmd_smith(args):
    z = PadicMatrix.from_rationals(args.matrix, args.p, args.precision)
    prof = smith_profile(z)
    return {"profile": _profile_json(prof), "rank": prof.rank}, True


def cmd_sample(args):
    spec = _spec(args)
    stream = RandomStream(args.seed_used, ("sample",))
    flags = {}
    lines = []
    for ws in weighted_samples(spec, args.count, stream, args.precision, args.radius):
        flags[ws.flag] = flags.get(ws.flag, 0) + 1
        lines.append(json.dumps(ws.to_json(), sort_keys=True))
    text = "\n".join(lines) + ("\n" if lines else "")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    result = {"samples": args.count, "flags": flags, "out": args.out}
    if spec.flavor != "GL":
        result["truncation_bias"] = truncation_bias(spec, args.radius)
    return result, True


def cmd_rn_check(args):
    space = SPACE_OF[args.flavor]
    stream = RandomStream(args.seed_used, ("rn-check",))
    bad = skipped = 0
    for t in range(args.trials):
        g1 = random_group_element(args.n, args.p, args.flavor, args.length, stream.split(t, 1))
        g2 = random_group_element(args.n, args.p, args.flavor, args.length, stream.split(t, 2))
        z = PadicMatrix.from_rationals(_random_rational(stream.split(t, "z").gen, args.n, args.n, args.p, kind=space), args.p)
        try:
            bad += not cocycle_check(g1, g2, z, args.s)
        except BasePointSingular:
            skipped += 1
    return {"trials": args.trials, "failures": bad, "singular_base_points": skipped}, bad == 0


def cmd_unitarity(args):
    spec = MeasureSpec(args.p, args.n, args.s)
    stream = RandomStream(args.seed_used, ("unitarity",))
    reports = []
    for j in range(args.elements):
        g = _non_parabolic(args.n, args.p, "GL", stream.split("g", j))
        reports += transport_test(spec, g, args.samples, stream.split("run", j), square=True, label=f"unitarity[g{j}]")
    return {"tests": [_report_json(r) for r in reports]}, all(r.passed for r in reports)


def cmd_push_test(args):
    rep = pushforward_test(_spec(args), args.samples, RandomStream(args.seed_used, ("push",)))
    return _report_json(rep), rep.passed


def cmd_tower(args):
    spec = MeasureSpec(args.p, 1, args.s)
    reps = tower_test(spec, args.levels, args.samples, RandomStream(args.seed_used, ("tower",)))
    return {"levels": [_report_json(r) for r in reps]}, all(r.passed for r in reps)


def cmd_stab_det(args):
    with open(args.band_spec) as fh:
        g = BandElement.from_json(json.load(fh))
    k0 = g.k0
    levels = args.levels or [k0, k0 + 1, k0 + 3]
    top = max(levels)
    if args.matrix is not None:
        z = PadicMatrix.from_rationals(args.matrix, args.p, args.precision)
    else:
        gen = RandomStream(args.seed_used, ("stab-det",)).gen
        z = PadicMatrix.from_rationals(_random_rational(gen, top, top, args.p), args.p)
    dets = {k: stabilized_det(g, z, k) for k in levels}
    rns = {k: act_level(g, corner(z, k), args.s)[1] for k in levels}
    values = {str(k): _number(d.exact) if d.exact is not None else d.to_json() for k, d in dets.items()}
    first = dets[levels[0]]
    agree = all(d.agrees(first) for d in dets.values()) and len(set(rns.values())) == 1
    return {"levels": levels, "det": values, "rn_exponent": {str(k): _number(v) for k, v in rns.items()},
            "agree": agree}, agree


def cmd_acceptance(args):
    only = set(args.only) if args.only else None
    rep = acceptance_suite(args.tier, args.seed_used, args.jobs, only)
    return rep, rep["passed"]


# ---------------------------------------------------------------------------
# parser


def _add_spec(sp, flavor=True, s=True):
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--p", type=int, required=True)
    if s:
        sp.add_argument("--s", type=_rational_arg, default=Fraction(0))
    if flavor:
        sp.add_argument("--flavor", choices=FLAVORS, default="GL")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="overridden by HUA_SEED")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--report", help="write the report here instead of stdout")
    parser = _Parser(prog="padic-hua", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add_parser(name, **kw):
        return sub.add_parser(name, parents=[common], **kw)

    sp = add_parser("hua-const", help="closed form c(n, alpha)")
    _add_spec(sp, flavor=False, s=False)
    sp.add_argument("--alpha", type=_rational_arg, required=True)
    sp.set_defaults(func=cmd_hua_const)

    sp = add_parser("hua-series", help="stratified series with certified tail")
    _add_spec(sp, s=False)
    sp.add_argument("--alpha", type=_rational_arg, required=True)
    sp.add_argument("--kmax", type=int, default=10)
    sp.add_argument("--depth", type=int, default=4)
    sp.set_defaults(func=cmd_hua_series)

    sp = add_parser("lattice-beta", help="beta sum over lattices")
    _add_spec(sp, flavor=False, s=False)
    sp.add_argument("--t", type=_rational_arg, required=True)
    sp.add_argument("--depth", type=int, default=3)
    sp.set_defaults(func=cmd_lattice_beta)

    for name, func in (("gamma", cmd_gamma), ("smith", cmd_smith)):
        sp = add_parser(name)
        sp.add_argument("--p", type=int, required=True)
        sp.add_argument("--matrix", type=_matrix_arg, required=True, help='e.g. \'[["1/2","3"],["0","4"]]\'')
        sp.add_argument("--precision", type=int, default=32)
        sp.set_defaults(func=func)

    sp = add_parser("sample", help="draw mu_s samples as JSON lines")
    _add_spec(sp)
    sp.add_argument("--count", type=int, default=1)
    sp.add_argument("--out")
    sp.add_argument("--precision", type=int)
    sp.add_argument("--radius", type=int, default=DEFAULT_RADIUS)
    sp.set_defaults(func=cmd_sample)

    sp = add_parser("rn-check", help="exact chain rule of the cocycle")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--s", type=_rational_arg, default=Fraction(1))
    sp.add_argument("--flavor", choices=GROUP_FLAVORS, default="GL")
    sp.add_argument("--trials", type=int, default=1000)
    sp.add_argument("--length", type=int, default=3)
    sp.set_defaults(func=cmd_rn_check)

    sp = add_parser("unitarity-test", help="E|rho f|^2 = E|f|^2 by Monte Carlo")
    _add_spec(sp, flavor=False)
    sp.add_argument("--samples", type=int, default=100_000)
    sp.add_argument("--elements", type=int, default=5)
    sp.set_defaults(func=cmd_unitarity)

    sp = add_parser("push-test", help="corner pushforward chi-square (--n is the target size)")
    _add_spec(sp)
    sp.add_argument("--samples", type=int, default=100_000)
    sp.set_defaults(func=cmd_push_test)

    sp = add_parser("tower", help="tower marginals against direct draws")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--s", type=_rational_arg, default=Fraction(0))
    sp.add_argument("--levels", type=int, default=3)
    sp.add_argument("--samples", type=int, default=10_000)
    sp.set_defaults(func=cmd_tower)

    sp = add_parser("stab-det", help="stabilized determinant of a band element across levels")
    sp.add_argument("--band-spec", required=True)
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--s", type=_rational_arg, default=Fraction(1))
    sp.add_argument("--matrix", type=_matrix_arg)
    sp.add_argument("--levels", type=int, nargs="+")
    sp.add_argument("--precision", type=int, default=32)
    sp.set_defaults(func=cmd_stab_det)

    sp = add_parser("acceptance", help="run the acceptance criteria")
    sp.add_argument("--suite", choices=("primary",), default="primary")
    sp.add_argument("--tier", choices=("fast", "full"), default="fast")
    sp.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    sp.add_argument("--only", type=int, nargs="+", choices=[c[0] for c in CRITERIA])
    sp.set_defaults(func=cmd_acceptance)
    return parser


def _config(args) -> dict:
    out = {}
    for key, val in sorted(vars(args).items()):
        if key in ("func", "seed_used", "report", "jobs"):
            continue
        if isinstance(val, Fraction):
            val = format_rational(val)
        elif isinstance(val, list) and val and isinstance(val[0], list):
            val = [[format_rational(x) for x in row] for row in val]
        out[key] = val
    out["seed"] = args.seed_used
    return out


def _versions() -> dict:
    return {
        "padic_hua": __version__,
        "kernels": kernels.BACKEND,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "mpmath": mpmath.__version__,
    }


def _csv_table(result) -> str:
    bins = result.get("detail", {}).get("bins") if isinstance(result, dict) else None
    if not bins:
        raise UsageError("csv output is only available for reports with a bin table")
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(bins[0]), lineterminator="\n")
    writer.writeheader()
    writer.writerows(bins)
    return buf.getvalue()


def _fail(record: dict, code: int) -> int:
    print(json.dumps(record, sort_keys=True), file=sys.stderr)
    return code


def main(argv=None) -> int:
    start = time.perf_counter()
    try:
        args = build_parser().parse_args(argv)
        args.seed_used = _seed(args)
        result, passed = args.func(args)
        if args.format == "csv":
            text = _csv_table(result)
        else:
            report = {
                "config": _config(args),
                "versions": _versions(),
                "result": result,
                "passed": bool(passed),
                "runtime": {"seconds": round(time.perf_counter() - start, 3)},
            }
            text = json.dumps(report, sort_keys=True, indent=2, default=_json_default) + "\n"
        if args.report:
            with open(args.report, "w") as fh:
                fh.write(text)
        elif args.command != "sample" or args.out:
            sys.stdout.write(text)
        return 0 if passed else 1
    except UsageError as exc:
        return _fail({"error_kind": "usage", "message": str(exc), "context": {}}, 2)
    except HuaError as exc:
        return _fail(exc.record(), exc.exit_code)
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        return _fail({"error_kind": "input", "message": str(exc), "context": {}}, 2)


if __name__ == "__main__":
    sys.exit(main())
