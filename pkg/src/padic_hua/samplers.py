"""Seeded samplers for Haar measure, the invariant measure and Hua measures.

Samples are produced in batches and kept in *chart* form ``z = p**-w X``
with ``X`` integral and known modulo ``p**prec``.  Every sample is a
deterministic function of a raw digit block, so a sample whose pipeline runs
out of precision is recomputed from the same block extended by further
digits; the extension digits come from a stream keyed by the candidate's
index, which keeps reruns reproducible.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from . import kernels
from .errors import ConvergenceDomain, PrecisionExhausted
from .linalg import NEG_INF, PadicMatrix, SingularProfile
from .measures import MeasureSpec, hua_constant, hua_series, normalization_numeric, space_dim
from .padic import PadicScalar, split_unit

MAX_PRECISION = 256
CHUNK = 4096
DEFAULT_RADIUS = 8


def default_precision(p: int) -> int:
    return kernels.max_fast_precision(p)


# ---------------------------------------------------------------------------
# random streams


def _path_word(path: tuple) -> int:
    if not path:
        return 0
    digest = hashlib.blake2b(repr(path).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


class RandomStream:
    """Counter-based stream: Philox keyed by the seed.

    A stream derived with :meth:`split` keeps the key and starts its counter
    at a block prefix given by a hash of its label path, so the
    streams draw from disjoint counter ranges.
    """

    algorithm = "philox4x64-10"

    def __init__(self, seed: int, path: tuple = ()):
        self.seed = int(seed) % 2**64
        self.path = tuple(path)
        self.prefix = _path_word(self.path)
        bitgen = np.random.Philox(key=self.seed, counter=self.prefix << 192)
        self.gen = np.random.Generator(bitgen)

    def split(self, *labels) -> RandomStream:
        return RandomStream(self.seed, self.path + labels)

    def __repr__(self):
        return f"RandomStream(seed={self.seed}, path={self.path!r})"

    def uniform(self, size=None):
        return self.gen.random(size)

    def residues(self, p: int, N: int, size) -> np.ndarray:
        """Uniform residues modulo ``p**N`` (object dtype past 63 bits)."""
        q = p**N
        if q <= 2**62:
            return self.gen.integers(0, q, size=size, dtype=np.int64)
        step = kernels.max_fast_precision(p)
        out = np.zeros(size, dtype=object)
        done = 0
        while done < N:
            k = min(step, N - done)
            chunk = self.gen.integers(0, p**k, size=size, dtype=np.int64).astype(object)
            out = out + chunk * p**done
            done += k
        return out


# ---------------------------------------------------------------------------
# raw digit blocks


def _shape_digits(stream, p, N, count, rows, cols, kind):
    raw = stream.residues(p, N, (count, rows, cols))
    return _symmetrize(raw, p, N, kind)


def _symmetrize(raw, p, N, kind):
    if kind == "Symm":
        n = raw.shape[1]
        iu = np.triu_indices(n, 1)
        for i, j in zip(*iu):
            raw[:, j, i] = raw[:, i, j]
    elif kind == "ASymm":
        n = raw.shape[1]
        q = p**N
        for i in range(n):
            raw[:, i, i] = 0
            for j in range(i + 1, n):
                raw[:, j, i] = (-raw[:, i, j]) % q
    return raw


@dataclass
class RawBatch:
    """Digit blocks of accepted candidates and how to read them as matrices.

    ``kind`` selects the chart map: ``"block"`` reads ``[a | b]`` as
    ``z = a^{-1} b``; ``"space"`` reads ``Y`` as ``z = p**-radius Y``.
    """

    p: int
    n: int
    kind: str
    flavor: str
    digits: np.ndarray
    N: int
    ids: np.ndarray
    stream: RandomStream
    radius: int = 0
    log_weights: list | None = None
    info: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.ids)

    def subset(self, idx) -> RawBatch:
        idx = np.asarray(idx, dtype=np.int64)
        lw = [self.log_weights[i] for i in idx] if self.log_weights is not None else None
        return RawBatch(
            self.p, self.n, self.kind, self.flavor, self.digits[idx], self.N,
            self.ids[idx], self.stream, self.radius, lw, self.info,
        )

    def at_precision(self, N2: int) -> RawBatch:
        """Extend every block to ``N2`` digits.

        Digits beyond the base precision are drawn from a stream keyed by the
        candidate id in doubling ranges ``[N, 2N), [2N, 4N), ...``, so lower
        escalation levels see a prefix of higher ones.  ``self`` must hold the
        base digits.
        """
        if N2 <= self.N:
            return self
        p = self.p
        rows, cols = self.digits.shape[1], self.digits.shape[2]
        sym = self.flavor if self.kind == "space" else "GL"
        out = np.empty(self.digits.shape, dtype=object)
        for t, cid in enumerate(self.ids):
            ext = self.stream.split("extend", int(cid))
            block = self.digits[t].astype(object)
            lo = self.N
            while lo < N2:
                hi = min(2 * lo, N2)
                extra = _shape_digits(ext, p, hi - lo, 1, rows, cols, "GL")[0].astype(object)
                block = block + extra * p**lo
                lo = hi
            out[t] = _symmetrize(block[None] % p**N2, p, N2, sym)[0]
        digits = out if p**N2 > 2**62 else out.astype(np.int64)
        lw = list(self.log_weights) if self.log_weights is not None else None
        return RawBatch(
            p, self.n, self.kind, self.flavor, digits, N2, self.ids, self.stream,
            self.radius, lw, self.info,
        )

    def charts(self):
        """Chart form of every sample: ``(ChartBatch, ok)``."""
        n, p = self.n, self.p
        count = len(self)
        prec = np.full(count, self.N, dtype=np.int64)
        if self.kind == "space":
            ok = np.ones(count, dtype=bool)
            return ChartBatch(p, self.digits, np.full(count, self.radius, dtype=np.int64), prec), ok
        A = self.digits[:, :, :n]
        B = self.digits[:, :, n:]
        X, w, pout, _, status = kernels.chart_batch(A, B, prec, p)
        return ChartBatch(p, X, w, pout), status == 0


@dataclass
class ChartBatch:
    """``z_i = p**-w_i X_i`` with ``X_i`` known modulo ``p**prec_i``."""

    p: int
    X: np.ndarray
    w: np.ndarray
    prec: np.ndarray

    def __len__(self):
        return len(self.w)

    @property
    def n(self) -> int:
        return self.X.shape[1]

    def corner(self, k: int) -> ChartBatch:
        return ChartBatch(self.p, self.X[:, :k, :k], self.w, self.prec)

    def moebius(self, g):
        """Apply ``z -> (a+zc)^{-1}(b+zd)`` for an integral group element ``g``.

        Returns ``(ChartBatch, vdet, ok)`` with ``vdet = v(det(a+zc))``.
        """
        top = int(self.prec.max()) if len(self) else 1
        if self.X.dtype == object:
            G = np.array(g.reduced(self.p**top), dtype=object)
        else:
            G = np.array(g.reduced(self.p ** kernels.max_fast_precision(self.p)), dtype=np.int64)
        X2, w2, p2, vdet, status = kernels.moebius_batch(self.X, self.w, self.prec, G, self.p)
        return ChartBatch(self.p, X2, w2, p2), vdet, status == 0

    def profiles(self, structural_nulls: int = 0):
        """Profiles as a float array (``-inf`` for rank loss) and validity mask.

        ``structural_nulls`` exponents may stay undetermined; they are known to
        be infinite (odd antisymmetric matrices are singular).
        """
        exps, status = kernels.smith_batch(self.X, self.prec, self.p)
        exps = exps.astype(float)
        undetermined = exps >= self.prec[:, None]
        nulls = undetermined.sum(axis=1)
        ok = nulls == structural_nulls
        exps[undetermined] = math.inf
        ks = self.w[:, None] - exps
        return ks, ok

    def entry_valuation(self, i: int, j: int):
        """Valuation of entry ``(i, j)``; ``ok`` false when it is undetermined."""
        x = self.X[:, i, j]
        out = np.zeros(len(self), dtype=np.int64)
        ok = np.zeros(len(self), dtype=bool)
        p = self.p
        for t in range(len(self)):
            r = int(x[t]) % p ** int(self.prec[t])
            if r:
                out[t] = split_unit(r, p)[0] - int(self.w[t])
                ok[t] = True
        return out, ok

    def matrix(self, t: int) -> PadicMatrix:
        return PadicMatrix.from_scaled(
            [[int(v) for v in row] for row in self.X[t]], int(self.w[t]), int(self.prec[t]), self.p
        )


def profile_tuple(row) -> tuple:
    return tuple(NEG_INF if math.isinf(k) else int(k) for k in row)


# ---------------------------------------------------------------------------
# escalation


def evaluate(batch: RawBatch, pipeline: Callable, max_precision: int = MAX_PRECISION):
    """Run ``pipeline(charts) -> (dict of arrays, ok)`` with precision escalation.

    Samples whose pipeline fails are rerun on their blocks extended to twice
    the precision, up to ``max_precision``.  Returns the merged result and
    the mask of samples still undetermined at the cap.
    """
    charts, ok0 = batch.charts()
    result, ok = pipeline(charts)
    ok = ok & ok0
    result = {k: np.array(v, copy=True) for k, v in result.items()}
    todo = np.nonzero(~ok)[0]
    N = batch.N
    while todo.size and N < max_precision:
        N = min(2 * N, max_precision)
        sub = batch.subset(todo).at_precision(N)
        sub_charts, sub_ok0 = sub.charts()
        sub_result, sub_ok = pipeline(sub_charts)
        sub_ok = sub_ok & sub_ok0
        for key, arr in sub_result.items():
            if result[key].dtype != object and np.asarray(arr).dtype == object:
                result[key] = result[key].astype(object)
            result[key][todo[sub_ok]] = np.asarray(arr)[sub_ok]
        ok[todo[sub_ok]] = True
        todo = todo[~sub_ok]
    return result, ~ok


# ---------------------------------------------------------------------------
# drawing candidates


def _draw_blocks(n, p, N, stream, want, rows, cols, kind, flavor, accept=None):
    """Draw candidates chunk by chunk until ``want`` are accepted.

    ``accept(digits, cand_ids, chunk_stream) -> bool mask`` filters a chunk.
    Returns digits, candidate ids, and the number of candidates examined.
    """
    kept, ids = [], []
    have = 0
    seen = 0
    chunk = 0
    while have < want:
        cs = stream.split("chunk", chunk)
        digits = _shape_digits(cs, p, N, CHUNK, rows, cols, flavor if kind == "space" else "GL")
        cand = np.arange(seen, seen + CHUNK, dtype=np.int64)
        mask = accept(digits, cand, cs) if accept is not None else np.ones(CHUNK, dtype=bool)
        idx = np.nonzero(mask)[0]
        if have + idx.size > want:
            idx = idx[: want - have]
            last = int(idx[-1]) + 1 if idx.size else 0
            seen += last
        else:
            seen += CHUNK
        kept.append(digits[idx])
        ids.append(cand[idx])
        have += idx.size
        chunk += 1
    return np.concatenate(kept), np.concatenate(ids), seen


def _full_rank_rows(digits, p):
    count, r, c = digits.shape
    pad = np.zeros((count, c, c), dtype=np.int64)
    pad[:, :r, :] = np.asarray(digits, dtype=np.int64) % p
    return kernels.rank_mod_p_batch(pad, p) == r


def draw_integral(n: int, p: int, count: int, stream: RandomStream, N: int | None = None) -> RawBatch:
    """Uniform matrices over O_p (normalized additive Haar measure)."""
    N = N or default_precision(p)
    digits, ids, seen = _draw_blocks(n, p, N, stream, count, n, n, "space", "GL")
    return RawBatch(p, n, "space", "GL", digits, N, ids, stream, 0, info={"candidates": seen})


def draw_haar_gl(n: int, p: int, count: int, stream: RandomStream, N: int | None = None) -> RawBatch:
    """Haar measure on ``GL(n, O_p)`` by rejection on invertibility mod p."""
    N = N or default_precision(p)
    digits, ids, seen = _draw_blocks(
        n, p, N, stream, count, n, n, "space", "GL",
        accept=lambda d, c, s: _full_rank_rows(d, p),
    )
    return RawBatch(p, n, "space", "GL", digits, N, ids, stream, 0, info={"candidates": seen})


def draw_mu0(n: int, p: int, count: int, stream: RandomStream, N: int | None = None,
             ext_stream: RandomStream | None = None, id_offset: int = 0) -> RawBatch:
    """The invariant measure: ``z = a^{-1} b`` for the top rows of Haar ``GL(2n, O_p)``.

    Those rows are a uniform ``n x 2n`` block of full rank modulo ``p``.
    """
    N = N or default_precision(p)
    digits, ids, seen = _draw_blocks(
        n, p, N, stream, count, n, 2 * n, "block", "GL",
        accept=lambda d, c, s: _full_rank_rows(d, p),
    )
    return RawBatch(p, n, "block", "GL", digits, N, ids + id_offset, ext_stream or stream,
                    info={"candidates": seen})


def _profile_pipeline(structural_nulls=0):
    def run(charts):
        ks, ok = charts.profiles(structural_nulls)
        return {"ks": ks}, ok

    return run


def draw_mu_s(spec: MeasureSpec, count: int, stream: RandomStream, N: int | None = None,
              radius: int = DEFAULT_RADIUS) -> RawBatch:
    """Samples of mu_s.

    GL with ``s >= 0``: mu_0 draws accepted with probability ``gamma**-s``.
    GL with ``s < 0``: mu_0 draws carrying ``log_p`` weights ``-s * sum k+``.
    Symm and ASymm: uniform draws on ``p**-radius`` times the integral
    space, with ``log_p`` weights ``radius*d - e * sum k+``; the weights are
    relative to ``normalization_numeric`` (stored in ``info``).
    """
    p, n, s = spec.p, spec.n, spec.s
    N = N or default_precision(p)
    if spec.flavor == "GL":
        if s == 0:
            raw = draw_mu0(n, p, count, stream, N)
            # every mu_0 draw is accepted; block rejections are a separate count
            raw.info = {"blocks": raw.info["candidates"], "candidates": count, "accepted": count}
            return raw
        if s > 0:
            return _draw_gl_rejection(spec, count, stream, N)
        raw = draw_mu0(n, p, count, stream, N)
        res, bad = evaluate(raw, _profile_pipeline())
        raw.log_weights = [
            None if bad[t] else -s * _pos(res["ks"][t]) for t in range(count)
        ]
        raw.info["weight_ratio"] = float(hua_constant(n, 2 * n, p)) / float(hua_constant(n, s + 2 * n, p))
        return raw
    if s < 0:
        raise ConvergenceDomain(f"{spec.flavor} measures need s >= 0", s=str(s))
    d = space_dim(n, spec.flavor)
    digits, ids, seen = _draw_blocks(n, p, N, stream, count, n, n, "space", spec.flavor)
    raw = RawBatch(p, n, "space", spec.flavor, digits, N, ids, stream, radius,
                   info={"candidates": seen})
    nulls = n % 2 if spec.flavor == "ASymm" else 0
    res, bad = evaluate(raw, _profile_pipeline(nulls))
    e = spec.exponent
    raw.log_weights = [
        None if bad[t] else Fraction(radius * d) - e * _pos(res["ks"][t]) for t in range(count)
    ]
    norm = normalization_numeric(spec)
    raw.info["normalization"] = norm
    raw.info["truncation_bias"] = truncation_bias(spec, radius)
    return raw


def truncation_bias(spec: MeasureSpec, radius: int) -> float:
    """mu_s mass outside ``p**-radius`` times the integral space (upper bound)."""
    norm = normalization_numeric(spec)
    inside = hua_series(spec.n, spec.exponent, spec.p, radius, 60, spec.flavor)
    missing = float(norm.partial_sum - inside.partial_sum) + norm.tail_bound
    return max(missing, 0.0) / float(norm.partial_sum)


def _pos(row) -> int:
    return int(sum(k for k in row if k > 0 and not math.isinf(k)))


def _draw_gl_rejection(spec, count, stream, N):
    p, n, s = spec.p, spec.n, spec.s
    kept, ids = [], []
    have = seen = 0
    chunk = 0
    cand_stream = stream.split("mu0")
    ext_stream = stream.split("extend")
    coin_stream = stream.split("coins")
    while have < count:
        raw = draw_mu0(n, p, CHUNK, cand_stream.split(chunk), N, ext_stream, chunk << 40)
        res, bad = evaluate(raw, _profile_pipeline())
        pos = np.array([_pos(r) for r in res["ks"]], dtype=float)
        coins = coin_stream.split(chunk).uniform(CHUNK)
        accept = (coins < np.power(float(p), -float(s) * pos)) & ~bad
        idx = np.nonzero(accept)[0]
        if have + idx.size > count:
            idx = idx[: count - have]
            seen += int(idx[-1]) + 1 if idx.size else 0
        else:
            seen += CHUNK
        kept.append(raw.digits[idx])
        ids.append(raw.ids[idx])
        have += idx.size
        chunk += 1
    digits = np.concatenate(kept)
    out = RawBatch(p, n, "block", "GL", digits, N, np.concatenate(ids), ext_stream,
                   info={"candidates": seen, "accepted": count})
    return out


# ---------------------------------------------------------------------------
# single-sample interface


@dataclass(frozen=True)
class WeightedSample:
    """One draw with its importance weight ``p**log_p_weight``.

    ``flag`` is ``"accepted"`` for exact samples, ``"weighted"`` for
    importance-weighted ones and ``"exhausted"`` when precision ran out.
    """

    z: PadicMatrix | None
    log_p_weight: Fraction
    flag: str

    def to_json(self) -> dict:
        lw = self.log_p_weight
        return {
            "z": self.z.to_json() if self.z is not None else None,
            "log_p_weight": f"{lw.numerator}/{lw.denominator}" if lw.denominator != 1 else str(lw.numerator),
            "flag": self.flag,
        }


def _structural_zeros(raw: RawBatch):
    if raw.kind == "space" and raw.flavor == "ASymm":
        return [(i, i) for i in range(raw.n)]
    return []


def _materialize(raw: RawBatch, t: int) -> PadicMatrix:
    zeros = _structural_zeros(raw)

    def run(charts):
        return {"X": charts.X.astype(object), "w": charts.w, "prec": charts.prec}, _nonzero_entries(charts, zeros)

    res, bad = evaluate(raw.subset([t]), run)
    if bad[0]:
        raise PrecisionExhausted("sample undetermined at maximal precision", precision=MAX_PRECISION)
    X = [[int(v) for v in row] for row in res["X"][0]]
    return PadicMatrix.from_scaled(X, int(res["w"][0]), int(res["prec"][0]), raw.p, zeros)


def _nonzero_entries(charts: ChartBatch, zeros=()):
    ok = np.ones(len(charts), dtype=bool)
    n = charts.n
    keep = [(i, j) for i in range(n) for j in range(n) if (i, j) not in set(zeros)]
    for t in range(len(charts)):
        q = charts.p ** int(charts.prec[t])
        ok[t] = all(int(charts.X[t][i][j]) % q for i, j in keep)
    return ok


def _integral_matrix(raw: RawBatch, t: int) -> PadicMatrix:
    p, N = raw.p, raw.N
    rows = []
    for row in raw.digits[t]:
        out = []
        for v in row:
            v = int(v)
            if v == 0:
                out.append(PadicScalar.zero(p, N))
            else:
                e, u = split_unit(v, p)
                out.append(PadicScalar.from_digits(p, e, u, N - e))
        rows.append(out)
    return PadicMatrix(p, raw.n, raw.n, rows)


def sample_integral_matrix(n: int, p: int, N: int, stream: RandomStream) -> PadicMatrix:
    """Uniform on ``Mat(n, O_p)`` to ``N`` digits; a zero residue is returned as 0."""
    return _integral_matrix(draw_integral(n, p, 1, stream, N), 0)


def sample_haar_GL(n: int, p: int, N: int, stream: RandomStream) -> PadicMatrix:
    return _integral_matrix(draw_haar_gl(n, p, 1, stream, N), 0)


def sample_mu0(n: int, p: int, N: int, stream: RandomStream) -> PadicMatrix:
    return _materialize(draw_mu0(n, p, 1, stream, N), 0)


def _weighted(raw: RawBatch, t: int) -> WeightedSample:
    weighted = raw.log_weights is not None
    lw = raw.log_weights[t] if weighted else Fraction(0)
    if weighted and lw is None:
        return WeightedSample(None, Fraction(0), "exhausted")
    try:
        z = _materialize(raw, t)
    except PrecisionExhausted:
        return WeightedSample(None, Fraction(0), "exhausted")
    return WeightedSample(z, Fraction(lw), "weighted" if weighted else "accepted")


def sample_mu_s(spec: MeasureSpec, N: int, stream: RandomStream) -> WeightedSample:
    return _weighted(draw_mu_s(spec, 1, stream, N), 0)


def weighted_samples(spec: MeasureSpec, count: int, stream: RandomStream, N: int | None = None,
                     radius: int = DEFAULT_RADIUS):
    """Iterator over ``count`` draws of ``mu_s`` as :class:`WeightedSample`."""
    raw = draw_mu_s(spec, count, stream, N, radius)
    for t in range(count):
        yield _weighted(raw, t)


def expected_acceptance(spec: MeasureSpec):
    """``E_{mu_0}[gamma**-s] = c(n, s+2n) / c(n, 2n)``."""
    n, p = spec.n, spec.p
    return hua_constant(n, spec.s + 2 * n, p) / hua_constant(n, 2 * n, p)


def profiles_of(raw: RawBatch):
    """Profiles of every sample, as tuples, plus the undetermined mask."""
    nulls = raw.n % 2 if (raw.kind == "space" and raw.flavor == "ASymm") else 0
    res, bad = evaluate(raw, _profile_pipeline(nulls))
    return [profile_tuple(r) for r in res["ks"]], bad


def singular_profile(row, p: int) -> SingularProfile:
    return SingularProfile(p, profile_tuple(row))
