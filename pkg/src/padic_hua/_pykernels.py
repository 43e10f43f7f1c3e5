"""Pure-Python reference kernels over ``Z/p^P``.

These are the bit-exact fallback for the compiled ``_ckernels`` module and
also serve single-matrix callers that need precision beyond 62 bits.

All matrices are integral and known modulo ``p**P``.  Elimination pivots on a
minimal-valuation entry (first in row-major order on ties) and uses only
integral row and column operations, so the pivot valuations are the
elementary-divisor exponents of the input.
"""

from __future__ import annotations

import numpy as np

OK = 0
EXHAUSTED = 1


def _val(x: int, p: int) -> int:
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


def eliminate(A, p, P, B=None, want_R=False):
    """Smith-style elimination of the square integral matrix ``A`` mod ``p**P``.

    Row operations are mirrored on ``B``; column operations are accumulated in
    ``R`` so that ``L A R = diag(p**vals)`` with ``B`` replaced by ``L B``.

    Returns ``(vals, unit, sign, B, R)``; ``vals`` is shorter than ``n`` when
    the residual block vanishes modulo ``p**P``.
    """
    n = len(A)
    q = p**P
    A = [[x % q for x in row] for row in A]
    if B is not None:
        B = [[x % q for x in row] for row in B]
    R = [[int(i == j) for j in range(n)] for i in range(n)] if want_R else None
    vals = []
    unit = 1
    sign = 1
    for t in range(n):
        best = P
        bi = bj = -1
        for i in range(t, n):
            row = A[i]
            for j in range(t, n):
                x = row[j]
                if x:
                    v = _val(x, p)
                    if v < best:
                        best, bi, bj = v, i, j
                        if v == 0:
                            break
            if best == 0:
                break
        if bi < 0:
            return vals, unit, sign, B, R
        if bi != t:
            A[t], A[bi] = A[bi], A[t]
            if B is not None:
                B[t], B[bi] = B[bi], B[t]
            sign = -sign
        if bj != t:
            for row in A:
                row[t], row[bj] = row[bj], row[t]
            if R is not None:
                for row in R:
                    row[t], row[bj] = row[bj], row[t]
            sign = -sign
        pv = p**best
        u = A[t][t] // pv
        unit = unit * u % q
        uinv = pow(u, -1, q)
        At = A[t] = [x * uinv % q for x in A[t]]
        if B is not None:
            Bt = B[t] = [x * uinv % q for x in B[t]]
        for i in range(t + 1, n):
            x = A[i][t]
            if x:
                f = x // pv
                A[i] = [(a - f * b) % q for a, b in zip(A[i], At)]
                if B is not None:
                    B[i] = [(a - f * b) % q for a, b in zip(B[i], Bt)]
        for j in range(t + 1, n):
            x = At[j]
            if x:
                f = x // pv
                At[j] = 0
                if R is not None:
                    for row in R:
                        row[j] = (row[j] - f * row[t]) % q
        vals.append(best)
    return vals, unit, sign, B, R


def smith_exponents(A, p, P):
    """Elementary-divisor exponents (ascending) of ``A`` mod ``p**P``.

    Returns ``(exps, status)``; undetermined exponents are reported as ``P``.
    """
    n = len(A)
    vals, _, _, _, _ = eliminate(A, p, P)
    status = OK if len(vals) == n else EXHAUSTED
    return vals + [P] * (n - len(vals)), status


def determinant(A, p, P):
    """Return ``(v, unit, rel_prec)`` with ``det A = p**v * unit``, or ``None``."""
    n = len(A)
    vals, unit, sign, _, _ = eliminate(A, p, P)
    if len(vals) < n:
        return None
    w = vals[-1] if vals else 0
    rel = P - w
    return sum(vals), (sign * unit) % p**rel, rel


def chart(A, B, p, P):
    """Solve ``z = A^{-1} B`` for integral ``A, B`` known mod ``p**P``.

    Returns ``(X, w, P_out, vdet, status)`` with ``z = p**-w X`` and ``X``
    integral, known modulo ``p**P_out``.  ``vdet`` is ``v(det A)``.
    """
    n = len(A)
    vals, _, _, LB, R = eliminate(A, p, P, B=B, want_R=True)
    if len(vals) < n or vals[-1] >= P:
        return None, 0, 0, 0, EXHAUSTED
    w = vals[-1] if n else 0
    Pout = P - w
    q = p**Pout
    m = len(B[0]) if n else 0
    scaled = [[x * p ** (w - vals[t]) for x in LB[t]] for t in range(n)]
    X = [
        [sum(R[i][t] * scaled[t][j] for t in range(n)) % q for j in range(m)]
        for i in range(n)
    ]
    return X, w, Pout, sum(vals), OK


def moebius(X, w, P, g, p):
    """Apply ``z -> (a + z c)^{-1}(b + z d)`` to ``z = p**-w X``.

    ``g`` is the integral ``2n x 2n`` block matrix.  Returns the chart tuple
    of the image plus ``v(det(a + z c))``.
    """
    n = len(X)
    q = p**P
    pw = p**w
    a = [row[:n] for row in g[:n]]
    b = [row[n:] for row in g[:n]]
    c = [row[:n] for row in g[n:]]
    d = [row[n:] for row in g[n:]]
    A2 = [
        [(pw * a[i][j] + sum(X[i][k] * c[k][j] for k in range(n))) % q for j in range(n)]
        for i in range(n)
    ]
    B2 = [
        [(pw * b[i][j] + sum(X[i][k] * d[k][j] for k in range(n))) % q for j in range(n)]
        for i in range(n)
    ]
    X2, w2, P2, vdet, status = chart(A2, B2, p, P)
    return X2, w2, P2, vdet - w * n, status


# ---------------------------------------------------------------------------
# batch wrappers with the same signatures as the compiled kernels


def _dtype(p, prec):
    # object arrays once residues no longer fit in a signed 64-bit word
    top = int(max(prec)) if len(prec) else 0
    return np.int64 if p**top < 2**63 else object


def chart_batch(A, B, prec, p):
    A = np.asarray(A)
    B = np.asarray(B)
    count, n = A.shape[0], A.shape[1]
    m = B.shape[2]
    X = np.zeros((count, n, m), dtype=_dtype(p, prec))
    w = np.zeros(count, dtype=np.int64)
    pout = np.zeros(count, dtype=np.int64)
    vdet = np.zeros(count, dtype=np.int64)
    status = np.zeros(count, dtype=np.int8)
    for s in range(count):
        res = chart(A[s].tolist(), B[s].tolist(), p, int(prec[s]))
        if res[4] != OK:
            status[s] = EXHAUSTED
            continue
        X[s] = res[0]
        w[s], pout[s], vdet[s] = res[1], res[2], res[3]
    return X, w, pout, vdet, status


def smith_batch(M, prec, p):
    M = np.asarray(M)
    count, n = M.shape[0], M.shape[1]
    exps = np.zeros((count, n), dtype=np.int64)
    status = np.zeros(count, dtype=np.int8)
    for s in range(count):
        e, st = smith_exponents(M[s].tolist(), p, int(prec[s]))
        exps[s] = e
        status[s] = st
    return exps, status


def moebius_batch(X, w, prec, g, p):
    X = np.asarray(X)
    g = np.asarray(g).tolist()
    count, n = X.shape[0], X.shape[1]
    X2 = np.zeros((count, n, n), dtype=_dtype(p, prec))
    w2 = np.zeros(count, dtype=np.int64)
    p2 = np.zeros(count, dtype=np.int64)
    vdet = np.zeros(count, dtype=np.int64)
    status = np.zeros(count, dtype=np.int8)
    for s in range(count):
        if prec[s] <= 0:
            status[s] = EXHAUSTED
            continue
        res = moebius(X[s].tolist(), int(w[s]), int(prec[s]), g, p)
        if res[4] != OK:
            status[s] = EXHAUSTED
            continue
        X2[s] = res[0]
        w2[s], p2[s], vdet[s] = res[1], res[2], res[3]
    return X2, w2, p2, vdet, status


def rank_mod_p_batch(M, p):
    """Rank of each matrix reduced modulo ``p``."""
    M = np.asarray(M)
    out = np.zeros(M.shape[0], dtype=np.int64)
    for s in range(M.shape[0]):
        vals, _, _, _, _ = eliminate(M[s].tolist(), p, 1)
        out[s] = len(vals)
    return out
