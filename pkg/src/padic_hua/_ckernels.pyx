# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled batch kernels over Z/p^P (p^P < 2^62).

Bit-for-bit the same algorithms as ``_pykernels``; see that module for the
contract.  Products are reduced through 128-bit intermediates.
"""

import numpy as np
cimport numpy as cnp

ctypedef unsigned long long u64
ctypedef long long i64

cdef extern from *:
    """
    static inline unsigned long long hua_mulmod(unsigned long long a,
                                                unsigned long long b,
                                                unsigned long long q) {
        return (unsigned long long)(((unsigned __int128)a * b) % q);
    }
    """
    u64 hua_mulmod(u64 a, u64 b, u64 q) nogil

cdef enum:
    NMAX = 16

cdef inline u64 submod(u64 a, u64 b, u64 q) nogil:
    return a - b if a >= b else a + (q - b)

cdef inline int val(u64 x, u64 p) nogil:
    cdef int v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v

cdef u64 invmod(u64 u, u64 p, u64 q) nogil:
    # inverse mod p by Fermat, then Newton lifting to mod q
    cdef u64 x = 1, base = u % p, e = p - 2
    while e:
        if e & 1:
            x = (x * base) % p
        base = (base * base) % p
        e >>= 1
    cdef u64 m = p
    cdef u64 t
    while m < q:
        t = hua_mulmod(u % q, x, q)
        x = hua_mulmod(x, submod(2 % q, t, q), q)
        if m > q // m:
            m = q
        else:
            m = m * m
    # final correction pass for safety
    t = hua_mulmod(u % q, x, q)
    x = hua_mulmod(x, submod(2 % q, t, q), q)
    return x

cdef u64 ipow(u64 p, int e) nogil:
    cdef u64 r = 1
    cdef int i
    for i in range(e):
        r *= p
    return r

cdef int eliminate(u64[:, :] A, u64[:, :] B, u64[:, :] R, int n, int m,
                   bint use_B, bint use_R, u64 p, int P, int *vals) nogil:
    """In-place elimination; returns the number of pivots found."""
    cdef u64 q = ipow(p, P)
    cdef int t, i, j, k, bi, bj, best, v
    cdef u64 x, f, pv, u, uinv, tmp
    for t in range(n):
        best = P
        bi = -1
        bj = -1
        for i in range(t, n):
            for j in range(t, n):
                x = A[i, j]
                if x:
                    v = val(x, p)
                    if v < best:
                        best = v
                        bi = i
                        bj = j
                        if v == 0:
                            break
            if best == 0:
                break
        if bi < 0:
            return t
        if bi != t:
            for k in range(n):
                tmp = A[t, k]; A[t, k] = A[bi, k]; A[bi, k] = tmp
            if use_B:
                for k in range(m):
                    tmp = B[t, k]; B[t, k] = B[bi, k]; B[bi, k] = tmp
        if bj != t:
            for k in range(n):
                tmp = A[k, t]; A[k, t] = A[k, bj]; A[k, bj] = tmp
            if use_R:
                for k in range(n):
                    tmp = R[k, t]; R[k, t] = R[k, bj]; R[k, bj] = tmp
        pv = ipow(p, best)
        u = A[t, t] // pv
        uinv = invmod(u, p, q)
        for k in range(n):
            A[t, k] = hua_mulmod(A[t, k], uinv, q)
        if use_B:
            for k in range(m):
                B[t, k] = hua_mulmod(B[t, k], uinv, q)
        for i in range(t + 1, n):
            x = A[i, t]
            if x:
                f = x // pv
                for k in range(n):
                    A[i, k] = submod(A[i, k], hua_mulmod(f, A[t, k], q), q)
                if use_B:
                    for k in range(m):
                        B[i, k] = submod(B[i, k], hua_mulmod(f, B[t, k], q), q)
        for j in range(t + 1, n):
            x = A[t, j]
            if x:
                f = x // pv
                A[t, j] = 0
                if use_R:
                    for k in range(n):
                        R[k, j] = submod(R[k, j], hua_mulmod(f, R[k, t], q), q)
        vals[t] = best
    return n


cdef int chart_one(u64[:, :] A, u64[:, :] B, u64[:, :] R, u64[:, :] out,
                   int n, int m, u64 p, int P, i64 *w_out, i64 *p_out,
                   i64 *vdet_out) nogil:
    cdef int vals[NMAX]
    cdef int i, j, t, found, w
    cdef u64 q, acc, s
    for i in range(n):
        for j in range(n):
            R[i, j] = 1 if i == j else 0
    found = eliminate(A, B, R, n, m, True, True, p, P, vals)
    if found < n:
        return 1
    w = vals[n - 1] if n > 0 else 0
    if w >= P:
        return 1
    q = ipow(p, P - w)
    for t in range(n):
        s = ipow(p, w - vals[t])
        for j in range(m):
            B[t, j] = hua_mulmod(B[t, j] % q, s % q, q)
    for i in range(n):
        for j in range(m):
            acc = 0
            for t in range(n):
                acc = (acc + hua_mulmod(R[i, t] % q, B[t, j], q)) % q
            out[i, j] = acc
    w_out[0] = w
    p_out[0] = P - w
    acc = 0
    for t in range(n):
        acc += vals[t]
    vdet_out[0] = <i64>acc
    return 0


def chart_batch(A, B, prec, u64 p):
    cdef u64[:, :, :] Av = np.ascontiguousarray(A, dtype=np.uint64)
    cdef u64[:, :, :] Bv = np.ascontiguousarray(B, dtype=np.uint64)
    cdef i64[:] pv = np.ascontiguousarray(prec, dtype=np.int64)
    cdef Py_ssize_t count = Av.shape[0]
    cdef int n = Av.shape[1]
    cdef int m = Bv.shape[2]
    if n > NMAX:
        raise ValueError("matrix too large for compiled kernel")
    X = np.zeros((count, n, m), dtype=np.uint64)
    w = np.zeros(count, dtype=np.int64)
    pout = np.zeros(count, dtype=np.int64)
    vdet = np.zeros(count, dtype=np.int64)
    status = np.zeros(count, dtype=np.int8)
    cdef u64[:, :, :] Xv = X
    cdef i64[:] wv = w
    cdef i64[:] po = pout
    cdef i64[:] vd = vdet
    cdef cnp.int8_t[:] st = status
    cdef u64[:, :] Awork = np.zeros((n, n), dtype=np.uint64)
    cdef u64[:, :] Bwork = np.zeros((n, max(m, 1)), dtype=np.uint64)
    cdef u64[:, :] R = np.zeros((n, n), dtype=np.uint64)
    cdef Py_ssize_t s
    cdef int i, j, P
    cdef u64 q
    with nogil:
        for s in range(count):
            P = <int>pv[s]
            if P <= 0:
                st[s] = 1
                continue
            q = ipow(p, P)
            for i in range(n):
                for j in range(n):
                    Awork[i, j] = Av[s, i, j] % q
                for j in range(m):
                    Bwork[i, j] = Bv[s, i, j] % q
            st[s] = chart_one(Awork, Bwork, R, Xv[s], n, m, p, P,
                              &wv[s], &po[s], &vd[s])
    return X.astype(np.int64), w, pout, vdet, status


def smith_batch(M, prec, u64 p):
    cdef u64[:, :, :] Mv = np.ascontiguousarray(M, dtype=np.uint64)
    cdef i64[:] pv = np.ascontiguousarray(prec, dtype=np.int64)
    cdef Py_ssize_t count = Mv.shape[0]
    cdef int n = Mv.shape[1]
    if n > NMAX:
        raise ValueError("matrix too large for compiled kernel")
    exps = np.zeros((count, n), dtype=np.int64)
    status = np.zeros(count, dtype=np.int8)
    cdef i64[:, :] ev = exps
    cdef cnp.int8_t[:] st = status
    cdef u64[:, :] W = np.zeros((n, n), dtype=np.uint64)
    cdef u64[:, :] dummy = np.zeros((1, 1), dtype=np.uint64)
    cdef int vals[NMAX]
    cdef Py_ssize_t s
    cdef int i, j, P, found
    cdef u64 q
    with nogil:
        for s in range(count):
            P = <int>pv[s]
            if P <= 0:
                st[s] = 1
                for i in range(n):
                    ev[s, i] = 0 if P < 0 else P
                continue
            q = ipow(p, P)
            for i in range(n):
                for j in range(n):
                    W[i, j] = Mv[s, i, j] % q
            found = eliminate(W, dummy, dummy, n, 0, False, False, p, P, vals)
            for i in range(n):
                ev[s, i] = vals[i] if i < found else P
            st[s] = 0 if found == n else 1
    return exps, status


def moebius_batch(X, w, prec, g, u64 p):
    cdef u64[:, :, :] Xv = np.ascontiguousarray(X, dtype=np.uint64)
    cdef i64[:] wv = np.ascontiguousarray(w, dtype=np.int64)
    cdef i64[:] pv = np.ascontiguousarray(prec, dtype=np.int64)
    cdef i64[:, :] gv = np.ascontiguousarray(g, dtype=np.int64)
    cdef Py_ssize_t count = Xv.shape[0]
    cdef int n = Xv.shape[1]
    if n > NMAX:
        raise ValueError("matrix too large for compiled kernel")
    X2 = np.zeros((count, n, n), dtype=np.uint64)
    w2 = np.zeros(count, dtype=np.int64)
    p2 = np.zeros(count, dtype=np.int64)
    vdet = np.zeros(count, dtype=np.int64)
    status = np.zeros(count, dtype=np.int8)
    cdef u64[:, :, :] X2v = X2
    cdef i64[:] w2v = w2
    cdef i64[:] p2v = p2
    cdef i64[:] vd = vdet
    cdef cnp.int8_t[:] st = status
    cdef u64[:, :] A2 = np.zeros((n, n), dtype=np.uint64)
    cdef u64[:, :] B2 = np.zeros((n, n), dtype=np.uint64)
    cdef u64[:, :] R = np.zeros((n, n), dtype=np.uint64)
    cdef Py_ssize_t s
    cdef int i, j, k, P
    cdef u64 q, pw, acc_a, acc_b, gij
    cdef i64 entry
    with nogil:
        for s in range(count):
            P = <int>pv[s]
            if P <= 0:
                st[s] = 1
                continue
            q = ipow(p, P)
            pw = ipow(p, <int>wv[s]) % q if wv[s] < P else 0
            for i in range(n):
                for j in range(n):
                    entry = gv[i, j] % <i64>q
                    if entry < 0:
                        entry = entry + <i64>q
                    acc_a = hua_mulmod(pw, <u64>entry, q)
                    entry = gv[i, n + j] % <i64>q
                    if entry < 0:
                        entry = entry + <i64>q
                    acc_b = hua_mulmod(pw, <u64>entry, q)
                    for k in range(n):
                        entry = gv[n + k, j] % <i64>q
                        if entry < 0:
                            entry = entry + <i64>q
                        acc_a = (acc_a + hua_mulmod(Xv[s, i, k] % q, <u64>entry, q)) % q
                        entry = gv[n + k, n + j] % <i64>q
                        if entry < 0:
                            entry = entry + <i64>q
                        acc_b = (acc_b + hua_mulmod(Xv[s, i, k] % q, <u64>entry, q)) % q
                    A2[i, j] = acc_a
                    B2[i, j] = acc_b
            st[s] = chart_one(A2, B2, R, X2v[s], n, n, p, P,
                              &w2v[s], &p2v[s], &vd[s])
            if st[s] == 0:
                vd[s] = vd[s] - wv[s] * n
    return X2.astype(np.int64), w2, p2, vdet, status


def rank_mod_p_batch(M, u64 p):
    cdef u64[:, :, :] Mv = np.ascontiguousarray(M, dtype=np.uint64)
    cdef Py_ssize_t count = Mv.shape[0]
    cdef int n = Mv.shape[1]
    if n > NMAX:
        raise ValueError("matrix too large for compiled kernel")
    out = np.zeros(count, dtype=np.int64)
    cdef i64[:] ov = out
    cdef u64[:, :] W = np.zeros((n, n), dtype=np.uint64)
    cdef u64[:, :] dummy = np.zeros((1, 1), dtype=np.uint64)
    cdef int vals[NMAX]
    cdef Py_ssize_t s
    cdef int i, j
    with nogil:
        for s in range(count):
            for i in range(n):
                for j in range(n):
                    W[i, j] = Mv[s, i, j] % p
            ov[s] = eliminate(W, dummy, dummy, n, 0, False, False, p, 1, vals)
    return out
