"""Batch kernel selection.

The compiled ``_ckernels`` module is used when it was built and the modulus
fits in 62 bits; otherwise the pure-Python ``_pykernels`` implementations
run.  Set ``HUA_PURE_PYTHON=1`` to force the fallback.
"""

import math
import os

from . import _pykernels

try:
    if os.environ.get("HUA_PURE_PYTHON") == "1":
        raise ImportError("pure-python kernels forced")
    from . import _ckernels
except ImportError:
    _ckernels = None

BACKEND = "cython" if _ckernels is not None else "python"
# the compiled kernels reduce through 128-bit products of values below 2^62
FAST_MODULUS_BITS = 62


def max_fast_precision(p: int) -> int:
    return int(FAST_MODULUS_BITS / math.log2(p))


def _impl(p, prec):
    if _ckernels is None:
        return _pykernels
    if len(prec) and int(max(prec)) > max_fast_precision(p):
        return _pykernels
    return _ckernels


def chart_batch(A, B, prec, p):
    return _impl(p, prec).chart_batch(A, B, prec, p)


def smith_batch(M, prec, p):
    return _impl(p, prec).smith_batch(M, prec, p)


def moebius_batch(X, w, prec, g, p):
    return _impl(p, prec).moebius_batch(X, w, prec, g, p)


def rank_mod_p_batch(M, p):
    mod = _ckernels if _ckernels is not None else _pykernels
    return mod.rank_mod_p_batch(M, p)
