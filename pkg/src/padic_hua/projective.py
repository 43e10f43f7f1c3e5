"""Corner projections, embedded generators and band elements.

The corner map sends an ``(n+m) x (n+m)`` matrix to its top-left ``n x n``
block.  Group elements of size ``n`` embed at larger sizes by padding
``a, d`` with identity and ``b, c`` with zero; the action then commutes with
the corner map.  Band elements extend this to infinite matrices whose tail
is triangular with unit diagonal, and act on every level ``k >= k0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .actions import BlockGroupElement, moebius_with_det
from .errors import LevelTooSmall, ShapeMismatch
from .linalg import PadicMatrix, det, matadd, matmul
from .padic import PadicScalar, format_rational, parse_rational

BAND_KINDS = ("finite", "band", "unit_norm")
BLOCKS = ("a", "b", "c", "d")


def corner(z: PadicMatrix, k: int) -> PadicMatrix:
    if not 0 < k <= min(z.rows, z.cols):
        raise ShapeMismatch(f"corner size {k} outside 1..{min(z.rows, z.cols)}")
    return z.submatrix(0, k, 0, k)


def _pad(block, n, m, diag):
    out = [[Fraction(0)] * m for _ in range(m)]
    for i in range(n):
        for j in range(n):
            out[i][j] = Fraction(block[i][j])
    for i in range(n, m):
        out[i][i] = Fraction(diag)
    return out


def embed_generator(g: BlockGroupElement, target: int | None = None) -> BlockGroupElement:
    """Pad ``g`` to size ``target`` (default ``n+1``): ``diag(a,1), diag(b,0), ...``."""
    n = g.n
    m = n + 1 if target is None else target
    if m < n:
        raise ShapeMismatch("cannot embed into a smaller size")
    return BlockGroupElement.from_blocks(
        _pad(g.a, n, m, 1), _pad(g.b, n, m, 0), _pad(g.c, n, m, 0), _pad(g.d, n, m, 1), g.flavor
    )


@dataclass(frozen=True)
class BandElement:
    """Infinite block element: a core of size ``k0`` plus finitely many tail entries.

    ``tail`` maps ``(block, i, j)`` to an entry with ``max(i, j) >= k0``.  For
    ``kind="band"`` the tail of ``a`` is lower triangular, that of ``d``
    upper triangular, both with unit diagonal, and ``c`` has no tail.  The
    ``unit_norm`` kind allows diagonal units other than 1.  ``finite`` has no
    tail at all.  Unlisted diagonal entries of ``a`` and ``d`` are 1, all
    other unlisted entries are 0.
    """

    core: BlockGroupElement
    kind: str = "finite"
    tail: tuple = field(default=())

    def __post_init__(self):
        if self.kind not in BAND_KINDS:
            raise ValueError(f"unknown band kind {self.kind!r}")
        tail = tuple(sorted((b, int(i), int(j), Fraction(x)) for b, i, j, x in self.tail))
        object.__setattr__(self, "tail", tail)
        k0 = self.core.n
        for b, i, j, x in tail:
            if max(i, j) < k0:
                raise ValueError("tail entries must lie outside the core")
            if self.kind == "finite":
                raise ValueError("finite-support elements have no tail")
            if b == "c":
                raise ValueError("c has no tail entries")
            if b == "a" and i < j:
                raise ValueError("a must be lower triangular outside the core")
            if b == "d" and i > j:
                raise ValueError("d must be upper triangular outside the core")
            if b in "ad" and i == j and self.kind == "band" and x != 1:
                raise ValueError("band kind has unit diagonal")

    @property
    def k0(self) -> int:
        return self.core.n

    def blocks(self, k: int):
        """The ``k x k`` corners ``a^{(k)}, b^{(k)}, c^{(k)}, d^{(k)}``."""
        if k < self.k0:
            raise LevelTooSmall(f"level {k} below core size {self.k0}", k=k, k0=self.k0)
        core = {"a": self.core.a, "b": self.core.b, "c": self.core.c, "d": self.core.d}
        out = {}
        for name in BLOCKS:
            out[name] = _pad(core[name], self.k0, k, 1 if name in "ad" else 0)
        for b, i, j, x in self.tail:
            if i < k and j < k:
                out[b][i][j] = x
        return out["a"], out["b"], out["c"], out["d"]

    def level(self, k: int) -> BlockGroupElement:
        return BlockGroupElement.from_blocks(*self.blocks(k))

    def to_json(self) -> dict:
        return {
            "core": self.core.to_json(),
            "kind": self.kind,
            "band": [[b, i, j, format_rational(x)] for b, i, j, x in self.tail],
        }

    @classmethod
    def from_json(cls, obj) -> BandElement:
        core = BlockGroupElement.from_json(obj["core"])
        tail = tuple((b, int(i), int(j), parse_rational(x)) for b, i, j, x in obj.get("band", []))
        return cls(core, obj.get("kind", "finite"), tail)


def random_band_element(k0: int, p: int, width: int, extent: int, gen, kind: str = "band") -> BandElement:
    """Random band element: GL core from generator words, tail up to ``k0+extent``."""
    from .actions import random_group_element
    from .samplers import RandomStream

    seed = int(gen.integers(0, 2**63))
    core = random_group_element(k0, p, "GL", 4, RandomStream(seed))
    if kind == "finite":
        return BandElement(core, "finite")
    tail = []
    top = k0 + extent
    for i in range(top):
        for j in range(top):
            if max(i, j) < k0 or abs(i - j) > width:
                continue
            for b in ("a", "b", "d"):
                if b == "a" and i < j or b == "d" and i > j:
                    continue
                if b in "ad" and i == j:
                    if kind == "unit_norm":
                        tail.append((b, i, j, _unit(gen, p)))
                    continue
                x = int(gen.integers(0, p**2))
                if x:
                    tail.append((b, i, j, x))
    return BandElement(core, kind, tuple(tail))


def _unit(gen, p):
    while True:
        x = int(gen.integers(1, p**2))
        if x % p:
            return x


def act_level(g: BandElement, z: PadicMatrix, s=0):
    """Apply ``g_[k]`` at level ``k = size(z)``; returns ``(z * g_[k], rn exponent)``."""
    k = z.rows
    if k < g.k0:
        raise LevelTooSmall(f"level {k} below core size {g.k0}", k=k, k0=g.k0)
    w, v = moebius_with_det(z, g.level(k))
    return w, -Fraction(s) * v


def stabilized_det(g: BandElement, z: PadicMatrix, k: int) -> PadicScalar:
    """``det(a^{(k)} + z^{(k)} c^{(k)})`` using the ``k x k`` corner of ``z``."""
    if k < g.k0:
        raise LevelTooSmall(f"level {k} below core size {g.k0}", k=k, k0=g.k0)
    zk = corner(z, k)
    a, _, c, _ = g.blocks(k)
    p = z.p
    N = z.min_precision()
    A = PadicMatrix.from_rationals(a, p, N)
    C = PadicMatrix.from_rationals(c, p, N)
    return det(matadd(A, matmul(zk, C)))


def sample_tower(spec, levels: int, stream, N: int | None = None):
    """One coherent tower ``z^{(1)}, ..., z^{(levels)}`` from a top-level draw."""
    from .measures import MeasureSpec
    from .samplers import sample_mu_s

    top = MeasureSpec(spec.p, levels, spec.s, spec.flavor)
    if spec.flavor != "GL" or spec.s < 0:
        raise ValueError("towers are drawn for GL measures with s >= 0")
    ws = sample_mu_s(top, N, stream)
    if ws.z is None:
        return None
    return [corner(ws.z, k) for k in range(1, levels + 1)]
