"""Parallelopiped packages for direction vectors with full support.

A slanted package sweeps the hull of a degenerate rectangle along a
direction v whose coordinates are all non-zero.  Membership is decided
by exact rational feasibility, the marker construction recurses on the
dimension of the base, and corner packages place one slanted package
off each upper face of a rectangle so that every v-line through it is
served.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import ceil, floor, gcd
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateDirection
from .lattice import GenRect, chebyshev, corners_canonical, extension, norm
from .multiples import D_single
from .rect_markers import MarkerSet, lex_sorted


# ---------------------------------------------------------------------------
# Exact membership


@dataclass(frozen=True)
class Parallelopiped:
    """L(S, v, h): lattice points of Hull(S) swept along v up to e_axis-height h.

    ``base`` must be degenerate on ``axis``; ``infinite`` drops the height
    bound (the two-sided infinite sweep).
    """

    base: GenRect
    v: tuple[int, ...]
    axis: int
    height: int
    infinite: bool = False

    def __post_init__(self):
        if any(c == 0 for c in self.v):
            raise DegenerateDirection("direction has a zero coordinate")
        if self.base.side(self.axis) != 0:
            raise ValueError("base must be a single value on the sweep axis")
        if not self.infinite and self.height < 0:
            raise ValueError("height must be non-negative")


def pp_contains(p: Parallelopiped, x: Sequence[int]) -> bool:
    """Exact membership: is there a real t and hull point b with x = b + t v?

    The hull of an axis-aligned base is a box, so each coordinate gives a
    rational interval for t; the point is inside iff the intersection
    (clipped to [0, h/|v_axis|] unless infinite) is non-empty.
    """
    if p.infinite:
        t_lo, t_hi = None, None
    else:
        t_lo, t_hi = Fraction(0), Fraction(p.height, abs(p.v[p.axis]))
    for j, nu in enumerate(p.v):
        a = Fraction(x[j] - p.base.hi[j], nu)
        b = Fraction(x[j] - p.base.lo[j], nu)
        lo, hi = (a, b) if a <= b else (b, a)
        t_lo = lo if t_lo is None else max(t_lo, lo)
        t_hi = hi if t_hi is None else min(t_hi, hi)
        if t_hi < t_lo:
            return False
    return True


# ---------------------------------------------------------------------------
# Height constants


@dataclass(frozen=True)
class SlantedConstants:
    """The h_k / H_t recursion evaluated for one sweep axis.

    ``h[k]`` bounds the sweep-axis extent of the marker set over a base of
    dimension k; ``H[t]`` is the budget after stacking slab t; ``H_final``
    is the package height H(n, d, v, axis).
    """

    n: int
    d: int
    v: tuple[int, ...]
    axis: int
    alpha: int
    h: tuple[int, ...]
    H: tuple[int, ...]

    @property
    def H_final(self) -> int:
        return self.H[-1]


def slanted_constants(n: int, d: int, v: Sequence[int], axis: int) -> SlantedConstants:
    """Evaluate the height recursions with axis ``axis`` moved last.

    Signs are immaterial: the recursion runs on |v_axis| after the
    reflection that makes every coordinate positive.
    """
    if any(c == 0 for c in v):
        raise DegenerateDirection("direction has a zero coordinate")
    alpha = 0
    for c in v:
        alpha = gcd(alpha, abs(c))
    nu = abs(v[axis])
    nv = norm(v)
    h = [D_single(n, d, alpha) * nu // alpha]
    for k in range(n - 1):
        m_k = h[k] * d * nv
        h.append(h[k] + m_k * (h[k] + 1) * d * nu)
    H = [h[n - 1]]
    for _ in range(nu - 1):
        H.append((H[-1] + d) * nu)
    return SlantedConstants(n, d, tuple(int(c) for c in v), axis, alpha,
                            tuple(h), tuple(H))


def slanted_delta(n: int, d: int, v: Sequence[int]) -> int:
    """Extension width needed around a rectangle for its corner packages."""
    nv = norm(v)
    total = (n + 1) * d * nv
    for i in range(n):
        total += slanted_constants(n, d, v, i).H_final * nv
    return total


# ---------------------------------------------------------------------------
# The slanted marker construction


def _recursive_base_markers(sides: Sequence[int], v: Sequence[int], d: int,
                            h: Sequence[int], alpha: int) -> list[tuple[int, ...]]:
    """Markers covering every v-line through the integer box [0,s_1]x...x{0}.

    ``sides`` lists the box extents on the first n-1 axes (the last axis
    is the degenerate sweep axis).  Induction on the number of
    non-degenerate sides: the base case walks the single line in steps of
    v/alpha, the step shears each slice of the peeled axis along v.
    """
    n = len(v)
    nondeg = [j for j, s in enumerate(sides) if s > 0]
    if not nondeg:
        w = tuple(c // alpha for c in v)
        c1 = (1 - 2 * d) % alpha
        stride = 2 * d + c1
        return [tuple(s * wj for wj in w) for s in range(alpha)] if alpha > 1 \
            else [tuple(0 for _ in range(n))]
    p = nondeg[-1]
    k = len(nondeg) - 1
    sub_sides = list(sides)
    sub_sides[p] = 0
    sub = _recursive_base_markers(sub_sides, v, d, h, alpha)
    m_k = h[k] * d * norm(v)
    out = []
    for lam in range(sides[p] + 1):
        lift = (lam % m_k) * (h[k] + 1) * d
        for pt in sub:
            q = list(pt)
            q[p] += lam
            for j in range(n):
                q[j] += lift * v[j]
            out.append(tuple(q))
    return out


def _slab_boxes(sides: Sequence[int], v: Sequence[int]
                ) -> list[tuple[int, tuple[int, ...], tuple[int, ...]]]:
    """Integer boxes S_t covering the residue-t slice of the hull sweep.

    Endpoints are the ceiling/floor of the exact rational bounds; empty
    slices (possible when the offsets are fractional) are dropped.
    """
    n = len(v)
    nu = v[n - 1]
    out = []
    for t in range(nu):
        lo, hi = [], []
        ok = True
        for j in range(n - 1):
            off = Fraction(t * v[j], nu)
            a = ceil(off)
            b = floor(sides[j] + off)
            if a > b:
                ok = False
                break
            lo.append(a)
            hi.append(b)
        if ok:
            out.append((t, tuple(lo), tuple(hi)))
    return out


def slanted_marker(S: GenRect, v: Sequence[int], axis: int, d: int) -> MarkerSet:
    """Markers with spacing >= d meeting every v-line through Hull(S).

    The construction reflects axes so every coordinate of v is positive,
    moves the sweep axis last, splits the infinite parallelopiped into
    |v_axis| slabs by the sweep-axis residue, builds the recursive base
    set on each slab's own integer box, and stacks the slabs along v with
    gaps of at least d.  The result fits inside L(S, v, H(n,d,v,axis)).
    """
    n = S.n
    if len(v) != n:
        raise ValueError("direction dimension mismatch")
    if any(c == 0 for c in v):
        raise DegenerateDirection("direction has a zero coordinate")
    if S.side(axis) != 0:
        raise ValueError("base must be a single value on the sweep axis")
    consts = slanted_constants(n, d, v, axis)

    flips = tuple(1 if c > 0 else -1 for c in v)
    others = [j for j in range(n) if j != axis]
    perm = others + [axis]  # normalized order: sweep axis last

    def fwd(pt: Sequence[int]) -> tuple[int, ...]:
        return tuple(flips[perm[k]] * pt[perm[k]] for k in range(n))

    def back(pt: Sequence[int]) -> tuple[int, ...]:
        out = [0] * n
        for k in range(n):
            out[perm[k]] = flips[perm[k]] * pt[k]
        return tuple(out)

    vn = fwd(v)
    corners = [fwd(c) for c in (S.lo, S.hi)]
    base_lo = tuple(min(c[k] for c in corners) for k in range(n))
    base_hi = tuple(max(c[k] for c in corners) for k in range(n))
    sides = [base_hi[k] - base_lo[k] for k in range(n - 1)]

    H0 = consts.h[n - 1]
    pts: list[tuple[int, ...]] = []
    prev_top: Optional[int] = None
    for t, lo, hi in _slab_boxes(sides, vn):
        if prev_top is None:
            c_t = 0
        else:
            c_t = -(-(prev_top + d - t) // vn[n - 1])
        prev_top = t + c_t * vn[n - 1] + H0
        box_sides = [b - a for a, b in zip(lo, hi)]
        base_pts = _recursive_base_markers(box_sides, vn, d, consts.h, consts.alpha)
        for pt in base_pts:
            q = list(pt)
            for j in range(n - 1):
                q[j] += base_lo[j] + lo[j] + c_t * vn[j]
            q[n - 1] += base_lo[n - 1] + t + c_t * vn[n - 1]
            pts.append(tuple(q))

    world = [back(p) for p in pts]
    arr = np.asarray(world, dtype=np.int64).reshape(len(world), n)
    return MarkerSet(n, lex_sorted(arr), d)


# ---------------------------------------------------------------------------
# Corner packages around a rectangle


def corner_exit_index(v: Sequence[int]) -> int:
    """0-based canonical-corner index of the corner the flow exits through."""
    idx = 0
    for i, c in enumerate(v):
        if c > 0:
            idx |= 1 << i
    return idx


@dataclass
class CornerPackages:
    """Slanted packages hugging the exit corner of a rectangle."""

    markers: MarkerSet
    extended: GenRect
    faces: list[GenRect]
    offsets: list[int]
    per_package: list[MarkerSet]


def corner_packages(R0: GenRect, v: Sequence[int], d: int) -> CornerPackages:
    """Markers in extension(R0, delta) minus R0 serving every v-line via R0.

    One slanted package runs off each of the n faces through the exit
    corner; consecutive packages are offset along v by the previous
    package's height budget plus d, which keeps them >= d apart and at
    least d inside the extension boundary.
    """
    n = R0.n
    if any(c == 0 for c in v):
        raise DegenerateDirection("direction has a zero coordinate")
    if not R0.is_proper():
        raise ValueError("R0 must be a proper rectangle")
    delta = slanted_delta(n, d, v)
    R1 = extension(R0, delta)
    corner = corners_canonical(R0)[corner_exit_index(v)]

    faces = []
    for i in range(n):
        lo = list(R0.lo)
        hi = list(R0.hi)
        lo[i] = hi[i] = corner[i]
        faces.append(GenRect(tuple(lo), tuple(hi)))

    offsets = []
    c = 1
    per_pkg = []
    chunks = []
    for i in range(n):
        offsets.append(c)
        base = faces[i].translate(tuple(c * cv for cv in v))
        m = slanted_marker(base, v, i, d)
        per_pkg.append(m)
        chunks.append(m.points)
        c += slanted_constants(n, d, v, i).H_final + d
    pts = lex_sorted(np.concatenate(chunks))
    markers = MarkerSet(n, pts, d)
    return CornerPackages(markers, R1, faces, offsets, per_pkg)
