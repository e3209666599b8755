"""Integer-lattice geometry: points, generalized rectangles, the Chebyshev metric.

Conventions used throughout the package:

* A point is a tuple of ints; axes are 0-based in code.
* The *side length* of an interval [a, b] is b - a, so the number of
  lattice points on it is side + 1.  "Cells" always means point counts.
* Distance between sets is the infimum over point pairs; distance to an
  empty set is +inf so spacing checks against empty collections pass
  vacuously.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Iterator, Sequence

from .errors import DimensionMismatch, EmptyCore

Point = tuple[int, ...]
Interval = tuple[int, int]

INF = math.inf


def chebyshev(x: Sequence[int], y: Sequence[int]) -> int:
    """Chebyshev distance max_i |x_i - y_i| between two points."""
    if len(x) != len(y):
        raise DimensionMismatch(f"points of dimension {len(x)} and {len(y)}")
    return max(abs(a - b) for a, b in zip(x, y))


def norm(x: Sequence[int]) -> int:
    """Chebyshev norm of a vector."""
    return max(abs(a) for a in x)


@dataclass(frozen=True)
class GenRect:
    """Generalized n-dimensional rectangle [lo_1,hi_1] x ... x [lo_n,hi_n].

    Degenerate sides (lo == hi) are allowed.  A *proper* rectangle has
    lo < hi on every axis.
    """

    lo: Point
    hi: Point

    def __post_init__(self):
        if len(self.lo) != len(self.hi):
            raise DimensionMismatch("lo and hi of different lengths")
        if not self.lo:
            return
        for a, b in zip(self.lo, self.hi):
            if a > b:
                raise ValueError(f"empty interval [{a},{b}] in rectangle")

    @property
    def n(self) -> int:
        return len(self.lo)

    def side(self, axis: int) -> int:
        """Side length hi - lo in the given direction."""
        return self.hi[axis] - self.lo[axis]

    def sides(self) -> tuple[int, ...]:
        return tuple(b - a for a, b in zip(self.lo, self.hi))

    def cells(self, axis: int) -> int:
        return self.hi[axis] - self.lo[axis] + 1

    def num_points(self) -> int:
        out = 1
        for a, b in zip(self.lo, self.hi):
            out *= b - a + 1
        return out

    def is_proper(self) -> bool:
        return all(a < b for a, b in zip(self.lo, self.hi))

    def interval(self, axis: int) -> Interval:
        return (self.lo[axis], self.hi[axis])

    def contains(self, p: Sequence[int]) -> bool:
        if len(p) != self.n:
            raise DimensionMismatch("point dimension does not match rectangle")
        return all(a <= c <= b for a, c, b in zip(self.lo, p, self.hi))

    def contains_rect(self, other: "GenRect") -> bool:
        return all(a <= c and d <= b for a, b, c, d in
                   zip(self.lo, self.hi, other.lo, other.hi))

    def intersects(self, other: "GenRect") -> bool:
        return all(max(a, c) <= min(b, d) for a, b, c, d in
                   zip(self.lo, self.hi, other.lo, other.hi))

    def translate(self, v: Sequence[int]) -> "GenRect":
        return GenRect(tuple(a + d for a, d in zip(self.lo, v)),
                       tuple(b + d for b, d in zip(self.hi, v)))

    def points(self) -> Iterator[Point]:
        """Iterate every lattice point, lexicographically."""
        ranges = [range(a, b + 1) for a, b in zip(self.lo, self.hi)]
        return iter(product(*ranges))


def rect(*bounds: Interval) -> GenRect:
    """Convenience constructor: rect((0, 3), (1, 5)) = [0,3] x [1,5]."""
    lo = tuple(b[0] for b in bounds)
    hi = tuple(b[1] for b in bounds)
    return GenRect(lo, hi)


def interval_gap(a: Interval, b: Interval) -> int:
    """Distance between two integer intervals (0 when they intersect)."""
    return max(a[0] - b[1], b[0] - a[1], 0)


def rect_distance(a: GenRect, b: GenRect) -> int:
    """Chebyshev distance between two generalized rectangles.

    Coordinates are independent, so the set distance is the maximum of
    the per-axis interval gaps.
    """
    if a.n != b.n:
        raise DimensionMismatch("rectangles of different dimensions")
    return max(interval_gap(a.interval(i), b.interval(i)) for i in range(a.n))


def point_rect_distance(p: Sequence[int], r: GenRect) -> int:
    return max(max(a - c, c - b, 0) for a, c, b in zip(r.lo, p, r.hi))


def point_set_distance(p: Sequence[int], pts: Iterable[Sequence[int]]) -> float:
    """Distance from a point to a finite point set; +inf when empty."""
    best = INF
    for q in pts:
        d = chebyshev(p, q)
        if d < best:
            best = d
    return best


def point_complement_distance(p: Sequence[int], r: GenRect) -> int:
    """Distance from p inside r to the complement of r.

    For p in r this is min over axes of the distance past either face
    plus one, because the complement starts one cell outside.
    """
    return min(min(c - a, b - c) for a, c, b in zip(r.lo, p, r.hi)) + 1


def project_drop(r: GenRect, axis: int) -> GenRect:
    """sigma_axis: drop the given coordinate, yielding an (n-1)-dim rectangle."""
    lo = r.lo[:axis] + r.lo[axis + 1:]
    hi = r.hi[:axis] + r.hi[axis + 1:]
    return GenRect(lo, hi)


def project_keep(r: GenRect, axis: int) -> Interval:
    """pi_axis: keep only the given coordinate as an interval."""
    return (r.lo[axis], r.hi[axis])


def insert_axis(r: GenRect, axis: int, iv: Interval) -> GenRect:
    """Inverse of project_drop: splice an interval back in at `axis`."""
    lo = r.lo[:axis] + (iv[0],) + r.lo[axis:]
    hi = r.hi[:axis] + (iv[1],) + r.hi[axis:]
    return GenRect(lo, hi)


def drop_coord(p: Sequence[int], axis: int) -> Point:
    return tuple(p[:axis]) + tuple(p[axis + 1:])


def corners_canonical(r: GenRect) -> list[Point]:
    """The 2^n extreme points in the canonical binary-digit order.

    Corner number k (1-based) takes hi on axis j exactly when bit j of
    k-1 is set; the first corner is the coordinatewise minimum.
    """
    out = []
    for mask in range(1 << r.n):
        out.append(tuple(r.hi[j] if (mask >> j) & 1 else r.lo[j]
                         for j in range(r.n)))
    return out


def core(r: GenRect, delta: int) -> GenRect:
    """Shrink r by delta on every face: {x in r : rho(x, complement) > delta}.

    Every side length drops by exactly 2*delta; raises EmptyCore when a
    side is too short for the result to stay a proper rectangle.
    """
    if delta < 0:
        raise ValueError("delta must be non-negative")
    for i in range(r.n):
        if r.side(i) <= 2 * delta:
            raise EmptyCore(f"side {r.side(i)} on axis {i} <= 2*{delta}")
    return GenRect(tuple(a + delta for a in r.lo),
                   tuple(b - delta for b in r.hi))


def extension(r: GenRect, delta: int) -> GenRect:
    """Grow r by delta on every face; inverse of :func:`core`."""
    if delta < 0:
        raise ValueError("delta must be non-negative")
    return GenRect(tuple(a - delta for a in r.lo),
                   tuple(b + delta for b in r.hi))


def split_interval_even(lo: int, hi: int, parts: int) -> list[Interval]:
    """Split [lo, hi] into `parts` consecutive pieces of near-equal size.

    Cell counts differ by at most one, larger pieces first; deterministic.
    """
    cells = hi - lo + 1
    if parts > cells:
        raise ValueError(f"cannot split {cells} cells into {parts} parts")
    base, extra = divmod(cells, parts)
    out = []
    cur = lo
    for k in range(parts):
        size = base + (1 if k < extra else 0)
        out.append((cur, cur + size - 1))
        cur += size
    return out


@dataclass(frozen=True)
class IntervalSet:
    """A collection of intervals tied to one axis (the paper's J and K lists)."""

    axis: int
    intervals: tuple[Interval, ...]

    def __post_init__(self):
        for a, b in self.intervals:
            if a > b:
                raise ValueError(f"empty interval [{a},{b}]")

    def __len__(self) -> int:
        return len(self.intervals)

    def __iter__(self) -> Iterator[Interval]:
        return iter(self.intervals)
