"""Markers hit by arithmetic progressions along axis directions.

Generalizes the one-direction construction so that for a non-zero step
alpha every alpha-progression parallel to the axis meets the set, then
stacks several steps per axis and reuses the in-rectangle round
machinery with a raised package thickness.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import TooThin
from .lattice import GenRect, Interval
from .rect_markers import (
    ConstantScheduleRect,
    MarkerSet,
    PackageFamily,
    _axis_marker_points,
    lex_sorted,
    materialize_family,
    minimal_schedule,
    paper_schedule,
    rect_package_family,
)


@dataclass(frozen=True)
class AlphaTable:
    """Per-axis non-zero step sizes; axes with no request are padded with 1."""

    alphas: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        for row in self.alphas:
            if not row:
                raise ValueError("every axis needs at least one alpha")
            if any(a == 0 for a in row):
                raise ValueError("alpha values must be non-zero")

    @classmethod
    def for_dimension(cls, n: int, per_axis: dict[int, Sequence[int]]) -> "AlphaTable":
        rows = []
        for i in range(n):
            row = tuple(per_axis.get(i, ())) or (1,)
            rows.append(row)
        return cls(tuple(rows))

    @property
    def n(self) -> int:
        return len(self.alphas)


def D_single(n: int, d: int, alpha: int) -> int:
    """Side-length budget for one alpha-step marker: 2|a|d^n - d + (|a|-1)^2."""
    if n < 1 or d < 1 or alpha == 0:
        raise ValueError("need n, d >= 1 and alpha != 0")
    a = abs(alpha)
    return 2 * a * d**n - d + (a - 1) ** 2


def _restrict_axis(r: GenRect, axis: int, iv: Interval) -> GenRect:
    lo = r.lo[:axis] + (iv[0],) + r.lo[axis + 1:]
    hi = r.hi[:axis] + (iv[1],) + r.hi[axis + 1:]
    return GenRect(lo, hi)


def multiple_marker(r: GenRect, axis: int, d: int, alpha: int) -> MarkerSet:
    """Markers with spacing >= d hit by every alpha-step line along ``axis``.

    The base one-direction set is repeated |alpha| times with stride
    2d^n + c where c makes the stride congruent to 1 mod |alpha|, so the
    copies cover every residue class.  The set occupies D(n,d,alpha)
    cells, hence side length D-1 suffices (the worked examples use it).
    """
    a = abs(alpha)
    need_cells = D_single(r.n, d, alpha)
    if r.cells(axis) < need_cells:
        raise TooThin(f"{r.cells(axis)} cells < D(n,d,alpha) = {need_cells}")
    c = (1 - 2 * d**r.n) % a
    base = _axis_marker_points(r, axis, d)
    stride = 2 * d**r.n + c
    chunks = []
    for t in range(a):
        shifted = base.copy()
        shifted[:, axis] += t * stride
        chunks.append(shifted)
    pts = lex_sorted(np.concatenate(chunks))
    return MarkerSet(r.n, pts, d)


def multi_alpha_thickness(n: int, d: int, alphas: Sequence[int]) -> int:
    """Minimum side length for stacking all the given steps on one axis."""
    m = len(alphas)
    return (m - 1) * d + sum(D_single(n, d, a) for a in alphas)


def multi_alpha_marker(r: GenRect, axis: int, d: int,
                       alphas: Sequence[int]) -> MarkerSet:
    """One marker set served by every alpha_j-progression along ``axis``.

    The axis interval splits into consecutive blocks of D(n,d,alpha_j)+1
    cells separated by d-1 empty cells (no gap when d = 1), and each
    block runs the single-step construction.
    """
    if not alphas:
        raise ValueError("need at least one alpha")
    need = multi_alpha_thickness(r.n, d, alphas)
    if r.side(axis) < need:
        raise TooThin(f"side {r.side(axis)} < {need}")
    cur = r.lo[axis]
    chunks = []
    for j, alpha in enumerate(alphas):
        cells = D_single(r.n, d, alpha)
        block = _restrict_axis(r, axis, (cur, cur + cells))
        chunks.append(multiple_marker(block, axis, d, alpha).points)
        cur += cells + 1 + (d - 1)
    pts = lex_sorted(np.concatenate(chunks))
    return MarkerSet(r.n, pts, d)


def multiples_schedule(n: int, d0: int, table: AlphaTable,
                       kind: str = "minimal") -> ConstantScheduleRect:
    """Rectangle schedule with the package thickness raised per direction."""
    if table.n != n:
        raise ValueError("alpha table dimension mismatch")
    thickness = tuple(multi_alpha_thickness(n, d0, table.alphas[i]) for i in range(n))
    if kind == "minimal":
        return minimal_schedule(n, d0, thickness)
    if kind == "paper":
        base = paper_schedule(n, d0)
        if max(thickness) < base.d[n - 1]:
            sched = ConstantScheduleRect(n, d0, base.d, base.N, base.D0, thickness)
            sched.validate()
            return sched
        return minimal_schedule(n, d0, thickness)
    raise ValueError(f"unknown schedule kind {kind!r}")


def strong_rect_markers_multiples(r: GenRect, sched: ConstantScheduleRect,
                                  table: AlphaTable
                                  ) -> tuple[MarkerSet, PackageFamily]:
    """Theorem-3.5 skeleton with the per-package call swapped for multiples.

    Every alpha_{i,j}-progression in direction i through the rectangle
    meets the output, and the pairwise spacing is still >= d_0.
    """
    for i in range(sched.n):
        want = multi_alpha_thickness(sched.n, sched.d0, table.alphas[i])
        if sched.thickness[i] < want:
            raise ValueError("schedule thickness below the alpha table's need")
    family = rect_package_family(r, sched)

    def marker_fn(p: GenRect, axis: int, d0: int) -> MarkerSet:
        return multi_alpha_marker(p, axis, d0, table.alphas[axis])

    markers = materialize_family(family, sched.d0, marker_fn)
    return markers, family
