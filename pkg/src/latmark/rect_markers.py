"""Strong marker sets inside a single n-dimensional rectangle.

The construction stack: one-direction markers on a rectangle, spaced
subintervals, packaging a collection of lower-dimensional pieces into
well-separated boxes, grid decomposition of a rectangle minus boxes,
and the inductive round-by-round assembly that yields a marker set
hitting every axis line with pairwise spacing d_0.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field
from itertools import product as iproduct
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from .errors import InternalInvariant, TooShort, TooSmall, TooThin
from .lattice import (
    GenRect,
    Interval,
    insert_axis,
    project_drop,
    project_keep,
    rect_distance,
    split_interval_even,
)

MATERIALIZE_CAP = 50_000_000  # max points a single call will enumerate


# ---------------------------------------------------------------------------
# Marker sets


@dataclass
class MarkerSet:
    """A sparse set of lattice points with its claimed minimum spacing.

    Points are kept as an (m, n) int64 array in lexicographic order so
    identical constructions serialize identically.  ``hit_bounds`` maps a
    direction label to the worst-case (forward, backward) offsets once a
    verifier has measured them.
    """

    n: int
    points: np.ndarray
    spacing: int
    hit_bounds: dict = field(default_factory=dict)

    @classmethod
    def from_points(cls, n: int, pts: Iterable[Sequence[int]], spacing: int) -> "MarkerSet":
        arr = np.asarray(list(pts), dtype=np.int64)
        if arr.size == 0:
            arr = arr.reshape(0, n)
        return cls(n, lex_sorted(arr), spacing)

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self) -> Iterator[tuple[int, ...]]:
        for row in self.points:
            yield tuple(int(v) for v in row)

    def as_set(self) -> set[tuple[int, ...]]:
        return set(iter(self))


def lex_sorted(arr: np.ndarray) -> np.ndarray:
    if len(arr) == 0:
        return arr
    order = np.lexsort(tuple(arr[:, k] for k in range(arr.shape[1] - 1, -1, -1)))
    return arr[order]


# ---------------------------------------------------------------------------
# Constant schedules


@dataclass(frozen=True)
class ConstantScheduleRect:
    """The d_i / N_i / D_0 parameter stack for the in-rectangle construction.

    ``d[i]`` is d_{i+1} in 1-based speak (d[0] = d_1 is the largest).
    ``thickness[i]`` is the minimum side the round-(i+1) packages need in
    their marker direction; the plain construction uses 2*d_0^n - d_0
    everywhere, the axis-multiples variant raises it per direction.
    """

    n: int
    d0: int
    d: tuple[int, ...]
    N: tuple[int, ...]
    D0: int
    thickness: tuple[int, ...]

    def validate(self) -> None:
        n, d0, d, N = self.n, self.d0, self.d, self.N
        if n < 1 or d0 < 1:
            raise ValueError("n and d_0 must be positive")
        if len(d) != n or len(N) != n:
            raise ValueError("schedule arrays must have length n")
        base = 2 * d0**n - d0
        if any(t < base for t in self.thickness):
            raise ValueError("thickness below 2*d0^n - d0")
        if not max(self.thickness) < d[n - 1]:
            raise ValueError("d_n must exceed the package thickness")
        for i in range(n - 1):
            if not d[i] > d[i + 1]:
                raise ValueError("d_i must strictly decrease")
            if not d[i] > 5 * (n - (i + 1)) * d[i + 1]:
                raise ValueError(f"d_{i+1} <= 5(n-{i+1})d_{i+2}")
        if N[0] != 4 ** (n - 1):
            raise ValueError("N_1 != 4^(n-1)")
        for i in range(n - 1):
            want = 4 ** (n - 1) * (2 * N[i] + 1) ** (n - 1) + 2 * N[i] + 1
            if N[i + 1] != want:
                raise ValueError(f"N_{i+2} recurrence violated")
        if self.D0 != 4 * N[n - 1] * d[0]:
            raise ValueError("D_0 != 4 N_n d_1")


def _rect_N(n: int) -> tuple[int, ...]:
    N = [4 ** (n - 1)]
    for _ in range(n - 1):
        N.append(4 ** (n - 1) * (2 * N[-1] + 1) ** (n - 1) + 2 * N[-1] + 1)
    return tuple(N)


def _schedule_from_ds(n: int, d0: int, ds: list[int],
                      thickness: tuple[int, ...]) -> ConstantScheduleRect:
    N = _rect_N(n)
    sched = ConstantScheduleRect(n, d0, tuple(ds), N, 4 * N[n - 1] * ds[0], thickness)
    sched.validate()
    return sched


def paper_schedule(n: int, d0: int) -> ConstantScheduleRect:
    """The explicit schedule d_n = 6n d_0^n, d_i = 6n d_{i+1}."""
    ds = [0] * n
    ds[n - 1] = 6 * n * d0**n
    for i in range(n - 2, -1, -1):
        ds[i] = 6 * n * ds[i + 1]
    base = 2 * d0**n - d0
    return _schedule_from_ds(n, d0, ds, (base,) * n)


def minimal_schedule(n: int, d0: int,
                     thickness: Optional[Sequence[int]] = None) -> ConstantScheduleRect:
    """Smallest integers satisfying the schedule inequalities; for desk runs."""
    base = 2 * d0**n - d0
    thick = tuple(thickness) if thickness is not None else (base,) * n
    ds = [0] * n
    ds[n - 1] = max(thick) + 1
    for i in range(n - 2, -1, -1):
        ds[i] = 5 * (n - (i + 1)) * ds[i + 1] + 1
    return _schedule_from_ds(n, d0, ds, thick)


# ---------------------------------------------------------------------------
# One-direction markers (the induction base of everything else)


def _axis_marker_points(r: GenRect, axis: int, d: int) -> np.ndarray:
    """Marker points anchored at the low corner, one per line parallel to axis.

    The offset along ``axis`` for the slice z = (z_j) of the remaining
    coordinates is sum_m 2 (z_m mod d) d^m with the other axes taken in
    ascending order; the largest offset is 2d^n - 2d, so any rectangle
    with at least 2d^n - d cells in the marker direction contains the set.
    """
    n = r.n
    others = [j for j in range(n) if j != axis]
    shape = tuple(r.cells(j) for j in others)
    total = int(np.prod(shape, dtype=np.int64)) if others else 1
    if total > MATERIALIZE_CAP:
        raise InternalInvariant(f"refusing to materialize {total} marker points")
    pts = np.empty((total, n), dtype=np.int64)
    offset = np.zeros(shape if others else (1,), dtype=np.int64)
    for m, j in enumerate(others, start=1):
        z = np.arange(r.cells(j), dtype=np.int64)
        reshaped = _axis_shape(len(others), m - 1)
        pts[:, j] = r.lo[j] + np.broadcast_to(z.reshape(reshaped), shape).ravel()
        offset = offset + (2 * (z % d) * d**m).reshape(reshaped)
    pts[:, axis] = r.lo[axis] + np.broadcast_to(offset, shape if others else (1,)).ravel()
    return pts


def _axis_shape(ndim: int, pos: int) -> tuple[int, ...]:
    shape = [1] * ndim
    shape[pos] = -1
    return tuple(shape)


def axis_marker(r: GenRect, axis: int, d: int) -> MarkerSet:
    """Markers meeting every line of r parallel to ``axis``, spacing >= d.

    Requires side length at least 2d^n - d in the marker direction; on
    longer rectangles the construction stays anchored at the low end,
    which leaves the hitting property intact because lines span the
    whole rectangle.
    """
    if d < 1:
        raise ValueError("d must be positive")
    need = 2 * d**r.n - d
    if r.side(axis) < need:
        raise TooThin(f"side {r.side(axis)} < {need} in direction {axis}")
    pts = _axis_marker_points(r, axis, d)
    return MarkerSet(r.n, lex_sorted(pts), d)


# ---------------------------------------------------------------------------
# Spacing subintervals and packaging


def _merge_spans(obstacles: Sequence[Interval]) -> list[Interval]:
    if not obstacles:
        return []
    spans = sorted(obstacles)
    merged = [list(spans[0])]
    for a, b in spans[1:]:
        if a <= merged[-1][1] + 1:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    return [(a, b) for a, b in merged]


def space_intervals(I: Interval, J: Sequence[Interval], d: int, k: int) -> list[Interval]:
    """k subintervals of I, length d each, pairwise >= d apart and >= d from J.

    The lattice points of I are cut into consecutive runs of exactly 3d
    points (remainder discarded); a run is clean when it misses every
    member of J.  Each obstacle meets at most two runs, so a length of
    3d(2|J|+k+1) guarantees k clean runs; the middle d+1 points of the
    k lowest clean runs are returned.
    """
    if d < 1 or k < 0:
        raise ValueError("d must be positive and k non-negative")
    m = len(J)
    for a, b in J:
        if b - a > d:
            raise ValueError(f"obstacle [{a},{b}] longer than d={d}")
    lo, hi = I
    if hi - lo < 3 * d * (2 * m + k + 1):
        raise TooShort(f"interval length {hi - lo} < {3 * d * (2 * m + k + 1)}")
    if k == 0:
        return []
    spans = _merge_spans(J)
    starts = [a for a, _ in spans]
    run_count = (hi - lo + 1) // (3 * d)
    out: list[Interval] = []
    t = 0
    while t < run_count and len(out) < k:
        s = lo + 3 * d * t
        e = s + 3 * d - 1
        idx = bisect_right(starts, e) - 1
        if idx >= 0 and spans[idx][1] >= s:
            # dirty run; jump past the obstacle span that covers it
            t = (spans[idx][1] - lo) // (3 * d) + 1
            continue
        out.append((s + d, s + 2 * d))
        t += 1
    if len(out) < k:
        raise InternalInvariant("clean-run count fell short despite the length bound")
    return out


def package_in_direction(r: GenRect, axis: int, pieces: Sequence[GenRect],
                         J: Sequence[Interval], d: int,
                         validate: bool = True) -> list[GenRect]:
    """Lift (n-1)-dimensional pieces into pairwise-separated boxes in r.

    Pieces are sorted lexicographically and paired with the spaced
    intervals in ascending order, so the assignment is deterministic.
    ``validate=False`` skips the quadratic disjointness check for callers
    whose pieces are disjoint by construction (grid decompositions).
    """
    sigma = project_drop(r, axis)
    ordered = sorted(pieces, key=lambda p: (p.lo, p.hi))
    if validate:
        for p in ordered:
            if not sigma.contains_rect(p):
                raise ValueError("piece not contained in the projected rectangle")
        for i, a in enumerate(ordered):
            for b in ordered[i + 1:]:
                if a.intersects(b):
                    raise ValueError("pieces must be pairwise disjoint")
    ks = space_intervals(project_keep(r, axis), J, d, len(ordered))
    return [insert_axis(p, axis, iv) for p, iv in zip(ordered, ks)]


# ---------------------------------------------------------------------------
# Rectangle-minus-rectangles decomposition


def rect_minus_rects(r: GenRect, s_list: Sequence[GenRect]) -> list[GenRect]:
    """Pairwise disjoint pieces covering r minus the union of s_list.

    The cut lines of all projections split r into a grid of at most
    (2L+1)^n atoms; exactly the atoms disjoint from every s survive.
    """
    for s in s_list:
        if not r.contains_rect(s):
            raise ValueError("subtracted rectangle not contained in r")
    n = r.n
    bounds: list[list[int]] = []
    for i in range(n):
        cuts = {r.lo[i]}
        for s in s_list:
            cuts.add(s.lo[i])
            if s.hi[i] + 1 <= r.hi[i]:
                cuts.add(s.hi[i] + 1)
        bounds.append(sorted(cuts))
    atom_ivs = []
    for i in range(n):
        cs = bounds[i]
        atom_ivs.append([(cs[j], (cs[j + 1] - 1) if j + 1 < len(cs) else r.hi[i])
                         for j in range(len(cs))])
    shape = tuple(len(a) for a in atom_ivs)
    covered = np.zeros(shape, dtype=bool)
    for s in s_list:
        sl = []
        for i in range(n):
            cs = bounds[i]
            a = bisect_right(cs, s.lo[i]) - 1
            b = bisect_right(cs, s.hi[i]) - 1
            sl.append(slice(a, b + 1))
        covered[tuple(sl)] = True
    out = []
    for idx in np.ndindex(shape):
        if not covered[idx]:
            lo = tuple(atom_ivs[i][idx[i]][0] for i in range(n))
            hi = tuple(atom_ivs[i][idx[i]][1] for i in range(n))
            out.append(GenRect(lo, hi))
    return out


# ---------------------------------------------------------------------------
# The full in-rectangle construction


@dataclass(frozen=True)
class SpecialPackage:
    """A round-(i+1) package placed inside the tube around an older package."""

    rect: GenRect
    tube: GenRect
    source: GenRect
    source_round: int


@dataclass
class PackageFamily:
    """Per-round package collections produced by the inductive construction.

    ``rounds[i]`` holds every package whose markers run in direction i;
    ``specials[i]`` records tube provenance for the packages that were
    placed next to an older package rather than on fresh ground.
    """

    n: int
    rect: GenRect
    rounds: list[list[GenRect]]
    specials: list[list[SpecialPackage]]

    def all_packages(self) -> list[tuple[int, GenRect]]:
        return [(i, p) for i, rnd in enumerate(self.rounds) for p in rnd]

    def q_sizes(self) -> list[int]:
        sizes = []
        total = 0
        for rnd in self.rounds:
            total += len(rnd)
            sizes.append(total)
        return sizes


def _subdivide_piece(piece: GenRect, limits: Sequence[int]) -> list[GenRect]:
    """Split a piece so every side is at most a quarter of the host side."""
    parts_per_axis = []
    for j in range(piece.n):
        cells = piece.cells(j)
        for q in (1, 2, 3, 4):
            top = -(-cells // q) - 1  # side of the largest part
            if 4 * top <= limits[j]:
                parts_per_axis.append(split_interval_even(piece.lo[j], piece.hi[j], q))
                break
        else:
            raise InternalInvariant("quartering failed to reach the size bound")
    if piece.n == 0:
        return [GenRect((), ())]
    out = []
    for combo in iproduct(*parts_per_axis):
        lo = tuple(iv[0] for iv in combo)
        hi = tuple(iv[1] for iv in combo)
        out.append(GenRect(lo, hi))
    return out


def _place_special(host: GenRect, pkg: GenRect, axis: int, d: int,
                   thick: int) -> tuple[GenRect, GenRect]:
    """Tube around pkg clipped to host, plus the special package inside it."""
    tube_lo = tuple(max(a - 2 * d, h) for a, h in zip(pkg.lo, host.lo))
    tube_hi = tuple(min(b + 2 * d, h) for b, h in zip(pkg.hi, host.hi))
    tube = GenRect(tube_lo, tube_hi)
    above = (pkg.hi[axis] + d, pkg.hi[axis] + d + thick)
    below = (pkg.lo[axis] - d - thick, pkg.lo[axis] - d)
    if above[1] <= host.hi[axis]:
        iv = above
    elif below[0] >= host.lo[axis]:
        iv = below
    else:
        raise InternalInvariant("no room for a special package on either side")
    special = insert_axis(project_drop(tube, axis), axis, iv)
    return tube, special


def rect_package_family(r: GenRect, sched: ConstantScheduleRect) -> PackageFamily:
    """Run the n rounds of packaging for a rectangle with sides >= D_0."""
    sched.validate()
    n = sched.n
    if r.n != n:
        raise ValueError("rectangle dimension does not match the schedule")
    for i in range(n):
        if r.side(i) < sched.D0:
            raise TooSmall(f"side {r.side(i)} < D_0 = {sched.D0}")

    rounds: list[list[GenRect]] = []
    specials: list[list[SpecialPackage]] = []

    if n == 1:
        # Degenerate induction: a single prefix package serves the only line.
        pkg = GenRect((r.lo[0],), (r.lo[0] + sched.thickness[0],))
        rounds.append([pkg])
        specials.append([])
        return PackageFamily(n, r, rounds, specials)

    # Round 1: quarter the projection and package along axis 0.
    sigma_axes = list(range(1, n))
    per_axis = [split_interval_even(r.lo[j], r.hi[j], 4) for j in sigma_axes]
    quarters = [GenRect(tuple(iv[0] for iv in combo), tuple(iv[1] for iv in combo))
                for combo in iproduct(*per_axis)]
    rounds.append(package_in_direction(r, 0, quarters, [], sched.d[0], validate=False))
    specials.append([])

    for i in range(1, n):
        d = sched.d[i]
        thick = sched.thickness[i]
        older = [(ri, p) for ri, rnd in enumerate(rounds) for p in rnd]
        older.sort(key=lambda t: (t[0], t[1].lo, t[1].hi))
        new_specials = []
        for ri, p in older:
            tube, special = _place_special(r, p, i, d, thick)
            new_specials.append(SpecialPackage(special, tube, p, ri))
        J = [project_keep(sp.rect, i) for sp in new_specials]
        carved = rect_minus_rects(project_drop(r, i),
                                  [project_drop(sp.tube, i) for sp in new_specials])
        limits = [r.side(j) for j in range(n) if j != i]
        pieces = []
        for piece in sorted(carved, key=lambda p: (p.lo, p.hi)):
            pieces.extend(_subdivide_piece(piece, limits))
        regular = package_in_direction(r, i, pieces, J, d, validate=False)
        rounds.append(regular + [sp.rect for sp in new_specials])
        specials.append(new_specials)

    return PackageFamily(n, r, rounds, specials)


def materialize_family(family: PackageFamily, d0: int,
                       marker_fn=None) -> MarkerSet:
    """Union of per-package one-direction markers, one call per package.

    ``marker_fn(package, axis, d0)`` defaults to :func:`axis_marker`; the
    axis-multiples construction substitutes its own per-direction call.
    """
    if marker_fn is None:
        marker_fn = axis_marker
    chunks = []
    for i, rnd in enumerate(family.rounds):
        for p in rnd:
            chunks.append(marker_fn(p, i, d0).points)
    pts = np.concatenate(chunks) if chunks else np.empty((0, family.n), dtype=np.int64)
    pts = lex_sorted(pts)
    if len(pts) > 1 and bool((np.diff(pts, axis=0) == 0).all(axis=1).any()):
        raise InternalInvariant("duplicate marker points across packages")
    return MarkerSet(family.n, pts, d0)


def strong_rect_markers(r: GenRect, sched: ConstantScheduleRect
                        ) -> tuple[MarkerSet, PackageFamily]:
    """Markers in r with spacing >= d_0 hitting every axis line (all axes)."""
    family = rect_package_family(r, sched)
    markers = materialize_family(family, sched.d0)
    return markers, family
