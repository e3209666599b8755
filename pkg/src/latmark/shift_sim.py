"""Finite simulation of the shift space: torus worlds, tilings, and the
round-by-round marker construction that works across region boundaries.

A world is a torus (coordinates mod L_j) or a window (no wraparound,
with a declared margin excluded from hitting claims).  Regions are kept
unwrapped: the anchor lies inside the world and the high corner may
run past it, wrapping when points are materialized.
"""

from __future__ import annotations

import random
from bisect import bisect_right
from dataclasses import dataclass, field
from itertools import product as iproduct
from math import gcd
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (
    InfeasibleSides,
    InternalInvariant,
    TilingMismatch,
    UnsupportedGenerator,
    WorldTooSmall,
)
from .lattice import GenRect, Interval, core, interval_gap, project_drop, project_keep
from .multiples import AlphaTable, multi_alpha_marker, multi_alpha_thickness
from .rect_markers import (
    MarkerSet,
    PackageFamily,
    SpecialPackage,
    _place_special,
    _subdivide_piece,
    axis_marker,
    lex_sorted,
    package_in_direction,
    rect_minus_rects,
    split_interval_even,
)
from .slanted import corner_packages, slanted_delta


# ---------------------------------------------------------------------------
# Worlds and tilings


@dataclass(frozen=True)
class TorusWorld:
    """A finite n-dimensional world; torus mode wraps every coordinate."""

    n: int
    sides: tuple[int, ...]
    mode: str = "torus"
    margin: int = 0

    def __post_init__(self):
        if self.mode not in ("torus", "window"):
            raise ValueError("mode must be torus or window")
        if any(s < 1 for s in self.sides):
            raise ValueError("world sides must be positive")

    @property
    def torus(self) -> bool:
        return self.mode == "torus"

    def num_cells(self) -> int:
        out = 1
        for s in self.sides:
            out *= s
        return out

    def wrap(self, p: Sequence[int]) -> tuple[int, ...]:
        if self.torus:
            return tuple(int(c) % s for c, s in zip(p, self.sides))
        return tuple(int(c) for c in p)

    def bounding_rect(self) -> GenRect:
        return GenRect(tuple(0 for _ in self.sides),
                       tuple(s - 1 for s in self.sides))


def axis_composition(length: int, cells: int) -> list[int]:
    """Split ``length`` into parts of ``cells`` or ``cells+1``, big parts last.

    Raises InfeasibleSides when no mix works.
    """
    if cells < 1:
        raise ValueError("cells must be positive")
    b = length % cells
    while True:
        rest = length - b * (cells + 1)
        if rest < 0:
            raise InfeasibleSides(f"{length} is not a sum of {cells}s and {cells + 1}s")
        if rest % cells == 0:
            a = rest // cells
            return [cells] * a + [cells + 1] * b
        b += cells


def _boundaries(comp: Sequence[int]) -> list[int]:
    out = [0]
    for c in comp:
        out.append(out[-1] + c)
    return out


@dataclass
class Tiling:
    """A partition of the world into rectangles of near-equal cell counts.

    ``regions`` are unwrapped boxes; torus regions may extend past the
    world side.  Styles: ``grid`` aligns every axis, ``brick`` rotates
    the composition of each non-leading axis by a seeded offset per
    leading-axis slab to force nontrivial face adjacencies.
    """

    world: TorusWorld
    cells: int
    style: str
    seed: int
    regions: list[GenRect]
    axis0_bounds: list[int]
    slab_offsets: list[tuple[int, ...]]
    axis_comps: list[list[int]]
    region_index: dict[tuple, int]

    def region_of(self, cell: Sequence[int]) -> int:
        p = self.world.wrap(cell)
        s = bisect_right(self.axis0_bounds, p[0]) - 1
        key: list[int] = [s]
        for j in range(1, self.world.n):
            off = self.slab_offsets[s][j - 1]
            rel = (p[j] - off) % self.world.sides[j] if self.world.torus else p[j] - off
            key.append(bisect_right(_boundaries(self.axis_comps[j]), rel) - 1)
        return self.region_index[tuple(key)]

    def side_lengths(self) -> set[int]:
        return {r.side(i) for r in self.regions for i in range(self.world.n)}


def build_tiling(world: TorusWorld, cells: int, style: str = "grid",
                 seed: int = 0) -> Tiling:
    """Tile the world with regions of ``cells`` or ``cells+1`` points per side."""
    if style not in ("grid", "brick"):
        raise ValueError("style must be grid or brick")
    comps = [axis_composition(L, cells) for L in world.sides]
    axis0_bounds = _boundaries(comps[0])[:-1]
    slab_count = len(comps[0])
    offsets = []
    for s in range(slab_count):
        if style == "brick" and world.n > 1:
            row = tuple(
                random.Random(f"{seed}:{s}:{j}").randrange(world.sides[j])
                for j in range(1, world.n))
        else:
            row = tuple(0 for _ in range(world.n - 1))
        offsets.append(row)

    regions: list[GenRect] = []
    index: dict[tuple, int] = {}
    b0 = _boundaries(comps[0])
    for s in range(slab_count):
        per_axis: list[list[Interval]] = []
        for j in range(1, world.n):
            start = offsets[s][j - 1]
            ivs = []
            for c in comps[j]:
                ivs.append((start, start + c - 1))
                start += c
            per_axis.append(ivs)
        axis_ranges = [range(len(comps[j])) for j in range(1, world.n)]
        for combo in iproduct(*axis_ranges):
            lo = [b0[s]]
            hi = [b0[s + 1] - 1]
            for j, k in enumerate(combo):
                a, b = per_axis[j][k]
                lo.append(a)
                hi.append(b)
            index[(s, *combo)] = len(regions)
            regions.append(GenRect(tuple(lo), tuple(hi)))
    til = Tiling(world, cells, style, seed, regions, axis0_bounds,
                 offsets, comps, index)
    _check_partition(til)
    return til


def _check_partition(t: Tiling) -> None:
    total = sum(r.num_points() for r in t.regions)
    if total != t.world.num_cells():
        raise InternalInvariant("tiling does not partition the world")


def toroidal_interval_gap(a: Interval, b: Interval, L: int, torus: bool) -> int:
    if not torus:
        return interval_gap(a, b)
    best = interval_gap(a, b)
    for shift in (-L, L):
        best = min(best, interval_gap((a[0] + shift, a[1] + shift), b))
    return best


def toroidal_rect_distance(a: GenRect, b: GenRect, world: TorusWorld) -> int:
    return max(toroidal_interval_gap(a.interval(i), b.interval(i),
                                     world.sides[i], world.torus)
               for i in range(world.n))


# ---------------------------------------------------------------------------
# Region scheduling


@dataclass
class RegionSchedule:
    """Steps of mutually distant regions; every region sits in one step."""

    steps: list[list[int]]
    step_of: dict[int, int]
    method: str

    def validate(self, tiling: Tiling, D1: int) -> Optional[tuple[int, int]]:
        """Return a violating region pair, or None when the schedule is valid."""
        for members in self.steps:
            for i, a in enumerate(members):
                for b in members[i + 1:]:
                    if toroidal_rect_distance(tiling.regions[a],
                                              tiling.regions[b],
                                              tiling.world) <= 2 * D1:
                        return (a, b)
        return None


def schedule_regions(tiling: Tiling, D1: int, method: str = "auto") -> RegionSchedule:
    """Group regions into steps with pairwise distance above 2*D_1.

    ``local`` colors by the region anchor's quotient pattern, which
    depends only on the region itself; ``greedy`` colors the conflict
    graph sequentially.  ``auto`` tries local first and falls back.
    """
    regions = tiling.regions

    def make(assign: dict[int, int], name: str) -> RegionSchedule:
        steps: dict[int, list[int]] = {}
        for idx in range(len(regions)):
            steps.setdefault(assign[idx], []).append(idx)
        ordered = [steps[k] for k in sorted(steps)]
        relab = {idx: s for s, members in enumerate(ordered) for idx in members}
        return RegionSchedule(ordered, relab, name)

    if method in ("auto", "local"):
        cell = tiling.cells
        assign = {}
        for idx, r in enumerate(regions):
            key = 0
            for j in range(tiling.world.n):
                key = key * 5 + (r.lo[j] // cell) % 5
            assign[idx] = key
        sched = make(assign, "local")
        if sched.validate(tiling, D1) is None:
            return sched
        if method == "local":
            raise InternalInvariant("local schedule invalid for this tiling")

    order = sorted(range(len(regions)), key=lambda i: (regions[i].lo, regions[i].hi))
    assign = {}
    for idx in order:
        used = set()
        for jdx, step in assign.items():
            if toroidal_rect_distance(regions[idx], regions[jdx],
                                      tiling.world) <= 2 * D1:
                used.add(step)
        s = 0
        while s in used:
            s += 1
        assign[idx] = s
    return make(assign, "greedy")


# ---------------------------------------------------------------------------
# Shift-space constant schedule


@dataclass(frozen=True)
class ConstantScheduleShift:
    """d_i / N_i / D_1 / D stack for the cross-region construction."""

    n: int
    d0: int
    d: tuple[int, ...]
    N: tuple[int, ...]
    D1: int
    D: int
    thickness: tuple[int, ...]

    def validate(self) -> None:
        n, d0, d, N = self.n, self.d0, self.d, self.N
        base = 2 * d0**n - d0
        if any(t < base for t in self.thickness):
            raise ValueError("thickness below 2*d0^n - d0")
        if not max(self.thickness) < d[n - 1]:
            raise ValueError("d_n must exceed the package thickness")
        for i in range(n - 1):
            if not (d[i] > d[i + 1] and d[i] > 5 * (n - (i + 1)) * d[i + 1]):
                raise ValueError("d sequence inequalities violated")
        if N[0] != 4 ** (n - 1):
            raise ValueError("N_1 != 4^(n-1)")
        for i in range(n - 1):
            want = (4 ** (n - 1) * (2 * N[i] + 1) ** (n - 1)
                    + (n - 1) * 2 ** (n + 1) * N[i] + 5)
            if N[i + 1] != want:
                raise ValueError("shift N recurrence violated")
        if self.D1 != 4 * N[n - 1] * d[0] or self.D != 2 * self.D1:
            raise ValueError("D_1 = 4 N_n d_1 and D = 2 D_1 required")


def _shift_N(n: int) -> tuple[int, ...]:
    N = [4 ** (n - 1)]
    for _ in range(n - 1):
        N.append(4 ** (n - 1) * (2 * N[-1] + 1) ** (n - 1)
                 + (n - 1) * 2 ** (n + 1) * N[-1] + 5)
    return tuple(N)


def _shift_from_ds(n: int, d0: int, ds: list[int],
                   thickness: tuple[int, ...]) -> ConstantScheduleShift:
    N = _shift_N(n)
    D1 = 4 * N[n - 1] * ds[0]
    sched = ConstantScheduleShift(n, d0, tuple(ds), N, D1, 2 * D1, thickness)
    sched.validate()
    return sched


def minimal_shift_schedule(n: int, d0: int,
                           thickness: Optional[Sequence[int]] = None
                           ) -> ConstantScheduleShift:
    base = 2 * d0**n - d0
    thick = tuple(thickness) if thickness is not None else (base,) * n
    ds = [0] * n
    ds[n - 1] = max(thick) + 1
    for i in range(n - 2, -1, -1):
        ds[i] = 5 * (n - (i + 1)) * ds[i + 1] + 1
    return _shift_from_ds(n, d0, ds, thick)


def paper_shift_schedule(n: int, d0: int) -> ConstantScheduleShift:
    ds = [0] * n
    ds[n - 1] = 6 * n * d0**n
    for i in range(n - 2, -1, -1):
        ds[i] = 6 * n * ds[i + 1]
    return _shift_from_ds(n, d0, ds, (2 * d0**n - d0,) * n)


def shift_schedule_for_alphas(n: int, d0: int, table: AlphaTable
                              ) -> ConstantScheduleShift:
    thick = tuple(multi_alpha_thickness(n, d0, table.alphas[i]) for i in range(n))
    return minimal_shift_schedule(n, d0, thick)


# ---------------------------------------------------------------------------
# The cross-region construction


@dataclass
class ShiftBuild:
    """Everything the cross-region construction produced, for verification."""

    world: TorusWorld
    tiling: Tiling
    sched: ConstantScheduleShift
    schedule: RegionSchedule
    families: list[PackageFamily]
    markers: Optional[MarkerSet]
    table: Optional[AlphaTable] = None

    def region_markers(self, idx: int) -> np.ndarray:
        fam = self.families[idx]
        chunks = []
        for i, rnd in enumerate(fam.rounds):
            for p in rnd:
                chunks.append(self._marker_points(p, i))
        pts = np.concatenate(chunks) if chunks else np.empty((0, self.world.n), np.int64)
        if self.world.torus:
            pts = pts % np.asarray(self.world.sides, dtype=np.int64)
        return pts

    def _marker_points(self, p: GenRect, axis: int) -> np.ndarray:
        if self.table is None:
            return axis_marker(p, axis, self.sched.d0).points
        return multi_alpha_marker(p, axis, self.sched.d0,
                                  self.table.alphas[axis]).points

    def membership(self, cell: Sequence[int]) -> bool:
        idx = self.tiling.region_of(cell)
        pts = self.region_markers(idx)
        target = np.asarray(self.world.wrap(cell), dtype=np.int64)
        return bool((pts == target).all(axis=1).any())


def _wrap_shifts(world: TorusWorld) -> list[tuple[int, ...]]:
    if not world.torus:
        return [tuple(0 for _ in range(world.n))]
    return list(iproduct(*[( -L, 0, L) for L in world.sides]))


def _neighbor_images(tiling: Tiling, idx: int, reach: int
                     ) -> list[tuple[int, tuple[int, ...]]]:
    """(region index, wrap shift) pairs whose image lies within ``reach``."""
    world = tiling.world
    me = tiling.regions[idx]
    out = []
    for jdx, other in enumerate(tiling.regions):
        for s in _wrap_shifts(world):
            if jdx == idx and all(c == 0 for c in s):
                continue
            img = other.translate(s)
            gap = max(interval_gap(me.interval(i), img.interval(i))
                      for i in range(world.n))
            if gap < reach:
                out.append((jdx, s))
    return out


def _chunk_interval(iv: Interval, d: int) -> list[Interval]:
    """Cut an interval into pieces of side length at most d."""
    out = []
    a, b = iv
    while b - a > d:
        out.append((a, a + d))
        a += d + 1
    out.append((a, b))
    return out


def _collect_obstacles(tiling: Tiling, families: list[Optional[list[list[GenRect]]]],
                       idx: int, axis: int, d: int, upto_round: int,
                       neighbors) -> list[Interval]:
    """Projections of nearby already-built packages, clipped and chunked.

    Only packages whose projection away from ``axis`` comes within d of
    this region matter for the separation hypothesis; everything else is
    already far enough and collecting it would only spread dependence.
    """
    me = tiling.regions[idx]
    pi_me = project_keep(me, axis)
    sig_me = project_drop(me, axis)
    out: list[Interval] = []
    for jdx, s in neighbors:
        rounds = families[jdx]
        if rounds is None:
            continue
        for ri in range(min(upto_round + 1, len(rounds))):
            for p in rounds[ri]:
                img = p.translate(s)
                sig = project_drop(img, axis)
                if max((interval_gap(sig_me.interval(t), sig.interval(t))
                        for t in range(sig_me.n)), default=0) >= d:
                    continue
                lo = max(pi_me[0], img.lo[axis])
                hi = min(pi_me[1], img.hi[axis])
                lo = max(lo, pi_me[0] - d)
                hi = min(hi, pi_me[1] + d)
                if lo <= hi:
                    out.extend(_chunk_interval((lo, hi), d))
    return out


def _build_region_round(r: GenRect, axis: int, sched: ConstantScheduleShift,
                        rounds: list[list[GenRect]],
                        specials: list[list[SpecialPackage]],
                        extra_obstacles: list[Interval]) -> None:
    """Run one construction round for one region, in place."""
    d = sched.d[axis]
    thick = sched.thickness[axis]
    n = sched.n
    pi = project_keep(r, axis)
    guards = [(pi[0], pi[0] + d), (pi[1] - d, pi[1])]

    if n == 1:
        lo = r.lo[0] + 2 * d
        rounds.append([GenRect((lo,), (lo + thick,))])
        specials.append([])
        return

    if axis == 0:
        per_axis = [split_interval_even(r.lo[j], r.hi[j], 4) for j in range(1, n)]
        pieces = [GenRect(tuple(iv[0] for iv in c), tuple(iv[1] for iv in c))
                  for c in iproduct(*per_axis)]
        J = guards + extra_obstacles
        rounds.append(package_in_direction(r, 0, pieces, J, d, validate=False))
        specials.append([])
        return

    older = [(ri, p) for ri, rnd in enumerate(rounds) for p in rnd]
    older.sort(key=lambda t: (t[0], t[1].lo, t[1].hi))
    new_specials = []
    for ri, p in older:
        tube, special = _place_special(r, p, axis, d, thick)
        new_specials.append(SpecialPackage(special, tube, p, ri))
    J = [project_keep(sp.rect, axis) for sp in new_specials] + guards + extra_obstacles
    carved = rect_minus_rects(project_drop(r, axis),
                              [project_drop(sp.tube, axis) for sp in new_specials])
    limits = [r.side(j) for j in range(n) if j != axis]
    pieces = []
    for piece in sorted(carved, key=lambda p: (p.lo, p.hi)):
        pieces.extend(_subdivide_piece(piece, limits))
    regular = package_in_direction(r, axis, pieces, J, d, validate=False)
    rounds.append(regular + [sp.rect for sp in new_specials])
    specials.append(new_specials)


def strong_shift_markers(world: TorusWorld, tiling: Tiling,
                         sched: ConstantScheduleShift,
                         table: Optional[AlphaTable] = None,
                         materialize: bool = True,
                         materialize_filter: Optional[Callable[[int], bool]] = None
                         ) -> ShiftBuild:
    """Markers over the whole world: spacing >= d_0 and two-sided axis
    hitting within D for every cell (wrap-aware in torus mode).

    Regions are processed round by round; within a round, step by step.
    Each region keeps its packages clear of both region ends (guard
    intervals) and of every already-built nearby package (obstacle
    projections), which is what makes the separation hypotheses hold
    across region boundaries.
    """
    sched.validate()
    lengths = tiling.side_lengths()
    if not lengths <= {sched.D1, sched.D1 + 1}:
        raise TilingMismatch(f"region side lengths {sorted(lengths)} != D1/D1+1")
    if table is not None:
        for i in range(sched.n):
            want = multi_alpha_thickness(sched.n, sched.d0, table.alphas[i])
            if sched.thickness[i] < want:
                raise TilingMismatch("schedule thickness below the alpha table need")

    schedule = schedule_regions(tiling, sched.D1)
    region_order = [idx for step in schedule.steps for idx in step]
    nbrs = {idx: _neighbor_images(tiling, idx, sched.d[0] + 1)
            for idx in range(len(tiling.regions))}

    rounds_by_region: list[Optional[list[list[GenRect]]]] = [None] * len(tiling.regions)
    specials_by_region: list[list[list[SpecialPackage]]] = [[] for _ in tiling.regions]
    for idx in range(len(tiling.regions)):
        rounds_by_region[idx] = []

    for axis in range(sched.n):
        for idx in region_order:
            r = tiling.regions[idx]
            obstacles = _collect_obstacles(tiling, rounds_by_region, idx, axis,
                                           sched.d[axis], axis, nbrs[idx])
            _build_region_round(r, axis, sched, rounds_by_region[idx],
                                specials_by_region[idx], obstacles)

    families = [PackageFamily(sched.n, tiling.regions[idx],
                              rounds_by_region[idx], specials_by_region[idx])
                for idx in range(len(tiling.regions))]
    build = ShiftBuild(world, tiling, sched, schedule, families, None, table)

    if materialize:
        chunks = []
        for idx in range(len(tiling.regions)):
            if materialize_filter is not None and not materialize_filter(idx):
                continue
            chunks.append(build.region_markers(idx))
        pts = np.concatenate(chunks) if chunks else np.empty((0, sched.n), np.int64)
        pts = lex_sorted(pts)
        if len(pts) > 1 and bool((np.diff(pts, axis=0) == 0).all(axis=1).any()):
            raise InternalInvariant("duplicate markers across regions")
        build.markers = MarkerSet(sched.n, pts, sched.d0)
    return build


def strong_shift_markers_multiples(world: TorusWorld, tiling: Tiling,
                                   sched: ConstantScheduleShift,
                                   table: AlphaTable) -> ShiftBuild:
    """Theorem-4.1 machinery with per-axis multiple-step packages."""
    return strong_shift_markers(world, tiling, sched, table=table)


# ---------------------------------------------------------------------------
# General generating sets


@dataclass(frozen=True)
class GeneratorSet:
    """Generators split into axis multiples and full-support diagonals."""

    n: int
    axis_steps: tuple[tuple[int, int], ...]   # (axis, alpha)
    diagonals: tuple[tuple[int, ...], ...]

    @classmethod
    def from_vectors(cls, n: int, gens: Sequence[Sequence[int]]) -> "GeneratorSet":
        axis_steps = []
        diagonals = []
        for g in gens:
            if len(g) != n:
                raise ValueError("generator dimension mismatch")
            support = [i for i, c in enumerate(g) if c != 0]
            if len(support) == 1:
                axis_steps.append((support[0], int(g[support[0]])))
            elif len(support) == n:
                diagonals.append(tuple(int(c) for c in g))
            else:
                raise UnsupportedGenerator(f"support size {len(support)} for {tuple(g)}")
        return cls(n, tuple(axis_steps), tuple(diagonals))

    def vectors(self) -> list[tuple[int, ...]]:
        out = []
        for axis, alpha in self.axis_steps:
            v = [0] * self.n
            v[axis] = alpha
            out.append(tuple(v))
        out.extend(self.diagonals)
        return out


@dataclass
class CoreFiltration:
    """Nested cores K_0 over K_1 over ... per coarse class."""

    mus: tuple[int, ...]
    cores_by_class: list[list[GenRect]]


@dataclass
class GeneralBuild:
    """Output of the general-generator construction."""

    world: TorusWorld
    markers: MarkerSet
    bound: int                       # advertised two-sided step bound B = 2*Delta+1
    delta_scale: int                 # the abstract Delta (class side scale)
    sched: ConstantScheduleShift
    table: AlphaTable
    filtration: CoreFiltration
    coarse: Tiling
    fine_build: ShiftBuild
    x_regions: list[int]


def general_parameters(n: int, gens: GeneratorSet, d0: int
                       ) -> tuple[ConstantScheduleShift, AlphaTable, tuple[int, ...], int]:
    """Schedule, alpha table, core depths, and the class scale Delta."""
    per_axis: dict[int, list[int]] = {}
    for axis, alpha in gens.axis_steps:
        per_axis.setdefault(axis, []).append(alpha)
    table = AlphaTable.for_dimension(n, per_axis)
    sched = shift_schedule_for_alphas(n, d0, table)
    mus = [2 * sched.D1]
    for v in gens.diagonals:
        mus.append(mus[-1] + slanted_delta(n, d0, v))
    total_norm = sum(max(abs(c) for c in v) for v in gens.diagonals)
    need = 2 ** (n + 1) * (mus[-1] + 1) * max(total_norm, 1)
    unit = sched.D1 + 1
    q = 2
    while q * unit <= need:
        q += 2
    return sched, table, tuple(mus), q * unit


def general_world(n: int, gens: GeneratorSet, d0: int,
                  classes_per_axis: int = 2) -> TorusWorld:
    """Smallest torus able to host the coarse tiling with real upper faces."""
    if classes_per_axis < 2:
        raise ValueError("need at least two classes per axis for upper faces")
    _, _, _, delta = general_parameters(n, gens, d0)
    return TorusWorld(n, tuple(classes_per_axis * delta for _ in range(n)))


def general_markers(world: TorusWorld, gens: GeneratorSet, d0: int
                    ) -> GeneralBuild:
    """Markers hit two-sidedly by every generator progression within B.

    The coarse classes are refined into bricks; the axis machinery runs
    on the bricks but only the bricks touching a class's upper faces
    keep their markers.  Each diagonal generator gets corner packages in
    its own shell of the core filtration, per class.
    """
    n = world.n
    sched, table, mus, delta = general_parameters(n, gens, d0)
    unit = sched.D1 + 1
    for L in world.sides:
        if L % delta != 0 or L // delta < 2:
            raise WorldTooSmall(
                f"world side {L} must be a multiple of Delta={delta}, at least 2")

    coarse = build_tiling(world, delta, style="grid", seed=0)
    fine = build_tiling(world, unit, style="grid", seed=0)

    # bricks meeting an upper face of some coarse class
    x_idx: set[int] = set()
    per_class_top = delta // unit - 1
    for idx, br in enumerate(fine.regions):
        for i in range(n):
            if (br.lo[i] // unit) % (delta // unit) == per_class_top:
                x_idx.add(idx)
                break
    x_regions = sorted(x_idx)

    fine_build = strong_shift_markers(world, fine, sched, table=table,
                                      materialize=True,
                                      materialize_filter=lambda i: i in x_idx)
    chunks = [fine_build.markers.points]

    cores_by_class: list[list[GenRect]] = []
    for cls in coarse.regions:
        cores = [core(cls, mu) for mu in mus]
        cores_by_class.append(cores)
        for k, v in enumerate(gens.diagonals, start=1):
            cp = corner_packages(cores[k], v, d0)
            pts = cp.markers.points
            if world.torus:
                pts = pts % np.asarray(world.sides, dtype=np.int64)
            chunks.append(pts)

    pts = lex_sorted(np.concatenate(chunks))
    if len(pts) > 1 and bool((np.diff(pts, axis=0) == 0).all(axis=1).any()):
        raise InternalInvariant("duplicate markers between components")
    markers = MarkerSet(n, pts, d0)
    bound = 2 * delta + 1
    filtration = CoreFiltration(mus, cores_by_class)
    return GeneralBuild(world, markers, bound, delta, sched, table,
                        filtration, coarse, fine_build, x_regions)


# ---------------------------------------------------------------------------
# Core hitting check (the Delta-versus-delta inequality, finitely)


def hitting_check(world: TorusWorld, v: Sequence[int], delta: int, Delta: int,
                  style: str = "grid", seed: int = 0):
    """Walk every cell along v and report the worst |a| reaching a core.

    The claim: when Delta > 2^(n+1) (delta+1) ||v||, some a in
    [-Delta/2, Delta/2] lands in the delta-core of a coarse region.  The
    check runs regardless and reports failures when the bound is not met.
    """
    from .verify import Report  # local import: verify stays construction-free

    til = build_tiling(world, Delta + 1, style=style, seed=seed)
    cores = []
    for r in til.regions:
        try:
            cores.append(core(r, delta))
        except Exception:
            continue
    half = Delta // 2
    worst = -1
    failures = []
    sides = world.sides
    for cell in iproduct(*[range(L) for L in sides]):
        ok = False
        for a in range(0, half + 1):
            for sgn in ((1,) if a == 0 else (1, -1)):
                p = tuple((c + sgn * a * vv) % L for c, vv, L in zip(cell, v, sides))
                if any(cr.contains(_unwrap_into(p, cr, sides)) for cr in cores):
                    worst = max(worst, a)
                    ok = True
                    break
            if ok:
                break
        if not ok:
            failures.append(cell)
            if len(failures) >= 5:
                break
    passed = not failures
    return Report("core-hitting", passed,
                  {"worst_abs_a": worst, "bound": half,
                   "formula_ok": Delta > 2 ** (world.n + 1) * (delta + 1) * max(abs(c) for c in v)},
                  failures)


def _unwrap_into(p: Sequence[int], r: GenRect, sides: Sequence[int]) -> tuple[int, ...]:
    out = []
    for c, lo, hi, L in zip(p, r.lo, r.hi, sides):
        if c < lo:
            c += L
        out.append(c)
    return tuple(out)
