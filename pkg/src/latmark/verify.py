"""Independent checkers for every property the constructions claim.

Each checker recomputes its verdict from the raw data (marker arrays,
rectangle lists, colorings) without calling back into construction
code, so a construction bug cannot hide itself.  Checks are exact; the
large-world paths replace per-cell walks with per-line or per-orbit gap
analysis, which decides the same predicate.
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from itertools import product as iproduct
from math import gcd, inf
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import SearchCapExceeded
from .lattice import GenRect, chebyshev, interval_gap, project_drop
from .rect_markers import ConstantScheduleRect, MarkerSet, PackageFamily
from .shift_sim import ShiftBuild, Tiling, TorusWorld, toroidal_rect_distance


@dataclass
class Report:
    """Structured verdict: name, pass flag, worst-case numbers, witnesses."""

    check: str
    passed: bool
    worst: dict = field(default_factory=dict)
    witness: list = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.passed


# ---------------------------------------------------------------------------
# Spacing


def check_spacing(m: MarkerSet, d: int, world: Optional[TorusWorld] = None) -> Report:
    """All-pairs minimum Chebyshev distance via d-cell bucketing.

    Only points in neighboring buckets can be closer than d, so the scan
    is exact.  With a torus world the metric wraps; bucket adjacency
    wraps with it.
    """
    pts = m.points
    if len(pts) <= 1:
        return Report("spacing", True, {"min_distance": inf, "required": d})
    arr = np.asarray(pts, dtype=np.int64)
    if len(np.unique(arr, axis=0)) != len(arr):
        return Report("spacing", False, {"min_distance": 0, "required": d},
                      [_first_duplicate(arr)])
    if d <= 1:
        return Report("spacing", True, {"min_distance": 1, "required": d})

    n = arr.shape[1]
    sides = world.sides if world is not None and world.torus else None
    bucket_counts = None
    if sides is not None:
        bucket_counts = [max(1, -(-L // d)) for L in sides]
    buckets: dict[tuple, list[int]] = {}
    cell = arr // d
    for idx in range(len(arr)):
        buckets.setdefault(tuple(int(c) for c in cell[idx]), []).append(idx)

    best = inf
    best_pair = None
    offsets = list(iproduct(*([(-1, 0, 1)] * n)))
    for key, members in buckets.items():
        for off in offsets:
            if sides is None:
                nkey = tuple(k + o for k, o in zip(key, off))
            else:
                nkey = tuple((k + o) % bc for k, o, bc in zip(key, off, bucket_counts))
            if nkey < key:
                continue
            other = buckets.get(nkey)
            if not other:
                continue
            same = nkey == key
            for ai, i in enumerate(members):
                js = members[ai + 1:] if same else other
                for j in js:
                    dd = _pair_distance(arr[i], arr[j], sides)
                    if dd < best:
                        best = dd
                        best_pair = (tuple(int(v) for v in arr[i]),
                                     tuple(int(v) for v in arr[j]))
    passed = best >= d
    return Report("spacing", passed, {"min_distance": best, "required": d},
                  [] if passed else [best_pair])


def _pair_distance(a: np.ndarray, b: np.ndarray, sides) -> int:
    worst = 0
    for k in range(len(a)):
        diff = abs(int(a[k]) - int(b[k]))
        if sides is not None:
            diff = min(diff, sides[k] - diff)
        worst = max(worst, diff)
    return worst


def _first_duplicate(arr: np.ndarray):
    seen = set()
    for row in arr:
        t = tuple(int(v) for v in row)
        if t in seen:
            return t
        seen.add(t)
    return None


# ---------------------------------------------------------------------------
# Axis hitting


def _group_positions(pts: np.ndarray, axis: int) -> dict[tuple, np.ndarray]:
    """Marker positions along ``axis`` grouped by the remaining coordinates."""
    n = pts.shape[1]
    others = [j for j in range(n) if j != axis]
    if len(pts) == 0:
        return {}
    order = np.lexsort((pts[:, axis],) + tuple(pts[:, j] for j in reversed(others)))
    sorted_pts = pts[order]
    keys = sorted_pts[:, others]
    change = np.ones(len(sorted_pts), dtype=bool)
    change[1:] = (np.diff(keys, axis=0) != 0).any(axis=1)
    starts = np.flatnonzero(change)
    ends = np.append(starts[1:], len(sorted_pts))
    groups = {}
    for s, e in zip(starts, ends):
        key = tuple(int(v) for v in keys[s])
        groups[key] = np.sort(sorted_pts[s:e, axis])
    return groups


def check_axis_hitting(m: MarkerSet, domain, axis: int,
                       bound: Optional[int] = None,
                       interior: Optional[GenRect] = None) -> Report:
    """Every line parallel to ``axis`` is served; optionally within ``bound``.

    Flat domains demand a marker somewhere on each line (and two-sided
    offsets at most ``bound`` for every interior cell when given); torus
    worlds measure circular gaps, which bounds the offsets for every
    cell at once.
    """
    pts = m.points
    groups = _group_positions(pts, axis)

    if isinstance(domain, TorusWorld) and domain.torus:
        L = domain.sides[axis]
        other_sides = [domain.sides[j] for j in range(domain.n) if j != axis]
        expected = 1
        for s in other_sides:
            expected *= s
        missing = expected - len(groups)
        if missing:
            return Report("axis-hitting", False,
                          {"axis": axis, "lines_missing": missing}, [])
        worst = 0
        worst_line = None
        for key, pos in groups.items():
            if len(pos) == 1:
                gap = L - 1
            else:
                diffs = np.diff(pos)
                gap = max(int(diffs.max()), int(pos[0] + L - pos[-1])) - 1
            if gap > worst:
                worst, worst_line = gap, key
        passed = bound is None or worst <= bound
        return Report("axis-hitting", passed,
                      {"axis": axis, "worst_offset": worst, "bound": bound},
                      [] if passed else [worst_line])

    r: GenRect = domain.bounding_rect() if isinstance(domain, TorusWorld) else domain
    sigma = project_drop(r, axis)
    if sigma.num_points() > 80_000_000:
        raise SearchCapExceeded("too many lines to enumerate exactly")
    inter = interior if interior is not None else r
    missing = []
    worst = 0
    worst_line = None
    seen = 0
    for key in sigma.points():
        pos = groups.get(key)
        if pos is None or len(pos) == 0:
            missing.append(key)
            if len(missing) >= 5:
                break
            continue
        seen += 1
        if bound is not None:
            ilo, ihi = inter.lo[axis], inter.hi[axis]
            w = _flat_line_worst(pos, ilo, ihi)
            if w > worst:
                worst, worst_line = w, key
    if missing:
        return Report("axis-hitting", False,
                      {"axis": axis, "lines_missing": len(missing)}, missing)
    passed = bound is None or worst <= bound
    return Report("axis-hitting", passed,
                  {"axis": axis, "worst_offset": worst if bound is not None else 0,
                   "bound": bound},
                  [] if passed else [worst_line])


def _flat_line_worst(pos: np.ndarray, ilo: int, ihi: int) -> int:
    """Worst two-sided offset for cells in [ilo, ihi] on a flat line."""
    if pos[0] > ilo or pos[-1] < ihi:
        return 10**18  # some interior cell has no marker on one side
    worst = 0
    lo_i = bisect_right(pos, ilo) - 1
    hi_i = bisect_left(pos, ihi)
    for k in range(lo_i, hi_i):
        gap = int(pos[k + 1]) - int(pos[k])
        span_lo = max(int(pos[k]) + 1, ilo)
        span_hi = min(int(pos[k + 1]) - 1, ihi)
        if span_lo > span_hi:
            continue
        worst = max(worst, span_hi - int(pos[k]), int(pos[k + 1]) - span_lo)
    return worst


# ---------------------------------------------------------------------------
# General-direction hitting


def _egcd(a: int, b: int) -> tuple[int, int, int]:
    if b == 0:
        return a, 1, 0
    g, x, y = _egcd(b, a % b)
    return g, y, x - (a // b) * y


def _modinv(a: int, m: int) -> int:
    g, x, _ = _egcd(a % m, m)
    if g != 1:
        raise ValueError("not invertible")
    return x % m


def check_general_hitting(m: MarkerSet, domain, g: Sequence[int],
                          bound: Optional[int] = None) -> Report:
    """Two-sided hitting along the progression x + a*g for every cell.

    Flat rectangles hash lines exactly; torus worlds reduce to per-orbit
    circular gap analysis (closed-form orbit labels, so enormous worlds
    never get enumerated cell by cell).
    """
    if all(c == 0 for c in g):
        raise ValueError("generator must be non-zero")
    if isinstance(domain, TorusWorld) and domain.torus:
        return _general_hitting_torus(m, domain, tuple(g), bound)
    return _general_hitting_rect(m, domain, tuple(g), bound)


def _general_hitting_rect(m: MarkerSet, r: GenRect, g: tuple[int, ...],
                          bound: Optional[int]) -> Report:
    i0 = next(j for j, c in enumerate(g) if c != 0)
    lines: dict[tuple, list[int]] = {}
    for p in m:
        key, t = _line_key_flat(p, g, i0)
        lines.setdefault(key, []).append(t)
    for v in lines.values():
        v.sort()
    if r.num_points() > 5_000_000:
        raise SearchCapExceeded("flat general hitting capped; use a torus world")
    worst = 0
    misses = []
    for cell in r.points():
        key, t = _line_key_flat(cell, g, i0)
        pos = lines.get(key)
        if not pos:
            misses.append(cell)
            if len(misses) >= 5:
                break
            continue
        j = bisect_left(pos, t)
        fwd = pos[j] - t if j < len(pos) else None
        bwd = t - pos[j - 1] if j > 0 else None
        if fwd is None or bwd is None:
            misses.append(cell)
            if len(misses) >= 5:
                break
            continue
        worst = max(worst, fwd, bwd)
    if misses:
        return Report("general-hitting", False,
                      {"generator": g, "misses": len(misses)}, misses)
    passed = bound is None or worst <= bound
    return Report("general-hitting", passed,
                  {"generator": g, "worst_steps": worst, "bound": bound},
                  [])


def _line_key_flat(p: Sequence[int], g: tuple[int, ...], i0: int):
    crosses = tuple(g[j] * p[i0] - g[i0] * p[j] for j in range(len(g)) if j != i0)
    t, rem = divmod(p[i0], g[i0])
    return crosses + (rem,), t


def _orbit_labels(pts: np.ndarray, g: tuple[int, ...], sides: Sequence[int]
                  ) -> tuple[np.ndarray, np.ndarray, int]:
    """Canonical (orbit label, position, orbit length) for torus progressions.

    Axis by axis (highest first), each point is slid backwards along g
    until the current coordinate reaches the least member of its residue
    class; the slide counts accumulate into a position and the leftover
    step vector T_axis * g acts on the remaining axes.  Points on one
    orbit end at the same label with positions differing by their
    separation mod the orbit length.
    """
    n = len(g)
    sides_arr = np.asarray(sides, dtype=np.int64)
    cur = pts % sides_arr
    g_cur = [int(c) for c in g]
    t_total = np.zeros(len(pts), dtype=np.int64)
    multiplier = 1
    for axis in range(n - 1, -1, -1):
        L = sides[axis]
        g_eff = g_cur[axis] % L
        if g_eff == 0:
            continue
        gg = gcd(g_eff, L)
        T_axis = L // gg
        if T_axis == 1:
            continue
        inv = _modinv(g_eff // gg, T_axis)
        col = cur[:, axis]
        steps = (((col - col % gg) // gg) * inv) % T_axis
        cur = (cur - steps[:, None] * np.asarray(g_cur, dtype=np.int64)) % sides_arr
        t_total = t_total + multiplier * steps
        multiplier *= T_axis
        g_cur = [c * T_axis for c in g_cur]
    return cur, t_total % multiplier, multiplier


def _general_hitting_torus(m: MarkerSet, world: TorusWorld, g: tuple[int, ...],
                           bound: Optional[int]) -> Report:
    """Orbit-label every marker, then bound the circular gap per orbit."""
    n = world.n
    pts = m.points
    sides = world.sides
    base, t_pos, T = _orbit_labels(pts, g, sides)
    total_orbits = world.num_cells() // T
    order = np.lexsort((t_pos,) + tuple(base[:, k] for k in range(n - 1, -1, -1)))
    base_s = base[order]
    t_s = t_pos[order]
    change = np.ones(len(base_s), dtype=bool)
    if len(base_s) > 1:
        change[1:] = (np.diff(base_s, axis=0) != 0).any(axis=1)
    starts = np.flatnonzero(change)
    ends = np.append(starts[1:], len(base_s))
    if len(starts) != total_orbits:
        return Report("general-hitting", False,
                      {"generator": g, "orbits_missing": int(total_orbits - len(starts)),
                       "orbits_expected": int(total_orbits)}, [])
    worst = 0
    worst_orbit = None
    for s, e in zip(starts, ends):
        pos = np.sort(t_s[s:e])
        if len(pos) == 1:
            gap = T - 1
        else:
            diffs = np.diff(pos)
            gap = max(int(diffs.max()), int(pos[0] + T - pos[-1])) - 1
        if gap > worst:
            worst = gap
            worst_orbit = tuple(int(v) for v in base_s[s])
    passed = bound is None or worst <= bound
    return Report("general-hitting", passed,
                  {"generator": g, "worst_steps": worst, "bound": bound,
                   "orbit_length": int(T), "orbits": int(total_orbits)},
                  [] if passed else [worst_orbit])


# ---------------------------------------------------------------------------
# Coloring


def check_coloring(world: TorusWorld, generators: Sequence[Sequence[int]],
                   colors: Sequence[np.ndarray],
                   num_colors: Optional[int] = None) -> Report:
    """Proper edge coloring: all edges incident to a vertex differ in color.

    ``colors[k][cell]`` is the color of the edge from cell to cell + g_k
    (grids indexed in world coordinates, torus wrap implied).
    """
    S = len(generators)
    incident = []
    for k, g in enumerate(generators):
        arr = np.asarray(colors[k])
        incident.append(arr)                       # outgoing edge at each vertex
        incident.append(np.roll(arr, shift=tuple(g), axis=tuple(range(world.n))))
    conflicts = 0
    witness = None
    for a in range(len(incident)):
        for b in range(a + 1, len(incident)):
            eq = incident[a] == incident[b]
            if eq.any():
                conflicts += int(eq.sum())
                if witness is None:
                    idx = np.argwhere(eq)[0]
                    witness = (tuple(int(v) for v in idx), a, b)
    used = len(np.unique(np.concatenate([np.asarray(c).ravel() for c in colors])))
    limit = num_colors if num_colors is not None else 2 * S + 1
    passed = conflicts == 0 and used <= limit
    return Report("coloring", passed,
                  {"conflicts": conflicts, "colors_used": used, "limit": limit},
                  [witness] if witness else [])


# ---------------------------------------------------------------------------
# Brute-force feasibility oracle


def brute_min_marker(r: GenRect, d: int, directions: Sequence[int],
                     cap: int = 4000, node_cap: int = 2_000_000):
    """Smallest marker set on r with spacing d hitting every listed axis.

    Exhaustive backtracking; certifies feasibility on instances small
    enough to search.  Returns (size, points) or None when infeasible.
    """
    if r.num_points() > cap:
        raise SearchCapExceeded(f"{r.num_points()} points exceeds cap {cap}")
    cells = list(r.points())
    lines: list[list[tuple]] = []
    line_ids: dict[tuple, int] = {}
    cover: list[list[int]] = [[] for _ in cells]
    for axis in directions:
        for idx, p in enumerate(cells):
            key = (axis,) + tuple(c for j, c in enumerate(p) if j != axis)
            if key not in line_ids:
                line_ids[key] = len(lines)
                lines.append([])
            lid = line_ids[key]
            lines[lid].append(idx)
            cover[idx].append(lid)
    nodes = 0

    def compatible(chosen: list[int], cand: int) -> bool:
        return all(chebyshev(cells[c], cells[cand]) >= d for c in chosen)

    def solve(limit: int) -> Optional[list[int]]:
        nonlocal nodes

        def rec(chosen: list[int], covered: set[int]) -> Optional[list[int]]:
            nonlocal nodes
            nodes += 1
            if nodes > node_cap:
                raise SearchCapExceeded("node cap exceeded")
            if len(covered) == len(lines):
                return chosen
            if len(chosen) == limit:
                return None
            target = min((lid for lid in range(len(lines)) if lid not in covered),
                         key=lambda lid: len(lines[lid]))
            for cand in lines[target]:
                if compatible(chosen, cand):
                    got = rec(chosen + [cand],
                              covered | set(cover[cand]))
                    if got is not None:
                        return got
            return None

        return rec([], set())

    for size in range(0, len(cells) + 1):
        got = solve(size)
        if got is not None:
            return size, [cells[i] for i in got]
    return None


# ---------------------------------------------------------------------------
# Locality


def ball_fingerprint(tiling: Tiling, cell: Sequence[int], radius: int) -> tuple:
    """Canonical description of the tiling inside the ball around a cell.

    Regions are translated so the cell sits at the origin (the nearest
    wrap image is taken on a torus), which makes fingerprints comparable
    across worlds of different sizes.
    """
    world = tiling.world
    c = world.wrap(cell)
    out = []
    for reg in tiling.regions:
        shifts = [(0,) * world.n]
        if world.torus:
            shifts = list(iproduct(*[(-L, 0, L) for L in world.sides]))
        for s in shifts:
            img = reg.translate(s)
            gap = max(max(img.lo[j] - c[j], c[j] - img.hi[j], 0)
                      for j in range(world.n))
            if gap <= radius:
                out.append((tuple(a - b for a, b in zip(img.lo, c)),
                            tuple(a - b for a, b in zip(img.hi, c))))
    return tuple(sorted(out))


def check_locality(membership_a: Callable[[Sequence[int]], bool],
                   membership_b: Callable[[Sequence[int]], bool],
                   tiling_a: Tiling, tiling_b: Tiling,
                   cell: Sequence[int], radius: int) -> Report:
    """Same tiling ball around the cell implies the same membership verdict."""
    fa = ball_fingerprint(tiling_a, cell, radius)
    fb = ball_fingerprint(tiling_b, cell, radius)
    if fa != fb:
        return Report("locality", True,
                      {"balls_agree": False, "note": "precondition not met"}, [])
    ma = membership_a(cell)
    mb = membership_b(cell)
    return Report("locality", ma == mb,
                  {"balls_agree": True, "member_a": ma, "member_b": mb},
                  [] if ma == mb else [tuple(cell)])


# ---------------------------------------------------------------------------
# Package-family hypotheses


def check_package_family(family: PackageFamily, host: GenRect,
                         d_seq: Sequence[int], thickness: Sequence[int],
                         N_seq: Optional[Sequence[int]] = None) -> Report:
    """The six per-rectangle hypotheses of the inductive construction.

    (i) projections cover, (ii) marker-direction lengths within
    [thickness, d_i], (iii) same-round separation >= d_i, (iv)
    cross-round separation >= d_i, (v) sides at most half the host's,
    (vi) cumulative counts within N_i.
    """
    problems = []
    worst: dict = {}
    n = family.n

    for i, rnd in enumerate(family.rounds):
        if not rnd:
            problems.append(("empty-round", i))
            continue
        for p in rnd:
            if not host.contains_rect(p):
                problems.append(("outside-host", i, (p.lo, p.hi)))
            L = p.side(i)
            if not thickness[i] <= L <= d_seq[i]:
                problems.append(("length", i, (p.lo, p.hi), L))
            for j in range(n):
                if 2 * p.side(j) > host.side(j):
                    problems.append(("half-side", i, (p.lo, p.hi), j))
        if n > 1 and not _covers_projection(rnd, host, i):
            problems.append(("coverage", i))
        bad = _same_round_violation(rnd, i, d_seq[i])
        if bad:
            problems.append(("same-round-distance", i) + bad)

    older: list[tuple[int, GenRect]] = []
    for i, rnd in enumerate(family.rounds):
        if i > 0 and older:
            bad = _cross_round_violation(rnd, older, d_seq[i])
            if bad:
                problems.append(("cross-round-distance", i) + bad)
        older.extend((i, p) for p in rnd)

    if N_seq is not None:
        total = 0
        for i, rnd in enumerate(family.rounds):
            total += len(rnd)
            if total > N_seq[i]:
                problems.append(("count", i, total, N_seq[i]))

    return Report("package-family", not problems,
                  {"rounds": [len(x) for x in family.rounds]}, problems[:10])


def _covers_projection(rnd: Sequence[GenRect], host: GenRect, axis: int) -> bool:
    sig_host = project_drop(host, axis)
    sig = [project_drop(p, axis) for p in rnd]
    if sig_host.n == 0:
        return True
    cuts = []
    for j in range(sig_host.n):
        cs = {sig_host.lo[j], sig_host.hi[j] + 1}
        for s in sig:
            cs.add(s.lo[j])
            cs.add(s.hi[j] + 1)
        cuts.append(sorted(c for c in cs if sig_host.lo[j] <= c <= sig_host.hi[j] + 1))
    shape = tuple(len(c) - 1 for c in cuts)
    covered = np.zeros(shape, dtype=bool)
    for s in sig:
        sl = []
        for j in range(sig_host.n):
            a = bisect_right(cuts[j], max(s.lo[j], sig_host.lo[j])) - 1
            b = bisect_right(cuts[j], min(s.hi[j], sig_host.hi[j])) - 1
            if b < a:
                sl = None
                break
            sl.append(slice(a, b + 1))
        if sl is not None:
            covered[tuple(sl)] = True
    return bool(covered.all())


def _same_round_violation(rnd: Sequence[GenRect], axis: int, d: int):
    """Exact scan of the pairs whose marker-direction gap is below d."""
    order = sorted(range(len(rnd)), key=lambda k: rnd[k].lo[axis])
    for ai in range(len(order)):
        a = rnd[order[ai]]
        for bi in range(ai + 1, len(order)):
            b = rnd[order[bi]]
            if b.lo[axis] - a.hi[axis] >= d:
                break
            dd = max(interval_gap(a.interval(j), b.interval(j))
                     for j in range(a.n))
            if dd < d:
                return ((a.lo, a.hi), (b.lo, b.hi), dd)
    return None


def _cross_round_violation(rnd: Sequence[GenRect], older: Sequence[tuple[int, GenRect]],
                           d: int):
    if not rnd:
        return None
    n = rnd[0].n
    LO = np.asarray([p.lo for p in rnd], dtype=np.int64)
    HI = np.asarray([p.hi for p in rnd], dtype=np.int64)
    for ri, q in older:
        gaps = np.maximum(np.asarray(q.lo) - HI, LO - np.asarray(q.hi))
        dist = np.maximum(gaps, 0).max(axis=1)
        k = int(dist.argmin())
        if dist[k] < d:
            return ((tuple(LO[k]), tuple(HI[k])), (q.lo, q.hi), int(dist[k]))
    return None


def check_cross_region(build: ShiftBuild) -> Report:
    """Hypothesis across regions: rho(P, Q) >= d_max(i,j) for packages of
    different regions, with the torus metric."""
    tiling = build.tiling
    world = build.world
    d_seq = build.sched.d
    problems = []
    regions = tiling.regions
    shifts = [(0,) * world.n]
    if world.torus:
        shifts = list(iproduct(*[(-L, 0, L) for L in world.sides]))
    reach = d_seq[0] + 1
    for idx in range(len(regions)):
        for jdx in range(idx, len(regions)):
            for s in shifts:
                if jdx == idx and all(c == 0 for c in s):
                    continue
                img = regions[jdx].translate(s)
                gap = max(interval_gap(regions[idx].interval(t), img.interval(t))
                          for t in range(world.n))
                if gap >= reach:
                    continue
                fa = build.families[idx]
                fb = build.families[jdx]
                for i, rnd_a in enumerate(fa.rounds):
                    for j, rnd_b in enumerate(fb.rounds):
                        need = d_seq[max(i, j)]
                        for p in rnd_a:
                            for q in rnd_b:
                                qq = q.translate(s)
                                dd = max(interval_gap(p.interval(t), qq.interval(t))
                                         for t in range(world.n))
                                if dd < need:
                                    problems.append(
                                        ((idx, i, (p.lo, p.hi)),
                                         (jdx, j, (q.lo, q.hi)), s, dd, need))
    return Report("cross-region", not problems,
                  {"pairs_flagged": len(problems)}, problems[:5])
