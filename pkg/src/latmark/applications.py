"""Applications of strong marker sets: proper edge colorings of the
Schreier graph and tree sections built from brackets and ladders.

Edges are identified with (cell, generator) pairs in the positive
orientation: the edge from cell x to cell x + g.  Offsets a/b count
steps to the nearest marker forward/backward along the generator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import SpacingTooSmall, WrongMode
from .lattice import GenRect
from .rect_markers import MarkerSet, lex_sorted
from .shift_sim import TorusWorld
from .verify import Report


# ---------------------------------------------------------------------------
# Offsets along a direction


def marker_mask(world: TorusWorld, m: MarkerSet) -> np.ndarray:
    grid = np.zeros(world.sides, dtype=bool)
    pts = m.points
    if len(pts):
        idx = tuple(pts[:, j] % world.sides[j] if world.torus else pts[:, j]
                    for j in range(world.n))
        grid[idx] = True
    return grid


def _scan_steps(mask: np.ndarray, axis: int, wrap: bool) -> np.ndarray:
    """Steps to the nearest True forward along ``axis`` (0 on a marker)."""
    L = mask.shape[axis]
    big = np.iinfo(np.int32).max // 2
    out = np.full(mask.shape, big, dtype=np.int32)
    sl = [slice(None)] * mask.ndim

    def at(i):
        sl2 = list(sl)
        sl2[axis] = i
        return tuple(sl2)

    run = np.full(tuple(s for j, s in enumerate(mask.shape) if j != axis),
                  big, dtype=np.int32)
    passes = 2 if wrap else 1
    for _ in range(passes):
        for i in range(L - 1, -1, -1):
            run = np.where(mask[at(i)], 0, np.minimum(run + 1, big))
            out[at(i)] = np.minimum(out[at(i)], run)
    return out


def axis_offsets(world: TorusWorld, mask: np.ndarray, axis: int
                 ) -> tuple[np.ndarray, np.ndarray]:
    """(a, b): steps to the nearest marker forward / backward along an axis."""
    a = _scan_steps(mask, axis, world.torus)
    b = _scan_steps(np.flip(mask, axis=axis), axis, world.torus)
    b = np.flip(b, axis=axis)
    return a, b


def _orbit_view(mask: np.ndarray, g: Sequence[int]) -> tuple[np.ndarray, list]:
    """Rearrange a 2-d torus grid so progressions along g become rows.

    Returns the rearranged array and the per-slice index maps needed to
    scatter results back.
    """
    if mask.ndim == 1:
        return mask.reshape(1, -1), [(np.arange(mask.shape[0]),)]
    if mask.ndim != 2:
        raise ValueError("general-direction offsets support 1-d and 2-d worlds")
    from math import gcd
    L1, L2 = mask.shape
    g1, g2 = int(g[0]), int(g[1])
    gg2 = gcd(g2 % L2 or L2, L2)
    T2 = L2 // gg2
    # after T2 steps axis 2 has wrapped; axis 1 keeps moving by T2*g1
    stride1 = (T2 * g1) % L1
    gg1 = gcd(stride1 or L1, L1)
    T = T2 * (L1 // gg1)
    cols = np.arange(T, dtype=np.int64)
    r1 = (cols * g1) % L1
    r2 = (cols * g2) % L2
    rows = []
    maps = []
    for b1 in range(gg1):
        for b2 in range(gg2):
            idx = ((b1 + r1) % L1, (b2 + r2) % L2)
            rows.append(mask[idx])
            maps.append(idx)
    return np.stack(rows), maps


def general_offsets(world: TorusWorld, mask: np.ndarray, g: Sequence[int]
                    ) -> tuple[np.ndarray, np.ndarray]:
    """(a, b) step counts to the nearest marker along +g / -g, 2-d torus."""
    if not world.torus:
        raise WrongMode("general-direction offsets need a torus world")
    view, maps = _orbit_view(mask, g)
    a_v = _scan_steps(view, 1, True)
    b_v = np.flip(_scan_steps(np.flip(view, axis=1), 1, True), axis=1)
    a = np.empty(world.sides, dtype=np.int32)
    b = np.empty(world.sides, dtype=np.int32)
    for row, idx in enumerate(maps):
        if len(idx) == 1:
            a[idx[0]] = a_v[row]
            b[idx[0]] = b_v[row]
        else:
            a[idx[0], idx[1]] = a_v[row]
            b[idx[0], idx[1]] = b_v[row]
    return a, b


# ---------------------------------------------------------------------------
# Edge colorings


@dataclass
class EdgeColoring:
    """Colors per (cell, generator) edge plus bookkeeping for checks."""

    world: TorusWorld
    generators: list[tuple[int, ...]]
    colors: list[np.ndarray]
    num_colors: int
    worst_offsets: dict = field(default_factory=dict)


def _case_colors(a: np.ndarray, b: np.ndarray, low: int, high: int,
                 special: int, threshold: int = 10) -> np.ndarray:
    """The three-case rule: parity of a+b and of b pick the color."""
    odd = (a + b) % 2 == 1
    case2 = odd & (a == threshold)
    case3 = odd & (a < threshold)
    b_even = b % 2 == 0
    out = np.where(b_even, low, high).astype(np.int16)
    out = np.where(case3, np.where(b_even, high, low), out)
    out = np.where(case2, special, out)
    return out


def edge_coloring(world: TorusWorld, m: MarkerSet) -> EdgeColoring:
    """Proper edge (2n+1)-coloring of the axis Schreier graph.

    Requires marker spacing at least 100.  Edges parallel to axis i use
    colors i+1 and n+i+1; color 2n+1 patches the odd-gap spots, which
    the spacing keeps far apart.
    """
    if m.spacing < 100:
        raise SpacingTooSmall(f"spacing {m.spacing} < 100")
    n = world.n
    mask = marker_mask(world, m)
    colors = []
    worst = {}
    for i in range(n):
        a, b = axis_offsets(world, mask, i)
        colors.append(_case_colors(a, b, i + 1, n + i + 1, 2 * n + 1))
        worst[f"axis{i}"] = (int(a.max()), int(b.max()))
    gens = [tuple(1 if j == i else 0 for j in range(n)) for i in range(n)]
    return EdgeColoring(world, gens, colors, 2 * n + 1, worst)


def general_edge_coloring(world: TorusWorld, generators: Sequence[Sequence[int]],
                          m: MarkerSet) -> EdgeColoring:
    """Proper edge (2|S|+1)-coloring for a general generating set.

    Offsets count generator steps along each progression; the same
    three-case rule applies per generator with its own color pair.
    """
    if m.spacing < 100:
        raise SpacingTooSmall(f"spacing {m.spacing} < 100")
    S = len(generators)
    mask = marker_mask(world, m)
    colors = []
    worst = {}
    for j, g in enumerate(generators):
        support = [k for k, c in enumerate(g) if c != 0]
        if len(support) == 1 and abs(g[support[0]]) == 1:
            a, b = axis_offsets(world, mask, support[0])
            if g[support[0]] < 0:
                a, b = b, a
        else:
            a, b = general_offsets(world, mask, g)
        colors.append(_case_colors(a, b, j + 1, S + j + 1, 2 * S + 1))
        worst[str(tuple(g))] = (int(a.max()), int(b.max()))
    return EdgeColoring(world, [tuple(int(c) for c in g) for g in generators],
                        colors, 2 * S + 1, worst)


# ---------------------------------------------------------------------------
# Tree sections


BRACKET_OFFSETS = ((0, -1), (-1, -1), (-1, 0), (-1, 1), (0, 1))


@dataclass
class TreeSection:
    """Brackets, ladders, and the parent relation over a window world."""

    world: TorusWorld
    markers: list[tuple[int, int]]
    brackets: dict               # marker -> list of 5 bracket vertices
    ladders: dict                # marker -> list of ladder vertices (length k)
    parent: dict                 # marker -> marker
    truncated: list              # markers whose footprint leaves the window
    edges: set                   # frozenset pairs

    def edge_count(self) -> int:
        return len(self.edges)


def _bracket_cells(x: tuple[int, int]) -> list[tuple[int, int]]:
    return [(x[0] + dx, x[1] + dy) for dx, dy in BRACKET_OFFSETS]


def tree_section(world: TorusWorld, m: MarkerSet,
                 bound: Optional[int] = None) -> TreeSection:
    """Brackets around every marker plus ladders climbing to a parent bracket.

    Works in window mode only: wrapped parent chains on a torus would
    close into cycles.  Markers whose bracket or ladder leaves the window
    are reported as truncated and excluded from the tree.
    """
    if world.torus:
        raise WrongMode("tree sections need a window world")
    if world.n < 2:
        raise ValueError("tree sections need dimension at least 2")
    if m.spacing < 10:
        raise SpacingTooSmall(f"spacing {m.spacing} < 10")
    limit = (bound if bound is not None else max(world.sides)) + 3

    inside = world.bounding_rect()
    markers = [(int(p[0]), int(p[1])) for p in m.points[:, :2]] \
        if world.n == 2 else [tuple(int(v) for v in p) for p in m.points]
    owner: dict[tuple[int, int], tuple[int, int]] = {}
    brackets = {}
    truncated = []
    for x in markers:
        cells = _bracket_cells(x)
        if all(inside.contains(c) for c in cells):
            brackets[x] = cells
            for c in cells:
                owner[c] = x
        else:
            truncated.append(x)

    ladders = {}
    parent = {}
    edges: set = set()
    for x, cells in brackets.items():
        for a, b in zip(cells, cells[1:]):
            edges.add(frozenset((a, b)))
    for x in brackets:
        k = None
        rung = []
        for step in range(1, limit + 1):
            c = (x[0], x[1] + step)
            if not inside.contains(c):
                break
            rung.append(c)
            if c in owner and owner[c] != x:
                k = step
                break
        if k is None:
            truncated.append(x)
            continue
        ladders[x] = rung
        parent[x] = owner[rung[-1]]
        for a, b in zip(rung, rung[1:]):
            edges.add(frozenset((a, b)))
    return TreeSection(world, markers, brackets, ladders, parent,
                       truncated, edges)


def verify_tree(t: TreeSection, core_window: GenRect) -> Report:
    """Parent uniqueness, acyclicity, and (co)completeness on the core window.

    Only markers whose whole bracket-plus-ladder footprint lies in the
    core window make claims; everything else is counted as truncated.
    """
    interior = []
    for x, rung in t.ladders.items():
        cells = t.brackets[x] + rung
        if all(core_window.contains(c) for c in cells):
            interior.append(x)

    problems = []
    # (a) parent uniqueness, recomputed from the structure
    cell_owner: dict = {}
    for y, cells in t.brackets.items():
        for c in cells:
            cell_owner.setdefault(c, []).append(y)
    multi = [c for c, owners in cell_owner.items() if len(set(owners)) > 1]
    if multi:
        problems.append(("bracket-overlap", multi[:3]))
    for x in interior:
        hits = sorted({tuple(y) for c in t.ladders[x] if c in cell_owner
                       for y in cell_owner[c] if y != x})
        if len(hits) != 1:
            problems.append(("parent-count", x, hits))

    # (b) the parent must sit strictly higher; cycles are then impossible,
    # and a walk double-checks within the core
    for x in interior:
        y = t.parent.get(x)
        if y is None:
            problems.append(("no-parent", x))
        elif y[1] - x[1] < 10:
            problems.append(("parent-too-close", x, y))
    seen_cycle = None
    for x in interior:
        slow = x
        trail = set()
        while slow in t.parent and core_window.contains(slow):
            if slow in trail:
                seen_cycle = slow
                break
            trail.add(slow)
            slow = t.parent[slow]
        if seen_cycle:
            break
    if seen_cycle:
        problems.append(("cycle", seen_cycle))

    # (c) completeness and co-completeness over the core window
    tree_cells = {c for e in t.edges for c in e}
    core_hit = any(core_window.contains(c) for c in tree_cells)
    core_free = core_window.num_points() > sum(
        1 for c in tree_cells if core_window.contains(c))
    if not core_hit:
        problems.append(("not-complete",))
    if not core_free:
        problems.append(("not-co-complete",))

    # degree bound
    degree: dict = {}
    for e in t.edges:
        for c in e:
            degree[c] = degree.get(c, 0) + 1
    too_high = [c for c, dg in degree.items() if dg > 3]
    if too_high:
        problems.append(("degree", too_high[:3]))

    return Report("tree-section", not problems,
                  {"interior_markers": len(interior),
                   "truncated": len(t.truncated),
                   "edges": len(t.edges)},
                  problems[:10])


# ---------------------------------------------------------------------------
# A compact marker source for application demos


def slope_comb_markers(world: TorusWorld, slope: int, modulus: int) -> MarkerSet:
    """Markers {(a, slope*a mod modulus)} tiled over a 2-d world.

    With a well-chosen slope the set has large Chebyshev spacing yet
    meets every row, column, and full-support progression within
    ``modulus`` steps, which makes it a convenient, independently
    checkable input for the coloring and tree applications.
    """
    if world.n != 2:
        raise ValueError("slope comb is 2-dimensional")
    pts = []
    L1, L2 = world.sides
    for a in range(L1):
        base = (slope * a) % modulus
        for b in range(base, L2, modulus):
            pts.append((a, b))
    arr = np.asarray(pts, dtype=np.int64)
    spacing = _comb_spacing(slope, modulus)
    return MarkerSet(2, lex_sorted(arr), spacing)


def _comb_spacing(slope: int, modulus: int) -> int:
    best = modulus
    for t in range(1, modulus):
        r = (slope * t) % modulus
        best = min(best, max(t, min(r, modulus - r)))
        if best <= t:
            break
    return best
