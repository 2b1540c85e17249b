"""Closed-interval set arithmetic on the real line.

Sets are lists of (lo, hi) pairs with lo <= hi; a pair with lo == hi is an
isolated point.  Differences subtract OPEN intervals, so removing (a, b) from
[a, c] keeps the endpoint {a} as an isolated component - stop sets genuinely
contain such points.
"""

from __future__ import annotations

import numpy as np

SNAP = 1e-9


def normalize(parts, snap: float = SNAP) -> list[tuple[float, float]]:
    parts = [(float(lo), float(hi)) for lo, hi in parts if hi >= lo - snap]
    parts.sort()
    out: list[list[float]] = []
    for lo, hi in parts:
        hi = max(hi, lo)
        if out and lo <= out[-1][1] + snap * (1 + abs(lo)):
            out[-1][1] = max(out[-1][1], hi)
        else:
            out.append([lo, hi])
    return [(a, b) for a, b in out]


def union(a, b, snap: float = SNAP):
    return normalize(list(a) + list(b), snap)


def intersect(a, b, snap: float = SNAP):
    out = []
    for lo1, hi1 in a:
        for lo2, hi2 in b:
            lo, hi = max(lo1, lo2), min(hi1, hi2)
            if hi >= lo - snap:
                out.append((lo, min(hi, max(lo, hi))))
    return normalize(out, snap)


def subtract_open(a, b, snap: float = SNAP):
    """Set difference A \\ int(B) for closed A and open intervals B."""
    result = [(float(lo), float(hi)) for lo, hi in a]
    for blo, bhi in b:
        blo, bhi = float(blo), float(bhi)
        if bhi - blo <= snap:
            continue
        nxt = []
        for lo, hi in result:
            if bhi <= lo + snap * (1 + abs(lo)) or blo >= hi - snap * (1 + abs(hi)):
                nxt.append((lo, hi))
                continue
            if blo >= lo - snap * (1 + abs(lo)):
                nxt.append((lo, min(blo, hi)))
            if bhi <= hi + snap * (1 + abs(hi)):
                nxt.append((max(bhi, lo), hi))
        result = [(lo, hi) for lo, hi in nxt if hi >= lo]
    return normalize(result, snap)


def contains(parts, xs, closed: bool = True):
    xs = np.asarray(xs, dtype=float)
    out = np.zeros(xs.shape, dtype=bool)
    for lo, hi in parts:
        if closed:
            out |= (xs >= lo) & (xs <= hi)
        else:
            out |= (xs > lo) & (xs < hi)
    return out


def mask_to_intervals(grid, mask, boundaries=(), snap_points=(),
                      cell_snap: float | None = None):
    """Closed intervals for the true-runs of `mask`.

    Interior run edges are replaced by the nearest refined boundary from
    `boundaries` when one lies within a cell of the flip, and then snapped to
    the nearest of `snap_points` (exact region boundaries / kinks) when within
    a cell; grid ends are kept as-is.
    """
    grid = np.asarray(grid, dtype=float)
    boundaries = sorted(boundaries)
    snap_points = np.asarray(sorted(snap_points), dtype=float)
    out = []
    n = grid.size
    i = 0
    while i < n:
        if not mask[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and mask[j + 1]:
            j += 1
        lo = grid[0] if i == 0 else _refined_edge(grid, i - 1, boundaries,
                                                  snap_points, cell_snap)
        hi = grid[-1] if j == n - 1 else _refined_edge(grid, j, boundaries,
                                                       snap_points, cell_snap)
        out.append((float(min(lo, hi)), float(max(lo, hi))))
        i = j + 1
    return normalize(out)


def _refined_edge(grid, cell, boundaries, snap_points, cell_snap):
    a, b = grid[cell], grid[cell + 1]
    dx = b - a
    mid = 0.5 * (a + b)
    edge = mid
    best = np.inf
    for bd in boundaries:
        if abs(bd - mid) < best and a - 5 * dx <= bd <= b + 5 * dx:
            best = abs(bd - mid)
            edge = bd
    if snap_points.size:
        k = int(np.argmin(np.abs(snap_points - edge)))
        tol = cell_snap if cell_snap is not None else 1.5 * dx
        if abs(snap_points[k] - edge) <= tol:
            edge = float(snap_points[k])
    return edge
