"""Diffusion model, payoff triple, and the six ordering regions.

Regions follow the ordering of (f, g, h) at each state:

    B1: g <= h <= f        B2: f <= h < g  or  f < h <= g
    B3: h < g < f          B4: g < f < h
    B5: f <= g < h         B6: h < f <= g

Equalities are resolved with a pointwise tolerance band; the chains are tried
in the fixed order B1..B6 and the first match wins, which makes the labelling
exhaustive and mutually exclusive by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ClassificationConflict, KinkEvaluation, NotAKink, ValidationError
from .piecewise import PiecewiseFn

B1, B2, B3, B4, B5, B6 = 1, 2, 3, 4, 5, 6
REGION_NAMES = {B1: "B1", B2: "B2", B3: "B3", B4: "B4", B5: "B5", B6: "B6"}

#: default pointwise equality-tolerance coefficient for region classification
DEFAULT_EQ_TOL = 1e-9

#: absolute refinement width for region-boundary bisection
BOUNDARY_XTOL = 1e-12


@dataclass(frozen=True)
class DiffusionSpec:
    """One-dimensional diffusion dX = mu(X) dt + sigma(X) dW on (alpha, beta)."""

    mu: PiecewiseFn
    sigma: PiecewiseFn
    r: float
    alpha: float
    beta: float
    grid: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        object.__setattr__(self, "grid", grid)
        if grid.ndim != 1 or grid.size < 3:
            raise ValidationError("grid must be a 1-d sequence with >= 3 points")
        d = np.diff(grid)
        if not np.all(d > 0) or not np.all(np.isfinite(d)):
            raise ValidationError("grid must be strictly increasing and finite")
        if self.r < 0:
            raise ValidationError("discount rate r must be >= 0")
        if not self.alpha < self.beta:
            raise ValidationError("need alpha < beta")
        if not (self.alpha < grid[0] and grid[-1] < self.beta):
            raise ValidationError("grid must lie strictly inside (alpha, beta)")
        if np.any(self.sigma(grid) <= 0):
            raise ValidationError("sigma must be positive on the grid")

    @property
    def lo(self) -> float:
        return float(self.grid[0])

    @property
    def hi(self) -> float:
        return float(self.grid[-1])


@dataclass(frozen=True)
class PayoffTriple:
    """Payoffs: f if the maximizer stops first, g if the minimizer does,
    h on simultaneous stopping."""

    f: PiecewiseFn
    g: PiecewiseFn
    h: PiecewiseFn

    def values(self, grid) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.f(grid), self.g(grid), self.h(grid)


@dataclass(frozen=True)
class RegionPartition:
    """Per-grid-point region labels plus refined region boundaries."""

    grid: np.ndarray
    labels: np.ndarray
    b_f_le_g: np.ndarray
    b_g_le_f: np.ndarray
    b_f_eq_g: np.ndarray
    # cell index -> sorted candidate boundary abscissae inside that cell
    cell_boundaries: dict = field(repr=False, default_factory=dict)

    def mask(self, *codes: int) -> np.ndarray:
        out = np.zeros(self.labels.shape, dtype=bool)
        for c in codes:
            out |= self.labels == c
        return out

    @property
    def boundary_points(self) -> np.ndarray:
        pts = [x for xs in self.cell_boundaries.values() for x in xs]
        return np.array(sorted(pts), dtype=float)

    def intervals(self, *codes: int) -> list[tuple[float, float]]:
        """Closed hulls of maximal grid runs whose label lies in `codes`.

        Endpoints are taken from the refined boundaries when the run borders a
        differently-labelled cell, else from the grid ends.
        """
        member = self.mask(*codes)
        out = []
        n = member.size
        i = 0
        while i < n:
            if not member[i]:
                i += 1
                continue
            j = i
            while j + 1 < n and member[j + 1]:
                j += 1
            lo = self.grid[0] if i == 0 else self._edge(i - 1, entering=True)
            hi = self.grid[-1] if j == n - 1 else self._edge(j, entering=False)
            out.append((float(lo), float(hi)))
            i = j + 1
        return out

    def _edge(self, cell: int, entering: bool) -> float:
        cands = self.cell_boundaries.get(cell)
        if cands:
            return cands[0] if entering else cands[-1]
        return 0.5 * (self.grid[cell] + self.grid[cell + 1])


def classify_values(fv, gv, hv, tol):
    """Region labels from payoff value arrays; 0 marks an unmatched point.

    The chains are tried in order B1..B6 with the weak/strict mix resolved by
    the pointwise band `tol`; first match wins.
    """
    def le(a, b):
        return a <= b + tol

    def lt(a, b):
        return a < b - tol

    conds = [
        le(gv, hv) & le(hv, fv),                                   # B1
        (le(fv, hv) & lt(hv, gv)) | (lt(fv, hv) & le(hv, gv)),     # B2
        lt(hv, gv) & lt(gv, fv),                                   # B3
        lt(gv, fv) & lt(fv, hv),                                   # B4
        le(fv, gv) & lt(gv, hv),                                   # B5
        lt(hv, fv) & le(fv, gv),                                   # B6
    ]
    return np.select(conds, [B1, B2, B3, B4, B5, B6], default=0).astype(np.int8)


def classify_regions(payoffs: PayoffTriple, grid, eq_tol: float | None = None,
                     refine: bool = True) -> RegionPartition:
    """Assign each grid point its ordering region B1..B6.

    `eq_tol` is the coefficient of the pointwise equality band
    eq_tol * (1 + |f| + |g| + |h|); it defaults to 1e-9.
    """
    grid = np.asarray(grid, dtype=float)
    if eq_tol is None:
        eq_tol = DEFAULT_EQ_TOL
    if eq_tol < 0:
        raise ValidationError("eq_tol must be >= 0")
    fv, gv, hv = payoffs.values(grid)
    for name, arr in (("f", fv), ("g", gv), ("h", hv)):
        if not np.all(np.isfinite(arr)):
            raise ValidationError(f"{name} is not finite everywhere on the grid")
    tol = eq_tol * (1.0 + np.abs(fv) + np.abs(gv) + np.abs(hv))

    labels = classify_values(fv, gv, hv, tol)
    if np.any(labels == 0):
        bad = grid[labels == 0][0]
        raise ClassificationConflict(f"no region chain matched at x={bad!r}")

    b_f_le_g = fv <= gv + tol
    b_g_le_f = gv <= fv + tol
    b_f_eq_g = np.abs(fv - gv) <= tol

    cell_boundaries = {}
    if refine:
        cell_boundaries = _refine_boundaries(payoffs, grid, labels)
    return RegionPartition(grid=grid, labels=labels, b_f_le_g=b_f_le_g,
                           b_g_le_f=b_g_le_f, b_f_eq_g=b_f_eq_g,
                           cell_boundaries=cell_boundaries)


def _bisect(fn, a: float, b: float) -> float:
    fa, fb = fn(a), fn(b)
    for _ in range(200):
        m = 0.5 * (a + b)
        if b - a <= BOUNDARY_XTOL * (1 + abs(m)):
            return m
        fm = fn(m)
        if fm == 0.0:
            return m
        if (fa < 0) != (fm < 0):
            b, fb = m, fm
        else:
            a, fa = m, fm
    return 0.5 * (a + b)


def _refine_boundaries(payoffs, grid, labels):
    """Bisect the pairwise payoff differences in every label-flip cell."""
    diffs = (
        lambda x: payoffs.f(x) - payoffs.g(x),
        lambda x: payoffs.g(x) - payoffs.h(x),
        lambda x: payoffs.h(x) - payoffs.f(x),
    )
    out = {}
    flips = np.nonzero(labels[:-1] != labels[1:])[0]
    for i in flips:
        a, b = float(grid[i]), float(grid[i + 1])
        cands = []
        for d in diffs:
            da, db = float(d(a)), float(d(b))
            if da == 0.0 and db == 0.0:
                continue  # identically coincident pair, no isolated zero here
            if da == 0.0:
                cands.append(a)
            elif db == 0.0:
                cands.append(b)
            elif (da < 0) != (db < 0):
                cands.append(_bisect(d, a, b))
        if not cands:
            cands = [0.5 * (a + b)]
        uniq = []
        for c in sorted(cands):
            if not uniq or c - uniq[-1] > BOUNDARY_XTOL * (1 + abs(c)):
                uniq.append(c)
        out[int(i)] = uniq
    return out


def apply_generator(w: PiecewiseFn, diffusion: DiffusionSpec, x):
    """(L_X - r) w at x: mu w' + sigma^2 w''/2 - r w.  Rejects kink points."""
    scalar = np.isscalar(x)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    pts = w.kink_points
    if pts.size:
        d = np.min(np.abs(xs[:, None] - pts[None, :]), axis=1)
        hit = d <= 1e-12 * (1 + np.abs(xs))
        if hit.any():
            raise KinkEvaluation(f"{w.name} has a kink at x={xs[hit][0]}")
    out = (diffusion.mu(xs) * w.deriv1(xs)
           + 0.5 * diffusion.sigma(xs) ** 2 * w.deriv2(xs)
           - diffusion.r * w(xs))
    return float(out[0]) if scalar else out


def kink_jump(w: PiecewiseFn, xi: float) -> float:
    """Derivative jump w'(xi+) - w'(xi-) at a declared kink of w."""
    for k in w.kinks:
        if abs(k.x - xi) <= 1e-12 * (1 + abs(xi)):
            return k.jump
    raise NotAKink(f"x={xi} is not a declared kink of {w.name}")


def make_grid(lo: float, hi: float, n: int, anchors: Sequence[float] = ()) -> np.ndarray:
    """Uniform grid on [lo, hi] with anchor points placed exactly.

    An anchor replaces the nearest node when it falls within 30% of a cell,
    otherwise it is inserted; either way the returned grid contains it exactly.
    """
    if n < 3:
        raise ValidationError("need n >= 3 grid points")
    grid = list(np.linspace(lo, hi, n))
    dx = (hi - lo) / (n - 1)
    for a in sorted(set(float(a) for a in anchors)):
        if not (lo < a < hi):
            continue
        k = int(round((a - lo) / dx))
        k = min(max(k, 1), n - 2)
        if abs(grid[k] - a) <= 0.3 * dx:
            grid[k] = a
        else:
            grid.append(a)
    out = np.array(sorted(set(grid)), dtype=float)
    return out
