"""Problem assembly: configuration -> diffusion + payoffs + region partition.

The final grid is uniform between the truncation points with payoff kinks and
refined region boundaries placed exactly on nodes, so obstacle pinches and
push locations do not suffer off-grid smearing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .associated import AssociatedPayoffs, build_associated_payoffs
from .errors import ValidationError
from .model import (DiffusionSpec, PayoffTriple, RegionPartition, classify_regions,
                    make_grid)
from .piecewise import as_piecewise
from .solver import ValueSolution, solve_value


@dataclass(frozen=True)
class ProblemConfig:
    mu: object
    sigma: object
    r: float
    alpha: float
    beta: float
    f: object
    g: object
    h: object
    grid_n: int = 2001
    alpha_num: Optional[float] = None
    beta_num: Optional[float] = None
    name: str = "problem"


@dataclass(frozen=True)
class Problem:
    name: str
    diffusion: DiffusionSpec
    payoffs: PayoffTriple
    partition: RegionPartition
    assoc: AssociatedPayoffs

    def solve(self, tol: float = 1e-10, max_iter: int = 200) -> ValueSolution:
        return solve_value(self.assoc, self.diffusion, tol=tol, max_iter=max_iter)


def suggest_truncation(cfg: ProblemConfig) -> tuple[float, float]:
    """Truncation points for an unbounded state space.

    Piece-list payoffs fix the domain by their hull.  For global expressions
    the cut L is pushed out until the payoff envelope at the cut, discounted
    by the Wiener-type bound exp(-dist sqrt(2r)/sigma), drops below 1e-6 of
    the interior scale; r = 0 has no such decay and needs explicit bounds.
    """
    hull_lo, hull_hi = [], []
    for obj in (cfg.f, cfg.g, cfg.h):
        if isinstance(obj, list):
            hull_lo.append(min(float(p["interval"][0]) for p in obj))
            hull_hi.append(max(float(p["interval"][1]) for p in obj))
    if hull_lo:
        return max(hull_lo), min(hull_hi)
    if cfg.r <= 0:
        raise ValidationError(
            f"{cfg.name}: r = 0 on an unbounded state space needs explicit "
            "grid.alpha_num / grid.beta_num")
    probe = as_piecewise(cfg.f, -1.0, 1.0, name="f"), \
        as_piecewise(cfg.g, -1.0, 1.0, name="g"), \
        as_piecewise(cfg.h, -1.0, 1.0, name="h")
    sigma = as_piecewise(cfg.sigma, -1.0, 1.0, name="sigma")
    scale = 1.0 + max(abs(float(w(0.0))) for w in probe)
    decay = np.sqrt(2.0 * cfg.r)
    L = 1.0
    for _ in range(64):
        xs = np.array([-L, L])
        env = float(max(np.max(np.abs(w(xs))) for w in probe))
        sig = max(float(np.max(sigma(xs))), 1e-12)
        if env * np.exp(-0.5 * L * decay / sig) < 1e-6 * scale:
            return (max(cfg.alpha, -L), min(cfg.beta, L))
        L *= 1.4
    raise ValidationError(f"{cfg.name}: could not find truncation points; "
                          "set grid.alpha_num / grid.beta_num explicitly")


def build_problem(cfg: ProblemConfig) -> Problem:
    lo = cfg.alpha_num if cfg.alpha_num is not None else cfg.alpha
    hi = cfg.beta_num if cfg.beta_num is not None else cfg.beta
    if not (np.isfinite(lo) and np.isfinite(hi)):
        auto_lo, auto_hi = suggest_truncation(cfg)
        lo = lo if np.isfinite(lo) else auto_lo
        hi = hi if np.isfinite(hi) else auto_hi
    lo, hi = float(lo), float(hi)
    if not lo < hi:
        raise ValidationError(f"{cfg.name}: need alpha_num < beta_num")

    f = as_piecewise(cfg.f, lo, hi, name="f")
    g = as_piecewise(cfg.g, lo, hi, name="g")
    h = as_piecewise(cfg.h, lo, hi, name="h")
    mu = as_piecewise(cfg.mu, lo, hi, name="mu")
    sigma = as_piecewise(cfg.sigma, lo, hi, name="sigma")
    payoffs = PayoffTriple(f=f, g=g, h=h)

    # two passes: locate region boundaries on a scout grid, then anchor them
    scout = make_grid(lo, hi, min(cfg.grid_n, 2001),
                      anchors=_kink_anchors(f, g, h, lo, hi))
    part0 = classify_regions(payoffs, scout)
    anchors = list(_kink_anchors(f, g, h, lo, hi)) + list(part0.boundary_points)
    grid = make_grid(lo, hi, cfg.grid_n, anchors=anchors)

    alpha = cfg.alpha if cfg.alpha is not None else -np.inf
    beta = cfg.beta if cfg.beta is not None else np.inf
    # keep the grid strictly inside the state interval
    eps = 1e-9 * (1 + abs(lo) + abs(hi))
    if grid[0] <= alpha:
        alpha = grid[0] - eps
    if grid[-1] >= beta:
        beta = grid[-1] + eps
    diffusion = DiffusionSpec(mu=mu, sigma=sigma, r=float(cfg.r),
                              alpha=float(alpha), beta=float(beta), grid=grid)
    partition = classify_regions(payoffs, grid)
    assoc = build_associated_payoffs(payoffs, partition)
    return Problem(name=cfg.name, diffusion=diffusion, payoffs=payoffs,
                   partition=partition, assoc=assoc)


def _kink_anchors(f, g, h, lo, hi):
    pts = []
    for w in (f, g, h):
        pts.extend(x for x in w.kink_points if lo < x < hi)
        pts.extend(x for x in w.breakpoints() if lo < x < hi)
    return sorted(set(pts))
