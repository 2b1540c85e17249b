"""Markovian randomized stopping strategies.

A strategy is a pure stop set plus an accumulated stopping hazard made of a
Lebesgue rate density and local-time pushes; stopping occurs when the hazard
crosses an independent unit-exponential clock.  When h never lies strictly
outside [min(f,g), max(f,g)] on the f<=g side (no B5/B6 points), the exact
Nash intensities are available in closed form: rates are positive parts of
(L_X - r) of the opponent-facing payoff over the payoff gap, and each payoff
kink inside the randomization region carries a push of half the derivative
jump over the gap.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import intervals as iv
from .errors import DegenerateInterval, HypothesisViolated, ValidationError
from .model import (B3, B4, B5, B6, DiffusionSpec, PayoffTriple, RegionPartition,
                    kink_jump)
from .solver import ValueSolution


@dataclass(frozen=True)
class RandomizedStrategy:
    player: int
    stop_set: tuple                      # ((lo, hi), ...), lo == hi for points
    rate: Callable = field(repr=False)   # vectorized state -> hazard density
    atoms: tuple = ()                    # ((x, gamma), ...) local-time pushes
    epsilon: float | None = None         # None for exact Nash constructions
    rate_support: tuple = ()             # intervals carrying positive rate

    def __post_init__(self):
        if self.player not in (1, 2):
            raise ValidationError("player must be 1 or 2")
        for x, gamma in self.atoms:
            if gamma < 0:
                raise ValidationError(f"negative push coefficient at x={x}")
            if iv.contains(self.stop_set, np.array([x]), closed=False)[0]:
                raise ValidationError(f"atom at x={x} inside stop-set interior")

    def stop_points(self) -> list[float]:
        return [lo for lo, hi in self.stop_set if hi == lo]

    def stop_intervals(self) -> list[tuple[float, float]]:
        return [(lo, hi) for lo, hi in self.stop_set if hi > lo]

    def scaled(self, factor: float) -> "RandomizedStrategy":
        """Same stop set with all rates and pushes multiplied by factor."""
        base_rate = self.rate
        return RandomizedStrategy(
            player=self.player, stop_set=self.stop_set,
            rate=lambda xs: factor * base_rate(xs),
            atoms=tuple((x, factor * g) for x, g in self.atoms),
            epsilon=self.epsilon, rate_support=self.rate_support)


def never_stop(player: int) -> RandomizedStrategy:
    return RandomizedStrategy(player=player, stop_set=(),
                              rate=lambda xs: np.zeros_like(np.asarray(xs, float)))


def pure_stop(player: int, stop_set) -> RandomizedStrategy:
    return RandomizedStrategy(player=player, stop_set=tuple(stop_set),
                              rate=lambda xs: np.zeros_like(np.asarray(xs, float)))


def check_simplified_condition(partition: RegionPartition) -> bool:
    """True iff no grid point has h strictly outside the payoffs on f <= g
    (B5 and B6 empty), the hypothesis of the exact Nash construction."""
    return not partition.mask(B5, B6).any()


def stop_mask_intervals(sol: ValueSolution, partition: RegionPartition,
                        which: str) -> list[tuple[float, float]]:
    mask = sol.d1_mask if which == "d1" else sol.d2_mask
    return iv.mask_to_intervals(sol.grid, mask, sol.free_boundaries[which],
                                snap_points=partition.boundary_points)


def build_nash_strategies(sol: ValueSolution, partition: RegionPartition,
                          payoffs: PayoffTriple, diffusion: DiffusionSpec
                          ) -> tuple[RandomizedStrategy, RandomizedStrategy]:
    """Exact Nash pair: player 1 randomizes on B3 against g-kinks/rates,
    player 2 on B4 against f-kinks/rates; both stop purely elsewhere on
    their stopping sets."""
    if not check_simplified_condition(partition):
        raise HypothesisViolated("B5 or B6 is nonempty; use the epsilon calibration")
    d1 = stop_mask_intervals(sol, partition, "d1")
    d2 = stop_mask_intervals(sol, partition, "d2")
    b3 = partition.intervals(B3)
    b4 = partition.intervals(B4)

    s1 = RandomizedStrategy(
        player=1,
        stop_set=tuple(iv.subtract_open(d1, _past_ends(b3, sol.grid))),
        rate=_nash_rate(payoffs.g, payoffs.f, b3, diffusion),
        atoms=tuple(_nash_atoms(payoffs.g, payoffs.f, b3)),
        rate_support=tuple(b3))
    s2 = RandomizedStrategy(
        player=2,
        stop_set=tuple(iv.subtract_open(d2, _past_ends(b4, sol.grid))),
        rate=_nash_rate(payoffs.f, payoffs.g, b4, diffusion),
        atoms=tuple(_nash_atoms(payoffs.f, payoffs.g, b4)),
        rate_support=tuple(b4))
    return s1, s2


def _past_ends(region, grid):
    """Extend region intervals that touch the truncation points outward, so
    subtracting their interior does not leave artificial boundary atoms."""
    snap = 1e-9 * (1 + abs(grid[0]) + abs(grid[-1]))
    pad = 1.0 + 0.01 * (grid[-1] - grid[0])
    out = []
    for lo, hi in region:
        if lo <= grid[0] + snap:
            lo -= pad
        if hi >= grid[-1] - snap:
            hi += pad
        out.append((lo, hi))
    return out


def _nash_rate(w, other, region, diffusion):
    """((L_X - r) w / (w - other))_+ restricted to the open region, zero at
    kinks of w (pushes carry those)."""
    kinks = w.kink_points

    def rate(xs):
        xs = np.asarray(xs, dtype=float)
        out = np.zeros(xs.shape)
        m = iv.contains(region, xs, closed=False)
        if kinks.size:
            at_kink = np.min(np.abs(xs[:, None] - kinks[None, :]), axis=1) \
                <= 1e-12 * (1 + np.abs(xs))
            m &= ~at_kink
        if m.any():
            xm = xs[m]
            num = (diffusion.mu(xm) * w.deriv1(xm)
                   + 0.5 * diffusion.sigma(xm) ** 2 * w.deriv2(xm)
                   - diffusion.r * w(xm))
            out[m] = np.maximum(num / (w(xm) - other(xm)), 0.0)
        return out

    return rate


def _nash_atoms(w, other, region):
    for k in w.kinks:
        if iv.contains(region, np.array([k.x]), closed=False)[0]:
            gamma = 0.5 * kink_jump(w, k.x) / (w(k.x) - other(k.x))
            if gamma > 0:
                yield (float(k.x), float(gamma))


def exit_interval(x: float, d: float, payoffs: PayoffTriple,
                  diffusion: DiffusionSpec) -> tuple[float, float]:
    """Maximal interval around x on which both f and g stay within +-d of
    their values at x; found by outward bisection against dense samples."""
    if d <= 0:
        raise ValidationError("exit interval needs d > 0")
    lo_dom, hi_dom = diffusion.lo, diffusion.hi
    if not (lo_dom < x < hi_dom):
        raise ValidationError(f"x={x} is not interior to [{lo_dom}, {hi_dom}]")
    f0, g0 = payoffs.f(x), payoffs.g(x)

    def ok(a: float, b: float) -> bool:
        xs = _samples(a, b, payoffs)
        fv, gv = payoffs.f(xs), payoffs.g(xs)
        return bool(np.max(np.abs(fv - f0)) <= d and np.max(np.abs(gv - g0)) <= d)

    hi = _expand(lambda w: ok(x, x + w), hi_dom - x)
    lo = _expand(lambda w: ok(x - w, x), x - lo_dom)
    if hi <= 0 or lo <= 0:
        raise DegenerateInterval(f"no positive-width exit interval at x={x}")
    return (x - lo, x + hi)


def _expand(cond, w_max: float, iters: int = 60) -> float:
    if cond(w_max):
        return w_max
    lo_w, hi_w = 0.0, w_max
    for _ in range(iters):
        mid = 0.5 * (lo_w + hi_w)
        if cond(mid):
            lo_w = mid
        else:
            hi_w = mid
    return lo_w


def _samples(a: float, b: float, payoffs: PayoffTriple, n: int = 257) -> np.ndarray:
    pts = [np.linspace(a, b, n)]
    for w in (payoffs.f, payoffs.g):
        bps = w.breakpoints()
        inner = bps[(bps > a) & (bps < b)]
        if inner.size:
            pts.append(inner)
    return np.unique(np.concatenate(pts))


def build_deviation_family(base: RandomizedStrategy, domain: tuple[float, float],
                           x0: float, n_thresholds: int = 8
                           ) -> list[tuple[str, RandomizedStrategy]]:
    """Standard deviation family: immediate stop, never stop, symmetric
    threshold stops around x0, and the base strategy with halved intensity."""
    lo, hi = domain
    devs = [("immediate_stop", pure_stop(base.player, [(lo, hi)])),
            ("never_stop", never_stop(base.player))]
    span = max(hi - x0, x0 - lo)
    for k in range(1, n_thresholds + 1):
        theta = span * k / (n_thresholds + 1)
        stop = iv.subtract_open([(lo, hi)], [(x0 - theta, x0 + theta)])
        devs.append((f"threshold_{theta:.4g}", pure_stop(base.player, stop)))
    devs.append(("rate_halved", base.scaled(0.5)))
    return devs


def strategy_to_json(strategy: RandomizedStrategy, n_rate_samples: int = 101) -> dict:
    """JSON-ready dump: stop geometry, sampled rate curve, pushes, epsilon."""
    samples = []
    for lo, hi in strategy.rate_support:
        xs = np.linspace(lo, hi, n_rate_samples)[1:-1]
        lam = strategy.rate(xs)
        samples.extend([float(a), float(b)] for a, b in zip(xs, lam))
    return {
        "player": strategy.player,
        "stop_intervals": [[lo, hi] for lo, hi in strategy.stop_intervals()],
        "stop_points": strategy.stop_points(),
        "rate_samples": samples,
        "atoms": [[float(x), float(g)] for x, g in strategy.atoms],
        "epsilon": strategy.epsilon,
    }
