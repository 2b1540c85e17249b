"""PDE-level equilibrium verification.

Against a fixed randomized strategy the opponent's problem is a standard
optimal stopping problem: the opponent's rate enters as killing that pays out
the opponent-stop payoff, local-time pushes as point killing smeared over one
grid cell, and the pure stop set as fixed-value regions.  On top of the best
responses, two grid tests decide pure Nash existence: a sufficient condition
(nobody is asked to stop where simultaneous stopping is strictly worst) and a
nonexistence condition (someone strictly gains by waiting inside the region
where they would have to stop).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import intervals as iv
from .errors import DynkinError
from .model import B3, B4, B5, B6, DiffusionSpec, PayoffTriple, RegionPartition
from .solver import ValueSolution, solve_lcp
from .strategy import RandomizedStrategy

BIG = 1e30


@dataclass(frozen=True)
class BestResponseSolution:
    grid: np.ndarray
    w: np.ndarray
    response_stop_mask: np.ndarray
    gain: Optional[np.ndarray]  # improvement over the equilibrium value


@dataclass(frozen=True)
class PureNeVerdict:
    sufficient_holds: bool
    nonexistence_holds: bool
    inconclusive: bool
    witness_x: Optional[float] = None
    condition: Optional[str] = None

    def to_json(self) -> dict:
        return {"sufficient": self.sufficient_holds,
                "nonexistence": self.nonexistence_holds,
                "inconclusive": self.inconclusive,
                "witness_x": self.witness_x, "condition": self.condition}


def best_response_value(opponent: RandomizedStrategy, payoffs: PayoffTriple,
                        diffusion: DiffusionSpec, player: int,
                        tol: float = 1e-10,
                        equilibrium_value: np.ndarray | None = None
                        ) -> BestResponseSolution:
    """Optimal value of `player` against the opponent's fixed strategy.

    On the interior of the opponent's stop set the responder picks the better
    of accepting (g for player 1, f for player 2) or forcing simultaneity (h).
    Elsewhere a single obstacle problem runs per continuation component, with
    the opponent's hazard as killing toward their stopping payoff.
    """
    grid = diffusion.grid
    fv, gv, hv = payoffs.values(grid)
    if player == 1:
        own, opp_pay = fv, gv
        fixed_val = np.maximum(gv, hv)
        sign = 1.0
    elif player == 2:
        own, opp_pay = -gv, -fv
        fixed_val = -np.minimum(fv, hv)
        sign = -1.0
    else:
        raise DynkinError("player must be 1 or 2")

    stop_mask = iv.contains(opponent.stop_set, grid, closed=True)
    u = np.where(stop_mask, fixed_val, np.nan)

    lam = opponent.rate(grid)
    kill = lam.copy()
    source = lam * opp_pay
    for y, gamma in opponent.atoms:
        j = int(np.argmin(np.abs(grid - y)))
        if 0 < j < grid.size - 1:
            cell = 0.5 * (grid[j + 1] - grid[j - 1])
            kappa = gamma * float(diffusion.sigma(y)) ** 2 / cell
            kill[j] += kappa
            opp_pay_y = float(payoffs.g(y)) if player == 1 else -float(payoffs.f(y))
            source[j] += kappa * opp_pay_y

    for i0, i1 in _false_runs(stop_mask):
        sub = slice(i0, i1 + 1)
        sub_grid = grid[sub]
        if sub_grid.size < 3:
            # component too thin to carry a stencil: take the obstacle
            u[sub] = np.where(np.isnan(u[sub]), own[sub], u[sub])
            continue
        bc_lo = fixed_val[i0 - 1] if i0 > 0 else own[i0]
        bc_hi = fixed_val[i1 + 1] if i1 + 1 < grid.size else own[i1]
        v, _, _, _ = solve_lcp(
            _restrict(diffusion, sub_grid), sub_grid, own[sub],
            np.full(sub_grid.size, BIG), float(bc_lo), float(bc_hi),
            kill=kill[sub], source=source[sub], tol=tol)
        u[sub] = v

    band = 1e-7 * (1 + np.abs(u))
    resp_stop = np.where(stop_mask, np.abs(fixed_val - sign * hv) <= band,
                         np.abs(u - own) <= band)
    w = sign * u
    gain = None
    if equilibrium_value is not None:
        gain = (w - equilibrium_value) if player == 1 else (equilibrium_value - w)
    return BestResponseSolution(grid=grid, w=w, response_stop_mask=resp_stop,
                                gain=gain)


def _restrict(diffusion: DiffusionSpec, sub_grid: np.ndarray) -> DiffusionSpec:
    return DiffusionSpec(mu=diffusion.mu, sigma=diffusion.sigma, r=diffusion.r,
                         alpha=diffusion.alpha, beta=diffusion.beta,
                         grid=sub_grid)


def _false_runs(mask: np.ndarray):
    runs = []
    n = mask.size
    i = 0
    while i < n:
        if mask[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and not mask[j + 1]:
            j += 1
        runs.append((i, j))
        i = j + 1
    return runs


def check_pure_ne_sufficient(sol: ValueSolution, partition: RegionPartition) -> bool:
    """True iff D1* misses B3 u B6 and D2* misses B4 u B5 on the grid."""
    bad1 = sol.d1_mask & partition.mask(B3, B6)
    bad2 = sol.d2_mask & partition.mask(B4, B5)
    return not bad1.any() and not bad2.any()


def check_pure_ne_nonexistence(payoffs: PayoffTriple, diffusion: DiffusionSpec,
                               partition: RegionPartition,
                               tol: float | None = None) -> PureNeVerdict:
    """Grid test of the two nonexistence conditions.

    (i) on a component of B4 u B5, stopping strictly before exit earns the
    maximizer more than max(f, g) somewhere; (ii) symmetric for the minimizer
    on B3 u B6 against min(f, g).  The strict inequality tau < tau_exit is
    realized by absorbing component endpoints at the limiting payoff with the
    obstacle inactive there; truncation-end components absorb at the stopping
    payoff, which cannot produce a spurious verdict.
    """
    grid = partition.grid
    fv, gv = payoffs.f(grid), payoffs.g(grid)
    if tol is None:
        tol = 1e-4 * (1.0 + float(np.max(np.abs(fv)) + np.max(np.abs(gv))))

    witness = None
    condition = None

    def scan(regions, obstacle, reference, direction):
        nonlocal witness, condition
        best = -np.inf
        best_x = None
        for lo, hi in regions:
            m = (grid >= lo) & (grid <= hi)
            idx = np.nonzero(m)[0]
            if idx.size < 3:
                continue
            sub_grid = grid[idx[0]:idx[-1] + 1]
            obs = obstacle[idx[0]:idx[-1] + 1]
            v, _, _, _ = solve_lcp(
                _restrict(diffusion, sub_grid), sub_grid, obs,
                np.full(sub_grid.size, BIG), float(obs[0]), float(obs[-1]))
            margin = v[1:-1] - reference[idx[0] + 1:idx[-1]]
            k = int(np.argmax(margin))
            if margin[k] > best:
                best = float(margin[k])
                best_x = float(sub_grid[1 + k])
        if best > tol:
            witness = best_x
            condition = direction
            return True
        return False

    b45 = partition.intervals(B4) + partition.intervals(B5)
    fires_i = scan(b45, fv, np.maximum(fv, gv), "(21)")
    fires_ii = False
    if not fires_i:
        b36 = partition.intervals(B3) + partition.intervals(B6)
        fires_ii = scan(b36, -gv, -np.minimum(fv, gv), "(22)")

    nonexistence = fires_i or fires_ii
    return PureNeVerdict(sufficient_holds=False, nonexistence_holds=nonexistence,
                         inconclusive=not nonexistence, witness_x=witness,
                         condition=condition)


def gain_allowance(gain_fine: float, dx_fine: float,
                   gain_coarse: float, dx_coarse: float) -> float:
    """Discretization allowance C * dx for best-response gains, with C from
    first-order Richardson extrapolation of the max gain on two grids."""
    if dx_coarse <= dx_fine:
        raise DynkinError("need dx_coarse > dx_fine for Richardson estimation")
    c = (gain_coarse - gain_fine) / (dx_coarse - dx_fine)
    return max(c, 0.0) * dx_fine


def pure_ne_verdict(sol: ValueSolution, partition: RegionPartition,
                    payoffs: PayoffTriple, diffusion: DiffusionSpec,
                    tol: float | None = None) -> PureNeVerdict:
    """Combined verdict: the sufficient test first, the nonexistence tests
    otherwise.  The two can never both hold."""
    sufficient = check_pure_ne_sufficient(sol, partition)
    non = check_pure_ne_nonexistence(payoffs, diffusion, partition, tol)
    if sufficient and non.nonexistence_holds:
        raise DynkinError("sufficient and nonexistence tests both fired; "
                          "inconsistent discretization")
    return PureNeVerdict(sufficient_holds=sufficient,
                         nonexistence_holds=non.nonexistence_holds,
                         inconclusive=not sufficient and not non.nonexistence_holds,
                         witness_x=non.witness_x if not sufficient else None,
                         condition=non.condition if not sufficient else None)
