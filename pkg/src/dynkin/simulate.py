"""Monte Carlo engine for the stopping game.

Euler-Maruyama paths with randomized-stopping hazards: Lebesgue rates plus
local-time pushes accumulate into a per-player hazard compared against an
independent unit-exponential clock; pure stop sets end the game on entry,
with crossing detection along each step so thin sets are not jumped over.
Coefficients, rates and payoffs enter the hot kernel as uniform lookup tables.

Randomness is indexed by absolute path number (counter-based Philox), so
estimates are independent of chunking and threading, identical seeds give
bit-identical reports, and deviation studies share noise path-by-path
(common random numbers).
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels as kern
from .errors import SimulationPrecondition, ValidationError
from .model import DiffusionSpec, PayoffTriple
from .strategy import RandomizedStrategy

OUTCOME_NAMES = {kern.OUT_P1: "p1_first", kern.OUT_P2: "p2_first",
                 kern.OUT_SIMUL: "simultaneous", kern.OUT_CENSORED: "horizon_censored"}


@dataclass(frozen=True)
class SimParams:
    dt: float
    t_max: float
    n_paths: int
    seed: int
    band_halfwidth: float | None = None   # local-time band; None = auto
    point_band: float | None = None       # stop-point band; None = one table cell
    n_tab: int = 65536
    chunk_size: int = 32768

    def __post_init__(self):
        if self.dt <= 0 or self.t_max < self.dt:
            raise ValidationError("need dt > 0 and t_max >= dt")
        if self.n_paths < 1:
            raise ValidationError("need n_paths >= 1")
        if self.band_halfwidth is not None and self.band_halfwidth <= 0:
            raise ValidationError("band_halfwidth must be positive")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_max / self.dt))


@dataclass(frozen=True)
class SimulationReport:
    x0: float
    estimate: float
    std_error: float
    counts: dict
    outcome_means: dict
    params: dict

    def to_json(self) -> dict:
        return {"x0": self.x0, "estimate": self.estimate,
                "std_error": self.std_error, "counts": self.counts,
                "outcome_means": self.outcome_means, "params": self.params}


@dataclass(frozen=True)
class StrategyTables:
    tab_x0: float
    tab_dx: float
    mu: np.ndarray
    sigma: np.ndarray
    lam1: np.ndarray
    lam2: np.ndarray
    f: np.ndarray
    g: np.ndarray
    h: np.ndarray
    s1_lo: np.ndarray
    s1_hi: np.ndarray
    s2_lo: np.ndarray
    s2_hi: np.ndarray
    a1_x: np.ndarray
    a1_c: np.ndarray
    a1_h: np.ndarray
    a2_x: np.ndarray
    a2_c: np.ndarray
    a2_h: np.ndarray


def _n_workers() -> int:
    env = os.environ.get("DYNKIN_THREADS", "")
    if env.strip():
        return max(1, int(env))
    return os.cpu_count() or 1


def tabulate(diffusion: DiffusionSpec, payoffs: PayoffTriple,
             s1: RandomizedStrategy, s2: RandomizedStrategy,
             params: SimParams) -> StrategyTables:
    lo, hi = diffusion.lo, diffusion.hi
    xs = np.linspace(lo, hi, params.n_tab)
    tab_dx = xs[1] - xs[0]
    point_band = params.point_band if params.point_band is not None else tab_dx

    def stop_arrays(s):
        los, his = [], []
        for a, b in s.stop_set:
            if b > a:
                los.append(a)
                his.append(b)
            else:
                los.append(a - point_band)
                his.append(a + point_band)
        return np.asarray(los, dtype=float), np.asarray(his, dtype=float)

    def atom_arrays(s):
        ax, ac, ah = [], [], []
        grid_dx = params.point_band if params.point_band is not None else tab_dx
        for y, gamma in s.atoms:
            sig_y = float(diffusion.sigma(y))
            band = params.band_halfwidth
            if band is None:
                band = max(2.0 * sig_y * np.sqrt(params.dt), grid_dx)
            ax.append(y)
            ah.append(band)
            ac.append(gamma * sig_y ** 2 / (2.0 * band) * params.dt)
        return (np.asarray(ax, dtype=float), np.asarray(ac, dtype=float),
                np.asarray(ah, dtype=float))

    s1_lo, s1_hi = stop_arrays(s1)
    s2_lo, s2_hi = stop_arrays(s2)
    a1 = atom_arrays(s1)
    a2 = atom_arrays(s2)
    return StrategyTables(
        tab_x0=float(lo), tab_dx=float(tab_dx),
        mu=np.ascontiguousarray(diffusion.mu(xs)),
        sigma=np.ascontiguousarray(diffusion.sigma(xs)),
        lam1=np.ascontiguousarray(s1.rate(xs)),
        lam2=np.ascontiguousarray(s2.rate(xs)),
        f=np.ascontiguousarray(payoffs.f(xs)),
        g=np.ascontiguousarray(payoffs.g(xs)),
        h=np.ascontiguousarray(payoffs.h(xs)),
        s1_lo=s1_lo, s1_hi=s1_hi, s2_lo=s2_lo, s2_hi=s2_hi,
        a1_x=a1[0], a1_c=a1[1], a1_h=a1[2],
        a2_x=a2[0], a2_c=a2[1], a2_h=a2[2])


def choose_t_max(diffusion: DiffusionSpec, payoffs: PayoffTriple,
                 rel: float = 1e-3, cap: float = 1e4) -> float:
    """Horizon where the discounted payoff envelope is below rel * scale."""
    xs = diffusion.grid
    env = float(np.max(np.abs(payoffs.f(xs)) + np.abs(payoffs.g(xs))
                       + np.abs(payoffs.h(xs))))
    scale = 1.0 + float(np.max(np.abs(payoffs.f(xs))))
    if diffusion.r <= 0:
        return cap
    t = np.log(max(env, 1.0) / (rel * scale)) / diffusion.r
    return float(min(max(t, 1.0), cap))


def _check_r0(diffusion, s1, s2, params):
    if diffusion.r == 0.0 and (len(s1.stop_set) == 0 or len(s2.stop_set) == 0):
        raise SimulationPrecondition(
            "r = 0 with an empty stop set: horizon censoring bias is unbounded "
            "(payoffs do not vanish at infinity)")


def run_game_payoffs(diffusion: DiffusionSpec, payoffs: PayoffTriple,
                     strategies: Sequence[RandomizedStrategy], x0: float,
                     params: SimParams):
    """Per-path discounted payoffs, outcome codes and stop times."""
    s1, s2 = strategies
    if s1.player != 1 or s2.player != 2:
        raise ValidationError("strategies must be ordered (player1, player2)")
    _check_r0(diffusion, s1, s2, params)
    if not (diffusion.lo <= x0 <= diffusion.hi):
        raise ValidationError(f"x0={x0} outside the truncated state space")
    tables = tabulate(diffusion, payoffs, s1, s2, params)
    impl = kern.default_impl()
    n = params.n_paths
    chunk = params.chunk_size
    starts = list(range(0, n, chunk))

    def job(start):
        m = min(chunk, n - start)
        return kern.run_paths_block(impl, params.seed, start, m, x0,
                                    params.dt, params.n_steps, tables)

    workers = min(_n_workers(), len(starts))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, starts))
    else:
        parts = [job(s) for s in starts]
    raw = np.concatenate([p[0] for p in parts])
    outcome = np.concatenate([p[1] for p in parts])
    tau = np.concatenate([p[2] for p in parts])
    disc = np.exp(-diffusion.r * tau) * raw
    return disc, outcome, tau


def run_game(diffusion: DiffusionSpec, payoffs: PayoffTriple,
             strategies: Sequence[RandomizedStrategy], x0: float,
             params: SimParams) -> SimulationReport:
    disc, outcome, tau = run_game_payoffs(diffusion, payoffs, strategies, x0, params)
    n = disc.size
    counts = {}
    means = {}
    for code, name in OUTCOME_NAMES.items():
        m = outcome == code
        counts[name] = int(m.sum())
        means[name] = float(np.mean(disc[m])) if m.any() else None
    se = float(np.std(disc, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return SimulationReport(
        x0=float(x0), estimate=float(np.mean(disc)), std_error=se,
        counts=counts, outcome_means=means,
        params={"dt": params.dt, "t_max": params.t_max,
                "band_halfwidth": params.band_halfwidth,
                "n_paths": params.n_paths, "seed": params.seed})


def estimate_deviation_gain(diffusion: DiffusionSpec, payoffs: PayoffTriple,
                            strategies: Sequence[RandomizedStrategy],
                            deviations, player: int, x0: float,
                            params: SimParams) -> dict:
    """Gain of each unilateral deviation against the fixed opponent, with
    common random numbers: per-path payoff differences share all noise."""
    if player not in (1, 2):
        raise ValidationError("player must be 1 or 2")
    base, _, _ = run_game_payoffs(diffusion, payoffs, strategies, x0, params)
    rows = []
    for name, dev in deviations:
        pair = (dev, strategies[1]) if player == 1 else (strategies[0], dev)
        alt, _, _ = run_game_payoffs(diffusion, payoffs, pair, x0, params)
        diff = (alt - base) if player == 1 else (base - alt)
        gain = float(np.mean(diff))
        se = float(np.std(diff, ddof=1) / np.sqrt(diff.size)) if diff.size > 1 else 0.0
        rows.append({"deviation": name, "gain": gain, "std_error": se})
    best = max(rows, key=lambda r: r["gain"])
    return {"player": player, "deviations": rows,
            "max_gain": best["gain"], "max_gain_deviation": best["deviation"],
            "max_gain_std_error": best["std_error"]}


def simulate_paths(diffusion: DiffusionSpec, x0: float, params: SimParams,
                   n_steps: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Plain Euler-Maruyama path panel (no stopping), for diagnostics.

    Returns (times, X) with X of shape (n_paths, n_steps + 1).  Memory-guarded:
    use chunked reductions for large panels.
    """
    steps = params.n_steps if n_steps is None else int(n_steps)
    if params.n_paths * (steps + 1) > 60_000_000:
        raise ValidationError("path panel too large; reduce n_paths or steps")
    lo, hi = diffusion.lo, diffusion.hi
    sq = np.sqrt(params.dt)
    x = np.full(params.n_paths, float(x0))
    out = np.empty((params.n_paths, steps + 1))
    out[:, 0] = x
    rng = np.random.Generator(np.random.Philox(key=params.seed))
    for k in range(steps):
        xi = rng.standard_normal(params.n_paths)
        x = x + diffusion.mu(x) * params.dt + (diffusion.sigma(x) * sq) * xi
        np.clip(x, lo, hi, out=x)
        out[:, k + 1] = x
    times = np.arange(steps + 1) * params.dt
    return times, out


def approx_local_time(paths: np.ndarray, y: float, diffusion: DiffusionSpec,
                      params: SimParams) -> np.ndarray:
    """Local-time increments dl_k = sigma(y)^2/(2h) dt 1{|X_k - y| < h} per
    step, from the occupation-time normalization; shape (n_paths, n_steps)."""
    paths = np.atleast_2d(paths)
    band = params.band_halfwidth
    if band is None:
        band = max(2.0 * float(diffusion.sigma(y)) * np.sqrt(params.dt),
                   (diffusion.hi - diffusion.lo) / (params.n_tab - 1))
    coef = float(diffusion.sigma(y)) ** 2 / (2.0 * band) * params.dt
    return coef * (np.abs(paths[:, :-1] - y) < band)


def accumulate_hazard(paths: np.ndarray, strategy: RandomizedStrategy,
                      diffusion: DiffusionSpec, params: SimParams) -> np.ndarray:
    """Accumulated hazard of a strategy along given paths (diagnostic mirror
    of the kernel accumulation; excludes the pure stop set's +inf)."""
    paths = np.atleast_2d(paths)
    states = paths[:, :-1]
    psi = strategy.rate(states.ravel()).reshape(states.shape) * params.dt
    for y, gamma in strategy.atoms:
        psi = psi + gamma * approx_local_time(paths, y, diffusion, params)
    return np.cumsum(psi, axis=1)
