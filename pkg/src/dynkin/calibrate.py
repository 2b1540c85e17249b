"""Epsilon-equilibrium calibration of randomized strategies.

When the exact Nash construction is unavailable (some points have the
simultaneous payoff strictly outside the others on the f <= g side), each
player still randomizes on their stopping set inside those regions, with
intensities large enough that the opponent cannot gain more than epsilon by
deviating.  The certificate per calibration point x is

    P_x(own clock outlasts tau_exit ^ k(x)) * (envelope gap) <= eps / 4,

where tau_exit leaves a small interval on which both payoffs move by at most
d(x), and k(x) is the finite horizon compensating discounted negative
payoffs; points where the opponent does not stop carry a second, inf-side
condition whose horizon also caps at half the first passage into the
opponent's stopping set.  Rates are constant per component of the
randomization set, with local-time pushes added at interior component edges
(a one-sided occupation deficit would otherwise push the required rate over
the cap); intensities are found by doubling search.  Values are intentionally
non-minimal: dominating intensities preserve the equilibrium.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import solve_banded

from . import intervals as iv
from .errors import CalibrationFailure, ValidationError
from .model import B3, B4, B5, B6, DiffusionSpec, PayoffTriple, RegionPartition, make_grid
from .solver import ValueSolution
from .strategy import (RandomizedStrategy, build_nash_strategies,
                       check_simplified_condition, exit_interval, _past_ends,
                       stop_mask_intervals)

RATE_CAP = 1e9
SAFETY = 0.5          # calibrate to SAFETY * eps/4, assert at eps/4
TAIL_EXPONENT = 40.0  # lambda_1 * k above this: exit-before-k tail negligible


@dataclass(frozen=True)
class CalibrationPoint:
    x: float
    case: str                  # "both_stop" or "opponent_continues"
    d: float
    k: float
    gap: float
    exit_lo: float
    exit_hi: float
    achieved: float = np.nan   # P * gap for the calibrated hazard


@dataclass(frozen=True)
class EpsilonCalibration:
    epsilon: float
    player: int
    interval_rates: tuple      # ((lo, hi, C_n), ...)
    atom_coefs: tuple          # ((x, Gamma), ...)
    points: tuple              # CalibrationPoint records
    envelope: Callable = field(repr=False)
    d_of_x: Callable = field(repr=False)
    k_of_x: Callable = field(repr=False)


# -- payoff envelope -----------------------------------------------------------


def estimate_envelope(diffusion: DiffusionSpec, payoffs: PayoffTriple,
                      n_paths: int = 10000, n_anchors: int = 17,
                      dt: float = 0.05, seed: int = 977,
                      safety: float = 1.2) -> Callable:
    """Monte Carlo estimate of M(x) = E_x sup_t e^{-rt}(|f|+|g|+|h|)(X_t) on
    anchor points, with bracketing-max interpolation and a 20% safety factor."""
    lo, hi = diffusion.lo, diffusion.hi
    anchors = np.linspace(lo, hi, n_anchors)
    grid = diffusion.grid
    env_static = float(np.max(np.abs(payoffs.f(grid)) + np.abs(payoffs.g(grid))
                              + np.abs(payoffs.h(grid))))
    if diffusion.r > 0:
        t_max = min(np.log(max(env_static, 1.0) * 1e3) / diffusion.r, 500.0)
    else:
        t_max = 100.0
    steps = max(int(t_max / dt), 1)
    rng = np.random.Generator(np.random.Philox(key=seed))
    sq = np.sqrt(dt)
    values = np.empty(n_anchors)
    for i, a in enumerate(anchors):
        x = np.full(n_paths, float(a))
        best = np.abs(payoffs.f(x)) + np.abs(payoffs.g(x)) + np.abs(payoffs.h(x))
        disc = 1.0
        for _ in range(steps):
            xi = rng.standard_normal(n_paths)
            x = x + diffusion.mu(x) * dt + (diffusion.sigma(x) * sq) * xi
            np.clip(x, lo, hi, out=x)
            disc *= np.exp(-diffusion.r * dt)
            cur = disc * (np.abs(payoffs.f(x)) + np.abs(payoffs.g(x))
                          + np.abs(payoffs.h(x)))
            np.maximum(best, cur, out=best)
        values[i] = best.mean()
    values *= safety

    def envelope(xs):
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        idx = np.clip(np.searchsorted(anchors, xs) - 1, 0, n_anchors - 2)
        out = np.maximum(values[idx], values[idx + 1])
        return out if out.size > 1 else float(out[0])

    return envelope


# -- d(x), k(x) branches -------------------------------------------------------


def _d_plus(w_val: float, eps: float) -> float:
    return eps / 4 if w_val + eps / 4 >= 0 else eps / 8


def _k_plus(w_val: float, eps: float, r: float) -> float:
    if w_val + eps / 4 >= 0:
        return np.inf
    if r <= 0:
        raise CalibrationFailure(
            "finite compensation horizon needs r > 0 with negative payoffs")
    return np.log((w_val + eps / 8) / (w_val + eps / 4)) / r


def _d_minus(w_val: float, eps: float) -> float:
    return eps / 4 if w_val - eps / 4 <= 0 else eps / 8


def _k_minus(w_val: float, eps: float, r: float) -> float:
    if w_val - eps / 4 <= 0:
        return np.inf
    if r <= 0:
        raise CalibrationFailure(
            "finite compensation horizon needs r > 0 with positive payoffs")
    return np.log((w_val - eps / 8) / (w_val - eps / 4)) / r


# -- no-mark probabilities -----------------------------------------------------


@dataclass(frozen=True)
class HazardSpec:
    """Candidate hazard: constant rates on intervals plus local-time pushes."""
    rate_los: tuple
    rate_his: tuple
    rates: tuple
    atom_xs: tuple
    atom_gammas: tuple

    def scaled(self, s: float) -> "HazardSpec":
        return HazardSpec(self.rate_los, self.rate_his,
                          tuple(c * s for c in self.rates),
                          self.atom_xs, tuple(g * s for g in self.atom_gammas))


def elliptic_no_mark_prob(diffusion: DiffusionSpec, hazard: HazardSpec,
                          x: float, lo: float, hi: float, n: int = 513) -> float:
    """u(x) = E_x exp(-integrated hazard along X until exiting (lo, hi)) by a
    single banded solve of (mu d + (sigma^2/2) d^2 - hazard) u = 0 with u = 1
    at the boundary; pushes enter as point killing smeared over one cell."""
    anchors = [x] + [a for a in hazard.atom_xs if lo < a < hi] + \
        [a for a in hazard.rate_los if lo < a < hi] + \
        [a for a in hazard.rate_his if lo < a < hi]
    grid = make_grid(lo, hi, n, anchors=anchors)
    m = grid.size
    mu = diffusion.mu(grid)
    sig2 = diffusion.sigma(grid) ** 2
    hm = grid[1:-1] - grid[:-2]
    hp = grid[2:] - grid[1:-1]
    mup = np.maximum(mu[1:-1], 0.0)
    mum = np.maximum(-mu[1:-1], 0.0)
    sub = sig2[1:-1] / (hm * (hm + hp)) + mum / hm
    sup = sig2[1:-1] / (hp * (hm + hp)) + mup / hp

    kill = np.zeros(m)
    for rlo, rhi, c in zip(hazard.rate_los, hazard.rate_his, hazard.rates):
        kill += np.where((grid >= rlo) & (grid <= rhi), c, 0.0)
    for ax, gamma in zip(hazard.atom_xs, hazard.atom_gammas):
        if not lo < ax < hi:
            continue
        j = int(np.argmin(np.abs(grid - ax)))
        if 0 < j < m - 1:
            cell = 0.5 * (grid[j + 1] - grid[j - 1])
            kill[j] += gamma * float(diffusion.sigma(ax)) ** 2 / cell

    ab = np.zeros((3, m))
    rhs = np.zeros(m)
    ab[1, 0] = ab[1, -1] = 1.0
    rhs[0] = rhs[-1] = 1.0
    idx = np.arange(1, m - 1)
    ab[1, idx] = -(sub + sup) - kill[1:-1]
    ab[0, idx + 1] = sup
    ab[2, idx - 1] = sub
    u = solve_banded((1, 1), ab, rhs)
    return float(np.interp(x, grid, u))


def mc_no_mark_prob(diffusion: DiffusionSpec, hazard: HazardSpec, x: float,
                    lo: float, hi: float, k_horizon: float,
                    passage_set=None, n_paths: int = 2000,
                    seed: int = 1234) -> float:
    """Monte Carlo estimate of P_x(no mark before tau_exit ^ k ^ T_pass/2),
    T_pass the first passage into passage_set.  Paths censored at the
    simulation cap keep their survival weight (conservative)."""
    width = hi - lo
    xs_probe = np.linspace(lo, hi, 65)
    sig_min = float(np.min(diffusion.sigma(xs_probe)))
    cap_t = 64.0 * width ** 2 / sig_min ** 2
    if np.isfinite(k_horizon):
        cap_t = min(cap_t, k_horizon)
    dt = max(cap_t / 4096.0, min(width ** 2 / (400.0 * sig_min ** 2), cap_t), 1e-14)
    dt = min(dt, width ** 2 / (400.0 * sig_min ** 2))
    n_steps = max(int(np.ceil(cap_t / dt)), 1)
    track = passage_set is not None and len(passage_set) > 0
    total_steps = 2 * n_steps if track else n_steps

    rng = np.random.Generator(np.random.Philox(key=seed))
    xs = np.full(n_paths, float(x))
    occ = np.zeros(n_paths)
    occ_hist = np.zeros((n_paths, n_steps + 1)) if track else None
    t_exit = np.full(n_paths, np.inf)
    t_pass = np.full(n_paths, np.inf)
    exited = np.zeros(n_paths, dtype=bool)
    done = np.zeros(n_paths, dtype=bool)
    sq = np.sqrt(dt)
    bands = [(ax, max(2.0 * float(diffusion.sigma(ax)) * sq, width / 512.0), g)
             for ax, g in zip(hazard.atom_xs, hazard.atom_gammas)]
    for k in range(total_steps):
        if done.all():
            break
        live = np.nonzero(~done)[0]
        xl = xs[live]
        acc = live[(~exited[live]) & np.full(live.size, k < n_steps)]
        if acc.size:
            xa = xs[acc]
            d_occ = np.zeros(acc.size)
            for rlo, rhi, c in zip(hazard.rate_los, hazard.rate_his, hazard.rates):
                d_occ += np.where((xa >= rlo) & (xa <= rhi), c * dt, 0.0)
            for ax, band, gamma in bands:
                d_occ += np.where(np.abs(xa - ax) < band,
                                  gamma * float(diffusion.sigma(ax)) ** 2
                                  / (2 * band) * dt, 0.0)
            occ[acc] += d_occ
        if track and k < n_steps:
            occ_hist[:, k + 1] = occ
        xi = rng.standard_normal(live.size)
        xn = xl + diffusion.mu(xl) * dt + (diffusion.sigma(xl) * sq) * xi
        hit_exit = (~exited[live]) & ((xn <= lo) | (xn >= hi))
        t_exit[live[hit_exit]] = (k + 1) * dt
        exited[live[hit_exit]] = True
        if track:
            inpass = iv.contains(passage_set, xn, closed=True) & \
                ~np.isfinite(t_pass[live])
            t_pass[live[inpass]] = (k + 1) * dt
            done[live] = exited[live] & (np.isfinite(t_pass[live])
                                         | ((k + 1) * dt >= 2 * cap_t))
        else:
            done[live] = exited[live]
        xs[live] = xn
    horizon = np.minimum(np.minimum(t_exit, k_horizon), 0.5 * t_pass)
    horizon = np.minimum(horizon, n_steps * dt)
    if track:
        idx = np.clip((horizon / dt).astype(np.int64), 0, n_steps)
        occ_eff = occ_hist[np.arange(n_paths), idx]
    else:
        occ_eff = occ
    return float(np.mean(np.exp(-occ_eff)))


def _tail_negligible(diffusion, lo, hi, k_horizon) -> bool:
    if not np.isfinite(k_horizon):
        return True
    xs = np.linspace(lo, hi, 65)
    sig2_min = float(np.min(diffusion.sigma(xs) ** 2))
    mu_max = float(np.max(np.abs(diffusion.mu(xs))))
    lam1 = np.pi ** 2 * sig2_min / (2 * (hi - lo) ** 2) - mu_max ** 2 / (2 * sig2_min)
    return lam1 * k_horizon >= TAIL_EXPONENT


def _no_mark(diffusion, hz, x, lo, hi, k, passage_set, seed):
    use_passage = passage_set is not None and len(passage_set) > 0
    if not use_passage and _tail_negligible(diffusion, lo, hi, k):
        return elliptic_no_mark_prob(diffusion, hz, x, lo, hi)
    return mc_no_mark_prob(diffusion, hz, x, lo, hi, k,
                           passage_set=passage_set if use_passage else None,
                           seed=seed)


# -- calibration search --------------------------------------------------------


def _component_points(lo, hi, grid, max_points: int = 21) -> np.ndarray:
    dx = float(np.max(np.diff(grid)))
    a = max(lo, grid[0] + dx)
    b = min(hi, grid[-1] - dx)
    if b <= a:
        a = b = 0.5 * (lo + hi)
    inside = grid[(grid >= a) & (grid <= b)]
    if inside.size > max_points:
        sel = np.linspace(0, inside.size - 1, max_points).astype(int)
        inside = inside[sel]
    return np.unique(np.concatenate([[a], inside, [b]]))


def _gap(envelope, x, lo, hi, w_val, eps):
    m = float(np.max(np.atleast_1d(envelope(np.array([lo, x, hi])))))
    return m - w_val - eps / 4.0


def _point_static(diffusion, payoffs, envelope, x, opp_stop, w_plus, w_minus,
                  eps):
    """Scale-independent certificate data at one point: case, d, k, exit
    interval, envelope gap, and whether the half-passage horizon applies."""
    r = diffusion.r
    both_stop = iv.contains(opp_stop, np.array([x]), closed=True)[0]
    out = []
    if both_stop:
        wv = float(w_plus(x))
        d, k = _d_plus(wv, eps), _k_plus(wv, eps, r)
        lo, hi = exit_interval(x, d, payoffs, diffusion)
        gap = _gap(envelope, x, lo, hi, wv, eps)
        out.append(("both_stop", d, k, lo, hi, gap, False))
    else:
        wv = float(w_minus(x))
        d1, k1 = _d_plus(wv, eps), _k_plus(wv, eps, r)
        lo1, hi1 = exit_interval(x, d1, payoffs, diffusion)
        out.append(("opponent_continues", d1, k1, lo1, hi1,
                    _gap(envelope, x, lo1, hi1, wv, eps), False))
        d2, k2 = _d_minus(wv, eps), _k_minus(wv, eps, r)
        lo2, hi2 = exit_interval(x, d2, payoffs, diffusion)
        out.append(("opponent_continues", d2, k2, lo2, hi2,
                    _gap(envelope, x, lo2, hi2, -wv, eps), True))
    return out


def _double_until_pass(diffusion, payoffs, envelope, pts, hz0, opp_stop,
                       passage_set, w_plus, w_minus, eps, seed):
    static = [(x, spec) for x in pts
              for spec in _point_static(diffusion, payoffs, envelope, x,
                                        opp_stop, w_plus, w_minus, eps)]
    scale = 1.0
    target = SAFETY * eps / 4.0
    while True:
        hz = hz0.scaled(scale)
        recs = []
        ok = True
        for x, (case, d, k, lo, hi, gap, with_passage) in static:
            if gap <= 0:
                recs.append(CalibrationPoint(x=x, case=case, d=d, k=k, gap=gap,
                                             exit_lo=lo, exit_hi=hi, achieved=0.0))
                continue
            p = _no_mark(diffusion, hz, x, lo, hi, k,
                         passage_set if with_passage else None, seed)
            recs.append(CalibrationPoint(x=x, case=case, d=d, k=k, gap=gap,
                                         exit_lo=lo, exit_hi=hi,
                                         achieved=p * gap))
            if recs[-1].achieved > target:
                ok = False
                break
        if ok:
            return scale, recs
        scale *= 2.0
        if scale > RATE_CAP:
            bad = max(recs, key=lambda r: r.achieved)
            raise CalibrationFailure(
                f"probability target not met at rate cap {RATE_CAP:g} "
                f"(worst point x={bad.x}, achieved {bad.achieved:.3g})",
                point=bad.x)


def _calibrate_set(diffusion, payoffs, envelope, randomize, opp_stop,
                   passage_set, w_plus, w_minus, eps, seed):
    grid = diffusion.grid
    interval_rates = []
    atom_coefs: dict[float, float] = {}
    points: list[CalibrationPoint] = []
    snap = 1e-9 * (1 + abs(grid[0]) + abs(grid[-1]))

    iso = [(lo, hi) for lo, hi in randomize if hi - lo <= snap]
    comps = [(lo, hi) for lo, hi in randomize if hi - lo > snap]

    for (lo, hi) in iso:
        x = 0.5 * (lo + hi)
        hz0 = HazardSpec((), (), (), (x,), (1.0,))
        gamma, recs = _double_until_pass(diffusion, payoffs, envelope, [x], hz0,
                                         opp_stop, passage_set, w_plus, w_minus,
                                         eps, seed)
        atom_coefs[x] = max(atom_coefs.get(x, 0.0), gamma)
        points.extend(recs)

    for (lo, hi) in comps:
        pts = _component_points(lo, hi, grid)
        edge_atoms = [e for e in (lo, hi)
                      if grid[0] + snap < e < grid[-1] - snap]
        hz0 = HazardSpec((lo,), (hi,), (1.0,), tuple(edge_atoms),
                         tuple(1.0 for _ in edge_atoms))
        scale, recs = _double_until_pass(diffusion, payoffs, envelope, pts, hz0,
                                         opp_stop, passage_set, w_plus, w_minus,
                                         eps, seed)
        interval_rates.append((float(lo), float(hi), scale))
        for a in edge_atoms:
            atom_coefs[a] = max(atom_coefs.get(a, 0.0), scale)
        points.extend(recs)

    return interval_rates, sorted(atom_coefs.items()), points


def calibrate_epsilon_strategies(sol: ValueSolution, partition: RegionPartition,
                                 payoffs: PayoffTriple, diffusion: DiffusionSpec,
                                 epsilon: float, seed: int = 555,
                                 envelope: Callable | None = None
                                 ) -> tuple[RandomizedStrategy, RandomizedStrategy,
                                            tuple[EpsilonCalibration, EpsilonCalibration]]:
    """Epsilon-equilibrium strategy pair.

    Player 2 randomizes on D2* inside B4 u B5, player 1 on D1* inside
    B3 u B6; both stop purely on the rest of their stopping sets.  Player 1's
    construction is the payoff swap (f, g) -> (-g, -f) applied to player 2's
    code path.  When the exact Nash construction also applies, its rates and
    pushes floor the calibrated ones.
    """
    if epsilon <= 0:
        raise ValidationError("epsilon must be > 0")
    d1 = stop_mask_intervals(sol, partition, "d1")
    d2 = stop_mask_intervals(sol, partition, "d2")
    b45 = iv.normalize(partition.intervals(B4) + partition.intervals(B5))
    b36 = iv.normalize(partition.intervals(B3) + partition.intervals(B6))

    r1_set = iv.intersect(d1, b36)
    r2_set = iv.intersect(d2, b45)

    env = envelope
    if env is None:
        if r1_set or r2_set:
            env = estimate_envelope(diffusion, payoffs, seed=seed)
        else:
            env = lambda xs: np.zeros_like(np.atleast_1d(xs))  # noqa: E731

    rates2, atoms2, pts2 = _calibrate_set(
        diffusion, payoffs, env, r2_set, opp_stop=d1, passage_set=d1,
        w_plus=payoffs.f, w_minus=payoffs.g, eps=epsilon, seed=seed)
    rates1, atoms1, pts1 = _calibrate_set(
        diffusion, payoffs, env, r1_set, opp_stop=d2, passage_set=d2,
        w_plus=lambda xs: -payoffs.g(xs), w_minus=lambda xs: -payoffs.f(xs),
        eps=epsilon, seed=seed + 1)

    nash = None
    if check_simplified_condition(partition):
        nash = build_nash_strategies(sol, partition, payoffs, diffusion)

    pure1 = iv.subtract_open(d1, _past_ends(b36, sol.grid))
    pure2 = iv.subtract_open(d2, _past_ends(b45, sol.grid))

    s1 = _assemble(1, pure1, rates1, atoms1, nash[0] if nash else None, epsilon)
    s2 = _assemble(2, pure2, rates2, atoms2, nash[1] if nash else None, epsilon)
    cal1 = EpsilonCalibration(
        epsilon=epsilon, player=1, interval_rates=tuple(rates1),
        atom_coefs=tuple(atoms1), points=tuple(pts1), envelope=env,
        d_of_x=lambda x: _d_plus(float(-payoffs.g(x)), epsilon),
        k_of_x=lambda x: _k_plus(float(-payoffs.g(x)), epsilon, diffusion.r))
    cal2 = EpsilonCalibration(
        epsilon=epsilon, player=2, interval_rates=tuple(rates2),
        atom_coefs=tuple(atoms2), points=tuple(pts2), envelope=env,
        d_of_x=lambda x: _d_plus(float(payoffs.f(x)), epsilon),
        k_of_x=lambda x: _k_plus(float(payoffs.f(x)), epsilon, diffusion.r))
    return s1, s2, (cal1, cal2)


def _assemble(player, pure, rates, atoms, nash_strategy, epsilon):
    rates = tuple(rates)
    atom_map = {float(x): float(g) for x, g in atoms}
    if nash_strategy is not None:
        for x, g in nash_strategy.atoms:
            atom_map[x] = max(atom_map.get(x, 0.0), g)
    nash_rate = nash_strategy.rate if nash_strategy is not None else None
    support = [(lo, hi) for lo, hi, _ in rates]
    if nash_strategy is not None:
        support = iv.union(support, nash_strategy.rate_support)

    def rate(xs):
        xs = np.asarray(xs, dtype=float)
        out = np.zeros(xs.shape)
        for lo, hi, c in rates:
            out = np.maximum(out, np.where((xs >= lo) & (xs <= hi), c, 0.0))
        if nash_rate is not None:
            out = np.maximum(out, nash_rate(xs))
        return out

    return RandomizedStrategy(player=player, stop_set=tuple(pure), rate=rate,
                              atoms=tuple(sorted(atom_map.items())),
                              epsilon=epsilon, rate_support=tuple(support))


def verify_calibration(diffusion, payoffs, strategy: RandomizedStrategy,
                       calibration: EpsilonCalibration, passage_set=None,
                       seed: int = 31337) -> list[CalibrationPoint]:
    """Re-evaluate every certificate with the strategy's full hazard and a
    fresh seed; all records must come back <= eps/4."""
    hz = HazardSpec(
        tuple(lo for lo, hi, _ in calibration.interval_rates),
        tuple(hi for lo, hi, _ in calibration.interval_rates),
        tuple(c for _, _, c in calibration.interval_rates),
        tuple(x for x, _ in strategy.atoms),
        tuple(g for _, g in strategy.atoms))
    out = []
    for rec in calibration.points:
        p = _no_mark(diffusion, hz, rec.x, rec.exit_lo, rec.exit_hi, rec.k,
                     passage_set if rec.case == "opponent_continues" else None,
                     seed)
        out.append(CalibrationPoint(
            x=rec.x, case=rec.case, d=rec.d, k=rec.k, gap=rec.gap,
            exit_lo=rec.exit_lo, exit_hi=rec.exit_hi,
            achieved=p * max(rec.gap, 0.0)))
    return out
