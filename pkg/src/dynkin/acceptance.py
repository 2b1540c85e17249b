"""Regression corpus: one runner per acceptance criterion.

Each runner returns CriterionResult rows with a pass flag and a measured
detail string; the CLI examples mode tabulates them and pytest asserts them.
All tolerances are fixed here, not tuned per run.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .calibrate import calibrate_epsilon_strategies
from .examples import register_examples
from .simulate import SimParams, estimate_deviation_gain, run_game
from .solver import brute_force_oracle, solve_value, verify_martingale_conditions
from .strategy import build_deviation_family, build_nash_strategies
from .verify import pure_ne_verdict

MC_PATHS = 200_000
MC_DT = 1e-4
DEV_PATHS = 10_000
DEV_DT = 1e-3
BASE_SEED = 20240811


@dataclass(frozen=True)
class CriterionResult:
    criterion: str
    example: str
    passed: bool
    detail: str


class CorpusRun:
    """Caches solved examples and strategies across criteria."""

    def __init__(self, grid_n: int | None = None, mc_paths: int = MC_PATHS,
                 mc_dt: float = MC_DT, dev_paths: int = DEV_PATHS,
                 dev_dt: float = DEV_DT, seed: int = BASE_SEED,
                 only_examples: set | None = None):
        self.defs = register_examples()
        self.grid_n = grid_n
        self.mc_paths = mc_paths
        self.mc_dt = mc_dt
        self.dev_paths = dev_paths
        self.dev_dt = dev_dt
        self.seed = seed
        self.only_examples = only_examples
        self._probs = {}
        self._sols = {}
        self._nash = {}
        self._cal = {}

    def wants(self, ex_id: str) -> bool:
        return self.only_examples is None or ex_id in self.only_examples

    def problem(self, ex_id: str):
        if ex_id not in self._probs:
            self._probs[ex_id] = self.defs[ex_id].build(grid_n=self.grid_n)
        return self._probs[ex_id]

    def solution(self, ex_id: str):
        if ex_id not in self._sols:
            self._sols[ex_id] = self.problem(ex_id).solve()
        return self._sols[ex_id]

    def nash(self, ex_id: str):
        if ex_id not in self._nash:
            prob = self.problem(ex_id)
            self._nash[ex_id] = build_nash_strategies(
                self.solution(ex_id), prob.partition, prob.payoffs, prob.diffusion)
        return self._nash[ex_id]

    def calibrated(self, ex_id: str, epsilon: float):
        key = (ex_id, epsilon)
        if key not in self._cal:
            prob = self.problem(ex_id)
            self._cal[key] = calibrate_epsilon_strategies(
                self.solution(ex_id), prob.partition, prob.payoffs,
                prob.diffusion, epsilon=epsilon, seed=self.seed)
        return self._cal[key]

    def sim_params(self, prob, n_paths, dt, seed_offset=0):
        from .simulate import choose_t_max
        t_max = choose_t_max(prob.diffusion, prob.payoffs)
        dx = float(np.max(np.diff(prob.diffusion.grid)))
        return SimParams(dt=dt, t_max=t_max, n_paths=n_paths,
                         seed=self.seed + seed_offset, point_band=dx)


def ex_4_4_closed_form(xs, r=0.1):
    q = np.sqrt(2 * r)
    c = 2 * (1 - np.exp(-2 * q)) / (np.exp(2 * q) - np.exp(-2 * q))
    return c * np.exp(q * xs) + (2 - c) * np.exp(-q * xs)


def ex_5_1_threshold_oracle(r=0.1) -> float:
    """Independent bisection for tanh(b sqrt(2r)) = 2 / (b sqrt(2r))."""
    q = np.sqrt(2 * r)
    a, c = 1e-6, 50.0
    for _ in range(200):
        m = 0.5 * (a + c)
        if q * m * np.tanh(q * m) <= 2.0:
            a = m
        else:
            c = m
    return 0.5 * (a + c)


# -- criteria ------------------------------------------------------------------


def criterion_1_value_ex_4_4(run: CorpusRun) -> list[CriterionResult]:
    if not run.wants("ex_4_4"):
        return []
    t0 = time.time()
    prob = run.problem("ex_4_4")
    sol = solve_value(prob.assoc, prob.diffusion)
    elapsed = time.time() - t0
    grid = sol.grid
    inner = (grid > 0) & (grid < 2)
    err = float(np.max(np.abs(sol.v[inner] - ex_4_4_closed_form(grid[inner]))))
    ok = err <= 1e-3 and elapsed < 10.0
    return [CriterionResult("C1_value_ex_4_4", "ex_4_4", ok,
                            f"sup-error {err:.2e} (<=1e-3), {elapsed:.2f}s (<10s)")]


def criterion_2_value_ex_4_2(run: CorpusRun) -> list[CriterionResult]:
    if not run.wants("ex_4_2"):
        return []
    sol = run.solution("ex_4_2")
    grid = sol.grid
    inner = np.abs(grid) <= 1.0
    err = float(np.max(np.abs(sol.v[inner] - (np.abs(grid[inner]) + 1.0))))
    masks_full = bool(sol.d1_mask.all() and sol.d2_mask.all())
    ok = err <= 1e-6 and masks_full
    return [CriterionResult("C2_value_ex_4_2", "ex_4_2", ok,
                            f"sup-error {err:.2e} (<=1e-6), masks full: {masks_full}")]


def criterion_3_strategy_ex_4_3(run: CorpusRun) -> list[CriterionResult]:
    if not run.wants("ex_4_3"):
        return []
    _, s2 = run.nash("ex_4_3")
    atom_ok = s2.atoms == ((2.0, 0.25),)
    r = 1.0 / 9.0

    def paper_rate(x):
        if x <= 0:
            return -2 * r * x / 4.0
        if x <= 2:
            return 0.0
        if x < 3:
            return (1 - r * x * x) / (x * x - (2 * x - 4))
        return 0.0

    pts = np.array([-3.0, -2.0, -1.0, -0.5, 0.5, 1.5, 2.2, 2.5, 2.9, 3.5])
    got = s2.rate(pts)
    want = np.array([paper_rate(x) for x in pts])
    rel = np.abs(got - want) / np.maximum(np.abs(want), 1e-300)
    rate_ok = bool(np.all((np.abs(got - want) == 0) | (rel <= 1e-12)))
    ok = atom_ok and rate_ok
    return [CriterionResult("C3_strategy_ex_4_3", "ex_4_3", ok,
                            f"atom {s2.atoms}, rate max rel dev "
                            f"{float(np.max(rel)):.2e} (<=1e-12)")]


def criterion_4_threshold_ex_5_1(run: CorpusRun) -> list[CriterionResult]:
    if not run.wants("ex_5_1"):
        return []
    sol = run.solution("ex_5_1")
    root = ex_5_1_threshold_oracle()
    paper_const_ok = abs(root - 4.618230) <= 1e-5
    d1 = sorted(sol.free_boundaries["d1"])
    err = max(abs(-d1[0] - root), abs(d1[1] - root)) if len(d1) == 2 else np.inf
    ok = err <= 1e-3 and paper_const_ok
    return [CriterionResult("C4_threshold_ex_5_1", "ex_5_1", ok,
                            f"boundary error {err:.2e} (<=1e-3), root {root:.6f}")]


def criterion_5_mc_values(run: CorpusRun) -> list[CriterionResult]:
    out = []
    targets = {
        "ex_4_2": (0.5, lambda: 1.5),
        "ex_4_4": (1.0, lambda: float(ex_4_4_closed_form(np.array([1.0]))[0])),
        "ex_4_3": (0.0, lambda: 0.0),
    }
    for ex_id, (x0, target_fn) in targets.items():
        if not run.wants(ex_id):
            continue
        prob = run.problem(ex_id)
        strategies = run.nash(ex_id)
        params = run.sim_params(prob, run.mc_paths, run.mc_dt)
        t0 = time.time()
        rep = run_game(prob.diffusion, prob.payoffs, strategies, x0, params)
        elapsed = time.time() - t0
        target = target_fn()
        tol = 3 * rep.std_error + 0.02
        err = abs(rep.estimate - target)
        ok = err <= tol and elapsed <= 300.0
        out.append(CriterionResult(
            "C5_mc_value", ex_id, ok,
            f"|{rep.estimate:.5f} - {target:.5f}| = {err:.4f} "
            f"(<= 3SE+0.02 = {tol:.4f}), {elapsed:.0f}s (<=300s)"))
    return out


def criterion_6_deviation_gains(run: CorpusRun) -> list[CriterionResult]:
    out = []
    for ex_id in ("ex_4_2", "ex_4_3", "ex_4_4"):
        if not run.wants(ex_id):
            continue
        prob = run.problem(ex_id)
        strategies = run.nash(ex_id)
        x0 = run.defs[ex_id].x0
        params = run.sim_params(prob, run.dev_paths, run.dev_dt, seed_offset=7)
        for player in (1, 2):
            devs = build_deviation_family(strategies[player - 1],
                                          (prob.diffusion.lo, prob.diffusion.hi), x0)
            res = estimate_deviation_gain(prob.diffusion, prob.payoffs, strategies,
                                          devs, player, x0, params)
            tol = 3 * res["max_gain_std_error"] + 0.02
            ok = res["max_gain"] <= tol
            out.append(CriterionResult(
                "C6_deviation", f"{ex_id}_p{player}", ok,
                f"max gain {res['max_gain']:.4f} ({res['max_gain_deviation']}) "
                f"<= {tol:.4f}"))
    if not run.wants("ex_5_1"):
        return out
    prob = run.problem("ex_5_1")
    eps = 0.05
    s1, s2, _ = run.calibrated("ex_5_1", eps)
    params = run.sim_params(prob, run.dev_paths, run.dev_dt, seed_offset=8)
    b = float(sorted(run.solution("ex_5_1").free_boundaries["d1"])[1])
    for player, strat in ((1, s1), (2, s2)):
        devs = build_deviation_family(strat, (prob.diffusion.lo, prob.diffusion.hi),
                                      run.defs["ex_5_1"].x0)
        if player == 1:
            # threshold stops at multiples of the free boundary b
            from .intervals import subtract_open
            from .strategy import pure_stop
            dom = (prob.diffusion.lo, prob.diffusion.hi)
            for mult in (0.5, 0.75, 1.0, 1.5):
                theta = min(mult * b, prob.diffusion.hi - 1e-6)
                stop = subtract_open([dom], [(-theta, theta)])
                devs.append((f"threshold_b_{mult:g}", pure_stop(1, stop)))
        res = estimate_deviation_gain(prob.diffusion, prob.payoffs, (s1, s2),
                                      devs, player, run.defs["ex_5_1"].x0, params)
        tol = eps + 3 * res["max_gain_std_error"] + 0.02
        ok = res["max_gain"] <= tol
        out.append(CriterionResult(
            "C6_deviation_eps", f"ex_5_1_p{player}", ok,
            f"max gain {res['max_gain']:.4f} ({res['max_gain_deviation']}) "
            f"<= eps+3SE+0.02 = {tol:.4f}"))
    return out


def criterion_7_martingale(run: CorpusRun) -> list[CriterionResult]:
    out = []
    for ex_id in run.defs:
        if not run.wants(ex_id):
            continue
        prob = run.problem(ex_id)
        sol = run.solution(ex_id)
        scale = 1.0 + float(np.max(np.abs(sol.v)))
        dx = float(np.max(np.diff(sol.grid)))
        tol = 1e-6 * scale + 100.0 * dx * dx * scale
        rep = verify_martingale_conditions(sol, prob.diffusion, tol)
        out.append(CriterionResult(
            "C7_martingale", ex_id, rep.passed,
            f"max violation {rep.max_violation:.2e} at tol {tol:.2e}"))
    return out


def criterion_8_verdicts(run: CorpusRun) -> list[CriterionResult]:
    want = {
        "ex_5_2": ("sufficient", lambda v: v.sufficient_holds),
        "ex_5_1": ("nonexistence", lambda v: v.nonexistence_holds),
        "ex_5_4": ("inconclusive", lambda v: v.inconclusive),
        "ex_4_2": ("nonexistence, sufficient fails",
                   lambda v: v.nonexistence_holds and not v.sufficient_holds),
    }
    out = []
    for ex_id, (label, check) in want.items():
        if not run.wants(ex_id):
            continue
        prob = run.problem(ex_id)
        verdict = pure_ne_verdict(run.solution(ex_id), prob.partition,
                                  prob.payoffs, prob.diffusion)
        out.append(CriterionResult(
            "C8_pure_ne_verdict", ex_id, bool(check(verdict)),
            f"want {label}; got sufficient={verdict.sufficient_holds} "
            f"nonexistence={verdict.nonexistence_holds} "
            f"inconclusive={verdict.inconclusive}"))
    return out


def criterion_9_oracle(run: CorpusRun) -> list[CriterionResult]:
    out = []
    for ex_id in ("ex_4_4", "ex_5_1"):
        if not run.wants(ex_id):
            continue
        prob = run.defs[ex_id].build(grid_n=200)
        sol = prob.solve()
        oracle = brute_force_oracle(prob.assoc, prob.diffusion, n_states=200)
        states = np.linspace(prob.assoc.grid[0], prob.assoc.grid[-1], 200)
        v_on = np.interp(states, sol.grid, sol.v)
        err = float(np.max(np.abs(oracle - v_on)))
        out.append(CriterionResult("C9_oracle", ex_id, err <= 2e-2,
                                   f"sup gap {err:.2e} (<=2e-2)"))
    return out


def criterion_10_properties(run: CorpusRun) -> list[CriterionResult]:
    from .associated import collapse_values
    from .model import classify_values

    if run.only_examples is not None:
        return []  # corpus-level properties only make sense for the full run
    out = []
    rng = np.random.default_rng(run.seed)
    grid = np.linspace(-2.0, 2.0, 41)
    n_trials = 10_000
    bad = 0
    order_bad = 0
    for _ in range(n_trials):
        fv = _random_piecewise_quadratic_values(rng, grid)
        gv = _random_piecewise_quadratic_values(rng, grid)
        hv = _random_piecewise_quadratic_values(rng, grid)
        tol = 1e-9 * (1.0 + np.abs(fv) + np.abs(gv) + np.abs(hv))
        labels = classify_values(fv, gv, hv, tol)
        if np.any(labels < 1) or np.any(labels > 6):
            bad += 1
            continue
        f_t, g_t, _ = collapse_values(fv, gv, hv, labels, gv <= fv + tol)
        if np.any(f_t > g_t):
            order_bad += 1
    out.append(CriterionResult(
        "C10_regions_exhaustive", "random", bad == 0,
        f"{n_trials} random piecewise-quadratic triples, {bad} failures"))
    out.append(CriterionResult(
        "C10_associated_ordered", "random", order_bad == 0,
        f"f_tilde <= g_tilde failures: {order_bad}"))

    from .simulate import accumulate_hazard, simulate_paths
    prob = run.problem("ex_4_3")
    _, s2 = run.nash("ex_4_3")
    params = SimParams(dt=1e-3, t_max=2.0, n_paths=300, seed=run.seed)
    _, xs = simulate_paths(prob.diffusion, 0.0, params)
    psi = accumulate_hazard(xs, s2, prob.diffusion, params)
    mono = bool(np.all(np.diff(psi, axis=1) >= -1e-15))
    out.append(CriterionResult("C10_hazard_monotone", "ex_4_3", mono,
                               "accumulated hazard nondecreasing on every path"))

    import json
    prob = run.problem("ex_4_4")
    strategies = run.nash("ex_4_4")
    params = run.sim_params(prob, 2000, 1e-2, seed_offset=10)
    rep1 = run_game(prob.diffusion, prob.payoffs, strategies, 1.0, params)
    rep2 = run_game(prob.diffusion, prob.payoffs, strategies, 1.0, params)
    same = json.dumps(rep1.to_json(), sort_keys=True) == \
        json.dumps(rep2.to_json(), sort_keys=True)
    out.append(CriterionResult("C10_seed_determinism", "ex_4_4", same,
                               "identical seed gives byte-identical reports"))
    return out


def _random_piecewise_quadratic_values(rng, grid) -> np.ndarray:
    """Values of a continuous random piecewise quadratic (two interior
    breakpoints) evaluated on the grid."""
    breaks = np.sort(rng.uniform(grid[0] + 0.1, grid[-1] - 0.1, size=2))
    edges = [grid[0], breaks[0], breaks[1], grid[-1]]
    out = np.empty_like(grid)
    val = rng.normal(scale=2.0)
    for lo, hi in zip(edges[:-1], edges[1:]):
        a, b = rng.normal(scale=1.5, size=2)
        m = (grid >= lo) & (grid <= hi)
        out[m] = val + b * (grid[m] - lo) + a * (grid[m] - lo) ** 2
        w = hi - lo
        val = val + b * w + a * w * w
    return out


ALL_CRITERIA: tuple[tuple[str, Callable], ...] = (
    ("criterion_1", criterion_1_value_ex_4_4),
    ("criterion_2", criterion_2_value_ex_4_2),
    ("criterion_3", criterion_3_strategy_ex_4_3),
    ("criterion_4", criterion_4_threshold_ex_5_1),
    ("criterion_5", criterion_5_mc_values),
    ("criterion_6", criterion_6_deviation_gains),
    ("criterion_7", criterion_7_martingale),
    ("criterion_8", criterion_8_verdicts),
    ("criterion_9", criterion_9_oracle),
    ("criterion_10", criterion_10_properties),
)


def run_all(run: CorpusRun | None = None, only: str | None = None
            ) -> list[CriterionResult]:
    run = run or CorpusRun()
    rows: list[CriterionResult] = []
    for name, fn in ALL_CRITERIA:
        if only and only != name:
            continue
        rows.extend(fn(run))
    return rows
