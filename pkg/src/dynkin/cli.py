"""Command-line front end.

    dynkin --mode solve --example ex_4_4 --out results/
    dynkin --mode all --config my_game.json --out results/ --paths 50000
    dynkin --mode examples --out regression/

Modes: solve (value CSV + free-boundary JSON), strategies (per-player JSON),
simulate (Monte Carlo report JSON), verify (pure-NE verdict + best-response
gains), examples (full acceptance regression with a summary table), all
(solve + strategies + simulate + verify).  Exit codes: 0 ok, 1 validation
error, 2 solver non-convergence, 3 acceptance regression failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .acceptance import CorpusRun, run_all
from .calibrate import calibrate_epsilon_strategies
from .config import load_config, write_json, write_value_csv
from .errors import DynkinError, NonConvergence, ValidationError
from .examples import register_examples
from .problem import build_problem
from .simulate import SimParams, choose_t_max, run_game
from .solver import solve_value
from .strategy import (build_nash_strategies, check_simplified_condition,
                       strategy_to_json)
from .verify import best_response_value, pure_ne_verdict


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="dynkin",
        description="Zero-sum stopping games on one-dimensional diffusions: "
                    "value solver, randomized equilibrium strategies, Monte "
                    "Carlo and best-response verification.")
    p.add_argument("--mode", required=True,
                   choices=["solve", "strategies", "simulate", "verify",
                            "examples", "all"])
    src = p.add_mutually_exclusive_group()
    src.add_argument("--config", help="problem configuration JSON")
    src.add_argument("--example", help="built-in example id (ex_4_2 ... ex_5_4)")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--grid-n", type=int, help="override grid size")
    p.add_argument("--tol", type=float, default=1e-10, help="solver tolerance")
    p.add_argument("--epsilon", type=float,
                   help="epsilon for calibrated strategies (default: exact "
                        "Nash when available, else 0.1)")
    p.add_argument("--paths", type=int, default=100_000,
                   help="Monte Carlo paths for simulate mode")
    p.add_argument("--dt", type=float, default=1e-3, help="Euler time step")
    p.add_argument("--seed", type=int, default=20240811)
    p.add_argument("--x0", type=float, help="starting state for simulate mode")
    p.add_argument("--version", action="version", version=f"dynkin {__version__}")
    return p


def _resolve_problem(args):
    if args.example:
        corpus = register_examples()
        if args.example not in corpus:
            raise ValidationError(
                f"unknown example {args.example!r}; available: "
                f"{', '.join(sorted(corpus))}")
        ex = corpus[args.example]
        return ex.build(grid_n=args.grid_n), ex
    if args.config:
        cfg = load_config(args.config)
        if args.grid_n:
            from dataclasses import replace
            cfg = replace(cfg, grid_n=args.grid_n)
        return build_problem(cfg), None
    raise ValidationError("need --config or --example")


def _strategies(problem, sol, args, example):
    eps = args.epsilon
    if eps is None and check_simplified_condition(problem.partition):
        return build_nash_strategies(sol, problem.partition, problem.payoffs,
                                     problem.diffusion)
    if eps is None:
        eps = example.epsilon if example and example.epsilon else 0.1
    s1, s2, _ = calibrate_epsilon_strategies(
        sol, problem.partition, problem.payoffs, problem.diffusion,
        epsilon=eps, seed=args.seed)
    return s1, s2


def _mode_solve(problem, sol, out: Path, args):
    write_value_csv(out / f"{problem.name}_value.csv", sol, problem.payoffs)
    write_json(out / f"{problem.name}_boundaries.json",
               {"d1_boundaries": sol.free_boundaries["d1"],
                "d2_boundaries": sol.free_boundaries["d2"]})


def _mode_strategies(problem, sol, out: Path, args, example):
    s1, s2 = _strategies(problem, sol, args, example)
    write_json(out / f"{problem.name}_strategy_player1.json", strategy_to_json(s1))
    write_json(out / f"{problem.name}_strategy_player2.json", strategy_to_json(s2))
    return s1, s2


def _mode_simulate(problem, sol, out: Path, args, example):
    s1, s2 = _strategies(problem, sol, args, example)
    x0 = args.x0
    if x0 is None:
        x0 = example.x0 if example else 0.5 * (problem.diffusion.lo
                                               + problem.diffusion.hi)
    t_max = choose_t_max(problem.diffusion, problem.payoffs)
    dx = float(np.max(np.diff(problem.diffusion.grid)))
    params = SimParams(dt=args.dt, t_max=t_max, n_paths=args.paths,
                       seed=args.seed, point_band=dx)
    rep = run_game(problem.diffusion, problem.payoffs, (s1, s2), x0, params)
    write_json(out / f"{problem.name}_report.json", rep.to_json())


def _mode_verify(problem, sol, out: Path, args, example):
    verdict = pure_ne_verdict(sol, problem.partition, problem.payoffs,
                              problem.diffusion)
    s1, s2 = _strategies(problem, sol, args, example)
    br1 = best_response_value(s2, problem.payoffs, problem.diffusion, 1,
                              equilibrium_value=sol.v)
    br2 = best_response_value(s1, problem.payoffs, problem.diffusion, 2,
                              equilibrium_value=sol.v)
    doc = verdict.to_json()
    doc["max_gain_p1"] = float(np.max(br1.gain))
    doc["max_gain_p2"] = float(np.max(br2.gain))
    write_json(out / f"{problem.name}_verdict.json", doc)


def _mode_examples(out: Path, args) -> int:
    only = {args.example} if args.example else None
    if only and not only <= set(register_examples()):
        raise ValidationError(f"unknown example {args.example!r}")
    run = CorpusRun(grid_n=args.grid_n, seed=args.seed, only_examples=only)
    rows = run_all(run)
    path = out / "examples_summary.csv"
    with open(path, "w", newline="\n") as fh:
        fh.write("criterion,example,passed,detail\n")
        for r in rows:
            detail = r.detail.replace(",", ";")
            fh.write(f"{r.criterion},{r.example},{'pass' if r.passed else 'FAIL'},"
                     f"{detail}\n")
    n_fail = sum(not r.passed for r in rows)
    for r in rows:
        status = "pass" if r.passed else "FAIL"
        print(f"[{status}] {r.criterion:24s} {r.example:12s} {r.detail}")
    print(f"summary written to {path}: {len(rows) - n_fail}/{len(rows)} passed")
    return 3 if n_fail else 0


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        if args.mode == "examples":
            return _mode_examples(out, args)
        problem, example = _resolve_problem(args)
        sol = solve_value(problem.assoc, problem.diffusion, tol=args.tol)
        if args.mode == "solve":
            _mode_solve(problem, sol, out, args)
        elif args.mode == "strategies":
            _mode_strategies(problem, sol, out, args, example)
        elif args.mode == "simulate":
            _mode_simulate(problem, sol, out, args, example)
        elif args.mode == "verify":
            _mode_verify(problem, sol, out, args, example)
        elif args.mode == "all":
            _mode_solve(problem, sol, out, args)
            _mode_strategies(problem, sol, out, args, example)
            _mode_simulate(problem, sol, out, args, example)
            _mode_verify(problem, sol, out, args, example)
        return 0
    except NonConvergence as exc:
        print(f"solver failed to converge: {exc}", file=sys.stderr)
        return 2
    except DynkinError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
