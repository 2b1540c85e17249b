"""Built-in example corpus.

Six games on a standard Wiener process, spanning the equilibrium taxonomy:
local-time-push-only randomization (ex_4_2), push plus Lebesgue rate (ex_4_3),
rate-only (ex_4_4), epsilon-only equilibria (ex_5_1), a pure equilibrium
without the classical payoff ordering (ex_5_2), and a game where the pure
nonexistence tests are inconclusive (ex_5_4).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .problem import Problem, ProblemConfig, build_problem


@dataclass(frozen=True)
class ExampleDef:
    id: str
    description: str
    make_config: Callable[..., ProblemConfig] = field(repr=False)
    x0: float = 0.0
    epsilon: float | None = None  # calibrate instead of exact Nash when set

    def config(self, grid_n: int | None = None, bounds: tuple | None = None) -> ProblemConfig:
        return self.make_config(grid_n=grid_n, bounds=bounds)

    def build(self, grid_n: int | None = None, bounds: tuple | None = None) -> Problem:
        return build_problem(self.config(grid_n=grid_n, bounds=bounds))


def _cfg(name, r, lo, hi, n, f, g, h, grid_n=None, bounds=None):
    if bounds is not None:
        lo, hi = bounds
    return ProblemConfig(mu="0", sigma="1", r=r, alpha=float("-inf"),
                         beta=float("inf"), f=f(lo, hi), g=g(lo, hi), h=h(lo, hi),
                         grid_n=grid_n or n, alpha_num=lo, beta_num=hi, name=name)


def _ex_4_2(grid_n=None, bounds=None):
    # |x|+1 between a lower and an upper hump on (-1, 1); all three coincide
    # outside.  The minimizer's whole threat is one local-time push at 0.
    def f(lo, hi):
        return "Abs(x) + 1"

    def g(lo, hi):
        return [{"interval": [lo, -1], "expr": "1 - x"},
                {"interval": [-1, 0], "expr": "x**2 - x"},
                {"interval": [0, 1], "expr": "x**2 + x"},
                {"interval": [1, hi], "expr": "1 + x"}]

    def h(lo, hi):
        return [{"interval": [lo, -1], "expr": "1 - x"},
                {"interval": [-1, 0], "expr": "2 - x - x**2"},
                {"interval": [0, 1], "expr": "2 + x - x**2"},
                {"interval": [1, hi], "expr": "1 + x"}]

    return _cfg("ex_4_2", 0.05, -3.0, 3.0, 1201, f, g, h, grid_n, bounds)


def _ex_4_3(grid_n=None, bounds=None):
    def f(lo, hi):
        return [{"interval": [lo, 2], "expr": "2*x"},
                {"interval": [2, hi], "expr": "x**2"}]

    def g(lo, hi):
        return "2*x - 4"

    def h(lo, hi):
        return "x**2 + 2"

    return _cfg("ex_4_3", 1.0 / 9.0, -30.0, 30.0, 6001, f, g, h, grid_n, bounds)


def _ex_4_4(grid_n=None, bounds=None):
    def f(lo, hi):
        return "(x - 1)**2 + 1"

    def g(lo, hi):
        return [{"interval": [lo, 0], "expr": "2 - x"},
                {"interval": [0, hi], "expr": "2"}]

    def h(lo, hi):
        return [{"interval": [lo, 0], "expr": "x**2 + 2"},
                {"interval": [0, hi], "expr": "2"}]

    return _cfg("ex_4_4", 0.1, -4.0, 6.0, 10001, f, g, h, grid_n, bounds)


def _ex_5_1(grid_n=None, bounds=None):
    def f(lo, hi):
        return "x**2"

    def g(lo, hi):
        return "x**2 + 10"

    def h(lo, hi):
        return "x**2 - 5"

    return _cfg("ex_5_1", 0.1, -8.0, 8.0, 16001, f, g, h, grid_n, bounds)


def _ex_5_2(grid_n=None, bounds=None):
    def f(lo, hi):
        return "x**2"

    def g(lo, hi):
        return "x**2 + 10"

    def h(lo, hi):
        return [{"interval": [lo, -2], "expr": "x**2 + 7"},
                {"interval": [-2, 2], "expr": "8*Abs(x) - 5"},
                {"interval": [2, hi], "expr": "x**2 + 7"}]

    return _cfg("ex_5_2", 0.1, -8.0, 8.0, 16001, f, g, h, grid_n, bounds)


def _ex_5_4(grid_n=None, bounds=None):
    def f(lo, hi):
        return [{"interval": [lo, -1], "expr": "x**2 + 3"},
                {"interval": [-1, 1], "expr": "4*Abs(x)"},
                {"interval": [1, hi], "expr": "x**2 + 3"}]

    def g(lo, hi):
        return "x**2 + 3"

    def h(lo, hi):
        return [{"interval": [lo, -1], "expr": "x**2 + 3"},
                {"interval": [-1, 0.5], "expr": "3 - x"},
                {"interval": [0.5, 1], "expr": "1 + 3*x"},
                {"interval": [1, hi], "expr": "x**2 + 3"}]

    return _cfg("ex_5_4", 0.1, -4.0, 4.0, 4001, f, g, h, grid_n, bounds)


def register_examples() -> dict[str, ExampleDef]:
    defs = [
        ExampleDef("ex_4_2", "push-only randomization, V = |x|+1", _ex_4_2, x0=0.5),
        ExampleDef("ex_4_3", "push at 2 plus Lebesgue rate", _ex_4_3, x0=0.0),
        ExampleDef("ex_4_4", "rate-only randomization on (-1, 0)", _ex_4_4, x0=1.0),
        ExampleDef("ex_5_1", "only epsilon-equilibria exist", _ex_5_1, x0=0.0,
                   epsilon=0.05),
        ExampleDef("ex_5_2", "pure equilibrium without payoff ordering", _ex_5_2,
                   x0=0.0),
        ExampleDef("ex_5_4", "pure-NE tests inconclusive", _ex_5_4, x0=0.0),
    ]
    return {d.id: d for d in defs}
