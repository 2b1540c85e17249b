import numpy as np
import pytest

from dynkin.errors import HypothesisViolated, ValidationError
from dynkin.model import PayoffTriple
from dynkin.piecewise import PiecewiseFn
from dynkin.strategy import (build_deviation_family, build_nash_strategies,
                             check_simplified_condition, exit_interval,
                             never_stop, pure_stop, strategy_to_json)


def nash_pair(prob):
    sol = prob.solve()
    return build_nash_strategies(sol, prob.partition, prob.payoffs, prob.diffusion)


class TestSimplifiedCondition:
    def test_ex_4_3_true(self, ex_4_3):
        assert check_simplified_condition(ex_4_3.partition)

    def test_ex_5_1_false(self, ex_5_1):
        assert not check_simplified_condition(ex_5_1.partition)

    def test_ordered_true(self, ex_5_4):
        # ex_5_4 has B5 nonempty -> false; a plain ordered triple -> true
        assert not check_simplified_condition(ex_5_4.partition)

    def test_nash_raises_on_violation(self, ex_5_1):
        sol = ex_5_1.solve()
        with pytest.raises(HypothesisViolated):
            build_nash_strategies(sol, ex_5_1.partition, ex_5_1.payoffs,
                                  ex_5_1.diffusion)


class TestNashConstruction:
    def test_ex_4_2(self, ex_4_2):
        s1, s2 = nash_pair(ex_4_2)
        assert s1.stop_set == ((-3.0, 3.0),)
        assert s2.stop_set == ((-3.0, -1.0), (1.0, 3.0))
        assert s2.atoms == ((0.0, 1.0),)  # 1 / (f(0) - g(0))
        xs = np.linspace(-0.99, 0.99, 41)
        assert np.all(s2.rate(xs) == 0.0)
        assert s1.atoms == ()

    def test_ex_4_3_atom_exact(self, ex_4_3):
        s1, s2 = nash_pair(ex_4_3)
        assert s1.stop_set == ((-30.0, 30.0),)
        assert s2.stop_set == ()
        ((x, gamma),) = s2.atoms
        assert x == 2.0
        assert gamma == 0.25  # (1/2) * (4 - 2) / (4 - g(2)), exactly

    def test_ex_4_3_rate_formula(self, ex_4_3):
        _, s2 = nash_pair(ex_4_3)
        r = 1.0 / 9.0

        def paper_rate(x):
            if x <= 0:
                return -2 * r * x / (2 * x - (2 * x - 4))
            if x <= 2:
                return 0.0
            if x < 3:
                return (1 - r * x * x) / (x * x - (2 * x - 4))
            return 0.0

        pts = np.array([-3.0, -2.0, -1.0, -0.5, 0.5, 1.5, 2.2, 2.5, 2.9, 3.5])
        got = s2.rate(pts)
        want = np.array([paper_rate(x) for x in pts])
        assert np.allclose(got, want, rtol=1e-12, atol=0)

    def test_ex_4_4(self, ex_4_4):
        s1, s2 = nash_pair(ex_4_4)
        assert s2.stop_set == ((-4.0, 0.0), (2.0, 6.0))
        assert s2.atoms == () and s1.atoms == ()
        # player 1 keeps the isolated point {0} when B3 = (-1, 0) is removed
        assert (0.0, 0.0) in s1.stop_set
        assert (-4.0, -1.0) in s1.stop_set and (2.0, 6.0) in s1.stop_set
        r = 0.1
        xs = np.linspace(-0.95, -0.05, 19)
        want = -r * (np.abs(xs) + 2) / (np.abs(xs) + 1 - (xs - 1) ** 2)
        assert np.allclose(s1.rate(xs), want, rtol=1e-12)
        assert np.all(s2.rate(xs) == 0)

    def test_rates_nonnegative_and_vanish(self, ex_4_2, ex_4_3, ex_4_4):
        for prob in (ex_4_2, ex_4_3, ex_4_4):
            s1, s2 = nash_pair(prob)
            xs = np.linspace(prob.diffusion.lo, prob.diffusion.hi, 2001)
            for s in (s1, s2):
                lam = s.rate(xs)
                assert np.all(lam >= 0)
                assert np.all(np.isfinite(lam))


class TestExitInterval:
    def test_constants_cover_domain(self, ex_4_2):
        payoffs = PayoffTriple(f=PiecewiseFn.from_expr("1", -3, 3),
                               g=PiecewiseFn.from_expr("1", -3, 3),
                               h=PiecewiseFn.from_expr("1", -3, 3))
        lo, hi = exit_interval(0.0, 0.5, payoffs, ex_4_2.diffusion)
        assert (lo, hi) == (ex_4_2.diffusion.lo, ex_4_2.diffusion.hi)

    def test_linear_symmetric(self, ex_4_2):
        payoffs = PayoffTriple(f=PiecewiseFn.from_expr("x", -3, 3),
                               g=PiecewiseFn.from_expr("0", -3, 3),
                               h=PiecewiseFn.from_expr("0", -3, 3))
        lo, hi = exit_interval(0.0, 0.1, payoffs, ex_4_2.diffusion)
        assert lo == pytest.approx(-0.1, abs=1e-9)
        assert hi == pytest.approx(0.1, abs=1e-9)

    def test_ex_4_3_slope_bound(self, ex_4_3):
        lo, hi = exit_interval(1.0, 0.05, ex_4_3.payoffs, ex_4_3.diffusion)
        assert lo == pytest.approx(0.975, abs=1e-8)
        assert hi == pytest.approx(1.025, abs=1e-8)

    def test_rejects_nonpositive_d(self, ex_4_3):
        with pytest.raises(ValidationError):
            exit_interval(1.0, 0.0, ex_4_3.payoffs, ex_4_3.diffusion)


class TestStrategyObjects:
    def test_atom_inside_stop_interior_rejected(self):
        from dynkin.strategy import RandomizedStrategy
        with pytest.raises(ValidationError):
            RandomizedStrategy(player=1, stop_set=((-1.0, 1.0),),
                               rate=lambda xs: np.zeros_like(xs),
                               atoms=((0.0, 1.0),))

    def test_deviation_family_shape(self, ex_4_4):
        s1, _ = nash_pair(ex_4_4)
        devs = build_deviation_family(s1, (-4.0, 6.0), x0=1.0)
        names = [n for n, _ in devs]
        assert names[0] == "immediate_stop" and names[1] == "never_stop"
        assert names[-1] == "rate_halved"
        assert len([n for n in names if n.startswith("threshold_")]) == 8

    def test_json_dump(self, ex_4_3):
        _, s2 = nash_pair(ex_4_3)
        d = strategy_to_json(s2)
        assert d["player"] == 2
        assert d["atoms"] == [[2.0, 0.25]]
        assert d["epsilon"] is None
        assert all(lam >= 0 for _, lam in d["rate_samples"])

    def test_pure_never(self):
        s = never_stop(1)
        assert s.stop_set == ()
        p = pure_stop(2, [(0.0, 1.0)])
        assert p.stop_set == ((0.0, 1.0),)
