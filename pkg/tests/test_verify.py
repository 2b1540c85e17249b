import numpy as np

from dynkin.strategy import build_nash_strategies, never_stop, pure_stop
from dynkin.verify import (best_response_value, check_pure_ne_nonexistence,
                           check_pure_ne_sufficient, pure_ne_verdict)


def ex_5_1_threshold(r=0.1):
    q = np.sqrt(2 * r)
    a, c = 1e-6, 50.0
    for _ in range(200):
        m = 0.5 * (a + c)
        if q * m * np.tanh(q * m) <= 2.0:
            a = m
        else:
            c = m
    return 0.5 * (a + c)


class TestBestResponse:
    def test_opponent_never_stops_is_single_stopping(self, ex_5_1):
        # reduces to sup E[e^{-r tau} X_tau^2]: threshold value with b ~ 4.618
        sol = ex_5_1.solve()
        br = best_response_value(never_stop(2), ex_5_1.payoffs, ex_5_1.diffusion,
                                 player=1, equilibrium_value=sol.v)
        b = ex_5_1_threshold()
        q = np.sqrt(0.2)
        a = b * b / np.cosh(q * b)
        grid = br.grid
        inner = np.abs(grid) < b - 0.05
        assert np.max(np.abs(br.w[inner] - a * np.cosh(q * grid[inner]))) <= 5e-3
        outer = np.abs(grid) > b + 0.05
        assert np.max(np.abs(br.w[outer] - grid[outer] ** 2)) <= 5e-3
        assert np.max(np.abs(br.gain)) <= 5e-3  # equilibrium value is the BR value

    def test_opponent_stops_everywhere(self, ex_4_4):
        s2 = pure_stop(2, [(-4.0, 6.0)])
        br = best_response_value(s2, ex_4_4.payoffs, ex_4_4.diffusion, player=1)
        grid = br.grid
        want = np.maximum(ex_4_4.payoffs.g(grid), ex_4_4.payoffs.h(grid))
        assert np.array_equal(br.w, want)

    def test_ex_4_2_gain_vanishes(self, ex_4_2):
        # the local-time push at 0 removes player 1's incentive to wait
        sol = ex_4_2.solve()
        s1, s2 = build_nash_strategies(sol, ex_4_2.partition, ex_4_2.payoffs,
                                       ex_4_2.diffusion)
        br1 = best_response_value(s2, ex_4_2.payoffs, ex_4_2.diffusion, player=1,
                                  equilibrium_value=sol.v)
        dx = float(np.max(np.diff(sol.grid)))
        assert np.max(br1.gain) <= 1e-6 + 10 * dx
        assert np.min(br1.gain) >= -1e-6 - 10 * dx

    def test_nash_gains_small_both_players(self, ex_4_3, ex_4_4):
        for prob in (ex_4_3, ex_4_4):
            sol = prob.solve()
            s1, s2 = build_nash_strategies(sol, prob.partition, prob.payoffs,
                                           prob.diffusion)
            dx = float(np.max(np.diff(sol.grid)))
            br1 = best_response_value(s2, prob.payoffs, prob.diffusion, player=1,
                                      equilibrium_value=sol.v)
            br2 = best_response_value(s1, prob.payoffs, prob.diffusion, player=2,
                                      equilibrium_value=sol.v)
            for br in (br1, br2):
                assert np.max(br.gain) <= 2e-6 + 20 * dx, prob.name
                # a player can always mimic the own equilibrium payoff
                assert np.min(br.gain) >= -2e-6 - 20 * dx, prob.name


class TestPureNeChecks:
    def test_sufficient_ex_5_2(self, ex_5_2):
        sol = ex_5_2.solve()
        assert check_pure_ne_sufficient(sol, ex_5_2.partition)

    def test_sufficient_fails_ex_4_2(self, ex_4_2):
        sol = ex_4_2.solve()
        assert not check_pure_ne_sufficient(sol, ex_4_2.partition)

    def test_sufficient_ordered_vacuous(self):
        import numpy as np
        from dynkin import classify_regions, build_associated_payoffs, solve_value
        from dynkin.model import DiffusionSpec, PayoffTriple
        from dynkin.piecewise import PiecewiseFn
        t = PayoffTriple(f=PiecewiseFn.from_expr("-x**2 - 1", -2, 2),
                         g=PiecewiseFn.from_expr("x**2 + 1", -2, 2),
                         h=PiecewiseFn.from_expr("0", -2, 2))
        grid = np.linspace(-2, 2, 201)
        part = classify_regions(t, grid)
        d = DiffusionSpec(mu=PiecewiseFn.from_expr("0", -2, 2),
                          sigma=PiecewiseFn.from_expr("1", -2, 2), r=0.3,
                          alpha=-np.inf, beta=np.inf, grid=grid)
        sol = solve_value(build_associated_payoffs(t, part), d)
        assert check_pure_ne_sufficient(sol, part)

    def test_nonexistence_ex_5_1(self, ex_5_1):
        verdict = check_pure_ne_nonexistence(ex_5_1.payoffs, ex_5_1.diffusion,
                                             ex_5_1.partition)
        assert verdict.nonexistence_holds
        assert verdict.condition == "(22)"

    def test_inconclusive_ex_5_4(self, ex_5_4):
        sol = ex_5_4.solve()
        verdict = pure_ne_verdict(sol, ex_5_4.partition, ex_5_4.payoffs,
                                  ex_5_4.diffusion)
        assert verdict.inconclusive
        assert not verdict.sufficient_holds
        assert not verdict.nonexistence_holds

    def test_ex_4_2_nonexistence_fires(self, ex_4_2):
        sol = ex_4_2.solve()
        verdict = pure_ne_verdict(sol, ex_4_2.partition, ex_4_2.payoffs,
                                  ex_4_2.diffusion)
        assert verdict.nonexistence_holds and not verdict.sufficient_holds
        assert verdict.condition == "(21)"
        assert abs(verdict.witness_x) < 0.9  # near the kink at 0

    def test_never_both(self, ex_4_2, ex_4_3, ex_4_4, ex_5_1, ex_5_2, ex_5_4):
        for prob in (ex_4_2, ex_4_3, ex_4_4, ex_5_1, ex_5_2, ex_5_4):
            sol = prob.solve()
            v = pure_ne_verdict(sol, prob.partition, prob.payoffs, prob.diffusion)
            assert not (v.sufficient_holds and v.nonexistence_holds)


class TestGainAllowance:
    def test_richardson_confirms_equilibrium(self, corpus):
        from dynkin.verify import gain_allowance

        def max_gain(prob):
            sol = prob.solve()
            s1, s2 = build_nash_strategies(sol, prob.partition, prob.payoffs,
                                           prob.diffusion)
            br1 = best_response_value(s2, prob.payoffs, prob.diffusion, 1,
                                      equilibrium_value=sol.v)
            br2 = best_response_value(s1, prob.payoffs, prob.diffusion, 2,
                                      equilibrium_value=sol.v)
            dx = float(np.max(np.diff(sol.grid)))
            return max(float(np.max(br1.gain)), float(np.max(br2.gain))), dx

        fine = corpus["ex_4_4"].build(grid_n=2501)
        coarse = corpus["ex_4_4"].build(grid_n=1251)
        g_f, dx_f = max_gain(fine)
        g_c, dx_c = max_gain(coarse)
        scale = 1 + 27.0
        allowance = gain_allowance(g_f, dx_f, g_c, dx_c)
        assert g_f <= 2 * 1e-10 * scale + allowance + 1e-9
