import numpy as np
import pytest

from dynkin import (B1, B2, B3, B4, B5, B6, DiffusionSpec, PayoffTriple,
                    apply_generator, classify_regions, kink_jump, make_grid)
from dynkin.errors import KinkEvaluation, NotAKink, ValidationError
from dynkin.piecewise import PiecewiseFn


def wiener(r=0.0, lo=-5.0, hi=5.0, n=11):
    return DiffusionSpec(mu=PiecewiseFn.from_expr("0", lo, hi),
                         sigma=PiecewiseFn.from_expr("1", lo, hi),
                         r=r, alpha=-np.inf, beta=np.inf,
                         grid=np.linspace(lo, hi, n))


def triple(f, g, h, lo=-5.0, hi=5.0):
    return PayoffTriple(f=PiecewiseFn.from_expr(f, lo, hi),
                        g=PiecewiseFn.from_expr(g, lo, hi),
                        h=PiecewiseFn.from_expr(h, lo, hi))


class TestClassify:
    def test_ex_4_2_interior_is_b4(self, ex_4_2):
        inner = (ex_4_2.partition.grid > -1) & (ex_4_2.partition.grid < 1)
        assert np.all(ex_4_2.partition.labels[inner] == B4)

    def test_all_equal_is_b1(self):
        t = triple("0", "0", "0")
        part = classify_regions(t, np.linspace(-1, 1, 21))
        assert np.all(part.labels == B1)

    def test_ex_4_4_point(self, ex_4_4):
        # h(-0.5) = 2.25 < g(-0.5) = 2.5 < f(-0.5) = 3.25
        grid = ex_4_4.partition.grid
        i = np.argmin(np.abs(grid + 0.5))
        assert grid[i] == -0.5
        assert ex_4_4.payoffs.h(-0.5) == 2.25
        assert ex_4_4.payoffs.g(-0.5) == 2.5
        assert ex_4_4.payoffs.f(-0.5) == 3.25
        assert ex_4_4.partition.labels[i] == B3

    def test_mask_inclusions(self, ex_4_4):
        part = ex_4_4.partition
        assert np.all(part.b_f_le_g[part.mask(B2, B5, B6)])
        assert np.all(part.b_g_le_f[part.mask(B1, B3, B4)])

    def test_labels_exhaustive_unique(self):
        grid = np.linspace(-2, 2, 201)
        t = triple("x**2", "1 - x", "x")
        part = classify_regions(t, grid)
        assert np.all((part.labels >= B1) & (part.labels <= B6))

    def test_boundary_refinement(self, ex_4_4):
        pts = ex_4_4.partition.boundary_points
        for target in (-1.0, 0.0, 2.0):
            assert np.min(np.abs(pts - target)) < 1e-9

    def test_region_intervals(self, ex_4_4):
        (b3,) = ex_4_4.partition.intervals(B3)
        assert b3 == pytest.approx((-1.0, 0.0), abs=1e-9)
        (b2,) = ex_4_4.partition.intervals(B2)
        assert b2 == pytest.approx((0.0, 2.0), abs=1e-9)


class TestGenerator:
    def test_quadratic_wiener(self):
        w = PiecewiseFn.from_expr("x**2", -5, 5)
        assert apply_generator(w, wiener(r=0.0), 3.0) == pytest.approx(1.0)

    def test_ex_4_3_numerator_at_1(self, ex_4_3):
        val = apply_generator(ex_4_3.payoffs.f, ex_4_3.diffusion, 1.0)
        assert val == pytest.approx(-2.0 / 9.0, rel=1e-14)

    def test_ex_4_4_numerator(self, ex_4_4):
        val = apply_generator(ex_4_4.payoffs.g, ex_4_4.diffusion, -0.5)
        assert val == pytest.approx(-0.25, rel=1e-14)

    def test_kink_rejected(self):
        w = PiecewiseFn.from_expr("Abs(x)", -5, 5)
        with pytest.raises(KinkEvaluation):
            apply_generator(w, wiener(), 0.0)

    def test_linearity(self, rng):
        w1 = PiecewiseFn.from_expr("x**3 - x", -5, 5)
        w2 = PiecewiseFn.from_expr("exp(x/3)", -5, 5)
        d = wiener(r=0.7)
        for _ in range(20):
            a, b = (float(v) for v in rng.normal(size=2))
            x = float(rng.uniform(-4, 4))
            combo = PiecewiseFn.from_expr(f"{a!r}*(x**3 - x) + {b!r}*exp(x/3)", -5, 5)
            lhs = apply_generator(combo, d, x)
            rhs = a * apply_generator(w1, d, x) + b * apply_generator(w2, d, x)
            assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-12)

    def test_r_harmonic_exponential(self):
        r = 0.37
        w = PiecewiseFn.from_expr(f"exp(x*sqrt(2*{r!r}))", -5, 5)
        d = wiener(r=r)
        for x in np.linspace(-4, 4, 9):
            val = apply_generator(w, d, float(x))
            assert abs(val) <= 1e-10 * (1 + abs(w(x)))


class TestKinkJump:
    def test_abs_plus_one(self):
        w = PiecewiseFn.from_expr("Abs(x) + 1", -3, 3)
        assert kink_jump(w, 0.0) == 2.0

    def test_ex_4_3_f_at_2(self, ex_4_3):
        assert kink_jump(ex_4_3.payoffs.f, 2.0) == pytest.approx(2.0)

    def test_pseudo_kink_zero(self):
        w = PiecewiseFn.from_descriptor(
            [{"interval": [-1, 0], "expr": "x**2"},
             {"interval": [0, 1], "expr": "x**2"}])
        assert kink_jump(w, 0.0) == 0.0

    def test_not_a_kink(self):
        w = PiecewiseFn.from_expr("Abs(x)", -1, 1)
        with pytest.raises(NotAKink):
            kink_jump(w, 0.5)

    def test_convex_piecewise_linear_nonneg(self, rng):
        for _ in range(10):
            slopes = np.sort(rng.normal(size=4))  # increasing slopes = convex
            breaks = np.sort(rng.uniform(-1, 1, size=3))
            val = 0.0
            exprs = []
            for k, (lo, hi) in enumerate(zip([-2, *breaks], [*breaks, 2])):
                lo, hi, s = float(lo), float(hi), float(slopes[k])
                exprs.append({"interval": [lo, hi],
                              "expr": f"{val!r} + {s!r}*(x - {lo!r})"})
                val += s * (hi - lo)
            w = PiecewiseFn.from_descriptor(exprs)
            for kink in w.kinks:
                assert kink.jump >= -1e-12


class TestSpecs:
    def test_grid_validation(self):
        mu = PiecewiseFn.from_expr("0", -1, 1)
        sg = PiecewiseFn.from_expr("1", -1, 1)
        with pytest.raises(ValidationError):
            DiffusionSpec(mu=mu, sigma=sg, r=0.1, alpha=-np.inf, beta=np.inf,
                          grid=np.array([0.0, 1.0]))
        with pytest.raises(ValidationError):
            DiffusionSpec(mu=mu, sigma=sg, r=-0.1, alpha=-np.inf, beta=np.inf,
                          grid=np.linspace(-1, 1, 5))
        with pytest.raises(ValidationError):
            DiffusionSpec(mu=mu, sigma=PiecewiseFn.from_expr("x", -1, 1), r=0.1,
                          alpha=-np.inf, beta=np.inf, grid=np.linspace(-1, 1, 5))

    def test_make_grid_anchors(self):
        g = make_grid(-1.0, 1.0, 101, anchors=[0.3003, 0.0])
        assert np.any(g == 0.3003)
        assert np.any(g == 0.0)
        assert np.all(np.diff(g) > 0)
