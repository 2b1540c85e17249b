import numpy as np
import pytest

from dynkin.errors import ValidationError
from dynkin.piecewise import PiecewiseFn, as_piecewise


def test_single_expr_eval_and_derivatives():
    w = PiecewiseFn.from_expr("x**2 + 2*x", -5, 5)
    xs = np.linspace(-4, 4, 11)
    assert np.allclose(w(xs), xs**2 + 2 * xs)
    assert np.allclose(w.deriv1(xs), 2 * xs + 2)
    assert np.allclose(w.deriv2(xs), 2.0)
    assert w.kink_points.size == 0


def test_abs_is_split_and_kink_recorded():
    w = PiecewiseFn.from_expr("Abs(x) + 1", -3, 3)
    assert len(w.pieces) == 2
    assert w(0.0) == 1.0
    assert w(-2.0) == 3.0
    (k,) = w.kinks
    assert k.x == 0.0
    assert k.d_left == -1.0 and k.d_right == 1.0 and k.jump == 2.0


def test_descriptor_pieces_and_pseudo_kink():
    w = PiecewiseFn.from_descriptor(
        [{"interval": [-1, 0], "expr": "x**2"},
         {"interval": [0, 1], "expr": "x**2"}])
    (k,) = w.kinks
    assert k.jump == 0.0  # declared breakpoint, equal slopes


def test_discontinuous_pieces_rejected():
    with pytest.raises(ValidationError):
        PiecewiseFn.from_descriptor(
            [{"interval": [-1, 0], "expr": "0"},
             {"interval": [0, 1], "expr": "1"}])


def test_gap_between_pieces_rejected():
    with pytest.raises(ValidationError):
        PiecewiseFn.from_descriptor(
            [{"interval": [-1, 0], "expr": "x"},
             {"interval": [0.5, 1], "expr": "x"}])


def test_unknown_symbol_rejected():
    with pytest.raises(ValidationError):
        PiecewiseFn.from_expr("x + y", 0, 1)


def test_one_sided_derivatives_at_break():
    w = PiecewiseFn.from_descriptor(
        [{"interval": [-2, 2], "expr": "2*x"},
         {"interval": [2, 5], "expr": "x**2"}])
    assert w.deriv1_left(2.0) == 2.0
    assert w.deriv1_right(2.0) == 4.0
    assert w(2.0) == 4.0


def test_as_piecewise_coercions():
    w = as_piecewise(3, -1, 1)
    assert w(0.3) == 3.0
    w2 = as_piecewise("exp(x)", 0, 1)
    assert np.isclose(w2(0.5), np.exp(0.5))
    assert as_piecewise(w2, 0, 1) is w2


def test_edge_pieces_extrapolate():
    w = PiecewiseFn.from_expr("x**2", -1, 1)
    assert w(2.0) == 4.0
