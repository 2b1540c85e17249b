import numpy as np

from dynkin import build_associated_payoffs, classify_regions
from dynkin.associated import SOURCE_F, SOURCE_G, SOURCE_H
from dynkin.model import B1, B3, B4, PayoffTriple
from dynkin.piecewise import PiecewiseFn


def make_triple(f, g, h, lo=-2.0, hi=2.0):
    return PayoffTriple(f=PiecewiseFn.from_expr(f, lo, hi),
                        g=PiecewiseFn.from_expr(g, lo, hi),
                        h=PiecewiseFn.from_expr(h, lo, hi))


def test_ex_4_2_collapses_to_f(ex_4_2):
    assoc = ex_4_2.assoc
    grid = assoc.grid
    inner = (grid > -1) & (grid < 1)
    fv = ex_4_2.payoffs.f(grid)
    assert np.array_equal(assoc.f_tilde[inner], fv[inner])
    assert np.array_equal(assoc.g_tilde[inner], fv[inner])
    assert np.allclose(assoc.f_tilde, np.abs(grid) + 1)


def test_ordered_triple_is_identity():
    t = make_triple("-x**2", "x**2 + 1", "1/2")
    grid = np.linspace(-1.5, 1.5, 31)
    part = classify_regions(t, grid)
    assoc = build_associated_payoffs(t, part)
    assert np.array_equal(assoc.f_tilde, t.f(grid))
    assert np.array_equal(assoc.g_tilde, t.g(grid))
    assert not assoc.pinched.any()


def test_ex_4_4_b3_takes_g(ex_4_4):
    assoc = ex_4_4.assoc
    i = np.argmin(np.abs(assoc.grid + 0.5))
    assert assoc.f_tilde[i] == 2.5
    assert assoc.g_tilde[i] == 2.5
    assert assoc.source_tag[i] == SOURCE_G


def test_ordering_everywhere(ex_4_2, ex_4_3, ex_4_4, ex_5_1, ex_5_2, ex_5_4):
    for prob in (ex_4_2, ex_4_3, ex_4_4, ex_5_1, ex_5_2, ex_5_4):
        assoc = prob.assoc
        assert np.all(assoc.f_tilde <= assoc.g_tilde)
        collapsed = prob.partition.b_g_le_f
        assert np.array_equal(assoc.f_tilde[collapsed], assoc.g_tilde[collapsed])


def test_source_tags_match_regions(ex_4_4):
    part, assoc = ex_4_4.partition, ex_4_4.assoc
    assert np.all(assoc.source_tag[part.labels == B1] == SOURCE_H)
    assert np.all(assoc.source_tag[part.labels == B3] == SOURCE_G)
    assert np.all((assoc.source_tag[part.labels == B4] == SOURCE_F))


def test_source_tag_b4(ex_4_3):
    part, assoc = ex_4_3.partition, ex_4_3.assoc
    b4 = part.labels == B4
    assert b4.all()
    assert np.all(assoc.source_tag[b4] == SOURCE_F)


def test_continuity_across_region_boundaries(ex_4_2, ex_4_4, ex_5_2, ex_5_4):
    # the two branch formulas agree at every refined region boundary point
    def branch_value(prob, label, x):
        f, g, h = prob.payoffs.f, prob.payoffs.g, prob.payoffs.h
        return {B1: h, B3: g}.get(label, f)(x)

    for prob in (ex_4_2, ex_4_4, ex_5_2, ex_5_4):
        part = prob.partition
        for cell, cands in part.cell_boundaries.items():
            b = cands[0]
            left = branch_value(prob, part.labels[cell], b)
            right = branch_value(prob, part.labels[cell + 1], b)
            assert abs(left - right) <= 1e-8 * (1 + abs(left)), \
                f"{prob.name} at {b}"
