"""Ordered payoff pair (f_tilde, g_tilde) of the associated game.

Where f <= g the payoffs pass through unchanged; where g <= f both players
stop in equilibrium and the associated payoffs collapse to a single value
determined by the region: the middle function h on B1, g on B3, f on B4.
The simultaneous payoff of the associated game equals f_tilde by convention
and is not stored separately.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import OrderingViolation
from .model import B1, B3, B4, PayoffTriple, RegionPartition

SOURCE_NONE, SOURCE_H, SOURCE_G, SOURCE_F, SOURCE_FG = 0, 1, 2, 3, 4
SOURCE_NAMES = {SOURCE_NONE: "", SOURCE_H: "h", SOURCE_G: "g",
                SOURCE_F: "f", SOURCE_FG: "f=g"}


@dataclass(frozen=True)
class AssociatedPayoffs:
    grid: np.ndarray
    f_tilde: np.ndarray
    g_tilde: np.ndarray
    source_tag: np.ndarray  # SOURCE_* codes on the collapsed set, 0 elsewhere

    @property
    def pinched(self) -> np.ndarray:
        """Points where the two obstacles coincide (both players stop)."""
        return self.source_tag != SOURCE_NONE


def collapse_values(fv, gv, hv, labels, b_g_le_f):
    """Array core of the construction: (f_tilde, g_tilde, source_tag)."""
    f_t = fv.copy()
    g_t = gv.copy()
    tag = np.zeros(fv.shape, dtype=np.int8)
    for code, src, vals in ((B1, SOURCE_H, hv), (B3, SOURCE_G, gv), (B4, SOURCE_F, fv)):
        m = b_g_le_f & (labels == code)
        f_t[m] = vals[m]
        g_t[m] = vals[m]
        tag[m] = src
    # g <= f points not labelled B1/B3/B4 have f = g up to tolerance
    rest = b_g_le_f & (tag == SOURCE_NONE)
    common = 0.5 * (fv[rest] + gv[rest])
    f_t[rest] = common
    g_t[rest] = common
    tag[rest] = SOURCE_FG
    return f_t, g_t, tag


def build_associated_payoffs(payoffs: PayoffTriple,
                             partition: RegionPartition) -> AssociatedPayoffs:
    grid = partition.grid
    fv, gv, hv = payoffs.values(grid)
    f_t, g_t, tag = collapse_values(fv, gv, hv, partition.labels,
                                    partition.b_g_le_f)
    bad = f_t > g_t
    if np.any(bad):
        x = grid[bad][0]
        raise OrderingViolation(
            f"f_tilde > g_tilde at x={x} (f_t={f_t[bad][0]}, g_t={g_t[bad][0]})")
    return AssociatedPayoffs(grid=grid, f_tilde=f_t, g_tilde=g_t, source_tag=tag)
