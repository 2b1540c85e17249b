"""Kernel backend selection.

The compiled Cython kernel is preferred when importable; the numpy fallback
has identical numerical semantics (bit-for-bit per path).  Set
DYNKIN_FORCE_FALLBACK=1 to override.
"""

import os

import numpy as np

from . import fallback
from .fallback import (OUT_CENSORED, OUT_P1, OUT_P2, OUT_SIMUL, PURPOSE_E1,
                       PURPOSE_E2, PURPOSE_NORMAL, counter_uniform, philox4x32,
                       portable_log, ppnd16)

if os.environ.get("DYNKIN_FORCE_FALLBACK", "") not in ("", "0"):
    _impl = fallback
    BACKEND = "fallback (forced)"
else:
    try:
        from . import _gamecore as _impl
        BACKEND = "compiled"
    except ImportError:  # pragma: no cover - depends on build environment
        _impl = fallback
        BACKEND = "fallback"


def backend_name() -> str:
    return BACKEND


def available_backends():
    out = {"fallback": fallback}
    try:
        from . import _gamecore
        out["compiled"] = _gamecore
    except ImportError:  # pragma: no cover
        pass
    return out


def draw_clocks(seed: int, path_ids: np.ndarray):
    """Exponential clocks for both players; shared across backends so the
    libm log never runs inside a kernel."""
    u1 = counter_uniform(seed, path_ids, 0, PURPOSE_E1)
    u2 = counter_uniform(seed, path_ids, 0, PURPOSE_E2)
    return -np.log(u1), -np.log(u2)


def run_paths_block(impl, seed, path_start, n_paths, x0, dt, n_steps, tables):
    """One block of paths through the given backend; returns undiscounted
    payoffs, outcome codes and stop times."""
    ids = np.arange(path_start, path_start + n_paths, dtype=np.uint64)
    e1, e2 = draw_clocks(seed, ids)
    payoff = np.empty(n_paths)
    outcome = np.empty(n_paths, dtype=np.int8)
    tau = np.empty(n_paths)
    impl.run_paths(seed, path_start, n_paths, x0, dt, n_steps, e1, e2,
                   tables.tab_x0, tables.tab_dx,
                   tables.mu, tables.sigma, tables.lam1, tables.lam2,
                   tables.f, tables.g, tables.h,
                   tables.s1_lo, tables.s1_hi, tables.s2_lo, tables.s2_hi,
                   tables.a1_x, tables.a1_c, tables.a1_h,
                   tables.a2_x, tables.a2_c, tables.a2_h,
                   payoff, outcome, tau)
    return payoff, outcome, tau


def default_impl():
    return _impl
