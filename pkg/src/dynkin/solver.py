"""Double obstacle problem for the associated game.

The value V is pinned between the ordered obstacles f_tilde <= g_tilde and
satisfies (L_X - r)V = 0 where neither binds ("pulling a rope").  We solve the
discrete complementarity system

    max{ min{ -(L_h v)_i , v_i - f_i }, v_i - g_i } = 0

with a monotone finite-difference L_h (upwind first derivative, central second
derivative, an M-matrix) by Howard policy iteration over the three pointwise
policies {lower, upper, continue}; each policy evaluation is one banded solve.
No smooth-fit condition is ever imposed: smooth fit can genuinely fail here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .associated import AssociatedPayoffs
from .errors import NonContraction, NonConvergence, ObstacleCrossing, ValidationError
from .model import DiffusionSpec

POL_CONT, POL_LOWER, POL_UPPER, POL_FIXED = 0, 1, 2, 3

#: default mask-extraction tolerance coefficient: eq_tol * (1 + |v|)
MASK_EQ_TOL = 1e-7

#: regularization used in place of r when r = 0 (keeps the M-matrix strict)
R_FLOOR = 1e-12


@dataclass(frozen=True)
class Operator:
    """Tridiagonal interior stencil of (L_X - r - kill) on a possibly
    nonuniform grid; row i couples points (i-1, i, i+1)."""

    sub: np.ndarray    # coefficient of v[i-1], length n-2
    diag: np.ndarray   # coefficient of v[i],   length n-2
    sup: np.ndarray    # coefficient of v[i+1], length n-2
    row_scale: np.ndarray

    def apply(self, v: np.ndarray) -> np.ndarray:
        return self.sub * v[:-2] + self.diag * v[1:-1] + self.sup * v[2:]


def build_operator(diffusion: DiffusionSpec, grid: np.ndarray,
                   kill: np.ndarray | None = None) -> Operator:
    x = np.asarray(grid, dtype=float)
    hm = x[1:-1] - x[:-2]
    hp = x[2:] - x[1:-1]
    xi = x[1:-1]
    mu = diffusion.mu(xi)
    sig2 = diffusion.sigma(xi) ** 2
    r_eff = diffusion.r if diffusion.r > 0 else R_FLOOR
    mup = np.maximum(mu, 0.0)
    mum = np.maximum(-mu, 0.0)
    sub = sig2 / (hm * (hm + hp)) + mum / hm
    sup = sig2 / (hp * (hm + hp)) + mup / hp
    diag = -(sub + sup) - r_eff
    if kill is not None:
        diag = diag - np.asarray(kill, dtype=float)[1:-1]
    scale = np.abs(sub) + np.abs(diag) + np.abs(sup)
    return Operator(sub=sub, diag=diag, sup=sup, row_scale=scale)


@dataclass(frozen=True)
class ValueSolution:
    grid: np.ndarray
    v: np.ndarray
    f_tilde: np.ndarray
    g_tilde: np.ndarray
    d1_mask: np.ndarray
    d2_mask: np.ndarray
    residual: np.ndarray
    free_boundaries: dict
    policy: np.ndarray
    iterations: int
    converged: bool


def _policy_solve(op: Operator, policy: np.ndarray, lower, upper, source,
                  bc_lo: float, bc_hi: float) -> np.ndarray:
    """One banded solve for the linear system induced by a pointwise policy."""
    n = policy.size
    ab = np.zeros((3, n))
    rhs = np.empty(n)
    # boundary rows
    ab[1, 0] = 1.0
    ab[1, -1] = 1.0
    rhs[0] = bc_lo
    rhs[-1] = bc_hi
    interior = np.arange(1, n - 1)
    cont = policy[interior] == POL_CONT
    ic = interior[cont]
    ab[1, ic] = op.diag[ic - 1]
    ab[0, ic + 1] = op.sup[ic - 1]   # superdiagonal storage offset
    ab[2, ic - 1] = op.sub[ic - 1]   # subdiagonal storage offset
    rhs[ic] = -source[ic]
    stopped = interior[~cont]
    ab[1, stopped] = 1.0
    rhs[stopped] = np.where(policy[stopped] == POL_LOWER, lower[stopped], upper[stopped])
    return solve_banded((1, 1), ab, rhs)


def solve_lcp(diffusion: DiffusionSpec, grid: np.ndarray, lower: np.ndarray,
              upper: np.ndarray, bc_lo: float, bc_hi: float,
              kill: np.ndarray | None = None, source: np.ndarray | None = None,
              tol: float = 1e-10, max_iter: int = 200):
    """Solve max{min{-(Lv + source), v - lower}, v - upper} = 0 on the grid.

    Two phases: a penalized semismooth Newton iteration locates the active
    sets (its linearization treats inactive points as continuation rows, so
    the free boundary can move arbitrarily far per banded solve), then Howard
    policy-evaluation steps restore exact complementarity on the final sets.
    Returns (v, policy, residual, iterations); the residual is normalized per
    row.  `lower` may be -inf and `upper` +inf pointwise.
    """
    grid = np.asarray(grid, dtype=float)
    n = grid.size
    lower = np.broadcast_to(np.asarray(lower, dtype=float), (n,)).copy()
    upper = np.broadcast_to(np.asarray(upper, dtype=float), (n,)).copy()
    if np.any(lower > upper):
        x = grid[lower > upper][0]
        raise ObstacleCrossing(f"lower obstacle exceeds upper obstacle at x={x}")
    source = np.zeros(n) if source is None else np.asarray(source, dtype=float)
    kill = None if kill is None else np.asarray(kill, dtype=float)

    policy = _coarse_policy(diffusion, grid, lower, upper, bc_lo, bc_hi,
                            kill, source, tol)
    op = build_operator(diffusion, grid, kill=kill)
    return _howard(op, policy, lower, upper, source, bc_lo, bc_hi, tol,
                   max_iter=max(max_iter, n + 50))


def _coarse_policy(diffusion, grid, lower, upper, bc_lo, bc_hi, kill, source,
                   tol, base_n: int = 513):
    """Initial policy from a recursively coarsened solve.

    Howard iteration moves a misplaced free boundary only one cell per sweep
    through strictly super/subharmonic stretches of an obstacle, so the creep
    is paid once on a few-hundred-point grid and each refinement level then
    needs only a handful of sweeps.
    """
    n = grid.size
    if n <= base_n:
        policy = np.full(n, POL_CONT, dtype=np.int8)
        policy[np.isfinite(lower)] = POL_LOWER
        only_up = ~np.isfinite(lower) & np.isfinite(upper)
        policy[only_up] = POL_UPPER
        policy[0] = policy[-1] = POL_FIXED
        return policy
    idx = np.arange(0, n, 2)
    if idx[-1] != n - 1:
        idx = np.append(idx, n - 1)
    sub = lambda a: None if a is None else a[idx]  # noqa: E731
    policy_c = _coarse_policy(diffusion, grid[idx], lower[idx], upper[idx],
                              bc_lo, bc_hi, sub(kill), source[idx], tol, base_n)
    op_c = build_operator(diffusion, grid[idx], kill=sub(kill))
    _, policy_c, _, _ = _howard(op_c, policy_c, lower[idx], upper[idx],
                                source[idx], bc_lo, bc_hi, tol,
                                max_iter=idx.size + 50)
    back = np.minimum(np.arange(n) // 2, idx.size - 1)
    policy = policy_c[back]
    policy[0] = policy[-1] = POL_FIXED
    return policy


def _howard(op, policy, lower, upper, source, bc_lo, bc_hi, tol, max_iter):
    """Howard policy iteration to exact discrete complementarity."""
    prev_policies = []
    resid = np.array([np.inf])
    for it in range(1, max_iter + 1):
        v = _policy_solve(op, policy, lower, upper, source, bc_lo, bc_hi)
        resid, new_policy = _improve(op, v, lower, upper, source)
        if np.array_equal(new_policy, policy) or np.max(np.abs(resid)) <= tol:
            return v, policy, resid, it
        key = new_policy.tobytes()
        if key in prev_policies:
            # tie cycling between equivalent policies; accept if consistent
            if np.max(np.abs(resid)) <= 1e3 * tol:
                return v, new_policy, resid, it
            raise NonConvergence("policy iteration cycled",
                                 max_residual=float(np.max(np.abs(resid))))
        prev_policies.append(key)
        if len(prev_policies) > 8:
            prev_policies.pop(0)
        policy = new_policy
    raise NonConvergence(f"no convergence in {max_iter} policy iterations",
                         max_residual=float(np.max(np.abs(resid))))


def _improve(op: Operator, v, lower, upper, source):
    """Normalized composite residual and the Howard policy update."""
    n = v.size
    lv = op.apply(v) + source[1:-1]
    e_c = -lv / op.row_scale
    e_l = v[1:-1] - lower[1:-1]
    e_u = v[1:-1] - upper[1:-1]
    inner = np.minimum(e_c, e_l)
    comp = np.maximum(inner, e_u)
    resid = np.zeros(n)
    resid[1:-1] = comp
    pol = np.where(e_c < e_l, POL_CONT, POL_LOWER).astype(np.int8)
    pol = np.where(e_u > inner, POL_UPPER, pol).astype(np.int8)
    out = np.full(n, POL_FIXED, dtype=np.int8)
    out[1:-1] = pol
    return resid, out


def boundary_values(assoc: AssociatedPayoffs) -> tuple[float, float]:
    """Dirichlet data at the truncation points: the pinched common value when
    both players stop there, else the lower obstacle (maximizer stops)."""
    lo = assoc.f_tilde[0] if not assoc.pinched[0] else assoc.f_tilde[0]
    hi = assoc.f_tilde[-1] if not assoc.pinched[-1] else assoc.f_tilde[-1]
    return float(lo), float(hi)


def solve_value(assoc: AssociatedPayoffs, diffusion: DiffusionSpec,
                tol: float = 1e-10, max_iter: int = 200,
                eq_tol: float = MASK_EQ_TOL) -> ValueSolution:
    """Value of the associated game on the grid, with stopping sets."""
    grid = assoc.grid
    if grid.shape != diffusion.grid.shape or not np.allclose(grid, diffusion.grid):
        raise ValidationError("associated payoffs and diffusion use different grids")
    scale = 1.0 + float(np.max(np.abs(assoc.g_tilde)) + np.max(np.abs(assoc.f_tilde)))
    bc_lo, bc_hi = boundary_values(assoc)
    v, policy, resid, iters = solve_lcp(
        diffusion, grid, assoc.f_tilde, assoc.g_tilde, bc_lo, bc_hi,
        tol=tol * scale, max_iter=max_iter)
    d1, d2, bounds = extract_stop_sets_arrays(grid, v, assoc, eq_tol)
    return ValueSolution(grid=grid, v=v, f_tilde=assoc.f_tilde.copy(),
                         g_tilde=assoc.g_tilde.copy(), d1_mask=d1, d2_mask=d2,
                         residual=resid, free_boundaries=bounds, policy=policy,
                         iterations=iters, converged=True)


def extract_stop_sets(sol: ValueSolution, assoc: AssociatedPayoffs,
                      eq_tol: float = MASK_EQ_TOL):
    """Stopping masks {v = f_tilde}, {v = g_tilde} and refined free boundaries."""
    return extract_stop_sets_arrays(sol.grid, sol.v, assoc, eq_tol)


def extract_stop_sets_arrays(grid, v, assoc, eq_tol):
    band = eq_tol * (1.0 + np.abs(v))
    d1 = np.abs(v - assoc.f_tilde) <= band
    d2 = np.abs(v - assoc.g_tilde) <= band
    bounds = {
        "d1": _refine_mask_boundaries(grid, v - assoc.f_tilde, d1, band),
        "d2": _refine_mask_boundaries(grid, assoc.g_tilde - v, d2, band),
    }
    return d1, d2, bounds


def _refine_mask_boundaries(grid, gap, mask, band):
    """Free-boundary abscissae where `mask` flips, refined from the gap profile.

    On the continuation side the gap vanishes either linearly (kinked contact)
    or quadratically (smooth fit).  Both candidate models are fitted on the
    nearest usable continuation nodes and the better one, judged by relative
    fit residual, supplies the root.
    """
    out = []
    n = grid.size
    flips = np.nonzero(mask[:-1] != mask[1:])[0]
    for i in flips:
        if mask[i]:
            cont_idx = range(i + 1, min(i + 9, n))
            bracket = (grid[i], grid[i + 1])
        else:
            cont_idx = range(i, max(i - 8, -1), -1)
            bracket = (grid[i], grid[i + 1])
        xs, ds = [], []
        for j in cont_idx:
            if mask[j]:
                break
            if gap[j] > 10.0 * band[j]:
                xs.append(grid[j])
                ds.append(gap[j])
        if len(xs) < 2:
            out.append(0.5 * (bracket[0] + bracket[1]))
            continue
        xs = np.array(xs)
        ds = np.array(ds)
        b_lin, r_lin = _fit_root(xs, ds)
        b_sqr, r_sqr = _fit_root(xs, np.sqrt(ds))
        b = b_sqr if r_sqr < r_lin else b_lin
        dx = abs(bracket[1] - bracket[0])
        b = min(max(b, bracket[0] - 5 * dx), bracket[1] + 5 * dx)
        out.append(float(b))
    return out


def _fit_root(xs, ys):
    """Least-squares line through (xs, ys); returns (root, relative residual)."""
    A = np.vstack([xs, np.ones_like(xs)]).T
    coef, *_ = np.linalg.lstsq(A, ys, rcond=None)
    m, c = coef
    if m == 0.0:
        return xs[0], np.inf
    pred = A @ coef
    denom = np.linalg.norm(ys - np.mean(ys)) + 1e-300
    return -c / m, np.linalg.norm(ys - pred) / denom


@dataclass(frozen=True)
class MartingaleReport:
    """Pointwise discrete sub/supermartingale certificates for a solution."""

    grid: np.ndarray
    sub_violation: np.ndarray    # (-L_h v - tol)+ off D1 (submartingale side)
    sup_violation: np.ndarray    # (L_h v - tol)+  off D2 (supermartingale side)
    bounds_violation: np.ndarray  # distance of v outside [f_tilde, g_tilde]
    tol: float
    passed: bool = field(default=False)

    @property
    def max_violation(self) -> float:
        return float(max(self.sub_violation.max(initial=0.0),
                         self.sup_violation.max(initial=0.0),
                         self.bounds_violation.max(initial=0.0)))


def verify_martingale_conditions(sol: ValueSolution, diffusion: DiffusionSpec,
                                 tol: float) -> MartingaleReport:
    """Check (L_h v >= -tol off D1), (L_h v <= tol off D2), f~ <= v <= g~."""
    op = build_operator(diffusion, sol.grid)
    lv = np.zeros(sol.grid.size)
    lv[1:-1] = op.apply(sol.v)
    sub = np.where(~sol.d1_mask, np.maximum(-lv - tol, 0.0), 0.0)
    sup = np.where(~sol.d2_mask, np.maximum(lv - tol, 0.0), 0.0)
    sub[0] = sub[-1] = sup[0] = sup[-1] = 0.0
    bounds = np.maximum(sol.f_tilde - sol.v - tol, 0.0) + \
        np.maximum(sol.v - sol.g_tilde - tol, 0.0)
    passed = bool(np.all(sub == 0) and np.all(sup == 0) and np.all(bounds == 0))
    return MartingaleReport(grid=sol.grid, sub_violation=sub, sup_violation=sup,
                            bounds_violation=bounds, tol=tol, passed=passed)


def brute_force_oracle(assoc: AssociatedPayoffs, diffusion: DiffusionSpec,
                       n_states: int, dt: float | None = None,
                       tol: float = 1e-10, max_iter: int = 2_000_000) -> np.ndarray:
    """Independent desk-scale oracle: value iteration for the stopping game on
    a birth-death chain approximation of X.

    Per-step payoffs are f_tilde if player 1 stops, g_tilde if player 2 stops,
    f_tilde if both stop; the per-state value is the median of (f, g, continue).
    """
    if n_states > 400:
        raise ValidationError("oracle is desk-scale only (n_states <= 400)")
    x = np.linspace(assoc.grid[0], assoc.grid[-1], n_states)
    h = x[1] - x[0]
    f = np.interp(x, assoc.grid, assoc.f_tilde)
    g = np.interp(x, assoc.grid, assoc.g_tilde)
    mu = diffusion.mu(x[1:-1])
    sig2 = diffusion.sigma(x[1:-1]) ** 2
    q = sig2 + h * np.abs(mu)
    p_up = (0.5 * sig2 + h * np.maximum(mu, 0.0)) / q
    p_dn = (0.5 * sig2 + h * np.maximum(-mu, 0.0)) / q
    if dt is None:
        step = h * h / q
    else:
        step = np.full(n_states - 2, float(dt))
    disc = np.exp(-diffusion.r * step)

    v = f.copy()
    pinched0 = abs(f[0] - g[0]) <= 1e-12 * (1 + abs(f[0]))
    pinchedN = abs(f[-1] - g[-1]) <= 1e-12 * (1 + abs(f[-1]))
    v[0] = f[0] if not pinched0 else f[0]
    v[-1] = f[-1] if not pinchedN else f[-1]
    scale = 1.0 + float(np.max(np.abs(f)) + np.max(np.abs(g)))
    for _ in range(max_iter):
        cont = disc * (p_up * v[2:] + p_dn * v[:-2])
        new = np.maximum(f[1:-1], np.minimum(g[1:-1], cont))
        change = float(np.max(np.abs(new - v[1:-1])))
        v[1:-1] = new
        if change <= tol * scale:
            return v
    raise NonContraction(
        f"oracle value iteration did not reach a fixed point (last change {change:.3e})")
