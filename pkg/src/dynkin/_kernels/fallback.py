"""Pure-numpy game-simulation kernel.

Reference semantics for the compiled kernel in _gamecore.pyx: both follow the
same arithmetic expression-for-expression so per-path results agree
bit-for-bit (libm-dependent exp/log never run inside either kernel: clocks
and discounting live in the shared wrapper, and the inverse-normal tail uses
the portable log below).

Randomness is counter-based: every draw is Philox4x32-10 keyed by the run seed
and indexed by (path, step, purpose), mapped to doubles via the 53-bit rule
and to normals via the AS241 inverse CDF.  Draws therefore depend only on the
path index, which gives order-independent parallel merging and true common
random numbers across strategy configurations.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "fallback"

_PHILOX_M0 = np.uint64(0xD2511F53)
_PHILOX_M1 = np.uint64(0xCD9E8D57)
_WEYL_0 = np.uint32(0x9E3779B9)
_WEYL_1 = np.uint32(0xBB67AE85)
_U32 = np.uint64(0xFFFFFFFF)
_INV_2_53 = 1.0 / 9007199254740992.0
_LN2 = 0.6931471805599453
_SQRT_HALF = 0.7071067811865476

PURPOSE_NORMAL, PURPOSE_E1, PURPOSE_E2 = 0, 1, 2
OUT_P1, OUT_P2, OUT_SIMUL, OUT_CENSORED = 0, 1, 2, 3


def philox4x32(c0, c1, c2, c3, k0, k1):
    """Philox4x32-10 block cipher; all arguments uint32 arrays or scalars."""
    x0 = np.atleast_1d(np.asarray(c0, dtype=np.uint32)).copy()
    x1 = np.atleast_1d(np.asarray(c1, dtype=np.uint32)).copy()
    x2 = np.atleast_1d(np.asarray(c2, dtype=np.uint32)).copy()
    x3 = np.atleast_1d(np.asarray(c3, dtype=np.uint32)).copy()
    key0 = np.atleast_1d(np.asarray(k0, dtype=np.uint32)).copy()
    key1 = np.atleast_1d(np.asarray(k1, dtype=np.uint32)).copy()
    with np.errstate(over="ignore"):  # mod-2^32 wraparound is the point
        for _ in range(10):
            p0 = x0.astype(np.uint64) * _PHILOX_M0
            p1 = x2.astype(np.uint64) * _PHILOX_M1
            hi0 = (p0 >> np.uint64(32)).astype(np.uint32)
            lo0 = (p0 & _U32).astype(np.uint32)
            hi1 = (p1 >> np.uint64(32)).astype(np.uint32)
            lo1 = (p1 & _U32).astype(np.uint32)
            x0, x1, x2, x3 = hi1 ^ x1 ^ key0, lo1, hi0 ^ x3 ^ key1, lo0
            key0 = key0 + _WEYL_0
            key1 = key1 + _WEYL_1
    return x0, x1, x2, x3


def counter_uniform(seed: int, path, step, purpose) -> np.ndarray:
    """Uniform double in (0, 1) at counter (path, step, purpose)."""
    path = np.asarray(path, dtype=np.uint64)
    step = np.asarray(step, dtype=np.uint64)
    o0, o1, _, _ = philox4x32(
        (step & _U32).astype(np.uint32), (step >> np.uint64(32)).astype(np.uint32),
        (path & _U32).astype(np.uint32),
        np.uint32(purpose) | ((path >> np.uint64(32)) << np.uint64(8)).astype(np.uint32),
        np.uint32(seed & 0xFFFFFFFF), np.uint32((seed >> 32) & 0xFFFFFFFF))
    u64 = (o0.astype(np.uint64) << np.uint64(32)) | o1.astype(np.uint64)
    return ((u64 >> np.uint64(11)).astype(np.float64) + 0.5) * _INV_2_53


def portable_log(x):
    """Natural log via frexp + atanh series; identical arithmetic in both
    backends, accurate to ~4 ulp on (0, inf)."""
    x = np.asarray(x, dtype=np.float64)
    m, e = np.frexp(x)
    small = m < _SQRT_HALF
    m = np.where(small, m * 2.0, m)
    e = np.where(small, e - 1, e).astype(np.float64)
    t = (m - 1.0) / (m + 1.0)
    t2 = t * t
    s = 1.0 / 23.0
    for c in (21.0, 19.0, 17.0, 15.0, 13.0, 11.0, 9.0, 7.0, 5.0, 3.0):
        s = s * t2 + 1.0 / c
    s = s * t2 + 1.0
    return e * _LN2 + (2.0 * t) * s


# AS241 PPND16 coefficients (Wichura 1988), double-precision inverse normal.
_A = (3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
      1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
      3.3430575583588128105e4, 2.5090809287301226727e3)
_B = (4.2313330701600911252e1, 6.8718700749205790830e2, 5.3941960214247511077e3,
      2.1213794301586595867e4, 3.9307895800092710610e4, 2.8729085735721942674e4,
      5.2264952788528545610e3)
_C = (1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
      3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
      2.27238449892691845833e-2, 7.74545014278341407640e-4)
_D = (2.05319162663775882187e0, 1.67638483018380384940e0, 6.89767334985100004550e-1,
      1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
      1.05075007164441684324e-9)
_E = (6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
      2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
      2.71155556874348757815e-5, 2.01033439929228813265e-7)
_F = (5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
      7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
      2.04426310338993978564e-15)


def _poly_central(q):
    r = 0.180625 - q * q
    num = ((((((_A[7] * r + _A[6]) * r + _A[5]) * r + _A[4]) * r + _A[3])
            * r + _A[2]) * r + _A[1]) * r + _A[0]
    den = ((((((_B[6] * r + _B[5]) * r + _B[4]) * r + _B[3]) * r + _B[2])
            * r + _B[1]) * r + _B[0]) * r + 1.0
    return q * num / den


def _poly_mid(r):
    rr = r - 1.6
    num = ((((((_C[7] * rr + _C[6]) * rr + _C[5]) * rr + _C[4]) * rr + _C[3])
            * rr + _C[2]) * rr + _C[1]) * rr + _C[0]
    den = ((((((_D[6] * rr + _D[5]) * rr + _D[4]) * rr + _D[3]) * rr + _D[2])
            * rr + _D[1]) * rr + _D[0]) * rr + 1.0
    return num / den


def _poly_tail(r):
    rr = r - 5.0
    num = ((((((_E[7] * rr + _E[6]) * rr + _E[5]) * rr + _E[4]) * rr + _E[3])
            * rr + _E[2]) * rr + _E[1]) * rr + _E[0]
    den = ((((((_F[6] * rr + _F[5]) * rr + _F[4]) * rr + _F[3]) * rr + _F[2])
            * rr + _F[1]) * rr + _F[0]) * rr + 1.0
    return num / den


def ppnd16(p):
    """Inverse standard-normal CDF (AS241, ~1e-16 relative accuracy)."""
    p = np.asarray(p, dtype=np.float64)
    q = p - 0.5
    out = np.empty_like(p)
    central = np.abs(q) <= 0.425
    if central.any():
        out[central] = _poly_central(q[central])
    rest = ~central
    if rest.any():
        pr = p[rest]
        qr = q[rest]
        r = np.where(qr < 0, pr, 1.0 - pr)
        r = np.sqrt(-portable_log(r))
        mid = r <= 5.0
        val = np.empty_like(r)
        if mid.any():
            val[mid] = _poly_mid(r[mid])
        if (~mid).any():
            val[~mid] = _poly_tail(r[~mid])
        out[rest] = np.where(qr < 0, -val, val)
    return out


def _interp(tab, x, tab_x0, inv_dx, n_tab):
    s = (x - tab_x0) * inv_dx
    idx = np.clip(np.floor(s), 0, n_tab - 2).astype(np.int64)
    w = s - idx
    lo = tab[idx]
    return lo + w * (tab[idx + 1] - lo)


def run_paths(seed, path_start, n_paths, x0, dt, n_steps,
              e1_in, e2_in,
              tab_x0, tab_dx, mu_tab, sig_tab, lam1_tab, lam2_tab,
              f_tab, g_tab, h_tab,
              s1_lo, s1_hi, s2_lo, s2_hi,
              a1_x, a1_c, a1_h, a2_x, a2_c, a2_h,
              payoff, outcome, tau):
    """Simulate one block of paths; fills undiscounted payoff, outcome code
    and stop time in place.

    Atom arrays carry precomputed per-step hazard coefficients
    a_c[j] = gamma_j * sigma(y_j)^2 / (2 h_j) * dt for |x - y_j| < h_j.
    """
    n_tab = mu_tab.size
    inv_dx = 1.0 / tab_dx
    sqrt_dt = np.sqrt(dt)
    dom_lo = tab_x0
    dom_hi = tab_x0 + tab_dx * (n_tab - 1)

    x = np.full(n_paths, float(x0))
    psi1 = np.zeros(n_paths)
    psi2 = np.zeros(n_paths)
    e1 = e1_in.copy()
    e2 = e2_in.copy()
    pos = np.arange(n_paths)  # positions into the output arrays

    outcome[:] = OUT_CENSORED
    payoff[:] = 0.0
    tau[:] = n_steps * dt

    def in_set(lo_arr, hi_arr, xs):
        m = np.zeros(xs.shape, dtype=bool)
        for lo, hi in zip(lo_arr, hi_arr):
            m |= (xs >= lo) & (xs <= hi)
        return m

    def payoff_at(which, xs):
        return np.where(which == OUT_SIMUL, _interp(h_tab, xs, tab_x0, inv_dx, n_tab),
                        np.where(which == OUT_P1,
                                 _interp(f_tab, xs, tab_x0, inv_dx, n_tab),
                                 _interp(g_tab, xs, tab_x0, inv_dx, n_tab)))

    for k in range(n_steps):
        if pos.size == 0:
            return
        # immediate stops at the current state
        in1 = in_set(s1_lo, s1_hi, x)
        in2 = in_set(s2_lo, s2_hi, x)
        now = in1 | in2
        if now.any():
            p = pos[now]
            which = np.where(in1[now] & in2[now], OUT_SIMUL,
                             np.where(in1[now], OUT_P1, OUT_P2)).astype(np.int8)
            payoff[p] = payoff_at(which, x[now])
            outcome[p] = which
            tau[p] = k * dt
            keep = ~now
            x, psi1, psi2, e1, e2, pos = (a[keep] for a in
                                          (x, psi1, psi2, e1, e2, pos))
            if pos.size == 0:
                return

        ids_k = (path_start + pos).astype(np.uint64)
        xi = ppnd16(counter_uniform(seed, ids_k, k, PURPOSE_NORMAL))
        mu = _interp(mu_tab, x, tab_x0, inv_dx, n_tab)
        sig = _interp(sig_tab, x, tab_x0, inv_dx, n_tab)
        t1 = mu * dt
        t2 = (sig * sqrt_dt) * xi
        xn = (x + t1) + t2
        xn = np.where(xn < dom_lo, dom_lo, xn)
        xn = np.where(xn > dom_hi, dom_hi, xn)

        dpsi1 = _interp(lam1_tab, x, tab_x0, inv_dx, n_tab) * dt
        for j in range(a1_x.size):
            dpsi1 = dpsi1 + np.where(np.abs(x - a1_x[j]) < a1_h[j], a1_c[j], 0.0)
        dpsi2 = _interp(lam2_tab, x, tab_x0, inv_dx, n_tab) * dt
        for j in range(a2_x.size):
            dpsi2 = dpsi2 + np.where(np.abs(x - a2_x[j]) < a2_h[j], a2_c[j], 0.0)

        th1 = np.where(psi1 + dpsi1 >= e1,
                       (e1 - psi1) / np.where(dpsi1 > 0, dpsi1, 1.0), np.inf)
        th2 = np.where(psi2 + dpsi2 >= e2,
                       (e2 - psi2) / np.where(dpsi2 > 0, dpsi2, 1.0), np.inf)

        ths1, edge1 = _set_crossing(s1_lo, s1_hi, x, xn)
        ths2, edge2 = _set_crossing(s2_lo, s2_hi, x, xn)

        eff1 = np.minimum(th1, ths1)
        eff2 = np.minimum(th2, ths2)
        stop = (eff1 <= 1.0) | (eff2 <= 1.0)
        if stop.any():
            effm = np.minimum(eff1, eff2)[stop]
            p = pos[stop]
            x_s, xn_s = x[stop], xn[stop]
            set1 = ths1[stop] <= th1[stop]
            set2 = ths2[stop] <= th2[stop]
            pos1 = np.where(set1, edge1[stop], x_s + th1[stop] * (xn_s - x_s))
            pos2 = np.where(set2, edge2[stop], x_s + th2[stop] * (xn_s - x_s))
            first1 = eff1[stop] < eff2[stop]
            first2 = eff2[stop] < eff1[stop]
            which = np.where(first1, OUT_P1,
                             np.where(first2, OUT_P2, OUT_SIMUL)).astype(np.int8)
            where_stop = np.where(first1, pos1, np.where(first2, pos2,
                                  np.where(set1, pos1, np.where(set2, pos2,
                                           x_s + effm * (xn_s - x_s)))))
            payoff[p] = payoff_at(which, where_stop)
            outcome[p] = which
            tau[p] = (k + effm) * dt
            keep = ~stop
            psi1 = psi1[keep] + dpsi1[keep]
            psi2 = psi2[keep] + dpsi2[keep]
            x = xn[keep]
            e1, e2, pos = e1[keep], e2[keep], pos[keep]
        else:
            psi1 = psi1 + dpsi1
            psi2 = psi2 + dpsi2
            x = xn


def _set_crossing(lo_arr, hi_arr, x, xn):
    """Earliest fraction of the step [x, xn] that enters a closed interval of
    the set, together with the entry edge coordinate."""
    ths = np.full(x.shape, np.inf)
    edge = np.zeros(x.shape)
    dxn = xn - x
    safe = np.where(dxn == 0.0, 1.0, dxn)
    for lo, hi in zip(lo_arr, hi_arr):
        from_left = (x < lo) & (xn >= lo)
        th = (lo - x) / safe
        upd = from_left & (th < ths)
        ths = np.where(upd, th, ths)
        edge = np.where(upd, lo, edge)
        from_right = (x > hi) & (xn <= hi)
        th = (hi - x) / safe
        upd = from_right & (th < ths)
        ths = np.where(upd, th, ths)
        edge = np.where(upd, hi, edge)
    return ths, edge
