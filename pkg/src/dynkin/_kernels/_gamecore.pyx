# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled game-simulation kernel.

Scalar mirror of fallback.run_paths: every floating-point expression is
written with the same operand grouping, so per-path results agree with the
numpy backend bit-for-bit (the extension is compiled with -ffp-contract=off
to keep FMA contraction from changing roundings).
"""

from libc.math cimport INFINITY, fabs, floor, frexp, sqrt

ctypedef unsigned int u32
ctypedef unsigned long long u64

cdef double _INV_2_53 = 1.0 / 9007199254740992.0
cdef double _LN2 = 0.6931471805599453
cdef double _SQRT_HALF = 0.7071067811865476

cdef u32 _M0 = 0xD2511F53u
cdef u32 _M1 = 0xCD9E8D57u
cdef u32 _W0 = 0x9E3779B9u
cdef u32 _W1 = 0xBB67AE85u


cdef inline double counter_uniform(u64 seed, u64 path, u64 step, u32 purpose) nogil:
    cdef u32 x0 = <u32>(step & 0xFFFFFFFFu)
    cdef u32 x1 = <u32>(step >> 32)
    cdef u32 x2 = <u32>(path & 0xFFFFFFFFu)
    cdef u32 x3 = purpose | (<u32>(path >> 32) << 8)
    cdef u32 k0 = <u32>(seed & 0xFFFFFFFFu)
    cdef u32 k1 = <u32>((seed >> 32) & 0xFFFFFFFFu)
    cdef u64 p0, p1
    cdef u32 hi0, lo0, hi1, lo1, n0, n1, n2, n3
    cdef int i
    for i in range(10):
        p0 = (<u64>x0) * _M0
        p1 = (<u64>x2) * _M1
        hi0 = <u32>(p0 >> 32)
        lo0 = <u32>(p0 & 0xFFFFFFFFu)
        hi1 = <u32>(p1 >> 32)
        lo1 = <u32>(p1 & 0xFFFFFFFFu)
        n0 = hi1 ^ x1 ^ k0
        n1 = lo1
        n2 = hi0 ^ x3 ^ k1
        n3 = lo0
        x0 = n0; x1 = n1; x2 = n2; x3 = n3
        k0 = k0 + _W0
        k1 = k1 + _W1
    cdef u64 out = ((<u64>x0) << 32) | (<u64>x1)
    return (<double>(out >> 11) + 0.5) * _INV_2_53


cdef inline double portable_log(double x) nogil:
    cdef int e
    cdef double m = frexp(x, &e)
    cdef double ef
    if m < _SQRT_HALF:
        m = m * 2.0
        e = e - 1
    ef = <double>e
    cdef double t = (m - 1.0) / (m + 1.0)
    cdef double t2 = t * t
    cdef double s = 1.0 / 23.0
    s = s * t2 + 1.0 / 21.0
    s = s * t2 + 1.0 / 19.0
    s = s * t2 + 1.0 / 17.0
    s = s * t2 + 1.0 / 15.0
    s = s * t2 + 1.0 / 13.0
    s = s * t2 + 1.0 / 11.0
    s = s * t2 + 1.0 / 9.0
    s = s * t2 + 1.0 / 7.0
    s = s * t2 + 1.0 / 5.0
    s = s * t2 + 1.0 / 3.0
    s = s * t2 + 1.0
    return ef * _LN2 + (2.0 * t) * s


cdef inline double ppnd16(double p) nogil:
    cdef double q = p - 0.5
    cdef double r, rr, num, den, val
    if fabs(q) <= 0.425:
        r = 0.180625 - q * q
        num = ((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r
               + 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r
               + 1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r
               + 1.3314166789178437745e2) * r + 3.3871328727963666080e0
        den = ((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r
               + 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r
               + 5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r
               + 4.2313330701600911252e1) * r + 1.0
        return q * num / den
    if q < 0:
        r = p
    else:
        r = 1.0 - p
    r = sqrt(-portable_log(r))
    if r <= 5.0:
        rr = r - 1.6
        num = ((((((7.74545014278341407640e-4 * rr + 2.27238449892691845833e-2) * rr
               + 2.41780725177450611770e-1) * rr + 1.27045825245236838258e0) * rr
               + 3.64784832476320460504e0) * rr + 5.76949722146069140550e0) * rr
               + 4.63033784615654529590e0) * rr + 1.42343711074968357734e0
        den = ((((((1.05075007164441684324e-9 * rr + 5.47593808499534494600e-4) * rr
               + 1.51986665636164571966e-2) * rr + 1.48103976427480074590e-1) * rr
               + 6.89767334985100004550e-1) * rr + 1.67638483018380384940e0) * rr
               + 2.05319162663775882187e0) * rr + 1.0
        val = num / den
    else:
        rr = r - 5.0
        num = ((((((2.01033439929228813265e-7 * rr + 2.71155556874348757815e-5) * rr
               + 1.24266094738807843860e-3) * rr + 2.65321895265761230930e-2) * rr
               + 2.96560571828504891230e-1) * rr + 1.78482653991729133580e0) * rr
               + 5.46378491116411436990e0) * rr + 6.65790464350110377720e0
        den = ((((((2.04426310338993978564e-15 * rr + 1.42151175831644588870e-7) * rr
              + 1.84631831751005468180e-5) * rr + 7.86869131145613259100e-4) * rr
              + 1.48753612908506148525e-2) * rr + 1.36929880922735805310e-1) * rr
              + 5.99832206555887937690e-1) * rr + 1.0
        val = num / den
    if q < 0:
        return -val
    return val


cdef inline double interp(const double[::1] tab, double x, double tab_x0,
                          double inv_dx, Py_ssize_t n_tab) nogil:
    cdef double s = (x - tab_x0) * inv_dx
    cdef double fi = floor(s)
    if fi < 0.0:
        fi = 0.0
    if fi > <double>(n_tab - 2):
        fi = <double>(n_tab - 2)
    cdef double w = s - fi
    cdef Py_ssize_t i = <Py_ssize_t>fi
    cdef double lo = tab[i]
    return lo + w * (tab[i + 1] - lo)


def run_paths(u64 seed, long long path_start, Py_ssize_t n_paths, double x0,
              double dt, long long n_steps,
              const double[::1] e1_in, const double[::1] e2_in,
              double tab_x0, double tab_dx,
              const double[::1] mu_tab, const double[::1] sig_tab,
              const double[::1] lam1_tab, const double[::1] lam2_tab,
              const double[::1] f_tab, const double[::1] g_tab,
              const double[::1] h_tab,
              const double[::1] s1_lo, const double[::1] s1_hi,
              const double[::1] s2_lo, const double[::1] s2_hi,
              const double[::1] a1_x, const double[::1] a1_c, const double[::1] a1_h,
              const double[::1] a2_x, const double[::1] a2_c, const double[::1] a2_h,
              double[::1] payoff, signed char[::1] outcome, double[::1] tau):
    cdef Py_ssize_t n_tab = mu_tab.shape[0]
    cdef double inv_dx = 1.0 / tab_dx
    cdef double sqrt_dt = sqrt(dt)
    cdef double dom_lo = tab_x0
    cdef double dom_hi = tab_x0 + tab_dx * <double>(n_tab - 1)
    cdef Py_ssize_t n_s1 = s1_lo.shape[0], n_s2 = s2_lo.shape[0]
    cdef Py_ssize_t n_a1 = a1_x.shape[0], n_a2 = a2_x.shape[0]

    cdef Py_ssize_t p, j
    cdef long long k
    cdef double x, xn, psi1, psi2, e1, e2, u, xi, mu, sig, t1, t2
    cdef double dpsi1, dpsi2, th1, th2, ths1, ths2, edge1, edge2
    cdef double eff1, eff2, effm, pos1, pos2, wpos, th, dxn, safe
    cdef bint in1, in2, set1, set2, first1, first2, stopped
    cdef signed char which

    with nogil:
        for p in range(n_paths):
            x = x0
            psi1 = 0.0
            psi2 = 0.0
            e1 = e1_in[p]
            e2 = e2_in[p]
            payoff[p] = 0.0
            outcome[p] = 3
            tau[p] = <double>n_steps * dt
            stopped = False
            for k in range(n_steps):
                in1 = False
                for j in range(n_s1):
                    if x >= s1_lo[j] and x <= s1_hi[j]:
                        in1 = True
                        break
                in2 = False
                for j in range(n_s2):
                    if x >= s2_lo[j] and x <= s2_hi[j]:
                        in2 = True
                        break
                if in1 or in2:
                    if in1 and in2:
                        which = 2
                        payoff[p] = interp(h_tab, x, tab_x0, inv_dx, n_tab)
                    elif in1:
                        which = 0
                        payoff[p] = interp(f_tab, x, tab_x0, inv_dx, n_tab)
                    else:
                        which = 1
                        payoff[p] = interp(g_tab, x, tab_x0, inv_dx, n_tab)
                    outcome[p] = which
                    tau[p] = <double>k * dt
                    stopped = True
                    break

                u = counter_uniform(seed, <u64>(path_start + p), <u64>k, 0u)
                xi = ppnd16(u)
                mu = interp(mu_tab, x, tab_x0, inv_dx, n_tab)
                sig = interp(sig_tab, x, tab_x0, inv_dx, n_tab)
                t1 = mu * dt
                t2 = (sig * sqrt_dt) * xi
                xn = (x + t1) + t2
                if xn < dom_lo:
                    xn = dom_lo
                if xn > dom_hi:
                    xn = dom_hi

                dpsi1 = interp(lam1_tab, x, tab_x0, inv_dx, n_tab) * dt
                for j in range(n_a1):
                    if fabs(x - a1_x[j]) < a1_h[j]:
                        dpsi1 = dpsi1 + a1_c[j]
                dpsi2 = interp(lam2_tab, x, tab_x0, inv_dx, n_tab) * dt
                for j in range(n_a2):
                    if fabs(x - a2_x[j]) < a2_h[j]:
                        dpsi2 = dpsi2 + a2_c[j]

                if psi1 + dpsi1 >= e1:
                    th1 = (e1 - psi1) / (dpsi1 if dpsi1 > 0 else 1.0)
                else:
                    th1 = INFINITY
                if psi2 + dpsi2 >= e2:
                    th2 = (e2 - psi2) / (dpsi2 if dpsi2 > 0 else 1.0)
                else:
                    th2 = INFINITY

                dxn = xn - x
                safe = dxn if dxn != 0.0 else 1.0
                ths1 = INFINITY
                edge1 = 0.0
                for j in range(n_s1):
                    if x < s1_lo[j] and xn >= s1_lo[j]:
                        th = (s1_lo[j] - x) / safe
                        if th < ths1:
                            ths1 = th
                            edge1 = s1_lo[j]
                    if x > s1_hi[j] and xn <= s1_hi[j]:
                        th = (s1_hi[j] - x) / safe
                        if th < ths1:
                            ths1 = th
                            edge1 = s1_hi[j]
                ths2 = INFINITY
                edge2 = 0.0
                for j in range(n_s2):
                    if x < s2_lo[j] and xn >= s2_lo[j]:
                        th = (s2_lo[j] - x) / safe
                        if th < ths2:
                            ths2 = th
                            edge2 = s2_lo[j]
                    if x > s2_hi[j] and xn <= s2_hi[j]:
                        th = (s2_hi[j] - x) / safe
                        if th < ths2:
                            ths2 = th
                            edge2 = s2_hi[j]

                eff1 = th1 if th1 < ths1 else ths1
                eff2 = th2 if th2 < ths2 else ths2
                if eff1 <= 1.0 or eff2 <= 1.0:
                    effm = eff1 if eff1 < eff2 else eff2
                    set1 = ths1 <= th1
                    set2 = ths2 <= th2
                    pos1 = edge1 if set1 else x + th1 * (xn - x)
                    pos2 = edge2 if set2 else x + th2 * (xn - x)
                    first1 = eff1 < eff2
                    first2 = eff2 < eff1
                    if first1:
                        which = 0
                        wpos = pos1
                    elif first2:
                        which = 1
                        wpos = pos2
                    else:
                        which = 2
                        if set1:
                            wpos = pos1
                        elif set2:
                            wpos = pos2
                        else:
                            wpos = x + effm * (xn - x)
                    if which == 2:
                        payoff[p] = interp(h_tab, wpos, tab_x0, inv_dx, n_tab)
                    elif which == 0:
                        payoff[p] = interp(f_tab, wpos, tab_x0, inv_dx, n_tab)
                    else:
                        payoff[p] = interp(g_tab, wpos, tab_x0, inv_dx, n_tab)
                    outcome[p] = which
                    tau[p] = (<double>k + effm) * dt
                    stopped = True
                    break

                psi1 = psi1 + dpsi1
                psi2 = psi2 + dpsi2
                x = xn
