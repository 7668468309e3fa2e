# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled scalar kernels; formula-for-formula twin of _kernels_py."""

import numpy as np

from libc.math cimport expm1, log1p, exp, pow, isnan, NAN

cdef double SMALL_S = 1e-6


cdef inline double _r4(double z) nogil:
    return 1.0 + z * (0.5 + z * (1.0 / 6.0 + z * (1.0 / 24.0 + z / 120.0)))


cdef inline double _log1p_ratio(double tau, double x) nogil:
    cdef double c2 = x * (1.0 - x) / 2.0
    cdef double c3 = x * (1.0 - x) * (1.0 - 2.0 * x) / 6.0
    cdef double c4 = x * (1.0 - x) * (1.0 - 6.0 * x + 6.0 * x * x) / 24.0
    return x + tau * (c2 + tau * (c3 + tau * c4))


cdef double _zeta(double s, double alpha, double x) nogil:
    cdef double tau, t, lg
    if isnan(x) or x < -1e-12 or x > 1.0 + 1e-12:
        return NAN
    if x < 0.0:
        x = 0.0
    elif x > 1.0:
        x = 1.0
    if s == 0.0:
        return x
    tau = s / (alpha - 1.0)
    if s < SMALL_S and s > -SMALL_S:
        lg = _log1p_ratio(tau, x)
        return lg * _r4(alpha * tau * lg) / _r4(alpha * tau)
    t = expm1(tau)
    return expm1(alpha * log1p(t * x)) / expm1(alpha * tau)


cdef double _zeta_d(double s, double alpha, double x) nogil:
    cdef double tau, t, lg
    if isnan(x) or x < -1e-12 or x > 1.0 + 1e-12:
        return NAN
    if x < 0.0:
        x = 0.0
    elif x > 1.0:
        x = 1.0
    if s == 0.0:
        return 1.0
    tau = s / (alpha - 1.0)
    if s < SMALL_S and s > -SMALL_S:
        lg = _log1p_ratio(tau, x)
        return _r4(tau) / _r4(alpha * tau) * exp((alpha - 1.0) * tau * lg)
    t = expm1(tau)
    return alpha * t * pow(1.0 + t * x, alpha - 1.0) / expm1(alpha * tau)


cdef inline double _zeta_n(double s, double alpha, double x) nogil:
    if isnan(x):
        return NAN
    cdef double t = expm1(s / (alpha - 1.0))
    return (alpha - 1.0) * t / (1.0 + t * x)


cdef inline double _zeta_dn(double s, double alpha, double x) nogil:
    if isnan(x):
        return NAN
    cdef double t = expm1(s / (alpha - 1.0))
    cdef double r = t / (1.0 + t * x)
    return -(alpha - 1.0) * r * r


cdef double _zeta_inv(double s, double alpha, double y) nogil:
    cdef double tau, t, big, x
    cdef int i
    if isnan(y) or y < -1e-12 or y > 1.0 + 1e-12:
        return NAN
    if y < 0.0:
        y = 0.0
    elif y > 1.0:
        y = 1.0
    if s == 0.0:
        return y
    if s < SMALL_S and s > -SMALL_S:
        x = y
        for i in range(3):
            x -= (_zeta(s, alpha, x) - y) / _zeta_d(s, alpha, x)
            if x < 0.0:
                x = 0.0
            elif x > 1.0:
                x = 1.0
        return x
    tau = s / (alpha - 1.0)
    t = expm1(tau)
    big = expm1(alpha * tau)
    return expm1(log1p(y * big) / alpha) / t


cdef inline double _zeta_zoom(double s, double alpha, double lo, double hi) nogil:
    if isnan(lo) or isnan(hi) or hi <= lo:
        return NAN
    cdef double t = expm1(s / (alpha - 1.0))
    return (alpha - 1.0) * log1p(t * (hi - lo) / (1.0 + t * lo))


cdef double _chain_eval(double[::1] sv, double alpha, double x) nogil:
    cdef Py_ssize_t i
    for i in range(sv.shape[0]):
        x = _zeta(sv[i], alpha, x)
        if isnan(x):
            return NAN
    return x


cdef double _chain_deriv(double[::1] sv, double alpha, double x) nogil:
    cdef double d = 1.0
    cdef Py_ssize_t i
    for i in range(sv.shape[0]):
        d *= _zeta_d(sv[i], alpha, x)
        x = _zeta(sv[i], alpha, x)
        if isnan(x):
            return NAN
    return d


cdef double _chain_nonlin(double[::1] sv, double alpha, double x) nogil:
    cdef double d = 1.0
    cdef double n = 0.0
    cdef Py_ssize_t i
    for i in range(sv.shape[0]):
        n += _zeta_n(sv[i], alpha, x) * d
        d *= _zeta_d(sv[i], alpha, x)
        x = _zeta(sv[i], alpha, x)
        if isnan(x):
            return NAN
    return n


cdef double _chain_inv(double[::1] sv, double alpha, double y) nogil:
    cdef Py_ssize_t i
    for i in range(sv.shape[0] - 1, -1, -1):
        y = _zeta_inv(sv[i], alpha, y)
        if isnan(y):
            return NAN
    return y


cdef double _q_eval(int side, double alpha, double h, double c, double x) nogil:
    cdef double w
    if isnan(x):
        return NAN
    if side == 0:
        if x < -1e-12 or x > c + 1e-12:
            return NAN
        w = (c - x) / c
        if w < 0.0:
            w = 0.0
        return h * (1.0 - pow(w, alpha))
    if x < c - 1e-12 or x > 1.0 + 1e-12:
        return NAN
    w = (x - c) / (1.0 - c)
    if w < 0.0:
        w = 0.0
    return 1.0 + h * (pow(w, alpha) - 1.0)


cdef double _q_deriv(int side, double alpha, double h, double c, double x) nogil:
    cdef double w
    if isnan(x):
        return NAN
    if side == 0:
        if x < -1e-12 or x > c + 1e-12:
            return NAN
        w = (c - x) / c
        if w < 0.0:
            w = 0.0
        return h * alpha * pow(w, alpha - 1.0) / c
    if x < c - 1e-12 or x > 1.0 + 1e-12:
        return NAN
    w = (x - c) / (1.0 - c)
    if w < 0.0:
        w = 0.0
    return h * alpha * pow(w, alpha - 1.0) / (1.0 - c)


cdef double _q_inv(int side, double alpha, double h, double c, double y) nogil:
    cdef double r
    if isnan(y):
        return NAN
    if side == 0:
        r = 1.0 - y / h
        if r < -1e-12 or r > 1.0 + 1e-12:
            return NAN
        if r < 0.0:
            r = 0.0
        elif r > 1.0:
            r = 1.0
        return c * (1.0 - pow(r, 1.0 / alpha))
    r = (y - (1.0 - h)) / h
    if r < -1e-12 or r > 1.0 + 1e-12:
        return NAN
    if r < 0.0:
        r = 0.0
    elif r > 1.0:
        r = 1.0
    return c + (1.0 - c) * pow(r, 1.0 / alpha)


cdef double _q_zoom(int side, double alpha, double c, double lo, double hi) nogil:
    if isnan(lo) or isnan(hi) or hi <= lo:
        return NAN
    if side == 0:
        if hi >= c:
            return NAN
        return (alpha - 1.0) * log1p(-(hi - lo) / (c - lo))
    if lo <= c:
        return NAN
    return (alpha - 1.0) * log1p((hi - lo) / (lo - c))


cdef double _zeta_inv_width(double s, double alpha, double lo, double w) nogil:
    # width of zeta_s^{-1}([lo, lo+w]) without endpoint cancellation; the
    # pulled-back return interval can be 1e-10 wide at 1e-5 from a branch
    # endpoint, where differencing inverse images loses seven digits
    cdef double tau, t, big, y0, q
    if isnan(w) or w <= 0.0:
        return NAN
    if s < 1e-8 and s > -1e-8:
        return w / _zeta_d(s, alpha, lo + 0.5 * w)
    tau = s / (alpha - 1.0)
    t = expm1(tau)
    big = expm1(alpha * tau)
    y0 = 1.0 + lo * big
    q = w * big / y0
    if q <= -1.0:
        return NAN
    return pow(y0, 1.0 / alpha) * expm1(log1p(q) / alpha) / t


cdef double _q_inv_width(int side, double alpha, double h, double c,
                         double lo, double w) nogil:
    # width of q^{-1}([lo, lo+w]) on one side, cancellation-free
    cdef double ia = 1.0 / alpha
    cdef double g0, q
    if isnan(w) or w <= 0.0:
        return NAN
    if side == 0:
        g0 = 1.0 - lo / h
        if g0 <= 0.0:
            return NAN
        q = -(w / h) / g0
        if q <= -1.0:
            return NAN
        return -(c * pow(g0, ia) * expm1(log1p(q) * ia))
    g0 = 1.0 + (lo - 1.0) / h
    if g0 <= 0.0:
        return NAN
    q = (w / h) / g0
    return (1.0 - c) * pow(g0, ia) * expm1(log1p(q) * ia)


cdef double _lz_eval(double alpha, double u, double v, double c,
                     double[::1] sm, double[::1] sp, double x) nogil:
    if isnan(x) or x == c:
        return NAN
    if x < c:
        return _chain_eval(sm, alpha, _q_eval(0, alpha, u, c, x))
    return _chain_eval(sp, alpha, _q_eval(1, alpha, v, c, x))


cdef double _lz_deriv(double alpha, double u, double v, double c,
                      double[::1] sm, double[::1] sp, double x) nogil:
    cdef double y
    if isnan(x) or x == c:
        return NAN
    if x < c:
        y = _q_eval(0, alpha, u, c, x)
        return _chain_deriv(sm, alpha, y) * _q_deriv(0, alpha, u, c, x)
    y = _q_eval(1, alpha, v, c, x)
    return _chain_deriv(sp, alpha, y) * _q_deriv(1, alpha, v, c, x)


cdef inline double _lz_inv_left(double alpha, double u, double v, double c,
                                double[::1] sm, double[::1] sp, double y) nogil:
    return _q_inv(0, alpha, u, c, _chain_inv(sm, alpha, y))


cdef inline double _lz_inv_right(double alpha, double u, double v, double c,
                                 double[::1] sm, double[::1] sp, double y) nogil:
    return _q_inv(1, alpha, v, c, _chain_inv(sp, alpha, y))


# ---------------------------------------------------------------- wrappers

def zeta(double s, double alpha, double x):
    return _zeta(s, alpha, x)

def zeta_d(double s, double alpha, double x):
    return _zeta_d(s, alpha, x)

def zeta_n(double s, double alpha, double x):
    return _zeta_n(s, alpha, x)

def zeta_dn(double s, double alpha, double x):
    return _zeta_dn(s, alpha, x)

def zeta_inv(double s, double alpha, double y):
    return _zeta_inv(s, alpha, y)

def zeta_zoom(double s, double alpha, double lo, double hi):
    return _zeta_zoom(s, alpha, lo, hi)

def chain_eval(double[::1] sv, double alpha, double x):
    return _chain_eval(sv, alpha, x)

def chain_deriv(double[::1] sv, double alpha, double x):
    return _chain_deriv(sv, alpha, x)

def chain_nonlin(double[::1] sv, double alpha, double x):
    return _chain_nonlin(sv, alpha, x)

def chain_inv(double[::1] sv, double alpha, double y):
    return _chain_inv(sv, alpha, y)

def q_eval(int side, double alpha, double h, double c, double x):
    return _q_eval(side, alpha, h, c, x)

def q_deriv(int side, double alpha, double h, double c, double x):
    return _q_deriv(side, alpha, h, c, x)

def q_inv(int side, double alpha, double h, double c, double y):
    return _q_inv(side, alpha, h, c, y)

def q_zoom(int side, double alpha, double c, double lo, double hi):
    return _q_zoom(side, alpha, c, lo, hi)

def lz_eval(double alpha, double u, double v, double c,
            double[::1] sm, double[::1] sp, double x):
    return _lz_eval(alpha, u, v, c, sm, sp, x)

def lz_deriv(double alpha, double u, double v, double c,
             double[::1] sm, double[::1] sp, double x):
    return _lz_deriv(alpha, u, v, c, sm, sp, x)

def lz_inv_left(double alpha, double u, double v, double c,
                double[::1] sm, double[::1] sp, double y):
    return _lz_inv_left(alpha, u, v, c, sm, sp, y)

def lz_inv_right(double alpha, double u, double v, double c,
                 double[::1] sm, double[::1] sp, double y):
    return _lz_inv_right(alpha, u, v, c, sm, sp, y)


def crossing_count(double alpha, double u, double v, double c,
                   double[::1] sm, double[::1] sp, int left, int max_iter):
    cdef double y
    cdef int count = 0
    cdef int k
    if left == 1:
        y = _chain_eval(sm, alpha, u)
    else:
        y = _chain_eval(sp, alpha, 1.0 - v)
    if isnan(y):
        return 0, 2
    for k in range(max_iter):
        if left == 1:
            if y < c:
                return count, 0
            y = _chain_eval(sp, alpha, _q_eval(1, alpha, v, c, y))
        else:
            if y > c:
                return count, 0
            y = _chain_eval(sm, alpha, _q_eval(0, alpha, u, c, y))
        if isnan(y):
            return count, 2
        count += 1
    return count, 1


cdef (double, double) _displ_left(double alpha, double u, double v, double c,
                                  double[::1] sm, double[::1] sp,
                                  int a, double x) nogil:
    cdef double y, d, w
    cdef int k
    y = _chain_eval(sm, alpha, _q_eval(0, alpha, u, c, x))
    d = _chain_deriv(sm, alpha, _q_eval(0, alpha, u, c, x)) * _q_deriv(0, alpha, u, c, x)
    if isnan(y) or isnan(d):
        return NAN, NAN
    for k in range(a):
        if y <= c:
            return NAN, NAN
        w = _q_eval(1, alpha, v, c, y)
        d *= _chain_deriv(sp, alpha, w) * _q_deriv(1, alpha, v, c, y)
        y = _chain_eval(sp, alpha, w)
        if isnan(y) or isnan(d):
            return NAN, NAN
    return y - x, d - 1.0


cdef (double, double) _displ_right(double alpha, double u, double v, double c,
                                   double[::1] sm, double[::1] sp,
                                   int b, double x) nogil:
    cdef double y, d, w
    cdef int k
    y = _chain_eval(sp, alpha, _q_eval(1, alpha, v, c, x))
    d = _chain_deriv(sp, alpha, _q_eval(1, alpha, v, c, x)) * _q_deriv(1, alpha, v, c, x)
    if isnan(y) or isnan(d):
        return NAN, NAN
    for k in range(b):
        if y >= c:
            return NAN, NAN
        w = _q_eval(0, alpha, u, c, y)
        d *= _chain_deriv(sm, alpha, w) * _q_deriv(0, alpha, u, c, y)
        y = _chain_eval(sm, alpha, w)
        if isnan(y) or isnan(d):
            return NAN, NAN
    return y - x, d - 1.0


def displ_left(double alpha, double u, double v, double c,
               double[::1] sm, double[::1] sp, int a, double x):
    cdef (double, double) r = _displ_left(alpha, u, v, c, sm, sp, a, x)
    return r[0], r[1]


def displ_right(double alpha, double u, double v, double c,
                double[::1] sm, double[::1] sp, int b, double x):
    cdef (double, double) r = _displ_right(alpha, u, v, c, sm, sp, b, x)
    return r[0], r[1]


def displ_left_grid(double alpha, double u, double v, double c,
                    double[::1] sm, double[::1] sp, int a, double[::1] xs):
    cdef Py_ssize_t n = xs.shape[0]
    out = np.empty(n)
    cdef double[::1] o = out
    cdef Py_ssize_t i
    cdef (double, double) r
    with nogil:
        for i in range(n):
            r = _displ_left(alpha, u, v, c, sm, sp, a, xs[i])
            o[i] = r[0]
    return out


def displ_right_grid(double alpha, double u, double v, double c,
                     double[::1] sm, double[::1] sp, int b, double[::1] xs):
    cdef Py_ssize_t n = xs.shape[0]
    out = np.empty(n)
    cdef double[::1] o = out
    cdef Py_ssize_t i
    cdef (double, double) r
    with nogil:
        for i in range(n):
            r = _displ_right(alpha, u, v, c, sm, sp, b, xs[i])
            o[i] = r[0]
    return out


def backward_left(double alpha, double u, double v, double c,
                  double[::1] sm, double[::1] sp, double y, int n):
    cdef int k
    for k in range(n):
        y = _lz_inv_left(alpha, u, v, c, sm, sp, y)
        if isnan(y):
            return NAN
    return y


def backward_right(double alpha, double u, double v, double c,
                   double[::1] sm, double[::1] sp, double y, int n):
    cdef int k
    for k in range(n):
        y = _lz_inv_right(alpha, u, v, c, sm, sp, y)
        if isnan(y):
            return NAN
    return y


def first_return(double alpha, double u, double v, double c,
                 double[::1] sm, double[::1] sp,
                 double l, double r, double x, int max_steps):
    cdef double y = x
    cdef int k
    for k in range(1, max_steps + 1):
        if y == c:
            return NAN, -2
        y = _lz_eval(alpha, u, v, c, sm, sp, y)
        if isnan(y) or y < 0.0 or y > 1.0:
            return NAN, -1
        if l <= y <= r:
            return y, k
    return NAN, -3


def renorm_walk(double alpha, double u, double v, double c,
                double[::1] sm, double[::1] sp, int a, int b,
                double l, double r):
    cdef Py_ssize_t n_m = sm.shape[0]
    cdef Py_ssize_t n_p = sp.shape[0]
    new_left_arr = np.empty(n_m + a * (1 + n_p))
    new_right_arr = np.empty(n_p + b * (1 + n_m))
    cdef double[::1] new_left = new_left_arr
    cdef double[::1] new_right = new_right_arr
    qlo_arr = np.empty(a + 1)
    qhi_arr = np.empty(a + 1)
    plo_arr = np.empty(b + 1)
    phi_arr = np.empty(b + 1)
    cdef double[::1] qlo = qlo_arr
    cdef double[::1] qhi = qhi_arr
    cdef double[::1] plo = plo_arr
    cdef double[::1] phi_ = phi_arr
    cdef double lo, hi, nlo, nhi, tlo, thi, s_q, wid, nw, twid
    cdef double U0 = NAN, U1 = NAN, V0 = NAN, V1 = NAN
    cdef double u_width = NAN, v_width = NAN
    cdef double uprime, vprime, cprime, lam0, lam1
    cdef Py_ssize_t i, pos
    cdef int j, code = 0
    cdef (double, double) disp

    with nogil:
        # left side; intervals carried as (low endpoint, width): widths
        # shrink geometrically under the pullback while the endpoints do
        # not, so endpoint differences would drown uprime in rounding noise
        lo = l
        wid = r - l
        for j in range(a, 0, -1):
            for i in range(n_p - 1, -1, -1):
                nw = _zeta_inv_width(sp[i], alpha, lo, wid)
                lo = _zeta_inv(sp[i], alpha, lo)
                if isnan(lo) or isnan(nw):
                    code = 1
                    break
                wid = nw
            if code:
                break
            nw = _q_inv_width(1, alpha, v, c, lo, wid)
            lo = _q_inv(1, alpha, v, c, lo)
            if isnan(lo) or isnan(nw) or lo <= c:
                code = 1
                break
            wid = nw
            qlo[j] = lo
            qhi[j] = lo + wid
        if code == 0:
            tlo = lo
            twid = wid
            for i in range(n_m - 1, -1, -1):
                nw = _zeta_inv_width(sm[i], alpha, tlo, twid)
                nlo = _zeta_inv(sm[i], alpha, tlo)
                if isnan(nlo) or isnan(nw):
                    code = 1
                    break
                new_left[i] = _zeta_zoom(sm[i], alpha, nlo, nlo + nw)
                tlo = nlo
                twid = nw
        if code == 0:
            U0 = tlo
            U1 = tlo + twid
            u_width = twid
            for j in range(1, a + 1):
                pos = n_m + (j - 1) * (1 + n_p)
                s_q = _q_zoom(1, alpha, c, qlo[j], qhi[j])
                if isnan(s_q):
                    code = 1
                    break
                new_left[pos] = s_q
                if j == a:
                    tlo = l
                    thi = r
                else:
                    tlo = qlo[j + 1]
                    thi = qhi[j + 1]
                for i in range(n_p - 1, -1, -1):
                    nlo = _zeta_inv(sp[i], alpha, tlo)
                    nhi = _zeta_inv(sp[i], alpha, thi)
                    if isnan(nlo) or isnan(nhi) or nhi <= nlo:
                        code = 1
                        break
                    new_left[pos + 1 + i] = _zeta_zoom(sp[i], alpha, nlo, nhi)
                    tlo = nlo
                    thi = nhi
                if code:
                    break
        # right side
        if code == 0:
            lo = l
            wid = r - l
            for j in range(b, 0, -1):
                for i in range(n_m - 1, -1, -1):
                    nw = _zeta_inv_width(sm[i], alpha, lo, wid)
                    lo = _zeta_inv(sm[i], alpha, lo)
                    if isnan(lo) or isnan(nw):
                        code = 1
                        break
                    wid = nw
                if code:
                    break
                nw = _q_inv_width(0, alpha, u, c, lo, wid)
                lo = _q_inv(0, alpha, u, c, lo)
                if isnan(lo) or isnan(nw) or lo + nw >= c:
                    code = 1
                    break
                wid = nw
                plo[j] = lo
                phi_[j] = lo + wid
        if code == 0:
            tlo = lo
            twid = wid
            for i in range(n_p - 1, -1, -1):
                nw = _zeta_inv_width(sp[i], alpha, tlo, twid)
                nlo = _zeta_inv(sp[i], alpha, tlo)
                if isnan(nlo) or isnan(nw):
                    code = 1
                    break
                new_right[i] = _zeta_zoom(sp[i], alpha, nlo, nlo + nw)
                tlo = nlo
                twid = nw
        if code == 0:
            V0 = tlo
            V1 = tlo + twid
            v_width = twid
            for j in range(1, b + 1):
                pos = n_p + (j - 1) * (1 + n_m)
                s_q = _q_zoom(0, alpha, c, plo[j], phi_[j])
                if isnan(s_q):
                    code = 1
                    break
                new_right[pos] = s_q
                if j == b:
                    tlo = l
                    thi = r
                else:
                    tlo = plo[j + 1]
                    thi = phi_[j + 1]
                for i in range(n_m - 1, -1, -1):
                    nlo = _zeta_inv(sm[i], alpha, tlo)
                    nhi = _zeta_inv(sm[i], alpha, thi)
                    if isnan(nlo) or isnan(nhi) or nhi <= nlo:
                        code = 1
                        break
                    new_right[pos + 1 + i] = _zeta_zoom(sm[i], alpha, nlo, nhi)
                    tlo = nlo
                    thi = nhi
                if code:
                    break

    if code:
        return (NAN, NAN, NAN, NAN, NAN, (NAN, NAN), (NAN, NAN),
                new_left_arr, new_right_arr, 1)
    cprime = (c - l) / (r - l)
    # u - q_-(l) and q_+(r) - (1-v) in closed form; the naive differences
    # cancel catastrophically when the return interval hugs c
    uprime = u * pow((c - l) / c, alpha) / u_width
    vprime = v * pow((r - c) / (1.0 - c), alpha) / v_width
    disp = _displ_left(alpha, u, v, c, sm, sp, a, l)
    lam0 = disp[1] + 1.0
    disp = _displ_right(alpha, u, v, c, sm, sp, b, r)
    lam1 = disp[1] + 1.0
    if isnan(uprime) or isnan(vprime):
        return (NAN, NAN, NAN, NAN, NAN, (NAN, NAN), (NAN, NAN),
                new_left_arr, new_right_arr, 1)
    return (uprime, vprime, cprime, lam0, lam1, (U0, U1), (V0, V1),
            new_left_arr, new_right_arr, 0)
