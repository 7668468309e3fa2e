"""Reference scalar kernels, pure Python.

Mirrors lorenzrg._kernels_cy exactly; the compiled module is generated from
the same formulas.  Domain violations are signalled with NaN rather than
exceptions so that bracketing loops can probe freely; object-level wrappers
turn NaN into typed errors.

Conventions:
  * a one-sided branch of the base family is q_-(x) = u*(1-((c-x)/c)**alpha)
    on [0,c] and q_+(x) = 1 + v*(((x-c)/(1-c))**alpha - 1) on [c,1]
  * a unimodal factor with signed distortion s is
    zeta_s(x) = expm1(alpha*log1p(t*x)) / expm1(alpha*s/(alpha-1)),
    t = expm1(s/(alpha-1)); zeta_0 = identity
  * chains apply their factors first-to-last; all factors share alpha
  * a map is the tuple (alpha, u, v, c, sm, sp): left branch
    chain(sm) o q_-, right branch chain(sp) o q_+
"""

import math

import numpy as np

NAN = float("nan")

# below this the closed form of zeta hits 0/0; use the 4th-order series
SMALL_S = 1e-6


def _r4(z):
    # expm1(z)/z, series form, for |z| << 1
    return 1.0 + z * (0.5 + z * (1.0 / 6.0 + z * (1.0 / 24.0 + z / 120.0)))


def _log1p_ratio(tau, x):
    # log1p((exp(tau)-1)*x)/tau to 4th order in tau
    c2 = x * (1.0 - x) / 2.0
    c3 = x * (1.0 - x) * (1.0 - 2.0 * x) / 6.0
    c4 = x * (1.0 - x) * (1.0 - 6.0 * x + 6.0 * x * x) / 24.0
    return x + tau * (c2 + tau * (c3 + tau * c4))


def zeta(s, alpha, x):
    if x != x or x < -1e-12 or x > 1.0 + 1e-12:
        return NAN
    if x < 0.0:
        x = 0.0
    elif x > 1.0:
        x = 1.0
    if s == 0.0:
        return x
    tau = s / (alpha - 1.0)
    if abs(s) < SMALL_S:
        lg = _log1p_ratio(tau, x)
        return lg * _r4(alpha * tau * lg) / _r4(alpha * tau)
    t = math.expm1(tau)
    return math.expm1(alpha * math.log1p(t * x)) / math.expm1(alpha * tau)


def zeta_d(s, alpha, x):
    if x != x or x < -1e-12 or x > 1.0 + 1e-12:
        return NAN
    if x < 0.0:
        x = 0.0
    elif x > 1.0:
        x = 1.0
    if s == 0.0:
        return 1.0
    tau = s / (alpha - 1.0)
    if abs(s) < SMALL_S:
        lg = _log1p_ratio(tau, x)
        return _r4(tau) / _r4(alpha * tau) * math.exp((alpha - 1.0) * tau * lg)
    t = math.expm1(tau)
    return alpha * t * (1.0 + t * x) ** (alpha - 1.0) / math.expm1(alpha * tau)


def zeta_n(s, alpha, x):
    # nonlinearity D log D zeta; exact in the expm1 form for every s
    if x != x:
        return NAN
    t = math.expm1(s / (alpha - 1.0))
    return (alpha - 1.0) * t / (1.0 + t * x)


def zeta_dn(s, alpha, x):
    if x != x:
        return NAN
    t = math.expm1(s / (alpha - 1.0))
    r = t / (1.0 + t * x)
    return -(alpha - 1.0) * r * r


def zeta_inv(s, alpha, y):
    if y != y or y < -1e-12 or y > 1.0 + 1e-12:
        return NAN
    if y < 0.0:
        y = 0.0
    elif y > 1.0:
        y = 1.0
    if s == 0.0:
        return y
    if abs(s) < SMALL_S:
        # map is within ~s/8 of the identity: Newton from y lands on
        # machine precision in <= 3 steps
        x = y
        for _ in range(3):
            x -= (zeta(s, alpha, x) - y) / zeta_d(s, alpha, x)
            if x < 0.0:
                x = 0.0
            elif x > 1.0:
                x = 1.0
        return x
    tau = s / (alpha - 1.0)
    t = math.expm1(tau)
    big = math.expm1(alpha * tau)
    return math.expm1(math.log1p(y * big) / alpha) / t


def zeta_zoom(s, alpha, lo, hi):
    # signed distortion of zeta_s restricted to [lo,hi] and rescaled
    if lo != lo or hi != hi or hi <= lo:
        return NAN
    t = math.expm1(s / (alpha - 1.0))
    return (alpha - 1.0) * math.log1p(t * (hi - lo) / (1.0 + t * lo))


def chain_eval(sv, alpha, x):
    for s in sv:
        x = zeta(s, alpha, x)
        if x != x:
            return NAN
    return x


def chain_deriv(sv, alpha, x):
    d = 1.0
    for s in sv:
        d *= zeta_d(s, alpha, x)
        x = zeta(s, alpha, x)
        if x != x:
            return NAN
    return d


def chain_nonlin(sv, alpha, x):
    # N(g o h) = Ng(h) * Dh + Nh, accumulated left to right
    d = 1.0
    n = 0.0
    for s in sv:
        n += zeta_n(s, alpha, x) * d
        d *= zeta_d(s, alpha, x)
        x = zeta(s, alpha, x)
        if x != x:
            return NAN
    return n


def chain_inv(sv, alpha, y):
    for i in range(len(sv) - 1, -1, -1):
        y = zeta_inv(sv[i], alpha, y)
        if y != y:
            return NAN
    return y


def q_eval(side, alpha, h, c, x):
    if x != x:
        return NAN
    if side == 0:
        if x < -1e-12 or x > c + 1e-12:
            return NAN
        w = (c - x) / c
        if w < 0.0:
            w = 0.0
        return h * (1.0 - w**alpha)
    if x < c - 1e-12 or x > 1.0 + 1e-12:
        return NAN
    w = (x - c) / (1.0 - c)
    if w < 0.0:
        w = 0.0
    return 1.0 + h * (w**alpha - 1.0)


def q_deriv(side, alpha, h, c, x):
    if x != x:
        return NAN
    if side == 0:
        if x < -1e-12 or x > c + 1e-12:
            return NAN
        w = (c - x) / c
        if w < 0.0:
            w = 0.0
        return h * alpha * w ** (alpha - 1.0) / c
    if x < c - 1e-12 or x > 1.0 + 1e-12:
        return NAN
    w = (x - c) / (1.0 - c)
    if w < 0.0:
        w = 0.0
    return h * alpha * w ** (alpha - 1.0) / (1.0 - c)


def q_inv(side, alpha, h, c, y):
    if y != y:
        return NAN
    if side == 0:
        r = 1.0 - y / h
        if r < -1e-12 or r > 1.0 + 1e-12:
            return NAN
        if r < 0.0:
            r = 0.0
        elif r > 1.0:
            r = 1.0
        return c * (1.0 - r ** (1.0 / alpha))
    r = (y - (1.0 - h)) / h
    if r < -1e-12 or r > 1.0 + 1e-12:
        return NAN
    if r < 0.0:
        r = 0.0
    elif r > 1.0:
        r = 1.0
    return c + (1.0 - c) * r ** (1.0 / alpha)


def q_zoom(side, alpha, c, lo, hi):
    # signed distortion of a one-sided branch restricted to [lo,hi];
    # the interval must avoid the critical point
    if lo != lo or hi != hi or hi <= lo:
        return NAN
    if side == 0:
        if hi >= c:
            return NAN
        return (alpha - 1.0) * math.log1p(-(hi - lo) / (c - lo))
    if lo <= c:
        return NAN
    return (alpha - 1.0) * math.log1p((hi - lo) / (lo - c))


def zeta_inv_width(s, alpha, lo, w):
    """Width of zeta_s^{-1}([lo, lo+w]) without endpoint cancellation.

    The pulled-back return interval can be 1e-10 wide sitting at 1e-5 from
    a branch endpoint; differencing the two inverse images there loses seven
    digits, which is exactly the noise floor the Newton solver dies on.
    """
    if w != w or w <= 0.0:
        return NAN
    if abs(s) < 1e-8:
        # within machine precision of width/derivative at the midpoint
        return w / zeta_d(s, alpha, lo + 0.5 * w)
    tau = s / (alpha - 1.0)
    t = math.expm1(tau)
    big = math.expm1(alpha * tau)
    y0 = 1.0 + lo * big
    q = w * big / y0
    if q <= -1.0:
        return NAN
    return y0 ** (1.0 / alpha) * math.expm1(math.log1p(q) / alpha) / t


def q_inv_width(side, alpha, h, c, lo, w):
    # width of q^{-1}([lo, lo+w]) on one side, cancellation-free
    if w != w or w <= 0.0:
        return NAN
    ia = 1.0 / alpha
    if side == 0:
        g0 = 1.0 - lo / h
        if g0 <= 0.0:
            return NAN
        q = -(w / h) / g0
        if q <= -1.0:
            return NAN
        return -(c * g0**ia * math.expm1(math.log1p(q) * ia))
    g0 = 1.0 + (lo - 1.0) / h
    if g0 <= 0.0:
        return NAN
    q = (w / h) / g0
    return (1.0 - c) * g0**ia * math.expm1(math.log1p(q) * ia)


def lz_eval(alpha, u, v, c, sm, sp, x):
    if x != x or x == c:
        return NAN
    if x < c:
        return chain_eval(sm, alpha, q_eval(0, alpha, u, c, x))
    return chain_eval(sp, alpha, q_eval(1, alpha, v, c, x))


def lz_deriv(alpha, u, v, c, sm, sp, x):
    if x != x or x == c:
        return NAN
    if x < c:
        y = q_eval(0, alpha, u, c, x)
        return chain_deriv(sm, alpha, y) * q_deriv(0, alpha, u, c, x)
    y = q_eval(1, alpha, v, c, x)
    return chain_deriv(sp, alpha, y) * q_deriv(1, alpha, v, c, x)


def lz_inv_left(alpha, u, v, c, sm, sp, y):
    # inverse of the left branch; defined for y in [0, chain(sm)(u)]
    return q_inv(0, alpha, u, c, chain_inv(sm, alpha, y))


def lz_inv_right(alpha, u, v, c, sm, sp, y):
    return q_inv(1, alpha, v, c, chain_inv(sp, alpha, y))


def crossing_count(alpha, u, v, c, sm, sp, left, max_iter):
    """Iterates of a critical value under the opposite branch until crossing.

    left=1: orbit of the left critical value under the right branch, counting
    applications until the value falls strictly left of c; returns (count,
    code).  The stay-test is weak (a value landing exactly on c continues
    with the one-sided limit) so return words that graze c keep their full
    length.  code 0 ok, 1 no crossing within max_iter, 2 NaN orbit.
    """
    if left == 1:
        y = chain_eval(sm, alpha, u)
    else:
        y = chain_eval(sp, alpha, 1.0 - v)
    if y != y:
        return 0, 2
    count = 0
    for _ in range(max_iter):
        if left == 1:
            if y < c:
                return count, 0
            y = chain_eval(sp, alpha, q_eval(1, alpha, v, c, y))
        else:
            if y > c:
                return count, 0
            y = chain_eval(sm, alpha, q_eval(0, alpha, u, c, y))
        if y != y:
            return count, 2
        count += 1
    return count, 1


def displ_left(alpha, u, v, c, sm, sp, a, x):
    """(f_+^a(f_-(x)) - x, derivative): boundary equation of the left side."""
    y = chain_eval(sm, alpha, q_eval(0, alpha, u, c, x))
    d = chain_deriv(sm, alpha, q_eval(0, alpha, u, c, x)) * q_deriv(0, alpha, u, c, x)
    if y != y or d != d:
        return NAN, NAN
    for _ in range(a):
        if y <= c:
            return NAN, NAN
        w = q_eval(1, alpha, v, c, y)
        d *= chain_deriv(sp, alpha, w) * q_deriv(1, alpha, v, c, y)
        y = chain_eval(sp, alpha, w)
        if y != y or d != d:
            return NAN, NAN
    return y - x, d - 1.0


def displ_right(alpha, u, v, c, sm, sp, b, x):
    y = chain_eval(sp, alpha, q_eval(1, alpha, v, c, x))
    d = chain_deriv(sp, alpha, q_eval(1, alpha, v, c, x)) * q_deriv(1, alpha, v, c, x)
    if y != y or d != d:
        return NAN, NAN
    for _ in range(b):
        if y >= c:
            return NAN, NAN
        w = q_eval(0, alpha, u, c, y)
        d *= chain_deriv(sm, alpha, w) * q_deriv(0, alpha, u, c, y)
        y = chain_eval(sm, alpha, w)
        if y != y or d != d:
            return NAN, NAN
    return y - x, d - 1.0


def displ_left_grid(alpha, u, v, c, sm, sp, a, xs):
    out = np.empty(len(xs))
    for i, x in enumerate(xs):
        out[i] = displ_left(alpha, u, v, c, sm, sp, a, x)[0]
    return out


def displ_right_grid(alpha, u, v, c, sm, sp, b, xs):
    out = np.empty(len(xs))
    for i, x in enumerate(xs):
        out[i] = displ_right(alpha, u, v, c, sm, sp, b, x)[0]
    return out


def backward_left(alpha, u, v, c, sm, sp, y, n):
    # n-fold preimage under the left branch
    for _ in range(n):
        y = lz_inv_left(alpha, u, v, c, sm, sp, y)
        if y != y:
            return NAN
    return y


def backward_right(alpha, u, v, c, sm, sp, y, n):
    for _ in range(n):
        y = lz_inv_right(alpha, u, v, c, sm, sp, y)
        if y != y:
            return NAN
    return y


def first_return(alpha, u, v, c, sm, sp, l, r, x, max_steps):
    """First return of x in [l,r] to [l,r]; returns (value, steps).

    steps = -1: orbit escaped [0,1]; -2: hit the critical point;
    -3: no return within max_steps.
    """
    y = x
    for k in range(1, max_steps + 1):
        if y == c:
            return NAN, -2
        y = lz_eval(alpha, u, v, c, sm, sp, y)
        if y != y or y < 0.0 or y > 1.0:
            return NAN, -1
        if l <= y <= r:
            return y, k
    return NAN, -3


def renorm_walk(alpha, u, v, c, sm, sp, a, b, l, r):
    """Factor walk of the rescaled first-return map on [l,r].

    Returns (uprime, vprime, cprime, lam0, lam1, U, V, new_left, new_right,
    code).  new_left lists the signed distortions of the rescaled left-branch
    factors in application order: the n_m rescaled old left factors, then for
    each j=1..a the rescaled one-sided branch factor followed by n_p rescaled
    old right factors.  new_right mirrors with b blocks of old left factors.
    code 0 ok, 1 pullback failure (an interval straddles or touches c, or
    leaves a branch domain).
    """
    n_m = len(sm)
    n_p = len(sp)
    new_left = np.empty(n_m + a * (1 + n_p))
    new_right = np.empty(n_p + b * (1 + n_m))
    bad = (
        (NAN, NAN, NAN, NAN, NAN, (NAN, NAN), (NAN, NAN), new_left, new_right, 1)
    )

    # ---- left side: factors of f_+^a o (chain(sm) o q_-) above [l,r] ----
    # intervals are carried as (low endpoint, width): the widths shrink
    # geometrically under the pullback while the endpoints do not, so
    # endpoint differences would dominate uprime with rounding noise
    lo, wid = l, r - l
    qlo = np.empty(a + 1)
    qhi = np.empty(a + 1)
    # pull [l,r] back through f_+ a times; interval j (1-based) is the domain
    # of the j-th right-branch application
    for j in range(a, 0, -1):
        for i in range(n_p - 1, -1, -1):
            nw = zeta_inv_width(sp[i], alpha, lo, wid)
            lo = zeta_inv(sp[i], alpha, lo)
            if lo != lo or nw != nw:
                return bad
            wid = nw
        nw = q_inv_width(1, alpha, v, c, lo, wid)
        lo = q_inv(1, alpha, v, c, lo)
        if lo != lo or nw != nw or lo <= c:
            return bad
        wid = nw
        qlo[j], qhi[j] = lo, lo + wid
    # lo now = min f_+^{-a}([l,r]): target of the old left-chain block
    tlo, twid = lo, wid
    for i in range(n_m - 1, -1, -1):
        nw = zeta_inv_width(sm[i], alpha, tlo, twid)
        nlo = zeta_inv(sm[i], alpha, tlo)
        if nlo != nlo or nw != nw:
            return bad
        new_left[i] = zeta_zoom(sm[i], alpha, nlo, nlo + nw)
        tlo, twid = nlo, nw
    U = (tlo, tlo + twid)
    u_width = twid
    for j in range(1, a + 1):
        pos = n_m + (j - 1) * (1 + n_p)
        s_q = q_zoom(1, alpha, c, qlo[j], qhi[j])
        if s_q != s_q:
            return bad
        new_left[pos] = s_q
        # the old right chain maps q_+(interval j) onto interval j+1 (or C)
        if j == a:
            tlo, thi = l, r
        else:
            tlo, thi = qlo[j + 1], qhi[j + 1]
        for i in range(n_p - 1, -1, -1):
            nlo = zeta_inv(sp[i], alpha, tlo)
            nhi = zeta_inv(sp[i], alpha, thi)
            if nlo != nlo or nhi != nhi or nhi <= nlo:
                return bad
            new_left[pos + 1 + i] = zeta_zoom(sp[i], alpha, nlo, nhi)
            tlo, thi = nlo, nhi

    # ---- right side: factors of f_-^b o (chain(sp) o q_+) above [l,r] ----
    lo, wid = l, r - l
    plo = np.empty(b + 1)
    phi_ = np.empty(b + 1)
    for j in range(b, 0, -1):
        for i in range(n_m - 1, -1, -1):
            nw = zeta_inv_width(sm[i], alpha, lo, wid)
            lo = zeta_inv(sm[i], alpha, lo)
            if lo != lo or nw != nw:
                return bad
            wid = nw
        nw = q_inv_width(0, alpha, u, c, lo, wid)
        lo = q_inv(0, alpha, u, c, lo)
        if lo != lo or nw != nw or lo + nw >= c:
            return bad
        wid = nw
        plo[j], phi_[j] = lo, lo + wid
    tlo, twid = lo, wid
    for i in range(n_p - 1, -1, -1):
        nw = zeta_inv_width(sp[i], alpha, tlo, twid)
        nlo = zeta_inv(sp[i], alpha, tlo)
        if nlo != nlo or nw != nw:
            return bad
        new_right[i] = zeta_zoom(sp[i], alpha, nlo, nlo + nw)
        tlo, twid = nlo, nw
    V = (tlo, tlo + twid)
    v_width = twid
    for j in range(1, b + 1):
        pos = n_p + (j - 1) * (1 + n_m)
        s_q = q_zoom(0, alpha, c, plo[j], phi_[j])
        if s_q != s_q:
            return bad
        new_right[pos] = s_q
        if j == b:
            tlo, thi = l, r
        else:
            tlo, thi = plo[j + 1], phi_[j + 1]
        for i in range(n_m - 1, -1, -1):
            nlo = zeta_inv(sm[i], alpha, tlo)
            nhi = zeta_inv(sm[i], alpha, thi)
            if nlo != nlo or nhi != nhi or nhi <= nlo:
                return bad
            new_right[pos + 1 + i] = zeta_zoom(sm[i], alpha, nlo, nhi)
            tlo, thi = nlo, nhi

    cprime = (c - l) / (r - l)
    # u - q_-(l) and q_+(r) - (1-v) in closed form; the naive differences
    # cancel catastrophically when the return interval hugs c
    uprime = u * ((c - l) / c) ** alpha / u_width
    vprime = v * ((r - c) / (1.0 - c)) ** alpha / v_width
    g0, d0 = displ_left(alpha, u, v, c, sm, sp, a, l)
    g1, d1 = displ_right(alpha, u, v, c, sm, sp, b, r)
    lam0 = d0 + 1.0
    lam1 = d1 + 1.0
    if uprime != uprime or vprime != vprime:
        return bad
    return (uprime, vprime, cprime, lam0, lam1, U, V, new_left, new_right, 0)
