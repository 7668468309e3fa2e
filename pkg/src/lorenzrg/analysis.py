"""Critical-point analytics, derivative identities, cones, and bounds.

The critical point of a renormalization moves by a law expressed through
the relative critical point x/(1-x): products over backward orbits of the
full standard map give correction factors (G, g), a closed form gives the
dominant factor (H, h), and their combination rho predicts the movement.
Separately: finite-difference Jacobians of the operator are compared
against closed-form derivative matrices, invariant-cone constants are
derived from block norms, and an l1 expansion bound from cross-polytope
geometry is provided.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels as K
from .errors import ComputationError, DomainError, NoRootError, NotRenormalizableError
from .renorm import renorm_vector_at_roots, renormalize, renormalize_pure

G_SERIES_TOL = 1e-14
G_SERIES_CAP = 2048


def relc(c):
    """Relative critical point tau(c) = c/(1-c)."""
    return c / (1.0 - c)


def relc_inv(x):
    return x / (1.0 + x)


def c_infinity(alpha, beta, tol=1e-14):
    """The critical point fixed asymptotically by (a,b) renormalizations
    with a/b = beta: unique root of x/alpha = ((1-x)/alpha)**beta."""
    if alpha <= 1.0 or beta <= 0.0:
        raise DomainError("need alpha > 1 and beta > 0")

    def F(x):
        return x / alpha - ((1.0 - x) / alpha) ** beta

    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        m = 0.5 * (lo + hi)
        if F(m) < 0.0:
            lo = m
        else:
            hi = m
    return 0.5 * (lo + hi)


def backward_orbit_full(c, alpha, n):
    """Backward orbit of c under the left branch of the full standard map
    with critical point c: hat_c_0 = c, (1 - hat_c_{k+1}/c)^alpha = 1 - hat_c_k.
    Strictly decreasing, geometric rate c/alpha."""
    if not 0.0 < c < 1.0:
        raise DomainError("c must lie in (0,1)")
    out = np.empty(n + 1)
    out[0] = c
    y = c
    for k in range(n):
        y = c * -math.expm1(math.log1p(-y) / alpha)
        out[k + 1] = y
    return out


def log_G_minus(c, alpha, tol=G_SERIES_TOL):
    """log of the limit derivative-ratio product along the left backward
    orbit; the series is truncated when increments fall below tol."""
    total = 0.0
    y = c
    for _ in range(G_SERIES_CAP):
        term = (alpha - 1.0) / alpha * math.log1p(-y)
        total += term
        if abs(term) < tol:
            return total
        y = c * -math.expm1(math.log1p(-y) / alpha)
    raise ComputationError("series for log G did not converge")


def G_minus(c, alpha, tol=G_SERIES_TOL):
    return math.exp(log_G_minus(c, alpha, tol))


def G_plus(c, alpha, tol=G_SERIES_TOL):
    # mirror symmetry: the right-branch product at c is the left one at 1-c
    return math.exp(log_G_minus(1.0 - c, alpha, tol))


def H_factor(c, alpha, beta):
    """Per-step derivative ratio of the full one-sided powers,
    (D qhat^b(0) / D qhat^a(1))^(1/b) = alpha^(1-beta) (1-c)^beta / c."""
    return alpha ** (1.0 - beta) * (1.0 - c) ** beta / c


@dataclass(frozen=True)
class GFunctions:
    """Critical-movement factors at fixed (alpha, beta).

    g and h act on the relative critical point x = c/(1-c); rho(b) returns
    the movement predictor x -> x g(x) h(x)^b.
    """

    alpha: float
    beta: float

    def g(self, x):
        c = relc_inv(x)
        return math.exp(
            (log_G_minus(c, self.alpha) - log_G_minus(1.0 - c, self.alpha)) / self.alpha
        )

    def h(self, x):
        return ((self.alpha * (1.0 + x)) ** (1.0 - self.beta) / x) ** (1.0 / self.alpha)

    def rho(self, b):
        def _rho(x):
            return x * self.g(x) * self.h(x) ** b

        return _rho


def G_functions(c, alpha, beta, tol=G_SERIES_TOL):
    """Values (G_minus, G_plus, H) at c plus the (g, h, rho) callables."""
    gf = GFunctions(alpha, beta)
    return (
        G_minus(c, alpha, tol),
        G_plus(c, alpha, tol),
        gf.g,
        gf.h,
        H_factor(c, alpha, beta),
        gf.rho,
    )


@dataclass(frozen=True)
class CriticalAnalytics:
    alpha: float
    beta: float
    relc: float
    relv: float
    c_infty: float
    kappa_bounds: tuple


def critical_analytics(f, beta):
    cvl, cvr = f.critical_values()
    delta = f.distortion()
    return CriticalAnalytics(
        f.alpha,
        beta,
        relc(f.c),
        cvl / (1.0 - cvr),
        c_infinity(f.alpha, beta),
        (math.exp(-2.0 * delta), math.exp(2.0 * delta)),
    )


@dataclass(frozen=True)
class RelcPrediction:
    predicted: float
    actual: float
    ratio: float
    kappa_measured: float
    kappa_bounds: tuple


def predict_relc(f, rd=None):
    """Movement of the relative critical point under one renormalization:
    predicted x' = x g(x) h(x)^b versus the actual value; the leftover
    multiplicative factor is reported against the distortion bracket."""
    if rd is None:
        _, rd = renormalize(f)
    beta = rd.a / rd.b
    gf = GFunctions(f.alpha, beta)
    x = relc(f.c)
    predicted = gf.rho(rd.b)(x)
    actual = relc(rd.cprime)
    delta = f.distortion()
    return RelcPrediction(
        predicted,
        actual,
        actual / predicted,
        actual / predicted,
        (math.exp(-2.0 * delta), math.exp(2.0 * delta)),
    )


def flipping_threshold(alpha, a, t=0.99):
    """Lower bound on b making the critical point flip sides under
    renormalization when c is small: (1/t)(2 alpha/(1 - alpha^-a) - 1)."""
    if not 0.0 < t < 1.0:
        raise DomainError("t must lie in (0,1)")
    if a < 1:
        raise DomainError("a must be >= 1")
    return (2.0 * alpha / -math.expm1(-a * math.log(alpha)) - 1.0) / t


def _bisect(fun, lo, hi, tol=1e-14):
    flo = fun(lo)
    fhi = fun(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo < 0.0) == (fhi < 0.0):
        raise NoRootError(f"no sign change on [{lo}, {hi}]")
    while hi - lo > tol:
        m = 0.5 * (lo + hi)
        fm = fun(m)
        if fm == 0.0:
            return m
        if (fm < 0.0) == (flo < 0.0):
            lo, flo = m, fm
        else:
            hi = m
    return 0.5 * (lo + hi)


def delta_b_interval(alpha, beta, b, l, r, eps):
    """Self-returning window of critical points for (beta*b, b) types.

    In relative coordinates, rho maps J_eps = tau((l+eps, r-eps)) over
    J = tau([l,r]) decreasingly; the window is rho^-1(J) cut to J_eps,
    pulled back to (0,1).  Also returns p_b, the fixed point of the
    predicted critical movement tau^-1(rho(tau(x)))."""
    if not 0.0 < l + eps < r - eps < 1.0:
        raise DomainError("need 0 < l+eps < r-eps < 1")
    rho = GFunctions(alpha, beta).rho(b)
    jlo, jhi = relc(l), relc(r)
    elo, ehi = relc(l + eps), relc(r - eps)
    # rho decreases on J, so preimages swap endpoints
    xlo = _bisect(lambda x: rho(x) - jhi, elo, ehi)
    xhi = _bisect(lambda x: rho(x) - jlo, elo, ehi)
    if xhi < xlo:
        raise ComputationError("rho is not decreasing across the window")
    lo, hi = max(xlo, elo), min(xhi, ehi)
    p = _bisect(lambda x: rho(x) - x, jlo, jhi)
    return (relc_inv(lo), relc_inv(hi)), relc_inv(p)


# ---------------------------------------------------------------------------
# finite differences against the closed derivative formulas


@dataclass(frozen=True)
class JacobianReport:
    J: np.ndarray
    rd: object
    h_step: float
    n_params: int
    n_left: int
    n_right: int
    richardson_ratio: float = float("nan")

    @property
    def block_uvc(self):
        return self.J[:3, :3]


def _renorm_vector(pm, x, ab, depth_cap, hint, formal=False):
    cand = pm.from_vector(x)
    try:
        out, rd, _ = renormalize_pure(
            cand, ab=ab, depth_cap=depth_cap, hint=hint, formal=formal
        )
    except NotRenormalizableError as e:
        raise DomainError(f"domain boundary: {e}") from e
    return out.to_vector(), rd


def _implicit_parts(pm, ab, roots, depth_cap, h_step):
    """Pieces of the implicit derivative at prescribed boundary roots.

    Y(x, l, r) is the fixed-roots walk, W(x) the two boundary displacement
    values at the frozen roots.  Everything differenced here is smooth in
    every argument; the root-solving operator is not differentiable this
    way because the renormalizable slab can be thinner in the coefficient
    directions than any usable step (its boundary root folds away)."""
    a, b = ab
    l0, r0 = roots
    c0 = pm.c
    x0 = pm.to_vector()
    n = x0.size

    def Y(x, l, r):
        return renorm_vector_at_roots(pm.from_vector(x), ab, l, r, depth_cap)

    def W(x):
        cand = pm.from_vector(x)
        args = (
            cand.alpha, cand.u, cand.v, cand.c,
            cand.sbar_minus.values, cand.sbar_plus.values,
        )
        gl, dgl = K.displ_left(*args, a, l0)
        gr, dgr = K.displ_right(*args, b, r0)
        return np.array([gl, gr]), (dgl, dgr)

    _, (dgl, dgr) = W(x0)
    Yx = np.empty((n, n))
    Wx = np.empty((2, n))
    for i in range(n):
        step = h_step * (1.0 + abs(x0[i]))
        xp = x0.copy()
        xp[i] += step
        xm = x0.copy()
        xm[i] -= step
        Yx[:, i] = (Y(xp, l0, r0) - Y(xm, l0, r0)) / (2.0 * step)
        Wx[:, i] = (W(xp)[0] - W(xm)[0]) / (2.0 * step)
    hl = h_step * (c0 - l0)
    hr = h_step * (r0 - c0)
    Yl = (Y(x0, l0 + hl, r0) - Y(x0, l0 - hl, r0)) / (2.0 * hl)
    Yr = (Y(x0, l0, r0 + hr) - Y(x0, l0, r0 - hr)) / (2.0 * hr)
    return Yx, Yl, Yr, Wx, (dgl, dgr)


def implicit_jacobian(pm, ab, roots, h_step=1e-7, depth_cap=None):
    """Jacobian of the truncated operator via the implicit root response.

    dR = Y_x - [Y_l Y_r] diag(1/W_l, 1/W_r) W_x: the boundary roots respond
    to a coefficient perturbation through their own displacement equations,
    whose root-direction derivatives (the return multipliers minus one)
    stay away from zero even where the roots themselves are about to fold
    away.  This is the only stable derivative at fixed points with large
    return times."""
    if depth_cap is None:
        depth_cap = pm.sbar_minus.max_depth()
    Yx, Yl, Yr, Wx, (dgl, dgr) = _implicit_parts(pm, ab, roots, depth_cap, h_step)
    J = Yx - np.outer(Yl, Wx[0] / dgl) - np.outer(Yr, Wx[1] / dgr)
    _, rd0, _ = renormalize_pure(
        pm, ab=ab, depth_cap=depth_cap, hint=roots, formal=True
    )
    return JacobianReport(
        J, rd0, h_step, 3, len(pm.sbar_minus), len(pm.sbar_plus), float("nan")
    )


def fd_jacobian(pm, h_step=1e-6, ab=None, diagnose=False, hint=None):
    """Central-difference Jacobian of the renormalization operator in the
    truncated factored coordinates (u, v, c, left factors, right factors).

    Steps scale with coordinate size.  With diagnose=True two finer step
    sizes estimate the Richardson ratio (should be close to 4 for second
    order differences).  Near large return times the boundary roots hug c
    far below the detection grid resolution and the renormalizable slab is
    thinner than any usable step, so callers that already know the roots
    (fixed-point solvers) must pass hint=(l, r), which switches to the
    implicit-root derivative."""
    from .renorm import detect_return_times

    if ab is None:
        ab = detect_return_times(pm.to_lorenz_map())
    if hint is not None:
        return implicit_jacobian(pm, ab, hint, h_step=min(h_step, 1e-7))
    depth_cap = pm.sbar_minus.max_depth()
    x0 = pm.to_vector()
    _, rd0 = _renorm_vector(pm, x0, ab, depth_cap, None)
    hint = (rd0.l, rd0.r)
    n = len(x0)

    def column(i, h):
        step = h * (1.0 + abs(x0[i]))
        xp = x0.copy()
        xp[i] += step
        xm = x0.copy()
        xm[i] -= step
        fp, _ = _renorm_vector(pm, xp, ab, depth_cap, hint)
        fm, _ = _renorm_vector(pm, xm, ab, depth_cap, hint)
        return (fp - fm) / (2.0 * step)

    J = np.column_stack([column(i, h_step) for i in range(n)])
    ratio = float("nan")
    if diagnose:
        J2 = np.column_stack([column(i, h_step / 2.0) for i in range(n)])
        J4 = np.column_stack([column(i, h_step / 4.0) for i in range(n)])
        num = np.abs(J - J2)
        den = np.abs(J2 - J4)
        mask = den > 1e-13
        if np.any(mask):
            ratio = float(np.median(num[mask] / den[mask]))
    return JacobianReport(
        J, rd0, h_step, 3, len(pm.sbar_minus), len(pm.sbar_plus), ratio
    )


def dr2d_matrix(uprime, vprime, lam0, lam1):
    """Closed 2x2 derivative of (u', v') in (u, v), scaled by |U|, |V|."""
    return np.array(
        [
            [1.0 + (1.0 - uprime) / (lam0 - 1.0), -uprime / (lam1 - 1.0)],
            [-vprime / (lam0 - 1.0), 1.0 + (1.0 - vprime) / (lam1 - 1.0)],
        ]
    )


def dr2d_det_bound(alpha, cprime):
    return alpha * (alpha - 1.0) / ((alpha - cprime) * (alpha - 1.0 + cprime))


def dr3d_matrix(uprime, vprime, cprime, lam0, lam1):
    """Closed 3x3 envelope of the scaled derivative of (u',v',c')."""
    W = np.empty((3, 3))
    W[:2, :2] = dr2d_matrix(uprime, vprime, lam0, lam1)
    W[0, 2] = uprime * lam1 / (lam1 - 1.0) - (1.0 - uprime) * lam0 / (lam0 - 1.0)
    W[1, 2] = -vprime * lam0 / (lam0 - 1.0) + (1.0 - vprime) * lam1 / (lam1 - 1.0)
    W[2, 0] = (1.0 - cprime) / (lam0 - 1.0)
    W[2, 1] = -cprime / (lam1 - 1.0)
    W[2, 2] = 1.0 - cprime * lam1 / (lam1 - 1.0) - (1.0 - cprime) * lam0 / (lam0 - 1.0)
    return W


def dr3d_det_limit(alpha, cprime):
    """Large-(a,b) limit of det W."""
    return (
        -2.0
        * alpha
        * (2.0 * alpha - 1.0)
        * (alpha - 1.0)
        * cprime
        * (1.0 - cprime)
        / ((alpha - cprime) ** 2 * (alpha - 1.0 + cprime) ** 2)
    )


def _phi_big(args, a, x, c_override=None):
    """Diffeomorphism part of the left return word: a right-branch
    applications after the left factor chain."""
    alpha, u, v, c, sm, sp = args
    if c_override is not None:
        c = c_override
    y = K.chain_eval(sm, alpha, x)
    for _ in range(a):
        y = K.chain_eval(sp, alpha, K.q_eval(1, alpha, v, c, y))
    return y


def _psi_big(args, b, x, c_override=None):
    alpha, u, v, c, sm, sp = args
    if c_override is not None:
        c = c_override
    y = K.chain_eval(sp, alpha, x)
    for _ in range(b):
        y = K.chain_eval(sm, alpha, K.q_eval(0, alpha, u, c, y))
    return y


def _phi_big_inv(args, a, y):
    alpha, u, v, c, sm, sp = args
    x = K.backward_right(*args, y, a)
    return K.chain_inv(sm, alpha, x)


def _psi_big_inv(args, b, y):
    alpha, u, v, c, sm, sp = args
    x = K.backward_left(*args, y, b)
    return K.chain_inv(sp, alpha, x)


def estimate_AB(pm, rd, h_step=1e-7):
    """A = -d/dc of the left return diffeomorphism at the preimage of c,
    B the mirrored quantity; both by central differences in c alone."""
    args = (pm.alpha, pm.u, pm.v, pm.c, pm.sbar_minus.values, pm.sbar_plus.values)
    c = pm.c
    x_phi = _phi_big_inv(args, rd.a, c)
    x_psi = _psi_big_inv(args, rd.b, c)
    h = h_step * (1.0 + abs(c))
    A = -(_phi_big(args, rd.a, x_phi, c + h) - _phi_big(args, rd.a, x_phi, c - h)) / (
        2.0 * h
    )
    B = -(_psi_big(args, rd.b, x_psi, c + h) - _psi_big(args, rd.b, x_psi, c - h)) / (
        2.0 * h
    )
    return A, B


@dataclass(frozen=True)
class DR2DReport:
    scaled_fd: np.ndarray
    analytic: np.ndarray
    errors: np.ndarray
    det_scaled: float
    det_bound: float
    det_ok: bool


def _fd_uvc_block(pm, ab, h_step):
    """Central differences of (u',v',c') in (u,v,c) only."""
    depth_cap = pm.sbar_minus.max_depth()
    x0 = pm.to_vector()
    _, rd0 = _renorm_vector(pm, x0, ab, depth_cap, None)
    hint = (rd0.l, rd0.r)
    cols = []
    for i in range(3):
        step = h_step * (1.0 + abs(x0[i]))
        xp = x0.copy()
        xp[i] += step
        xm = x0.copy()
        xm[i] -= step
        fp, _ = _renorm_vector(pm, xp, ab, depth_cap, hint)
        fm, _ = _renorm_vector(pm, xm, ab, depth_cap, hint)
        cols.append((fp[:3] - fm[:3]) / (2.0 * step))
    return np.column_stack(cols), rd0


def check_dr2d(pm, ab=None, h_step=1e-6, det_slack=0.1):
    """Finite differences of (u',v') in (u,v), scaled by |U|, |V|, against
    the closed 2x2 matrix, plus the scaled determinant lower bound."""
    from .renorm import detect_return_times

    if ab is None:
        ab = detect_return_times(pm.to_lorenz_map())
    fd, rd = _fd_uvc_block(pm, ab, h_step)
    ulen, vlen = rd.U.length, rd.V.length
    scaled = np.array(
        [
            [ulen * fd[0, 0], vlen * fd[0, 1]],
            [ulen * fd[1, 0], vlen * fd[1, 1]],
        ]
    )
    analytic = dr2d_matrix(rd.uprime, rd.vprime, rd.lam0, rd.lam1)
    det_scaled = float(np.linalg.det(scaled))
    bound = dr2d_det_bound(pm.alpha, rd.cprime)
    return DR2DReport(
        scaled,
        analytic,
        np.abs(scaled - analytic),
        det_scaled,
        bound,
        det_scaled > bound - det_slack,
    )


@dataclass(frozen=True)
class DR3DReport:
    scaled_fd: np.ndarray
    analytic: np.ndarray
    errors: np.ndarray
    A: float
    B: float
    W: np.ndarray
    det_W: float
    det_limit: float


def check_dr3d(pm, ab=None, h_step=1e-6):
    """Scaled finite differences of (u',v',c') in (u,v,c) against the
    closed columns (w0, w1, w2 - A w0 + B w1)."""
    from .renorm import detect_return_times

    if ab is None:
        ab = detect_return_times(pm.to_lorenz_map())
    fd, rd = _fd_uvc_block(pm, ab, h_step)
    W = dr3d_matrix(rd.uprime, rd.vprime, rd.cprime, rd.lam0, rd.lam1)
    A, B = estimate_AB(pm, rd)
    scaled = np.column_stack(
        [
            rd.U.length * fd[:, 0],
            rd.V.length * fd[:, 1],
            rd.C.length * fd[:, 2],
        ]
    )
    analytic = np.column_stack(
        [W[:, 0], W[:, 1], W[:, 2] - A * W[:, 0] + B * W[:, 1]]
    )
    return DR3DReport(
        scaled,
        analytic,
        np.abs(scaled - analytic),
        A,
        B,
        W,
        float(np.linalg.det(W)),
        dr3d_det_limit(pm.alpha, rd.cprime),
    )


# ---------------------------------------------------------------------------
# invariant cones


@dataclass(frozen=True)
class ConeParams:
    mu: float
    nu: float
    lam: float
    tau: float
    theta0: float
    theta1: float
    theta2: float
    theta3: float
    cone_condition: bool
    expansion_condition: bool

    @property
    def verdict(self):
        return self.cone_condition and self.expansion_condition

    def theta_prime(self, theta):
        return (self.lam + (1.0 - self.tau) * theta) / (1.0 - self.nu * theta)

    def expansion(self, theta):
        return self.mu * (1.0 - self.nu * theta) / (1.0 + theta)


def cone_analysis(mu, nu, lam, tau):
    """Invariant-cone angles and verdicts from the four block bounds:
    expansion at least mu in the distinguished directions, the other blocks
    controlled by nu, lam, 1 - tau relative to it."""
    if mu <= 0.0 or not 0.0 < tau <= 1.0 or nu < 0.0 or lam < 0.0:
        raise DomainError("need mu > 0, tau in (0,1], nu, lam >= 0")
    theta0 = 2.0 * lam / tau
    theta1 = tau / nu - 2.0 * lam / tau if nu > 0.0 else math.inf
    theta2 = (mu - 1.0) / (mu * nu + 1.0)
    theta3 = tau / (2.0 * nu) if nu > 0.0 else math.inf
    cone_ok = 2.0 * math.sqrt(nu * lam) < tau
    exp_ok = tau - 2.0 * lam * nu > 0.0 and mu > (tau + 2.0 * lam) / (
        tau - 2.0 * lam * nu
    )
    return ConeParams(mu, nu, lam, tau, theta0, theta1, theta2, theta3, cone_ok, exp_ok)


def opnorm_l1(M):
    """Operator norm with respect to the l1 vector norm: max column sum."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return 0.0
    return float(np.max(np.sum(np.abs(M), axis=0)))


def cone_params_from_blocks(Dxxi, Dyxi, Dxeta, Dyeta):
    """Extract (mu, nu, lam, tau) in the l1 norm from the four derivative
    blocks at a fixed point: mu is the exact minimum l1 expansion of the
    distinguished square block, the rest are measured relative to it."""
    Dxxi = np.atleast_2d(np.asarray(Dxxi, dtype=float))
    mu = 1.0 / opnorm_l1(np.linalg.inv(Dxxi))
    nu = opnorm_l1(Dyxi) / mu
    lam = opnorm_l1(Dxeta) / mu
    tau = 1.0 - opnorm_l1(Dyeta) / mu
    return mu, nu, lam, tau


# ---------------------------------------------------------------------------
# l1 expansion bound


def l1_expansion_bound(M, n=None):
    """Lower bound for min |Mx|_1 / |x|_1 from cross-polytope geometry:
    (1/n!) |det M| divided by the largest face measure of the image of the
    unit ball's boundary."""
    M = np.asarray(M, dtype=float)
    if n is None:
        n = M.shape[0]
    if M.shape != (n, n) or n not in (2, 3):
        raise DomainError("need a square matrix with n in {2, 3}")
    det = float(np.linalg.det(M))
    if abs(det) < 1e-300:
        raise DomainError("matrix is singular")
    cols = [M[:, i] for i in range(n)]
    if n == 2:
        A = max(
            float(np.linalg.norm(cols[0] + cols[1])),
            float(np.linalg.norm(cols[0] - cols[1])),
        )
        V = 0.5
    else:
        A = 0.0
        for s1 in (1.0, -1.0):
            for s2 in (1.0, -1.0):
                for s3 in (1.0, -1.0):
                    p0, p1, p2 = s1 * cols[0], s2 * cols[1], s3 * cols[2]
                    area = 0.5 * float(np.linalg.norm(np.cross(p1 - p0, p2 - p0)))
                    A = max(A, area)
        V = 1.0 / 6.0
    return V * abs(det) / A
