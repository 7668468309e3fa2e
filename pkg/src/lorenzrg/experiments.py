"""Numerical experiments around the renormalization operator.

Fixed points by damped Newton in truncated factored coordinates, spectra of
finite-difference Jacobians, parameter-plane scans with vertex location,
degeneration runs, attractor covers with dimension estimates, and local
unstable-manifold diagnostics.
"""

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from scipy.linalg import lu_factor, lu_solve

from . import kernels as K
from .analysis import c_infinity, fd_jacobian
from .core import LorenzMap
from .decomposition import PureLorenzMap, PureStructure, generate_time_set
from .errors import (
    ComputationError,
    DomainError,
    LorenzError,
    NoRootError,
    NotRenormalizableError,
)
from .renorm import (
    _return_interval_args,
    detect_return_times,
    renormalize,
    renormalize_pure,
    renorm_vector_at_roots,
)

RESIDUAL_TOL = 1e-9
MAX_NEWTON_ITER = 50
MAX_HALVINGS = 8
UNSTABLE_MARGIN = 1e-3
DENSE_EIG_MAX = 2500


def default_threads():
    env = os.environ.get("LORENZRG_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def residual_norm(d):
    """Euclidean norm on the (u, v, c) block plus l1 norm on the factors."""
    d = np.asarray(d, dtype=float)
    return float(np.sqrt(np.sum(d[:3] ** 2)) + np.sum(np.abs(d[3:])))


# ---------------------------------------------------------------------------
# fixed points


@dataclass(frozen=True)
class FixedPointResult:
    pf_star: PureLorenzMap
    ab: tuple
    residual: float
    iterations: int
    depth: int
    eigenvalues: np.ndarray
    unstable_count: int
    trace: tuple = ()
    jacobian: np.ndarray = field(default=None, repr=False)
    eigenvectors: np.ndarray = field(default=None, repr=False)
    roots: tuple = ()


def _formal_map(template, ab, depth_cap, state):
    def F(x):
        pm = template.from_vector(x)
        out, rd, _ = renormalize_pure(
            pm, ab=ab, depth_cap=depth_cap, hint=state.get("hint"), formal=True
        )
        state["hint"] = (rd.l, rd.r)
        return out.to_vector() - x

    return F


def island_point(alpha, a, b, c=None):
    """A standard-family parameter (u, v) that is (a, b)-renormalizable.

    The renormalization window has the trivial vertex on its corner, so
    walking the segment from there toward the full corner (1,1) enters it
    immediately; geometric probing catches windows whose relative width
    shrinks super-exponentially with a and b.  Returns the midpoint of the
    renormalizable stretch along the segment."""
    if c is None:
        c = c_infinity(alpha, a / b)
    ut, vt = trivial_vertex(alpha, c, a, b)

    def at(s):
        return ut + s * (1.0 - ut), vt + s * (1.0 - vt)

    def hit(s):
        u, v = at(s)
        if not (0.0 < u <= 1.0 and 0.0 < v <= 1.0):
            return False
        try:
            return detect_return_times(LorenzMap.standard(alpha, u, v, c)) == (a, b)
        except LorenzError:
            return False

    s_star = None
    for j in range(2, 64):
        s = 2.0**-j
        if hit(s):
            s_star = s
            break
    if s_star is None:
        raise NoRootError(
            f"no ({a},{b})-renormalizable point found near the trivial vertex at c={c}"
        )
    lo_edge = 0.0 if hit(0.0) else _bisect_bool(hit, s_star, 0.0)
    hi_edge = 1.0 if hit(1.0) else _bisect_bool(hit, s_star, 1.0)
    return at(0.5 * (lo_edge + hi_edge))


def _bisect_bool(pred, s_true, s_false, iters=60):
    """Edge of {pred} between a holding and a failing parameter."""
    for _ in range(iters):
        m = 0.5 * (s_true + s_false)
        if pred(m):
            s_true = m
        else:
            s_false = m
    return s_true


def default_init(alpha, a, b, depth):
    return PureLorenzMap.standard(
        alpha, 1.0 - 1e-3, 1.0 - 1e-3, c_infinity(alpha, a / b), a, b, depth_cap=depth - 1
    )


def _depth_cap_of(pm):
    return max(len(t.path) for t in pm.sbar_minus.addresses) - 1


def _seed_roots(pm, ab):
    args = (pm.alpha, pm.u, pm.v, pm.c, pm.sbar_minus.values, pm.sbar_plus.values)
    l, r, _ = _return_interval_args(args, ab[0], ab[1], formal=True)
    return l, r


def _branch_eval(args, side, x):
    alpha, u, v, c, sm, sp = args
    if side == 0:
        return K.chain_eval(sm, alpha, K.q_eval(0, alpha, u, c, x))
    return K.chain_eval(sp, alpha, K.q_eval(1, alpha, v, c, x))


def _shooting_system(template, ab, depth_cap):
    """Fixed-point residual with the periodic boundary orbits adjoined.

    z = [u, v, c, factors, left orbit (l and its a successors), right
    orbit (r and its b successors)].  Eliminating the boundary points by
    an inner root solve loses differentiability where the root folds
    away, and bordering with whole-word displacement equations puts the
    squared word multiplier into the Jacobian and its curvature; with one
    branch application per equation everything stays of the order of the
    local multiplier.  The factor walk itself pulls back from [l, r] and
    is contracting, hence tame.
    """
    a, b = ab

    def G(z):
        x = z[: -(a + b + 2)]
        P = z[-(a + b + 2):]
        l, p = P[0], P[1 : a + 1]
        r, s = P[a + 1], P[a + 2 :]
        pm = template.from_vector(x)
        args = (pm.alpha, pm.u, pm.v, pm.c, pm.sbar_minus.values, pm.sbar_plus.values)
        y = renorm_vector_at_roots(pm, ab, l, r, depth_cap)
        eqs = np.empty(a + b + 2)
        prev = _branch_eval(args, 0, l)
        for j in range(a):
            eqs[j] = p[j] - prev
            prev = _branch_eval(args, 1, p[j])
        eqs[a] = l - prev
        prev = _branch_eval(args, 1, r)
        for j in range(b):
            eqs[a + 1 + j] = s[j] - prev
            prev = _branch_eval(args, 0, s[j])
        eqs[a + b + 1] = r - prev
        return np.concatenate([y - x, eqs])

    return G


def _seed_orbit(pm, ab, roots):
    """Boundary orbit block [l, f(l)..., r, f(r)...] from the two roots."""
    a, b = ab
    args = (pm.alpha, pm.u, pm.v, pm.c, pm.sbar_minus.values, pm.sbar_plus.values)
    P = np.empty(a + b + 2)
    P[0] = roots[0]
    x = _branch_eval(args, 0, roots[0])
    for j in range(a):
        P[1 + j] = x
        x = _branch_eval(args, 1, x)
    P[a + 1] = roots[1]
    x = _branch_eval(args, 1, roots[1])
    for j in range(b):
        P[a + 2 + j] = x
        x = _branch_eval(args, 0, x)
    return P


def _asymmetry(pm, P, a):
    """Distance from the mirror-symmetric subspace."""
    return (
        abs(pm.u - pm.v)
        + abs(pm.c - 0.5)
        + float(np.max(np.abs(pm.sbar_minus.values + pm.sbar_plus.values), initial=0.0))
        + abs(P[0] + P[a + 1] - 1.0)
    )


def _symmetric_reduction(template, ab, depth_cap):
    """The shooting system restricted to mirror-symmetric maps (a = b).

    Renormalization commutes with x -> 1 - x, so the a = b fixed point is
    symmetric; full-space Newton from a symmetric seed can drift into an
    asymmetric least-squares fold instead, while the reduced system is
    regular.  Unknowns [u, left factors, l, left orbit]; the retained
    equations are the left halves, the mirrored ones hold identically.
    """
    a, _ = ab
    nl = len(template.sbar_minus)
    n = 3 + nl + len(template.sbar_plus)
    G = _shooting_system(template, ab, depth_cap)
    rows = np.r_[0, 3 : 3 + nl, n : n + a + 1]

    def embed(w):
        u = w[0]
        sm = w[1 : 1 + nl]
        x = np.concatenate([[u, u, 0.5], sm, -sm])
        l, p = w[1 + nl], w[2 + nl :]
        P = np.concatenate([[l], p, [1.0 - l], 1.0 - p])
        return np.concatenate([x, P])

    def pack(pm, P):
        u = 0.5 * (pm.u + pm.v)
        sm = 0.5 * (pm.sbar_minus.values - pm.sbar_plus.values)
        l = 0.5 * (P[0] + 1.0 - P[a + 1])
        p = 0.5 * (P[1 : a + 1] + 1.0 - P[a + 2 :])
        return np.concatenate([[u], sm, [l], p])

    def Gred(w):
        return G(embed(w))[rows]

    return Gred, embed, pack


def _augmented_norm(d):
    return residual_norm(d)


def _newton_stage(G, z, tol, max_iter, h_step, strict=True):
    """Damped Newton with column equilibration and chord reuse.

    The LU factorization is kept across iterations while full steps keep
    cutting the residual at least in half; a stale factorization that
    fails the line search triggers a rebuild, a fresh one that fails is a
    genuine stall.  With strict=False a stall or iteration cap returns the
    best point instead of raising: truncated systems at intermediate
    continuation depths can have a positive residual floor, and their job
    is only to warm-start the next stage.
    """
    Gz = np.asarray(G(z), dtype=float)
    res = _augmented_norm(Gz)
    trace = [(0, res, 0.0)]
    n = z.size
    lu = None
    scale = None
    fresh = False
    it = 0
    while res > tol:
        if it >= max_iter:
            if not strict:
                return z, res, it, trace
            raise ComputationError(
                f"no convergence in {max_iter} iterations (residual {res:.3e}); "
                f"trace: {trace}"
            )
        if lu is None:
            J = np.empty((n, n))
            for i in range(n):
                step = h_step * (1.0 + abs(z[i]))
                zp = z.copy()
                zp[i] += step
                try:
                    J[:, i] = (G(zp) - Gz) / step
                except LorenzError:
                    zp[i] = z[i] - step
                    J[:, i] = (Gz - G(zp)) / step
            scale = np.abs(J).max(axis=0)
            scale[scale == 0.0] = 1.0
            lu = lu_factor(J / scale)
            fresh = True
        dz = lu_solve(lu, -Gz) / scale
        if not np.all(np.isfinite(dz)):
            raise ComputationError("singular Newton system")
        t = 1.0
        accepted = False
        for _ in range(MAX_HALVINGS + 1):
            try:
                Gn = np.asarray(G(z + t * dz), dtype=float)
                rn = _augmented_norm(Gn)
            except LorenzError:
                t *= 0.5
                continue
            if rn < res:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            if fresh:
                if not strict:
                    return z, res, it, trace
                raise ComputationError(
                    f"Newton stalled at residual {res:.3e}; trace: {trace}"
                )
            lu = None
            continue
        ratio = rn / res
        z = z + t * dz
        Gz, res = Gn, rn
        it += 1
        trace.append((it, res, t))
        if t < 1.0 or ratio > 0.5:
            lu = None
        fresh = False
    return z, res, it, trace


def newton_fixed_point(
    alpha,
    a,
    b,
    depth,
    init=None,
    tol=RESIDUAL_TOL,
    max_iter=MAX_NEWTON_ITER,
    h_step=1e-7,
    spectrum=True,
):
    """Fixed point of the (a, b) renormalization in truncated coordinates.

    Damped Newton on the bordered system that carries the two periodic
    boundary points as unknowns next to (u, v, c, factors).  Depth
    continuation solves the shallowest truncation first and re-expands one
    level at a time (new factors zero), warm-starting each stage.  If the
    default initial point admits no boundary roots at all (the return
    words need nontrivial factors to be defined), a standard-family point
    inside the (a, b) window seeds the iteration instead.
    """
    if depth < 1:
        raise DomainError("depth must be >= 1")
    if a < 1 or b < 1:
        raise DomainError("need return times a, b >= 1")
    if init is not None:
        pm = init
        start_cap = _depth_cap_of(pm)
        if start_cap > depth - 1:
            raise DomainError("initial map is deeper than the requested depth")
        roots = _seed_roots(pm, (a, b))
    else:
        start_cap = 0
        pm = default_init(alpha, a, b, 1)
        try:
            roots = _seed_roots(pm, (a, b))
        except LorenzError:
            u0, v0 = island_point(alpha, a, b)
            pm = PureLorenzMap.standard(
                alpha, u0, v0, c_infinity(alpha, a / b), a, b, depth_cap=0
            )
            roots = _seed_roots(pm, (a, b))
    iterations = 0
    trace = []
    extra = a + b + 2
    P = _seed_orbit(pm, (a, b), roots)
    symmetric = a == b and _asymmetry(pm, P, a) < 1e-6
    # stages run below the requested tolerance so that the full-system
    # residual (mirrored equations, fresh evaluation) still lands under it
    stage_tol = 0.25 * tol
    for cap in range(start_cap, depth):
        strict = cap == depth - 1
        if symmetric:
            Gred, embed, pack = _symmetric_reduction(pm, (a, b), cap)
            w = pack(pm, P)
            w, _, its, tr = _newton_stage(Gred, w, stage_tol, max_iter, h_step, strict)
            z = embed(w)
        else:
            G = _shooting_system(pm, (a, b), cap)
            z = np.concatenate([pm.to_vector(), P])
            z, _, its, tr = _newton_stage(G, z, stage_tol, max_iter, h_step, strict)
        iterations += its
        trace.extend((cap,) + t for t in tr)
        pm = pm.from_vector(z[:-extra])
        P = z[-extra:]
        if cap < depth - 1:
            pm = extend_pure(pm, a, b, cap + 1)
    pf_star = pm
    res = residual_norm(_shooting_system(pm, (a, b), depth - 1)(
        np.concatenate([pm.to_vector(), P])
    ))
    if res > tol:
        raise ComputationError(
            f"full-system residual {res:.3e} exceeds the tolerance after convergence"
        )
    roots_pair = (float(P[0]), float(P[a + 1]))
    eigenvalues = np.zeros(0, dtype=complex)
    vectors = None
    jac = None
    count = 0
    if spectrum:
        rep = fd_jacobian(pf_star, ab=(a, b), hint=roots_pair)
        jac = rep.J
        eigenvalues, vectors = np.linalg.eig(jac)
        order = np.argsort(-np.abs(eigenvalues))
        eigenvalues = eigenvalues[order]
        vectors = vectors[:, order]
        count = int(np.sum(np.abs(eigenvalues) > 1.0 + UNSTABLE_MARGIN))
    return FixedPointResult(
        pf_star,
        (a, b),
        res,
        iterations,
        depth,
        eigenvalues,
        count,
        tuple(trace),
        jac,
        vectors,
        roots_pair,
    )


def extend_pure(pm, a, b, depth_cap):
    """The same map on the deeper time sets, new factors zero."""
    tl, tr = generate_time_set(a, b, depth_cap)
    have_l = set(pm.sbar_minus.addresses)
    have_r = set(pm.sbar_plus.addresses)
    sl = np.array([pm.sbar_minus.value_at(t) if t in have_l else 0.0 for t in tl])
    sr = np.array([pm.sbar_plus.value_at(t) if t in have_r else 0.0 for t in tr])
    return PureLorenzMap(
        pm.alpha,
        pm.u,
        pm.v,
        pm.c,
        PureStructure(pm.sbar_minus.side, pm.alpha, tl, sl),
        PureStructure(pm.sbar_plus.side, pm.alpha, tr, sr),
    )


@dataclass(frozen=True)
class EigenReport:
    eigenvalues: np.ndarray
    unstable_count: int
    depth: int
    dim: int
    method: str
    uv_mass: np.ndarray

    @property
    def spectrum(self):
        return self.eigenvalues


def _uv_mass(vectors, count):
    """Fraction of l1 mass carried by the (u, v) coordinates for the
    leading eigenvectors."""
    out = []
    for i in range(min(count, vectors.shape[1])):
        w = np.abs(vectors[:, i])
        out.append(float((w[0] + w[1]) / np.sum(w)))
    return np.array(out)


def eigen_spectrum(fp, depth=None, k=16, h_step=1e-6):
    """Spectrum of the truncated Jacobian at a fixed point.

    With the native depth the stored dense Jacobian is used.  A different
    depth re-expands the fixed point on the deeper time sets (new factors
    zero) and uses dense differences when small enough, otherwise an
    Arnoldi iteration on finite-difference directional derivatives.
    """
    a, b = fp.ab
    hint = tuple(fp.roots) or None
    if depth is None or depth == fp.depth:
        if fp.jacobian is None:
            rep = fd_jacobian(fp.pf_star, ab=fp.ab, hint=hint)
            eigenvalues, vectors = np.linalg.eig(rep.J)
        else:
            eigenvalues, vectors = fp.eigenvalues, fp.eigenvectors
            if vectors is None:
                eigenvalues, vectors = np.linalg.eig(fp.jacobian)
        order = np.argsort(-np.abs(eigenvalues))
        eigenvalues = np.asarray(eigenvalues)[order]
        vectors = vectors[:, order]
        count = int(np.sum(np.abs(eigenvalues) > 1.0 + UNSTABLE_MARGIN))
        return EigenReport(
            eigenvalues, count, fp.depth, len(fp.pf_star.to_vector()), "dense",
            _uv_mass(vectors, max(count, 1)),
        )
    pm = extend_pure(fp.pf_star, a, b, depth - 1)
    x0 = pm.to_vector()
    n = len(x0)
    if n <= DENSE_EIG_MAX:
        rep = fd_jacobian(pm, ab=fp.ab, hint=hint)
        eigenvalues, vectors = np.linalg.eig(rep.J)
        order = np.argsort(-np.abs(eigenvalues))
        eigenvalues = eigenvalues[order]
        vectors = vectors[:, order]
        count = int(np.sum(np.abs(eigenvalues) > 1.0 + UNSTABLE_MARGIN))
        return EigenReport(
            eigenvalues, count, depth, n, "dense", _uv_mass(vectors, max(count, 1))
        )
    from scipy.sparse.linalg import LinearOperator, eigs

    # directional implicit derivative: the fixed-roots walk and the two
    # boundary displacements are smooth in every argument, while stepping
    # the root-solving operator along unstable directions exits the
    # renormalizable slab (the boundary roots fold away)
    l0, r0 = hint
    cap = depth - 1

    def Y(x, l, r):
        return renorm_vector_at_roots(pm.from_vector(x), fp.ab, l, r, cap)

    def W(x):
        cand = pm.from_vector(x)
        cargs = (
            cand.alpha, cand.u, cand.v, cand.c,
            cand.sbar_minus.values, cand.sbar_plus.values,
        )
        gl, dgl = K.displ_left(*cargs, a, l0)
        gr, dgr = K.displ_right(*cargs, b, r0)
        return np.array([gl, gr]), (dgl, dgr)

    _, (dgl, dgr) = W(x0)
    hl = h_step * (pm.c - l0)
    hr = h_step * (r0 - pm.c)
    Yl = (Y(x0, l0 + hl, r0) - Y(x0, l0 - hl, r0)) / (2.0 * hl)
    Yr = (Y(x0, l0, r0 + hr) - Y(x0, l0, r0 - hr)) / (2.0 * hr)

    def matvec(w):
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return np.zeros(n)
        step = h_step / nw
        xp = x0 + step * w
        xm = x0 - step * w
        dY = (Y(xp, l0, r0) - Y(xm, l0, r0)) / (2.0 * step)
        dW = (W(xp)[0] - W(xm)[0]) / (2.0 * step)
        return dY - Yl * (dW[0] / dgl) - Yr * (dW[1] / dgr)

    op = LinearOperator((n, n), matvec=matvec, dtype=float)
    kk = min(k, n - 2)
    v0 = np.ones(n) / math.sqrt(n)
    # the unstable part is separated from the rest by orders of magnitude;
    # machine-tolerance Arnoldi would waste hundreds of walk evaluations
    eigenvalues, vectors = eigs(op, k=kk, which="LM", v0=v0, tol=1e-9)
    order = np.argsort(-np.abs(eigenvalues))
    eigenvalues = eigenvalues[order]
    vectors = vectors[:, order]
    count = int(np.sum(np.abs(eigenvalues) > 1.0 + UNSTABLE_MARGIN))
    return EigenReport(
        eigenvalues, count, depth, n, "arnoldi", _uv_mass(vectors, max(count, 1))
    )


# ---------------------------------------------------------------------------
# parameter-plane scans and vertices


def trivial_vertex(alpha, c, a, b, tol=1e-13):
    """The (u, v) where both renormalized branches are trivial: the a-fold
    preimage of c under the right branch equals the left critical value u,
    and the b-fold preimage under the left branch equals 1 - v."""

    def sigma_l(v):
        y = c
        for _ in range(a):
            y = K.q_inv(1, alpha, v, c, y)
            if y != y:
                return math.nan
        return y

    def sigma_r(u):
        y = c
        for _ in range(b):
            y = K.q_inv(0, alpha, u, c, y)
            if y != y:
                return math.nan
        return 1.0 - y

    def F(u):
        return u - sigma_l(sigma_r(u))

    lo, hi = None, None
    prev_u, prev_f = None, None
    for u in np.linspace(c + 1e-9 * (1 - c), 1.0 - 1e-12, 257)[1:]:
        fu = F(u)
        if fu != fu:
            prev_u, prev_f = None, None
            continue
        if prev_f is not None and (fu < 0.0) != (prev_f < 0.0):
            lo, hi = prev_u, u
            break
        prev_u, prev_f = u, fu
    if lo is None:
        raise NoRootError(f"no trivial vertex in ({c},1)x({1-c},1)")
    flo = F(lo)
    while hi - lo > tol:
        m = 0.5 * (lo + hi)
        fm = F(m)
        if fm == 0.0:
            lo = hi = m
            break
        if (fm < 0.0) == (flo < 0.0):
            lo, flo = m, fm
        else:
            hi = m
    u = 0.5 * (lo + hi)
    v = sigma_r(u)
    if not (c < u < 1.0 and 1.0 - c < v < 1.0):
        raise NoRootError("trivial vertex left the parameter square")
    return u, v


def _word_images(alpha, u, v, c, x_left, x_right, a, b):
    """(f^{a+1}(c-), f^{b+1}(c+)) for the standard map, seeded at the
    critical values."""
    y = x_left
    for _ in range(a):
        y = K.q_eval(1, alpha, v, c, y)
        if y != y:
            return math.nan, math.nan
    z = x_right
    for _ in range(b):
        z = K.q_eval(0, alpha, u, c, z)
        if z != z:
            return math.nan, math.nan
    return y, z


def full_vertex(alpha, c, a, b, tol=1e-11, max_iter=60):
    """The (u, v) where both renormalized branches are full: the critical
    orbits land exactly on the opposite boundary points of the return
    interval.  Newton continuation from inside the renormalization window,
    with the periodic boundary points tracked by warm-started root solves."""
    from .renorm import _newton_root, _return_interval_args

    u0, v0 = island_point(alpha, a, b, c)
    f = LorenzMap.standard(alpha, u0, v0, c)
    args0 = f.kernel_args()
    l, r, _ = _return_interval_args(args0, a, b)
    hint = [l, r]
    empty = np.zeros(0)

    def G(u, v):
        args = (alpha, u, v, c, empty, empty)
        l_ = _newton_root(lambda x: K.displ_left(*args, a, x), hint[0], 0.0, c)
        r_ = _newton_root(lambda x: K.displ_right(*args, b, x), hint[1], c, 1.0)
        if l_ is None or r_ is None:
            return None
        hint[0], hint[1] = l_, r_
        ya, zb = _word_images(alpha, u, v, c, u, 1.0 - v, a, b)
        if ya != ya or zb != zb:
            return None
        return np.array([ya - r_, zb - l_])

    x = np.array([u0, v0])
    gx = G(*x)
    if gx is None:
        raise ComputationError("full-vertex continuation lost the boundary roots")
    h = 1e-8
    for _ in range(max_iter):
        if np.max(np.abs(gx)) <= tol:
            break
        J = np.empty((2, 2))
        for i in range(2):
            xp = x.copy()
            xp[i] += h
            gp = G(*xp)
            xm = x.copy()
            xm[i] -= h
            gm = G(*xm)
            if gp is None or gm is None:
                raise ComputationError("full-vertex Newton left the root domain")
            J[:, i] = (gp - gm) / (2.0 * h)
        try:
            dx = np.linalg.solve(J, -gx)
        except np.linalg.LinAlgError as e:
            raise ComputationError("singular full-vertex system") from e
        t = 1.0
        accepted = False
        for _ in range(MAX_HALVINGS + 1):
            gn = G(*(x + t * dx))
            if gn is not None and np.max(np.abs(gn)) < np.max(np.abs(gx)):
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        x = x + t * dx
        gx = gn
    if np.max(np.abs(gx)) > 100 * tol:
        raise ComputationError(
            f"full vertex did not converge (residual {np.max(np.abs(gx)):.2e})"
        )
    return float(x[0]), float(x[1])


@dataclass(frozen=True)
class ScanCell:
    u: float
    v: float
    classification: str


@dataclass(frozen=True)
class ScanResult:
    alpha: float
    c: float
    ab: tuple
    grid_n: int
    us: np.ndarray
    vs: np.ndarray
    labels: list
    full_vertex: tuple
    trivial_vertex: tuple

    def cells(self):
        for j, v in enumerate(self.vs):
            for i, u in enumerate(self.us):
                yield ScanCell(float(u), float(v), self.labels[j][i])

    def counts(self):
        out = {}
        for row in self.labels:
            for lab in row:
                out[lab] = out.get(lab, 0) + 1
        return out


def _classify_point(task):
    alpha, u, v, c, max_iter = task
    if u <= c or v <= 1.0 - c:
        return "not-lorenz"
    f = LorenzMap.standard(alpha, u, v, c)
    cvl, cvr = f.critical_values()
    if cvl <= c or cvr >= c:
        return "not-lorenz"
    try:
        a, b = detect_return_times(f, max_iter=max_iter)
    except NotRenormalizableError as e:
        if e.reason == "full":
            return "full"
        if e.reason == "trivial":
            return "trivial-left" if "left" in e.detail else "trivial-right"
        return "non-renormalizable"
    except LorenzError:
        return "non-renormalizable"
    return f"({a},{b})"


def scan_uv(alpha, c, a, b, grid_n, threads=None, max_iter=64, vertices=True):
    """Classification of the standard-family square [c,1] x [1-c,1].

    Cell centers are classified by the detected return times (or the way
    detection fails); the full and trivial vertices of the (a, b) window
    are located separately by root solves.
    """
    if grid_n < 16:
        raise DomainError("grid_n must be >= 16")
    threads = default_threads() if threads is None else threads
    us = c + (np.arange(grid_n) + 0.5) / grid_n * (1.0 - c)
    vs = (1.0 - c) + (np.arange(grid_n) + 0.5) / grid_n * c
    tasks = [(alpha, float(u), float(v), c, max_iter) for v in vs for u in us]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            flat = list(ex.map(_classify_point, tasks, chunksize=max(1, len(tasks) // (8 * threads))))
    else:
        flat = [_classify_point(t) for t in tasks]
    labels = [flat[j * grid_n : (j + 1) * grid_n] for j in range(grid_n)]
    fv = tv = None
    if vertices:
        try:
            tv = trivial_vertex(alpha, c, a, b)
        except LorenzError:
            tv = None
        try:
            fv = full_vertex(alpha, c, a, b)
        except LorenzError:
            fv = None
    return ScanResult(alpha, c, (a, b), grid_n, us, vs, labels, fv, tv)


# ---------------------------------------------------------------------------
# degeneration


@dataclass(frozen=True)
class DegenerationStep:
    k: int
    ab: tuple
    c: float
    structure_norm: float
    distortion: float


@dataclass(frozen=True)
class DegenerationRun:
    steps: tuple
    stop_reason: str
    alternating_from: int

    @property
    def critical_points(self):
        return np.array([s.c for s in self.steps])

    def margins(self):
        cs = self.critical_points
        return np.minimum(cs, 1.0 - cs)

    def margin_ratios(self):
        m = self.margins()
        return m[1:] / m[:-1]


def degeneration_run(pf, iters, depth_cap=None, floor=1e-12, max_word=4096):
    """Successive renormalizations of pf, recording the critical point, the
    factor norm, and the map distortion.  Stops when renormalizability is
    lost, the critical point reaches the floor distance from {0, 1}, or
    after iters steps."""
    if depth_cap is None:
        depth_cap = pf.sbar_minus.max_depth()
    pm = pf
    steps = []
    k = 0
    ab = None
    try:
        ab = detect_return_times(pm.to_lorenz_map(), max_iter=max_word)
    except NotRenormalizableError as e:
        return DegenerationRun((), f"not renormalizable: {e.reason}", -1)
    steps.append(
        DegenerationStep(0, ab, pm.c, pm.norm(), pm.to_lorenz_map().distortion())
    )
    reason = "iters"
    while k < iters:
        try:
            pm, rd, _ = renormalize_pure(pm, ab=ab, depth_cap=depth_cap)
        except LorenzError as e:
            reason = f"lost: {getattr(e, 'reason', e)}"
            break
        k += 1
        try:
            ab = detect_return_times(pm.to_lorenz_map(), max_iter=max_word)
        except NotRenormalizableError:
            ab = None
        steps.append(
            DegenerationStep(k, ab, pm.c, pm.norm(), pm.to_lorenz_map().distortion())
        )
        if min(pm.c, 1.0 - pm.c) < floor:
            reason = "floor"
            break
        if ab is None:
            reason = "lost: no further return times"
            break
    cs = [s.c for s in steps]
    alternating_from = -1
    for start in range(len(cs) - 1):
        if all(
            (cs[j] - 0.5) * (cs[j + 1] - 0.5) < 0.0 for j in range(start, len(cs) - 1)
        ):
            alternating_from = start
            break
    return DegenerationRun(tuple(steps), reason, alternating_from)


# ---------------------------------------------------------------------------
# attractor covers


@dataclass(frozen=True)
class AttractorCover:
    levels: tuple  # per level: tuple of (lo, hi) pairs
    return_steps: tuple  # per level: (left steps, right steps)
    truncated_reason: str = ""

    @property
    def counts(self):
        return tuple(len(lv) for lv in self.levels)

    @property
    def lengths(self):
        return tuple(float(sum(hi - lo for lo, hi in lv)) for lv in self.levels)

    def nesting_violation(self):
        """Largest distance by which a level-n interval escapes every
        level-(n-1) interval (0 for exact containment)."""
        worst = 0.0
        for prev, cur in zip(self.levels, self.levels[1:]):
            for lo, hi in cur:
                best = math.inf
                for plo, phi in prev:
                    best = min(best, max(plo - lo, 0.0) + max(hi - phi, 0.0))
                worst = max(worst, best)
        return worst


def _iterate_piece(f, lo, hi, c, target, max_steps):
    """Forward interval orbit of a one-sided piece of the return interval
    until it returns; the pieces never straddle c in between, so endpoint
    iteration is exact."""
    out = [(lo, hi)]
    tl, tr = target
    eps = 1e-12
    for step in range(1, max_steps + 1):
        if lo < c < hi:
            raise ComputationError("cover piece straddles the critical point")
        if hi <= c:
            lo2 = f.left_branch(lo)
            hi2 = f.left_branch(hi)
        else:
            lo2 = f.right_branch(lo)
            hi2 = f.right_branch(hi)
        lo, hi = lo2, hi2
        if tl - eps <= lo and hi <= tr + eps:
            return out, step
        out.append((lo, hi))
    raise ComputationError(f"no return within {max_steps} steps")


def attractor_cover(f, n_levels, max_steps=10**6):
    """Nested covers of the critical omega-limit set.

    Level n is the forward cycle of the n-th return interval: the two
    closed halves of C_n and their images under the original map until
    first return.  Renormalization supplies C_n; the affine location of
    C_n inside the original coordinates is tracked through the nest.
    """
    levels = []
    steps = []
    reason = ""
    off, scale = 0.0, 1.0
    g = f
    for n in range(n_levels):
        try:
            g2, rd = renormalize(g)
        except LorenzError as e:
            reason = f"level {n}: {getattr(e, 'reason', e)}"
            break
        lo = off + scale * rd.l
        ro = off + scale * rd.r
        try:
            left_cycle, sl = _iterate_piece(f, lo, f.c, f.c, (lo, ro), max_steps)
            right_cycle, sr = _iterate_piece(f, f.c, ro, f.c, (lo, ro), max_steps)
        except ComputationError as e:
            reason = f"level {n}: {e}"
            break
        levels.append(tuple(left_cycle + right_cycle))
        steps.append((sl, sr))
        off, scale = off + scale * rd.l, scale * (rd.r - rd.l)
        g = g2
    return AttractorCover(tuple(levels), tuple(steps), reason)


def hausdorff_estimate(cover, tol=1e-10):
    """Per-level root of sum |I|^d = 1 over the cover intervals."""
    out = []
    for level in cover.levels:
        lengths = np.array([hi - lo for lo, hi in level], dtype=float)
        lengths = lengths[lengths > 0.0]
        if len(lengths) == 0:
            out.append(0.0)
            continue
        if float(np.sum(lengths)) >= 1.0:
            out.append(1.0)
            continue

        def pressure(d):
            return float(np.sum(lengths**d)) - 1.0

        lo, hi = 0.0, 1.0
        if pressure(0.0) <= 0.0:
            out.append(0.0)
            continue
        while hi - lo > tol:
            m = 0.5 * (lo + hi)
            if pressure(m) > 0.0:
                lo = m
            else:
                hi = m
        out.append(0.5 * (lo + hi))
    return np.array(out)


# ---------------------------------------------------------------------------
# unstable-manifold diagnostics


@dataclass(frozen=True)
class UnstableDirectionReport:
    backward_dists: tuple
    backward_ok: bool
    forward_exit_step: int


@dataclass(frozen=True)
class UnstableIterationReport:
    radius: float
    directions: tuple

    def contraction_ratios(self):
        out = []
        for d in self.directions:
            ds = d.backward_dists
            out.append(tuple(ds[i + 1] / ds[i] for i in range(len(ds) - 1)))
        return tuple(out)


def _real_unstable_basis(fp):
    lam = fp.eigenvalues
    vec = fp.eigenvectors
    if vec is None:
        raise DomainError("fixed point carries no eigenvector data")
    cols = []
    seen_conj = set()
    for i in range(len(lam)):
        if abs(lam[i]) <= 1.0 + UNSTABLE_MARGIN:
            continue
        if i in seen_conj:
            continue
        w = vec[:, i]
        if abs(lam[i].imag) > 1e-12:
            cols.append(np.real(w))
            cols.append(np.imag(w))
            for j in range(i + 1, len(lam)):
                if abs(lam[j] - np.conj(lam[i])) < 1e-10:
                    seen_conj.add(j)
                    break
        else:
            cols.append(np.real(w))
    if not cols:
        raise DomainError("no unstable directions at this fixed point")
    B = np.column_stack(cols)
    Q, _ = np.linalg.qr(B)
    return Q


def unstable_iteration(fp, radius=1e-4, iters=4, forward_cap=5, newton_cap=60):
    """Backward orbits near the fixed point solved through R(y) = target
    with the fixed-point Jacobian as a chord, plus forward escape steps."""
    a, b = fp.ab
    depth_cap = fp.depth - 1
    template = fp.pf_star
    xstar = template.to_vector()
    J = fp.jacobian
    if J is None:
        raise DomainError("fixed point carries no Jacobian")
    state = {}
    R = _formal_map(template, (a, b), depth_cap, state)

    def R_only(x):
        return R(x) + x

    Q = _real_unstable_basis(fp)
    dirs = []
    for idx in range(Q.shape[1]):
        x0 = xstar + radius * Q[:, idx]
        # backward: repeatedly solve R(y) = target by chord Newton from x*
        dists = [residual_norm(x0 - xstar)]
        target = x0
        ok = True
        for _ in range(iters):
            y = target.copy()
            solved = False
            for _ in range(newton_cap):
                try:
                    ry = R_only(y)
                except LorenzError:
                    break
                err = ry - target
                if residual_norm(err) <= 1e-12 + 1e-9 * radius:
                    solved = True
                    break
                y = y - np.linalg.solve(J, err)
            if not solved:
                ok = False
                break
            dists.append(residual_norm(y - xstar))
            target = y
        # forward escape
        z = x0
        exit_step = -1
        for k in range(1, forward_cap + 1):
            try:
                z = R_only(z)
            except LorenzError:
                exit_step = k
                break
            if residual_norm(z - xstar) > 10.0 * radius:
                exit_step = k
                break
        dirs.append(UnstableDirectionReport(tuple(dists), ok, exit_step))
    return UnstableIterationReport(radius, tuple(dirs))
