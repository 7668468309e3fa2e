"""The renormalization operator.

A map with return times (a, b) has boundary points l < c < r fixed by the
one-sided first-return words (a right-branch applications after the left
branch, and symmetrically).  Zooming the first-return map on [l, r] back to
the unit interval yields a new map in the same class; its diffeomorphism
parts are chains of the original atomic factors rescaled over the intervals
they actually traverse, so the operator acts directly on the factored form.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import kernels as K
from .core import DiffeoChain, Interval, LorenzMap, validate_lorenz
from .decomposition import (
    LEFT,
    RIGHT,
    PureLorenzMap,
    PureStructure,
    TimeAddress,
)
from .errors import (
    DomainError,
    NotRenormalizableError,
    PullbackError,
)

GRID = 256
BISECT_TOL = 1e-13
NEWTON_POLISH = 2


@dataclass(frozen=True)
class CombinatoricsType:
    """Return times of a renormalizable map: the left side returns after
    one left-branch and `a` right-branch applications, the right side after
    one right-branch and `b` left-branch applications."""

    a: int
    b: int

    def __post_init__(self):
        if self.a < 1 or self.b < 1:
            raise DomainError("return times must be >= 1")

    @property
    def left_word(self):
        return "-" + "+" * self.a

    @property
    def right_word(self):
        return "+" + "-" * self.b

    def mirror(self):
        return CombinatoricsType(self.b, self.a)


@dataclass(frozen=True)
class RenormData:
    """Geometry produced by one renormalization step."""

    a: int
    b: int
    l: float
    r: float
    uprime: float
    vprime: float
    cprime: float
    lam0: float
    lam1: float
    U: Interval
    V: Interval
    rejected_candidates: tuple = field(default=())

    @property
    def C(self):
        return Interval(self.l, self.r)

    @property
    def combinatorics(self):
        return CombinatoricsType(self.a, self.b)


def detect_return_times(f, max_iter=64, check=True):
    """Return times (a, b) from the critical orbits, or raise with a reason.

    a counts the iterates of the left critical value under the right branch
    staying (weakly) right of c before the crossing; the covering condition
    of a return interval puts the (a+1)-st critical iterate back across c,
    so a = crossing count - 1.  b symmetrically.  With check=True the return
    interval is constructed and validated, as a detected crossing pattern
    alone does not guarantee a renormalization.
    """
    args = f.kernel_args()
    ka, code_a = K.crossing_count(*args, 1, max_iter + 1)
    kb, code_b = K.crossing_count(*args, 0, max_iter + 1)
    if code_a == 2 or code_b == 2:
        raise NotRenormalizableError("escape", "a critical orbit left the branch domains")
    if code_a == 1 or code_b == 1:
        cvl, cvr = f.critical_values()
        if cvl >= 1.0 or cvr <= 0.0:
            raise NotRenormalizableError("full", "a branch is full; no return interval")
        raise NotRenormalizableError(
            "no-crossing", f"critical orbit did not cross c within {max_iter + 1} iterates"
        )
    if ka < 2 or kb < 2:
        side = "left" if ka < 2 else "right"
        raise NotRenormalizableError(
            "trivial",
            f"the {side} critical value returns to its own side immediately",
        )
    a, b = ka - 1, kb - 1
    if check:
        _return_interval_args(args, a, b, GRID, BISECT_TOL, None)
    return a, b


def _combinatorics_ok(args, a, b, l, r):
    """Ordering and covering conditions of an (a, b) return interval: the a
    pre-return images of C_- form a decreasing chain of intervals right of
    [l, r], the (a+1)-st covers C_-; mirrored on the right.  Endpoint
    tangency is allowed: for (1,1) the boundary of [l, r] is a single
    period-2 orbit, so f(l) = r exactly."""
    alpha, u, v, c, sm, sp = args
    x = K.chain_eval(sm, alpha, K.q_eval(0, alpha, u, c, l))
    y = K.chain_eval(sm, alpha, u)
    for j in range(1, a + 1):
        if x != x or y != y:
            return "left orbit NaN"
        if x < r - 1e-12:
            return f"left iterate {j} meets the return interval"
        xn = K.chain_eval(sp, alpha, K.q_eval(1, alpha, v, c, x))
        yn = K.chain_eval(sp, alpha, K.q_eval(1, alpha, v, c, y))
        if j < a and not x >= yn - 1e-12:
            return f"left iterates {j},{j + 1} out of order"
        x, y = xn, yn
    if not c - 1e-12 <= y <= r + 1e-12:
        return "left return does not cover the critical point"
    x = K.chain_eval(sp, alpha, K.q_eval(1, alpha, v, c, r))
    y = K.chain_eval(sp, alpha, 1.0 - v)
    for j in range(1, b + 1):
        if x != x or y != y:
            return "right orbit NaN"
        if x > l + 1e-12:
            return f"right iterate {j} meets the return interval"
        xn = K.chain_eval(sm, alpha, K.q_eval(0, alpha, u, c, x))
        yn = K.chain_eval(sm, alpha, K.q_eval(0, alpha, u, c, y))
        if j < b and not x <= yn + 1e-12:
            return f"right iterates {j},{j + 1} out of order"
        x, y = xn, yn
    if not l - 1e-12 <= y <= c + 1e-12:
        return "right return does not cover the critical point"
    return None


def _left_domain(args, a):
    # lower edge of the monotone domain of the left return word: the point
    # whose a-th image hits c; below it the orbit re-enters the left side
    c = args[3]
    y = K.backward_right(*args, c, a - 1)
    if y == y:
        y = K.backward_left(*args, y, 1)
    if y != y:
        raise NotRenormalizableError(
            "domain", f"left return word of length {a + 1} has empty monotone domain"
        )
    return y


def _right_domain(args, b):
    c = args[3]
    y = K.backward_left(*args, c, b - 1)
    if y == y:
        y = K.backward_right(*args, y, 1)
    if y != y:
        raise NotRenormalizableError(
            "domain", f"right return word of length {b + 1} has empty monotone domain"
        )
    return y


def _bracketed_roots(displ, displ_d, lo, hi, grid, tol):
    """All roots of a scalar function on (lo, hi): sign changes on a grid,
    bisection to width tol, then a couple of Newton polish steps.  The
    linear grid is backed by geometric tails toward both endpoints: for
    large return times the boundary roots hug c by less than any linear
    resolution (the renormalization window shrinks super-exponentially)."""
    roots = []

    def refine(a_, b_, fa):
        while b_ - a_ > tol:
            m = 0.5 * (a_ + b_)
            fm = displ(np.array([m]))[0]
            if fm != fm:
                break
            if (fm < 0.0) == (fa < 0.0):
                a_, fa = m, fm
            else:
                b_ = m
        x = 0.5 * (a_ + b_)
        for _ in range(NEWTON_POLISH):
            g, d = displ_d(x)
            if g != g or d == 0.0 or d != d:
                break
            xn = x - g / d
            if lo < xn < hi:
                x = xn
        roots.append(x)

    def sweep(xs):
        gs = displ(xs)
        for i in range(len(xs) - 1):
            g0, g1 = gs[i], gs[i + 1]
            if g0 != g0 or g1 != g1:
                continue
            if not ((g0 < 0.0) != (g1 < 0.0) or g0 == 0.0):
                continue
            refine(xs[i], xs[i + 1], g0)

    span = hi - lo
    sweep(lo + span * np.linspace(1e-9, 1.0 - 1e-9, grid))
    edge = np.power(0.5, np.arange(int(np.log2(grid)), 53, dtype=float))
    sweep(hi - span * edge)
    sweep(lo + span * edge[::-1])
    # grid nodes sitting on a root can bracket it twice
    roots.sort()
    out = []
    for x in roots:
        if not out or x - out[-1] > 10 * tol:
            out.append(x)
    return out


def left_boundary_roots(f, a, grid=GRID, tol=BISECT_TOL):
    args = f.kernel_args()
    return _left_roots_args(args, a, grid, tol)


def right_boundary_roots(f, b, grid=GRID, tol=BISECT_TOL):
    args = f.kernel_args()
    return _right_roots_args(args, b, grid, tol)


def _left_roots_args(args, a, grid, tol):
    c = args[3]
    x_dom = _left_domain(args, a)
    return _bracketed_roots(
        lambda xs: K.displ_left_grid(*args, a, xs),
        lambda x: K.displ_left(*args, a, x),
        x_dom,
        c,
        grid,
        tol,
    )


def _right_roots_args(args, b, grid, tol):
    c = args[3]
    x_dom = _right_domain(args, b)
    return _bracketed_roots(
        lambda xs: K.displ_right_grid(*args, b, xs),
        lambda x: K.displ_right(*args, b, x),
        c,
        x_dom,
        grid,
        tol,
    )


def _newton_root(displ_d, x0, lo, hi, max_iter=16, tol=1e-13):
    x = x0
    for _ in range(max_iter):
        g, d = displ_d(x)
        if g != g or d != d or d == 0.0:
            return None
        step = g / d
        xn = x - step
        if not (lo < xn < hi):
            return None
        x = xn
        if abs(step) < tol:
            return x
    return None


HEIGHT_SLACK = 1e-9


def _pair_geometry(args, a, b, l, r, formal=False):
    out = K.renorm_walk(*args, a, b, l, r)
    if out[-1] != 0:
        return None, "pullback"
    up, vp, cp, lam0, lam1 = out[0], out[1], out[2], out[3], out[4]
    if not (0.0 < cp < 1.0):
        return None, "cprime"
    if lam0 <= 1.0 - 1e-9 or lam1 <= 1.0 - 1e-9:
        return None, "multiplier"
    if formal:
        # formal evaluation keeps the walk output even when the candidate
        # fails to be an actual renormalization (heights past 1, orbit
        # ordering broken); root-finding continuation needs the formula
        # to stay defined across the domain boundary
        if not (0.0 < up and 0.0 < vp):
            return None, "height"
        return out, None
    if not (up <= 1.0 + HEIGHT_SLACK and 0.0 < up and 0.0 < vp <= 1.0 + HEIGHT_SLACK):
        return None, "height"
    reason = _combinatorics_ok(args, a, b, l, r)
    if reason is not None:
        return None, reason
    return out, None


def return_interval(f, a, b, grid=GRID, tol=BISECT_TOL, hint=None, validate=True):
    """Boundary points (l, r, rejected) of the (a, b) return interval.

    All boundary-equation roots on each side are enumerated; the outermost
    pair that yields a valid renormalized map wins, the rest are recorded.
    A hint (l0, r0) short-circuits to Newton refinement of a known pair.
    """
    args = f.kernel_args()
    got = _return_interval_args(args, a, b, grid, tol, hint)
    l, r, rejected = got
    if validate:
        g, _ = _build_renormalized(f, args, a, b, l, r)
        report = validate_lorenz(g)
        if not report.ok:
            raise NotRenormalizableError(
                "validation-failed", "; ".join(report.failures)
            )
    return l, r, rejected


def _return_interval_args(args, a, b, grid=GRID, tol=BISECT_TOL, hint=None, formal=False):
    c = args[3]
    if hint is not None:
        l0, r0 = hint
        l = _newton_root(lambda x: K.displ_left(*args, a, x), l0, 0.0, c)
        r = _newton_root(lambda x: K.displ_right(*args, b, x), r0, c, 1.0)
        if l is not None and r is not None:
            out, _ = _pair_geometry(args, a, b, l, r, formal)
            if out is not None:
                return l, r, ()
    ls = _left_roots_args(args, a, grid, tol)
    rs = _right_roots_args(args, b, grid, tol)
    if not ls or not rs:
        raise NotRenormalizableError(
            "no-root",
            f"boundary equation has no root on the {'left' if not ls else 'right'} side",
        )
    rejected = []
    for l in ls:
        for r in sorted(rs, reverse=True):
            out, reason = _pair_geometry(args, a, b, l, r, formal)
            if out is not None:
                return l, r, tuple(rejected)
            rejected.append((l, r, reason))
    raise NotRenormalizableError(
        "validation-failed", f"no boundary-root pair yields a valid map ({rejected})"
    )


def _build_renormalized(f, args, a, b, l, r):
    out = K.renorm_walk(*args, a, b, l, r)
    if out[-1] != 0:
        raise PullbackError("non-monotone pullback while walking the return word")
    up, vp, cp, lam0, lam1, U, V, new_left, new_right, _ = out
    # a full renormalized branch can overshoot height 1 by roundoff
    if 1.0 < up <= 1.0 + HEIGHT_SLACK:
        up = 1.0
    if 1.0 < vp <= 1.0 + HEIGHT_SLACK:
        vp = 1.0
    g = LorenzMap(
        f.alpha,
        up,
        vp,
        cp,
        DiffeoChain.from_s(new_left, f.alpha),
        DiffeoChain.from_s(new_right, f.alpha),
    )
    data = RenormData(a, b, l, r, up, vp, cp, lam0, lam1, Interval(*U), Interval(*V))
    return g, data


def renormalize(f, ab=None, grid=GRID, tol=BISECT_TOL, hint=None, validate=True):
    """One renormalization step of a LorenzMap: returns (g, data)."""
    if ab is None:
        ab = detect_return_times(f)
    a, b = ab
    args = f.kernel_args()
    l, r, rejected = return_interval(f, a, b, grid=grid, tol=tol, hint=hint, validate=validate)
    g, data = _build_renormalized(f, args, a, b, l, r)
    if rejected:
        data = RenormData(
            a, b, l, r, data.uprime, data.vprime, data.cprime, data.lam0,
            data.lam1, data.U, data.V, rejected,
        )
    return g, data


@lru_cache(maxsize=None)
def _renormalized_paths(old_left, old_right, a, b):
    """Address paths of the renormalized sides, in walk output order (which
    coincides with sorted order), plus their depths."""

    def one_side(own, other, n):
        paths = [(0,) + p for p in own]
        for j in range(1, n + 1):
            paths.append((2 * j - 1,))
            paths.extend((2 * j,) + p for p in other)
        return tuple(paths)

    nl = one_side(old_left, old_right, a)
    nr = one_side(old_right, old_left, b)
    dl = np.array([len(p) - 1 for p in nl], dtype=np.intp)
    dr = np.array([len(p) - 1 for p in nr], dtype=np.intp)
    return nl, nr, dl, dr


def truncation_masks(pm, a, b, depth_cap):
    """Boolean masks over the walk output positions keeping depth <= cap."""
    nl, nr, dl, dr = _renormalized_paths(
        tuple(t.path for t in pm.sbar_minus.addresses),
        tuple(t.path for t in pm.sbar_plus.addresses),
        a,
        b,
    )
    return dl <= depth_cap, dr <= depth_cap


def renormalize_pure(pm, ab=None, depth_cap=None, grid=GRID, tol=BISECT_TOL, hint=None, formal=False):
    """One renormalization step in factored form.

    Returns (pm2, data, dropped) where dropped = (left_mass, right_mass) is
    the l1 mass of discarded factors when depth_cap truncates the result.

    With formal=True the walk output is returned from the periodic boundary
    roots even when the map is not actually (a, b)-renormalizable there
    (heights may exceed 1); fixed-point solvers iterate through such
    regions.  Requires explicit ab.
    """
    args = (pm.alpha, pm.u, pm.v, pm.c, pm.sbar_minus.values, pm.sbar_plus.values)
    if ab is None:
        if formal:
            raise DomainError("formal evaluation needs explicit return times")
        f = pm.to_lorenz_map()
        ab = detect_return_times(f)
    a, b = ab
    l, r, rejected = _return_interval_args(args, a, b, grid, tol, hint, formal)
    out = K.renorm_walk(*args, a, b, l, r)
    if out[-1] != 0:
        raise PullbackError("non-monotone pullback while walking the return word")
    up, vp, cp, lam0, lam1, U, V, new_left, new_right, _ = out
    if 1.0 < up <= 1.0 + HEIGHT_SLACK:
        up = 1.0
    if 1.0 < vp <= 1.0 + HEIGHT_SLACK:
        vp = 1.0
    nl, nr, dl, dr = _renormalized_paths(
        tuple(t.path for t in pm.sbar_minus.addresses),
        tuple(t.path for t in pm.sbar_plus.addresses),
        a,
        b,
    )
    dropped = (0.0, 0.0)
    if depth_cap is not None:
        keep_l = dl <= depth_cap
        keep_r = dr <= depth_cap
        dropped = (
            float(np.sum(np.abs(new_left[~keep_l]))),
            float(np.sum(np.abs(new_right[~keep_r]))),
        )
        nl = tuple(p for p, k in zip(nl, keep_l) if k)
        nr = tuple(p for p, k in zip(nr, keep_r) if k)
        new_left = new_left[keep_l]
        new_right = new_right[keep_r]
    pm2 = PureLorenzMap(
        pm.alpha,
        up,
        vp,
        cp,
        PureStructure(LEFT, pm.alpha, tuple(TimeAddress(p) for p in nl), new_left),
        PureStructure(RIGHT, pm.alpha, tuple(TimeAddress(p) for p in nr), new_right),
    )
    data = RenormData(
        a, b, l, r, up, vp, cp, lam0, lam1, Interval(*U), Interval(*V), tuple(rejected)
    )
    return pm2, data, dropped


def renorm_vector_at_roots(pm, ab, l, r, depth_cap=None):
    """Renormalized coordinates [u', v', c', factors...] from prescribed
    boundary points, no root solving and no validation.

    The raw walk output for return words of lengths a + 1 and b + 1 started
    at l and r, truncated to depth_cap.  Smooth in (pm, l, r) wherever the
    words themselves are defined, even where the boundary equation has no
    root nearby; solvers that carry l and r as unknowns rely on this.
    """
    a, b = ab
    args = (pm.alpha, pm.u, pm.v, pm.c, pm.sbar_minus.values, pm.sbar_plus.values)
    out = K.renorm_walk(*args, a, b, l, r)
    if out[-1] != 0:
        raise PullbackError("non-monotone pullback while walking the return word")
    up, vp, cp, _, _, _, _, new_left, new_right, _ = out
    if depth_cap is not None:
        keep_l, keep_r = truncation_masks(pm, a, b, depth_cap)
        new_left = new_left[keep_l]
        new_right = new_right[keep_r]
    return np.concatenate([[up, vp, cp], new_left, new_right])


def koebe_space(f, a, b, l, r):
    """Relative monotone extension space of the return words around [l, r]."""
    args = f.kernel_args()
    left_edge = _left_domain(args, a)
    right_edge = _right_domain(args, b)
    size = r - l
    return min((l - left_edge) / size, (right_edge - r) / size)


def brute_force_return(f, l, r, x, max_steps=100000):
    """First return of x to [l, r] by direct iteration: (rescaled value, steps)."""
    args = f.kernel_args()
    y, steps = K.first_return(*args, l, r, x, max_steps)
    if steps < 0:
        reason = {-1: "orbit escaped", -2: "orbit hit c", -3: "no return"}[steps]
        raise NotRenormalizableError("no-return", f"{reason} (x={x})")
    return (y - l) / (r - l), steps


def brute_force_return_map(f, l, r, n=101, max_steps=100000):
    """Sampled rescaled first-return map on [l, r]: (points, values, steps).

    Sample points straddle c but keep away from it and from the boundary
    fixed points, where return times blow up.
    """
    pad = 1e-3 * (r - l)
    xs = np.concatenate(
        [
            np.linspace(l + pad, f.c - pad, n // 2),
            np.linspace(f.c + pad, r - pad, n - n // 2),
        ]
    )
    vals = np.empty(len(xs))
    steps = np.empty(len(xs), dtype=np.intp)
    for i, x in enumerate(xs):
        vals[i], steps[i] = brute_force_return(f, l, r, x, max_steps)
    return (xs - l) / (r - l), vals, steps
