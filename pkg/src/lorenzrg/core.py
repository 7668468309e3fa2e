"""Maps of the interval with a single critical point and their factors.

A map f is stored as (alpha, u, v, c, phi, psi): the left branch is
phi o q_- on [0,c), the right branch psi o q_+ on (c,1], where q_-/q_+ are
the one-sided power-law branches with critical exponent alpha, critical
point c and critical values u and 1-v, and phi/psi are diffeomorphism
chains built from unimodal rescaling factors ("pure factors").

A pure factor is identified by its signed distortion s: the difference of
log-derivatives at the endpoints.  s=0 is the identity; s -> +inf approaches
x**alpha, s -> -inf approaches 1-(1-x)**alpha.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels as K
from .errors import BranchDomainError, CriticalPointError, DomainError, InvalidMapError

# distortion ceiling under which both return multipliers stay expanding
def max_safe_distortion(alpha):
    return math.log(alpha) / 2.0


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not (self.lo < self.hi):
            raise DomainError(f"empty interval [{self.lo}, {self.hi}]")

    def __len__(self):
        return 2

    def __iter__(self):
        return iter((self.lo, self.hi))

    @property
    def length(self):
        return self.hi - self.lo

    def contains(self, x):
        return self.lo <= x <= self.hi

    def rescale_from(self, x):
        # affine [lo,hi] -> [0,1]
        return (x - self.lo) / (self.hi - self.lo)

    def rescale_to(self, t):
        # affine [0,1] -> [lo,hi]
        return self.lo + t * (self.hi - self.lo)


@dataclass(frozen=True)
class PureMap:
    s: float
    alpha: float

    def __post_init__(self):
        if not self.alpha > 1.0:
            raise DomainError("critical exponent must exceed 1")
        if not math.isfinite(self.s):
            raise DomainError("distortion must be finite")

    def __call__(self, x):
        y = K.zeta(self.s, self.alpha, x)
        if y != y:
            raise BranchDomainError(f"{x} outside [0,1]")
        return y

    def deriv(self, x):
        y = K.zeta_d(self.s, self.alpha, x)
        if y != y:
            raise BranchDomainError(f"{x} outside [0,1]")
        return y

    def nonlinearity(self, x):
        y = K.zeta_n(self.s, self.alpha, x)
        if y != y:
            raise BranchDomainError(f"{x} outside [0,1]")
        return y

    def nonlinearity_deriv(self, x):
        y = K.zeta_dn(self.s, self.alpha, x)
        if y != y:
            raise BranchDomainError(f"{x} outside [0,1]")
        return y

    def invert(self, y):
        x = K.zeta_inv(self.s, self.alpha, y)
        if x != x:
            raise BranchDomainError(f"{y} outside [0,1]")
        return x

    def norm(self, kind="c2"):
        # sup of |nonlinearity|; attained at an endpoint
        n = (self.alpha - 1.0) * math.expm1(abs(self.s) / (self.alpha - 1.0))
        if kind == "c2":
            return n
        if kind == "c3":
            # |D nonlinearity| sup = n^2/(alpha-1), also at an endpoint
            return max(n, n * n / (self.alpha - 1.0))
        raise DomainError(f"unknown norm kind {kind!r}")


def pure_nonlinearity_norm(s, alpha):
    return (alpha - 1.0) * math.expm1(abs(s) / (alpha - 1.0))


def zoom_pure(p, interval):
    """Affine rescaling of p restricted to interval; again a pure factor."""
    lo, hi = interval
    s = K.zeta_zoom(p.s, p.alpha, lo, hi)
    if s != s:
        raise DomainError(f"cannot zoom onto [{lo}, {hi}]")
    return PureMap(s, p.alpha)


class DiffeoChain:
    """Composition of pure factors, applied first to last."""

    __slots__ = ("factors", "alpha", "_s")

    def __init__(self, factors=()):
        self.factors = tuple(factors)
        alphas = {f.alpha for f in self.factors}
        if len(alphas) > 1:
            raise DomainError("chain factors must share the critical exponent")
        self.alpha = alphas.pop() if alphas else None
        self._s = np.array([f.s for f in self.factors], dtype=float)

    @classmethod
    def from_s(cls, s_values, alpha):
        return cls(tuple(PureMap(float(s), alpha) for s in s_values))

    @property
    def s_values(self):
        return self._s

    def __len__(self):
        return len(self.factors)

    def __eq__(self, other):
        return isinstance(other, DiffeoChain) and self.factors == other.factors

    def _a(self, alpha=None):
        if self.alpha is not None:
            return self.alpha
        if alpha is None:
            return 2.0  # empty chain: value irrelevant
        return alpha

    def __call__(self, x):
        y = K.chain_eval(self._s, self._a(), x)
        if y != y:
            raise BranchDomainError(f"{x} left the chain domain")
        return y

    def deriv(self, x):
        y = K.chain_deriv(self._s, self._a(), x)
        if y != y:
            raise BranchDomainError(f"{x} left the chain domain")
        return y

    def nonlinearity(self, x):
        y = K.chain_nonlin(self._s, self._a(), x)
        if y != y:
            raise BranchDomainError(f"{x} left the chain domain")
        return y

    def invert(self, y):
        x = K.chain_inv(self._s, self._a(), y)
        if x != x:
            raise BranchDomainError(f"{y} left the chain image")
        return x

    def norm(self, kind="c2"):
        # sum of factor norms; an upper bound for the composed distortion
        return float(sum(f.norm(kind) for f in self.factors))

    def sup_nonlinearity(self, n_grid=257):
        # sampled sup of |N| on the open interval
        xs = np.linspace(0.0, 1.0, n_grid)[1:-1]
        return float(max(abs(K.chain_nonlin(self._s, self._a(), x)) for x in xs))

    def then(self, other):
        if len(self.factors) == 0:
            return other
        if len(other.factors) == 0:
            return self
        return DiffeoChain(self.factors + other.factors)

    def mirror(self):
        # conjugation by x -> 1-x negates every distortion, order unchanged
        return DiffeoChain(tuple(PureMap(-f.s, f.alpha) for f in self.factors))


IDENTITY = DiffeoChain()


class StandardFamily:
    """One-sided power-law branches q_- and q_+ for given (alpha, u, v, c)."""

    __slots__ = ("alpha", "u", "v", "c")

    def __init__(self, alpha, u, v, c):
        if not alpha > 1.0:
            raise DomainError("critical exponent must exceed 1")
        if not (0.0 < c < 1.0):
            raise DomainError("critical point must lie in (0,1)")
        if not (0.0 < u <= 1.0 and 0.0 < v <= 1.0):
            raise DomainError("branch heights must lie in (0,1]")
        self.alpha = alpha
        self.u = u
        self.v = v
        self.c = c

    def left(self, x):
        y = K.q_eval(0, self.alpha, self.u, self.c, x)
        if y != y:
            raise BranchDomainError(f"{x} outside [0, c]")
        return y

    def right(self, x):
        y = K.q_eval(1, self.alpha, self.v, self.c, x)
        if y != y:
            raise BranchDomainError(f"{x} outside [c, 1]")
        return y

    def left_deriv(self, x):
        y = K.q_deriv(0, self.alpha, self.u, self.c, x)
        if y != y:
            raise BranchDomainError(f"{x} outside [0, c]")
        return y

    def right_deriv(self, x):
        y = K.q_deriv(1, self.alpha, self.v, self.c, x)
        if y != y:
            raise BranchDomainError(f"{x} outside [c, 1]")
        return y

    def left_inv(self, y):
        x = K.q_inv(0, self.alpha, self.u, self.c, y)
        if x != x:
            raise BranchDomainError(f"{y} outside [0, u]")
        return x

    def right_inv(self, y):
        x = K.q_inv(1, self.alpha, self.v, self.c, y)
        if x != x:
            raise BranchDomainError(f"{y} outside [1-v, 1]")
        return x


def zoom_branch(fam, side, interval):
    """Rescaled restriction of a one-sided branch to an interval that avoids
    the critical point; the result is a pure factor."""
    lo, hi = interval
    s = K.q_zoom(1 if side == "right" else 0, fam.alpha, fam.c, lo, hi)
    if s != s:
        raise DomainError("interval touches the critical point")
    return PureMap(s, fam.alpha)


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    failures: tuple

    def __bool__(self):
        return self.ok


class LorenzMap:
    """Interval map with one critical point, increasing branches fixing 0/1."""

    __slots__ = ("alpha", "u", "v", "c", "phi", "psi", "family")

    def __init__(self, alpha, u, v, c, phi=IDENTITY, psi=IDENTITY):
        self.family = StandardFamily(alpha, u, v, c)
        for name, ch in (("phi", phi), ("psi", psi)):
            if ch.alpha is not None and ch.alpha != alpha:
                raise DomainError(f"{name} factors must share the map exponent")
        self.alpha = alpha
        self.u = u
        self.v = v
        self.c = c
        self.phi = phi
        self.psi = psi

    @classmethod
    def standard(cls, alpha, u, v, c):
        return cls(alpha, u, v, c)

    def kernel_args(self):
        return (self.alpha, self.u, self.v, self.c, self.phi.s_values, self.psi.s_values)

    def __call__(self, x):
        if x == self.c:
            raise CriticalPointError("no value at the critical point")
        y = K.lz_eval(*self.kernel_args(), x)
        if y != y:
            raise BranchDomainError(f"{x} outside [0,1]")
        return y

    def deriv(self, x):
        if x == self.c:
            raise CriticalPointError("no derivative at the critical point")
        y = K.lz_deriv(*self.kernel_args(), x)
        if y != y:
            raise BranchDomainError(f"{x} outside [0,1]")
        return y

    def left_branch(self, x):
        return self.phi(self.family.left(x))

    def right_branch(self, x):
        return self.psi(self.family.right(x))

    def critical_values(self):
        # one-sided limits at c: (left, right)
        return self.phi(self.u), self.psi(1.0 - self.v)

    def left_inv(self, y):
        x = K.lz_inv_left(*self.kernel_args(), y)
        if x != x:
            raise BranchDomainError(f"{y} outside the left-branch image")
        return x

    def right_inv(self, y):
        x = K.lz_inv_right(*self.kernel_args(), y)
        if x != x:
            raise BranchDomainError(f"{y} outside the right-branch image")
        return x

    def left_preimages(self, y, n):
        """y, f_-^{-1}(y), ..., f_-^{-n}(y); decreasing toward 0."""
        out = [y]
        for _ in range(n):
            y = self.left_inv(y)
            out.append(y)
        return np.array(out)

    def right_preimages(self, y, n):
        out = [y]
        for _ in range(n):
            y = self.right_inv(y)
            out.append(y)
        return np.array(out)

    def mirror(self):
        # conjugation by x -> 1-x swaps the branches
        return LorenzMap(
            self.alpha, self.v, self.u, 1.0 - self.c, self.psi.mirror(), self.phi.mirror()
        )

    def distortion(self, kind="c2"):
        return max(self.phi.norm(kind), self.psi.norm(kind))

    def __repr__(self):
        return (
            f"LorenzMap(alpha={self.alpha}, u={self.u:.6g}, v={self.v:.6g}, "
            f"c={self.c:.6g}, |phi|={len(self.phi)}, |psi|={len(self.psi)})"
        )


def validate_lorenz(f, n_grid=1000, tol=1e-9):
    """Check the defining conditions on a grid plus endpoint derivatives.

    The branch conditions are x < f_-(x) on (0,c] and f_+(x) < x on [c,1);
    near the fixed endpoints they degenerate to first-order conditions, so
    the grid check is supplemented with Df(0) >= 1 and Df(1) >= 1.
    """
    failures = []
    args = f.kernel_args()
    cl, cr = f.critical_values()
    if not cl > f.c - tol:
        failures.append(f"left critical value {cl:.6g} not above c={f.c:.6g}")
    if not cr < f.c + tol:
        failures.append(f"right critical value {cr:.6g} not below c={f.c:.6g}")
    for x in np.linspace(0.0, f.c, n_grid // 2 + 1)[1:]:
        y = K.lz_eval(*args, x) if x != f.c else cl
        if y != y:
            failures.append(f"left branch undefined at {x:.6g}")
            break
        if y < x - tol:
            failures.append(f"left branch below diagonal at {x:.6g}")
            break
    for x in np.linspace(f.c, 1.0, n_grid // 2 + 1)[:-1]:
        y = K.lz_eval(*args, x) if x != f.c else cr
        if y != y:
            failures.append(f"right branch undefined at {x:.6g}")
            break
        if y > x + tol:
            failures.append(f"right branch above diagonal at {x:.6g}")
            break
    d0 = K.lz_deriv(*args, 0.0)
    d1 = K.lz_deriv(*args, 1.0)
    if not d0 >= 1.0 - tol:
        failures.append(f"derivative {d0:.6g} < 1 at the left endpoint")
    if not d1 >= 1.0 - tol:
        failures.append(f"derivative {d1:.6g} < 1 at the right endpoint")
    for name, ch in (("phi", f.phi), ("psi", f.psi)):
        n = ch.norm()
        if not math.isfinite(n):
            failures.append(f"{name} has non-finite norm")
    return ValidationReport(not failures, tuple(failures))


def require_valid(f, n_grid=1000, tol=1e-9):
    rep = validate_lorenz(f, n_grid=n_grid, tol=tol)
    if not rep:
        raise InvalidMapError("; ".join(rep.failures))
    return f
