"""Factored representations of the branch diffeomorphisms.

The two diffeomorphism parts of a map are stored as indexed families of
signed distortions over recursively generated time sets.  A time address is
a tuple of slot indices: the side with n top-level slots exposes slots
0..2n; odd slots are the n top-level factor positions (one per application
of the opposite one-sided branch inside the returning composition), slot 0
holds a copy of the same side one level deeper, and even slots 2j hold
copies of the opposite side one level deeper.  The address depth is
len(path)-1; application order is plain tuple order.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import IDENTITY, DiffeoChain, LorenzMap, PureMap
from .errors import DomainError

LEFT = "left"
RIGHT = "right"


def other_side(side):
    return RIGHT if side == LEFT else LEFT


@dataclass(frozen=True, order=True)
class TimeAddress:
    path: tuple

    def __post_init__(self):
        if not self.path:
            raise DomainError("empty address")
        for k in self.path[:-1]:
            if k % 2 != 0:
                raise DomainError(f"non-terminal slots must be even: {self.path}")
        if self.path[-1] % 2 != 1:
            raise DomainError(f"terminal slot must be odd: {self.path}")

    @property
    def depth(self):
        return len(self.path) - 1

    def side_of_slot(self, side, i):
        """Side of the subtree entered after the first i hops from `side`."""
        for k in self.path[:i]:
            if k != 0:
                side = other_side(side)
        return side

    def __repr__(self):
        return "t" + "".join(f"[{k}]" for k in self.path)


def _slot_count(side, a, b):
    return a if side == LEFT else b


@lru_cache(maxsize=None)
def _paths(side, a, b, depth_cap):
    n = _slot_count(side, a, b)
    paths = [(2 * j - 1,) for j in range(1, n + 1)]
    if depth_cap >= 1:
        paths += [(0,) + p for p in _paths(side, a, b, depth_cap - 1)]
        for j in range(1, n + 1):
            paths += [(2 * j,) + p for p in _paths(other_side(side), a, b, depth_cap - 1)]
    return tuple(sorted(paths))


def generate_time_set(a, b, depth_cap):
    """Stationary time sets for return words of lengths a+1 and b+1,
    truncated to addresses of depth <= depth_cap.  Returns (left, right)
    tuples of TimeAddress in application order."""
    if a < 1 or b < 1 or depth_cap < 0:
        raise DomainError("need a,b >= 1 and depth_cap >= 0")
    left = tuple(TimeAddress(p) for p in _paths(LEFT, a, b, depth_cap))
    right = tuple(TimeAddress(p) for p in _paths(RIGHT, a, b, depth_cap))
    return left, right


def depth_counts(addresses):
    counts = {}
    for t in addresses:
        counts[t.depth] = counts.get(t.depth, 0) + 1
    return counts


class PureStructure:
    """Signed distortions indexed by a time set, for one side of a map."""

    __slots__ = ("side", "alpha", "addresses", "values", "_index")

    def __init__(self, side, alpha, addresses, values):
        if side not in (LEFT, RIGHT):
            raise DomainError(f"bad side {side!r}")
        self.side = side
        self.alpha = alpha
        self.addresses = tuple(addresses)
        if list(self.addresses) != sorted(self.addresses):
            raise DomainError("addresses must be in application order")
        self.values = np.asarray(values, dtype=float)
        if self.values.shape != (len(self.addresses),):
            raise DomainError("one value per address required")
        self._index = {t: i for i, t in enumerate(self.addresses)}

    @classmethod
    def zero(cls, side, alpha, addresses):
        return cls(side, alpha, addresses, np.zeros(len(addresses)))

    def value_at(self, address):
        return float(self.values[self._index[address]])

    def with_values(self, values):
        return PureStructure(self.side, self.alpha, self.addresses, values)

    def norm(self, kind="l1"):
        if kind == "l1":
            return float(np.sum(np.abs(self.values)))
        if kind in ("c2", "c3"):
            return float(sum(PureMap(float(s), self.alpha).norm(kind) for s in self.values))
        raise DomainError(f"unknown norm kind {kind!r}")

    def max_depth(self):
        return max((t.depth for t in self.addresses), default=0)

    def truncate(self, depth):
        """Keep entries of depth <= depth; returns (structure, dropped_mass)."""
        keep = [i for i, t in enumerate(self.addresses) if t.depth <= depth]
        drop = [i for i, t in enumerate(self.addresses) if t.depth > depth]
        dropped = float(np.sum(np.abs(self.values[drop]))) if drop else 0.0
        return (
            PureStructure(
                self.side,
                self.alpha,
                tuple(self.addresses[i] for i in keep),
                self.values[keep],
            ),
            dropped,
        )

    def compose(self):
        """The diffeomorphism represented: factors in application order."""
        return DiffeoChain.from_s(self.values, self.alpha)

    def mirror(self):
        # reflection swaps sides and negates distortions; addresses carry over
        return PureStructure(other_side(self.side), self.alpha, self.addresses, -self.values)

    def __len__(self):
        return len(self.addresses)

    def __repr__(self):
        return (
            f"PureStructure({self.side}, n={len(self)}, "
            f"depth<={self.max_depth()}, |s|={self.norm():.3g})"
        )


def compose_structure(structure):
    return structure.compose()


class PureLorenzMap:
    """Map whose diffeomorphism parts carry explicit factor structures."""

    __slots__ = ("alpha", "u", "v", "c", "sbar_minus", "sbar_plus")

    def __init__(self, alpha, u, v, c, sbar_minus, sbar_plus):
        if sbar_minus.side != LEFT or sbar_plus.side != RIGHT:
            raise DomainError("structures must be (left, right)")
        if sbar_minus.alpha != alpha or sbar_plus.alpha != alpha:
            raise DomainError("structures must share the map exponent")
        self.alpha = alpha
        self.u = u
        self.v = v
        self.c = c
        self.sbar_minus = sbar_minus
        self.sbar_plus = sbar_plus

    @classmethod
    def standard(cls, alpha, u, v, c, a, b, depth_cap=0):
        tl, tr = generate_time_set(a, b, depth_cap)
        return cls(
            alpha,
            u,
            v,
            c,
            PureStructure.zero(LEFT, alpha, tl),
            PureStructure.zero(RIGHT, alpha, tr),
        )

    def to_lorenz_map(self):
        return LorenzMap(
            self.alpha,
            self.u,
            self.v,
            self.c,
            self.sbar_minus.compose(),
            self.sbar_plus.compose(),
        )

    def mirror(self):
        return PureLorenzMap(
            self.alpha,
            self.v,
            self.u,
            1.0 - self.c,
            self.sbar_plus.mirror(),
            self.sbar_minus.mirror(),
        )

    def norm(self, kind="l1"):
        return max(self.sbar_minus.norm(kind), self.sbar_plus.norm(kind))

    def to_vector(self):
        """Coordinates [u, v, c, left factors..., right factors...]."""
        return np.concatenate(
            [[self.u, self.v, self.c], self.sbar_minus.values, self.sbar_plus.values]
        )

    def from_vector(self, x):
        """New map with this map's exponent and time sets, coordinates x."""
        x = np.asarray(x, dtype=float)
        nl = len(self.sbar_minus)
        if x.shape != (3 + nl + len(self.sbar_plus),):
            raise DomainError("coordinate vector has the wrong length")
        return PureLorenzMap(
            self.alpha,
            float(x[0]),
            float(x[1]),
            float(x[2]),
            self.sbar_minus.with_values(x[3 : 3 + nl]),
            self.sbar_plus.with_values(x[3 + nl :]),
        )

    def __repr__(self):
        return (
            f"PureLorenzMap(alpha={self.alpha}, u={self.u:.6g}, v={self.v:.6g}, "
            f"c={self.c:.6g}, n=({len(self.sbar_minus)},{len(self.sbar_plus)}))"
        )
