"""CAT(0) space models: Euclidean space and the spider (a star-shaped R-tree).

Both models have closed-form distances and geodesics, so every geometric
quantity used downstream is a finite composition of ``sqrt``, ``+`` and ``*``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import numpy as np

# Absolute tolerance for geometric comparisons; scaled by input magnitude where noted.
GEOM_TOL = 1e-9


class MalformedPointError(ValueError):
    """Point does not belong to the space (wrong dimension, bad leg id, negative radius)."""


class UnsupportedRegionError(ValueError):
    """Region/space combination has no closed form here."""


# --------------------------------------------------------------------------- points


@dataclass(frozen=True)
class EuclideanPoint:
    coords: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(float(c) for c in self.coords))


@dataclass(frozen=True)
class SpiderPoint:
    """Point at distance ``radius`` from the root along leg ``leg``.

    Radius-0 points are canonicalized to leg 0, so the root has one representation.
    """

    leg: int
    radius: float

    def __post_init__(self):
        r = float(self.radius)
        if r < 0 or math.isnan(r):
            raise MalformedPointError(f"spider radius must be >= 0, got {self.radius}")
        object.__setattr__(self, "radius", r)
        object.__setattr__(self, "leg", 0 if r == 0.0 else int(self.leg))


Point = Union[EuclideanPoint, SpiderPoint]

ROOT = SpiderPoint(0, 0.0)


def as_point(value) -> Point:
    """Coerce a list of numbers or a ``{"leg", "radius"}`` mapping into a point."""
    if isinstance(value, (EuclideanPoint, SpiderPoint)):
        return value
    if isinstance(value, dict):
        return SpiderPoint(int(value["leg"]), float(Fraction(str(value["radius"]))))
    if isinstance(value, (int, float, Fraction)):
        return EuclideanPoint((float(value),))
    return EuclideanPoint(tuple(float(Fraction(str(v))) for v in value))


def point_to_json(p: Point):
    if isinstance(p, SpiderPoint):
        return {"leg": p.leg, "radius": p.radius}
    return list(p.coords)


# --------------------------------------------------------------------------- spaces


@dataclass(frozen=True)
class Euclidean:
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("Euclidean dimension must be positive")

    def check(self, p: Point) -> EuclideanPoint:
        if not isinstance(p, EuclideanPoint) or len(p.coords) != self.dim:
            raise MalformedPointError(f"{p!r} is not a point of R^{self.dim}")
        return p

    def distance(self, p: Point, q: Point) -> float:
        return math.dist(self.check(p).coords, self.check(q).coords)

    def geodesic_point(self, p: Point, q: Point, t: float) -> EuclideanPoint:
        a, b = self.check(p).coords, self.check(q).coords
        if t == 0:
            return p
        if t == 1:
            return q
        return EuclideanPoint(tuple((1 - t) * x + t * y for x, y in zip(a, b)))

    def random_point(self, rng: np.random.Generator, scale: float = 1.0) -> EuclideanPoint:
        return EuclideanPoint(tuple(rng.uniform(-scale, scale, self.dim)))

    def displace(self, p: Point, length: float, rng: np.random.Generator) -> EuclideanPoint:
        """Move ``p`` by exactly ``length`` along a uniformly random direction."""
        self.check(p)
        if length == 0:
            return p
        direction = rng.standard_normal(self.dim)
        direction /= np.linalg.norm(direction)
        return EuclideanPoint(tuple(c + length * d for c, d in zip(p.coords, direction)))


@dataclass(frozen=True)
class Spider:
    """``legs`` copies of [0, inf) glued at 0."""

    legs: int

    def __post_init__(self):
        if self.legs < 1:
            raise ValueError("a spider needs at least one leg")

    def check(self, p: Point) -> SpiderPoint:
        if not isinstance(p, SpiderPoint) or not 0 <= p.leg < self.legs:
            raise MalformedPointError(f"{p!r} is not a point of a {self.legs}-leg spider")
        return p

    def distance(self, p: Point, q: Point) -> float:
        p, q = self.check(p), self.check(q)
        if p.leg == q.leg or p.radius == 0 or q.radius == 0:
            return abs(p.radius - q.radius)
        return p.radius + q.radius

    def geodesic_point(self, p: Point, q: Point, t: float) -> SpiderPoint:
        p, q = self.check(p), self.check(q)
        if t == 0:
            return p
        if t == 1:
            return q
        if p.leg == q.leg or p.radius == 0 or q.radius == 0:
            leg = p.leg if p.radius > 0 else q.leg
            return SpiderPoint(leg, (1 - t) * p.radius + t * q.radius)
        # path runs down p's leg, through the root, then up q's leg
        s = t * (p.radius + q.radius)
        if s <= p.radius:
            return SpiderPoint(p.leg, p.radius - s)
        return SpiderPoint(q.leg, s - p.radius)

    def random_point(self, rng: np.random.Generator, scale: float = 1.0) -> SpiderPoint:
        if rng.random() < 0.05:
            return ROOT
        return SpiderPoint(int(rng.integers(self.legs)), float(rng.uniform(0, scale)))

    def displace(self, p: Point, length: float, rng: np.random.Generator) -> SpiderPoint:
        """Move ``p`` by exactly ``length`` toward a random leg.

        Walks the geodesic from ``p`` to a target on a random leg that lies
        farther than ``length`` away, and stops after ``length``.
        """
        p = self.check(p)
        if length == 0:
            return p
        leg = int(rng.integers(self.legs))
        extra = 1.0 + float(rng.random())
        if leg == p.leg and p.radius > 0:
            target = SpiderPoint(leg, p.radius + length + extra)
        else:
            target = SpiderPoint(leg, length + extra)
        total = self.distance(p, target)
        return self.geodesic_point(p, target, length / total)


Space = Union[Euclidean, Spider]


def distance(space: Space, p: Point, q: Point) -> float:
    return space.distance(p, q)


def geodesic_point(space: Space, p: Point, q: Point, t: float) -> Point:
    """The point ``(1-t)p + tq`` on the geodesic from ``p`` to ``q``."""
    if not 0 <= t <= 1:
        raise ValueError(f"geodesic parameter must lie in [0, 1], got {t}")
    return space.geodesic_point(p, q, t)


def check_cat0_quadruple(space: Space, x: Point, y: Point, u: Point, v: Point, tol: float = 0.0) -> float:
    """RHS minus LHS of the four-point CAT(0) inequality.

    d(x,y)^2 + d(u,v)^2 <= d(x,v)^2 + d(y,u)^2 + 2 d(x,u) d(y,v).
    ``tol`` is accepted for symmetry with the other checkers; the caller decides
    what counts as a violation.
    """
    d = space.distance
    lhs = d(x, y) ** 2 + d(u, v) ** 2
    rhs = d(x, v) ** 2 + d(y, u) ** 2 + 2 * d(x, u) * d(y, v)
    return rhs - lhs


# --------------------------------------------------------------------------- regions


@dataclass(frozen=True)
class Box:
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "lo", tuple(float(v) for v in self.lo))
        object.__setattr__(self, "hi", tuple(float(v) for v in self.hi))
        if len(self.lo) != len(self.hi) or any(a > b for a, b in zip(self.lo, self.hi)):
            raise ValueError(f"invalid box bounds {self.lo} .. {self.hi}")


@dataclass(frozen=True)
class Ball:
    center: Point
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")


@dataclass(frozen=True)
class LegInterval:
    """Points ``(leg, r)`` of a spider with ``r_lo <= r <= r_hi``."""

    leg: int
    r_lo: float
    r_hi: float

    def __post_init__(self):
        if not 0 <= self.r_lo <= self.r_hi:
            raise ValueError(f"invalid leg interval [{self.r_lo}, {self.r_hi}]")


Region = Union[Box, Ball, LegInterval]


def contains(space: Space, region: Region, p: Point, tol: float = GEOM_TOL) -> bool:
    if isinstance(region, Box):
        if not isinstance(space, Euclidean) or len(region.lo) != space.dim:
            raise UnsupportedRegionError("box regions need a Euclidean space of matching dimension")
        c = space.check(p).coords
        return all(lo - tol <= x <= hi + tol for x, lo, hi in zip(c, region.lo, region.hi))
    if isinstance(region, Ball):
        return space.distance(region.center, p) <= region.radius + tol
    if isinstance(region, LegInterval):
        if not isinstance(space, Spider):
            raise UnsupportedRegionError("leg intervals live in spider spaces")
        p = space.check(p)
        on_leg = p.leg == region.leg or p.radius <= tol
        return on_leg and region.r_lo - tol <= p.radius <= region.r_hi + tol
    raise UnsupportedRegionError(f"unknown region {region!r}")


def sample_region(space: Space, region: Region, rng: np.random.Generator) -> Point:
    """A random point of ``region`` (not uniform for balls; any spread works for the checks)."""
    if isinstance(region, Box):
        return EuclideanPoint(tuple(rng.uniform(region.lo, region.hi)))
    if isinstance(region, LegInterval):
        return SpiderPoint(region.leg, float(rng.uniform(region.r_lo, region.r_hi)))
    if isinstance(region, Ball):
        q = space.random_point(rng, scale=region.radius)
        t = min(1.0, region.radius * float(rng.random()) / max(space.distance(region.center, q), 1e-300))
        return space.geodesic_point(region.center, q, t)
    raise UnsupportedRegionError(f"unknown region {region!r}")


def _ceil_times_sqrt(x: Fraction, d: int) -> int:
    """Exact ceil(x * sqrt(d)) for x >= 0."""
    if x <= 0:
        return 0
    sq = x * x * d
    m = math.isqrt(sq.numerator // sq.denominator)
    while Fraction(m * m) < sq:
        m += 1
    return m


def tb_modulus(region: Region, k: int, space: Space | None = None) -> int:
    """Cell count of a partition of ``region`` into pieces of diameter <= 1/(k+1).

    Among any ``tb_modulus(region, k) + 1`` points of the region two share a
    cell, hence lie within 1/(k+1) of each other.  ``space`` is only needed for
    balls in a spider (to know the number of legs).
    """
    if k < 0:
        raise ValueError("k must be a nonnegative integer")
    if isinstance(region, Ball) and isinstance(region.center, EuclideanPoint):
        c = region.center.coords
        region = Box(tuple(x - region.radius for x in c), tuple(x + region.radius for x in c))
    if isinstance(region, Box):
        d = len(region.lo)
        count = 1
        for lo, hi in zip(region.lo, region.hi):
            side = Fraction(hi) - Fraction(lo)
            count *= max(1, _ceil_times_sqrt(side * (k + 1), d))
        return count
    if isinstance(region, LegInterval):
        legs, reach = 1, Fraction(region.r_hi)
    elif isinstance(region, Ball):
        if not isinstance(space, Spider):
            raise UnsupportedRegionError("a spider ball needs the spider space to count legs")
        legs, reach = space.legs, Fraction(region.center.radius) + Fraction(region.radius)
    else:
        raise UnsupportedRegionError(f"no total-boundedness modulus for {region!r}")
    return legs * math.ceil(2 * reach * (k + 1)) + 1
