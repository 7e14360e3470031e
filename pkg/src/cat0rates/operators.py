"""Firmly nonexpansive operators with closed forms, their property checkers,
and the coupled objective f(x) + g(y) + d(x, y)^2 / (2 lambda)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Union

from .geodesic_space import (
    Ball,
    Box,
    Euclidean,
    EuclideanPoint,
    LegInterval,
    Point,
    Region,
    Space,
    Spider,
    SpiderPoint,
    UnsupportedRegionError,
    contains,
)

FIRMLY_NONEXPANSIVE = "firmly_nonexpansive"
P2_ONLY = "p2_only"
NONEXPANSIVE = "nonexpansive"


class UnsupportedOperatorError(ValueError):
    """Operator cannot be evaluated on the given space."""


@dataclass(frozen=True)
class Projection:
    region: Region
    claimed_class: str = FIRMLY_NONEXPANSIVE


@dataclass(frozen=True)
class ProxSqDist:
    """Resolvent of z -> d(z, anchor)^2 / 2 with parameter ``lam``."""

    anchor: Point
    lam: float
    claimed_class: str = FIRMLY_NONEXPANSIVE

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("prox parameter must be positive")


@dataclass(frozen=True)
class SoftThreshold:
    """Resolvent of the l1 norm (Euclidean only)."""

    lam: float
    claimed_class: str = FIRMLY_NONEXPANSIVE

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("threshold must be positive")


@dataclass(frozen=True)
class Composition:
    """``second`` applied after ``first``."""

    first: "OperatorSpec"
    second: "OperatorSpec"
    claimed_class: str = NONEXPANSIVE


OperatorSpec = Union[Projection, ProxSqDist, SoftThreshold, Composition]


def _project(space: Space, region: Region, p: Point) -> Point:
    if isinstance(space, Euclidean):
        c = space.check(p).coords
        if isinstance(region, Box):
            if len(region.lo) != space.dim:
                raise UnsupportedRegionError("box dimension does not match the space")
            return EuclideanPoint(tuple(min(max(x, lo), hi) for x, lo, hi in zip(c, region.lo, region.hi)))
        if isinstance(region, Ball):
            center = space.check(region.center).coords
            dist = math.dist(c, center)
            if dist <= region.radius:
                return p
            s = region.radius / dist
            return EuclideanPoint(tuple(a + s * (x - a) for x, a in zip(c, center)))
    if isinstance(space, Spider):
        p = space.check(p)
        if isinstance(region, LegInterval):
            if p.leg == region.leg or p.radius == 0:
                return SpiderPoint(region.leg, min(max(p.radius, region.r_lo), region.r_hi))
            # from another leg the nearest member sits at the bottom of the interval
            return SpiderPoint(region.leg, region.r_lo)
        if isinstance(region, Ball) and space.check(region.center).radius == 0:
            return SpiderPoint(p.leg, min(p.radius, region.radius))
    raise UnsupportedOperatorError(f"no closed-form projection onto {region!r} in {space!r}")


def apply(space: Space, op: OperatorSpec, p: Point) -> Point:
    if isinstance(op, Projection):
        return _project(space, op.region, p)
    if isinstance(op, ProxSqDist):
        # minimizer of d(z,a)^2/2 + d(p,z)^2/(2 lam) lies on [p, a] at fraction lam/(1+lam)
        return space.geodesic_point(p, space.check(op.anchor), op.lam / (1 + op.lam))
    if isinstance(op, SoftThreshold):
        if not isinstance(space, Euclidean):
            raise UnsupportedOperatorError("soft thresholding needs a Euclidean space")
        c = space.check(p).coords
        return EuclideanPoint(tuple(math.copysign(max(abs(x) - op.lam, 0.0), x) for x in c))
    if isinstance(op, Composition):
        return apply(space, op.second, apply(space, op.first, p))
    raise UnsupportedOperatorError(f"unknown operator {op!r}")


def check_firmly_nonexpansive(space: Space, op: OperatorSpec, p: Point, q: Point,
                              lambda_samples: Iterable[float]) -> float:
    """Smallest slack of d((1-l)p + l Tp, (1-l)q + l Tq) - d(Tp, Tq) over the samples."""
    tp, tq = apply(space, op, p), apply(space, op, q)
    base = space.distance(tp, tq)
    worst = math.inf
    for lam in lambda_samples:
        if not 0 <= lam <= 1:
            raise ValueError(f"lambda sample {lam} outside [0, 1]")
        a = space.geodesic_point(p, tp, lam)
        b = space.geodesic_point(q, tq, lam)
        worst = min(worst, space.distance(a, b) - base)
    return worst


def check_p2(space: Space, op: OperatorSpec, p: Point, q: Point) -> float:
    """RHS minus LHS of 2d(Tp,Tq)^2 <= d(p,Tq)^2 + d(q,Tp)^2 - d(p,Tp)^2 - d(q,Tq)^2."""
    d = space.distance
    tp, tq = apply(space, op, p), apply(space, op, q)
    lhs = 2 * d(tp, tq) ** 2
    rhs = d(p, tq) ** 2 + d(q, tp) ** 2 - d(p, tp) ** 2 - d(q, tq) ** 2
    return rhs - lhs


# --------------------------------------------------------------------------- objective


@dataclass(frozen=True)
class Indicator:
    region: Region


@dataclass(frozen=True)
class HalfSqDist:
    anchor: Point


@dataclass(frozen=True)
class Abs:
    """The l1 norm."""


FunctionSpec = Union[Indicator, HalfSqDist, Abs]


@dataclass(frozen=True)
class ObjectiveSpec:
    f: FunctionSpec
    g: FunctionSpec
    lam: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lambda must be positive")


def function_value(space: Space, fn: FunctionSpec, x: Point) -> float:
    if isinstance(fn, Indicator):
        return 0.0 if contains(space, fn.region, x) else math.inf
    if isinstance(fn, HalfSqDist):
        return 0.5 * space.distance(x, fn.anchor) ** 2
    if isinstance(fn, Abs):
        if not isinstance(space, Euclidean):
            raise UnsupportedOperatorError("the l1 norm needs a Euclidean space")
        return float(sum(abs(c) for c in space.check(x).coords))
    raise UnsupportedOperatorError(f"unknown function {fn!r}")


def objective_value(space: Space, obj: ObjectiveSpec, x: Point, y: Point) -> float:
    """f(x) + g(y) + d(x, y)^2 / (2 lambda); +inf when an indicator is violated."""
    fx = function_value(space, obj.f, x)
    gy = function_value(space, obj.g, y)
    if math.isinf(fx) or math.isinf(gy):
        return math.inf
    return fx + gy + space.distance(x, y) ** 2 / (2 * obj.lam)


def resolvent_of(fn: FunctionSpec, lam: float) -> OperatorSpec:
    if isinstance(fn, Indicator):
        return Projection(fn.region)
    if isinstance(fn, HalfSqDist):
        return ProxSqDist(fn.anchor, lam)
    if isinstance(fn, Abs):
        return SoftThreshold(lam)
    raise UnsupportedOperatorError(f"no closed-form resolvent for {fn!r}")


def prox_objective(space: Space, fn: FunctionSpec, lam: float, x: Point, z: Point) -> float:
    """The quantity minimized by the resolvent: f(z) + d(x, z)^2 / (2 lambda)."""
    return function_value(space, fn, z) + space.distance(x, z) ** 2 / (2 * lam)
