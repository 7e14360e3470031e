"""Scenario files: JSON descriptions of a space, two operators, a start
point, an error schedule and the certificates to check."""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

import jsonschema

from .geodesic_space import (
    Ball,
    Box,
    Euclidean,
    LegInterval,
    MalformedPointError,
    Point,
    Region,
    Space,
    Spider,
    as_point,
)
from .iteration import Trajectory, run_exact, run_inexact
from .operators import (
    Abs,
    Composition,
    FunctionSpec,
    HalfSqDist,
    Indicator,
    ObjectiveSpec,
    OperatorSpec,
    Projection,
    ProxSqDist,
    SoftThreshold,
    UnsupportedOperatorError,
    apply,
    resolvent_of,
)
from .rate_calculus import Counterfunction, counterfunction_from_str
from .schedules import ErrorSchedule, parse_rational, sequence_from_json

FIXTURE_ENV = "CAT0RATES_FIXTURES"
FIXED_POINT_TOL = 1e-9
TWICE_DISTANCE, DISTANCE = "twice_distance", "distance"


class ScenarioError(ValueError):
    """Schema or invariant violation while loading a scenario."""


@dataclass
class Scenario:
    id: str
    space: Space
    t1: OperatorSpec
    t2: OperatorSpec
    x0: Point
    horizon: int
    b: Fraction
    b_convention: str
    fixed_point_u: Point | None = None
    schedule: ErrorSchedule = field(default_factory=ErrorSchedule)
    seed: int = 0
    region: Region | None = None
    eps_list: list[Fraction] = field(default_factory=list)
    metastability: list[tuple[int, Counterfunction]] = field(default_factory=list)
    objective: ObjectiveSpec | None = None
    description: str = ""

    @property
    def exact(self) -> bool:
        return self.schedule.is_zero

    def b_for(self, convention: str) -> Fraction:
        """b under the requested convention: 2d(x0,u) <= b or d(x0,u) <= b."""
        if convention == self.b_convention:
            return self.b
        return self.b / 2 if self.b_convention == TWICE_DISTANCE else self.b * 2

    def run(self) -> Trajectory:
        if self.exact:
            return run_exact(self.space, self.t1, self.t2, self.x0, self.horizon, self.id)
        return run_inexact(self.space, self.t1, self.t2, self.x0, self.schedule, self.horizon, self.seed, self.id)


# --------------------------------------------------------------------------- parsing


def _space(spec) -> Space:
    return Euclidean(spec["euclidean"]) if "euclidean" in spec else Spider(spec["spider"])


def _region(spec) -> Region:
    if "box" in spec:
        return Box(tuple(spec["box"]["lo"]), tuple(spec["box"]["hi"]))
    if "ball" in spec:
        return Ball(as_point(spec["ball"]["center"]), float(spec["ball"]["radius"]))
    li = spec["leg_interval"]
    return LegInterval(li["leg"], float(li["r_lo"]), float(li["r_hi"]))


def _function(spec) -> FunctionSpec:
    if spec == "abs":
        return Abs()
    if "indicator" in spec:
        return Indicator(_region(spec["indicator"]))
    return HalfSqDist(as_point(spec["half_sq_dist"]))


def _operator(spec) -> OperatorSpec:
    if "projection" in spec:
        return Projection(_region(spec["projection"]))
    if "prox_sq_dist" in spec:
        p = spec["prox_sq_dist"]
        return ProxSqDist(as_point(p["anchor"]), float(parse_rational(p["lambda"])))
    if "soft_threshold" in spec:
        return SoftThreshold(float(parse_rational(spec["soft_threshold"]["lambda"])))
    c = spec["composition"]
    return Composition(_operator(c["first"]), _operator(c["second"]))


def _schema() -> dict:
    return json.loads(resources.files(__package__).joinpath("scenario.schema.json").read_text())


def parse_scenario(data: dict) -> Scenario:
    """Validate a decoded scenario document and build the Scenario."""
    validator = jsonschema.Draft202012Validator(_schema())
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ScenarioError(f"schema violation at {where}: {e.message}")

    sid = data["id"]
    try:
        space = _space(data["space"])
        objective = None
        if "objective" in data:
            o = data["objective"]
            objective = ObjectiveSpec(_function(o["f"]), _function(o["g"]), float(parse_rational(o["lambda"])))
        if "T1" in data and "T2" in data:
            t1, t2 = _operator(data["T1"]), _operator(data["T2"])
        elif objective is not None:
            # y_n = J^g x_n, x_{n+1} = J^f y_n
            t1, t2 = resolvent_of(objective.g, objective.lam), resolvent_of(objective.f, objective.lam)
        else:
            raise ScenarioError(f"{sid}: give T1 and T2, or an objective to derive them from")
        x0 = space.check(as_point(data["x0"]))
        u = space.check(as_point(data["fixed_point_u"])) if "fixed_point_u" in data else None
        sched = data.get("schedule", {})
        schedule = ErrorSchedule(sequence_from_json(sched.get("eps")), sequence_from_json(sched.get("delta")))
        eps_list = [parse_rational(e) for e in data.get("eps_list", [])]
        region = _region(data["region"]) if "region" in data else None
        meta = [(m["k"], counterfunction_from_str(m["g"])) for m in data.get("metastability", [])]
    except (ValueError, MalformedPointError, KeyError) as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(f"{sid}: {exc}") from exc
    if any(e <= 0 for e in eps_list):
        raise ScenarioError(f"{sid}: eps_list entries must be positive")

    try:
        apply(space, t1, x0)
        apply(space, t2, apply(space, t1, x0))
    except (UnsupportedOperatorError, MalformedPointError, ValueError) as exc:
        raise ScenarioError(f"{sid}: operators do not apply on {space!r}: {exc}") from exc

    convention = data.get("b_convention", TWICE_DISTANCE if schedule.is_zero else DISTANCE)
    if u is not None:
        drift = space.distance(u, apply(space, t2, apply(space, t1, u)))
        if drift > FIXED_POINT_TOL:
            raise ScenarioError(f"{sid}: fixed_point_u is not fixed by T2 o T1 (d(u,Su)={drift:.3g})")
    if "b" in data:
        b = parse_rational(data["b"])
        if b <= 0:
            raise ScenarioError(f"{sid}: b must be positive")
    elif u is not None:
        d0 = math.ceil(space.distance(x0, u))
        b = Fraction(max(1, 2 * d0 if convention == TWICE_DISTANCE else d0))
    else:
        raise ScenarioError(f"{sid}: need b or fixed_point_u")
    if u is not None:
        need = (2 if convention == TWICE_DISTANCE else 1) * space.distance(x0, u)
        if need > float(b) + FIXED_POINT_TOL:
            raise ScenarioError(f"{sid}: b={b} violates the {convention} convention (needs {need:.6g})")

    return Scenario(
        id=sid, space=space, t1=t1, t2=t2, x0=x0, horizon=data["horizon"], b=b, b_convention=convention,
        fixed_point_u=u, schedule=schedule, seed=data.get("seed", 0), region=region, eps_list=eps_list,
        metastability=meta, objective=objective, description=data.get("description", ""),
    )


def fixture_dir() -> Path:
    env = os.environ.get(FIXTURE_ENV)
    if env:
        return Path(env)
    return Path(str(resources.files(__package__).joinpath("fixtures")))


def resolve_path(name: str | os.PathLike) -> Path:
    """A scenario path as given, or a bundled fixture by file name or id."""
    p = Path(name)
    if p.exists():
        return p
    for candidate in (fixture_dir() / p.name, fixture_dir() / f"{p.name}.json"):
        if candidate.exists():
            return candidate
    raise FileNotFoundError(f"no scenario file {name!s} (searched {fixture_dir()})")


def load_scenario(path: str | os.PathLike) -> Scenario:
    path = resolve_path(path)
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON: {exc}") from exc
    return parse_scenario(data)


def bundled_scenarios() -> list[Path]:
    return sorted(fixture_dir().glob("*.json"))
