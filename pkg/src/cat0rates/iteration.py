"""The alternating iteration y_n = T1 x_n, x_{n+1} = T2 y_n, exact or with
injected errors, and the residual sequences it produces."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .geodesic_space import Point, Space
from .operators import Composition, OperatorSpec, apply
from .schedules import ErrorSchedule

# recorded displacements may exceed the requested length by float rounding only
DISPLACEMENT_TOL = 1e-12

CSV_COLUMNS = ("n", "rx", "ry", "rs", "eps_n", "delta_n", "gamma_n")


class TrajectoryTooShort(ValueError):
    pass


@dataclass
class Trajectory:
    """x_0..x_N, y_0..y_N and the residuals between them.

    rx[n] = d(x_n, x_{n+1}) and ry[n] = d(y_n, y_{n+1}) for n < N;
    rs[n] = d(x_n, S x_n) for n <= N, with S = T2 o T1 evaluated exactly.
    """

    space: Space
    t1: OperatorSpec
    t2: OperatorSpec
    points_x: list[Point]
    points_y: list[Point]
    rx: list[float]
    ry: list[float]
    rs: list[float]
    seed: int | None = None
    scenario_id: str = ""
    schedule: ErrorSchedule = field(default_factory=ErrorSchedule)

    @property
    def horizon(self) -> int:
        return len(self.points_x) - 1

    @property
    def exact(self) -> bool:
        return self.schedule.is_zero

    @property
    def S(self) -> Composition:
        return Composition(self.t1, self.t2)

    @property
    def S_prime(self) -> Composition:
        return Composition(self.t2, self.t1)


def _residuals(space: Space, t1, t2, xs: list[Point], ys: list[Point]):
    d = space.distance
    rx = [d(a, b) for a, b in zip(xs, xs[1:])]
    ry = [d(a, b) for a, b in zip(ys, ys[1:])]
    rs = [d(x, apply(space, t2, apply(space, t1, x))) for x in xs]
    return rx, ry, rs


def run_exact(space: Space, t1: OperatorSpec, t2: OperatorSpec, x0: Point, N: int,
              scenario_id: str = "") -> Trajectory:
    if N < 1:
        raise ValueError("iteration count must be at least 1")
    space.check(x0)
    xs, ys = [x0], []
    for _ in range(N):
        y = apply(space, t1, xs[-1])
        ys.append(y)
        xs.append(apply(space, t2, y))
    ys.append(apply(space, t1, xs[-1]))
    rx, ry, rs = _residuals(space, t1, t2, xs, ys)
    return Trajectory(space, t1, t2, xs, ys, rx, ry, rs, None, scenario_id)


def run_inexact(space: Space, t1: OperatorSpec, t2: OperatorSpec, x0: Point, schedule: ErrorSchedule,
                N: int, seed: int = 0, scenario_id: str = "") -> Trajectory:
    """Every y_n and x_{n+1} is displaced from the exact image by the full
    allowed error, in a direction drawn from ``np.random.default_rng(seed)``."""
    if N < 1:
        raise ValueError("iteration count must be at least 1")
    space.check(x0)
    rng = np.random.default_rng(seed)
    d = space.distance
    xs, ys = [x0], []

    def perturbed(exact_point: Point, budget: Fraction) -> Point:
        length = float(budget)
        p = space.displace(exact_point, length, rng)
        assert d(p, exact_point) <= length + DISPLACEMENT_TOL, "displacement overshoots its error budget"
        return p

    for n in range(N):
        y = perturbed(apply(space, t1, xs[-1]), schedule.eps.term(n))
        ys.append(y)
        xs.append(perturbed(apply(space, t2, y), schedule.delta.term(n)))
    ys.append(perturbed(apply(space, t1, xs[-1]), schedule.eps.term(N)))
    rx, ry, rs = _residuals(space, t1, t2, xs, ys)
    return Trajectory(space, t1, t2, xs, ys, rx, ry, rs, seed, scenario_id, schedule)


def first_index_below(seq: Sequence[float], eps) -> int | None:
    """Smallest n with seq[n] <= eps, or None within the record."""
    bound = float(eps)
    for n, v in enumerate(seq):
        if v <= bound:
            return n
    return None


def r_table(traj: Trajectory, n_max: int, k_max: int) -> np.ndarray:
    """r[n, k] = d(y_n, y_{n+k}) for n <= n_max, k <= k_max."""
    ys = traj.points_y
    if len(ys) < n_max + k_max + 1:
        raise TrajectoryTooShort(f"need {n_max + k_max + 1} y-points, have {len(ys)}")
    d = traj.space.distance
    r = np.zeros((n_max + 1, k_max + 1))
    for n in range(n_max + 1):
        for k in range(1, k_max + 1):
            r[n, k] = d(ys[n], ys[n + k])
    return r


def write_csv(traj: Trajectory, path) -> None:
    sched = traj.schedule
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for n in range(traj.horizon):
            eps, delta = sched.eps.term(n), sched.delta.term(n)
            row = (traj.rx[n], traj.ry[n], traj.rs[n], float(eps), float(delta), float(eps + delta))
            w.writerow([n, *(f"{v:.17g}" for v in row)])
