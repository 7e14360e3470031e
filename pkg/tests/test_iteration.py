import csv
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cat0rates.geodesic_space import ROOT, Ball, Box, Euclidean, EuclideanPoint, LegInterval, Spider, SpiderPoint
from cat0rates.iteration import (
    CSV_COLUMNS,
    TrajectoryTooShort,
    first_index_below,
    r_table,
    run_exact,
    run_inexact,
    write_csv,
)
from cat0rates.operators import Projection, ProxSqDist, apply
from cat0rates.schedules import ErrorSchedule, FiniteList, Geometric, Zero

E1, E2, S3 = Euclidean(1), Euclidean(2), Spider(3)
A, B = Projection(Box((0,), (1,))), Projection(Box((2,), (3,)))


def P(*c):
    return EuclideanPoint(c)


def two_intervals(N=10):
    return run_exact(E1, B, A, P(0), N)


def test_two_interval_hand_iteration():
    traj = two_intervals()
    assert [p.coords[0] for p in traj.points_y[:4]] == [2, 2, 2, 2]
    assert [p.coords[0] for p in traj.points_x[:4]] == [0, 1, 1, 1]
    assert traj.rx[:3] == [1, 0, 0]
    assert traj.rs[:3] == [1, 0, 0]


def test_trajectory_lengths():
    traj = two_intervals(7)
    assert traj.horizon == 7
    assert len(traj.points_x) == len(traj.points_y) == 8
    assert len(traj.rx) == len(traj.ry) == 7
    assert len(traj.rs) == 8


def test_fixed_start_gives_constant_trajectory():
    traj = run_exact(E1, B, A, P(1), 5)
    assert set(traj.rx) == {0} and set(traj.ry) == {0} and set(traj.rs) == {0}


def test_anchor_prox_is_constant():
    x0 = SpiderPoint(1, 2)
    op = ProxSqDist(x0, 3.0)
    traj = run_exact(S3, op, op, x0, 5)
    assert all(p == x0 for p in traj.points_x + traj.points_y)


def test_iteration_count_domain():
    with pytest.raises(ValueError):
        run_exact(E1, B, A, P(0), 0)


def test_operator_space_mismatch():
    with pytest.raises(Exception):
        run_exact(S3, B, A, ROOT, 3)


def test_residuals_recomputable():
    traj = run_exact(E2, Projection(Ball(P(0, 0), 1)), Projection(Box((1.5, -1), (3, 1))), P(-2, 2), 40)
    d = E2.distance
    for n in range(traj.horizon):
        assert abs(traj.rx[n] - d(traj.points_x[n], traj.points_x[n + 1])) <= 1e-12
        assert abs(traj.ry[n] - d(traj.points_y[n], traj.points_y[n + 1])) <= 1e-12
    for n, x in enumerate(traj.points_x):
        assert abs(traj.rs[n] - d(x, apply(E2, traj.S, x))) <= 1e-12


def _chain_ok(traj, tol=1e-9):
    for n in range(traj.horizon):
        assert traj.ry[n] <= traj.rx[n] + tol
        if n:
            assert traj.rx[n] <= traj.ry[n - 1] + tol


@settings(max_examples=60)
@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0.1, 3), st.floats(-3, 3))
def test_exact_chain_euclidean(x, y, r, shift):
    t1 = Projection(Ball(P(shift, 0), r))
    t2 = Projection(Box((-1, -1), (0, 1)))
    traj = run_exact(E2, t1, t2, P(x, y), 30)
    _chain_ok(traj)
    assert all(b <= a + 1e-9 for a, b in zip(traj.rx, traj.rx[1:]))


def test_exact_chain_spider(rng):
    for _ in range(30):
        t1 = Projection(LegInterval(int(rng.integers(3)), 0.5, 2))
        t2 = ProxSqDist(S3.random_point(rng, 3), float(rng.uniform(0.1, 3)))
        traj = run_exact(S3, t1, t2, S3.random_point(rng, 5), 40)
        _chain_ok(traj)


def test_fejer_two_intervals():
    traj = run_exact(E1, B, A, P(-3), 20)
    u = P(1)
    dist = [E1.distance(x, u) for x in traj.points_x]
    assert all(b <= a + 1e-9 for a, b in zip(dist, dist[1:]))


# --------------------------------------------------------------------------- inexact runs


def test_zero_schedule_matches_exact():
    exact = run_exact(E2, Projection(Ball(P(0, 0), 1)), ProxSqDist(P(3, 0), 1), P(4, 4), 25)
    inexact = run_inexact(E2, exact.t1, exact.t2, P(4, 4), ErrorSchedule(), 25, seed=3)
    assert inexact.points_x == exact.points_x and inexact.points_y == exact.points_y


def test_first_displacement_has_full_size():
    sched = ErrorSchedule(Geometric(F(1, 2), F(1, 2)), Geometric(F(1, 2), F(1, 2)))
    for space, t, x0 in ((E2, Projection(Ball(P(0, 0), 1)), P(3, 0)), (S3, Projection(LegInterval(0, 1, 2)), ROOT)):
        traj = run_inexact(space, t, t, x0, sched, 5, seed=11)
        assert space.distance(traj.points_y[0], apply(space, t, x0)) == pytest.approx(0.5, abs=1e-12)


def test_single_spike_replays_exact_iteration():
    sched = ErrorSchedule(FiniteList((1,)), Zero())
    traj = run_inexact(E1, B, A, P(0), sched, 10, seed=5)
    assert E1.distance(traj.points_y[0], P(2)) == pytest.approx(1)
    replay = run_exact(E1, B, A, apply(E1, A, traj.points_y[0]), 9)
    assert traj.points_x[1:] == replay.points_x


def test_error_bounds_hold_by_construction(rng):
    sched = ErrorSchedule(Geometric(F(1, 3), F(2, 3)), FiniteList((F(1, 2), F(1, 4))))
    for space, t1, t2 in (
        (E2, Projection(Ball(P(0, 0), 1)), ProxSqDist(P(2, 2), 1)),
        (S3, Projection(LegInterval(1, 0, 2)), ProxSqDist(SpiderPoint(2, 1), 2)),
    ):
        traj = run_inexact(space, t1, t2, space.random_point(rng, 3), sched, 30, seed=2)
        for n in range(traj.horizon):
            eps, delta = float(sched.eps.term(n)), float(sched.delta.term(n))
            assert space.distance(traj.points_y[n], apply(space, t1, traj.points_x[n])) <= eps + 1e-12
            assert space.distance(traj.points_x[n + 1], apply(space, t2, traj.points_y[n])) <= delta + 1e-12


def test_determinism_per_seed():
    sched = ErrorSchedule(Geometric(1, F(1, 2)), Geometric(1, F(1, 2)))
    a = run_inexact(E2, Projection(Ball(P(0, 0), 1)), ProxSqDist(P(3, 0), 1), P(4, 4), sched, 20, seed=9)
    b = run_inexact(E2, a.t1, a.t2, P(4, 4), sched, 20, seed=9)
    c = run_inexact(E2, a.t1, a.t2, P(4, 4), sched, 20, seed=10)
    assert a.points_x == b.points_x and a.rx == b.rx
    assert a.points_x != c.points_x


# --------------------------------------------------------------------------- helpers


@pytest.mark.parametrize("seq,eps,expected", [
    ((1, 0.4, 0.1), 0.5, 1),
    ((0, 0, 0), F(1, 1000), 0),
    ((1, 1, 1), 0.5, None),
])
def test_first_index_below(seq, eps, expected):
    assert first_index_below(seq, eps) == expected


def test_r_table():
    traj = two_intervals(20)
    r = r_table(traj, 5, 4)
    assert r.shape == (6, 5)
    assert np.all(r[:, 0] == 0)
    assert r[0, 1] == 0
    with pytest.raises(TrajectoryTooShort):
        r_table(traj, 15, 10)


def test_r_table_first_column_nonincreasing(rng):
    for _ in range(10):
        t1 = Projection(Ball(P(*rng.uniform(-2, 2, 2)), 1))
        t2 = Projection(Box((0, 0), (1, 1)))
        traj = run_exact(E2, t1, t2, P(*rng.uniform(-5, 5, 2)), 40)
        col = r_table(traj, 30, 5)[:, 1]
        assert np.all(np.diff(col) <= 1e-9)


def test_csv_export(tmp_path):
    sched = ErrorSchedule(Geometric(F(1, 4), F(1, 2)), Zero())
    traj = run_inexact(E1, B, A, P(0), sched, 6, seed=1)
    path = tmp_path / "t.csv"
    write_csv(traj, path)
    rows = list(csv.reader(path.open()))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert len(rows) == 1 + traj.horizon
    first = dict(zip(rows[0], rows[1]))
    assert float(first["eps_n"]) == 0.25 and float(first["gamma_n"]) == 0.25
    assert float(first["rx"]) == traj.rx[0]
    write_csv(traj, tmp_path / "u.csv")
    assert (tmp_path / "u.csv").read_text() == path.read_text()
