import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cat0rates.geodesic_space import ROOT, Ball, Box, Euclidean, EuclideanPoint, LegInterval, Spider, SpiderPoint
from cat0rates.operators import (
    FIRMLY_NONEXPANSIVE,
    NONEXPANSIVE,
    Abs,
    Composition,
    HalfSqDist,
    Indicator,
    ObjectiveSpec,
    Projection,
    ProxSqDist,
    SoftThreshold,
    UnsupportedOperatorError,
    apply,
    check_firmly_nonexpansive,
    check_p2,
    objective_value,
    prox_objective,
    resolvent_of,
)

E1, E2, S3 = Euclidean(1), Euclidean(2), Spider(3)
LAMBDAS = [0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0]


def P(*c):
    return EuclideanPoint(c)


EUCLIDEAN_CATALOG = [
    Projection(Box((0, -1), (2, 1))),
    Projection(Ball(P(1, 1), 1.5)),
    ProxSqDist(P(3, -1), 0.5),
    ProxSqDist(P(0, 0), 4.0),
    SoftThreshold(0.7),
]
SPIDER_CATALOG = [
    Projection(LegInterval(0, 1, 3)),
    Projection(LegInterval(2, 0, 0.5)),
    Projection(Ball(ROOT, 1.2)),
    ProxSqDist(SpiderPoint(1, 2), 1.0),
    ProxSqDist(ROOT, 0.3),
]


# --------------------------------------------------------------------------- closed forms


def test_ball_projection_is_radial():
    assert apply(E2, Projection(Ball(P(0, 0), 1)), P(2, 0)) == P(1, 0)


def test_prox_on_line():
    assert apply(E1, ProxSqDist(P(3), 1), P(1)) == P(2)


def test_spider_prox_crosses_root():
    assert apply(S3, ProxSqDist(SpiderPoint(1, 2), 1), SpiderPoint(0, 2)) == ROOT


def test_leg_interval_projection_routes_through_root():
    op = Projection(LegInterval(1, 0.5, 2))
    assert apply(S3, op, SpiderPoint(0, 4)) == SpiderPoint(1, 0.5)
    assert apply(S3, op, SpiderPoint(1, 4)) == SpiderPoint(1, 2)
    assert apply(S3, op, SpiderPoint(1, 1)) == SpiderPoint(1, 1)


def test_soft_threshold():
    assert apply(E2, SoftThreshold(1), P(3, -0.5)) == P(2, 0)
    assert apply(E2, SoftThreshold(1), P(-3, 0.5)) == P(-2, 0)


def test_composition_order():
    op = Composition(Projection(Box((2,), (3,))), ProxSqDist(P(0), 1))
    # first project 0 -> 2, then halfway to 0
    assert apply(E1, op, P(0)) == P(1)
    assert op.claimed_class == NONEXPANSIVE


def test_claimed_classes():
    for op in EUCLIDEAN_CATALOG + SPIDER_CATALOG:
        assert op.claimed_class == FIRMLY_NONEXPANSIVE


def test_unsupported_pairings():
    with pytest.raises(UnsupportedOperatorError):
        apply(S3, SoftThreshold(1), ROOT)
    with pytest.raises(UnsupportedOperatorError):
        apply(S3, Projection(Ball(SpiderPoint(0, 1), 0.5)), ROOT)
    with pytest.raises(ValueError):
        ProxSqDist(ROOT, 0)


# --------------------------------------------------------------------------- checkers


def test_fne_checker_hand_value():
    op = Projection(Ball(P(0, 0), 1))
    assert check_firmly_nonexpansive(E2, op, P(2, 0), P(0, 0), [0.5]) == pytest.approx(0.5)


def test_fne_checker_lambda_one_is_zero():
    op = Projection(Ball(P(0, 0), 1))
    assert check_firmly_nonexpansive(E2, op, P(2, 3), P(-1, 0.2), [1.0]) == pytest.approx(0, abs=1e-15)


def test_fne_checker_fixed_input():
    op = ProxSqDist(P(1, 1), 2)
    assert check_firmly_nonexpansive(E2, op, P(1, 1), P(1, 1), LAMBDAS) == 0


def test_fne_checker_rejects_bad_lambda():
    with pytest.raises(ValueError):
        check_firmly_nonexpansive(E1, ProxSqDist(P(0), 1), P(1), P(2), [1.5])


def test_p2_equal_arguments():
    assert check_p2(E2, Projection(Ball(P(0, 0), 1)), P(3, 1), P(3, 1)) == pytest.approx(0, abs=1e-12)


def test_p2_ball_hand_value():
    assert check_p2(E2, Projection(Ball(P(0, 0), 1)), P(2, 0), P(0, 0)) == pytest.approx(2)


def test_p2_prox_hand_value():
    assert check_p2(E1, ProxSqDist(P(0), 1), P(2), P(-2)) == pytest.approx(8)


def _sample_pairs(space, rng, n, scale=5.0):
    return [(space.random_point(rng, scale), space.random_point(rng, scale)) for _ in range(n)]


@pytest.mark.parametrize("space,catalog", [(E2, EUCLIDEAN_CATALOG), (S3, SPIDER_CATALOG)])
def test_catalog_is_firmly_nonexpansive(space, catalog, rng):
    pairs = _sample_pairs(space, rng, 1000)
    for op in catalog:
        for p, q in pairs:
            assert check_firmly_nonexpansive(space, op, p, q, LAMBDAS) >= -1e-9
            assert check_p2(space, op, p, q) >= -1e-9
            assert space.distance(apply(space, op, p), apply(space, op, q)) <= space.distance(p, q) + 1e-9


def test_compositions_are_nonexpansive(rng):
    for space, catalog in ((E2, EUCLIDEAN_CATALOG), (S3, SPIDER_CATALOG)):
        pairs = _sample_pairs(space, rng, 200)
        for a in catalog:
            for b in catalog:
                op = Composition(a, b)
                for p, q in pairs:
                    assert space.distance(apply(space, op, p), apply(space, op, q)) <= space.distance(p, q) + 1e-9


def test_composition_can_violate_p2():
    # project onto the x-axis, then onto the unit disc centred at (0, 1)
    op = Composition(Projection(Box((-10, 0), (10, 0))), Projection(Ball(P(0, 1), 1)))
    assert check_p2(E2, op, P(-0.25, 2.96), P(-2.93, -2.91)) < -1


# --------------------------------------------------------------------------- objective and resolvents


def test_objective_two_intervals():
    obj = ObjectiveSpec(Indicator(Box((0,), (1,))), Indicator(Box((2,), (3,))), 1)
    assert objective_value(E1, obj, P(1), P(2)) == 0.5
    assert objective_value(E1, obj, P(1.5), P(2)) == math.inf


def test_objective_vanishes_at_common_anchor():
    a = P(2, -1)
    obj = ObjectiveSpec(HalfSqDist(a), HalfSqDist(a), 3)
    assert objective_value(E2, obj, a, a) == 0


def test_resolvent_catalog():
    assert resolvent_of(Indicator(Box((2,), (3,))), 5) == Projection(Box((2,), (3,)))
    assert apply(E1, resolvent_of(Indicator(Box((2,), (3,))), 5), P(0)) == P(2)
    assert apply(E1, resolvent_of(HalfSqDist(P(0)), 1), P(4)) == P(2)
    assert apply(E2, resolvent_of(Abs(), 1), P(3, -0.5)) == P(2, 0)


@pytest.mark.parametrize("fn,space", [
    (HalfSqDist(P(1, -2)), E2),
    (Abs(), E2),
    (Indicator(Ball(P(0, 0), 1)), E2),
    (Indicator(Box((0, 0), (1, 2))), E2),
    (HalfSqDist(SpiderPoint(2, 1.5)), S3),
    (Indicator(LegInterval(1, 0.5, 2)), S3),
])
@pytest.mark.parametrize("lam", [0.3, 1.0, 4.0])
def test_resolvent_beats_candidates(fn, space, lam, rng):
    op = resolvent_of(fn, lam)
    for _ in range(30):
        x = space.random_point(rng, 3)
        best = prox_objective(space, fn, lam, x, apply(space, op, x))
        for _ in range(100):
            z = space.random_point(rng, 3)
            assert best <= prox_objective(space, fn, lam, x, z) + 1e-9


def test_resolvent_beats_grid():
    fn, lam = Abs(), 0.8
    op = resolvent_of(fn, lam)
    grid = [P(a, b) for a in np.linspace(-3, 3, 10) for b in np.linspace(-3, 3, 10)]
    for x in (P(2.5, -0.1), P(-1, 1), P(0.2, 0.3)):
        best = prox_objective(E2, fn, lam, x, apply(E2, op, x))
        assert all(best <= prox_objective(E2, fn, lam, x, z) + 1e-9 for z in grid)


@given(st.floats(-20, 20), st.floats(-20, 20), st.floats(0.01, 100))
def test_prox_formula(x, a, lam):
    out = apply(E1, ProxSqDist(P(a), lam), P(x)).coords[0]
    assert out == pytest.approx((x + lam * a) / (1 + lam), abs=1e-9 * (1 + abs(x) + abs(a)))
