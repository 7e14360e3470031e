"""Alternating compositions of firmly nonexpansive maps in CAT(0) spaces,
with exact rates of asymptotic regularity and metastability."""

from .geodesic_space import (
    Ball, Box, Euclidean, EuclideanPoint, LegInterval, Spider, SpiderPoint,
    check_cat0_quadruple, distance, geodesic_point, tb_modulus,
)
from .iteration import Trajectory, first_index_below, r_table, run_exact, run_inexact
from .operators import (
    Composition, ObjectiveSpec, Projection, ProxSqDist, SoftThreshold,
    apply, check_firmly_nonexpansive, check_p2, objective_value, resolvent_of,
)
from .rate_calculus import (
    RateCertificate, chi_M, chi_fejer, monotone_cauchy_bound, phi, phi_beta,
    phi_double_prime, phi_hat, phi_prime, psi_hat, schedule_moduli,
)
from .scenario import Scenario, load_scenario
from .schedules import ErrorSchedule, FiniteList, Geometric, Zero

__version__ = "0.1.0"
