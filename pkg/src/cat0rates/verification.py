"""Check recorded trajectories against the rate certificates and the
inequalities they rest on.

Every check returns a ``Check`` with a signed worst residual (bound minus
observed value, so negative means violated) and, on failure, the indices
that witness it.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .geodesic_space import Ball, Point, Region, Space, contains, sample_region
from .iteration import Trajectory, TrajectoryTooShort, first_index_below
from .operators import Indicator, ObjectiveSpec, apply, objective_value, resolvent_of
from .rate_calculus import (
    BoundTooLarge,
    Counterfunction,
    RateCertificate,
    chi_fejer,
    phi,
    phi_beta,
    phi_beta_prime,
    phi_double_prime,
    phi_prime,
    psi_hat,
    schedule_moduli,
    short_int,
    RegionTB,
)

TOL = 1e-9
PASS, FAIL, SKIP = "pass", "fail", "skip"


class ScenarioMisconfigured(ValueError):
    """A supplied fixed point or optimum is not what the scenario claims."""


@dataclass
class Check:
    name: str
    anchor: str
    status: str
    worst_residual: float | None = None
    witness: list[int] | None = None
    note: str = ""


@dataclass
class VerificationReport:
    scenario_id: str
    checks: list[Check] = field(default_factory=list)
    budget_notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.status != FAIL for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if c.status == FAIL]

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, allow_nan=False, default=str)

    @classmethod
    def from_json(cls, text: str) -> "VerificationReport":
        data = json.loads(text)
        return cls(data["scenario_id"], [Check(**c) for c in data["checks"]], data["budget_notes"])

    def to_text(self) -> str:
        lines = [f"scenario {self.scenario_id}: {'PASS' if self.passed else 'FAIL'}"]
        for c in self.checks:
            res = "" if c.worst_residual is None else f" residual={c.worst_residual:.3g}"
            wit = f" witness={c.witness}" if c.witness else ""
            note = f"  [{c.note}]" if c.note else ""
            lines.append(f"  {c.status:4}  {c.name}  ({c.anchor}){res}{wit}{note}")
        lines += [f"  note: {n}" for n in self.budget_notes]
        return "\n".join(lines)


def _min_residual(values: Iterable[tuple[float, list[int]]]) -> tuple[float | None, list[int] | None]:
    worst, where = None, None
    for v, idx in values:
        if worst is None or v < worst:
            worst, where = v, idx
    return worst, where


# --------------------------------------------------------------------------- regularity


def verify_residual_chain(traj: Trajectory, tol: float = TOL) -> Check:
    """ry_n <= rx_n <= ry_{n-1} along an exact run."""
    def slacks():
        for n in range(traj.horizon):
            yield traj.rx[n] - traj.ry[n], [n]
            if n >= 1:
                yield traj.ry[n - 1] - traj.rx[n], [n]

    worst, where = _min_residual(slacks())
    ok = worst is None or worst >= -tol
    return Check("residual chain ry_n <= rx_n <= ry_(n-1)", "exact-iteration monotonicity",
                 PASS if ok else FAIL, worst, None if ok else where)


def verify_fejer(traj: Trajectory, u: Point, tol: float = TOL) -> Check:
    """d(x_n, u) nonincreasing for a fixed point u of an exact run."""
    dist = [traj.space.distance(x, u) for x in traj.points_x]
    worst, where = _min_residual((a - b, [n + 1]) for n, (a, b) in enumerate(zip(dist, dist[1:])))
    ok = worst is None or worst >= -tol
    return Check("Fejer monotonicity of d(x_n, u)", "exact-iteration monotonicity",
                 PASS if ok else FAIL, worst, None if ok else where)


def _certified_tail_check(name: str, anchor: str, seq: Sequence[float], eps: Fraction,
                          cert: int | None, tol: float) -> Check:
    emp = first_index_below(seq, eps)
    detail = f"eps={eps} empirical={emp} certificate={'?' if cert is None else short_int(cert)}"
    if cert is None:
        return Check(name, anchor, SKIP, note=detail + "; bound beyond evaluation budget")
    if emp is not None and emp > cert:
        return Check(name, anchor, FAIL, float(eps) - seq[cert] if cert < len(seq) else None, [emp], detail)
    if cert < len(seq):
        worst, where = _min_residual((float(eps) - seq[n], [n]) for n in range(cert, len(seq)))
        ok = worst >= -tol
        return Check(name, anchor, PASS if ok else FAIL, worst, None if ok else where,
                     detail + "; bound confirmed within budget")
    return Check(name, anchor, PASS, None, None,
                 detail + "; bound beyond budget: empirical-index subsumption checked only")


def _safe(f, *args):
    try:
        return f(*args)
    except BoundTooLarge:
        return None


def verify_asymptotic_regularity(traj: Trajectory, b, eps_list: Iterable, tol: float = TOL) -> list[Check]:
    """Certificates for d(x_n,x_{n+1}) and d(y_n,y_{n+1}).

    Exact runs use phi with b >= 2 d(x0,u); inexact runs use phi' (for x)
    and phi'' (for y) with b >= d(x0,u).
    """
    checks = []
    exact = traj.exact
    mod = None if exact else schedule_moduli(traj.schedule)
    for eps in eps_list:
        eps = Fraction(eps)
        if exact:
            cx = cy = _safe(phi, eps, b)
            anchor = "rate phi, exact iteration"
        else:
            cx = _safe(phi_prime, eps, b, mod.B, mod.alpha)
            cy = _safe(phi_double_prime, eps, b, mod.B, mod.alpha)
            anchor = "rates phi'/phi'', iteration with errors"
        checks.append(_certified_tail_check("d(x_n,x_n+1) <= eps beyond certificate", anchor, traj.rx, eps, cx, tol))
        checks.append(_certified_tail_check("d(y_n,y_n+1) <= eps beyond certificate", anchor, traj.ry, eps, cy, tol))
    if exact:
        checks.append(verify_residual_chain(traj, tol))
    return checks


def verify_sx_regularity(traj: Trajectory, b, eps_list: Iterable, tol: float = TOL) -> list[Check]:
    """d(x_n, S x_n) against phi_beta and d(y_n, S' y_n) against phi'_beta'."""
    mod = schedule_moduli(traj.schedule)
    sp = traj.S_prime
    rs_y = [traj.space.distance(y, apply(traj.space, sp, y)) for y in traj.points_y]
    checks = []
    for eps in eps_list:
        eps = Fraction(eps)
        cx = _safe(phi_beta, eps, mod.beta, b, mod.B, mod.alpha)
        cy = _safe(phi_beta_prime, eps, mod.beta_prime, b, mod.B, mod.alpha)
        checks.append(_certified_tail_check("d(x_n,S x_n) <= eps beyond certificate", "rate phi_beta",
                                            traj.rs, eps, cx, tol))
        checks.append(_certified_tail_check("d(y_n,S' y_n) <= eps beyond certificate", "rate phi'_beta'",
                                            rs_y, eps, cy, tol))
    return checks


# --------------------------------------------------------------------------- inequalities on r_{n,k}


def verify_distance_recursion(traj: Trajectory, n_max: int = 50, k_max: int = 10) -> Check:
    """r_{n,k} >= k r_{n+k,1} - k 2^k (r_{n,1} - r_{n+k,1}) and
    2 r_{n+1,k} - (k-1) r_{n,1} <= r_{n,k+1}, with r_{n,k} = d(y_n, y_{n+k})."""
    ys = traj.points_y
    need = n_max + k_max + 2
    if len(ys) < need:
        raise TrajectoryTooShort(f"need {need} y-points, have {len(ys)}")
    d = traj.space.distance
    D = np.array([[d(a, b) for b in ys[:need]] for a in ys[:need]])

    def slacks():
        for n in range(n_max + 1):
            for k in range(1, k_max + 1):
                scale = 1e-6 * 2.0**k
                lower = k * D[n + k, n + k + 1] - k * 2.0**k * (D[n, n + 1] - D[n + k, n + k + 1])
                yield (D[n, n + k] - lower) / scale, [n, k]
                step = 2 * D[n + 1, n + 1 + k] - (k - 1) * D[n, n + 1]
                yield (D[n, n + k + 1] - step) / scale, [n, k]

    # residuals are expressed in units of the scaled tolerance, so -1 is the threshold
    worst, where = _min_residual(slacks())
    ok = worst >= -1
    return Check("r_(n,k) lower bound and chain step", "exact-iteration distance recursion",
                 PASS if ok else FAIL, worst, None if ok else where,
                 f"n<={n_max}, k<={k_max}; residual in units of 1e-6*2^k")


def verify_lemma_inexact(traj: Trajectory, u: Point, tol: float = TOL) -> list[Check]:
    """d(x_{n+1}, S x_n) <= gamma_n and d(x_{n+1}, u) <= gamma_n + d(x_n, u)."""
    space, S = traj.space, traj.S
    if space.distance(u, apply(space, S, u)) > TOL:
        raise ScenarioMisconfigured(f"{u!r} is not a fixed point of T2 o T1")
    gamma = traj.schedule.gamma
    d = space.distance
    one, two = [], []
    for n in range(traj.horizon):
        g = float(gamma.term(n))
        x, nxt = traj.points_x[n], traj.points_x[n + 1]
        one.append((g - d(nxt, apply(space, S, x)), [n]))
        two.append((g + d(x, u) - d(nxt, u), [n]))
    out = []
    for label, vals in (("d(x_n+1, S x_n) <= gamma_n", one), ("d(x_n+1, u) <= gamma_n + d(x_n, u)", two)):
        worst, where = _min_residual(vals)
        ok = worst is None or worst >= -tol
        out.append(Check(label, "one-step error lemma", PASS if ok else FAIL, worst, None if ok else where))
    return out


def verify_quasi_fejer(traj: Trajectory, p: Point, n: int, m: int, r: int, sequence: str = "x") -> Check:
    """For p with d(p, Sp) <= 1/(chi+1), chi = m(r+1):
    d(z_{n+l}, p) < d(z_n, p) + sum_{i=n}^{n+l-1} gamma_i + 1/(r+1) for all l <= m.

    ``sequence="y"`` runs the same check on (y_n) with S' = T1 o T2 and gamma'.
    """
    space = traj.space
    if sequence == "x":
        pts, op, gamma = traj.points_x, traj.S, traj.schedule.gamma
    else:
        pts, op, gamma = traj.points_y, traj.S_prime, traj.schedule.gamma_prime
    name = f"quasi-Fejer bound on ({sequence}_n), n={n} m={m} r={r}"
    anchor = "quasi-Fejer modulus chi = m(r+1)"
    chi = chi_fejer(n, m, r)
    near = space.distance(p, apply(space, op, p))
    if near > 1 / (chi + 1):
        return Check(name, anchor, SKIP, note=f"precondition fails: d(p,Sp)={near:.3g} > 1/{chi + 1}")
    if n + m >= len(pts):
        raise TrajectoryTooShort(f"need index {n + m}, horizon is {len(pts) - 1}")
    base = space.distance(pts[n], p)
    slack = 1 / (r + 1)
    worst, where, acc = math.inf, None, Fraction(0)
    for l in range(m + 1):
        if l:
            acc += gamma.term(n + l - 1)
        res = base + float(acc) + slack - space.distance(pts[n + l], p)
        if res < worst:
            worst, where = res, [n, l]
    ok = worst > 0
    return Check(name, anchor, PASS if ok else FAIL, worst, None if ok else where)


def near_fixed_points(space: Space, op, u: Point, chi: int, count: int, rng: np.random.Generator,
                      start_radius: float = 1.0) -> list[Point]:
    """Points p with d(p, op p) <= 1/(chi+1), by perturbing the fixed point u.

    Each p is a random displacement of u whose size halves until the measured
    d(p, op p) meets the threshold; op nonexpansive with op u = u makes
    size 1/(2(chi+1)) always sufficient.
    """
    threshold = 1 / (chi + 1)
    points = []
    for _ in range(count):
        size = start_radius * float(rng.uniform(0.5, 1.0))
        while True:
            p = space.displace(u, size, rng)
            if space.distance(p, apply(space, op, p)) <= threshold:
                points.append(p)
                break
            size /= 2
    return points


def quasi_fejer_battery(traj: Trajectory, u: Point, *, points: int = 20, ns: Sequence[int] = (0, 3, 10),
                        ms: Sequence[int] = (0, 1, 5, 20), rs: Sequence[int] = (0, 3, 10), seed: int = 0) -> list[Check]:
    """Aggregate quasi-Fejer checks over a grid and constructed near-fixed points,
    for (x_n) around u and (y_n) around T1 u."""
    rng = np.random.default_rng(seed)
    space = traj.space
    out = []
    for seq, centre, op in (("x", u, traj.S), ("y", apply(space, traj.t1, u), traj.S_prime)):
        worst, where, tested = math.inf, None, 0
        for n in ns:
            for m in ms:
                if n + m > traj.horizon:
                    continue
                for r in rs:
                    chi = chi_fejer(n, m, r)
                    for i, p in enumerate(near_fixed_points(space, op, centre, chi, points, rng)):
                        c = verify_quasi_fejer(traj, p, n, m, r, seq)
                        if c.status == SKIP:
                            continue
                        tested += 1
                        if c.worst_residual < worst:
                            worst, where = c.worst_residual, [n, m, r, i]
        ok = tested > 0 and worst > 0
        out.append(Check(f"quasi-Fejer bound on ({seq}_n), grid", "quasi-Fejer modulus chi = m(r+1)",
                         PASS if ok else FAIL, worst if tested else None, None if ok else where,
                         f"{tested} (point, n, m, r) instances"))
    return out


# --------------------------------------------------------------------------- metastability


def verify_metastability(traj: Trajectory, k: int, g: Counterfunction, cert: RateCertificate,
                         region: Region | None = None, sequence: str = "x") -> Check:
    """Search the first n whose window [n, n+g(n)] has diameter <= 1/(k+1)
    and compare it with the certified bound."""
    name = f"metastability of ({sequence}_n) k={k} g={g.describe()}"
    anchor = "rate of metastability psi_hat"
    space = traj.space
    xs = traj.points_x if sequence == "x" else traj.points_y
    note = "uses <= 1/(k+1) (the strict form differs only on ties)"
    if region is not None and not all(contains(space, region, x) for x in xs):
        return Check(name, anchor, SKIP, note="trajectory leaves the totally bounded region")
    target = 1 / (k + 1)
    horizon, limit = traj.horizon, cert.bound
    found, exhausted, n = None, False, 0
    while n <= min(limit, horizon):
        end = n + g(n)
        if end > horizon:
            exhausted = True
        else:
            window = xs[n:end + 1]
            diam = max((space.distance(a, b) for i, a in enumerate(window) for b in window[i + 1:]), default=0.0)
            if diam <= target:
                found = n
                break
        n += 1
    kind = "exact" if cert.exact else "lower bound of"
    detail = f"found n={found}, {kind} certificate={short_int(cert.bound)}; {note}"
    if found is not None:
        return Check(name, anchor, PASS, None, None, detail)
    if exhausted or limit > horizon:
        return Check(name, anchor, PASS, None, None, "budget exhausted before a window fit; " + detail)
    return Check(name, anchor, FAIL, None, [limit], detail)


# --------------------------------------------------------------------------- fixed points vs minimizers


def verify_fix_solution_correspondence(space: Space, obj: ObjectiveSpec, x_star: Point, sample_count: int = 1000,
                                       seed: int = 0, radius: float = 1.0) -> Check:
    """(x*, J^g x*) minimizes the coupled objective when x* is fixed by J^f o J^g.

    Samples come from the indicator regions when f or g is an indicator,
    otherwise from a ball of ``radius`` around x* (resp. y*).
    """
    jf, jg = resolvent_of(obj.f, obj.lam), resolvent_of(obj.g, obj.lam)
    y_star = apply(space, jg, x_star)
    if space.distance(x_star, apply(space, jf, y_star)) > TOL:
        raise ScenarioMisconfigured(f"{x_star!r} is not fixed by J^f o J^g")
    best = objective_value(space, obj, x_star, y_star)
    rng = np.random.default_rng(seed)

    def sampler(fn, centre):
        region = fn.region if isinstance(fn, Indicator) else Ball(centre, radius)
        return lambda: sample_region(space, region, rng)

    draw_x, draw_y = sampler(obj.f, x_star), sampler(obj.g, y_star)
    worst, where = math.inf, None
    for i in range(sample_count):
        val = objective_value(space, obj, draw_x(), draw_y())
        if val - best < worst:
            worst, where = val - best, [i]
    ok = worst >= -TOL
    return Check("objective minimal at (x*, J^g x*)", "fixed points give minimizers",
                 PASS if ok else FAIL, worst, None if ok else where, f"objective at (x*, y*) = {best!r}")


# --------------------------------------------------------------------------- full battery


def metastability_certificates(scenario, k: int, g: Counterfunction) -> dict[str, RateCertificate]:
    """psi_hat for (x_n) and (y_n) of a scenario, with b >= d(x0, u)."""
    mod = schedule_moduli(scenario.schedule)
    tb = RegionTB(scenario.region, scenario.space)
    b = scenario.b_for("distance")
    return {
        "x": psi_hat(k, g, tb, mod.alpha, mod.beta, b, mod.B),
        "y": psi_hat(k, g, tb, mod.alpha, mod.beta_prime, b, mod.B, primed=True, alpha_prime=mod.alpha_prime),
    }


def verify_scenario(scenario, *, n_max: int = 50, k_max: int = 10, fejer_points: int = 20,
                    samples: int = 1000) -> VerificationReport:
    """Run the scenario and every applicable check."""
    traj = scenario.run()
    report = VerificationReport(scenario.id)
    add = report.checks.extend
    u = scenario.fixed_point_u
    if traj.exact:
        add(verify_asymptotic_regularity(traj, scenario.b_for("twice_distance"), scenario.eps_list))
        if u is not None:
            add([verify_fejer(traj, u)])
        if traj.horizon + 1 >= n_max + k_max + 2:
            add([verify_distance_recursion(traj, n_max, k_max)])
        else:
            report.budget_notes.append("trajectory too short for the r_(n,k) checks")
    else:
        add(verify_asymptotic_regularity(traj, scenario.b_for("distance"), scenario.eps_list))
    add(verify_sx_regularity(traj, scenario.b_for("distance"), scenario.eps_list))
    if u is not None:
        add(verify_lemma_inexact(traj, u))
        add(quasi_fejer_battery(traj, u, points=fejer_points, seed=scenario.seed))
    if scenario.region is not None:
        for k, g in scenario.metastability:
            certs = metastability_certificates(scenario, k, g)
            for seq, cert in certs.items():
                add([verify_metastability(traj, k, g, cert, scenario.region, seq)])
                if not cert.exact:
                    report.budget_notes.append(
                        f"psi_hat({seq}, k={k}, g={g.describe()}) too large to materialize; "
                        f"checked against the lower bound {short_int(cert.bound)}")
    if scenario.objective is not None and u is not None:
        add([verify_fix_solution_correspondence(scenario.space, scenario.objective, u, samples, scenario.seed)])
    report.budget_notes.append("rate certificates that exceed the horizon are checked by "
                               "empirical-index subsumption plus monotonicity only")
    return report
