"""Exact evaluation of the asymptotic-regularity and metastability rates.

Inputs are ``Fraction`` and outputs are Python integers, so ``2**k`` and the
ceilings never lose precision.  Nested rates grow like towers of exponentials;
anything whose exponent exceeds ``MAX_EXPONENT`` raises ``BoundTooLarge``
instead of trying to materialize the number.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Any, Callable, Union

from .geodesic_space import Region, Space, tb_modulus
from .schedules import ErrorSchedule, SumSequence, parse_rational

MAX_EXPONENT = 1 << 22
BRUTE_FORCE_LIMIT = 10**4


class RateDomainError(ValueError):
    """A rate was asked for at a nonpositive epsilon/bound or similar."""


class BoundTooLarge(ArithmeticError):
    """The exact bound would need an exponent beyond the evaluation budget."""


def _positive(name: str, value) -> Fraction:
    value = parse_rational(value)
    if value <= 0:
        raise RateDomainError(f"{name} must be positive, got {value}")
    return value


def _nonneg(name: str, value) -> Fraction:
    value = parse_rational(value)
    if value < 0:
        raise RateDomainError(f"{name} must be nonnegative, got {value}")
    return value


# --------------------------------------------------------------------------- moduli


@dataclass(frozen=True)
class ConstantModulus:
    value: int

    def __call__(self, arg) -> int:
        return self.value

    def describe(self) -> str:
        return f"const:{self.value}"


@dataclass(frozen=True)
class CauchyModulus:
    """Smallest N whose tail sum over ``seq`` from N on is <= eps.

    Terms are nonnegative, so that tail dominates every finite block sum
    starting at N, which is exactly the Cauchy-modulus property.
    """

    seq: SumSequence

    def __call__(self, eps) -> int:
        eps = _positive("eps", eps)
        return _least_index(lambda n: self.seq.tail(n) <= eps, 0)

    def describe(self) -> str:
        return f"cauchy({self.seq.describe()})"


@dataclass(frozen=True)
class ConvergenceRate:
    """Smallest N with seq_n <= eps for every n >= N."""

    seq: SumSequence

    def __call__(self, eps) -> int:
        eps = _positive("eps", eps)
        start = self.seq.finite_length
        # past the listed terms only geometric parts remain, which are nonincreasing
        n = _least_index(lambda i: self.seq.term(i) <= eps, start)
        if n > start:
            return n
        for i in range(start - 1, -1, -1):
            if self.seq.term(i) > eps:
                return i + 1
        return 0

    def describe(self) -> str:
        return f"rate({self.seq.describe()})"


@dataclass(frozen=True)
class TableModulus:
    """Step function: pairs (eps_i, N_i); answers N_i for the largest eps_i <= eps."""

    pairs: tuple[tuple[Fraction, int], ...]

    def __post_init__(self):
        pairs = tuple(sorted(((parse_rational(e), int(n)) for e, n in self.pairs), reverse=True))
        if any(b[1] < a[1] for a, b in zip(pairs, pairs[1:])):
            raise ValueError("table modulus must not decrease as eps decreases")
        object.__setattr__(self, "pairs", pairs)

    def __call__(self, eps) -> int:
        eps = _positive("eps", eps)
        for threshold, n in self.pairs:
            if threshold <= eps:
                return n
        raise RateDomainError(f"table modulus undefined below eps={self.pairs[-1][0]}")

    def describe(self) -> str:
        return "table:" + ",".join(f"{e}->{n}" for e, n in self.pairs)


Modulus = Union[ConstantModulus, CauchyModulus, ConvergenceRate, TableModulus]
_MONOTONE_MODULI = (ConstantModulus, CauchyModulus, ConvergenceRate, TableModulus)


@dataclass(frozen=True)
class RegionTB:
    """Total-boundedness modulus of a region, k -> tb_modulus(region, k)."""

    region: Region
    space: Space | None = None

    def __call__(self, k: int) -> int:
        return tb_modulus(self.region, k, self.space)

    def describe(self) -> str:
        return f"tb({self.region!r})"


def _least_index(pred: Callable[[int], bool], start: int) -> int:
    """Least n >= start with pred(n), for pred monotone false->true."""
    if pred(start):
        return start
    lo, step = start, 1
    while not pred(start + step):
        lo = start + step
        step *= 2
        if step > 1 << 40:
            raise BoundTooLarge("modulus search did not terminate")
    hi = start + step
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi


@dataclass(frozen=True)
class ScheduleModuli:
    alpha: Modulus
    beta: Modulus
    B: Fraction
    alpha_prime: Modulus
    beta_prime: Modulus
    B_prime: Fraction


def schedule_moduli(schedule: ErrorSchedule) -> ScheduleModuli:
    """Cauchy modulus, convergence rate and sum bound for gamma and gamma'."""
    gamma, gamma_p = schedule.gamma, schedule.gamma_prime
    if gamma.is_zero and gamma_p.is_zero:
        zero = ConstantModulus(0)
        return ScheduleModuli(zero, zero, Fraction(0), zero, zero, Fraction(0))
    return ScheduleModuli(
        CauchyModulus(gamma), ConvergenceRate(gamma), gamma.total(),
        CauchyModulus(gamma_p), ConvergenceRate(gamma_p), gamma_p.total(),
    )


# --------------------------------------------------------------------------- rates


def _ceil_div(num: int, den: int) -> int:
    return -((-num) // den)


def phi(eps, b, max_exponent: int = MAX_EXPONENT) -> int:
    """Rate of asymptotic regularity for the exact alternating iteration.

    k = ceil(2b/eps), result k * ceil(2b(1 + 2^k)/eps) + 1.  Here b bounds
    2 d(x0, u) for some fixed point u.
    """
    eps, b = _positive("eps", eps), _positive("b", b)
    ratio = 2 * b / eps
    k = math.ceil(ratio)
    if k > max_exponent:
        raise BoundTooLarge(f"phi needs 2^{k}, beyond the 2^{max_exponent} budget")
    return k * _ceil_div(ratio.numerator * (1 + (1 << k)), ratio.denominator) + 1


def monotone_cauchy_bound(b, eps_prime, k: int) -> int:
    """k * ceil(b / eps'): some N below this has r_N - r_{N+k} <= eps' for any
    nonincreasing sequence r in [0, b]."""
    b, eps_prime = _positive("b", b), _positive("eps_prime", eps_prime)
    if k < 1:
        raise RateDomainError("k must be a positive integer")
    return k * math.ceil(b / eps_prime)


def phi_prime(eps, b, B, alpha: Modulus, max_exponent: int = MAX_EXPONENT) -> int:
    """alpha(eps/3) + phi(eps/3, 2(b + B)); b bounds d(x0, u)."""
    eps, b, B = _positive("eps", eps), _positive("b", b), _nonneg("B", B)
    return alpha(eps / 3) + phi(eps / 3, 2 * (b + B), max_exponent)


def phi_double_prime(eps, b, B, alpha: Modulus, max_exponent: int = MAX_EXPONENT) -> int:
    return phi_prime(_positive("eps", eps) / 2, b, B, alpha, max_exponent)


def phi_beta(eps, beta: Modulus, b, B, alpha: Modulus, max_exponent: int = MAX_EXPONENT) -> int:
    """Rate for d(x_n, S x_n) -> 0: max(beta(eps/2), phi'(eps/2))."""
    eps = _positive("eps", eps)
    return max(beta(eps / 2), phi_prime(eps / 2, b, B, alpha, max_exponent))


def phi_beta_prime(eps, beta_prime: Modulus, b, B, alpha: Modulus, max_exponent: int = MAX_EXPONENT) -> int:
    """Rate for d(y_n, S' y_n) -> 0: max(beta'(eps/2), phi''(eps/2))."""
    eps = _positive("eps", eps)
    return max(beta_prime(eps / 2), phi_double_prime(eps / 2, b, B, alpha, max_exponent))


@dataclass(frozen=True)
class PhiBetaCurve:
    """eps -> phi_beta(eps) (or its primed variant) with frozen parameters."""

    beta: Modulus
    b: Fraction
    B: Fraction
    alpha: Modulus
    primed: bool = False
    max_exponent: int = MAX_EXPONENT

    def __post_init__(self):
        for m in (self.beta, self.alpha):
            if not isinstance(m, _MONOTONE_MODULI):
                raise TypeError(f"{m!r} is not a catalog modulus; monotonicity cannot be assumed")
        object.__setattr__(self, "b", _positive("b", self.b))
        object.__setattr__(self, "B", _nonneg("B", self.B))

    def __call__(self, eps) -> int:
        return _curve_value(self, parse_rational(eps))


@lru_cache(maxsize=4096)
def _curve_value(curve: PhiBetaCurve, eps: Fraction) -> int:
    f = phi_beta_prime if curve.primed else phi_beta
    return f(eps, curve.beta, curve.b, curve.B, curve.alpha, curve.max_exponent)


def phi_hat(k: int, N: int, curve: PhiBetaCurve, brute_force_limit: int = BRUTE_FORCE_LIMIT) -> int:
    """max(N, max_{i <= k} curve(1/(i+1))).

    Catalog curves are nonincreasing in eps, so the inner max is the i = k
    term; for k up to ``brute_force_limit`` the full max is also taken and
    the two must agree.
    """
    if k < 0 or N < 0:
        raise RateDomainError("phi_hat arguments must be nonnegative integers")
    top = curve(Fraction(1, k + 1))
    if k <= brute_force_limit:
        full = max(curve(Fraction(1, i + 1)) for i in range(k + 1))
        if full != top:
            raise AssertionError(f"phi_beta curve is not monotone: max {full} != last term {top}")
    return max(N, top)


def phi_hat_literal(k: int, N: int, curve: PhiBetaCurve) -> int:
    """phi_hat by evaluating every term of the inner max."""
    return max(N, max(curve(Fraction(1, i + 1)) for i in range(k + 1)))


def chi_fejer(n: int, m: int, r: int) -> int:
    """m * (r + 1); n is carried for the signature of the quasi-Fejer modulus."""
    if min(n, m, r) < 0:
        raise RateDomainError("chi arguments must be nonnegative")
    return m * (r + 1)


# --------------------------------------------------------------------------- counterfunctions


@dataclass(frozen=True)
class ConstantG:
    m: int

    def __call__(self, n: int) -> int:
        return self.m

    def running_max(self, n: int) -> int:
        return self.m

    def describe(self) -> str:
        return f"const:{self.m}"


@dataclass(frozen=True)
class IdentityG:
    def __call__(self, n: int) -> int:
        return n

    def running_max(self, n: int) -> int:
        return n

    def describe(self) -> str:
        return "identity"


@dataclass(frozen=True)
class AffineG:
    a: int
    b: int

    def __post_init__(self):
        if self.a < 0 or self.b < 0:
            raise ValueError("affine counterfunction needs nonnegative coefficients")

    def __call__(self, n: int) -> int:
        return self.a * n + self.b

    def running_max(self, n: int) -> int:
        return self.a * n + self.b

    def describe(self) -> str:
        return f"affine:{self.a}:{self.b}"


@dataclass(frozen=True)
class TableG:
    values: tuple[int, ...]
    default: int = 0

    def __call__(self, n: int) -> int:
        return self.values[n] if n < len(self.values) else self.default

    def running_max(self, n: int) -> int:
        head = self.values[: n + 1]
        tail = (self.default,) if n >= len(self.values) else ()
        return max(head + tail)

    def describe(self) -> str:
        return "table:" + ",".join(map(str, self.values)) + f":{self.default}"


Counterfunction = Union[ConstantG, IdentityG, AffineG, TableG]


def counterfunction_from_str(text: str) -> Counterfunction:
    """``const:m``, ``identity``, ``affine:a:b`` or ``table:v0,v1,...:default``."""
    kind, _, rest = text.partition(":")
    if kind in ("const", "constant"):
        return ConstantG(int(rest))
    if kind == "identity":
        return IdentityG()
    if kind == "affine":
        a, b = rest.split(":")
        return AffineG(int(a), int(b))
    if kind == "table":
        vals, _, default = rest.partition(":")
        return TableG(tuple(int(v) for v in vals.split(",") if v), int(default or 0))
    raise ValueError(f"unknown counterfunction {text!r}")


def chi_M(g: Counterfunction, n: int, k: int) -> int:
    """(max_{i <= n} g(i)) * (k + 1)."""
    if n < 0 or k < 0:
        raise RateDomainError("chi_M arguments must be nonnegative")
    return g.running_max(n) * (k + 1)


# --------------------------------------------------------------------------- certificates


@dataclass
class RateCertificate:
    """An exact bound plus what produced it.

    ``exact`` is False only for metastability bounds that ran out of budget;
    ``bound`` is then a proven lower bound on the true value (the unfolding
    is nondecreasing), which is all a "found index <= bound" check needs.
    """

    theorem_id: str
    inputs: dict[str, Any]
    bound: int
    exact: bool = True
    notes: list[str] = field(default_factory=list)

    def recompute(self) -> "RateCertificate":
        return _REGISTRY[self.theorem_id](**self.inputs)

    @property
    def symbolic(self) -> str | None:
        return symbolic_form(self.bound)

    def to_dict(self) -> dict:
        return {
            "theorem_id": self.theorem_id,
            "inputs": {k: _describe(v) for k, v in self.inputs.items()},
            "bound": decimal_str(self.bound),
            "symbolic": self.symbolic,
            "exact": self.exact,
            "notes": list(self.notes),
        }


def _describe(v) -> Any:
    if hasattr(v, "describe"):
        return v.describe()
    if isinstance(v, (Fraction, int)):
        return decimal_str(v) if isinstance(v, int) else str(v)
    return repr(v)


def decimal_str(n: int) -> str:
    """Exact decimal digits of ``n``, bypassing the interpreter's digit limit."""
    old = sys.get_int_max_str_digits()
    sys.set_int_max_str_digits(0)
    try:
        return str(n)
    finally:
        sys.set_int_max_str_digits(old)


def short_int(n: int) -> str:
    """Readable form for notes: exact below 10^30, else its magnitude."""
    if n.bit_length() < 100:
        return str(n)
    return f"<{n.bit_length()}-bit integer ~2^{n.bit_length() - 1}>"


def symbolic_form(value: int, max_cofactor_bits: int = 40) -> str | None:
    """Spot ``a*(1+2^k)+c`` shapes (small a, c) in a large integer."""
    if value.bit_length() < 24:
        return None
    # largest exponent first, so the form is unique
    top = value.bit_length()
    for k in range(top - 1, max(15, top - max_cofactor_bits - 2), -1):
        for c in range(0, 65):
            a, rem = divmod(value - c, 1 + (1 << k))
            if rem == 0 and 0 < a < (1 << max_cofactor_bits):
                return f"{a}*(1+2^{k})" + (f"+{c}" if c else "")
    return None


def phi_certificate(eps, b) -> RateCertificate:
    eps, b = parse_rational(eps), parse_rational(b)
    return RateCertificate("phi", {"eps": eps, "b": b}, phi(eps, b), notes=["b bounds 2*d(x0,u)"])


def phi_prime_certificate(eps, b, B, alpha) -> RateCertificate:
    eps, b, B = parse_rational(eps), parse_rational(b), parse_rational(B)
    return RateCertificate("phi_prime", {"eps": eps, "b": b, "B": B, "alpha": alpha},
                           phi_prime(eps, b, B, alpha), notes=["b bounds d(x0,u)"])


def phi_double_prime_certificate(eps, b, B, alpha) -> RateCertificate:
    eps, b, B = parse_rational(eps), parse_rational(b), parse_rational(B)
    return RateCertificate("phi_double_prime", {"eps": eps, "b": b, "B": B, "alpha": alpha},
                           phi_double_prime(eps, b, B, alpha), notes=["b bounds d(x0,u)"])


def phi_beta_certificate(eps, beta, b, B, alpha, primed: bool = False) -> RateCertificate:
    eps, b, B = parse_rational(eps), parse_rational(b), parse_rational(B)
    f = phi_beta_prime if primed else phi_beta
    return RateCertificate("phi_beta_prime" if primed else "phi_beta",
                           {"eps": eps, "beta": beta, "b": b, "B": B, "alpha": alpha, "primed": primed},
                           f(eps, beta, b, B, alpha), notes=["b bounds d(x0,u)"])


def psi_hat(k: int, g: Counterfunction, tb, alpha: Modulus, beta: Modulus, b, B, *,
            primed: bool = False, alpha_prime: Modulus | None = None,
            max_exponent: int = MAX_EXPONENT) -> RateCertificate:
    """Rate of metastability: unfold psi0(n+1) = phi_hat(chi_M(psi0(n), 8k+7), xi(8k+7))
    P = tb(8k+7) + 1 times starting from psi0(0) = 0.

    The step map is deterministic and nondecreasing, so the unfolding stops
    early once it reaches a fixed point.  With ``primed`` the bound is for
    (y_n): beta is then the rate for gamma' and xi uses ``alpha_prime``.
    """
    if k < 0:
        raise RateDomainError("k must be nonnegative")
    inputs = {"k": k, "g": g, "tb": tb, "alpha": alpha, "beta": beta, "b": parse_rational(b),
              "B": parse_rational(B), "primed": primed, "alpha_prime": alpha_prime, "max_exponent": max_exponent}
    K = 8 * k + 7
    P = tb(K) + 1
    xi = (alpha_prime if primed else alpha)(Fraction(1, K + 1))
    curve = PhiBetaCurve(beta, parse_rational(b), parse_rational(B), alpha, primed, max_exponent)
    value, steps = 0, 0
    notes = [f"P={P}", f"xi={short_int(xi)}", "b bounds d(x0,u)"]
    try:
        while steps < P:
            nxt = phi_hat(chi_M(g, value, K), xi, curve, brute_force_limit=-1)
            steps += 1
            if nxt == value:
                notes.append(f"fixed point reached after {steps} of {P} unfolds")
                steps = P
                break
            value = nxt
    except BoundTooLarge as exc:
        notes.append(f"lower bound only: stopped after {steps} of {P} unfolds ({exc})")
        return RateCertificate("psi_hat", inputs, value, exact=False, notes=notes)
    return RateCertificate("psi_hat", inputs, value, notes=notes)


def psi_hat_literal(k: int, g: Counterfunction, tb, alpha: Modulus, beta: Modulus, b, B, *,
                    primed: bool = False, alpha_prime: Modulus | None = None,
                    max_exponent: int = MAX_EXPONENT, brute_force_limit: int = 10**5) -> RateCertificate:
    """Independent route to psi_hat: all P unfolds, every inner max evaluated term by term.

    Repeated arguments are memoized, which does not change the recursion.
    Stops with a lower bound when an inner max would need more than
    ``brute_force_limit`` terms or an exponent beyond ``max_exponent``.
    """
    K = 8 * k + 7
    P = tb(K) + 1
    xi = (alpha_prime if primed else alpha)(Fraction(1, K + 1))
    curve = PhiBetaCurve(beta, parse_rational(b), parse_rational(B), alpha, primed, max_exponent)
    inputs = {"k": k, "g": g, "tb": tb, "alpha": alpha, "beta": beta, "b": parse_rational(b),
              "B": parse_rational(B), "primed": primed, "alpha_prime": alpha_prime, "max_exponent": max_exponent}
    memo: dict[int, int] = {}
    value = 0
    for step in range(P):
        if value not in memo:
            width = chi_M(g, value, K)
            try:
                if width > brute_force_limit:
                    raise BoundTooLarge(f"inner max over {width + 1} terms")
                memo[value] = phi_hat_literal(width, xi, curve)
            except BoundTooLarge as exc:
                note = f"lower bound only: stopped after {step} of {P} unfolds ({exc})"
                return RateCertificate("psi_hat", inputs, value, exact=False, notes=[note])
        value = memo[value]
    return RateCertificate("psi_hat", inputs, value, notes=[f"P={P}", f"xi={short_int(xi)}"])


_REGISTRY: dict[str, Callable[..., RateCertificate]] = {
    "phi": phi_certificate,
    "phi_prime": phi_prime_certificate,
    "phi_double_prime": phi_double_prime_certificate,
    "phi_beta": phi_beta_certificate,
    "phi_beta_prime": phi_beta_certificate,
    "psi_hat": psi_hat,
}
