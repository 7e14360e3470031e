"""Summable error sequences with exact rational terms and tails."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union


def parse_rational(text) -> Fraction:
    """Parse ``"p/q"``, an integer, or a decimal string exactly."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    if isinstance(text, float):
        raise TypeError("rationals must be given exactly, as 'p/q' strings or integers")
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"malformed rational {text!r}") from exc


@dataclass(frozen=True)
class Zero:
    def term(self, n: int) -> Fraction:
        return Fraction(0)

    def tail(self, n: int) -> Fraction:
        return Fraction(0)

    def shifted(self) -> "Zero":
        return self

    @property
    def finite_length(self) -> int:
        return 0


@dataclass(frozen=True)
class Geometric:
    """Terms c * q**n."""

    c: Fraction
    q: Fraction

    def __post_init__(self):
        object.__setattr__(self, "c", parse_rational(self.c))
        object.__setattr__(self, "q", parse_rational(self.q))
        if self.c <= 0:
            raise ValueError("geometric scale c must be positive")
        if not 0 < self.q < 1:
            raise ValueError(f"geometric ratio must lie in (0, 1), got {self.q}")

    def term(self, n: int) -> Fraction:
        return self.c * self.q**n

    def tail(self, n: int) -> Fraction:
        return self.c * self.q**n / (1 - self.q)

    def shifted(self) -> "Geometric":
        return Geometric(self.c * self.q, self.q)

    @property
    def finite_length(self) -> int:
        return 0


@dataclass(frozen=True)
class FiniteList:
    """Listed terms, then zeros."""

    values: tuple[Fraction, ...]

    def __post_init__(self):
        vals = tuple(parse_rational(v) for v in self.values)
        if any(v < 0 for v in vals):
            raise ValueError("error terms must be nonnegative")
        object.__setattr__(self, "values", vals)

    def term(self, n: int) -> Fraction:
        return self.values[n] if n < len(self.values) else Fraction(0)

    def tail(self, n: int) -> Fraction:
        return sum(self.values[n:], Fraction(0))

    def shifted(self) -> "FiniteList":
        return FiniteList(self.values[1:])

    @property
    def finite_length(self) -> int:
        return len(self.values)


SequenceSpec = Union[Zero, Geometric, FiniteList]


@dataclass(frozen=True)
class SumSequence:
    """Termwise sum of catalog sequences; all summable and nonnegative."""

    parts: tuple[SequenceSpec, ...]

    def term(self, n: int) -> Fraction:
        return sum((p.term(n) for p in self.parts), Fraction(0))

    def tail(self, n: int) -> Fraction:
        return sum((p.tail(n) for p in self.parts), Fraction(0))

    def total(self) -> Fraction:
        return self.tail(0)

    @property
    def finite_length(self) -> int:
        return max((p.finite_length for p in self.parts), default=0)

    @property
    def is_zero(self) -> bool:
        return all(isinstance(p, Zero) or (isinstance(p, FiniteList) and not any(p.values)) for p in self.parts)

    def describe(self) -> str:
        return " + ".join(sequence_to_str(p) for p in self.parts) or "zero"


@dataclass(frozen=True)
class ErrorSchedule:
    """eps_n bounds d(y_n, T1 x_n); delta_n bounds d(x_{n+1}, T2 y_n)."""

    eps: SequenceSpec = field(default_factory=Zero)
    delta: SequenceSpec = field(default_factory=Zero)

    @property
    def gamma(self) -> SumSequence:
        return SumSequence((self.eps, self.delta))

    @property
    def gamma_prime(self) -> SumSequence:
        """eps_{n+1} + delta_n, the error sequence governing (y_n)."""
        return SumSequence((self.eps.shifted(), self.delta))

    @property
    def is_zero(self) -> bool:
        return self.gamma.is_zero


def sequence_from_json(spec) -> SequenceSpec:
    if spec in (None, "zero", 0, "0"):
        return Zero()
    if isinstance(spec, dict):
        if "geometric" in spec:
            g = spec["geometric"]
            return Geometric(parse_rational(g["c"]), parse_rational(g["q"]))
        if "list" in spec:
            return FiniteList(tuple(parse_rational(v) for v in spec["list"]))
    raise ValueError(f"unknown sequence spec {spec!r}")


def sequence_to_json(seq: SequenceSpec):
    if isinstance(seq, Zero):
        return "zero"
    if isinstance(seq, Geometric):
        return {"geometric": {"c": str(seq.c), "q": str(seq.q)}}
    return {"list": [str(v) for v in seq.values]}


def sequence_from_str(text: str) -> SequenceSpec:
    """CLI form: ``zero``, ``geometric:c:q`` or ``list:a,b,c``."""
    kind, _, rest = text.partition(":")
    if kind == "zero":
        return Zero()
    if kind == "geometric":
        c, q = rest.split(":")
        return Geometric(parse_rational(c), parse_rational(q))
    if kind == "list":
        return FiniteList(tuple(parse_rational(v) for v in rest.split(",") if v))
    raise ValueError(f"unknown sequence {text!r}; use zero, geometric:c:q or list:a,b,...")


def sequence_to_str(seq: SequenceSpec) -> str:
    if isinstance(seq, Zero):
        return "zero"
    if isinstance(seq, Geometric):
        return f"geometric:{seq.c}:{seq.q}"
    return "list:" + ",".join(str(v) for v in seq.values)
