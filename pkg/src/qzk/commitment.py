"""Toy Gamma-commitment schemes with exact binding and concealing measurements.

Three kinds are provided:

* ``transparent``: ``f(a, x) = enc(a) + x``. Perfectly binding, reveals ``a``.
* ``ideal``: the commitment string is uniform and independent of ``a``. It has
  no string-valued commit function and is handled through its distribution.
* ``leaky``: with probability ``eps`` the string reveals ``a``, otherwise it
  is an ideal string. Pairwise total variation is exactly ``eps``.

A ``custom`` kind wraps any deterministic ``f(a, x)`` (used for broken
fixtures).  Probabilities are kept as :class:`fractions.Fraction`.
"""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

BINDING_LIMIT = 6
SUPPORT_LIMIT = 16
KINDS = ("transparent", "ideal", "leaky", "custom")


class UnsupportedOperation(Exception):
    """The scheme kind has no string-valued commit function."""


class ScanLimitExceeded(ValueError):
    pass


@dataclass(frozen=True)
class CommitmentDistribution:
    value: int
    table: dict[str, Fraction]

    def __post_init__(self):
        if any(p < 0 for p in self.table.values()):
            raise ValueError("negative probability")
        if sum(self.table.values()) != 1:
            raise ValueError(f"probabilities sum to {sum(self.table.values())}")

    def __getitem__(self, symbol: str) -> Fraction:
        return self.table.get(symbol, Fraction(0))


@dataclass(frozen=True)
class CommitmentScheme:
    kind: str
    N: int
    gamma: tuple[int, ...] = (1, 2, 3)
    epsilon: Fraction = Fraction(0)
    func: Callable[[int, str], str] | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown scheme kind {self.kind!r}")
        if len(set(self.gamma)) < 2 or len(set(self.gamma)) != len(self.gamma):
            raise ValueError("Gamma needs at least two distinct values")
        if self.N < 0:
            raise ValueError("security parameter must be nonnegative")
        eps = Fraction(self.epsilon)
        if not 0 <= eps <= 1:
            raise ValueError(f"epsilon {self.epsilon} outside [0, 1]")
        object.__setattr__(self, "epsilon", eps)
        if (self.kind == "custom") != (self.func is not None):
            raise ValueError("a commit function is given exactly for the custom kind")

    @classmethod
    def transparent(cls, N: int, gamma=(1, 2, 3)) -> "CommitmentScheme":
        return cls("transparent", N, tuple(gamma))

    @classmethod
    def ideal(cls, N: int, gamma=(1, 2, 3)) -> "CommitmentScheme":
        return cls("ideal", N, tuple(gamma))

    @classmethod
    def leaky(cls, epsilon, N: int = 0, gamma=(1, 2, 3)) -> "CommitmentScheme":
        return cls("leaky", N, tuple(gamma), Fraction(epsilon))

    @classmethod
    def from_function(cls, func: Callable[[int, str], str], N: int, gamma=(1, 2, 3)) -> "CommitmentScheme":
        return cls("custom", N, tuple(gamma), func=func)

    @classmethod
    def from_manifest(cls, data: dict) -> "CommitmentScheme":
        kind = data["kind"]
        n = int(data.get("N", 0))
        if kind == "leaky":
            return cls.leaky(data.get("eps", 0), n)
        if kind in ("transparent", "ideal"):
            return cls(kind, n)
        raise ValueError(f"kind {kind!r} cannot be built from a manifest")

    @property
    def deterministic(self) -> bool:
        return self.kind in ("transparent", "custom")

    @property
    def width(self) -> int:
        return max(1, (len(self.gamma) - 1).bit_length())

    def encode(self, a: int) -> str:
        return format(self.gamma.index(a), f"0{self.width}b")

    def randomness(self) -> list[str]:
        if self.N > SUPPORT_LIMIT:
            raise ScanLimitExceeded(f"2^{self.N} randomness strings exceed limit N <= {SUPPORT_LIMIT}")
        return ["".join(bits) for bits in itertools.product("01", repeat=self.N)]

    def _check_value(self, a) -> None:
        if a not in self.gamma:
            raise ValueError(f"value {a!r} outside Gamma = {self.gamma}")

    def _check_x(self, x: str) -> None:
        if len(x) != self.N or set(x) - {"0", "1"}:
            raise ValueError(f"randomness must be a {self.N}-bit string, got {x!r}")

    def f(self, a: int, x: str) -> str:
        self._check_value(a)
        self._check_x(x)
        if self.kind == "transparent":
            return self.encode(a) + x
        if self.kind == "custom":
            return self.func(a, x)
        raise UnsupportedOperation(f"{self.kind} commitments have no string form; use distribution()")

    # symbols of the distributional kinds: a tag bit, a value field and N bits
    def bot_symbol(self, x: str) -> str:
        return "0" + "0" * self.width + x

    def reveal_symbol(self, a: int) -> str:
        return "1" + self.encode(a) + "0" * self.N

    def alphabet(self) -> tuple[str, ...]:
        xs = self.randomness()
        if self.deterministic:
            syms = {self.f(a, x) for a in self.gamma for x in xs}
        elif self.kind == "ideal":
            syms = {self.bot_symbol(x) for x in xs}
        else:
            syms = {self.bot_symbol(x) for x in xs} | {self.reveal_symbol(a) for a in self.gamma}
        return tuple(sorted(syms))


def commit(scheme: CommitmentScheme, a: int, x: str) -> str:
    return scheme.f(a, x)


def verify_opening(scheme: CommitmentScheme, s: str, a: int, x: str) -> bool:
    return scheme.f(a, x) == s


def distribution(scheme: CommitmentScheme, a: int) -> CommitmentDistribution:
    """``F_N(a)``: the law of the commitment string for value ``a``."""
    scheme._check_value(a)
    xs = scheme.randomness()
    unit = Fraction(1, len(xs))
    table: dict[str, Fraction] = {}
    if scheme.deterministic:
        for x in xs:
            s = scheme.f(a, x)
            table[s] = table.get(s, Fraction(0)) + unit
    else:
        hide = 1 - scheme.epsilon if scheme.kind == "leaky" else Fraction(1)
        if hide:
            for x in xs:
                table[scheme.bot_symbol(x)] = hide * unit
        if scheme.kind == "leaky" and scheme.epsilon:
            table[scheme.reveal_symbol(a)] = scheme.epsilon
    return CommitmentDistribution(a, dict(sorted(table.items())))


@dataclass(frozen=True)
class BindingReport:
    passed: bool
    pairs_checked: int
    counterexample: tuple[tuple[int, str], tuple[int, str]] | None = None


def binding_check(scheme: CommitmentScheme) -> BindingReport:
    """Compare ``f(a, x)`` and ``f(b, y)`` over every pair with ``a != b``."""
    if not scheme.deterministic:
        raise UnsupportedOperation("binding is checked for deterministic kinds only")
    if scheme.N > BINDING_LIMIT:
        raise ScanLimitExceeded(f"exhaustive binding scan needs N <= {BINDING_LIMIT}")
    xs = scheme.randomness()
    table = {(a, x): scheme.f(a, x) for a in scheme.gamma for x in xs}
    checked = 0
    for a, b in itertools.product(scheme.gamma, repeat=2):
        if a == b:
            continue
        for x, y in itertools.product(xs, repeat=2):
            checked += 1
            if table[a, x] == table[b, y]:
                return BindingReport(False, checked, ((a, x), (b, y)))
    return BindingReport(True, checked)


def tv_exact(scheme: CommitmentScheme, a: int, b: int) -> Fraction:
    p, q = distribution(scheme, a), distribution(scheme, b)
    keys = set(p.table) | set(q.table)
    return sum((abs(p[s] - q[s]) for s in keys), Fraction(0)) / 2


def concealing_tv(scheme: CommitmentScheme, a: int, b: int) -> float:
    """Total variation distance between ``F_N(a)`` and ``F_N(b)``."""
    return float(tv_exact(scheme, a, b))


def support_table_csv(scheme: CommitmentScheme) -> str:
    """One ``value,symbol,probability`` row per support entry, for audit."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["value", "symbol", "probability"])
    for a in scheme.gamma:
        for s, p in distribution(scheme, a).table.items():
            w.writerow([a, s, str(p)])
    return buf.getvalue()
