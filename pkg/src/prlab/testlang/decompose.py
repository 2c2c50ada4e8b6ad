"""Rewrites of test functions that stay inside the language.

``split_pm`` writes a ternary f as the average of two sign-valued functions,
``dyadic_decompose`` expands a dyadic F into ternary digit functions and
``square_flip`` negates f on numbers with a small square divisor.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

from ..errors import DomainError, DSLTypeError
from .ast import (
    FALSE,
    TRUE,
    AffineLift,
    BoolExpr,
    BoolLift,
    DyadicSum,
    Less,
    Lit,
    ModEq,
    Pm,
    Prod,
    Tern,
    Ternary,
    TestFn,
    and_,
    not_,
    or_,
    prod,
)


def equals(t: Ternary, v: int) -> BoolExpr:
    """Boolean expression that holds exactly where ``t(n) == v``."""
    if v not in t.values():
        return FALSE
    if isinstance(t, Lit):
        return TRUE if t.value == v else FALSE
    if isinstance(t, Pm):
        if v == 0:
            return FALSE
        return t.cond if v == 1 else not_(t.cond)
    if isinstance(t, Tern):
        hits = []
        earlier = []
        for guard, value in t.cases:
            if value == v:
                hits.append(and_(*[not_(g) for g in earlier], guard))
            earlier.append(guard)
        if t.default == v:
            hits.append(and_(*[not_(g) for g in earlier]))
        return or_(*hits)
    if isinstance(t, Prod):
        head, rest = t.factors[0], prod(*t.factors[1:])
        if v == 0:
            return or_(equals(head, 0), equals(rest, 0))
        return or_(
            and_(equals(head, 1), equals(rest, v)),
            and_(equals(head, -1), equals(rest, -v)),
        )
    if isinstance(t, AffineLift):
        if v == 0:
            return not_(BoolLift(not_(equals(t.inner, 0)), t.a, t.b, t.xmin, t.n0))
        return BoolLift(equals(t.inner, v), t.a, t.b, t.xmin, t.n0)
    raise DSLTypeError(f"cannot express equality for {type(t).__name__} nodes")


def split_pm(f: TestFn) -> tuple[Ternary, Ternary]:
    """Return ``(f_plus, f_minus)``, both +-1 valued, with ``(f_plus + f_minus)/2 == f``.

    ``f_plus(n) = 1`` iff ``f(n) = 1``; ``f_minus(n) = -1`` iff ``f(n) = -1``.
    """
    if not f.ternary:
        raise DSLTypeError("split_pm needs a ternary test function")
    return Pm(equals(f, 1)), Pm(not_(equals(f, -1)))


@dataclass(frozen=True)
class DyadicDecomposition:
    """``F ~ sum 2**-j * component_j`` with ternary components."""

    terms: tuple  # ((j, Ternary), ...), j strictly increasing
    precision: int  # J

    def __post_init__(self):
        js = [j for j, _ in self.terms]
        if any(a >= b for a, b in zip(js, js[1:])):
            raise DomainError("exponents must be strictly increasing")

    @property
    def error_bound(self) -> Fraction:
        return Fraction(1, 1 << self.precision)

    def eval(self, n: int) -> Fraction:
        return sum((Fraction(t.eval(n), 1 << j) for j, t in self.terms), Fraction(0))

    def as_testfn(self) -> DyadicSum:
        return DyadicSum(tuple((Fraction(1, 1 << j), t) for j, t in self.terms))


def signed_digits(x: Fraction, precision: int) -> list[int]:
    """Digits d_1..d_J in {-1,0,1} of ``x`` in [-1,1], all of one sign.

    ``|x - sum d_j 2**-j| <= 2**-J``; the expansion is exact whenever ``x``
    has at most J binary places and ``|x| < 1``.
    """
    if abs(x) > 1:
        raise DomainError(f"{x} outside [-1, 1]")
    sign = -1 if x < 0 else 1
    mag = abs(x)
    scaled = math.floor(mag * (1 << precision))
    scaled = min(scaled, (1 << precision) - 1)
    return [sign * ((scaled >> (precision - j)) & 1) for j in range(1, precision + 1)]


def _terms_of(F: TestFn) -> list[tuple[Fraction, Ternary]]:
    if isinstance(F, DyadicSum):
        return list(F.terms)
    if F.ternary:
        return [(Fraction(1), F)]
    raise DSLTypeError(f"cannot decompose {type(F).__name__}")


def dyadic_decompose(F: TestFn, precision: int) -> DyadicDecomposition:
    """Expand ``F`` into ``sum_{j=1..J} 2**-j f_j`` with ternary ``f_j``.

    Each ``f_j`` is a guarded table over the joint values of F's ternary terms,
    so it is again an expression of the language.
    """
    if precision < 1:
        raise DomainError("precision J must be >= 1")
    terms = _terms_of(F)
    value_sets = [sorted(t.values()) for _, t in terms]
    digit_cases: dict[int, list] = {j: [] for j in range(1, precision + 1)}
    for combo in itertools.product(*value_sets):
        x = sum((w * v for (w, _), v in zip(terms, combo)), Fraction(0))
        digits = signed_digits(x, precision)
        if not any(digits):
            continue
        guard = and_(*[equals(t, v) for (_, t), v in zip(terms, combo)])
        if guard == FALSE:
            continue
        for j, d in enumerate(digits, start=1):
            if d:
                digit_cases[j].append((guard, d))
    out = []
    for j in range(1, precision + 1):
        cases = digit_cases[j]
        if not cases:
            continue
        out.append((j, _table(cases)))
    return DyadicDecomposition(tuple(out), precision)


def _table(cases) -> Ternary:
    guard, value = cases[0]
    if len(cases) == 1 and guard == TRUE:
        return Lit(value)
    return Tern(tuple(cases), 0)


def square_divisor_predicate(n0: int) -> BoolExpr:
    """Holds iff k*k divides n for some 2 <= k <= n0 (primes suffice)."""
    if n0 < 2:
        raise DomainError("n0 must be >= 2; k = 1 would flip every value")
    from ..seqkernel import small_primes

    return or_(*[ModEq(p * p, 0) for p in small_primes(n0).tolist()])


def square_flip(f: TestFn, n0: int) -> Ternary:
    """``g(n) = -f(n)`` if k^2 | n for some k in [2, n0], otherwise ``f(n)``."""
    if not f.ternary:
        raise DSLTypeError("square_flip needs a ternary test function")
    return prod(Pm(not_(square_divisor_predicate(n0))), f)


def flip_after(f: TestFn, cut: int) -> Ternary:
    """``f(n)`` for ``n <= cut`` and ``-f(n)`` above."""
    if not f.ternary:
        raise DSLTypeError("flip_tail needs a ternary test function")
    return prod(Pm(Less(cut + 1)), f)
