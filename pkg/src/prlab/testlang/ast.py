"""Expression trees for low-complexity test functions over the naturals.

Three layers:

* boolean predicates of ``n`` (bits, residues, thresholds, popcount) closed
  under not/and/or/xor;
* ternary expressions with values in {-1, 0, +1}: ``pm(bool)``, literals,
  guarded ``tern(...)`` tables and products of those;
* dyadic sums ``sum_j w_j * ternary_j`` with dyadic weights, ``sum |w_j| <= 1``.

Every node evaluates either at a single ``n`` (Python ints / Fractions) or over
a numpy array of ``n`` at once. No node contains a loop whose length depends
on ``n``, so evaluation is polynomial in the bit length by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from ..errors import DSLTypeError, DomainError

# binding strength used by the pretty printer
_PREC_OR, _PREC_XOR, _PREC_AND, _PREC_NOT, _PREC_ATOM = 1, 2, 3, 4, 5


def _as_array(ns) -> np.ndarray:
    arr = np.asarray(ns, dtype=np.int64)
    if arr.size and arr.min() < 0:
        raise DomainError("test functions are defined for n >= 0")
    return arr


# -- boolean layer -------------------------------------------------------------


class BoolExpr:
    prec = _PREC_ATOM

    def __call__(self, n: int) -> bool:
        return self.eval(n)

    def eval(self, n: int) -> bool:
        raise NotImplementedError

    def eval_array(self, ns) -> np.ndarray:
        raise NotImplementedError

    def pretty(self) -> str:
        raise NotImplementedError

    def size(self) -> int:
        return 1

    def __str__(self):
        return self.pretty()


@dataclass(frozen=True)
class BoolConst(BoolExpr):
    value: bool

    def eval(self, n):
        return self.value

    def eval_array(self, ns):
        return np.full(np.shape(ns), self.value, dtype=bool)

    def pretty(self):
        return "true" if self.value else "false"


@dataclass(frozen=True)
class Bit(BoolExpr):
    index: int

    def __post_init__(self):
        if not 0 <= self.index < 63:
            raise DSLTypeError(f"bit index {self.index} outside [0, 63)")

    def eval(self, n):
        return bool((n >> self.index) & 1)

    def eval_array(self, ns):
        return ((_as_array(ns) >> self.index) & 1).astype(bool)

    def pretty(self):
        return f"bit(n,{self.index})"


@dataclass(frozen=True)
class ModEq(BoolExpr):
    modulus: int
    residue: int

    def __post_init__(self):
        if self.modulus < 1:
            raise DSLTypeError("modulus must be >= 1")
        if not 0 <= self.residue < self.modulus:
            raise DSLTypeError(f"residue {self.residue} outside [0, {self.modulus})")

    def eval(self, n):
        return n % self.modulus == self.residue

    def eval_array(self, ns):
        return _as_array(ns) % self.modulus == self.residue

    def pretty(self):
        return f"n % {self.modulus} == {self.residue}"


@dataclass(frozen=True)
class Less(BoolExpr):
    bound: int

    def eval(self, n):
        return n < self.bound

    def eval_array(self, ns):
        return _as_array(ns) < self.bound

    def pretty(self):
        return f"n < {self.bound}"


@dataclass(frozen=True)
class InRange(BoolExpr):
    start: int
    stop: int

    def eval(self, n):
        return self.start <= n < self.stop

    def eval_array(self, ns):
        arr = _as_array(ns)
        return (arr >= self.start) & (arr < self.stop)

    def pretty(self):
        return f"n in [{self.start},{self.stop})"


@dataclass(frozen=True)
class PopcountGE(BoolExpr):
    threshold: int

    def eval(self, n):
        return bin(n).count("1") >= self.threshold

    def eval_array(self, ns):
        arr = _as_array(ns).astype(np.uint64)
        return np.bitwise_count(arr) >= self.threshold

    def pretty(self):
        return f"popcount(n) >= {self.threshold}"


@dataclass(frozen=True)
class Not(BoolExpr):
    arg: BoolExpr
    prec = _PREC_NOT

    def eval(self, n):
        return not self.arg.eval(n)

    def eval_array(self, ns):
        return ~self.arg.eval_array(ns)

    def pretty(self):
        inner = self.arg.pretty()
        if self.arg.prec < _PREC_NOT:
            inner = f"({inner})"
        return f"not {inner}"

    def size(self):
        return 1 + self.arg.size()


@dataclass(frozen=True)
class _Binary(BoolExpr):
    left: BoolExpr
    right: BoolExpr
    op = ""

    def pretty(self):
        lhs = self.left.pretty()
        rhs = self.right.pretty()
        if self.left.prec < self.prec:
            lhs = f"({lhs})"
        if self.right.prec <= self.prec:
            rhs = f"({rhs})"
        return f"{lhs} {self.op} {rhs}"

    def size(self):
        return 1 + self.left.size() + self.right.size()


@dataclass(frozen=True)
class And(_Binary):
    op = "and"
    prec = _PREC_AND

    def eval(self, n):
        return self.left.eval(n) and self.right.eval(n)

    def eval_array(self, ns):
        return self.left.eval_array(ns) & self.right.eval_array(ns)


@dataclass(frozen=True)
class Or(_Binary):
    op = "or"
    prec = _PREC_OR

    def eval(self, n):
        return self.left.eval(n) or self.right.eval(n)

    def eval_array(self, ns):
        return self.left.eval_array(ns) | self.right.eval_array(ns)


@dataclass(frozen=True)
class Xor(_Binary):
    op = "xor"
    prec = _PREC_XOR

    def eval(self, n):
        return self.left.eval(n) != self.right.eval(n)

    def eval_array(self, ns):
        return self.left.eval_array(ns) ^ self.right.eval_array(ns)


TRUE = BoolConst(True)
FALSE = BoolConst(False)


def not_(b: BoolExpr) -> BoolExpr:
    if isinstance(b, BoolConst):
        return FALSE if b.value else TRUE
    if isinstance(b, Not):
        return b.arg
    return Not(b)


def and_(*args: BoolExpr) -> BoolExpr:
    kept = []
    for b in args:
        if b == FALSE:
            return FALSE
        if b != TRUE:
            kept.append(b)
    if not kept:
        return TRUE
    out = kept[0]
    for b in kept[1:]:
        out = And(out, b)
    return out


def or_(*args: BoolExpr) -> BoolExpr:
    kept = []
    for b in args:
        if b == TRUE:
            return TRUE
        if b != FALSE:
            kept.append(b)
    if not kept:
        return FALSE
    out = kept[0]
    for b in kept[1:]:
        out = Or(out, b)
    return out


def _lift_preimage(arr, a, b, xmin, n0):
    """Mask of n with ``n >= n0`` and ``n = a*x + b``, ``x >= xmin``; and those x."""
    d = arr - b
    ok = (arr >= n0) & (d >= 0) & (d % a == 0)
    xs = np.where(ok, d // a, 0)
    ok &= xs >= xmin
    return ok, xs


def _check_slope(a):
    if a < 1:
        raise DSLTypeError("lift slope must be >= 1")


@dataclass(frozen=True)
class BoolLift(BoolExpr):
    """``cond((n - b) / a)`` when n lies in the lifted range, else false."""

    cond: BoolExpr
    a: int
    b: int
    xmin: int
    n0: int

    def __post_init__(self):
        _check_slope(self.a)

    def eval(self, n):
        ok, xs = _lift_preimage(np.array([n], dtype=np.int64), self.a, self.b, self.xmin, self.n0)
        return bool(ok[0]) and bool(self.cond.eval(int(xs[0])))

    def eval_array(self, ns):
        ok, xs = _lift_preimage(_as_array(ns), self.a, self.b, self.xmin, self.n0)
        out = np.zeros(ok.shape, dtype=bool)
        if ok.any():
            out[ok] = self.cond.eval_array(xs[ok])
        return out

    def pretty(self):
        return f"lift({self.cond.pretty()}; {self.a}, {self.b}, {self.xmin}; {self.n0})"

    def size(self):
        return 1 + self.cond.size()


# -- test functions ------------------------------------------------------------


class TestFn:
    """A test function f: N -> [-1, 1]; subclasses are ternary or dyadic."""

    __test__ = False  # keep pytest from collecting this class
    ternary = True

    def __call__(self, n: int):
        return self.eval(n)

    def eval(self, n: int):
        raise NotImplementedError

    def eval_scaled(self, ns) -> tuple[np.ndarray, int]:
        """Vectorized values as ``(numerators, e)`` meaning ``numerators / 2**e``."""
        return self.eval_array(ns).astype(np.int64), 0

    def eval_array(self, ns) -> np.ndarray:
        raise NotImplementedError

    def pretty(self) -> str:
        raise NotImplementedError

    def size(self) -> int:
        return 1

    def __str__(self):
        return self.pretty()


class Ternary(TestFn):
    """Ternary-valued expression; ``values()`` is a static superset of its range."""

    def values(self) -> frozenset:
        return frozenset({-1, 0, 1})


@dataclass(frozen=True)
class Lit(Ternary):
    value: int

    def __post_init__(self):
        if self.value not in (-1, 0, 1):
            raise DSLTypeError(f"ternary literal must be -1, 0 or 1, got {self.value}")

    def eval(self, n):
        return self.value

    def eval_array(self, ns):
        return np.full(np.shape(ns), self.value, dtype=np.int8)

    def values(self):
        return frozenset({self.value})

    def pretty(self):
        return str(self.value)


@dataclass(frozen=True)
class Pm(Ternary):
    """Sign wrapper: true -> +1, false -> -1."""

    cond: BoolExpr

    def eval(self, n):
        return 1 if self.cond.eval(n) else -1

    def eval_array(self, ns):
        return np.where(self.cond.eval_array(ns), 1, -1).astype(np.int8)

    def values(self):
        if isinstance(self.cond, BoolConst):
            return frozenset({1 if self.cond.value else -1})
        return frozenset({-1, 1})

    def pretty(self):
        return f"pm({self.cond.pretty()})"

    def size(self):
        return 1 + self.cond.size()


@dataclass(frozen=True)
class Tern(Ternary):
    """First matching guard wins; ``default`` when no guard holds."""

    cases: tuple  # ((BoolExpr, int), ...)
    default: int = 0

    def __post_init__(self):
        for _, v in self.cases:
            if v not in (-1, 0, 1):
                raise DSLTypeError(f"case value must be ternary, got {v}")
        if self.default not in (-1, 0, 1):
            raise DSLTypeError(f"default must be ternary, got {self.default}")

    def eval(self, n):
        for guard, v in self.cases:
            if guard.eval(n):
                return v
        return self.default

    def eval_array(self, ns):
        arr = _as_array(ns)
        out = np.full(arr.shape, self.default, dtype=np.int8)
        taken = np.zeros(arr.shape, dtype=bool)
        for guard, v in self.cases:
            hit = guard.eval_array(arr) & ~taken
            out[hit] = v
            taken |= hit
        return out

    def values(self):
        return frozenset({v for _, v in self.cases} | {self.default})

    def pretty(self):
        parts = [f"{g.pretty()} -> {v}" for g, v in self.cases]
        if self.default != 0 or not parts:
            parts.append(f"else -> {self.default}")
        return f"tern({', '.join(parts)})"

    def size(self):
        return 1 + sum(g.size() for g, _ in self.cases)


@dataclass(frozen=True)
class Prod(Ternary):
    factors: tuple

    def __post_init__(self):
        if len(self.factors) < 2:
            raise DSLTypeError("a product needs at least two factors")

    def eval(self, n):
        out = 1
        for f in self.factors:
            out *= f.eval(n)
            if out == 0:
                break
        return out

    def eval_array(self, ns):
        arr = _as_array(ns)
        out = np.ones(arr.shape, dtype=np.int8)
        for f in self.factors:
            out *= f.eval_array(arr)
        return out

    def values(self):
        acc = {1}
        for f in self.factors:
            acc = {a * b for a in acc for b in f.values()}
        return frozenset(acc)

    def pretty(self):
        return " * ".join(_factor_text(f) for f in self.factors)

    def size(self):
        return 1 + sum(f.size() for f in self.factors)


def _factor_text(f: Ternary) -> str:
    text = f.pretty()
    return f"({text})" if isinstance(f, Prod) else text


def prod(*factors: Ternary) -> Ternary:
    """Product with literal folding and flattening."""
    flat = []
    sign = 1
    for f in factors:
        if isinstance(f, Prod):
            flat.extend(f.factors)
        elif isinstance(f, Lit):
            if f.value == 0:
                return Lit(0)
            sign *= f.value
        else:
            flat.append(f)
    if sign == -1:
        flat.append(Lit(-1))
    if not flat:
        return Lit(1)
    if len(flat) == 1:
        return flat[0]
    return Prod(tuple(flat))


@dataclass(frozen=True)
class AffineLift(Ternary):
    """``f((n - b) / a)`` when ``n >= n0`` and ``n = a*x + b`` with ``x >= xmin``, else 0."""

    inner: Ternary
    a: int
    b: int
    xmin: int
    n0: int

    def __post_init__(self):
        _check_slope(self.a)

    def eval(self, n):
        ok, xs = _lift_preimage(np.array([n], dtype=np.int64), self.a, self.b, self.xmin, self.n0)
        return self.inner.eval(int(xs[0])) if ok[0] else 0

    def eval_array(self, ns):
        ok, xs = _lift_preimage(_as_array(ns), self.a, self.b, self.xmin, self.n0)
        out = np.zeros(ok.shape, dtype=np.int8)
        if ok.any():
            out[ok] = self.inner.eval_array(xs[ok])
        return out

    def values(self):
        return self.inner.values() | {0}

    def pretty(self):
        return f"lift({self.inner.pretty()}; {self.a}, {self.b}, {self.xmin}; {self.n0})"

    def size(self):
        return 1 + self.inner.size()


def _is_dyadic(w: Fraction) -> bool:
    d = w.denominator
    return d & (d - 1) == 0


@dataclass(frozen=True)
class DyadicSum(TestFn):
    """``sum_j weight_j * term_j`` with dyadic weights."""

    terms: tuple  # ((Fraction, Ternary), ...)
    ternary = False

    def __post_init__(self):
        total = Fraction(0)
        for w, _ in self.terms:
            if not _is_dyadic(w):
                raise DSLTypeError(f"weight {w} is not a dyadic rational")
            total += abs(w)
        if total > 1:
            raise DSLTypeError(f"sum of |weights| is {total} > 1; values would leave [-1, 1]")

    @cached_property
    def exponent(self) -> int:
        return max((w.denominator.bit_length() - 1 for w, _ in self.terms), default=0)

    def eval(self, n):
        return sum((w * t.eval(n) for w, t in self.terms), Fraction(0))

    def eval_scaled(self, ns):
        arr = _as_array(ns)
        e = self.exponent
        out = np.zeros(arr.shape, dtype=np.int64)
        for w, t in self.terms:
            scaled = w * (1 << e)
            out += int(scaled) * t.eval_array(arr).astype(np.int64)
        return out, e

    def eval_array(self, ns):
        num, e = self.eval_scaled(ns)
        return num / float(1 << e)

    def pretty(self):
        if not self.terms:
            return "0/1 * 0"
        chunks = []
        for k, (w, t) in enumerate(self.terms):
            text = f"{abs(w.numerator)}/{w.denominator} * {t.pretty()}"
            if k == 0:
                chunks.append(("-" if w < 0 else "") + text)
            else:
                chunks.append(("- " if w < 0 else "+ ") + text)
        return " ".join(chunks)

    def size(self):
        return 1 + sum(t.size() for _, t in self.terms)


def evaluate(f: TestFn, n: int):
    """Value of ``f`` at ``n``: int for ternary trees, Fraction for dyadic ones."""
    if n < 0:
        raise DomainError("test functions are defined for n >= 0")
    return f.eval(int(n))


def evaluate_range(f: TestFn, lo: int, hi: int) -> tuple[np.ndarray, int]:
    """Scaled values of ``f`` on ``[lo, hi)``; see :meth:`TestFn.eval_scaled`."""
    return f.eval_scaled(np.arange(lo, hi, dtype=np.int64))
