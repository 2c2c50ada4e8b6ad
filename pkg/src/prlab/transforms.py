"""Sequence transformations: composition with increasing maps, witness lifts and
the square-part transfer between the Liouville and Moebius functions."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DataRangeError, DomainError
from .seqkernel import SeqBlock, SeqKind, factorize, sieve_range, small_primes
from .sources import sequence_values
from .testlang.ast import AffineLift, Ternary, TestFn


class GSpec:
    """Strictly increasing map g on ``x >= xmin`` with an inverse on its range."""

    xmin: int

    def __call__(self, x):
        raise NotImplementedError

    def inverse(self, n: int) -> int | None:
        """``x`` with ``g(x) == n`` and ``x >= xmin``, else None."""
        raise NotImplementedError

    def apply_array(self, xs: np.ndarray) -> np.ndarray:
        return np.array([self(int(x)) for x in xs], dtype=np.int64)

    def first_at_least(self, n0: int) -> int:
        """Smallest ``x >= xmin`` with ``g(x) >= n0``."""
        lo = self.xmin
        if self(lo) >= n0:
            return lo
        step = 1
        while self(lo + step) < n0:
            step *= 2
        a, b = lo + step // 2, lo + step
        while a < b:
            mid = (a + b) // 2
            if self(mid) >= n0:
                b = mid
            else:
                a = mid + 1
        return a


@dataclass(frozen=True)
class AffineG(GSpec):
    """``g(x) = a x + b`` for ``x >= xmin``; defaults xmin to the first x with g(x) >= 1."""

    a: int
    b: int = 0
    xmin: int | None = None

    def __post_init__(self):
        if self.a < 1:
            raise DomainError("slope a must be >= 1")
        if self.xmin is None:
            object.__setattr__(self, "xmin", max(0, -((self.b - 1) // self.a)))
        if self.xmin < 0:
            raise DomainError("xmin must be >= 0")
        if self.a * self.xmin + self.b < 1:
            raise DomainError("g(xmin) must be >= 1")

    @classmethod
    def parse(cls, text: str) -> "AffineG":
        """``"a,b"`` or ``"a,b,xmin"``."""
        parts = [int(p) for p in text.split(",")]
        if len(parts) not in (2, 3):
            raise DomainError("expected a,b[,xmin]")
        return cls(*parts)

    def __call__(self, x):
        return self.a * x + self.b

    def apply_array(self, xs):
        return self.a * np.asarray(xs, dtype=np.int64) + self.b

    def inverse(self, n):
        d = n - self.b
        if d < 0 or d % self.a:
            return None
        x = d // self.a
        return x if x >= self.xmin else None

    @property
    def range_density(self) -> float:
        return 1 / self.a

    def __str__(self):
        return f"{self.a},{self.b},{self.xmin}"


@dataclass(frozen=True)
class MonotoneG(GSpec):
    """Arbitrary strictly increasing integer map, inverted by binary search."""

    fn: Callable[[int], int] = field(compare=False)
    xmin: int = 0
    name: str = "g"

    def __call__(self, x):
        return int(self.fn(int(x)))

    def inverse(self, n):
        if n < self(self.xmin):
            return None
        x = self.first_at_least(n)
        return x if self(x) == n else None

    def range_density(self, upto: int) -> float:
        """Empirical density of Rng(g) in ``[0, upto)``."""
        if upto <= self(self.xmin):
            return 0.0
        return (self.first_at_least(upto) - self.xmin) / upto

    def __str__(self):
        return f"monotone:{self.name}"


def compose_g(s, g: GSpec, lo: int, hi: int) -> SeqBlock:
    """``s'(x) = s(g(x))`` for x in ``[lo, hi)``."""
    if lo < g.xmin:
        raise DomainError(f"x={lo} below the domain start {g.xmin}")
    if hi <= lo:
        raise DomainError("empty range")
    gs = g.apply_array(np.arange(lo, hi, dtype=np.int64))
    if isinstance(s, SeqBlock):
        if gs[0] < s.lo or gs[-1] >= s.hi:
            raise DataRangeError(
                f"g maps into [{gs[0]}, {gs[-1]}], outside data [{s.lo}, {s.hi})"
            )
        vals = s.values[gs - s.lo]
    elif isinstance(s, TestFn):
        vals = s.eval_array(gs)
    else:
        top = int(gs[-1]) + 1
        full = sequence_values(s, int(gs[0]), top)
        vals = full[gs - gs[0]]
    return SeqBlock(lo, hi, SeqKind.CUSTOM, vals, {"source": "compose_g", "g": str(g)})


@dataclass(frozen=True)
class MonotoneLift(Ternary):
    """Witness lift through a non-affine map (not expressible in the text syntax)."""

    inner: Ternary
    g: MonotoneG
    n0: int

    def eval(self, n):
        if n < self.n0:
            return 0
        x = self.g.inverse(n)
        return 0 if x is None else self.inner.eval(x)

    def eval_array(self, ns):
        return np.array([self.eval(int(n)) for n in np.asarray(ns)], dtype=np.int8)

    def values(self):
        return self.inner.values() | {0}

    def pretty(self):
        return f"<lift {self.inner.pretty()} through {self.g} from {self.n0}>"


RANGE_DENSITY_PROBE = (10_000, 1_000_000)


def lift_witness(f: TestFn, g: GSpec, n0: int) -> Ternary:
    """``f'(n) = f(g^{-1}(n))`` if ``n >= n0`` and ``n`` is in the range of g, else 0."""
    if not f.ternary:
        raise DomainError("the witness must be ternary")
    if isinstance(g, AffineG):
        return AffineLift(f, g.a, g.b, g.xmin, n0)
    if isinstance(g, MonotoneG):
        small, large = (g.range_density(u) for u in RANGE_DENSITY_PROBE)
        if large < small / 2:
            warnings.warn(
                f"range of {g} looks like density 0 ({small:.3g} -> {large:.3g}); "
                "the lift carries no information",
                stacklevel=2,
            )
        return MonotoneLift(f, g, n0)
    raise DomainError(f"unsupported map {g!r}")


def bookkeeping_sums(f: TestFn, g: GSpec, n0: int, s, checkpoints: Sequence[int]):
    """Both sides of the lift identity at every checkpoint M.

    left(M)  = sum_{1 <= m <= M} f'(m) s(m)
    right(M) = sum_{x >= x0, g(x) <= M} f(x) s(g(x)),  x0 = first x with g(x) >= n0
    """
    if n0 < 1:
        raise DomainError("n0 must be >= 1")
    lifted = lift_witness(f, g, n0)
    top = checkpoints[-1]
    ms = np.arange(1, top + 1, dtype=np.int64)
    svals = sequence_values(s, 1, top + 1)
    left = np.cumsum(lifted.eval_array(ms).astype(np.int64) * svals)
    x0 = g.first_at_least(n0)
    x_hi = x0
    while g(x_hi) <= top:
        x_hi += 1
    xs = np.arange(x0, x_hi, dtype=np.int64)
    gx = g.apply_array(xs)
    terms = f.eval_array(xs).astype(np.int64) * svals[gx - 1]
    right_at = np.concatenate([[0], np.cumsum(terms)])
    lefts, rights = [], []
    for M in checkpoints:
        lefts.append(int(left[M - 1]))
        rights.append(int(right_at[np.searchsorted(gx, M, side="right")]))
    return lefts, rights


# -- mu <-> lambda transfer ------------------------------------------------------------


def square_part(n: int) -> tuple[int, int]:
    """``(k, i)`` with ``n = k*k*i`` and ``i`` squarefree, via factorization."""
    return factorize(n).square_part()


def squarefree_kernel(hi: int) -> np.ndarray:
    """``i(n)`` for every n in ``[0, hi)`` where ``n = k^2 i`` with i squarefree."""
    kern = np.arange(hi, dtype=np.int64)
    for p in small_primes(math.isqrt(max(hi - 1, 1))).tolist():
        pp = p * p
        pk = pp
        while pk < hi:
            kern[pk::pk] //= pp
            pk *= pp
    return kern


def zeta2_tail(n0: int) -> float:
    """``sum_{k > n0} k**-2``."""
    partial = math.fsum(1.0 / (k * k) for k in range(1, n0 + 1))
    return max(math.pi ** 2 / 6 - partial, 0.0)


def truncation_point(eps: float) -> int:
    """Smallest n0 with ``sum_{k > n0} k**-2 < eps``."""
    if eps <= 0:
        raise DomainError("eps must be positive")
    n0 = max(1, int(1 / eps) - 1)
    while n0 > 1 and zeta2_tail(n0 - 1) < eps:
        n0 -= 1
    while zeta2_tail(n0) >= eps:
        n0 += 1
    return n0


@dataclass(frozen=True)
class TransferReport:
    N: int
    checked: int
    counterexamples: tuple
    n0: int
    tail: float
    tail_bound: float

    @property
    def passed(self) -> bool:
        return not self.counterexamples

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "checked": self.checked,
            "passed": self.passed,
            "counterexamples": [list(c) for c in self.counterexamples],
            "truncation": {"n0": self.n0, "tail": self.tail, "bound": self.tail_bound},
        }


def mu_lambda_transfer_check(N: int, n0: int = 10, eps: float | None = None,
                             max_report: int = 100) -> TransferReport:
    """Check ``lambda(k^2 i) = mu(i)`` for every ``n = k^2 i <= N`` with i squarefree."""
    if N < 4:
        raise DomainError("N must be >= 4")
    if eps is not None:
        n0 = truncation_point(eps)
    lam = sieve_range(1, N + 1, SeqKind.LIOUVILLE).values
    mu = sieve_range(1, N + 1, SeqKind.MOBIUS).values
    kern = squarefree_kernel(N + 1)[1:]
    ns = np.arange(1, N + 1, dtype=np.int64)
    ks = np.rint(np.sqrt(ns // kern)).astype(np.int64)
    bad_shape = (ks * ks * kern != ns) | (mu[kern - 1] == 0)
    bad_value = lam != mu[kern - 1]
    bad = np.flatnonzero(bad_shape | bad_value)
    examples = tuple(
        (int(ns[j]), int(ks[j]), int(kern[j]), int(lam[j]), int(mu[kern[j] - 1]))
        for j in bad[:max_report]
    )
    return TransferReport(N, N, examples, n0, zeta2_tail(n0), 1 / n0)
