"""Correlation of a sequence with test functions, p-biased statistics and martingales.

For a sequence ``s`` and test ``f`` the raw statistic at a checkpoint ``n`` is
``S(n) = sum_{i=1..n} f(i) s(i)``, kept exactly (ints, or Fractions when ``f``
has dyadic values). It is reported with three normalizations: ``S/n``,
``S/n**(1/2 + eps)`` and ``S/sqrt(2 n ln ln n)``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .errors import DataRangeError, DomainError
from .sources import CheckpointPlan, sequence_values, source_limit
from .testlang.ast import TestFn
from .testlang.parser import parse

STREAM_BLOCK = 1 << 20

DEFAULT_BATTERY = (
    "1",
    *(f"pm(n % {m} == 0)" for m in range(2, 11)),
    *(f"pm(bit(n,{i}))" for i in range(5)),
    "pm(popcount(n) >= 8)",
    "pm(popcount(n) >= 10)",
    "pm(popcount(n) >= 12)",
    "pm(bit(n,0)) * pm(bit(n,1))",
    "pm(n % 2 == 0) * pm(n % 3 == 0)",
    "pm(bit(n,0) xor bit(n,2))",
)


def default_battery() -> list[TestFn]:
    return [parse(text) for text in DEFAULT_BATTERY]


def resolve_checkpoints(checkpoints, cap: int | None = None) -> list[int]:
    if isinstance(checkpoints, CheckpointPlan):
        if cap is None:
            raise DomainError("a checkpoint plan needs a cap")
        return checkpoints.points(cap)
    if isinstance(checkpoints, str):
        return resolve_checkpoints(CheckpointPlan.parse(checkpoints), cap)
    pts = [int(c) for c in checkpoints]
    if not pts:
        raise DomainError("no checkpoints")
    if pts[0] < 1 or any(a >= b for a, b in zip(pts, pts[1:])):
        raise DomainError("checkpoints must be strictly increasing and >= 1")
    return pts


def _check_coverage(source, last: int):
    limit = source_limit(source)
    if limit is not None and last >= limit:
        raise DataRangeError(f"checkpoint {last} beyond available data (< {limit})")
    if isinstance(getattr(source, "lo", None), int) and source.lo > 1:
        raise DataRangeError("sequence data must start at n = 1")


def _exact(numerator: int, exponent: int):
    if exponent == 0:
        return numerator
    return Fraction(numerator, 1 << exponent)


def prefix_sums(source, tests: Sequence[TestFn], checkpoints: Sequence[int],
                block: int = STREAM_BLOCK, weight: Callable | None = None):
    """Exact ``sum_{i<=n} f(i) * w(s(i))`` for every test at every checkpoint.

    Single streaming pass over ``[1, last checkpoint]`` in windows of ``block``
    values. Returns, per test, a list of scaled integer sums and the scale
    exponent (value = sum / 2**exponent).
    """
    last = checkpoints[-1]
    _check_coverage(source, last)
    totals = [0] * len(tests)
    exps = [None] * len(tests)
    out = [[] for _ in tests]
    cp = np.asarray(checkpoints, dtype=np.int64)
    for lo in range(1, last + 1, block):
        hi = min(lo + block, last + 1)
        s = sequence_values(source, lo, hi)
        if weight is not None:
            s = weight(s)
        ns = np.arange(lo, hi, dtype=np.int64)
        sel = cp[(cp >= lo) & (cp < hi)] - lo
        for k, f in enumerate(tests):
            num, e = f.eval_scaled(ns)
            if exps[k] is None:
                exps[k] = e
            running = np.cumsum(num * s)
            base = totals[k]
            out[k].extend(base + int(running[j]) for j in sel)
            totals[k] = base + int(running[-1])
    return out, [e or 0 for e in exps]


@dataclass(frozen=True)
class CorrelationTrace:
    checkpoints: tuple
    raw: tuple  # exact S(n)
    eps: float = 0.05
    test: str = ""

    @property
    def norm_n(self) -> list[float]:
        return [float(r) / n for n, r in zip(self.checkpoints, self.raw)]

    @property
    def norm_rh(self) -> list[float]:
        return [float(r) / n ** (0.5 + self.eps) for n, r in zip(self.checkpoints, self.raw)]

    @property
    def norm_lil(self) -> list[float | None]:
        return [
            float(r) / math.sqrt(2 * n * math.log(math.log(n))) if n >= 3 else None
            for n, r in zip(self.checkpoints, self.raw)
        ]

    def rows(self):
        for row in zip(self.checkpoints, self.raw, self.norm_n, self.norm_rh, self.norm_lil):
            yield row

    def to_csv(self, fh=None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["n", "raw", "norm_n", "norm_rh", "norm_lil"])
        for n, raw, a, b, c in self.rows():
            writer.writerow([n, str(raw), repr(a), repr(b), "" if c is None else repr(c)])
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text

    def to_dict(self) -> dict:
        return {
            "test": self.test,
            "eps": self.eps,
            "rows": [
                {"n": n, "raw": str(raw), "norm_n": a, "norm_rh": b, "norm_lil": c}
                for n, raw, a, b, c in self.rows()
            ],
        }


def correlate(s, f: TestFn | str, checkpoints, eps: float = 0.05,
              block: int = STREAM_BLOCK) -> CorrelationTrace:
    """Correlation trace of sequence ``s`` against test ``f``."""
    if isinstance(f, str):
        f = parse(f)
    if eps <= 0:
        raise DomainError("eps must be positive")
    pts = resolve_checkpoints(checkpoints, source_limit(s) and source_limit(s) - 1)
    sums, exps = prefix_sums(s, [f], pts, block=block)
    raw = tuple(_exact(v, exps[0]) for v in sums[0])
    return CorrelationTrace(tuple(pts), raw, eps, f.pretty())


def correlate_many(s, tests: Sequence[TestFn], checkpoints, eps: float = 0.05,
                   block: int = STREAM_BLOCK) -> list[CorrelationTrace]:
    pts = resolve_checkpoints(checkpoints, source_limit(s) and source_limit(s) - 1)
    sums, exps = prefix_sums(s, list(tests), pts, block=block)
    return [
        CorrelationTrace(tuple(pts), tuple(_exact(v, e) for v in vals), eps, f.pretty())
        for f, vals, e in zip(tests, sums, exps)
    ]


# -- p-biased statistic ----------------------------------------------------------


@dataclass(frozen=True)
class BiasedTrace:
    """``(1/n) sum_{i<=n} f(i) ((s(i) - 1)/2 + p)`` at each checkpoint."""

    checkpoints: tuple
    shifted: tuple  # exact sum f(i)(s(i)-1)/2
    plain: tuple  # exact sum f(i)
    p: float

    @property
    def values(self) -> list[float]:
        return [
            (float(a) + self.p * float(b)) / n
            for n, a, b in zip(self.checkpoints, self.shifted, self.plain)
        ]

    def exact(self, p: Fraction) -> list[Fraction]:
        return [
            (Fraction(a) + p * Fraction(b)) / n
            for n, a, b in zip(self.checkpoints, self.shifted, self.plain)
        ]


def biased_statistic(s, f: TestFn | str, p: float, checkpoints,
                     block: int = STREAM_BLOCK) -> BiasedTrace:
    if isinstance(f, str):
        f = parse(f)
    if not 0 < p < 1:
        raise DomainError("p must lie in (0, 1)")
    pts = resolve_checkpoints(checkpoints, source_limit(s) and source_limit(s) - 1)
    shifted, e1 = prefix_sums(s, [f], pts, block=block, weight=lambda v: v - 1)
    plain, e2 = prefix_sums(s, [f], pts, block=block, weight=np.ones_like)
    return BiasedTrace(
        tuple(pts),
        tuple(_exact(v, e1[0] + 1) for v in shifted[0]),
        tuple(_exact(v, e2[0]) for v in plain[0]),
        p,
    )


# -- martingales -------------------------------------------------------------------

REPEAT_LAST = "repeat-last-outcome"


@dataclass(frozen=True)
class MartingaleSpec:
    """Betting rule with stake ``beta(n)`` in [-1, 1]; positive bets on +1.

    ``rule`` is a test function of the step index ``n`` or ``REPEAT_LAST``,
    which stakes ``stake * s(n-1)`` (nothing on the first step).
    """

    rule: object = REPEAT_LAST
    initial: Fraction = Fraction(1)
    stake: Fraction = Fraction(1, 2)

    def __post_init__(self):
        object.__setattr__(self, "initial", Fraction(self.initial))
        object.__setattr__(self, "stake", Fraction(self.stake))
        if self.initial <= 0:
            raise DomainError("initial capital must be positive")
        if isinstance(self.rule, str) and self.rule != REPEAT_LAST:
            object.__setattr__(self, "rule", parse(self.rule))
        if abs(self.stake) > 1:
            raise DomainError("stake fraction must lie in [-1, 1]")


@dataclass(frozen=True)
class MartingaleRun:
    capital: np.ndarray = field(repr=False)  # F after each step; capital[0] is the initial capital
    final: Fraction
    running_max: float
    stopped_at: int | None  # first step at which capital reached 0


def _stakes(spec: MartingaleSpec, s: np.ndarray) -> tuple[np.ndarray, int]:
    if spec.rule == REPEAT_LAST:
        num, e = spec.stake.numerator, spec.stake.denominator.bit_length() - 1
        if spec.stake.denominator != 1 << e:
            raise DomainError("stake must be dyadic for exact capital")
        prev = np.concatenate([[0], s[:-1]])
        return num * prev, e
    rule = spec.rule
    if isinstance(rule, TestFn):
        return rule.eval_scaled(np.arange(1, s.size + 1, dtype=np.int64))
    raise DomainError(f"unsupported betting rule {rule!r}")


def _product(values: list[int]) -> int:
    while len(values) > 1:
        values = [
            values[i] * values[i + 1] if i + 1 < len(values) else values[i]
            for i in range(0, len(values), 2)
        ]
    return values[0] if values else 1


def run_martingale(spec: MartingaleSpec, s, n_max: int) -> MartingaleRun:
    """Play the rule against ``s(1..n_max)``: ``F(n) = F(n-1) * (1 + beta(n) s(n))``."""
    if n_max < 1:
        raise DomainError("n_max must be >= 1")
    if isinstance(s, np.ndarray):
        vals = np.asarray(s[:n_max], dtype=np.int64)
    else:
        vals = sequence_values(s, 1, n_max + 1)
    if vals.size < n_max:
        raise DataRangeError("not enough sequence values")
    if np.any(vals == 0):
        raise DomainError("martingales need a +-1 valued sequence")
    beta, e = _stakes(spec, vals)
    scale = 1 << e
    if np.any(np.abs(beta) > scale):
        raise DomainError("betting rule value outside [-1, 1]")
    factors = scale + beta * vals  # (1 + beta s) * 2**e, each in [0, 2**(e+1)]
    zero = np.flatnonzero(factors == 0)
    stopped = int(zero[0]) + 1 if zero.size else None
    with np.errstate(divide="ignore"):
        logs = np.log(factors.astype(np.float64)) - e * math.log(2)
    log_cap = math.log(spec.initial) + np.cumsum(logs)
    capital = np.concatenate([[float(spec.initial)], np.exp(log_cap)])
    if stopped is not None:
        capital[stopped:] = 0.0
        final = Fraction(0)
    else:
        final = spec.initial * Fraction(_product([int(x) for x in factors]), 1 << (e * n_max))
    return MartingaleRun(capital, final, float(np.max(capital)), stopped)


def fairness_gap(capital: Fraction, beta: Fraction) -> Fraction:
    """``F - (F(1+beta) + F(1-beta))/2``; zero for every state by the update law."""
    return capital - (capital * (1 + beta) + capital * (1 - beta)) / 2


# -- battery -------------------------------------------------------------------------


@dataclass(frozen=True)
class BatteryEntry:
    test: str
    max_abs_norm: float
    at_n: int
    passed: bool


@dataclass(frozen=True)
class BatteryReport:
    entries: tuple
    threshold: float
    burn_in: int
    cap: int

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    @property
    def worst(self) -> BatteryEntry:
        return max(self.entries, key=lambda e: e.max_abs_norm)

    def to_dict(self) -> dict:
        worst = self.worst
        return {
            "threshold": self.threshold,
            "burn_in": self.burn_in,
            "cap": self.cap,
            "passed": self.passed,
            "worst": {"test": worst.test, "value": worst.max_abs_norm, "n": worst.at_n},
            "tests": [
                {"test": e.test, "max_abs_norm": e.max_abs_norm, "n": e.at_n, "passed": e.passed}
                for e in self.entries
            ],
        }


def battery(s, tests: Sequence[TestFn | str], threshold: float, burn_in: int = 10_000,
            cap: int | None = None, checkpoints="pow2",
            block: int = STREAM_BLOCK) -> BatteryReport:
    """Max ``|S(n)/n|`` over checkpoints ``n > burn_in``, per test; pass iff all <= threshold."""
    tests = [parse(t) if isinstance(t, str) else t for t in tests]
    if not tests:
        raise DomainError("the battery is empty")
    if cap is None:
        limit = source_limit(s)
        if limit is None:
            raise DomainError("cap is required for unbounded sources")
        cap = limit - 1
    pts = resolve_checkpoints(checkpoints, cap)
    late = [n for n in pts if n > burn_in]
    if not late:
        raise DataRangeError(f"no checkpoint beyond burn-in {burn_in}")
    traces = correlate_many(s, tests, late, block=block)
    entries = []
    for tr in traces:
        norms = [abs(v) for v in tr.norm_n]
        k = int(np.argmax(norms))
        entries.append(BatteryEntry(tr.test, norms[k], tr.checkpoints[k], norms[k] <= threshold))
    return BatteryReport(tuple(entries), threshold, burn_in, cap)
