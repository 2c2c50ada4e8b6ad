"""K-density, chain density and the finite measure estimator.

``dens_K X`` is approximated by the ratios ``|X & [0, k)| / k`` along a plan
of checkpoints ``k``. The chain density of ``X`` along nested sets
``U_1 >= U_2 >= ...`` is ``dens_K(X & U_t) / dens_K(U_t)`` at each depth; its
value at the deepest level estimates the probability that a random model of
the construction satisfies ``X`` at the distinguished element.

All counts are exact integers; limits are reported as a final value plus an
oscillation diagnostic, never extrapolated.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import DataRangeError, DomainError
from .seqkernel import DEFAULT_WINDOW, SeqKind, cached_sequence
from .sources import CheckpointPlan
from .testlang.ast import BoolExpr
from .testlang.parser import parse_bool

EXHAUSTIVE_NESTING_LIMIT = 100_000
NESTING_SAMPLES = 10_000

# -- sets ---------------------------------------------------------------------------


class SequenceStore:
    """Sieved sequences shared by every set that refers to them."""

    def __init__(self, window: int = DEFAULT_WINDOW, workers: int = 1):
        self.window = window
        self.workers = workers
        self._blocks = {}
        self.hint = 0

    def reserve(self, cap: int) -> None:
        """Announce that values up to ``cap`` will be requested (sieved lazily, once)."""
        self.hint = max(self.hint, cap)

    def values(self, kind: SeqKind, lo: int, hi: int) -> np.ndarray:
        """Values on ``[lo, hi)``; n = 0 maps to 0 (outside the sequence domain)."""
        block = self._blocks.get(kind)
        if block is None or block.hi < hi:
            top = max(hi, self.hint, 2)
            block = cached_sequence(kind, top, window=self.window, workers=self.workers)
            self._blocks[kind] = block
        out = np.zeros(hi - lo, dtype=np.int8)
        start = max(lo, 1)
        if start < hi:
            out[start - lo :] = block.values[start - 1 : hi - 1]
        return out


class SetSpec:
    """A set of naturals with membership decidable per n."""

    def members(self, ns: np.ndarray, store: SequenceStore, memo: dict) -> np.ndarray:
        key = self
        hit = memo.get(key)
        if hit is None:
            hit = self._members(ns, store, memo)
            memo[key] = hit
        return hit

    def _members(self, ns, store, memo):
        raise NotImplementedError

    def contains(self, n: int, store: SequenceStore | None = None) -> bool:
        store = store or SequenceStore()
        return bool(self.members(np.array([n], dtype=np.int64), store, {})[0])

    def __and__(self, other):
        return Intersection(self, other)

    def __or__(self, other):
        return Union(self, other)

    def __xor__(self, other):
        return SymDiff(self, other)

    def __invert__(self):
        return Complement(self)

    @staticmethod
    def parse(text: str) -> "SetSpec":
        return parse_set(text)


@dataclass(frozen=True)
class PredicateSet(SetSpec):
    predicate: BoolExpr

    def _members(self, ns, store, memo):
        return self.predicate.eval_array(ns)

    def __str__(self):
        return self.predicate.pretty()


@dataclass(frozen=True)
class ResidueSet(SetSpec):
    modulus: int
    residue: int = 0

    def __post_init__(self):
        if self.modulus < 1:
            raise DomainError("modulus must be >= 1")

    def _members(self, ns, store, memo):
        return ns % self.modulus == self.residue % self.modulus

    def __str__(self):
        return f"residue:{self.modulus}:{self.residue}"


@dataclass(frozen=True)
class SequenceSet(SetSpec):
    """``{n >= 1 : s(n) = value}`` for a sieved sequence s."""

    kind: SeqKind
    value: int

    def _members(self, ns, store, memo):
        lo, hi = int(ns[0]), int(ns[-1]) + 1
        if hi - lo == ns.size and np.all(np.diff(ns) == 1):
            vals = store.values(self.kind, lo, hi)
            mask = vals == self.value
        else:
            mask = np.array([store.values(self.kind, int(n), int(n) + 1)[0] == self.value
                             for n in ns])
        return mask & (ns >= 1)

    def __str__(self):
        name = "lambda" if self.kind is SeqKind.LIOUVILLE else "mu"
        return f"{name}={self.value:+d}" if self.value else f"{name}=0"


@dataclass(frozen=True)
class SquaresSet(SetSpec):
    """Perfect squares (including 0), a set of density 0."""

    def _members(self, ns, store, memo):
        r = np.floor(np.sqrt(ns.astype(np.float64))).astype(np.int64)
        r += (r + 1) * (r + 1) <= ns
        r -= r * r > ns
        return r * r == ns

    def __str__(self):
        return "squares"


class IndicatorSet(SetSpec):
    """Membership read from a boolean array indexed by n (``mask[n]``)."""

    def __init__(self, mask, name: str = "indicator"):
        self.mask = np.asarray(mask, dtype=bool)
        self.name = name

    def _members(self, ns, store, memo):
        if ns.size and ns[-1] >= self.mask.size:
            raise DataRangeError(f"indicator covers n < {self.mask.size} only")
        return self.mask[ns]

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class AllSet(SetSpec):
    def _members(self, ns, store, memo):
        return np.ones(ns.shape, dtype=bool)

    def __str__(self):
        return "all"


@dataclass(frozen=True)
class EmptySet(SetSpec):
    def _members(self, ns, store, memo):
        return np.zeros(ns.shape, dtype=bool)

    def __str__(self):
        return "empty"


@dataclass(frozen=True)
class Union(SetSpec):
    left: SetSpec
    right: SetSpec

    def _members(self, ns, store, memo):
        return self.left.members(ns, store, memo) | self.right.members(ns, store, memo)

    def __str__(self):
        return f"({self.left}) | ({self.right})"


@dataclass(frozen=True)
class Intersection(SetSpec):
    left: SetSpec
    right: SetSpec

    def _members(self, ns, store, memo):
        return self.left.members(ns, store, memo) & self.right.members(ns, store, memo)

    def __str__(self):
        return f"({self.left}) & ({self.right})"


@dataclass(frozen=True)
class SymDiff(SetSpec):
    left: SetSpec
    right: SetSpec

    def _members(self, ns, store, memo):
        return self.left.members(ns, store, memo) ^ self.right.members(ns, store, memo)

    def __str__(self):
        return f"({self.left}) ^ ({self.right})"


@dataclass(frozen=True)
class Complement(SetSpec):
    inner: SetSpec

    def _members(self, ns, store, memo):
        return ~self.inner.members(ns, store, memo)

    def __str__(self):
        return f"~({self.inner})"


_SEQ_SET = re.compile(
    r"^(lambda|λ|liouville|mu|μ|mobius)\s*(?:\(\s*n\s*\))?\s*=\s*([+-]?[01])$", re.I
)
_RESIDUE = re.compile(r"^residue:(\d+):(-?\d+)$")


def parse_set(text: str) -> SetSpec:
    """Parse a set description.

    Accepted forms: ``lambda=+1`` / ``λ(n)=+1`` / ``mu=0``, ``residue:m:r``,
    ``squares``, ``all``, ``empty``, or any boolean predicate of the test
    language such as ``n % 3 == 0``.
    """
    text = text.strip()
    m = _SEQ_SET.match(text)
    if m:
        name = m.group(1).lower()
        kind = SeqKind.LIOUVILLE if name in ("lambda", "λ", "liouville") else SeqKind.MOBIUS
        value = int(m.group(2))
        if kind is SeqKind.LIOUVILLE and value == 0:
            raise DomainError("lambda never takes the value 0")
        return SequenceSet(kind, value)
    m = _RESIDUE.match(text)
    if m:
        return ResidueSet(int(m.group(1)), int(m.group(2)))
    named = {"squares": SquaresSet(), "all": AllSet(), "empty": EmptySet()}
    if text in named:
        return named[text]
    return PredicateSet(parse_bool(text))


# -- plans and chains ----------------------------------------------------------------


@dataclass(frozen=True)
class KPlan:
    """Checkpoints k of the density limit: default ``k_m = 2**m`` (m >= 1) and the cap."""

    cap: int
    plan: CheckpointPlan = field(default_factory=CheckpointPlan)

    def __post_init__(self):
        if self.cap < 2:
            raise DomainError("cap must be >= 2")

    @classmethod
    def explicit(cls, points: Sequence[int]) -> "KPlan":
        points = list(points)
        return cls(points[-1], CheckpointPlan("list", explicit=tuple(points)))

    def points(self) -> list[int]:
        pts = [k for k in self.plan.points(self.cap) if k >= 2]
        if not pts:
            raise DomainError("empty checkpoint plan")
        return pts


@dataclass(frozen=True)
class Chain:
    levels: tuple  # (U_1, U_2, ...) with U_1 >= U_2 >= ...
    builtin: bool = False

    def __post_init__(self):
        if not self.levels:
            raise DomainError("a chain needs at least one level")

    @classmethod
    def powers_of_two(cls, depth: int = 3) -> "Chain":
        """``U_t`` = multiples of ``2**t`` for t = 1..depth."""
        if depth < 1:
            raise DomainError("depth must be >= 1")
        return cls(tuple(ResidueSet(1 << t, 0) for t in range(1, depth + 1)), builtin=True)

    @property
    def depth(self) -> int:
        return len(self.levels)

    def verify_nesting(self, cap: int, store: SequenceStore | None = None,
                       seed: int = 0) -> None:
        """Exhaustive check of ``U_{t+1} <= U_t`` up to 10**5, random samples beyond."""
        if self.builtin:
            return
        store = store or SequenceStore()
        upto = min(cap, EXHAUSTIVE_NESTING_LIMIT)
        ns = np.arange(0, upto, dtype=np.int64)
        self._check(ns, store)
        if cap > upto:
            rng = np.random.default_rng(seed)
            sample = np.sort(rng.integers(upto, cap, size=NESTING_SAMPLES))
            self._check(np.unique(sample), store)

    def _check(self, ns, store):
        memo = {}
        for t, (outer, inner) in enumerate(zip(self.levels, self.levels[1:]), start=1):
            bad = inner.members(ns, store, memo) & ~outer.members(ns, store, memo)
            if bad.any():
                n = int(ns[np.argmax(bad)])
                raise DomainError(f"chain not nested: {n} in U_{t + 1} but not in U_{t}")


# -- counting ----------------------------------------------------------------------------


def count_members(sets: Sequence[SetSpec], checkpoints: Sequence[int],
                  store: SequenceStore | None = None,
                  window: int = DEFAULT_WINDOW) -> list[list[int]]:
    """``|X & [0, k)|`` for every set and every checkpoint k (exact)."""
    store = store or SequenceStore(window=window)
    cap = checkpoints[-1]
    store.reserve(cap)
    cp = np.asarray(checkpoints, dtype=np.int64)
    totals = [0] * len(sets)
    out = [[] for _ in sets]
    for lo in range(0, cap, window):
        hi = min(lo + window, cap)
        ns = np.arange(lo, hi, dtype=np.int64)
        memo = {}
        idx = cp[(cp > lo) & (cp <= hi)] - 1 - lo
        for j, s in enumerate(sets):
            running = np.cumsum(s.members(ns, store, memo), dtype=np.int64)
            out[j].extend(totals[j] + int(running[i]) for i in idx)
            totals[j] += int(running[-1])
    return out


@dataclass(frozen=True)
class DensityEstimate:
    checkpoints: tuple
    counts: tuple  # |X & [0,k)| or |X & U & [0,k)|
    bases: tuple  # k or |U & [0,k)|

    @property
    def exact_ratios(self) -> list[Fraction]:
        return [Fraction(c, b) for c, b in zip(self.counts, self.bases)]

    @property
    def ratios(self) -> list[float]:
        return [c / b for c, b in zip(self.counts, self.bases)]

    @property
    def final(self) -> float:
        return self.ratios[-1]

    @property
    def oscillation(self) -> float:
        """max - min of the ratio over the last quartile of checkpoints."""
        tail = self.ratios[-max(1, math.ceil(len(self.ratios) / 4)) :]
        return max(tail) - min(tail)

    def to_dict(self) -> dict:
        return {
            "final": self.final,
            "oscillation": self.oscillation,
            "rows": [
                {"k": k, "count": c, "base": b, "ratio": r}
                for k, c, b, r in zip(self.checkpoints, self.counts, self.bases, self.ratios)
            ],
        }


def k_density(X: SetSpec, K: KPlan, store: SequenceStore | None = None) -> DensityEstimate:
    pts = K.points()
    (counts,) = count_members([X], pts, store)
    return DensityEstimate(tuple(pts), tuple(counts), tuple(pts))


@dataclass(frozen=True)
class ChainDensity:
    levels: tuple  # DensityEstimate per depth t = 1..m
    label: str = ""

    @property
    def by_depth(self) -> list[float]:
        return [lvl.final for lvl in self.levels]

    @property
    def value(self) -> float:
        """Estimate at the deepest level."""
        return self.levels[-1].final

    @property
    def oscillation(self) -> float:
        return max(lvl.oscillation for lvl in self.levels)

    def to_dict(self) -> dict:
        return {
            "set": self.label,
            "value": self.value,
            "oscillation": self.oscillation,
            "depths": [
                {"depth": t, **lvl.to_dict()} for t, lvl in enumerate(self.levels, start=1)
            ],
        }


def _chain_estimates(X: SetSpec, chain: Chain, pts, counts_x, counts_u) -> tuple:
    levels = []
    for t, (cx, cu) in enumerate(zip(counts_x, counts_u), start=1):
        if cu[-1] == 0:
            raise DataRangeError(f"chain level U_{t} has zero empirical density at the cap")
        keep = [i for i, c in enumerate(cu) if c > 0]
        levels.append(DensityEstimate(
            tuple(pts[i] for i in keep), tuple(cx[i] for i in keep), tuple(cu[i] for i in keep)
        ))
    return tuple(levels)


def chain_density(X: SetSpec, chain: Chain, K: KPlan,
                  store: SequenceStore | None = None) -> ChainDensity:
    """Per-depth ratios ``|X & U_t & [0,k)| / |U_t & [0,k)|``."""
    store = store or SequenceStore()
    chain.verify_nesting(K.cap, store)
    pts = K.points()
    sets = [X & u for u in chain.levels] + list(chain.levels)
    counts = count_members(sets, pts, store)
    m = chain.depth
    return ChainDensity(_chain_estimates(X, chain, pts, counts[:m], counts[m:]), str(X))


@dataclass(frozen=True)
class MeasureEstimate:
    """Estimated probability that a random model satisfies the event at the generic element."""

    event: str
    density: ChainDensity

    @property
    def probability(self) -> float:
        return self.density.value

    def to_dict(self) -> dict:
        return {
            "event": self.event,
            "probability": self.probability,
            "by_depth": self.density.by_depth,
            "oscillation": self.density.oscillation,
            "chain_density": self.density.to_dict(),
        }


def measure_event(event: SetSpec | str, chain: Chain | None = None, K: KPlan | None = None,
                  store: SequenceStore | None = None) -> MeasureEstimate:
    if isinstance(event, str):
        label, event = event, parse_set(event)
    else:
        label = str(event)
    chain = chain or Chain.powers_of_two()
    if K is None:
        raise DomainError("a KPlan (cap) is required")
    return MeasureEstimate(label, chain_density(event, chain, K, store))


# -- facts -----------------------------------------------------------------------------


@dataclass(frozen=True)
class FactVerdict:
    fact: int
    statement: str
    mode: str  # "exact", "tolerance" or "vacuous"
    passed: bool
    details: dict

    def to_dict(self) -> dict:
        return {"fact": self.fact, "statement": self.statement, "mode": self.mode,
                "passed": self.passed, "details": self.details}


@dataclass(frozen=True)
class FactReport:
    verdicts: tuple
    tolerance: float
    cap: int

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def to_dict(self) -> dict:
        return {"cap": self.cap, "tolerance": self.tolerance, "passed": self.passed,
                "facts": [v.to_dict() for v in self.verdicts]}


def check_disjoint(X: SetSpec, Y: SetSpec, cap: int, store: SequenceStore) -> None:
    (both,) = count_members([X & Y], [cap], store)
    if both[0]:
        raise DomainError(f"X and Y are not disjoint below {cap}")


def check_facts(X: SetSpec, Y: SetSpec, Z: SetSpec, chain: Chain | None, K: KPlan,
                tolerance: float = 0.02, store: SequenceStore | None = None,
                pair: tuple[SetSpec, SetSpec] | None = None) -> FactReport:
    """Empirical verdicts for the density facts.

    1. finite additivity of dens_K (exact counts, X and Y disjoint);
    2. dens_K A = dens_K B = 1 implies dens_K(A & B) = 1 (tolerance; vacuous when
       the premise fails). X and Y are disjoint, so the pair (A, B) is separate;
       by default A = ~squares and B = ~((X | Y) & squares);
    4. dens_K(X & Z) = dens_K(X) / 2 for pseudorandom Z (tolerance, at the cap);
    5. finite additivity of the chain density (exact counts per depth);
    6. chain density of Z is 1/2 at every depth (tolerance).
    """
    store = store or SequenceStore()
    chain = chain or Chain.powers_of_two()
    chain.verify_nesting(K.cap, store)
    check_disjoint(X, Y, K.cap, store)
    pts = K.points()
    U = list(chain.levels)
    m = len(U)
    if pair is None:
        sq = SquaresSet()
        pair = (~sq, ~((X | Y) & sq))
    A, B = pair
    sets = [X, Y, X | Y, A & B, X & Z, A, B]
    sets += [X & u for u in U] + [Y & u for u in U] + [(X | Y) & u for u in U]
    sets += [Z & u for u in U] + U
    counts = count_members(sets, pts, store)
    cX, cY, cXY, cAB, cXZ, cA, cB = counts[:7]
    rest = counts[7:]
    cXU, cYU, cXYU, cZU, cU = (rest[i * m:(i + 1) * m] for i in range(5))
    verdicts = []

    mismatches = [k for k, a, b, c in zip(pts, cX, cY, cXY) if a + b != c]
    verdicts.append(FactVerdict(
        1, "dens_K is finitely additive", "exact", not mismatches,
        {"checkpoints": len(pts), "mismatches": mismatches[:10]},
    ))

    dA, dB, dAB = cA[-1] / pts[-1], cB[-1] / pts[-1], cAB[-1] / pts[-1]
    sets2 = {"A": str(A), "B": str(B), "dens_A": dA, "dens_B": dB}
    if abs(dA - 1) <= tolerance and abs(dB - 1) <= tolerance:
        verdicts.append(FactVerdict(
            2, "dens_K A = dens_K B = 1 implies dens_K(A & B) = 1", "tolerance",
            abs(dAB - 1) <= tolerance, {**sets2, "dens_AB": dAB},
        ))
    else:
        verdicts.append(FactVerdict(
            2, "dens_K A = dens_K B = 1 implies dens_K(A & B) = 1", "vacuous", True,
            {**sets2, "note": "premise does not hold"},
        ))

    if cX[-1] == 0:
        raise DataRangeError("X is empty below the cap")
    ratio4 = cXZ[-1] / cX[-1]
    verdicts.append(FactVerdict(
        4, "dens_K(X & Z) = dens_K(X) / 2 for pseudorandom Z", "tolerance",
        abs(ratio4 - 0.5) <= tolerance, {"ratio": ratio4, "tolerance": tolerance},
    ))

    bad5 = []
    for t in range(m):
        for k, a, b, c, u in zip(pts, cXU[t], cYU[t], cXYU[t], cU[t]):
            if u and Fraction(a, u) + Fraction(b, u) != Fraction(c, u):
                bad5.append({"depth": t + 1, "k": k})
    verdicts.append(FactVerdict(
        5, "chain density is finitely additive", "exact", not bad5,
        {"depths": m, "checkpoints": len(pts), "mismatches": bad5[:10]},
    ))

    z_levels = _chain_estimates(Z, chain, pts, cZU, cU)
    by_depth = [lvl.final for lvl in z_levels]
    verdicts.append(FactVerdict(
        6, "chain density of a pseudorandom set is 1/2", "tolerance",
        all(abs(v - 0.5) <= tolerance for v in by_depth),
        {"by_depth": by_depth, "tolerance": tolerance},
    ))
    return FactReport(tuple(verdicts), tolerance, K.cap)
