"""Uniform access to sequence values and checkpoint plans."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataRangeError, DomainError
from .seqkernel import SeqBlock
from .testlang.ast import TestFn


def sequence_values(source, lo: int, hi: int) -> np.ndarray:
    """Values ``s(n)`` for ``n`` in ``[lo, hi)`` as an int64 array.

    ``source`` may be a :class:`SeqBlock`, a ternary :class:`TestFn`, an integer
    constant, or a callable mapping an int64 array of ``n`` to values.
    """
    if isinstance(source, SeqBlock):
        if lo < source.lo or hi > source.hi:
            raise DataRangeError(
                f"need s on [{lo}, {hi}) but data covers [{source.lo}, {source.hi})"
            )
        return source.values[lo - source.lo : hi - source.lo].astype(np.int64)
    if isinstance(source, TestFn):
        if not source.ternary:
            raise DomainError("a sequence source must be ternary-valued")
        return source.eval_array(np.arange(lo, hi, dtype=np.int64)).astype(np.int64)
    if isinstance(source, (int, np.integer)):
        if source not in (-1, 0, 1):
            raise DomainError("constant sequence must be -1, 0 or 1")
        return np.full(hi - lo, int(source), dtype=np.int64)
    if callable(source):
        vals = np.asarray(source(np.arange(lo, hi, dtype=np.int64)), dtype=np.int64)
        if vals.shape != (hi - lo,):
            raise DomainError("callable source returned the wrong shape")
        return vals
    raise DomainError(f"unsupported sequence source {type(source).__name__}")


def source_limit(source) -> int | None:
    """Largest n (exclusive) with data, or None when unbounded."""
    if isinstance(source, SeqBlock):
        return source.hi
    return None


@dataclass(frozen=True)
class CheckpointPlan:
    """Prefix lengths at which statistics are recorded.

    ``kind`` is one of ``pow2`` (1, 2, 4, ...), ``linear`` (step, 2*step, ...),
    ``geom`` (rounded powers of ``ratio``) or ``list`` (explicit values). The
    cap itself is always included as the last checkpoint.
    """

    kind: str = "pow2"
    step: float = 0
    explicit: tuple = ()

    @classmethod
    def parse(cls, text: str) -> "CheckpointPlan":
        text = text.strip()
        name, _, arg = text.partition(":")
        if name == "pow2" and not arg:
            return cls("pow2")
        if name == "linear":
            return cls("linear", step=int(arg))
        if name == "geom":
            return cls("geom", step=float(arg))
        if name == "list":
            return cls("list", explicit=tuple(int(x) for x in arg.split(",") if x))
        raise DomainError(f"bad checkpoint plan {text!r}")

    def __str__(self):
        if self.kind == "pow2":
            return "pow2"
        if self.kind == "list":
            return "list:" + ",".join(map(str, self.explicit))
        step = int(self.step) if self.kind == "linear" else self.step
        return f"{self.kind}:{step}"

    def points(self, cap: int) -> list[int]:
        if cap < 1:
            raise DomainError("cap must be >= 1")
        if self.kind == "pow2":
            pts = [1 << k for k in range(cap.bit_length()) if (1 << k) <= cap]
        elif self.kind == "linear":
            if self.step < 1:
                raise DomainError("linear step must be >= 1")
            pts = list(range(int(self.step), cap + 1, int(self.step)))
        elif self.kind == "geom":
            if self.step <= 1:
                raise DomainError("geometric ratio must exceed 1")
            pts, x = [], 1.0
            while x <= cap:
                pts.append(int(round(x)))
                x *= self.step
        elif self.kind == "list":
            pts = [p for p in self.explicit if 1 <= p <= cap]
            if any(a >= b for a, b in zip(self.explicit, self.explicit[1:])):
                raise DomainError("explicit checkpoints must be increasing")
        else:
            raise DomainError(f"unknown plan kind {self.kind!r}")
        pts = sorted(set(pts) | {cap})
        return pts
