"""Slow, independent reference values by trial division.

Used by ``prlab selftest`` and the test suite to cross-check the sieve; kept
free of any code shared with :mod:`prlab.seqkernel`.
"""

from __future__ import annotations


def trial_factor(n: int) -> list[tuple[int, int]]:
    if n < 1:
        raise ValueError("n must be >= 1")
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            e = 0
            while n % d == 0:
                n //= d
                e += 1
            out.append((d, e))
        d += 1 if d == 2 else 2
    if n > 1:
        out.append((n, 1))
    return out


def liouville(n: int) -> int:
    return -1 if sum(e for _, e in trial_factor(n)) % 2 else 1


def mobius(n: int) -> int:
    fs = trial_factor(n)
    if any(e > 1 for _, e in fs):
        return 0
    return -1 if len(fs) % 2 else 1
