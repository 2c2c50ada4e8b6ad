"""Sequences built from a hard-core predicate of a trapdoor permutation.

The permutation is Rabin squaring on the quadratic residues modulo a Blum
integer ``N = p q`` (``p = q = 3 mod 4``), the hard-core bit is the least
significant bit of the preimage, and the naturals are cut into consecutive
blocks of widths ``2**k_1, 2**k_2, ...``. Inside block j, local index i is
mapped to a quadratic residue ``y`` and

    s(n) = (-1) ** LSB(sqrt(y)),   n = o_j + i.

Key sizes are toys; nothing here is meant to be secure.
"""

from __future__ import annotations

import bisect
import json
import math
import random
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from sympy import isprime

from .errors import DataRangeError, DomainError, KeyGenerationError
from .seqkernel import SeqBlock, SeqKind, small_primes
from .testlang.ast import TestFn
from .testlang.decompose import flip_after

MAX_KEY_BITS = 64
_ENUMERATE_BELOW = 24


def _is_blum_prime(p: int) -> bool:
    return p % 4 == 3 and isprime(p)


@dataclass(frozen=True)
class TrapdoorKey:
    p: int
    q: int

    def __post_init__(self):
        if self.p == self.q:
            raise KeyGenerationError("p and q must be distinct")
        for r in (self.p, self.q):
            if not _is_blum_prime(r):
                raise KeyGenerationError(f"{r} is not a prime congruent to 3 mod 4")

    @property
    def modulus(self) -> int:
        return self.p * self.q

    @property
    def bits(self) -> int:
        return self.modulus.bit_length()

    @property
    def qr_count(self) -> int:
        return (self.p - 1) * (self.q - 1) // 4

    def is_qr(self, y: int) -> bool:
        """Quadratic residue modulo N and coprime to N."""
        p, q = self.p, self.q
        return (
            y % p != 0
            and y % q != 0
            and pow(y, (p - 1) // 2, p) == 1
            and pow(y, (q - 1) // 2, q) == 1
        )

    def square(self, x: int) -> int:
        return x * x % self.modulus

    def principal_root(self, y: int) -> int:
        """The unique square root of ``y`` that is itself a quadratic residue."""
        if not self.is_qr(y):
            raise DomainError(f"{y} is not a quadratic residue modulo {self.modulus}")
        p, q = self.p, self.q
        rp = pow(y, (p + 1) // 4, p)
        rq = pow(y, (q + 1) // 4, q)
        # CRT: x = rp (mod p), x = rq (mod q)
        return (rp + p * ((rq - rp) * pow(p, -1, q) % q)) % self.modulus

    def to_json(self) -> str:
        return json.dumps({"p": str(self.p), "q": str(self.q), "N": str(self.modulus)},
                          sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "TrapdoorKey":
        data = json.loads(text)
        key = cls(int(data["p"]), int(data["q"]))
        if "N" in data and int(data["N"]) != key.modulus:
            raise KeyGenerationError("key file: N does not equal p*q")
        return key

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path) -> "TrapdoorKey":
        return cls.from_json(Path(path).read_text())


def keygen(bits: int, seed: int = 0) -> TrapdoorKey:
    """Deterministic Blum modulus with exactly ``bits`` bits."""
    if not 6 <= bits <= MAX_KEY_BITS:
        if bits < 6:
            raise KeyGenerationError(f"no two distinct Blum primes give a {bits}-bit modulus")
        raise KeyGenerationError(f"toy keys are limited to {MAX_KEY_BITS} bits")
    rng = random.Random(seed)
    if bits <= _ENUMERATE_BELOW:
        return TrapdoorKey(*_pick_pair(bits, rng))
    half = bits // 2
    for _ in range(100_000):
        p = _random_blum_prime(rng, half)
        q = _random_blum_prime(rng, bits - half)
        if p != q and (p * q).bit_length() == bits:
            return TrapdoorKey(min(p, q), max(p, q))
    raise KeyGenerationError("could not find a key; try another seed")


def _pick_pair(bits: int, rng: random.Random) -> tuple[int, int]:
    """Uniform choice among Blum prime pairs a < b with a*b of exactly ``bits`` bits."""
    primes = [r for r in small_primes((1 << (bits - 1)) - 1).tolist() if r % 4 == 3]
    lo, hi = 1 << (bits - 1), 1 << bits
    spans = []  # (a, first index of b, count)
    for i, a in enumerate(primes):
        first = max(i + 1, bisect.bisect_left(primes, -(-lo // a)))
        last = bisect.bisect_left(primes, -(-hi // a))
        if last > first:
            spans.append((a, first, last - first))
    total = sum(c for _, _, c in spans)
    if not total:
        raise KeyGenerationError(f"no two distinct Blum primes give a {bits}-bit modulus")
    k = rng.randrange(total)
    for a, first, count in spans:
        if k < count:
            return a, primes[first + k]
        k -= count
    raise AssertionError("unreachable")


def _random_blum_prime(rng: random.Random, bits: int) -> int:
    while True:
        c = rng.getrandbits(bits) | (1 << (bits - 1)) | 3
        if _is_blum_prime(c):
            return c


# -- schedule --------------------------------------------------------------------------


@dataclass(frozen=True)
class BlockSchedule:
    exponents: tuple  # k_1 < k_2 < ...

    def __post_init__(self):
        ks = tuple(int(k) for k in self.exponents)
        if not ks:
            raise DomainError("a schedule needs at least one block")
        if ks[0] < 1 or any(a >= b for a, b in zip(ks, ks[1:])):
            raise DomainError("exponents must satisfy 1 <= k_1 < k_2 < ...")
        object.__setattr__(self, "exponents", ks)

    @classmethod
    def covering(cls, n: int, start: int = 1) -> "BlockSchedule":
        """Exponents start, start+1, ... until the blocks cover ``[0, n)``."""
        ks, total, k = [], 0, start
        while total < n:
            ks.append(k)
            total += 1 << k
            k += 1
        return cls(tuple(ks))

    @classmethod
    def parse(cls, text: str) -> "BlockSchedule":
        return cls(tuple(int(x) for x in text.split(",") if x.strip()))

    @cached_property
    def offsets(self) -> tuple:
        """``o_j`` for j = 1..m+1: o_1 = 0, o_{j+1} = o_j + 2**k_j."""
        out = [0]
        for k in self.exponents:
            out.append(out[-1] + (1 << k))
        return tuple(out)

    @property
    def coverage(self) -> int:
        return self.offsets[-1]

    def block_index(self, n: int) -> tuple[int, int]:
        """``(j, local)`` with ``o_j <= n < o_{j+1}``, j counted from 1."""
        if not 0 <= n < self.coverage:
            raise DataRangeError(f"n={n} outside scheduled coverage [0, {self.coverage})")
        j = bisect.bisect_right(self.offsets, n)
        return j, n - self.offsets[j - 1]


def block_index(n: int, schedule: BlockSchedule) -> tuple[int, int]:
    return schedule.block_index(n)


# -- the sequence ----------------------------------------------------------------------


def hardcore_bit(key: TrapdoorKey, y: int) -> int:
    """LSB of the principal square root of ``y``."""
    return key.principal_root(y) & 1


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return x ^ (x >> 31)


class ResidueEmbedding:
    """Maps block-local indices to quadratic residues.

    Block j enumerates residues ``y`` in increasing cyclic order modulo N from
    a start point derived from ``(seed, j)``; local index i maps to the
    ``(i mod W)``-th residue found, where W = min(2**k_j, |QR(N)|).
    """

    def __init__(self, key: TrapdoorKey, schedule: BlockSchedule, seed: int = 0):
        self.key = key
        self.schedule = schedule
        self.seed = seed
        self._windows = {}

    def start(self, j: int) -> int:
        return _splitmix64((self.seed << 20) ^ j) % self.key.modulus

    def window(self, j: int, upto: int) -> list[int]:
        """First ``upto`` residues of block j (capped at the window width)."""
        width = min(1 << self.schedule.exponents[j - 1], self.key.qr_count)
        upto = min(upto, width)
        found = self._windows.setdefault(j, [])
        N = self.key.modulus
        y = found[-1] + 1 if found else self.start(j)
        while len(found) < upto:
            y %= N
            if self.key.is_qr(y):
                found.append(y)
            y += 1
        return found

    def residue(self, j: int, local: int) -> int:
        width = min(1 << self.schedule.exponents[j - 1], self.key.qr_count)
        i = local % width
        return self.window(j, i + 1)[i]


def prg_sequence(key: TrapdoorKey, schedule: BlockSchedule, lo: int, hi: int,
                 seed: int = 0) -> SeqBlock:
    """``s(n) = (-1)**B(F^{-1}(y_n))`` for n in ``[lo, hi)``; custom-kind block."""
    if not 0 <= lo < hi:
        raise DomainError("need 0 <= lo < hi")
    if hi > schedule.coverage:
        raise DataRangeError(f"range [{lo}, {hi}) exceeds schedule coverage {schedule.coverage}")
    emb = ResidueEmbedding(key, schedule, seed)
    out = np.empty(hi - lo, dtype=np.int8)
    n = lo
    while n < hi:
        j, local = schedule.block_index(n)
        block_end = min(schedule.offsets[j], hi)
        for m in range(n, block_end):
            y = emb.residue(j, m - schedule.offsets[j - 1])
            out[m - lo] = -1 if hardcore_bit(key, y) else 1
        n = block_end
    meta = {"source": "hcprg", "N": key.modulus, "schedule": list(schedule.exponents),
            "seed": seed}
    return SeqBlock(lo, hi, SeqKind.CUSTOM, out, meta)


def flip_tail(f: TestFn, cut: int) -> TestFn:
    """``f`` up to ``cut`` and ``-f`` strictly above it (a switching point)."""
    return flip_after(f, cut)


def switching_point(beta: float, k: int) -> int:
    """``ceil(beta * 2**k)``."""
    if not 0 < beta < 1:
        raise DomainError("beta must lie in (0, 1)")
    return math.ceil(beta * (1 << k))


def qr_set(key: TrapdoorKey) -> list[int]:
    """All quadratic residues modulo a small N, by enumeration."""
    if key.modulus > 1 << 24:
        raise DomainError("exhaustive enumeration only for tiny keys")
    return [y for y in range(1, key.modulus) if key.is_qr(y)]
