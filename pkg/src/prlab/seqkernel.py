"""Liouville and Moebius sequences over large ranges.

Values are produced by a segmented prime-power sieve over fixed-width windows
and stored in :class:`SeqBlock`, an immutable ternary array that serializes to
the packed ``PRSEQ1`` block format (2 bits per value, CRC32 trailer).
"""

from __future__ import annotations

import enum
import math
import os
import struct
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from sympy import factorint

from .errors import (
    BadMagicError,
    BlockFormatError,
    ChecksumMismatchError,
    DataRangeError,
    DomainError,
    TruncatedBlockError,
    VersionMismatchError,
)

DEFAULT_WINDOW = 1 << 20
MAX_HI = 1 << 48
MAX_BLOCK = 1 << 28

MAGIC = b"PRSEQ1"
VERSION = 1
_HEADER = struct.Struct("<6sBBQQ")
_CRC = struct.Struct("<I")


class SeqKind(enum.IntEnum):
    LIOUVILLE = 0
    MOBIUS = 1
    CUSTOM = 2

    @classmethod
    def coerce(cls, kind) -> "SeqKind":
        if isinstance(kind, cls):
            return kind
        if isinstance(kind, str):
            key = kind.strip().upper()
            aliases = {"LAMBDA": "LIOUVILLE", "MU": "MOBIUS", "MOEBIUS": "MOBIUS"}
            key = aliases.get(key, key)
            try:
                return cls[key]
            except KeyError:
                pass
        raise DomainError(f"unknown sequence kind {kind!r}")


@dataclass(frozen=True, eq=False)
class SeqBlock:
    """Values of a {-1,0,+1} sequence on the half-open range ``[lo, hi)``."""

    lo: int
    hi: int
    kind: SeqKind
    values: np.ndarray = field(repr=False)
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not (0 <= self.lo < self.hi):
            raise DomainError(f"need 0 <= lo < hi, got [{self.lo}, {self.hi})")
        kind = SeqKind.coerce(self.kind)
        object.__setattr__(self, "kind", kind)
        vals = np.ascontiguousarray(self.values, dtype=np.int8)
        if vals.ndim != 1 or vals.shape[0] != self.hi - self.lo:
            raise DomainError("values length must equal hi - lo")
        if vals.size and (vals.min() < -1 or vals.max() > 1):
            raise DomainError("values must lie in {-1, 0, +1}")
        if kind is SeqKind.LIOUVILLE and np.any(vals == 0):
            raise DomainError("a Liouville block cannot contain 0")
        if vals.flags.writeable:
            vals = vals.copy() if vals is self.values else vals
            vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return self.hi - self.lo

    def __eq__(self, other):
        if not isinstance(other, SeqBlock):
            return NotImplemented
        return (
            self.lo == other.lo
            and self.hi == other.hi
            and self.kind == other.kind
            and np.array_equal(self.values, other.values)
        )

    def __getitem__(self, n: int) -> int:
        if not (self.lo <= n < self.hi):
            raise DataRangeError(f"n={n} outside block [{self.lo}, {self.hi})")
        return int(self.values[n - self.lo])

    def window(self, lo: int, hi: int) -> np.ndarray:
        """Read-only view of the values on ``[lo, hi)``."""
        if lo < self.lo or hi > self.hi or lo > hi:
            raise DataRangeError(
                f"range [{lo}, {hi}) not inside block [{self.lo}, {self.hi})"
            )
        return self.values[lo - self.lo : hi - self.lo]

    def subblock(self, lo: int, hi: int) -> "SeqBlock":
        return SeqBlock(lo, hi, self.kind, self.window(lo, hi))

    def pack(self) -> bytes:
        return pack_ternary(self.values)


def pack_ternary(values: np.ndarray) -> bytes:
    """Pack ternary values 4 per byte: -1 -> 0b00, 0 -> 0b01, +1 -> 0b10."""
    codes = (np.asarray(values, dtype=np.int8) + 1).astype(np.uint8)
    pad = (-codes.size) % 4
    if pad:
        codes = np.concatenate([codes, np.zeros(pad, dtype=np.uint8)])
    quads = codes.reshape(-1, 4)
    packed = quads[:, 0] | (quads[:, 1] << 2) | (quads[:, 2] << 4) | (quads[:, 3] << 6)
    return packed.astype(np.uint8).tobytes()


def unpack_ternary(payload: bytes, count: int) -> np.ndarray:
    raw = np.frombuffer(payload, dtype=np.uint8)
    codes = np.empty((raw.size, 4), dtype=np.uint8)
    for k in range(4):
        codes[:, k] = (raw >> (2 * k)) & 0b11
    codes = codes.reshape(-1)[:count]
    if np.any(codes == 0b11):
        raise BlockFormatError("reserved code 0b11 in payload")
    return codes.astype(np.int8) - 1


def concat_blocks(blocks: Sequence[SeqBlock]) -> SeqBlock:
    if not blocks:
        raise DomainError("nothing to concatenate")
    for a, b in zip(blocks, blocks[1:]):
        if a.hi != b.lo or a.kind != b.kind:
            raise DomainError("blocks must be contiguous and of one kind")
    return SeqBlock(
        blocks[0].lo,
        blocks[-1].hi,
        blocks[0].kind,
        np.concatenate([b.values for b in blocks]),
    )


# -- sieving -----------------------------------------------------------------


def small_primes(limit: int) -> np.ndarray:
    """Primes <= limit (plain Eratosthenes)."""
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    mark = np.ones(limit + 1, dtype=bool)
    mark[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if mark[p]:
            mark[p * p :: p] = False
    return np.flatnonzero(mark).astype(np.int64)


def _omega_window(lo: int, hi: int, primes: np.ndarray):
    """Return (Omega, omega, squarefree) for every n in [lo, hi), lo >= 1."""
    size = hi - lo
    rem = np.arange(lo, hi, dtype=np.int64)
    big_omega = np.zeros(size, dtype=np.int16)
    small_omega = np.zeros(size, dtype=np.int16)
    squarefree = np.ones(size, dtype=bool)
    for p in primes.tolist():
        if p * p >= hi:
            break
        start = (-lo) % p
        if start >= size:
            continue
        small_omega[start::p] += 1
        big_omega[start::p] += 1
        rem[start::p] //= p
        pk = p * p
        while pk < hi:
            start = (-lo) % pk
            if start < size:
                big_omega[start::pk] += 1
                rem[start::pk] //= p
                squarefree[start::pk] = False
            pk *= p
    leftover = rem > 1
    big_omega += leftover
    small_omega += leftover
    return big_omega, small_omega, squarefree


def _sieve_window(args):
    lo, hi, kind, primes = args
    big_omega, small_omega, squarefree = _omega_window(lo, hi, primes)
    if kind is SeqKind.LIOUVILLE:
        return np.where(big_omega & 1, -1, 1).astype(np.int8)
    mu = np.where(small_omega & 1, -1, 1).astype(np.int8)
    mu[~squarefree] = 0
    return mu


def sieve_range(
    lo: int,
    hi: int,
    kind="liouville",
    *,
    window: int = DEFAULT_WINDOW,
    workers: int = 1,
    max_hi: int = MAX_HI,
    max_block: int = MAX_BLOCK,
) -> SeqBlock:
    """Sieve lambda(n) or mu(n) for every n in ``[lo, hi)``.

    The range is cut into windows of ``window`` values that are sieved
    independently; the result does not depend on ``window`` or ``workers``.
    """
    kind = SeqKind.coerce(kind)
    if kind is SeqKind.CUSTOM:
        raise DomainError("only liouville and mobius can be sieved")
    if lo < 1:
        raise DomainError("sequences are defined for n >= 1; lo=0 rejected")
    if hi <= lo:
        raise DomainError(f"empty range [{lo}, {hi})")
    if hi > max_hi:
        raise DataRangeError(f"hi={hi} exceeds configured maximum {max_hi}")
    if hi - lo > max_block:
        raise DataRangeError(f"block of {hi - lo} values exceeds budget {max_block}")
    if window < 1:
        raise DomainError("window must be positive")
    primes = small_primes(math.isqrt(hi - 1))
    jobs = [(a, min(a + window, hi), kind, primes) for a in range(lo, hi, window)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_sieve_window, jobs))
    else:
        parts = [_sieve_window(job) for job in jobs]
    values = parts[0] if len(parts) == 1 else np.concatenate(parts)
    return SeqBlock(lo, hi, kind, values)


# -- single values -------------------------------------------------------------


@dataclass(frozen=True)
class FactorView:
    n: int
    factors: tuple  # ((prime, exponent), ...) with primes increasing

    @property
    def big_omega(self) -> int:
        return sum(e for _, e in self.factors)

    @property
    def squarefree(self) -> bool:
        return all(e == 1 for _, e in self.factors)

    def square_part(self) -> tuple[int, int]:
        """Return ``(k, i)`` with ``n == k*k*i`` and ``i`` squarefree."""
        k = i = 1
        for p, e in self.factors:
            k *= p ** (e // 2)
            i *= p ** (e % 2)
        return k, i


def factorize(n: int) -> FactorView:
    n = int(n)
    if n < 1:
        raise DomainError("factorize needs n >= 1")
    return FactorView(n, tuple(sorted(factorint(n).items())))


def value_at(n: int, kind="liouville") -> int:
    kind = SeqKind.coerce(kind)
    fv = factorize(n)
    if kind is SeqKind.LIOUVILLE:
        return -1 if fv.big_omega & 1 else 1
    if kind is SeqKind.MOBIUS:
        if not fv.squarefree:
            return 0
        return -1 if len(fv.factors) & 1 else 1
    raise DomainError("value_at supports liouville and mobius only")


# -- block files ---------------------------------------------------------------


def encode_block(block: SeqBlock) -> bytes:
    header = _HEADER.pack(MAGIC, VERSION, int(block.kind), block.lo, block.hi)
    body = header + block.pack()
    return body + _CRC.pack(zlib.crc32(body) & 0xFFFFFFFF)


def decode_block(data: bytes) -> SeqBlock:
    if not data or not (data.startswith(MAGIC) or MAGIC.startswith(data)):
        raise BadMagicError("not a PRSEQ1 block file")
    if len(data) < _HEADER.size:
        raise TruncatedBlockError("file ends inside the header")
    _, version, kind_code, lo, hi = _HEADER.unpack_from(data)
    if version != VERSION:
        raise VersionMismatchError(f"unsupported block version {version}")
    try:
        kind = SeqKind(kind_code)
    except ValueError:
        raise BlockFormatError(f"unknown kind byte {kind_code}") from None
    if hi <= lo:
        raise BlockFormatError(f"bad range [{lo}, {hi})")
    count = hi - lo
    payload_len = (count + 3) // 4
    end = _HEADER.size + payload_len
    if len(data) < end + _CRC.size:
        raise TruncatedBlockError(
            f"expected {end + _CRC.size} bytes, found {len(data)}"
        )
    if len(data) > end + _CRC.size:
        raise BlockFormatError("trailing bytes after checksum")
    (stored,) = _CRC.unpack_from(data, end)
    if zlib.crc32(data[:end]) & 0xFFFFFFFF != stored:
        raise ChecksumMismatchError("CRC32 mismatch")
    values = unpack_ternary(data[_HEADER.size : end], count)
    try:
        return SeqBlock(lo, hi, kind, values)
    except DomainError as exc:
        raise BlockFormatError(str(exc)) from None


def save_block(block: SeqBlock, path) -> None:
    Path(path).write_bytes(encode_block(block))


def load_block(path) -> SeqBlock:
    return decode_block(Path(path).read_bytes())


# -- cached access -------------------------------------------------------------


def cache_dir() -> Path | None:
    env = os.environ.get("PRLAB_CACHE_DIR")
    return Path(env) if env else None


def cached_sequence(kind, hi: int, *, lo: int = 1, window: int = DEFAULT_WINDOW,
                    workers: int = 1) -> SeqBlock:
    """Sieve ``[lo, hi)``, reusing a block file under ``PRLAB_CACHE_DIR`` if set."""
    kind = SeqKind.coerce(kind)
    root = cache_dir()
    if root is None:
        return sieve_range(lo, hi, kind, window=window, workers=workers)
    path = root / f"{kind.name.lower()}_{lo}_{hi}.prseq"
    if path.exists():
        return load_block(path)
    block = sieve_range(lo, hi, kind, window=window, workers=workers)
    root.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    save_block(block, tmp)
    tmp.replace(path)
    return block


def iter_windows(lo: int, hi: int, width: int) -> Iterable[tuple[int, int]]:
    for a in range(lo, hi, width):
        yield a, min(a + width, hi)
