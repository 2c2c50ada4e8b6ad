import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracle
from prlab.errors import (
    BadMagicError,
    ChecksumMismatchError,
    DomainError,
    TruncatedBlockError,
    VersionMismatchError,
)
from prlab.seqkernel import (
    SeqBlock,
    SeqKind,
    concat_blocks,
    decode_block,
    encode_block,
    factorize,
    load_block,
    pack_ternary,
    save_block,
    sieve_range,
    unpack_ternary,
    value_at,
)

LAMBDA_1_10 = [1, -1, -1, 1, -1, 1, -1, -1, 1, 1]
MU_1_10 = [1, -1, -1, 0, -1, 1, -1, 0, 0, 1]


def test_first_values():
    assert sieve_range(1, 11, "liouville").values.tolist() == LAMBDA_1_10
    assert sieve_range(1, 11, "mobius").values.tolist() == MU_1_10


@pytest.mark.parametrize("kind", ["liouville", "mobius"])
def test_matches_trial_division_small(kind):
    ref = oracle.liouville if kind == "liouville" else oracle.mobius
    block = sieve_range(1, 5001, kind)
    assert block.values.tolist() == [ref(n) for n in range(1, 5001)]


def test_known_summatory_values():
    lam = sieve_range(1, 10**4 + 1, "liouville").values
    mu = sieve_range(1, 10**4 + 1, "mobius").values
    assert int(lam.sum()) == -94
    assert int(mu.sum()) == -23
    assert int(mu[:100].sum()) == 1


def test_window_independence():
    whole = sieve_range(1, 200_001, "mobius")
    tiny = sieve_range(1, 200_001, "mobius", window=4_096)
    assert whole == tiny
    part = sieve_range(123_457, 150_001, "mobius", window=1_000)
    assert np.array_equal(part.values, whole.values[123_456:150_000])


def test_parallel_equals_serial():
    serial = sieve_range(1, 300_001, "liouville", window=50_000)
    parallel = sieve_range(1, 300_001, "liouville", window=50_000, workers=2)
    assert serial == parallel


def test_high_offset_window():
    lo = 10**12
    block = sieve_range(lo, lo + 200, "liouville")
    assert block.values.tolist() == [value_at(n, "liouville") for n in range(lo, lo + 200)]


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 3_000), st.integers(1, 3_000))
def test_complete_multiplicativity(a, b):
    assert value_at(a * b) == value_at(a) * value_at(b)


def test_identities_small():
    lam = sieve_range(1, 20_001, "liouville").values
    n = np.arange(1, 10_001)
    assert np.all(lam[2 * n - 1] == -lam[n - 1])
    sq = np.arange(1, 142)
    assert np.all(lam[sq * sq - 1] == 1)


def test_factor_view():
    v = factorize(720)
    assert v.big_omega == 7
    assert not v.squarefree
    assert v.square_part() == (12, 5)


@pytest.mark.parametrize("lo,hi", [(0, 10), (5, 5), (10, 3)])
def test_bad_ranges(lo, hi):
    with pytest.raises(DomainError):
        sieve_range(lo, hi)


def test_unknown_kind():
    with pytest.raises(DomainError):
        sieve_range(1, 10, "zeta")


@given(st.lists(st.sampled_from([-1, 0, 1]), max_size=100))
def test_pack_roundtrip(vals):
    arr = np.array(vals, dtype=np.int8)
    payload = pack_ternary(arr)
    assert len(payload) == (len(vals) + 3) // 4
    assert np.array_equal(unpack_ternary(payload, len(vals)), arr)


def test_pack_bit_layout():
    # -1 -> 00, 0 -> 01, +1 -> 10, first value in the low bits
    assert pack_ternary(np.array([1, 0, -1, 1], dtype=np.int8)) == bytes([0b10_00_01_10])


def test_file_roundtrip(tmp_path):
    block = sieve_range(1, 10_001, "mobius")
    path = tmp_path / "mu.prseq"
    save_block(block, path)
    again = load_block(path)
    assert again == block and again.kind is SeqKind.MOBIUS
    assert encode_block(again) == path.read_bytes()


def test_file_errors():
    data = encode_block(sieve_range(1, 1_001, "liouville"))
    with pytest.raises(BadMagicError):
        decode_block(b"NOTSEQ" + data[6:])
    with pytest.raises(VersionMismatchError):
        decode_block(data[:6] + b"\x09" + data[7:])
    with pytest.raises(TruncatedBlockError):
        decode_block(data[:-10])
    with pytest.raises(TruncatedBlockError):
        decode_block(data[:5])
    flipped = bytearray(data)
    flipped[30] ^= 0x04
    with pytest.raises(ChecksumMismatchError):
        decode_block(bytes(flipped))


def test_concat_and_subblock():
    a = sieve_range(1, 501, "liouville")
    b = sieve_range(501, 1_001, "liouville")
    joined = concat_blocks([a, b])
    assert joined == sieve_range(1, 1_001, "liouville")
    assert joined.subblock(100, 200) == sieve_range(100, 200, "liouville")
    assert joined[10] == oracle.liouville(10) == 1


def test_block_is_read_only():
    block = SeqBlock(1, 4, SeqKind.CUSTOM, np.array([1, -1, 0], dtype=np.int8))
    with pytest.raises(ValueError):
        block.values[0] = 0


def test_cache_dir_roundtrip(tmp_path, monkeypatch):
    from prlab.seqkernel import cached_sequence

    monkeypatch.setenv("PRLAB_CACHE_DIR", str(tmp_path / "cache"))
    first = cached_sequence("mobius", 5_001)
    files = list((tmp_path / "cache").iterdir())
    assert [f.name for f in files] == ["mobius_1_5001.prseq"]
    assert cached_sequence("mobius", 5_001) == first
    files[0].write_bytes(files[0].read_bytes()[:-1])
    with pytest.raises(TruncatedBlockError):
        cached_sequence("mobius", 5_001)
