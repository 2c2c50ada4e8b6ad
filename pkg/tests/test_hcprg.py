import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from prlab.correlate import default_battery, battery
from prlab.errors import DataRangeError, DomainError, KeyGenerationError
from prlab.hcprg import (
    BlockSchedule,
    ResidueEmbedding,
    TrapdoorKey,
    block_index,
    flip_tail,
    hardcore_bit,
    keygen,
    prg_sequence,
    qr_set,
    switching_point,
)
from prlab.testlang import Lit, parse

KEY77 = TrapdoorKey(7, 11)


def test_forced_primes():
    assert KEY77.modulus == 77 and KEY77.qr_count == 15


def test_qr77_matches_brute_force():
    squares = {x * x % 77 for x in range(1, 77) if x % 7 and x % 11}
    assert set(qr_set(KEY77)) == squares and len(squares) == 15


def test_squaring_permutes_qr77():
    qrs = qr_set(KEY77)
    assert sorted(KEY77.square(y) for y in qrs) == qrs


def test_principal_root_brute_force():
    qrs = set(qr_set(KEY77))
    for y in qrs:
        roots = [x for x in qrs if x * x % 77 == y]
        assert roots == [KEY77.principal_root(y)]
        assert hardcore_bit(KEY77, y) == roots[0] & 1


def test_root_of_one():
    assert KEY77.principal_root(1) == 1 and hardcore_bit(KEY77, 1) == 1


def test_non_residue_rejected():
    with pytest.raises(DomainError):
        KEY77.principal_root(2)


def test_keygen_small_error():
    with pytest.raises(KeyGenerationError):
        keygen(4)


@pytest.mark.parametrize("bits", [6, 10, 20, 32, 48])
def test_keygen_shape(bits):
    key = keygen(bits, seed=3)
    assert key.bits == bits and key.p % 4 == 3 and key.q % 4 == 3
    assert keygen(bits, seed=3) == key


def test_bad_primes():
    with pytest.raises(KeyGenerationError):
        TrapdoorKey(5, 11)
    with pytest.raises(KeyGenerationError):
        TrapdoorKey(7, 7)


def test_key_json_roundtrip(tmp_path):
    key = keygen(32, seed=1)
    key.save(tmp_path / "k.json")
    assert TrapdoorKey.load(tmp_path / "k.json") == key


def test_inverse_on_32_bit_keys():
    rng = random.Random(5)
    for seed in range(4):
        key = keygen(32, seed)
        for _ in range(200):
            x = rng.randrange(1, key.modulus)
            y = key.square(key.square(x))  # a square of a residue, so y's root is a residue
            r = key.principal_root(y)
            assert key.square(r) == y and key.is_qr(r)


def test_block_index_examples():
    sched = BlockSchedule((1, 2, 3))
    assert block_index(0, sched) == (1, 0)
    assert block_index(3, sched) == (2, 1)
    assert block_index(6, sched) == (3, 0)
    with pytest.raises(DataRangeError):
        block_index(14, sched)


def test_schedule_validation():
    for bad in [(), (2, 2), (3, 1), (0, 1)]:
        with pytest.raises(DomainError):
            BlockSchedule(bad)


@given(st.lists(st.integers(1, 12), min_size=1, max_size=8, unique=True), st.data())
def test_block_index_covering(ks, data):
    sched = BlockSchedule(tuple(sorted(ks)))
    n = data.draw(st.integers(0, sched.coverage - 1))
    j, local = block_index(n, sched)
    o = sched.offsets
    assert o[j - 1] <= n < o[j] and 0 <= local < 1 << sched.exponents[j - 1]


def test_embedding_yields_residues():
    key = keygen(20, 2)
    emb = ResidueEmbedding(key, BlockSchedule((4, 6)), seed=9)
    ys = [emb.residue(2, i) for i in range(64)]
    assert len(set(ys)) == 64 and all(key.is_qr(y) for y in ys)


def test_embedding_wraps_on_tiny_keys():
    emb = ResidueEmbedding(KEY77, BlockSchedule((5,)), seed=0)
    ys = [emb.residue(1, i) for i in range(32)]
    assert ys[:15] == ys[15:30] and len(set(ys)) == 15


def test_prg_deterministic_and_subrange():
    key = keygen(32, 0)
    sched = BlockSchedule.covering(5_000)
    full = prg_sequence(key, sched, 0, 5_000, seed=1)
    assert set(np.unique(full.values)) <= {-1, 1}
    assert prg_sequence(key, sched, 0, 5_000, seed=1) == full
    part = prg_sequence(key, sched, 1_234, 3_000, seed=1)
    assert np.array_equal(part.values, full.values[1_234:3_000])
    assert prg_sequence(key, sched, 0, 5_000, seed=2) != full


def test_prg_out_of_schedule():
    with pytest.raises(DataRangeError):
        prg_sequence(KEY77, BlockSchedule((1, 2)), 0, 7)


def test_prg_small_battery():
    key = keygen(32, 0)
    s = prg_sequence(key, BlockSchedule.covering(20_001), 1, 20_001)
    assert battery(s, default_battery(), 0.1, burn_in=1_000).passed


def test_flip_tail():
    assert flip_tail(Lit(1), 10).eval(5) == 1
    assert flip_tail(Lit(1), 10).eval(10) == 1
    assert flip_tail(Lit(1), 10).eval(11) == -1
    assert flip_tail(parse("pm(n%2==0)"), 4).eval(6) == -1


def test_switching_point():
    assert switching_point(0.5, 10) == 512
    with pytest.raises(DomainError):
        switching_point(1.0, 3)
