from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracle
from prlab.correlate import (
    DEFAULT_BATTERY,
    MartingaleSpec,
    battery,
    biased_statistic,
    correlate,
    correlate_many,
    fairness_gap,
    run_martingale,
)
from prlab.errors import DomainError
from prlab.seqkernel import SeqBlock, SeqKind, sieve_range
from prlab.testlang import parse


def custom(values, lo=1):
    return SeqBlock(lo, lo + len(values), SeqKind.CUSTOM, np.asarray(values, dtype=np.int8))


def test_liouville_at_ten():
    lam = [oracle.liouville(n) for n in range(1, 11)]
    trace = correlate(custom(lam), "1", [10])
    assert trace.raw == (0,) and trace.norm_n == [0.0]


def test_perfect_correlation():
    trace = correlate(custom([1] * 100), "1", [100])
    assert trace.raw == (100,) and trace.norm_n == [1.0]
    odd = custom([1 if i % 2 else -1 for i in range(1, 51)])
    trace = correlate(odd, "pm(n % 2 == 1)", [50])
    assert trace.raw == (50,) and trace.norm_n == [1.0]


def test_exact_against_naive():
    lam = sieve_range(1, 20_001, "liouville")
    for text in ["pm(bit(n,3))", "tern(n % 3 == 0 -> 1, n % 3 == 1 -> -1, else -> 0)",
                 "3/4 * pm(n % 5 == 0) + -1/8 * pm(popcount(n) >= 4)"]:
        f = parse(text)
        pts = [1, 7, 1_000, 19_999, 20_000]
        trace = correlate(lam, f, pts)
        for n, raw in zip(pts, trace.raw):
            naive = sum(Fraction(f.eval(i)) * lam[i] for i in range(1, n + 1))
            assert Fraction(raw) == naive


def test_streaming_block_size_irrelevant():
    lam = sieve_range(1, 50_001, "liouville")
    tests = [parse(t) for t in DEFAULT_BATTERY[:6]]
    a = correlate_many(lam, tests, "pow2", block=1_000)
    b = correlate_many(lam, tests, "pow2", block=1 << 20)
    assert [t.raw for t in a] == [t.raw for t in b]


def test_normalizations():
    trace = correlate(custom([1] * 64), "1", [1, 2, 3, 64], eps=0.25)
    assert trace.norm_lil[:2] == [None, None]
    assert trace.norm_lil[2] is not None
    assert trace.norm_rh[-1] == pytest.approx(64 / 64 ** 0.75)


def test_bounded_sums_normalize_to_zero():
    alternating = custom([(-1) ** i for i in range(1, 1 << 16 | 1)])
    trace = correlate(alternating, "1", "pow2")
    assert all(abs(v) <= 1 / n for v, n in zip(trace.norm_n, trace.checkpoints))
    assert abs(trace.norm_n[-1]) < 1e-4


def test_csv_columns():
    text = correlate(custom([1, -1, 1, 1]), "1", [1, 4]).to_csv()
    assert text.splitlines()[0] == "n,raw,norm_n,norm_rh,norm_lil"
    assert text.splitlines()[1].startswith("1,1,1.0,")


@pytest.mark.parametrize("p", [0.1, 0.5, 0.9])
def test_biased_constant_plus(p):
    tr = biased_statistic(custom([1] * 40), "1", p, [1, 13, 40])
    assert tr.values == pytest.approx([p, p, p])


def test_biased_periodic_quarter():
    s = custom([1, 1, 1, -1] * 25)
    tr = biased_statistic(s, "1", 0.25, [4, 8, 100])
    assert tr.exact(Fraction(1, 4)) == [0, 0, 0]


def test_biased_minus_half():
    tr = biased_statistic(custom([-1] * 30), "1", 0.5, [1, 30])
    assert tr.values == pytest.approx([-0.5, -0.5])


def test_biased_rejects_p():
    with pytest.raises(DomainError):
        biased_statistic(custom([1]), "1", 1.0, [1])


def test_martingale_examples():
    ones = custom([1] * 10)
    flat = run_martingale(MartingaleSpec(rule="0"), ones, 10)
    assert flat.final == 1 and np.all(flat.capital == 1)
    doubling = run_martingale(MartingaleSpec(rule="1"), ones, 10)
    assert doubling.final == 1024


def test_martingale_ruin():
    run = run_martingale(MartingaleSpec(rule="1"), custom([1, 1, -1, 1]), 4)
    assert run.final == 0 and run.stopped_at == 3


@settings(max_examples=100, deadline=None)
@given(st.lists(st.sampled_from([-1, 1]), min_size=1, max_size=60))
def test_martingale_exact_matches_fraction_loop(seq):
    spec = MartingaleSpec(rule="1/2 * pm(bit(n,0)) + -1/4 * pm(n % 3 == 0)")
    run = run_martingale(spec, custom(seq), len(seq))
    cap = Fraction(1)
    for n, v in enumerate(seq, start=1):
        cap *= 1 + spec.rule.eval(n) * v
    assert run.final == cap
    assert run.capital[-1] == pytest.approx(float(cap))


@given(st.fractions(min_value=0, max_value=100), st.fractions(min_value=-1, max_value=1))
def test_fairness(capital, beta):
    assert fairness_gap(capital, beta) == 0


def test_battery_passes_liouville():
    lam = sieve_range(1, 200_001, "liouville")
    report = battery(lam, ["1"], 0.05, burn_in=10_000)
    assert report.passed


def test_battery_offender():
    report = battery(custom([1] * 100), ["1"], 0.5, burn_in=1)
    assert not report.passed
    assert report.worst.test == "1" and report.worst.max_abs_norm == 1.0


def test_battery_empty():
    with pytest.raises(DomainError):
        battery(custom([1] * 10), [], 0.5)


def test_battery_burn_in_strict():
    s = custom([1] * 8 + [1, -1] * 60)
    # at n = 8 the sum equals n; checkpoints strictly above the burn-in skip it
    assert battery(s, ["1"], 0.6, burn_in=8).passed
    assert not battery(s, ["1"], 0.6, burn_in=7).passed
