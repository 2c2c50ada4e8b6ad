from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import corpus
from prlab.errors import DSLSyntaxError, DSLTypeError
from prlab.testlang.ast import ModEq
from prlab.testlang import (
    DyadicSum,
    Lit,

    Pm,
    dyadic_decompose,
    evaluate,
    parse,
    parse_bool,
    split_pm,
    square_flip,
)

NS = np.arange(0, 3_000, dtype=np.int64)


def test_parse_pm():
    assert parse("pm(n % 2 == 0)") == Pm(ModEq(2, 0))


def test_syntax_error_offset():
    with pytest.raises(DSLSyntaxError) as info:
        parse("pm(")
    assert info.value.position == 3
    assert "offset 3" in str(info.value)


def test_parse_dyadic_exponents():
    F = parse("1/2 * pm(bit(n,0)) + 1/4 * pm(bit(n,1))")
    assert isinstance(F, DyadicSum)
    assert [w.denominator.bit_length() - 1 for w, _ in F.terms] == [1, 2]


@pytest.mark.parametrize(
    "text,n,value",
    [("pm(n%2==0)", 4, 1), ("pm(n%2==0)", 7, -1), ("pm(bit(n,0))", 5, 1)],
)
def test_eval_examples(text, n, value):
    assert evaluate(parse(text), n) == value


@pytest.mark.parametrize(
    "text",
    [
        "1/3 * pm(bit(n,0))",          # weight not dyadic
        "3/4 * 1 + 1/2 * -1",          # |weights| exceed 1
        "pm(n % 2 == 0) + pm(bit(n,1))",  # unweighted sum
        "pm(1)",                       # ternary where a bool is required
    ],
)
def test_type_errors(text):
    with pytest.raises(DSLTypeError):
        parse(text)


@pytest.mark.parametrize("text", ["pm(n % 0 == 0)", "bit(n,", "pm(n < )", "2", "pm(n % 2 == 5)"])
def test_rejects(text):
    with pytest.raises((DSLSyntaxError, DSLTypeError)):
        parse(text)


def test_scalar_matches_vector():
    for text in corpus.corpus(11, 40) + corpus.corpus(12, 20, "dyadic"):
        f = parse(text)
        vec = f.eval_array(NS[:400])
        assert [evaluate(f, int(n)) for n in NS[:400]] == list(vec), text


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**31))
def test_pretty_roundtrip(seed):
    for text in corpus.corpus(seed, 3) + corpus.corpus(seed, 2, "dyadic"):
        f = parse(text)
        again = parse(f.pretty())
        assert again == f
        assert np.array_equal(again.eval_array(NS[:200]), f.eval_array(NS[:200]))


def test_bool_operators():
    b = parse_bool("(bit(n,0) xor bit(n,1)) and not n < 3")
    got = [int(b.eval(n)) for n in range(8)]
    assert got == [0, 0, 0, 0, 0, 1, 1, 0]


def test_split_pm_examples():
    plus, minus = split_pm(Lit(0))
    assert {plus.eval(n) for n in range(20)} == {-1}
    assert {minus.eval(n) for n in range(20)} == {1}
    plus, minus = split_pm(Lit(1))
    assert {plus.eval(n) for n in range(20)} == {minus.eval(n) for n in range(20)} == {1}
    f = parse("tern(n % 3 == 0 -> 1, n % 3 == 1 -> -1, else -> 0)")
    plus, minus = split_pm(f)
    assert (plus.eval(2), minus.eval(2)) == (-1, 1)


def test_split_pm_corpus():
    for text in corpus.corpus(21, 60):
        f = parse(text)
        plus, minus = split_pm(f)
        p, m = plus.eval_array(NS), minus.eval_array(NS)
        assert set(np.unique(p)) <= {-1, 1} and set(np.unique(m)) <= {-1, 1}
        assert np.array_equal(p.astype(int) + m, 2 * f.eval_array(NS).astype(int)), text


def test_dyadic_examples():
    half = dyadic_decompose(parse("1/2 * 1"), 3)
    assert [(j, t) for j, t in half.terms] == [(1, Lit(1))]
    assert dyadic_decompose(parse("1/2 * 0"), 5).terms == ()
    assert dyadic_decompose(parse("1/2 * 1 + -1/2 * 1"), 5).terms == ()
    three_eighths = dyadic_decompose(parse("1/4 * 1 + 1/8 * 1"), 3)
    assert three_eighths.terms == ((2, Lit(1)), (3, Lit(1)))


def test_dyadic_error_bound_corpus():
    for J in (1, 3, 6):
        for text in corpus.corpus(31 + J, 30, "dyadic"):
            F = parse(text)
            dec = dyadic_decompose(F, J)
            approx = dec.as_testfn()
            for n in range(0, 600, 7):
                assert abs(F.eval(n) - approx.eval(n)) <= Fraction(1, 2**J), (text, n)
                assert all(t.eval(n) in (-1, 0, 1) for _, t in dec.terms)


def test_dyadic_exact_when_representable():
    F = parse("3/8 * pm(bit(n,0)) + -1/4 * pm(n % 3 == 0)")
    dec = dyadic_decompose(F, 3)
    assert all(F.eval(n) == dec.eval(n) for n in range(200))


def test_square_flip_examples():
    one = Lit(1)
    flipped = square_flip(one, 2)
    assert flipped.eval(4) == -1
    assert flipped.eval(6) == 1
    f = parse("pm(bit(n,0))")
    for n0 in (2, 5, 11):
        assert square_flip(f, n0).eval(1) == f.eval(1)


def test_square_flip_definition():
    f = parse("tern(n % 5 == 0 -> 0, bit(n,2) -> -1, else -> 1)")
    n0 = 7
    g = square_flip(f, n0)
    for n in range(1, 3_000):
        hit = any(n % (k * k) == 0 for k in range(2, n0 + 1))
        assert g.eval(n) == (-f.eval(n) if hit else f.eval(n))


def test_lift_syntax():
    f = parse("lift(pm(n % 2 == 0); 3, 0, 1; 3)")
    assert f.eval(12) == 1
    assert f.eval(9) == -1
    assert f.eval(10) == 0
    assert f.eval(0) == 0
