"""Low-complexity test functions: syntax trees, parser and rewrites."""

from .ast import (
    BoolExpr,
    BoolLift,
    DyadicSum,
    Lit,
    Pm,
    Prod,
    Tern,
    Ternary,
    TestFn,
    evaluate,
    evaluate_range,
)
from .decompose import (
    DyadicDecomposition,
    dyadic_decompose,
    equals,
    flip_after,
    signed_digits,
    split_pm,
    square_divisor_predicate,
    square_flip,
)
from .parser import parse, parse_bool

__all__ = [
    "BoolExpr",
    "BoolLift",
    "DyadicDecomposition",
    "DyadicSum",
    "Lit",
    "Pm",
    "Prod",
    "Tern",
    "Ternary",
    "TestFn",
    "dyadic_decompose",
    "equals",
    "evaluate",
    "evaluate_range",
    "flip_after",
    "parse",
    "parse_bool",
    "signed_digits",
    "split_pm",
    "square_divisor_predicate",
    "square_flip",
]
