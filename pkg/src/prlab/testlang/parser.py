"""Recursive-descent parser for the test-function language.

Grammar (``n`` is the only variable)::

    expr    := term (('+' | '-') term)*
    term    := [sign] INT '/' INT '*' product | product
    product := factor ('*' factor)*
    factor  := 'pm' '(' bool ')'
             | 'tern' '(' case (',' case)* ')'
             | 'lift' '(' product ';' INT ',' INT ',' INT ';' INT ')'
             | [sign] INT                      (ternary literal)
             | '(' product ')'
    case    := bool '->' [sign] INT | 'else' '->' [sign] INT
    bool    := xor ('or' xor)*
    xor     := conj ('xor' conj)*
    conj    := unary ('and' unary)*
    unary   := 'not' unary | atom | '(' bool ')'
    atom    := 'bit' '(' 'n' ',' INT ')' | 'n' '%' INT '==' INT | 'n' '<' INT
             | 'n' 'in' '[' INT ',' INT ')' | 'popcount' '(' 'n' ')' '>=' INT
             | 'lift' '(' bool ';' INT ',' INT ',' INT ';' INT ')'
             | 'true' | 'false'

A lone product is ternary-typed; any weighted term makes the whole
expression a dyadic sum, and then every term must carry a weight.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from ..errors import DSLSyntaxError, DSLTypeError
from .ast import (
    AffineLift,
    And,
    Bit,
    BoolConst,
    BoolLift,
    BoolExpr,
    DyadicSum,
    InRange,
    Less,
    Lit,
    ModEq,
    Not,
    Or,
    Pm,
    PopcountGE,
    Prod,
    Tern,
    TestFn,
    Xor,
)

_TOKEN = re.compile(
    r"\s*(?:(?P<int>\d+)|(?P<word>[A-Za-z_]\w*)|(?P<sym>==|>=|->|[()\[\],%<*+/;-]))"
)
_BOOL_STARTERS = {"bit", "n", "popcount", "not", "true", "false"}


@dataclass(frozen=True)
class Token:
    kind: str  # "int", "word", "sym", "eof"
    text: str
    pos: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    while True:
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            rest = text[pos:]
            if rest.strip() == "":
                break
            bad = pos + (len(rest) - len(rest.lstrip()))
            raise DSLSyntaxError(f"unexpected character {text[bad]!r}", bad)
        kind = m.lastgroup
        tokens.append(Token(kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(Token("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0

    # token helpers
    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, k=1) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def at(self, text: str) -> bool:
        return self.tok.kind in ("word", "sym") and self.tok.text == text

    def fail(self, message: str, tok: Token | None = None):
        tok = tok or self.tok
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise DSLSyntaxError(f"{message}, found {found}", tok.pos)

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"expected {text!r}")
        tok = self.tok
        self.i += 1
        return tok

    def integer(self, signed=False) -> int:
        sign = 1
        if signed and self.at("-"):
            self.i += 1
            sign = -1
        elif signed and self.at("+"):
            self.i += 1
        if self.tok.kind != "int":
            self.fail("expected an integer")
        value = int(self.tok.text)
        self.i += 1
        return sign * value

    def finish(self):
        if self.tok.kind != "eof":
            self.fail("unexpected trailing input")

    # expressions
    def expr(self) -> TestFn:
        start = self.tok
        terms = [self.term()]
        while self.at("+") or self.at("-"):
            negate = self.tok.text == "-"
            self.i += 1
            w, t, pos = self.term()
            if negate and w is not None:
                w = -w
            elif negate:
                raise DSLTypeError("unweighted ternary term in a weighted sum", pos)
            terms.append((w, t, pos))
        if len(terms) == 1 and terms[0][0] is None:
            return terms[0][1]
        weighted = []
        for w, t, pos in terms:
            if w is None:
                raise DSLTypeError("unweighted ternary term in a weighted sum", pos)
            if w != 0:
                weighted.append((w, t))
        try:
            return DyadicSum(tuple(weighted))
        except DSLTypeError as exc:
            raise DSLTypeError(str(exc).removeprefix("type error: "), start.pos) from None

    def _starts_rational(self) -> bool:
        k = 1 if self.at("-") or self.at("+") else 0
        return self.peek(k).kind == "int" and self.peek(k + 1).text == "/"

    def term(self):
        pos = self.tok.pos
        if self._starts_rational():
            num = self.integer(signed=True)
            self.expect("/")
            den_tok = self.tok
            den = self.integer()
            if den == 0:
                raise DSLTypeError("zero denominator", den_tok.pos)
            w = Fraction(num, den)
            if w.denominator & (w.denominator - 1):
                raise DSLTypeError(f"weight {num}/{den} is not dyadic", pos)
            self.expect("*")
            return w, self.product(), pos
        return None, self.product(), pos

    def product(self):
        factors = [self.factor()]
        while self.at("*"):
            self.i += 1
            factors.append(self.factor())
        return factors[0] if len(factors) == 1 else Prod(tuple(factors))

    def factor(self):
        tok = self.tok
        if self.at("pm"):
            self.i += 1
            self.expect("(")
            cond = self.boolean()
            self.expect(")")
            return Pm(cond)
        if self.at("tern"):
            return self.tern()
        if self.at("lift"):
            return AffineLift(*self.lift(self.product))
        if tok.kind == "int" or self.at("-") or self.at("+"):
            value = self.integer(signed=True)
            if value not in (-1, 0, 1):
                raise DSLTypeError(f"ternary literal must be -1, 0 or 1, got {value}", tok.pos)
            return Lit(value)
        if self.at("("):
            self.i += 1
            inner = self.product()
            self.expect(")")
            return inner
        if tok.kind == "word" and tok.text in _BOOL_STARTERS:
            raise DSLTypeError("boolean used where ternary expected (wrap it in pm(...))", tok.pos)
        self.fail("expected a ternary factor")

    def tern(self):
        self.expect("tern")
        self.expect("(")
        cases = []
        default = 0
        while True:
            if self.at("else"):
                self.i += 1
                self.expect("->")
                default = self._case_value()
                break
            guard = self.boolean()
            self.expect("->")
            cases.append((guard, self._case_value()))
            if not self.at(","):
                break
            self.i += 1
        self.expect(")")
        return Tern(tuple(cases), default)

    def lift(self, body):
        self.expect("lift")
        self.expect("(")
        inner = body()
        self.expect(";")
        a = self.integer(signed=True)
        self.expect(",")
        b = self.integer(signed=True)
        self.expect(",")
        xmin = self.integer(signed=True)
        self.expect(";")
        n0 = self.integer(signed=True)
        self.expect(")")
        return inner, a, b, xmin, n0

    def _case_value(self) -> int:
        tok = self.tok
        v = self.integer(signed=True)
        if v not in (-1, 0, 1):
            raise DSLTypeError(f"case value must be -1, 0 or 1, got {v}", tok.pos)
        return v

    # booleans
    def boolean(self) -> BoolExpr:
        node = self.xor()
        while self.at("or"):
            self.i += 1
            node = Or(node, self.xor())
        return node

    def xor(self) -> BoolExpr:
        node = self.conj()
        while self.at("xor"):
            self.i += 1
            node = Xor(node, self.conj())
        return node

    def conj(self) -> BoolExpr:
        node = self.unary()
        while self.at("and"):
            self.i += 1
            node = And(node, self.unary())
        return node

    def unary(self) -> BoolExpr:
        if self.at("not"):
            self.i += 1
            return Not(self.unary())
        if self.at("("):
            self.i += 1
            node = self.boolean()
            self.expect(")")
            return node
        return self.atom()

    def atom(self) -> BoolExpr:
        tok = self.tok
        if self.at("true") or self.at("false"):
            self.i += 1
            return BoolConst(tok.text == "true")
        if self.at("bit"):
            self.i += 1
            self.expect("(")
            self.expect("n")
            self.expect(",")
            idx = self.integer()
            self.expect(")")
            return Bit(idx)
        if self.at("popcount"):
            self.i += 1
            self.expect("(")
            self.expect("n")
            self.expect(")")
            self.expect(">=")
            return PopcountGE(self.integer(signed=True))
        if self.at("n"):
            self.i += 1
            if self.at("%"):
                self.i += 1
                m = self.integer()
                self.expect("==")
                r = self.integer()
                if not 0 <= r < m:
                    raise DSLTypeError(f"need 0 <= residue < modulus, got {r} mod {m}", tok.pos)
                return ModEq(m, r)
            if self.at("<"):
                self.i += 1
                return Less(self.integer(signed=True))
            if self.at("in"):
                self.i += 1
                self.expect("[")
                a = self.integer(signed=True)
                self.expect(",")
                b = self.integer(signed=True)
                self.expect(")")
                return InRange(a, b)
            self.fail("expected '%', '<' or 'in' after n")
        if self.at("lift"):
            return BoolLift(*self.lift(self.boolean))
        if tok.kind == "word" and tok.text in ("pm", "tern") or tok.kind == "int":
            raise DSLTypeError("ternary value used where boolean expected", tok.pos)
        self.fail("expected a boolean atom")


def parse(text: str) -> TestFn:
    """Parse a ternary or dyadic test function."""
    p = _Parser(text)
    if p.tok.kind == "eof":
        p.fail("empty expression")
    if p.tok.kind == "word" and p.tok.text in _BOOL_STARTERS:
        raise DSLTypeError("boolean used where ternary expected (wrap it in pm(...))", p.tok.pos)
    node = p.expr()
    p.finish()
    return node


def parse_bool(text: str) -> BoolExpr:
    """Parse a boolean predicate of ``n`` (used for set membership)."""
    p = _Parser(text)
    node = p.boolean()
    p.finish()
    return node
