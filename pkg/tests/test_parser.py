"""Tests for the pbn-1 parser and printer."""

import random

import pytest

from src.core.errors import LexError, ParseError
from src.lang.lexer import tokenize
from src.lang.parser import (
    Apply,
    Bracket,
    Expect,
    Intersect,
    Name,
    ObservableName,
    Omega,
    Sandwich,
    SetLiteral,
    parse,
    parse_query,
    to_text,
)

RESERVED = {"P", "E", "Omega"}
FUZZ_ALPHABET = b"PE(){}[]|&@,.Omega XY_12 sq\t\xff?"


def test_set_bracket():
    """Test P({2}|{1,2,3})."""
    assert parse_query("P({2}|{1,2,3})") == Bracket(
        SetLiteral(("2",)), SetLiteral(("1", "2", "3"))
    )


def test_sandwich():
    """Test P(Omega|X|Omega@2)."""
    assert parse_query("P(Omega|X|Omega@2)") == Sandwich(Omega(), ObservableName("X"), Omega("2"))


def test_conditional_expectation():
    """Test E[sq(X)|B]."""
    assert parse_query("E[sq(X)|B]") == Expect(Apply("sq", "X"), Name("B"))
    assert parse_query("E[X]") == Expect(ObservableName("X"))


def test_intersection_is_left_associative():
    """Test that A & B & C groups as (A & B) & C."""
    ast = parse_query("P(A & B & C|D)")
    assert ast.bra == Intersect(Intersect(Name("A"), Name("B")), Name("C"))


def test_parse_accepts_token_list():
    """Test that parse works on tokenize output."""
    assert parse(tokenize("P(A|Omega)")) == Bracket(Name("A"), Omega())


def test_sandwich_bra_must_be_omega():
    """Test that P(A|X|B) is rejected at the bra."""
    with pytest.raises(ParseError) as info:
        parse_query("P(A|X|B)")
    assert info.value.position == 2
    assert "Omega" in info.value.expected


def test_sandwich_bra_must_be_untagged():
    """Test that a time-tagged bra is rejected."""
    with pytest.raises(ParseError):
        parse_query("P(Omega@1|X|B)")


def test_unterminated_expectation():
    """Test that E[X reports the end of input and what could follow."""
    with pytest.raises(ParseError) as info:
        parse_query("E[X")
    assert info.value.position == 3
    assert {"]", "|"} <= info.value.expected


def test_trailing_input():
    """Test that exactly one query is accepted."""
    with pytest.raises(ParseError) as info:
        parse_query("P(A|B) P(A|B)")
    assert info.value.position == 7


def test_empty_input():
    """Test that empty input expects a query opener."""
    with pytest.raises(ParseError) as info:
        parse_query("   ")
    assert info.value.position == 3
    assert info.value.expected == {"P(", "E["}


def test_missing_close_paren():
    """Test P(A|B without its closing parenthesis."""
    with pytest.raises(ParseError) as info:
        parse_query("P(A|B")
    assert info.value.position == 5
    assert ")" in info.value.expected


def test_time_tag_needs_number():
    """Test that Omega@ must be followed by a number."""
    with pytest.raises(ParseError) as info:
        parse_query("P(A|Omega@X)")
    assert info.value.position == 10
    assert info.value.expected == {"NUMBER"}


def test_empty_set_is_rejected():
    """Test that set literals need at least one label."""
    with pytest.raises(ParseError):
        parse_query("P({}|Omega)")


def test_printer_spelling():
    """Test the canonical spelling of each query form."""
    assert to_text(parse_query("P( {1, 2} & A |Omega@2 )")) == "P({1,2} & A|Omega@2)"
    assert to_text(parse_query("P(Omega | sq(X) | B)")) == "P(Omega|sq(X)|B)"
    assert to_text(parse_query("E[ X ]")) == "E[X]"


class QueryGenerator:
    """Random well-formed queries, built as ASTs."""

    def __init__(self, seed: int):
        self.rng = random.Random(seed)

    def ident(self) -> str:
        while True:
            first = self.rng.choice("ABCXYZabcxyz_")
            rest = "".join(self.rng.choice("abcXYZ019_") for _ in range(self.rng.randint(0, 4)))
            name = first + rest
            if name not in RESERVED:
                return name

    def label(self) -> str:
        if self.rng.random() < 0.4:
            whole = str(self.rng.randint(0, 99))
            return whole if self.rng.random() < 0.7 else f"{whole}.{self.rng.randint(0, 99)}"
        return self.ident()

    def time(self) -> str:
        return str(self.rng.randint(0, 10)) if self.rng.random() < 0.6 else "0.5"

    def term(self):
        roll = self.rng.random()
        if roll < 0.35:
            return Name(self.ident())
        if roll < 0.7:
            return SetLiteral(tuple(self.label() for _ in range(self.rng.randint(1, 4))))
        return Omega(self.time() if self.rng.random() < 0.5 else None)

    def event(self):
        node = self.term()
        for _ in range(self.rng.randint(0, 3)):
            node = Intersect(node, self.term())
        return node

    def op(self):
        if self.rng.random() < 0.5:
            return ObservableName(self.ident())
        return Apply(self.ident(), self.ident())

    def query(self):
        roll = self.rng.random()
        if roll < 0.4:
            return Bracket(self.event(), self.event())
        if roll < 0.7:
            return Sandwich(Omega(), self.op(), self.event())
        return Expect(self.op(), self.event() if self.rng.random() < 0.6 else None)


def test_round_trip_generated_queries():
    """Test print-then-parse on 1000 generated queries."""
    gen = QueryGenerator(seed=7)
    for _ in range(1000):
        ast = gen.query()
        text = to_text(ast)
        assert parse_query(text) == ast, text
        assert to_text(parse_query(text)) == text


def test_fuzz_never_crashes():
    """Test 10^5 random byte strings: either a query or a positioned error."""
    rng = random.Random(11)
    for _ in range(100_000):
        size = rng.randint(0, 24)
        if rng.random() < 0.8:
            data = bytes(rng.choice(FUZZ_ALPHABET) for _ in range(size))
        else:
            data = bytes(rng.randrange(256) for _ in range(size))
        try:
            parse_query(data)
        except (LexError, ParseError) as e:
            assert 0 <= e.position <= len(data)
