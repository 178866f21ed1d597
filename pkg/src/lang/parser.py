"""
Recursive-descent parser and printer for pbn-1 queries.

Grammar (EBNF):

    query   := bracket | expect ;
    bracket := "P(" event "|" tail ")" ;
    tail    := event | opexpr "|" event ;
    expect  := "E[" opexpr ["|" event] "]" ;
    event   := term {"&" term} ;
    term    := IDENT | set | "Omega" ["@" NUMBER] ;
    set     := "{" label {"," label} "}" ;  label := IDENT | NUMBER
    opexpr  := IDENT ["(" IDENT ")"] ;

`&` is left-associative and exactly one query is accepted per input.
"""

from dataclasses import dataclass, field
from typing import Union

from src.core.errors import ParseError
from src.lang.lexer import Token, TokenKind, tokenize


@dataclass(frozen=True)
class Name:
    ident: str
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class SetLiteral:
    labels: tuple[str, ...]


@dataclass(frozen=True)
class Omega:
    """The system ket; `time` is the tag text of `Omega@t`, if any."""

    time: str | None = None
    pos: int = field(default=0, compare=False)

    @property
    def time_value(self) -> float | None:
        return None if self.time is None else float(self.time)


@dataclass(frozen=True)
class Intersect:
    left: "EventExpr"
    right: "EventExpr"


EventExpr = Union[Name, SetLiteral, Omega, Intersect]


@dataclass(frozen=True)
class ObservableName:
    name: str
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Apply:
    func: str
    arg: str
    pos: int = field(default=0, compare=False)


OpExpr = Union[ObservableName, Apply]


@dataclass(frozen=True)
class Bracket:
    """P(A|B)."""

    bra: EventExpr
    ket: EventExpr


@dataclass(frozen=True)
class Sandwich:
    """P(Omega|F(X)|B)."""

    bra: Omega
    op: OpExpr
    ket: EventExpr


@dataclass(frozen=True)
class Expect:
    """E[F(X)] or E[F(X)|B]."""

    op: OpExpr
    given: EventExpr | None = None


AstNode = Union[Bracket, Sandwich, Expect]

TERM_START = frozenset({TokenKind.IDENT.value, TokenKind.LBRACE.value, TokenKind.OMEGA.value})


class Parser:
    def __init__(self, tokens: list[Token], length: int | None = None):
        self.tokens = tokens
        self.i = 0
        self.length = length if length is not None else (tokens[-1].end if tokens else 0)

    def peek(self, ahead: int = 0) -> Token | None:
        k = self.i + ahead
        return self.tokens[k] if k < len(self.tokens) else None

    def _position(self) -> int:
        tok = self.peek()
        return tok.start if tok else self.length

    def _fail(self, expected: set[str] | frozenset[str], message: str | None = None) -> ParseError:
        return ParseError(self._position(), expected, message)

    def expect(self, kind: TokenKind) -> Token:
        tok = self.peek()
        if tok is None or tok.kind is not kind:
            raise self._fail({kind.value})
        self.i += 1
        return tok

    def parse_query(self) -> AstNode:
        tok = self.peek()
        if tok is not None and tok.kind is TokenKind.P_OPEN:
            node: AstNode = self.bracket()
        elif tok is not None and tok.kind is TokenKind.E_OPEN:
            node = self.expectation()
        else:
            raise self._fail({TokenKind.P_OPEN.value, TokenKind.E_OPEN.value})
        if self.peek() is not None:
            raise self._fail({"end of input"})
        return node

    def bracket(self) -> AstNode:
        self.expect(TokenKind.P_OPEN)
        bra_pos = self._position()
        bra = self.event()
        self.expect(TokenKind.PIPE)
        if self._at_opexpr():
            op = self.opexpr()
            self.expect(TokenKind.PIPE)
            ket = self.event()
            self.expect(TokenKind.RPAREN)
            if not isinstance(bra, Omega) or bra.time is not None:
                raise ParseError(bra_pos, {TokenKind.OMEGA.value},
                                 "the bra of an expectation must be an untagged Omega")
            return Sandwich(bra, op, ket)
        ket = self.event()
        self.expect(TokenKind.RPAREN)
        return Bracket(bra, ket)

    def _at_opexpr(self) -> bool:
        tok, nxt = self.peek(), self.peek(1)
        return (
            tok is not None
            and tok.kind is TokenKind.IDENT
            and nxt is not None
            and nxt.kind in (TokenKind.LPAREN, TokenKind.PIPE)
        )

    def expectation(self) -> Expect:
        self.expect(TokenKind.E_OPEN)
        op = self.opexpr()
        given = None
        tok = self.peek()
        if tok is not None and tok.kind is TokenKind.PIPE:
            self.i += 1
            given = self.event()
        tok = self.peek()
        if tok is None or tok.kind is not TokenKind.RBRACK:
            expected = {TokenKind.RBRACK.value}
            if given is None:
                expected.add(TokenKind.PIPE.value)
            else:
                expected.add(TokenKind.AMP.value)
            raise self._fail(expected)
        self.i += 1
        return Expect(op, given)

    def event(self) -> EventExpr:
        node = self.term()
        while (tok := self.peek()) is not None and tok.kind is TokenKind.AMP:
            self.i += 1
            node = Intersect(node, self.term())
        return node

    def term(self) -> EventExpr:
        tok = self.peek()
        if tok is None:
            raise self._fail(TERM_START)
        if tok.kind is TokenKind.IDENT:
            self.i += 1
            return Name(tok.text, tok.start)
        if tok.kind is TokenKind.LBRACE:
            return self.set_literal()
        if tok.kind is TokenKind.OMEGA:
            self.i += 1
            nxt = self.peek()
            if nxt is not None and nxt.kind is TokenKind.AT:
                self.i += 1
                number = self.expect(TokenKind.NUMBER)
                return Omega(number.text, tok.start)
            return Omega(None, tok.start)
        raise self._fail(TERM_START)

    def set_literal(self) -> SetLiteral:
        self.expect(TokenKind.LBRACE)
        labels = [self.label()]
        while (tok := self.peek()) is not None and tok.kind is TokenKind.COMMA:
            self.i += 1
            labels.append(self.label())
        tok = self.peek()
        if tok is None or tok.kind is not TokenKind.RBRACE:
            raise self._fail({TokenKind.COMMA.value, TokenKind.RBRACE.value})
        self.i += 1
        return SetLiteral(tuple(labels))

    def label(self) -> str:
        tok = self.peek()
        if tok is None or tok.kind not in (TokenKind.IDENT, TokenKind.NUMBER):
            raise self._fail({TokenKind.IDENT.value, TokenKind.NUMBER.value})
        self.i += 1
        return tok.text

    def opexpr(self) -> OpExpr:
        name = self.expect(TokenKind.IDENT)
        tok = self.peek()
        if tok is not None and tok.kind is TokenKind.LPAREN:
            self.i += 1
            arg = self.expect(TokenKind.IDENT)
            self.expect(TokenKind.RPAREN)
            return Apply(name.text, arg.text, name.start)
        return ObservableName(name.text, name.start)


def parse(tokens: list[Token], length: int | None = None) -> AstNode:
    """Parse a token list into exactly one query."""
    return Parser(tokens, length).parse_query()


def parse_query(source: str | bytes) -> AstNode:
    """Tokenize and parse a query string."""
    data = source.encode("utf-8") if isinstance(source, str) else bytes(source)
    return parse(tokenize(data), len(data))


def event_to_text(node: EventExpr) -> str:
    if isinstance(node, Name):
        return node.ident
    if isinstance(node, SetLiteral):
        return "{" + ",".join(node.labels) + "}"
    if isinstance(node, Omega):
        return "Omega" if node.time is None else f"Omega@{node.time}"
    if isinstance(node, Intersect):
        if isinstance(node.right, Intersect):
            raise ValueError("Right-nested intersections have no pbn-1 spelling")
        return f"{event_to_text(node.left)} & {event_to_text(node.right)}"
    raise TypeError(f"Not an event expression: {node!r}")


def op_to_text(node: OpExpr) -> str:
    if isinstance(node, Apply):
        return f"{node.func}({node.arg})"
    return node.name


def to_text(node: AstNode) -> str:
    """Canonical pbn-1 spelling of a query."""
    if isinstance(node, Bracket):
        return f"P({event_to_text(node.bra)}|{event_to_text(node.ket)})"
    if isinstance(node, Sandwich):
        return f"P({event_to_text(node.bra)}|{op_to_text(node.op)}|{event_to_text(node.ket)})"
    if isinstance(node, Expect):
        if node.given is None:
            return f"E[{op_to_text(node.op)}]"
        return f"E[{op_to_text(node.op)}|{event_to_text(node.given)}]"
    raise TypeError(f"Not a query: {node!r}")
