"""Tokenizer for pbn-1 queries such as `P(A|B)` or `E[sq(X)|B]`."""

from dataclasses import dataclass
from enum import Enum

from src.core.errors import LexError


class TokenKind(str, Enum):
    """Token kinds of the pbn-1 grammar."""

    P_OPEN = "P("
    E_OPEN = "E["
    PIPE = "|"
    AMP = "&"
    AT = "@"
    LBRACE = "{"
    RBRACE = "}"
    LPAREN = "("
    RPAREN = ")"
    RBRACK = "]"
    COMMA = ","
    IDENT = "IDENT"
    NUMBER = "NUMBER"
    OMEGA = "Omega"


@dataclass(frozen=True)
class Token:
    """A token and its byte span [start, end) in the UTF-8 input."""

    kind: TokenKind
    text: str
    start: int
    end: int


PUNCTUATION = {
    ord("|"): TokenKind.PIPE,
    ord("&"): TokenKind.AMP,
    ord("@"): TokenKind.AT,
    ord("{"): TokenKind.LBRACE,
    ord("}"): TokenKind.RBRACE,
    ord("("): TokenKind.LPAREN,
    ord(")"): TokenKind.RPAREN,
    ord("]"): TokenKind.RBRACK,
    ord(","): TokenKind.COMMA,
}

WHITESPACE = frozenset(b" \t\r\n")
DIGITS = frozenset(b"0123456789")
IDENT_START = frozenset(b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz_")
IDENT_REST = IDENT_START | DIGITS


def tokenize(source: str | bytes) -> list[Token]:
    """
    Split a query into maximal-munch tokens, skipping whitespace.

    `P(` and `E[` are single tokens only when the bracket follows the
    letter immediately. Any byte outside the token alphabet raises
    LexError with its offset.
    """
    data = source.encode("utf-8") if isinstance(source, str) else bytes(source)
    tokens: list[Token] = []
    i = 0
    n = len(data)
    while i < n:
        b = data[i]
        if b in WHITESPACE:
            i += 1
            continue

        if b in PUNCTUATION:
            tokens.append(Token(PUNCTUATION[b], chr(b), i, i + 1))
            i += 1
            continue

        if b in DIGITS:
            j = i
            while j < n and data[j] in DIGITS:
                j += 1
            if j + 1 < n and data[j] == ord(".") and data[j + 1] in DIGITS:
                j += 1
                while j < n and data[j] in DIGITS:
                    j += 1
            tokens.append(Token(TokenKind.NUMBER, data[i:j].decode("ascii"), i, j))
            i = j
            continue

        if b in IDENT_START:
            j = i + 1
            while j < n and data[j] in IDENT_REST:
                j += 1
            text = data[i:j].decode("ascii")
            if text == "P" and j < n and data[j] == ord("("):
                tokens.append(Token(TokenKind.P_OPEN, "P(", i, j + 1))
                j += 1
            elif text == "E" and j < n and data[j] == ord("["):
                tokens.append(Token(TokenKind.E_OPEN, "E[", i, j + 1))
                j += 1
            elif text == "Omega":
                tokens.append(Token(TokenKind.OMEGA, text, i, j))
            else:
                tokens.append(Token(TokenKind.IDENT, text, i, j))
            i = j
            continue

        raise LexError(i, f"unrecognized byte {data[i:i + 1]!r}")
    return tokens
