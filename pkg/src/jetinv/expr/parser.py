"""Recursive-descent parser for the expression DSL.

Grammar::

    expr     := term (('+'|'-') term)*
    term     := factor (('*'|'/') factor)*
    factor   := base ('^' exponent)? | '-' factor
    exponent := integer | '(' '-'? (integer | rational) ')'
    base     := number | ident | '(' expr ')' | func '(' expr ')'
    func     := 'exp' | 'log' | 'sin' | 'cos' | 'sqrt'

``p/q`` written without spaces is a single rational literal, except right
after ``^`` where ``x^2/3`` reads as ``(x^2)/3``. A minus sign
directly in front of a number literal (not followed by ``^``) yields a
negative constant rather than a negation node.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .nodes import FUNCTIONS, Add, Const, Div, Expr, Func, Mul, Neg, Pow, Var


class ParseError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.message = message
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Token:
    kind: str  # NUM, RAT, ID, OP, END
    text: str
    line: int
    column: int


_TOKEN = re.compile(
    r"(?P<ws>[ \t\r\n]+)"
    r"|(?P<rat>\d+/\d+(?![\d.eE]))"
    r"|(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<id>[A-Za-z][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()])"
)
_BAD_NUMBER = re.compile(r"[\d.eE]")


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        chunk = m.group()
        end = m.end()
        if kind in ("num", "rat") and end < len(text) and (
            _BAD_NUMBER.match(text, end) or text[end].isalpha() or text[end] == "_"
        ):
            raise ParseError(f"malformed number {text[pos:end + 1]!r}", line, col)
        if kind == "rat" and int(chunk.split("/")[1]) == 0:
            raise ParseError(f"malformed number {chunk!r}: zero denominator", line, col)
        if kind == "ws":
            newlines = chunk.count("\n")
            if newlines:
                line += newlines
                line_start = pos + chunk.rfind("\n") + 1
        else:
            tokens.append(Token(kind.upper(), chunk, line, col))
        pos = end
    tokens.append(Token("END", "", line, len(text) - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def error(self, message: str, tok: Token | None = None):
        tok = tok or self.tok
        return ParseError(message, tok.line, tok.column)

    def take(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def accept(self, op: str) -> bool:
        if self.tok.kind == "OP" and self.tok.text == op:
            self.i += 1
            return True
        return False

    def expect(self, op: str):
        if not self.accept(op):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {op!r}, found {found!r}")

    def parse(self) -> Expr:
        e = self.expr()
        if self.tok.kind != "END":
            raise self.error(f"unexpected {self.tok.text!r}")
        return e

    def expr(self) -> Expr:
        terms = [self.term()]
        while True:
            if self.accept("+"):
                terms.append(self.term())
            elif self.accept("-"):
                terms.append(Neg(self.term()))
            else:
                break
        return terms[0] if len(terms) == 1 else Add(terms)

    def term(self) -> Expr:
        factors = [self.factor()]
        while True:
            if self.accept("*"):
                factors.append(self.factor())
            elif self.accept("/"):
                num = factors[0] if len(factors) == 1 else Mul(factors)
                factors = [Div(num, self.factor())]
            else:
                break
        return factors[0] if len(factors) == 1 else Mul(factors)

    def factor(self) -> Expr:
        if self.accept("-"):
            nxt, after = self.tok, self.tokens[self.i + 1]
            if nxt.kind in ("NUM", "RAT") and not (after.kind == "OP" and after.text == "^"):
                self.i += 1
                return Const(-self.number(nxt))
            return Neg(self.factor())
        base = self.base()
        if self.accept("^"):
            return Pow(base, self.exponent())
        return base

    def exponent(self) -> Fraction:
        tok = self.tok
        if tok.kind == "NUM":
            self.i += 1
            n = self.number(tok)
            if n.denominator != 1:
                raise self.error("exponent must be an integer", tok)
            return n
        if tok.kind == "RAT":
            # x^2/3 means (x^2)/3: split the literal back into int / int
            p, q = tok.text.split("/")
            width = len(p)
            self.tokens[self.i:self.i + 1] = [
                Token("NUM", p, tok.line, tok.column),
                Token("OP", "/", tok.line, tok.column + width),
                Token("NUM", q, tok.line, tok.column + width + 1),
            ]
            return self.exponent()
        self.expect("(")
        sign = -1 if self.accept("-") else 1
        tok = self.take()
        if tok.kind not in ("NUM", "RAT"):
            raise self.error("expected an integer or rational exponent", tok)
        n = self.number(tok)
        if tok.kind == "NUM" and n.denominator != 1:
            raise self.error("exponent must be an integer or p/q", tok)
        self.expect(")")
        return sign * n

    def number(self, tok: Token) -> Fraction:
        try:
            return Fraction(tok.text)
        except (ValueError, ZeroDivisionError):
            raise self.error(f"malformed number {tok.text!r}", tok) from None

    def base(self) -> Expr:
        tok = self.tok
        if tok.kind in ("NUM", "RAT"):
            self.i += 1
            return Const(self.number(tok))
        if tok.kind == "ID":
            self.i += 1
            if self.tok.kind == "OP" and self.tok.text == "(":
                if tok.text not in FUNCTIONS:
                    raise self.error(f"unknown function {tok.text!r}", tok)
                self.i += 1
                arg = self.expr()
                self.expect(")")
                return Func(tok.text, arg)
            if tok.text in FUNCTIONS:
                raise self.error(f"function {tok.text!r} needs an argument", tok)
            return Var(tok.text)
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        found = tok.text or "end of input"
        raise self.error(f"unexpected {found!r}")


def parse(text: str) -> Expr:
    """Parse DSL source into an expression tree."""
    return _Parser(text).parse()
