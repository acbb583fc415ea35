"""Parser for the parenthesized prefix formula grammar.

Grammar:
    f := (exists VAR f) | (forall VAR f) | (and f f+) | (or f f+)
       | (implies f f) | (not f) | (= t t) | (REL t+)
    t := VAR | LABEL | NAT

A bare symbol is a label constant when it belongs to the signature's
vocabulary, otherwise a variable.  All variables are object-sorted, which
is the only sort the textual dialect needs.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .logic import (
    And,
    Atom,
    Const,
    Eq,
    Exists,
    Forall,
    Formula,
    Implies,
    Not,
    Or,
    Signature,
    Sort,
    Term,
    Var,
)

VAR_RE = re.compile(r"[a-z][a-zA-Z0-9_]*\Z")
NAT_RE = re.compile(r"[0-9]+\Z")
_TOKEN_RE = re.compile(r"\(|\)|[^\s()]+")


class ParseError(Exception):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class _Token:
    text: str
    line: int
    column: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    for lineno, line in enumerate(text.splitlines() or [""], start=1):
        for m in _TOKEN_RE.finditer(line):
            tokens.append(_Token(m.group(), lineno, m.start() + 1))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token], sig: Signature, text: str):
        self.tokens = tokens
        self.pos = 0
        self.sig = sig
        end = text.count("\n") + 1
        self.eof = _Token("", end, len(text.splitlines()[-1]) + 1 if text else 1)

    def peek(self) -> _Token:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else self.eof

    def next(self) -> _Token:
        tok = self.peek()
        if tok.text == "":
            raise ParseError("unexpected end of input", tok.line, tok.column)
        self.pos += 1
        return tok

    def expect(self, text: str) -> _Token:
        tok = self.next()
        if tok.text != text:
            raise ParseError(f"expected {text!r}, got {tok.text!r}", tok.line, tok.column)
        return tok

    def term(self, bound: dict[str, Var]) -> Term:
        tok = self.next()
        if tok.text in "()":
            raise ParseError(f"expected a term, got {tok.text!r}", tok.line, tok.column)
        if NAT_RE.match(tok.text):
            return Const(int(tok.text), Sort.NUMBER)
        if tok.text in self.sig.label_constants:
            return Const(tok.text, Sort.LABEL)
        if tok.text in bound:
            return bound[tok.text]
        if VAR_RE.match(tok.text):
            return Var(tok.text, Sort.OBJECT)
        raise ParseError(
            f"unknown symbol {tok.text!r} (not a variable, label, or literal)",
            tok.line,
            tok.column,
        )

    def formula(self, bound: dict[str, Var]) -> Formula:
        self.expect("(")
        head = self.next()
        if head.text in ("exists", "forall"):
            name_tok = self.next()
            if not VAR_RE.match(name_tok.text) or name_tok.text in self.sig.label_constants:
                raise ParseError(
                    f"invalid variable name {name_tok.text!r}",
                    name_tok.line,
                    name_tok.column,
                )
            var = Var(name_tok.text, Sort.OBJECT)
            body = self.formula({**bound, var.name: var})
            self.expect(")")
            return Exists(var, body) if head.text == "exists" else Forall(var, body)
        if head.text == "not":
            body = self.formula(bound)
            self.expect(")")
            return Not(body)
        if head.text == "implies":
            lhs = self.formula(bound)
            rhs = self.formula(bound)
            self.expect(")")
            return Implies(lhs, rhs)
        if head.text in ("and", "or"):
            parts = [self.formula(bound), self.formula(bound)]
            while self.peek().text == "(":
                parts.append(self.formula(bound))
            self.expect(")")
            return And(tuple(parts)) if head.text == "and" else Or(tuple(parts))
        if head.text == "=":
            left = self.term(bound)
            right = self.term(bound)
            self.expect(")")
            return Eq(left, right)
        if head.text in self.sig.relations:
            args = [self.term(bound)]
            while self.peek().text not in (")", ""):
                args.append(self.term(bound))
            self.expect(")")
            return Atom(head.text, tuple(args))
        raise ParseError(f"unknown relation or operator {head.text!r}", head.line, head.column)


def parse_formula(text: str, sig: Signature) -> Formula:
    """Parse one formula; raises ParseError with line/column on bad input."""
    tokens = _tokenize(text)
    parser = _Parser(tokens, sig, text)
    f = parser.formula({})
    trailing = parser.peek()
    if trailing.text != "":
        raise ParseError(
            f"trailing input {trailing.text!r}", trailing.line, trailing.column
        )
    return f
