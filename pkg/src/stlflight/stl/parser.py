"""Text syntax for mission specifications.

Grammar (documented in the README), lowest to highest precedence:

    disj  := conj ('|' conj)*
    conj  := until ('&' until)*
    until := unary ('U' '[' a ',' b ']' unary)?
    unary := '!' unary | 'G' '[' a ',' b ']' unary | 'F' '[' a ',' b ']' unary | atom
    atom  := '(' disj ')' | predicate

Predicates:

    <affine> >= <number>          e.g.  uav1.p.z >= 1.0
    <affine> <= <number>          e.g.  uav1.v.x - uav2.v.x <= 0.5
    <ref> in <Region>             e.g.  uav1.p in Goal
    dist_inf(<ref>, <ref>) >= c   e.g.  dist_inf(uav1.p, uav2.p) >= 0.2

An <affine> is a signed sum of optionally scaled scalar channel references
and constants. A <ref> in `in`/`dist_inf` names a 3-D point whose scalar
channels are <ref>.x, <ref>.y, <ref>.z. Regions are axis-aligned boxes
declared by the mission file.
"""

from __future__ import annotations

import re

from .ast import (
    AXES,
    And,
    Always,
    Box,
    Eventually,
    Formula,
    Not,
    Or,
    Predicate,
    Until,
    in_box,
    min_separation,
)


class SpecSyntaxError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.col = col


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>\d+(\.\d*)?([eE][+-]?\d+)?|\.\d+([eE][+-]?\d+)?)
  | (?P<ref>[A-Za-z_][A-Za-z0-9_]*(\.[A-Za-z_][A-Za-z0-9_]*)*)
  | (?P<op>>=|<=|[()\[\],&|!*+-])
    """,
    re.VERBOSE,
)


class _Token:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind, text, line, col):
        self.kind = kind
        self.text = text
        self.line = line
        self.col = col


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise SpecSyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        chunk = m.group()
        if kind != "ws":
            tokens.append(_Token(kind, chunk, line, col))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            col = len(chunk) - chunk.rfind("\n")
        else:
            col += len(chunk)
        pos = m.end()
    tokens.append(_Token("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens, regions, channels):
        self.tokens = tokens
        self.i = 0
        self.regions = regions or {}
        self.channels = channels  # None means "accept any reference"

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def next(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message, tok=None):
        tok = tok or self.peek()
        raise SpecSyntaxError(message, tok.line, tok.col)

    def expect(self, text):
        tok = self.next()
        if tok.text != text:
            self.error(f"expected {text!r}, found {tok.text!r}", tok)
        return tok

    # -- expressions ------------------------------------------------------

    def parse(self) -> Formula:
        f = self.disj()
        if self.peek().kind != "eof":
            self.error(f"trailing input {self.peek().text!r}")
        return f

    def disj(self) -> Formula:
        parts = [self.conj()]
        while self.peek().text == "|":
            self.next()
            parts.append(self.conj())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def conj(self) -> Formula:
        parts = [self.until()]
        while self.peek().text == "&":
            self.next()
            parts.append(self.until())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def until(self) -> Formula:
        left = self.unary()
        tok = self.peek()
        if tok.kind == "ref" and tok.text == "U" and self._next_is_interval():
            self.next()
            interval = self.interval()
            right = self.unary()
            return Until(interval, left, right)
        return left

    def _next_is_interval(self) -> bool:
        return self.tokens[self.i + 1].text == "["

    def unary(self) -> Formula:
        tok = self.peek()
        if tok.text == "!":
            self.next()
            return Not(self.unary())
        if tok.kind == "ref" and tok.text in ("G", "F") and self._next_is_interval():
            self.next()
            interval = self.interval()
            child = self.unary()
            return Always(interval, child) if tok.text == "G" else Eventually(interval, child)
        return self.atom()

    def interval(self) -> tuple[float, float]:
        self.expect("[")
        a = self.number()
        self.expect(",")
        b = self.number()
        tok = self.expect("]")
        if a > b:
            self.error(f"malformed interval [{a}, {b}]: start exceeds end", tok)
        return (a, b)

    def number(self) -> float:
        sign = 1.0
        if self.peek().text == "-":
            self.next()
            sign = -1.0
        elif self.peek().text == "+":
            self.next()
        tok = self.next()
        if tok.kind != "num":
            self.error(f"expected a number, found {tok.text!r}", tok)
        return sign * float(tok.text)

    def atom(self) -> Formula:
        tok = self.peek()
        if tok.text == "(":
            # either a parenthesized formula or the dist_inf argument list;
            # dist_inf is handled below, so this is a grouped formula
            self.next()
            f = self.disj()
            self.expect(")")
            return f
        if tok.kind == "ref" and tok.text == "dist_inf":
            return self.dist_pred()
        if tok.kind in ("ref", "num") or tok.text in ("-", "+"):
            return self.affine_or_in()
        self.error(f"expected a predicate or '(', found {tok.text!r}", tok)

    # -- predicates -------------------------------------------------------

    def dist_pred(self) -> Formula:
        self.next()  # dist_inf
        self.expect("(")
        ref_a = self.vector_ref()
        self.expect(",")
        ref_b = self.vector_ref()
        self.expect(")")
        self.expect(">=")
        margin = self.number()
        return min_separation(ref_a, ref_b, margin)

    def vector_ref(self) -> str:
        tok = self.next()
        if tok.kind != "ref":
            self.error(f"expected a point reference, found {tok.text!r}", tok)
        self._check_vector(tok)
        return tok.text

    def _check_vector(self, tok):
        if self.channels is not None:
            missing = [a for a in AXES if f"{tok.text}.{a}" not in self.channels]
            if missing:
                self.error(
                    f"undeclared point reference {tok.text!r} "
                    f"(missing channels {', '.join(tok.text + '.' + a for a in missing)})",
                    tok,
                )

    def affine_or_in(self) -> Formula:
        start = self.i
        tok = self.peek()
        if tok.kind == "ref":
            nxt = self.tokens[self.i + 1]
            if nxt.kind == "ref" and nxt.text == "in":
                self._check_vector(tok)
                self.next()
                self.next()
                region_tok = self.next()
                if region_tok.kind != "ref":
                    self.error("expected a region name after 'in'", region_tok)
                box = self.regions.get(region_tok.text)
                if box is None:
                    self.error(
                        f"undeclared region {region_tok.text!r}", region_tok
                    )
                return in_box(tok.text, box, label=f"{tok.text} in {region_tok.text}")
        terms, const = self.affine()
        op = self.next()
        if op.text not in (">=", "<="):
            self.error(f"expected '>=' or '<=', found {op.text!r}", op)
        rhs = self.number()
        if not terms:
            self.error("predicate has no channel term", self.tokens[start])
        if op.text == ">=":
            return Predicate(terms=tuple(terms.items()), offset=const - rhs)
        negated = {c: -w for c, w in terms.items()}
        return Predicate(terms=tuple(negated.items()), offset=rhs - const)

    def affine(self):
        terms: dict[str, float] = {}
        const = 0.0
        sign = 1.0
        first = True
        while True:
            tok = self.peek()
            if tok.text in ("+", "-"):
                self.next()
                sign = 1.0 if tok.text == "+" else -1.0
            elif not first:
                break
            first = False
            coeff, chan = self.term()
            if chan is None:
                const += sign * coeff
            else:
                terms[chan] = terms.get(chan, 0.0) + sign * coeff
            sign = 1.0
            if self.peek().text not in ("+", "-"):
                break
        return terms, const

    def term(self):
        tok = self.next()
        if tok.kind == "num":
            value = float(tok.text)
            if self.peek().text == "*":
                self.next()
                chan_tok = self.next()
                if chan_tok.kind != "ref":
                    self.error("expected a channel after '*'", chan_tok)
                self._check_channel(chan_tok)
                return value, chan_tok.text
            return value, None
        if tok.kind == "ref":
            self._check_channel(tok)
            return 1.0, tok.text
        self.error(f"expected a channel or number, found {tok.text!r}", tok)

    def _check_channel(self, tok):
        if self.channels is not None and tok.text not in self.channels:
            self.error(f"undeclared signal {tok.text!r}", tok)


def parse_spec(
    text: str,
    regions: dict[str, Box] | None = None,
    channels: set[str] | None = None,
) -> Formula:
    """Parse specification text into a formula tree.

    `regions` maps region names usable with `in` to boxes. When `channels`
    is given, every scalar/point reference is validated against it and
    unknown names raise `SpecSyntaxError`; pass None to accept any name.
    """
    tokens = _tokenize(text)
    return _Parser(tokens, regions, channels).parse()
