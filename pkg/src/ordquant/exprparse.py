"""Expression grammar for phase-space and operator polynomials.

Grammar (ASCII, UTF-8 input; no implicit multiplication):

    expr     := term (('+' | '-') term)*
    term     := factor ('*' factor)*
    factor   := base ('^' exponent)?
    base     := variable | constant | '(' expr ')' | '-' factor
    exponent := uint                  for variables and parentheses (max 64)
              | '-'? uint             for the constants hbar and sqh
    constant := 'i' | 'hbar' | 'sqh' | number
    number   := uint | uint '.' uint | uint '/' uint   (one token, no spaces)

Phase variables are q, p (aliases of q1, p1) and q2, p2, ...; operator
variables are Q, P, a, ad with the same optional mode index.  `i` is the
imaginary unit, `hbar` the quantum of action, and `sqh` stands for
sqrt(hbar/2) (so sqh^2 = hbar/2): rewriting canonical operators in ladder
operators produces half-integer powers of hbar, and `sqh` with integer
(possibly negative) exponents keeps every such polynomial printable and
re-parseable exactly.  Decimal literals become exact rationals (0.1 = 1/10).

Rendering is deterministic (terms in descending graded-lexicographic order)
and `parse(render(x)) == x` for both polynomial kinds.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import NamedTuple

from .opcore import Generator, OperatorPoly, make_word
from .phasespace import COORD_P, COORD_Q, PhasePoly
from .scalars import ExactScalar, HBAR, I, SQRT_HALF_HBAR

MAX_EXPONENT = 64


class ExprSyntaxError(ValueError):
    """Parse failure with a byte offset and the set of expected tokens."""

    def __init__(self, offset: int, expected: tuple[str, ...], message: str | None = None):
        self.offset = offset
        self.expected = tuple(expected)
        if message is None:
            message = f"syntax error at offset {offset}: expected {' or '.join(expected)}"
        super().__init__(message)


class ExprModeError(ExprSyntaxError):
    """A variable of the wrong family (phase vs operator) was used."""


# -- lexer --------------------------------------------------------------------


class Token(NamedTuple):
    kind: str  # ident | number | op | lparen | rparen | caret | end
    lexeme: str
    pos: int


_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_NUMBER_RE = re.compile(r"[0-9]+(?:\.[0-9]+|/[0-9]+)?")


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    n = len(text)
    while pos < n:
        ch = text[pos]
        if ch in " \t\r\n":
            pos += 1
            continue
        if ch.isalpha() or ch == "_":
            m = _IDENT_RE.match(text, pos)
            tokens.append(Token("ident", m.group(), pos))
            pos = m.end()
        elif ch.isdigit():
            m = _NUMBER_RE.match(text, pos)
            tokens.append(Token("number", m.group(), pos))
            pos = m.end()
        elif ch in "+-*":
            tokens.append(Token("op", ch, pos))
            pos += 1
        elif ch == "(":
            tokens.append(Token("lparen", ch, pos))
            pos += 1
        elif ch == ")":
            tokens.append(Token("rparen", ch, pos))
            pos += 1
        elif ch == "^":
            tokens.append(Token("caret", ch, pos))
            pos += 1
        else:
            raise ExprSyntaxError(
                pos, ("expression character",), f"unexpected character {ch!r} at offset {pos}"
            )
    tokens.append(Token("end", "", n))
    return tokens


# -- variable tables ------------------------------------------------------------

_PHASE_VAR_RE = re.compile(r"^(q|p)([0-9]*)$")
_OPERATOR_VAR_RE = re.compile(r"^(Q|P|a|ad)([0-9]*)$")
_CONSTANTS = {"i", "hbar", "sqh"}


def _mode_from_suffix(suffix: str, pos: int) -> int:
    if not suffix:
        return 0
    index = int(suffix)
    if index < 1:
        raise ExprSyntaxError(pos, ("mode index >= 1",), f"mode index must be >= 1 at offset {pos}")
    return index - 1


class _PhaseAlgebra:
    """Builds PhasePoly values during parsing."""

    name = "phase"

    def constant(self, value: ExactScalar) -> PhasePoly:
        return PhasePoly.constant(value)

    def variable(self, ident: str, pos: int) -> PhasePoly:
        m = _PHASE_VAR_RE.match(ident)
        if m:
            coord = COORD_Q if m.group(1) == "q" else COORD_P
            return PhasePoly.variable((_mode_from_suffix(m.group(2), pos), coord))
        if _OPERATOR_VAR_RE.match(ident):
            raise ExprModeError(
                pos, ("phase variable",),
                f"operator variable {ident!r} not allowed in a phase expression (offset {pos})",
            )
        raise ExprSyntaxError(
            pos, ("variable", "constant"), f"unknown identifier {ident!r} at offset {pos}"
        )


class _OperatorAlgebra:
    """Builds OperatorPoly values during parsing (order-preserving products)."""

    name = "operator"

    def constant(self, value: ExactScalar) -> OperatorPoly:
        return OperatorPoly.constant(value)

    def variable(self, ident: str, pos: int) -> OperatorPoly:
        m = _OPERATOR_VAR_RE.match(ident)
        if m:
            return OperatorPoly.generator(m.group(1), _mode_from_suffix(m.group(2), pos))
        if _PHASE_VAR_RE.match(ident):
            raise ExprModeError(
                pos, ("operator variable",),
                f"phase variable {ident!r} not allowed in an operator expression (offset {pos})",
            )
        raise ExprSyntaxError(
            pos, ("variable", "constant"), f"unknown identifier {ident!r} at offset {pos}"
        )


# -- parser --------------------------------------------------------------------


class _Parser:
    def __init__(self, text: str, algebra):
        self.tokens = tokenize(text)
        self.index = 0
        self.algebra = algebra

    def peek(self) -> Token:
        return self.tokens[self.index]

    def advance(self) -> Token:
        tok = self.tokens[self.index]
        self.index += 1
        return tok

    def expect(self, kind: str, expected: str) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            raise ExprSyntaxError(tok.pos, (expected,))
        return self.advance()

    def parse(self):
        value = self.parse_expr()
        tok = self.peek()
        if tok.kind != "end":
            raise ExprSyntaxError(tok.pos, ("'+'", "'-'", "'*'", "'^'", "end of input"))
        return value

    def parse_expr(self):
        value = self.parse_term()
        while True:
            tok = self.peek()
            if tok.kind == "op" and tok.lexeme in "+-":
                self.advance()
                rhs = self.parse_term()
                value = value + rhs if tok.lexeme == "+" else value - rhs
            else:
                return value

    def parse_term(self):
        value = self.parse_factor()[0]
        while True:
            tok = self.peek()
            if tok.kind == "op" and tok.lexeme == "*":
                self.advance()
                value = value * self.parse_factor()[0]
            else:
                return value

    def parse_factor(self):
        base, tag = self.parse_base()
        tok = self.peek()
        if tok.kind != "caret":
            return base, tag
        self.advance()
        sign = 1
        tok = self.peek()
        if tok.kind == "op" and tok.lexeme == "-":
            self.advance()
            sign = -1
        num = self.expect("number", "unsigned integer")
        if not num.lexeme.isdigit():
            raise ExprSyntaxError(num.pos, ("unsigned integer",))
        exponent = int(num.lexeme)
        if exponent > MAX_EXPONENT:
            raise ExprSyntaxError(
                num.pos, ("exponent <= 64",), f"exponent too large at offset {num.pos} (max {MAX_EXPONENT})"
            )
        if sign < 0:
            if tag not in ("hbar", "sqh"):
                raise ExprSyntaxError(
                    num.pos,
                    ("non-negative exponent",),
                    f"negative exponents are only valid for hbar and sqh (offset {num.pos})",
                )
            unit = HBAR if tag == "hbar" else SQRT_HALF_HBAR
            return self.algebra.constant(unit ** (-exponent)), None
        return base**exponent, None

    def parse_base(self):
        tok = self.peek()
        if tok.kind == "ident":
            self.advance()
            if tok.lexeme == "i":
                return self.algebra.constant(I), "i"
            if tok.lexeme == "hbar":
                return self.algebra.constant(HBAR), "hbar"
            if tok.lexeme == "sqh":
                return self.algebra.constant(SQRT_HALF_HBAR), "sqh"
            return self.algebra.variable(tok.lexeme, tok.pos), None
        if tok.kind == "number":
            self.advance()
            return self.algebra.constant(ExactScalar.rational(_number_value(tok))), None
        if tok.kind == "lparen":
            self.advance()
            value = self.parse_expr()
            self.expect("rparen", "')'")
            return value, None
        if tok.kind == "op" and tok.lexeme == "-":
            self.advance()
            value, _ = self.parse_factor()
            return -value, None
        raise ExprSyntaxError(tok.pos, ("variable", "constant", "'('", "'-'"))


def _number_value(tok: Token) -> Fraction:
    text = tok.lexeme
    if "/" in text:
        num, den = text.split("/")
        if int(den) == 0:
            raise ExprSyntaxError(tok.pos, ("nonzero denominator",))
        return Fraction(int(num), int(den))
    return Fraction(text)  # handles both integers and decimals, exactly


def parse_phase_expr(text: str) -> PhasePoly:
    """Parse a commutative phase-space polynomial over q/p variables."""
    return _Parser(text, _PhaseAlgebra()).parse()


def parse_operator_expr(text: str) -> OperatorPoly:
    """Parse a noncommutative operator polynomial over Q/P/a/ad variables."""
    return _Parser(text, _OperatorAlgebra()).parse()


def expression_family(text: str) -> str:
    """Classify an expression as 'phase', 'operator', or 'constant'.

    Raises ExprModeError when both families appear.
    """
    has_phase = has_operator = False
    for tok in tokenize(text):
        if tok.kind != "ident" or tok.lexeme in _CONSTANTS:
            continue
        if _OPERATOR_VAR_RE.match(tok.lexeme):
            has_operator = True
        elif _PHASE_VAR_RE.match(tok.lexeme):
            has_phase = True
        if has_phase and has_operator:
            raise ExprModeError(
                tok.pos, ("one variable family",),
                f"expression mixes phase and operator variables (offset {tok.pos})",
            )
    if has_operator:
        return "operator"
    if has_phase:
        return "phase"
    return "constant"


# -- renderer --------------------------------------------------------------------


def _fraction_str(value: Fraction) -> str:
    return str(value)


def _float_str(value: float) -> str:
    text = repr(float(value))
    if "e" in text or "E" in text or "inf" in text or "nan" in text:
        # exponent notation is outside the grammar; fall back to the exact
        # binary rational of the float
        frac = Fraction(value)
        return f"{frac.numerator}/{frac.denominator}" if frac.denominator != 1 else str(frac.numerator)
    return text


def _unit_str(grade: int) -> str | None:
    """Rendering of (hbar/2)^(grade/2) together with the rational rescale."""
    if grade == 0:
        return None
    if grade % 2 == 0:
        j = grade // 2
        return "hbar" if j == 1 else f"hbar^{j}"
    return "sqh" if grade == 1 else f"sqh^{grade}"


def _scalar_pieces(coeff: ExactScalar) -> list[tuple[int, str]]:
    """Render one graded scalar as (sign, body) pieces, grades ascending."""
    pieces: list[tuple[int, str]] = []
    for grade, re_part, im_part in coeff.term_items():
        if grade % 2 == 0:
            scale = Fraction(2) ** (grade // 2)
            re_part, im_part = re_part / scale, im_part / scale
        unit = _unit_str(grade)
        if re_part and im_part:
            im_body = "i" if abs(im_part) == 1 else f"{_fraction_str(abs(im_part))}*i"
            joiner = "+" if im_part > 0 else "-"
            body = f"({_fraction_str(re_part)} {joiner} {im_body})"
            sign = 1
        elif im_part:
            sign = 1 if im_part > 0 else -1
            mag = abs(im_part)
            body = "i" if mag == 1 else f"{_fraction_str(mag)}*i"
        else:
            sign = 1 if re_part > 0 else -1
            body = _fraction_str(abs(re_part))
        if unit is not None:
            body = unit if body == "1" else f"{body}*{unit}"
        pieces.append((sign, body))
    return pieces


def _coefficient_str(coeff) -> tuple[int, str]:
    """(sign, body) for a coefficient; body never starts with a sign."""
    if isinstance(coeff, ExactScalar):
        pieces = _scalar_pieces(coeff)
        if len(pieces) == 1:
            return pieces[0]
        joined = pieces[0][1] if pieces[0][0] > 0 else f"-{pieces[0][1]}"
        for sign, body in pieces[1:]:
            joined += f" + {body}" if sign > 0 else f" - {body}"
        return 1, f"({joined})"
    value = complex(coeff)
    if value.imag == 0:
        sign = 1 if value.real >= 0 else -1
        return sign, _float_str(abs(value.real))
    if value.real == 0:
        sign = 1 if value.imag > 0 else -1
        mag = abs(value.imag)
        return sign, "i" if mag == 1.0 else f"{_float_str(mag)}*i"
    joiner = "+" if value.imag > 0 else "-"
    mag = abs(value.imag)
    im_body = "i" if mag == 1.0 else f"{_float_str(mag)}*i"
    return 1, f"({_float_str(value.real)} {joiner} {im_body})"


def _join_terms(parts: list[tuple[int, str]]) -> str:
    if not parts:
        return "0"
    sign, body = parts[0]
    out = body if sign > 0 else f"-{body}"
    for sign, body in parts[1:]:
        out += f" + {body}" if sign > 0 else f" - {body}"
    return out


def _term_str(sign: int, coeff_body: str, word_body: str) -> tuple[int, str]:
    if not word_body:
        return sign, coeff_body
    if coeff_body == "1":
        return sign, word_body
    return sign, f"{coeff_body}*{word_body}"


def render_operator(poly: OperatorPoly) -> str:
    """Deterministic text form; degree descending, lexicographic within."""
    indexed = any(g.mode > 0 for word, _ in poly.terms() for g, _ in word)
    parts = []
    for word, coeff in poly.sorted_terms():
        factors = []
        for gen, exp in word:
            name = gen.kind if not indexed else f"{gen.kind}{gen.mode + 1}"
            factors.append(name if exp == 1 else f"{name}^{exp}")
        sign, body = _coefficient_str(coeff)
        parts.append(_term_str(sign, body, "*".join(factors)))
    return _join_terms(parts)


def _phase_sort_key(mono) -> tuple:
    letters = tuple((m, c) for (m, c), e in mono for _ in range(e))
    return (-sum(e for _, e in mono), letters)


def render_phase(poly: PhasePoly) -> str:
    """Deterministic text form; degree descending, lexicographic within."""
    indexed = any(var[0] > 0 for var in poly.variables())
    parts = []
    for mono, coeff in sorted(poly.terms(), key=lambda kv: _phase_sort_key(kv[0])):
        factors = []
        for (mode, coord), exp in mono:
            letter = "q" if coord == COORD_Q else "p"
            name = letter if not indexed else f"{letter}{mode + 1}"
            factors.append(name if exp == 1 else f"{name}^{exp}")
        sign, body = _coefficient_str(coeff)
        parts.append(_term_str(sign, body, "*".join(factors)))
    return _join_terms(parts)


def render(poly) -> str:
    if isinstance(poly, OperatorPoly):
        return render_operator(poly)
    if isinstance(poly, PhasePoly):
        return render_phase(poly)
    raise TypeError(f"cannot render {type(poly).__name__}")
