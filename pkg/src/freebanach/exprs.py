"""Expression language naming elements of the tower.

Grammar (whitespace insensitive, '.' is group multiplication, '+' formal
addition, scalars are dyadic):

    expr   := sum
    sum    := prod (('+'|'-') scalar? prod)*
    prod   := factor ('.' factor)*
    factor := scalar? atom | 'inv(' expr ')' | '(' expr ')'
    scalar := integer ['/' power-of-two]
    atom   := 'x' | 'e'

Syntax errors carry the byte offset of the failure; a scalar with a
non-power-of-two denominator is a scalar-domain error.
"""

from __future__ import annotations

from dataclasses import dataclass

from .scalars import Dyadic, ScalarDomainError
from .terms import UNIT_ID


class ExprSyntaxError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class OutOfUniverseError(ValueError):
    def __init__(self, message: str, missing_stage: int):
        super().__init__(message)
        self.missing_stage = missing_stage


@dataclass(frozen=True)
class Atom:
    name: str  # "x" | "e"


@dataclass(frozen=True)
class Inv:
    inner: "Expr"


@dataclass(frozen=True)
class Prod:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Sum:
    terms: tuple[tuple[Dyadic, "Expr"], ...]


Expr = Atom | Inv | Prod | Sum


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, message: str):
        raise ExprSyntaxError(message, self.pos)

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def take(self, literal: str) -> bool:
        self.skip_ws()
        if self.text.startswith(literal, self.pos):
            self.pos += len(literal)
            return True
        return False

    def parse(self) -> Expr:
        e = self.sum()
        self.skip_ws()
        if self.pos != len(self.text):
            self.error("trailing input")
        return e

    def sum(self) -> Expr:
        first = self.prod()
        terms: list[tuple[Dyadic, Expr]] = []
        while True:
            c = self.peek()
            if c == "+":
                self.take("+")
                sign = 1
            elif c == "-":
                self.take("-")
                sign = -1
            else:
                break
            coeff = self.maybe_scalar()
            if coeff is None:
                coeff = Dyadic(1)
            if sign < 0:
                coeff = -coeff
            terms.append((coeff, self.prod()))
        if not terms:
            return first
        # a leading scalar-prefixed atom contributes its own coefficient
        if _is_scalar_atom(first):
            head = first.terms[0]
        else:
            head = (Dyadic(1), first)
        return Sum((head,) + tuple(terms))

    def prod(self) -> Expr:
        e = self.factor()
        while self.peek() == ".":
            self.take(".")
            e = Prod(e, self.factor())
        return e

    def factor(self) -> Expr:
        self.skip_ws()
        if self.take("inv("):
            inner = self.sum()
            if not self.take(")"):
                self.error("expected ')'")
            return Inv(inner)
        if self.take("("):
            inner = self.sum()
            if not self.take(")"):
                self.error("expected ')'")
            return inner
        coeff = self.maybe_scalar()
        if coeff is not None:
            atom = self.atom()
            return Sum(((coeff, atom),))
        return self.atom()

    def atom(self) -> Expr:
        self.skip_ws()
        if self.take("x"):
            return Atom("x")
        if self.take("e"):
            return Atom("e")
        self.error("expected atom 'x' or 'e'")

    def maybe_scalar(self) -> Dyadic | None:
        self.skip_ws()
        start = self.pos
        i = self.pos
        text = self.text
        if i < len(text) and text[i] == "-":
            i += 1
        digits = i
        while i < len(text) and text[i].isdigit():
            i += 1
        if i == digits:
            return None
        num = int(text[start:i])
        self.pos = i
        if self.take("/"):
            self.skip_ws()
            j = self.pos
            while j < len(text) and text[j].isdigit():
                j += 1
            if j == self.pos:
                self.error("expected denominator")
            den = int(text[self.pos : j])
            self.pos = j
            if den <= 0 or den & (den - 1):
                raise ScalarDomainError(
                    f"denominator {den} is not a power of two (offset {start})"
                )
            k = den.bit_length() - 1
            return Dyadic(num, k)
        return Dyadic(num)


def parse_expr(text: str) -> Expr:
    return _Parser(text).parse()


def render_expr(expr: Expr) -> str:
    """Concrete syntax that reparses to the same tree (for trees the grammar
    can produce)."""
    if isinstance(expr, Atom):
        return expr.name
    if isinstance(expr, Inv):
        return f"inv({render_expr(expr.inner)})"
    if isinstance(expr, Prod):
        left = render_expr(expr.left)
        right = render_expr(expr.right)
        if isinstance(expr.left, Sum) and not _is_scalar_atom(expr.left):
            left = f"({left})"
        if isinstance(expr.right, Prod) or (
            isinstance(expr.right, Sum) and not _is_scalar_atom(expr.right)
        ):
            right = f"({right})"
        return f"{left} . {right}"
    if isinstance(expr, Sum):
        if _is_scalar_atom(expr):
            coeff, inner = expr.terms[0]
            return f"{coeff} {render_expr(inner)}"
        parts = []
        for i, (coeff, inner) in enumerate(expr.terms):
            body = render_expr(inner)
            # parentheses are structurally transparent; bracketing products
            # in sum tails stops their leading scalar factors from being
            # read as the summand's coefficient
            if isinstance(inner, Sum) or (i > 0 and isinstance(inner, Prod)):
                body = f"({body})"
            if i == 0:
                if coeff == Dyadic(1):
                    parts.append(body)
                elif isinstance(inner, Atom):
                    parts.append(f"{coeff} {body}")
                else:
                    raise ValueError("tree not producible by the grammar")
            else:
                sign = "-" if coeff.num < 0 else "+"
                mag = abs(coeff)
                if mag == Dyadic(1):
                    parts.append(f"{sign} {body}")
                else:
                    parts.append(f"{sign} {mag} {body}")
        return " ".join(parts)
    raise TypeError(f"unknown expression {expr!r}")


def _is_scalar_atom(expr) -> bool:
    return (
        isinstance(expr, Sum)
        and len(expr.terms) == 1
        and isinstance(expr.terms[0][1], Atom)
    )


def eval_expr(expr: Expr, universe) -> int:
    """Evaluate to an element id; the result must be a member of the top
    built stage."""
    eid = _eval(expr, universe)
    top = universe.top
    if eid not in top.member_set:
        raise OutOfUniverseError(
            f"element {eid} is outside the built universe "
            f"(stages 0..{top.index}); it would first appear at stage "
            f"{top.index + 1} or later",
            missing_stage=top.index + 1,
        )
    return eid


def _eval(expr: Expr, universe) -> int:
    store = universe.store
    if isinstance(expr, Atom):
        return universe.x_id if expr.name == "x" else UNIT_ID
    if isinstance(expr, Inv):
        return store.intern(store.group_inv(_eval(expr.inner, universe)))
    if isinstance(expr, Prod):
        left = _eval(expr.left, universe)
        right = _eval(expr.right, universe)
        return store.intern(store.group_mul(left, right))
    if isinstance(expr, Sum):
        parts = [(coeff, _eval(inner, universe)) for coeff, inner in expr.terms]
        return store.intern(store.lin_combine(parts))
    raise TypeError(f"unknown expression {expr!r}")
