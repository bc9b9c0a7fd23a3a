"""Propositional formulas over feature names, used as presence conditions.

Two surface syntaxes feed this module: conditions of ``#if`` directives
(lenient: anything that is not pure boolean structure collapses into an
opaque comparison that still remembers which names it mentions) and the
expressions of model files (strict: names, ``!``, ``&&``, ``||``, parens).
Formulas compare structurally; no satisfiability reasoning happens here.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import SchemaError


class Expr:
    """Base class for formula nodes. Instances are immutable and hashable."""

    __slots__ = ()

    def __and__(self, other: Expr) -> Expr:
        return And(self, other)

    def __or__(self, other: Expr) -> Expr:
        return Or(self, other)

    def __invert__(self) -> Expr:
        return Not(self)


@dataclass(frozen=True)
class TrueExpr(Expr):
    pass


@dataclass(frozen=True)
class FalseExpr(Expr):
    pass


@dataclass(frozen=True)
class Atom(Expr):
    name: str


@dataclass(frozen=True)
class Comparison(Expr):
    """An unparsed condition fragment plus the names it references."""

    text: str
    names: tuple[str, ...]


@dataclass(frozen=True)
class Not(Expr):
    operand: Expr


@dataclass(frozen=True)
class And(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Or(Expr):
    left: Expr
    right: Expr


TRUE = TrueExpr()
FALSE = FalseExpr()


def referenced_features(expr: Expr) -> tuple[str, ...]:
    """All feature names mentioned in *expr*, deduplicated, sorted."""
    names: set[str] = set()
    stack = [expr]
    while stack:
        node = stack.pop()
        if isinstance(node, Atom):
            names.add(node.name)
        elif isinstance(node, Comparison):
            names.update(node.names)
        elif isinstance(node, Not):
            stack.append(node.operand)
        elif isinstance(node, (And, Or)):
            stack.append(node.left)
            stack.append(node.right)
    return tuple(sorted(names))


def conjoin(guards) -> Expr:
    """Left fold a sequence of guards into one conjunction (empty -> TRUE)."""
    result: Expr | None = None
    for g in guards:
        result = g if result is None else And(result, g)
    return TRUE if result is None else result


def render(expr: Expr) -> str:
    """Deterministic text form; strict-syntax formulas round-trip."""
    if isinstance(expr, TrueExpr):
        return "1"
    if isinstance(expr, FalseExpr):
        return "0"
    if isinstance(expr, Atom):
        return expr.name
    if isinstance(expr, Comparison):
        return "{" + expr.text + "}"
    if isinstance(expr, Not):
        inner = render(expr.operand)
        if isinstance(expr.operand, (Atom, Not, TrueExpr, FalseExpr)):
            return "!" + inner
        return "!(" + inner + ")" if not inner.startswith("(") else "!" + inner
    if isinstance(expr, And):
        return f"({render(expr.left)} && {render(expr.right)})"
    if isinstance(expr, Or):
        return f"({render(expr.left)} || {render(expr.right)})"
    raise TypeError(f"not a formula node: {expr!r}")


_TOKEN = re.compile(
    r"[A-Za-z_]\w*"
    r"|0[xX][0-9a-fA-F]+\w*|\d[\w.]*"
    r"|==|!=|<=|>=|<<|>>|&&|\|\||->"
    r"|\S"
)

_IDENT = re.compile(r"[A-Za-z_]\w*\Z")


def _tokens(text: str) -> list[str]:
    return _TOKEN.findall(text)


def _split_top(toks: list[str], i: int, j: int, op: str) -> list[tuple[int, int]]:
    """Split toks[i:j] at top-level occurrences of *op* (paren aware)."""
    parts = []
    depth = 0
    start = i
    for k in range(i, j):
        t = toks[k]
        if t == "(":
            depth += 1
        elif t == ")":
            depth -= 1
        elif t == op and depth == 0:
            parts.append((start, k))
            start = k + 1
    parts.append((start, j))
    return parts


def _matching_paren(toks: list[str], i: int, j: int) -> int:
    depth = 0
    for k in range(i, j):
        if toks[k] == "(":
            depth += 1
        elif toks[k] == ")":
            depth -= 1
            if depth == 0:
                return k
    return -1


def _number_value(tok: str) -> int | None:
    body = tok.rstrip("uUlL")
    try:
        return int(body, 0)
    except ValueError:
        return None


def parse_condition(text: str) -> Expr:
    """Parse a ``#if`` condition.

    Boolean structure (``&&``, ``||``, ``!``, parentheses, ``defined``)
    is represented directly; any other subterm becomes a Comparison atom
    that keeps the identifiers it mentions. Total: never raises.
    """
    toks = _tokens(text)
    if not toks:
        return TRUE
    return _cond_or(toks, 0, len(toks))


def _cond_or(toks: list[str], i: int, j: int) -> Expr:
    parts = _split_top(toks, i, j, "||")
    if len(parts) == 1:
        return _cond_and(toks, i, j)
    exprs = [_cond_and(toks, a, b) for a, b in parts]
    result = exprs[0]
    for e in exprs[1:]:
        result = Or(result, e)
    return result


def _cond_and(toks: list[str], i: int, j: int) -> Expr:
    parts = _split_top(toks, i, j, "&&")
    if len(parts) == 1:
        return _cond_term(toks, i, j)
    exprs = [_cond_term(toks, a, b) for a, b in parts]
    result = exprs[0]
    for e in exprs[1:]:
        result = And(result, e)
    return result


def _cond_term(toks: list[str], i: int, j: int) -> Expr:
    pure = _pure_term(toks, i, j)
    if pure is not None:
        return pure
    text = " ".join(toks[i:j])
    names = sorted({t for t in toks[i:j] if _IDENT.match(t) and t != "defined"})
    return Comparison(text, tuple(names))


def _pure_term(toks: list[str], i: int, j: int):
    """toks[i:j] as pure boolean structure, or None if it is not one."""
    if i >= j:
        return TRUE
    if toks[i] == "!":
        sub = _pure_term(toks, i + 1, j)
        return None if sub is None else Not(sub)
    if toks[i] == "(" and _matching_paren(toks, i, j) == j - 1:
        return _cond_or(toks, i + 1, j - 1)
    if j - i == 1:
        tok = toks[i]
        if tok == "defined":
            return None
        if _IDENT.match(tok):
            return Atom(tok)
        value = _number_value(tok)
        if value is not None:
            return FALSE if value == 0 else TRUE
        return None
    if toks[i] == "defined":
        if j - i == 2 and _IDENT.match(toks[i + 1]):
            return Atom(toks[i + 1])
        if (
            j - i == 4
            and toks[i + 1] == "("
            and _IDENT.match(toks[i + 2])
            and toks[i + 3] == ")"
        ):
            return Atom(toks[i + 2])
    return None


def parse_constraint(text: str, where: str = "") -> Expr:
    """Parse a strict model expression: names, ``!``, ``&&``, ``||``, parens.

    Raises SchemaError (mentioning *where*) on anything else.
    """
    toks = _tokens(text)
    prefix = f"{where}: " if where else ""
    if not toks:
        raise SchemaError(prefix + "empty expression")
    expr, pos = _strict_or(toks, 0, prefix)
    if pos != len(toks):
        raise SchemaError(prefix + f"unexpected token {toks[pos]!r}")
    return expr


def _strict_or(toks, pos, prefix):
    expr, pos = _strict_and(toks, pos, prefix)
    while pos < len(toks) and toks[pos] == "||":
        right, pos = _strict_and(toks, pos + 1, prefix)
        expr = Or(expr, right)
    return expr, pos


def _strict_and(toks, pos, prefix):
    expr, pos = _strict_unary(toks, pos, prefix)
    while pos < len(toks) and toks[pos] == "&&":
        right, pos = _strict_unary(toks, pos + 1, prefix)
        expr = And(expr, right)
    return expr, pos


def _strict_unary(toks, pos, prefix):
    if pos >= len(toks):
        raise SchemaError(prefix + "expression ends unexpectedly")
    tok = toks[pos]
    if tok == "!":
        operand, pos = _strict_unary(toks, pos + 1, prefix)
        return Not(operand), pos
    if tok == "(":
        expr, pos = _strict_or(toks, pos + 1, prefix)
        if pos >= len(toks) or toks[pos] != ")":
            raise SchemaError(prefix + "missing ')'")
        return expr, pos + 1
    if _IDENT.match(tok):
        return Atom(tok), pos + 1
    raise SchemaError(prefix + f"unexpected token {tok!r}")
