"""Independent brute-force re-implementations used to cross-check results.

Everything here walks the trees with its own recursion and its own
formula traversal; nothing is shared with the package's preprocessing
or metric code beyond the node and formula data types themselves.
"""

from __future__ import annotations

import re
from collections import Counter

from varmetrics.formula import And, Atom, Comparison, Expr, Not, Or, TRUE
from varmetrics.nodes import (
    BranchStatement,
    CaseLabel,
    CodeNode,
    CppBlock,
    Function,
    LoopStatement,
    SingleStatement,
    SourceFile,
    UnparsedCode,
)

OPENING = ("if", "ifdef", "ifndef")


def expr_names(expr: Expr) -> set[str]:
    if isinstance(expr, Atom):
        return {expr.name}
    if isinstance(expr, Comparison):
        return set(expr.names)
    if isinstance(expr, Not):
        return expr_names(expr.operand)
    if isinstance(expr, (And, Or)):
        return expr_names(expr.left) | expr_names(expr.right)
    return set()


def evaluate(expr: Expr, assignment: dict[str, bool]) -> bool:
    """Truth value under an assignment; only for comparison-free formulas."""
    if isinstance(expr, Atom):
        return assignment[expr.name]
    if isinstance(expr, Not):
        return not evaluate(expr.operand, assignment)
    if isinstance(expr, And):
        return evaluate(expr.left, assignment) and evaluate(expr.right, assignment)
    if isinstance(expr, Or):
        return evaluate(expr.left, assignment) or evaluate(expr.right, assignment)
    if expr == TRUE:
        return True
    return False


def is_unit(node: CodeNode) -> bool:
    return isinstance(node, (SingleStatement, BranchStatement, LoopStatement, CaseLabel))


def units_with_guards(node: CodeNode, guards: tuple[Expr, ...] = ()):
    """Every statement unit with the guard stack above it, own recursion."""
    for child in node.children:
        if is_unit(child):
            yield child, guards
        if isinstance(child, CppBlock):
            yield from units_with_guards(child, guards + (child.condition,))
        else:
            yield from units_with_guards(child, guards)


def blocks(node: CodeNode):
    for child in node.children:
        if isinstance(child, CppBlock):
            yield child
        yield from blocks(child)


def scattering(files: dict[str, SourceFile]):
    sd_vp: Counter[str] = Counter()
    sd_file: Counter[str] = Counter()
    for path in files:
        seen = set()
        for block in blocks(files[path]):
            if block.directive not in OPENING and block.directive != "elif":
                continue
            for name in expr_names(block.raw_condition):
                sd_vp[name] += 1
                seen.add(name)
        for name in seen:
            sd_file[name] += 1
    return dict(sd_vp), dict(sd_file)


def feature_size(files: dict[str, SourceFile]) -> dict[str, int]:
    size: Counter[str] = Counter()
    for tree in files.values():
        for _, guards in units_with_guards(tree):
            controlling = set()
            for g in guards:
                controlling |= expr_names(g)
            for name in controlling:
                size[name] += 1
    return dict(size)


_CALL_RE = re.compile(r"([A-Za-z_]\w*)\s*\(")
_KEYWORDS = {
    "if", "else", "for", "while", "do", "switch", "case", "default", "return",
    "goto", "break", "continue", "sizeof", "typedef", "struct", "union", "enum",
    "static", "extern", "const", "volatile", "register", "inline", "restrict",
    "signed", "unsigned", "void", "char", "short", "int", "long", "float",
    "double", "defined",
}


def _functions(node: CodeNode, guards: tuple[Expr, ...] = ()):
    for child in node.children:
        if isinstance(child, Function):
            yield child, guards
        if isinstance(child, CppBlock):
            yield from _functions(child, guards + (child.condition,))
        else:
            yield from _functions(child, guards)


def _texts(node: CodeNode, guards: tuple[Expr, ...] = ()):
    for child in node.children:
        if isinstance(child, (BranchStatement, LoopStatement, CaseLabel)) and child.header:
            yield child.header, guards
        if isinstance(child, UnparsedCode):
            yield child.text, guards
        if isinstance(child, CppBlock):
            yield from _texts(child, guards + (child.condition,))
        else:
            yield from _texts(child, guards)


def _conjoin(guards: tuple[Expr, ...]) -> Expr:
    result = None
    for g in guards:
        result = g if result is None else And(result, g)
    return TRUE if result is None else result


def call_graph(files: dict[str, SourceFile]):
    known = set()
    for tree in files.values():
        for fn, _ in _functions(tree):
            known.add(fn.name)
    callees: dict[str, list[tuple[str, Expr]]] = {}
    for path in files:
        for fn, _ in _functions(files[path]):
            entry = callees.setdefault(fn.name, [])
            for text, guards in _texts(fn):
                for match in _CALL_RE.finditer(text):
                    name = match.group(1)
                    if name in _KEYWORDS or name not in known:
                        continue
                    entry.append((name, _conjoin(guards)))
    callers: dict[str, list[tuple[str, Expr]]] = {}
    for caller, entries in callees.items():
        for callee, condition in entries:
            callers.setdefault(callee, []).append((caller, condition))
    return callees, callers


def feature_occurrences(fn: Function) -> int:
    """Sum of per-block feature counts over opening/elif blocks."""
    total = 0
    for block in blocks(fn):
        if block.directive in OPENING or block.directive == "elif":
            total += len(expr_names(block.raw_condition))
    return total


def block_features(fn: Function) -> set[str]:
    names: set[str] = set()
    for block in blocks(fn):
        if block.directive in OPENING or block.directive == "elif":
            names |= expr_names(block.raw_condition)
    return names
