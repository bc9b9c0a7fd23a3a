"""The common code tree shared by all metrics.

One node hierarchy holds both language structure (functions, branches,
loops, statements) and conditional-compilation structure (CppBlock), so
a block can sit at any nesting position, including inside a single
statement via its code fragments. Trees are immutable once built.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

from .formula import TRUE, Expr, conjoin, render

BRANCH_KINDS = frozenset({"if", "else-if", "else", "switch"})
LOOP_KINDS = frozenset({"while", "do-while", "for"})
DIRECTIVES = frozenset({"if", "ifdef", "ifndef", "elif", "else"})
#: directives that introduce their own condition (an ``#else`` does not)
CONDITION_DIRECTIVES = frozenset({"if", "ifdef", "ifndef", "elif"})


@dataclass(frozen=True, kw_only=True)
class CodeNode:
    start_line: int
    end_line: int
    children: tuple[CodeNode, ...] = ()


@dataclass(frozen=True, kw_only=True)
class SourceFile(CodeNode):
    path: str


@dataclass(frozen=True, kw_only=True)
class Function(CodeNode):
    name: str
    file: str
    header: str = ""


@dataclass(frozen=True, kw_only=True)
class BranchStatement(CodeNode):
    branch_kind: str
    header: str = ""


@dataclass(frozen=True, kw_only=True)
class LoopStatement(CodeNode):
    loop_kind: str
    header: str = ""


@dataclass(frozen=True, kw_only=True)
class CaseLabel(CodeNode):
    header: str = ""


@dataclass(frozen=True, kw_only=True)
class SingleStatement(CodeNode):
    """One statement; children are its code fragments (text or CppBlock)."""

    @property
    def code_fragments(self) -> tuple[CodeNode, ...]:
        return self.children


@dataclass(frozen=True, kw_only=True)
class CppBlock(CodeNode):
    directive: str
    condition: Expr = TRUE       # effective guard, else/elif already resolved
    raw_condition: Expr = TRUE   # the directive's own expression (else: TRUE)
    group_id: int = 0
    sibling_index: int = 0


@dataclass(frozen=True, kw_only=True)
class UnparsedCode(CodeNode):
    text: str


#: node kinds that count as one statement unit
_UNIT_TYPES = (SingleStatement, BranchStatement, LoopStatement, CaseLabel)


def is_unit(node: CodeNode) -> bool:
    return isinstance(node, _UNIT_TYPES)


def iter_nodes(root: CodeNode) -> Iterator[tuple[CodeNode, tuple[CodeNode, ...]]]:
    """Depth-first pre-order walk yielding (node, ancestors-from-root).

    The root itself is yielded with an empty ancestry.
    """

    def walk(node: CodeNode, path: tuple[CodeNode, ...]):
        yield node, path
        child_path = path + (node,)
        for child in node.children:
            yield from walk(child, child_path)

    yield from walk(root, ())


def presence_condition(node: CodeNode, path: Sequence[CodeNode]) -> Expr:
    """Conjunction of effective guards of CppBlocks enclosing *node*.

    *path* is the ancestry from the source file down to the node's
    parent, outermost first; the node's own guard (if it is a block)
    is not included. Nodes under no block get TRUE.
    """
    return conjoin(p.condition for p in path if isinstance(p, CppBlock))


def find_path(root: CodeNode, target: CodeNode) -> tuple[CodeNode, ...] | None:
    """Ancestry of *target* inside *root* (root first), or None."""
    for node, path in iter_nodes(root):
        if node is target:
            return path
    return None


def count_statements(
    subtree: CodeNode,
    condition_filter: Callable[[Expr], bool] | None = None,
) -> int:
    """Number of statement units in *subtree*.

    Each SingleStatement, Branch/Loop header and case label counts one;
    blocks and unparsed text count nothing. With a filter, a unit counts
    only if its presence condition relative to *subtree* passes.
    """
    count = 0
    for node, path in iter_nodes(subtree):
        if not is_unit(node):
            continue
        if condition_filter is not None and not condition_filter(
            presence_condition(node, path)
        ):
            continue
        count += 1
    return count


def dump(node: CodeNode, indent: int = 0) -> str:
    """Deterministic text rendering of a tree, one node per line."""
    pad = "  " * indent
    rng = f"[{node.start_line}-{node.end_line}]"
    if isinstance(node, SourceFile):
        head = f"SourceFile{rng} path={node.path}"
    elif isinstance(node, Function):
        head = f"Function{rng} name={node.name}"
    elif isinstance(node, BranchStatement):
        head = f"BranchStatement{rng} {node.branch_kind}"
    elif isinstance(node, LoopStatement):
        head = f"LoopStatement{rng} {node.loop_kind}"
    elif isinstance(node, CaseLabel):
        head = f"CaseLabel{rng} '{node.header}'"
    elif isinstance(node, SingleStatement):
        head = f"SingleStatement{rng}"
    elif isinstance(node, CppBlock):
        head = (
            f"CppBlock{rng} {node.directive} group={node.group_id}"
            f" idx={node.sibling_index} cond={render(node.condition)}"
            f" raw={render(node.raw_condition)}"
        )
    elif isinstance(node, UnparsedCode):
        head = f"UnparsedCode{rng} '{node.text}'"
    else:
        head = f"{type(node).__name__}{rng}"
    lines = [pad + head]
    for child in node.children:
        lines.append(dump(child, indent + 1))
    return "\n".join(lines)
