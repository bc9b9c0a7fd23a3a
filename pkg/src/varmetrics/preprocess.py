"""Whole-corpus passes that per-function metrics cannot compute alone.

Three tables are produced ahead of metric evaluation: scattering counts
(variation points and files per feature), statement counts per
controlling feature, and a name-based call graph with the presence
condition of every call site. Each pass is a map over files followed by
an order-independent merge, so neither thread count nor scheduling can
change the result.
"""

from __future__ import annotations

import concurrent.futures
import re
from collections import Counter
from dataclasses import dataclass, field

from .formula import Expr, conjoin, referenced_features, render
from .nodes import (
    BranchStatement,
    CaseLabel,
    CppBlock,
    Function,
    LoopStatement,
    SourceFile,
    UnparsedCode,
    iter_nodes,
    is_unit,
    presence_condition,
)

#: directives that contribute their own condition to scattering counts
_COUNTING_DIRECTIVES = frozenset({"if", "ifdef", "ifndef", "elif"})

_CALL = re.compile(r"([A-Za-z_]\w*)\s*\(")

_C_KEYWORDS = frozenset(
    """if else for while do switch case default return goto break continue
    sizeof typedef struct union enum static extern const volatile register
    inline restrict signed unsigned void char short int long float double
    defined""".split()
)


@dataclass(frozen=True)
class CallEdge:
    partner: str
    condition: Expr


@dataclass
class GlobalTables:
    sd_vp: dict[str, int] = field(default_factory=dict)
    sd_file: dict[str, int] = field(default_factory=dict)
    feature_size: dict[str, int] = field(default_factory=dict)
    callees: dict[str, tuple[CallEdge, ...]] = field(default_factory=dict)
    callers: dict[str, tuple[CallEdge, ...]] = field(default_factory=dict)


def _map_files(corpus_files: dict[str, SourceFile], fn, threads: int):
    trees = [corpus_files[path] for path in sorted(corpus_files)]
    if threads > 1:
        with concurrent.futures.ThreadPoolExecutor(threads) as pool:
            return list(pool.map(fn, trees))
    return [fn(tree) for tree in trees]


def _file_scattering(tree: SourceFile) -> tuple[Counter, set]:
    per_vp: Counter[str] = Counter()
    in_file: set[str] = set()
    for node, _ in iter_nodes(tree):
        if not isinstance(node, CppBlock) or node.directive not in _COUNTING_DIRECTIVES:
            continue
        for name in referenced_features(node.raw_condition):
            per_vp[name] += 1
            in_file.add(name)
    return per_vp, in_file


def build_scattering(corpus_files: dict[str, SourceFile], threads: int = 1):
    """Per-feature counts of variation points and of files using them.

    Every opening or ``#elif`` block counts once per feature of its own
    condition; an ``#else`` introduces no new reference.
    """
    sd_vp: Counter[str] = Counter()
    sd_file: Counter[str] = Counter()
    for per_vp, in_file in _map_files(corpus_files, _file_scattering, threads):
        sd_vp.update(per_vp)
        sd_file.update(in_file)
    return dict(sd_vp), dict(sd_file)


def _file_feature_size(tree: SourceFile) -> Counter:
    size: Counter[str] = Counter()
    for node, path in iter_nodes(tree):
        if not is_unit(node):
            continue
        for name in referenced_features(presence_condition(node, path)):
            size[name] += 1
    return size


def build_feature_size(corpus_files: dict[str, SourceFile], threads: int = 1):
    """Statements controlled, directly or not, by each feature."""
    size: Counter[str] = Counter()
    for partial in _map_files(corpus_files, _file_feature_size, threads):
        size.update(partial)
    return dict(size)


def function_names(corpus_files: dict[str, SourceFile]) -> set[str]:
    names = set()
    for tree in corpus_files.values():
        for node, _ in iter_nodes(tree):
            if isinstance(node, Function):
                names.add(node.name)
    return names


def _call_chunks(fn: Function):
    """(text, guards) pairs for every code chunk inside a function.

    Covers branch, loop and case headers plus all unparsed fragments,
    with the guards of CppBlocks between the function and the chunk.
    """
    for node, path in iter_nodes(fn):
        if node is fn:
            continue
        guards = tuple(p.condition for p in path if isinstance(p, CppBlock))
        if isinstance(node, (BranchStatement, LoopStatement, CaseLabel)):
            if node.header:
                yield node.header, guards
        elif isinstance(node, UnparsedCode):
            yield node.text, guards


def _file_calls(tree: SourceFile, known: set[str]) -> dict[str, list[CallEdge]]:
    calls: dict[str, list[CallEdge]] = {}
    for node, _ in iter_nodes(tree):
        if not isinstance(node, Function):
            continue
        edges = calls.setdefault(node.name, [])
        for text, guards in _call_chunks(node):
            for m in _CALL.finditer(text):
                name = m.group(1)
                if name in _C_KEYWORDS or name not in known:
                    continue
                edges.append(CallEdge(name, conjoin(guards)))
    return calls


def build_call_graph(corpus_files: dict[str, SourceFile], threads: int = 1):
    """Name-based call graph with the presence condition of each site.

    A call site is an identifier followed by ``(`` whose name matches a
    function defined somewhere in the corpus; keywords are ignored.
    Entries form a multiset: repeated calls stay repeated. Edge lists
    are sorted, so the merge order of files never shows.
    """
    known = function_names(corpus_files)
    callees: dict[str, list[CallEdge]] = {}
    for partial in _map_files(
        corpus_files, lambda tree: _file_calls(tree, known), threads
    ):
        for name, edges in partial.items():
            callees.setdefault(name, []).extend(edges)
    callers: dict[str, list[CallEdge]] = {}
    for caller, edges in callees.items():
        for edge in edges:
            callers.setdefault(edge.partner, []).append(CallEdge(caller, edge.condition))

    def freeze(table: dict[str, list[CallEdge]]):
        return {
            name: tuple(sorted(edges, key=lambda e: (e.partner, render(e.condition))))
            for name, edges in table.items()
        }

    return freeze(callees), freeze(callers)


def build_tables(corpus_files: dict[str, SourceFile], threads: int = 1) -> GlobalTables:
    """All preprocessing tables for a parsed corpus."""
    sd_vp, sd_file = build_scattering(corpus_files, threads)
    feature_size = build_feature_size(corpus_files, threads)
    callees, callers = build_call_graph(corpus_files, threads)
    return GlobalTables(
        sd_vp=sd_vp,
        sd_file=sd_file,
        feature_size=feature_size,
        callees=callees,
        callers=callers,
    )


def dump_tables(tables: GlobalTables) -> str:
    """Deterministic text rendering of the preprocessing tables."""
    lines = []
    for title, table in (
        ("sd_vp", tables.sd_vp),
        ("sd_file", tables.sd_file),
        ("feature_size", tables.feature_size),
    ):
        lines.append(title + ":")
        for name in sorted(table):
            lines.append(f"  {name} = {table[name]}")
    lines.append("calls:")
    for caller in sorted(tables.callees):
        for edge in tables.callees[caller]:
            lines.append(f"  {caller} -> {edge.partner} [{render(edge.condition)}]")
    return "\n".join(lines)
