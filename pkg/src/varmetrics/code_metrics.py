"""Per-function metric evaluators.

Every evaluator is a pure function of the function's subtree, the
preprocessing tables and (for the weighted ones) a weight function, so
they can run on any number of threads. Features are always iterated in
sorted order to keep weighted sums bit-stable.
"""

from __future__ import annotations

from dataclasses import dataclass

from .formula import TRUE, Expr, referenced_features
from .models import BuildModel, file_presence
from .nodes import (
    BranchStatement,
    CaseLabel,
    CppBlock,
    Function,
    LoopStatement,
    iter_nodes,
    is_unit,
    presence_condition,
)
from .preprocess import GlobalTables
from .weights import WeightFunction

#: branch kinds that add a path of their own (plain else and switch do not)
_DECISION_BRANCH_KINDS = frozenset({"if", "else-if"})
#: directives that open a variation point (an else adds no new path)
_DECISION_DIRECTIVES = frozenset({"if", "ifdef", "ifndef", "elif"})


@dataclass(frozen=True)
class FunctionInfo:
    """A function plus the context the metrics need about it."""

    file: str
    node: Function
    presence: Expr = TRUE  # guards of blocks enclosing the function


def _weighted(names: tuple[str, ...], weight: WeightFunction) -> float:
    return sum(weight(name) for name in names)


def _decision_blocks(info: FunctionInfo):
    for node, _ in iter_nodes(info.node):
        if isinstance(node, CppBlock) and node.directive in _DECISION_DIRECTIVES:
            yield node


def mccabe(info: FunctionInfo, mode: str = "code", weight: WeightFunction | None = None):
    """Cyclomatic complexity over code branches, variation points or both.

    With a weight, each variation point contributes the summed weight of
    the features in its own condition instead of 1; the base path keeps
    its single 1.
    """
    if mode not in ("code", "vp", "combined"):
        raise ValueError(f"unknown mccabe mode {mode!r}")
    code = 1
    vp: float = 1
    for node, _ in iter_nodes(info.node):
        if isinstance(node, BranchStatement) and node.branch_kind in _DECISION_BRANCH_KINDS:
            code += 1
        elif isinstance(node, (LoopStatement, CaseLabel)):
            code += 1
        elif isinstance(node, CppBlock) and node.directive in _DECISION_DIRECTIVES:
            if weight is None:
                vp += 1
            else:
                vp += _weighted(referenced_features(node.raw_condition), weight)
    if mode == "code":
        return code
    if mode == "vp":
        return vp
    return code + vp - 1


def nesting_depth(info: FunctionInfo, scope: str = "code", agg: str = "max"):
    """Maximum or average nesting level of statement units.

    A unit's level counts its enclosing branch and loop nodes (``code``),
    enclosing conditional blocks (``vp``) or both (``combined``), inside
    the function only. A function without units measures 0.
    """
    if scope not in ("code", "vp", "combined"):
        raise ValueError(f"unknown nesting scope {scope!r}")
    if agg not in ("max", "avg"):
        raise ValueError(f"unknown nesting aggregation {agg!r}")
    depths = []
    for node, path in iter_nodes(info.node):
        if node is info.node or not is_unit(node):
            continue
        code_depth = sum(
            1 for p in path if isinstance(p, (BranchStatement, LoopStatement))
        )
        vp_depth = sum(1 for p in path if isinstance(p, CppBlock))
        depth = {
            "code": code_depth,
            "vp": vp_depth,
            "combined": code_depth + vp_depth,
        }[scope]
        depths.append(depth)
    if not depths:
        return 0
    if agg == "max":
        return max(depths)
    return sum(depths) / len(depths)


def fan(
    info: FunctionInfo,
    tables: GlobalTables,
    direction: str = "out",
    mode: str = "classical",
    weight: WeightFunction | None = None,
):
    """Call-graph connections of the function.

    ``classical`` counts distinct partners, ``conditional`` counts call
    sites whose presence condition is not trivially true, ``weighted``
    sums the weights of the features controlling those sites.
    """
    if direction not in ("in", "out"):
        raise ValueError(f"unknown fan direction {direction!r}")
    if mode not in ("classical", "conditional", "weighted"):
        raise ValueError(f"unknown fan mode {mode!r}")
    table = tables.callees if direction == "out" else tables.callers
    edges = table.get(info.node.name, ())
    if mode == "classical":
        return len({e.partner for e in edges})
    conditional = [e for e in edges if e.condition != TRUE]
    if mode == "conditional":
        return len(conditional)
    if weight is None:
        raise ValueError("weighted fan needs a weight function")
    return sum(_weighted(referenced_features(e.condition), weight) for e in conditional)


def loc_family(info: FunctionInfo, kind: str = "LoC"):
    """Statement counts: all units, guarded units, or their ratio."""
    if kind not in ("LoC", "LoF", "PLoF"):
        raise ValueError(f"unknown loc kind {kind!r}")
    total = 0
    guarded = 0
    for node, path in iter_nodes(info.node):
        if node is info.node or not is_unit(node):
            continue
        total += 1
        if presence_condition(node, path) != TRUE:
            guarded += 1
    if kind == "LoC":
        return total
    if kind == "LoF":
        return guarded
    return 0.0 if total == 0 else guarded / total


def features_per_function(
    info: FunctionInfo,
    variant: int,
    weight: WeightFunction,
    build_model: BuildModel | None = None,
):
    """Summed weight over one of five feature sets.

    1: features used inside the body. 2: features controlling the
    function's presence, build model excluded. 3: like 2 plus the file's
    build-model condition. 4: union of 1 and 2. 5: union of 1 and 3.
    """
    if variant not in (1, 2, 3, 4, 5):
        raise ValueError(f"unknown features-per-function variant {variant!r}")
    inside: set[str] = set()
    for block in _decision_blocks(info):
        inside.update(referenced_features(block.raw_condition))
    enclosing = set(referenced_features(info.presence))
    with_build = enclosing | set(
        referenced_features(file_presence(build_model, info.file))
    )
    chosen = {
        1: inside,
        2: enclosing,
        3: with_build,
        4: inside | enclosing,
        5: inside | with_build,
    }[variant]
    return _weighted(tuple(sorted(chosen)), weight)


def blocks_per_function(info: FunctionInfo, mode: str = "if_only"):
    """Number of conditional blocks, with or without their siblings."""
    if mode not in ("if_only", "separate_else"):
        raise ValueError(f"unknown blocks mode {mode!r}")
    count = 0
    for node, _ in iter_nodes(info.node):
        if not isinstance(node, CppBlock):
            continue
        if mode == "separate_else" or node.directive in ("if", "ifdef", "ifndef"):
            count += 1
    return count


def tangling_degree(info: FunctionInfo, weight: WeightFunction):
    """Summed weight over every feature occurrence in the function's
    variation point conditions; repeated uses count repeatedly."""
    return sum(
        _weighted(referenced_features(block.raw_condition), weight)
        for block in _decision_blocks(info)
    )
