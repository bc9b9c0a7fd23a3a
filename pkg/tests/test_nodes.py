from __future__ import annotations

import itertools

import pytest

from varmetrics.extractor import extract_file
from varmetrics.formula import TRUE, And, Atom, Not
from varmetrics.nodes import (
    CppBlock,
    SingleStatement,
    count_statements,
    dump,
    find_path,
    iter_nodes,
    presence_condition,
)

from oracles import evaluate, expr_names, units_with_guards
from support import GUARDED_IF, random_corpus


def _statement_named(tree, text):
    for node, path in iter_nodes(tree):
        if isinstance(node, SingleStatement) and any(
            text in getattr(c, "text", "") for c in node.children
        ):
            return node, path
    raise AssertionError(f"no statement containing {text!r}")


def test_presence_condition_single_guard():
    tree = extract_file("x.c", GUARDED_IF)
    node, path = _statement_named(tree, "a_statement")
    assert presence_condition(node, path) == Atom("A")


def test_presence_condition_without_directives_is_true():
    tree = extract_file("x.c", "int x;\n")
    node, path = _statement_named(tree, "int x")
    assert presence_condition(node, path) == TRUE


def test_presence_condition_nested_else_matches_truth_table():
    src = """#if A
#if B
int u;
#else
int w;
#endif
#endif
"""
    tree = extract_file("x.c", src)
    node, path = _statement_named(tree, "int w")
    got = presence_condition(node, path)
    expected = And(Atom("A"), Not(Atom("B")))
    assert got == expected
    for a, b in itertools.product([False, True], repeat=2):
        env = {"A": a, "B": b}
        assert evaluate(got, env) == (a and not b)


def test_count_statements_guarded_if():
    tree = extract_file("x.c", GUARDED_IF)
    assert count_statements(tree) == 2


def test_count_statements_empty_function():
    tree = extract_file("x.c", "void f() {\n}\n")
    assert count_statements(tree) == 0


def test_count_statements_with_guard_filter():
    tree = extract_file("x.c", GUARDED_IF)
    assert count_statements(tree, lambda pc: pc != TRUE) == 2
    assert count_statements(tree, lambda pc: pc == TRUE) == 0


def test_find_path_locates_nested_nodes():
    tree = extract_file("x.c", GUARDED_IF)
    node, path = _statement_named(tree, "a_statement")
    assert find_path(tree, node) == path
    assert path[0] is tree


@pytest.mark.parametrize("seed", range(25))
def test_line_ranges_nest(seed):
    corpus = random_corpus(seed)
    for tree in corpus.files.values():
        for node, path in iter_nodes(tree):
            assert node.end_line >= node.start_line
            if path:
                parent = path[-1]
                assert parent.start_line <= node.start_line
                assert node.end_line <= parent.end_line


@pytest.mark.parametrize("seed", range(25))
def test_count_partition_property(seed):
    corpus = random_corpus(seed)
    for tree in corpus.files.values():
        total = count_statements(tree)
        plain = count_statements(tree, lambda pc: pc == TRUE)
        guarded = count_statements(tree, lambda pc: pc != TRUE)
        assert total == plain + guarded


@pytest.mark.parametrize("seed", range(25))
def test_child_condition_extends_parent(seed):
    corpus = random_corpus(seed)
    for tree in corpus.files.values():
        for node, path in iter_nodes(tree):
            parent_pc = presence_condition(node, path)
            if isinstance(node, CppBlock):
                child_pc = presence_condition(
                    object(), tuple(path) + (node,)  # any child sees this stack
                )
                if parent_pc == TRUE:
                    assert child_pc == node.condition
                else:
                    assert child_pc == And(parent_pc, node.condition)


@pytest.mark.parametrize("seed", range(25))
def test_group_guards_conjoin_predecessor_negations(seed):
    corpus = random_corpus(seed)
    for tree in corpus.files.values():
        groups: dict[int, list[CppBlock]] = {}
        for node, _ in iter_nodes(tree):
            if isinstance(node, CppBlock):
                groups.setdefault(node.group_id, []).append(node)
        for members in groups.values():
            members.sort(key=lambda b: b.sibling_index)
            assert members[0].directive in ("if", "ifdef", "ifndef")
            assert members[0].condition == members[0].raw_condition
            for k, block in enumerate(members[1:], 1):
                # every earlier sibling's raw condition appears negated
                flat = _and_terms(block.condition)
                for earlier in members[:k]:
                    assert Not(earlier.raw_condition) in flat


def _and_terms(expr):
    if isinstance(expr, And):
        return _and_terms(expr.left) + _and_terms(expr.right)
    return [expr]


@pytest.mark.parametrize("seed", range(10))
def test_dump_is_deterministic(seed):
    corpus = random_corpus(seed)
    for tree in corpus.files.values():
        assert dump(tree) == dump(tree)


@pytest.mark.parametrize("seed", range(10))
def test_units_walker_agrees_with_oracle(seed):
    corpus = random_corpus(seed)
    for tree in corpus.files.values():
        oracle_units = list(units_with_guards(tree))
        assert count_statements(tree) == len(oracle_units)
