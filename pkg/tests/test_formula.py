from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from varmetrics.errors import SchemaError
from varmetrics.formula import (
    FALSE,
    TRUE,
    And,
    Atom,
    Comparison,
    Not,
    Or,
    conjoin,
    parse_condition,
    parse_constraint,
    referenced_features,
    render,
)

from oracles import expr_names


def test_referenced_features_atom():
    assert referenced_features(Atom("A")) == ("A",)


def test_referenced_features_deduplicates():
    assert referenced_features(And(Atom("A"), Not(Atom("A")))) == ("A",)


def test_referenced_features_comparison_union():
    expr = Or(Comparison("X > 2", ("X",)), Atom("Y"))
    assert referenced_features(expr) == ("X", "Y")


def test_structural_equality_and_hashing():
    a = And(Atom("A"), Not(Atom("B")))
    b = And(Atom("A"), Not(Atom("B")))
    assert a == b
    assert len({a, b}) == 1
    assert a != And(Not(Atom("B")), Atom("A"))


def test_conjoin_empty_is_true():
    assert conjoin([]) == TRUE


def test_conjoin_folds_left():
    assert conjoin([Atom("A")]) == Atom("A")
    assert conjoin([Atom("A"), Atom("B"), Atom("C")]) == And(
        And(Atom("A"), Atom("B")), Atom("C")
    )


class TestParseCondition:
    def test_plain_macro(self):
        assert parse_condition("A") == Atom("A")

    def test_defined_with_and_without_parens(self):
        assert parse_condition("defined(A)") == Atom("A")
        assert parse_condition("defined A") == Atom("A")

    def test_boolean_structure(self):
        assert parse_condition("A && !B || C") == Or(
            And(Atom("A"), Not(Atom("B"))), Atom("C")
        )

    def test_parenthesized_group(self):
        assert parse_condition("!(A || B)") == Not(Or(Atom("A"), Atom("B")))

    def test_comparison_collapses_with_names(self):
        expr = parse_condition("X > 2 && defined(Y)")
        assert expr == And(Comparison("X > 2", ("X",)), Atom("Y"))

    def test_call_like_term_keeps_all_identifiers(self):
        expr = parse_condition("MAX(a, b) > 2")
        assert isinstance(expr, Comparison)
        assert set(expr.names) == {"MAX", "a", "b"}

    def test_numeric_literals(self):
        assert parse_condition("0") == FALSE
        assert parse_condition("1") == TRUE
        assert parse_condition("0x0") == FALSE

    def test_empty_condition_is_true(self):
        assert parse_condition("") == TRUE

    def test_negated_comparison_collapses_whole_term(self):
        expr = parse_condition("!X + 1")
        assert isinstance(expr, Comparison)
        assert expr.names == ("X",)


class TestParseConstraint:
    def test_simple(self):
        assert parse_constraint("!A || B") == Or(Not(Atom("A")), Atom("B"))

    def test_parens(self):
        assert parse_constraint("(A || B) && C") == And(
            Or(Atom("A"), Atom("B")), Atom("C")
        )

    def test_rejects_stray_tokens(self):
        with pytest.raises(SchemaError):
            parse_constraint("A implies B", where="m.fm:3")

    def test_rejects_numbers(self):
        with pytest.raises(SchemaError):
            parse_constraint("A && 1")

    def test_rejects_unbalanced_parens(self):
        with pytest.raises(SchemaError):
            parse_constraint("(A || B")

    def test_error_carries_location(self):
        with pytest.raises(SchemaError, match="m.fm:3"):
            parse_constraint("", where="m.fm:3")


names = st.sampled_from(["A", "B", "C", "D"])


def exprs():
    return st.recursive(
        names.map(Atom) | st.just(TRUE) | st.just(FALSE),
        lambda children: st.builds(Not, children)
        | st.builds(And, children, children)
        | st.builds(Or, children, children),
        max_leaves=25,
    )


@given(exprs())
def test_referenced_features_matches_recursive_walk(expr):
    assert set(referenced_features(expr)) == expr_names(expr)
    assert list(referenced_features(expr)) == sorted(set(referenced_features(expr)))


@given(exprs())
def test_strict_render_round_trips(expr):
    # rendering uses only strict syntax for atom-only formulas
    text = render(expr)
    if "1" in text or "0" in text:
        return  # constants are not part of the strict grammar
    assert parse_constraint(text) == expr
