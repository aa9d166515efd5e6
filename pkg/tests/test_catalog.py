from __future__ import annotations

import pytest

from tracequery.catalog import VERBS, compile_query, evaluate
from tracequery.errors import QuerySyntaxError


@pytest.mark.parametrize(
    "expression, expected",
    [
        ("call-chain 15", [1, 2, 4, 13, 14]),
        ("call-chain 0", []),
        ("pre-called 13", [[5, 6], [9, 10]]),
        ("post-called 5", [[9, 10]]),
        ("enclosing 7", [{"call_id": 1, "end": "uncaught", "end_id": 15},
                         {"call_id": 2, "end": "uncaught", "end_id": 15},
                         {"call_id": 4, "end": "uncaught", "end_id": 15}]),
        ("locals 13", [{"name": "o", "value": "o('FarAWayClass', 645)"}, {"name": "result", "value": None}]),
        ("local-history 0 16 main result", [{"id": 12, "name": "result", "value": None}]),
        ("arg-history m2", [{"id": 13, "args": [None]}]),
        ("arg-history main c(Example)", [{"id": 1, "args": ["o('java.lang.String[]', 641)"]}]),
        ("return-history '<init>'", [{"id": 6, "value": "void"}]),
        ("ds-history 0 16", []),
        ("instance-field-history 0 16 o(Example, 643) x", []),
        ("class-field-history 0 16 Example x", []),
        ("thread-status", {"main": "exited"}),
        ("exists method doSomeThing", True),
        ("exists method doSomeThing o('FarAWayClass', 645)", True),
        ("exists exception-caught java.lang.NullPointerException", False),
        ("exists thread-exited main", True),
        ("exists thread-running main", False),
        ("exists instance FarAWayClass", True),
        ("exists field-assigned", False),
        ("exists field-assigned name=x value='1' subject=o(A, 1)", False),
        ("exists line l('Example.java', 26)", True),
        ("scan kind=methodexit from=7", [
            {"id": 10, "thread": "main", "kind": "methodexit", "call_id": 9, "location": "Example.java:26",
             "subject": "o('FarAWayClass', 645)", "name": "doSomeThing", "value": None}]),
        ("get 15", {"id": 15, "thread": "main", "kind": "exception", "location": "Example.java:14",
                    "subject": "o('java.lang.NullPointerException', 666)", "value": None,
                    "catch": "uncaught"}),
    ],
)
def test_query_expressions(npe, expression, expected):
    assert evaluate(npe, expression).value == expected


def test_event_producing_verbs(npe):
    assert evaluate(npe, "where-exception main").value["id"] == 14
    assert evaluate(npe, "where main kind=methodcall name=doSomeThing").value["id"] == 4
    assert [e["id"] for e in evaluate(npe, "full-chain 15").value] == [14, 13, 4, 2, 1]
    tree = evaluate(npe, "call-tree 4").value
    assert [c["call_id"] for c in tree["children"]] == [5, 9, 13]


def test_object_state_expressions(login_ok):
    state = evaluate(login_ok, "object-state 5 o(LoginDialog, 100)").value
    assert state["fields"] == [
        {"id": 3, "name": "uBox", "value": "o('TextBox', 201)"},
        {"id": 4, "name": "pBox", "value": "o('TextBox', 202)"},
    ]
    partial = evaluate(login_ok, "object-state 3 o(LoginDialog, 100)").value
    assert partial["fields"][1] == {"id": None, "name": "pBox", "value": "<unassigned>"}
    [inst] = evaluate(login_ok, "instances LoginDialog 14").value
    assert inst["object"] == "o('LoginDialog', 100)"


def test_json_is_stable(npe):
    for verb in ("full-chain 15", "call-tree 1", "thread-status", "enclosing 15"):
        assert evaluate(npe, verb).to_json() == evaluate(npe, verb).to_json()
    assert evaluate(npe, "pre-called 13").to_json() == "[[5, 6], [9, 10]]"


def test_every_verb_is_documented():
    for name, info in VERBS.items():
        assert info.summary, name


@pytest.mark.parametrize(
    "expression, column",
    [
        ("nothing 1", 1),
        ("call-chain", 11),
        ("call-chain 1 2", 14),
        ("call-chain x", 12),
        ("object-state 3 o(A, 1) loose", 24),
        ("exists maybe", 8),
        ("exists field-assigned kind=step", 8),
        ("where main kind=step id=$X", 25),
        ("instances A", 12),
    ],
)
def test_syntax_errors(expression, column):
    with pytest.raises(QuerySyntaxError) as info:
        compile_query(expression)
    assert info.value.column == column


def test_compiled_query_keeps_expression():
    q = compile_query("  call-chain   15 ")
    assert q.verb == "call-chain"
    assert q.expression == "call-chain   15"
