from __future__ import annotations

import json
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tracequery import evaluate, sample_text
from tracequery.catalog import QueryResult
from tracequery.errors import (
    DuplicateName,
    IncompatibleResults,
    QuerySyntaxError,
    SessionFormatError,
    UnknownQuery,
)
from tracequery.model import Scalar
from tracequery.scenario import parse_scenario
from tracequery.session import (
    ALL_FIELDS,
    HEADER,
    SavedQuery,
    Session,
    diff_results,
    fingerprint,
)
from tracequery.store import HistoryInterval, load, restrict


def fixed_program(npe_events):
    """The same run after doSomeThing is changed to return a real value."""
    result = Scalar("some result")
    events = list(npe_events)
    events[10] = replace(events[10], event=replace(events[10].event, return_value=result))
    step = events[12].event
    events[12] = replace(events[12], event=replace(step, locals=(step.locals[0], ("result", result))))
    events[13] = replace(events[13], event=replace(events[13].event, args=(result,)))
    return events


def test_save_and_duplicate_names():
    session = Session()
    session.save_query(SavedQuery.from_expression("npe-env", "where-exception main"))
    assert session.get_query("npe-env") == SavedQuery("npe-env", "where-exception", "where-exception main")
    with pytest.raises(DuplicateName):
        session.save_query(SavedQuery.from_expression("npe-env", "call-chain 1"))
    with pytest.raises(QuerySyntaxError):
        session.save_query(SavedQuery("broken", "call-chain", "call-chain x"))
    assert [q.name for q in session.queries] == ["npe-env"]


def test_unknown_query(npe):
    with pytest.raises(UnknownQuery):
        Session().run_saved("nope", npe)


def test_cached_answer_is_reused(npe):
    session = Session()
    session.save_query(SavedQuery.from_expression("npe-env", "where-exception main"))
    first = session.run_saved("npe-env", npe)
    second = session.run_saved("npe-env", npe)
    assert first == second
    assert first.to_json() == second.to_json()
    assert first.value["id"] == 14
    assert session.evaluation_count("npe-env") == 1


def test_window_gets_its_own_cache_entry(npe):
    session = Session()
    session.save_query(SavedQuery.from_expression("chain", "call-chain 15"))
    full = session.run_saved("chain", npe)
    windowed = session.run_saved("chain", restrict(npe, HistoryInterval(13, 16)))
    assert full.value == [1, 2, 4, 13, 14] and windowed.value == [13, 14]
    assert session.evaluation_count("chain") == 2
    assert len(session.answers) == 2
    assert fingerprint(npe) != fingerprint(restrict(npe, HistoryInterval(0, 16)))


def test_trace_edit_forces_recomputation(npe, npe_events):
    session = Session()
    session.save_query(SavedQuery.from_expression("m2", "arg-history m2"))
    session.run_saved("m2", npe)
    edited = load(fixed_program(npe_events))
    assert session.run_saved("m2", edited).value == [{"id": 13, "args": ["some result"]}]
    assert session.evaluation_count("m2") == 2
    session.run_saved("m2", load(list(npe_events)))
    assert session.evaluation_count("m2") == 2


@pytest.mark.parametrize("expression", ["call-chain 15", "pre-called 13", "thread-status",
                                        "local-history 0 16 main o", "exists method doSomeThing"])
def test_cache_is_transparent(npe, expression):
    session = Session()
    session.save_query(SavedQuery.from_expression("q", expression))
    cached = session.run_saved("q", npe)
    session.clear_cache()
    assert session.run_saved("q", npe) == cached == evaluate(npe, expression)


def test_scenario_query_round_trips_through_file(tmp_path, login_ok):
    path = tmp_path / "s" / "session.txt"
    session = Session(path)
    spec = parse_scenario(sample_text("login.scn"))
    session.save_query(SavedQuery.from_scenario("login", spec))
    session.save_query(SavedQuery.from_expression("ids", "call-chain  13"))
    result = session.run_saved("login", login_ok)
    assert result.value["matched_ids"] == [3, 4, 8, 10, 11, 12, 13]

    text = path.read_text(encoding="utf-8")
    assert text.splitlines()[0] == HEADER
    reloaded = Session.open(path)
    assert reloaded.queries == session.queries
    assert parse_scenario(reloaded.get_query("login").parameters) == spec
    assert reloaded.run_saved("login", login_ok) == result
    assert reloaded.evaluation_count("login") == 1


def test_open_missing_file_starts_empty(tmp_path):
    session = Session.open(tmp_path / "new.txt")
    assert session.queries == []
    assert not (tmp_path / "new.txt").exists()


@pytest.mark.parametrize("text", ["", "not a header\n", HEADER + "\n{bad json\n",
                                  HEADER + '\n{"type": "answer", "query": "x"}\n',
                                  HEADER + '\n{"type": "mystery"}\n'])
def test_bad_session_files(text):
    with pytest.raises(SessionFormatError):
        Session.loads(text)


# -- diffs -------------------------------------------------------------------


def test_diff_reflexive(npe):
    x = evaluate(npe, "full-chain 15")
    report = diff_results(x, x, ALL_FIELDS)
    assert report.only_in_a == [] and report.only_in_b == []
    assert report.common == x.value
    assert report.identical


def test_diff_across_program_versions(npe, npe_events):
    before = evaluate(npe, "arg-history m2")
    after = evaluate(load(fixed_program(npe_events)), "arg-history m2")
    report = diff_results(before, after)
    assert report.projection == ("args",)
    assert report.only_in_a == [{"args": [None]}]
    assert report.only_in_b == [{"args": ["some result"]}]
    assert report.common == []


def test_diff_projection_ignores_ids():
    a = QueryResult("return-history", [{"id": 1, "value": "x"}, {"id": 5, "value": "y"}])
    b = QueryResult("return-history", [{"id": 2, "value": "y"}, {"id": 9, "value": "x"}])
    assert diff_results(a, b).identical
    assert not diff_results(a, b, ALL_FIELDS).identical
    assert diff_results(a, b, ["id"]).only_in_a == [{"id": 1}, {"id": 5}]


def test_diff_uses_multisets():
    a = QueryResult("k", [{"v": 1}, {"v": 1}, {"v": 2}])
    b = QueryResult("k", [{"v": 1}, {"v": 3}])
    report = diff_results(a, b)
    assert report.common == [{"v": 1}]
    assert report.only_in_a == [{"v": 1}, {"v": 2}]
    assert report.only_in_b == [{"v": 3}]


def test_diff_empty_and_incompatible():
    empty = QueryResult("k", [])
    report = diff_results(empty, empty)
    assert (report.only_in_a, report.only_in_b, report.common) == ([], [], [])
    with pytest.raises(IncompatibleResults):
        diff_results(empty, QueryResult("other", []))
    with pytest.raises(IncompatibleResults):
        diff_results(QueryResult("exists", True), QueryResult("exists", False))


rows = st.lists(st.fixed_dictionaries({"id": st.integers(0, 5), "v": st.sampled_from(["a", "b", None])}),
                max_size=8)


@settings(max_examples=200, deadline=None)
@given(a=rows, b=rows, whole=st.booleans())
def test_diff_symmetry_and_partition(a, b, whole):
    ra, rb = QueryResult("k", a), QueryResult("k", b)
    projection = ALL_FIELDS if whole else None
    ab, ba = diff_results(ra, rb, projection), diff_results(rb, ra, projection)
    assert ab.only_in_a == ba.only_in_b and ab.only_in_b == ba.only_in_a
    canon = lambda rs: sorted(json.dumps(r, sort_keys=True) for r in rs)  # noqa: E731
    assert canon(ab.common) == canon(ba.common)
    assert len(ab.only_in_a) + len(ab.common) == len(a)
    assert len(ab.only_in_b) + len(ab.common) == len(b)


def test_null_rendering_in_results(npe):
    assert evaluate(npe, "return-history doSomeThing").value == [{"id": 10, "value": None}]
