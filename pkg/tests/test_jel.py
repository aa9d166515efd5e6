from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tracequery.errors import ParseError
from tracequery.gen import GenConfig, generate
from tracequery.jel import (
    Lexer,
    format_value,
    parse_location,
    parse_trace,
    parse_value,
    serialize_event,
    serialize_trace,
    term_event,
)
from tracequery.model import (
    NULL,
    UNCAUGHT,
    VOID,
    ClassRef,
    ExceptionEvent,
    FieldKind,
    Location,
    MemberFields,
    MethodCall,
    MethodExit,
    ObjectRef,
    Scalar,
    Step,
)

NPE_KINDS = [
    "threadstart", "methodcall", "methodcall", "step", "methodcall", "methodcall",
    "methodexit", "step", "step", "methodcall", "methodexit", "step", "step",
    "methodcall", "methodcall", "exception", "threaddeath",
]


def test_npe_trace_ids_and_kinds(npe_events):
    assert [e.id for e in npe_events] == list(range(17))
    assert [e.kind for e in npe_events] == NPE_KINDS
    assert {e.thread for e in npe_events} == {"main"}


def test_npe_trace_payload_details(npe_events):
    main = npe_events[1].event
    assert main == MethodCall(
        Location("Example.java", 20), ClassRef("Example"), "main",
        (ObjectRef("java.lang.String[]", 641),),
    )
    assert npe_events[6].event == MethodExit(
        5, Location("Example.java", 23), ObjectRef("FarAWayClass", 645), "<init>", VOID
    )
    assert npe_events[10].event.return_value == NULL
    assert npe_events[12].event == Step(
        Location("Example.java", 8),
        (("o", ObjectRef("FarAWayClass", 645)), ("result", NULL)),
    )
    assert npe_events[15].event == ExceptionEvent(
        Location("Example.java", 14), ObjectRef("java.lang.NullPointerException", 666), NULL, UNCAUGHT
    )


def test_npe_trace_round_trips(npe_events):
    text = serialize_trace(npe_events)
    assert parse_trace(text) == npe_events
    assert serialize_trace(parse_trace(text)) == text
    assert text.count("\n") == 17


def test_serialized_event_layout(npe_events):
    assert serialize_event(npe_events[14]) == (
        "event(14, 'main', methodcall(l('Example.java', 14), o('Example', 643), 'mN', ['null']))."
    )


def test_quoted_atoms_and_comments():
    text = """
    % a comment line
    event(0, 'it''s', threadstart('g')).  % trailing comment
    event(1, 'it''s', setfield(l('A.java', 2), c('A'), 'msg', 'don''t % stop')).
    """
    events = parse_trace(text)
    assert events[0].thread == "it's"
    assert events[1].event.value == Scalar("don't % stop")
    assert parse_trace(serialize_trace(events)) == events


def test_unquoted_atoms_and_numbers():
    events = parse_trace("event(0, main, setfield(l(f, 1), o(A, 2), x, -3.5e2)).")
    assert events[0].event.value == Scalar("-3.5e2")
    assert events[0].event.subject == ObjectRef("A", 2)


def test_member_fields_and_data_structures():
    text = (
        "event(0, 'main', memberfields(c('A'), [cf('count'), of('name')])).\n"
        "event(1, 'main', datastructure(l('A.java', 4), ['1', 'null', o('B', 3)])).\n"
    )
    events = parse_trace(text)
    mf = events[0].event
    assert isinstance(mf, MemberFields)
    assert [(d.kind, d.name) for d in mf.fields] == [(FieldKind.CLASS, "count"), (FieldKind.INSTANCE, "name")]
    assert events[1].event.contents == (Scalar("1"), NULL, ObjectRef("B", 3))
    assert serialize_trace(events) == text


def test_caught_exception_location():
    e = parse_trace("event(3, 't', exception(l('A.java', 4), o('E', 1), 'msg', l('A.java', 9))).")[0]
    assert e.event.catch == Location("A.java", 9)
    assert not e.event.uncaught


@pytest.mark.parametrize(
    "text, line, column",
    [
        ("event(0, 'main', threadstart('main'))", 1, 38),
        ("event(0, 'main', bogus('main')).", 1, 18),
        ("event(0, 'main',\n  methodcall(l('A.java', 1), o('A', 1), 'm', ['void'])).", 2, 47),
        ("event(-1, 'main', threadstart('main')).", 1, 7),
        ("event(0, 'main', threadstart('main')).\nevent(1, 'main', step(l('A', 0), [])).", 2, 30),
        ("event(0, 'main', threadstart('main).", 1, 30),
    ],
)
def test_parse_errors_report_position(text, line, column):
    with pytest.raises(ParseError) as info:
        parse_trace(text)
    assert (info.value.line_number, info.value.column) == (line, column)


def test_void_only_as_return_value():
    parse_trace("event(0, 't', methodcall(l('A', 1), c('A'), 'm', [])).\n"
                "event(1, 't', methodexit(0, l('A', 1), c('A'), 'm', void)).")
    with pytest.raises(ParseError):
        parse_trace("event(0, 't', setfield(l('A', 1), c('A'), 'f', 'void')).")


def test_value_helpers():
    assert parse_value("'null'") == NULL
    assert parse_value("o('A', 1)") == ObjectRef("A", 1)
    assert parse_location("l('A.java', 3)") == Location("A.java", 3)
    assert format_value(Scalar("it's")) == "'it''s'"


def test_empty_trace():
    assert parse_trace("") == []
    assert parse_trace("% nothing\n") == []
    assert serialize_trace([]) == ""


@settings(max_examples=40, deadline=None)
@given(
    seed=st.integers(1, 10**6),
    threads=st.integers(1, 4),
    uncaught=st.sampled_from([0.0, 0.5, 1.0]),
)
def test_generated_traces_round_trip(seed, threads, uncaught):
    events, _ = generate(GenConfig(seed=seed, threads=threads, max_events=300,
                                   uncaught_exception_probability=uncaught))
    text = serialize_trace(events)
    assert parse_trace(text) == events
    assert serialize_trace(parse_trace(text)) == text


def term_layer_parse(text: str):
    """Reference reader: every fact goes through generic terms."""
    lex = Lexer(text)
    events = []
    while not lex.done():
        term = lex.read_term()
        lex.expect(".")
        events.append(term_event(term))
    return events


def outcome(read, text):
    try:
        return read(text)
    except ParseError as err:
        return (err.line_number, err.column, err.expected, err.found)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_fast_reader_agrees_with_term_layer(seed):
    text = serialize_trace(generate(GenConfig(seed=seed, threads=2, max_events=150))[0])
    assert parse_trace(text) == term_layer_parse(text)


AWKWARD = ["", "'void'", "void", "null", "'null'", "-1", "0", "1.5", "'l'", "uncaught", "''", "x(",
           ")", "(", ",", "[", "]", ".", "'", "%", "o('A', 1)", "c('A')", "l('F', 0)", "  ", "\n"]


@settings(max_examples=300, deadline=None)
@given(st.data())
def test_fast_reader_agrees_on_damaged_input(npe_events, data):
    text = serialize_trace(npe_events)
    at = data.draw(st.integers(0, len(text)))
    cut = data.draw(st.integers(0, 3))
    damaged = text[:at] + data.draw(st.sampled_from(AWKWARD)) + text[at + cut:]
    assert outcome(parse_trace, damaged) == outcome(term_layer_parse, damaged)
