"""Flat ``verb arg...`` query expressions and their JSON renderings.

Every query-engine operation has one verb here; the REPL, batch mode and
saved queries all go through :func:`compile_query`. Arguments use JEL term
syntax (``o('Example', 643)``, ``l('Example.java', 14)``); plain names may be
left unquoted, including dotted or hyphenated ones.

Results are plain JSON data with a fixed key order and ascending ids, so
the same store and expression always serialize to the same bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from . import jel
from . import queries as q
from .errors import ParseError, QuerySyntaxError
from .model import (
    ClassRef,
    DataStructure,
    ExceptionEvent,
    Location,
    MemberFields,
    MethodCall,
    MethodExit,
    Null,
    ObjectRef,
    Scalar,
    SetField,
    Step,
    ThreadDeath,
    ThreadStart,
    TraceEvent,
    Uncaught,
    Void,
)
from .scenario import FailedAt, Matched, read_constraints
from .store import TraceStore

# -- JSON renderings ---------------------------------------------------------


def location_json(loc: Location) -> str:
    return f"{loc.file}:{loc.line}"


def value_json(v) -> Any:
    """Null becomes JSON null; everything else its JEL text (scalars unquoted)."""
    if isinstance(v, Null):
        return None
    if isinstance(v, Void):
        return "void"
    if isinstance(v, Scalar):
        return v.text
    if isinstance(v, (ObjectRef, ClassRef)):
        return jel.format_value(v)
    if isinstance(v, q.Unassigned):
        return "<unassigned>"
    if isinstance(v, int):
        return v
    raise TypeError(f"not a value: {v!r}")


def event_json(e: TraceEvent) -> dict[str, Any]:
    out: dict[str, Any] = {"id": e.id, "thread": e.thread, "kind": e.kind}
    ev = e.event
    if isinstance(ev, MethodCall):
        out.update(location=location_json(ev.location), subject=value_json(ev.subject),
                   name=ev.name, args=[value_json(a) for a in ev.args])
    elif isinstance(ev, MethodExit):
        out.update(call_id=ev.call_id, location=location_json(ev.location),
                   subject=value_json(ev.subject), name=ev.name, value=value_json(ev.return_value))
    elif isinstance(ev, SetField):
        out.update(location=location_json(ev.location), subject=value_json(ev.subject),
                   name=ev.field_name, value=value_json(ev.value))
    elif isinstance(ev, DataStructure):
        out.update(location=location_json(ev.location), contents=[value_json(v) for v in ev.contents])
    elif isinstance(ev, Step):
        out.update(location=location_json(ev.location),
                   locals=[{"name": n, "value": value_json(v)} for n, v in ev.locals])
    elif isinstance(ev, ExceptionEvent):
        catch = "uncaught" if isinstance(ev.catch, Uncaught) else location_json(ev.catch)
        out.update(location=location_json(ev.location), subject=value_json(ev.instance),
                   value=value_json(ev.message), catch=catch)
    elif isinstance(ev, (ThreadStart, ThreadDeath)):
        out.update(group=ev.group)
    elif isinstance(ev, MemberFields):
        out.update(**{"class": ev.class_name},
                   fields=[{"kind": d.kind.value, "name": d.name} for d in ev.fields])
    return out


def terminator_json(t: q.Terminator) -> dict[str, Any]:
    if isinstance(t, q.ExitedAt):
        return {"end": "exit", "end_id": t.event_id}
    if isinstance(t, q.KilledByUncaught):
        return {"end": "uncaught", "end_id": t.event_id}
    return {"end": "unterminated", "end_id": None}


def sample_json(sample: q.FieldSample) -> dict[str, Any]:
    return {"id": sample.event_id, "name": sample.field_name, "value": value_json(sample.value)}


def state_json(state: q.ObjectState) -> dict[str, Any]:
    return {
        "object": value_json(state.object),
        "at": state.at,
        "instantiated_at": state.instantiated_at,
        "missing_member_fields": state.missing_member_fields,
        "fields": [sample_json(f) for f in state.fields],
    }


def tree_json(tree: q.CallTree) -> dict[str, Any]:
    call = tree.root.event
    return {
        "call_id": tree.call_id,
        "subject": value_json(call.subject),
        "name": call.name,
        **terminator_json(tree.terminator),
        "children": [tree_json(c) for c in tree.children],
    }


def bindings_json(bindings: dict[str, Any]) -> dict[str, Any]:
    return {k: value_json(v) for k, v in bindings.items()}


def scenario_json(result) -> dict[str, Any]:
    if isinstance(result, Matched):
        return {"matched": True, "bindings": bindings_json(result.bindings),
                "matched_ids": list(result.matched_ids)}
    assert isinstance(result, FailedAt)
    return {"matched": False, "failed_at": result.label, "bindings": bindings_json(result.bindings)}


# -- compiled queries --------------------------------------------------------


@dataclass(frozen=True)
class QueryResult:
    kind: str
    value: Any

    def to_json(self) -> str:
        return json.dumps(self.value, ensure_ascii=False)


@dataclass(frozen=True)
class Query:
    verb: str
    expression: str
    run: Callable[[TraceStore], Any] = field(compare=False, repr=False)

    def evaluate(self, s: TraceStore) -> QueryResult:
        return QueryResult(self.verb, self.run(s))


@dataclass(frozen=True)
class VerbInfo:
    usage: str
    summary: str
    build: Callable[[jel.Lexer], Callable[[TraceStore], Any]]


VERBS: dict[str, VerbInfo] = {}


def _verb(name: str, usage: str, summary: str):
    def register(build):
        VERBS[name] = VerbInfo(usage, summary, build)
        return build

    return register


# -- argument readers --------------------------------------------------------


def _done(lex: jel.Lexer) -> bool:
    return lex.peek().kind == "eof"


def _end(lex: jel.Lexer) -> None:
    tok = lex.peek()
    if tok.kind != "eof":
        raise ParseError(tok.line, tok.column, "end of query", tok.describe())


def _term(lex: jel.Lexer, what: str) -> jel.Term:
    tok = lex.peek()
    if tok.kind == "eof":
        raise ParseError(tok.line, tok.column, what, tok.describe())
    return jel.parse_term(lex)


def _int(lex: jel.Lexer, what: str = "event id") -> int:
    return jel.term_int(_term(lex, what), what)


def _name(lex: jel.Lexer, what: str) -> str:
    t = _term(lex, what)
    if isinstance(t, jel.Num):
        return t.text
    return jel.term_atom(t, what)


def _object(lex: jel.Lexer) -> ObjectRef:
    return jel.term_object(_term(lex, "object o(Class, Id)"))


def _opt_subject(lex: jel.Lexer):
    return None if _done(lex) else jel.term_subject(_term(lex, "subject"))


def _single_id(run):
    def build(lex):
        event_id = _int(lex)
        _end(lex)
        return lambda s: run(s, event_id)

    return build


# -- verbs -------------------------------------------------------------------

_verb("call-chain", "ID", "ids of the calls enclosing ID, outermost first")(
    _single_id(lambda s, i: q.call_chain(s, i))
)
_verb("enclosing", "ID", "enclosing activations of ID with how each ended")(
    _single_id(lambda s, i: [{"call_id": sp.call_id, **terminator_json(sp.terminator)}
                             for sp in q.any_enclosing_method(s, i)])
)
_verb("full-chain", "ID", "enclosing call events of ID, most recent first")(
    _single_id(lambda s, i: [event_json(e) for e in q.full_detail_call_chain(s, i)])
)
_verb("pre-called", "ID", "(call, exit) ids finished before ID in its activation")(
    _single_id(lambda s, i: [[c.id, x.id] for c, x in q.pre_event_called_methods(s, i)])
)
_verb("post-called", "ID", "(call, exit) ids made after ID in its activation")(
    _single_id(lambda s, i: [[c.id, x.id] for c, x in q.post_event_called_methods(s, i)])
)
_verb("locals", "ID", "visible local variables at ID")(
    _single_id(lambda s, i: [{"name": n, "value": value_json(v)} for n, v in q.local_variables_at(s, i)])
)
_verb("call-tree", "CALL_ID", "activations nested under a call")(
    _single_id(lambda s, i: tree_json(q.call_tree(s, i)))
)
_verb("get", "ID", "one event")(_single_id(lambda s, i: event_json(s.get(i))))


@_verb("where", "THREAD key=value...", "enclosing call of the first matching event in THREAD")
def _where(lex):
    thread = _name(lex, "thread name")
    pattern = read_constraints(lex, variables=False)
    _end(lex)
    return lambda s: event_json(q.where(s, thread, pattern))


@_verb("where-exception", "THREAD", "call in which THREAD's uncaught exception was thrown")
def _where_exception(lex):
    thread = _name(lex, "thread name")
    _end(lex)
    return lambda s: event_json(q.where_exception_is_thrown(s, thread))


@_verb("scan", "key=value...", "all events matching the constraints")
def _scan(lex):
    pattern = read_constraints(lex, variables=False)
    _end(lex)
    return lambda s: [event_json(e) for e in s.scan(pattern)]


@_verb("instance-field-history", "START END OBJECT FIELD", "writes to an instance field")
def _instance_field_history(lex):
    start, end, obj, name = _int(lex), _int(lex), _object(lex), _name(lex, "field name")
    _end(lex)
    return lambda s: [sample_json(x) for x in q.instance_field_history(s, start, end, obj, name)]


@_verb("class-field-history", "START END CLASS FIELD", "writes to a static field")
def _class_field_history(lex):
    start, end = _int(lex), _int(lex)
    cls, name = _name(lex, "class name"), _name(lex, "field name")
    _end(lex)
    return lambda s: [sample_json(x) for x in q.class_field_history(s, start, end, cls, name)]


@_verb("object-state", "END OBJECT [strict]", "last value of each field of OBJECT at END")
def _object_state(lex):
    end, obj = _int(lex), _object(lex)
    strict = False
    if not _done(lex):
        tok = lex.next()
        if tok.kind != "atom" or tok.text != "strict":
            raise ParseError(tok.line, tok.column, "'strict' or end of query", tok.describe())
        strict = True
    _end(lex)
    return lambda s: state_json(q.object_state(s, end, obj, strict=strict))


@_verb("instances", "CLASS AT", "state at AT of every instance of CLASS created by then")
def _instances(lex):
    cls, at = _name(lex, "class name"), _int(lex)
    _end(lex)
    return lambda s: [state_json(x) for x in q.all_instances(s, cls, at)]


@_verb("local-history", "START END THREAD NAME", "values of a local variable over time")
def _local_history(lex):
    start, end = _int(lex), _int(lex)
    thread, name = _name(lex, "thread name"), _name(lex, "variable name")
    _end(lex)
    return lambda s: [sample_json(x) for x in q.local_variable_history(s, start, end, thread, name)]


@_verb("arg-history", "METHOD [SUBJECT]", "arguments of every call of METHOD")
def _arg_history(lex):
    method = _name(lex, "method name")
    subject = _opt_subject(lex)
    _end(lex)
    return lambda s: [{"id": i, "args": [value_json(a) for a in args]}
                      for i, args in q.argument_history(s, method, subject)]


@_verb("return-history", "METHOD [SUBJECT]", "return values of every exit of METHOD")
def _return_history(lex):
    method = _name(lex, "method name")
    subject = _opt_subject(lex)
    _end(lex)
    return lambda s: [{"id": i, "value": value_json(v)}
                      for i, v in q.return_value_history(s, method, subject)]


@_verb("ds-history", "START END [LOCATION]", "data-structure snapshots")
def _ds_history(lex):
    start, end = _int(lex), _int(lex)
    at = None if _done(lex) else jel.term_location(_term(lex, "location"))
    _end(lex)
    return lambda s: [{"id": i, "contents": [value_json(v) for v in vs]}
                      for i, vs in q.data_structure_history(s, start, end, at)]


@_verb("thread-status", "", "running or exited, per thread")
def _thread_status(lex):
    _end(lex)
    return lambda s: {t: st.value for t, st in q.thread_status(s).items()}


def _existence(lex) -> q.ExistenceQuery:
    at = lex.peek()
    form = _name(lex, "existence question")
    if form == "line":
        return q.LineExecuted(jel.term_location(_term(lex, "location l(File, Line)")))
    if form == "method":
        return q.MethodCalled(_name(lex, "method name"), _opt_subject(lex))
    if form == "field-assigned":
        pattern = read_constraints(lex, variables=False)
        extra = set(pattern.constraints()) - {"name", "value", "subject"}
        if extra:
            raise QuerySyntaxError(at.line, at.column, "only name=, value= and subject=", ", ".join(sorted(extra)))
        return q.FieldAssigned(pattern.name, pattern.value, pattern.subject)
    if form == "instance":
        return q.InstanceExists(_name(lex, "class name"))
    if form == "exception-caught":
        return q.ExceptionCaught(_name(lex, "exception class name"))
    if form == "thread-running":
        return q.ThreadRunning(_name(lex, "thread name"))
    if form == "thread-exited":
        return q.ThreadExited(_name(lex, "thread name"))
    raise QuerySyntaxError(
        at.line,
        at.column,
        "line, method, field-assigned, instance, exception-caught, thread-running or thread-exited",
        repr(form),
    )


@_verb(
    "exists",
    "line LOC | method NAME [SUBJECT] | field-assigned [name=F] [value=V] [subject=S]"
    " | instance CLASS | exception-caught CLASS | thread-running T | thread-exited T",
    "yes/no questions about the trace",
)
def _exists(lex):
    question = _existence(lex)
    _end(lex)
    return lambda s: q.exists(s, question)


# -- entry points ------------------------------------------------------------


def _lexer(text: str) -> jel.Lexer:
    return jel.Lexer(text, extra_punct="=;", hyphen_atoms=True)


def compile_query(text: str) -> Query:
    """Parse a query expression; raises QuerySyntaxError."""
    lex = _lexer(text)
    try:
        tok = lex.next()
        if tok.kind != "atom" or tok.text not in VERBS:
            raise QuerySyntaxError(tok.line, tok.column, "query verb (" + ", ".join(VERBS) + ")",
                                   tok.describe())
        verb = tok.text
        run = VERBS[verb].build(lex)
    except QuerySyntaxError:
        raise
    except ParseError as err:
        raise QuerySyntaxError(err.line_number, err.column, err.expected, err.found) from None
    return Query(verb, " ".join(text.split("\n")).strip(), run)


def evaluate(s: TraceStore, text: str) -> QueryResult:
    return compile_query(text).evaluate(s)


def help_lines(prefix: str = "") -> list[str]:
    return [f"{prefix}{name} {info.usage}".rstrip() + f"  -- {info.summary}" for name, info in VERBS.items()]


def lookup(name: str) -> Optional[VerbInfo]:
    return VERBS.get(name)
