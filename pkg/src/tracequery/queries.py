"""Built-in debugging queries over a :class:`~tracequery.store.TraceStore`.

Enclosure follows two rules, evaluated per query against the event
database rather than from a precomputed call tree:

* a call encloses event ``id`` when ``call < id < exit`` for its exit, or
* when the call never exited, its thread has an uncaught exception ``exc``
  and ``call < id <= exc``.

A call with neither an exit nor an uncaught exception after it encloses
nothing. An exit event is not inside its own activation; the uncaught
exception event is inside every activation it kills.

List results are ordered by ascending event id unless stated otherwise.
"""

from __future__ import annotations

import bisect
import enum
import weakref
from dataclasses import dataclass, replace
from typing import Optional, Union

from .errors import (
    NoEnclosingEnvironment,
    NoInstantiation,
    NoMatch,
    NoMemberFields,
    NotAMethodCall,
    UnassignedField,
)
from .model import (
    CONSTRUCTOR,
    UNCAUGHT,
    ClassRef,
    EventPattern,
    FieldKind,
    Location,
    MemberFields,
    MethodCall,
    MethodExit,
    ObjectRef,
    Step,
    Subject,
    TraceEvent,
    Value,
)
from .store import TraceStore

# -- result types ------------------------------------------------------------


@dataclass(frozen=True)
class ExitedAt:
    event_id: int


@dataclass(frozen=True)
class KilledByUncaught:
    event_id: int


@dataclass(frozen=True)
class Unterminated:
    def __repr__(self) -> str:
        return "UNTERMINATED"


UNTERMINATED = Unterminated()

Terminator = Union[ExitedAt, KilledByUncaught, Unterminated]


@dataclass(frozen=True)
class CallSpan:
    call_id: int
    terminator: Terminator


@dataclass(frozen=True)
class Unassigned:
    """Value of a field with no write between instantiation and the query point."""

    def __repr__(self) -> str:
        return "UNASSIGNED"


UNASSIGNED = Unassigned()


@dataclass(frozen=True)
class FieldSample:
    event_id: Optional[int]
    field_name: str
    value: Union[Value, Unassigned]


@dataclass(frozen=True)
class ObjectState:
    object: ObjectRef
    at: int
    fields: tuple[FieldSample, ...]
    instantiated_at: Optional[int] = None
    missing_member_fields: bool = False

    def as_dict(self) -> dict[str, Union[Value, Unassigned]]:
        return {f.field_name: f.value for f in self.fields}


@dataclass(frozen=True)
class CallTree:
    root: TraceEvent
    terminator: Terminator
    children: tuple[CallTree, ...] = ()

    @property
    def call_id(self) -> int:
        return self.root.id

    def walk(self):
        yield self
        for child in self.children:
            yield from child.walk()


class ThreadStatus(enum.Enum):
    RUNNING = "running"
    EXITED = "exited"


# existence queries -- one small type per question


@dataclass(frozen=True)
class LineExecuted:
    location: Location


@dataclass(frozen=True)
class MethodCalled:
    name: str
    subject: Optional[Subject] = None


@dataclass(frozen=True)
class FieldAssigned:
    """``None`` for any of the parts means "any"."""

    field: Optional[str] = None
    value: Optional[Value] = None
    subject: Optional[Subject] = None


@dataclass(frozen=True)
class InstanceExists:
    class_name: str


@dataclass(frozen=True)
class ExceptionCaught:
    class_name: str


@dataclass(frozen=True)
class ThreadRunning:
    thread: str


@dataclass(frozen=True)
class ThreadExited:
    thread: str


ExistenceQuery = Union[
    LineExecuted,
    MethodCalled,
    FieldAssigned,
    InstanceExists,
    ExceptionCaught,
    ThreadRunning,
    ThreadExited,
]

# -- span bookkeeping --------------------------------------------------------


def terminator_of(s: TraceStore, call_id: int, thread: str) -> Terminator:
    exit_id = s.exit_of(call_id)
    if exit_id is not None:
        return ExitedAt(exit_id)
    exc = s.last_uncaught(thread)
    if exc is not None and exc > call_id:
        return KilledByUncaught(exc)
    return UNTERMINATED


def _bound(term: Terminator) -> int:
    """Exclusive upper bound on ids enclosed by an activation (-1: none)."""
    if isinstance(term, ExitedAt):
        return term.event_id
    if isinstance(term, KilledByUncaught):
        return term.event_id + 1
    return -1


_bounds_cache: weakref.WeakKeyDictionary = weakref.WeakKeyDictionary()


def _thread_bounds(s: TraceStore, thread: str) -> list[int]:
    per_store = _bounds_cache.setdefault(s, {})
    bounds = per_store.get(thread)
    if bounds is None:
        bounds = [_bound(terminator_of(s, c, thread)) for c in s.calls_in_thread(thread)]
        per_store[thread] = bounds
    return bounds


def _enclosing_ids(s: TraceStore, thread: str, event_id: int) -> list[int]:
    calls = s.calls_in_thread(thread)
    k = bisect.bisect_left(calls, event_id)
    bounds = _thread_bounds(s, thread)
    return [c for c, b in zip(calls[:k], bounds[:k]) if event_id < b]


def any_enclosing_method(s: TraceStore, event_id: int) -> list[CallSpan]:
    """Every activation enclosing ``event_id`` in its thread, outermost first."""
    e = s.get(event_id)
    return [
        CallSpan(c, terminator_of(s, c, e.thread))
        for c in _enclosing_ids(s, e.thread, event_id)
    ]


def innermost_enclosing(s: TraceStore, event_id: int) -> Optional[CallSpan]:
    spans = any_enclosing_method(s, event_id)
    return spans[-1] if spans else None


def call_chain(s: TraceStore, event_id: int) -> list[int]:
    e = s.get(event_id)
    return _enclosing_ids(s, e.thread, event_id)


def full_detail_call_chain(s: TraceStore, event_id: int) -> list[TraceEvent]:
    """The enclosing call events, most recent first."""
    return s.by_ids(reversed(call_chain(s, event_id)))


def where(s: TraceStore, thread: str, p: EventPattern) -> TraceEvent:
    """Enclosing call of the first event in ``thread`` matching ``p``."""
    found = s.scan(replace(p, thread=thread))
    if not found:
        raise NoMatch(f"no event in thread {thread!r} matches the pattern")
    first = found[0]
    chain = full_detail_call_chain(s, first.id)
    if not chain:
        raise NoEnclosingEnvironment(first.id)
    return chain[0]


UNCAUGHT_EXCEPTION = EventPattern(kind="exception", catch=UNCAUGHT)


def where_exception_is_thrown(s: TraceStore, thread: str) -> TraceEvent:
    return where(s, thread, UNCAUGHT_EXCEPTION)


# -- field histories and object state ----------------------------------------


def _field_history(s: TraceStore, start: int, end: int, subject: Subject, field: str) -> list[FieldSample]:
    if start > end:
        return []
    pattern = EventPattern(kind="setfield", subject=subject, name=field, id_lo=start, id_hi=end)
    return [FieldSample(e.id, field, e.event.value) for e in s.scan(pattern)]


def instance_field_history(
    s: TraceStore, start: int, end: int, obj: ObjectRef, field: str
) -> list[FieldSample]:
    return _field_history(s, start, end, obj, field)


def class_field_history(
    s: TraceStore, start: int, end: int, class_name: str, field: str
) -> list[FieldSample]:
    return _field_history(s, start, end, ClassRef(class_name), field)


def instantiation_of(s: TraceStore, obj: ObjectRef) -> Optional[TraceEvent]:
    found = s.scan(EventPattern(kind="methodcall", subject=obj, name=CONSTRUCTOR))
    return found[0] if found else None


def member_fields(s: TraceStore, class_name: str) -> Optional[MemberFields]:
    found = s.scan(EventPattern(kind="memberfields", class_name=class_name))
    return found[0].event if found else None


def object_state(s: TraceStore, end: int, obj: ObjectRef, *, strict: bool = False) -> ObjectState:
    """Last write to each declared field between instantiation and ``end``.

    Fields never written in that range come back as UNASSIGNED; with
    ``strict=True`` they raise UnassignedField instead.
    """
    init = instantiation_of(s, obj)
    if init is None or init.id > end:
        raise NoInstantiation(f"{obj.class_name}#{obj.object_id} is not instantiated by event {end}")
    decls = member_fields(s, obj.class_name)
    if decls is None:
        raise NoMemberFields(f"no member fields recorded for class {obj.class_name}")
    samples = []
    for decl in decls.fields:
        if decl.kind is FieldKind.CLASS:
            history = class_field_history(s, init.id, end, obj.class_name, decl.name)
        else:
            history = instance_field_history(s, init.id, end, obj, decl.name)
        if history:
            samples.append(history[-1])
        elif strict:
            raise UnassignedField(f"field {decl.name} of {obj.class_name}#{obj.object_id} has no value")
        else:
            samples.append(FieldSample(None, decl.name, UNASSIGNED))
    return ObjectState(obj, end, tuple(samples), instantiated_at=init.id)


def all_instances(s: TraceStore, class_name: str, at: int) -> list[ObjectState]:
    seen: list[ObjectRef] = []
    pattern = EventPattern(kind="methodcall", name=CONSTRUCTOR, class_name=class_name, id_hi=at)
    for e in s.scan(pattern):
        subj = e.event.subject
        if isinstance(subj, ObjectRef) and subj not in seen:
            seen.append(subj)
    states = []
    for obj in seen:
        try:
            states.append(object_state(s, at, obj))
        except NoMemberFields:
            init = instantiation_of(s, obj)
            states.append(ObjectState(obj, at, (), init.id, missing_member_fields=True))
    return states


# -- method state ------------------------------------------------------------


def _completed_pairs(s: TraceStore, thread: str, span: CallSpan) -> list[tuple[int, int]]:
    """(call, exit) ids of finished activations anywhere inside ``span``."""
    bound = _bound(span.terminator)
    calls = s.calls_in_thread(thread)
    lo = bisect.bisect_right(calls, span.call_id)
    hi = bisect.bisect_left(calls, bound) if bound >= 0 else lo
    pairs = []
    for c in calls[lo:hi]:
        x = s.exit_of(c)
        if x is not None and span.call_id < x < bound:
            pairs.append((c, x))
    return pairs


def _enclosing_span_or_raise(s: TraceStore, event_id: int) -> tuple[TraceEvent, CallSpan]:
    e = s.get(event_id)
    span = innermost_enclosing(s, event_id)
    if span is None:
        raise NoEnclosingEnvironment(event_id)
    return e, span


def pre_event_called_methods(s: TraceStore, event_id: int) -> list[tuple[TraceEvent, TraceEvent]]:
    """Calls completed before ``event_id`` within its enclosing activation, at any depth."""
    e, span = _enclosing_span_or_raise(s, event_id)
    return [
        (s.get(c), s.get(x))
        for c, x in _completed_pairs(s, e.thread, span)
        if c < event_id and x < event_id
    ]


def post_event_called_methods(s: TraceStore, event_id: int) -> list[tuple[TraceEvent, TraceEvent]]:
    e, span = _enclosing_span_or_raise(s, event_id)
    return [
        (s.get(c), s.get(x))
        for c, x in _completed_pairs(s, e.thread, span)
        if c > event_id and x > event_id
    ]


def local_variables_at(s: TraceStore, event_id: int) -> list[tuple[str, Value]]:
    """Locals of the latest step at or before ``event_id`` in the same activation."""
    e = s.get(event_id)
    chain = _enclosing_ids(s, e.thread, event_id)
    inner = chain[-1] if chain else None
    floor = -1 if inner is None else inner
    ids = s.thread_ids(e.thread)
    i = bisect.bisect_right(ids, event_id) - 1
    while i >= 0 and ids[i] > floor:
        ev = s.get(ids[i]).event
        if isinstance(ev, MethodExit) and ev.call_id > floor:
            # everything back to that call ran inside a nested activation
            i = bisect.bisect_left(ids, ev.call_id) - 1
            continue
        if isinstance(ev, Step):
            st_chain = _enclosing_ids(s, e.thread, ids[i])
            if (st_chain[-1] if st_chain else None) == inner:
                return list(ev.locals)
        i -= 1
    return []


# -- histories ---------------------------------------------------------------


def local_variable_history(
    s: TraceStore, start: int, end: int, thread: str, name: str
) -> list[FieldSample]:
    if start > end:
        return []
    out = []
    for st in s.scan(EventPattern(kind="step", thread=thread, id_lo=start, id_hi=end)):
        for var, value in st.event.locals:
            if var == name:
                out.append(FieldSample(st.id, name, value))
                break
    return out


def argument_history(
    s: TraceStore, method: str, subject: Optional[Subject] = None
) -> list[tuple[int, tuple[Value, ...]]]:
    found = s.scan(EventPattern(kind="methodcall", name=method, subject=subject))
    return [(e.id, e.event.args) for e in found]


def return_value_history(
    s: TraceStore, method: str, subject: Optional[Subject] = None
) -> list[tuple[int, Value]]:
    found = s.scan(EventPattern(kind="methodexit", name=method, subject=subject))
    return [(e.id, e.event.return_value) for e in found]


def data_structure_history(
    s: TraceStore, start: int, end: int, at: Optional[Location] = None
) -> list[tuple[int, tuple[Value, ...]]]:
    if start > end:
        return []
    found = s.scan(EventPattern(kind="datastructure", location=at, id_lo=start, id_hi=end))
    return [(e.id, e.event.contents) for e in found]


def thread_status(s: TraceStore) -> dict[str, ThreadStatus]:
    dead = {e.thread for e in s.scan(EventPattern(kind="threaddeath"))}
    return {
        t: ThreadStatus.EXITED if t in dead else ThreadStatus.RUNNING
        for t in sorted(s.threads)
    }


# -- call tree ---------------------------------------------------------------


def call_tree(s: TraceStore, call_id: int) -> CallTree:
    """Tree of activations rooted at ``call_id``; children are direct callees."""
    root = s.get(call_id)
    if not isinstance(root.event, MethodCall):
        raise NotAMethodCall(call_id)
    thread = root.thread
    calls = s.calls_in_thread(thread)
    bounds = _thread_bounds(s, thread)
    i = bisect.bisect_left(calls, call_id)
    root_bound = bounds[i]

    children: dict[int, list[int]] = {call_id: []}
    # open activations, innermost last; an entry leaves once ids pass its bound
    stack = [(call_id, root_bound)]
    for c, b in zip(calls[i + 1 :], bounds[i + 1 :]):
        if c >= root_bound:
            break
        while stack and c >= stack[-1][1]:
            stack.pop()
        children[stack[-1][0]].append(c)
        children[c] = []
        stack.append((c, b))

    def build(cid: int) -> CallTree:
        return CallTree(
            s.get(cid),
            terminator_of(s, cid, thread),
            tuple(build(k) for k in children[cid]),
        )

    return build(call_id)


# -- yes/no questions --------------------------------------------------------


def exists(s: TraceStore, q: ExistenceQuery) -> bool:
    if isinstance(q, LineExecuted):
        p = EventPattern(location=q.location)
    elif isinstance(q, MethodCalled):
        p = EventPattern(kind="methodcall", name=q.name, subject=q.subject)
    elif isinstance(q, FieldAssigned):
        p = EventPattern(kind="setfield", name=q.field, value=q.value, subject=q.subject)
    elif isinstance(q, InstanceExists):
        p = EventPattern(kind="methodcall", name=CONSTRUCTOR, class_name=q.class_name)
    elif isinstance(q, ExceptionCaught):
        return any(
            not e.event.uncaught
            for e in s.scan(EventPattern(kind="exception", class_name=q.class_name))
        )
    elif isinstance(q, ThreadRunning):
        return thread_status(s).get(q.thread) is ThreadStatus.RUNNING
    elif isinstance(q, ThreadExited):
        return thread_status(s).get(q.thread) is ThreadStatus.EXITED
    else:
        raise TypeError(f"not an existence query: {q!r}")
    return bool(s.scan(p))
