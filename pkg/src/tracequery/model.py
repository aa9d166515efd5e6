"""Domain types for recorded execution events.

Every type here is a frozen dataclass, so equality is structural and
instances can be shared freely between threads.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, fields
from typing import Any, Optional, Union

RESERVED_ATOMS = frozenset({"null", "void"})


@dataclass(frozen=True)
class Location:
    file: str
    line: int

    def __post_init__(self) -> None:
        if not self.file:
            raise ValueError("location file must be non-empty")
        if self.line < 1:
            raise ValueError(f"location line must be >= 1, got {self.line}")


@dataclass(frozen=True)
class ClassRef:
    class_name: str

    def __post_init__(self) -> None:
        if not self.class_name:
            raise ValueError("class name must be non-empty")


@dataclass(frozen=True)
class ObjectRef:
    class_name: str
    object_id: int

    def __post_init__(self) -> None:
        if not self.class_name:
            raise ValueError("class name must be non-empty")
        if self.object_id < 0:
            raise ValueError(f"object id must be >= 0, got {self.object_id}")


Subject = Union[ClassRef, ObjectRef]


@dataclass(frozen=True)
class Null:
    def __repr__(self) -> str:
        return "NULL"


@dataclass(frozen=True)
class Void:
    def __repr__(self) -> str:
        return "VOID"


NULL = Null()
VOID = Void()


@dataclass(frozen=True)
class Scalar:
    """A primitive value kept as its verbatim source token."""

    text: str

    def __post_init__(self) -> None:
        if self.text in RESERVED_ATOMS:
            raise ValueError(f"{self.text!r} is reserved; use NULL/VOID")


# Object and class references double as values (an argument can be an object).
Value = Union[Null, Void, Scalar, ObjectRef, ClassRef]


class FieldKind(enum.Enum):
    CLASS = "cf"
    INSTANCE = "of"


@dataclass(frozen=True)
class FieldDecl:
    kind: FieldKind
    name: str

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("field name must be non-empty")


@dataclass(frozen=True)
class Uncaught:
    def __repr__(self) -> str:
        return "UNCAUGHT"


UNCAUGHT = Uncaught()


# -- execution event payloads ------------------------------------------------


@dataclass(frozen=True)
class MethodCall:
    location: Location
    subject: Subject
    name: str
    args: tuple[Value, ...] = ()

    kind = "methodcall"


@dataclass(frozen=True)
class MethodExit:
    call_id: int
    location: Location
    subject: Subject
    name: str
    return_value: Value

    kind = "methodexit"


@dataclass(frozen=True)
class SetField:
    location: Location
    subject: Subject
    field_name: str
    value: Value

    kind = "setfield"


@dataclass(frozen=True)
class DataStructure:
    location: Location
    contents: tuple[Value, ...] = ()

    kind = "datastructure"


@dataclass(frozen=True)
class Step:
    location: Location
    locals: tuple[tuple[str, Value], ...] = ()

    kind = "step"


@dataclass(frozen=True)
class ExceptionEvent:
    location: Location
    instance: ObjectRef
    message: Value
    catch: Union[Location, Uncaught]

    kind = "exception"

    @property
    def uncaught(self) -> bool:
        return isinstance(self.catch, Uncaught)


@dataclass(frozen=True)
class ThreadStart:
    group: str

    kind = "threadstart"


@dataclass(frozen=True)
class ThreadDeath:
    group: str

    kind = "threaddeath"


@dataclass(frozen=True)
class MemberFields:
    class_name: str
    fields: tuple[FieldDecl, ...] = ()

    kind = "memberfields"


ExecutionEvent = Union[
    MethodCall,
    MethodExit,
    SetField,
    DataStructure,
    Step,
    ExceptionEvent,
    ThreadStart,
    ThreadDeath,
    MemberFields,
]

EVENT_KINDS: dict[str, type] = {
    cls.kind: cls
    for cls in (
        MethodCall,
        MethodExit,
        SetField,
        DataStructure,
        Step,
        ExceptionEvent,
        ThreadStart,
        ThreadDeath,
        MemberFields,
    )
}

CONSTRUCTOR = "<init>"


@dataclass(frozen=True)
class TraceEvent:
    id: int
    thread: str
    event: ExecutionEvent

    def __post_init__(self) -> None:
        if self.id < 0:
            raise ValueError(f"event id must be >= 0, got {self.id}")
        if not self.thread:
            raise ValueError("thread name must be non-empty")

    @property
    def kind(self) -> str:
        return self.event.kind


# -- accessors shared by pattern matching and indexing -----------------------


def event_subject(ev: ExecutionEvent) -> Optional[Subject]:
    """The instance or class an event acts on; exceptions report their instance."""
    if isinstance(ev, (MethodCall, MethodExit, SetField)):
        return ev.subject
    if isinstance(ev, ExceptionEvent):
        return ev.instance
    return None


def event_class_name(ev: ExecutionEvent) -> Optional[str]:
    if isinstance(ev, MemberFields):
        return ev.class_name
    subj = event_subject(ev)
    return subj.class_name if subj is not None else None


def event_name(ev: ExecutionEvent) -> Optional[str]:
    """Method name for calls/exits, field name for field writes."""
    if isinstance(ev, (MethodCall, MethodExit)):
        return ev.name
    if isinstance(ev, SetField):
        return ev.field_name
    return None


def event_value(ev: ExecutionEvent) -> Optional[Value]:
    if isinstance(ev, MethodExit):
        return ev.return_value
    if isinstance(ev, SetField):
        return ev.value
    if isinstance(ev, ExceptionEvent):
        return ev.message
    return None


def event_location(ev: ExecutionEvent) -> Optional[Location]:
    return getattr(ev, "location", None)


# -- patterns ----------------------------------------------------------------


@dataclass(frozen=True)
class Var:
    """A named slot: binds on first use, must be equal on later uses."""

    name: str


_MISSING = object()


@dataclass(frozen=True)
class EventPattern:
    """Conjunction of optional constraints over a TraceEvent.

    ``None`` means wildcard. Any constraint may instead be a :class:`Var`,
    in which case :func:`match` binds or checks it.
    """

    kind: Any = None
    thread: Any = None
    id: Any = None
    id_lo: Optional[int] = None
    id_hi: Optional[int] = None
    subject: Any = None
    class_name: Any = None
    name: Any = None
    args: Optional[tuple[Any, ...]] = None
    arg_count: Any = None
    value: Any = None
    location: Any = None
    call_id: Any = None
    catch: Any = None

    def __post_init__(self) -> None:
        # matching is hot in scans; precompute the active constraints once
        active = {
            f.name: getattr(self, f.name)
            for f in fields(self)
            if getattr(self, f.name) is not None
        }
        object.__setattr__(self, "_active", active)

    def constraints(self) -> dict[str, Any]:
        """The non-wildcard constraints, in declaration order."""
        return dict(self._active)

    def variables(self) -> list[str]:
        names: list[str] = []
        for v in self.constraints().values():
            items = v if isinstance(v, tuple) else (v,)
            for item in items:
                if isinstance(item, Var) and item.name not in names:
                    names.append(item.name)
        return names


def _unify(slot: Any, actual: Any, bindings: dict[str, Any]) -> bool:
    if isinstance(slot, Var):
        bound = bindings.get(slot.name, _MISSING)
        if bound is _MISSING:
            bindings[slot.name] = actual
            return True
        return bound == actual
    return slot == actual


def _project(name: str, e: TraceEvent) -> Any:
    ev = e.event
    if name == "kind":
        return ev.kind
    if name == "thread":
        return e.thread
    if name == "id":
        return e.id
    if name == "subject":
        return event_subject(ev)
    if name == "class_name":
        return event_class_name(ev)
    if name == "name":
        return event_name(ev)
    if name == "arg_count":
        return len(ev.args) if isinstance(ev, MethodCall) else None
    if name == "value":
        return event_value(ev)
    if name == "location":
        return event_location(ev)
    if name == "call_id":
        return ev.call_id if isinstance(ev, MethodExit) else None
    if name == "catch":
        return ev.catch if isinstance(ev, ExceptionEvent) else None
    raise KeyError(name)


def match(
    p: EventPattern, e: TraceEvent, bindings: Optional[dict[str, Any]] = None
) -> Optional[dict[str, Any]]:
    """Match ``e`` against ``p``; return the extended bindings or None."""
    out = dict(bindings) if bindings else {}
    for name, slot in p._active.items():
        if name == "id_lo":
            if e.id < slot:
                return None
            continue
        if name == "id_hi":
            if e.id > slot:
                return None
            continue
        if name == "args":
            if not isinstance(e.event, MethodCall) or len(e.event.args) != len(slot):
                return None
            for s, a in zip(slot, e.event.args):
                if not _unify(s, a, out):
                    return None
            continue
        actual = _project(name, e)
        if actual is None:
            # the event kind has no such attribute
            return None
        if not _unify(slot, actual, out):
            return None
    return out


def matches(p: EventPattern, e: TraceEvent) -> bool:
    return match(p, e) is not None
