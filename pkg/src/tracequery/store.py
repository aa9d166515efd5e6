"""Indexed, immutable event database."""

from __future__ import annotations

import bisect
import hashlib
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Optional, Sequence

from .errors import DanglingExit, DuplicateId, ExitMismatch, NonMonotonicId, NotFound
from .model import (
    ExceptionEvent,
    EventPattern,
    MethodCall,
    MethodExit,
    TraceEvent,
    Var,
    event_subject,
    event_name,
    matches,
)


@dataclass(frozen=True)
class HistoryInterval:
    """Inclusive window ``lo <= id <= hi`` over event ids."""

    lo: int
    hi: int

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise ValueError(f"interval lower bound {self.lo} exceeds upper bound {self.hi}")

    def __contains__(self, event_id: int) -> bool:
        return self.lo <= event_id <= self.hi

    def intersect(self, other: HistoryInterval) -> Optional[HistoryInterval]:
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        return HistoryInterval(lo, hi) if lo <= hi else None


def _concrete(slot) -> bool:
    return slot is not None and not isinstance(slot, Var)


class TraceStore:
    """An immutable, indexed view of one trace (or a window of it).

    Use :func:`load` or :func:`restrict` rather than the constructor.
    ``window`` records the interval a restricted store was cut to.
    """

    def __init__(
        self,
        events: Sequence[TraceEvent],
        window: Optional[HistoryInterval] = None,
        *,
        validate: bool = True,
    ):
        self._events: tuple[TraceEvent, ...] = tuple(events)
        self.window = window
        self._ids: list[int] = [e.id for e in self._events]
        self._pos: dict[int, int] = {}
        self._by_thread: dict[str, list[int]] = {}
        self._by_kind: dict[str, list[int]] = {}
        self._by_subject: dict[object, list[int]] = {}
        self._by_name: dict[str, list[int]] = {}
        self._exit_of: dict[int, int] = {}
        self._calls_by_thread: dict[str, list[int]] = {}
        self._uncaught_by_thread: dict[str, list[int]] = {}

        prev: Optional[int] = None
        for pos, e in enumerate(self._events):
            if e.id in self._pos:
                raise DuplicateId(e.id)
            if prev is not None and e.id <= prev:
                raise NonMonotonicId(e.id)
            prev = e.id
            self._pos[e.id] = pos
            self._by_thread.setdefault(e.thread, []).append(e.id)
            self._by_kind.setdefault(e.kind, []).append(e.id)
            ev = e.event
            subj = event_subject(ev)
            if subj is not None:
                self._by_subject.setdefault(subj, []).append(e.id)
            name = event_name(ev)
            if name is not None:
                self._by_name.setdefault(name, []).append(e.id)
            if isinstance(ev, MethodCall):
                self._calls_by_thread.setdefault(e.thread, []).append(e.id)
            elif isinstance(ev, MethodExit):
                if validate:
                    self._check_exit(e)
                # first exit wins if an unvalidated window carries duplicates
                self._exit_of.setdefault(ev.call_id, e.id)
            elif isinstance(ev, ExceptionEvent) and ev.uncaught:
                self._uncaught_by_thread.setdefault(e.thread, []).append(e.id)

    def _check_exit(self, e: TraceEvent) -> None:
        ev = e.event
        pos = self._pos.get(ev.call_id)
        if pos is None:
            raise DanglingExit(ev.call_id, e.id)
        call = self._events[pos]
        if not isinstance(call.event, MethodCall):
            raise DanglingExit(ev.call_id, e.id)
        if call.thread != e.thread:
            raise ExitMismatch(ev.call_id, e.id, "different thread")
        if call.event.subject != ev.subject or call.event.name != ev.name:
            raise ExitMismatch(ev.call_id, e.id, "subject or method name differs")
        if ev.call_id in self._exit_of:
            raise ExitMismatch(ev.call_id, e.id, f"call already exited at {self._exit_of[ev.call_id]}")

    # -- basic access --------------------------------------------------------

    def __len__(self) -> int:
        return len(self._events)

    def __iter__(self):
        return iter(self._events)

    def __contains__(self, event_id: int) -> bool:
        return event_id in self._pos

    @property
    def events(self) -> tuple[TraceEvent, ...]:
        return self._events

    @property
    def ids(self) -> list[int]:
        return list(self._ids)

    @property
    def threads(self) -> list[str]:
        return list(self._by_thread)

    def get(self, event_id: int) -> TraceEvent:
        try:
            return self._events[self._pos[event_id]]
        except KeyError:
            raise NotFound(event_id) from None

    def by_ids(self, ids: Iterable[int]) -> list[TraceEvent]:
        return [self._events[self._pos[i]] for i in ids]

    # -- index lookups used by the query engine ------------------------------

    def thread_ids(self, thread: str) -> list[int]:
        return self._by_thread.get(thread, [])

    def kind_ids(self, kind: str) -> list[int]:
        return self._by_kind.get(kind, [])

    def calls_in_thread(self, thread: str) -> list[int]:
        """Ids of method calls in ``thread``, ascending."""
        return self._calls_by_thread.get(thread, [])

    def exit_of(self, call_id: int) -> Optional[int]:
        return self._exit_of.get(call_id)

    def last_uncaught(self, thread: str) -> Optional[int]:
        found = self._uncaught_by_thread.get(thread)
        return found[-1] if found else None

    # -- scanning ------------------------------------------------------------

    def _candidates(self, p: EventPattern) -> Optional[list[int]]:
        lists = []
        if _concrete(p.id):
            return [p.id] if p.id in self._pos else []
        if _concrete(p.thread):
            lists.append(self._by_thread.get(p.thread, []))
        if _concrete(p.kind):
            lists.append(self._by_kind.get(p.kind, []))
        if _concrete(p.subject):
            lists.append(self._by_subject.get(p.subject, []))
        if _concrete(p.name):
            lists.append(self._by_name.get(p.name, []))
        if _concrete(p.call_id):
            exit_id = self._exit_of.get(p.call_id)
            lists.append([exit_id] if exit_id is not None else [])
        if not lists:
            return None
        return min(lists, key=len)

    def scan(self, p: EventPattern) -> list[TraceEvent]:
        """All events matching ``p``, ascending by id."""
        candidates = self._candidates(p)
        lo, hi = p.id_lo, p.id_hi
        if candidates is None:
            candidates = self._ids
        if lo is not None or hi is not None:
            start = bisect.bisect_left(candidates, lo) if lo is not None else 0
            stop = bisect.bisect_right(candidates, hi) if hi is not None else len(candidates)
            candidates = candidates[start:stop]
        events = self._events
        pos = self._pos
        return [events[pos[i]] for i in candidates if matches(p, events[pos[i]])]

    # -- identity ------------------------------------------------------------

    @cached_property
    def content_hash(self) -> str:
        """SHA-256 of the canonical serialized events."""
        from .jel import serialize_trace

        return hashlib.sha256(serialize_trace(self._events).encode("utf-8")).hexdigest()


def load(events: Iterable[TraceEvent]) -> TraceStore:
    """Build a validated store.

    Raises DuplicateId, NonMonotonicId, DanglingExit or ExitMismatch. A call
    without an exit is fine (it may have been killed by an uncaught exception).
    """
    return TraceStore(list(events))


def restrict(s: TraceStore, iv: HistoryInterval) -> TraceStore:
    """Keep events with ``iv.lo <= id <= iv.hi``; ids are not renumbered.

    Exit validation is skipped because a window may cut a call from its exit.
    """
    ids = s._ids
    start = bisect.bisect_left(ids, iv.lo)
    stop = bisect.bisect_right(ids, iv.hi)
    window = iv if s.window is None else (s.window.intersect(iv) or iv)
    return TraceStore(s.events[start:stop], window, validate=False)


def get(s: TraceStore, event_id: int) -> TraceEvent:
    return s.get(event_id)


def scan(s: TraceStore, p: EventPattern) -> list[TraceEvent]:
    return s.scan(p)
