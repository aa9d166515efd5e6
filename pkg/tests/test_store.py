from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tracequery.errors import DanglingExit, DuplicateId, ExitMismatch, NonMonotonicId, NotFound
from tracequery.gen import GenConfig, generate
from tracequery.jel import parse_trace
from tracequery.model import (
    NULL,
    EventPattern,
    ObjectRef,
    event_location,
    event_name,
    event_subject,
    event_value,
    matches,
)
from tracequery.store import HistoryInterval, get, load, restrict, scan


def trace(*lines: str):
    return parse_trace("\n".join(lines))


CALL = "event({i}, '{t}', methodcall(l('A.java', 1), o('A', 1), 'm', []))."
EXIT = "event({i}, '{t}', methodexit({c}, l('A.java', 1), o('A', 1), '{n}', 'void'))."


def test_load_and_get(npe):
    assert len(npe) == 17
    assert get(npe, 14).event.name == "mN"
    assert 16 in npe and 17 not in npe
    with pytest.raises(NotFound):
        get(npe, 99)


def test_duplicate_id_rejected():
    with pytest.raises(DuplicateId):
        load(trace(CALL.format(i=1, t="a"), CALL.format(i=1, t="a")))


def test_non_monotonic_id_rejected():
    with pytest.raises(NonMonotonicId):
        load(trace(CALL.format(i=3, t="a"), CALL.format(i=2, t="a")))


def test_dangling_exit_rejected():
    with pytest.raises(DanglingExit):
        load(trace(EXIT.format(i=2, t="a", c=1, n="m")))
    with pytest.raises(DanglingExit):
        load(trace("event(1, 'a', threadstart('a')).", EXIT.format(i=2, t="a", c=1, n="m")))


def test_exit_mismatch_rejected():
    with pytest.raises(ExitMismatch):
        load(trace(CALL.format(i=1, t="a"), EXIT.format(i=2, t="b", c=1, n="m")))
    with pytest.raises(ExitMismatch):
        load(trace(CALL.format(i=1, t="a"), EXIT.format(i=2, t="a", c=1, n="other")))
    with pytest.raises(ExitMismatch):
        load(trace(CALL.format(i=1, t="a"), EXIT.format(i=2, t="a", c=1, n="m"),
                   EXIT.format(i=3, t="a", c=1, n="m")))


def test_call_without_exit_is_allowed():
    s = load(trace(CALL.format(i=1, t="a")))
    assert s.exit_of(1) is None


def test_restrict_keeps_ids_and_records_window(npe):
    w = restrict(npe, HistoryInterval(5, 10))
    assert w.ids == [5, 6, 7, 8, 9, 10]
    assert w.window == HistoryInterval(5, 10)
    ww = restrict(w, HistoryInterval(8, 40))
    assert ww.ids == [8, 9, 10]
    assert ww.window == HistoryInterval(8, 10)
    with pytest.raises(NotFound):
        w.get(4)


def test_interval_validation():
    with pytest.raises(ValueError):
        HistoryInterval(5, 4)
    assert 4 in HistoryInterval(4, 4)
    assert HistoryInterval(0, 3).intersect(HistoryInterval(5, 9)) is None


def test_scan_uses_indexes_but_returns_all_matches(npe):
    calls = scan(npe, EventPattern(kind="methodcall", subject=ObjectRef("Example", 643)))
    assert [e.id for e in calls] == [2, 4, 13, 14]
    assert [e.id for e in scan(npe, EventPattern(kind="step", id_lo=5, id_hi=11))] == [7, 8, 11]
    assert [e.id for e in scan(npe, EventPattern(name="doSomeThing"))] == [9, 10]
    assert [e.id for e in scan(npe, EventPattern(call_id=9))] == [10]
    assert [e.id for e in scan(npe, EventPattern(value=NULL))] == [10, 15]
    assert scan(npe, EventPattern(thread="other")) == []


def test_content_hash_tracks_contents(npe_events):
    a, b = load(npe_events), load(list(npe_events))
    assert a.content_hash == b.content_hash
    assert load(npe_events[:-1]).content_hash != a.content_hash


def _random_pattern(rng: random.Random, events) -> EventPattern:
    e = rng.choice(events)
    ev = e.event
    options = {"kind": e.kind, "thread": e.thread}
    for attr in ("subject", "name", "value", "location"):
        getter = {"subject": event_subject, "name": event_name,
                  "value": event_value, "location": event_location}[attr]
        if getter(ev) is not None:
            options[attr] = getter(ev)
    chosen = {k: v for k, v in options.items() if rng.random() < 0.5}
    if rng.random() < 0.4:
        lo = rng.randint(0, events[-1].id)
        chosen["id_lo"] = lo
        chosen["id_hi"] = rng.randint(lo, events[-1].id)
    return EventPattern(**chosen)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(1, 10**6))
def test_scan_agrees_with_linear_filter(seed):
    events, _ = generate(GenConfig(seed=seed, threads=2, max_events=250))
    s = load(events)
    rng = random.Random(seed)
    for _ in range(25):
        p = _random_pattern(rng, events)
        assert scan(s, p) == [e for e in events if matches(p, e)]


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(1, 10**6), data=st.data())
def test_restrict_equals_filter(seed, data):
    events, _ = generate(GenConfig(seed=seed, threads=3, max_events=200))
    s = load(events)
    lo = data.draw(st.integers(0, events[-1].id))
    hi = data.draw(st.integers(lo, events[-1].id + 5))
    w = restrict(s, HistoryInterval(lo, hi))
    assert list(w) == [e for e in events if lo <= e.id <= hi]
