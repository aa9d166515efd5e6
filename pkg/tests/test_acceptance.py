"""Acceptance criteria, one test each; every test prints a PASS/FAIL line."""

from __future__ import annotations

import json
import random
import time

import pytest

from oracle_check import config_for_seed, mismatches
from tracequery import (
    NULL,
    FailedAt,
    HistoryInterval,
    Location,
    Matched,
    ObjectRef,
    SavedQuery,
    Session,
    generate,
    load,
    parse_scenario,
    parse_trace,
    restrict,
    sample_text,
    serialize_trace,
)
from tracequery import queries as q
from tracequery.scenario import verify_match


@pytest.fixture
def report(capsys):
    def emit(criterion: str, ok: bool, detail: str = "") -> None:
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {criterion}" + (f" ({detail})" if detail else ""))
        assert ok, f"{criterion}: {detail}"

    return emit


NPE_KINDS = [
    (0, "threadstart"), (1, "methodcall"), (2, "methodcall"), (3, "step"), (4, "methodcall"),
    (5, "methodcall"), (6, "methodexit"), (7, "step"), (8, "step"), (9, "methodcall"),
    (10, "methodexit"), (11, "step"), (12, "step"), (13, "methodcall"), (14, "methodcall"),
    (15, "exception"), (16, "threaddeath"),
]


def test_golden_trace_parses_and_round_trips(report):
    text = sample_text("traveling_null_pointer.jel")
    start = time.perf_counter()
    events = parse_trace(text)
    again = parse_trace(serialize_trace(events))
    elapsed = time.perf_counter() - start
    ok = (len(events) == 17 and [(e.id, e.kind) for e in events] == NPE_KINDS
          and again == events and elapsed < 1.0)
    report("1 golden trace: 17 events, ids and kinds, round trip, < 1 s", ok, f"{elapsed:.3f} s")


def test_where_exception_is_thrown(report, npe):
    e = q.where_exception_is_thrown(npe, "main")
    ev = e.event
    ok = (e.id == 14 and e.kind == "methodcall" and ev.location == Location("Example.java", 14)
          and ev.subject == ObjectRef("Example", 643) and ev.name == "mN" and ev.args == (NULL,))
    report("2 where-exception(main) is event 14, mN on o(Example,643) with [null]", ok, repr(e))


def test_full_detail_call_chain(report, npe):
    chain = [e.id for e in q.full_detail_call_chain(npe, 15)]
    ok = chain[:3] == [14, 13, 4] and chain == [14, 13, 4, 2, 1]
    report("3 full-detail call chain of 15 is [14, 13, 4, 2, 1]", ok, repr(chain))


def test_pre_event_called_methods(report, npe):
    pairs = q.pre_event_called_methods(npe, 13)
    ids = [(c.id, x.id) for c, x in pairs]
    call, exit_ = pairs[1] if len(pairs) == 2 else (None, None)
    ok = (ids == [(5, 6), (9, 10)] and call.event.name == "doSomeThing"
          and exit_.event.name == "doSomeThing" and exit_.event.return_value == NULL)
    report("4 pre-called(13) is [(5,6), (9,10)], doSomeThing returning null", ok, repr(ids))


def test_login_scenario(report):
    spec = parse_scenario(sample_text("login.scn"))
    good = load(parse_trace(sample_text("login_ok.jel")))
    bad = load(parse_trace(sample_text("login_bad.jel")))
    from tracequery import run_scenario

    hit, miss = run_scenario(good, spec), run_scenario(bad, spec)
    ok = isinstance(hit, Matched) and len(hit.matched_ids) == len(spec.steps) == 7
    if ok:
        where = dict(zip((s.label for s in spec.steps), hit.matched_ids))
        ok = verify_match(good, spec, hit.matched_ids) and all(
            where[s.label] > where[ref] for s in spec.steps for ref in s.after)
    ok = ok and isinstance(miss, FailedAt) and miss.label == "verify-exit-true"
    report("5 login scenario matches; false verify fails at verify-exit-true", ok, f"{hit!r} / {miss!r}")


def test_oracle_equivalence(report):
    start = time.perf_counter()
    bad: list[str] = []
    events = 0
    for seed in range(1, 1001):
        cfg = config_for_seed(seed)
        assert cfg.max_events <= 5000
        trace, gt = generate(cfg)
        events += len(trace)
        bad += [f"seed {seed}: {m}" for m in mismatches(load(trace), gt, random.Random(seed))]
    elapsed = time.perf_counter() - start
    ok = not bad and elapsed <= 60.0
    report("6 engine equals replay oracle on seeds 1..1000, <= 60 s", ok,
           f"{len(bad)} mismatches over {events} events, {elapsed:.1f} s" + (f"; first: {bad[0]}" if bad else ""))


def test_existence_battery(report, npe):
    answers = {
        "MethodCalled(doSomeThing)": q.exists(npe, q.MethodCalled("doSomeThing")),
        "ExceptionCaught(java.lang.NullPointerException)": q.exists(
            npe, q.ExceptionCaught("java.lang.NullPointerException")),
        "ThreadExited(main)": q.exists(npe, q.ThreadExited("main")),
        "InstanceExists(FarAWayClass)": q.exists(npe, q.InstanceExists("FarAWayClass")),
        "FieldAssigned(any)": q.exists(npe, q.FieldAssigned()),
    }
    want = [True, False, True, True, False]
    report("7 existence battery on the sample trace", list(answers.values()) == want, repr(answers))


def test_caching_contract(report, npe):
    session = Session()
    session.save_query(SavedQuery.from_expression("chain", "call-chain 15"))
    first = session.run_saved("chain", npe)
    second = session.run_saved("chain", npe)
    once = session.evaluation_count("chain") == 1
    same = json.dumps(first.to_json()) == json.dumps(second.to_json())
    session.run_saved("chain", restrict(npe, HistoryInterval(13, 16)))
    again = session.evaluation_count("chain") == 2
    report("8 saved query evaluates once per store and again for a new interval",
           once and same and again, f"once={once} identical={same} re-evaluated={again}")


def test_generated_round_trip(report):
    diffs = 0
    elapsed = 0.0
    for seed in range(1, 501):
        events = generate(config_for_seed(seed))[0]
        start = time.perf_counter()
        parsed = parse_trace(serialize_trace(events))
        if parse_trace(serialize_trace(parsed)) != parsed or parsed != events:
            diffs += 1
        elapsed += time.perf_counter() - start
    report("9 parse-serialize-parse on 500 generated traces, <= 10 s", diffs == 0 and elapsed <= 10.0,
           f"{diffs} diffs, {elapsed:.1f} s")
