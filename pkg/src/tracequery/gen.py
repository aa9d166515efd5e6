"""Seeded generator of well-formed traces plus ground truth.

The generator simulates threads that call methods, construct objects, write
fields, step through lines and throw exceptions. While emitting it records
what it knows by construction (the activation stack at every event, the
writes that shape every object's state, the direct-callee tree), and the
``oracle_*`` functions answer queries from those records. This is a forward
replay and deliberately shares no code with :mod:`tracequery.queries`.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterator, Optional

from .errors import InvalidConfig, NotFound
from .model import (
    CONSTRUCTOR,
    NULL,
    UNCAUGHT,
    VOID,
    ClassRef,
    DataStructure,
    ExceptionEvent,
    FieldDecl,
    FieldKind,
    Location,
    MemberFields,
    MethodCall,
    MethodExit,
    ObjectRef,
    Scalar,
    SetField,
    Step,
    ThreadDeath,
    ThreadStart,
    TraceEvent,
)
from .queries import (
    UNASSIGNED,
    UNTERMINATED,
    CallTree,
    ExitedAt,
    FieldSample,
    KilledByUncaught,
    ThreadStatus,
)

CLASS_POOL = ["Account", "Node", "Widget", "Parser", "Buffer", "Session", "Order", "Cache"]
METHOD_POOL = ["run", "compute", "update", "get", "put", "visit", "apply", "check"]
FIELD_POOL = ["count", "next", "name", "size", "value", "owner", "flag", "total"]
LOCAL_POOL = ["i", "x", "tmp", "result", "acc", "obj"]
THREAD_POOL = ["main", "worker-1", "worker-2", "worker-3"]
WORD_POOL = ["alpha", "beta", "gamma", "some result", "it's", "42", "-7", "3.5", "true", "false"]
EXCEPTION_CLASSES = ["java.lang.IllegalStateException", "java.lang.NullPointerException"]

MAX_THREADS = 4
MAX_EVENTS = 50_000
MAX_DEPTH = 32


@dataclass(frozen=True)
class GenConfig:
    seed: int = 1
    threads: int = 1
    max_events: int = 200
    max_call_depth: int = 6
    class_count: tuple[int, int] = (1, 4)
    field_count: tuple[int, int] = (0, 3)
    loop_iterations: tuple[int, int] = (0, 4)
    uncaught_exception_probability: float = 0.0
    running_thread_probability: float = 0.0

    def validate(self) -> None:
        if not 1 <= self.threads <= MAX_THREADS:
            raise InvalidConfig(f"threads must be in 1..{MAX_THREADS}")
        if not 1 <= self.max_call_depth <= MAX_DEPTH:
            raise InvalidConfig(f"max_call_depth must be in 1..{MAX_DEPTH}")
        if self.max_events > MAX_EVENTS:
            raise InvalidConfig(f"max_events must be <= {MAX_EVENTS}")
        # start, member fields, constructor call and exit, death
        if self.max_events < 5 * self.threads:
            raise InvalidConfig("max_events must allow at least 5 events per thread")
        for name in ("class_count", "field_count", "loop_iterations"):
            lo, hi = getattr(self, name)
            if lo < 0 or lo > hi:
                raise InvalidConfig(f"{name} must be a non-negative (lo, hi) range")
        if self.class_count[0] < 1 or self.class_count[1] > len(CLASS_POOL):
            raise InvalidConfig(f"class_count must lie within 1..{len(CLASS_POOL)}")
        if self.field_count[1] > len(FIELD_POOL):
            raise InvalidConfig(f"field_count must be <= {len(FIELD_POOL)}")
        for name in ("uncaught_exception_probability", "running_thread_probability"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise InvalidConfig(f"{name} must lie in [0, 1]")


@dataclass
class GroundTruth:
    events: dict[int, TraceEvent] = field(default_factory=dict)
    # enclosing call ids (outermost first) at every event
    chains: dict[int, tuple[int, ...]] = field(default_factory=dict)
    # locals of the latest step in the innermost activation, at every event
    visible_locals: dict[int, tuple] = field(default_factory=dict)
    children: dict[int, list[int]] = field(default_factory=dict)
    terminators: dict[int, object] = field(default_factory=dict)
    instantiated: dict[ObjectRef, int] = field(default_factory=dict)
    declared: dict[str, tuple[FieldDecl, ...]] = field(default_factory=dict)
    # every write that shapes an object's state, in id order
    object_writes: dict[ObjectRef, list[tuple[int, str, object]]] = field(default_factory=dict)
    thread_status: dict[str, ThreadStatus] = field(default_factory=dict)
    # enclosing call id -> (call, exit) of finished activations inside it; built on first use
    completed: Optional[dict[int, list[tuple[int, int]]]] = field(default=None, repr=False, compare=False)


class _Thrown(Exception):
    """Unwinds a simulated thread after its uncaught exception."""


@dataclass
class _Frame:
    call_id: int
    subject: object
    locals: dict = field(default_factory=dict)
    last_step: tuple = ()


class _World:
    def __init__(self, cfg: GenConfig, rng: random.Random):
        self.cfg = cfg
        self.rng = rng
        self.gt = GroundTruth()
        self.classes: dict[str, tuple[FieldDecl, ...]] = {}
        n = rng.randint(*cfg.class_count)
        for name in CLASS_POOL[:n]:
            k = rng.randint(*cfg.field_count)
            decls = []
            for fname in rng.sample(FIELD_POOL, k):
                kind = FieldKind.CLASS if rng.random() < 0.25 else FieldKind.INSTANCE
                decls.append(FieldDecl(kind, fname))
            self.classes[name] = tuple(decls)
        self.objects: list[ObjectRef] = []
        self.next_object_id = 100

    def new_object_id(self) -> int:
        self.next_object_id += self.rng.randint(1, 3)
        return self.next_object_id

    def value(self, allow_objects: bool = True):
        r = self.rng.random()
        if r < 0.15:
            return NULL
        if r < 0.35 and allow_objects and self.objects:
            return self.rng.choice(self.objects)
        if r < 0.6:
            return Scalar(str(self.rng.randint(-5, 99)))
        return Scalar(self.rng.choice(WORD_POOL))

    def location(self, cls: str) -> Location:
        return Location(f"{cls}.java", self.rng.randint(1, 200))


class _ThreadSim:
    """One simulated thread; ``run`` yields payloads and receives their ids."""

    def __init__(self, world: _World, name: str, budget: int):
        self.w = world
        self.rng = world.rng
        self.name = name
        self.budget = budget
        self.frames: list[_Frame] = []
        self.uncaught = self.rng.random() < world.cfg.uncaught_exception_probability
        self.running = not self.uncaught and self.rng.random() < world.cfg.running_thread_probability
        self.thrown = False

    # -- bookkeeping -------------------------------------------------------

    def _reserve(self) -> int:
        # exits for open frames plus the ending sequence
        end = 0 if self.running else 1
        if self.uncaught and not self.thrown:
            end += 2  # a call to throw from, then the exception
        return len(self.frames) + end

    def available(self) -> int:
        return self.budget - self._reserve()

    def emit(self, payload) -> Iterator:
        event_id = yield payload
        self.budget -= 1
        gt = self.w.gt
        gt.events[event_id] = TraceEvent(event_id, self.name, payload)
        gt.chains[event_id] = tuple(f.call_id for f in self.frames)
        gt.visible_locals[event_id] = self.frames[-1].last_step if self.frames else ()
        return event_id

    # -- activities --------------------------------------------------------

    def run(self) -> Iterator:
        yield from self.emit(ThreadStart(self.name))
        try:
            first = True
            while self.available() >= (3 if first else 2):
                if not first and self.rng.random() < 0.03:
                    break
                if first or self.rng.random() < 0.3:
                    if not (yield from self.construct()):
                        yield from self.call()
                else:
                    yield from self.call()
                first = False
            if self.uncaught and not self.thrown:
                yield from self.call(throw_now=True)
        except _Thrown:
            pass
        if not self.running:
            yield from self.emit(ThreadDeath(self.name))
        self.w.gt.thread_status[self.name] = (
            ThreadStatus.RUNNING if self.running else ThreadStatus.EXITED
        )

    def body(self) -> Iterator:
        depth = len(self.frames)
        while self.available() > 0 and self.rng.random() < 0.75:
            if self.uncaught and not self.thrown and self.rng.random() < 0.04:
                yield from self.throw()
            r = self.rng.random()
            can_nest = depth < self.w.cfg.max_call_depth and self.available() >= 2
            if r < 0.22 and can_nest:
                yield from self.call()
            elif r < 0.32 and can_nest:
                yield from self.construct()
            elif r < 0.50:
                yield from self.set_field()
            elif r < 0.75:
                yield from self.step()
            elif r < 0.85:
                yield from self.loop()
            elif r < 0.92:
                yield from self.emit(
                    DataStructure(self.here(), tuple(self.w.value() for _ in range(self.rng.randint(0, 4))))
                )
            else:
                yield from self.caught_exception()

    def here(self) -> Location:
        subj = self.frames[-1].subject if self.frames else None
        cls = subj.class_name if subj is not None else self.rng.choice(list(self.w.classes))
        return self.w.location(cls)

    def push(self, call_id: int, subject) -> None:
        gt = self.w.gt
        parent = self.frames[-1].call_id if self.frames else None
        if parent is not None:
            gt.children[parent].append(call_id)
        gt.children[call_id] = []
        self.frames.append(_Frame(call_id, subject))

    def call(self, throw_now: bool = False) -> Iterator:
        if self.w.objects and self.rng.random() < 0.7:
            subject = self.rng.choice(self.w.objects)
        else:
            subject = ClassRef(self.rng.choice(list(self.w.classes)))
        name = self.rng.choice(METHOD_POOL)
        loc = self.w.location(subject.class_name)
        args = tuple(self.w.value() for _ in range(self.rng.randint(0, 3)))
        call_id = yield from self.emit(MethodCall(loc, subject, name, args))
        self.push(call_id, subject)
        if throw_now:
            yield from self.throw()
        yield from self.body()
        ret = VOID if self.rng.random() < 0.3 else self.w.value()
        yield from self.exit(loc, subject, name, ret)

    def exit(self, loc, subject, name, ret) -> Iterator:
        frame = self.frames.pop()
        exit_id = yield from self.emit(MethodExit(frame.call_id, loc, subject, name, ret))
        self.w.gt.terminators[frame.call_id] = ExitedAt(exit_id)

    def construct(self) -> Iterator:
        """Instantiate an object; returns False if the depth limit forbids it."""
        w, gt = self.w, self.w.gt
        cls = self.rng.choice(list(w.classes))
        needed = 2 if cls in gt.declared else 3
        if len(self.frames) >= w.cfg.max_call_depth or self.available() < needed:
            return False
        if cls not in gt.declared:
            # member fields must precede the first constructor of the class
            yield from self.emit(MemberFields(cls, w.classes[cls]))
            gt.declared[cls] = w.classes[cls]
        obj = ObjectRef(cls, w.new_object_id())
        loc = w.location(cls)
        call_id = yield from self.emit(MethodCall(loc, obj, CONSTRUCTOR, ()))
        gt.instantiated[obj] = call_id
        gt.object_writes[obj] = []
        w.objects.append(obj)
        self.push(call_id, obj)
        if self.uncaught and not self.thrown and self.available() <= 0:
            yield from self.throw()
        for decl in w.classes[cls]:
            if decl.kind is FieldKind.INSTANCE and self.available() > 0 and self.rng.random() < 0.6:
                yield from self.write(obj, decl.name)
        yield from self.body()
        yield from self.exit(loc, obj, CONSTRUCTOR, VOID)
        return True

    def write(self, subject, field_name: str) -> Iterator:
        value = self.w.value()
        event_id = yield from self.emit(SetField(self.here(), subject, field_name, value))
        gt = self.w.gt
        if isinstance(subject, ObjectRef):
            gt.object_writes[subject].append((event_id, field_name, value))
        else:
            for obj in gt.instantiated:
                if obj.class_name == subject.class_name:
                    gt.object_writes[obj].append((event_id, field_name, value))

    def set_field(self) -> Iterator:
        w = self.w
        subj = self.frames[-1].subject if self.frames else None
        if not isinstance(subj, ObjectRef) or self.rng.random() < 0.3:
            if not w.objects:
                return
            subj = self.rng.choice(w.objects)
        decls = w.classes[subj.class_name]
        if not decls:
            return
        decl = self.rng.choice(decls)
        target = subj if decl.kind is FieldKind.INSTANCE else ClassRef(subj.class_name)
        yield from self.write(target, decl.name)

    def step(self, var: Optional[str] = None, value=None) -> Iterator:
        frame = self.frames[-1]
        if var is None and self.rng.random() < 0.8:
            var = self.rng.choice(LOCAL_POOL)
            value = self.w.value()
        if var is not None:
            frame.locals[var] = value
        frame.last_step = tuple(frame.locals.items())
        event_id = yield from self.emit(Step(self.here(), frame.last_step))
        # the step itself sees its own locals
        self.w.gt.visible_locals[event_id] = frame.last_step

    def loop(self) -> Iterator:
        n = self.rng.randint(*self.w.cfg.loop_iterations)
        for i in range(n):
            if self.available() <= 0:
                return
            yield from self.step("i", Scalar(str(i)))
            if self.available() > 0 and self.rng.random() < 0.3:
                yield from self.set_field()

    def caught_exception(self) -> Iterator:
        exc = ObjectRef(self.rng.choice(EXCEPTION_CLASSES), self.w.new_object_id())
        msg = self.w.value(allow_objects=False)
        yield from self.emit(ExceptionEvent(self.here(), exc, msg, self.here()))

    def throw(self) -> Iterator:
        exc = ObjectRef(self.rng.choice(EXCEPTION_CLASSES), self.w.new_object_id())
        exc_id = yield from self.emit(ExceptionEvent(self.here(), exc, NULL, UNCAUGHT))
        for frame in self.frames:
            self.w.gt.terminators[frame.call_id] = KilledByUncaught(exc_id)
        self.frames.clear()
        self.thrown = True
        raise _Thrown


def generate(cfg: GenConfig) -> tuple[list[TraceEvent], GroundTruth]:
    """Generate a trace; the same config always yields the same trace."""
    cfg.validate()
    rng = random.Random(cfg.seed)
    world = _World(cfg, rng)
    share = cfg.max_events // cfg.threads
    sims = [_ThreadSim(world, THREAD_POOL[i], share) for i in range(cfg.threads)]
    runners = [sim.run() for sim in sims]
    pending: list = [next(r) for r in runners]
    events: list[TraceEvent] = []
    next_id = 0
    live = list(range(len(runners)))
    while live:
        i = live[0] if len(live) == 1 else rng.choice(live)
        payload = pending[i]
        event_id = next_id
        next_id += 1
        events.append(TraceEvent(event_id, sims[i].name, payload))
        try:
            pending[i] = runners[i].send(event_id)
        except StopIteration:
            live.remove(i)
    return events, world.gt


# -- oracles -----------------------------------------------------------------


def _require(gt: GroundTruth, event_id: int) -> None:
    if event_id not in gt.events:
        raise NotFound(event_id)


def oracle_call_chain(gt: GroundTruth, event_id: int) -> list[int]:
    _require(gt, event_id)
    return list(gt.chains[event_id])


def oracle_terminator(gt: GroundTruth, call_id: int):
    return gt.terminators.get(call_id, UNTERMINATED)


def oracle_call_tree(gt: GroundTruth, call_id: int) -> CallTree:
    _require(gt, call_id)
    if call_id not in gt.children:
        raise NotFound(call_id)
    return CallTree(
        gt.events[call_id],
        oracle_terminator(gt, call_id),
        tuple(oracle_call_tree(gt, c) for c in gt.children[call_id]),
    )


def oracle_object_state(gt: GroundTruth, end: int, obj: ObjectRef) -> dict[str, FieldSample]:
    if obj not in gt.instantiated or gt.instantiated[obj] > end:
        raise NotFound(end)
    state = {d.name: FieldSample(None, d.name, UNASSIGNED) for d in gt.declared[obj.class_name]}
    for event_id, name, value in gt.object_writes[obj]:
        if event_id > end:
            break
        state[name] = FieldSample(event_id, name, value)
    return state


def _completed_inside(gt: GroundTruth, enclosing: int) -> list[tuple[int, int]]:
    if gt.completed is None:
        gt.completed = {}
        for call_id, term in sorted(gt.terminators.items()):
            if isinstance(term, ExitedAt):
                for outer in gt.chains[call_id]:
                    gt.completed.setdefault(outer, []).append((call_id, term.event_id))
    return gt.completed.get(enclosing, [])


def oracle_pre_event_called_methods(gt: GroundTruth, event_id: int) -> Optional[list[tuple[int, int]]]:
    """None when the event has no enclosing activation."""
    chain = oracle_call_chain(gt, event_id)
    if not chain:
        return None
    return [(c, x) for c, x in _completed_inside(gt, chain[-1]) if c < event_id and x < event_id]


def oracle_post_event_called_methods(gt: GroundTruth, event_id: int) -> Optional[list[tuple[int, int]]]:
    chain = oracle_call_chain(gt, event_id)
    if not chain:
        return None
    return [(c, x) for c, x in _completed_inside(gt, chain[-1]) if c > event_id and x > event_id]


def oracle_local_variables(gt: GroundTruth, event_id: int) -> list:
    _require(gt, event_id)
    return list(gt.visible_locals[event_id])


def oracle_thread_status(gt: GroundTruth) -> dict[str, ThreadStatus]:
    return dict(sorted(gt.thread_status.items()))


# History oracles: straight linear filters over the emitted events, with no
# indexes, patterns or bisection.


def oracle_field_history(
    gt: GroundTruth, start: int, end: int, subject, field_name: str
) -> list[FieldSample]:
    return [
        FieldSample(e.id, field_name, e.event.value)
        for e in gt.events.values()
        if start <= e.id <= end
        and isinstance(e.event, SetField)
        and e.event.subject == subject
        and e.event.field_name == field_name
    ]


def oracle_local_variable_history(
    gt: GroundTruth, start: int, end: int, thread: str, name: str
) -> list[FieldSample]:
    out = []
    for e in gt.events.values():
        if start <= e.id <= end and e.thread == thread and isinstance(e.event, Step):
            values = [v for n, v in e.event.locals if n == name]
            if values:
                out.append(FieldSample(e.id, name, values[0]))
    return out


def oracle_argument_history(gt: GroundTruth, method: str, subject=None) -> list[tuple[int, tuple]]:
    return [
        (e.id, e.event.args)
        for e in gt.events.values()
        if isinstance(e.event, MethodCall)
        and e.event.name == method
        and (subject is None or e.event.subject == subject)
    ]


def oracle_return_value_history(gt: GroundTruth, method: str, subject=None) -> list[tuple[int, object]]:
    return [
        (e.id, e.event.return_value)
        for e in gt.events.values()
        if isinstance(e.event, MethodExit)
        and e.event.name == method
        and (subject is None or e.event.subject == subject)
    ]


def oracle_data_structure_history(
    gt: GroundTruth, start: int, end: int, at: Optional[Location] = None
) -> list[tuple[int, tuple]]:
    return [
        (e.id, e.event.contents)
        for e in gt.events.values()
        if start <= e.id <= end
        and isinstance(e.event, DataStructure)
        and (at is None or e.event.location == at)
    ]
