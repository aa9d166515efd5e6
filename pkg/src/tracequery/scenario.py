"""Ordered, variable-binding event patterns.

A scenario is a list of steps. Each step matches one event, may bind
``$Var`` slots for later steps, and may require its event to come after
the events of named earlier steps::

    scenario login
    step set-ubox: match kind=setfield name=uBox value=$UBox
    step got-username: match kind=methodexit subject=$UBox name=getText value=$Username
    step enter-verify: match kind=methodcall name=verify args=[$Username, $Password]; after got-username

The search backtracks over candidate events in ascending id order, so the
first assignment found is the lexicographically smallest one.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, fields, replace
from typing import Any, Optional, Union

from . import jel
from .errors import InvalidSpec, ParseError, SpecParseError
from .model import EVENT_KINDS, UNCAUGHT, EventPattern, Null, Scalar, Uncaught, Var, match
from .store import TraceStore


@dataclass(frozen=True)
class ScenarioStep:
    label: str
    pattern: EventPattern
    after: tuple[str, ...] = ()


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    steps: tuple[ScenarioStep, ...] = ()

    def validate(self) -> None:
        seen: set[str] = set()
        for step in self.steps:
            if step.label in seen:
                raise InvalidSpec(f"duplicate step label {step.label!r}")
            for ref in step.after:
                if ref not in seen:
                    raise InvalidSpec(f"step {step.label!r} refers to unknown or later step {ref!r}")
            seen.add(step.label)


@dataclass(frozen=True)
class Matched:
    bindings: dict[str, Any]
    matched_ids: tuple[int, ...]

    matched = True


@dataclass(frozen=True)
class FailedAt:
    label: str
    bindings: dict[str, Any]
    reached: int = 0

    matched = False


ScenarioResult = Union[Matched, FailedAt]


def _substitute(p: EventPattern, bindings: dict[str, Any]) -> EventPattern:
    """Replace bound variables by their values so scans can use indexes."""

    def sub(slot):
        if isinstance(slot, Var) and slot.name in bindings:
            return bindings[slot.name]
        return slot

    changes = {}
    for name, slot in p.constraints().items():
        if isinstance(slot, tuple):
            new = tuple(sub(x) for x in slot)
        else:
            new = sub(slot)
        if new is not slot:
            changes[name] = new
    return replace(p, **changes) if changes else p


def run_scenario(s: TraceStore, spec: ScenarioSpec) -> ScenarioResult:
    spec.validate()
    steps = spec.steps
    if not steps:
        return Matched({}, ())
    index = {step.label: i for i, step in enumerate(steps)}
    best = {"depth": -1, "bindings": {}}

    def search(i: int, bindings: dict[str, Any], ids: list[int]) -> Optional[tuple[dict, list[int]]]:
        if i == len(steps):
            return bindings, ids
        if i > best["depth"]:
            best["depth"], best["bindings"] = i, bindings
        step = steps[i]
        p = _substitute(step.pattern, bindings)
        if step.after:
            floor = max(ids[index[ref]] for ref in step.after) + 1
            if p.id_lo is None or p.id_lo < floor:
                p = replace(p, id_lo=floor)
        for e in s.scan(p):
            b = match(p, e, bindings)
            if b is None:
                continue
            found = search(i + 1, b, ids + [e.id])
            if found is not None:
                return found
        return None

    found = search(0, {}, [])
    if found is not None:
        bindings, ids = found
        return Matched(bindings, tuple(ids))
    depth = best["depth"]
    return FailedAt(steps[depth].label, best["bindings"], depth)


def verify_match(s: TraceStore, spec: ScenarioSpec, matched_ids: tuple[int, ...]) -> bool:
    """Check an assignment without searching: patterns, bindings and order."""
    if len(matched_ids) != len(spec.steps):
        return False
    bindings: dict[str, Any] = {}
    position = {}
    for step, event_id in zip(spec.steps, matched_ids):
        if event_id not in s:
            return False
        b = match(step.pattern, s.get(event_id), bindings)
        if b is None:
            return False
        if any(event_id <= position[ref] for ref in step.after):
            return False
        bindings = b
        position[step.label] = event_id
    return True


# -- text format -------------------------------------------------------------

# key in the text format -> EventPattern attribute
PATTERN_KEYS = {
    "kind": "kind",
    "thread": "thread",
    "id": "id",
    "from": "id_lo",
    "to": "id_hi",
    "subject": "subject",
    "class": "class_name",
    "name": "name",
    "args": "args",
    "argc": "arg_count",
    "value": "value",
    "at": "location",
    "call": "call_id",
    "catch": "catch",
}
_ATTRS = {v: k for k, v in PATTERN_KEYS.items()}
_LABEL = re.compile(r"[A-Za-z_][A-Za-z0-9_]*(?:-[A-Za-z0-9_]+)*\Z")
_BARE = re.compile(r"[a-z][A-Za-z0-9_]*(?:-[A-Za-z0-9_]+)*\Z")
_STEP_HEAD = re.compile(r"step\s+(?P<label>\S+?)\s*:\s*match\b")


def pattern_slot(term: jel.Term, attr: str):
    if isinstance(term, jel.VarTerm):
        if attr in ("id_lo", "id_hi", "kind"):
            raise jel._fail(term, f"a literal for {_ATTRS[attr]}")
        return Var(term.name)
    if attr == "kind":
        kind = jel.term_atom(term, "event kind")
        if kind not in EVENT_KINDS:
            raise jel._fail(term, "one of " + ", ".join(EVENT_KINDS))
        return kind
    if attr in ("thread", "class_name", "name"):
        return jel.term_atom(term, _ATTRS[attr])
    if attr in ("id", "id_lo", "id_hi", "arg_count", "call_id"):
        return jel.term_int(term, f"integer for {_ATTRS[attr]}")
    if attr == "subject":
        return jel.term_subject(term)
    if attr == "value":
        return jel.term_value(term, allow_void=True)
    if attr == "location":
        return jel.term_location(term)
    if attr == "catch":
        if isinstance(term, jel.Atom) and term.name == "uncaught":
            return UNCAUGHT
        return jel.term_location(term)
    if attr == "args":
        return tuple(
            Var(t.name) if isinstance(t, jel.VarTerm) else jel.term_value(t)
            for t in jel.term_list(term, "argument list")
        )
    raise AssertionError(attr)


def read_constraints(lex: jel.Lexer, *, variables: bool = True) -> EventPattern:
    """Read ``key=term`` pairs up to ``;`` or end of input."""
    values: dict[str, Any] = {}
    while True:
        tok = lex.peek()
        if tok.kind == "eof" or (tok.kind == "punct" and tok.text == ";"):
            return EventPattern(**values)
        key = lex.next()
        if key.kind != "atom" or key.text not in PATTERN_KEYS:
            raise ParseError(
                key.line, key.column, "constraint key (" + ", ".join(PATTERN_KEYS) + ")", key.describe()
            )
        attr = PATTERN_KEYS[key.text]
        if attr in values:
            raise ParseError(key.line, key.column, "each key at most once", key.describe())
        lex.expect("=")
        term = jel.parse_term(lex)
        if not variables and isinstance(term, jel.VarTerm):
            raise jel._fail(term, f"a literal for {key.text}")
        values[attr] = pattern_slot(term, attr)


def _read_after(lex: jel.Lexer) -> list[jel.Token]:
    refs: list[jel.Token] = []
    if not lex.at(";"):
        return refs
    lex.next()
    word = lex.next()
    if word.kind != "atom" or word.text != "after":
        raise ParseError(word.line, word.column, "'after'", word.describe())
    while True:
        ref = lex.next()
        if ref.kind != "atom":
            raise ParseError(ref.line, ref.column, "step label", ref.describe())
        refs.append(ref)
        if not lex.at(","):
            break
        lex.next()
    end = lex.peek()
    if end.kind != "eof":
        raise ParseError(end.line, end.column, "end of line", end.describe())
    return refs


def parse_scenario(text: str, name: str = "scenario") -> ScenarioSpec:
    """Parse the line-oriented scenario format; raises SpecParseError."""
    steps: list[ScenarioStep] = []
    labels: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        indent = len(raw) - len(raw.lstrip())
        try:
            if stripped.startswith("scenario") and (len(stripped) == 8 or stripped[8].isspace()):
                rest = stripped[8:].strip()
                if not _LABEL.match(rest):
                    raise SpecParseError(lineno, indent + 10, "scenario name", repr(rest))
                name = rest
                continue
            m = _STEP_HEAD.match(stripped)
            if m is None:
                raise SpecParseError(lineno, indent + 1, "'step <label>: match ...'", repr(stripped[:20]))
            label = m.group("label")
            if not _LABEL.match(label):
                raise SpecParseError(lineno, indent + m.start("label") + 1, "step label", repr(label))
            if label in labels:
                raise SpecParseError(lineno, indent + m.start("label") + 1, "unique step label", repr(label))
            lex = jel.Lexer(
                stripped[m.end():],
                extra_punct="=;",
                variables=True,
                hyphen_atoms=True,
                line=lineno,
                column=indent + m.end() + 1,
            )
            pattern = read_constraints(lex)
            refs = _read_after(lex)
        except SpecParseError:
            raise
        except ParseError as err:
            raise SpecParseError(err.line_number, err.column, err.expected, err.found) from None
        for ref in refs:
            if ref.text not in labels:
                raise SpecParseError(ref.line, ref.column, "label of an earlier step", repr(ref.text))
        labels.add(label)
        steps.append(ScenarioStep(label, pattern, tuple(r.text for r in refs)))
    return ScenarioSpec(name, tuple(steps))


def _format_atom(text: str) -> str:
    if _BARE.match(text) and text not in ("null", "void", "uncaught"):
        return text
    return jel.quote(text)


def _format_slot(attr: str, slot) -> str:
    if isinstance(slot, Var):
        return "$" + slot.name
    if attr in ("kind", "thread", "class_name", "name"):
        return _format_atom(slot)
    if attr in ("id", "id_lo", "id_hi", "arg_count", "call_id"):
        return str(slot)
    if attr == "args":
        return "[" + ", ".join(_format_slot("value", x) for x in slot) + "]"
    if attr == "location":
        return jel.format_location(slot)
    if attr == "catch":
        return "uncaught" if isinstance(slot, Uncaught) else jel.format_location(slot)
    # values and subjects
    if isinstance(slot, Null):
        return "null"
    if isinstance(slot, Scalar) and _BARE.match(slot.text) and slot.text != "uncaught":
        return slot.text
    return jel.format_value(slot)


def format_pattern(p: EventPattern) -> str:
    parts = []
    for f in fields(EventPattern):
        slot = getattr(p, f.name)
        if slot is not None:
            parts.append(f"{_ATTRS[f.name]}={_format_slot(f.name, slot)}")
    return " ".join(parts)


def serialize_scenario(spec: ScenarioSpec) -> str:
    lines = [f"scenario {spec.name}"]
    for step in spec.steps:
        line = f"step {step.label}: match {format_pattern(step.pattern)}"
        if step.after:
            line += "; after " + ", ".join(step.after)
        lines.append(line)
    return "\n".join(lines) + "\n"
