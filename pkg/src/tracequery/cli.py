"""Interactive shell and one-shot batch runner.

Both front ends drive the same :class:`Shell`, so every shell command has a
batch equivalent with identical JSON output::

    $ tracequery --trace fig2.jel --query "pre-called 13" --format json
    [[5, 6], [9, 10]]

Without arguments, ``tracequery`` starts the interactive shell.
"""

from __future__ import annotations

import argparse
import json
import os
import shlex
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Optional, TextIO

from . import catalog
from .errors import ParseError, QueryError, TraceQueryError, TraceValidationError
from .gen import GenConfig, generate
from .jel import parse_trace, serialize_trace
from .scenario import parse_scenario, run_scenario
from .session import ALL_FIELDS, ENV_VAR, SavedQuery, Session, diff_results
from .store import HistoryInterval, TraceStore, load, restrict

PROMPT = "tq> "


class UsageError(TraceQueryError):
    """A malformed shell command (as opposed to a failing query)."""


@dataclass(frozen=True)
class Output:
    """A command result: JSON data plus a hint for table rendering."""

    kind: str
    value: Any


def _message(text: str) -> Output:
    return Output("message", {"message": text})


# -- table rendering ---------------------------------------------------------


def _cell(v: Any) -> str:
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (list, dict)):
        return json.dumps(v, ensure_ascii=False)
    return str(v)


def _grid(headers: list[str], rows: list[list[Any]]) -> list[str]:
    cells = [[_cell(c) for c in row] for row in rows]
    widths = [len(h) for h in headers]
    for row in cells:
        for i, c in enumerate(row):
            widths[i] = max(widths[i], len(c))

    def line(items):
        return "  ".join(item.ljust(w) for item, w in zip(items, widths)).rstrip()

    out = [line(headers), line(["-" * w for w in widths])]
    out.extend(line(row) for row in cells)
    return out


def _records(rows: list[dict]) -> list[str]:
    headers: list[str] = []
    for row in rows:
        headers.extend(k for k in row if k not in headers)
    return _grid(headers, [[row.get(h, "") for h in headers] for row in rows])


_PAIR_HEADERS = {"pre-called": ["call", "exit"], "post-called": ["call", "exit"]}
_LIST_HEADERS = {"call-chain": "call_id"}


def _tree_lines(tree: dict, depth: int = 0) -> list[str]:
    end = tree["end"] if tree["end_id"] is None else f"{tree['end']} {tree['end_id']}"
    lines = [f"{'  ' * depth}{tree['call_id']} {tree['subject']}.{tree['name']}  [{end}]"]
    for child in tree["children"]:
        lines.extend(_tree_lines(child, depth + 1))
    return lines


def _state_lines(state: dict) -> list[str]:
    head = f"{state['object']} at {state['at']} (instantiated at {state['instantiated_at']})"
    if state["missing_member_fields"]:
        return [head, "no member fields recorded for this class"]
    return [head, *_records(state["fields"])]


def render_table(out: Output) -> str:
    kind, v = out.kind, out.value
    if kind == "message":
        lines = [v["message"]]
    elif kind == "call-tree":
        lines = _tree_lines(v)
    elif kind == "object-state":
        lines = _state_lines(v)
    elif kind == "instances":
        lines = []
        for state in v:
            lines.extend([*_state_lines(state), ""])
        lines = lines[:-1] or ["(no instances)"]
    elif kind == "thread-status":
        lines = _grid(["thread", "status"], [[t, st] for t, st in v.items()])
    elif kind == "scenario":
        if v["matched"]:
            lines = ["matched ids: " + " ".join(str(i) for i in v["matched_ids"])]
        else:
            lines = [f"failed at step {v['failed_at']}"]
        if v["bindings"]:
            lines.extend(_grid(["variable", "value"], [[k, b] for k, b in v["bindings"].items()]))
    elif kind == "diff":
        lines = [f"projection: {', '.join(v['projection']) or '(none)'}"]
        for label in ("only_in_a", "only_in_b", "common"):
            lines.append(f"{label} ({len(v[label])}):")
            lines.extend("  " + _cell(row) for row in v[label])
    elif isinstance(v, bool):
        lines = [_cell(v)]
    elif isinstance(v, dict):
        lines = _records([v])
    elif isinstance(v, list):
        if not v:
            lines = ["(no results)"]
        elif all(isinstance(r, dict) for r in v):
            lines = _records(v)
        elif all(isinstance(r, list) for r in v):
            width = max(len(r) for r in v)
            headers = _PAIR_HEADERS.get(kind) or [f"#{i + 1}" for i in range(width)]
            lines = _grid(headers, v)
        else:
            lines = _grid([_LIST_HEADERS.get(kind, "value")], [[r] for r in v])
    else:
        lines = [_cell(v)]
    return "\n".join(lines)


def render_json(out: Output) -> str:
    return json.dumps(out.value, ensure_ascii=False)


# -- the command interpreter -------------------------------------------------

_GEN_KEYS = {
    "seed": ("seed", int),
    "threads": ("threads", int),
    "max-events": ("max_events", int),
    "max-depth": ("max_call_depth", int),
    "uncaught": ("uncaught_exception_probability", float),
    "running": ("running_thread_probability", float),
}

HELP = [
    "load FILE                      read a JEL trace (clears the interval)",
    "interval LO HI | interval off  restrict later queries to ids LO..HI",
    "query EXPR                     run a query expression (see below)",
    "scenario run FILE              match a scenario file against the trace",
    "save-query NAME EXPR           save a query expression under NAME",
    "save-query NAME scenario FILE  save a scenario file under NAME",
    "run-saved NAME                 run a saved query, reusing cached answers",
    "diff queries A B [FIELD...]    compare two saved queries on this trace",
    "diff traces NAME FILE [FIELD...]  compare a saved query on this trace and FILE",
    "list                           show saved queries",
    "export json | export table     choose the output format",
    "generate FILE [seed=N threads=N max-events=N max-depth=N uncaught=P running=P]",
    "                               write (and load) a synthetic trace",
    "help                           this text",
    "quit                           leave",
    "",
    "diff FIELDs choose the compared row fields; '*' compares whole rows;",
    "the default ignores event ids.",
    "",
    "query expressions:",
    *catalog.help_lines("  "),
]


def read_trace(path: str) -> TraceStore:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise UsageError(f"cannot read {path}: {err.strerror or err}") from None
    return load(parse_trace(text))


class Shell:
    """Holds the loaded trace, the active interval and the session."""

    def __init__(self, session: Optional[Session] = None, *, fmt: str = "table"):
        self.session = session if session is not None else Session()
        self.base: Optional[TraceStore] = None
        self.interval: Optional[HistoryInterval] = None
        self.format = fmt
        self.finished = False
        self._commands: dict[str, Callable[[list[str], str], Optional[Output]]] = {
            "load": self._load,
            "interval": self._interval,
            "query": self._query,
            "scenario": self._scenario,
            "save-query": self._save_query,
            "run-saved": self._run_saved,
            "diff": self._diff,
            "list": self._list,
            "export": self._export,
            "generate": self._generate,
            "help": self._help,
            "quit": self._quit,
            "exit": self._quit,
        }

    # -- helpers -------------------------------------------------------------

    @property
    def store(self) -> TraceStore:
        if self.base is None:
            raise UsageError("no trace loaded (use: load FILE)")
        return self._windowed(self.base)

    def _windowed(self, s: TraceStore) -> TraceStore:
        return s if self.interval is None else restrict(s, self.interval)

    def render(self, out: Output) -> str:
        return render_json(out) if self.format == "json" else render_table(out)

    # -- dispatch ------------------------------------------------------------

    def execute(self, line: str) -> Optional[Output]:
        """Run one command line; raises on failure."""
        text = line.strip()
        if not text or text.startswith("#"):
            return None
        verb, _, rest = text.partition(" ")
        handler = self._commands.get(verb)
        if handler is None:
            if verb in catalog.VERBS:
                return self._query([], text)
            raise UsageError(f"unknown command {verb!r} (try: help)")
        try:
            words = shlex.split(rest)
        except ValueError as err:
            raise UsageError(str(err)) from None
        return handler(words, rest.strip())

    # -- commands ------------------------------------------------------------

    def _load(self, words: list[str], rest: str) -> Output:
        if len(words) != 1:
            raise UsageError("usage: load FILE")
        self.base = read_trace(words[0])
        self.interval = None
        return _message(f"loaded {len(self.base)} events from {words[0]}")

    def _interval(self, words: list[str], rest: str) -> Output:
        if words == ["off"]:
            self.interval = None
            return _message("interval off")
        if len(words) != 2:
            raise UsageError("usage: interval LO HI | interval off")
        try:
            self.interval = HistoryInterval(int(words[0]), int(words[1]))
        except ValueError as err:
            raise UsageError(f"bad interval: {err}") from None
        return _message(f"interval {self.interval.lo}..{self.interval.hi}")

    def _query(self, words: list[str], rest: str) -> Output:
        if not rest:
            raise UsageError("usage: query EXPR")
        query = catalog.compile_query(rest)
        return Output(query.verb, query.evaluate(self.store).value)

    def _scenario(self, words: list[str], rest: str) -> Output:
        if len(words) != 2 or words[0] != "run":
            raise UsageError("usage: scenario run FILE")
        spec = parse_scenario(_read_text(words[1]))
        return Output("scenario", catalog.scenario_json(run_scenario(self.store, spec)))

    def _save_query(self, words: list[str], rest: str) -> Output:
        if len(words) < 2:
            raise UsageError("usage: save-query NAME EXPR | save-query NAME scenario FILE")
        name = words[0]
        if words[1] == "scenario":
            if len(words) != 3:
                raise UsageError("usage: save-query NAME scenario FILE")
            spec = parse_scenario(_read_text(words[2]))
            query = SavedQuery.from_scenario(name, spec)
        else:
            query = SavedQuery.from_expression(name, rest[len(name):].strip())
        self.session.save_query(query)
        return _message(f"saved {name}")

    def _run_saved(self, words: list[str], rest: str) -> Output:
        if len(words) != 1:
            raise UsageError("usage: run-saved NAME")
        result = self.session.run_saved(words[0], self.store)
        return Output(result.kind, result.value)

    def _diff(self, words: list[str], rest: str) -> Output:
        if len(words) < 3 or words[0] not in ("queries", "traces"):
            raise UsageError("usage: diff queries A B [FIELD...] | diff traces NAME FILE [FIELD...]")
        fields = words[3:]
        projection = None if not fields else (ALL_FIELDS if fields == ["*"] else fields)
        if words[0] == "queries":
            a = self.session.run_saved(words[1], self.store)
            b = self.session.run_saved(words[2], self.store)
        else:
            a = self.session.run_saved(words[1], self.store)
            b = self.session.run_saved(words[1], self._windowed(read_trace(words[2])))
        return Output("diff", diff_results(a, b, projection).as_json())

    def _list(self, words: list[str], rest: str) -> Output:
        rows = [
            {"name": q.name, "kind": q.kind, "evaluations": self.session.evaluation_count(q.name),
             "query": q.parameters if q.kind != "scenario" else q.parameters.splitlines()[0]}
            for q in self.session.queries
        ]
        return Output("list", rows)

    def _export(self, words: list[str], rest: str) -> Output:
        if words not in (["json"], ["table"]):
            raise UsageError("usage: export json | export table")
        self.format = words[0]
        return _message(f"output format {words[0]}")

    def _generate(self, words: list[str], rest: str) -> Output:
        if not words:
            raise UsageError("usage: generate FILE [key=value...]")
        options: dict[str, Any] = {}
        for word in words[1:]:
            key, sep, value = word.partition("=")
            if not sep or key not in _GEN_KEYS:
                raise UsageError(f"unknown generator option {word!r}; known: {', '.join(_GEN_KEYS)}")
            attr, conv = _GEN_KEYS[key]
            try:
                options[attr] = conv(value)
            except ValueError:
                raise UsageError(f"bad value for {key}: {value!r}") from None
        events, _ = generate(GenConfig(**options))
        try:
            Path(words[0]).write_text(serialize_trace(events), encoding="utf-8")
        except OSError as err:
            raise UsageError(f"cannot write {words[0]}: {err.strerror or err}") from None
        self.base = load(events)
        self.interval = None
        return _message(f"wrote and loaded {len(events)} events to {words[0]}")

    def _help(self, words: list[str], rest: str) -> Output:
        return _message("\n".join(HELP))

    def _quit(self, words: list[str], rest: str) -> None:
        self.finished = True


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise UsageError(f"cannot read {path}: {err.strerror or err}") from None


def _session_from(path: Optional[str]) -> Session:
    path = path or os.environ.get(ENV_VAR)
    return Session.open(path) if path else Session()


# -- front ends --------------------------------------------------------------


def run_repl(stdin: TextIO, stdout: TextIO, session: Optional[Session] = None) -> int:
    """Read commands until ``quit`` or end of input. Errors never end the loop."""
    shell = Shell(session)
    interactive = stdin.isatty()
    while not shell.finished:
        if interactive:
            stdout.write(PROMPT)
            stdout.flush()
        line = stdin.readline()
        if not line:
            break
        try:
            out = shell.execute(line)
        except TraceQueryError as err:
            stdout.write(f"error: {err}\n")
            continue
        except Exception as err:  # keep the session alive whatever a command does
            stdout.write(f"error: internal: {type(err).__name__}: {err}\n")
            continue
        if out is not None:
            stdout.write(shell.render(out) + "\n")
    return 0


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="tracequery",
        description="Query recorded JEL execution traces. Without arguments, start the shell.",
    )
    p.add_argument("--trace", help="JEL trace file to load")
    p.add_argument("--query", help="query expression or shell command to run once")
    p.add_argument("--interval", nargs=2, type=int, metavar=("LO", "HI"), help="restrict to ids LO..HI")
    p.add_argument("--format", choices=("json", "table"), default="table")
    p.add_argument("--session", help=f"session file (default: ${ENV_VAR})")
    return p


# shell commands that work without a loaded trace
_TRACELESS = {"generate", "help", "list", "save-query"}


def run_batch(argv: list[str], stdout: TextIO = sys.stdout, stderr: TextIO = sys.stderr) -> int:
    """Exit status: 0 success, 1 query failure, 2 usage, input or parse error."""
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.query is None:
        stderr.write("error: --query is required in batch mode\n")
        return 2
    verb = args.query.strip().partition(" ")[0]
    if args.trace is None and verb not in _TRACELESS:
        stderr.write("error: --trace is required\n")
        return 2
    try:
        shell = Shell(_session_from(args.session), fmt=args.format)
        if args.trace is not None:
            shell.execute(f"load {shlex.quote(args.trace)}")
        if args.interval is not None:
            shell.execute(f"interval {args.interval[0]} {args.interval[1]}")
        out = shell.execute(args.query)
    except (QueryError, TraceValidationError) as err:
        stderr.write(f"error: {err}\n")
        return 1 if isinstance(err, QueryError) else 2
    except (ParseError, UsageError, TraceQueryError) as err:
        stderr.write(f"error: {err}\n")
        return 2
    if out is not None:
        stdout.write(shell.render(out) + "\n")
    return 0


def main(argv: Optional[list[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if not argv:
        try:
            session = _session_from(None)
        except TraceQueryError as err:
            sys.stderr.write(f"error: {err}\n")
            return 2
        return run_repl(sys.stdin, sys.stdout, session)
    return run_batch(argv)
