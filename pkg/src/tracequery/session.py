"""Saved queries, cached answers and result diffs.

A session keeps named queries and their answers. An answer is cached under
a fingerprint of the trace contents, the active interval and the engine
version, so re-running a saved query on the same data is free and any
change to the data forces a fresh evaluation.

Sessions persist as a text file: one header line, then one JSON object per
line for each saved query and each cached answer.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Iterable, Optional, Sequence, Union

from .catalog import QueryResult, compile_query, scenario_json
from .errors import DuplicateName, IncompatibleResults, SessionFormatError, UnknownQuery
from .scenario import ScenarioSpec, parse_scenario, run_scenario, serialize_scenario
from .store import TraceStore

ENGINE_VERSION = "1"
HEADER = "# tracequery session v1"
ENV_VAR = "TRACEQUERY_SESSION"
SCENARIO = "scenario"


@dataclass(frozen=True)
class SavedQuery:
    """``kind`` is a query verb or ``"scenario"``; ``parameters`` holds the
    full query expression or the scenario text."""

    name: str
    kind: str
    parameters: str

    @classmethod
    def from_expression(cls, name: str, expression: str) -> SavedQuery:
        query = compile_query(expression)
        return cls(name, query.verb, query.expression)

    @classmethod
    def from_scenario(cls, name: str, spec: ScenarioSpec) -> SavedQuery:
        return cls(name, SCENARIO, serialize_scenario(spec))

    def compile(self) -> Callable[[TraceStore], QueryResult]:
        """Parse the stored text; raises QuerySyntaxError or SpecParseError."""
        if self.kind == SCENARIO:
            spec = parse_scenario(self.parameters)
            spec.validate()
            return lambda s: QueryResult(SCENARIO, scenario_json(run_scenario(s, spec)))
        return compile_query(self.parameters).evaluate


@dataclass(frozen=True)
class SavedAnswer:
    query_name: str
    fingerprint: str
    result: QueryResult
    evaluation_count: int


def fingerprint(s: TraceStore) -> str:
    window = "all" if s.window is None else f"{s.window.lo}-{s.window.hi}"
    text = f"{s.content_hash}|{window}|{ENGINE_VERSION}"
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class Session:
    """Single-writer store of saved queries and cached answers.

    With a ``path``, every change is written through to that file.
    """

    def __init__(self, path: Union[str, Path, None] = None):
        self.path = Path(path) if path is not None else None
        self._queries: dict[str, SavedQuery] = {}
        self._compiled: dict[str, Callable[[TraceStore], QueryResult]] = {}
        self._answers: dict[tuple[str, str], SavedAnswer] = {}
        self._counts: dict[str, int] = {}

    # -- queries -------------------------------------------------------------

    @property
    def queries(self) -> list[SavedQuery]:
        return list(self._queries.values())

    @property
    def answers(self) -> list[SavedAnswer]:
        return list(self._answers.values())

    def get_query(self, name: str) -> SavedQuery:
        try:
            return self._queries[name]
        except KeyError:
            raise UnknownQuery(f"no saved query named {name!r}") from None

    def save_query(self, query: SavedQuery) -> None:
        if query.name in self._queries:
            raise DuplicateName(f"a query named {query.name!r} already exists")
        self._compiled[query.name] = query.compile()
        self._queries[query.name] = query
        self._persist()

    def evaluation_count(self, name: str) -> int:
        self.get_query(name)
        return self._counts.get(name, 0)

    # -- answers -------------------------------------------------------------

    def cached(self, name: str, s: TraceStore) -> Optional[SavedAnswer]:
        return self._answers.get((name, fingerprint(s)))

    def run_saved(self, name: str, s: TraceStore) -> QueryResult:
        """Cached answer for this trace and window, evaluating on a miss."""
        self.get_query(name)
        key = (name, fingerprint(s))
        hit = self._answers.get(key)
        if hit is not None:
            return hit.result
        result = self._compiled[name](s)
        count = self._counts.get(name, 0) + 1
        self._counts[name] = count
        self._answers[key] = SavedAnswer(name, key[1], result, count)
        self._persist()
        return result

    def clear_cache(self) -> None:
        self._answers.clear()
        self._persist()

    # -- persistence ---------------------------------------------------------

    def dumps(self) -> str:
        lines = [HEADER]
        for q in self._queries.values():
            lines.append(json.dumps({"type": "query", "name": q.name, "kind": q.kind,
                                     "parameters": q.parameters}, ensure_ascii=False))
        for a in self._answers.values():
            lines.append(json.dumps({"type": "answer", "query": a.query_name,
                                     "fingerprint": a.fingerprint, "kind": a.result.kind,
                                     "result": a.result.value,
                                     "evaluation_count": a.evaluation_count}, ensure_ascii=False))
        return "\n".join(lines) + "\n"

    def _persist(self) -> None:
        if self.path is None:
            return
        self.path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=self.path.parent, prefix=self.path.name, suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(self.dumps())
        os.replace(tmp, self.path)

    @classmethod
    def loads(cls, text: str, path: Union[str, Path, None] = None) -> Session:
        lines = text.splitlines()
        if not lines or lines[0].strip() != HEADER:
            raise SessionFormatError(f"missing session header {HEADER!r}")
        session = cls(None)
        for lineno, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                if record["type"] == "query":
                    session.save_query(SavedQuery(record["name"], record["kind"], record["parameters"]))
                elif record["type"] == "answer":
                    name = record["query"]
                    session.get_query(name)
                    count = int(record["evaluation_count"])
                    answer = SavedAnswer(name, record["fingerprint"],
                                         QueryResult(record["kind"], record["result"]), count)
                    session._answers[(name, answer.fingerprint)] = answer
                    session._counts[name] = max(session._counts.get(name, 0), count)
                else:
                    raise ValueError(f"unknown record type {record['type']!r}")
            except (ValueError, KeyError, TypeError, UnknownQuery, DuplicateName) as err:
                raise SessionFormatError(f"session line {lineno}: {err}") from None
        session.path = Path(path) if path is not None else None
        return session

    @classmethod
    def open(cls, path: Union[str, Path]) -> Session:
        """Load ``path`` if it exists, otherwise start an empty session there."""
        p = Path(path)
        if p.exists():
            return cls.loads(p.read_text(encoding="utf-8"), p)
        return cls(p)


# -- diffs -------------------------------------------------------------------


@dataclass(frozen=True)
class DiffReport:
    only_in_a: list[Any]
    only_in_b: list[Any]
    common: list[Any]
    projection: tuple[str, ...]

    @property
    def identical(self) -> bool:
        return not self.only_in_a and not self.only_in_b

    def as_json(self) -> dict[str, Any]:
        return {"projection": list(self.projection), "only_in_a": self.only_in_a,
                "only_in_b": self.only_in_b, "common": self.common}


ALL_FIELDS = ("*",)


def _is_id_key(key: str) -> bool:
    return key == "id" or key.endswith("_id")


def _rows(result: QueryResult) -> list[Any]:
    if isinstance(result.value, list):
        return result.value
    if isinstance(result.value, dict):
        return [result.value]
    raise IncompatibleResults(f"{result.kind} results are not row-shaped")


def _effective_projection(rows: Iterable[Any], projection: Optional[Sequence[str]]) -> tuple[str, ...]:
    if projection is not None:
        return tuple(projection)
    keys: list[str] = []
    for row in rows:
        if isinstance(row, dict):
            keys.extend(k for k in row if k not in keys and not _is_id_key(k))
    return tuple(keys)


def project(row: Any, projection: Sequence[str]) -> Any:
    """Keep only ``projection`` keys of dict rows; other rows pass through."""
    if not isinstance(row, dict) or tuple(projection) == ALL_FIELDS:
        return row
    return {k: row[k] for k in projection if k in row}


def _key(row: Any) -> str:
    return json.dumps(row, sort_keys=True, ensure_ascii=False)


def diff_results(
    a: QueryResult, b: QueryResult, projection: Optional[Sequence[str]] = None
) -> DiffReport:
    """Multiset difference of two results after projecting each row.

    ``projection=None`` keeps every field except event ids (``id`` and
    ``*_id``), which differ between runs; ``ALL_FIELDS`` compares rows whole.
    """
    if a.kind != b.kind:
        raise IncompatibleResults(f"cannot compare {a.kind} with {b.kind} results")
    rows_a, rows_b = _rows(a), _rows(b)
    fields = _effective_projection([*rows_a, *rows_b], projection)
    pa = [project(r, fields) for r in rows_a]
    pb = [project(r, fields) for r in rows_b]

    available = Counter(_key(r) for r in pb)
    only_a, common = [], []
    for row in pa:
        k = _key(row)
        if available[k] > 0:
            available[k] -= 1
            common.append(row)
        else:
            only_a.append(row)
    matched_b = Counter(_key(r) for r in common)
    only_b = []
    for row in pb:
        k = _key(row)
        if matched_b[k] > 0:
            matched_b[k] -= 1
        else:
            only_b.append(row)
    return DiffReport(only_a, only_b, common, fields)
