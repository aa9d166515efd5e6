"""Query recorded Java execution traces written in the JEL format.

Typical use::

    from tracequery import load, parse_trace, queries

    store = load(parse_trace(open("trace.jel").read()))
    queries.where_exception_is_thrown(store, "main")
"""

from __future__ import annotations

from importlib import resources

from . import queries
from .catalog import QueryResult, compile_query, evaluate
from .errors import (
    ParseError,
    QueryError,
    QuerySyntaxError,
    SpecParseError,
    TraceQueryError,
    TraceValidationError,
)
from .gen import GenConfig, GroundTruth, generate
from .jel import parse_trace, serialize_trace
from .model import (
    NULL,
    UNCAUGHT,
    VOID,
    ClassRef,
    EventPattern,
    Location,
    ObjectRef,
    Scalar,
    TraceEvent,
    Var,
    match,
    matches,
)
from .scenario import (
    FailedAt,
    Matched,
    ScenarioSpec,
    ScenarioStep,
    parse_scenario,
    run_scenario,
    serialize_scenario,
)
from .session import DiffReport, SavedAnswer, SavedQuery, Session, diff_results
from .store import HistoryInterval, TraceStore, load, restrict

__version__ = "0.1.0"


def sample_path(name: str):
    """Path-like handle to a bundled sample (``traveling_null_pointer.jel``,
    ``login_ok.jel``, ``login_bad.jel``, ``login.scn``)."""
    return resources.files(__name__).joinpath("data", name)


def sample_text(name: str) -> str:
    return sample_path(name).read_text(encoding="utf-8")


__all__ = [
    "NULL", "UNCAUGHT", "VOID", "ClassRef", "DiffReport", "EventPattern", "FailedAt",
    "GenConfig", "GroundTruth", "HistoryInterval", "Location", "Matched", "ObjectRef",
    "ParseError", "QueryError", "QueryResult", "QuerySyntaxError", "SavedAnswer",
    "SavedQuery", "Scalar", "ScenarioSpec", "ScenarioStep", "Session", "SpecParseError",
    "TraceEvent", "TraceQueryError", "TraceStore", "TraceValidationError", "Var",
    "compile_query", "diff_results", "evaluate", "generate", "load", "match", "matches",
    "parse_scenario", "parse_trace", "queries", "restrict", "run_scenario", "sample_path",
    "sample_text", "serialize_scenario", "serialize_trace",
]
