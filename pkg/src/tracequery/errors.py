"""Exception hierarchy.

Input problems (bad text, inconsistent traces) and query failures are kept
apart so the CLI can map them to different exit codes.
"""

from __future__ import annotations


class TraceQueryError(Exception):
    """Base class for everything raised by this package."""


class ParseError(TraceQueryError, ValueError):
    def __init__(self, line_number: int, column: int, expected: str, found: str):
        self.line_number = line_number
        self.column = column
        self.expected = expected
        self.found = found
        super().__init__(
            f"line {line_number}, column {column}: expected {expected}, found {found}"
        )


class SpecParseError(ParseError):
    pass


class QuerySyntaxError(ParseError):
    pass


# -- store validation --------------------------------------------------------


class TraceValidationError(TraceQueryError, ValueError):
    def __init__(self, event_id: int, message: str):
        self.event_id = event_id
        super().__init__(message)


class DuplicateId(TraceValidationError):
    def __init__(self, event_id: int):
        super().__init__(event_id, f"duplicate event id {event_id}")


class NonMonotonicId(TraceValidationError):
    def __init__(self, event_id: int):
        super().__init__(event_id, f"event id {event_id} is not greater than its predecessor")


class DanglingExit(TraceValidationError):
    def __init__(self, call_id: int, exit_id: int):
        self.call_id = call_id
        super().__init__(exit_id, f"exit {exit_id} refers to unknown call {call_id}")


class ExitMismatch(TraceValidationError):
    def __init__(self, call_id: int, exit_id: int, reason: str):
        self.call_id = call_id
        super().__init__(exit_id, f"exit {exit_id} does not match call {call_id}: {reason}")


# -- query failures ----------------------------------------------------------


class QueryError(TraceQueryError):
    pass


class NotFound(QueryError, LookupError):
    def __init__(self, event_id: int):
        self.event_id = event_id
        super().__init__(f"no event with id {event_id}")


class NoMatch(QueryError):
    pass


class NoEnclosingEnvironment(QueryError):
    def __init__(self, event_id: int):
        self.event_id = event_id
        super().__init__(f"event {event_id} has no enclosing method")


class NoInstantiation(QueryError):
    pass


class NoMemberFields(QueryError):
    pass


class UnassignedField(QueryError):
    pass


class NotAMethodCall(QueryError):
    def __init__(self, event_id: int):
        self.event_id = event_id
        super().__init__(f"event {event_id} is not a method call")


class InvalidSpec(QueryError):
    pass


class DuplicateName(QueryError):
    pass


class UnknownQuery(QueryError):
    pass


class IncompatibleResults(QueryError):
    pass


class InvalidConfig(TraceQueryError, ValueError):
    pass


class SessionFormatError(TraceQueryError, ValueError):
    pass
