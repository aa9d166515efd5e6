"""Reading and writing the JEL trace format.

A trace is a sequence of Prolog-style facts::

    event(14, 'main', methodcall(l('Example.java', 14), o('Example', 643), 'mN', ['null'])).

Parsing happens in two stages. A small recursive-descent parser turns text
into generic terms (atoms, numbers, compounds, lists), and a converter maps
terms onto the typed events in :mod:`tracequery.model`. The term layer is
reused by the scenario and query-expression parsers.
"""

from __future__ import annotations

import bisect
import gc
import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Optional, Union

from .errors import ParseError
from .model import (
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
    Null,
    ObjectRef,
    Scalar,
    SetField,
    Step,
    ThreadDeath,
    ThreadStart,
    TraceEvent,
    Uncaught,
    Void,
)

# -- lexing ------------------------------------------------------------------


@dataclass(frozen=True)
class Token:
    kind: str  # atom, qatom, int, num, var, punct, eof
    text: str
    index: int
    lexer: Optional[Lexer] = field(default=None, compare=False, repr=False)

    @property
    def line(self) -> int:
        return self.lexer.position(self.index)[0] if self.lexer else 0

    @property
    def column(self) -> int:
        return self.lexer.position(self.index)[1] if self.lexer else 0

    def describe(self) -> str:
        return "end of input" if self.kind == "eof" else repr(self.text)


_BLANK = r"(?:\s|%[^\n]*(?![^\n]))*"
_TOKEN_RE = [
    r"'[^']*(?:''[^']*)*'",
    r"-?\d+\.\d+(?:[eE][+-]?\d+)?",
    r"-?\d+",
    r"<[A-Za-z_]+>",
]
_PLAIN_ATOM = r"[A-Za-z_][A-Za-z0-9_]*"
_WIDE_ATOM = r"[A-Za-z_][A-Za-z0-9_]*(?:[-.][A-Za-z0-9_]+)*"


def _kind(text: str, punct: str) -> str:
    c = text[0]
    if c in punct:
        return "punct"
    if c == "'":
        return "qatom"
    if c == "-" or c.isdigit():
        return "num" if "." in text else "int"
    if c == "$":
        return "var"
    return "atom"


class Lexer:
    """Tokenizer for Prolog-ish fact text.

    ``extra_punct`` adds single-character punctuation (``=``, ``;``...) and
    ``variables`` enables ``$Name`` tokens; both are used by the scenario and
    query-expression front ends. ``hyphen_atoms`` admits ``thread-exited``
    style words (and dotted names such as ``java.lang.String``) as unquoted
    atoms. ``line`` and ``column`` give the position of the text's first
    character when it is a slice of a larger document.

    The whole text is split up front; positions are worked out only when a
    token's line or column is asked for.
    """

    def __init__(
        self,
        text: str,
        *,
        extra_punct: str = "",
        variables: bool = False,
        hyphen_atoms: bool = False,
        line: int = 1,
        column: int = 1,
    ):
        self.text = text
        self._base = (line, column)
        self._punct = "()[],." + extra_punct
        parts = ["[" + re.escape(self._punct) + "]", *_TOKEN_RE, _WIDE_ATOM if hyphen_atoms else _PLAIN_ATOM]
        if variables:
            parts.append(r"\$[A-Za-z_][A-Za-z0-9_]*")
        alternatives = "|".join(parts)
        self._re = re.compile(f"({_BLANK})({alternatives})")
        self._newlines: Optional[list[int]] = None
        self._starts: Optional[list[int]] = None
        self._i = 0
        self._stop = len(text)
        self._stuck = False
        if "%" not in text:
            # without comments, a plain split is exact unless it skipped a stray character
            tokens = re.findall(rf"\s*({alternatives})", text)
            if len("".join(text.split())) == len("".join("".join(tokens).split())):
                self._tokens = tokens
                return
        self._split_slowly()

    def _split_slowly(self) -> None:
        """Token by token, recording where (if anywhere) the text stops lexing."""
        text, pos = self.text, 0
        self._tokens, self._starts = [], []
        while True:
            m = self._re.match(text, pos)
            if m is None:
                break
            self._starts.append(m.start(2))
            self._tokens.append(m.group(2))
            pos = m.end()
        pos = re.compile(_BLANK).match(text, pos).end()
        self._stop = pos
        self._stuck = pos < len(text)

    def _start(self, index: int) -> int:
        if index >= len(self._tokens):
            return self._stop
        if self._starts is None:
            self._starts = [m.start(2) for m in self._re.finditer(self.text)]
        return self._starts[index]

    def where(self, offset: int) -> tuple[int, int]:
        """(line, column) of a character offset, both 1-based."""
        if self._newlines is None:
            self._newlines = [m.start() for m in re.finditer("\n", self.text)]
        k = bisect.bisect_left(self._newlines, offset)
        line, column = self._base
        if k == 0:
            return line, column + offset
        return line + k, offset - self._newlines[k - 1]

    def position(self, index: int) -> tuple[int, int]:
        """(line, column) of the token with this index."""
        return self.where(self._start(index))

    def _fail(self, index: int, expected: str) -> ParseError:
        """Error for the token at ``index``, or the lexing error past the last token."""
        if index >= len(self._tokens):
            line, col = self.where(self._stop)
            if self._stuck:
                ch = self.text[self._stop]
                if ch == "'":
                    return ParseError(line, col, "closing quote", "end of input")
                return ParseError(line, col, "a term", repr(ch))
            return ParseError(line, col, expected, "end of input")
        line, col = self.position(index)
        return ParseError(line, col, expected, repr(self._tokens[index]))

    def peek(self) -> Token:
        i = self._i
        if i < len(self._tokens):
            s = self._tokens[i]
            return Token(_kind(s, self._punct), s, i, self)
        if self._stuck:
            raise self._fail(i, "a term")
        return Token("eof", "", i, self)

    def next(self) -> Token:
        tok = self.peek()
        if tok.kind != "eof":
            self._i += 1
        return tok

    def done(self) -> bool:
        """True at end of input; raises if the text stops lexing here."""
        return self.peek().kind == "eof"

    def expect(self, text: str) -> None:
        i = self._i
        if i < len(self._tokens) and self._tokens[i] == text:
            self._i = i + 1
            return
        raise self._fail(i, repr(text))

    def at(self, text: str) -> bool:
        """Whether the next token is the punctuation ``text``."""
        i = self._i
        return i < len(self._tokens) and self._tokens[i] == text

    def read_term(self) -> Term:
        toks, punct, n = self._tokens, self._punct, len(self._tokens)

        def sequence(i: int, close: str) -> tuple[list, int]:
            items = []
            while True:
                item, i = term(i)
                items.append(item)
                if i < n and toks[i] == ",":
                    i += 1
                elif i < n and toks[i] == close:
                    return items, i + 1
                else:
                    raise self._fail(i, repr(close))

        def term(i: int):
            if i >= n:
                raise self._fail(i, "a term")
            s = toks[i]
            c = s[0]
            if c in punct:
                if s != "[":
                    raise self._fail(i, "a term")
                if i + 1 < n and toks[i + 1] == "]":
                    return ListTerm((), i, self), i + 2
                items, j = sequence(i + 1, "]")
                return ListTerm(tuple(items), i, self), j
            if c == "-" or c.isdigit():
                return Num(s, i, self), i + 1
            if c == "$":
                return VarTerm(s[1:], i, self), i + 1
            name = s[1:-1].replace("''", "'") if c == "'" else s
            if i + 1 < n and toks[i + 1] == "(":
                args, j = sequence(i + 2, ")")
                return Compound(name, tuple(args), i, self), j
            return Atom(name, i, self), i + 1

        result, self._i = term(self._i)
        return result


# -- generic terms -----------------------------------------------------------


class _Positioned:
    @property
    def line(self) -> int:
        return self.lexer.position(self.index)[0] if self.lexer else 0

    @property
    def column(self) -> int:
        return self.lexer.position(self.index)[1] if self.lexer else 0


@dataclass(frozen=True)
class Atom(_Positioned):
    name: str
    index: int = 0
    lexer: Optional[Lexer] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Num(_Positioned):
    text: str
    index: int = 0
    lexer: Optional[Lexer] = field(default=None, compare=False, repr=False)

    @property
    def is_int(self) -> bool:
        return "." not in self.text


@dataclass(frozen=True)
class Compound(_Positioned):
    functor: str
    args: tuple
    index: int = 0
    lexer: Optional[Lexer] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class ListTerm(_Positioned):
    items: tuple
    index: int = 0
    lexer: Optional[Lexer] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class VarTerm(_Positioned):
    name: str
    index: int = 0
    lexer: Optional[Lexer] = field(default=None, compare=False, repr=False)


Term = Union[Atom, Num, Compound, ListTerm, VarTerm]


def unquote(text: str) -> str:
    return text[1:-1].replace("''", "'")


def parse_term(lex: Lexer) -> Term:
    return lex.read_term()


def describe_term(t: Term) -> str:
    if isinstance(t, Atom):
        return quote(t.name)
    if isinstance(t, Num):
        return t.text
    if isinstance(t, VarTerm):
        return "$" + t.name
    if isinstance(t, ListTerm):
        return "[" + ", ".join(describe_term(i) for i in t.items) + "]"
    return f"{t.functor}({', '.join(describe_term(a) for a in t.args)})"


def _fail(t: Term, expected: str) -> ParseError:
    return ParseError(t.line, t.column, expected, describe_term(t))


# -- term -> domain ----------------------------------------------------------


def term_atom(t: Term, what: str = "atom") -> str:
    if isinstance(t, Atom):
        return t.name
    raise _fail(t, what)


def term_int(t: Term, what: str = "integer", minimum: int = 0) -> int:
    if isinstance(t, Num) and t.is_int and int(t.text) >= minimum:
        return int(t.text)
    raise _fail(t, what)


def term_location(t: Term) -> Location:
    if isinstance(t, Compound) and t.functor == "l" and len(t.args) == 2:
        file = term_atom(t.args[0], "file name")
        line = term_int(t.args[1], "positive line number", minimum=1)
        if file:
            return Location(file, line)
    raise _fail(t, "location l(File, Line)")


def term_object(t: Term) -> ObjectRef:
    if isinstance(t, Compound) and t.functor == "o" and len(t.args) == 2:
        name = term_atom(t.args[0], "class name")
        if name:
            return ObjectRef(name, term_int(t.args[1], "object id"))
    raise _fail(t, "instance o(Class, Id)")


def term_class(t: Term) -> ClassRef:
    if isinstance(t, Compound) and t.functor == "c" and len(t.args) == 1:
        name = term_atom(t.args[0], "class name")
        if name:
            return ClassRef(name)
    raise _fail(t, "class c(Class)")


def term_subject(t: Term) -> Union[ObjectRef, ClassRef]:
    if isinstance(t, Compound) and t.functor == "o":
        return term_object(t)
    if isinstance(t, Compound) and t.functor == "c":
        return term_class(t)
    raise _fail(t, "instance o(Class, Id) or class c(Class)")


def term_value(t: Term, allow_void: bool = False):
    if isinstance(t, Atom):
        if t.name == "null":
            return NULL
        if t.name == "void":
            if not allow_void:
                raise _fail(t, "value (void is only a return value)")
            return VOID
        return Scalar(t.name)
    if isinstance(t, Num):
        return Scalar(t.text)
    if isinstance(t, Compound) and t.functor in ("o", "c"):
        return term_subject(t)
    raise _fail(t, "value")


def term_list(t: Term, what: str) -> tuple:
    if isinstance(t, ListTerm):
        return t.items
    raise _fail(t, what)


def _arity(t: Compound, n: int) -> None:
    if len(t.args) != n:
        raise ParseError(
            t.line, t.column, f"{t.functor}/{n}", f"{t.functor}/{len(t.args)}"
        )


def _local(t: Term) -> tuple:
    if isinstance(t, Compound) and t.functor == "lv" and len(t.args) == 2:
        return (term_atom(t.args[0], "variable name"), term_value(t.args[1]))
    raise _fail(t, "local variable lv(Name, Value)")


def _field_decl(t: Term) -> FieldDecl:
    if isinstance(t, Compound) and t.functor in ("cf", "of") and len(t.args) == 1:
        name = term_atom(t.args[0], "field name")
        if name:
            return FieldDecl(FieldKind(t.functor), name)
    raise _fail(t, "field declaration cf(Name) or of(Name)")


def _catch(t: Term):
    if isinstance(t, Atom) and t.name == "uncaught":
        return UNCAUGHT
    if isinstance(t, Compound) and t.functor == "l":
        return term_location(t)
    raise _fail(t, "catch location or uncaught")


def _name(t: Term) -> str:
    name = term_atom(t, "name")
    if not name:
        raise _fail(t, "non-empty name")
    return name


def term_payload(t: Term):
    if not isinstance(t, Compound):
        raise _fail(t, "execution event")
    f, a = t.functor, t.args
    if f == "methodcall":
        _arity(t, 4)
        args = tuple(term_value(x) for x in term_list(a[3], "argument list"))
        return MethodCall(term_location(a[0]), term_subject(a[1]), _name(a[2]), args)
    if f == "methodexit":
        _arity(t, 5)
        return MethodExit(
            term_int(a[0], "call id"),
            term_location(a[1]),
            term_subject(a[2]),
            _name(a[3]),
            term_value(a[4], allow_void=True),
        )
    if f == "setfield":
        _arity(t, 4)
        return SetField(term_location(a[0]), term_subject(a[1]), _name(a[2]), term_value(a[3]))
    if f == "datastructure":
        _arity(t, 2)
        contents = tuple(term_value(x) for x in term_list(a[1], "contents list"))
        return DataStructure(term_location(a[0]), contents)
    if f == "step":
        _arity(t, 2)
        return Step(term_location(a[0]), tuple(_local(x) for x in term_list(a[1], "local variable list")))
    if f == "exception":
        _arity(t, 4)
        return ExceptionEvent(term_location(a[0]), term_object(a[1]), term_value(a[2]), _catch(a[3]))
    if f == "threadstart":
        _arity(t, 1)
        return ThreadStart(_name(a[0]))
    if f == "threaddeath":
        _arity(t, 1)
        return ThreadDeath(_name(a[0]))
    if f == "memberfields":
        _arity(t, 2)
        decls = tuple(_field_decl(x) for x in term_list(a[1], "field list"))
        return MemberFields(term_class(a[0]).class_name, decls)
    raise ParseError(t.line, t.column, "known event functor", f)


def term_event(t: Term) -> TraceEvent:
    if not (isinstance(t, Compound) and t.functor == "event"):
        raise _fail(t, "event(Id, Thread, Event)")
    _arity(t, 3)
    eid = term_int(t.args[0], "non-negative integer event id")
    thread = _name(t.args[1])
    return TraceEvent(eid, thread, term_payload(t.args[2]))


# -- fast path for event facts ------------------------------------------------
#
# Reads well-formed facts straight from token strings, reusing equal
# locations, references and scalars. It accepts a subset of what the term
# parser accepts; on anything else it gives up and the caller re-reads the
# fact through the term layer, which reports the precise error.


class _GiveUp(Exception):
    pass


def _event_reader(toks: list[str]) -> Callable[[int], tuple[TraceEvent, int]]:
    """``read(i)`` parses the fact starting at token ``i`` and returns the
    event and the index after its closing ``.``."""
    names: dict[str, str] = {}
    locations: dict[tuple[str, str], Location] = {}
    refs: dict[tuple[str, ...], Union[ObjectRef, ClassRef]] = {}
    values: dict[str, object] = {}

    def name(i: int) -> str:
        s = toks[i]
        found = names.get(s)
        if found is None:
            c = s[0]
            if c == "'":
                found = s[1:-1].replace("''", "'")
            elif c.isalpha() or c == "_" or c == "<":
                found = s
            else:
                raise _GiveUp
            if not found:
                raise _GiveUp
            names[s] = found
        if toks[i + 1] == "(":
            raise _GiveUp
        return found

    def integer(s: str, minimum: int) -> int:
        if not s.isdigit() or int(s) < minimum:
            raise _GiveUp
        return int(s)

    def location(i: int) -> Location:
        if toks[i] != "l" or toks[i + 1] != "(" or toks[i + 3] != "," or toks[i + 5] != ")":
            raise _GiveUp
        key = (toks[i + 2], toks[i + 4])
        loc = locations.get(key)
        if loc is None:
            loc = locations[key] = Location(name(i + 2), integer(toks[i + 4], 1))
        return loc

    def subject(i: int) -> tuple[Union[ObjectRef, ClassRef], int]:
        f = toks[i]
        if f == "o" and toks[i + 1] == "(" and toks[i + 3] == "," and toks[i + 5] == ")":
            key = (toks[i + 2], toks[i + 4])
            ref = refs.get(key)
            if ref is None:
                ref = refs[key] = ObjectRef(name(i + 2), integer(toks[i + 4], 0))
            return ref, i + 6
        if f == "c" and toks[i + 1] == "(" and toks[i + 3] == ")":
            key = (toks[i + 2],)
            ref = refs.get(key)
            if ref is None:
                ref = refs[key] = ClassRef(name(i + 2))
            return ref, i + 4
        raise _GiveUp

    def value(i: int, allow_void: bool = False) -> tuple[object, int]:
        s = toks[i]
        if toks[i + 1] == "(":
            return subject(i)
        v = values.get(s)
        if v is None:
            c = s[0]
            if c == "-" or c.isdigit():
                v = Scalar(s)
            else:
                text = "" if s == "''" else name(i)
                v = NULL if text == "null" else VOID if text == "void" else Scalar(text)
            values[s] = v
        if v is VOID and not allow_void:
            raise _GiveUp
        return v, i + 1

    def sequence(i: int, item) -> tuple[tuple, int]:
        if toks[i] != "[":
            raise _GiveUp
        if toks[i + 1] == "]":
            return (), i + 2
        out = []
        i += 1
        while True:
            x, i = item(i)
            out.append(x)
            s = toks[i]
            if s == "]":
                return tuple(out), i + 1
            if s != ",":
                raise _GiveUp
            i += 1

    def local(i: int) -> tuple[tuple, int]:
        if toks[i] != "lv" or toks[i + 1] != "(" or toks[i + 3] != ",":
            raise _GiveUp
        v, j = value(i + 4)
        if toks[j] != ")":
            raise _GiveUp
        return (name(i + 2), v), j + 1

    def field_decl(i: int) -> tuple[FieldDecl, int]:
        kind = toks[i]
        if kind not in ("cf", "of") or toks[i + 1] != "(" or toks[i + 3] != ")":
            raise _GiveUp
        return FieldDecl(FieldKind(kind), name(i + 2)), i + 4

    def comma(i: int) -> int:
        if toks[i] != ",":
            raise _GiveUp
        return i + 1

    def read(i: int) -> tuple[TraceEvent, int]:
        if toks[i] != "event" or toks[i + 1] != "(" or toks[i + 3] != "," or toks[i + 5] != ",":
            raise _GiveUp
        event_id = integer(toks[i + 2], 0)
        thread = name(i + 4)
        f = toks[i + 6]
        if toks[i + 7] != "(":
            raise _GiveUp
        i += 8
        if f == "methodcall":
            loc = location(i)
            subj, i = subject(comma(i + 6))
            method = name(comma(i))
            args, i = sequence(comma(i + 2), value)
            ev = MethodCall(loc, subj, method, args)
        elif f == "methodexit":
            call_id = integer(toks[i], 0)
            loc = location(comma(i + 1))
            subj, i = subject(comma(i + 8))
            method = name(comma(i))
            ret, i = value(comma(i + 2), True)
            ev = MethodExit(call_id, loc, subj, method, ret)
        elif f == "step":
            loc = location(i)
            locals_, i = sequence(comma(i + 6), local)
            ev = Step(loc, locals_)
        elif f == "setfield":
            loc = location(i)
            subj, i = subject(comma(i + 6))
            field_name = name(comma(i))
            v, i = value(comma(i + 2))
            ev = SetField(loc, subj, field_name, v)
        elif f == "datastructure":
            loc = location(i)
            contents, i = sequence(comma(i + 6), value)
            ev = DataStructure(loc, contents)
        elif f == "exception":
            loc = location(i)
            obj, i = subject(comma(i + 6))
            if not isinstance(obj, ObjectRef):
                raise _GiveUp
            message, i = value(comma(i))
            i = comma(i)
            if toks[i] == "uncaught" and toks[i + 1] != "(":
                catch, i = UNCAUGHT, i + 1
            else:
                catch, i = location(i), i + 6
            ev = ExceptionEvent(loc, obj, message, catch)
        elif f == "threadstart" or f == "threaddeath":
            who = name(i)
            ev = ThreadStart(who) if f == "threadstart" else ThreadDeath(who)
            i += 1
        elif f == "memberfields":
            cls, i = subject(i)
            if not isinstance(cls, ClassRef):
                raise _GiveUp
            decls, i = sequence(comma(i), field_decl)
            ev = MemberFields(cls.class_name, decls)
        else:
            raise _GiveUp
        if toks[i] != ")" or toks[i + 1] != ")" or toks[i + 2] != ".":
            raise _GiveUp
        return TraceEvent(event_id, thread, ev), i + 3

    return read


def iter_trace(text: str) -> Iterator[TraceEvent]:
    lex = Lexer(text)
    tokens = lex._tokens
    read = _event_reader(tokens)
    while lex._i < len(tokens) or not lex.done():
        try:
            event, lex._i = read(lex._i)
        except (_GiveUp, IndexError, ValueError):
            term = lex.read_term()
            lex.expect(".")
            event = term_event(term)
        yield event


def parse_trace(text: str) -> list[TraceEvent]:
    """Parse JEL text into events, in file order."""
    # The result is a large acyclic structure; cyclic collection passes over
    # it while it grows cost a quarter of the parse time and free nothing.
    paused = gc.isenabled()
    gc.disable()
    try:
        return list(iter_trace(text))
    finally:
        if paused:
            gc.enable()


def _parse_single(text: str, **lexopts) -> Term:
    lex = Lexer(text, **lexopts)
    term = parse_term(lex)
    tok = lex.peek()
    if tok.kind != "eof":
        raise ParseError(tok.line, tok.column, "end of input", tok.describe())
    return term


def parse_value(text: str):
    return term_value(_parse_single(text), allow_void=True)


def parse_location(text: str) -> Location:
    return term_location(_parse_single(text))


def parse_subject(text: str):
    return term_subject(_parse_single(text))


# -- serialization -----------------------------------------------------------


def quote(text: str) -> str:
    return "'" + text.replace("'", "''") + "'"


def format_location(loc: Location) -> str:
    return f"l({quote(loc.file)}, {loc.line})"


def format_value(v) -> str:
    if isinstance(v, Null):
        return "'null'"
    if isinstance(v, Void):
        return "'void'"
    if isinstance(v, Scalar):
        return quote(v.text)
    if isinstance(v, ObjectRef):
        return f"o({quote(v.class_name)}, {v.object_id})"
    if isinstance(v, ClassRef):
        return f"c({quote(v.class_name)})"
    raise TypeError(f"not a value: {v!r}")


format_subject = format_value


def _values(vs: Iterable) -> str:
    return "[" + ", ".join(format_value(v) for v in vs) + "]"


def format_payload(ev) -> str:
    if isinstance(ev, MethodCall):
        return (
            f"methodcall({format_location(ev.location)}, {format_subject(ev.subject)}, "
            f"{quote(ev.name)}, {_values(ev.args)})"
        )
    if isinstance(ev, MethodExit):
        return (
            f"methodexit({ev.call_id}, {format_location(ev.location)}, "
            f"{format_subject(ev.subject)}, {quote(ev.name)}, {format_value(ev.return_value)})"
        )
    if isinstance(ev, SetField):
        return (
            f"setfield({format_location(ev.location)}, {format_subject(ev.subject)}, "
            f"{quote(ev.field_name)}, {format_value(ev.value)})"
        )
    if isinstance(ev, DataStructure):
        return f"datastructure({format_location(ev.location)}, {_values(ev.contents)})"
    if isinstance(ev, Step):
        lvs = ", ".join(f"lv({quote(n)}, {format_value(v)})" for n, v in ev.locals)
        return f"step({format_location(ev.location)}, [{lvs}])"
    if isinstance(ev, ExceptionEvent):
        catch = "uncaught" if isinstance(ev.catch, Uncaught) else format_location(ev.catch)
        return (
            f"exception({format_location(ev.location)}, {format_subject(ev.instance)}, "
            f"{format_value(ev.message)}, {catch})"
        )
    if isinstance(ev, ThreadStart):
        return f"threadstart({quote(ev.group)})"
    if isinstance(ev, ThreadDeath):
        return f"threaddeath({quote(ev.group)})"
    if isinstance(ev, MemberFields):
        decls = ", ".join(f"{d.kind.value}({quote(d.name)})" for d in ev.fields)
        return f"memberfields(c({quote(ev.class_name)}), [{decls}])"
    raise TypeError(f"not an execution event: {ev!r}")


def serialize_event(e: TraceEvent) -> str:
    return f"event({e.id}, {quote(e.thread)}, {format_payload(e.event)})."


def serialize_trace(events: Iterable[TraceEvent]) -> str:
    """Canonical text: one fact per line, newline-terminated."""
    return "".join(serialize_event(e) + "\n" for e in events)
