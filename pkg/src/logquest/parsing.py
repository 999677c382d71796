"""Text formats: clauses, queries, question patterns, corpora.

Concrete syntax is Prolog-adjacent: lowercase-initial identifiers are
constants and predicate/function symbols, uppercase- or underscore-initial
are variables, ``%`` starts a comment.  ``false`` as a clause head denotes an
integrity constraint.  Tokens starting with a digit are constants, so years
and normalized entity names like ``1984_the_novel`` parse unchanged.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

from . import retrieval
from .retrieval import Passage
from .terms import (
    ANS,
    DOM,
    EQ,
    Atom,
    Clause,
    Compound,
    Const,
    Query,
    Term,
    Var,
    variables_of,
)


class ParseError(ValueError):
    """Syntax error with line/column and the offending token."""

    def __init__(self, message: str, line: int, column: int, token: str = ""):
        self.line = line
        self.column = column
        self.token = token
        where = f"line {line}, column {column}"
        if token:
            where += f" at {token!r}"
        super().__init__(f"{message} ({where})")


class NoPatternMatch(ValueError):
    """No question pattern matched; reported to users as not understood."""

    def __init__(self, question: str):
        self.question = question
        super().__init__(f"question not understood: {question!r}")


# ---------------------------------------------------------------------------
# Tokenizer
# ---------------------------------------------------------------------------

_TOKEN_SPEC = re.compile(
    r"""(?P<ws>\s+)
      | (?P<comment>%[^\n]*)
      | (?P<implies>:-)
      | (?P<query>\?-)
      | (?P<var>[A-Z_][A-Za-z0-9_]*)
      | (?P<ident>[a-z0-9][A-Za-z0-9_]*)
      | (?P<punct>[(),;.=])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str  # implies | query | var | ident | punct | end
    text: str
    line: int
    column: int


def _lex(text: str, line: int = 1) -> list[_Token]:
    tokens: list[_Token] = []
    position = 0
    while position < len(text):
        m = _TOKEN_SPEC.match(text, position)
        if m is None:
            raise ParseError("unexpected character", line, position + 1, text[position])
        kind = m.lastgroup or ""
        if kind not in ("ws", "comment"):
            tokens.append(_Token(kind, m.group(), line, m.start() + 1))
        position = m.end()
    tokens.append(_Token("end", "", line, len(text) + 1))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.position = 0

    @property
    def current(self) -> _Token:
        return self.tokens[self.position]

    def advance(self) -> _Token:
        token = self.current
        self.position += 1
        return token

    def fail(self, message: str) -> ParseError:
        t = self.current
        return ParseError(message, t.line, t.column, t.text)

    def expect(self, text: str) -> _Token:
        if self.current.text != text:
            raise self.fail(f"expected {text!r}")
        return self.advance()

    def parse_term(self) -> Term:
        token = self.current
        if token.kind == "var":
            self.advance()
            return Var(token.text)
        if token.kind == "ident":
            self.advance()
            if self.current.text == "(":
                self.advance()
                args = self.parse_term_list()
                self.expect(")")
                return Compound(token.text, tuple(args))
            return Const(token.text)
        raise self.fail("expected a term")

    def parse_term_list(self) -> list[Term]:
        terms = [self.parse_term()]
        while self.current.text == ",":
            self.advance()
            terms.append(self.parse_term())
        return terms

    def parse_atom(self) -> Atom:
        token = self.current
        if token.kind == "ident" or token.text == EQ:
            self.advance()
        else:
            raise self.fail("expected a predicate")
        if self.current.text == "(":
            self.advance()
            args = self.parse_term_list()
            self.expect(")")
            atom = Atom(token.text, tuple(args))
        else:
            atom = Atom(token.text)
        if atom.pred == EQ and atom.arity != 2:
            raise ParseError("= takes exactly two arguments", token.line, token.column, token.text)
        return atom

    def parse_atom_list(self, separator: str) -> list[Atom]:
        atoms = [self.parse_atom()]
        while self.current.text == separator:
            self.advance()
            atoms.append(self.parse_atom())
        return atoms

    def at_end(self) -> bool:
        return self.current.kind == "end"


def parse_clause(line: str, origin: str = "background", line_number: int = 1) -> Clause:
    """Parse one clause: ``h1 ; h2 :- b1, b2.`` (``false`` head = constraint)."""
    parser = _Parser(_lex(line, line_number))
    if parser.at_end():
        raise parser.fail("empty clause")
    if parser.current.text == "false":
        parser.advance()
        head: tuple[Atom, ...] = ()
    else:
        head = tuple(parser.parse_atom_list(";"))
    body: tuple[Atom, ...] = ()
    if parser.current.text == ":-":
        parser.advance()
        body = tuple(parser.parse_atom_list(","))
    parser.expect(".")
    if not parser.at_end():
        raise parser.fail("trailing input after clause")
    return Clause(head, body, origin)


def parse_query(line: str, line_number: int = 1) -> Query:
    """Parse ``?- atom, ..., atom.``; answer variables in first-occurrence order."""
    parser = _Parser(_lex(line, line_number))
    if parser.current.kind != "query":
        raise parser.fail("expected ?-")
    parser.advance()
    if parser.current.text == ".":
        raise parser.fail("query needs at least one subgoal")
    subgoals = tuple(parser.parse_atom_list(","))
    parser.expect(".")
    if not parser.at_end():
        raise parser.fail("trailing input after query")
    return Query(subgoals, tuple(variables_of(subgoals)))


def parse_term_text(text: str) -> Term:
    """Parse a single term, the inverse of ``format_term``."""
    parser = _Parser(_lex(text))
    term = parser.parse_term()
    if not parser.at_end():
        raise parser.fail("trailing input after term")
    return term


def load_kb(path: str | Path, origin: str = "background") -> list[Clause]:
    """Load a ``.lkb`` file: one clause per line, ``%`` comments, blanks ignored."""
    clauses = []
    for line_number, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        stripped = raw.split("%", 1)[0].strip()
        if not stripped:
            continue
        clauses.append(parse_clause(stripped, origin, line_number))
    return clauses


# ---------------------------------------------------------------------------
# Question patterns
# ---------------------------------------------------------------------------

_SLOT_RE = re.compile(r"<([a-z][a-z0-9_]*)>")
_FILL_RE = re.compile(r"^[a-z0-9_]+$")


@dataclass(frozen=True)
class QuestionPattern:
    """Controlled-English template paired with a query template.

    ``template`` is a lowercase token sequence where ``<name>`` slots each
    match one or more question tokens (shortest span first).  The query
    template carries the same slots plus at most one variable: the answer.
    """

    template: tuple[str, ...]
    query_text: str
    slots: frozenset[str]
    answer_var: Optional[str]

    @classmethod
    def parse(cls, template_text: str, query_text: str, line_number: int = 1) -> "QuestionPattern":
        template = tuple(template_text.lower().split())
        if not template:
            raise ParseError("empty template", line_number, 1)
        template_slots = {m.group(1) for t in template for m in _SLOT_RE.finditer(t)}
        query_slots = set(_SLOT_RE.findall(query_text))
        if not query_slots <= template_slots:
            missing = ", ".join(sorted(query_slots - template_slots))
            raise ParseError(f"query slots not in template: {missing}", line_number, 1)
        probe = _fill_slots(query_text, {name: name for name in query_slots})
        query = parse_query(probe, line_number)
        if len(query.answer_vars) > 1:
            raise ParseError(
                f"pattern may bind at most one answer variable, found {len(query.answer_vars)}",
                line_number,
                1,
            )
        answer_var = query.answer_vars[0] if query.answer_vars else None
        return cls(template, query_text, frozenset(template_slots), answer_var)


def _fill_slots(query_text: str, fills: dict[str, str]) -> str:
    def replace(m: re.Match) -> str:
        return fills[m.group(1)]

    return _SLOT_RE.sub(replace, query_text)


def load_patterns(path: str | Path) -> list[QuestionPattern]:
    """Load a ``.qpat`` file: template TAB query-template, ``#`` comments."""
    patterns = []
    for line_number, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        stripped = raw.split("#", 1)[0].rstrip()
        if not stripped.strip():
            continue
        parts = stripped.split("\t")
        if len(parts) != 2:
            raise ParseError("expected template TAB query-template", line_number, 1)
        patterns.append(QuestionPattern.parse(parts[0].strip(), parts[1].strip(), line_number))
    return patterns


def match_template(template: tuple[str, ...], tokens: Sequence[str]) -> Optional[dict[str, str]]:
    """Match question tokens against a template; slots take the shortest span
    that lets the rest of the template succeed.  Spans join with ``_``."""

    def walk(ti: int, qi: int, fills: dict[str, str]) -> Optional[dict[str, str]]:
        if ti == len(template):
            return dict(fills) if qi == len(tokens) else None
        part = template[ti]
        m = _SLOT_RE.fullmatch(part)
        if m:
            name = m.group(1)
            for span_end in range(qi + 1, len(tokens) + 1):
                fills[name] = "_".join(tokens[qi:span_end])
                result = walk(ti + 1, span_end, fills)
                if result is not None:
                    return result
            fills.pop(name, None)
            return None
        if qi < len(tokens) and tokens[qi] == part:
            return walk(ti + 1, qi + 1, fills)
        return None

    return walk(0, 0, {})


@dataclass(frozen=True)
class InterpretedQuestion:
    query: Query
    pattern: QuestionPattern
    fills: dict[str, str]


def interpret_question(question: str, patterns: Sequence[QuestionPattern]) -> InterpretedQuestion:
    """First matching pattern (file order) wins; raises NoPatternMatch."""
    if not patterns:
        raise NoPatternMatch(question)
    tokens = retrieval.tokenize(question.lower().rstrip("?"))
    for pattern in patterns:
        fills = match_template(pattern.template, tokens)
        if fills is None:
            continue
        if not all(_FILL_RE.fullmatch(v) for v in fills.values()):
            continue
        query = parse_query(_fill_slots(pattern.query_text, fills))
        return InterpretedQuestion(query, pattern, fills)
    raise NoPatternMatch(question)


def parse_question(question: str, patterns: Sequence[QuestionPattern]) -> Query:
    return interpret_question(question, patterns).query


# ---------------------------------------------------------------------------
# Corpus loading
# ---------------------------------------------------------------------------

class CorpusError(ValueError):
    def __init__(self, message: str, record: int):
        self.record = record
        super().__init__(f"record {record}: {message}")


def load_corpus(path: str | Path) -> list[Passage]:
    """Load a ``.jsonl`` corpus: one object per line with id, text, facts."""
    passages: list[Passage] = []
    seen: set[str] = set()
    record = 0
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        if not raw.strip():
            continue
        record += 1
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"invalid JSON: {exc.msg}", record) from None
        if not isinstance(obj, dict):
            raise CorpusError("record must be an object", record)
        pid = obj.get("id")
        text = obj.get("text")
        facts = obj.get("facts", [])
        if not isinstance(pid, str) or not pid:
            raise CorpusError("missing or invalid 'id'", record)
        if not isinstance(text, str):
            raise CorpusError("missing or invalid 'text'", record)
        if not isinstance(facts, list) or not all(isinstance(f, str) for f in facts):
            raise CorpusError("'facts' must be an array of clause strings", record)
        if pid in seen:
            raise CorpusError(f"duplicate passage id: {pid}", record)
        seen.add(pid)
        try:
            clauses = [parse_clause(f, origin=pid) for f in facts]
        except ParseError as exc:
            raise CorpusError(f"bad fact clause: {exc}", record) from None
        passages.append(Passage(pid, text, clauses))
    return passages


def check_reserved(clauses: Iterable[Clause], query: Optional[Query] = None) -> None:
    """Reject user input that names the engine-internal predicates."""
    def check_atoms(atoms: Iterable[Atom], where: str) -> None:
        for atom in atoms:
            if atom.pred in (DOM, ANS):
                raise ValueError(f"reserved predicate {atom.pred!r} in {where}")

    for clause in clauses:
        check_atoms(clause.head + clause.body, f"clause from {clause.origin}")
    if query is not None:
        check_atoms(query.subgoals, "query")
