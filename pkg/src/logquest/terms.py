"""First-order terms, atoms, clauses and the clause transformations the prover relies on.

Everything here is immutable after construction and safe to share between
concurrent proof attempts.  Symbols are plain Python strings; string hashing
gives the O(1) amortized symbol comparison the prover's inner loop needs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Union

# Predicates reserved for the engine.  `=` is the equality predicate users may
# state in knowledge bases; `dom` and `__ans` are generated internally and are
# rejected in user input.
EQ = "="
DOM = "dom"
ANS = "__ans"
INTERNAL_PREDICATES = frozenset({DOM, ANS})


class Term:
    """Base class for variables, constants and compound terms."""

    __slots__ = ()


@dataclass(frozen=True, slots=True)
class Var(Term):
    name: str

    def __repr__(self) -> str:
        return self.name


@dataclass(frozen=True, slots=True)
class Const(Term):
    name: str

    def __repr__(self) -> str:
        return self.name


@dataclass(frozen=True, slots=True)
class Compound(Term):
    functor: str
    args: tuple[Term, ...]

    def __repr__(self) -> str:
        return f"{self.functor}({', '.join(map(repr, self.args))})"


@dataclass(frozen=True, slots=True)
class Atom:
    pred: str
    args: tuple[Term, ...] = ()

    @property
    def arity(self) -> int:
        return len(self.args)

    def __repr__(self) -> str:
        if not self.args:
            return self.pred
        return f"{self.pred}({', '.join(map(repr, self.args))})"


@dataclass(frozen=True, slots=True)
class Clause:
    """Disjunctive-head clause: ``h1 ; ... ; hm :- b1, ..., bn``.

    An empty head is an integrity constraint, an empty body makes the clause a
    fact (or a disjunctive fact).  ``origin`` tags where the clause came from:
    "background", a passage id, or a builtin tag for generated clauses.
    """

    head: tuple[Atom, ...]
    body: tuple[Atom, ...] = ()
    origin: str = "background"

    @property
    def is_fact(self) -> bool:
        return not self.body and len(self.head) == 1

    @property
    def is_constraint(self) -> bool:
        return not self.head

    def __repr__(self) -> str:
        return format_clause(self)


@dataclass(frozen=True, slots=True)
class Query:
    """Conjunction of subgoals with distinguished answer variables."""

    subgoals: tuple[Atom, ...]
    answer_vars: tuple[str, ...] = ()

    def __repr__(self) -> str:
        return format_query(self)


Subst = dict[str, Term]

Substitutable = Union[Term, Atom, Clause, Query]


# ---------------------------------------------------------------------------
# Matching and substitution
# ---------------------------------------------------------------------------

def match_term(pattern: Term, ground: Term, subst: Subst) -> bool:
    """Extend ``subst`` so that pattern instantiates to ``ground``; ground side
    must be variable-free, so the occurs check holds trivially."""
    if isinstance(pattern, Var):
        bound = subst.get(pattern.name)
        if bound is None:
            subst[pattern.name] = ground
            return True
        return bound == ground
    if isinstance(pattern, Const):
        return pattern == ground
    return (
        isinstance(ground, Compound)
        and pattern.functor == ground.functor
        and len(pattern.args) == len(ground.args)
        and all(match_term(p, g, subst) for p, g in zip(pattern.args, ground.args))
    )


def match(pattern: Atom, ground: Atom) -> Optional[Subst]:
    """One-sided unification of ``pattern`` against a ground atom.

    Returns a substitution binding only variables of ``pattern`` such that
    applying it to ``pattern`` yields ``ground``, or None if none exists.
    """
    if pattern.pred != ground.pred or len(pattern.args) != len(ground.args):
        return None
    subst: Subst = {}
    for p, g in zip(pattern.args, ground.args):
        if not match_term(p, g, subst):
            return None
    return subst


def apply_term(subst: Subst, term: Term) -> Term:
    if isinstance(term, Var):
        return subst.get(term.name, term)
    if isinstance(term, Compound):
        return Compound(term.functor, tuple(apply_term(subst, a) for a in term.args))
    return term


def apply_atom(subst: Subst, atom: Atom) -> Atom:
    return Atom(atom.pred, tuple(apply_term(subst, a) for a in atom.args))


def apply(subst: Subst, x: Substitutable) -> Substitutable:
    """Apply a substitution to a term, atom, clause or query."""
    if isinstance(x, Term):
        return apply_term(subst, x)
    if isinstance(x, Atom):
        return apply_atom(subst, x)
    if isinstance(x, Clause):
        return Clause(
            tuple(apply_atom(subst, a) for a in x.head),
            tuple(apply_atom(subst, a) for a in x.body),
            x.origin,
        )
    if isinstance(x, Query):
        return Query(tuple(apply_atom(subst, a) for a in x.subgoals), x.answer_vars)
    raise TypeError(f"cannot substitute into {type(x).__name__}")


def compose(first: Subst, second: Subst) -> Subst:
    """Substitution equivalent to applying ``first`` then ``second``."""
    out: Subst = {v: apply_term(second, t) for v, t in first.items()}
    for v, t in second.items():
        out.setdefault(v, t)
    return out


# ---------------------------------------------------------------------------
# Traversal helpers
# ---------------------------------------------------------------------------

def term_variables(term: Term) -> Iterator[str]:
    if isinstance(term, Var):
        yield term.name
    elif isinstance(term, Compound):
        for arg in term.args:
            yield from term_variables(arg)


def atom_variables(atom: Atom) -> Iterator[str]:
    for arg in atom.args:
        yield from term_variables(arg)


def variables_of(atoms: Iterable[Atom]) -> list[str]:
    """Variable names in first-occurrence order."""
    seen: dict[str, None] = {}
    for atom in atoms:
        for name in atom_variables(atom):
            seen.setdefault(name)
    return list(seen)


def term_constants(term: Term) -> Iterator[str]:
    if isinstance(term, Const):
        yield term.name
    elif isinstance(term, Compound):
        for arg in term.args:
            yield from term_constants(arg)


def clause_constants(clause: Clause) -> Iterator[str]:
    for atom in clause.head + clause.body:
        for arg in atom.args:
            yield from term_constants(arg)


def is_ground_term(term: Term) -> bool:
    if isinstance(term, Var):
        return False
    if isinstance(term, Compound):
        return all(is_ground_term(a) for a in term.args)
    return True


def is_ground_atom(atom: Atom) -> bool:
    return all(is_ground_term(a) for a in atom.args)


# ---------------------------------------------------------------------------
# Range restriction
# ---------------------------------------------------------------------------

def range_restrict(clause: Clause) -> Clause:
    """Append a ``dom`` literal for every head variable missing from the body.

    Guarantees that hyper-extension only ever adds ground atoms to a branch.
    """
    body_vars = set(variables_of(clause.body))
    missing = [v for v in variables_of(clause.head) if v not in body_vars]
    if not missing:
        return clause
    extra = tuple(Atom(DOM, (Var(v),)) for v in missing)
    return Clause(clause.head, clause.body + extra, clause.origin)


def domain_facts(clauses: Iterable[Clause], origin: str = "builtin:dom") -> list[Clause]:
    """One ``dom(k).`` fact per constant appearing anywhere in the clause set."""
    constants: set[str] = set()
    for clause in clauses:
        constants.update(clause_constants(clause))
    return [
        Clause((Atom(DOM, (Const(name),)),), (), origin)
        for name in sorted(constants)
    ]


def range_restrict_all(clauses: Iterable[Clause]) -> list[Clause]:
    """Range-restrict every clause and append the companion ``dom`` facts."""
    restricted = [range_restrict(c) for c in clauses]
    return restricted + domain_facts(restricted)


# ---------------------------------------------------------------------------
# Equality via congruence axioms
# ---------------------------------------------------------------------------

SignatureEntry = tuple[str, int, str]  # (symbol, arity, "pred" | "func")


def signature_of(clauses: Iterable[Clause], query: Optional[Query] = None) -> set[SignatureEntry]:
    sig: set[SignatureEntry] = set()

    def walk_term(term: Term) -> None:
        if isinstance(term, Compound):
            sig.add((term.functor, len(term.args), "func"))
            for arg in term.args:
                walk_term(arg)

    def walk_atom(atom: Atom) -> None:
        sig.add((atom.pred, atom.arity, "pred"))
        for arg in atom.args:
            walk_term(arg)

    for clause in clauses:
        for atom in clause.head + clause.body:
            walk_atom(atom)
    if query is not None:
        for atom in query.subgoals:
            walk_atom(atom)
    return sig


def congruence_axioms(signature: set[SignatureEntry]) -> list[Clause]:
    """Equality axioms: reflexivity over ``dom``, symmetry, transitivity, and one
    substitution axiom per predicate / function argument position.

    Returns [] unless ``=`` occurs in the signature.  Function substitution
    axioms are not range-restricted; run them through ``range_restrict``.
    """
    if (EQ, 2, "pred") not in signature:
        return []
    x, y, z = Var("X"), Var("Y"), Var("Z")
    origin = "builtin:eq"
    axioms = [
        Clause((Atom(EQ, (x, x)),), (Atom(DOM, (x,)),), origin),
        Clause((Atom(EQ, (y, x)),), (Atom(EQ, (x, y)),), origin),
        Clause((Atom(EQ, (x, z)),), (Atom(EQ, (x, y)), Atom(EQ, (y, z))), origin),
    ]
    skip = INTERNAL_PREDICATES | {EQ}
    for symbol, arity, kind in sorted(signature):
        if arity == 0 or (kind == "pred" and symbol in skip):
            continue
        args = tuple(Var(f"A{i + 1}") for i in range(arity))
        fresh = Var("B")
        for position in range(arity):
            replaced = args[:position] + (fresh,) + args[position + 1:]
            eq_atom = Atom(EQ, (args[position], fresh))
            if kind == "pred":
                axioms.append(
                    Clause((Atom(symbol, replaced),), (Atom(symbol, args), eq_atom), origin)
                )
            else:
                head = Atom(EQ, (Compound(symbol, args), Compound(symbol, replaced)))
                axioms.append(Clause((head,), (eq_atom,), origin))
    return axioms


# ---------------------------------------------------------------------------
# Printing (round-trips through the parser)
# ---------------------------------------------------------------------------

def format_term(term: Term) -> str:
    if isinstance(term, Var):
        return term.name
    if isinstance(term, Const):
        return term.name
    if isinstance(term, Compound):
        return f"{term.functor}({', '.join(format_term(a) for a in term.args)})"
    raise TypeError(f"not a term: {term!r}")


def format_atom(atom: Atom) -> str:
    if not atom.args:
        return atom.pred
    return f"{atom.pred}({', '.join(format_term(a) for a in atom.args)})"


def format_clause(clause: Clause) -> str:
    head = " ; ".join(format_atom(a) for a in clause.head) if clause.head else "false"
    if not clause.body:
        return f"{head}."
    body = ", ".join(format_atom(a) for a in clause.body)
    return f"{head} :- {body}."


def format_query(query: Query) -> str:
    return f"?- {', '.join(format_atom(a) for a in query.subgoals)}."
