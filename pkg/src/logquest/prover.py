"""Hypertableau model generation over range-restricted clauses.

A clause fires only when its whole body is matched by ground atoms already on
the branch; the (ground) head then extends the branch, splitting it when the
head is disjunctive.  Saturation is breadth-first by derivation level inside a
branch, so ``max_level`` is a meaningful depth bound; branches are explored
depth-first, leftmost disjunct first.  Answers are read off as instances of
the reserved ``__ans`` predicate.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Iterable, Literal, Sequence

from .parsing import check_reserved
from .retrieval import Passage
from .terms import (
    ANS,
    Atom,
    Clause,
    Query,
    Subst,
    Term,
    Var,
    apply_atom,
    apply_term,
    congruence_axioms,
    domain_facts,
    format_clause,
    is_ground_atom,
    is_ground_term,
    match,
    match_term,
    range_restrict,
    signature_of,
)

Status = Literal["answers_found", "saturated_no_answer", "budget_exhausted", "kb_inconsistent"]
AnswerMode = Literal["brave", "cautious"]


@dataclass(frozen=True)
class Limits:
    """Resource bounds for one saturation run; all positive."""

    max_level: int = 12
    time_budget: float = 0.2  # seconds
    max_branches: int = 64

    def __post_init__(self) -> None:
        if self.max_level <= 0 or self.time_budget <= 0 or self.max_branches <= 0:
            raise ValueError("limits must be positive")


@dataclass(frozen=True)
class Answer:
    """One answer substitution with its proof depth and passage support."""

    bindings: tuple[tuple[str, Term], ...]
    proof_level: int
    support_ratio: float

    def as_subst(self) -> Subst:
        return dict(self.bindings)


@dataclass
class ProofStats:
    derived_atom_count: int = 0
    split_count: int = 0
    firing_count: int = 0
    open_branch_count: int = 0
    closed_branch_count: int = 0
    elapsed: float = 0.0


@dataclass
class ProofResult:
    status: Status
    answers: list[Answer]
    stats: ProofStats


# ---------------------------------------------------------------------------
# Problem compilation
# ---------------------------------------------------------------------------

def answer_rule(query: Query) -> Clause:
    head = Atom(ANS, tuple(Var(v) for v in query.answer_vars))
    return Clause((head,), query.subgoals, origin="builtin:query")


def compile_problem(
    background: Sequence[Clause],
    passage_facts: Sequence[Clause],
    query: Query,
) -> list[Clause]:
    """Range-restricted clause set ready for saturation: the input clauses,
    equality axioms when ``=`` occurs, ``dom`` facts for every constant, and
    the answer rule mapping query solutions to ``__ans`` instances."""
    inputs = list(background) + list(passage_facts)
    check_reserved(inputs, query)
    core = [range_restrict(c) for c in inputs]
    rule = range_restrict(answer_rule(query))
    signature = signature_of(inputs, query)
    equality = [range_restrict(c) for c in congruence_axioms(signature)]
    compiled = core + equality
    compiled += domain_facts(compiled + [rule])
    compiled.append(rule)
    return compiled


def format_problem(clauses: Iterable[Clause]) -> str:
    """Dump a compiled clause set in knowledge-base syntax for reproduction."""
    return "\n".join(format_clause(c) for c in clauses) + "\n"


# ---------------------------------------------------------------------------
# Branches
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Firing:
    clause_index: int
    ground_body: tuple[Atom, ...]
    heads: tuple[Atom, ...]
    level: int


class Branch:
    """One candidate model: ground atoms with derivation levels and origins."""

    __slots__ = (
        "atoms", "by_pred", "by_first_arg", "fired", "derivation",
        "delta", "pending_splits",
    )

    def __init__(self) -> None:
        self.atoms: dict[Atom, int] = {}
        self.by_pred: dict[str, list[Atom]] = {}
        self.by_first_arg: dict[tuple[str, Term], list[Atom]] = {}
        self.fired: set[tuple[int, tuple[Atom, ...]]] = set()
        # atom -> (deriving ground body, origin of the deriving clause)
        self.derivation: dict[Atom, tuple[tuple[Atom, ...], str]] = {}
        self.delta: list[Atom] = []
        self.pending_splits: list[_Firing] = []

    def copy(self) -> "Branch":
        twin = Branch.__new__(Branch)
        twin.atoms = dict(self.atoms)
        twin.by_pred = {k: list(v) for k, v in self.by_pred.items()}
        twin.by_first_arg = {k: list(v) for k, v in self.by_first_arg.items()}
        twin.fired = set(self.fired)
        twin.derivation = dict(self.derivation)
        twin.delta = list(self.delta)
        twin.pending_splits = list(self.pending_splits)
        return twin

    def add(self, atom: Atom, level: int, body: tuple[Atom, ...], origin: str) -> bool:
        if atom in self.atoms:
            return False
        self.atoms[atom] = level
        self.by_pred.setdefault(atom.pred, []).append(atom)
        if atom.args:
            self.by_first_arg.setdefault((atom.pred, atom.args[0]), []).append(atom)
        self.derivation[atom] = (body, origin)
        self.delta.append(atom)
        return True

    def extension_size(self, pred: str) -> int:
        return len(self.by_pred.get(pred, ()))

    def candidates(self, literal: Atom, subst: Subst) -> Sequence[Atom]:
        """Branch atoms that could match ``literal`` under ``subst``, narrowed
        through the first-argument index when that argument is ground."""
        if literal.args:
            first = apply_term(subst, literal.args[0])
            if is_ground_term(first):
                return self.by_first_arg.get((literal.pred, first), ())
        return self.by_pred.get(literal.pred, ())


# ---------------------------------------------------------------------------
# Saturation
# ---------------------------------------------------------------------------

class _Saturator:
    def __init__(
        self,
        clauses: Sequence[Clause],
        limits: Limits,
        mode: AnswerMode,
        passage_origins: frozenset[str],
    ) -> None:
        self.clauses = list(clauses)
        self.limits = limits
        self.mode = mode
        self.passage_origins = passage_origins
        self.deadline = time.monotonic() + limits.time_budget
        self.stats = ProofStats()
        self.limit_hit = False
        self.out_of_time = False
        self.join_ops = 0
        self.branches_created = 1
        self.derived_union: set[Atom] = set()
        # answer key -> (level, support); smallest level wins across branches
        self.answers: dict[tuple[Term, ...], tuple[int, float]] = {}
        self.answer_order: list[tuple[Term, ...]] = []
        self.branch_answer_sets: list[set[tuple[Term, ...]]] = []
        self.answer_vars = self._find_answer_vars()

    def _find_answer_vars(self) -> tuple[str, ...]:
        for clause in self.clauses:
            if clause.head and clause.head[0].pred == ANS:
                return tuple(
                    arg.name for arg in clause.head[0].args if isinstance(arg, Var)
                )
        return ()

    def expired(self) -> bool:
        if not self.out_of_time and time.monotonic() > self.deadline:
            self.out_of_time = True
            self.limit_hit = True
        return self.out_of_time

    # -- grounding ----------------------------------------------------------

    def collect_firings(self, branch: Branch, delta: list[Atom]) -> list[_Firing]:
        """All new firings with at least one body atom in ``delta``.  Every
        such firing is found by pivoting each body position over the delta;
        all-old groundings were collected in earlier rounds."""
        firings: list[_Firing] = []
        seen: set[tuple[int, tuple[Atom, ...]]] = set()
        for clause_index, clause in enumerate(self.clauses):
            body = clause.body
            if not body:
                continue
            for pivot in range(len(body)):
                pattern = body[pivot]
                rest = [body[i] for i in range(len(body)) if i != pivot]
                rest.sort(key=lambda a: branch.extension_size(a.pred))
                for fact in delta:
                    if fact.pred != pattern.pred or len(fact.args) != len(pattern.args):
                        continue
                    subst = match(pattern, fact)
                    if subst is None:
                        continue
                    self._join(branch, clause, clause_index, rest, 0, subst, seen, firings)
                if self.expired():
                    return firings
        return firings

    def _join(
        self,
        branch: Branch,
        clause: Clause,
        clause_index: int,
        rest: list[Atom],
        position: int,
        subst: Subst,
        seen: set[tuple[int, tuple[Atom, ...]]],
        firings: list[_Firing],
    ) -> None:
        # Large joins must notice an expired budget mid-enumeration, not only
        # at pivot boundaries; the mask keeps the clock read amortized.
        if self.out_of_time:
            return
        self.join_ops += 1
        if self.join_ops & 1023 == 0 and self.expired():
            return
        if position == len(rest):
            ground_body = tuple(apply_atom(subst, a) for a in clause.body)
            key = (clause_index, ground_body)
            if key in seen or key in branch.fired:
                return
            seen.add(key)
            heads = tuple(apply_atom(subst, h) for h in clause.head)
            if any(h in branch.atoms for h in heads):
                branch.fired.add(key)  # already satisfied; can never act
                return
            level = 1 + max((branch.atoms[a] for a in ground_body), default=-1)
            firings.append(_Firing(clause_index, ground_body, heads, level))
            return
        literal = rest[position]
        for candidate in branch.candidates(literal, subst):
            if len(candidate.args) != len(literal.args):
                continue
            local = dict(subst)
            if all(match_term(p, g, local) for p, g in zip(literal.args, candidate.args)):
                self._join(branch, clause, clause_index, rest, position + 1, local, seen, firings)

    # -- branch processing ---------------------------------------------------

    def run(self) -> ProofResult:
        start = time.monotonic()
        root = Branch()
        stack: list[Branch] = []
        if self._init_root(root):
            stack.append(root)
        else:
            self.stats.closed_branch_count = 1

        while stack:
            if self.expired():
                break
            branch = stack.pop()
            verdict = self._explore(branch, stack)
            if verdict == "open":
                self._harvest(branch)
                self.stats.open_branch_count += 1
            elif verdict == "closed":
                self.stats.closed_branch_count += 1
            # a "split" branch was replaced by its children on the stack

        # Work left on the stack at expiry is open; its atoms still count for
        # brave answers.
        for branch in stack:
            self._harvest(branch)
            self.stats.open_branch_count += 1

        self.stats.elapsed = time.monotonic() - start
        self.stats.derived_atom_count = len(self.derived_union)
        return self._result()

    def _init_root(self, root: Branch) -> bool:
        """Seed level-0 facts; False when a bare constraint closes the root."""
        for clause_index, clause in enumerate(self.clauses):
            if clause.body:
                continue
            root.fired.add((clause_index, ()))
            if not clause.head:
                return False
            for head in clause.head:
                if not is_ground_atom(head):
                    raise ValueError(f"clause is not range-restricted: {clause!r}")
            if len(clause.head) == 1:
                root.add(clause.head[0], 0, (), clause.origin)
            elif not any(h in root.atoms for h in clause.head):
                root.pending_splits.append(_Firing(clause_index, (), clause.head, 0))
        return True

    def _explore(self, branch: Branch, stack: list[Branch]) -> str:
        while True:
            if self.expired():
                return "open"
            if branch.delta:
                if not self._round(branch):
                    return "closed"
                continue
            if branch.pending_splits:
                if self._split(branch, stack):
                    return "split"
                continue  # split dropped (satisfied or over budget)
            return "open"

    def _round(self, branch: Branch) -> bool:
        """One saturation level; False when a constraint closes the branch."""
        delta = branch.delta
        branch.delta = []
        for firing in self.collect_firings(branch, delta):
            if self.expired():
                return True
            key = (firing.clause_index, firing.ground_body)
            if key in branch.fired:
                continue
            if any(h in branch.atoms for h in firing.heads):
                branch.fired.add(key)
                continue
            branch.fired.add(key)
            self.stats.firing_count += 1
            if not firing.heads:
                return False
            if firing.level > self.limits.max_level:
                self.limit_hit = True
                continue
            if len(firing.heads) == 1:
                self._add_atom(branch, firing.heads[0], firing)
            else:
                branch.pending_splits.append(firing)
        return True

    def _add_atom(self, branch: Branch, atom: Atom, firing: _Firing) -> None:
        origin = self.clauses[firing.clause_index].origin
        if branch.add(atom, firing.level, firing.ground_body, origin) and firing.level > 0:
            self.derived_union.add(atom)

    def _split(self, branch: Branch, stack: list[Branch]) -> bool:
        firing = branch.pending_splits.pop(0)
        if any(h in branch.atoms for h in firing.heads):
            return False
        if firing.level > self.limits.max_level:
            self.limit_hit = True
            return False
        if self.branches_created + len(firing.heads) > self.limits.max_branches:
            self.limit_hit = True
            return False
        children = []
        for head in firing.heads:
            child = branch.copy()
            self._add_atom(child, head, firing)
            children.append(child)
        self.stats.split_count += 1
        self.branches_created += len(children)
        stack.extend(reversed(children))  # leftmost disjunct explored first
        return True

    # -- answers -------------------------------------------------------------

    def _harvest(self, branch: Branch) -> None:
        branch_keys: set[tuple[Term, ...]] = set()
        trace_cache: dict[Atom, bool] = {}
        for atom in branch.by_pred.get(ANS, ()):  # insertion order
            key = atom.args
            branch_keys.add(key)
            level = branch.atoms[atom]
            known = self.answers.get(key)
            if known is not None and known[0] <= level:
                continue
            if known is None:
                self.answer_order.append(key)
            support = self._support_ratio(branch, atom, trace_cache)
            self.answers[key] = (level, support)
        self.branch_answer_sets.append(branch_keys)

    def _traces(self, branch: Branch, atom: Atom, cache: dict[Atom, bool]) -> bool:
        """True when the atom's derivation reaches a passage fact."""
        cached = cache.get(atom)
        if cached is not None:
            return cached
        body, origin = branch.derivation.get(atom, ((), ""))
        result = origin in self.passage_origins or any(
            self._traces(branch, b, cache) for b in body
        )
        cache[atom] = result
        return result

    def _support_ratio(self, branch: Branch, ans_atom: Atom, cache: dict[Atom, bool]) -> float:
        """Fraction of the answer's derivation cone grounded in the passage."""
        cone: set[Atom] = set()
        frontier = list(branch.derivation.get(ans_atom, ((), ""))[0])
        while frontier:
            atom = frontier.pop()
            if atom in cone:
                continue
            cone.add(atom)
            frontier.extend(branch.derivation.get(atom, ((), ""))[0])
        if not cone:
            return 0.0
        traced = sum(1 for atom in cone if self._traces(branch, atom, cache))
        return traced / len(cone)

    def _result(self) -> ProofResult:
        keys = list(self.answer_order)
        if self.mode == "cautious":
            universal: set[tuple[Term, ...]] = (
                set.intersection(*self.branch_answer_sets)
                if self.branch_answer_sets
                else set()
            )
            keys = [k for k in keys if k in universal]
        answers = [
            Answer(tuple(zip(self.answer_vars, key)), *self.answers[key])
            for key in keys
        ]
        if answers:
            status: Status = "answers_found"
        elif self.stats.open_branch_count == 0 and not self.limit_hit:
            status = "kb_inconsistent"
        elif self.limit_hit:
            status = "budget_exhausted"
        else:
            status = "saturated_no_answer"
        return ProofResult(status, answers, self.stats)


def saturate(
    clauses: Sequence[Clause],
    limits: Limits,
    mode: AnswerMode = "brave",
    passage_origins: Iterable[str] = (),
) -> ProofResult:
    """Saturate a range-restricted clause set and extract ``__ans`` answers."""
    return _Saturator(clauses, limits, mode, frozenset(passage_origins)).run()


def prove(
    background: Sequence[Clause],
    passage: Passage,
    query: Query,
    limits: Limits,
    mode: AnswerMode = "brave",
) -> ProofResult:
    """Compile and saturate one answer-candidate problem."""
    compiled = compile_problem(background, passage.facts, query)
    return saturate(compiled, limits, mode, passage_origins={passage.id})
