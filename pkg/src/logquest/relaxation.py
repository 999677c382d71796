"""Query relaxation: drop the least supported subgoal and retry the proof.

When a query cannot be proved as asked, the subgoal with the fewest matching
facts is removed (rightmost wins a tie) and the prover runs again with a
fresh budget.  Relaxed answers are a superset of strict ones, so every answer
found this way is reported together with the subgoals given up to reach it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .prover import Limits, ProofResult, prove
from .retrieval import Passage
from .terms import Atom, Clause, Query, atom_variables, format_atom


class NothingDroppable(Exception):
    """No subgoal can be removed without losing the query entirely."""


@dataclass(frozen=True)
class RelaxedQuery:
    """A query together with the subgoals dropped to obtain it."""

    query: Query
    dropped: tuple[Atom, ...] = ()

    @property
    def relax_count(self) -> int:
        return len(self.dropped)

    def dropped_texts(self) -> tuple[str, ...]:
        return tuple(format_atom(a) for a in self.dropped)


def fact_counts(clauses: Sequence[Clause]) -> dict[str, int]:
    """Facts per predicate symbol; rules do not count as support."""
    counts: dict[str, int] = {}
    for clause in clauses:
        if clause.is_fact:
            pred = clause.head[0].pred
            counts[pred] = counts.get(pred, 0) + 1
    return counts


def _droppable(query: Query, index: int) -> bool:
    """A drop may not remove the last subgoal or orphan an answer variable."""
    remaining = [g for i, g in enumerate(query.subgoals) if i != index]
    if not remaining:
        return False
    covered: set[str] = set()
    for goal in remaining:
        covered.update(atom_variables(goal))
    return all(v in covered for v in query.answer_vars)


def relax_once(relaxed: RelaxedQuery, support: dict[str, int]) -> RelaxedQuery:
    """Drop the droppable subgoal with the least fact support; on a tie the
    rightmost one goes, since later subgoals tend to carry qualifications
    rather than the question's core."""
    query = relaxed.query
    best_index = -1
    best_count = None
    for index, goal in enumerate(query.subgoals):
        if not _droppable(query, index):
            continue
        count = support.get(goal.pred, 0)
        if best_count is None or count <= best_count:
            best_index = index
            best_count = count
    if best_index < 0:
        raise NothingDroppable(f"no droppable subgoal in {query!r}")
    dropped_goal = query.subgoals[best_index]
    rest = tuple(g for i, g in enumerate(query.subgoals) if i != best_index)
    return RelaxedQuery(
        Query(rest, query.answer_vars),
        relaxed.dropped + (dropped_goal,),
    )


@dataclass
class RelaxationOutcome:
    result: ProofResult
    relaxed: RelaxedQuery
    attempts: int


def prove_with_relaxation(
    background: Sequence[Clause],
    passage: Passage,
    query: Query,
    limits: Limits,
    max_relax: int = 2,
) -> RelaxationOutcome:
    """Prove, relaxing up to ``max_relax`` times until answers appear.  Each
    attempt gets a fresh time budget.  An inconsistent knowledge base stops
    the loop at once: weakening the query cannot repair a contradiction."""
    support = fact_counts(list(background) + list(passage.facts))
    relaxed = RelaxedQuery(query)
    attempts = 0
    while True:
        result = prove(background, passage, relaxed.query, limits)
        attempts += 1
        if result.status in ("answers_found", "kb_inconsistent"):
            return RelaxationOutcome(result, relaxed, attempts)
        if relaxed.relax_count >= max_relax:
            return RelaxationOutcome(result, relaxed, attempts)
        try:
            relaxed = relax_once(relaxed, support)
        except NothingDroppable:
            return RelaxationOutcome(result, relaxed, attempts)
