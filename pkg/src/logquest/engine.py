"""Question answering pipeline: parse, retrieve, prove, rank, highlight.

The engine owns immutable state loaded at startup (corpus index, background
knowledge, question patterns, both ranker models) and answers one question at
a time within a wall-clock budget.  Passage candidates are proved in rank
order, a few in flight at once; results merge by rank, so scheduling never
changes the output.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .parsing import (
    InterpretedQuestion,
    interpret_question,
    load_corpus,
    load_kb,
    load_patterns,
    parse_term_text,
)
from .prover import Limits, prove
from .ranking import (
    AnswerCandidate,
    AnswerFeatures,
    LinearModel,
    RankedAnswer,
    load_model,
    rank_answers,
)
from .relaxation import RelaxationOutcome, prove_with_relaxation
from .retrieval import (
    STOPWORDS,
    InvertedIndex,
    Passage,
    SynonymLexicon,
    rank_passages,
    token_spans,
    tokenize,
)
from .terms import Clause, Query, apply_atom, format_term, is_ground_term

# Extra wall time allowed beyond the budget formula for scheduling and
# answer assembly.  A call to ask() returns within
# question_budget + (max_relax + 1) * per_candidate_budget + SCHEDULING_SLACK.
SCHEDULING_SLACK = 0.25

DIAG_NO_PASSAGES = "no matching passages"
DIAG_NO_ANSWER = "no answer found"
DIAG_ONLY_RELAXED = "answers found only via relaxation"
DIAG_NOT_UNDERSTOOD = "question not understood"


def default_asset(relative: str) -> str:
    return str(resources.files("logquest").joinpath("assets", relative))


_INT_FIELDS = {"top_k_passages", "max_relax", "max_level", "answers_returned",
               "max_branches", "proof_workers"}
_FLOAT_FIELDS = {"per_candidate_budget", "question_budget"}


@dataclass(frozen=True)
class PipelineConfig:
    """Knobs and asset locations for one engine instance.

    Durations are seconds.  ``proof_workers`` bounds how many candidate
    proofs run in flight at once; 1 means strictly sequential.
    """

    top_k_passages: int = 200
    per_candidate_budget: float = 0.2
    max_relax: int = 2
    max_level: int = 12
    answers_returned: int = 3
    question_budget: float = 10.0
    max_branches: int = 64
    proof_workers: int = 4
    corpus_path: str = field(default_factory=lambda: default_asset("corpus/demo.jsonl"))
    kb_path: str = field(default_factory=lambda: default_asset("kb/background.lkb"))
    patterns_path: str = field(default_factory=lambda: default_asset("patterns/en.qpat"))
    synonyms_path: str = field(default_factory=lambda: default_asset("lexicon/en.syn"))
    passage_model_path: str = field(default_factory=lambda: default_asset("models/passage.lrm"))
    answer_model_path: str = field(default_factory=lambda: default_asset("models/answer.lrm"))
    ui_dir: str = ""

    def __post_init__(self) -> None:
        for name in _INT_FIELDS | _FLOAT_FIELDS:
            if name != "max_relax" and getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.max_relax < 0:
            raise ValueError("max_relax must be non-negative")
        if self.answers_returned > self.top_k_passages:
            raise ValueError("answers_returned must not exceed top_k_passages")

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        """Flat key=value file; ``#`` starts a comment; unknown keys rejected."""
        known = {f.name for f in fields(cls)}
        overrides: dict[str, object] = {}
        for number, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{number}: expected key=value, got {raw!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if key not in known:
                raise ValueError(f"{path}:{number}: unknown config key {key!r}")
            if key in _INT_FIELDS:
                overrides[key] = int(value)
            elif key in _FLOAT_FIELDS:
                overrides[key] = float(value)
            else:
                overrides[key] = value
        return cls(**overrides)

    @classmethod
    def from_env(cls) -> "PipelineConfig":
        """Config from the file named by LOGQUEST_CONFIG, or defaults."""
        import os

        path = os.environ.get("LOGQUEST_CONFIG")
        if path:
            return cls.from_file(path)
        return cls()

    def to_dict(self) -> dict[str, object]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class AnswerRecord:
    answer_text: str
    bindings: dict[str, str]
    confidence: float
    passage_id: str
    passage_text: str
    highlight_spans: list[tuple[int, int]]
    relax_count: int
    dropped_subgoals: list[str]

    def to_dict(self) -> dict[str, object]:
        return {
            "answer_text": self.answer_text,
            "bindings": dict(self.bindings),
            "confidence": self.confidence,
            "passage_id": self.passage_id,
            "passage_text": self.passage_text,
            "highlight_spans": [list(span) for span in self.highlight_spans],
            "relax_count": self.relax_count,
            "dropped_subgoals": list(self.dropped_subgoals),
        }


@dataclass
class AskResult:
    records: list[AnswerRecord]
    diagnostic: Optional[str]
    elapsed: float


def render_constant(text: str) -> str:
    """Constants store multiword names with underscores; undo that."""
    return text.replace("_", " ")


def highlight_spans(
    text: str,
    answer_texts: Iterable[str],
    entity_fills: Iterable[str],
) -> list[tuple[int, int]]:
    """Byte-offset spans over ``text`` covering every token of the answers
    and the question's entity fills, case-insensitive on token boundaries.
    Adjacent matched tokens merge into one span; spans come back ascending
    and non-overlapping.  Entity fills are stopword-filtered so articles in
    a fill do not light up the whole passage."""
    targets: set[str] = set()
    for answer in answer_texts:
        targets.update(tokenize(answer))
    for fill in entity_fills:
        targets.update(t for t in tokenize(fill.replace("_", " ")) if t not in STOPWORDS)
    if not targets:
        return []
    char_spans: list[tuple[int, int]] = []
    for token, start, end in token_spans(text):
        if token.lower() not in targets:
            continue
        if char_spans and text[char_spans[-1][1]:start].isspace():
            char_spans[-1] = (char_spans[-1][0], end)
        else:
            char_spans.append((start, end))
    byte_spans: list[tuple[int, int]] = []
    cursor_chars = 0
    cursor_bytes = 0
    for start, end in char_spans:
        cursor_bytes += len(text[cursor_chars:start].encode("utf-8"))
        span_start = cursor_bytes
        cursor_bytes += len(text[start:end].encode("utf-8"))
        byte_spans.append((span_start, cursor_bytes))
        cursor_chars = end
    return byte_spans


@dataclass
class _Candidate:
    rank: int
    passage: Passage
    score: float


class Engine:
    """Loads all immutable state once; ``ask`` is safe to call concurrently."""

    def __init__(self, config: PipelineConfig) -> None:
        self.config = config
        self.lexicon = SynonymLexicon.load(config.synonyms_path)
        self.index = InvertedIndex(load_corpus(config.corpus_path), self.lexicon)
        self.background: list[Clause] = load_kb(config.kb_path)
        self.patterns = load_patterns(config.patterns_path)
        self.passage_model = _expect_kind(load_model(config.passage_model_path), "passage")
        self.answer_model = _expect_kind(load_model(config.answer_model_path), "answer")

    # -- public API ----------------------------------------------------------

    def interpret(self, question: str) -> InterpretedQuestion:
        return interpret_question(question, self.patterns)

    def ask(
        self,
        question: str,
        answers: Optional[int] = None,
        max_relax: Optional[int] = None,
    ) -> AskResult:
        started = time.monotonic()
        config = self.config
        n_answers = config.answers_returned if answers is None else answers
        relax_cap = config.max_relax if max_relax is None else max_relax
        if n_answers < 1 or n_answers > config.top_k_passages:
            raise ValueError("answers must be between 1 and top_k_passages")
        if relax_cap < 0:
            raise ValueError("max_relax must be non-negative")

        interpreted = self.interpret(question)
        candidates = [
            _Candidate(rank, self.index.passages[pid], score)
            for rank, (pid, score) in enumerate(
                rank_passages(question, self.index, self.passage_model, config.top_k_passages)
            )
        ]
        if not candidates:
            return AskResult([], DIAG_NO_PASSAGES, time.monotonic() - started)

        outcomes = self._prove_candidates(candidates, interpreted.query, relax_cap, started)
        ranked = self._rank(outcomes, n_answers * 4)
        hard_deadline = (
            started
            + config.question_budget
            + (relax_cap + 1) * config.per_candidate_budget
            + SCHEDULING_SLACK
        )
        records = self._emit(ranked, interpreted, n_answers, hard_deadline)

        if not records:
            diagnostic: Optional[str] = DIAG_NO_ANSWER
        elif all(r.relax_count > 0 for r in records):
            diagnostic = DIAG_ONLY_RELAXED
        else:
            diagnostic = None
        return AskResult(records, diagnostic, time.monotonic() - started)

    # -- pipeline stages -----------------------------------------------------

    def _prove_candidates(
        self,
        candidates: list[_Candidate],
        query: Query,
        relax_cap: int,
        started: float,
    ) -> list[tuple[_Candidate, RelaxationOutcome]]:
        config = self.config
        limits = Limits(config.max_level, config.per_candidate_budget, config.max_branches)
        deadline = started + config.question_budget
        outcomes: list[tuple[_Candidate, RelaxationOutcome]] = []

        def task(candidate: _Candidate) -> RelaxationOutcome:
            return prove_with_relaxation(
                self.background, candidate.passage, query, limits, relax_cap
            )

        workers = config.proof_workers
        if workers == 1:
            for candidate in candidates:
                if time.monotonic() > deadline:
                    break
                outcomes.append((candidate, task(candidate)))
            return outcomes

        # Waves of at most `workers` proofs; the launch check sits at wave
        # boundaries so at most one wave runs past the question budget.
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for base in range(0, len(candidates), workers):
                if time.monotonic() > deadline:
                    break
                wave = candidates[base:base + workers]
                futures = [pool.submit(task, c) for c in wave]
                for candidate, future in zip(wave, futures):
                    outcomes.append((candidate, future.result()))
        return outcomes

    def _rank(
        self,
        outcomes: list[tuple[_Candidate, RelaxationOutcome]],
        pool_size: int,
    ) -> list[tuple[RankedAnswer, _Candidate, RelaxationOutcome]]:
        pool: list[AnswerCandidate] = []
        origin: dict[tuple, tuple[_Candidate, RelaxationOutcome]] = {}
        for candidate, outcome in outcomes:
            if outcome.result.status != "answers_found":
                continue
            for answer in outcome.result.answers:
                features = AnswerFeatures(
                    relax_count=float(outcome.relaxed.relax_count),
                    proof_level=float(answer.proof_level),
                    retrieval_score=candidate.score,
                    passage_support_ratio=answer.support_ratio,
                    answer_is_ground=float(
                        all(is_ground_term(t) for _, t in answer.bindings)
                    ),
                )
                item = AnswerCandidate.build(
                    answer.as_subst(),
                    features,
                    candidate.passage.id,
                    outcome.relaxed.dropped_texts(),
                )
                pool.append(item)
                key = (item.bindings, item.passage_id)
                if key not in origin:
                    origin[key] = (candidate, outcome)
        ranked = rank_answers(pool, self.answer_model, pool_size)
        return [
            (entry, *origin[(entry.candidate.bindings, entry.candidate.passage_id)])
            for entry in ranked
        ]

    def _emit(
        self,
        ranked: list[tuple[RankedAnswer, _Candidate, RelaxationOutcome]],
        interpreted: InterpretedQuestion,
        n_answers: int,
        hard_deadline: float,
    ) -> list[AnswerRecord]:
        config = self.config
        records: list[AnswerRecord] = []
        for entry, candidate, outcome in ranked:
            if len(records) >= n_answers:
                break
            margin = hard_deadline - time.monotonic() - 0.05
            if margin <= 0:
                break
            budget = min(config.per_candidate_budget, margin)
            if not self._recheck(entry, candidate, outcome, budget):
                continue
            records.append(self._record(entry, candidate, outcome, interpreted))
        return records

    def _recheck(
        self,
        entry: RankedAnswer,
        candidate: _Candidate,
        outcome: RelaxationOutcome,
        budget: float,
    ) -> bool:
        """Entailment gate: the bindings substituted into the relaxed query
        must be provable again before the record leaves the engine."""
        subst = {var: parse_term_text(text) for var, text in entry.candidate.bindings}
        goals = tuple(apply_atom(subst, g) for g in outcome.relaxed.query.subgoals)
        check = Query(goals, ())
        limits = Limits(self.config.max_level, budget, self.config.max_branches)
        result = prove(self.background, candidate.passage, check, limits)
        return result.status == "answers_found"

    def _record(
        self,
        entry: RankedAnswer,
        candidate: _Candidate,
        outcome: RelaxationOutcome,
        interpreted: InterpretedQuestion,
    ) -> AnswerRecord:
        bindings = {var: text for var, text in entry.candidate.bindings}
        answer_var = interpreted.pattern.answer_var
        if answer_var is not None and answer_var in bindings:
            answer_text = render_constant(bindings[answer_var])
        elif bindings:
            answer_text = render_constant(next(iter(bindings.values())))
        else:
            answer_text = "Yes"
        spans = highlight_spans(
            candidate.passage.text,
            [render_constant(v) for v in bindings.values()],
            interpreted.fills.values(),
        )
        return AnswerRecord(
            answer_text=answer_text,
            bindings=bindings,
            confidence=entry.confidence,
            passage_id=candidate.passage.id,
            passage_text=candidate.passage.text,
            highlight_spans=spans,
            relax_count=outcome.relaxed.relax_count,
            dropped_subgoals=list(outcome.relaxed.dropped_texts()),
        )


def _expect_kind(model: LinearModel, kind: str) -> LinearModel:
    if model.kind != kind:
        raise ValueError(f"expected a {kind} model, got {model.kind}")
    return model


# ---------------------------------------------------------------------------
# Benchmark
# ---------------------------------------------------------------------------

@dataclass
class BenchReport:
    total: int
    correct_at_3: int
    accuracy_at_3: float
    median_latency: float
    p99_latency: float
    failures: list[tuple[str, str, list[str]]]  # question, expected, got


def load_gold(path: str | Path) -> list[tuple[str, str]]:
    """Gold pairs, one per line: question TAB expected answer text."""
    pairs: list[tuple[str, str]] = []
    for number, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "\t" not in line:
            raise ValueError(f"{path}:{number}: expected question<TAB>answer")
        question, _, expected = line.partition("\t")
        pairs.append((question.strip(), expected.strip()))
    return pairs


def _percentile(samples: Sequence[float], q: float) -> float:
    ordered = sorted(samples)
    if not ordered:
        return 0.0
    index = min(len(ordered) - 1, max(0, round(q * (len(ordered) - 1))))
    return ordered[int(index)]


def run_benchmark(engine: Engine, gold_path: str | Path) -> BenchReport:
    pairs = load_gold(gold_path)
    latencies: list[float] = []
    correct = 0
    failures: list[tuple[str, str, list[str]]] = []
    for question, expected in pairs:
        result = engine.ask(question)
        latencies.append(result.elapsed)
        got = [r.answer_text for r in result.records[:3]]
        if any(g.casefold() == expected.casefold() for g in got):
            correct += 1
        else:
            failures.append((question, expected, got))
    total = len(pairs)
    return BenchReport(
        total=total,
        correct_at_3=correct,
        accuracy_at_3=correct / total if total else 0.0,
        median_latency=_percentile(latencies, 0.5),
        p99_latency=_percentile(latencies, 0.99),
        failures=failures,
    )
