"""Fit the bundled ranker models from the bundled corpus and gold set.

Passage model: for every gold question, each retrieval candidate becomes a
training row; the label is 1 when a budget-free strict proof of the question
on that passage yields the expected answer.  Answer model: proofs run with
relaxation enabled and every proved answer becomes a row, labelled by match
against the gold answer.  Both models train from zero with full-batch
gradient descent; the CSVs are written next to the models so `logquest
train` can reproduce them.
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

ASSETS = Path(__file__).resolve().parents[1] / "src" / "logquest" / "assets"

from logquest.engine import Engine, PipelineConfig, default_asset, load_gold, run_benchmark
from logquest.parsing import interpret_question, load_corpus, load_kb, load_patterns
from logquest.prover import Limits, prove
from logquest.ranking import (
    LinearModel,
    TrainingSet,
    save_model,
    save_training_csv,
    train,
)
from logquest.relaxation import prove_with_relaxation
from logquest.retrieval import InvertedIndex, SynonymLexicon, extract_features, rank_passages, score

PASSAGE_HEADER = [
    "matching_lexeme_count", "matching_lexeme_ratio", "proper_name_overlap",
    "bm25_score", "passage_length_log",
]
ANSWER_HEADER = [
    "relax_count", "proof_level", "retrieval_score",
    "passage_support_ratio", "answer_is_ground",
]

LIMITS = Limits(max_level=12, time_budget=2.0, max_branches=64)


def answers_of(result):
    out = {}
    for answer in result.answers:
        text = " ".join(str(term) for _, term in answer.bindings).replace("_", " ") or "yes"
        out[text] = answer
    return out


def expected_text(expected: str) -> str:
    return expected.casefold()


def main() -> int:
    kb = load_kb(default_asset("kb/background.lkb"))
    corpus = load_corpus(default_asset("corpus/demo.jsonl"))
    lexicon = SynonymLexicon.load(default_asset("lexicon/en.syn"))
    index = InvertedIndex(corpus, lexicon)
    patterns = load_patterns(default_asset("patterns/en.qpat"))
    gold = load_gold(default_asset("eval/gold.tsv"))

    # -- passage model -------------------------------------------------------
    rows, labels = [], []
    strict_hits = 0
    for question, expected in gold:
        query = interpret_question(question, patterns).query
        want = expected_text(expected)
        candidates = [
            pid for pid in sorted(index.passages)
            if (fv := extract_features(question, index.passages[pid], index)).matching_lexeme_count
            + fv.proper_name_overlap > 0
        ]
        found = False
        for pid in candidates:
            passage = index.passages[pid]
            fv = extract_features(question, passage, index)
            result = prove(kb, passage, query, LIMITS)
            hit = want in {k.casefold() for k in answers_of(result)} and result.status == "answers_found"
            rows.append(fv.as_vector())
            labels.append(1 if hit else 0)
            found = found or hit
        strict_hits += found
        if not found:
            print(f"  [no strict proof] {question}")
    print(f"passage rows: {len(rows)} ({sum(labels)} positive); "
          f"{strict_hits}/{len(gold)} questions strictly provable")

    passage_set = TrainingSet("passage", np.array(rows, dtype=float), np.array(labels))
    passage_model, losses = train(LinearModel.zeros("passage"), passage_set, 0.05, 4000)
    print(f"passage loss {losses[0]:.4f} -> {losses[-1]:.4f}")
    save_training_csv(passage_set, ASSETS / "training" / "passage.csv", PASSAGE_HEADER)
    save_model(passage_model, ASSETS / "models" / "passage.lrm")

    # -- answer model --------------------------------------------------------
    rows, labels = [], []
    for question, expected in gold:
        query = interpret_question(question, patterns).query
        want = expected_text(expected)
        ranked = rank_passages(question, index, passage_model, 200)
        for pid, retrieval_score in ranked:
            passage = index.passages[pid]
            outcome = prove_with_relaxation(kb, passage, query, LIMITS, 2)
            if outcome.result.status != "answers_found":
                continue
            for text, answer in answers_of(outcome.result).items():
                rows.append((
                    float(outcome.relaxed.relax_count),
                    float(answer.proof_level),
                    retrieval_score,
                    answer.support_ratio,
                    1.0,
                ))
                labels.append(1 if text.casefold() == want else 0)
    print(f"answer rows: {len(rows)} ({sum(labels)} positive)")

    answer_set = TrainingSet("answer", np.array(rows, dtype=float), np.array(labels))
    answer_model, losses = train(LinearModel.zeros("answer"), answer_set, 0.05, 4000)
    print(f"answer loss {losses[0]:.4f} -> {losses[-1]:.4f}")
    save_training_csv(answer_set, ASSETS / "training" / "answer.csv", ANSWER_HEADER)
    save_model(answer_model, ASSETS / "models" / "answer.lrm")

    # -- self check ----------------------------------------------------------
    engine = Engine(PipelineConfig())
    report = run_benchmark(engine, default_asset("eval/gold.tsv"))
    print(f"accuracy@3 {report.accuracy_at_3:.3f} ({report.correct_at_3}/{report.total}), "
          f"median {report.median_latency*1000:.0f} ms, p99 {report.p99_latency*1000:.0f} ms")
    for question, expected, got in report.failures:
        print(f"  MISS {question!r}: wanted {expected!r}, got {got}")
    return 0 if report.accuracy_at_3 >= 0.9 else 1


if __name__ == "__main__":
    sys.exit(main())
