"""Inverted-index passage retrieval and per-passage feature extraction.

Retrieval narrows the corpus to a short candidate list before any proving
happens; the prover only ever sees passages with lexical overlap.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .ranking import LinearModel, score
from .terms import Clause

BM25_K1 = 1.2
BM25_B = 0.75

# Top English function words; excluded from lexeme overlap so short questions
# keep a meaningful match count, but still indexed for BM25.
STOPWORDS = frozenset(
    """the a an of in on at to for is are was were be and or not
    what who which with by from as it""".split()
)

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)
_SENTENCE_END = re.compile(r"[.!?]")


def tokenize(text: str) -> list[str]:
    """Lowercased alphanumeric runs; hyphens and punctuation split tokens."""
    return [m.group().lower() for m in _TOKEN_RE.finditer(text)]


def token_spans(text: str) -> list[tuple[str, int, int]]:
    """(lowercased token, char start, char end) for every token in ``text``."""
    return [(m.group().lower(), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


def proper_name_candidates(text: str) -> set[str]:
    """Lowercased tokens whose original form is capitalized mid-sentence."""
    names: set[str] = set()
    previous_end = 0
    for index, m in enumerate(_TOKEN_RE.finditer(text)):
        raw = m.group()
        gap = text[previous_end:m.start()]
        sentence_start = index == 0 or bool(_SENTENCE_END.search(gap))
        previous_end = m.end()
        if sentence_start:
            continue
        if raw[0].isupper():
            names.add(raw.lower())
    return names


def stem(token: str) -> str:
    """Minimal plural stripper: drop a final "es" or "s"."""
    if token.endswith("es") and len(token) > 3:
        return token[:-2]
    if token.endswith("s") and len(token) > 2:
        return token[:-1]
    return token


class SynonymLexicon:
    """Maps lexemes to a canonical class representative.

    File format (.syn): one synonym class per line, comma-separated; ``#``
    starts a comment.  Entries are stemmed on load.
    """

    def __init__(self, classes: Iterable[Sequence[str]] = ()) -> None:
        self._canon: dict[str, str] = {}
        for members in classes:
            stems = [stem(m.strip().lower()) for m in members if m.strip()]
            if not stems:
                continue
            representative = stems[0]
            for s in stems:
                self._canon.setdefault(s, representative)

    @classmethod
    def load(cls, path: str | Path) -> "SynonymLexicon":
        classes = []
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            line = line.split("#", 1)[0].strip()
            if line:
                classes.append(line.split(","))
        return cls(classes)

    def canonical(self, lexeme: str) -> str:
        return self._canon.get(lexeme, lexeme)

    def __len__(self) -> int:
        return len(self._canon)


def lexeme_classes(tokens: Iterable[str], lexicon: SynonymLexicon) -> set[str]:
    """Stopword-filtered, stemmed, synonym-canonicalized token set."""
    return {lexicon.canonical(stem(t)) for t in tokens if t not in STOPWORDS}


@dataclass
class Passage:
    """A retrievable text snippet together with its logical facts."""

    id: str
    text: str
    facts: list[Clause]

    def __post_init__(self) -> None:
        self.tokens: list[str] = tokenize(self.text)
        self.token_count: int = len(self.tokens)
        self.proper_names: set[str] = proper_name_candidates(self.text)
        self._counts: dict[str, int] = {}
        for t in self.tokens:
            self._counts[t] = self._counts.get(t, 0) + 1

    def term_frequency(self, token: str) -> int:
        return self._counts.get(token, 0)


class DuplicatePassageError(ValueError):
    pass


class InvertedIndex:
    """Immutable corpus index: postings, document frequencies, length stats."""

    def __init__(self, passages: Sequence[Passage], lexicon: Optional[SynonymLexicon] = None):
        self.lexicon = lexicon or SynonymLexicon()
        self.passages: dict[str, Passage] = {}
        for p in passages:
            if p.id in self.passages:
                raise DuplicatePassageError(f"duplicate passage id: {p.id}")
            self.passages[p.id] = p
        self.doc_count = len(self.passages)
        total = sum(p.token_count for p in self.passages.values())
        self.avg_len = total / self.doc_count if self.doc_count else 0.0
        self.postings: dict[str, list[tuple[str, int]]] = {}
        for pid in sorted(self.passages):
            for token, count in sorted(self.passages[pid]._counts.items()):
                self.postings.setdefault(token, []).append((pid, count))
        self.df: dict[str, int] = {t: len(post) for t, post in self.postings.items()}
        self._lexemes: dict[str, set[str]] = {
            pid: lexeme_classes(p.tokens, self.lexicon) for pid, p in self.passages.items()
        }

    def lexemes(self, passage_id: str) -> set[str]:
        return self._lexemes[passage_id]


def build_index(passages: Sequence[Passage], lexicon: Optional[SynonymLexicon] = None) -> InvertedIndex:
    return InvertedIndex(passages, lexicon)


def bm25(index: InvertedIndex, question_tokens: Sequence[str], passage: Passage) -> float:
    """Okapi BM25 with idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5))."""
    if index.avg_len == 0:
        return 0.0
    norm = passage.token_count / index.avg_len
    total = 0.0
    for token in question_tokens:
        tf = passage.term_frequency(token)
        if tf == 0:
            continue
        df = index.df.get(token, 0)
        idf = math.log(1.0 + (index.doc_count - df + 0.5) / (df + 0.5))
        total += idf * tf * (BM25_K1 + 1.0) / (tf + BM25_K1 * (1.0 - BM25_B + BM25_B * norm))
    return total


@dataclass(frozen=True)
class FeatureVector:
    """Per-(question, passage) retrieval features, in model weight order."""

    matching_lexeme_count: int
    matching_lexeme_ratio: float
    proper_name_overlap: int
    bm25_score: float
    passage_length_log: float

    def as_vector(self) -> tuple[float, ...]:
        return (
            float(self.matching_lexeme_count),
            self.matching_lexeme_ratio,
            float(self.proper_name_overlap),
            self.bm25_score,
            self.passage_length_log,
        )


def extract_features(question: str, passage: Passage, index: InvertedIndex) -> FeatureVector:
    question_tokens = tokenize(question)
    question_lexemes = lexeme_classes(question_tokens, index.lexicon)
    passage_lexemes = (
        index._lexemes.get(passage.id)
        if passage.id in index.passages
        else lexeme_classes(passage.tokens, index.lexicon)
    )
    if passage_lexemes is None:
        passage_lexemes = lexeme_classes(passage.tokens, index.lexicon)
    matching = len(question_lexemes & passage_lexemes)
    ratio = matching / len(question_lexemes) if question_lexemes else 0.0
    names_shared = len(proper_name_candidates(question) & passage.proper_names)
    return FeatureVector(
        matching_lexeme_count=matching,
        matching_lexeme_ratio=ratio,
        proper_name_overlap=names_shared,
        bm25_score=bm25(index, question_tokens, passage),
        passage_length_log=math.log(1.0 + passage.token_count),
    )


def rank_passages(
    question: str,
    index: InvertedIndex,
    model: LinearModel,
    k: int,
) -> list[tuple[str, float]]:
    """Top-k candidate passages by model score, descending; ties by passage id.

    Passages without any lexical overlap (lexeme or proper-name) are never
    candidates, whatever their BM25 score.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    scored: list[tuple[str, float]] = []
    for pid in sorted(index.passages):
        passage = index.passages[pid]
        fv = extract_features(question, passage, index)
        if fv.matching_lexeme_count + fv.proper_name_overlap <= 0:
            continue
        scored.append((pid, score(model, fv.as_vector())))
    scored.sort(key=lambda item: (-item[1], item[0]))
    return scored[:k]
