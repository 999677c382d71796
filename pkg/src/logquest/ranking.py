"""Logistic-regression scoring for the two learned pipeline stages.

The same model shape serves both stages: a passage model over retrieval
features and an answer model over proof features.  Training is plain
full-batch gradient descent on mean log-loss, deterministic given inputs.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .terms import Subst, format_term

SCHEMA_DIMS = {"passage": 5, "answer": 5}


@dataclass(frozen=True)
class LinearModel:
    """Weight vector plus bias; ``kind`` names the feature schema it scores."""

    kind: str
    weights: tuple[float, ...]
    bias: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(self, "bias", float(self.bias))
        expected = SCHEMA_DIMS.get(self.kind)
        if expected is not None and len(self.weights) != expected:
            raise ValueError(
                f"{self.kind} model needs {expected} weights, got {len(self.weights)}"
            )
        if not all(math.isfinite(w) for w in self.weights) or not math.isfinite(self.bias):
            raise ValueError("model parameters must be finite")

    @classmethod
    def zeros(cls, kind: str, dim: Optional[int] = None) -> "LinearModel":
        if dim is None:
            dim = SCHEMA_DIMS[kind]
        return cls(kind, (0.0,) * dim, 0.0)


def sigmoid(z: float) -> float:
    """Numerically stable logistic function."""
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-min(z, 700.0)))
    ez = math.exp(max(z, -700.0))
    return ez / (1.0 + ez)


def score(model: LinearModel, features: Sequence[float]) -> float:
    """sigmoid(w . f + b); raises on dimension mismatch."""
    if len(features) != len(model.weights):
        raise ValueError(
            f"feature vector of length {len(features)} does not fit "
            f"{model.kind} model of dimension {len(model.weights)}"
        )
    z = model.bias + sum(w * f for w, f in zip(model.weights, features))
    return sigmoid(z)


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

@dataclass
class TrainingSet:
    kind: str
    features: np.ndarray  # (n, d) float64
    labels: np.ndarray    # (n,) values in {0, 1}

    def __post_init__(self) -> None:
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.float64)
        if self.features.ndim != 2 or len(self.features) != len(self.labels):
            raise ValueError("features must be (n, d) with one label per row")
        if not set(np.unique(self.labels)) <= {0.0, 1.0}:
            raise ValueError("labels must be 0 or 1")


def mean_log_loss(model: LinearModel, data: TrainingSet) -> float:
    z = data.features @ np.asarray(model.weights) + model.bias
    p = 1.0 / (1.0 + np.exp(-np.clip(z, -700, 700)))
    p = np.clip(p, 1e-12, 1.0 - 1e-12)
    return float(-np.mean(data.labels * np.log(p) + (1 - data.labels) * np.log(1 - p)))


def loss_gradient(model: LinearModel, data: TrainingSet) -> tuple[np.ndarray, float]:
    """Gradient of mean log-loss: mean (sigmoid(z) - y) f per weight, and for bias."""
    z = data.features @ np.asarray(model.weights) + model.bias
    p = 1.0 / (1.0 + np.exp(-np.clip(z, -700, 700)))
    residual = p - data.labels
    grad_w = data.features.T @ residual / len(data.labels)
    grad_b = float(np.mean(residual))
    return grad_w, grad_b


def train(
    init: LinearModel,
    data: TrainingSet,
    learning_rate: float,
    epochs: int,
) -> tuple[LinearModel, list[float]]:
    """Full-batch gradient descent; one post-update loss entry per epoch."""
    if learning_rate <= 0:
        raise ValueError("learning_rate must be positive")
    if epochs < 1:
        raise ValueError("epochs must be at least 1")
    if data.features.shape[1] != len(init.weights):
        raise ValueError(
            f"training data has {data.features.shape[1]} features, "
            f"model expects {len(init.weights)}"
        )
    present = set(np.unique(data.labels))
    if present != {0.0, 1.0}:
        raise ValueError("training data must contain both labels")

    weights = np.asarray(init.weights, dtype=np.float64)
    bias = init.bias
    history: list[float] = []
    for _ in range(epochs):
        model = LinearModel(init.kind, tuple(weights), bias)
        grad_w, grad_b = loss_gradient(model, data)
        weights = weights - learning_rate * grad_w
        bias = bias - learning_rate * grad_b
        history.append(mean_log_loss(LinearModel(init.kind, tuple(weights), bias), data))
    return LinearModel(init.kind, tuple(weights), bias), history


# ---------------------------------------------------------------------------
# Answer ranking
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AnswerFeatures:
    """Observable proof signals feeding the answer model."""

    relax_count: int
    proof_level: int
    retrieval_score: float
    passage_support_ratio: float
    answer_is_ground: int

    def as_vector(self) -> tuple[float, ...]:
        return (
            float(self.relax_count),
            float(self.proof_level),
            float(self.retrieval_score),
            float(self.passage_support_ratio),
            float(self.answer_is_ground),
        )


@dataclass(frozen=True)
class AnswerCandidate:
    """One proved answer from one passage, before ranking."""

    bindings: tuple[tuple[str, str], ...]  # (var, printed term), sorted by var
    features: AnswerFeatures
    passage_id: str
    dropped_subgoals: tuple[str, ...] = ()

    @classmethod
    def build(
        cls,
        bindings: Subst,
        features: AnswerFeatures,
        passage_id: str,
        dropped_subgoals: Iterable[str] = (),
    ) -> "AnswerCandidate":
        printed = tuple(sorted((v, format_term(t)) for v, t in bindings.items()))
        return cls(printed, features, passage_id, tuple(dropped_subgoals))


@dataclass(frozen=True)
class RankedAnswer:
    candidate: AnswerCandidate
    confidence: float


def rank_answers(
    candidates: Sequence[AnswerCandidate],
    model: LinearModel,
    n: int,
) -> list[RankedAnswer]:
    """Deduplicate identical answers keeping the best-scoring provenance, then
    return the top ``n`` by score (ties: lower relax_count, then passage id)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    best: dict[tuple[tuple[str, str], ...], RankedAnswer] = {}
    for candidate in candidates:
        confidence = score(model, candidate.features.as_vector())
        contender = RankedAnswer(candidate, confidence)
        current = best.get(candidate.bindings)
        if current is None or _prefer(contender, current):
            best[candidate.bindings] = contender
    ranked = sorted(
        best.values(),
        key=lambda r: (-r.confidence, r.candidate.features.relax_count, r.candidate.passage_id),
    )
    return ranked[:n]


def _prefer(a: RankedAnswer, b: RankedAnswer) -> bool:
    key_a = (-a.confidence, a.candidate.features.relax_count, a.candidate.passage_id)
    key_b = (-b.confidence, b.candidate.features.relax_count, b.candidate.passage_id)
    return key_a < key_b


# ---------------------------------------------------------------------------
# File formats: .lrm models and .csv training data
# ---------------------------------------------------------------------------

def save_model(model: LinearModel, path: str | Path) -> None:
    lines = [model.kind, repr(model.bias), " ".join(repr(w) for w in model.weights)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> LinearModel:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if len(lines) < 3:
        raise ValueError(f"{path}: model file needs kind, bias and weights lines")
    kind = lines[0].strip()
    try:
        bias = float(lines[1])
        weights = tuple(float(w) for w in lines[2].split())
    except ValueError as exc:
        raise ValueError(f"{path}: malformed model file: {exc}") from None
    return LinearModel(kind, weights, bias)


def load_training_csv(path: str | Path, kind: str) -> TrainingSet:
    """CSV with a header row; feature columns first, then a ``label`` column."""
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if not header or header[-1].strip().lower() != "label":
            raise ValueError(f"{path}: last column must be 'label'")
        rows, labels = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                rows.append([float(v) for v in row[:-1]])
                labels.append(float(row[-1]))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric value") from None
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return TrainingSet(kind, np.array(rows), np.array(labels))


def save_training_csv(data: TrainingSet, path: str | Path, feature_names: Sequence[str]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(list(feature_names) + ["label"])
        for row, label in zip(data.features, data.labels):
            writer.writerow([f"{v:.6g}" for v in row] + [int(label)])
