import math
import random

import numpy as np
import pytest

from logquest.ranking import (
    SCHEMA_DIMS,
    AnswerCandidate,
    AnswerFeatures,
    LinearModel,
    TrainingSet,
    load_model,
    load_training_csv,
    loss_gradient,
    mean_log_loss,
    rank_answers,
    save_model,
    save_training_csv,
    score,
    sigmoid,
    train,
)
from logquest.terms import Const


def random_training_set(rng: random.Random, rows: int = 8, dim: int = 5) -> TrainingSet:
    features = [[rng.uniform(-3, 3) for _ in range(dim)] for _ in range(rows)]
    labels = [rng.randint(0, 1) for _ in range(rows)]
    labels[0], labels[1] = 0, 1  # both classes present
    return TrainingSet("answer", np.array(features), np.array(labels, dtype=float))


def finite_difference_gradient(
    model: LinearModel, data: TrainingSet, step: float = 1e-6
) -> tuple[list[float], float]:
    """Central differences of the mean log-loss, the reference the analytic
    gradient must reproduce."""
    grads = []
    for i in range(len(model.weights)):
        up = list(model.weights)
        down = list(model.weights)
        up[i] += step
        down[i] -= step
        loss_up = mean_log_loss(LinearModel(model.kind, tuple(up), model.bias), data)
        loss_down = mean_log_loss(LinearModel(model.kind, tuple(down), model.bias), data)
        grads.append((loss_up - loss_down) / (2 * step))
    loss_up = mean_log_loss(LinearModel(model.kind, model.weights, model.bias + step), data)
    loss_down = mean_log_loss(LinearModel(model.kind, model.weights, model.bias - step), data)
    return grads, (loss_up - loss_down) / (2 * step)


# -- model basics ------------------------------------------------------------

def test_model_enforces_schema_dimensions():
    with pytest.raises(ValueError):
        LinearModel("passage", (1.0, 2.0), 0.0)
    LinearModel("custom", (1.0, 2.0), 0.0)  # unknown kinds may be any width


def test_model_rejects_non_finite_parameters():
    with pytest.raises(ValueError):
        LinearModel("answer", (0.0, 0.0, math.nan, 0.0, 0.0), 0.0)
    with pytest.raises(ValueError):
        LinearModel("answer", (0.0,) * 5, math.inf)


def test_model_coerces_parameters_to_plain_floats():
    model = LinearModel("custom", (np.float64(1.5),), np.float64(0.25))
    assert type(model.weights[0]) is float
    assert type(model.bias) is float


def test_zero_model_scores_one_half_exactly():
    for kind, dim in SCHEMA_DIMS.items():
        model = LinearModel.zeros(kind)
        assert score(model, [7.0] * dim) == 0.5


def test_score_checks_dimensions():
    model = LinearModel.zeros("passage")
    with pytest.raises(ValueError):
        score(model, [1.0, 2.0])


def test_sigmoid_is_stable_and_monotonic():
    assert sigmoid(0.0) == 0.5
    assert sigmoid(1000.0) == pytest.approx(1.0)
    assert sigmoid(-1000.0) == pytest.approx(0.0)
    assert sigmoid(-1e9) >= 0.0  # no overflow either way
    values = [sigmoid(z) for z in (-4, -1, 0, 1, 4)]
    assert values == sorted(values)
    assert sigmoid(2.0) + sigmoid(-2.0) == pytest.approx(1.0)


# -- loss and gradient -------------------------------------------------------

def test_mean_log_loss_matches_hand_computation():
    model = LinearModel("custom", (1.0,), 0.0)
    data = TrainingSet("custom", np.array([[2.0], [-1.0]]), np.array([1.0, 0.0]))
    expected = -(math.log(sigmoid(2.0)) + math.log(1 - sigmoid(-1.0))) / 2
    assert mean_log_loss(model, data) == pytest.approx(expected)


def test_gradient_agrees_with_central_differences():
    rng = random.Random(7)
    data = random_training_set(rng)
    model = LinearModel("answer", tuple(rng.uniform(-2, 2) for _ in range(5)), rng.uniform(-1, 1))
    grad_w, grad_b = loss_gradient(model, data)
    fd_w, fd_b = finite_difference_gradient(model, data)
    assert np.allclose(grad_w, fd_w, rtol=1e-6, atol=1e-9)
    assert grad_b == pytest.approx(fd_b, rel=1e-6, abs=1e-9)


def test_gradient_bias_vanishes_on_balanced_labels():
    # zero model predicts 0.5 everywhere; balanced labels cancel the residuals
    data = TrainingSet("custom", np.array([[1.0], [-1.0]]), np.array([1.0, 0.0]))
    grad_w, grad_b = loss_gradient(LinearModel("custom", (0.0,), 0.0), data)
    assert abs(grad_b) < 1e-12
    # the weight gradient still points away from the separating direction
    assert float(grad_w[0]) == pytest.approx(-0.5)


# -- training ----------------------------------------------------------------

def test_train_validates_inputs():
    data = TrainingSet("custom", np.array([[1.0], [2.0]]), np.array([0.0, 1.0]))
    init = LinearModel("custom", (0.0,), 0.0)
    with pytest.raises(ValueError):
        train(init, data, learning_rate=0.0, epochs=5)
    with pytest.raises(ValueError):
        train(init, data, learning_rate=0.1, epochs=0)
    with pytest.raises(ValueError):
        train(LinearModel("wide", (0.0, 0.0), 0.0), data, 0.1, 5)
    one_class = TrainingSet("custom", np.array([[1.0], [2.0]]), np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        train(init, one_class, 0.1, 5)


def test_train_reduces_loss_on_separable_data():
    data = TrainingSet(
        "custom",
        np.array([[2.0], [3.0], [-2.0], [-3.0]]),
        np.array([1.0, 1.0, 0.0, 0.0]),
    )
    init = LinearModel("custom", (0.0,), 0.0)
    model, history = train(init, data, learning_rate=0.5, epochs=50)
    assert len(history) == 50
    assert history[-1] < mean_log_loss(init, data)
    assert model.weights[0] > 0
    assert history == sorted(history, reverse=True)


def test_train_is_deterministic():
    rng = random.Random(11)
    data = random_training_set(rng)
    init = LinearModel.zeros("answer")
    first, history_a = train(init, data, 0.1, 40)
    second, history_b = train(init, data, 0.1, 40)
    assert first == second
    assert history_a == history_b


# -- answer ranking ----------------------------------------------------------

def features(relax: int, level: int = 1, support: float = 1.0) -> AnswerFeatures:
    return AnswerFeatures(relax, level, 0.5, support, 1)


def test_rank_answers_orders_by_confidence():
    model = LinearModel("answer", (-2.0, 0.0, 0.0, 1.0, 0.0), 0.0)
    strict = AnswerCandidate.build({"X": Const("bern")}, features(0), "p1")
    loose = AnswerCandidate.build({"X": Const("basel")}, features(2), "p2")
    ranked = rank_answers([loose, strict], model, 3)
    assert [r.candidate.passage_id for r in ranked] == ["p1", "p2"]
    assert ranked[0].confidence > ranked[1].confidence


def test_rank_answers_deduplicates_identical_bindings():
    model = LinearModel.zeros("answer")
    a = AnswerCandidate.build({"X": Const("bern")}, features(1), "p2")
    b = AnswerCandidate.build({"X": Const("bern")}, features(0), "p1")
    ranked = rank_answers([a, b], model, 3)
    assert len(ranked) == 1
    # equal confidence: the lower relax count is the better provenance
    assert ranked[0].candidate.passage_id == "p1"


def test_rank_answers_truncates_and_validates_n():
    model = LinearModel.zeros("answer")
    candidates = [
        AnswerCandidate.build({"X": Const(name)}, features(0), f"p{i}")
        for i, name in enumerate(["a", "b", "c", "d"])
    ]
    assert len(rank_answers(candidates, model, 2)) == 2
    with pytest.raises(ValueError):
        rank_answers(candidates, model, 0)


def test_answer_candidate_build_sorts_bindings():
    candidate = AnswerCandidate.build(
        {"Y": Const("b"), "X": Const("a")}, features(0), "p1"
    )
    assert candidate.bindings == (("X", "a"), ("Y", "b"))


# -- file formats ------------------------------------------------------------

def test_model_save_load_round_trips_exact_floats(tmp_path):
    model = LinearModel("answer", (0.1, -2.5, 1e-17, 3.25, 0.0), -0.7531)
    path = tmp_path / "m.lrm"
    save_model(model, path)
    assert load_model(path) == model


def test_load_model_rejects_malformed_files(tmp_path):
    path = tmp_path / "bad.lrm"
    path.write_text("answer\n")
    with pytest.raises(ValueError):
        load_model(path)
    path.write_text("answer\nnot_a_number\n1 2 3 4 5\n")
    with pytest.raises(ValueError):
        load_model(path)


def test_training_csv_round_trip(tmp_path):
    data = TrainingSet(
        "answer",
        np.array([[0.0, 1.0, 0.5, 0.25, 1.0], [2.0, 3.0, 0.1, 0.0, 0.0]]),
        np.array([1.0, 0.0]),
    )
    path = tmp_path / "t.csv"
    save_training_csv(data, path, ["a", "b", "c", "d", "e"])
    loaded = load_training_csv(path, "answer")
    assert np.allclose(loaded.features, data.features)
    assert np.array_equal(loaded.labels, data.labels)


def test_training_csv_validation(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        load_training_csv(path, "custom")  # header lacks label column
    path.write_text("a,label\nx,1\n")
    with pytest.raises(ValueError):
        load_training_csv(path, "custom")
    path.write_text("a,label\n")
    with pytest.raises(ValueError):
        load_training_csv(path, "custom")


def test_training_set_validates_shape_and_labels():
    with pytest.raises(ValueError):
        TrainingSet("x", np.zeros((2, 3)), np.zeros(3))
    with pytest.raises(ValueError):
        TrainingSet("x", np.zeros((2, 3)), np.array([0.5, 1.0]))
