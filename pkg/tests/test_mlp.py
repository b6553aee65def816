import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fusedface.errors import DataError, NumericError
from fusedface.mlp import (
    MlpModel,
    MlpTrainConfig,
    init_model,
    mlp_forward,
    mlp_gradient,
    mlp_loss,
    mlp_predict,
    mlp_predict_many,
    train_mlp,
)


def logistic(z):
    return 1.0 / (1.0 + math.exp(-z))


def forward_oracle(model, x):
    """Unit-by-unit evaluation in plain Python."""
    a = list(x)
    for W, b in zip(model.weights, model.biases):
        W, b = W.tolist(), b.tolist()
        a = [logistic(sum(a[i] * W[i][j] for i in range(len(a))) + b[j]) for j in range(len(b))]
    return a


def with_params(model, flat):
    weights, biases, pos = [], [], 0
    for w, b in zip(model.weights, model.biases):
        weights.append(flat[pos:pos + w.size].reshape(w.shape))
        pos += w.size
        biases.append(flat[pos:pos + b.size])
        pos += b.size
    return MlpModel(tuple(weights), tuple(biases), model.classes)


def flatten(ws, bs):
    return np.concatenate([np.concatenate([w.ravel(), b]) for w, b in zip(ws, bs)])


def finite_difference(model, x, t, h=1e-5):
    theta = flatten(model.weights, model.biases)
    grad = np.empty_like(theta)
    for i in range(theta.size):
        up, dn = theta.copy(), theta.copy()
        up[i] += h
        dn[i] -= h
        grad[i] = (mlp_loss(with_params(model, up), x, t) - mlp_loss(with_params(model, dn), x, t)) / (2 * h)
    return grad


def relative_error(a, b, floor=1e-6):
    # floor sits just above the float64 finite-difference noise (~1e-11 absolute)
    return np.max(np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor))


def zero_model(sizes):
    return MlpModel(tuple(np.zeros((i, o)) for i, o in zip(sizes[:-1], sizes[1:])),
                    tuple(np.zeros(o) for o in sizes[1:]))


def test_zero_network_outputs_half():
    m = zero_model([3, 4, 2])
    np.testing.assert_array_equal(mlp_forward(m, [1.0, -2.0, 3.0]), [0.5, 0.5])
    assert mlp_predict(m, [1.0, -2.0, 3.0])[0] == 0


def test_two_step_composition():
    w_out = 1.7
    m = MlpModel((np.array([[2.5]]), np.array([[w_out]])), (np.zeros(1), np.zeros(1)))
    assert mlp_forward(m, [0.0])[0] == pytest.approx(logistic(w_out * 0.5), abs=1e-15)


def test_forward_matches_oracle(rng):
    m = init_model([2, 3, 2], init_scale=1.0, seed=5)
    x = rng.normal(size=2)
    np.testing.assert_allclose(mlp_forward(m, x), forward_oracle(m, x), atol=1e-12, rtol=0)


def test_forward_dimension_mismatch():
    with pytest.raises(DataError):
        mlp_forward(zero_model([3, 2, 2]), [1.0])


def test_gradient_zero_at_target(rng):
    m = init_model([3, 4, 2], seed=1)
    x = rng.normal(size=3)
    gw, gb = mlp_gradient(m, x, mlp_forward(m, x))
    assert all(np.all(g == 0) for g in gw + gb)


def test_gradient_matches_finite_differences(rng):
    m = init_model([2, 3, 2], init_scale=1.0, seed=2)
    x, t = rng.normal(size=2), np.array([0.0, 1.0])
    gw, gb = mlp_gradient(m, x, t)
    assert relative_error(flatten(gw, gb), finite_difference(m, x, t)) <= 1e-5


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_gradient_property_random_depths(seed):
    r = np.random.default_rng(seed)
    sizes = [int(v) for v in r.integers(1, 5, size=int(r.integers(3, 6)))]
    m = init_model(sizes, init_scale=1.0, seed=seed)
    x = r.normal(size=sizes[0])
    t = np.eye(sizes[-1])[r.integers(sizes[-1])]
    gw, gb = mlp_gradient(m, x, t)
    assert relative_error(flatten(gw, gb), finite_difference(m, x, t)) <= 1e-5


def test_duplicated_sample_doubles_summed_gradient(rng):
    m = init_model([2, 3, 2], seed=3)
    x, t = rng.normal(size=2), np.array([1.0, 0.0])
    single = flatten(*mlp_gradient(m, x, t))
    summed = sum(flatten(*mlp_gradient(m, xi, t)) for xi in (x, x))
    np.testing.assert_array_equal(summed, 2 * single)


def one_d_problem():
    X = np.array([[-1.0]] * 20 + [[1.0]] * 20)
    return X, [0] * 20 + [1] * 20


def test_no_momentum_is_plain_sgd():
    X, y = one_d_problem()
    cfg = MlpTrainConfig(learning_rate=0.3, momentum=0.0, epochs=3, seed=9)
    got = train_mlp(X, cfg, [1, 3, 2], labels=y)
    # replay the same seeded order with explicit SGD steps
    m = init_model([1, 3, 2], cfg.init_scale, cfg.seed, (0, 1))
    ws, bs = [w.copy() for w in m.weights], [b.copy() for b in m.biases]
    order = np.random.default_rng([cfg.seed, 1])
    T = np.eye(2)[y]
    for _ in range(cfg.epochs):
        for i in order.permutation(len(X)):
            gw, gb = mlp_gradient(MlpModel(tuple(ws), tuple(bs), (0, 1)), X[i], T[i])
            ws = [w - cfg.learning_rate * g for w, g in zip(ws, gw)]
            bs = [b - cfg.learning_rate * g for b, g in zip(bs, gb)]
    for a, b in zip(got.weights + got.biases, tuple(ws) + tuple(bs)):
        np.testing.assert_array_equal(a, b)


def test_zero_learning_rate_keeps_init():
    X, y = one_d_problem()
    cfg = MlpTrainConfig(learning_rate=0.0, epochs=5, seed=4)
    got = train_mlp(X, cfg, [1, 4, 2], labels=y)
    init = init_model([1, 4, 2], cfg.init_scale, cfg.seed)
    for a, b in zip(got.weights + got.biases, init.weights + init.biases):
        np.testing.assert_array_equal(a, b)


def test_one_d_regression():
    X, y = one_d_problem()
    cfg = MlpTrainConfig(learning_rate=0.5, momentum=0.9, epochs=200, seed=0)
    m = train_mlp(X, cfg, [1, 4, 2], labels=y)
    assert mlp_predict_many(m, X) == y
    assert mlp_predict(m, [1.0])[0] == 1
    assert mlp_predict(m, [-1.0])[0] == 0


def test_relabelled_classes_predict_consistently():
    X, y = one_d_problem()
    cfg = MlpTrainConfig(learning_rate=0.5, epochs=100, seed=0)
    a = train_mlp(X, cfg, [1, 4, 2], labels=["neg" if v == 0 else "pos" for v in y])
    b = train_mlp(X, cfg, [1, 4, 2], labels=[v for v in y])
    assert [{0: "neg", 1: "pos"}[p] for p in mlp_predict_many(b, X)] == mlp_predict_many(a, X)


def test_epoch_average_loss_decreases():
    r = np.random.default_rng(0)
    X = np.vstack([r.normal(-2, 0.5, size=(15, 2)), r.normal(2, 0.5, size=(15, 2))])
    y = [0] * 15 + [1] * 15
    T = np.eye(2)[y]

    def avg_loss(m):
        return np.mean([mlp_loss(m, x, t) for x, t in zip(X, T)])

    init = init_model([2, 4, 2], 0.5, 0)
    losses = [avg_loss(init)]
    for epochs in range(1, 8):
        losses.append(avg_loss(train_mlp(X, MlpTrainConfig(epochs=epochs, seed=0), [2, 4, 2], labels=y)))
    assert all(b < a for a, b in zip(losses, losses[1:]))


def test_determinism_and_round_trip(rng):
    X = rng.normal(size=(12, 3))
    y = [i % 3 for i in range(12)]
    cfg = MlpTrainConfig(epochs=20, seed=8)
    a, b = train_mlp(X, cfg, labels=y), train_mlp(X, cfg, labels=y)
    assert json.dumps(a.to_dict()) == json.dumps(b.to_dict())
    assert a.layer_sizes == [3, 6, 3]
    back = MlpModel.from_dict(json.loads(json.dumps(a.to_dict())))
    np.testing.assert_array_equal(mlp_forward(back, X), mlp_forward(a, X))


def test_bounded_inputs_stay_finite(rng):
    X = rng.uniform(-10, 10, size=(30, 4))
    y = [i % 3 for i in range(30)]
    m = train_mlp(X, MlpTrainConfig(epochs=50, seed=1), labels=y)
    out = mlp_forward(m, X)
    assert np.all(np.isfinite(out)) and np.all(out > 0) and np.all(out < 1)


def test_divergence_reports_epoch():
    X = np.array([[np.inf], [-np.inf]])
    with np.errstate(all="ignore"), pytest.raises(NumericError, match="epoch 0"):
        train_mlp(X, MlpTrainConfig(epochs=3), labels=[0, 1])


@pytest.mark.parametrize("kwargs", [dict(learning_rate=-1), dict(momentum=1.0), dict(epochs=0), dict(init_scale=0)])
def test_config_validation(kwargs):
    with pytest.raises(DataError):
        MlpTrainConfig(**kwargs)


def test_needs_hidden_layer():
    with pytest.raises(DataError):
        init_model([2, 2])
    with pytest.raises(DataError):
        train_mlp(np.zeros((2, 2)), labels=[0, 1], layer_sizes=[2, 3, 3])
