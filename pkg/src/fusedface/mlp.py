"""Sigmoid multilayer perceptron trained by online backpropagation with momentum."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from fusedface.errors import DataError, NumericError
from fusedface.labels import argmax_lowest, class_order, encode


@dataclass(frozen=True)
class MlpTrainConfig:
    learning_rate: float = 0.1
    momentum: float = 0.9
    epochs: int = 500
    seed: int = 0
    init_scale: float = 0.5

    def __post_init__(self):
        if self.learning_rate < 0:
            raise DataError(f"learning_rate must be non-negative, got {self.learning_rate}")
        if not 0.0 <= self.momentum < 1.0:
            raise DataError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.epochs < 1:
            raise DataError(f"epochs must be positive, got {self.epochs}")
        if not self.init_scale > 0:
            raise DataError(f"init_scale must be positive, got {self.init_scale}")


@dataclass(frozen=True, eq=False)
class MlpModel:
    """Weights are stored ``(fan_in, fan_out)`` so a layer computes ``W.T @ a + b``."""

    weights: tuple
    biases: tuple
    classes: tuple = ()
    config: MlpTrainConfig = field(default_factory=MlpTrainConfig)

    def __post_init__(self):
        ws = tuple(np.array(w, dtype=np.float64) for w in self.weights)
        bs = tuple(np.array(b, dtype=np.float64).ravel() for b in self.biases)
        if len(ws) < 2 or len(ws) != len(bs):
            raise DataError("an MLP needs at least one hidden layer and one bias per layer")
        for i, (w, b) in enumerate(zip(ws, bs)):
            if w.ndim != 2 or w.shape[1] != b.shape[0]:
                raise DataError(f"layer {i}: weight shape {w.shape} does not match bias length {b.shape[0]}")
            if i and ws[i - 1].shape[1] != w.shape[0]:
                raise DataError(f"layer {i} input size {w.shape[0]} != previous output {ws[i - 1].shape[1]}")
        for arr in ws + bs:
            arr.setflags(write=False)
        object.__setattr__(self, "weights", ws)
        object.__setattr__(self, "biases", bs)
        if not self.classes:
            object.__setattr__(self, "classes", tuple(range(ws[-1].shape[1])))
        elif len(self.classes) != ws[-1].shape[1]:
            raise DataError("number of classes must equal the output layer size")

    @property
    def layer_sizes(self) -> list:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    def to_dict(self) -> dict:
        return {
            "layer_sizes": self.layer_sizes,
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "classes": list(self.classes),
            "activation": "sigmoid",
            "config": asdict(self.config),
        }

    @classmethod
    def from_dict(cls, d: dict) -> MlpModel:
        sizes = d["layer_sizes"]
        weights = [np.asarray(w, dtype=np.float64).reshape(i, o)
                   for w, i, o in zip(d["weights"], sizes[:-1], sizes[1:])]
        return cls(tuple(weights), tuple(d["biases"]), tuple(d["classes"]),
                   MlpTrainConfig(**d["config"]))


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def init_model(layer_sizes, init_scale=0.5, seed=0, classes=()) -> MlpModel:
    if len(layer_sizes) < 3:
        raise DataError(f"need at least one hidden layer, got layer sizes {list(layer_sizes)}")
    rng = np.random.default_rng(seed % 2**64)
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        weights.append(rng.uniform(-init_scale, init_scale, size=(fan_in, fan_out)))
        biases.append(rng.uniform(-init_scale, init_scale, size=fan_out))
    return MlpModel(tuple(weights), tuple(biases), tuple(classes))


def _input(model, x):
    x = np.asarray(getattr(x, "coords", x), dtype=np.float64)
    if x.shape[-1] != model.layer_sizes[0]:
        raise DataError(f"input length {x.shape[-1]} != network input size {model.layer_sizes[0]}")
    return x


def _activations(weights, biases, x):
    acts = [x]
    for w, b in zip(weights, biases):
        acts.append(sigmoid(acts[-1] @ w + b))
    return acts


def mlp_forward(model: MlpModel, x) -> np.ndarray:
    """Output-layer activations for one input (or a batch of rows)."""
    return _activations(model.weights, model.biases, _input(model, x))[-1]


def _backprop(weights, biases, x, target):
    acts = _activations(weights, biases, x)
    out = acts[-1]
    delta = (out - target) * out * (1.0 - out)
    gw, gb = [None] * len(weights), [None] * len(weights)
    for layer in range(len(weights) - 1, -1, -1):
        gw[layer] = np.outer(acts[layer], delta)
        gb[layer] = delta
        if layer:
            a = acts[layer]
            delta = (weights[layer] @ delta) * a * (1.0 - a)
    return gw, gb


def mlp_loss(model: MlpModel, x, target) -> float:
    out = mlp_forward(model, x)
    return 0.5 * float(((out - np.asarray(target, dtype=np.float64)) ** 2).sum())


def mlp_gradient(model: MlpModel, x, target):
    """Backprop gradient of ``0.5 * |output - target|^2``.

    Returns ``(weight_grads, bias_grads)`` with the model's shapes.
    """
    x = _input(model, x)
    target = np.asarray(target, dtype=np.float64)
    if x.ndim != 1 or target.shape != (model.layer_sizes[-1],):
        raise DataError(f"target must have length {model.layer_sizes[-1]}")
    return _backprop(model.weights, model.biases, x, target)


def train_mlp(features, cfg: MlpTrainConfig | None = None, layer_sizes=None, labels=None) -> MlpModel:
    """Online backprop with momentum: ``dw(t) = -lr * grad + momentum * dw(t-1)``.

    ``layer_sizes`` defaults to one hidden layer twice the input width.
    """
    cfg = cfg or MlpTrainConfig()
    if labels is None:
        X = np.stack([fv.coords for fv in features])
        labels = [fv.label for fv in features]
    else:
        X = np.atleast_2d(np.asarray(features, dtype=np.float64))
    if X.shape[0] == 0 or X.shape[0] != len(labels):
        raise DataError("need a nonempty feature set with one label per vector")
    classes = class_order(labels)
    idx = encode(labels, classes)
    if layer_sizes is None:
        layer_sizes = [X.shape[1], 2 * X.shape[1], len(classes)]
    layer_sizes = list(layer_sizes)
    if layer_sizes[0] != X.shape[1] or layer_sizes[-1] != len(classes):
        raise DataError(f"layer sizes {layer_sizes} do not fit {X.shape[1]} inputs and {len(classes)} classes")
    targets = np.eye(len(classes))[idx]

    model = init_model(layer_sizes, cfg.init_scale, cfg.seed, classes)
    weights = [w.copy() for w in model.weights]
    biases = [b.copy() for b in model.biases]
    vel_w = [np.zeros_like(w) for w in weights]
    vel_b = [np.zeros_like(b) for b in biases]
    # shuffling has its own stream so init and order stay independent
    order_rng = np.random.default_rng([cfg.seed % 2**64, 1])
    lr, mom = cfg.learning_rate, cfg.momentum
    for epoch in range(cfg.epochs):
        for i in order_rng.permutation(X.shape[0]):
            gw, gb = _backprop(weights, biases, X[i], targets[i])
            for layer in range(len(weights)):
                vel_w[layer] = mom * vel_w[layer] - lr * gw[layer]
                vel_b[layer] = mom * vel_b[layer] - lr * gb[layer]
                weights[layer] += vel_w[layer]
                biases[layer] += vel_b[layer]
        if not all(np.all(np.isfinite(w)) for w in weights + biases):
            raise NumericError(f"non-finite MLP parameters after epoch {epoch}")
    return MlpModel(tuple(weights), tuple(biases), classes, cfg)


def mlp_predict(model: MlpModel, x):
    scores = mlp_forward(model, x)
    return model.classes[argmax_lowest(scores)], scores


def mlp_predict_many(model: MlpModel, X) -> list:
    S = np.atleast_2d(mlp_forward(model, np.atleast_2d(X)))
    return [model.classes[argmax_lowest(s)] for s in S]
