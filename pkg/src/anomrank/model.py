"""One-hidden-layer ReLU/sigmoid scorer with hand-written gradients.

Training alternates, each epoch, a per-sample SGD pass on the binary
cross-entropy and one full-batch step on ``mean BCE - lambda * proxy``,
where the proxy is the smooth rank statistic of ``rankstats.w_phi_proxy``.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from numba import njit
from scipy.special import expit

from . import _csv
from .datagen import Sample, SeedLike, make_rng
from .errors import ClampWarning, ParameterError, ParseError
from .rankstats import ScoredPair, w_phi_proxy, w_phi_proxy_grad, w_phi_stat
from .scoregen import MWW, ScoreGen

MODEL_FORMAT = "anomrank-mlp/1"

# largest double below 1 and smallest normal double: sigmoid outputs stay inside
_ONE_MINUS = float(np.nextafter(1.0, 0.0))
_TINY = float(np.finfo(float).tiny)


@dataclass(eq=False)
class MlpScorer:
    w1: np.ndarray  # (h, d)
    b1: np.ndarray  # (h,)
    w2: np.ndarray  # (h,)
    b2: float

    def __post_init__(self):
        self.w1 = np.array(self.w1, dtype=float, ndmin=2)
        self.b1 = np.array(self.b1, dtype=float).reshape(-1)
        self.w2 = np.array(self.w2, dtype=float).reshape(-1)
        self.b2 = float(self.b2)
        h = self.w1.shape[0]
        if self.b1.shape != (h,) or self.w2.shape != (h,):
            raise ParameterError("inconsistent layer shapes")
        if not all(np.all(np.isfinite(a)) for a in (self.w1, self.b1, self.w2)) or not math.isfinite(self.b2):
            raise ParameterError("parameters must be finite")

    @property
    def dim(self) -> int:
        return self.w1.shape[1]

    @property
    def hidden_size(self) -> int:
        return self.w1.shape[0]

    def copy(self) -> "MlpScorer":
        return MlpScorer(self.w1.copy(), self.b1.copy(), self.w2.copy(), self.b2)

    def params(self) -> np.ndarray:
        return np.concatenate([self.w1.ravel(), self.b1, self.w2, [self.b2]])

    @classmethod
    def from_params(cls, vec, d: int) -> "MlpScorer":
        vec = np.asarray(vec, dtype=float)
        h = (vec.size - 1) // (d + 2)
        if h * (d + 2) + 1 != vec.size:
            raise ParameterError(f"cannot split {vec.size} parameters for input dim {d}")
        w1 = vec[: h * d].reshape(h, d)
        b1 = vec[h * d : h * d + h]
        w2 = vec[h * d + h : h * d + 2 * h]
        return cls(w1, b1, w2, vec[-1])

    def __eq__(self, other):
        if not isinstance(other, MlpScorer):
            return NotImplemented
        return np.array_equal(self.params(), other.params()) and self.dim == other.dim


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    lam: float = 0.0
    phi: ScoreGen = MWW
    learning_rate: float = 0.05
    batch_learning_rate: float = 3e-4
    seed: int = 0

    def __post_init__(self):
        if int(self.epochs) != self.epochs or self.epochs < 1:
            raise ParameterError(f"epochs must be a positive integer, got {self.epochs}")
        if not self.lam >= 0:
            raise ParameterError(f"lambda must be >= 0, got {self.lam}")
        if not (self.learning_rate > 0 and self.batch_learning_rate > 0):
            raise ParameterError("learning rates must be > 0")


@dataclass(frozen=True)
class EpochTrace:
    epoch: int
    lam: float
    bce: float
    w_proxy: float
    acc_75: float
    w_rank: float = float("nan")


def mlp_new(d: int, seed: SeedLike) -> MlpScorer:
    """Hidden width 2d; weights uniform in +-1/sqrt(fan_in), zero biases."""
    if int(d) != d or d < 1:
        raise ParameterError(f"input dimension must be a positive integer, got {d}")
    rng = make_rng(seed)
    h = 2 * d
    w1 = rng.uniform(-1.0, 1.0, (h, d)) / math.sqrt(d)
    w2 = rng.uniform(-1.0, 1.0, h) / math.sqrt(h)
    return MlpScorer(w1, np.zeros(h), w2, 0.0)


def _inputs(model: MlpScorer, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != model.dim:
        raise ParameterError(f"model expects dimension {model.dim}, got {X.shape[1]}")
    return X


def logits(model: MlpScorer, X) -> np.ndarray:
    """Pre-sigmoid outputs for a batch; same order as the scores, never saturates."""
    X = _inputs(model, X)
    return np.maximum(X @ model.w1.T + model.b1, 0.0) @ model.w2 + model.b2


def _squash(z):
    return np.clip(expit(z), _TINY, _ONE_MINUS)


def forward_batch(model: MlpScorer, X) -> np.ndarray:
    return _squash(logits(model, X))


def forward(model: MlpScorer, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ParameterError("forward takes a single d-vector; use forward_batch")
    return float(forward_batch(model, x)[0])


def bce_loss(y_hat, y):
    """-y ln y_hat - (1 - y) ln(1 - y_hat), with y_hat clamped to [1e-12, 1 - 1e-12]."""
    yh = np.asarray(y_hat, dtype=float)
    if np.any(yh < 1e-12) or np.any(yh > 1 - 1e-12):
        warnings.warn("prediction clamped to [1e-12, 1 - 1e-12] in BCE", ClampWarning, stacklevel=2)
        yh = np.clip(yh, 1e-12, 1 - 1e-12)
    y = np.asarray(y, dtype=float)
    out = -y * np.log(yh) - (1.0 - y) * np.log1p(-yh)
    return float(out) if out.ndim == 0 else out


def _mean_bce(s, y) -> float:
    s = np.clip(s, 1e-12, 1 - 1e-12)
    return float(np.mean(-y * np.log(s) - (1.0 - y) * np.log1p(-s)))


def _backprop(model: MlpScorer, X: np.ndarray, g: np.ndarray) -> MlpScorer:
    """Parameter gradient given dLoss/dlogit ``g`` for each row of ``X``."""
    pre = X @ model.w1.T + model.b1
    act = np.maximum(pre, 0.0)
    dpre = np.outer(g, model.w2) * (pre > 0.0)
    return MlpScorer(dpre.T @ X, dpre.sum(axis=0), g @ act, float(g.sum()))


def bce_grad(model: MlpScorer, x, y) -> MlpScorer:
    X = _inputs(model, x)
    g = expit(logits(model, X)) - float(y)
    return _backprop(model, X, np.atleast_1d(g))


def _apply(model: MlpScorer, grad: MlpScorer, lr: float) -> MlpScorer:
    return MlpScorer(
        model.w1 - lr * grad.w1,
        model.b1 - lr * grad.b1,
        model.w2 - lr * grad.w2,
        model.b2 - lr * grad.b2,
    )


def sgd_step_bce(model: MlpScorer, x, y, lr: float) -> MlpScorer:
    return _apply(model, bce_grad(model, x, y), lr)


def _split_labels(train: Sample):
    if train.labels is None:
        raise ParameterError("training sample must be labelled")
    y = train.labels.astype(float)
    n = int(train.labels.sum())
    m = len(train) - n
    if n < 1 or m < 1:
        raise ParameterError("training sample needs both normals and outliers")
    return y, n, m


def regularized_loss(model: MlpScorer, train: Sample, lam: float, phi: ScoreGen) -> float:
    """mean BCE over the batch minus lam times the proxy on the normals."""
    y, n, m = _split_labels(train)
    s = forward_batch(model, train.points)
    loss = _mean_bce(s, y)
    if lam:
        loss -= lam * w_phi_proxy(phi, s[y == 1], n, m)
    return loss


def regularized_grad(model: MlpScorer, train: Sample, lam: float, phi: ScoreGen) -> MlpScorer:
    y, n, m = _split_labels(train)
    X = train.points
    z = logits(model, X)
    s = expit(z)
    g = (s - y) / len(X)
    if lam:
        pos = y == 1
        sp = _squash(z[pos])
        # d proxy / d logit = phi'(u) N/(N+1) * s (1 - s)
        g[pos] -= lam * w_phi_proxy_grad(phi, sp, n, m) * s[pos] * (1.0 - s[pos])
    return _backprop(model, X, g)


def batch_step_regularized(model: MlpScorer, train: Sample, cfg: TrainConfig) -> MlpScorer:
    grad = regularized_grad(model, train, cfg.lam, cfg.phi)
    return _apply(model, grad, cfg.batch_learning_rate)


@njit(cache=True)
def _sgd_pass(X, y, order, w1, b1, w2, b2, lr):
    """Per-sample BCE steps over ``order``, updating w1, b1, w2 in place.

    ``b2`` is a length-1 array so the scalar bias is updated in place too.
    """
    h, d = w1.shape
    pre = np.empty(h)
    act = np.empty(h)
    for t in range(order.shape[0]):
        k = order[t]
        z = b2[0]
        for j in range(h):
            v = b1[j]
            for c in range(d):
                v += w1[j, c] * X[k, c]
            pre[j] = v
            act[j] = v if v > 0.0 else 0.0
            z += w2[j] * act[j]
        g = 1.0 / (1.0 + math.exp(-z)) - y[k]
        for j in range(h):
            gp = g * w2[j] if pre[j] > 0.0 else 0.0
            w2[j] -= lr * g * act[j]
            b1[j] -= lr * gp
            for c in range(d):
                w1[j, c] -= lr * gp * X[k, c]
        b2[0] -= lr * g


def sgd_pass(model: MlpScorer, X, y, order, lr: float) -> MlpScorer:
    """Equivalent to folding ``sgd_step_bce`` over ``order``, compiled."""
    out = model.copy()
    b2 = np.array([out.b2])
    _sgd_pass(
        np.ascontiguousarray(X, dtype=float),
        np.ascontiguousarray(y, dtype=float),
        np.ascontiguousarray(order, dtype=np.int64),
        out.w1, out.b1, out.w2, b2, float(lr),
    )
    out.b2 = float(b2[0])
    return out


def train_rank_stat(model: MlpScorer, train: Sample, phi: ScoreGen) -> float:
    """True two-sample rank statistic of the model on its own training pool.

    Ranks are taken on logits, which order points exactly as the sigmoid
    scores would in exact arithmetic.
    """
    z = logits(model, train.points)
    lab = train.labels
    return w_phi_stat(phi, ScoredPair(z[lab == 1], z[lab == 0]))


def train(
    train_set: Sample,
    cfg: TrainConfig,
    eval_hook: Optional[Callable[[MlpScorer], float]] = None,
    init: Optional[MlpScorer] = None,
) -> tuple[MlpScorer, list[EpochTrace]]:
    """Run ``cfg.epochs`` epochs; returns the final model and one trace per epoch.

    ``eval_hook(model)`` is called after every epoch and its value is stored as
    ``acc_75`` (NaN without a hook). The seed drives both the initialisation
    (unless ``init`` is given) and the per-epoch shuffles.
    """
    y, n, m = _split_labels(train_set)
    rng = make_rng(cfg.seed)
    model = mlp_new(train_set.dim, rng) if init is None else init.copy()
    if model.dim != train_set.dim:
        raise ParameterError("initial model dimension does not match the data")
    X = train_set.points
    traces = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(X))
        model = sgd_pass(model, X, y, order, cfg.learning_rate)
        s = forward_batch(model, X)
        bce = _mean_bce(s, y)
        proxy = w_phi_proxy(cfg.phi, s[y == 1], n, m)
        model = batch_step_regularized(model, train_set, cfg)
        acc = float(eval_hook(model)) if eval_hook is not None else float("nan")
        traces.append(EpochTrace(epoch, cfg.lam, bce, proxy, acc, train_rank_stat(model, train_set, cfg.phi)))
    return model, traces


def model_to_dict(model: MlpScorer) -> dict:
    h, d = model.w1.shape
    return {
        "format": MODEL_FORMAT,
        "input_dim": d,
        "hidden_size": h,
        "layers": [
            {"name": "hidden", "activation": "relu", "shape": [h, d],
             "weight": model.w1.ravel().tolist(), "bias": model.b1.tolist()},
            {"name": "output", "activation": "sigmoid", "shape": [1, h],
             "weight": model.w2.tolist(), "bias": [model.b2]},
        ],
    }


def model_from_dict(doc: dict) -> MlpScorer:
    try:
        if doc.get("format") != MODEL_FORMAT:
            raise ParseError(f"unsupported model format {doc.get('format')!r}")
        hidden, output = doc["layers"]
        h, d = hidden["shape"]
        w1 = np.asarray(hidden["weight"], dtype=float).reshape(h, d)
        return MlpScorer(w1, hidden["bias"], output["weight"], output["bias"][0])
    except (KeyError, ValueError, TypeError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"malformed model document: {exc}") from None


def save_model(model: MlpScorer, path, **extra) -> None:
    doc = model_to_dict(model)
    doc.update(extra)
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def load_model(path) -> MlpScorer:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}: {exc.msg}") from None
    return model_from_dict(doc)


TRACE_HEADER = ["epoch", "lambda", "bce", "w_proxy", "acc75"]


def write_traces_csv(traces, path) -> None:
    _csv.write_rows(path, TRACE_HEADER, ((t.epoch, t.lam, t.bce, t.w_proxy, t.acc_75) for t in traces))

