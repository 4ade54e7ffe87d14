"""Cross-entropy objective, SGD/Adam, the epoch loop, and experiment runners.

``train`` drives any model object exposing ``params`` (a ParamStore),
``forward(batch) -> (probs, trace)`` and ``backward(trace, grad_probs)``;
the hybrid network and the logistic baseline both qualify. Runs are fully
deterministic for fixed seeds and configs.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .data import Splits, FeatureFrame
from .errors import ConfigError, NumericError, ShapeError
from .metrics import MetricsRecord, accuracy, auc, evaluate_scores
from .model import Model, ModelConfig, ParamStore
from .tensor_ops import as_f64, sigmoid

PROB_EPS = 1e-12  # cross-entropy clamp
ACC_THRESHOLD = 0.5

OPTIMIZERS = ("sgd", "adam")


# ---------------------------------------------------------------------------
# configuration and report records
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EarlyStop:
    metric: str = "val_auc"
    patience: int = 10

    def __post_init__(self):
        if self.metric != "val_auc":
            raise ConfigError(f"unsupported early-stop metric {self.metric!r}")
        if self.patience < 1:
            raise ConfigError("early-stop patience must be >= 1")


@dataclass(frozen=True)
class TrainConfig:
    optimizer: str = "adam"
    learning_rate: float = 1e-3
    batch_size: int = 128
    epochs: int = 100
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    shuffle: bool = True
    early_stop: Optional[EarlyStop] = field(default_factory=EarlyStop)
    pos_weight: float = 1.0

    def __post_init__(self):
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(f"unknown optimizer {self.optimizer!r}; expected {OPTIMIZERS}")
        if not (np.isfinite(self.learning_rate) and self.learning_rate > 0):
            raise ConfigError(f"learning_rate must be finite positive, got {self.learning_rate}")
        if self.batch_size < 1 or self.epochs < 1:
            raise ConfigError("batch_size and epochs must be >= 1")
        for name, b in (("beta1", self.beta1), ("beta2", self.beta2)):
            if not (0.0 < b < 1.0):
                raise ConfigError(f"{name} must be in (0,1), got {b}")

    def to_dict(self) -> dict:
        d = {
            "optimizer": self.optimizer,
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "epochs": self.epochs,
            "seed": self.seed,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "adam_eps": self.adam_eps,
            "shuffle": self.shuffle,
            "early_stop": None if self.early_stop is None else
                          {"metric": self.early_stop.metric,
                           "patience": self.early_stop.patience},
            "pos_weight": self.pos_weight,
        }
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        es = d.get("early_stop", "unset")
        if es is None:
            d["early_stop"] = None
        elif isinstance(es, dict):
            d["early_stop"] = EarlyStop(**es)
        elif es == "unset":
            d.pop("early_stop", None)
        return cls(**d)


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def stable_hash(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()


@dataclass
class RunReport:
    """Curves plus final fresh-pass metrics for one training run."""

    config_hash: str
    model_config: dict
    train_config: dict
    epochs_run: int
    best_epoch: Optional[int]
    curves: dict[str, list[float]]
    final: dict[str, MetricsRecord]
    wall_clock_seconds: float

    def to_dict(self, include_timing: bool = False) -> dict:
        d = {
            "config_hash": self.config_hash,
            "model_config": self.model_config,
            "train_config": self.train_config,
            "epochs_run": self.epochs_run,
            "best_epoch": self.best_epoch,
            "curves": self.curves,
            "final": {split: m.to_dict() for split, m in self.final.items()},
        }
        if include_timing:
            d["wall_clock_seconds"] = self.wall_clock_seconds
        return d

    def to_json(self, include_timing: bool = False) -> str:
        return json.dumps(self.to_dict(include_timing), sort_keys=True, indent=2) + "\n"


def write_curves_csv(report: RunReport, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("epoch,train_loss,train_acc,test_loss,test_acc\n")
        c = report.curves
        for e in range(report.epochs_run):
            fh.write(f"{e},{c['train_loss'][e]!r},{c['train_acc'][e]!r},"
                     f"{c['test_loss'][e]!r},{c['test_acc'][e]!r}\n")


# ---------------------------------------------------------------------------
# objective
# ---------------------------------------------------------------------------

def bce_loss(probs, labels, pos_weight: float = 1.0):
    """Mean binary cross-entropy with probabilities clamped to
    ``[1e-12, 1 - 1e-12]``; returns ``(loss, d loss / d probs)``.

    The gradient is the exact derivative of the clamped mean: coordinates
    whose raw probability sits outside the clamp window get gradient zero.
    """
    probs = as_f64(probs).reshape(-1)
    labels = np.asarray(labels).reshape(-1).astype(np.float64)
    if probs.shape != labels.shape:
        raise ShapeError(f"probs {probs.shape} and labels {labels.shape} differ")
    n = probs.shape[0]
    p = np.clip(probs, PROB_EPS, 1.0 - PROB_EPS)
    loss = -np.mean(pos_weight * labels * np.log(p) + (1.0 - labels) * np.log1p(-p))
    inside = (probs > PROB_EPS) & (probs < 1.0 - PROB_EPS)
    grad = np.where(inside, (-pos_weight * labels / p + (1.0 - labels) / (1.0 - p)) / n, 0.0)
    return float(loss), grad


# ---------------------------------------------------------------------------
# optimizers
# ---------------------------------------------------------------------------

def _check_grads(params) -> None:
    for p in params:
        if not np.all(np.isfinite(p.grad)):
            raise NumericError(f"non-finite gradient in parameter {p.name!r}")


def sgd_step(params, lr: float) -> None:
    """Vanilla gradient descent: value <- value - lr * grad."""
    _check_grads(params)
    for p in params:
        p.value -= lr * p.grad


class AdamState:
    """First/second moment accumulators plus the shared step counter."""

    def __init__(self, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}


def adam_step(params, lr: float, state: AdamState) -> None:
    """Bias-corrected Adam update; ``state`` persists across steps."""
    _check_grads(params)
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for p in params:
        g = p.grad
        m = state.m.setdefault(p.name, np.zeros_like(g))
        v = state.v.setdefault(p.name, np.zeros_like(g))
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p.value -= lr * (m / c1) / (np.sqrt(v / c2) + state.eps)


def make_optimizer(cfg: TrainConfig):
    """Returns a ``step(params)`` closure owning any optimizer state."""
    if cfg.optimizer == "sgd":
        return lambda params: sgd_step(params, cfg.learning_rate)
    state = AdamState(cfg.beta1, cfg.beta2, cfg.adam_eps)
    return lambda params: adam_step(params, cfg.learning_rate, state)


# ---------------------------------------------------------------------------
# evaluation helpers
# ---------------------------------------------------------------------------

EVAL_BATCH = 2048


def predict_probs(model, X: np.ndarray, batch_size: int = EVAL_BATCH) -> np.ndarray:
    X = as_f64(X)
    out = np.empty(X.shape[0])
    for start in range(0, X.shape[0], batch_size):
        probs, _ = model.forward(X[start: start + batch_size])
        out[start: start + batch_size] = probs
    return out


def evaluate(model, frame: FeatureFrame, pos_weight: float = 1.0):
    """Fresh-pass ``(bce loss, MetricsRecord)`` on one split."""
    probs = predict_probs(model, frame.X)
    loss, _ = bce_loss(probs, frame.y, pos_weight)
    return loss, evaluate_scores(probs, frame.y, ACC_THRESHOLD)


# ---------------------------------------------------------------------------
# the fit loop
# ---------------------------------------------------------------------------

def _fit(model, train_cfg: TrainConfig, splits: Splits, model_config: dict) -> RunReport:
    t0 = time.perf_counter()
    rng = np.random.default_rng(train_cfg.seed)
    step = make_optimizer(train_cfg)
    train, test = splits.train, splits.test
    n = train.n_rows

    curves = {"train_loss": [], "train_acc": [], "test_loss": [], "test_acc": []}
    best_val = -np.inf
    best_epoch: Optional[int] = None
    best_snapshot = None
    stale = 0

    for epoch in range(train_cfg.epochs):
        idx = rng.permutation(n) if train_cfg.shuffle else np.arange(n)
        loss_sum = 0.0
        correct = 0
        for b_start in range(0, n, train_cfg.batch_size):
            batch_idx = idx[b_start: b_start + train_cfg.batch_size]
            X, y = train.X[batch_idx], train.y[batch_idx]
            probs, trace = model.forward(X)
            loss, g_probs = bce_loss(probs, y, train_cfg.pos_weight)
            if not np.isfinite(loss):
                raise NumericError(
                    f"loss diverged at epoch {epoch}, batch {b_start // train_cfg.batch_size}"
                )
            model.params.zero_grads()
            model.backward(trace, g_probs)
            step(model.params)
            loss_sum += loss * batch_idx.size
            correct += int(np.sum((probs >= ACC_THRESHOLD) == (y == 1)))

        curves["train_loss"].append(loss_sum / n)
        curves["train_acc"].append(correct / n)
        test_probs = predict_probs(model, test.X)
        test_loss, _ = bce_loss(test_probs, test.y, train_cfg.pos_weight)
        curves["test_loss"].append(test_loss)
        curves["test_acc"].append(accuracy(test_probs, test.y, ACC_THRESHOLD))

        if train_cfg.early_stop is not None:
            val_probs = predict_probs(model, splits.val.X)
            val_auc = auc(val_probs, splits.val.y)
            if val_auc > best_val:
                best_val = val_auc
                best_epoch = epoch
                best_snapshot = model.params.snapshot()
                stale = 0
            else:
                stale += 1
                if stale >= train_cfg.early_stop.patience:
                    break

    if best_snapshot is not None:
        model.params.restore(best_snapshot)

    final = {}
    for name, frame in (("train", splits.train), ("val", splits.val), ("test", splits.test)):
        _, final[name] = evaluate(model, frame, train_cfg.pos_weight)

    return RunReport(
        config_hash=stable_hash({"model": model_config, "train": train_cfg.to_dict()}),
        model_config=model_config,
        train_config=train_cfg.to_dict(),
        epochs_run=len(curves["train_loss"]),
        best_epoch=best_epoch,
        curves=curves,
        final=final,
        wall_clock_seconds=time.perf_counter() - t0,
    )


def train(model_cfg: ModelConfig, train_cfg: TrainConfig,
          splits: Splits) -> tuple[Model, RunReport]:
    """Train the configured variant; returns the fitted model and its report."""
    model = Model(model_cfg)
    report = _fit(model, train_cfg, splits, model_cfg.to_dict())
    return model, report


# ---------------------------------------------------------------------------
# logistic baseline
# ---------------------------------------------------------------------------

class LogisticModel:
    """Single linear layer + sigmoid, trained with the same loop."""

    def __init__(self, n_features: int):
        self.n_features = n_features
        self.params = ParamStore()
        self.params.add("weight", np.zeros(n_features))
        self.params.add("bias", np.zeros(1))

    def forward(self, batch):
        X = as_f64(batch)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ShapeError(f"expected [B, {self.n_features}] batch, got {X.shape}")
        z = X @ self.params["weight"].value + self.params["bias"].value[0]
        probs = np.clip(sigmoid(z), 1e-15, 1.0 - 1e-15)
        return probs, {"X": X, "probs": probs}

    def backward(self, trace, grad_probs):
        X, probs = trace["X"], trace["probs"]
        g_z = as_f64(grad_probs) * probs * (1.0 - probs)
        self.params["weight"].grad += X.T @ g_z
        self.params["bias"].grad += np.sum(g_z, keepdims=True)


def train_baseline_logistic(train_cfg: TrainConfig,
                            splits: Splits) -> tuple[LogisticModel, RunReport]:
    """Linear floor that any interaction-capable model should beat."""
    model = LogisticModel(splits.train.n_features)
    cfg_dict = {"variant": "logistic", "n_features": splits.train.n_features}
    report = _fit(model, train_cfg, splits, cfg_dict)
    return model, report


# ---------------------------------------------------------------------------
# experiment runners
# ---------------------------------------------------------------------------

def _run_row(model_cfg, train_cfg, splits, label: dict) -> dict:
    row = dict(label)
    try:
        _, report = train(model_cfg, train_cfg, splits)
        row["status"] = "ok"
        row["metrics"] = {s: m.to_dict() for s, m in report.final.items()}
        row["epochs_run"] = report.epochs_run
    except (NumericError, ConfigError) as exc:
        row["status"] = "failed"
        row["error"] = str(exc)
    return row


def sweep_lr(model_cfg: ModelConfig, base_train_cfg: TrainConfig,
             lrs: Sequence[float], splits: Splits) -> list[dict]:
    """One seeded run per learning rate, identical otherwise."""
    if not lrs:
        raise ConfigError("sweep_lr needs a non-empty learning-rate grid")
    return [
        _run_row(model_cfg, replace(base_train_cfg, learning_rate=float(lr)),
                 splits, {"lr": float(lr)})
        for lr in lrs
    ]


def sweep_optimizer(model_cfg: ModelConfig, base_train_cfg: TrainConfig,
                    lrs: Sequence[float], splits: Splits,
                    optimizers: Sequence[str] = OPTIMIZERS) -> list[dict]:
    """Full {optimizer} x {learning rate} grid."""
    if not lrs:
        raise ConfigError("sweep_optimizer needs a non-empty learning-rate grid")
    rows = []
    for opt in optimizers:
        for lr in lrs:
            cfg = replace(base_train_cfg, optimizer=opt, learning_rate=float(lr))
            rows.append(_run_row(model_cfg, cfg, splits,
                                 {"optimizer": opt, "lr": float(lr)}))
    return rows


def ablate(model_cfg: ModelConfig, train_cfg: TrainConfig,
           splits: Splits) -> list[dict]:
    """Train cnn_only / transformer_only / hybrid on shared data and seed."""
    rows = []
    for variant in ("cnn_only", "transformer_only", "hybrid"):
        cfg = replace(model_cfg, variant=variant)
        rows.append(_run_row(cfg, train_cfg, splits, {"variant": variant}))
    return rows
