"""Plain feed-forward networks and the shared early-stopping training loop."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import ops
from .optim import Optimizer
from .tape import Tape, Tensor, glorot_uniform, param

DTYPES = {"f32": np.float32, "f64": np.float64}


@dataclass
class MlpConfig:
    """Architecture and optimizer settings for one feed-forward network.

    The search grid draws hidden_layers from {2, 8, 16, 32}, hidden_dim from
    {128, 256}, and (optimizer, learning_rate) from
    {adam 0.001, adam 0.005, adam 0.02, sgd 0.005}.
    """

    hidden_layers: int = 2
    hidden_dim: int = 128
    optimizer: str = "adam"
    learning_rate: float = 0.001
    dropout_p: float = 0.0
    weight_decay: float = 0.0
    max_epochs: int = 1000
    patience: int = 100
    precision: str = "f32"

    def __post_init__(self):
        if self.hidden_dim <= 0 or self.hidden_layers < 0:
            raise ValueError("MlpConfig dims must be positive")
        if self.precision not in DTYPES:
            raise ValueError(f"precision must be one of {sorted(DTYPES)}")

    def with_overrides(self, **kw) -> "MlpConfig":
        return replace(self, **kw)


class Mlp:
    """ReLU MLP; hidden_layers=0 collapses to a single linear map."""

    def __init__(self, in_dim: int, out_dim: int, cfg: MlpConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.in_dim = in_dim
        self.out_dim = out_dim
        dtype = DTYPES[cfg.precision]
        dims = [in_dim] + [cfg.hidden_dim] * cfg.hidden_layers + [out_dim]
        self.weights = [param(glorot_uniform(rng, dims[i], dims[i + 1], dtype), f"w{i}")
                        for i in range(len(dims) - 1)]
        self.biases = [param(np.zeros(dims[i + 1], dtype=dtype), f"b{i}")
                       for i in range(len(dims) - 1)]

    def params(self) -> list[Tensor]:
        return self.weights + self.biases

    def forward(self, tape: Tape | None, x: Tensor, training: bool = False,
                rng: np.random.Generator | None = None) -> Tensor:
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if training and self.cfg.dropout_p > 0:
                h = ops.dropout(tape, h, self.cfg.dropout_p, rng)
            h = ops.add_bias(tape, ops.matmul(tape, h, w), b)
            if i < last:
                h = ops.relu(tape, h)
        return h

    def predict(self, features: np.ndarray) -> np.ndarray:
        x = Tensor(np.asarray(features, dtype=self.weights[0].dtype))
        return self.forward(None, x).data

    def state(self) -> dict[str, np.ndarray]:
        return {p.name: np.atleast_2d(p.data) for p in self.params()}

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        for p in self.params():
            p.data = state[p.name].reshape(p.data.shape).astype(p.data.dtype)


@dataclass
class TrainReport:
    """Outcome of one training run: metrics, curves, and an exact config echo."""

    model: str
    seed: int
    config: dict
    epochs_run: int = 0
    best_epoch: int = 0
    best_val: float = float("nan")
    loss_curve: list = field(default_factory=list)
    split_accuracy: dict = field(default_factory=dict)
    diverged_at: int | None = None

    def as_lines(self) -> list[str]:
        lines = [f"model={self.model}", f"seed={self.seed}",
                 f"epochs_run={self.epochs_run}", f"best_epoch={self.best_epoch}",
                 f"best_val={self.best_val:.4f}"]
        if self.diverged_at is not None:
            lines.append(f"diverged_at={self.diverged_at}")
        for split, acc in sorted(self.split_accuracy.items()):
            lines.append(f"accuracy.{split}={acc:.4f}")
        for key, value in sorted(self.config.items()):
            lines.append(f"config.{key}={value}")
        return lines


class DivergenceError(RuntimeError):
    """Training loss became non-finite."""

    def __init__(self, epoch: int):
        super().__init__(f"non-finite loss at epoch {epoch}")
        self.epoch = epoch


class EarlyStopper:
    """Keeps the best snapshot by a maximized score; signals stop after `patience` stale epochs."""

    def __init__(self, patience: int):
        self.patience = patience
        self.best_score = -np.inf
        self.best_epoch = -1
        self.best_state: dict | None = None
        self._stale = 0

    def update(self, epoch: int, score: float, state: dict) -> bool:
        # ties keep the latest snapshot: on plateaus (tiny validation sets)
        # the longer-trained weights are the better bet
        if score >= self.best_score:
            if score > self.best_score:
                self._stale = 0
            else:
                self._stale += 1
            self.best_score = score
            self.best_epoch = epoch
            self.best_state = {k: np.array(v) for k, v in state.items()}
        else:
            self._stale += 1
        return self._stale > self.patience


def make_optimizer(params: list[Tensor], cfg) -> Optimizer:
    return Optimizer(params, kind=cfg.optimizer, learning_rate=cfg.learning_rate,
                     weight_decay=cfg.weight_decay)
