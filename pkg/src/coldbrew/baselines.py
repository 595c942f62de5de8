"""Reference models: label propagation, feature-only MLP, GraphSAGE-mean.

The plain GCN baseline is the teacher with use_se=False.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
import scipy.sparse as sp

from . import ops
from .graphs import DegreeSplits, GraphBundle
from .mlp import DTYPES, EarlyStopper, Mlp, MlpConfig, TrainReport, make_optimizer
from .optim import Optimizer
from .tape import Tape, Tensor, glorot_uniform, param


@dataclass
class LpConfig:
    """Label-propagation settings; the grid searches T in {10,20,50,100,200},
    alpha in {0.01,0.1,0.5,0.9,0.99}, and both propagation matrices."""

    num_props: int = 50
    matrix_kind: str = "laplacian"   # "laplacian" (D^-1/2 A D^-1/2) or "adjacency" (D^-1 A)
    alpha: float = 0.1

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must be in (0, 1)")
        if self.num_props < 1:
            raise ValueError("need at least one propagation step")
        if self.matrix_kind not in ("laplacian", "adjacency"):
            raise ValueError(f"matrix_kind must be laplacian or adjacency, got {self.matrix_kind!r}")


def _propagation_matrix(g: GraphBundle, kind: str) -> sp.csr_matrix:
    a = g.adjacency()
    deg = np.asarray(a.sum(axis=1)).ravel()
    if kind == "laplacian":
        with np.errstate(divide="ignore"):
            dinv = np.where(deg > 0, deg ** -0.5, 0.0)
        return (sp.diags(dinv) @ a @ sp.diags(dinv)).tocsr()
    with np.errstate(divide="ignore"):
        dinv = np.where(deg > 0, 1.0 / deg, 0.0)
    return (sp.diags(dinv) @ a).tocsr()


def label_propagation(g: GraphBundle, train_mask: np.ndarray, cfg: LpConfig) -> np.ndarray:
    """Diffuse one-hot training labels: E <- (1-alpha) G + alpha M E, T steps from E=G."""
    train_mask = np.asarray(train_mask, dtype=np.int64)
    if train_mask.size == 0:
        raise ValueError("label_propagation: empty train mask")
    labels = g.labels[train_mask]
    if (labels < 0).any():
        raise ValueError("label_propagation: unlabeled node in train mask")
    onehot = np.zeros((g.num_nodes, g.num_classes), dtype=np.float64)
    onehot[train_mask, labels] = 1.0
    m = _propagation_matrix(g, cfg.matrix_kind)
    scores = onehot.copy()
    hold = (1.0 - cfg.alpha) * onehot
    for _ in range(cfg.num_props):
        scores = hold + cfg.alpha * (m @ scores)
    return scores


def train_simple_mlp(g: GraphBundle, splits: DegreeSplits, cfg: MlpConfig,
                     seed: int = 0) -> tuple[Mlp, TrainReport]:
    """Feature-only MLP on the supervised pool; ignores every edge."""
    rng = np.random.default_rng(seed)
    model = Mlp(g.feature_dim, g.num_classes, cfg, rng)
    train_nodes = splits.train_mask_nodes()
    val_nodes = splits.val_mask_nodes()
    dtype = DTYPES[cfg.precision]
    x = Tensor(np.asarray(g.features, dtype=dtype))
    opt = make_optimizer(model.params(), cfg)
    stopper = EarlyStopper(cfg.patience)
    report = TrainReport(model="mlp", seed=seed, config=asdict(cfg))

    for epoch in range(cfg.max_epochs):
        tape = Tape()
        logits = model.forward(tape, x, training=True, rng=rng)
        loss = ops.cross_entropy(tape, logits, g.labels, train_nodes)
        report.loss_curve.append(loss.item())
        opt.zero_grad()
        tape.backward(loss)
        opt.step()
        eval_logits = model.forward(None, x).data
        score_nodes = val_nodes if len(val_nodes) else train_nodes
        acc = float((eval_logits[score_nodes].argmax(axis=1) == g.labels[score_nodes]).mean() * 100)
        report.epochs_run = epoch + 1
        if stopper.update(epoch, acc, model.state()):
            break
    if stopper.best_state is not None:
        model.load_state(stopper.best_state)
    report.best_epoch = stopper.best_epoch
    report.best_val = stopper.best_score
    logits = model.forward(None, x).data
    for split in DegreeSplits.SPLIT_NAMES:
        nodes = splits.partitions[split].test
        if len(nodes):
            report.split_accuracy[split] = float(
                (logits[nodes].argmax(axis=1) == g.labels[nodes]).mean() * 100)
    return model, report


class SageModel:
    """Two-layer GraphSAGE with mean aggregation over full neighborhoods.

    h' = relu(W_self h + W_neigh mean_{j in N(i)} h_j); degree-0 nodes get a
    zero neighbor term. The final layer emits raw logits.
    """

    def __init__(self, in_dim: int, hidden_dim: int, out_dim: int, seed: int,
                 precision: str = "f32"):
        rng = np.random.default_rng(seed)
        dtype = DTYPES[precision]
        dims = [(in_dim, hidden_dim), (hidden_dim, out_dim)]
        self.w_self = [param(glorot_uniform(rng, a, b, dtype), f"ws{i}")
                       for i, (a, b) in enumerate(dims)]
        self.w_neigh = [param(glorot_uniform(rng, a, b, dtype), f"wn{i}")
                        for i, (a, b) in enumerate(dims)]
        self.precision = precision

    def params(self):
        return self.w_self + self.w_neigh

    def forward(self, tape: Tape | None, mean_adj: sp.csr_matrix,
                mean_adj_t: sp.csr_matrix, x0: np.ndarray) -> Tensor:
        h = Tensor(np.asarray(x0, dtype=DTYPES[self.precision]))
        for i in range(2):
            neigh = ops.spmm(tape, mean_adj, h, a_t=mean_adj_t)
            z = ops.add(tape, ops.matmul(tape, h, self.w_self[i]),
                        ops.matmul(tape, neigh, self.w_neigh[i]))
            h = ops.relu(tape, z) if i == 0 else z
        return h


def train_sage_mean(g: GraphBundle, splits: DegreeSplits, cfg: MlpConfig,
                    seed: int = 0) -> tuple[SageModel, TrainReport]:
    model = SageModel(g.feature_dim, cfg.hidden_dim, g.num_classes, seed, cfg.precision)
    dtype = DTYPES[cfg.precision]
    mean_adj = _propagation_matrix(g, "adjacency").astype(dtype)
    mean_adj_t = mean_adj.T.tocsr()
    train_nodes = splits.train_mask_nodes()
    val_nodes = splits.val_mask_nodes()
    opt = Optimizer(model.params(), kind=cfg.optimizer, learning_rate=cfg.learning_rate,
                    weight_decay=cfg.weight_decay)
    stopper = EarlyStopper(cfg.patience)
    report = TrainReport(model="sage", seed=seed, config=asdict(cfg))

    def state():
        return {p.name: np.array(p.data) for p in model.params()}

    for epoch in range(cfg.max_epochs):
        tape = Tape()
        logits = model.forward(tape, mean_adj, mean_adj_t, g.features)
        loss = ops.cross_entropy(tape, logits, g.labels, train_nodes)
        report.loss_curve.append(loss.item())
        opt.zero_grad()
        tape.backward(loss)
        opt.step()
        eval_logits = logits.data
        score_nodes = val_nodes if len(val_nodes) else train_nodes
        acc = float((eval_logits[score_nodes].argmax(axis=1) == g.labels[score_nodes]).mean() * 100)
        report.epochs_run = epoch + 1
        if stopper.update(epoch, acc, state()):
            break
    if stopper.best_state is not None:
        for p in model.params():
            p.data = stopper.best_state[p.name].astype(p.data.dtype)
    report.best_epoch = stopper.best_epoch
    report.best_val = stopper.best_score
    logits = model.forward(None, mean_adj, mean_adj_t, g.features).data
    for split in DegreeSplits.SPLIT_NAMES:
        nodes = splits.partitions[split].test
        if len(nodes):
            report.split_accuracy[split] = float(
                (logits[nodes].argmax(axis=1) == g.labels[nodes]).mean() * 100)
    return model, report
