"""Structural-embedding GCN teacher.

Each layer computes sigma(A_hat (X W + E)) where E is a trainable per-node,
per-layer embedding (zero-initialized, so at init the model is exactly a plain
GCN). Residual and normalization variants apply to hidden layers; the final
layer emits raw logits. The loss adds eta * sum of squared E entries on top of
masked cross entropy.
"""

from __future__ import annotations

import hashlib
from dataclasses import asdict, dataclass, replace

import numpy as np

from . import ops
from .graphs import GraphBundle, DegreeSplits, NormalizedAdjacency, drop_edge, normalized_adjacency
from .mlp import DTYPES, DivergenceError, EarlyStopper, TrainReport, make_optimizer
from .tape import Tape, Tensor, glorot_uniform, param

RESIDUAL_KINDS = ("none", "last", "initial", "dense", "jumping")


@dataclass
class TeacherConfig:
    num_layers: int = 2
    hidden_dim: int = 128
    use_se: bool = True
    residual: str = "none"
    norm: str = "pair"
    dropout_p: float = 0.0
    drop_edge_p: float = 0.0
    eta: float = 1e-4
    self_loops: bool = True
    optimizer: str = "adam"
    learning_rate: float = 0.005
    weight_decay: float = 0.0
    max_epochs: int = 1000
    patience: int = 100
    precision: str = "f32"
    # ablation for the shared-bias comparison: constrain every SE row to be identical
    se_shared_rows: bool = False

    def __post_init__(self):
        if self.num_layers < 2:
            raise ValueError("teacher needs at least 2 layers")
        if self.hidden_dim <= 0:
            raise ValueError("hidden_dim must be positive")
        if self.eta < 0:
            raise ValueError("eta must be non-negative")
        if self.residual not in RESIDUAL_KINDS:
            raise ValueError(f"residual must be one of {RESIDUAL_KINDS}")
        if self.norm not in ops.NORM_KINDS:
            raise ValueError(f"norm must be one of {ops.NORM_KINDS}")

    def with_overrides(self, **kw) -> "TeacherConfig":
        return replace(self, **kw)

    def hash(self) -> str:
        blob = repr(sorted(asdict(self).items())).encode()
        return hashlib.sha1(blob).hexdigest()[:12]


class TeacherModel:
    """Weights, structural embeddings, and norm parameters for one graph."""

    def __init__(self, num_nodes: int, in_dim: int, num_classes: int,
                 cfg: TeacherConfig, seed: int = 0, out_dim: int | None = None):
        self.cfg = cfg
        self.num_nodes = num_nodes
        self.in_dim = in_dim
        # out_dim overrides num_classes for embedding encoders (link prediction)
        self.out_dim = out_dim if out_dim is not None else num_classes
        self.trained = False
        rng = np.random.default_rng(seed)
        dtype = DTYPES[cfg.precision]
        L, dh = cfg.num_layers, cfg.hidden_dim

        in_dims = [in_dim] + [dh] * (L - 1)
        out_dims = [dh] * (L - 1) + [self.out_dim]
        if cfg.residual == "jumping":
            in_dims[L - 1] = dh * (L - 1)
        self.weights = [param(glorot_uniform(rng, in_dims[l], out_dims[l], dtype), f"w{l}")
                        for l in range(L)]
        self.struct_emb = []
        if cfg.use_se:
            self.struct_emb = [param(np.zeros((num_nodes, out_dims[l]), dtype=dtype), f"se{l}")
                               for l in range(L)]
        self.norm_gamma, self.norm_beta = [], []
        if cfg.norm == "batch":
            self.norm_gamma = [param(np.ones(dh, dtype=dtype), f"bn_g{l}") for l in range(L - 1)]
            self.norm_beta = [param(np.zeros(dh, dtype=dtype), f"bn_b{l}") for l in range(L - 1)]
        self.init_proj = None
        if cfg.residual == "initial" and in_dim != dh:
            self.init_proj = param(glorot_uniform(rng, in_dim, dh, dtype), "init_proj")

    def params(self) -> list[Tensor]:
        out = list(self.weights) + list(self.struct_emb)
        out += self.norm_gamma + self.norm_beta
        if self.init_proj is not None:
            out.append(self.init_proj)
        return out

    def preactivation(self, tape: Tape | None, x: Tensor, layer: int) -> Tensor:
        """X W + E for one layer (the quantity aggregated by the adjacency)."""
        z = ops.matmul(tape, x, self.weights[layer])
        if self.struct_emb:
            z = ops.add(tape, z, self.struct_emb[layer])
        return z

    def forward_layers(self, tape: Tape | None, a: NormalizedAdjacency, x0: np.ndarray,
                       training: bool = False, rng: np.random.Generator | None = None,
                       adj_override=None) -> list[Tensor]:
        """All layer outputs X^(1) .. X^(L); the last entry holds raw logits."""
        cfg = self.cfg
        dtype = DTYPES[cfg.precision]
        mat = adj_override if adj_override is not None else a.matrix
        if mat.dtype != dtype:
            mat = mat.astype(dtype)
        h = Tensor(np.asarray(x0, dtype=dtype))
        x_init = h
        projected_init = None
        if cfg.residual == "initial":
            projected_init = x_init if self.init_proj is None \
                else ops.matmul(tape, x_init, self.init_proj)
        hidden: list[Tensor] = []
        outputs: list[Tensor] = []
        L = cfg.num_layers
        for l in range(L):
            inp = h
            if l == L - 1 and cfg.residual == "jumping":
                inp = ops.concat(tape, hidden) if len(hidden) > 1 else hidden[0]
            if training and cfg.dropout_p > 0:
                inp = ops.dropout(tape, inp, cfg.dropout_p, rng)
            agg = ops.spmm(tape, mat, self.preactivation(tape, inp, l))
            if l < L - 1:
                gamma = self.norm_gamma[l] if cfg.norm == "batch" else None
                beta = self.norm_beta[l] if cfg.norm == "batch" else None
                agg = ops.normalize_layer(tape, agg, cfg.norm, gamma, beta)
                agg = self._residual(tape, agg, l, h, hidden, projected_init)
                h = ops.relu(tape, agg)
                hidden.append(h)
            else:
                h = agg  # classifier layer: no norm, no residual, no activation
            outputs.append(h)
        return outputs

    def _residual(self, tape, agg, layer, prev, hidden, projected_init):
        kind = self.cfg.residual
        if kind == "last" and layer > 0:
            return ops.add(tape, agg, prev)
        if kind == "initial":
            return ops.add(tape, agg, projected_init)
        if kind == "dense":
            for earlier in hidden:
                agg = ops.add(tape, agg, earlier)
            return agg
        return agg

    def logits(self, a: NormalizedAdjacency, x0: np.ndarray) -> np.ndarray:
        return self.forward_layers(None, a, x0)[-1].data

    def predictions(self, a: NormalizedAdjacency, x0: np.ndarray) -> np.ndarray:
        return self.logits(a, x0).argmax(axis=1)

    def state(self) -> dict[str, np.ndarray]:
        return {p.name: np.atleast_2d(p.data) for p in self.params()}

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        for p in self.params():
            p.data = state[p.name].reshape(p.data.shape).astype(p.data.dtype)


def teacher_forward(g: GraphBundle, a: NormalizedAdjacency, model: TeacherModel,
                    training: bool = False, rng: np.random.Generator | None = None) -> list[np.ndarray]:
    """Per-layer outputs as arrays (inference helper around forward_layers)."""
    outs = model.forward_layers(None if not training else Tape(), a, g.features,
                                training=training, rng=rng)
    return [o.data for o in outs]


def teacher_loss(tape: Tape | None, logits: Tensor, labels: np.ndarray,
                 train_mask: np.ndarray, model: TeacherModel) -> Tensor:
    """Masked cross entropy plus eta * sum of squared structural-embedding entries."""
    total = ops.cross_entropy(tape, logits, labels, train_mask)
    if model.cfg.use_se and model.cfg.eta > 0:
        for emb in model.struct_emb:
            total = ops.add(tape, total, ops.scale(tape, ops.sum_sq(tape, emb), model.cfg.eta))
    return total


def _accuracy_on(logits: np.ndarray, labels: np.ndarray, nodes: np.ndarray) -> float:
    if len(nodes) == 0:
        return float("nan")
    preds = logits[nodes].argmax(axis=1)
    return float((preds == labels[nodes]).mean() * 100.0)


def train_teacher(g: GraphBundle, splits: DegreeSplits, cfg: TeacherConfig,
                  seed: int = 0) -> tuple[TeacherModel, TrainReport]:
    """Full-batch training on the post-removal graph.

    Supervision covers the train nodes of head, tail, and middle; isolation
    nodes keep trainable SE rows (regularized) but are excluded from the cross
    entropy. Early stopping tracks validation accuracy; the best snapshot is
    restored before evaluation.
    """
    model = TeacherModel(g.num_nodes, g.feature_dim, g.num_classes, cfg, seed=seed)
    adj = normalized_adjacency(g, cfg.self_loops)
    report = _fit_gnn(model, adj, g.features, g.labels, splits, cfg, seed,
                      tag="gcn+se" if cfg.use_se else "gcn")
    model.trained = True
    logits = model.logits(adj, g.features)
    for split in DegreeSplits.SPLIT_NAMES:
        report.split_accuracy[split] = _accuracy_on(logits, g.labels, splits.partitions[split].test)
    return model, report


def _fit_gnn(model: TeacherModel, adj: NormalizedAdjacency, features: np.ndarray,
             labels: np.ndarray, splits: DegreeSplits, cfg: TeacherConfig,
             seed: int, tag: str) -> TrainReport:
    rng = np.random.default_rng(seed + 1)
    train_nodes = splits.train_mask_nodes()
    val_nodes = splits.val_mask_nodes()
    if len(train_nodes) == 0:
        raise ValueError("empty training mask")
    opt = make_optimizer(model.params(), cfg)
    stopper = EarlyStopper(cfg.patience)
    report = TrainReport(model=tag, seed=seed, config=asdict(cfg))
    dtype = DTYPES[cfg.precision]
    base_mat = adj.matrix.astype(dtype)
    stochastic = cfg.dropout_p > 0 or cfg.drop_edge_p > 0

    for epoch in range(cfg.max_epochs):
        mat = base_mat
        if cfg.drop_edge_p > 0:
            mat = drop_edge(adj, cfg.drop_edge_p, seed=seed * 100003 + epoch).matrix.astype(dtype)
        tape = Tape()
        outs = model.forward_layers(tape, adj, features, training=True, rng=rng, adj_override=mat)
        loss = teacher_loss(tape, outs[-1], labels, train_nodes, model)
        loss_val = loss.item()
        report.loss_curve.append(loss_val)
        if not np.isfinite(loss_val):
            report.diverged_at = epoch
            raise DivergenceError(epoch)
        opt.zero_grad()
        tape.backward(loss)
        opt.step()
        if cfg.se_shared_rows:
            for emb in model.struct_emb:
                emb.data = np.broadcast_to(emb.data.mean(axis=0, keepdims=True),
                                           emb.data.shape).copy()
        if stochastic:
            logits = model.forward_layers(None, adj, features, adj_override=base_mat)[-1].data
        else:
            logits = outs[-1].data
        score_nodes = val_nodes if len(val_nodes) else train_nodes
        val_acc = _accuracy_on(logits, labels, score_nodes)
        report.epochs_run = epoch + 1
        if stopper.update(epoch, val_acc, model.state()):
            break
    if stopper.best_state is not None:
        model.load_state(stopper.best_state)
    report.best_epoch = stopper.best_epoch
    report.best_val = stopper.best_score
    return report


# ---------------------------------------------------------------------------
# embedding bank


@dataclass(frozen=True)
class EmbeddingBank:
    """Teacher embeddings handed to the student: one row per node."""

    matrix: np.ndarray
    mode: str                 # "final" or "concat"
    teacher_hash: str

    def __post_init__(self):
        self.matrix.setflags(write=False)
        if not np.isfinite(self.matrix).all():
            raise ValueError("embedding bank contains non-finite entries")

    @property
    def width(self) -> int:
        return self.matrix.shape[1]


def export_embedding_bank(model: TeacherModel, g: GraphBundle, a: NormalizedAdjacency,
                          mode: str = "concat") -> EmbeddingBank:
    """Export the student-facing embedding matrix, in inference mode.

    final: the last-layer logits, N x C. concat: last-layer logits joined with
    the hidden layers' pre-aggregation features (X W + E), one block per
    hidden layer, total width hidden_dim * (L - 1) + C.
    """
    if mode not in ("final", "concat"):
        raise ValueError(f"bank mode must be final or concat, got {mode!r}")
    if not model.trained:
        import warnings
        warnings.warn("exporting an embedding bank from an untrained teacher")
    outs = model.forward_layers(None, a, g.features)
    if mode == "final":
        bank = outs[-1].data
    else:
        dtype = DTYPES[model.cfg.precision]
        blocks = [outs[-1].data]
        h = Tensor(np.asarray(g.features, dtype=dtype))
        layer_inputs = [h] + outs[:-1]
        for l in range(model.cfg.num_layers - 1):
            blocks.append(model.preactivation(None, layer_inputs[l], l).data)
        bank = np.concatenate(blocks, axis=1)
    return EmbeddingBank(matrix=np.array(bank), mode=mode, teacher_hash=model.cfg.hash())
