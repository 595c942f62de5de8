"""Two-stage MLP student with latent-neighborhood discovery.

The embedder MLP maps raw node features into the teacher's embedding space.
A top-K attention over the frozen embedding bank then rebuilds a virtual
neighborhood for any node, connected or not, and the head MLP maps
[features, virtual-neighborhood embedding] to class logits. Inference never
touches the adjacency structure.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import ops
from .graphs import DegreeSplits, GraphBundle
from .mlp import DTYPES, EarlyStopper, Mlp, MlpConfig, TrainReport, make_optimizer
from .tape import Tape, Tensor
from .teacher import EmbeddingBank

DEFAULT_TOP_K = 10
TOP_K_GRID = (3, 5, 10, 20)
MAX_CACHE_ENTRIES = 50_000_000


def _attention_scores(e_hat: np.ndarray, bank: np.ndarray) -> np.ndarray:
    return bank.astype(np.float64) @ e_hat.astype(np.float64)


def _topk_indices(scores: np.ndarray, k: int) -> np.ndarray:
    # stable sort of -scores: ties resolve to the lower node id
    return np.argsort(-scores, kind="stable")[:k]


def virtual_neighborhood(e_hat: np.ndarray, bank: EmbeddingBank, k: int) -> np.ndarray:
    """Attention over the K best-matching bank rows; returns their softmax mixture.

    Scores are dot products of the estimated embedding against every bank row.
    Rows outside the top K contribute exactly zero (masked softmax); the K
    attention weights are positive and sum to 1.
    """
    e_tilde, _, _ = virtual_neighborhood_detailed(e_hat, bank, k)
    return e_tilde


def virtual_neighborhood_detailed(e_hat: np.ndarray, bank: EmbeddingBank,
                                  k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """As virtual_neighborhood, also returning (selected indices, attention weights)."""
    n = bank.matrix.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"top-K size {k} out of range [1, {n}]")
    e_hat = np.asarray(e_hat).reshape(-1)
    if e_hat.shape[0] != bank.width:
        raise ValueError(f"embedding width {e_hat.shape[0]} != bank width {bank.width}")
    scores = _attention_scores(e_hat, bank.matrix)
    idx = _topk_indices(scores, k)
    weights = ops.softmax(scores[idx])
    e_tilde = weights @ bank.matrix[idx].astype(np.float64)
    return e_tilde.astype(bank.matrix.dtype), idx, weights


@dataclass(frozen=True)
class TopKCache:
    """Precomputed per-node attention: bank row indices and weights."""

    indices: np.ndarray   # (N, K) int64
    weights: np.ndarray   # (N, K) float64
    k: int

    def mix(self, bank: EmbeddingBank) -> np.ndarray:
        """Virtual-neighborhood embeddings for all cached nodes."""
        gathered = bank.matrix[self.indices].astype(np.float64)  # (N, K, d_e)
        out = (self.weights[:, :, None] * gathered).sum(axis=1)
        return out.astype(bank.matrix.dtype)


def precompute_topk(embedder: Mlp, g: GraphBundle, bank: EmbeddingBank, k: int,
                    max_entries: int = MAX_CACHE_ENTRIES) -> TopKCache:
    """Cache the top-K selection for every node of g (ranking is reusable across training)."""
    n = g.num_nodes
    if n * k > max_entries:
        raise ValueError(
            f"top-K cache needs {n * k} entries, over the {max_entries} budget; "
            "lower K or raise max_entries")
    e_hat_all = embedder.predict(g.features)
    indices = np.empty((n, k), dtype=np.int64)
    weights = np.empty((n, k), dtype=np.float64)
    for v in range(n):
        scores = _attention_scores(e_hat_all[v], bank.matrix)
        idx = _topk_indices(scores, k)
        indices[v] = idx
        weights[v] = ops.softmax(scores[idx])
    return TopKCache(indices=indices, weights=weights, k=k)


def train_embedder(g: GraphBundle, bank: EmbeddingBank, non_isolated: np.ndarray,
                   cfg: MlpConfig, seed: int = 0) -> tuple[Mlp, TrainReport]:
    """Fit the feature-to-embedding MLP by mean squared error on non-isolated nodes.

    10% of the non-isolated nodes are held out (seeded) for early stopping.
    """
    if bank.matrix.shape[0] != g.num_nodes:
        raise ValueError(f"bank has {bank.matrix.shape[0]} rows for a graph of {g.num_nodes} nodes")
    rng = np.random.default_rng(seed)
    nodes = np.array(non_isolated, dtype=np.int64)
    rng.shuffle(nodes)
    n_held = max(1, int(0.1 * len(nodes))) if len(nodes) > 1 else 0
    held, fit = nodes[:n_held], nodes[n_held:]
    if len(fit) == 0:
        raise ValueError("no nodes left to fit the embedder")

    model = Mlp(g.feature_dim, bank.width, cfg, rng)
    dtype = DTYPES[cfg.precision]
    x = Tensor(np.asarray(g.features, dtype=dtype))
    target = Tensor(np.asarray(bank.matrix, dtype=dtype))
    opt = make_optimizer(model.params(), cfg)
    stopper = EarlyStopper(cfg.patience)
    report = TrainReport(model="student.embedder", seed=seed, config=asdict(cfg))

    for epoch in range(cfg.max_epochs):
        tape = Tape()
        pred = model.forward(tape, x, training=True, rng=rng)
        loss = ops.mse(tape, pred, target, fit)
        report.loss_curve.append(loss.item())
        opt.zero_grad()
        tape.backward(loss)
        opt.step()
        eval_pred = model.forward(None, x)
        score_nodes = held if len(held) else fit
        held_mse = float(ops.mse(None, eval_pred, target, score_nodes).item())
        report.epochs_run = epoch + 1
        if stopper.update(epoch, -held_mse, model.state()):
            break
    if stopper.best_state is not None:
        model.load_state(stopper.best_state)
    report.best_epoch = stopper.best_epoch
    report.best_val = -stopper.best_score
    return model, report


def train_head(g: GraphBundle, bank: EmbeddingBank, embedder: Mlp, splits: DegreeSplits,
               k: int, cfg: MlpConfig, seed: int = 0, use_context: bool = True,
               include_all_splits: bool = False,
               cache: TopKCache | None = None) -> tuple[Mlp, TrainReport, TopKCache]:
    """Fit the classifier head on the train nodes of the tail and isolation splits.

    `use_context=False` zeroes the virtual-neighborhood block (plain MLP
    ablation). `include_all_splits` widens training to head and middle nodes.
    """
    if cache is None:
        cache = precompute_topk(embedder, g, bank, k)
    context = cache.mix(bank)
    if not use_context:
        context = np.zeros_like(context)

    parts = ["tail", "isolation"]
    if include_all_splits:
        parts += ["head", "overall"]
    train_nodes = np.sort(np.concatenate([splits.partitions[p].train for p in parts]))
    val_nodes = np.sort(np.concatenate([splits.partitions[p].val for p in parts]))
    if len(train_nodes) == 0:
        raise ValueError("empty training set for the student head")

    rng = np.random.default_rng(seed)
    dtype = DTYPES[cfg.precision]
    features = np.concatenate([g.features, context], axis=1).astype(dtype)
    model = Mlp(features.shape[1], g.num_classes, cfg, rng)
    x = Tensor(features)
    opt = make_optimizer(model.params(), cfg)
    stopper = EarlyStopper(cfg.patience)
    report = TrainReport(model="student.head", seed=seed, config=asdict(cfg))

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
    return model, report, cache


@dataclass
class StudentModel:
    """Frozen bank plus the two trained MLPs; inference is feature-only."""

    embedder: Mlp
    head: Mlp
    bank: EmbeddingBank
    k: int

    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        """Class distributions for feature rows; no adjacency argument exists."""
        features = np.atleast_2d(np.asarray(features))
        if features.shape[1] != self.embedder.in_dim:
            raise ValueError(
                f"feature width {features.shape[1]} != expected {self.embedder.in_dim}")
        e_hat = self.embedder.predict(features)
        context = np.stack([virtual_neighborhood(e_hat[i], self.bank, self.k)
                            for i in range(len(features))])
        logits = self.head.predict(np.concatenate([features, context], axis=1))
        return ops.softmax(logits, axis=1)

    def predict(self, features: np.ndarray) -> np.ndarray:
        return self.predict_proba(features).argmax(axis=1)


def infer_student(x: np.ndarray, model: StudentModel) -> np.ndarray:
    """Class distribution for a single feature vector."""
    return model.predict_proba(np.asarray(x).reshape(1, -1))[0]
