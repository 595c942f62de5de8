"""Metrics and link prediction: per-split accuracy, ranking MRR, edge encoders."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import ops
from .graphs import DegreeSplits, GraphBundle, normalized_adjacency
from .mlp import DTYPES, Mlp, MlpConfig, TrainReport
from .optim import Optimizer
from .student import precompute_topk, train_embedder
from .tape import Tape, Tensor
from .teacher import EmbeddingBank, TeacherConfig, TeacherModel


def accuracy(preds: np.ndarray, g: GraphBundle, nodes: np.ndarray) -> float:
    """Percent of nodes whose predicted class matches the label."""
    nodes = np.asarray(nodes, dtype=np.int64)
    if nodes.size == 0:
        raise ValueError("accuracy: empty node set")
    return float((np.asarray(preds)[nodes] == g.labels[nodes]).mean() * 100.0)


@dataclass(frozen=True)
class EvalResult:
    model: str
    split: str
    metric: str      # "accuracy" or "mrr"
    value: float
    num_eval_nodes: int
    seed: int
    config_hash: str = ""

    def __post_init__(self):
        if self.metric == "accuracy" and not 0.0 <= self.value <= 100.0:
            raise ValueError(f"accuracy {self.value} outside [0, 100]")
        if self.metric == "mrr" and not 0.0 < self.value <= 1.0:
            raise ValueError(f"mrr {self.value} outside (0, 1]")
        if self.num_eval_nodes <= 0:
            raise ValueError("num_eval_nodes must be positive")


def mrr(scores_per_query: list[tuple[float, np.ndarray]], ties: str = "pessimistic") -> float:
    """Mean reciprocal rank of the positive among its negatives.

    Pessimistic ranking counts ties against the positive (a tied negative
    outranks it); optimistic counts only strictly greater negatives.
    """
    if not scores_per_query:
        raise ValueError("mrr: empty query list")
    if ties not in ("pessimistic", "optimistic"):
        raise ValueError(f"unknown tie policy {ties!r}")
    total = 0.0
    for pos, negs in scores_per_query:
        negs = np.asarray(negs)
        if negs.size == 0:
            raise ValueError("mrr: query without negatives")
        if ties == "pessimistic":
            rank = 1 + int((negs >= pos).sum())
        else:
            rank = 1 + int((negs > pos).sum())
        total += 1.0 / rank
    return total / len(scores_per_query)


# ---------------------------------------------------------------------------
# link prediction


def _sample_negative_pairs(num: int, n: int, edge_set: set, rng: np.random.Generator,
                           max_tries: int = 100) -> np.ndarray:
    out = np.empty((num, 2), dtype=np.int64)
    for row in range(num):
        for _ in range(max_tries):
            i = int(rng.integers(n))
            j = int(rng.integers(n))
            if i != j and (min(i, j), max(i, j)) not in edge_set:
                out[row] = (i, j)
                break
        else:
            raise RuntimeError("could not sample a non-edge; graph too dense")
    return out


def _edge_set(edges: np.ndarray) -> set:
    return {(int(i), int(j)) for i, j in edges}


def _fit_edge_encoder(forward, params: list, pos_edges: np.ndarray, n: int,
                      seed: int, learning_rate: float, max_epochs: int,
                      report: TrainReport) -> None:
    """Shared logistic-loss loop: one resampled negative per positive per epoch."""
    if len(pos_edges) == 0:
        raise ValueError("link prediction needs at least one edge")
    rng = np.random.default_rng(seed + 77)
    known = _edge_set(pos_edges)
    opt = Optimizer(params, kind="adam", learning_rate=learning_rate)
    for epoch in range(max_epochs):
        negs = _sample_negative_pairs(len(pos_edges), n, known, rng)
        tape = Tape()
        z = forward(tape)
        loss = ops.pairwise_logistic_loss(tape, z, pos_edges, negs)
        report.loss_curve.append(loss.item())
        if not np.isfinite(report.loss_curve[-1]):
            report.diverged_at = epoch
            raise FloatingPointError(f"link predictor diverged at epoch {epoch}")
        opt.zero_grad()
        tape.backward(loss)
        opt.step()
        report.epochs_run = epoch + 1


LINK_ENCODER_KINDS = ("gcn", "se", "student")


def train_link_predictor(kind: str, g: GraphBundle, splits: DegreeSplits, seed: int = 0,
                         embed_dim: int = 64, hidden_dim: int = 128,
                         learning_rate: float = 0.005, max_epochs: int = 200,
                         top_k: int = 10) -> tuple[np.ndarray, TrainReport]:
    """Train an encoder with the edge-logistic objective on the post-removal graph.

    Returns embeddings for all N nodes. "gcn"/"se" encode through the graph
    (isolation rows see only their self-loop); "student" distills the SE
    encoder into the feature-only pipeline, so its embeddings never use edges.
    """
    if kind not in LINK_ENCODER_KINDS:
        raise ValueError(f"encoder kind must be one of {LINK_ENCODER_KINDS}")
    pos_edges = g.edges
    report = TrainReport(model=f"linkpred.{kind}", seed=seed,
                         config={"embed_dim": embed_dim, "lr": learning_rate,
                                 "epochs": max_epochs, "kind": kind})

    teacher_cfg = TeacherConfig(num_layers=2, hidden_dim=hidden_dim,
                                use_se=(kind != "gcn"), norm="none",
                                learning_rate=learning_rate)
    encoder = TeacherModel(g.num_nodes, g.feature_dim, g.num_classes, teacher_cfg,
                           seed=seed, out_dim=embed_dim)
    # start the embedding head small so initial edge scores sit near 0.5
    encoder.weights[-1].data = encoder.weights[-1].data * 0.05
    adj = normalized_adjacency(g, teacher_cfg.self_loops)

    def teacher_z(tape):
        return encoder.forward_layers(tape, adj, g.features)[-1]

    _fit_edge_encoder(teacher_z, encoder.params(), pos_edges, g.num_nodes,
                      seed, learning_rate, max_epochs, report)
    encoder.trained = True
    z_teacher = encoder.forward_layers(None, adj, g.features)[-1].data
    if kind in ("gcn", "se"):
        return z_teacher, report

    # student: imitate the SE encoder, then refit a feature-only head with the same loss
    bank = EmbeddingBank(matrix=np.array(z_teacher), mode="final",
                         teacher_hash=teacher_cfg.hash())
    non_isolated = np.setdiff1d(np.arange(g.num_nodes), splits.isolation)
    mlp_cfg = MlpConfig(hidden_layers=2, hidden_dim=hidden_dim, max_epochs=300, patience=50)
    embedder, _ = train_embedder(g, bank, non_isolated, mlp_cfg, seed=seed)
    cache = precompute_topk(embedder, g, bank, top_k)
    context = cache.mix(bank)
    dtype = DTYPES[mlp_cfg.precision]
    inputs = Tensor(np.concatenate([g.features, context], axis=1).astype(dtype))
    head = Mlp(inputs.data.shape[1], embed_dim, mlp_cfg, np.random.default_rng(seed + 5))
    head.weights[-1].data = head.weights[-1].data * 0.05

    def student_z(tape):
        return head.forward(tape, inputs)

    _fit_edge_encoder(student_z, head.params(), pos_edges, g.num_nodes,
                      seed, learning_rate, max_epochs, report)
    return head.forward(None, inputs).data, report


def isolation_mrr(z: np.ndarray, g_original: GraphBundle, splits: DegreeSplits,
                  num_negatives: int = 100, seed: int = 0,
                  ties: str = "pessimistic") -> tuple[float, int]:
    """MRR over the artificially removed edges, queried from the isolated endpoint.

    Each removed edge scores against `num_negatives` sampled non-neighbors of
    the source (filtered against the original edge set).
    """
    rng = np.random.default_rng(seed + 13)
    known = _edge_set(g_original.edges)
    iso = set(int(v) for v in splits.isolation)
    n = g_original.num_nodes
    queries = []
    for i, j in splits.removed_edges:
        for src, dst in ((int(i), int(j)), (int(j), int(i))):
            if src not in iso:
                continue
            negs = []
            while len(negs) < num_negatives:
                k = int(rng.integers(n))
                if k != src and (min(src, k), max(src, k)) not in known:
                    negs.append(k)
            pos_score = float(z[src] @ z[dst])
            neg_scores = z[src] @ z[np.asarray(negs)].T
            queries.append((pos_score, neg_scores))
    if not queries:
        raise ValueError("no removed edges with an isolated endpoint")
    return mrr(queries, ties=ties), len(queries)
