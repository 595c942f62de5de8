"""Multi-model, multi-seed comparison tables over the degree splits."""

from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path

import numpy as np

from .baselines import LpConfig, label_propagation, train_sage_mean, train_simple_mlp
from .evaluate import EvalResult, accuracy
from .graphs import DegreeSplits, GraphBundle, normalized_adjacency
from .mlp import MlpConfig
from .student import DEFAULT_TOP_K, StudentModel, train_embedder, train_head
from .teacher import TeacherConfig, export_embedding_bank, train_teacher

MODEL_TAGS = ("gcn2", "se2", "mlp", "sage", "student", "lp", "gcn64", "se64")


def default_teacher_config(**overrides) -> TeacherConfig:
    """Best shallow configuration for assortative citation graphs: 2 layers, SE, PairNorm."""
    cfg = TeacherConfig(num_layers=2, use_se=True, residual="none", norm="pair")
    return cfg.with_overrides(**overrides)


def default_mlp_config(**overrides) -> MlpConfig:
    cfg = MlpConfig(hidden_layers=2, hidden_dim=128, optimizer="adam", learning_rate=0.001)
    return cfg.with_overrides(**overrides)


def distill_student(g: GraphBundle, splits: DegreeSplits, teacher_cfg: TeacherConfig,
                    mlp_cfg: MlpConfig, seed: int = 0, k: int = DEFAULT_TOP_K,
                    bank_mode: str = "concat",
                    teacher=None) -> tuple[StudentModel, dict]:
    """Full pipeline: teacher, embedding bank, embedder, head."""
    reports = {}
    if teacher is None:
        teacher, reports["teacher"] = train_teacher(g, splits, teacher_cfg, seed)
    adj = normalized_adjacency(g, teacher.cfg.self_loops)
    bank = export_embedding_bank(teacher, g, adj, mode=bank_mode)
    non_isolated = np.setdiff1d(np.arange(g.num_nodes), splits.isolation)
    embedder, reports["embedder"] = train_embedder(g, bank, non_isolated, mlp_cfg, seed)
    head, reports["head"], _ = train_head(g, bank, embedder, splits, k, mlp_cfg, seed)
    return StudentModel(embedder=embedder, head=head, bank=bank, k=k), reports


def _model_predictions(tag: str, g: GraphBundle, splits: DegreeSplits, seed: int,
                       overrides: dict | None = None) -> tuple[np.ndarray, str]:
    """Predictions for every node from one freshly trained model."""
    overrides = dict(overrides or {})
    if tag in ("gcn2", "se2", "gcn64", "se64"):
        layers = 64 if tag.endswith("64") else 2
        cfg = default_teacher_config(num_layers=layers, use_se=tag.startswith("se"),
                                     **overrides)
        model, _ = train_teacher(g, splits, cfg, seed)
        adj = normalized_adjacency(g, cfg.self_loops)
        return model.predictions(adj, g.features), cfg.hash()
    if tag == "mlp":
        cfg = default_mlp_config(**overrides)
        model, _ = train_simple_mlp(g, splits, cfg, seed)
        return model.predict(g.features).argmax(axis=1), _cfg_hash(cfg)
    if tag == "sage":
        cfg = default_mlp_config(**overrides)
        model, _ = train_sage_mean(g, splits, cfg, seed)
        from .baselines import _propagation_matrix
        from .mlp import DTYPES
        mean_adj = _propagation_matrix(g, "adjacency").astype(DTYPES[cfg.precision])
        logits = model.forward(None, mean_adj, mean_adj.T.tocsr(), g.features).data
        return logits.argmax(axis=1), _cfg_hash(cfg)
    if tag == "student":
        k = overrides.pop("k", DEFAULT_TOP_K)
        bank_mode = overrides.pop("bank_mode", "concat")
        teacher_overrides = {key: val for key, val in overrides.items()
                             if key in TeacherConfig.__dataclass_fields__}
        teacher_cfg = default_teacher_config(**teacher_overrides)
        student, _ = distill_student(g, splits, teacher_cfg, default_mlp_config(),
                                     seed=seed, k=k, bank_mode=bank_mode)
        return student.predict(g.features), teacher_cfg.hash()
    if tag == "lp":
        cfg = LpConfig(**overrides) if overrides else LpConfig()
        scores = label_propagation(g, splits.train_mask_nodes(), cfg)
        return scores.argmax(axis=1), _cfg_hash(cfg)
    raise ValueError(f"unknown model tag {tag!r}; expected one of {MODEL_TAGS}")


def _cfg_hash(cfg) -> str:
    import hashlib
    return hashlib.sha1(repr(sorted(vars(cfg).items())).encode()).hexdigest()[:12]


def run_comparison(g: GraphBundle, splits: DegreeSplits, models: list[str],
                   seeds: list[int], overrides: dict | None = None) -> list[EvalResult]:
    """Train each model per seed and evaluate on every split's test nodes.

    Output order depends only on (models, seeds), never on execution order.
    """
    results = []
    for tag in models:
        per_model_overrides = (overrides or {}).get(tag)
        for seed in seeds:
            preds, cfg_hash = _model_predictions(tag, g, splits, seed, per_model_overrides)
            for split in DegreeSplits.SPLIT_NAMES:
                nodes = splits.partitions[split].test
                if len(nodes) == 0:
                    continue
                results.append(EvalResult(
                    model=tag, split=split, metric="accuracy",
                    value=accuracy(preds, g, nodes),
                    num_eval_nodes=len(nodes), seed=seed, config_hash=cfg_hash))
    results.sort(key=lambda r: (r.model, r.split, r.metric, r.seed))
    return results


def aggregate_results(results: list[EvalResult]) -> list[dict]:
    """Collapse per-seed results into mean/std rows."""
    groups = defaultdict(list)
    for r in results:
        groups[(r.model, r.split, r.metric, r.config_hash)].append(r)
    rows = []
    for (model, split, metric, cfg_hash), bucket in sorted(groups.items()):
        values = np.array([r.value for r in bucket])
        rows.append({
            "model": model, "split": split, "metric": metric,
            "mean": float(values.mean()), "std": float(values.std()),
            "seeds": len(bucket), "config_hash": cfg_hash,
        })
    return rows


RESULT_COLUMNS = ("model", "split", "metric", "mean", "std", "seeds", "config_hash")


def write_results_csv(rows: list[dict], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=RESULT_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row[k] for k in RESULT_COLUMNS})


def read_results_csv(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or set(RESULT_COLUMNS) - set(reader.fieldnames):
            raise ValueError(f"{path}: results CSV missing columns {RESULT_COLUMNS}")
        rows = []
        for raw in reader:
            row = dict(raw)
            row["mean"] = float(raw["mean"])
            row["std"] = float(raw["std"])
            row["seeds"] = int(raw["seeds"])
            rows.append(row)
        return rows


def format_table(rows: list[dict]) -> str:
    """Aligned text table, one section per metric kind."""
    sections = defaultdict(list)
    for row in rows:
        sections[row["metric"]].append(row)
    blocks = []
    for metric in sorted(sections):
        section = sorted(sections[metric], key=lambda r: (r["model"], r["split"]))
        header = f"[{metric}]"
        name_w = max(len(r["model"]) for r in section)
        split_w = max(len(r["split"]) for r in section)
        lines = [header]
        for r in section:
            lines.append(f"  {r['model']:<{name_w}}  {r['split']:<{split_w}}  "
                         f"{r['mean']:8.2f} +- {r['std']:.2f}  (n={r['seeds']})")
        blocks.append("\n".join(lines))
    return "\n".join(blocks)
