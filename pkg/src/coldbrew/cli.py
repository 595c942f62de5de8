"""Command-line entry point.

Subcommands: splits, train-teacher, baseline, distill, linkpred, fcr, eval,
predict, report, synth. Every run echoes its merged configuration to the output
directory before any training, so runs are reconstructible. Exit codes:
0 success, 2 usage or config error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import compare, fcr
from .baselines import LpConfig, label_propagation, train_sage_mean, train_simple_mlp
from .checkpoint import load_checkpoint, save_checkpoint
from .evaluate import EvalResult, accuracy, isolation_mrr, train_link_predictor
from .graphs import (BundleError, DegreeSplits, GraphBundle, SplitPartition,
                     load_bundle, make_degree_splits, normalized_adjacency,
                     save_bundle, synth_power_law)
from .mlp import DivergenceError, Mlp, MlpConfig, TrainReport
from .student import StudentModel
from .teacher import EmbeddingBank, TeacherConfig, TeacherModel, train_teacher

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# config files: flat key=value lines grouped by [section]


def read_config_file(path: str | Path) -> dict[str, dict[str, str]]:
    sections: dict[str, dict[str, str]] = {}
    current = sections.setdefault("", {})
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = sections.setdefault(line[1:-1].strip(), {})
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"config line without '=': {line!r}")
        current[key.strip()] = value.strip()
    return sections


def coerce(value: str):
    low = value.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return int(value)
    except ValueError:
        pass
    try:
        return float(value)
    except ValueError:
        return value


def merge_config(cls, section: dict[str, str], overrides: dict):
    """File section under flag overrides, validated against the dataclass fields."""
    fields = cls.__dataclass_fields__
    merged = {}
    for key, value in section.items():
        if key not in fields:
            raise UsageError(f"unknown {cls.__name__} key {key!r} in config file")
        merged[key] = coerce(value)
    for key, value in overrides.items():
        if value is not None:
            merged[key] = value
    try:
        return cls(**merged)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc))


def echo_config(out: Path, sections: dict[str, dict]) -> None:
    out.mkdir(parents=True, exist_ok=True)
    lines = []
    for name, body in sections.items():
        if name:
            lines.append(f"[{name}]")
        for key, value in sorted(body.items()):
            lines.append(f"{key}={value}")
    (out / "config.echo").write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# dataset and split files


def resolve_dataset(spec: str) -> GraphBundle:
    path = Path(spec)
    if not path.exists():
        root = os.environ.get("COLDBREW_FIXTURES", "fixtures")
        path = Path(root) / spec
    if not path.exists():
        raise UsageError(f"dataset not found: {spec}")
    return load_bundle(path)


def _write_ids(path: Path, ids: np.ndarray) -> None:
    path.write_text("".join(f"{v}\n" for v in ids))


def save_splits(splits: DegreeSplits, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    for name in ("head", "tail", "isolation", "middle"):
        _write_ids(out / f"{name}.ids", getattr(splits, name))
    with open(out / "removed_edges.tsv", "w") as fh:
        for i, j in splits.removed_edges:
            fh.write(f"{i}\t{j}\n")
    with open(out / "partitions.tsv", "w") as fh:
        for split, part in splits.partitions.items():
            for kind in ("train", "val", "test"):
                for v in getattr(part, kind):
                    fh.write(f"{v}\t{split}\t{kind}\n")
    (out / "splits.meta").write_text(
        f"seed={splits.seed}\n"
        f"head_frac={splits.fractions[0]}\n"
        f"tail_frac={splits.fractions[1]}\n"
        f"iso_frac={splits.fractions[2]}\n")


def load_splits(path: str | Path) -> DegreeSplits:
    root = Path(path)
    if not (root / "splits.meta").exists():
        raise UsageError(f"not a splits directory: {path}")
    meta = {k: v for k, v in
            (line.split("=", 1) for line in (root / "splits.meta").read_text().splitlines() if line)}
    groups: dict[str, dict[str, list[int]]] = {}
    with open(root / "partitions.tsv") as fh:
        for line in fh:
            v, split, kind = line.split()
            groups.setdefault(split, {}).setdefault(kind, []).append(int(v))
    partitions = {split: SplitPartition(
        train=np.array(sorted(kinds.get("train", [])), dtype=np.int64),
        val=np.array(sorted(kinds.get("val", [])), dtype=np.int64),
        test=np.array(sorted(kinds.get("test", [])), dtype=np.int64))
        for split, kinds in groups.items()}
    removed_path = root / "removed_edges.tsv"
    removed = np.loadtxt(removed_path, dtype=np.int64, ndmin=2) \
        if removed_path.stat().st_size else np.zeros((0, 2), dtype=np.int64)

    def ids(name):
        text = (root / f"{name}.ids").read_text().split()
        return np.array([int(t) for t in text], dtype=np.int64)

    return DegreeSplits(
        head=ids("head"), tail=ids("tail"), isolation=ids("isolation"), middle=ids("middle"),
        removed_edges=removed, partitions=partitions, seed=int(meta["seed"]),
        fractions=(float(meta["head_frac"]), float(meta["tail_frac"]), float(meta["iso_frac"])),
    )


def post_removal(g: GraphBundle, splits: DegreeSplits) -> GraphBundle:
    if not len(splits.removed_edges):
        return g
    removed = {(int(i), int(j)) for i, j in splits.removed_edges}
    keep = np.array([(int(i), int(j)) not in removed for i, j in g.edges])
    return g.with_edges(g.edges[keep])


# ---------------------------------------------------------------------------
# report and checkpoint plumbing


def write_report(out: Path, report: TrainReport) -> None:
    (out / "report.txt").write_text("\n".join(report.as_lines()) + "\n")
    with open(out / "loss_curve.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "loss"])
        for epoch, loss in enumerate(report.loss_curve):
            writer.writerow([epoch, f"{loss:.6g}"])


def save_teacher(out: Path, model: TeacherModel, cfg: TeacherConfig) -> None:
    save_checkpoint(out / "teacher.cbck", model.state())
    echo = {f"teacher.{k}": v for k, v in asdict(cfg).items()}
    echo.update({"teacher.in_dim": model.in_dim, "teacher.num_nodes": model.num_nodes,
                 "teacher.out_dim": model.out_dim})
    lines = [f"{k.split('.', 1)[1]}={v}" for k, v in sorted(echo.items())]
    (out / "teacher.meta").write_text("\n".join(lines) + "\n")


def load_teacher(path: Path) -> TeacherModel:
    meta_path = path / "teacher.meta"
    if not meta_path.exists():
        raise UsageError(f"no teacher checkpoint under {path}")
    meta = {k: coerce(v) for k, v in
            (line.split("=", 1) for line in meta_path.read_text().splitlines() if line)}
    in_dim = meta.pop("in_dim")
    num_nodes = meta.pop("num_nodes")
    out_dim = meta.pop("out_dim")
    cfg = TeacherConfig(**{k: v for k, v in meta.items()
                           if k in TeacherConfig.__dataclass_fields__})
    num_classes = out_dim
    model = TeacherModel(num_nodes, in_dim, num_classes, cfg, out_dim=out_dim)
    model.load_state(load_checkpoint(path / "teacher.cbck"))
    model.trained = True
    return model


def save_student(out: Path, student: StudentModel, mlp_cfg: MlpConfig) -> None:
    tensors = {f"embedder.{k}": v for k, v in student.embedder.state().items()}
    tensors.update({f"head.{k}": v for k, v in student.head.state().items()})
    tensors["bank"] = student.bank.matrix
    save_checkpoint(out / "student.cbck", tensors)
    (out / "student.meta").write_text(
        f"k={student.k}\nbank_mode={student.bank.mode}\n"
        f"teacher_hash={student.bank.teacher_hash}\n"
        f"in_dim={student.embedder.in_dim}\nbank_width={student.bank.width}\n"
        f"num_classes={student.head.out_dim}\n"
        + "\n".join(f"mlp.{k}={v}" for k, v in sorted(asdict(mlp_cfg).items())) + "\n")


def load_student(path: Path) -> StudentModel:
    meta_path = path / "student.meta"
    if not meta_path.exists():
        raise UsageError(f"no student checkpoint under {path}")
    meta = {}
    mlp_kw = {}
    for line in meta_path.read_text().splitlines():
        if not line:
            continue
        key, value = line.split("=", 1)
        if key.startswith("mlp."):
            mlp_kw[key[4:]] = coerce(value)
        else:
            meta[key] = coerce(value)
    cfg = MlpConfig(**mlp_kw)
    tensors = load_checkpoint(path / "student.cbck")
    rng = np.random.default_rng(0)
    embedder = Mlp(meta["in_dim"], meta["bank_width"], cfg, rng)
    embedder.load_state({k[9:]: v for k, v in tensors.items() if k.startswith("embedder.")})
    head = Mlp(meta["in_dim"] + meta["bank_width"], meta["num_classes"], cfg, rng)
    head.load_state({k[5:]: v for k, v in tensors.items() if k.startswith("head.")})
    bank = EmbeddingBank(matrix=tensors["bank"], mode=meta["bank_mode"],
                         teacher_hash=str(meta["teacher_hash"]))
    return StudentModel(embedder=embedder, head=head, bank=bank, k=meta["k"])


def eval_rows(preds: np.ndarray, g: GraphBundle, splits: DegreeSplits, model_tag: str,
              seed: int, cfg_hash: str) -> list[EvalResult]:
    rows = []
    for split in DegreeSplits.SPLIT_NAMES:
        nodes = splits.partitions[split].test
        if len(nodes):
            rows.append(EvalResult(model=model_tag, split=split, metric="accuracy",
                                   value=accuracy(preds, g, nodes),
                                   num_eval_nodes=len(nodes), seed=seed, config_hash=cfg_hash))
    return rows


def write_eval_csv(out: Path, rows: list[EvalResult]) -> None:
    aggregated = compare.aggregate_results(rows)
    compare.write_results_csv(aggregated, out / "results.csv")


# ---------------------------------------------------------------------------
# subcommands


def cmd_splits(args, file_cfg) -> int:
    g = resolve_dataset(args.dataset)
    out = Path(args.out)
    splits, post = make_degree_splits(g, args.head_frac, args.tail_frac, args.iso_frac,
                                      seed=args.seed)
    echo_config(out, {"splits": {"dataset": g.name, "head_frac": args.head_frac,
                                 "tail_frac": args.tail_frac, "iso_frac": args.iso_frac,
                                 "seed": args.seed}})
    save_splits(splits, out)
    deg = g.degrees()
    hist = np.bincount(deg)
    with open(out / "degree_hist.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["degree", "count"])
        for d, c in enumerate(hist):
            if c:
                writer.writerow([d, c])
    print(f"splits written to {out}: head={len(splits.head)} tail={len(splits.tail)} "
          f"isolation={len(splits.isolation)} removed_edges={len(splits.removed_edges)}")
    return EXIT_OK


def _prepare(args) -> tuple[GraphBundle, DegreeSplits, GraphBundle]:
    g = resolve_dataset(args.dataset)
    splits = load_splits(args.splits)
    return g, splits, post_removal(g, splits)


def cmd_train_teacher(args, file_cfg) -> int:
    g, splits, post = _prepare(args)
    overrides = {k: getattr(args, k, None) for k in TeacherConfig.__dataclass_fields__
                 if hasattr(args, k)}
    if args.precision:
        overrides["precision"] = args.precision
    cfg = merge_config(TeacherConfig, file_cfg.get("teacher", {}), overrides)
    out = Path(args.out)
    echo_config(out, {"teacher": asdict(cfg), "": {"dataset": args.dataset, "seed": args.seed}})
    model, report = train_teacher(post, splits, cfg, seed=args.seed)
    save_teacher(out, model, cfg)
    write_report(out, report)
    write_eval_csv(out, eval_rows(model.predictions(normalized_adjacency(post, cfg.self_loops),
                                                    post.features),
                                  post, splits, "gcn+se" if cfg.use_se else "gcn",
                                  args.seed, cfg.hash()))
    print("\n".join(report.as_lines()))
    return EXIT_OK


def cmd_baseline(args, file_cfg) -> int:
    g, splits, post = _prepare(args)
    out = Path(args.out)
    seed = args.seed
    if args.model == "lp":
        cfg = merge_config(LpConfig, file_cfg.get("lp", {}),
                           {"num_props": args.num_props, "matrix_kind": args.matrix_kind,
                            "alpha": args.alpha})
        echo_config(out, {"lp": asdict(cfg), "": {"dataset": args.dataset, "seed": seed}})
        scores = label_propagation(post, splits.train_mask_nodes(), cfg)
        rows = eval_rows(scores.argmax(axis=1), post, splits, "lp", seed, "")
        write_eval_csv(out, rows)
        print(compare.format_table(compare.aggregate_results(rows)))
        return EXIT_OK
    overrides = {k: getattr(args, k, None) for k in MlpConfig.__dataclass_fields__
                 if hasattr(args, k)}
    if args.precision:
        overrides["precision"] = args.precision
    cfg = merge_config(MlpConfig, file_cfg.get("mlp", {}), overrides)
    echo_config(out, {"mlp": asdict(cfg), "": {"dataset": args.dataset, "seed": seed,
                                               "model": args.model}})
    if args.model == "mlp":
        model, report = train_simple_mlp(post, splits, cfg, seed=seed)
        preds = model.predict(post.features).argmax(axis=1)
        save_checkpoint(out / "mlp.cbck", model.state())
    elif args.model == "sage":
        model, report = train_sage_mean(post, splits, cfg, seed=seed)
        from .baselines import _propagation_matrix
        from .mlp import DTYPES
        mean_adj = _propagation_matrix(post, "adjacency").astype(DTYPES[cfg.precision])
        preds = model.forward(None, mean_adj, mean_adj.T.tocsr(), post.features).data.argmax(axis=1)
    elif args.model == "gcn":
        tcfg = compare.default_teacher_config(use_se=False,
                                              precision=args.precision or "f32")
        model, report = train_teacher(post, splits, tcfg, seed=seed)
        preds = model.predictions(normalized_adjacency(post, tcfg.self_loops), post.features)
        save_teacher(out, model, tcfg)
    else:
        raise UsageError(f"unknown baseline model {args.model!r}")
    write_report(out, report)
    write_eval_csv(out, eval_rows(preds, post, splits, args.model, seed, ""))
    print("\n".join(report.as_lines()))
    return EXIT_OK


def cmd_distill(args, file_cfg) -> int:
    if not args.teacher:
        raise UsageError("distill requires --teacher pointing at a trained checkpoint")
    g, splits, post = _prepare(args)
    teacher = load_teacher(Path(args.teacher))
    overrides = {k: getattr(args, k, None) for k in MlpConfig.__dataclass_fields__
                 if hasattr(args, k)}
    if args.precision:
        overrides["precision"] = args.precision
    cfg = merge_config(MlpConfig, file_cfg.get("mlp", {}), overrides)
    out = Path(args.out)
    echo_config(out, {"mlp": asdict(cfg),
                      "student": {"k": args.k, "bank_mode": args.bank_mode},
                      "": {"dataset": args.dataset, "seed": args.seed,
                           "teacher": args.teacher}})
    student, reports = compare.distill_student(post, splits, teacher.cfg, cfg, seed=args.seed,
                                               k=args.k, bank_mode=args.bank_mode,
                                               teacher=teacher)
    save_student(out, student, cfg)
    write_report(out, reports["head"])
    preds = student.predict(post.features)
    write_eval_csv(out, eval_rows(preds, post, splits, "student", args.seed,
                                  teacher.cfg.hash()))
    print("\n".join(reports["head"].as_lines()))
    return EXIT_OK


def cmd_linkpred(args, file_cfg) -> int:
    g, splits, post = _prepare(args)
    out = Path(args.out)
    echo_config(out, {"linkpred": {"encoder": args.encoder, "embed_dim": args.embed_dim,
                                   "epochs": args.max_epochs, "negatives": args.negatives},
                      "": {"dataset": args.dataset, "seed": args.seed}})
    z, report = train_link_predictor(args.encoder, post, splits, seed=args.seed,
                                     embed_dim=args.embed_dim, max_epochs=args.max_epochs)
    value, queries = isolation_mrr(z, g, splits, num_negatives=args.negatives, seed=args.seed)
    rows = [EvalResult(model=f"linkpred.{args.encoder}", split="isolation", metric="mrr",
                       value=value, num_eval_nodes=queries, seed=args.seed)]
    write_eval_csv(out, rows)
    write_report(out, report)
    print(f"isolation mrr={value:.4f} over {queries} queries")
    return EXIT_OK


def cmd_fcr(args, file_cfg) -> int:
    g, splits, post = _prepare(args)
    out = Path(args.out)
    echo_config(out, {"fcr": {"budget": args.budget, "workers": args.workers},
                      "": {"dataset": args.dataset, "seed": args.seed}})
    report, logs = fcr.fcr_pipeline(post, splits, seed=args.seed, budget=args.budget,
                                    workers=args.workers)
    (out / "fcr_report.txt").write_text("\n".join(report.as_lines()) + "\n")
    for kind, trials in logs.items():
        with open(out / f"trials_{kind}.csv", "w", newline="") as fh:
            keys = sorted(trials[0].config) if trials else []
            writer = csv.writer(fh)
            writer.writerow(["index", *keys, "val", "test", "diverged"])
            for t in trials:
                writer.writerow([t.index, *[t.config.get(k) for k in keys],
                                 f"{t.val:.4f}", f"{t.test:.4f}", t.diverged])
    print("\n".join(report.as_lines()))
    return EXIT_OK


def cmd_eval(args, file_cfg) -> int:
    g, splits, post = _prepare(args)
    ckpt = Path(args.checkpoint)
    out = Path(args.out)
    echo_config(out, {"eval": {"checkpoint": str(ckpt)},
                      "": {"dataset": args.dataset, "seed": args.seed}})
    if (ckpt / "student.meta").exists():
        student = load_student(ckpt)
        preds = student.predict(post.features)
        tag = "student"
    elif (ckpt / "teacher.meta").exists():
        model = load_teacher(ckpt)
        preds = model.predictions(normalized_adjacency(post, model.cfg.self_loops), post.features)
        tag = "gcn+se" if model.cfg.use_se else "gcn"
    else:
        raise UsageError(f"no checkpoint found under {ckpt}")
    rows = eval_rows(preds, post, splits, tag, args.seed, "")
    write_eval_csv(out, rows)
    print(compare.format_table(compare.aggregate_results(rows)))
    return EXIT_OK


def cmd_predict(args, file_cfg) -> int:
    student = load_student(Path(args.checkpoint))
    features = np.loadtxt(args.features, delimiter=",", dtype=np.float32, ndmin=2)
    probs = student.predict_proba(features)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "predictions.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node_id", "argmax"] +
                        [f"p{c}" for c in range(probs.shape[1])])
        for node_id, row in enumerate(probs):
            writer.writerow([node_id, int(row.argmax())] +
                            [f"{p:.6g}" for p in row])
    print(f"wrote predictions for {len(probs)} rows to {out / 'predictions.csv'}")
    return EXIT_OK


def cmd_report(args, file_cfg) -> int:
    rows = []
    paths = sorted(Path(args.results).glob("**/results.csv"))
    if not paths:
        raise UsageError(f"no results CSV found under {args.results}")
    for path in paths:
        rows.extend(compare.read_results_csv(path))
    merged = Path(args.out) if args.out else None
    # re-aggregate rows that share a key across files
    from collections import defaultdict
    groups = defaultdict(list)
    for row in rows:
        groups[(row["model"], row["split"], row["metric"], row["config_hash"])].append(row)
    combined = []
    for (model, split, metric, cfg_hash), bucket in sorted(groups.items()):
        total = sum(r["seeds"] for r in bucket)
        mean = sum(r["mean"] * r["seeds"] for r in bucket) / total
        if total > 1:
            sq = sum(r["seeds"] * (r["std"] ** 2 + r["mean"] ** 2) for r in bucket) / total
            std = max(0.0, sq - mean ** 2) ** 0.5
        else:
            std = 0.0
        combined.append({"model": model, "split": split, "metric": metric,
                         "mean": mean, "std": std, "seeds": total, "config_hash": cfg_hash})
    table = compare.format_table(combined)
    print(table)
    if merged:
        merged.mkdir(parents=True, exist_ok=True)
        compare.write_results_csv(combined, merged / "merged_results.csv")
        (merged / "table.txt").write_text(table + "\n")
    return EXIT_OK


def cmd_synth(args, file_cfg) -> int:
    g = synth_power_law(args.nodes, exponent=args.exponent,
                        inter_cluster_noise=args.noise, num_clusters=args.clusters,
                        seed=args.seed)
    save_bundle(g, args.out, feature_encoding=args.encoding)
    print(f"wrote {g.name}: N={g.num_nodes} E={g.num_edges} C={g.num_classes} -> {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coldbrew", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_splits=True):
        p.add_argument("--dataset", required=True)
        p.add_argument("--out", required=True)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--config")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--precision", choices=("f32", "f64"))
        if needs_splits:
            p.add_argument("--splits", required=True)

    p = sub.add_parser("splits", help="degree-based split construction")
    common(p, needs_splits=False)
    p.add_argument("--head-frac", type=float, default=0.1, dest="head_frac")
    p.add_argument("--tail-frac", type=float, default=0.1, dest="tail_frac")
    p.add_argument("--iso-frac", type=float, default=0.1, dest="iso_frac")
    p.set_defaults(func=cmd_splits)

    p = sub.add_parser("train-teacher", help="train the SE-GCN teacher")
    common(p)
    p.add_argument("--num-layers", type=int, dest="num_layers")
    p.add_argument("--hidden-dim", type=int, dest="hidden_dim")
    p.add_argument("--use-se", type=lambda s: s.lower() == "true", dest="use_se")
    p.add_argument("--residual")
    p.add_argument("--norm")
    p.add_argument("--eta", type=float)
    p.add_argument("--max-epochs", type=int, dest="max_epochs")
    p.add_argument("--patience", type=int)
    p.add_argument("--learning-rate", type=float, dest="learning_rate")
    p.set_defaults(func=cmd_train_teacher)

    p = sub.add_parser("baseline", help="train a reference model")
    common(p)
    p.add_argument("--model", required=True, choices=("mlp", "sage", "lp", "gcn"))
    p.add_argument("--hidden-layers", type=int, dest="hidden_layers")
    p.add_argument("--hidden-dim", type=int, dest="hidden_dim")
    p.add_argument("--max-epochs", type=int, dest="max_epochs")
    p.add_argument("--num-props", type=int, dest="num_props")
    p.add_argument("--matrix-kind", dest="matrix_kind", choices=("adjacency", "laplacian"))
    p.add_argument("--alpha", type=float)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("distill", help="train the two-stage student from a teacher checkpoint")
    common(p)
    p.add_argument("--teacher")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--bank-mode", dest="bank_mode", choices=("final", "concat"), default="concat")
    p.add_argument("--hidden-layers", type=int, dest="hidden_layers")
    p.add_argument("--hidden-dim", type=int, dest="hidden_dim")
    p.add_argument("--max-epochs", type=int, dest="max_epochs")
    p.set_defaults(func=cmd_distill)

    p = sub.add_parser("linkpred", help="link prediction on the isolation split")
    common(p)
    p.add_argument("--encoder", choices=("gcn", "se", "student"), default="se")
    p.add_argument("--embed-dim", type=int, default=64, dest="embed_dim")
    p.add_argument("--max-epochs", type=int, default=200, dest="max_epochs")
    p.add_argument("--negatives", type=int, default=100)
    p.set_defaults(func=cmd_linkpred)

    p = sub.add_parser("fcr", help="feature-contribution-ratio analysis")
    common(p)
    p.add_argument("--budget", type=int)
    p.set_defaults(func=cmd_fcr)

    p = sub.add_parser("eval", help="evaluate a checkpoint on the split test sets")
    common(p)
    p.add_argument("--checkpoint", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="cold-start inference from a features CSV")
    p.add_argument("--checkpoint", required=True, help="student checkpoint directory")
    p.add_argument("--features", required=True, help="CSV, one feature row per node")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("report", help="merge results CSVs into a table")
    p.add_argument("--results", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("synth", help="generate a synthetic bundle")
    p.add_argument("--out", required=True)
    p.add_argument("--nodes", type=int, default=200)
    p.add_argument("--clusters", type=int, default=2)
    p.add_argument("--exponent", type=float, default=2.5)
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--encoding", choices=("csv", "bin"), default="bin")
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        file_cfg = read_config_file(args.config) if getattr(args, "config", None) else {}
        return args.func(args, file_cfg)
    except (UsageError, BundleError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DivergenceError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
