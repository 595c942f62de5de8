"""Feature Contribution Ratio: grid searches and the architecture verdict.

FCR compares a feature-only MLP and a structure-only label propagation against
a full GNN. Values below 50% mean the graph structure carries the task; above
100% the GNN's aggregation is actively harmful (the MLP beats it).
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .baselines import LpConfig, label_propagation, train_simple_mlp
from .graphs import DegreeSplits, GraphBundle, homophily_beta
from .mlp import DivergenceError, MlpConfig
from .teacher import RESIDUAL_KINDS, TeacherConfig, train_teacher
from . import ops

GCN_LAYER_GRID = (2, 4, 8, 16, 32, 64)
MLP_LAYER_GRID = (2, 8, 16, 32)
MLP_DIM_GRID = (128, 256)
MLP_OPTIMIZER_GRID = (("adam", 0.001), ("adam", 0.005), ("adam", 0.02), ("sgd", 0.005))
LP_PROPS_GRID = (10, 20, 50, 100, 200)
LP_ALPHA_GRID = (0.01, 0.1, 0.5, 0.9, 0.99)


class DegenerateFcrError(ValueError):
    """Raised when the FCR denominators vanish (or flip sign in the >100% branch)."""


def compute_fcr(z_gnn: float, z_mlp: float, z_lp: float) -> float:
    """Two-branch residual-performance ratio, in percent.

    With z_mlp <= z_gnn: 100 * d_lp / (d_mlp + d_lp) where d_* = z_gnn - z_*.
    With z_mlp > z_gnn: 100 + 100 * |d_mlp| / (|d_mlp| + d_lp).
    """
    for name, z in (("z_gnn", z_gnn), ("z_mlp", z_mlp), ("z_lp", z_lp)):
        if not 0.0 <= z <= 100.0:
            raise ValueError(f"{name}={z} outside [0, 100]")
    delta_mlp = z_gnn - z_mlp
    delta_lp = z_gnn - z_lp
    if z_mlp <= z_gnn:
        denom = delta_mlp + delta_lp
        if denom == 0:
            raise DegenerateFcrError(
                f"degenerate FCR: zero residual sum for z=({z_gnn}, {z_mlp}, {z_lp})")
        return 100.0 * delta_lp / denom
    denom = abs(delta_mlp) + delta_lp
    if denom <= 0:
        raise DegenerateFcrError(
            f"degenerate FCR: both submodules beat the GNN, z=({z_gnn}, {z_mlp}, {z_lp})")
    return 100.0 + 100.0 * abs(delta_mlp) / denom


def fcr_verdict(fcr: float) -> str:
    if fcr < 50.0:
        return "graph-structure dominant"
    if fcr < 100.0:
        return "node-features dominant"
    return "aggregation harmful"


def gcn_grid(base: TeacherConfig | None = None) -> list[TeacherConfig]:
    base = base or TeacherConfig()
    return [base.with_overrides(num_layers=layers, use_se=se, residual=res, norm=norm)
            for layers in GCN_LAYER_GRID
            for se in (True, False)
            for res in RESIDUAL_KINDS
            for norm in ops.NORM_KINDS]


def mlp_grid(base: MlpConfig | None = None) -> list[MlpConfig]:
    base = base or MlpConfig()
    return [base.with_overrides(hidden_layers=layers, hidden_dim=dim,
                                optimizer=opt, learning_rate=lr)
            for layers in MLP_LAYER_GRID
            for dim in MLP_DIM_GRID
            for opt, lr in MLP_OPTIMIZER_GRID]


def lp_grid() -> list[LpConfig]:
    return [LpConfig(num_props=t, matrix_kind=kind, alpha=alpha)
            for t in LP_PROPS_GRID
            for kind in ("adjacency", "laplacian")
            for alpha in LP_ALPHA_GRID]


@dataclass
class Trial:
    index: int
    config: dict
    val: float
    test: float
    diverged: bool = False


def _evaluate_lp(g: GraphBundle, splits: DegreeSplits, cfg: LpConfig) -> tuple[float, float]:
    scores = label_propagation(g, splits.train_mask_nodes(), cfg)
    preds = scores.argmax(axis=1)
    val_nodes = splits.val_mask_nodes()
    test_nodes = splits.partitions["overall"].test
    val = float((preds[val_nodes] == g.labels[val_nodes]).mean() * 100) if len(val_nodes) else 0.0
    test = float((preds[test_nodes] == g.labels[test_nodes]).mean() * 100)
    return val, test


def _run_trial(args) -> Trial:
    kind, g, splits, index, cfg, seed = args
    try:
        if kind == "gcn":
            _, report = train_teacher(g, splits, cfg, seed)
            return Trial(index, asdict(cfg), report.best_val, report.split_accuracy["overall"])
        if kind == "mlp":
            _, report = train_simple_mlp(g, splits, cfg, seed)
            return Trial(index, asdict(cfg), report.best_val, report.split_accuracy["overall"])
        if kind == "lp":
            val, test = _evaluate_lp(g, splits, cfg)
            return Trial(index, asdict(cfg), val, test)
    except (DivergenceError, FloatingPointError):
        return Trial(index, asdict(cfg), float("-inf"), float("nan"), diverged=True)
    raise ValueError(f"unknown grid-search kind {kind!r}")


def grid_search(kind: str, g: GraphBundle, splits: DegreeSplits,
                space: list | None = None, budget: int | None = None,
                seed: int = 0, workers: int = 1):
    """Train every configuration (or a seeded budget-limited subset); pick by validation.

    Returns (best config, test accuracy of the winner, trial log). The trial
    log is ordered by position in the search space, not completion order.
    """
    if space is None:
        space = {"gcn": gcn_grid, "mlp": mlp_grid, "lp": lp_grid}[kind]()
    if not space:
        raise ValueError("empty search space")
    indices = np.arange(len(space))
    if budget is not None and budget < len(space):
        rng = np.random.default_rng(seed)
        indices = np.sort(rng.choice(indices, size=budget, replace=False))
    tasks = [(kind, g, splits, int(i), space[int(i)], seed) for i in indices]

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            trials = list(pool.map(_run_trial, tasks))
    else:
        trials = [_run_trial(t) for t in tasks]
    trials.sort(key=lambda t: t.index)

    alive = [t for t in trials if not t.diverged]
    if not alive:
        raise RuntimeError("all grid-search trials diverged")
    best = max(alive, key=lambda t: (t.val, -t.index))
    return space[best.index], best.test, trials


@dataclass(frozen=True)
class FcrReport:
    z_gnn: float
    z_mlp: float
    z_lp: float
    delta_mlp: float
    delta_lp: float
    fcr: float
    beta: float
    verdict: str
    best_gnn_config: dict
    best_mlp_config: dict
    best_lp_config: dict
    head_minus_tail: float
    head_minus_isolation: float

    def as_lines(self) -> list[str]:
        lines = [
            f"z_gnn={self.z_gnn:.4f}", f"z_mlp={self.z_mlp:.4f}", f"z_lp={self.z_lp:.4f}",
            f"delta_mlp={self.delta_mlp:.4f}", f"delta_lp={self.delta_lp:.4f}",
            f"fcr={self.fcr:.4f}", f"beta={self.beta:.4f}", f"verdict={self.verdict}",
            f"head_minus_tail={self.head_minus_tail:.4f}",
            f"head_minus_isolation={self.head_minus_isolation:.4f}",
        ]
        for tag, cfg in (("gnn", self.best_gnn_config), ("mlp", self.best_mlp_config),
                         ("lp", self.best_lp_config)):
            for key, value in sorted(cfg.items()):
                lines.append(f"best_{tag}.{key}={value}")
        return lines


def fcr_pipeline(g: GraphBundle, splits: DegreeSplits, seed: int = 0,
                 budget: int | None = None, workers: int = 1,
                 gcn_space: list | None = None, mlp_space: list | None = None,
                 lp_space: list | None = None) -> tuple[FcrReport, dict]:
    """Run the three grid searches and assemble the architecture-selection report.

    Returns the report plus the per-submodule trial logs.
    """
    best_gnn, z_gnn, gnn_trials = grid_search("gcn", g, splits, gcn_space, budget, seed, workers)
    best_mlp, z_mlp, mlp_trials = grid_search("mlp", g, splits, mlp_space, budget, seed, workers)
    best_lp, z_lp, lp_trials = grid_search("lp", g, splits, lp_space, budget, seed, workers)

    _, winner_report = train_teacher(g, splits, best_gnn, seed)
    acc = winner_report.split_accuracy
    fcr_value = compute_fcr(z_gnn, z_mlp, z_lp)
    report = FcrReport(
        z_gnn=z_gnn, z_mlp=z_mlp, z_lp=z_lp,
        delta_mlp=z_gnn - z_mlp, delta_lp=z_gnn - z_lp,
        fcr=fcr_value, beta=homophily_beta(g), verdict=fcr_verdict(fcr_value),
        best_gnn_config=asdict(best_gnn), best_mlp_config=asdict(best_mlp),
        best_lp_config=asdict(best_lp),
        head_minus_tail=acc["head"] - acc["tail"],
        head_minus_isolation=acc["head"] - acc["isolation"],
    )
    logs = {"gcn": gnn_trials, "mlp": mlp_trials, "lp": lp_trials}
    return report, logs
