"""Cold-start node prediction: SE-GCN teacher, MLP student, FCR analysis."""

from .graphs import (
    BundleError,
    DegreeSplits,
    GraphBundle,
    NormalizedAdjacency,
    drop_edge,
    homophily_beta,
    load_bundle,
    make_degree_splits,
    normalized_adjacency,
    save_bundle,
    synth_power_law,
)
from .mlp import Mlp, MlpConfig, TrainReport
from .optim import Optimizer
from .tape import Tape, Tensor
from .teacher import (
    EmbeddingBank,
    TeacherConfig,
    TeacherModel,
    export_embedding_bank,
    teacher_forward,
    teacher_loss,
    train_teacher,
)
from .student import (
    StudentModel,
    TopKCache,
    infer_student,
    precompute_topk,
    train_embedder,
    train_head,
    virtual_neighborhood,
)
from .baselines import LpConfig, label_propagation, train_sage_mean, train_simple_mlp
from .fcr import DegenerateFcrError, FcrReport, compute_fcr, fcr_pipeline, grid_search
from .evaluate import EvalResult, accuracy, isolation_mrr, mrr, train_link_predictor
from .compare import distill_student, run_comparison

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
