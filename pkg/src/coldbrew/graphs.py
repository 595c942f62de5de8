"""Graph bundles, normalized adjacency, degree splits, homophily, synthetic graphs.

A bundle is an immutable undirected graph with node features and class labels.
On disk it is a directory holding `meta`, `edges.tsv`, `labels.tsv`, and either
`features.csv` or `features.bin` (magic "CBGB").
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

FEATURES_BIN_MAGIC = b"CBGB"
FEATURES_BIN_VERSION = 1


class BundleError(ValueError):
    """Raised when a bundle directory is malformed or internally inconsistent."""


def _canonical_edges(pairs: np.ndarray, num_nodes: int) -> tuple[np.ndarray, int]:
    """Symmetrize, deduplicate, and sort an edge list; returns (edges, dropped self-loops).

    Output rows satisfy i < j and are lexicographically sorted, so a bundle's
    edge array is a canonical form: two bundles with the same edge set compare
    byte-equal.
    """
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if pairs.size and (pairs.min() < 0 or pairs.max() >= num_nodes):
        raise BundleError("node id out of range in edge list")
    loops = pairs[:, 0] == pairs[:, 1]
    num_loops = int(loops.sum())
    pairs = pairs[~loops]
    lo = np.minimum(pairs[:, 0], pairs[:, 1])
    hi = np.maximum(pairs[:, 0], pairs[:, 1])
    edges = np.unique(np.stack([lo, hi], axis=1), axis=0) if len(pairs) else pairs.reshape(0, 2)
    return edges, num_loops


@dataclass(frozen=True)
class GraphBundle:
    """Immutable graph: canonical undirected edges, features, labels, metadata."""

    name: str
    num_nodes: int
    num_classes: int
    edges: np.ndarray      # (M, 2) int64, i < j, unique, sorted
    features: np.ndarray   # (N, d) float
    labels: np.ndarray     # (N,) int64, -1 means unlabeled

    def __post_init__(self):
        for arr in (self.edges, self.features, self.labels):
            arr.setflags(write=False)
        n = self.num_nodes
        if self.features.shape[0] != n or self.labels.shape[0] != n:
            raise BundleError(
                f"features rows ({self.features.shape[0]}) and labels length "
                f"({self.labels.shape[0]}) must both equal num_nodes ({n})"
            )
        if not np.isfinite(self.features).all():
            raise BundleError("non-finite feature values")
        bad = (self.labels < -1) | (self.labels >= self.num_classes)
        if bad.any():
            raise BundleError(f"label out of range at node {int(np.where(bad)[0][0])}")
        if len(self.edges):
            if self.edges.min() < 0 or self.edges.max() >= n:
                raise BundleError("node id out of range in edge list")
            if (self.edges[:, 0] >= self.edges[:, 1]).any():
                raise BundleError("edges must be canonical (i < j, no self-loops)")

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def adjacency(self) -> sp.csr_matrix:
        """Symmetric binary CSR adjacency, no self-loops."""
        n = self.num_nodes
        if not len(self.edges):
            return sp.csr_matrix((n, n), dtype=np.float64)
        src = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
        dst = np.concatenate([self.edges[:, 1], self.edges[:, 0]])
        data = np.ones(len(src), dtype=np.float64)
        return sp.csr_matrix((data, (src, dst)), shape=(n, n))

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.num_nodes, dtype=np.int64)
        if len(self.edges):
            np.add.at(deg, self.edges[:, 0], 1)
            np.add.at(deg, self.edges[:, 1], 1)
        return deg

    def with_edges(self, edges: np.ndarray, name: str | None = None) -> "GraphBundle":
        """Same nodes/features/labels over a different edge set."""
        edges, _ = _canonical_edges(edges, self.num_nodes)
        return GraphBundle(
            name=name or self.name,
            num_nodes=self.num_nodes,
            num_classes=self.num_classes,
            edges=edges,
            features=np.array(self.features),
            labels=np.array(self.labels),
        )


@dataclass(frozen=True)
class NormalizedAdjacency:
    """Symmetrically normalized adjacency D^{-1/2} A D^{-1/2}, optionally with self-loops.

    Degree-0 rows (possible only with self_loops=False) use the convention
    d^{-1/2} = 0, giving an all-zero row instead of NaN.
    """

    matrix: sp.csr_matrix
    self_loops: bool
    edge_pairs: np.ndarray = field(repr=False)  # undirected (M, 2), kept for edge dropout

    @property
    def num_nodes(self) -> int:
        return self.matrix.shape[0]


def normalized_adjacency(g: GraphBundle, self_loops: bool = True) -> NormalizedAdjacency:
    """Build D^{-1/2} (A + I) D^{-1/2} when self_loops, else D^{-1/2} A D^{-1/2}."""
    return _normalize_edges(g.edges, g.num_nodes, self_loops)


def _normalize_edges(edges: np.ndarray, n: int, self_loops: bool) -> NormalizedAdjacency:
    if len(edges):
        src = np.concatenate([edges[:, 0], edges[:, 1]])
        dst = np.concatenate([edges[:, 1], edges[:, 0]])
    else:
        src = dst = np.zeros(0, dtype=np.int64)
    if self_loops:
        diag = np.arange(n, dtype=np.int64)
        src = np.concatenate([src, diag])
        dst = np.concatenate([dst, diag])
    a = sp.csr_matrix((np.ones(len(src)), (src, dst)), shape=(n, n))
    deg = np.asarray(a.sum(axis=1)).ravel()
    with np.errstate(divide="ignore"):
        dinv = np.where(deg > 0, deg ** -0.5, 0.0)
    mat = sp.diags(dinv) @ a @ sp.diags(dinv)
    return NormalizedAdjacency(matrix=mat.tocsr(), self_loops=self_loops,
                               edge_pairs=np.array(edges, dtype=np.int64))


def drop_edge(a: NormalizedAdjacency, p: float, seed: int) -> NormalizedAdjacency:
    """Keep each undirected edge with probability 1-p (both directions together), renormalize.

    Deterministic per seed; intended for use during training only.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"drop probability must be in [0, 1], got {p}")
    if p == 0.0 or not len(a.edge_pairs):
        return a
    rng = np.random.default_rng(seed)
    keep = rng.random(len(a.edge_pairs)) >= p
    return _normalize_edges(a.edge_pairs[keep], a.num_nodes, a.self_loops)


# ---------------------------------------------------------------------------
# degree splits


@dataclass(frozen=True)
class SplitPartition:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray

    def all_nodes(self) -> np.ndarray:
        return np.concatenate([self.train, self.val, self.test])


@dataclass(frozen=True)
class DegreeSplits:
    """Head/tail/isolation node sets plus per-split 70/10/20 partitions.

    `middle` holds every node in none of the three degree splits and backs the
    Overall pool. `removed_edges` are the original edges deleted to isolate the
    isolation nodes; together with the post-removal graph they reconstruct the
    original edge set.
    """

    head: np.ndarray
    tail: np.ndarray
    isolation: np.ndarray
    middle: np.ndarray
    removed_edges: np.ndarray
    partitions: dict  # split name -> SplitPartition
    seed: int
    fractions: tuple[float, float, float]  # (head, tail, iso)

    SPLIT_NAMES = ("overall", "head", "tail", "isolation")

    def nodes_of(self, split: str) -> np.ndarray:
        if split == "overall":
            return self.middle
        return getattr(self, split)

    def train_mask_nodes(self) -> np.ndarray:
        """Supervised pool: train nodes of head, tail, and middle (never isolation)."""
        return np.sort(np.concatenate([
            self.partitions["head"].train,
            self.partitions["tail"].train,
            self.partitions["overall"].train,
        ]))

    def val_mask_nodes(self) -> np.ndarray:
        return np.sort(np.concatenate([
            self.partitions["head"].val,
            self.partitions["tail"].val,
            self.partitions["overall"].val,
        ]))


def _partition_70_10_20(ids: np.ndarray, rng: np.random.Generator) -> SplitPartition:
    ids = np.array(ids, dtype=np.int64)
    rng.shuffle(ids)
    n = len(ids)
    n_train = int(0.7 * n)
    n_val = int(0.1 * n)
    return SplitPartition(
        train=np.sort(ids[:n_train]),
        val=np.sort(ids[n_train:n_train + n_val]),
        test=np.sort(ids[n_train + n_val:]),
    )


def make_degree_splits(
    g: GraphBundle,
    head_frac: float = 0.1,
    tail_frac: float = 0.1,
    iso_frac: float = 0.1,
    seed: int = 0,
) -> tuple[DegreeSplits, GraphBundle]:
    """Construct head/tail/isolation splits and the post-removal graph.

    Isolation nodes are the bottom `iso_frac` of the degree distribution; all
    their incident edges are removed. Tail nodes are the `tail_frac` lowest
    non-zero-degree nodes of the remaining graph, head the top `head_frac` by
    remaining degree. Degree ties break by ascending node id. Each split (and
    the remaining middle pool) is partitioned 70/10/20 into train/val/test by
    a seeded shuffle.
    """
    for name, frac in (("head", head_frac), ("tail", tail_frac), ("iso", iso_frac)):
        if not 0.0 < frac < 1.0:
            raise ValueError(f"empty split requested: {name}_frac={frac} not in (0, 1)")
    if head_frac + tail_frac + iso_frac >= 1.0:
        raise ValueError("split fractions must sum to less than 1")

    n = g.num_nodes
    n_iso = int(round(iso_frac * n))
    n_tail = int(round(tail_frac * n))
    n_head = int(round(head_frac * n))
    if min(n_iso, n_tail, n_head) == 0:
        raise ValueError("empty split requested: graph too small for the given fractions")

    deg0 = g.degrees()
    # stable sort on degree; ties resolve to the lower node id
    order = np.argsort(deg0, kind="stable")
    isolation = np.sort(order[:n_iso])

    iso_mask = np.zeros(n, dtype=bool)
    iso_mask[isolation] = True
    touches_iso = iso_mask[g.edges[:, 0]] | iso_mask[g.edges[:, 1]] if len(g.edges) else np.zeros(0, dtype=bool)
    removed_edges = g.edges[touches_iso]
    post = g.with_edges(g.edges[~touches_iso])

    deg1 = post.degrees()
    rest = np.setdiff1d(np.arange(n), isolation)
    nonzero_rest = rest[deg1[rest] > 0]
    if len(nonzero_rest) < n_tail + n_head:
        raise ValueError("empty split requested: too few connected nodes after isolation removal")
    by_deg = nonzero_rest[np.argsort(deg1[nonzero_rest], kind="stable")]
    tail = np.sort(by_deg[:n_tail])
    head = np.sort(by_deg[len(by_deg) - n_head:])

    assigned = np.zeros(n, dtype=bool)
    for ids in (isolation, tail, head):
        assigned[ids] = True
    middle = np.where(~assigned)[0]

    rng = np.random.default_rng(seed)
    partitions = {
        "overall": _partition_70_10_20(middle, rng),
        "head": _partition_70_10_20(head, rng),
        "tail": _partition_70_10_20(tail, rng),
        "isolation": _partition_70_10_20(isolation, rng),
    }
    splits = DegreeSplits(
        head=head, tail=tail, isolation=isolation, middle=middle,
        removed_edges=np.array(removed_edges), partitions=partitions,
        seed=seed, fractions=(head_frac, tail_frac, iso_frac),
    )
    return splits, post


def homophily_beta(g: GraphBundle) -> float:
    """Mean over labeled degree>=1 nodes of the same-label neighbor fraction, in percent."""
    deg = g.degrees()
    same = np.zeros(g.num_nodes, dtype=np.float64)
    y = g.labels
    if len(g.edges):
        i, j = g.edges[:, 0], g.edges[:, 1]
        match = ((y[i] == y[j]) & (y[i] >= 0)).astype(np.float64)
        np.add.at(same, i, match)
        np.add.at(same, j, match)
    include = (deg > 0) & (y >= 0)
    if not include.any():
        raise ValueError("no labeled node with degree >= 1")
    frac = same[include] / deg[include]
    return float(frac.mean() * 100.0)


# ---------------------------------------------------------------------------
# synthetic graphs


def synth_power_law(
    n: int,
    exponent: float = 2.5,
    inter_cluster_noise: float = 0.1,
    num_clusters: int = 2,
    seed: int = 0,
    mean_degree: float | None = None,
    feature_noise: float = 0.1,
    feature_dim: int | None = None,
) -> GraphBundle:
    """Deterministic clustered graph with an approximately power-law degree sequence.

    Labels are cluster ids; features are the cluster centroid plus seeded
    Gaussian noise. Each edge stub attaches within the cluster with probability
    1 - inter_cluster_noise. `mean_degree` rescales the raw Pareto degree
    sequence when given.
    """
    if num_clusters < 2 or n < num_clusters:
        raise ValueError("need n >= num_clusters >= 2")
    if exponent <= 1.0:
        raise ValueError("power-law exponent must exceed 1")
    if not 0.0 <= inter_cluster_noise <= 1.0:
        raise ValueError("inter_cluster_noise must be a fraction in [0, 1]")

    rng = np.random.default_rng(seed)
    labels = rng.permutation(np.arange(n) % num_clusters).astype(np.int64)

    # Pareto degree targets, clipped to sane bounds for a simple stub sampler.
    # Each stub raises two degrees, so halve the per-node target.
    raw = (1.0 - rng.random(n)) ** (-1.0 / (exponent - 1.0))
    if mean_degree is not None:
        raw *= (mean_degree / 2.0) / raw.mean()
    targets = np.clip(np.round(raw).astype(np.int64), 1, max(1, n - 1))

    members = [np.where(labels == c)[0] for c in range(num_clusters)]
    pairs = set()
    for v in range(n):
        for _ in range(int(targets[v])):
            if rng.random() >= inter_cluster_noise:
                pool = members[labels[v]]
            else:
                other = (labels[v] + 1 + rng.integers(num_clusters - 1)) % num_clusters
                pool = members[other]
            u = int(pool[rng.integers(len(pool))])
            if u == v:
                continue
            pairs.add((min(u, v), max(u, v)))
    edges = np.array(sorted(pairs), dtype=np.int64).reshape(-1, 2)

    d = feature_dim or max(4, num_clusters)
    centroids = np.zeros((num_clusters, d))
    centroids[:, :num_clusters] = 3.0 * np.eye(num_clusters)[:, :min(num_clusters, d)]
    features = centroids[labels] + feature_noise * rng.standard_normal((n, d))

    return GraphBundle(
        name=f"synth_n{n}_c{num_clusters}_s{seed}",
        num_nodes=n,
        num_classes=num_clusters,
        edges=edges,
        features=features.astype(np.float32),
        labels=labels,
    )


# ---------------------------------------------------------------------------
# on-disk bundle format


def save_bundle(g: GraphBundle, path: str | Path, feature_encoding: str = "bin") -> None:
    """Write the bundle directory format; `feature_encoding` is "csv" or "bin"."""
    if feature_encoding not in ("csv", "bin"):
        raise ValueError(f"feature_encoding must be csv or bin, got {feature_encoding!r}")
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    meta = (
        f"name={g.name}\n"
        f"num_nodes={g.num_nodes}\n"
        f"num_classes={g.num_classes}\n"
        f"feature_dim={g.feature_dim}\n"
        f"feature_encoding={feature_encoding}\n"
    )
    (out / "meta").write_text(meta)
    with open(out / "edges.tsv", "w") as fh:
        for i, j in g.edges:
            fh.write(f"{i}\t{j}\n")
    with open(out / "labels.tsv", "w") as fh:
        for y in g.labels:
            fh.write(f"{y}\n")
    if feature_encoding == "csv":
        np.savetxt(out / "features.csv", g.features, delimiter=",", fmt="%.9g")
    else:
        feats = np.ascontiguousarray(g.features, dtype="<f4")
        with open(out / "features.bin", "wb") as fh:
            fh.write(FEATURES_BIN_MAGIC)
            fh.write(struct.pack("<III", FEATURES_BIN_VERSION, g.num_nodes, g.feature_dim))
            fh.write(feats.tobytes())


def _read_meta(path: Path) -> dict:
    meta = {}
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        meta[key.strip()] = value.strip()
    for key in ("name", "num_nodes", "num_classes", "feature_dim", "feature_encoding"):
        if key not in meta:
            raise BundleError(f"meta file missing key {key!r}")
    return meta


def load_bundle(path: str | Path) -> GraphBundle:
    """Load and validate a bundle directory.

    Directed or duplicated edge lists are symmetrized and deduplicated; stored
    self-loops are dropped with a warning.
    """
    root = Path(path)
    meta_path = root / "meta"
    if not meta_path.exists():
        raise BundleError(f"missing file: {meta_path}")
    meta = _read_meta(meta_path)
    n = int(meta["num_nodes"])
    c = int(meta["num_classes"])
    d = int(meta["feature_dim"])
    encoding = meta["feature_encoding"]

    edges_path = root / "edges.tsv"
    labels_path = root / "labels.tsv"
    for p in (edges_path, labels_path):
        if not p.exists():
            raise BundleError(f"missing file: {p}")

    raw = np.loadtxt(edges_path, dtype=np.int64, delimiter="\t", ndmin=2) \
        if edges_path.stat().st_size else np.zeros((0, 2), dtype=np.int64)
    edges, num_loops = _canonical_edges(raw, n)
    if num_loops:
        warnings.warn(f"{g_name(meta)}: dropped {num_loops} self-loop(s) on load")

    labels = np.loadtxt(labels_path, dtype=np.int64, ndmin=1)
    if labels.shape[0] != n:
        raise BundleError(f"labels.tsv has {labels.shape[0]} lines, expected {n}")

    if encoding == "csv":
        feat_path = root / "features.csv"
        if not feat_path.exists():
            raise BundleError(f"missing file: {feat_path}")
        features = np.loadtxt(feat_path, dtype=np.float32, delimiter=",", ndmin=2)
    elif encoding == "bin":
        feat_path = root / "features.bin"
        if not feat_path.exists():
            raise BundleError(f"missing file: {feat_path}")
        blob = feat_path.read_bytes()
        if blob[:4] != FEATURES_BIN_MAGIC:
            raise BundleError("features.bin: bad magic")
        version, bn, bd = struct.unpack_from("<III", blob, 4)
        if version != FEATURES_BIN_VERSION:
            raise BundleError(f"features.bin: unsupported version {version}")
        if bn != n or bd != d:
            raise BundleError(f"features.bin header ({bn}x{bd}) disagrees with meta ({n}x{d})")
        features = np.frombuffer(blob, dtype="<f4", offset=16).reshape(n, d).copy()
    else:
        raise BundleError(f"unknown feature_encoding {encoding!r}")

    if features.shape != (n, d):
        raise BundleError(f"features shape {features.shape}, expected ({n}, {d})")

    return GraphBundle(
        name=meta["name"], num_nodes=n, num_classes=c,
        edges=edges, features=features, labels=labels,
    )


def g_name(meta: dict) -> str:
    return meta.get("name", "<bundle>")
