"""Convert public citation-graph distributions into the neutral bundle format.

Supported source layouts:

- "content/cites" (Cora, Citeseer, WebKB): `<name>.content` rows are
  `paper_id <tab> f_0 ... f_{d-1} <tab> class_label`; `<name>.cites` rows are
  `cited <tab> citing` id pairs.
- "pubmed" (Pubmed-Diabetes): `*.NODE.paper.tab` rows carry `label=<k>` and
  sparse `w-word=value` attributes after two header lines; `*.DIRECTED.cites.tab`
  rows reference `paper:<id>` endpoints.

Sources can be a local directory or an archive URL; downloads are attempted
only when a URL is given. Node ids are assigned in content-file order and
label names map to class ids alphabetically, so converting the same files
twice is byte-identical.
"""

from __future__ import annotations

import logging
import struct
import tarfile
import tempfile
import urllib.request
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

logger = logging.getLogger("coldbrew_converter")

FEATURES_BIN_MAGIC = b"CBGB"
FEATURES_BIN_VERSION = 1


class ConversionError(RuntimeError):
    pass


@dataclass(frozen=True)
class SourceSpec:
    """Where a dataset comes from and what it must look like after conversion."""

    name: str
    source: str                 # local directory or archive URL
    expected_nodes: int
    expected_classes: int
    expected_dim: int
    layout: str = "content"     # "content" or "pubmed"
    expected_edges: int | None = None  # deviations are logged, never fatal


# Expected statistics for the bundled dataset registry. Edge counts follow the
# benchmark literature's (direction-doubled) convention and are advisory only.
REGISTRY = {
    "cora": SourceSpec(
        name="cora",
        source="https://linqs-data.soe.ucsc.edu/public/lbc/cora.tgz",
        expected_nodes=2708, expected_classes=7, expected_dim=1433,
        expected_edges=13264),
    "citeseer": SourceSpec(
        name="citeseer",
        source="https://linqs-data.soe.ucsc.edu/public/lbc/citeseer.tgz",
        expected_nodes=3327, expected_classes=6, expected_dim=3703,
        expected_edges=12431),
    "pubmed": SourceSpec(
        name="pubmed",
        source="https://linqs-data.soe.ucsc.edu/public/Pubmed-Diabetes.tgz",
        expected_nodes=19717, expected_classes=3, expected_dim=500,
        layout="pubmed", expected_edges=108365),
    "cornell": SourceSpec(
        name="cornell", source="", expected_nodes=183, expected_classes=5,
        expected_dim=1703),
    "texas": SourceSpec(
        name="texas", source="", expected_nodes=183, expected_classes=5,
        expected_dim=1703),
    "wisconsin": SourceSpec(
        name="wisconsin", source="", expected_nodes=251, expected_classes=5,
        expected_dim=1703),
}


@dataclass
class ConversionLog:
    name: str
    source: str
    raw_edge_lines: int = 0
    dropped_dangling: int = 0
    dropped_self_loops: int = 0
    stored_edges: int = 0
    nodes: int = 0
    classes: int = 0
    feature_dim: int = 0
    notes: list = field(default_factory=list)

    def lines(self) -> list[str]:
        out = [f"dataset={self.name}", f"source={self.source}",
               f"nodes={self.nodes}", f"classes={self.classes}",
               f"feature_dim={self.feature_dim}",
               f"raw_edge_lines={self.raw_edge_lines}",
               f"dropped_dangling={self.dropped_dangling}",
               f"dropped_self_loops={self.dropped_self_loops}",
               f"stored_undirected_edges={self.stored_edges}"]
        out += [f"note={n}" for n in self.notes]
        return out


@dataclass
class ParsedGraph:
    ids: list                    # node ids in assignment order
    features: np.ndarray         # (N, d) float32
    labels: np.ndarray           # (N,) int64
    label_names: list
    raw_pairs: list              # (src, dst) id pairs as read, before cleaning
    raw_edge_lines: int


# ---------------------------------------------------------------------------
# source acquisition


def fetch_source(spec: SourceSpec, workdir: Path) -> Path:
    """Return a local directory holding the raw files, downloading if needed."""
    src = Path(spec.source)
    if spec.source and not spec.source.startswith(("http://", "https://")):
        if not src.exists():
            raise ConversionError(f"local source not found: {src}")
        return src
    if not spec.source:
        raise ConversionError(
            f"dataset {spec.name!r} has no default URL; pass a local source path")
    archive = workdir / f"{spec.name}.tgz"
    try:
        logger.info("downloading %s", spec.source)
        urllib.request.urlretrieve(spec.source, archive)  # noqa: S310
    except Exception as exc:
        raise ConversionError(f"download failed for {spec.source}: {exc}") from exc
    extracted = workdir / spec.name
    extracted.mkdir(exist_ok=True)
    with tarfile.open(archive) as tar:
        tar.extractall(extracted)  # noqa: S202
    return extracted


def _find_file(root: Path, suffix: str) -> Path:
    hits = sorted(root.rglob(f"*{suffix}"))
    if not hits:
        raise ConversionError(f"no *{suffix} file under {root}")
    return hits[0]


# ---------------------------------------------------------------------------
# parsers


def parse_content_layout(root: Path, name: str) -> ParsedGraph:
    content = _find_file(root, ".content")
    cites = _find_file(root, ".cites")
    ids, rows, label_names = [], [], []
    index: dict[str, int] = {}
    labels_raw = []
    for line in content.read_text().splitlines():
        parts = line.strip().split()
        if not parts:
            continue
        node_id, feats, label = parts[0], parts[1:-1], parts[-1]
        if node_id in index:
            raise ConversionError(f"duplicate node id {node_id!r} in {content.name}")
        index[node_id] = len(ids)
        ids.append(node_id)
        rows.append(np.array(feats, dtype=np.float32))
        labels_raw.append(label)
    if not ids:
        raise ConversionError(f"{content} is empty")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ConversionError(f"inconsistent feature widths in {content.name}: {sorted(widths)}")
    label_names = sorted(set(labels_raw))
    label_ids = {name: i for i, name in enumerate(label_names)}
    labels = np.array([label_ids[l] for l in labels_raw], dtype=np.int64)

    raw_pairs = []
    raw_lines = 0
    for line in cites.read_text().splitlines():
        parts = line.strip().split()
        if len(parts) != 2:
            continue
        raw_lines += 1
        raw_pairs.append((parts[0], parts[1]))
    return ParsedGraph(ids=ids, features=np.stack(rows), labels=labels,
                       label_names=label_names, raw_pairs=raw_pairs,
                       raw_edge_lines=raw_lines)


def parse_pubmed_layout(root: Path, name: str) -> ParsedGraph:
    nodes_file = _find_file(root, ".NODE.paper.tab")
    cites_file = _find_file(root, ".DIRECTED.cites.tab")
    lines = nodes_file.read_text().splitlines()
    # line 0 is a dataset banner, line 1 declares the attribute vocabulary
    vocab = [tok.split(":")[1] for tok in lines[1].split("\t")
             if tok.startswith("numeric:")]
    dim = len(vocab)
    word_col = {w: i for i, w in enumerate(vocab)}
    ids, feats, labels_raw = [], [], []
    index: dict[str, int] = {}
    for line in lines[2:]:
        parts = line.strip().split("\t")
        if len(parts) < 2:
            continue
        node_id = parts[0]
        row = np.zeros(dim, dtype=np.float32)
        label = None
        for tok in parts[1:]:
            key, _, value = tok.partition("=")
            if key == "label":
                label = value
            elif key in word_col:
                row[word_col[key]] = float(value)
        if label is None:
            raise ConversionError(f"node {node_id} has no label attribute")
        index[node_id] = len(ids)
        ids.append(node_id)
        feats.append(row)
        labels_raw.append(label)
    label_names = sorted(set(labels_raw))
    label_ids = {name: i for i, name in enumerate(label_names)}
    labels = np.array([label_ids[l] for l in labels_raw], dtype=np.int64)

    raw_pairs = []
    raw_lines = 0
    for line in cites_file.read_text().splitlines()[2:]:
        refs = [tok.split(":", 1)[1] for tok in line.replace("|", "\t").split()
                if tok.startswith("paper:")]
        if len(refs) == 2:
            raw_lines += 1
            raw_pairs.append((refs[0], refs[1]))
    return ParsedGraph(ids=ids, features=np.stack(feats), labels=labels,
                       label_names=label_names, raw_pairs=raw_pairs,
                       raw_edge_lines=raw_lines)


# ---------------------------------------------------------------------------
# bundle writing (the primary package's on-disk interface)


def clean_edges(parsed: ParsedGraph, log: ConversionLog) -> np.ndarray:
    index = {node_id: i for i, node_id in enumerate(parsed.ids)}
    pairs = set()
    for src, dst in parsed.raw_pairs:
        if src not in index or dst not in index:
            log.dropped_dangling += 1
            continue
        i, j = index[src], index[dst]
        if i == j:
            log.dropped_self_loops += 1
            continue
        pairs.add((min(i, j), max(i, j)))
    if not pairs:
        return np.zeros((0, 2), dtype=np.int64)
    return np.array(sorted(pairs), dtype=np.int64)


def write_bundle(out: Path, name: str, features: np.ndarray, labels: np.ndarray,
                 edges: np.ndarray, num_classes: int) -> None:
    out.mkdir(parents=True, exist_ok=True)
    n, d = features.shape
    (out / "meta").write_text(
        f"name={name}\nnum_nodes={n}\nnum_classes={num_classes}\n"
        f"feature_dim={d}\nfeature_encoding=bin\n")
    with open(out / "edges.tsv", "w") as fh:
        for i, j in edges:
            fh.write(f"{i}\t{j}\n")
    with open(out / "labels.tsv", "w") as fh:
        for y in labels:
            fh.write(f"{y}\n")
    blob = np.ascontiguousarray(features, dtype="<f4")
    with open(out / "features.bin", "wb") as fh:
        fh.write(FEATURES_BIN_MAGIC)
        fh.write(struct.pack("<III", FEATURES_BIN_VERSION, n, d))
        fh.write(blob.tobytes())


def convert(spec: SourceSpec, out: str | Path) -> ConversionLog:
    """Convert one dataset and validate the result with the primary loader."""
    out = Path(out)
    log = ConversionLog(name=spec.name, source=spec.source)
    with tempfile.TemporaryDirectory() as tmp:
        root = fetch_source(spec, Path(tmp))
        if spec.layout == "pubmed":
            parsed = parse_pubmed_layout(root, spec.name)
        else:
            parsed = parse_content_layout(root, spec.name)

        log.raw_edge_lines = parsed.raw_edge_lines
        edges = clean_edges(parsed, log)
        log.stored_edges = len(edges)
        log.nodes = len(parsed.ids)
        log.classes = len(parsed.label_names)
        log.feature_dim = parsed.features.shape[1]

        if log.nodes != spec.expected_nodes:
            raise ConversionError(
                f"{spec.name}: converted {log.nodes} nodes, expected {spec.expected_nodes}")
        if log.classes != spec.expected_classes:
            raise ConversionError(
                f"{spec.name}: found {log.classes} classes, expected {spec.expected_classes}")
        if log.feature_dim != spec.expected_dim:
            raise ConversionError(
                f"{spec.name}: feature dim {log.feature_dim}, expected {spec.expected_dim}")
        if spec.expected_edges is not None:
            # benchmark tables count edges with varying conventions; log only
            doubled = 2 * log.stored_edges
            if doubled != spec.expected_edges:
                note = (f"edge count deviates from the reference table: stored "
                        f"{log.stored_edges} undirected ({doubled} directed), "
                        f"reference lists {spec.expected_edges}")
                log.notes.append(note)
                logger.warning("%s: %s", spec.name, note)

        write_bundle(out, spec.name, parsed.features, parsed.labels, edges, log.classes)

    # round-trip through the primary validator
    from coldbrew import load_bundle
    bundle = load_bundle(out)
    if bundle.num_nodes != spec.expected_nodes:
        raise ConversionError(f"round-trip node count mismatch for {spec.name}")
    (out / "conversion.log").write_text("\n".join(log.lines()) + "\n")
    return log
