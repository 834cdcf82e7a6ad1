"""Heterogeneous graph data model: typed nodes, typed relations, meta-paths.

A heterogeneous graph carries several node types (each with its own dense
feature matrix, dimensions may differ across types) and a list of directed,
typed relations stored as sparse 0/1 blocks.  Anomaly labels and train/val/test
masks live on one designated target type.

Meta-paths are closed walks on the schema (same start and end type); each one
materializes to a homogeneous graph over the anchor type by chaining the
relation blocks.  Two degeneration methods flatten the whole graph to a single
homogeneous graph (all nodes / target nodes only).
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp


class GraphFormatError(ValueError):
    """Raised when an input graph file violates the documented format."""


NORMALIZED_LAPLACIAN = "normalized_laplacian"
UNNORMALIZED_LAPLACIAN = "unnormalized_laplacian"
ADJACENCY = "adjacency"
OPERATOR_KINDS = (NORMALIZED_LAPLACIAN, UNNORMALIZED_LAPLACIAN, ADJACENCY)

LABEL_BENIGN = 0
LABEL_ANOMALY = 1
LABEL_UNKNOWN = -1


@dataclass
class Relation:
    name: str
    src: str
    dst: str
    adjacency: sp.csr_matrix  # |V_src| x |V_dst|, 0/1


@dataclass
class HeteroGraph:
    node_types: list[str]
    node_counts: dict[str, int]
    features: dict[str, np.ndarray]  # per type, |V_o| x d_o
    relations: list[Relation]
    target_type: str
    labels: np.ndarray  # per target node: 0 benign, 1 anomaly, -1 unlabeled
    split_masks: dict[str, np.ndarray]  # train/val/test boolean masks

    def feature_dim(self, node_type: str) -> int:
        return self.features[node_type].shape[1]

    def num_nodes(self) -> int:
        return sum(self.node_counts.values())

    def type_offsets(self) -> dict[str, int]:
        """Global row offset of each type in node_types order (Method-1 order)."""
        offsets, acc = {}, 0
        for t in self.node_types:
            offsets[t] = acc
            acc += self.node_counts[t]
        return offsets

    def validate(self) -> None:
        for rel in self.relations:
            nr, nc = rel.adjacency.shape
            if nr != self.node_counts[rel.src] or nc != self.node_counts[rel.dst]:
                raise GraphFormatError(
                    f"relation {rel.name}: adjacency shape {rel.adjacency.shape} does not "
                    f"match ({self.node_counts[rel.src]}, {self.node_counts[rel.dst]})")
        n_t = self.node_counts[self.target_type]
        if self.labels.shape != (n_t,):
            raise GraphFormatError("labels length does not match target node count")
        seen = np.zeros(n_t, dtype=bool)
        for name, mask in self.split_masks.items():
            if mask.shape != (n_t,):
                raise GraphFormatError(f"split mask {name} has wrong length")
            if np.any(seen & mask):
                raise GraphFormatError("mask overlap: train/val/test masks must be disjoint")
            seen |= mask
            if np.any(self.labels[mask] == LABEL_UNKNOWN):
                raise GraphFormatError(f"missing target-type labels inside split '{name}'")


@dataclass(frozen=True)
class MetaPath:
    node_type_sequence: tuple[str, ...]  # o_1 .. o_{l+1}, with o_1 == o_{l+1}
    relation_sequence: tuple[str, ...]   # r_1 .. r_l

    @property
    def length(self) -> int:
        return len(self.relation_sequence)

    def __str__(self) -> str:
        parts = [self.node_type_sequence[0]]
        for r, o in zip(self.relation_sequence, self.node_type_sequence[1:]):
            parts.append(f"-{r}-{o}")
        return "".join(parts)


@dataclass
class MetaPathGraph:
    anchor_type: str
    adjacency: sp.csr_matrix  # |V_o| x |V_o|, symmetric 0/1, zero diagonal
    source_path: MetaPath

    @property
    def num_nodes(self) -> int:
        return self.adjacency.shape[0]

    @property
    def is_empty(self) -> bool:
        return self.adjacency.nnz == 0


@dataclass
class HomoGraph:
    adjacency: sp.csr_matrix  # symmetric 0/1
    # back-map to (type, local index) for graphs spanning several types
    node_origin: list[tuple[str, int]] | None = None

    @property
    def num_nodes(self) -> int:
        return self.adjacency.shape[0]


@dataclass
class ShiftOperator:
    matrix: sp.csr_matrix
    kind: str

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def _canonical(m: sp.spmatrix) -> sp.csr_matrix:
    """CSR with summed duplicates and sorted indices, for reproducible layouts."""
    m = sp.csr_matrix(m)
    m.sum_duplicates()
    m.sort_indices()
    return m


def _binarize(m: sp.spmatrix) -> sp.csr_matrix:
    m = _canonical(m)
    m.data = np.ones_like(m.data, dtype=np.float64)
    m.eliminate_zeros()
    return m


def _symmetrize_union(m: sp.csr_matrix) -> sp.csr_matrix:
    return _binarize(m + m.T)


def _clear_diagonal(m: sp.csr_matrix) -> sp.csr_matrix:
    m = m.tolil()
    m.setdiag(0)
    return _canonical(m)


# ---------------------------------------------------------------------------
# ingestion
# ---------------------------------------------------------------------------

def load_hetero_graph(path: str) -> HeteroGraph:
    """Load a heterogeneous graph from the documented JSON format.

    Node ordering is file order; all indices are 0-based per-type local ids.
    Raises GraphFormatError on malformed input, dangling edge endpoints,
    overlapping split masks, or masked nodes without labels.
    """
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise GraphFormatError(f"cannot read graph file {path}: {exc}") from exc
    return hetero_graph_from_dict(doc)


def hetero_graph_from_dict(doc: dict) -> HeteroGraph:
    for key in ("node_types", "relations", "target_type", "labels", "splits"):
        if key not in doc:
            raise GraphFormatError(f"missing top-level key '{key}'")

    node_types, node_counts, features = [], {}, {}
    for spec in doc["node_types"]:
        name = spec["name"]
        if name in node_counts:
            raise GraphFormatError(f"duplicate node type '{name}'")
        count, dim = int(spec["count"]), int(spec["feature_dim"])
        feats = np.asarray(spec["features"], dtype=np.float64)
        if feats.shape != (count, dim):
            raise GraphFormatError(
                f"node type {name}: features shape {feats.shape} != ({count}, {dim})")
        node_types.append(name)
        node_counts[name] = count
        features[name] = feats

    relations = []
    rel_names = set()
    for spec in doc["relations"]:
        name, src, dst = spec["name"], spec["src"], spec["dst"]
        if name in rel_names:
            raise GraphFormatError(f"duplicate relation '{name}'")
        rel_names.add(name)
        if src not in node_counts or dst not in node_counts:
            raise GraphFormatError(f"relation {name}: unknown endpoint type")
        edges = spec["edges"]
        n_src, n_dst = node_counts[src], node_counts[dst]
        if edges:
            arr = np.asarray(edges, dtype=np.int64)
            if arr.ndim != 2 or arr.shape[1] != 2:
                raise GraphFormatError(f"relation {name}: edges must be [u, v] pairs")
            u, v = arr[:, 0], arr[:, 1]
            if u.min() < 0 or u.max() >= n_src or v.min() < 0 or v.max() >= n_dst:
                raise GraphFormatError(f"relation {name}: dangling endpoint")
            adj = sp.csr_matrix((np.ones(len(arr)), (u, v)), shape=(n_src, n_dst))
        else:
            adj = sp.csr_matrix((n_src, n_dst))
        relations.append(Relation(name, src, dst, _binarize(adj)))

    target = doc["target_type"]
    if target not in node_counts:
        raise GraphFormatError(f"target type '{target}' not among node types")
    labels = np.asarray(
        [LABEL_UNKNOWN if v is None else int(v) for v in doc["labels"]], dtype=np.int64)

    n_t = node_counts[target]
    masks = {}
    for split in ("train", "val", "test"):
        ids = np.asarray(doc["splits"].get(split, []), dtype=np.int64)
        mask = np.zeros(n_t, dtype=bool)
        if ids.size:
            if ids.min() < 0 or ids.max() >= n_t:
                raise GraphFormatError(f"split '{split}': node id out of range")
            mask[ids] = True
        masks[split] = mask

    graph = HeteroGraph(node_types, node_counts, features, relations, target, labels, masks)
    graph.validate()
    return graph


def hetero_graph_to_dict(graph: HeteroGraph) -> dict:
    return {
        "node_types": [
            {
                "name": t,
                "count": graph.node_counts[t],
                "feature_dim": graph.feature_dim(t),
                "features": graph.features[t].tolist(),
            }
            for t in graph.node_types
        ],
        "relations": [
            {
                "name": r.name,
                "src": r.src,
                "dst": r.dst,
                "edges": np.column_stack(r.adjacency.nonzero()).tolist(),
            }
            for r in graph.relations
        ],
        "target_type": graph.target_type,
        "labels": [None if v == LABEL_UNKNOWN else int(v) for v in graph.labels],
        "splits": {
            name: np.nonzero(mask)[0].tolist() for name, mask in graph.split_masks.items()
        },
    }


def save_hetero_graph(graph: HeteroGraph, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(hetero_graph_to_dict(graph), fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_hetero_graph_csv(directory: str) -> HeteroGraph:
    """CSV ingestion variant mapping onto the same model as the JSON format.

    Layout: meta.json (node_types order, relations with src/dst, target_type),
    nodes_<type>.csv (feature columns; label column on the target type, empty
    cell = unlabeled), edges_<relation>.csv (u,v rows), splits.csv (id,split).
    """
    meta_path = os.path.join(directory, "meta.json")
    try:
        with open(meta_path) as fh:
            meta = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise GraphFormatError(f"cannot read {meta_path}: {exc}") from exc

    doc: dict = {"node_types": [], "relations": [], "target_type": meta["target_type"]}
    labels = []
    for name in meta["node_types"]:
        rows = _read_csv(os.path.join(directory, f"nodes_{name}.csv"))
        header, body = rows[0], rows[1:]
        has_label = header and header[-1] == "label"
        feat_cols = len(header) - (1 if has_label else 0)
        feats = [[float(c) for c in row[:feat_cols]] for row in body]
        if has_label and name == meta["target_type"]:
            labels = [None if row[-1] == "" else int(row[-1]) for row in body]
        doc["node_types"].append(
            {"name": name, "count": len(body), "feature_dim": feat_cols, "features": feats})
    if not labels:
        raise GraphFormatError("target-type node file must carry a label column")
    doc["labels"] = labels

    for rel in meta["relations"]:
        rows = _read_csv(os.path.join(directory, f"edges_{rel['name']}.csv"))
        edges = [[int(r[0]), int(r[1])] for r in rows[1:]]
        doc["relations"].append(
            {"name": rel["name"], "src": rel["src"], "dst": rel["dst"], "edges": edges})

    splits: dict[str, list[int]] = {"train": [], "val": [], "test": []}
    for row in _read_csv(os.path.join(directory, "splits.csv"))[1:]:
        nid, split = int(row[0]), row[1]
        if split not in splits:
            raise GraphFormatError(f"unknown split name '{split}'")
        splits[split].append(nid)
    doc["splits"] = splits
    return hetero_graph_from_dict(doc)


def _read_csv(path: str) -> list[list[str]]:
    try:
        with open(path, newline="") as fh:
            return list(csv.reader(fh))
    except OSError as exc:
        raise GraphFormatError(f"cannot read {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# meta-paths
# ---------------------------------------------------------------------------

def enumerate_meta_paths(graph: HeteroGraph, anchor: str,
                         min_len: int, max_len: int) -> list[MetaPath]:
    """All closed schema walks anchor -> ... -> anchor with min_len <= l <= max_len.

    Relations are traversed in their stored direction only.  Output is sorted
    lexicographically by relation-name sequence (deterministic).
    """
    if anchor not in graph.node_counts:
        raise ValueError(f"anchor type '{anchor}' not in graph")
    if not (1 <= min_len <= max_len):
        raise ValueError("need 1 <= min_len <= max_len")

    by_src: dict[str, list[Relation]] = {}
    for rel in graph.relations:
        by_src.setdefault(rel.src, []).append(rel)

    found: list[MetaPath] = []

    def walk(current: str, rels: list[Relation]) -> None:
        depth = len(rels)
        if depth >= min_len and current == anchor:
            found.append(MetaPath(
                tuple([anchor] + [r.dst for r in rels]),
                tuple(r.name for r in rels)))
        if depth == max_len:
            return
        for rel in by_src.get(current, []):
            walk(rel.dst, rels + [rel])

    walk(anchor, [])
    found.sort(key=lambda p: p.relation_sequence)
    return found


def materialize_meta_path_graph(graph: HeteroGraph, path: MetaPath) -> MetaPathGraph:
    """Chain the relation blocks along the path, binarize, clear the diagonal,
    and symmetrize by union with the transpose."""
    by_name = {r.name: r for r in graph.relations}
    product: sp.csr_matrix | None = None
    expected = path.node_type_sequence[0]
    for rel_name, dst in zip(path.relation_sequence, path.node_type_sequence[1:]):
        rel = by_name.get(rel_name)
        if rel is None:
            raise ValueError(f"unknown relation '{rel_name}' in meta-path")
        if rel.src != expected or rel.dst != dst:
            raise ValueError(f"meta-path step {rel_name} does not fit the schema")
        block = rel.adjacency
        if product is None:
            product = block
        else:
            if product.shape[1] != block.shape[0]:
                raise ValueError(
                    f"dimension mismatch along meta-path at relation {rel_name}")
            product = product @ block
        expected = dst
    assert product is not None
    adj = _symmetrize_union(_clear_diagonal(_binarize(product)))
    return MetaPathGraph(path.node_type_sequence[0], adj, path)


# ---------------------------------------------------------------------------
# homogenization
# ---------------------------------------------------------------------------

def degenerate_method1(graph: HeteroGraph) -> HomoGraph:
    """All nodes of all types; an edge survives iff it exists in >= 1 relation."""
    offsets = graph.type_offsets()
    n = graph.num_nodes()
    rows, cols = [], []
    for rel in graph.relations:
        u, v = rel.adjacency.nonzero()
        rows.append(u + offsets[rel.src])
        cols.append(v + offsets[rel.dst])
    if rows:
        u = np.concatenate(rows)
        v = np.concatenate(cols)
        adj = sp.csr_matrix((np.ones(len(u)), (u, v)), shape=(n, n))
    else:
        adj = sp.csr_matrix((n, n))
    origin = [(t, i) for t in graph.node_types for i in range(graph.node_counts[t])]
    return HomoGraph(_symmetrize_union(adj), origin)


def degenerate_method2(graph: HeteroGraph, target: str) -> HomoGraph:
    """Target-type nodes only.  Two nodes connect when a direct target-target
    relation links them or when they share a neighbor under any relation pair
    (length-2 closure through any intermediate type)."""
    if target not in graph.node_counts:
        raise ValueError(f"target type '{target}' absent")
    n = graph.node_counts[target]
    acc = sp.csr_matrix((n, n))

    # target x neighbor incidence per intermediate type, either edge direction
    touch: dict[str, sp.csr_matrix] = {}
    for rel in graph.relations:
        if rel.src == target and rel.dst == target:
            acc = acc + rel.adjacency + rel.adjacency.T
            continue
        if rel.src == target:
            mid, block = rel.dst, rel.adjacency
        elif rel.dst == target:
            mid, block = rel.src, sp.csr_matrix(rel.adjacency.T)
        else:
            continue
        prev = touch.get(mid)
        touch[mid] = block if prev is None else prev + block

    for block in touch.values():
        b = _binarize(block)
        acc = acc + b @ b.T

    adj = _symmetrize_union(_clear_diagonal(_binarize(acc)))
    origin = [(target, i) for i in range(n)]
    return HomoGraph(adj, origin)


# ---------------------------------------------------------------------------
# shift operators
# ---------------------------------------------------------------------------

def laplacian(adjacency: sp.spmatrix, kind: str = NORMALIZED_LAPLACIAN) -> ShiftOperator:
    """Build a shift operator from a symmetric nonnegative adjacency.

    normalized: I - D^{-1/2} A D^{-1/2}, zero-degree rows stay identity rows.
    unnormalized: D - A.  adjacency: A itself.
    """
    if kind not in OPERATOR_KINDS:
        raise ValueError(f"unknown operator kind '{kind}'")
    adjacency = _canonical(adjacency)
    if (adjacency != adjacency.T).nnz != 0:
        raise ValueError("adjacency must be symmetric")
    if adjacency.nnz and adjacency.data.min() < 0:
        raise ValueError("adjacency must be nonnegative")

    if kind == ADJACENCY:
        return ShiftOperator(adjacency, kind)

    degrees = np.asarray(adjacency.sum(axis=1)).ravel()
    n = adjacency.shape[0]
    if kind == UNNORMALIZED_LAPLACIAN:
        mat = sp.diags(degrees) - adjacency
    else:
        with np.errstate(divide="ignore"):
            inv_sqrt = 1.0 / np.sqrt(degrees)
        inv_sqrt[~np.isfinite(inv_sqrt)] = 0.0
        d = sp.diags(inv_sqrt)
        mat = sp.eye(n) - d @ adjacency @ d
    return ShiftOperator(_canonical(mat), kind)
