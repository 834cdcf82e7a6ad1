"""The heterogeneous anomaly-detection network and its homogeneous variant.

Three stages, built per graph:

1. Multi-graph filter bank, one per node type: every valid meta-path graph of
   the type carries a fused Chi-Square filter applied through a learnable
   scalar importance w^S, and the filtered signals are summed into a semantic
   representation (width-preserving).
2. Alignment: one linear map per type onto a shared width d_a.
3. Interactive meta-graph convolution: the aligned blocks are stacked in the
   global node order, activated, and passed through a fixed set of Chi-Square
   filter polynomials of the homogenized graph's shift operator; the target
   block feeds an MLP head with two output columns.

`filter_mode = lowpass1` swaps every filter for the degree-1 low-pass
polynomial 1 - w/2, the ablation baseline.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .chifilter import PolyFilter, fit_polynomial
from .config import RunConfig, sub_seed
from .hin import (HeteroGraph, HomoGraph, MetaPath, MetaPathGraph,
                  ShiftOperator, degenerate_method1, enumerate_meta_paths,
                  laplacian, materialize_meta_path_graph)
from .spectral import (DivisionPlan, FusedFilter, assign_filter, fuse_filters,
                       profile_capped, select_representatives)


def lowpass1_filter() -> PolyFilter:
    """Degree-1 low-pass 1 - w/2: response 1 at w=0, 0 at w=2."""
    return PolyFilter(np.array([1.0, -0.5]), 1, 0.0)


def softmax_rows(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# per-type spectral planning
# ---------------------------------------------------------------------------

@dataclass
class TypePlan:
    node_type: str
    paths: list[MetaPath]
    graphs: list[MetaPathGraph]
    plan: DivisionPlan | None        # None when no valid meta-path exists
    band_max: dict[str, float]
    assigned: dict[str, int]         # division -> filter index


def plan_type(graph: HeteroGraph, node_type: str, cfg: RunConfig) -> TypePlan:
    """Enumerate, rank, and profile the meta-path graphs of one node type."""
    paths = enumerate_meta_paths(graph, node_type, cfg.path_min, cfg.path_max)
    graphs = [materialize_meta_path_graph(graph, p) for p in paths]
    X = graph.features[node_type]
    if not any(not g.is_empty for g in graphs):
        return TypePlan(node_type, paths, graphs, None, {}, {})
    plan = select_representatives(graphs, X)
    band_max: dict[str, float] = {}
    assigned: dict[str, int] = {}
    for division, rep_idx in plan.representatives.items():
        rep = graphs[rep_idx]
        k_eff = min(cfg.bands, min(rep.num_nodes, cfg.eig_cap))
        profile = profile_capped(rep, X, k_eff, cfg.eig_cap,
                                 sub_seed(cfg.seed, f"profile:{node_type}:{division}"))
        band_max[division] = profile.band_max
        assigned[division] = assign_filter(profile.band_max, list(cfg.candidates))
    return TypePlan(node_type, paths, graphs, plan, band_max, assigned)


# ---------------------------------------------------------------------------
# model structure
# ---------------------------------------------------------------------------

@dataclass
class BankEntry:
    graph: MetaPathGraph
    operator: ShiftOperator
    fused: FusedFilter
    poly: PolyFilter            # active coefficients (fused fit, or the ablation)
    weight_name: str
    division: str


@dataclass
class MultiGraphFilterBank:
    node_type: str
    entries: list[BankEntry]


@dataclass
class MetaGraphConvLayer:
    operator: ShiftOperator
    filters: list[PolyFilter]


@dataclass
class ChiGadModel:
    node_types: list[str]
    target_type: str
    banks: dict[str, MultiGraphFilterBank]
    conv: MetaGraphConvLayer
    params: dict[str, np.ndarray]      # declaration order = checkpoint order
    schema: dict
    schema_hash: str
    activation: str
    mlp_layers: int
    aligned_dim: int
    type_offsets: dict[str, int]
    target_count: int
    plans: dict[str, TypePlan] = field(default_factory=dict)

    def param_names(self) -> list[str]:
        return list(self.params.keys())


def graph_signature(graph: HeteroGraph) -> dict:
    return {
        "node_types": [
            [t, graph.node_counts[t], graph.feature_dim(t)] for t in graph.node_types],
        "relations": [
            [r.name, r.src, r.dst, int(r.adjacency.nnz)] for r in graph.relations],
        "target_type": graph.target_type,
    }


def schema_signature(graph: HeteroGraph, cfg: RunConfig) -> dict:
    sig = graph_signature(graph)
    sig["arch"] = cfg.arch_fingerprint()
    return sig


def _hash_schema(schema: dict, param_shapes: list) -> str:
    doc = json.dumps({"schema": schema, "params": param_shapes}, sort_keys=True)
    return hashlib.sha256(doc.encode()).hexdigest()


def _uniform_init(rng: np.random.Generator, fan_in: int, shape) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def build_model(graph: HeteroGraph, cfg: RunConfig) -> ChiGadModel:
    """Assemble banks, alignment, convolution, and head for one graph."""
    cfg.validate()
    graph.validate()
    ablation = cfg.filter_mode == "lowpass1"
    lowpass = lowpass1_filter()

    params: dict[str, np.ndarray] = {}
    banks: dict[str, MultiGraphFilterBank] = {}
    plans: dict[str, TypePlan] = {}
    for o in graph.node_types:
        tp = plan_type(graph, o, cfg)
        plans[o] = tp
        entries: list[BankEntry] = []
        if tp.plan is not None:
            for idx, g in enumerate(tp.graphs):
                division = tp.plan.labels[idx]
                if division is None:
                    continue
                fused = fuse_filters(tp.assigned, division, cfg.w_d, cfg.degree_budget)
                poly = lowpass if ablation else fused.poly
                name = f"wS[{o}][{idx}]"
                params[name] = np.asarray(1.0)
                entries.append(BankEntry(
                    g, laplacian(g.adjacency, cfg.operator), fused, poly, name, division))
        banks[o] = MultiGraphFilterBank(o, entries)

    rng = np.random.default_rng(sub_seed(cfg.seed, "init"))
    for o in graph.node_types:
        d_o = graph.feature_dim(o)
        params[f"W_align[{o}]"] = _uniform_init(rng, d_o, (d_o, cfg.aligned_dim))

    homo = degenerate_method1(graph)
    conv_filters = [lowpass] if ablation else [
        fit_polynomial(i, cfg.degree_budget) for i in sorted(set(cfg.candidates))]
    conv = MetaGraphConvLayer(laplacian(homo.adjacency, cfg.operator), conv_filters)

    widths = [cfg.aligned_dim] * cfg.mlp_layers + [2]
    for k in range(cfg.mlp_layers):
        fan_in, fan_out = widths[k], widths[k + 1]
        last = k == cfg.mlp_layers - 1
        # zero output layer: the head starts at uniform probabilities, so the
        # first updates follow the class-contrast direction instead of
        # whichever rows happen to have the largest filtered magnitudes
        params[f"mlp.{k}.W"] = (np.zeros((fan_in, fan_out)) if last else
                                _uniform_init(rng, fan_in, (fan_in, fan_out)))
        params[f"mlp.{k}.b"] = (np.zeros(fan_out) if last else
                                _uniform_init(rng, fan_in, (fan_out,)))

    schema = schema_signature(graph, cfg)
    shash = _hash_schema(schema, [[n, list(p.shape)] for n, p in params.items()])
    return ChiGadModel(
        node_types=list(graph.node_types),
        target_type=graph.target_type,
        banks=banks,
        conv=conv,
        params=params,
        schema=schema,
        schema_hash=shash,
        activation=cfg.activation,
        mlp_layers=cfg.mlp_layers,
        aligned_dim=cfg.aligned_dim,
        type_offsets=graph.type_offsets(),
        target_count=graph.node_counts[graph.target_type],
        plans=plans,
    )


# ---------------------------------------------------------------------------
# forward passes
# ---------------------------------------------------------------------------

@dataclass
class ForwardPass:
    tape: ad.Tape
    prob: np.ndarray             # target nodes x 2
    logits: ad.Node
    rep: ad.Node                 # pre-head representation X' of the target block
    param_nodes: dict[str, ad.Node]


def multi_graph_forward(bank: MultiGraphFilterBank, x: ad.Node,
                        weight_nodes: dict[str, ad.Node]) -> ad.Node:
    """Semantic representation: sum over meta-paths of the fused filter applied
    through the learnable importance w^S."""
    if not bank.entries:
        raise ValueError(f"filter bank of type {bank.node_type} is empty")
    acc = None
    for e in bank.entries:
        term = ad.sparse_poly_apply(e.poly.coeffs, e.operator.matrix, x,
                                    weight_nodes[e.weight_name])
        acc = term if acc is None else ad.add(acc, term)
    return acc


def forward_pass(model: ChiGadModel, graph: HeteroGraph) -> ForwardPass:
    got = graph_signature(graph)
    want = {k: model.schema[k] for k in got}
    if got != want:
        raise ValueError("graph does not match the schema this model was built for")

    tape = ad.Tape()
    pnodes = {name: tape.leaf(arr, name) for name, arr in model.params.items()}

    aligned = []
    for o in model.node_types:
        x = tape.leaf(graph.features[o], f"X[{o}]")
        bank = model.banks[o]
        # a type with no valid meta-path keeps its raw features
        xs = multi_graph_forward(bank, x, pnodes) if bank.entries else x
        aligned.append(ad.matmul(xs, pnodes[f"W_align[{o}]"]))

    stacked = ad.vstack(aligned)   # node_types order = global node order
    activated = ad.activation(stacked, model.activation)
    conv = None
    for f in model.conv.filters:
        term = ad.sparse_poly_apply(f.coeffs, model.conv.operator.matrix, activated)
        conv = term if conv is None else ad.add(conv, term)

    lo = model.type_offsets[model.target_type]
    rep = ad.row_slice(conv, lo, lo + model.target_count)

    h = rep
    for k in range(model.mlp_layers):
        z = ad.add_bias(ad.matmul(h, pnodes[f"mlp.{k}.W"]), pnodes[f"mlp.{k}.b"])
        h = z if k == model.mlp_layers - 1 else ad.activation(z, model.activation)

    return ForwardPass(tape, softmax_rows(h.value), h, rep, pnodes)


def chigad_forward(model: ChiGadModel, graph: HeteroGraph) -> tuple[np.ndarray, np.ndarray]:
    """Probabilities over target nodes and the pre-head representation."""
    fp = forward_pass(model, graph)
    return fp.prob, fp.rep.value.copy()


# ---------------------------------------------------------------------------
# homogeneous variant
# ---------------------------------------------------------------------------

@dataclass
class ChiGnn:
    operator: ShiftOperator
    filters: list[PolyFilter]
    params: dict[str, np.ndarray]
    activation: str
    mlp_layers: int


def build_chignn(graph: HomoGraph, feature_dim: int, filter_indices: list[int],
                 hidden: int, mlp_layers: int = 2, activation: str = "relu",
                 degree_budget: int = 3, seed: int = 0,
                 operator: str = "normalized_laplacian",
                 filter_mode: str = "chi") -> ChiGnn:
    if not filter_indices:
        raise ValueError("empty filter set")
    if filter_mode == "lowpass1":
        filters = [lowpass1_filter()]
    else:
        filters = [fit_polynomial(i, degree_budget) for i in sorted(set(filter_indices))]
    rng = np.random.default_rng(sub_seed(seed, "chignn-init"))
    params: dict[str, np.ndarray] = {
        "W_in": _uniform_init(rng, feature_dim, (feature_dim, hidden))}
    widths = [hidden] * mlp_layers + [2]
    for k in range(mlp_layers):
        params[f"mlp.{k}.W"] = _uniform_init(rng, widths[k], (widths[k], widths[k + 1]))
        params[f"mlp.{k}.b"] = _uniform_init(rng, widths[k], (widths[k + 1],))
    return ChiGnn(laplacian(graph.adjacency, operator), filters, params,
                  activation, mlp_layers)


def chignn_forward(net: ChiGnn, X: np.ndarray) -> tuple[np.ndarray, ForwardPass]:
    tape = ad.Tape()
    pnodes = {name: tape.leaf(arr, name) for name, arr in net.params.items()}
    x = tape.leaf(np.asarray(X, dtype=np.float64), "X")
    h0 = ad.activation(ad.matmul(x, pnodes["W_in"]), net.activation)
    conv = None
    for f in net.filters:
        term = ad.sparse_poly_apply(f.coeffs, net.operator.matrix, h0)
        conv = term if conv is None else ad.add(conv, term)
    h = conv
    for k in range(net.mlp_layers):
        z = ad.add_bias(ad.matmul(h, pnodes[f"mlp.{k}.W"]), pnodes[f"mlp.{k}.b"])
        h = z if k == net.mlp_layers - 1 else ad.activation(z, net.activation)
    return softmax_rows(h.value), ForwardPass(tape, softmax_rows(h.value), h, conv, pnodes)


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------

CHECKPOINT_MAGIC = "chigad-checkpoint-v1"


def save_checkpoint(model: ChiGadModel, path: str, extra: dict | None = None) -> None:
    """JSON header line + parameters as little-endian float64, declaration order."""
    header = {
        "magic": CHECKPOINT_MAGIC,
        "schema_hash": model.schema_hash,
        "params": [[name, list(arr.shape)] for name, arr in model.params.items()],
        "extra": extra or {},
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        for arr in model.params.values():
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_checkpoint(model: ChiGadModel, path: str) -> dict:
    """Load parameters into a model built for the same graph and config.

    Returns the header's extra dict.  A schema-hash mismatch is an error: the
    checkpoint belongs to a different graph or architecture.
    """
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode())
        blob = fh.read()
    if header.get("magic") != CHECKPOINT_MAGIC:
        raise ValueError("not a model checkpoint file")
    if header["schema_hash"] != model.schema_hash:
        raise ValueError(
            "checkpoint schema hash mismatch: built for a different graph or config")
    expected = [[name, list(arr.shape)] for name, arr in model.params.items()]
    if header["params"] != expected:
        raise ValueError("checkpoint parameter layout mismatch")
    offset = 0
    for name, arr in model.params.items():
        n = arr.size * 8
        flat = np.frombuffer(blob[offset:offset + n], dtype="<f8")
        if flat.size != arr.size:
            raise ValueError("checkpoint truncated")
        model.params[name] = flat.reshape(arr.shape).copy()
        offset += n
    return header.get("extra", {})
