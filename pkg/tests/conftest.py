import numpy as np
import pytest

from chigad.config import RunConfig
from chigad.hin import hetero_graph_from_dict


def make_hin(rng, sizes=(6, 3, 3), dims=(4, 3, 2), extra_relation=False,
             anomalies=(0, 3)):
    """Small random heterogeneous graph with labels and splits on type a."""
    names = ["a", "b", "c"][: len(sizes)]
    doc = {"node_types": [], "relations": [], "target_type": "a"}
    for name, n, d in zip(names, sizes, dims):
        doc["node_types"].append({
            "name": name, "count": n, "feature_dim": d,
            "features": rng.normal(size=(n, d)).tolist()})

    def bipartite(src, dst, n_src, n_dst, per_node=2):
        edges = set()
        for u in range(n_src):
            for v in rng.choice(n_dst, size=min(per_node, n_dst), replace=False):
                edges.add((u, int(v)))
        return sorted(edges)

    ab = bipartite("a", "b", sizes[0], sizes[1])
    ac = bipartite("a", "c", sizes[0], sizes[2])
    doc["relations"] = [
        {"name": "ab", "src": "a", "dst": "b", "edges": [list(e) for e in ab]},
        {"name": "ba", "src": "b", "dst": "a", "edges": [[v, u] for u, v in ab]},
        {"name": "ac", "src": "a", "dst": "c", "edges": [list(e) for e in ac]},
        {"name": "ca", "src": "c", "dst": "a", "edges": [[v, u] for u, v in ac]},
    ]
    if extra_relation:
        bc = bipartite("b", "c", sizes[1], sizes[2], per_node=1)
        doc["relations"].append(
            {"name": "bc", "src": "b", "dst": "c", "edges": [list(e) for e in bc]})

    n0 = sizes[0]
    labels = [0] * n0
    for k in anomalies:
        labels[k] = 1
    doc["labels"] = labels
    ids = list(range(n0))
    third = max(1, n0 // 3)
    doc["splits"] = {"train": ids[:third], "val": ids[third:2 * third],
                     "test": ids[2 * third:]}
    return hetero_graph_from_dict(doc)


@pytest.fixture
def tiny_hin():
    return make_hin(np.random.default_rng(42))


@pytest.fixture
def small_cfg():
    return RunConfig(candidates=(1, 2, 3), bands=3, aligned_dim=5,
                     epochs=5, learning_rate=0.01, mlp_layers=2, seed=0)
