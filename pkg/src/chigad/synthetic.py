"""Synthetic heterogeneous graphs with planted structural anomalies.

Node types form a relation chain t0 - t1 - ... - t{k-1} with the target
type t0 at one end.  The tiers play different roles:

* t0 holds the labeled entities.  Their own features are a constant
  placeholder (plus an optional anomalous displacement, see ``shift``), so
  nothing about an entity in isolation separates the classes.
* middle tiers are interaction venues, also with constant placeholder
  features.  Each venue is a small pool of nodes belonging to one
  community; normal entities pick one venue of their own community and
  attach there.
* the last tier holds descriptors: the only nodes with informative
  features, a Gaussian mixture keyed to their community.  Venues connect
  to descriptors of their own community, so an entity's descriptor
  profile sits at the far end of the chain.

Every auxiliary tier reserves a shadow venue alongside the per-community
ones.  Normal entities never touch it; each anomaly re-attaches a
``rewire`` fraction of its edges into the shadow venue, whose descriptors
carry their own mixture component.  The shadow pools are sized by the
anomaly rate, which keeps node degrees statistically identical across
classes.  The planted signature is therefore purely relational: anomalies
are distinguishable only through the descriptor mass their connections
reach several hops out, which shows up as high-frequency energy on the
meta-path graphs rather than as any one-hop feature or degree cue.

``shift`` > 0 additionally displaces anomalous entity features along
per-node random directions inside the positive orthant, for experiments
where feature-level evidence should exist as well.

Generation is a pure function of (spec, seed).  Draw order: target
communities, anomaly choice, per-tier venue partitions, features (cone
directions only when shift > 0), per-tier edges, splits.
"""

from __future__ import annotations

import numpy as np

from .config import SyntheticSpec
from .hin import LABEL_ANOMALY, LABEL_BENIGN, HeteroGraph, hetero_graph_from_dict

DESCRIPTOR_NOISE = 0.3


def _venue_partition(rng, n: int, c: int, rate: float):
    """Split n auxiliary nodes into c*per_comm community venues + 1 shadow.

    The shadow pool gets the anomaly-rate share of nodes (at least 2) so the
    in-degree an anomaly-facing node sees matches the community venues.
    Returns (venue id per node, community per venue id).
    """
    shadow = max(2, int(round(rate * n)))
    per_comm = max(1, int(round((n - shadow) / (c * shadow))))
    total = c * per_comm + 1
    ids = np.full(n, total - 1)
    rest = rng.permutation(n)[shadow:]
    ids[rest] = np.arange(rest.size) % (c * per_comm)
    venue_comm = np.concatenate([np.repeat(np.arange(c), per_comm), [c]])
    return ids, venue_comm


def generate_synthetic_hin(spec: SyntheticSpec, seed: int) -> HeteroGraph:
    spec.validate()
    rng = np.random.default_rng(seed)
    n_types = len(spec.sizes)
    type_names = [f"t{j}" for j in range(n_types)]
    target = type_names[0]
    n0 = spec.sizes[0]
    c = spec.communities

    comm0 = rng.integers(0, c, size=n0)

    n_anom = int(round(spec.anomaly_rate * n0))
    anomalies = rng.choice(n0, size=n_anom, replace=False) if n_anom else np.array([], dtype=np.int64)
    labels = np.full(n0, LABEL_BENIGN, dtype=np.int64)
    labels[anomalies] = LABEL_ANOMALY

    venue_of = [None]
    venue_comm = [None]
    for n in spec.sizes[1:]:
        ids, vc = _venue_partition(rng, n, c, spec.anomaly_rate)
        venue_of.append(ids)
        venue_comm.append(vc)

    features = {}
    for j, (name, dim) in enumerate(zip(type_names, spec.feature_dims)):
        if j == n_types - 1:
            # descriptor tier: community-keyed mixture, shadow mean included
            means = rng.normal(0.0, 1.0, size=(c + 1, dim))
            comm_j = venue_comm[j][venue_of[j]]
            feats = means[comm_j] + DESCRIPTOR_NOISE * rng.normal(0.0, 1.0, size=(spec.sizes[j], dim))
        else:
            feats = np.ones((spec.sizes[j], dim))
        if j == 0 and n_anom and spec.shift:
            directions = np.abs(rng.normal(0.0, 1.0, size=(n_anom, dim)))
            directions /= np.linalg.norm(directions, axis=1, keepdims=True)
            feats[anomalies] += spec.shift * directions
        features[name] = feats

    # chain edges; entities draw within their venue, later tiers within their
    # community, anomalies re-route the rewire fraction into the shadow venue
    edges = {}
    for j in range(1, n_types):
        src = j - 1
        ids, vc = venue_of[j], venue_comm[j]
        by_venue = [np.nonzero(ids == v)[0] for v in range(vc.size)]
        by_comm = [np.nonzero(vc[ids] == k)[0] for k in range(c + 1)]
        shadow_venue = vc.size - 1
        if src == 0:
            per_comm = (vc.size - 1) // c
            own_venue = rng.integers(0, per_comm, size=n0) + comm0 * per_comm
        pairs = set()
        for u in range(spec.sizes[src]):
            degree = 1 + rng.poisson(3)
            if src == 0:
                base_pool = by_venue[own_venue[u]]
                rewired = labels[u] == LABEL_ANOMALY
            else:
                base_pool = by_comm[venue_comm[src][venue_of[src][u]]]
                rewired = False
            for _ in range(degree):
                if rewired and rng.random() < spec.rewire:
                    pool = by_venue[shadow_venue]
                else:
                    pool = base_pool
                if pool.size == 0:
                    pool = np.arange(spec.sizes[j])
                pairs.add((u, int(rng.choice(pool))))
        edges[j] = sorted(pairs)

    doc = {
        "node_types": [
            {"name": name, "count": spec.sizes[j], "feature_dim": spec.feature_dims[j],
             "features": features[name].tolist()}
            for j, name in enumerate(type_names)
        ],
        "relations": [],
        "target_type": target,
        "labels": [int(v) for v in labels],
    }
    for j in range(1, n_types):
        a, b = type_names[j - 1], type_names[j]
        fwd = [[int(u), int(v)] for u, v in edges[j]]
        rev = sorted([v, u] for u, v in edges[j])
        doc["relations"].append({"name": f"r_{a}_{b}", "src": a, "dst": b, "edges": fwd})
        doc["relations"].append({"name": f"r_{b}_{a}", "src": b, "dst": a, "edges": rev})

    doc["splits"] = _stratified_splits(labels, spec.train_frac, spec.val_frac, rng)
    return hetero_graph_from_dict(doc)


def _stratified_splits(labels, train_frac, val_frac, rng) -> dict:
    """Per-class shuffled slices so each split sees both classes."""
    splits = {"train": [], "val": [], "test": []}
    for cls in (LABEL_BENIGN, LABEL_ANOMALY):
        ids = np.nonzero(labels == cls)[0]
        if ids.size == 0:
            continue
        ids = ids[rng.permutation(ids.size)]
        n_train = max(1, int(round(train_frac * ids.size)))
        n_val = max(1, int(round(val_frac * ids.size)))
        n_train = min(n_train, max(1, ids.size - 2))
        n_val = min(n_val, ids.size - n_train - 1) if ids.size - n_train > 1 else 0
        splits["train"].extend(int(v) for v in ids[:n_train])
        splits["val"].extend(int(v) for v in ids[n_train:n_train + n_val])
        splits["test"].extend(int(v) for v in ids[n_train + n_val:])
    return {k: sorted(v) for k, v in splits.items()}
