"""Spectral profiling of meta-path graphs and frequency-matched filter choice.

The amount of high-frequency content in a signal x on a graph with Laplacian L
is the Rayleigh quotient x'Lx / x'x.  Ranking meta-path graphs by this score
splits them into low / mid / high divisions; one representative per division
is profiled in full (eigendecomposition, Fourier energies, banded histogram)
to find the frequency band where the energy concentrates.  Each division then
receives the Chi-Square filter whose mode lies closest to that band, and each
meta-path graph gets a fused response blending its own division's filter with
down-weighted copies of the other two.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .chifilter import (FREQ_MAX, PolyFilter, chi_mode, chi_response,
                        fit_grid_polynomial)
from .hin import NORMALIZED_LAPLACIAN, MetaPathGraph, ShiftOperator, laplacian

DIVISIONS = ("low", "mid", "high")
DEGENERATE_DIVISION = "all"

DEFAULT_EIG_CAP = 3000
FUSION_GRID = 1024


def _as_matrix(op):
    return op.matrix if isinstance(op, ShiftOperator) else op


def s_high(x: np.ndarray, L) -> float:
    """High-frequency area of a signal: x'Lx / x'x."""
    x = np.asarray(x, dtype=np.float64).ravel()
    denom = float(x @ x)
    if denom == 0.0:
        raise ValueError("s_high of the zero vector is undefined")
    return float(x @ (_as_matrix(L) @ x)) / denom


def graph_s_high(graph: MetaPathGraph, X: np.ndarray) -> float:
    """Mean s_high over nonzero feature columns, normalized Laplacian."""
    if graph.is_empty:
        raise ValueError("graph has no edges")
    X = np.asarray(X, dtype=np.float64)
    L = laplacian(graph.adjacency, NORMALIZED_LAPLACIAN)
    cols = [j for j in range(X.shape[1]) if np.any(X[:, j])]
    if not cols:
        raise ValueError("all feature columns are zero")
    return float(np.mean([s_high(X[:, j], L) for j in cols]))


@dataclass
class SpectralProfile:
    eigenvalues: np.ndarray       # ascending
    fourier_coeffs: np.ndarray    # projections of the column-summed signal
    energies: np.ndarray          # squared coefficients
    band_edges: np.ndarray        # K+1 index boundaries into the sorted spectrum
    band_energies: np.ndarray     # K cumulative energies
    band_max: float               # median eigenvalue of the argmax band

    @property
    def num_bands(self) -> int:
        return len(self.band_energies)


def spectral_profile(graph: MetaPathGraph, X: np.ndarray, K: int,
                     eig_cap: int = DEFAULT_EIG_CAP) -> SpectralProfile:
    """Full eigendecomposition profile of the column-summed feature signal.

    Bands are K contiguous equal-count slices of the sorted spectrum; the
    remainder of n mod K goes to the last band.  band_max is the median
    eigenvalue of the band with the largest cumulative energy.
    """
    n = graph.num_nodes
    if K < 1 or n < K:
        raise ValueError(f"need 1 <= K <= |V|, got K={K}, |V|={n}")
    if n > eig_cap:
        raise ValueError(
            f"graph has {n} nodes, above the dense eigendecomposition cap "
            f"{eig_cap}; profile an induced subsample instead")
    L = laplacian(graph.adjacency, NORMALIZED_LAPLACIAN).matrix.toarray()
    eigenvalues, U = np.linalg.eigh(L)
    signal = np.asarray(X, dtype=np.float64).sum(axis=1)
    coeffs = U.T @ signal
    energies = coeffs ** 2

    base = n // K
    edges = np.array([k * base for k in range(K)] + [n], dtype=np.int64)
    band_energies = np.array(
        [energies[edges[k]:edges[k + 1]].sum() for k in range(K)])
    top = int(np.argmax(band_energies))
    band_max = float(np.median(eigenvalues[edges[top]:edges[top + 1]]))
    return SpectralProfile(eigenvalues, coeffs, energies, edges, band_energies, band_max)


def subsample_graph(graph: MetaPathGraph, X: np.ndarray, cap: int,
                    seed: int) -> tuple[MetaPathGraph, np.ndarray]:
    """Seeded induced subgraph on cap uniformly chosen nodes (sorted ids)."""
    n = graph.num_nodes
    if n <= cap:
        return graph, X
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(n, size=cap, replace=False))
    sub = sp.csr_matrix(graph.adjacency[idx][:, idx])
    return MetaPathGraph(graph.anchor_type, sub, graph.source_path), X[idx]


def profile_capped(graph: MetaPathGraph, X: np.ndarray, K: int,
                   eig_cap: int = DEFAULT_EIG_CAP, seed: int = 0) -> SpectralProfile:
    g, feats = subsample_graph(graph, X, eig_cap, seed)
    return spectral_profile(g, feats, K, eig_cap)


# ---------------------------------------------------------------------------
# divisions and representatives
# ---------------------------------------------------------------------------

@dataclass
class DivisionPlan:
    labels: list[str | None]          # per input graph; None = empty graph
    representatives: dict[str, int]   # division -> index into the input list
    scores: list[float | None]        # graph_s_high per input graph
    degenerate: bool

    @property
    def divisions(self) -> tuple[str, ...]:
        return (DEGENERATE_DIVISION,) if self.degenerate else DIVISIONS


def select_representatives(graphs: list[MetaPathGraph], X: np.ndarray) -> DivisionPlan:
    """Rank nonempty graphs by graph_s_high ascending and cut into low/mid/high.

    Division sizes are as equal as possible with remainders pushed to the later
    divisions; the representative is the element at the lower-median rank of
    its division.  Fewer than 3 valid graphs collapse to a single division.
    """
    scores: list[float | None] = [
        None if g.is_empty else graph_s_high(g, X) for g in graphs]
    valid = [k for k, s in enumerate(scores) if s is not None]
    if not valid:
        raise ValueError("no nonempty meta-path graphs to rank")
    order = sorted(valid, key=lambda k: (scores[k], k))

    labels: list[str | None] = [None] * len(graphs)
    if len(order) < 3:
        for k in order:
            labels[k] = DEGENERATE_DIVISION
        rep = order[(len(order) - 1) // 2]
        return DivisionPlan(labels, {DEGENERATE_DIVISION: rep}, scores, True)

    n = len(order)
    base, rem = divmod(n, 3)
    sizes = [base + (1 if d >= 3 - rem else 0) for d in range(3)]
    reps: dict[str, int] = {}
    pos = 0
    for div, size in zip(DIVISIONS, sizes):
        chunk = order[pos:pos + size]
        for k in chunk:
            labels[k] = div
        reps[div] = chunk[(size - 1) // 2]
        pos += size
    return DivisionPlan(labels, reps, scores, False)


def assign_filter(band_max: float, candidates: list[int]) -> int:
    """Candidate index whose mode is nearest band_max; ties toward smaller i."""
    if not candidates:
        raise ValueError("candidate set is empty")
    return min(sorted(candidates), key=lambda i: (abs(chi_mode(i) - band_max), i))


# ---------------------------------------------------------------------------
# fusion
# ---------------------------------------------------------------------------

@dataclass
class FusedFilter:
    grid: np.ndarray              # uniform abscissa over [0, 2]
    response: np.ndarray          # fused, renormalized to unit integral
    poly: PolyFilter
    indices: dict[str, int]       # division -> assigned filter index
    weights: dict[str, float]     # division -> fusion weight
    own_division: str


@dataclass
class FilterAssignment:
    division: str
    assigned_index: int
    fused: FusedFilter


def fuse_filters(assignments: dict[str, int], own_division: str,
                 w_d: float = 0.1, d: int = 3,
                 grid_size: int = FUSION_GRID) -> FusedFilter:
    """Blend the per-division filters into one response for a meta-path graph.

    Each division's response is weighted (1 for the graph's own division, w_d
    for the others), the weighted samples are convolved numerically, the
    support is rescaled from [0, 2*len] back to [0, 2], and the result is
    renormalized to unit integral before the polynomial fit of degree
    (max contributing i) - 1 + d.
    """
    if own_division not in assignments:
        raise ValueError(f"own division '{own_division}' has no assigned filter")
    if not (0.0 < w_d <= 1.0):
        raise ValueError("w_d must lie in (0, 1]")
    order = [v for v in (*DIVISIONS, DEGENERATE_DIVISION) if v in assignments]
    grid = np.linspace(0.0, FREQ_MAX, grid_size)
    h = grid[1] - grid[0]
    weights = {v: (1.0 if v == own_division else w_d) for v in order}

    fused: np.ndarray | None = None
    for div in order:
        sampled = weights[div] * chi_response(assignments[div], grid)
        fused = sampled if fused is None else np.convolve(fused, sampled) * h
    assert fused is not None
    # support of an m-fold convolution is [0, 2m]; compress it back onto [0, 2]
    support = np.linspace(0.0, FREQ_MAX * len(order), len(fused)) / len(order)
    mass = np.trapezoid(fused, support)
    if mass <= 0.0:
        raise ValueError("fused response has no mass")
    fused = fused / mass

    response = np.interp(grid, support, fused)
    response /= np.trapezoid(response, grid)
    max_i = max(assignments[v] for v in order)
    poly = fit_grid_polynomial(grid, response, max_i - 1 + d)
    return FusedFilter(grid, response, poly, dict(assignments), weights, own_division)


# ---------------------------------------------------------------------------
# achievability of the weighted-combination high-frequency bound
# ---------------------------------------------------------------------------

def theorem1_search(signals: np.ndarray, L, trials: int = 200,
                    seed: int = 0) -> tuple[np.ndarray, float]:
    """Search weight vectors a maximizing s_high(signals @ a).

    Random sampling seeded with the canonical basis vectors, then coordinate
    refinement.  Serves as the constructive check that a weighted combination
    of signals can retain at least the largest individual high-frequency area.
    """
    X = np.asarray(signals, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] < 2:
        raise ValueError("need at least two signal columns")
    mat = _as_matrix(L)
    k = X.shape[1]
    rng = np.random.default_rng(seed)

    def score(w):
        v = X @ w
        nrm = float(v @ v)
        if nrm < 1e-300:
            return -np.inf
        return float(v @ (mat @ v)) / nrm

    best_w, best = None, -np.inf
    for w in np.vstack([np.eye(k), rng.standard_normal((trials, k))]):
        val = score(w)
        if val > best:
            best_w, best = w.copy(), val

    assert best_w is not None
    step = 1.0
    for _ in range(60):
        improved = False
        for j in range(k):
            for delta in (step, -step):
                cand = best_w.copy()
                cand[j] += delta
                val = score(cand)
                if val > best + 1e-15:
                    best_w, best = cand, val
                    improved = True
        if not improved:
            step *= 0.5
            if step < 1e-8:
                break
    return best_w, best
