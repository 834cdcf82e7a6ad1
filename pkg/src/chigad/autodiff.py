"""Minimal reverse-mode automatic differentiation over dense arrays.

Just enough machinery to train the model: a Tape records Nodes in creation
order (which is automatically a topological order), and backward() walks the
list in exact reverse, accumulating gradients additively across fan-out.
Learnable tensors are dense; sparse graph operators enter only as fixed
constants inside sparse_poly_apply.  One tape serves one forward/backward
pass; a finished tape refuses a second backward.
"""

from __future__ import annotations

import numpy as np


class Tape:
    """Append-only record of one forward computation."""

    def __init__(self):
        self.nodes: list[Node] = []
        self.finalized = False

    def leaf(self, value, name: str = "leaf") -> "Node":
        return Node(self, np.asarray(value, dtype=np.float64), name, [])

    def backward(self, loss: "Node") -> None:
        """Populate grads of every node reachable from loss.

        loss must be scalar; calling twice on one tape is an error (gradients
        would double-accumulate), build a fresh tape instead.
        """
        if self.finalized:
            raise RuntimeError("backward already ran on this tape; build a fresh tape")
        if loss.tape is not self:
            raise ValueError("loss node belongs to a different tape")
        if loss.value.ndim != 0:
            raise ValueError(f"backward root must be scalar, got shape {loss.value.shape}")
        self.finalized = True
        loss.grad = np.ones_like(loss.value)
        for node in reversed(self.nodes):
            if node.grad is not None and node.backward_fn is not None:
                node.backward_fn(node.grad)


class Node:
    __slots__ = ("tape", "value", "grad", "op", "parents", "backward_fn")

    def __init__(self, tape, value, op, parents, backward_fn=None):
        self.tape = tape
        self.value = value
        self.grad = None
        self.op = op
        self.parents = parents
        self.backward_fn = backward_fn
        tape.nodes.append(self)

    def accumulate(self, g) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.value)
        self.grad += g

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Node({self.op}, shape={self.value.shape})"


def _tape_of(*nodes) -> Tape:
    tapes = {n.tape for n in nodes}
    if len(tapes) != 1:
        raise ValueError("operands belong to different tapes")
    return tapes.pop()


def matmul(a: Node, b: Node) -> Node:
    tape = _tape_of(a, b)
    if a.value.shape[-1] != b.value.shape[0]:
        raise ValueError(f"matmul shape mismatch {a.value.shape} x {b.value.shape}")
    out = Node(tape, a.value @ b.value, "matmul", [a, b])

    def backward(g):
        a.accumulate(g @ b.value.T)
        b.accumulate(a.value.T @ g)

    out.backward_fn = backward
    return out


def add(a: Node, b: Node) -> Node:
    tape = _tape_of(a, b)
    if a.value.shape != b.value.shape:
        raise ValueError(f"add shape mismatch {a.value.shape} vs {b.value.shape}")
    out = Node(tape, a.value + b.value, "add", [a, b])

    def backward(g):
        a.accumulate(g)
        b.accumulate(g)

    out.backward_fn = backward
    return out


def add_bias(x: Node, bias: Node) -> Node:
    """Add a length-d bias row to every row of an n x d matrix."""
    tape = _tape_of(x, bias)
    if bias.value.ndim != 1 or x.value.shape[1] != bias.value.shape[0]:
        raise ValueError(f"bias shape {bias.value.shape} does not fit {x.value.shape}")
    out = Node(tape, x.value + bias.value[None, :], "add_bias", [x, bias])

    def backward(g):
        x.accumulate(g)
        bias.accumulate(g.sum(axis=0))

    out.backward_fn = backward
    return out


def scale(a: Node, s: Node) -> Node:
    """Multiply a matrix by a scalar node."""
    tape = _tape_of(a, s)
    if s.value.ndim != 0:
        raise ValueError("scale factor must be a scalar node")
    out = Node(tape, a.value * s.value, "scale", [a, s])

    def backward(g):
        a.accumulate(g * s.value)
        s.accumulate(np.asarray((g * a.value).sum()))

    out.backward_fn = backward
    return out


def elementwise_mul(a: Node, b: Node) -> Node:
    tape = _tape_of(a, b)
    if a.value.shape != b.value.shape:
        raise ValueError(f"elementwise_mul shape mismatch {a.value.shape} vs {b.value.shape}")
    out = Node(tape, a.value * b.value, "elementwise_mul", [a, b])

    def backward(g):
        a.accumulate(g * b.value)
        b.accumulate(g * a.value)

    out.backward_fn = backward
    return out


ACTIVATIONS = ("relu", "tanh", "leaky_relu")
LEAKY_SLOPE = 0.01


def activation(x: Node, kind: str) -> Node:
    if kind not in ACTIVATIONS:
        raise ValueError(f"unknown activation '{kind}'")
    v = x.value
    if kind == "relu":
        y = np.maximum(v, 0.0)
        local = (v > 0.0).astype(np.float64)  # subgradient 0 at the kink
    elif kind == "leaky_relu":
        local = np.where(v > 0.0, 1.0, LEAKY_SLOPE)
        y = v * local
    else:
        y = np.tanh(v)
        local = 1.0 - y * y
    out = Node(_tape_of(x), y, kind, [x])
    out.backward_fn = lambda g: x.accumulate(g * local)
    return out


def sparse_poly_apply(coeffs, S, x: Node, meta_weight: Node | None = None) -> Node:
    """y = sum_k c_k (w S)^k x for a fixed sparse operator S.

    coeffs is either a plain float array (non-learnable) or a list of scalar
    Nodes; meta_weight is the learnable scalar w (None means fixed 1).
    Gradients flow to x, to w, and to learnable coeffs; never to S.
    """
    mat = getattr(S, "matrix", S)
    if mat.shape[0] != mat.shape[1] or x.value.shape[0] != mat.shape[0]:
        raise ValueError(
            f"operator {mat.shape} does not fit signal rows {x.value.shape[0]}")
    learnable_coeffs = isinstance(coeffs, (list, tuple)) and coeffs and isinstance(coeffs[0], Node)
    if learnable_coeffs:
        cvals = np.array([float(c.value) for c in coeffs])
        parents = [x] + list(coeffs)
    else:
        cvals = np.asarray(coeffs, dtype=np.float64)
        parents = [x]
    w = 1.0 if meta_weight is None else float(meta_weight.value)
    if meta_weight is not None:
        parents.append(meta_weight)
    tape = _tape_of(*[p for p in parents if isinstance(p, Node)])

    # powers[k] = S^k x, kept for the backward pass
    powers = [x.value]
    for _ in range(len(cvals) - 1):
        powers.append(mat @ powers[-1])
    wpow = w ** np.arange(len(cvals))
    y = sum(c * wk * p for c, wk, p in zip(cvals, wpow, powers))
    out = Node(tape, np.asarray(y), "sparse_poly_apply", parents)
    mat_t = mat.T.tocsr() if hasattr(mat, "tocsr") else mat.T

    def backward(g):
        # dx: sum_k c_k w^k (S^T)^k g, built by iterated transpose passes
        gx = cvals[0] * wpow[0] * g
        q = g
        for k in range(1, len(cvals)):
            q = mat_t @ q
            gx = gx + cvals[k] * wpow[k] * q
        x.accumulate(gx)
        if meta_weight is not None:
            dw = 0.0
            for k in range(1, len(cvals)):
                dw += cvals[k] * k * w ** (k - 1) * float((g * powers[k]).sum())
            meta_weight.accumulate(np.asarray(dw))
        if learnable_coeffs:
            for k, c in enumerate(coeffs):
                c.accumulate(np.asarray(wpow[k] * float((g * powers[k]).sum())))

    out.backward_fn = backward
    return out


def weighted_softmax_ce(logits: Node, labels: np.ndarray, weights: np.ndarray,
                        mask: np.ndarray) -> Node:
    """Weighted two-class cross-entropy over masked rows.

    loss = -(1/N) sum_masked w_i log softmax(logits_i)[y_i], stabilized by
    max-subtraction.  N is the masked count; gradients reach logits only.
    """
    if logits.value.ndim != 2 or logits.value.shape[1] != 2:
        raise ValueError("logits must be n x 2")
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ValueError("empty mask")
    labels = np.asarray(labels, dtype=np.int64)
    weights = np.asarray(weights, dtype=np.float64)

    z = logits.value[mask]
    y = labels[mask]
    wts = weights[mask]
    n = z.shape[0]
    zmax = z.max(axis=1, keepdims=True)
    shifted = z - zmax
    logsum = np.log(np.exp(shifted).sum(axis=1))
    logp = shifted - logsum[:, None]
    loss = -(wts * logp[np.arange(n), y]).sum() / n
    out = Node(_tape_of(logits), np.asarray(loss), "weighted_softmax_ce", [logits])

    def backward(g):
        p = np.exp(logp)
        p[np.arange(n), y] -= 1.0
        full = np.zeros_like(logits.value)
        full[mask] = (float(g) / n) * wts[:, None] * p
        logits.accumulate(full)

    out.backward_fn = backward
    return out


def vstack(blocks: list[Node]) -> Node:
    if not blocks:
        raise ValueError("nothing to stack")
    tape = _tape_of(*blocks)
    widths = {b.value.shape[1] for b in blocks}
    if len(widths) != 1:
        raise ValueError(f"blocks have mixed widths {sorted(widths)}")
    out = Node(tape, np.vstack([b.value for b in blocks]), "vstack", list(blocks))
    offsets = np.cumsum([0] + [b.value.shape[0] for b in blocks])

    def backward(g):
        for b, lo, hi in zip(blocks, offsets[:-1], offsets[1:]):
            b.accumulate(g[lo:hi])

    out.backward_fn = backward
    return out


def row_slice(x: Node, start: int, stop: int) -> Node:
    if not (0 <= start < stop <= x.value.shape[0]):
        raise ValueError(f"row slice [{start}:{stop}] out of range for {x.value.shape}")
    out = Node(x.tape, x.value[start:stop].copy(), "row_slice", [x])

    def backward(g):
        full = np.zeros_like(x.value)
        full[start:stop] = g
        x.accumulate(full)

    out.backward_fn = backward
    return out


def node_sum(x: Node) -> Node:
    out = Node(x.tape, np.asarray(x.value.sum()), "sum", [x])
    out.backward_fn = lambda g: x.accumulate(np.full_like(x.value, float(g)))
    return out
