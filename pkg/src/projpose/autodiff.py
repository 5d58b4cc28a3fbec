"""Reverse-mode automatic differentiation on dense float64 arrays.

A graph is built dynamically per evaluation: each op returns a Node that
remembers its parents and a closure pushing the output gradient back to
them.  backward() walks the graph once in reverse topological order, so
gradient accumulation is deterministic.  Also provides the MLP container
and the Adam step used for training.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError, ShapeError, TrainingDivergenceError


class Node:
    """A value in the computation graph, with storage for its gradient."""

    __slots__ = ("value", "grad", "parents", "backward_rule")

    def __init__(self, value, parents=(), backward_rule=None):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = None
        self.parents = tuple(parents)
        self.backward_rule = backward_rule

    @property
    def shape(self):
        return self.value.shape

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __neg__(self):
        return scale(self, -1.0)

    def __sub__(self, other):
        return add(self, scale(_to_node(other), -1.0))

    def __repr__(self):
        return f"Node(shape={self.value.shape})"


def _to_node(x) -> Node:
    return x if isinstance(x, Node) else Node(x)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    g = grad
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g.reshape(shape)


def add(a, b) -> Node:
    a, b = _to_node(a), _to_node(b)
    try:
        value = a.value + b.value
    except ValueError:
        raise ShapeError(f"add: cannot broadcast {a.shape} with {b.shape}")

    def rule(g):
        a.grad += _unbroadcast(g, a.value.shape)
        b.grad += _unbroadcast(g, b.value.shape)

    return Node(value, (a, b), rule)


def mul(a, b) -> Node:
    a, b = _to_node(a), _to_node(b)
    try:
        value = a.value * b.value
    except ValueError:
        raise ShapeError(f"mul: cannot broadcast {a.shape} with {b.shape}")

    def rule(g):
        a.grad += _unbroadcast(g * b.value, a.value.shape)
        b.grad += _unbroadcast(g * a.value, b.value.shape)

    return Node(value, (a, b), rule)


def scale(a, k: float) -> Node:
    a = _to_node(a)
    k = float(k)

    def rule(g):
        a.grad += k * g

    return Node(k * a.value, (a,), rule)


def matvec(w: Node, x) -> Node:
    """w @ x for a single vector, or x @ w.T for a batch of row vectors."""
    w, x = _to_node(w), _to_node(x)
    if w.value.ndim != 2:
        raise ShapeError(f"matvec: weight must be 2-d, got {w.shape}")
    if x.value.ndim == 1:
        if x.shape[0] != w.shape[1]:
            raise ShapeError(f"matvec: {w.shape} @ {x.shape}")
        value = w.value @ x.value

        def rule(g):
            w.grad += np.outer(g, x.value)
            x.grad += g @ w.value

    elif x.value.ndim == 2:
        if x.shape[1] != w.shape[1]:
            raise ShapeError(f"matvec: {w.shape} against batch {x.shape}")
        value = x.value @ w.value.T

        def rule(g):
            w.grad += g.T @ x.value
            x.grad += g @ w.value

    else:
        raise ShapeError(f"matvec: input must be 1-d or 2-d, got {x.shape}")
    return Node(value, (w, x), rule)


def total(a) -> Node:
    """Sum of all entries, as a scalar node."""
    a = _to_node(a)

    def rule(g):
        a.grad += g

    return Node(a.value.sum(), (a,), rule)


def concat(nodes) -> Node:
    nodes = [_to_node(n) for n in nodes]
    for n in nodes:
        if n.value.ndim != 1:
            raise ShapeError(f"concat: expects 1-d pieces, got {n.shape}")
    sizes = [n.value.shape[0] for n in nodes]
    value = np.concatenate([n.value for n in nodes])
    offsets = np.cumsum([0] + sizes)

    def rule(g):
        for n, lo, hi in zip(nodes, offsets[:-1], offsets[1:]):
            n.grad += g[lo:hi]

    return Node(value, tuple(nodes), rule)


def stack_columns(cols) -> Node:
    """Stack same-shape scalars or vectors along a new last axis."""
    cols = [_to_node(c) for c in cols]
    shapes = {c.value.shape for c in cols}
    if len(shapes) != 1:
        raise ShapeError(f"stack_columns: mixed shapes {sorted(shapes)}")
    value = np.stack([c.value for c in cols], axis=-1)

    def rule(g):
        for i, c in enumerate(cols):
            c.grad += g[..., i]

    return Node(value, tuple(cols), rule)


def column(a, j: int) -> Node:
    a = _to_node(a)
    if a.value.ndim != 2:
        raise ShapeError(f"column: expects a 2-d node, got {a.shape}")
    j = int(j)

    def rule(g):
        a.grad[:, j] += g

    return Node(a.value[:, j], (a,), rule)


def element(a, i: int) -> Node:
    a = _to_node(a)
    if a.value.ndim != 1:
        raise ShapeError(f"element: expects a 1-d node, got {a.shape}")
    i = int(i)

    def rule(g):
        a.grad[i] += g

    return Node(a.value[i], (a,), rule)


def relu(a) -> Node:
    a = _to_node(a)
    mask = a.value > 0.0

    def rule(g):
        a.grad += g * mask

    return Node(np.where(mask, a.value, 0.0), (a,), rule)


def sigmoid(a) -> Node:
    a = _to_node(a)
    v = a.value
    out = np.where(v >= 0.0, 1.0 / (1.0 + np.exp(-np.abs(v))), np.exp(-np.abs(v)) / (1.0 + np.exp(-np.abs(v))))

    def rule(g):
        a.grad += g * out * (1.0 - out)

    return Node(out, (a,), rule)


def tanh(a) -> Node:
    a = _to_node(a)
    out = np.tanh(a.value)

    def rule(g):
        a.grad += g * (1.0 - out * out)

    return Node(out, (a,), rule)


def exp(a) -> Node:
    a = _to_node(a)
    out = np.exp(a.value)

    def rule(g):
        a.grad += g * out

    return Node(out, (a,), rule)


def log(a) -> Node:
    a = _to_node(a)

    def rule(g):
        a.grad += g / a.value

    return Node(np.log(a.value), (a,), rule)


def sin(a) -> Node:
    a = _to_node(a)

    def rule(g):
        a.grad += g * np.cos(a.value)

    return Node(np.sin(a.value), (a,), rule)


def cos(a) -> Node:
    a = _to_node(a)

    def rule(g):
        a.grad -= g * np.sin(a.value)

    return Node(np.cos(a.value), (a,), rule)


def atan2(y, x) -> Node:
    y, x = _to_node(y), _to_node(x)
    if y.value.shape != x.value.shape:
        raise ShapeError(f"atan2: {y.shape} vs {x.shape}")
    denom = x.value * x.value + y.value * y.value

    def rule(g):
        y.grad += g * x.value / denom
        x.grad -= g * y.value / denom

    return Node(np.arctan2(y.value, x.value), (y, x), rule)


def clip(a, lo: float, hi: float) -> Node:
    a = _to_node(a)
    inside = (a.value > lo) & (a.value < hi)

    def rule(g):
        a.grad += g * inside

    return Node(np.clip(a.value, lo, hi), (a,), rule)


def bce_with_logits(logits, targets: np.ndarray) -> Node:
    """Elementwise binary cross-entropy against constant targets in [0, 1].

    Computed from logits for stability: max(z, 0) - z*t + log1p(exp(-|z|)).
    """
    z = _to_node(logits)
    t = np.asarray(targets, dtype=np.float64)
    if t.shape != z.value.shape:
        raise ShapeError(f"bce_with_logits: targets {t.shape} vs logits {z.shape}")
    value = np.maximum(z.value, 0.0) - z.value * t + np.log1p(np.exp(-np.abs(z.value)))

    def rule(g):
        s = np.where(
            z.value >= 0.0,
            1.0 / (1.0 + np.exp(-np.abs(z.value))),
            np.exp(-np.abs(z.value)) / (1.0 + np.exp(-np.abs(z.value))),
        )
        z.grad += g * (s - t)

    return Node(value, (z,), rule)


def topological_order(root: Node) -> list[Node]:
    order: list[Node] = []
    seen: set[int] = set()
    stack: list[tuple[Node, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node.parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    return order


def backward(root: Node) -> None:
    """Populate .grad on every node reachable from a scalar root."""
    if root.value.shape != ():
        raise InvalidArgumentError(
            f"backward expects a scalar root, got shape {root.value.shape}"
        )
    order = topological_order(root)
    for node in order:
        node.grad = np.zeros_like(node.value)
    root.grad = np.ones_like(root.value)
    for node in reversed(order):
        if node.backward_rule is not None:
            node.backward_rule(node.grad)


_ACTIVATIONS = {"relu": relu, "tanh": tanh, "sigmoid": sigmoid, "linear": None}


class Mlp:
    """Fully connected layers with a hidden activation and an output kind."""

    def __init__(
        self,
        widths,
        rng: np.random.Generator,
        hidden_activation: str = "relu",
        output_activation: str = "linear",
    ):
        widths = [int(w) for w in widths]
        if len(widths) < 2 or any(w < 1 for w in widths):
            raise InvalidArgumentError(f"bad layer widths {widths}")
        if hidden_activation not in ("relu", "tanh"):
            raise InvalidArgumentError(f"unknown hidden activation {hidden_activation!r}")
        if output_activation not in ("linear", "sigmoid"):
            raise InvalidArgumentError(f"unknown output activation {output_activation!r}")
        self.widths = widths
        self.hidden_activation = hidden_activation
        self.output_activation = output_activation
        self.weights: list[Node] = []
        self.biases: list[Node] = []
        for n_in, n_out in zip(widths[:-1], widths[1:]):
            bound = 1.0 / math.sqrt(n_in)
            self.weights.append(Node(rng.uniform(-bound, bound, (n_out, n_in))))
            self.biases.append(Node(rng.uniform(-bound, bound, n_out)))

    def forward_linear(self, x) -> Node:
        """Forward pass up to the output layer's affine map (no output act)."""
        h = _to_node(x)
        act = _ACTIVATIONS[self.hidden_activation]
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = add(matvec(w, h), b)
            if i != last:
                h = act(h)
        return h

    def forward(self, x) -> Node:
        out = self.forward_linear(x)
        if self.output_activation == "sigmoid":
            out = sigmoid(out)
        return out

    def parameters(self) -> list[Node]:
        params = []
        for w, b in zip(self.weights, self.biases):
            params.extend([w, b])
        return params

    @property
    def parameter_count(self) -> int:
        return sum(p.value.size for p in self.parameters())


@dataclass
class AdamState:
    """First/second moment accumulators and the shared step counter."""

    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0


def adam_state(params: list[Node]) -> AdamState:
    return AdamState(
        m=[np.zeros_like(p.value) for p in params],
        v=[np.zeros_like(p.value) for p in params],
    )


def adam_step(
    params: list[Node],
    grads: list[np.ndarray],
    state: AdamState,
    lr: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """One bias-corrected Adam update, applied to the node values in place."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise InvalidArgumentError("params, grads, and state lengths differ")
    state.step += 1
    t = state.step
    for i, (p, g) in enumerate(zip(params, grads)):
        if not np.all(np.isfinite(g)):
            raise TrainingDivergenceError(t)
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g * g
        m_hat = state.m[i] / (1.0 - beta1**t)
        v_hat = state.v[i] / (1.0 - beta2**t)
        p.value = p.value - lr * m_hat / (np.sqrt(v_hat) + eps)
