"""Reverse-mode differentiation over network parameters, plus the MLP itself.

A :class:`Tape` records array-valued operations in execution order; calling
:meth:`Tape.backward` walks them once in reverse. Only parameters are
differentiated: inputs enter the tape as constants.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "Mlp",
    "Tape",
    "Var",
    "grad_params",
    "load_checkpoint",
    "save_checkpoint",
    "xavier_init",
]


class Var:
    """A node on a tape: forward value, accumulated adjoint, backward rule."""

    __slots__ = ("value", "grad", "parents", "backward_fn", "tape", "needs")

    def __init__(self, tape: Tape, value, parents=(), backward_fn=None, needs=None):
        self.tape = tape
        self.value = np.asarray(value, dtype=float)
        self.grad = None
        self.parents = parents
        self.backward_fn = backward_fn
        # constants never receive adjoints
        self.needs = any(p.needs for p in parents) if needs is None else needs
        tape.nodes.append(self)

    @property
    def shape(self):
        return self.value.shape

    def _acc(self, g) -> None:
        if self.needs:
            self.grad = g if self.grad is None else self.grad + g

    def __add__(self, other):
        return self.tape.add(self, other)

    def __radd__(self, other):
        return self.tape.add(self, other)

    def __sub__(self, other):
        return self.tape.sub(self, other)

    def __rsub__(self, other):
        return self.tape.sub(self.tape.const(other), self)

    def __mul__(self, other):
        return self.tape.mul(self, other)

    def __rmul__(self, other):
        return self.tape.mul(self, other)

    def __neg__(self):
        return self.tape.mul(self, -1.0)

    def __matmul__(self, other):
        return self.tape.matmul(self, other)

    def __getitem__(self, idx):
        return self.tape.getitem(self, idx)

    def __repr__(self) -> str:
        return f"Var(shape={self.value.shape})"


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for i, n in enumerate(shape):
        if n == 1 and g.shape[i] != 1:
            g = g.sum(axis=i, keepdims=True)
    return g


class Tape:
    """Record of one forward computation."""

    def __init__(self):
        self.nodes: list[Var] = []
        self._done = False

    def var(self, value) -> Var:
        """A leaf whose gradient is wanted."""
        return Var(self, value, needs=True)

    def const(self, value) -> Var:
        return value if isinstance(value, Var) else Var(self, value, needs=False)

    def add(self, a, b) -> Var:
        a, b = self.const(a), self.const(b)

        def back(g):
            a._acc(_unbroadcast(g, a.shape))
            b._acc(_unbroadcast(g, b.shape))
        return Var(self, a.value + b.value, (a, b), back)

    def sub(self, a, b) -> Var:
        a, b = self.const(a), self.const(b)

        def back(g):
            a._acc(_unbroadcast(g, a.shape))
            b._acc(-_unbroadcast(g, b.shape))
        return Var(self, a.value - b.value, (a, b), back)

    def mul(self, a, b) -> Var:
        a, b = self.const(a), self.const(b)

        def back(g):
            a._acc(_unbroadcast(g * b.value, a.shape))
            b._acc(_unbroadcast(g * a.value, b.shape))
        return Var(self, a.value * b.value, (a, b), back)

    def matmul(self, a, b) -> Var:
        a, b = self.const(a), self.const(b)

        def back(g):
            a._acc(g @ b.value.T)
            b._acc(a.value.T @ g)
        return Var(self, a.value @ b.value, (a, b), back)

    def dense(self, x: Var, w: Var, b: Var) -> Var:
        """Fused ``x @ w + b`` with a row-broadcast bias."""
        def back(g):
            if x.needs:
                x._acc(g @ w.value.T)
            w._acc(x.value.T @ g)
            b._acc(g.sum(axis=0))
        return Var(self, x.value @ w.value + b.value, (x, w, b), back)

    def tanh(self, a: Var) -> Var:
        y = np.tanh(a.value)

        def back(g):
            d = np.multiply(y, y)
            np.subtract(1.0, d, out=d)
            d *= g
            a._acc(d)
        return Var(self, y, (a,), back)

    def square(self, a: Var) -> Var:
        def back(g):
            a._acc(2.0 * g * a.value)
        return Var(self, a.value * a.value, (a,), back)

    def sum(self, a: Var) -> Var:
        def back(g):
            a._acc(np.broadcast_to(g, a.shape).copy())
        return Var(self, a.value.sum(), (a,), back)

    def mean(self, a: Var) -> Var:
        n = a.value.size

        def back(g):
            a._acc(np.full(a.shape, g / n))
        return Var(self, a.value.mean(), (a,), back)

    def getitem(self, a: Var, idx) -> Var:
        basic = isinstance(idx, (slice, int)) or (
            isinstance(idx, tuple) and all(isinstance(i, (slice, int)) for i in idx))

        def back(g):
            full = np.zeros(a.shape)
            if basic:
                full[idx] = g
            else:
                np.add.at(full, idx, g)
            a._acc(full)
        return Var(self, a.value[idx], (a,), back)

    def spmv(self, mat, a: Var) -> Var:
        """Sparse (or dense) matrix times a vector-valued node."""
        def back(g):
            a._acc(mat.T @ g)
        return Var(self, mat @ a.value, (a,), back)

    def backward(self, root: Var) -> None:
        if root.value.size != 1:
            raise ValueError("backward needs a scalar root")
        if self._done:
            raise RuntimeError("tape already consumed; record a new one")
        self._done = True
        for node in self.nodes:
            node.grad = None
        root.grad = np.ones_like(root.value)
        for node in reversed(self.nodes):
            if node.grad is not None and node.backward_fn is not None:
                node.backward_fn(node.grad)
        self.release()

    def release(self) -> None:
        """Drop the recorded graph so its buffers are freed without the cycle collector.

        Adjoints on leaves (nodes without parents) survive.
        """
        for node in self.nodes:
            if node.parents:
                node.grad = None
            node.backward_fn = None
            node.parents = ()
        self.nodes.clear()


@dataclass
class Mlp:
    """Dense tanh network; the output layer is affine."""

    layer_sizes: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self) -> None:
        if len(self.layer_sizes) < 2 or min(self.layer_sizes) < 1:
            raise ValueError("need at least two layers of positive width")

    @property
    def n_params(self) -> int:
        s = self.layer_sizes
        return sum((s[i] + 1) * s[i + 1] for i in range(len(s) - 1))

    def get_flat(self) -> np.ndarray:
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts += [w.ravel(), b.ravel()]
        return np.concatenate(parts)

    def set_flat(self, theta) -> None:
        theta = np.asarray(theta, dtype=float)
        if theta.size != self.n_params:
            raise ValueError(f"expected {self.n_params} parameters, got {theta.size}")
        pos = 0
        for i in range(len(self.weights)):
            w = self.weights[i]
            self.weights[i] = theta[pos:pos + w.size].reshape(w.shape).copy()
            pos += w.size
            b = self.biases[i]
            self.biases[i] = theta[pos:pos + b.size].copy()
            pos += b.size

    def copy(self) -> Mlp:
        return Mlp(list(self.layer_sizes), [w.copy() for w in self.weights],
                   [b.copy() for b in self.biases])

    def _check_input(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.layer_sizes[0]:
            raise ValueError(
                f"input width {x.shape[1]} does not match layer size {self.layer_sizes[0]}")
        return x

    def __call__(self, x) -> np.ndarray:
        """Plain forward pass, shape ``(n, out)``; no tape."""
        h = self._check_input(x)
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if i < last:
                h = np.tanh(h)
        return h

    def forward(self, tape: Tape, x) -> tuple[Var, list[Var]]:
        """Recorded forward pass; returns the output node and the parameter leaves
        in flat order (``W0, b0, W1, b1, ...``)."""
        h = tape.const(self._check_input(x))
        leaves = []
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            wv, bv = tape.var(w), tape.var(b)
            leaves += [wv, bv]
            h = tape.dense(h, wv, bv)
            if i < last:
                h = tape.tanh(h)
        return h, leaves


def forward(net: Mlp, x) -> np.ndarray:
    return net(x)


def xavier_init(layer_sizes, rng) -> Mlp:
    """Uniform Xavier weights in ``+-sqrt(6 / (fan_in + fan_out))``, zero biases."""
    sizes = [int(s) for s in layer_sizes]
    if len(sizes) < 2:
        raise ValueError("need at least two layers")
    if min(sizes) < 1:
        raise ValueError("zero-width layer")
    rng = np.random.default_rng(rng)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, (fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return Mlp(sizes, weights, biases)


def grad_params(tape: Tape, root: Var, leaves: list[Var]) -> np.ndarray:
    """Run the reverse pass and return ``d root / d theta`` as a flat vector."""
    tape.backward(root)
    return np.concatenate([
        (leaf.grad if leaf.grad is not None else np.zeros(leaf.shape)).ravel()
        for leaf in leaves
    ])


def save_checkpoint(net: Mlp, path) -> None:
    """CSV: a header line with the layer sizes, then one parameter per row."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["layer_sizes"] + list(net.layer_sizes))
        w.writerow(["theta"])
        for v in net.get_flat():
            w.writerow([repr(float(v))])


def load_checkpoint(path) -> Mlp:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "layer_sizes":
        raise ValueError(f"{path} is not a network checkpoint")
    net = xavier_init([int(s) for s in rows[0][1:]], 0)
    net.set_flat([float(r[0]) for r in rows[2:]])
    return net
