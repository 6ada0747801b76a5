"""Minimal reverse-mode autodiff over numpy arrays.

A Node wraps a value and a closure that routes the upstream gradient to its
parents; `backward` walks the graph in reverse topological order. Only the
operators needed by the encoders and the contrastive loss are provided, and
there is no broadcasting beyond scalar*tensor: shape alignment is explicit.
"""

import warnings

import numpy as np

from ..errors import ContractError, NumericalError, ShapeError
from . import kernels

# incremented whenever l2_normalize_rows sees an all-zero row
zero_row_count = 0


class Node:
    __slots__ = ("value", "parents", "grad", "requires_grad", "_backward", "name")

    def __init__(self, value, parents=(), backward=None, requires_grad=False, name=None):
        self.value = np.asarray(value)
        self.parents = parents
        self.grad = None
        self.requires_grad = requires_grad
        self._backward = backward
        self.name = name

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        tag = self.name or "node"
        return f"<Node {tag} shape={self.value.shape}>"


def constant(value, name=None):
    return Node(value, name=name)


def parameter(value, name=None):
    return Node(value, requires_grad=True, name=name)


def _same_shape(op, a, b):
    if a.value.shape != b.value.shape:
        raise ShapeError(op, a.value.shape, b.value.shape)


def add(a, b):
    _same_shape("add", a, b)

    def bw(g, out):
        return g, g

    return Node(a.value + b.value, (a, b), bw)


def sub(a, b):
    _same_shape("sub", a, b)

    def bw(g, out):
        return g, -g

    return Node(a.value - b.value, (a, b), bw)


def mul_scalar(a, s):
    """Multiply a tensor by a python scalar or a scalar Node."""
    if isinstance(s, Node):
        if s.value.size != 1:
            raise ShapeError("mul_scalar", a.value.shape, s.value.shape)
        sval = float(s.value)

        def bw(g, out):
            return g * sval, np.asarray(np.sum(g * a.value)).reshape(s.value.shape)

        return Node(a.value * sval, (a, s), bw)

    sval = float(s)

    def bw(g, out):
        return (g * sval,)

    return Node(a.value * sval, (a,), bw)


def mul_const(a, c):
    """Elementwise product with a constant array of the same shape."""
    c = np.asarray(c, dtype=a.value.dtype)
    if c.shape != a.value.shape:
        raise ShapeError("mul_const", a.value.shape, c.shape)

    def bw(g, out):
        return (g * c,)

    return Node(a.value * c, (a,), bw)


def matmul(a, b):
    if a.value.ndim != 2 or b.value.ndim != 2 or a.value.shape[1] != b.value.shape[0]:
        raise ShapeError("matmul", a.value.shape, b.value.shape)

    def bw(g, out):
        return g @ b.value.T, a.value.T @ g

    return Node(a.value @ b.value, (a, b), bw)


def transpose(a):
    if a.value.ndim != 2:
        raise ShapeError("transpose", a.value.shape)

    def bw(g, out):
        return (g.T,)

    return Node(a.value.T, (a,), bw)


def relu(a):
    def bw(g, out):
        # subgradient at 0 is 0
        return (g * (a.value > 0),)

    return Node(np.maximum(a.value, 0), (a,), bw)


def exp(a):
    def bw(g, out):
        return (g * out.value,)

    return Node(np.exp(a.value), (a,), bw)


def add_rowvec(a, b):
    """Add a length-D row vector b to every row of a (N, D)."""
    if a.value.ndim != 2 or b.value.shape != (a.value.shape[1],):
        raise ShapeError("add_rowvec", a.value.shape, b.value.shape)

    def bw(g, out):
        return g, g.sum(axis=0)

    return Node(a.value + b.value, (a, b), bw)


def embedding_lookup(table, indices):
    """table (V, D), indices int array -> (indices.shape..., D)."""
    indices = np.asarray(indices)
    if indices.size and (indices.min() < 0 or indices.max() >= table.value.shape[0]):
        raise ShapeError("embedding_lookup", table.value.shape, indices.shape)

    def bw(g, out):
        gt = np.zeros_like(table.value)
        np.add.at(gt, indices.ravel(), g.reshape(-1, table.value.shape[1]))
        return (gt,)

    return Node(table.value[indices], (table,), bw)


def sum_over_axis(a, axis):
    def bw(g, out):
        return (np.repeat(np.expand_dims(g, axis), a.value.shape[axis], axis=axis),)

    return Node(a.value.sum(axis=axis), (a,), bw)


def mean_over_axis(a, axis):
    n = a.value.shape[axis]

    def bw(g, out):
        return (np.repeat(np.expand_dims(g, axis), n, axis=axis) / n,)

    return Node(a.value.mean(axis=axis), (a,), bw)


def mean_all(a):
    n = a.value.size

    def bw(g, out):
        return (np.full_like(a.value, float(g) / n),)

    return Node(np.asarray(a.value.mean()), (a,), bw)


def l2_normalize_rows(a, eps=1e-12):
    """Normalize each row of a (N, D) to unit norm; zero rows pass through."""
    global zero_row_count
    if a.value.ndim != 2:
        raise ShapeError("l2_normalize_rows", a.value.shape)
    norms = np.sqrt((a.value * a.value).sum(axis=1, keepdims=True))
    zero = norms < eps
    if zero.any():
        zero_row_count += int(zero.sum())
        warnings.warn("l2_normalize_rows: zero row left unnormalized", stacklevel=2)
    safe = np.where(zero, 1.0, norms)
    y = a.value / safe

    def bw(g, out):
        dot = (g * y).sum(axis=1, keepdims=True)
        gx = (g - y * dot) / safe
        return (np.where(zero, 0.0, gx),)

    return Node(y, (a,), bw)


def log_softmax_rows(a):
    if a.value.ndim != 2:
        raise ShapeError("log_softmax_rows", a.value.shape)
    x = a.value
    m = x.max(axis=1, keepdims=True)
    lse = m + np.log(np.exp(x - m).sum(axis=1, keepdims=True))
    y = x - lse

    def bw(g, out):
        return (g - np.exp(y) * g.sum(axis=1, keepdims=True),)

    return Node(y, (a,), bw)


def gather_diag(a):
    n, m = a.value.shape if a.value.ndim == 2 else (0, -1)
    if n != m:
        raise ShapeError("gather_diag", a.value.shape)

    def bw(g, out):
        gx = np.zeros_like(a.value)
        np.fill_diagonal(gx, g)
        return (gx,)

    return Node(np.diagonal(a.value).copy(), (a,), bw)


def conv1d(x, w, b, stride=1, padding=0):
    """x (B, Cin, L) * w (Cout, Cin, k) + b (Cout,) -> (B, Cout, Lout)."""
    if b.value.shape != (w.value.shape[0],):
        raise ShapeError("conv1d bias", w.value.shape, b.value.shape)
    y, cols = kernels.conv1d_forward(x.value, w.value, b.value, stride, padding)

    def bw(g, out):
        gx, gw, gb = kernels.conv1d_backward(x.value, w.value, stride, padding, g, cols)
        return gx, gw, gb

    return Node(y, (x, w, b), bw)


def _toposort(root):
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            stack.append((p, False))
    return order


def backward(loss, params=None):
    """Accumulate gradients of a scalar loss into every reachable node.

    Returns {node: gradient array} for `params` (or every requires_grad leaf
    reached); parameters the loss does not depend on get zero gradients.
    """
    if loss.value.size != 1:
        raise ContractError(f"backward: loss must be scalar, got shape {loss.value.shape}")
    if not np.isfinite(loss.value):
        raise NumericalError("backward: loss is not finite")

    order = _toposort(loss)
    for node in order:
        node.grad = None
    loss.grad = np.ones_like(loss.value)
    for node in reversed(order):
        if node._backward is None or node.grad is None:
            continue
        for parent, g in zip(node.parents, node._backward(node.grad, node)):
            if g is None:
                continue
            if parent.grad is None:
                parent.grad = np.array(g, dtype=parent.value.dtype, copy=True)
            else:
                parent.grad += g

    if params is None:
        params = [n for n in order if n.requires_grad]
    grads = {}
    for p in params:
        grads[p] = p.grad if p.grad is not None else np.zeros_like(p.value)
    return grads


def finite_diff_check(f, params, h=1e-4):
    """Max relative error between analytic and central-difference gradients.

    `f` maps {name: Node} to a scalar Node; `params` is {name: float64 array}.
    """
    if h <= 0:
        raise ContractError("finite_diff_check: h must be positive")
    params = {k: np.asarray(v, dtype=np.float64) for k, v in params.items()}

    def eval_loss(values):
        nodes = {k: parameter(v, name=k) for k, v in values.items()}
        return f(nodes), nodes

    loss, nodes = eval_loss(params)
    if not np.isfinite(loss.value):
        raise NumericalError("finite_diff_check: non-finite loss")
    grads = backward(loss, list(nodes.values()))
    analytic = {k: grads[nodes[k]] for k in params}

    worst = 0.0
    for name, base in params.items():
        flat = base.ravel()
        for i in range(flat.size):
            for sign, store in ((+1, "hi"), (-1, "lo")):
                pert = {k: (v.copy() if k == name else v) for k, v in params.items()}
                pert[name].ravel()[i] = flat[i] + sign * h
                val = float(eval_loss(pert)[0].value)
                if not np.isfinite(val):
                    raise NumericalError("finite_diff_check: non-finite loss at perturbation")
                if sign > 0:
                    hi = val
                else:
                    lo = val
            numeric = (hi - lo) / (2 * h)
            a = float(analytic[name].ravel()[i])
            err = abs(a - numeric) / max(1e-8, abs(a) + abs(numeric))
            worst = max(worst, err)
    return worst
