"""Reverse-mode automatic differentiation over dense float64 arrays.

The graph is built define-by-run: each op records its parents and a
backward closure on the output tensor. :func:`backward` orders the reachable
nodes topologically (the tape) and replays the closures once each, in
reverse.
"""

import contextlib
import math

import numpy as np

from scipy.special import erf

from hazardops._backend import load_compiled
from hazardops.errors import ConfigurationError, DimensionError, NumericalError

_act = load_compiled("autodiff._actcore")

_GRAD_ENABLED = [True]


@contextlib.contextmanager
def no_grad():
    """Disable graph recording inside the block (inference, optimizer steps)."""
    _GRAD_ENABLED.append(False)
    try:
        yield
    finally:
        _GRAD_ENABLED.pop()


def grad_enabled():
    return _GRAD_ENABLED[-1]


class Tensor:
    """A float64 array that optionally takes part in the computation graph."""

    __array_priority__ = 100

    def __init__(self, values, requires_grad=False, _parents=(), _op=""):
        self.values = np.asarray(values, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self._parents = _parents
        self._backward = None
        self._op = _op

    @property
    def shape(self):
        return self.values.shape

    @property
    def ndim(self):
        return self.values.ndim

    @property
    def size(self):
        return self.values.size

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag})"

    def numpy(self):
        return self.values

    def item(self):
        if self.values.size != 1:
            raise DimensionError(f"item() needs a single element, got shape {self.shape}")
        return float(self.values.reshape(()))

    def zero_grad(self):
        self.grad = None

    def detach(self):
        return Tensor(self.values)

    def _accumulate(self, g):
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64)
        else:
            self.grad += g

    def backward(self, retain_graph=False):
        backward(self, retain_graph)

    # arithmetic ------------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, neg(as_tensor(other)))

    def __rsub__(self, other):
        return add(as_tensor(other), neg(self))

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = as_tensor(other)
        return mul(self, reciprocal(other))

    def __rtruediv__(self, other):
        return mul(as_tensor(other), reciprocal(self))

    def __neg__(self):
        return neg(self)

    def __pow__(self, exponent):
        return power(self, exponent)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(as_tensor(other), self)

    def __getitem__(self, index):
        return getitem(self, index)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return transpose(self, axes or None)

    def swapaxes(self, a, b):
        axes = list(range(self.ndim))
        axes[a], axes[b] = axes[b], axes[a]
        return transpose(self, tuple(axes))

    @property
    def T(self):
        return transpose(self, None)


def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(values, parents, op, backward_fn):
    values = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        if all(np.all(np.isfinite(p.values)) for p in parents):
            raise NumericalError(f"op '{op}' produced non-finite values from finite inputs")
    needs = grad_enabled() and any(p.requires_grad for p in parents)
    out = Tensor(values, requires_grad=needs, _parents=parents if needs else (), _op=op)
    if needs:
        out._backward = backward_fn
    return out


def _unbroadcast(g, shape):
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for i, s in enumerate(shape):
        if s == 1 and g.shape[i] != 1:
            g = g.sum(axis=i, keepdims=True)
    return g


# elementwise -----------------------------------------------------------

def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    out = None

    def bw():
        if a.requires_grad:
            a._accumulate(_unbroadcast(out.grad, a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(out.grad, b.shape))

    out = _make(a.values + b.values, (a, b), "add", bw)
    return out


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    out = None

    def bw():
        if a.requires_grad:
            a._accumulate(_unbroadcast(out.grad * b.values, a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(out.grad * a.values, b.shape))

    out = _make(a.values * b.values, (a, b), "mul", bw)
    return out


def neg(a):
    out = None

    def bw():
        a._accumulate(-out.grad)

    out = _make(-a.values, (a,), "neg", bw)
    return out


def reciprocal(a):
    out = None

    def bw():
        a._accumulate(-out.grad * out.values ** 2)

    with np.errstate(divide="ignore"):
        vals = 1.0 / a.values
    out = _make(vals, (a,), "reciprocal", bw)
    return out


def power(a, exponent):
    exponent = float(exponent)
    out = None

    def bw():
        a._accumulate(out.grad * exponent * a.values ** (exponent - 1.0))

    with np.errstate(divide="ignore", invalid="ignore"):
        vals = a.values ** exponent
    out = _make(vals, (a,), "pow", bw)
    return out


def exp(a):
    out = None

    def bw():
        a._accumulate(out.grad * out.values)

    out = _make(np.exp(a.values), (a,), "exp", bw)
    return out


_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _gelu(x):
    if _act is not None:
        return _act.gelu_forward(x)
    cdf = 0.5 * (1.0 + erf(x / math.sqrt(2.0)))
    return x * cdf, cdf


def _gelu_grad(x, cdf, g):
    if _act is not None:
        return _act.gelu_backward(x, cdf, g)
    return g * (cdf + x * (_INV_SQRT_2PI * np.exp(-0.5 * x * x)))


ACTIVATIONS = ("tanh", "gelu", "relu", "identity")


def activation(x, kind):
    """Elementwise nonlinearity with its exact derivative on the tape.

    ``gelu`` is the exact erf form, not the tanh approximation.
    """
    if kind not in ACTIVATIONS:
        raise ConfigurationError(f"unknown activation '{kind}' (expected one of {ACTIVATIONS})")
    x = as_tensor(x)
    if kind == "identity":
        return x
    out = None
    v = x.values
    if kind == "tanh":
        y = np.tanh(v)

        def bw():
            x._accumulate(out.grad * (1.0 - y * y))
    elif kind == "relu":
        y = np.maximum(v, 0.0)

        def bw():
            x._accumulate(out.grad * (v > 0.0))
    else:
        y, cdf = _gelu(v)

        def bw():
            x._accumulate(_gelu_grad(v, cdf, out.grad))

    out = _make(y, (x,), kind, bw)
    return out


# reductions and shape ops ------------------------------------------------

def tsum(a, axis=None, keepdims=False):
    out = None

    def bw():
        g = out.grad
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        a._accumulate(np.broadcast_to(g, a.shape).copy())

    out = _make(a.values.sum(axis=axis, keepdims=keepdims), (a,), "sum", bw)
    return out


def mean(a, axis=None, keepdims=False):
    if axis is None:
        count = a.size
    else:
        axes = (axis,) if isinstance(axis, int) else axis
        count = int(np.prod([a.shape[i] for i in axes]))
    return tsum(a, axis=axis, keepdims=keepdims) * (1.0 / count)


def reshape(a, shape):
    out = None

    def bw():
        a._accumulate(out.grad.reshape(a.shape))

    out = _make(a.values.reshape(shape), (a,), "reshape", bw)
    return out


def transpose(a, axes=None):
    out = None

    def bw():
        if axes is None:
            a._accumulate(out.grad.transpose())
        else:
            a._accumulate(out.grad.transpose(np.argsort(axes)))

    out = _make(a.values.transpose(axes), (a,), "transpose", bw)
    return out


def getitem(a, index):
    out = None

    def bw():
        g = np.zeros_like(a.values)
        np.add.at(g, index, out.grad)
        a._accumulate(g)

    out = _make(a.values[index], (a,), "getitem", bw)
    return out


def concat(tensors, axis=-1):
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.shape[axis] for t in tensors]
    bounds = np.cumsum([0] + sizes)
    out = None

    def bw():
        for t, lo, hi in zip(tensors, bounds[:-1], bounds[1:]):
            if t.requires_grad:
                sl = [slice(None)] * out.grad.ndim
                sl[axis] = slice(lo, hi)
                t._accumulate(out.grad[tuple(sl)])

    out = _make(np.concatenate([t.values for t in tensors], axis=axis), tuple(tensors), "concat", bw)
    return out


def matmul(a, b):
    """Matrix product with numpy broadcasting over leading batch axes.

    For 2-D operands the backward rule is ``dA = dC @ B.T`` and
    ``dB = A.T @ dC``; batched shapes reduce the gradient over broadcast axes.
    """
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2:
        raise DimensionError(f"matmul needs operands of rank >= 2, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"matmul inner dimensions differ: {a.shape} @ {b.shape}")
    out = None

    def bw():
        g = out.grad
        if a.requires_grad:
            a._accumulate(_unbroadcast(g @ np.swapaxes(b.values, -1, -2), a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(np.swapaxes(a.values, -1, -2) @ g, b.shape))

    out = _make(a.values @ b.values, (a, b), "matmul", bw)
    return out


# driver ----------------------------------------------------------------

def tape(loss):
    """Topologically ordered list of graph nodes leading to ``loss``."""
    order, seen = [], set()
    stack = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    return order


def backward(loss, retain_graph=False):
    """Accumulate d(loss)/d(leaf) into ``.grad`` of every reachable tensor.

    Gradients accumulate across calls; call :meth:`Tensor.zero_grad` (or the
    optimizer's ``zero_grad``) between steps. Unless ``retain_graph`` is set,
    the interior nodes are released afterwards: their closures form
    reference cycles that would otherwise keep every activation alive until
    the cyclic garbage collector happens to run.
    """
    if loss.size != 1:
        raise DimensionError(f"backward needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        return
    order = tape(loss)
    for node in order:
        if node._backward is not None:
            # interior grads are per-pass; only leaves accumulate across calls
            node.grad = None
    loss._accumulate(np.ones(loss.shape))
    for node in reversed(order):
        if node._backward is not None and node.grad is not None:
            node._backward()
    if not retain_graph:
        for node in order:
            if node._backward is not None:
                node._backward = None
                node._parents = ()
                node.grad = None
