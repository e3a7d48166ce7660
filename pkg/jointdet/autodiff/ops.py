"""
Differentiable operations on `Value`s. Every operation computes its forward result with numpy and registers a
backward rule on the active tape. Non-differentiable points use one-sided subgradients: relu, maximum, minimum and
clip route the gradient to the first argument (or the interior) on ties, abs has zero gradient at 0.

For License information see the LICENSE file.

"""
from typing import Sequence, Optional, Union, Tuple

import numpy as np
from scipy.special import expit

from .value import Value, as_value

Operand = Union[Value, float, np.ndarray]


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    # sums out the axes numpy broadcasting added or stretched
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def add(a: Operand, b: Operand) -> Value:
    a, b = as_value(a), as_value(b)
    return Value.from_op(a.data + b.data, (a, b),
                         lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def sub(a: Operand, b: Operand) -> Value:
    a, b = as_value(a), as_value(b)
    return Value.from_op(a.data - b.data, (a, b),
                         lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)))


def mul(a: Operand, b: Operand) -> Value:
    a, b = as_value(a), as_value(b)
    return Value.from_op(a.data * b.data, (a, b),
                         lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)))


def div(a: Operand, b: Operand) -> Value:
    a, b = as_value(a), as_value(b)
    out = a.data / b.data
    return Value.from_op(out, (a, b),
                         lambda g: (_unbroadcast(g / b.data, a.shape), _unbroadcast(-g * out / b.data, b.shape)))


def neg(a: Operand) -> Value:
    a = as_value(a)
    return Value.from_op(-a.data, (a,), lambda g: (-g,))


def power(a: Operand, exponent: float) -> Value:
    a = as_value(a)
    return Value.from_op(a.data ** exponent, (a,), lambda g: (g * exponent * a.data ** (exponent - 1),))


def square(a: Operand) -> Value:
    a = as_value(a)
    return Value.from_op(a.data * a.data, (a,), lambda g: (2.0 * g * a.data,))


def sqrt(a: Operand) -> Value:
    a = as_value(a)
    out = np.sqrt(a.data)
    return Value.from_op(out, (a,), lambda g: (0.5 * g / out,))


def exp(a: Operand) -> Value:
    a = as_value(a)
    out = np.exp(a.data)
    return Value.from_op(out, (a,), lambda g: (g * out,))


def log(a: Operand) -> Value:
    a = as_value(a)
    return Value.from_op(np.log(a.data), (a,), lambda g: (g / a.data,))


def absolute(a: Operand) -> Value:
    a = as_value(a)
    return Value.from_op(np.abs(a.data), (a,), lambda g: (g * np.sign(a.data),))


def sin(a: Operand) -> Value:
    a = as_value(a)
    return Value.from_op(np.sin(a.data), (a,), lambda g: (g * np.cos(a.data),))


def cos(a: Operand) -> Value:
    a = as_value(a)
    return Value.from_op(np.cos(a.data), (a,), lambda g: (-g * np.sin(a.data),))


def atan2(y: Operand, x: Operand) -> Value:
    """Elementwise atan2 with atan2(0, 0) = 0 and a zero gradient at the origin."""
    y, x = as_value(y), as_value(x)
    radius = x.data * x.data + y.data * y.data
    safe = np.where(radius > 0, radius, 1.0)
    origin = radius <= 0

    def rule(g):
        gy = np.where(origin, 0.0, g * x.data / safe)
        gx = np.where(origin, 0.0, -g * y.data / safe)
        return _unbroadcast(gy, y.shape), _unbroadcast(gx, x.shape)

    return Value.from_op(np.arctan2(y.data, x.data), (y, x), rule)


def sigmoid(a: Operand) -> Value:
    a = as_value(a)
    out = expit(a.data)
    return Value.from_op(out, (a,), lambda g: (g * out * (1.0 - out),))


def softplus(a: Operand) -> Value:
    """log(1 + exp(a)), evaluated without overflow."""
    a = as_value(a)
    return Value.from_op(np.logaddexp(0.0, a.data), (a,), lambda g: (g * expit(a.data),))


def log_sigmoid(a: Operand) -> Value:
    a = as_value(a)
    return Value.from_op(-np.logaddexp(0.0, -a.data), (a,), lambda g: (g * expit(-a.data),))


def relu(a: Operand) -> Value:
    a = as_value(a)
    active = a.data > 0
    return Value.from_op(np.where(active, a.data, 0.0), (a,), lambda g: (g * active,))


def maximum(a: Operand, b: Operand) -> Value:
    a, b = as_value(a), as_value(b)
    first = a.data >= b.data
    return Value.from_op(np.maximum(a.data, b.data), (a, b),
                         lambda g: (_unbroadcast(g * first, a.shape), _unbroadcast(g * ~first, b.shape)))


def minimum(a: Operand, b: Operand) -> Value:
    a, b = as_value(a), as_value(b)
    first = a.data <= b.data
    return Value.from_op(np.minimum(a.data, b.data), (a, b),
                         lambda g: (_unbroadcast(g * first, a.shape), _unbroadcast(g * ~first, b.shape)))


def clip(a: Operand, low: float, high: float) -> Value:
    a = as_value(a)
    inside = (a.data >= low) & (a.data <= high)
    return Value.from_op(np.clip(a.data, low, high), (a,), lambda g: (g * inside,))


def where(condition: np.ndarray, a: Operand, b: Operand) -> Value:
    a, b = as_value(a), as_value(b)
    condition = np.asarray(condition, dtype=bool)
    return Value.from_op(np.where(condition, a.data, b.data), (a, b),
                         lambda g: (_unbroadcast(np.where(condition, g, 0.0), a.shape),
                                    _unbroadcast(np.where(condition, 0.0, g), b.shape)))


def sum_(a: Operand, axis: Optional[Union[int, Tuple[int, ...]]] = None, keepdims: bool = False) -> Value:
    a = as_value(a)
    out = a.data.sum(axis=axis, keepdims=keepdims)

    def rule(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return np.broadcast_to(g, a.shape).copy(),

    return Value.from_op(out, (a,), rule)


def mean(a: Operand, axis: Optional[Union[int, Tuple[int, ...]]] = None, keepdims: bool = False) -> Value:
    a = as_value(a)
    count = a.size if axis is None else int(np.prod([a.shape[i] for i in np.atleast_1d(axis)]))
    return sum_(a, axis=axis, keepdims=keepdims) / float(max(count, 1))


def matmul(a: Operand, b: Operand) -> Value:
    """Matrix product of operands with at least two dimensions."""
    a, b = as_value(a), as_value(b)

    def rule(g):
        ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
        gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return Value.from_op(np.matmul(a.data, b.data), (a, b), rule)


def reshape(a: Operand, shape: Tuple[int, ...]) -> Value:
    a = as_value(a)
    return Value.from_op(a.data.reshape(shape), (a,), lambda g: (g.reshape(a.shape),))


def transpose(a: Operand, axes: Optional[Tuple[int, ...]] = None) -> Value:
    a = as_value(a)
    inverse = None if axes is None else tuple(np.argsort(axes))
    return Value.from_op(np.transpose(a.data, axes), (a,), lambda g: (np.transpose(g, inverse),))


def getitem(a: Operand, key) -> Value:
    """Basic or advanced indexing. Repeated indices accumulate their gradients."""
    a = as_value(a)

    def rule(g):
        grad = np.zeros_like(a.data)
        np.add.at(grad, key, g)
        return grad,

    return Value.from_op(a.data[key], (a,), rule)


def take_rows(a: Operand, index: np.ndarray) -> Value:
    """`a[index]` along the first axis, with a gather/scatter-add pair instead of the generic indexing rule."""
    a = as_value(a)
    index = np.asarray(index, dtype=np.int64)

    def rule(g):
        grad = np.zeros_like(a.data)
        np.add.at(grad, index, g)
        return grad,

    return Value.from_op(a.data[index], (a,), rule)


def segment_sum(a: Operand, segments: np.ndarray, n_segments: int) -> Value:
    """Sums the rows of `a` into `n_segments` buckets given by the integer `segments` of each row."""
    a = as_value(a)
    segments = np.asarray(segments, dtype=np.int64)
    out = np.zeros((n_segments,) + a.shape[1:])
    np.add.at(out, segments, a.data)
    return Value.from_op(out, (a,), lambda g: (g[segments],))


def concat(values: Sequence[Operand], axis: int = 0) -> Value:
    values = [as_value(v) for v in values]
    sizes = [v.shape[axis] for v in values]
    splits = np.cumsum(sizes)[:-1]
    return Value.from_op(np.concatenate([v.data for v in values], axis=axis), values,
                         lambda g: tuple(np.split(g, splits, axis=axis)))


def stack(values: Sequence[Operand], axis: int = 0) -> Value:
    values = [as_value(v) for v in values]
    return Value.from_op(np.stack([v.data for v in values], axis=axis), values,
                         lambda g: tuple(np.take(g, i, axis=axis) for i in range(len(values))))


def log_softmax(a: Operand, axis: int = -1) -> Value:
    a = as_value(a)
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    out = shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    probabilities = np.exp(out)
    return Value.from_op(out, (a,), lambda g: (g - probabilities * g.sum(axis=axis, keepdims=True),))


def softmax(a: Operand, axis: int = -1) -> Value:
    a = as_value(a)
    shifted = np.exp(a.data - a.data.max(axis=axis, keepdims=True))
    out = shifted / shifted.sum(axis=axis, keepdims=True)
    return Value.from_op(out, (a,), lambda g: (out * (g - (g * out).sum(axis=axis, keepdims=True)),))
