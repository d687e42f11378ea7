# Copyright 2026 The scgen Authors. All rights reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
# ==============================================================================
"""Dense tensors with reverse-mode differentiation.

A ``Tensor`` wraps a numpy array. Every differentiable operation is a
``Function`` subclass; applying one records a node that remembers its operands
and whatever forward context its backward pass needs. Nodes receive a
monotonically increasing sequence number when they are recorded, so the order
in which they were appended is a topological order of the graph.
"""

import contextlib
import itertools
import logging
import threading

import numpy as np

from scgen.exceptions import GraphError, ShapeError, ValidityError


logger = logging.getLogger(__name__)

DEFAULT_DTYPE = np.float32
CHECK_DTYPE = np.float64

_sequence = itertools.count()
_state = threading.local()


def is_grad_enabled():
    return getattr(_state, 'grad_enabled', True)


@contextlib.contextmanager
def no_grad():
    """Context in which applied functions are not recorded."""
    previous = is_grad_enabled()
    _state.grad_enabled = False
    try:
        yield
    finally:
        _state.grad_enabled = previous


def unbroadcast(grad, shape):
    """Sum ``grad`` over the axes numpy broadcasting expanded to reach it."""
    if grad.shape == tuple(shape):
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Function(object):
    """Base class of differentiable operations.

    Subclasses implement ``forward`` on numpy arrays and ``backward``, which
    maps the gradient of the output to a tuple holding one gradient (or
    ``None``) per input.
    """

    def __init__(self):
        self.inputs = ()
        self.seq = -1
        self.needs_input_grad = ()

    def forward(self, *arrays, **kwargs):
        raise NotImplementedError('{} has no forward pass'.format(
            type(self).__name__))

    def backward(self, grad):
        raise NotImplementedError('{} has no backward pass'.format(
            type(self).__name__))

    @classmethod
    def apply(cls, *inputs, **kwargs):
        inputs = tuple(as_tensor(x, like=inputs) for x in inputs)
        func = cls()
        out = func.forward(*(t.data for t in inputs), **kwargs)
        record = is_grad_enabled() and any(t.requires_grad for t in inputs)
        if not record:
            return Tensor(out)
        func.inputs = inputs
        func.needs_input_grad = tuple(t.requires_grad for t in inputs)
        func.seq = next(_sequence)
        return Tensor(out, requires_grad=True, creator=func)

    @property
    def tag(self):
        return type(self).__name__


class Tensor(object):
    """A numpy array that can take part in differentiation.

    Args:
        data (array_like): Values. Floating point arrays keep their dtype,
            anything else is converted to ``dtype``.
        requires_grad (bool): Whether gradients are accumulated into ``grad``
            for this tensor (leaves) or propagated through it (non-leaves).
        creator (Function): The recorded node that produced this tensor.
        dtype (numpy.dtype): dtype used when ``data`` is not floating point.
    """

    __array_priority__ = 100

    def __init__(self, data, requires_grad=False, creator=None, dtype=None):
        data = np.asarray(data)
        if dtype is not None:
            data = data.astype(dtype, copy=False)
        elif data.dtype not in (np.float32, np.float64):
            data = data.astype(DEFAULT_DTYPE)
        self.data = data
        self.requires_grad = bool(requires_grad)
        self.creator = creator
        self.grad = None

    def __repr__(self):
        return 'Tensor(shape={}, dtype={}, requires_grad={})'.format(
            self.shape, self.dtype, self.requires_grad)

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def is_leaf(self):
        return self.creator is None

    def numpy(self):
        return self.data

    def item(self):
        return float(self.data.reshape(-1)[0])

    def detach(self):
        return Tensor(self.data)

    def zero_grad(self):
        self.grad = None

    def check_finite(self, name='tensor'):
        """Raise ``ValidityError`` if any stored value is NaN or Inf."""
        if not np.all(np.isfinite(self.data)):
            bad = int(np.size(self.data) - np.count_nonzero(
                np.isfinite(self.data)))
            raise ValidityError('{} non-finite value(s) in tensor of shape '
                                '{}'.format(bad, self.shape), name=name)
        return self

    def backward(self, retain_graph=False):
        backprop(self, retain_graph=retain_graph)

    # arithmetic

    def __add__(self, other):
        return Add.apply(self, other)

    def __radd__(self, other):
        return Add.apply(other, self)

    def __sub__(self, other):
        return Sub.apply(self, other)

    def __rsub__(self, other):
        return Sub.apply(other, self)

    def __mul__(self, other):
        return Mul.apply(self, other)

    def __rmul__(self, other):
        return Mul.apply(other, self)

    def __truediv__(self, other):
        return Div.apply(self, other)

    def __rtruediv__(self, other):
        return Div.apply(other, self)

    def __neg__(self):
        return Neg.apply(self)

    def __pow__(self, exponent):
        return Pow.apply(self, exponent=float(exponent))

    def sum(self, axis=None, keepdims=False):
        return Sum.apply(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        if axis is None:
            count = self.size
        else:
            axes = axis if isinstance(axis, tuple) else (axis,)
            count = int(np.prod([self.shape[a] for a in axes]))
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return Reshape.apply(self, shape=shape)

    def abs(self):
        return Abs.apply(self)

    def sqrt(self):
        return Pow.apply(self, exponent=0.5)


def as_tensor(value, like=()):
    """Wrap constants as non-differentiable tensors.

    Constants take the dtype of the first tensor found in ``like`` so that
    Python scalars never promote 32-bit graphs to 64-bit.
    """
    if isinstance(value, Tensor):
        return value
    dtype = DEFAULT_DTYPE
    for other in like:
        if isinstance(other, Tensor):
            dtype = other.dtype
            break
    return Tensor(np.asarray(value, dtype=dtype))


class CompGraph(object):
    """Recorded nodes reachable from a root, in append order.

    Args:
        nodes (list): ``Function`` nodes sorted by sequence number.
    """

    def __init__(self, nodes):
        self.nodes = list(nodes)

    def __len__(self):
        return len(self.nodes)

    @classmethod
    def from_root(cls, root):
        if root.creator is None:
            return cls([])
        found = {}
        stack = [root.creator]
        while stack:
            node = stack.pop()
            if id(node) in found:
                continue
            if node.inputs is None:
                raise GraphError('{} node #{} was already released by a '
                                 'previous backward pass'.format(
                                     node.tag, node.seq))
            found[id(node)] = node
            for operand in node.inputs:
                parent = operand.creator
                if parent is None:
                    continue
                if parent.seq >= node.seq:
                    raise GraphError('cycle detected: {} node #{} consumes '
                                     'the output of node #{}'.format(
                                         node.tag, node.seq, parent.seq))
                stack.append(parent)
        return cls(sorted(found.values(), key=lambda n: n.seq))

    def backward(self, root, grad, retain_graph=False):
        """Propagate ``grad`` (d root / d root) to every leaf ancestor."""
        pending = {}
        if root.creator is None:
            _accumulate(root, grad)
            return
        pending[id(root.creator)] = grad
        for node in reversed(self.nodes):
            out_grad = pending.pop(id(node), None)
            if out_grad is None:
                continue
            in_grads = node.backward(out_grad)
            if not isinstance(in_grads, tuple):
                in_grads = (in_grads,)
            if len(in_grads) != len(node.inputs):
                raise GraphError('{} returned {} gradients for {} '
                                 'inputs'.format(node.tag, len(in_grads),
                                                 len(node.inputs)))
            for operand, in_grad in zip(node.inputs, in_grads):
                if in_grad is None or not operand.requires_grad:
                    continue
                if in_grad.shape != operand.shape:
                    raise GraphError('{} produced a gradient of shape {} for '
                                     'an operand of shape {}'.format(
                                         node.tag, in_grad.shape,
                                         operand.shape))
                if operand.creator is None:
                    _accumulate(operand, in_grad)
                else:
                    key = id(operand.creator)
                    if key in pending:
                        pending[key] = pending[key] + in_grad
                    else:
                        pending[key] = in_grad
            if not retain_graph:
                node.inputs = None
        if pending:
            raise GraphError('{} node(s) were not visited'.format(len(pending)))


def _accumulate(leaf, grad):
    grad = np.asarray(grad, dtype=leaf.dtype)
    if leaf.grad is None:
        leaf.grad = grad.copy()
    else:
        leaf.grad = leaf.grad + grad


def backprop(root, retain_graph=False):
    """Populate ``grad`` of every ``requires_grad`` leaf ancestor of ``root``.

    Gradients accumulate additively, both across fan-out inside the graph and
    across repeated calls.

    Args:
        root (Tensor): A tensor holding exactly one element.
        retain_graph (bool): Keep the recorded operands for another pass.

    Raises:
        ShapeError: If ``root`` is not scalar-shaped.
    """
    if root.size != 1:
        raise ShapeError('backprop needs a scalar root, got shape {}'.format(
            root.shape))
    if not root.requires_grad:
        logger.debug('backprop called on a root that does not require grad')
        return
    graph = CompGraph.from_root(root)
    graph.backward(root, np.ones_like(root.data), retain_graph=retain_graph)


# elementwise and structural primitives


class Add(Function):

    def forward(self, x, y):
        self.shapes = (x.shape, y.shape)
        return x + y

    def backward(self, grad):
        return (unbroadcast(grad, self.shapes[0]),
                unbroadcast(grad, self.shapes[1]))


class Sub(Function):

    def forward(self, x, y):
        self.shapes = (x.shape, y.shape)
        return x - y

    def backward(self, grad):
        return (unbroadcast(grad, self.shapes[0]),
                unbroadcast(-grad, self.shapes[1]))


class Mul(Function):

    def forward(self, x, y):
        self.x, self.y = x, y
        return x * y

    def backward(self, grad):
        gx = gy = None
        if self.needs_input_grad[0]:
            gx = unbroadcast(grad * self.y, self.x.shape)
        if self.needs_input_grad[1]:
            gy = unbroadcast(grad * self.x, self.y.shape)
        return gx, gy


class Div(Function):

    def forward(self, x, y):
        self.x, self.y = x, y
        return x / y

    def backward(self, grad):
        gx = gy = None
        if self.needs_input_grad[0]:
            gx = unbroadcast(grad / self.y, self.x.shape)
        if self.needs_input_grad[1]:
            gy = unbroadcast(-grad * self.x / (self.y * self.y), self.y.shape)
        return gx, gy


class Neg(Function):

    def forward(self, x):
        return -x

    def backward(self, grad):
        return (-grad,)


class Pow(Function):

    def forward(self, x, exponent):
        self.x, self.exponent = x, exponent
        return np.power(x, exponent)

    def backward(self, grad):
        p = self.exponent
        return (grad * p * np.power(self.x, p - 1),)


class Abs(Function):

    def forward(self, x):
        self.sign = np.sign(x)
        return np.abs(x)

    def backward(self, grad):
        return (grad * self.sign,)


class Sum(Function):

    def forward(self, x, axis=None, keepdims=False):
        self.shape = x.shape
        self.axis, self.keepdims = axis, keepdims
        return np.asarray(x.sum(axis=axis, keepdims=keepdims))

    def backward(self, grad):
        if self.axis is not None and not self.keepdims:
            axes = self.axis if isinstance(self.axis, tuple) else (self.axis,)
            axes = sorted(a % len(self.shape) for a in axes)
            for a in axes:
                grad = np.expand_dims(grad, a)
        return (np.broadcast_to(grad, self.shape).copy(),)


class Reshape(Function):

    def forward(self, x, shape):
        self.shape = x.shape
        return x.reshape(shape)

    def backward(self, grad):
        return (grad.reshape(self.shape),)
