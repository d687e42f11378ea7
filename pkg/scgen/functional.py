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
"""Differentiable operations on rank-4 (batch, channel, height, width) tensors.

Layouts are row-major with width varying fastest. Convolution is a
cross-correlation with zero padding, computed by unfolding receptive fields
into columns (im2col) and folding the gradient back (col2im).
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from scgen.exceptions import ParameterError, ShapeError
from scgen.tensor import Function, Tensor, as_tensor


LEAKY_SLOPE = 0.2
BN_EPS = 1e-5

ACTIVATIONS = ('leaky_relu', 'relu', 'tanh', 'sigmoid', 'hardtanh')


def _check_rank4(x, name):
    if x.ndim != 4:
        raise ShapeError('{} must be rank 4 (b, c, h, w), got shape {}'.format(
            name, x.shape))


class Conv2d(Function):

    def forward(self, x, weight, bias, stride=1, pad=0):
        ks = weight.shape[2]
        xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
        windows = sliding_window_view(xp, (ks, ks), axis=(2, 3))
        windows = windows[:, :, ::stride, ::stride]
        # (b, c, ho, wo, ks, ks) x (o, c, ks, ks) -> (b, ho, wo, o)
        out = np.tensordot(windows, weight, axes=([1, 4, 5], [1, 2, 3]))
        out = out.transpose(0, 3, 1, 2) + bias.reshape(1, -1, 1, 1)
        self.x_shape, self.xp_shape = x.shape, xp.shape
        self.windows, self.weight = windows, weight
        self.stride, self.pad = stride, pad
        return np.ascontiguousarray(out)

    def backward(self, grad):
        gx = gw = gb = None
        if self.needs_input_grad[1]:
            gw = np.tensordot(grad, self.windows, axes=([0, 2, 3], [0, 2, 3]))
        if self.needs_input_grad[2]:
            gb = grad.sum(axis=(0, 2, 3))
        if self.needs_input_grad[0]:
            ks = self.weight.shape[2]
            s, p = self.stride, self.pad
            ho, wo = grad.shape[2:]
            gxp = np.zeros(self.xp_shape, dtype=grad.dtype)
            for i in range(ks):
                for j in range(ks):
                    cols = np.tensordot(grad, self.weight[:, :, i, j],
                                        axes=([1], [0]))
                    gxp[:, :, i:i + s * ho:s, j:j + s * wo:s] += \
                        cols.transpose(0, 3, 1, 2)
            h, w = self.x_shape[2:]
            gx = gxp[:, :, p:p + h, p:p + w]
        return gx, gw, gb


def conv2d(x, weight, bias=None, stride=1, pad=None):
    """2D cross-correlation of ``x`` with ``weight``.

    Args:
        x (Tensor): Input of shape (b, c_in, h, w).
        weight (Tensor): Kernel of shape (c_out, c_in, ks, ks), ``ks`` odd.
        bias (Tensor): Optional vector of length c_out.
        stride (int): Step between receptive fields.
        pad (int): Zero padding on every border. Defaults to ``(ks - 1) / 2``,
            which preserves the spatial size at stride 1.

    Returns:
        Tensor: Output of shape (b, c_out, h_out, w_out).
    """
    _check_rank4(x, 'conv2d input')
    _check_rank4(weight, 'conv2d kernel')
    c_out, c_in, kh, kw = weight.shape
    if kh != kw or kh % 2 == 0:
        raise ParameterError('conv2d needs a square kernel with odd size, '
                             'got {}x{}'.format(kh, kw))
    if x.shape[1] != c_in:
        raise ShapeError('conv2d input has {} channels but the kernel expects '
                         '{} (kernel shape {})'.format(x.shape[1], c_in,
                                                       weight.shape))
    if int(stride) < 1:
        raise ParameterError('conv2d stride must be >= 1, got {}'.format(
            stride))
    if pad is None:
        pad = (kh - 1) // 2
    if bias is None:
        bias = Tensor(np.zeros(c_out, dtype=weight.dtype))
    elif tuple(bias.shape) != (c_out,):
        raise ShapeError('conv2d bias must have shape ({},), got {}'.format(
            c_out, bias.shape))
    return Conv2d.apply(x, weight, bias, stride=int(stride), pad=int(pad))


def _source_positions(n_in, n_out):
    """Half-pixel-center source coordinates of ``n_out`` output samples."""
    scale = n_in / float(n_out)
    return (np.arange(n_out) + 0.5) * scale - 0.5, scale


def _bilinear_taps(n_in, n_out):
    src, _ = _source_positions(n_in, n_out)
    src = np.clip(src, 0, n_in - 1)
    lo = np.floor(src).astype(np.int64)
    hi = np.minimum(lo + 1, n_in - 1)
    return lo, hi, src - lo


def _nearest_index(n_in, n_out):
    src, scale = _source_positions(n_in, n_out)
    return np.minimum(np.floor(src + 0.5).astype(np.int64), n_in - 1)


def _interpolation_matrix(n_in, n_out, mode):
    m = np.zeros((n_out, n_in))
    rows = np.arange(n_out)
    if mode == 'bilinear':
        lo, hi, frac = _bilinear_taps(n_in, n_out)
        np.add.at(m, (rows, lo), 1 - frac)
        np.add.at(m, (rows, hi), frac)
    else:
        m[rows, _nearest_index(n_in, n_out)] = 1
    return m


class Resize(Function):

    def forward(self, x, out_h, out_w, mode):
        h, w = x.shape[2:]
        if mode == 'bilinear':
            lo, hi, fy = _bilinear_taps(h, out_h)
            top, bottom = x[:, :, lo, :], x[:, :, hi, :]
            rows = top + fy.astype(x.dtype).reshape(1, 1, -1, 1) * (bottom - top)
            lo, hi, fx = _bilinear_taps(w, out_w)
            left, right = rows[:, :, :, lo], rows[:, :, :, hi]
            out = left + fx.astype(x.dtype).reshape(1, 1, 1, -1) * (right - left)
        else:
            out = x[:, :, _nearest_index(h, out_h), :]
            out = out[:, :, :, _nearest_index(w, out_w)]
        self.ry = _interpolation_matrix(h, out_h, mode).astype(x.dtype)
        self.rx = _interpolation_matrix(w, out_w, mode).astype(x.dtype)
        return np.ascontiguousarray(out)

    def backward(self, grad):
        return (np.matmul(self.ry.T, np.matmul(grad, self.rx)),)


def _resize(x, out_h, out_w, mode):
    _check_rank4(x, 'resize input')
    if int(out_h) < 1 or int(out_w) < 1:
        raise ParameterError('resize target must be at least 1x1, got '
                             '{}x{}'.format(out_h, out_w))
    return Resize.apply(x, out_h=int(out_h), out_w=int(out_w), mode=mode)


def resize_bilinear(x, out_h, out_w):
    """Bilinear resize with the half-pixel-center convention.

    The source coordinate of output index ``d`` is ``(d + 0.5) * scale - 0.5``
    clamped to the valid range; constants are preserved exactly.
    """
    return _resize(x, out_h, out_w, 'bilinear')


def resize_nearest(x, out_h, out_w):
    """Nearest-neighbour resize; one-hot inputs remain one-hot."""
    return _resize(x, out_h, out_w, 'nearest')


def upsample2x(x):
    return resize_bilinear(x, x.shape[2] * 2, x.shape[3] * 2)


class Activation(Function):

    def forward(self, x, mode):
        self.mode = mode
        if mode == 'leaky_relu':
            self.x = x
            return np.where(x > 0, x, x * LEAKY_SLOPE)
        if mode == 'relu':
            self.x = x
            return np.maximum(x, 0)
        if mode == 'hardtanh':
            self.x = x
            return np.clip(x, -1, 1)
        if mode == 'tanh':
            self.y = np.tanh(x)
            return self.y
        if mode == 'sigmoid':
            self.y = 0.5 * (1 + np.tanh(0.5 * x))
            return self.y
        raise ParameterError('unknown activation {!r}, expected one of '
                             '{}'.format(mode, ACTIVATIONS))

    def backward(self, grad):
        mode = self.mode
        # at a kink the derivative is the negative-side slope
        if mode == 'leaky_relu':
            return (grad * np.where(self.x > 0, 1, LEAKY_SLOPE).astype(
                grad.dtype),)
        if mode == 'relu':
            return (grad * (self.x > 0),)
        if mode == 'hardtanh':
            return (grad * ((self.x > -1) & (self.x < 1)),)
        if mode == 'tanh':
            return (grad * (1 - self.y * self.y),)
        return (grad * self.y * (1 - self.y),)


def activation(x, mode):
    if mode not in ACTIVATIONS:
        raise ParameterError('unknown activation {!r}, expected one of '
                             '{}'.format(mode, ACTIVATIONS))
    return Activation.apply(x, mode=mode)


def leaky_relu(x):
    return activation(x, 'leaky_relu')


def relu(x):
    return activation(x, 'relu')


def hardtanh(x):
    return activation(x, 'hardtanh')


class ChannelSoftmax(Function):

    def forward(self, x, temperature):
        z = temperature * x
        z = z - z.max(axis=1, keepdims=True)
        e = np.exp(z)
        self.y = e / e.sum(axis=1, keepdims=True)
        self.temperature = temperature
        return self.y

    def backward(self, grad):
        y = self.y
        inner = (grad * y).sum(axis=1, keepdims=True)
        return (self.temperature * y * (grad - inner),)


def channel_softmax(x, temperature=1.0):
    """Softmax of ``temperature * x`` over the channel axis."""
    _check_rank4(x, 'softmax input')
    return ChannelSoftmax.apply(x, temperature=float(temperature))


def batch_moments(x, eps=BN_EPS):
    """Per-channel population mean and ``sqrt(var + eps)`` over b, h, w.

    Returns:
        tuple: ``(mean, std)``, each a differentiable vector of length c.
    """
    _check_rank4(x, 'batch_moments input')
    c = x.shape[1]
    mean = x.mean(axis=(0, 2, 3))
    centered = x - mean.reshape(1, c, 1, 1)
    var = (centered * centered).mean(axis=(0, 2, 3))
    return mean, (var + eps) ** 0.5


def standardize(x, mean, std):
    c = x.shape[1]
    return (x - as_tensor(mean, like=(x,)).reshape(1, c, 1, 1)) / \
        as_tensor(std, like=(x,)).reshape(1, c, 1, 1)


def batch_norm(x, eps=BN_EPS):
    mean, std = batch_moments(x, eps=eps)
    return standardize(x, mean, std)


class Concat(Function):

    def forward(self, *arrays, axis=1):
        self.axis = axis
        self.sizes = [a.shape[axis] for a in arrays]
        return np.concatenate(arrays, axis=axis)

    def backward(self, grad):
        splits = np.cumsum(self.sizes)[:-1]
        return tuple(np.split(grad, splits, axis=self.axis))


def concat(tensors, axis=1):
    if not tensors:
        raise ParameterError('concat needs at least one tensor')
    return Concat.apply(*tensors, axis=axis)


class Matmul(Function):

    def forward(self, x, w):
        self.x, self.w = x, w
        return x @ w

    def backward(self, grad):
        gx = gw = None
        if self.needs_input_grad[0]:
            gx = grad @ self.w.T
        if self.needs_input_grad[1]:
            gw = self.x.T @ grad
        return gx, gw


def linear(x, weight, bias=None):
    """Affine map of a batch of row vectors, ``x @ weight + bias``."""
    if x.ndim != 2 or weight.ndim != 2 or x.shape[1] != weight.shape[0]:
        raise ShapeError('linear expects (b, i) @ (i, o), got {} @ {}'.format(
            x.shape, weight.shape))
    out = Matmul.apply(x, weight)
    if bias is not None:
        out = out + bias.reshape(1, -1)
    return out


def pool_groups(channels, n):
    """Sizes of ``n`` contiguous channel groups, the first ``c mod n`` larger."""
    base, extra = divmod(channels, n)
    return [base + 1 if i < extra else base for i in range(n)]


class ChannelPool(Function):

    def forward(self, x, n):
        sizes = pool_groups(x.shape[1], n)
        pool = np.zeros((x.shape[1], n), dtype=x.dtype)
        start = 0
        for i, size in enumerate(sizes):
            pool[start:start + size, i] = 1.0 / size
            start += size
        self.pool = pool
        return np.ascontiguousarray(
            np.tensordot(x, pool, axes=([1], [0])).transpose(0, 3, 1, 2))

    def backward(self, grad):
        return (np.ascontiguousarray(np.tensordot(
            grad, self.pool, axes=([1], [1])).transpose(0, 3, 1, 2)),)


def channel_pool(x, n):
    """Average contiguous channel groups down to ``n`` channels."""
    _check_rank4(x, 'channel_pool input')
    if int(n) < 1 or x.shape[1] < int(n):
        raise ParameterError('cannot pool {} channels into n={}'.format(
            x.shape[1], n))
    return ChannelPool.apply(x, n=int(n))


def mean_abs(x, y):
    """Mean absolute difference of two equally shaped tensors."""
    if tuple(x.shape) != tuple(y.shape):
        raise ShapeError('shape mismatch {} vs {}'.format(x.shape, y.shape))
    return (x - y).abs().mean()


def mean_square(x, y):
    if tuple(x.shape) != tuple(y.shape):
        raise ShapeError('shape mismatch {} vs {}'.format(x.shape, y.shape))
    diff = x - y
    return (diff * diff).mean()
