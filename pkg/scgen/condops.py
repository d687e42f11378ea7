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
"""Spatially conditional operators mixed from shared weight candidates.

A semantic vector map ``V`` (b x n x h x w) holds, at every position, mixing
weights over ``n`` candidates. Spatially conditional convolution (SCC) applies
at each position the kernel ``sum_i V_i k_i``; spatially conditional
normalization (SCN) applies ``x (1 + sum_i V_i s_i) + sum_i V_i m_i`` after
batch normalization.
"""

import contextlib
import dataclasses
import logging
import threading

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from scgen import functional as F
from scgen.exceptions import ParameterError, ShapeError, StateError
from scgen.nn import Module, Parameter, he_normal
from scgen.tensor import Function, Tensor, no_grad


logger = logging.getLogger(__name__)

GATE_MODES = ('softmax', 'sigmoid', 'tanh', 'relu', 'none')
DEFAULT_TEMPERATURE = 0.05
DEFAULT_CANDIDATES = 3
SN_EPS = 1e-12
BN_MOMENTUM = 0.1

_sn_state = threading.local()


@dataclasses.dataclass
class SemanticVectorMap:
    """Per-position mixing weights over ``n`` candidates.

    Attributes:
        values (Tensor): Gated weights of shape (b, n, h, w).
        gate_mode (str): The gate that produced ``values``.
        temperature (float): Gate temperature.
    """

    values: Tensor
    gate_mode: str = 'softmax'
    temperature: float = DEFAULT_TEMPERATURE

    @property
    def n(self):
        return self.values.shape[1]

    @property
    def spatial(self):
        return tuple(self.values.shape[2:])

    def resized(self, height, width):
        """Bilinear resize, renormalized to sum 1 per position for softmax."""
        if self.spatial == (height, width):
            return self
        values = F.resize_bilinear(self.values, height, width)
        if self.gate_mode == 'softmax':
            values = values / values.sum(axis=1, keepdims=True)
        return SemanticVectorMap(values, self.gate_mode, self.temperature)


def _values(vectors):
    if isinstance(vectors, SemanticVectorMap):
        return vectors.values
    return vectors


def semantic_gate(raw, mode='softmax', temperature=DEFAULT_TEMPERATURE):
    """Normalize raw semantic vectors into mixing weights ``g(tau * v)``.

    Args:
        raw (Tensor): Unconstrained vectors of shape (b, n, h, w).
        mode (str): One of ``GATE_MODES``; ``none`` returns ``raw`` unchanged.
        temperature (float): ``tau``; smaller values give smoother weights.

    Returns:
        SemanticVectorMap: The gated map.

    Raises:
        ValidityError: If ``raw`` holds NaN or Inf.
    """
    if mode not in GATE_MODES:
        raise ParameterError('unknown gate mode {!r}, expected one of '
                             '{}'.format(mode, GATE_MODES))
    if raw.ndim != 4 or raw.shape[1] < 1:
        raise ShapeError('semantic vectors must have shape (b, n>=1, h, w), '
                         'got {}'.format(raw.shape))
    raw.check_finite('semantic_gate input')
    temperature = float(temperature)
    if mode == 'softmax':
        if temperature <= 0:
            raise ParameterError('softmax temperature must be > 0, got '
                                 '{}'.format(temperature))
        values = F.channel_softmax(raw, temperature)
    elif mode == 'none':
        values = raw
    else:
        values = F.activation(raw * temperature, mode)
    return SemanticVectorMap(values, mode, temperature)


def unit_vectors(batch, height, width, dtype=np.float32):
    """A single-candidate map of ones, which reduces SCC/SCN to static ops."""
    values = Tensor(np.ones((batch, 1, height, width), dtype=dtype))
    return SemanticVectorMap(values, 'none', 1.0)


# spectral normalization


def spectral_update_enabled():
    return not getattr(_sn_state, 'frozen', False)


@contextlib.contextmanager
def frozen_spectral_norm():
    """Context in which power iterations do not advance the stored vectors."""
    previous = getattr(_sn_state, 'frozen', False)
    _sn_state.frozen = True
    try:
        yield
    finally:
        _sn_state.frozen = previous


def _l2normalize(x, previous):
    norm = np.linalg.norm(x)
    if norm <= SN_EPS:
        return previous
    return x / norm


def spectral_normalize(weight, state, iters=1):
    """Divide ``weight`` by its estimated top singular value.

    The kernel is viewed as a c_out x (c_in * ks * ks) matrix. ``iters`` power
    iterations advance the persistent unit vectors ``state.u`` (left) and
    ``state.v`` (right); the estimate is ``sigma = u^T W v``. The division is
    guarded by ``SN_EPS``, so a zero matrix stays zero.

    Args:
        weight (Tensor): Kernel or matrix whose first axis is the output axis.
        state: Object holding the ``u`` and ``v`` numpy vectors.
        iters (int): Power iterations to run before normalizing.

    Returns:
        Tensor: The normalized weight, differentiable w.r.t. ``weight``.
    """
    matrix = weight.data.reshape(weight.shape[0], -1)
    u, v = state.u, state.v
    if u.shape != (matrix.shape[0],) or v.shape != (matrix.shape[1],):
        raise ShapeError('spectral norm vectors {} and {} do not fit a {} '
                         'matrix'.format(u.shape, v.shape, matrix.shape))
    if spectral_update_enabled():
        for _ in range(int(iters)):
            v = _l2normalize(matrix.T @ u, v)
            u = _l2normalize(matrix @ v, u)
        state.u, state.v = u, v
    outer = Tensor(np.outer(u, v).reshape(weight.shape).astype(weight.dtype))
    sigma = (weight * outer).sum()
    return weight / (sigma + SN_EPS)


class SpectralNorm(Module):
    """Persistent power-iteration vectors for one weight.

    The vectors only advance in training mode.
    """

    def __init__(self, shape, rng, iters=1):
        super().__init__()
        rows = shape[0]
        cols = int(np.prod(shape[1:]))
        self.iters = iters
        self.register_buffer('u', _l2normalize(rng.standard_normal(rows),
                                               np.ones(rows) / np.sqrt(rows)))
        self.register_buffer('v', _l2normalize(rng.standard_normal(cols),
                                               np.ones(cols) / np.sqrt(cols)))

    def forward(self, weight):
        if self.training:
            return spectral_normalize(weight, self, self.iters)
        with frozen_spectral_norm():
            return spectral_normalize(weight, self, self.iters)


class SNConv2d(Module):
    """Convolution layer whose kernel is optionally spectrally normalized."""

    def __init__(self, in_channels, out_channels, kernel_size, rng, stride=1,
                 spectral=True, bias=True, init_std=None, dtype=np.float32):
        super().__init__()
        shape = (out_channels, in_channels, kernel_size, kernel_size)
        self.stride = stride
        self.weight = Parameter(he_normal(
            rng, shape, in_channels * kernel_size ** 2, dtype, std=init_std))
        self.bias = Parameter(np.zeros(out_channels, dtype=dtype)) if bias \
            else None
        self.sn = SpectralNorm(shape, rng) if spectral else None

    def normalized_weight(self):
        return self.sn(self.weight) if self.sn is not None else self.weight

    def forward(self, x):
        return F.conv2d(x, self.normalized_weight(), self.bias,
                        stride=self.stride)


# candidate banks


class ConvCandidateBank(Module):
    """``n`` kernel candidates (c_out x c_in x ks x ks), each with a bias.

    Args:
        in_channels (int): c_in.
        out_channels (int): c_out.
        n (int): Number of candidates.
        rng (numpy.random.Generator): Source of the initial values.
        kernel_size (int): ks, odd.
        spectral (bool): Spectrally normalize every candidate.
        init_std (float): Override of the ``sqrt(2 / fan_in)`` init scale;
            0 gives zero kernels.
    """

    def __init__(self, in_channels, out_channels, n, rng, kernel_size=3,
                 spectral=True, init_std=None, dtype=np.float32):
        super().__init__()
        if n < 1:
            raise ParameterError('candidate count must be >= 1, got '
                                 '{}'.format(n))
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = kernel_size
        self.n = n
        shape = (out_channels, in_channels, kernel_size, kernel_size)
        fan_in = in_channels * kernel_size ** 2
        for i in range(n):
            setattr(self, 'kernel_{}'.format(i),
                    Parameter(he_normal(rng, shape, fan_in, dtype,
                                        std=init_std)))
            setattr(self, 'bias_{}'.format(i),
                    Parameter(np.zeros(out_channels, dtype=dtype)))
            if spectral:
                setattr(self, 'sn_{}'.format(i), SpectralNorm(shape, rng))
        self.spectral = spectral

    def raw_kernels(self):
        return [getattr(self, 'kernel_{}'.format(i)) for i in range(self.n)]

    def kernels(self):
        """Candidate kernels as used by the forward pass."""
        kernels = self.raw_kernels()
        if not self.spectral:
            return kernels
        return [getattr(self, 'sn_{}'.format(i))(k)
                for i, k in enumerate(kernels)]

    def biases(self):
        return [getattr(self, 'bias_{}'.format(i)) for i in range(self.n)]


class NormCandidateBank(Module):
    """``n`` shift (``m_i``) and scale (``s_i``) candidates over c channels.

    Both start at zero, so the effective affine is scale 1, shift 0. Running
    statistics are ``None`` until the first batch-statistics pass.
    """

    def __init__(self, channels, n, dtype=np.float32, eps=F.BN_EPS,
                 momentum=BN_MOMENTUM):
        super().__init__()
        if n < 1:
            raise ParameterError('candidate count must be >= 1, got '
                                 '{}'.format(n))
        self.channels = channels
        self.n = n
        self.eps = eps
        self.momentum = momentum
        self.means = Parameter(np.zeros((n, channels), dtype=dtype))
        self.scales = Parameter(np.zeros((n, channels), dtype=dtype))
        self.register_buffer('running_mean', None)
        self.register_buffer('running_var', None)

    def update_running(self, mean, var):
        if self.running_mean is None:
            self.running_mean = mean.astype(np.float64)
            self.running_var = var.astype(np.float64)
            return
        m = self.momentum
        self.running_mean = (1 - m) * self.running_mean + m * mean
        self.running_var = (1 - m) * self.running_var + m * var


class MixCandidates(Function):
    """out[:, o] = sum_i V[:, i] * y[:, i * c_out + o]."""

    def forward(self, y, v, n):
        b, nc, h, w = y.shape
        self.y5 = y.reshape(b, n, nc // n, h, w)
        self.v = v
        return (self.y5 * v[:, :, None]).sum(axis=1)

    def backward(self, grad):
        gy = gv = None
        if self.needs_input_grad[0]:
            gy = (self.v[:, :, None] * grad[:, None]).reshape(
                self.y5.shape[0], -1, *grad.shape[2:])
        if self.needs_input_grad[1]:
            gv = (grad[:, None] * self.y5).sum(axis=2)
        return gy, gv


class MixAffine(Function):
    """out[:, c] = sum_i V[:, i] * A[i, c]."""

    def forward(self, v, a):
        self.v, self.a = v, a
        return np.ascontiguousarray(
            np.tensordot(v, a, axes=([1], [0])).transpose(0, 3, 1, 2))

    def backward(self, grad):
        gv = ga = None
        if self.needs_input_grad[0]:
            gv = np.ascontiguousarray(np.tensordot(
                grad, self.a, axes=([1], [1])).transpose(0, 3, 1, 2))
        if self.needs_input_grad[1]:
            ga = np.tensordot(self.v, grad, axes=([0, 2, 3], [0, 2, 3]))
        return gv, ga


def _check_vectors(features, values, n):
    if values.ndim != 4 or values.shape[0] != features.shape[0]:
        raise ShapeError('semantic vectors of shape {} do not match features '
                         'of shape {}'.format(values.shape, features.shape))
    if values.shape[1] != n:
        raise ParameterError('semantic vectors carry {} channels but the bank '
                             'has n={} candidates'.format(values.shape[1], n))
    if tuple(values.shape[2:]) != tuple(features.shape[2:]):
        raise ShapeError('semantic vectors are {}x{} but features are '
                         '{}x{}'.format(*(tuple(values.shape[2:]) +
                                          tuple(features.shape[2:]))))


def scc_forward(features, vectors, bank):
    """Spatially conditional convolution, computed as ``n`` convolutions.

    Each candidate convolution ``k_i * F + b_i`` is weighted per position by
    channel ``i`` of ``V`` and the results are summed. By linearity this equals
    convolving every position with its own mixed kernel.

    Args:
        features (Tensor): F of shape (b, c_in, h, w).
        vectors (SemanticVectorMap): V with h x w matching F.
        bank (ConvCandidateBank): The shared candidates.

    Returns:
        Tensor: Shape (b, c_out, h, w).
    """
    values = _values(vectors)
    _check_vectors(features, values, bank.n)
    kernels = F.concat(bank.kernels(), axis=0)
    biases = F.concat(bank.biases(), axis=0)
    stacked = F.conv2d(features, kernels, biases)
    return MixCandidates.apply(stacked, values, n=bank.n)


def scc_reference(features, vectors, bank):
    """Literal per-position mixed-kernel convolution (forward only, float64).

    At each output position (r, c) the kernel ``sum_i V[r, c, i] k_i`` and
    bias ``sum_i V[r, c, i] b_i`` are formed and applied to the receptive
    field. Intended as an oracle for ``scc_forward``.
    """
    values = _values(vectors)
    _check_vectors(features, values, bank.n)
    with no_grad(), frozen_spectral_norm():
        kernels = np.stack([k.data for k in bank.kernels()]).astype(np.float64)
        biases = np.stack([b.data for b in bank.biases()]).astype(np.float64)
    ks = bank.kernel_size
    pad = (ks - 1) // 2
    x = features.data.astype(np.float64)
    v = values.data.astype(np.float64)
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    windows = sliding_window_view(xp, (ks, ks), axis=(2, 3))
    mixed_kernels = np.einsum('bnhw,nocij->bhwocij', v, kernels)
    mixed_biases = np.einsum('bnhw,no->bohw', v, biases)
    out = np.einsum('bchwij,bhwocij->bohw', windows, mixed_kernels)
    return Tensor(out + mixed_biases, dtype=np.float64)


def scn_forward(features, vectors, bank, stats='batch'):
    """Spatially conditional normalization.

    Normalizes F per channel, then applies ``x (1 + s_hat) + m_hat`` where
    ``s_hat`` and ``m_hat`` are the V-weighted candidate mixtures at each
    position.

    Args:
        features (Tensor): F of shape (b, c, h, w).
        vectors (SemanticVectorMap): V with h x w matching F.
        bank (NormCandidateBank): Candidates of length c.
        stats (str): ``batch`` to use (and track) batch moments, ``running``
            to use the tracked running moments.

    Raises:
        StateError: In running mode before any statistics were tracked.
    """
    values = _values(vectors)
    _check_vectors(features, values, bank.n)
    if features.shape[1] != bank.channels:
        raise ShapeError('features have {} channels but the bank expects '
                         '{}'.format(features.shape[1], bank.channels))
    if stats == 'batch':
        mean, std = F.batch_moments(features, eps=bank.eps)
        x = features.data
        var = x.var(axis=(0, 2, 3), dtype=np.float64)
        bank.update_running(mean.data.astype(np.float64), var)
        normalized = F.standardize(features, mean, std)
    elif stats == 'running':
        if bank.running_mean is None:
            raise StateError('running statistics requested before any were '
                             'tracked; run a batch-statistics pass first')
        dtype = features.dtype
        mean = bank.running_mean.astype(dtype)
        std = np.sqrt(bank.running_var + bank.eps).astype(dtype)
        normalized = F.standardize(features, mean, std)
    else:
        raise ParameterError('stats must be batch or running, got '
                             '{!r}'.format(stats))
    scale = MixAffine.apply(values, bank.scales)
    shift = MixAffine.apply(values, bank.means)
    return normalized * (scale + 1.0) + shift


