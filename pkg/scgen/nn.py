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
"""Containers for learnable parameters and persistent state."""

import collections
import logging

import numpy as np

from scgen import functional as F
from scgen.exceptions import StateError
from scgen.tensor import Tensor


logger = logging.getLogger(__name__)


class Parameter(Tensor):
    """A leaf tensor that always requires gradients."""

    def __init__(self, data, dtype=None):
        super().__init__(data, requires_grad=True, dtype=dtype)


class Module(object):
    """Owns parameters, buffers and child modules under dotted names.

    Attributes assigned a ``Parameter`` or ``Module`` are registered
    automatically, in assignment order. Buffers are numpy arrays (or ``None``
    until populated) registered with ``register_buffer``.
    """

    def __init__(self):
        object.__setattr__(self, '_parameters', collections.OrderedDict())
        object.__setattr__(self, '_modules', collections.OrderedDict())
        object.__setattr__(self, '_buffers', collections.OrderedDict())
        object.__setattr__(self, 'training', True)

    def __setattr__(self, name, value):
        if isinstance(value, Parameter):
            self._parameters[name] = value
        elif isinstance(value, Module):
            self._modules[name] = value
        elif name in self._buffers:
            self._buffers[name] = value
        object.__setattr__(self, name, value)

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def forward(self, *args, **kwargs):
        raise NotImplementedError

    def register_buffer(self, name, value):
        self._buffers[name] = value
        object.__setattr__(self, name, value)

    def add_module(self, name, module):
        setattr(self, name, module)
        return module

    def children(self):
        return list(self._modules.values())

    def named_modules(self, prefix=''):
        yield prefix, self
        for name, child in self._modules.items():
            child_prefix = name if not prefix else prefix + '.' + name
            for item in child.named_modules(child_prefix):
                yield item

    def named_parameters(self, prefix=''):
        for module_name, module in self.named_modules(prefix):
            for name, param in module._parameters.items():
                yield _join(module_name, name), param

    def named_buffers(self, prefix=''):
        for module_name, module in self.named_modules(prefix):
            for name, value in module._buffers.items():
                if value is not None:
                    yield _join(module_name, name), value

    def parameters(self):
        return [p for _, p in self.named_parameters()]

    def num_parameters(self):
        return int(sum(p.size for p in self.parameters()))

    def train(self, mode=True):
        for _, module in self.named_modules():
            object.__setattr__(module, 'training', bool(mode))
        return self

    def eval(self):
        return self.train(False)

    def zero_grad(self):
        for p in self.parameters():
            p.grad = None

    def requires_grad_(self, flag=True):
        for p in self.parameters():
            p.requires_grad = bool(flag)
        return self

    def state_dict(self, prefix=''):
        """Ordered mapping of dotted names to numpy arrays."""
        state = collections.OrderedDict()
        for name, param in self.named_parameters(prefix):
            state[name] = param.data
        for name, value in self.named_buffers(prefix):
            state[name] = np.asarray(value)
        return state

    def load_state_dict(self, state, prefix='', strict=True):
        """Copy arrays from ``state`` into parameters and buffers.

        Raises:
            StateError: On shape mismatch, or with ``strict`` when names are
                missing.
        """
        missing = []
        for name, param in self.named_parameters(prefix):
            if name not in state:
                missing.append(name)
                continue
            value = np.asarray(state[name])
            if value.shape != param.shape:
                raise StateError('{} has shape {} but the stored value has '
                                 'shape {}'.format(name, param.shape,
                                                   value.shape))
            param.data = value.astype(param.dtype, copy=True)
        for module_name, module in self.named_modules(prefix):
            for name in list(module._buffers):
                key = _join(module_name, name)
                if key in state:
                    setattr(module, name, np.array(state[key], copy=True))
        if strict and missing:
            raise StateError('missing parameters: {}'.format(
                ', '.join(missing)))
        return missing


def _join(prefix, name):
    return name if not prefix else prefix + '.' + name


def he_normal(rng, shape, fan_in, dtype, std=None):
    """Normal initialization with standard deviation ``sqrt(2 / fan_in)``."""
    if std is None:
        std = np.sqrt(2.0 / fan_in)
    return (rng.standard_normal(shape) * std).astype(dtype)


class Linear(Module):
    """Affine map ``x @ weight + bias`` on a batch of row vectors."""

    def __init__(self, in_features, out_features, rng, dtype=np.float32,
                 std=None):
        super().__init__()
        self.in_features = in_features
        self.out_features = out_features
        if std is None:
            std = np.sqrt(1.0 / in_features)
        self.weight = Parameter(he_normal(
            rng, (in_features, out_features), in_features, dtype, std=std))
        self.bias = Parameter(np.zeros(out_features, dtype=dtype))

    def forward(self, x):
        return F.linear(x, self.weight, self.bias)
