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
"""Tests for scgen.nn"""

import numpy as np

import pytest

from scgen import nn
from scgen.exceptions import StateError
from scgen.tensor import Tensor, backprop


class Affine(nn.Module):

    def __init__(self, rng):
        super().__init__()
        self.linear = nn.Linear(3, 2, rng, dtype=np.float64)
        self.gain = nn.Parameter(np.ones(2))
        self.register_buffer('count', None)

    def forward(self, x):
        return self.linear(x) * self.gain


class Stack(nn.Module):

    def __init__(self, rng):
        super().__init__()
        self.first = Affine(rng)
        self.second = Affine(rng)

    def forward(self, x):
        return self.first(x) + self.second(x)


def test_module_registration():
    model = Stack(np.random.default_rng(0))
    names = [name for name, _ in model.named_parameters()]
    # a module's own parameters come before its children's
    assert names == ['first.gain', 'first.linear.weight',
                     'first.linear.bias', 'second.gain',
                     'second.linear.weight', 'second.linear.bias']
    assert model.num_parameters() == 2 * (6 + 2 + 2)
    assert [n for n, _ in model.named_modules()][:3] == \
        ['', 'first', 'first.linear']

    # empty buffers are not part of the state
    assert 'first.count' not in model.state_dict()
    model.first.count = np.array([3])
    assert 'first.count' in model.state_dict()


def test_train_eval_and_requires_grad():
    model = Stack(np.random.default_rng(0))
    model.eval()
    assert not model.training and not model.first.linear.training
    model.train()
    assert model.second.training

    model.requires_grad_(False)
    assert not any(p.requires_grad for p in model.parameters())
    model.requires_grad_(True)
    x = Tensor(np.ones((4, 3)))
    backprop(model(x).sum())
    assert all(p.grad is not None for p in model.parameters())
    model.zero_grad()
    assert all(p.grad is None for p in model.parameters())


def test_state_dict_round_trip():
    source = Stack(np.random.default_rng(0))
    source.second.count = np.array([7])
    target = Stack(np.random.default_rng(1))
    missing = target.load_state_dict(source.state_dict('m'), 'm')
    assert missing == []
    for (name, a), (_, b) in zip(source.named_parameters(),
                                 target.named_parameters()):
        np.testing.assert_array_equal(a.data, b.data, err_msg=name)
    np.testing.assert_array_equal(target.second.count, [7])

    # values are copied, not shared
    state = source.state_dict()
    target.load_state_dict(state)
    state['first.gain'][0] = 100
    assert target.first.gain.data[0] == 1


def test_load_state_dict_errors():
    model = Stack(np.random.default_rng(0))
    state = model.state_dict()
    del state['second.gain']
    with pytest.raises(StateError, match='second.gain'):
        model.load_state_dict(state)
    assert model.load_state_dict(state, strict=False) == ['second.gain']

    state = model.state_dict()
    state['first.gain'] = np.ones(5)
    with pytest.raises(StateError, match='shape'):
        model.load_state_dict(state)


def test_linear():
    layer = nn.Linear(4, 3, np.random.default_rng(2), dtype=np.float32)
    assert layer.weight.shape == (4, 3)
    assert layer.weight.dtype == np.float32
    np.testing.assert_array_equal(layer.bias.data, 0)
    out = layer(Tensor(np.ones((2, 4), dtype='float32')))
    assert out.shape == (2, 3)


def test_he_normal():
    rng = np.random.default_rng(3)
    w = nn.he_normal(rng, (200, 50), 50, np.float64)
    assert abs(w.std() - np.sqrt(2.0 / 50)) < 0.01
    assert nn.he_normal(rng, (3,), 1, np.float32, std=0).max() == 0
