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
"""Tests for scgen.losses"""

import numpy as np

import pytest

from scgen import losses
from scgen.discriminator import FeatureExtractor
from scgen.exceptions import ConfigError, ShapeError, ValidityError
from scgen.tensor import Tensor, backprop


def _scores(*values):
    return [Tensor(np.array(v, dtype=np.float64).reshape(1, 1, 1, -1))
            for v in values]


def test_loss_weights():
    weights = losses.LossWeights().validate()
    assert (weights.perceptual, weights.gan, weights.feature_matching,
            weights.svg) == (10.0, 1.0, 10.0, 2.0)
    for kwargs, key in [({'gan': -1}, 'loss.gan'),
                        ({'svg': float('nan')}, 'loss.svg'),
                        ({'norm_p': 3}, 'loss.norm_p'),
                        ({'svg_space': 'latent'}, 'loss.svg_space')]:
        with pytest.raises(ConfigError) as err:
            losses.LossWeights(**kwargs).validate()
        assert err.value.key == key


def test_hinge_d():
    # confident discriminator: zero loss
    assert losses.hinge_d(_scores([1.0, 2.0]), _scores([-1.0, -3.0])).item() \
        == 0

    real, fake = _scores([0.0, 0.5]), _scores([0.0, 1.0])
    # mean(1, 0.5) + mean(1, 2)
    assert losses.hinge_d(real, fake).item() == pytest.approx(0.75 + 1.5)
    assert losses.hinge_d_parts(real, fake) == pytest.approx((0.75, 1.5))

    # averaged over scales
    two_real = real + _scores([2.0])
    two_fake = fake + _scores([-2.0])
    assert losses.hinge_d(two_real, two_fake).item() == \
        pytest.approx((0.75 + 1.5) / 2)

    with pytest.raises(ShapeError):
        losses.hinge_d(two_real, fake)


def test_hinge_d_gradient():
    fake = Tensor(np.array([-2.0, 0.5]).reshape(1, 1, 1, 2),
                  requires_grad=True)
    backprop(losses.hinge_d(_scores([3.0, 3.0]), [fake]))
    np.testing.assert_allclose(fake.grad.reshape(-1), [0.0, 0.5])


def test_hinge_g():
    assert losses.hinge_g(_scores([1.0, 3.0], [-2.0])).item() == \
        pytest.approx((-2.0 + 2.0) / 2)


def test_feature_matching_loss():
    fake = [[Tensor(np.ones((1, 2, 2, 2))), Tensor(np.zeros((1, 1, 2, 2)))]]
    real = [[Tensor(np.zeros((1, 2, 2, 2))), Tensor(np.full((1, 1, 2, 2),
                                                            3.0))]]
    # layers average: (1 + 3) / 2
    assert losses.feature_matching_loss(fake, real).item() == \
        pytest.approx(2.0)
    assert losses.feature_matching_loss(real, real).item() == 0

    with pytest.raises(ShapeError):
        losses.feature_matching_loss(fake, real + real)
    with pytest.raises(ShapeError):
        losses.feature_matching_loss(fake, [real[0][:1]])


def test_feature_matching_detaches_real():
    real = Tensor(np.zeros((1, 1, 2, 2)), requires_grad=True)
    fake = Tensor(np.ones((1, 1, 2, 2)), requires_grad=True)
    backprop(losses.feature_matching_loss([[fake]], [[real]]))
    assert real.grad is None
    np.testing.assert_allclose(fake.grad, 0.25)


def test_perceptual_loss():
    rng = np.random.default_rng(0)
    extractor = FeatureExtractor(dtype=np.float64)
    real = Tensor(rng.uniform(-1, 1, (1, 3, 8, 8)))
    assert losses.perceptual_loss(real, real, extractor).item() == 0

    fake = Tensor(rng.uniform(-1, 1, (1, 3, 8, 8)), requires_grad=True)
    loss = losses.perceptual_loss(fake, real, extractor)
    expected = sum(np.abs(a.data - b.data).mean()
                   for a, b in zip(extractor(fake), extractor(real)))
    assert loss.item() == pytest.approx(expected)
    backprop(loss)
    assert fake.grad is not None

    with pytest.raises(ShapeError):
        losses.perceptual_loss(fake, Tensor(np.zeros((1, 3, 4, 4))),
                               extractor)


def test_svg_regression_loss():
    predicted = Tensor(np.array([0.0, 1.0, -1.0, 0.5]).reshape(1, 1, 2, 2))
    real = Tensor(np.zeros((1, 1, 2, 2)))
    assert losses.svg_regression_loss(predicted, real).item() == \
        pytest.approx(2.5 / 4)
    assert losses.svg_regression_loss(predicted, real, norm_p=2).item() == \
        pytest.approx(2.25 / 4)
    with pytest.raises(ConfigError):
        losses.svg_regression_loss(predicted, real, norm_p=3)

    extractor = FeatureExtractor(image_channels=1, dtype=np.float64)
    assert losses.svg_regression_loss(predicted, real,
                                      extractor=extractor).item() == \
        pytest.approx(losses.perceptual_loss(predicted, real,
                                             extractor).item())


def test_total_generator_loss():
    terms = {name: Tensor(np.array(value))
             for name, value in zip(losses.TERMS, [1.0, 2.0, 3.0, 4.0])}
    total = losses.total_generator_loss(terms, losses.LossWeights())
    assert total.item() == pytest.approx(10 + 2 + 30 + 8)

    weights = losses.LossWeights(svg=0.0)
    assert losses.total_generator_loss(terms, weights).item() == \
        pytest.approx(42)

    terms['feature_matching'] = Tensor(np.array(np.inf))
    with pytest.raises(ValidityError) as err:
        losses.total_generator_loss(terms, weights)
    assert err.value.name == 'feature_matching'
