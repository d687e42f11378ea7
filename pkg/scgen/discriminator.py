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
"""Two-scale patch discriminator and the fixed perceptual feature extractor."""

import dataclasses
import logging
import zlib

import numpy as np

from scgen import condops
from scgen import functional as F
from scgen.exceptions import ConfigError, ShapeError, StateError
from scgen.nn import Module


logger = logging.getLogger(__name__)

PERCEPTUAL_SEED_NAME = 'scgen-perceptual-v1'
PERCEPTUAL_CHANNELS = (16, 32, 32, 64, 64)


@dataclasses.dataclass
class DiscriminatorConfig:
    """Widths of the strided convolution stack of every scale branch."""

    base_channels: int = 32
    depth: int = 3
    scales: int = 2
    max_channels: int = 512

    def channels(self):
        return [min(self.base_channels * 2 ** k, self.max_channels)
                for k in range(self.depth)]

    def validate(self):
        if self.base_channels < 1:
            raise ConfigError('must be >= 1', 'discriminator.base_channels')
        if self.depth < 1:
            raise ConfigError('must be >= 1', 'discriminator.depth')
        if self.scales < 1:
            raise ConfigError('must be >= 1', 'discriminator.scales')
        return self


class PatchBranch(Module):
    """Strided convolutions, a patch score head and a semantics embedding.

    The layout, resized to the last feature map, is embedded by a 1x1
    convolution and its per-position inner product with the features is added
    to the score.
    """

    def __init__(self, image_channels, num_classes, cfg, rng,
                 dtype=np.float32):
        super().__init__()
        previous = image_channels
        widths = cfg.channels()
        for k, width in enumerate(widths):
            self.add_module('conv{}'.format(k), condops.SNConv2d(
                previous, width, 3, rng, stride=2, dtype=dtype))
            previous = width
        self.depth = len(widths)
        self.score = condops.SNConv2d(previous, 1, 3, rng, dtype=dtype)
        self.embed = condops.SNConv2d(num_classes, previous, 1, rng,
                                      bias=False, dtype=dtype)

    def forward(self, image, layout_values):
        features = []
        x = image
        for k in range(self.depth):
            x = F.leaky_relu(getattr(self, 'conv{}'.format(k))(x))
            features.append(x)
        h, w = x.shape[2:]
        embedded = self.embed(F.resize_nearest(layout_values, h, w))
        projection = (embedded * x).sum(axis=1, keepdims=True)
        return self.score(x) + projection, features


class Discriminator(Module):
    """Multi-scale patch discriminator conditioned on the layout.

    Branch ``k`` sees the image bilinearly downsampled by ``2^k``.
    """

    def __init__(self, image_channels, num_classes, cfg, rng,
                 dtype=np.float32):
        super().__init__()
        cfg.validate()
        self.cfg = cfg
        for k in range(cfg.scales):
            self.add_module('scale{}'.format(k), PatchBranch(
                image_channels, num_classes, cfg, rng, dtype=dtype))

    def forward(self, image, layout):
        return discriminator_forward(image, layout, self)


def discriminator_forward(image, layout, disc):
    """Score ``image`` against ``layout`` at every scale.

    Returns:
        tuple: ``(scores, features)``; one score map and one list of
        intermediate feature maps per scale.
    """
    values = getattr(layout, 'values', layout)
    if tuple(image.shape[2:]) != tuple(values.shape[2:]) or \
            image.shape[0] != values.shape[0]:
        raise ShapeError('image {} and layout {} do not match'.format(
            image.shape, values.shape))
    scores, features = [], []
    for k in range(disc.cfg.scales):
        if k:
            h, w = image.shape[2:]
            scale = 2 ** k
            x = F.resize_bilinear(image, max(h // scale, 1),
                                  max(w // scale, 1))
        else:
            x = image
        score, feats = getattr(disc, 'scale{}'.format(k))(x, values)
        scores.append(score)
        features.append(feats)
    return scores, features


def named_seed(name):
    """Stable integer seed derived from a name."""
    return zlib.crc32(name.encode('utf-8'))


class FeatureExtractor(Module):
    """Fixed five-stage convolution pyramid used for perceptual distances.

    Stage 0 keeps the resolution, every later stage halves it. Weights come
    from a seed derived from ``seed_name`` or from an external weight file and
    never receive gradients.

    Args:
        image_channels (int): Channels of the input images.
        seed_name (str): Name hashed into the initialization seed.
        activation (str): Nonlinearity after every stage, or ``None`` for the
            purely linear variant.
        weights (dict): Optional mapping of ``stage{i}.weight`` and
            ``stage{i}.bias`` to arrays, overriding the seeded weights.
    """

    def __init__(self, image_channels=3, seed_name=PERCEPTUAL_SEED_NAME,
                 channels=PERCEPTUAL_CHANNELS, activation='relu',
                 weights=None, dtype=np.float32):
        super().__init__()
        rng = np.random.default_rng(named_seed(seed_name))
        previous = image_channels
        for i, width in enumerate(channels):
            self.add_module('stage{}'.format(i), condops.SNConv2d(
                previous, width, 3, rng, stride=1 if i == 0 else 2,
                spectral=False, dtype=dtype))
            previous = width
        self.stages = len(channels)
        self.activation = activation
        if weights is not None:
            missing = self.load_state_dict(weights, strict=False)
            if missing:
                raise StateError('perceptual weights are missing {}'.format(
                    ', '.join(missing)))
        self.requires_grad_(False)
        self.eval()

    @property
    def feature_dim(self):
        return getattr(self, 'stage{}'.format(self.stages - 1)).weight.shape[0]

    def forward(self, image):
        outputs = []
        x = image
        for i in range(self.stages):
            x = getattr(self, 'stage{}'.format(i))(x)
            if self.activation is not None:
                x = F.activation(x, self.activation)
            outputs.append(x)
        return outputs

    def pooled(self, image):
        """Global-average-pooled final stage, shape (b, feature_dim)."""
        final = self(image)[-1].data
        return final.mean(axis=(2, 3)).astype(np.float64)
