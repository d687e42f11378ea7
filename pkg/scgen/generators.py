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
"""Semantic vector generator (SVG) and semantic render generator (SRG).

SVG encodes a one-hot layout in cascaded-refinement form: each stage sees the
layout at its own scale (concatenated with the upsampled features of the
previous stage), and the output of its second convolution is pooled over
channels to ``n`` and gated into one level of the semantic vector pyramid. A
final head predicts an image directly from the layout.

SRG renders a noise vector through residual blocks built from spatially
conditional convolution and normalization, each parameterized by one pyramid
level resized to the block's resolution.
"""

import dataclasses
import logging

import numpy as np

from scgen import condops
from scgen import functional as F
from scgen.exceptions import ConfigError, ParameterError, ShapeError, \
    ValidityError
from scgen.nn import Linear, Module
from scgen.tensor import Tensor


logger = logging.getLogger(__name__)

CONV_MODES = ('scc', 'conv')
NORM_MODES = ('scn', 'batch')


@dataclasses.dataclass
class GeneratorConfig:
    """Architecture of SVG and SRG.

    ``svg_channels`` lists the width of each SVG stage (one pyramid level per
    stage), ``srg_channels`` the output width of each SRG residual block and
    ``vector_taps`` the pyramid level (0-based) feeding each block.
    """

    resolution: int = 32
    num_classes: int = 4
    svg_channels: tuple = (32, 32, 16)
    svg_head_channels: int = 16
    srg_channels: tuple = (64, 32, 16)
    vector_taps: tuple = (0, 1, 2)
    candidates: int = condops.DEFAULT_CANDIDATES
    temperature: float = condops.DEFAULT_TEMPERATURE
    gate_mode: str = 'softmax'
    z_dim: int = 256
    kernel_size: int = 3
    image_channels: int = 3
    conv_mode: str = 'scc'
    norm_mode: str = 'scn'
    spectral_norm: bool = True
    output_init_std: float = 1e-3

    def __post_init__(self):
        self.svg_channels = tuple(int(c) for c in self.svg_channels)
        self.srg_channels = tuple(int(c) for c in self.srg_channels)
        self.vector_taps = tuple(int(t) for t in self.vector_taps)

    @property
    def svg_stages(self):
        return len(self.svg_channels)

    @property
    def srg_blocks(self):
        return len(self.srg_channels)

    @property
    def initial_grid(self):
        return self.resolution // 2 ** self.srg_blocks

    def level_size(self, t):
        return self.resolution // 2 ** (self.svg_stages - 1 - t)

    def validate(self):
        """Raise ``ConfigError`` naming the first inconsistent field."""
        section = 'generator.'
        if self.resolution < 1:
            raise ConfigError('must be >= 1', section + 'resolution')
        if self.num_classes < 2:
            raise ConfigError('needs at least 2 classes',
                              section + 'num_classes')
        if not self.svg_channels:
            raise ConfigError('needs at least one stage',
                              section + 'svg_channels')
        if not self.srg_channels:
            raise ConfigError('needs at least one block',
                              section + 'srg_channels')
        if self.resolution % 2 ** self.svg_stages:
            raise ConfigError('resolution {} is not divisible by 2^{} for {} '
                              'SVG stages'.format(self.resolution,
                                                  self.svg_stages,
                                                  self.svg_stages),
                              section + 'resolution')
        if self.resolution % 2 ** self.srg_blocks:
            raise ConfigError('resolution {} is not divisible by 2^{} for {} '
                              'SRG blocks'.format(self.resolution,
                                                  self.srg_blocks,
                                                  self.srg_blocks),
                              section + 'resolution')
        if self.candidates < 1:
            raise ConfigError('must be >= 1', section + 'candidates')
        if min(self.svg_channels) < self.candidates:
            raise ConfigError('every SVG stage needs at least n={} channels '
                              'for channel pooling'.format(self.candidates),
                              section + 'svg_channels')
        if len(self.vector_taps) != self.srg_blocks:
            raise ConfigError('{} taps given for {} SRG blocks'.format(
                len(self.vector_taps), self.srg_blocks),
                section + 'vector_taps')
        for tap in self.vector_taps:
            if not 0 <= tap < self.svg_stages:
                raise ConfigError('tap {} outside the {} pyramid levels'.format(
                    tap, self.svg_stages), section + 'vector_taps')
        if self.gate_mode not in condops.GATE_MODES:
            raise ConfigError('must be one of {}'.format(condops.GATE_MODES),
                              section + 'gate_mode')
        if self.temperature <= 0:
            raise ConfigError('must be > 0', section + 'temperature')
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise ConfigError('must be odd', section + 'kernel_size')
        if self.z_dim < 1:
            raise ConfigError('must be >= 1', section + 'z_dim')
        if self.conv_mode not in CONV_MODES:
            raise ConfigError('must be one of {}'.format(CONV_MODES),
                              section + 'conv_mode')
        if self.norm_mode not in NORM_MODES:
            raise ConfigError('must be one of {}'.format(NORM_MODES),
                              section + 'norm_mode')
        return self


@dataclasses.dataclass
class SemanticLayout:
    """One-hot label map of shape (b, c_sem, h, w)."""

    values: Tensor

    @property
    def class_count(self):
        return self.values.shape[1]

    @property
    def batch(self):
        return self.values.shape[0]

    @property
    def spatial(self):
        return tuple(self.values.shape[2:])

    @classmethod
    def from_labels(cls, labels, class_count, dtype=np.float32):
        """Build a layout from integer labels of shape (b, h, w)."""
        labels = np.asarray(labels)
        if labels.ndim == 2:
            labels = labels[None]
        if labels.min() < 0 or labels.max() >= class_count:
            raise ValidityError('labels must lie in [0, {}), found range '
                                '[{}, {}]'.format(class_count, labels.min(),
                                                  labels.max()))
        onehot = np.eye(class_count, dtype=dtype)[labels]
        return cls(Tensor(np.ascontiguousarray(onehot.transpose(0, 3, 1, 2))))

    def labels(self):
        return self.values.data.argmax(axis=1)

    def resized(self, height, width):
        return SemanticLayout(F.resize_nearest(self.values, height, width))

    def validate(self):
        values = self.values.data
        if values.ndim != 4:
            raise ShapeError('layout must be rank 4, got {}'.format(
                values.shape))
        if not np.all((values == 0) | (values == 1)) or \
                not np.all(values.sum(axis=1) == 1):
            raise ValidityError('layout is not one-hot')
        return self


@dataclasses.dataclass
class SemanticVectorPyramid:
    """Gate maps from coarse to fine, spatial size doubling per level."""

    levels: list

    def __len__(self):
        return len(self.levels)

    def __getitem__(self, t):
        return self.levels[t]


def channel_pool_to_n(features, n):
    """Average ``c`` channels down to ``n`` contiguous groups.

    Group sizes are as equal as possible, the first ``c mod n`` groups being
    one larger.

    Raises:
        ParameterError: If ``c < n``.
    """
    return F.channel_pool(features, n)


class SemanticVectorGenerator(Module):
    """SVG: layout -> (semantic vector pyramid, predicted image)."""

    def __init__(self, cfg, rng, dtype=np.float32):
        super().__init__()
        self.cfg = cfg
        ks = cfg.kernel_size
        spectral = cfg.spectral_norm
        previous = 0
        for t, width in enumerate(cfg.svg_channels):
            self.add_module('stage{}_conv_a'.format(t), condops.SNConv2d(
                cfg.num_classes + previous, width, ks, rng,
                spectral=spectral, dtype=dtype))
            self.add_module('stage{}_conv_b'.format(t), condops.SNConv2d(
                width, width, ks, rng, spectral=spectral, dtype=dtype))
            previous = width
        self.head_conv_a = condops.SNConv2d(
            cfg.num_classes + previous, cfg.svg_head_channels, ks, rng,
            spectral=spectral, dtype=dtype)
        self.head_conv_b = condops.SNConv2d(
            cfg.svg_head_channels, cfg.image_channels, ks, rng,
            spectral=spectral, init_std=cfg.output_init_std, dtype=dtype)

    def forward(self, layout):
        return svg_forward(layout, self)


class ScResBlock(Module):
    """Residual block: (SCN -> LReLU -> SCC) x 2 plus an identity/1x1 skip."""

    def __init__(self, in_channels, out_channels, cfg, rng, dtype=np.float32):
        super().__init__()
        conv_n = cfg.candidates if cfg.conv_mode == 'scc' else 1
        norm_n = cfg.candidates if cfg.norm_mode == 'scn' else 1
        ks = cfg.kernel_size
        spectral = cfg.spectral_norm
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.norm1 = condops.NormCandidateBank(in_channels, norm_n, dtype=dtype)
        self.conv1 = condops.ConvCandidateBank(
            in_channels, out_channels, conv_n, rng, kernel_size=ks,
            spectral=spectral, dtype=dtype)
        self.norm2 = condops.NormCandidateBank(out_channels, norm_n,
                                               dtype=dtype)
        self.conv2 = condops.ConvCandidateBank(
            out_channels, out_channels, conv_n, rng, kernel_size=ks,
            spectral=spectral, dtype=dtype)
        if in_channels != out_channels:
            self.skip = condops.ConvCandidateBank(
                in_channels, out_channels, conv_n, rng, kernel_size=1,
                spectral=spectral, dtype=dtype)
        else:
            self.skip = None

    def forward(self, features, vectors):
        return scresblock_forward(features, vectors, self)


def _vectors_for(bank, vectors, features):
    if bank.n == 1 and vectors.n != 1:
        b, _, h, w = features.shape
        return condops.unit_vectors(b, h, w, dtype=features.dtype)
    return vectors


def scresblock_forward(features, vectors, block):
    """Apply one ``ScResBlock``.

    ``vectors`` must already be resized to the spatial size of ``features``.
    Batch statistics are used in training mode, running statistics otherwise.
    """
    if features.shape[1] != block.in_channels:
        raise ShapeError('block expects {} input channels, got {}'.format(
            block.in_channels, features.shape[1]))
    if block.skip is None and block.in_channels != block.out_channels:
        raise ConfigError('{} -> {} channels needs a skip convolution'.format(
            block.in_channels, block.out_channels))
    stats = 'batch' if block.training else 'running'
    norm_v = _vectors_for(block.norm1, vectors, features)
    conv_v = _vectors_for(block.conv1, vectors, features)
    x = condops.scn_forward(features, norm_v, block.norm1, stats=stats)
    x = condops.scc_forward(F.leaky_relu(x), conv_v, block.conv1)
    x = condops.scn_forward(x, norm_v, block.norm2, stats=stats)
    x = condops.scc_forward(F.leaky_relu(x), conv_v, block.conv2)
    if block.skip is None:
        return x + features
    return x + condops.scc_forward(features, conv_v, block.skip)


class SemanticRenderGenerator(Module):
    """SRG: (z, pyramid) -> image in [-1, 1]."""

    def __init__(self, cfg, rng, dtype=np.float32):
        super().__init__()
        self.cfg = cfg
        grid = cfg.initial_grid
        first = cfg.srg_channels[0]
        self.project = Linear(cfg.z_dim, first * grid * grid, rng, dtype=dtype)
        previous = first
        for j, width in enumerate(cfg.srg_channels):
            self.add_module('block{}'.format(j),
                            ScResBlock(previous, width, cfg, rng, dtype=dtype))
            previous = width
        self.output_conv = condops.SNConv2d(
            previous, cfg.image_channels, cfg.kernel_size, rng,
            spectral=cfg.spectral_norm, init_std=cfg.output_init_std,
            dtype=dtype)

    def forward(self, z, pyramid):
        return srg_forward(z, pyramid, self)


def svg_forward(layout, svg):
    """Encode ``layout``; returns ``(pyramid, predicted_image)``."""
    cfg = svg.cfg
    values = layout.values
    if layout.class_count != cfg.num_classes:
        raise ShapeError('layout has {} classes, the generator expects '
                         '{}'.format(layout.class_count, cfg.num_classes))
    if layout.spatial != (cfg.resolution, cfg.resolution):
        raise ShapeError('layout is {}x{}, the generator expects '
                         '{}x{}'.format(*(layout.spatial + (
                             cfg.resolution, cfg.resolution))))
    base = cfg.resolution // 2 ** cfg.svg_stages
    features = None
    levels = []
    for t in range(cfg.svg_stages):
        size = base * 2 ** t
        scaled = F.resize_nearest(values, size, size)
        if features is None:
            x = scaled
        else:
            x = F.leaky_relu(F.concat([features, scaled]))
        x = F.leaky_relu(getattr(svg, 'stage{}_conv_a'.format(t))(x))
        tap = getattr(svg, 'stage{}_conv_b'.format(t))(x)
        features = F.upsample2x(tap)
        raw = F.upsample2x(channel_pool_to_n(tap, cfg.candidates))
        levels.append(condops.semantic_gate(raw, cfg.gate_mode,
                                            cfg.temperature))
    x = F.leaky_relu(F.concat([features, values]))
    x = F.leaky_relu(svg.head_conv_a(x))
    predicted = F.hardtanh(svg.head_conv_b(x))
    return SemanticVectorPyramid(levels), predicted


def srg_forward(z, pyramid, srg):
    """Render noise ``z`` (b x z_dim) conditioned on ``pyramid``."""
    cfg = srg.cfg
    if z.ndim != 2 or z.shape[1] != cfg.z_dim:
        raise ParameterError('z must have shape (b, {}), got {}'.format(
            cfg.z_dim, z.shape))
    if len(pyramid) != cfg.svg_stages:
        raise ShapeError('pyramid has {} levels, expected {}'.format(
            len(pyramid), cfg.svg_stages))
    batch = z.shape[0]
    grid = cfg.initial_grid
    x = srg.project(z).reshape(batch, cfg.srg_channels[0], grid, grid)
    for j, tap in enumerate(cfg.vector_taps):
        size = x.shape[2]
        vectors = pyramid[tap].resized(size, size)
        x = getattr(srg, 'block{}'.format(j))(x, vectors)
        x = F.upsample2x(x)
    return F.hardtanh(srg.output_conv(x))


def sample_noise(rng, batch, z_dim, dtype=np.float32):
    """Standard normal noise vectors."""
    return Tensor(rng.standard_normal((batch, z_dim)).astype(dtype))


def build_from_config(cfg, seed, dtype=np.float32):
    """Initialize SVG and SRG deterministically from ``seed``.

    Returns:
        tuple: ``(SemanticVectorGenerator, SemanticRenderGenerator)``.
    """
    cfg.validate()
    rng = np.random.default_rng(seed)
    svg = SemanticVectorGenerator(cfg, rng, dtype=dtype)
    srg = SemanticRenderGenerator(cfg, rng, dtype=dtype)
    logger.debug('Built generators with %s + %s parameters.',
                 svg.num_parameters(), srg.num_parameters())
    return svg, srg
