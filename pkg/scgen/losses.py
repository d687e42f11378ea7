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
"""Loss terms of the generator and discriminator objectives.

Hinge losses follow the spectral-normalization GAN formulation:
``L_D = max(0, 1 - D(real)) + max(0, 1 + D(fake))`` and ``L_G = -D(fake)``,
each a mean over positions, averaged over discriminator scales.
"""

import dataclasses
import logging
import math

from scgen import functional as F
from scgen.exceptions import ConfigError, ShapeError, ValidityError


logger = logging.getLogger(__name__)

SVG_SPACES = ('pixel', 'perceptual')
TERMS = ('perceptual', 'gan', 'feature_matching', 'svg')


@dataclasses.dataclass
class LossWeights:
    """Trade-off weights of the generator objective."""

    perceptual: float = 10.0
    gan: float = 1.0
    feature_matching: float = 10.0
    svg: float = 2.0
    norm_p: int = 1
    svg_space: str = 'pixel'

    def validate(self):
        for term in TERMS:
            value = getattr(self, term)
            if not value >= 0:
                raise ConfigError('must be a non-negative number, got '
                                  '{}'.format(value), 'loss.' + term)
        if self.norm_p not in (1, 2):
            raise ConfigError('must be 1 or 2', 'loss.norm_p')
        if self.svg_space not in SVG_SPACES:
            raise ConfigError('must be one of {}'.format(SVG_SPACES),
                              'loss.svg_space')
        return self


def _check_aligned(a, b, what):
    if len(a) != len(b):
        raise ShapeError('{}: {} vs {} entries'.format(what, len(a), len(b)))


def _mean_over_scales(terms):
    total = terms[0]
    for term in terms[1:]:
        total = total + term
    return total * (1.0 / len(terms))


def hinge_d(real_scores, fake_scores):
    """Discriminator hinge loss, zero iff real >= 1 and fake <= -1."""
    _check_aligned(real_scores, fake_scores, 'hinge_d score lists')
    terms = [F.relu(1.0 - real).mean() + F.relu(1.0 + fake).mean()
             for real, fake in zip(real_scores, fake_scores)]
    return _mean_over_scales(terms)


def hinge_d_parts(real_scores, fake_scores):
    """The real and fake halves of ``hinge_d`` as floats, for reporting."""
    real = sum(F.relu(1.0 - s).mean().item() for s in real_scores)
    fake = sum(F.relu(1.0 + s).mean().item() for s in fake_scores)
    return real / len(real_scores), fake / len(fake_scores)


def hinge_g(fake_scores):
    """Generator hinge loss ``-D(fake)``."""
    return _mean_over_scales([(-s).mean() for s in fake_scores])


def perceptual_loss(fake, real, extractor):
    """Sum over extractor stages of the mean absolute feature difference."""
    if tuple(fake.shape) != tuple(real.shape):
        raise ShapeError('perceptual_loss shape mismatch {} vs {}'.format(
            fake.shape, real.shape))
    fake_feats = extractor(fake)
    real_feats = extractor(real.detach())
    total = None
    for a, b in zip(fake_feats, real_feats):
        term = F.mean_abs(a, b.detach())
        total = term if total is None else total + term
    return total


def feature_matching_loss(fake_feats, real_feats):
    """Layerwise L1 between discriminator features, averaged over layers
    and scales. Real features are detached."""
    _check_aligned(fake_feats, real_feats, 'feature_matching scales')
    terms = []
    for fake_scale, real_scale in zip(fake_feats, real_feats):
        _check_aligned(fake_scale, real_scale, 'feature_matching layers')
        layer_terms = [F.mean_abs(f, r.detach())
                       for f, r in zip(fake_scale, real_scale)]
        terms.append(_mean_over_scales(layer_terms))
    return _mean_over_scales(terms)


def svg_regression_loss(predicted, real, norm_p=1, extractor=None):
    """Distance between the SVG prediction and the real image.

    With an ``extractor`` the distance is measured in its feature space
    (``perceptual_loss``); otherwise it is the mean l1 (``norm_p=1``) or mean
    squared (``norm_p=2``) elementwise distance.
    """
    if extractor is not None:
        return perceptual_loss(predicted, real, extractor)
    if norm_p == 1:
        return F.mean_abs(predicted, real.detach())
    if norm_p == 2:
        return F.mean_square(predicted, real.detach())
    raise ConfigError('norm_p must be 1 or 2, got {}'.format(norm_p),
                      'loss.norm_p')


def total_generator_loss(terms, weights):
    """Weighted sum ``λp Lp + λgan Lgan + λfm Lfm + λs Ls``.

    Args:
        terms (dict): Scalar tensors keyed by ``TERMS``.
        weights (LossWeights): Trade-off weights.

    Raises:
        ValidityError: Naming the first non-finite term.
    """
    total = None
    for name in TERMS:
        term = terms[name]
        if not math.isfinite(term.item()):
            raise ValidityError('loss term is not finite ({})'.format(
                term.item()), name=name)
        weighted = term * float(getattr(weights, name))
        total = weighted if total is None else total + weighted
    return total
