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
"""Finite-difference verification of recorded gradients.

Every check runs on 64-bit tensors. Composite operations are reduced to a
scalar through a fixed random projection ``sum(R * out)`` so that every
output coordinate contributes to the checked gradient.
"""

import collections
import logging
import timeit

import numpy as np

from scgen import condops
from scgen import functional as F
from scgen import losses
from scgen.discriminator import FeatureExtractor
from scgen.exceptions import ValidityError
from scgen.generators import GeneratorConfig, ScResBlock, SemanticLayout, \
    build_from_config, sample_noise
from scgen.tensor import CHECK_DTYPE, Tensor, backprop, no_grad


logger = logging.getLogger(__name__)

DEFAULT_STEP = 1e-5
TOLERANCE = 1e-4
DEFAULT_INSTANCES = 20
MAX_COORDINATES = 16
KINK_MARGIN = 1e-3


def relative_error(a, b):
    """Elementwise ``|a - b| / max(|a|, |b|, 1e-8)``."""
    a, b = np.asarray(a, np.float64), np.asarray(b, np.float64)
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-8)


def finite_diff_check(f, x, h=DEFAULT_STEP, indices=None):
    """Compare the recorded gradient of ``f`` at ``x`` to central differences.

    Args:
        f (callable): Maps ``x`` to a scalar Tensor. It may ignore its argument
            and read ``x`` through a closure (e.g. a module parameter).
        x (Tensor): Leaf tensor with ``requires_grad``; perturbed in place and
            restored.
        h (float): Finite-difference step.
        indices (list): Flat coordinates to check; all when ``None``.

    Returns:
        float: The maximum relative error over the checked coordinates.

    Raises:
        ValidityError: If ``f`` is not finite at ``x`` or a perturbed point.
    """
    x.grad = None
    y = f(x)
    if not np.isfinite(y.item()):
        raise ValidityError('f(x) = {}'.format(y.item()), name='gradcheck')
    backprop(y)
    analytic = x.grad if x.grad is not None else np.zeros_like(x.data)
    analytic = np.array(analytic, dtype=np.float64).reshape(-1)
    if indices is None:
        indices = range(x.size)
    errors = [0.0]
    with no_grad():
        for i in indices:
            position = np.unravel_index(int(i), x.shape)
            original = x.data[position]
            x.data[position] = original + h
            plus = f(x).item()
            x.data[position] = original - h
            minus = f(x).item()
            x.data[position] = original
            if not (np.isfinite(plus) and np.isfinite(minus)):
                raise ValidityError('f is not finite near coordinate '
                                    '{}'.format(i), name='gradcheck')
            numeric = (plus - minus) / (2 * h)
            errors.append(float(relative_error(analytic[int(i)], numeric)))
    x.grad = None
    return max(errors)


# instance builders


def _tensor(rng, shape, avoid=(), scale=1.0):
    """Random float64 leaf; values closer than KINK_MARGIN to ``avoid`` move."""
    data = rng.standard_normal(shape) * scale
    for kink in avoid:
        near = np.abs(data - kink) < KINK_MARGIN
        data[near] += 4 * KINK_MARGIN
    return Tensor(data, requires_grad=True)


def _projection(rng, shape):
    return Tensor(rng.standard_normal(shape))


def _project(out, weights):
    return (out * weights).sum()


def _coordinates(rng, x):
    if x.size <= MAX_COORDINATES:
        return None
    return rng.choice(x.size, MAX_COORDINATES, replace=False)


def _check(rng, f, x):
    return finite_diff_check(f, x, indices=_coordinates(rng, x))


def _random_vectors(rng, b, n, h, w, mode='softmax'):
    raw = Tensor(rng.standard_normal((b, n, h, w)) * 20)
    return condops.semantic_gate(raw, mode).values.data


def check_conv2d(rng):
    ks = int(rng.choice([1, 3, 5]))
    stride = int(rng.integers(1, 3))
    b, c_in, c_out = (int(v) for v in rng.integers(1, 4, size=3))
    h, w = (int(v) for v in rng.integers(ks, ks + 4, size=2))
    x = _tensor(rng, (b, c_in, h, w))
    k = _tensor(rng, (c_out, c_in, ks, ks))
    bias = _tensor(rng, (c_out,))
    out_shape = F.conv2d(x, k, bias, stride=stride).shape
    r = _projection(rng, out_shape)

    def f(_):
        return _project(F.conv2d(x, k, bias, stride=stride), r)
    return max(_check(rng, f, t) for t in (x, k, bias))


def _check_resize(rng, resize):
    b, c = (int(v) for v in rng.integers(1, 3, size=2))
    h, w, oh, ow = (int(v) for v in rng.integers(1, 7, size=4))
    x = _tensor(rng, (b, c, h, w))
    r = _projection(rng, (b, c, oh, ow))
    return _check(rng, lambda t: _project(resize(t, oh, ow), r), x)


def check_resize_bilinear(rng):
    return _check_resize(rng, F.resize_bilinear)


def check_resize_nearest(rng):
    return _check_resize(rng, F.resize_nearest)


_KINKS = {'leaky_relu': (0.0,), 'relu': (0.0,), 'hardtanh': (-1.0, 1.0),
          'tanh': (), 'sigmoid': ()}


def check_activation(rng):
    worst = 0.0
    for mode in F.ACTIVATIONS:
        x = _tensor(rng, (2, 3, 4, 4), avoid=_KINKS[mode], scale=1.5)
        r = _projection(rng, x.shape)
        worst = max(worst, _check(
            rng, lambda t: _project(F.activation(t, mode), r), x))
    return worst


def check_batch_moments(rng):
    c = int(rng.integers(1, 4))
    x = _tensor(rng, (2, c, 3, 3))
    r1, r2 = _projection(rng, (c,)), _projection(rng, (c,))

    def f(t):
        mean, std = F.batch_moments(t)
        return _project(mean, r1) + _project(std, r2)
    return _check(rng, f, x)


def check_semantic_gate(rng):
    worst = 0.0
    for mode in condops.GATE_MODES:
        avoid = (0.0,) if mode == 'relu' else ()
        x = _tensor(rng, (1, 3, 3, 3), avoid=avoid, scale=10.0)
        r = _projection(rng, x.shape)
        worst = max(worst, _check(
            rng, lambda t: _project(condops.semantic_gate(t, mode).values, r),
            x))
    return worst


def check_spectral_norm(rng):
    c_out, c_in = (int(v) for v in rng.integers(1, 5, size=2))
    conv = condops.SNConv2d(c_in, c_out, 3, rng, dtype=CHECK_DTYPE)
    r = _projection(rng, conv.weight.shape)
    with condops.frozen_spectral_norm():
        return _check(rng, lambda t: _project(conv.normalized_weight(), r),
                      conv.weight)


def check_scc_forward(rng):
    n = int(rng.integers(1, 4))
    b, c_in, c_out = 1, int(rng.integers(1, 4)), int(rng.integers(1, 4))
    h, w = (int(v) for v in rng.integers(2, 5, size=2))
    bank = condops.ConvCandidateBank(c_in, c_out, n, rng, spectral=False,
                                     dtype=CHECK_DTYPE)
    for bias in bank.biases():
        bias.data = rng.standard_normal(bias.shape)
    x = _tensor(rng, (b, c_in, h, w))
    v = Tensor(_random_vectors(rng, b, n, h, w), requires_grad=True)
    r = _projection(rng, (b, c_out, h, w))

    def f(_):
        return _project(condops.scc_forward(x, v, bank), r)
    targets = [x, v, bank.raw_kernels()[0], bank.biases()[-1]]
    return max(_check(rng, f, t) for t in targets)


def check_scn_forward(rng):
    n = int(rng.integers(1, 4))
    c = int(rng.integers(1, 4))
    h, w = (int(v) for v in rng.integers(2, 5, size=2))
    bank = condops.NormCandidateBank(c, n, dtype=CHECK_DTYPE)
    bank.means.data = rng.standard_normal(bank.means.shape)
    bank.scales.data = rng.standard_normal(bank.scales.shape)
    x = _tensor(rng, (2, c, h, w))
    v = Tensor(_random_vectors(rng, 2, n, h, w), requires_grad=True)
    r = _projection(rng, x.shape)

    def f(_):
        return _project(condops.scn_forward(x, v, bank), r)
    return max(_check(rng, f, t) for t in (x, v, bank.means, bank.scales))


def check_scresblock(rng):
    n = int(rng.integers(1, 4))
    c_in, c_out = int(rng.integers(2, 4)), int(rng.integers(2, 4))
    cfg = GeneratorConfig(candidates=n)
    block = ScResBlock(c_in, c_out, cfg, rng, dtype=CHECK_DTYPE)
    for norm in (block.norm1, block.norm2):
        norm.scales.data = 0.5 * rng.standard_normal(norm.scales.shape)
        norm.means.data = 0.5 * rng.standard_normal(norm.means.shape)
    h, w = (int(v) for v in rng.integers(3, 5, size=2))
    x = _tensor(rng, (2, c_in, h, w))
    vectors = condops.SemanticVectorMap(
        Tensor(_random_vectors(rng, 2, n, h, w)))
    r = _projection(rng, (2, c_out, h, w))
    with condops.frozen_spectral_norm():
        return _check(rng, lambda t: _project(block(t, vectors), r), x)


def _score_maps(rng, count, avoid):
    return [_tensor(rng, (2, 1, 3, 3), avoid=avoid, scale=2.0)
            for _ in range(count)]


def check_losses(rng):
    worst = 0.0
    real, fake = _score_maps(rng, 2, (1.0, -1.0))
    worst = max(worst, _check(rng, lambda t: losses.hinge_d([real], [t]),
                              fake))
    worst = max(worst, _check(rng, lambda t: losses.hinge_d([t], [fake]),
                              real))
    worst = max(worst, _check(rng, lambda t: losses.hinge_g([t]), fake))

    a = _tensor(rng, (2, 3, 4, 4))
    b = Tensor(a.data + 0.1 + rng.random(a.shape))
    for p in (1, 2):
        worst = max(worst, _check(
            rng, lambda t: losses.svg_regression_loss(t, b, norm_p=p), a))

    feats_fake = [_tensor(rng, (1, 2, 2, 2)) for _ in range(2)]
    feats_real = [Tensor(t.data + 0.5) for t in feats_fake]
    worst = max(worst, _check(
        rng, lambda t: losses.feature_matching_loss(
            [feats_fake], [feats_real]), feats_fake[0]))

    extractor = FeatureExtractor(3, channels=(4, 4, 4, 4, 4),
                                 dtype=CHECK_DTYPE)
    image = _tensor(rng, (1, 3, 16, 16), scale=0.5)
    target = Tensor(np.clip(rng.standard_normal(image.shape), -1, 1))
    worst = max(worst, _check(
        rng, lambda t: losses.perceptual_loss(t, target, extractor), image))

    weights = losses.LossWeights()
    leaves = {name: _tensor(rng, (1,)) for name in losses.TERMS}

    def total(_):
        terms = {name: leaf.sum() for name, leaf in leaves.items()}
        return losses.total_generator_loss(terms, weights)
    worst = max(worst, max(_check(rng, total, leaf)
                           for leaf in leaves.values()))
    return worst


def check_end_to_end(rng):
    # output convolutions start near zero, away from the hardtanh kinks
    cfg = GeneratorConfig(resolution=8, num_classes=3, svg_channels=(4, 3),
                          svg_head_channels=4, srg_channels=(4, 3),
                          vector_taps=(0, 1), candidates=2, z_dim=4,
                          spectral_norm=False)
    seed = int(rng.integers(0, 2 ** 31))
    svg, srg = build_from_config(cfg, seed, dtype=CHECK_DTYPE)
    labels = rng.integers(0, cfg.num_classes, size=(2, 8, 8))
    layout = SemanticLayout.from_labels(labels, cfg.num_classes, CHECK_DTYPE)
    z = sample_noise(rng, 2, cfg.z_dim, CHECK_DTYPE)
    r1 = _projection(rng, (2, 3, 8, 8))
    r2 = _projection(rng, (2, 3, 8, 8))

    def f(_):
        pyramid, predicted = svg(layout)
        return _project(srg(z, pyramid), r1) + _project(predicted, r2)

    named = list(svg.named_parameters('svg')) + \
        list(srg.named_parameters('srg'))
    worst = 0.0
    for k in rng.choice(len(named), 3, replace=False):
        _, param = named[int(k)]
        index = [int(rng.integers(0, param.size))]
        # a smaller step keeps the many LReLU kinks out of reach
        worst = max(worst, finite_diff_check(f, param, h=1e-6,
                                             indices=index))
    return worst


CHECKS = collections.OrderedDict([
    ('conv2d', check_conv2d),
    ('resize_bilinear', check_resize_bilinear),
    ('resize_nearest', check_resize_nearest),
    ('activation', check_activation),
    ('batch_moments', check_batch_moments),
    ('semantic_gate', check_semantic_gate),
    ('spectral_norm', check_spectral_norm),
    ('scc_forward', check_scc_forward),
    ('scn_forward', check_scn_forward),
    ('scresblock', check_scresblock),
    ('losses', check_losses),
    ('end_to_end', check_end_to_end),
])


def run_suite(seed=0, instances=DEFAULT_INSTANCES, ops=None):
    """Run every gradient check ``instances`` times.

    Returns:
        collections.OrderedDict: Maximum relative error per operation.
    """
    results = collections.OrderedDict()
    for name, check in CHECKS.items():
        if ops is not None and name not in ops:
            continue
        start = timeit.default_timer()
        rng = np.random.default_rng([int(seed), list(CHECKS).index(name)])
        results[name] = max(check(rng) for _ in range(int(instances)))
        logger.debug('%s: max relative error %.3g over %s instances in %s s.',
                     name, results[name], instances,
                     timeit.default_timer() - start)
    return results


def failures(results, tolerance=TOLERANCE):
    return [(name, err) for name, err in results.items() if not err <= tolerance]
