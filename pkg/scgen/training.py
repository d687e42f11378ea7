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
"""Adversarial training of the generators against the discriminator.

Every step updates the discriminator once on a generator output computed
without recording a graph, then updates both generators once through a fresh
forward pass. Learning rates follow the two time-scale rule and decay
linearly to zero over the second half of training.
"""

import collections
import csv
import dataclasses
import logging
import math
import os
import timeit

import numpy as np

from scgen import io
from scgen import losses
from scgen.discriminator import Discriminator, FeatureExtractor
from scgen.exceptions import ConfigError, ShapeError, StateError, \
    ValidityError
from scgen.generators import build_from_config, sample_noise
from scgen.synthdata import BatchStream
from scgen.tensor import no_grad


logger = logging.getLogger(__name__)

METRIC_COLUMNS = ('step', 'lr_g', 'lr_d', 'd_real', 'd_fake', 'd_total',
                  'g_perceptual', 'g_gan', 'g_fm', 'g_svg', 'g_total')

_DISCRIMINATOR_STREAM = 1
_SAMPLE_STREAM = 2


@dataclasses.dataclass
class TrainConfig:
    """Optimization schedule of one run.

    ``decay_start`` defaults to half of ``total_steps``. When ``epochs`` is
    set it replaces ``total_steps`` once the dataset size is known.
    """

    lr_g: float = 1e-4
    lr_d: float = 4e-4
    beta1: float = 0.0
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int = 8
    total_steps: int = 500
    epochs: int = None
    decay_start: int = None
    seed: int = 17
    checkpoint_every: int = 250
    sample_every: int = 100
    sample_count: int = 4
    log_every: int = 10
    prefetch: int = 2
    check_finite: bool = False
    perceptual_weights_path: str = None

    def decay_step(self):
        if self.decay_start is None:
            return self.total_steps // 2
        return self.decay_start

    def resolve_steps(self, samples):
        """Fix ``total_steps`` from ``epochs`` for a dataset of ``samples``."""
        if self.epochs is not None:
            per_epoch = samples // self.batch_size
            self.total_steps = int(self.epochs) * per_epoch
        return self

    def validate(self):
        section = 'train.'
        if not self.lr_g > 0:
            raise ConfigError('must be > 0', section + 'lr_g')
        if not self.lr_d >= self.lr_g:
            raise ConfigError('must be >= lr_g ({})'.format(self.lr_g),
                              section + 'lr_d')
        if not 0 <= self.beta1 < 1:
            raise ConfigError('must lie in [0, 1)', section + 'beta1')
        if not 0 <= self.beta2 < 1:
            raise ConfigError('must lie in [0, 1)', section + 'beta2')
        if self.batch_size < 1:
            raise ConfigError('must be >= 1', section + 'batch_size')
        if self.total_steps < 0:
            raise ConfigError('must be >= 0', section + 'total_steps')
        if self.epochs is not None and self.epochs < 1:
            raise ConfigError('must be >= 1', section + 'epochs')
        if not 0 <= self.decay_step() <= self.total_steps:
            raise ConfigError('must lie in [0, total_steps]',
                              section + 'decay_start')
        for key in ('checkpoint_every', 'sample_every', 'log_every'):
            if getattr(self, key) < 1:
                raise ConfigError('must be >= 1', section + key)
        return self


def lr_at(step, cfg):
    """Learning rates ``(lr_g, lr_d)`` at ``step``.

    Full rates before the decay start, then linear to 0 at ``total_steps``.
    """
    start, total = cfg.decay_step(), cfg.total_steps
    if step < start:
        factor = 1.0
    elif total <= start:
        factor = 0.0
    else:
        factor = max(0.0, (total - step) / float(total - start))
    return cfg.lr_g * factor, cfg.lr_d * factor


class AdamState(object):
    """First and second moments per parameter, plus the step counter."""

    def __init__(self, params, beta1=0.0, beta2=0.999, eps=1e-8):
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = [np.zeros_like(p.data) for p in params]
        self.v = [np.zeros_like(p.data) for p in params]
        self.step = 0

    def state_dict(self, names, prefix):
        state = collections.OrderedDict()
        for name, m, v in zip(names, self.m, self.v):
            state['{}.m.{}'.format(prefix, name)] = m
            state['{}.v.{}'.format(prefix, name)] = v
        state['{}.step'.format(prefix)] = np.asarray(float(self.step))
        return state

    def load_state_dict(self, state, names, prefix):
        for i, name in enumerate(names):
            for key, moments in (('m', self.m), ('v', self.v)):
                full = '{}.{}.{}'.format(prefix, key, name)
                if full not in state:
                    raise StateError('optimizer state {} is missing'.format(
                        full))
                value = np.asarray(state[full])
                if value.shape != moments[i].shape:
                    raise StateError('{} has shape {}, expected {}'.format(
                        full, value.shape, moments[i].shape))
                moments[i] = value.astype(moments[i].dtype, copy=True)
        self.step = int(np.asarray(state['{}.step'.format(prefix)]))


def adam_step(params, grads, state, lr, names=None):
    """Bias-corrected Adam update of ``params`` in place.

    Args:
        params (list): Parameters, aligned with ``grads`` and ``state``.
        grads (list): Gradient arrays; ``None`` counts as zero.
        state (AdamState): Moments, updated in place.
        lr (float): Step size.
        names (list): Parameter names used in error messages.

    Raises:
        ValidityError: If a gradient holds NaN or Inf.
    """
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ShapeError('adam_step got {} parameters, {} gradients and {} '
                         'moment slots'.format(len(params), len(grads),
                                               len(state.m)))
    grads = [np.zeros_like(p.data) if g is None else g
             for p, g in zip(params, grads)]
    for i, grad in enumerate(grads):
        if not np.all(np.isfinite(grad)):
            raise ValidityError('non-finite gradient at optimizer step '
                                '{}'.format(state.step + 1),
                                name=names[i] if names else
                                'parameter #{}'.format(i))
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    correction1 = 1 - b1 ** state.step
    correction2 = 1 - b2 ** state.step
    for i, (param, grad) in enumerate(zip(params, grads)):
        state.m[i] = b1 * state.m[i] + (1 - b1) * grad
        state.v[i] = b2 * state.v[i] + (1 - b2) * grad * grad
        m_hat = state.m[i] / correction1
        v_hat = state.v[i] / correction2
        update = lr * m_hat / (np.sqrt(v_hat) + state.eps)
        param.data = (param.data - update).astype(param.dtype)


class Optimizer(object):
    """Adam over the named parameters of one or more modules."""

    def __init__(self, named_params, cfg):
        self.names = [name for name, _ in named_params]
        self.params = [param for _, param in named_params]
        self.state = AdamState(self.params, cfg.beta1, cfg.beta2, cfg.eps)

    def step(self, lr):
        adam_step(self.params, [p.grad for p in self.params], self.state, lr,
                  names=self.names)

    def zero_grad(self):
        for p in self.params:
            p.grad = None


@dataclasses.dataclass
class Models:
    svg: object
    srg: object
    disc: object
    extractor: object

    def generator_parameters(self):
        return list(self.svg.named_parameters('svg')) + \
            list(self.srg.named_parameters('srg'))

    def state_dict(self):
        state = collections.OrderedDict()
        state.update(self.svg.state_dict('svg'))
        state.update(self.srg.state_dict('srg'))
        state.update(self.disc.state_dict('disc'))
        return state

    def load_state_dict(self, state):
        self.svg.load_state_dict(state, 'svg')
        self.srg.load_state_dict(state, 'srg')
        self.disc.load_state_dict(state, 'disc')

    def train(self, mode=True):
        self.svg.train(mode)
        self.srg.train(mode)
        self.disc.train(mode)


@dataclasses.dataclass
class Optimizers:
    g: Optimizer
    d: Optimizer

    def state_dict(self):
        state = self.g.state.state_dict(self.g.names, 'optim.g')
        state.update(self.d.state.state_dict(self.d.names, 'optim.d'))
        return state

    def load_state_dict(self, state):
        self.g.state.load_state_dict(state, self.g.names, 'optim.g')
        self.d.state.load_state_dict(state, self.d.names, 'optim.d')


@dataclasses.dataclass
class LossReport:
    step: int
    lr_g: float
    lr_d: float
    d_real: float
    d_fake: float
    d_total: float
    g_perceptual: float
    g_gan: float
    g_fm: float
    g_svg: float
    g_total: float

    def row(self):
        return [getattr(self, c) for c in METRIC_COLUMNS]


def build_models(gen_cfg, disc_cfg, seed, perceptual_weights=None,
                 dtype=np.float32):
    """Deterministically initialize every network of a run from ``seed``."""
    svg, srg = build_from_config(gen_cfg, seed, dtype=dtype)
    rng = np.random.default_rng([int(seed), _DISCRIMINATOR_STREAM])
    disc = Discriminator(gen_cfg.image_channels, gen_cfg.num_classes,
                         disc_cfg, rng, dtype=dtype)
    extractor = FeatureExtractor(gen_cfg.image_channels,
                                 weights=perceptual_weights, dtype=dtype)
    return Models(svg, srg, disc, extractor)


def build_optimizers(models, cfg):
    return Optimizers(
        g=Optimizer(models.generator_parameters(), cfg),
        d=Optimizer(list(models.disc.named_parameters('disc')), cfg))


def _finite(value, name, step):
    if not math.isfinite(value):
        raise ValidityError('non-finite value {} at step {}'.format(
            value, step), name=name)
    return value


def _check_parameters(models, step):
    for prefix, module in (('svg', models.svg), ('srg', models.srg),
                           ('disc', models.disc)):
        for name, param in module.named_parameters(prefix):
            param.check_finite('{} after step {}'.format(name, step))


def train_step(batch, models, optimizers, cfg, step):
    """One discriminator update followed by one generator update.

    Args:
        batch (tuple): ``(SemanticLayout, image Tensor)`` with images in
            [-1, 1].
        models (Models): The networks.
        optimizers (Optimizers): Adam states of generators and discriminator.
        cfg: Object with ``train`` (TrainConfig) and ``loss`` (LossWeights).
        step (int): Zero-based step index; seeds the noise draw.

    Returns:
        LossReport: Every scalar loss term of the step.
    """
    layout, real = batch
    train_cfg, weights = cfg.train, cfg.loss
    lr_g, lr_d = lr_at(step, train_cfg)
    rng = np.random.default_rng([int(train_cfg.seed), int(step)])
    z = sample_noise(rng, layout.batch, models.srg.cfg.z_dim, real.dtype)
    models.train()

    # discriminator update
    with no_grad():
        pyramid, _ = models.svg(layout)
        fake = models.srg(z, pyramid)
    models.disc.requires_grad_(True)
    real_scores, _ = models.disc(real, layout)
    fake_scores, _ = models.disc(fake, layout)
    d_loss = losses.hinge_d(real_scores, fake_scores)
    d_total = _finite(d_loss.item(), 'hinge_d', step)
    d_real, d_fake = losses.hinge_d_parts(real_scores, fake_scores)
    d_loss.backward()
    optimizers.d.step(lr_d)
    optimizers.d.zero_grad()

    # generator update
    models.disc.requires_grad_(False)
    try:
        pyramid, predicted = models.svg(layout)
        fake = models.srg(z, pyramid)
        fake_scores, fake_feats = models.disc(fake, layout)
        with no_grad():
            _, real_feats = models.disc(real, layout)
        svg_extractor = models.extractor \
            if weights.svg_space == 'perceptual' else None
        terms = {
            'perceptual': losses.perceptual_loss(fake, real, models.extractor),
            'gan': losses.hinge_g(fake_scores),
            'feature_matching': losses.feature_matching_loss(fake_feats,
                                                             real_feats),
            'svg': losses.svg_regression_loss(predicted, real, weights.norm_p,
                                              svg_extractor),
        }
        try:
            g_loss = losses.total_generator_loss(terms, weights)
        except ValidityError as err:
            raise ValidityError('{} at step {}'.format(err, step),
                                name=err.name) from err
        g_loss.backward()
        optimizers.g.step(lr_g)
        optimizers.g.zero_grad()
    finally:
        models.disc.requires_grad_(True)

    if train_cfg.check_finite:
        _check_parameters(models, step)
    return LossReport(
        step=int(step), lr_g=lr_g, lr_d=lr_d, d_real=d_real, d_fake=d_fake,
        d_total=d_total, g_perceptual=terms['perceptual'].item(),
        g_gan=terms['gan'].item(), g_fm=terms['feature_matching'].item(),
        g_svg=terms['svg'].item(), g_total=g_loss.item())


def make_checkpoint(models, optimizers, step, config, meta=None):
    tensors = models.state_dict()
    tensors.update(optimizers.state_dict())
    return io.Checkpoint(tensors=tensors, step=int(step), config=config or {},
                         meta=dict(meta or {}))


def restore_checkpoint(ckpt, models, optimizers=None):
    """Load parameters, buffers and (optionally) optimizer moments."""
    models.load_state_dict(ckpt.tensors)
    if optimizers is not None:
        optimizers.load_state_dict(ckpt.tensors)


def sample_grid(models, dataset, count, seed):
    """uint8 grid with one row per sample: [real | SVG prediction | SRG]."""
    count = min(int(count), len(dataset))
    layout, real = dataset.batch(np.arange(count))
    rng = np.random.default_rng(np.random.SeedSequence(
        int(seed), spawn_key=(_SAMPLE_STREAM,)))
    z = sample_noise(rng, count, models.srg.cfg.z_dim, real.dtype)
    models.train(False)
    try:
        with no_grad():
            pyramid, predicted = models.svg(layout)
            fake = models.srg(z, pyramid)
    finally:
        models.train(True)
    rows = []
    for k in range(count):
        rows.append(np.concatenate([io.to_uint8(real.data[k]),
                                    io.to_uint8(predicted.data[k]),
                                    io.to_uint8(fake.data[k])], axis=1))
    return np.concatenate(rows, axis=0)


class MetricsLog(object):
    """Append-only CSV of per-step loss terms."""

    def __init__(self, path, append=False):
        self.path = path
        exists = append and os.path.exists(path)
        self._file = open(path, 'a' if exists else 'w', newline='')
        self._writer = csv.writer(self._file, lineterminator='\n')
        if not exists:
            self._writer.writerow(METRIC_COLUMNS)

    def write(self, report):
        self._writer.writerow([repr(v) if isinstance(v, float) else v
                               for v in report.row()])
        self._file.flush()

    def close(self):
        self._file.close()


def train(cfg, dataset, out_dir, resume=None, config_document=None):
    """Run the training loop, writing checkpoints, samples and metrics.

    Args:
        cfg: ExperimentConfig-like object with ``generator``,
            ``discriminator``, ``train`` and ``loss`` sections.
        dataset (scgen.synthdata.Dataset): Training pairs.
        out_dir (str): Existing output directory.
        resume (str): Optional checkpoint to continue from.
        config_document (dict): Resolved config stored in checkpoints.

    Returns:
        list: The ``LossReport`` of every step run.
    """
    start_time = timeit.default_timer()
    train_cfg = cfg.train
    weights = None
    if train_cfg.perceptual_weights_path:
        weights = io.load_weights(train_cfg.perceptual_weights_path)
    models = build_models(cfg.generator, cfg.discriminator, train_cfg.seed,
                          perceptual_weights=weights)
    optimizers = build_optimizers(models, train_cfg)

    start = 0
    if resume:
        ckpt = io.load_checkpoint(resume)
        restore_checkpoint(ckpt, models, optimizers)
        start = ckpt.step
        logger.info('Resuming from %s at step %s.', resume, start)

    total = train_cfg.total_steps
    meta = {'seed': int(train_cfg.seed)}
    metrics = MetricsLog(os.path.join(out_dir, 'metrics.csv'),
                         append=bool(resume))
    reports = []
    try:
        if start < total:
            with BatchStream(dataset, train_cfg.batch_size, train_cfg.seed,
                             start_step=start,
                             prefetch=train_cfg.prefetch) as stream:
                for step, layout, images in stream:
                    if step >= total:
                        break
                    report = train_step((layout, images), models, optimizers,
                                        cfg, step)
                    metrics.write(report)
                    reports.append(report)
                    done = step + 1
                    if done % train_cfg.log_every == 0:
                        logger.info(
                            'step %s: d=%.4f g=%.4f (p=%.4f gan=%.4f fm=%.4f '
                            's=%.4f)', done, report.d_total, report.g_total,
                            report.g_perceptual, report.g_gan, report.g_fm,
                            report.g_svg)
                    if done % train_cfg.checkpoint_every == 0:
                        path = os.path.join(out_dir,
                                            'ckpt_{:06d}.ckpt'.format(done))
                        io.save_checkpoint(path, make_checkpoint(
                            models, optimizers, done, config_document, meta))
                    if done % train_cfg.sample_every == 0:
                        path = os.path.join(out_dir,
                                            'samples_{:06d}.ppm'.format(done))
                        io.write_ppm(path, sample_grid(
                            models, dataset, train_cfg.sample_count,
                            train_cfg.seed))
                        logger.debug('Wrote samples to %s.', path)
    finally:
        metrics.close()

    final = os.path.join(out_dir, 'ckpt_final.ckpt')
    io.save_checkpoint(final, make_checkpoint(
        models, optimizers, max(start, total), config_document, meta))
    logger.info('Trained steps %s to %s in %s s.', start, total,
                timeit.default_timer() - start_time)
    return reports
