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
"""Helper functions to run commands"""

import logging
import os
import timeit

import numpy as np

import scgen
from scgen.condops import SemanticVectorMap, frozen_spectral_norm
from scgen.exceptions import ConfigError, ParameterError, ValidityError
from scgen.generators import SemanticLayout, sample_noise
from scgen.gradcheck import DEFAULT_INSTANCES
from scgen.tensor import Tensor, no_grad


logger = logging.getLogger(__name__)

CHUNK = 16
_EVAL_STREAM = 3


def run_command(arg_dict):
    """Takes the user-supplied command line arguments and runs the command

    Args:
        arg_dict: dictionary of command line args

    Returns:
        list: Paths of the files the command wrote.
    """
    _ = timeit.default_timer()
    entry = scgen.utils.get_command(arg_dict['command'])
    runner = globals()[entry['runner']]
    kwargs = scgen.utils.get_command_kwargs(arg_dict)
    written = runner(**kwargs)
    logger.info('Finished %s (%s files) in %s s.', arg_dict['command'],
                len(written), timeit.default_timer() - _)
    return written


def run_make_data(out, preset, count, seed, force=False):
    if int(count) < 1:
        raise ParameterError('count must be >= 1, got {}'.format(count))
    spec = scgen.utils.get_scene(preset)
    spec.seed = int(seed)
    scgen.prepare.prepare_output_dir(out, force=force)
    written = scgen.synthdata.write_dataset(
        out, spec, int(count), threads=scgen.utils.get_num_threads())
    logger.info('Wrote %s pairs of scene %s to %s.', count, spec.name, out)
    return written


def _check_dataset(cfg, dataset):
    spec = dataset.spec
    if spec.class_count != cfg.generator.num_classes:
        raise ConfigError('the dataset has {} classes but the generator '
                          'expects {}'.format(spec.class_count,
                                              cfg.generator.num_classes),
                          'generator.num_classes')
    if spec.resolution != cfg.generator.resolution:
        raise ConfigError('the dataset is {0}x{0} but the generator renders '
                          '{1}x{1}'.format(spec.resolution,
                                           cfg.generator.resolution),
                          'generator.resolution')


def run_train(config, data, out, resume=None):
    cfg = scgen.config.load_config(config) if config else \
        scgen.config.default_config()
    dataset = scgen.synthdata.Dataset.load(
        data, threads=scgen.utils.get_num_threads())
    _check_dataset(cfg, dataset)
    cfg.scene = dataset.spec
    cfg.train.resolve_steps(len(dataset))
    cfg.validate()
    os.makedirs(out, exist_ok=True)
    config_path = os.path.join(out, 'config.json')
    scgen.config.save_config(config_path, cfg)
    scgen.training.train(cfg, dataset, out, resume=resume,
                         config_document=cfg.to_dict())
    return sorted(os.path.join(out, name) for name in os.listdir(out))


def run_synth(ckpt, layout, seed, out, samples=1):
    samples = int(samples)
    if samples < 1:
        raise ParameterError('samples must be >= 1, got {}'.format(samples))
    cfg, models, _ = scgen.prepare.load_experiment(ckpt)
    semantic = scgen.prepare.prepare_layout(
        layout, cfg.generator.num_classes, cfg.generator.resolution)
    scgen.prepare.set_inference_mode(models)
    stem, _ = os.path.splitext(out)
    written = []
    with no_grad(), frozen_spectral_norm():
        pyramid, _ = models.svg(semantic)
        for k in range(samples):
            rng = np.random.default_rng([int(seed), k])
            z = sample_noise(rng, 1, cfg.generator.z_dim)
            image = models.srg(z, pyramid)
            path = out if samples == 1 else '{}_{}.ppm'.format(stem, k)
            scgen.io.write_ppm(path, scgen.io.to_uint8(image.data[0]))
            written.append(path)
    config_path = stem + '.json'
    scgen.config.save_config(config_path, cfg)
    written.append(config_path)
    return written


def _chunks(count):
    for start in range(0, count, CHUNK):
        yield np.arange(start, min(start + CHUNK, count))


def run_analyze(ckpt, data, out, level=None, space='probability'):
    cfg, models, _ = scgen.prepare.load_experiment(ckpt)
    dataset = scgen.synthdata.Dataset.load(
        data, threads=scgen.utils.get_num_threads())
    _check_dataset(cfg, dataset)
    stages = cfg.generator.svg_stages
    level = stages - 1 if level is None else int(level)
    if not 0 <= level < stages:
        raise ParameterError('level must lie in [0, {}), got {}'.format(
            stages, level))
    size = cfg.generator.level_size(level)
    values, layouts = [], []
    with no_grad(), frozen_spectral_norm():
        for positions in _chunks(len(dataset)):
            layout, _ = dataset.batch(positions)
            pyramid, _ = models.svg(layout)
            values.append(pyramid[level].values.data)
            layouts.append(layout.resized(size, size).values.data)
    vectors = SemanticVectorMap(Tensor(np.concatenate(values)),
                                cfg.generator.gate_mode,
                                cfg.generator.temperature)
    resized = SemanticLayout(Tensor(np.concatenate(layouts)))
    stats = scgen.analysis.class_vector_stats(vectors, resized, space=space)
    for i in range(stats.class_count):
        logger.info('class %s: %s', i, ' '.join(
            '{:+.3f}'.format(v) for v in stats.similarity[i]))
    os.makedirs(out, exist_ok=True)
    written = scgen.analysis.emit_reports(stats, None, out)
    config_path = os.path.join(out, 'config.json')
    scgen.config.save_config(config_path, cfg)
    return written + [config_path]


def run_eval(ckpt, data, out):
    cfg, models, checkpoint = scgen.prepare.load_experiment(ckpt)
    dataset = scgen.synthdata.Dataset.load(
        data, threads=scgen.utils.get_num_threads())
    _check_dataset(cfg, dataset)
    scgen.prepare.set_inference_mode(models)
    rng = np.random.default_rng([int(cfg.train.seed), _EVAL_STREAM])
    real_feats, fake_feats, fakes, layouts = [], [], [], []
    with no_grad(), frozen_spectral_norm():
        for positions in _chunks(len(dataset)):
            layout, real = dataset.batch(positions)
            z = sample_noise(rng, len(positions), cfg.generator.z_dim)
            pyramid, _ = models.svg(layout)
            fake = models.srg(z, pyramid)
            real_feats.append(models.extractor.pooled(real))
            fake_feats.append(models.extractor.pooled(fake))
            fakes.append(fake.data)
            layouts.append(layout.values.data)
    real_feats = np.concatenate(real_feats)
    fake_feats = np.concatenate(fake_feats)
    layout = SemanticLayout(Tensor(np.concatenate(layouts)))
    _, real_images = dataset.batch(np.arange(len(dataset)))

    reports = []
    for step, feats, images in (('real', real_feats, real_images.data),
                                (checkpoint.step, fake_feats,
                                 np.concatenate(fakes))):
        accuracy, per_class, counts = scgen.analysis.oracle_pixel_accuracy(
            images, layout, dataset.spec)
        interior, _, _ = scgen.analysis.oracle_pixel_accuracy(
            images, layout, dataset.spec, interior=True)
        frechet = scgen.analysis.frechet_distance(real_feats, feats)
        reports.append(scgen.analysis.MetricReport(
            step=step, frechet=frechet, pixel_accuracy=accuracy,
            per_class=list(per_class), counts=list(counts),
            interior_accuracy=interior))
        logger.info('%s: frechet %.4f, accuracy %.4f (interior %.4f)', step,
                    frechet, accuracy, interior)
    os.makedirs(out, exist_ok=True)
    written = scgen.analysis.emit_reports(None, reports, out)
    config_path = os.path.join(out, 'config.json')
    scgen.config.save_config(config_path, cfg)
    return written + [config_path]


def run_gradcheck(seed=0, instances=DEFAULT_INSTANCES):
    results = scgen.gradcheck.run_suite(seed=seed, instances=instances)
    for name, error in results.items():
        print('{:<16} {:.3e}'.format(name, error))
    failed = scgen.gradcheck.failures(results)
    if failed:
        raise ValidityError('{} op(s) above {:g}: {}'.format(
            len(failed), scgen.gradcheck.TOLERANCE, ', '.join(
                '{} ({:.3e})'.format(name, err) for name, err in failed)),
            name='gradcheck')
    return []
