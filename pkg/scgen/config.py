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
"""Experiment configuration documents.

A config is a JSON object with the sections ``generator``,
``discriminator``, ``train`` and ``loss`` plus the top-level keys ``preset``
and ``scene``. Absent keys take the preset's values, unknown keys are
rejected with the dotted key name.
"""

import copy
import dataclasses
import logging

from scgen import io
from scgen import settings
from scgen.discriminator import DiscriminatorConfig
from scgen.exceptions import ConfigError
from scgen.generators import GeneratorConfig
from scgen.losses import LossWeights
from scgen.synthdata import SceneSpec
from scgen.training import TrainConfig


logger = logging.getLogger(__name__)

SECTIONS = (
    ('generator', GeneratorConfig),
    ('discriminator', DiscriminatorConfig),
    ('train', TrainConfig),
    ('loss', LossWeights),
)
TOP_LEVEL_KEYS = ('preset', 'scene') + tuple(name for name, _ in SECTIONS)


@dataclasses.dataclass
class ExperimentConfig:
    preset: str
    scene: SceneSpec
    generator: GeneratorConfig
    discriminator: DiscriminatorConfig
    train: TrainConfig
    loss: LossWeights

    def validate(self):
        self.scene.validate()
        for name, _ in SECTIONS:
            getattr(self, name).validate()
        if self.generator.num_classes != self.scene.class_count:
            raise ConfigError('generator expects {} classes but the scene '
                              'has {}'.format(self.generator.num_classes,
                                              self.scene.class_count),
                              'generator.num_classes')
        if self.generator.resolution != self.scene.resolution:
            raise ConfigError('generator resolution {} differs from the '
                              'scene resolution {}'.format(
                                  self.generator.resolution,
                                  self.scene.resolution),
                              'generator.resolution')
        return self

    def to_dict(self):
        """The fully resolved document, JSON-serializable."""
        document = {'preset': self.preset, 'scene': self.scene.to_dict()}
        for name, _ in SECTIONS:
            document[name] = dataclasses.asdict(getattr(self, name))
        return _jsonable(document)


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def _build_section(name, cls, values):
    known = {f.name for f in dataclasses.fields(cls)}
    for key in values:
        if key not in known:
            raise ConfigError('unknown key', '{}.{}'.format(name, key))
    try:
        return cls(**values)
    except (TypeError, ValueError) as err:
        raise ConfigError(str(err), name) from err


def _scene_from(value):
    if isinstance(value, dict):
        return SceneSpec.from_dict(value)
    try:
        return SceneSpec.from_dict(copy.deepcopy(settings.SCENE_PRESETS[value]))
    except (KeyError, TypeError):
        raise ConfigError('{!r} is not a scene preset. Valid scenes: '
                          '{}'.format(value, list(settings.SCENE_PRESETS)),
                          'scene')


def from_dict(document, validate=True):
    """Resolve ``document`` against its preset into an ExperimentConfig.

    Raises:
        ConfigError: Naming the first unknown or invalid key.
    """
    if not isinstance(document, dict):
        raise ConfigError('config must be a JSON object, got {}'.format(
            type(document).__name__))
    for key in document:
        if key not in TOP_LEVEL_KEYS:
            raise ConfigError('unknown key', key)
    preset_name = document.get('preset', settings.DEFAULT_PRESET)
    if preset_name not in settings.PRESETS:
        raise ConfigError('{!r} is not a valid preset. Valid presets: '
                          '{}'.format(preset_name, list(settings.PRESETS)),
                          'preset')
    preset = copy.deepcopy(settings.PRESETS[preset_name])
    sections = {}
    for name, cls in SECTIONS:
        values = dict(preset.get(name, {}))
        override = document.get(name, {})
        if not isinstance(override, dict):
            raise ConfigError('must be a JSON object', name)
        values.update(override)
        sections[name] = _build_section(name, cls, values)
    scene = _scene_from(document.get('scene', preset.get('scene')))
    config = ExperimentConfig(preset=preset_name, scene=scene, **sections)
    if validate:
        try:
            config.validate()
        except TypeError as err:
            raise ConfigError('invalid value type ({})'.format(err)) from err
    return config


def default_config(preset=settings.DEFAULT_PRESET):
    return from_dict({'preset': preset})


def load_config(path):
    """Read and resolve a JSON config file."""
    try:
        document = io.read_json(path)
    except ValueError as err:
        raise ConfigError('{} is not valid JSON ({})'.format(path, err))
    return from_dict(document)


def save_config(path, config):
    io.write_json(path, config.to_dict())
    logger.debug('Wrote resolved config to %s.', path)
