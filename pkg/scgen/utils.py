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
"""Functions for looking up presets and commands and validating inputs"""

import copy
import os

import numpy as np

import scgen
from scgen.exceptions import ConfigError, ValidityError


def get_preset(name):
    """Returns a copy of the named experiment preset.

    Args:
        name (str): The name of the preset.

    Returns:
        dict: The preset sections.
    """
    presets = scgen.settings.PRESETS
    try:
        return copy.deepcopy(presets[str(name)])
    except KeyError:
        raise ConfigError('{} is not a valid preset name. Valid presets: '
                          '{}'.format(name, list(presets.keys())), 'preset')


def get_scene(name):
    """Returns the SceneSpec of a scene preset or of an experiment preset."""
    scenes = scgen.settings.SCENE_PRESETS
    name = str(name)
    if name not in scenes and name in scgen.settings.PRESETS:
        name = scgen.settings.PRESETS[name]['scene']
    try:
        document = copy.deepcopy(scenes[name])
    except KeyError:
        raise ConfigError('{} is not a valid scene name. Valid scenes: '
                          '{}'.format(name, list(scenes.keys())), 'scene')
    return scgen.synthdata.SceneSpec.from_dict(document)


def get_command(name):
    """Returns the registry entry of a command.

    Raises:
        ValueError: If ``name`` is not a registered command.
    """
    commands = scgen.settings.COMMANDS
    try:
        return commands[str(name).lower()]
    except KeyError:
        raise ValueError('{} is not a valid command. Valid commands: '
                         '{}'.format(name, list(commands.keys())))


def get_command_kwargs(kwargs):
    """Returns the keyword arguments of the command runner.

    Args:
        kwargs (dict): Parsed command-line arguments.

    Returns:
        dict: The parsed key-value pairs the runner accepts.
    """
    name = str(kwargs.get('command')).lower()
    options = get_command(name)['options']
    command_kwargs = dict()
    for k in options:
        try:
            command_kwargs[k] = kwargs[k]
        except KeyError:
            raise KeyError('{} is required for {} jobs, but is not found '
                           'in parsed CLI arguments.'.format(k, name))
    return command_kwargs


def get_num_threads(environ=None):
    """Worker thread cap from ``SCGEN_THREADS``, else the logical core count."""
    environ = os.environ if environ is None else environ
    value = environ.get('SCGEN_THREADS')
    if value in (None, ''):
        return max(os.cpu_count() or 1, 1)
    try:
        threads = int(value)
    except ValueError:
        threads = 0
    if threads < 1:
        raise ConfigError('must be a positive integer, got {!r}'.format(value),
                          'SCGEN_THREADS')
    return threads


def validate_layout(labels, class_count):
    """Check integer labels against the class count of a model.

    Raises:
        ValidityError: Naming the (row, column) of the first bad label.
    """
    labels = np.asarray(labels)
    if labels.ndim != 2:
        raise ValidityError('layout must be a 2D label image, got shape '
                            '{}'.format(labels.shape), name='layout')
    bad = np.argwhere(labels >= class_count)
    if len(bad):
        row, col = (int(v) for v in bad[0])
        raise ValidityError('class index {} at position (row {}, column {}) '
                            'is outside the {} classes of the model'.format(
                                int(labels[row, col]), row, col, class_count),
                            name='layout')
    return labels
