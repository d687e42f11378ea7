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
"""Tests for scgen.utils"""

import copy

import numpy as np

import pytest

import scgen
from scgen.exceptions import ConfigError, ValidityError


MOCKED_COMMANDS = {
    'dummycommand': {
        'runner': 'run_dummy',
        'options': ['test'],
    }
}


def test_get_preset(mocker):
    preset = scgen.utils.get_preset('families4')
    assert preset['generator']['num_classes'] == 4

    # returns a copy
    preset['generator']['num_classes'] = 99
    assert scgen.settings.PRESETS['families4']['generator']['num_classes'] == 4

    with pytest.raises(ConfigError) as err:
        _ = scgen.utils.get_preset('bad_preset')
    assert err.value.key == 'preset'


def test_get_scene():
    spec = scgen.utils.get_scene('families4')
    assert spec.resolution == 32
    assert spec.class_count == 4

    # experiment presets resolve to their scene
    spec = scgen.utils.get_scene('paper-full')
    assert spec.resolution == 256

    with pytest.raises(ValueError):
        _ = scgen.utils.get_scene('bad_scene')


def test_get_command(mocker):
    mocker.patch('scgen.settings.COMMANDS', MOCKED_COMMANDS)

    key = list(MOCKED_COMMANDS.keys())[0]
    assert scgen.utils.get_command(key)['runner'] == 'run_dummy'

    # test case insensitive
    assert scgen.utils.get_command(key.upper())['runner'] == 'run_dummy'

    with pytest.raises(ValueError):
        _ = scgen.utils.get_command('bad_command_name')


def test_get_command_kwargs(mocker):
    mocker.patch('scgen.settings.COMMANDS', MOCKED_COMMANDS)

    key = list(MOCKED_COMMANDS.keys())[0]

    mock_namespace = {
        'command': key,
        'test': True,
        'log_level': 'INFO',
    }

    command_kwargs = scgen.utils.get_command_kwargs(mock_namespace)
    assert command_kwargs == {'test': True}

    # passed a bad name as `command`
    with pytest.raises(ValueError):
        bad_namespace = copy.copy(mock_namespace)
        bad_namespace['command'] = 'bad_name'
        _ = scgen.utils.get_command_kwargs(bad_namespace)

    # the argparser is misconfigured and not providing a required value
    with pytest.raises(KeyError):
        bad_namespace = copy.copy(mock_namespace)
        del bad_namespace['test']
        _ = scgen.utils.get_command_kwargs(bad_namespace)


def test_every_command_has_a_runner():
    for name, entry in scgen.settings.COMMANDS.items():
        assert callable(getattr(scgen.app_runners, entry['runner'])), name


def test_get_num_threads():
    assert scgen.utils.get_num_threads({'SCGEN_THREADS': '3'}) == 3
    assert scgen.utils.get_num_threads({}) >= 1
    assert scgen.utils.get_num_threads({'SCGEN_THREADS': ''}) >= 1

    for bad in ('0', '-2', 'four'):
        with pytest.raises(ConfigError) as err:
            scgen.utils.get_num_threads({'SCGEN_THREADS': bad})
        assert err.value.key == 'SCGEN_THREADS'


def test_validate_layout():
    labels = np.zeros((8, 8), dtype='uint8')
    labels[2:4, 2:4] = 3
    np.testing.assert_equal(scgen.utils.validate_layout(labels, 4), labels)

    labels[5, 6] = 4
    with pytest.raises(ValidityError) as err:
        scgen.utils.validate_layout(labels, 4)
    assert 'row 5, column 6' in str(err.value)

    # rank must be 2
    with pytest.raises(ValueError):
        scgen.utils.validate_layout(np.zeros((1, 8, 8), dtype='uint8'), 4)
