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
"""Tests for scgen.config"""

import os

import pytest

import scgen
from scgen import config
from scgen.exceptions import ConfigError


def test_default_config():
    cfg = config.default_config()
    assert cfg.preset == 'families4'
    assert cfg.scene.name == 'families4'
    assert cfg.scene.class_count == cfg.generator.num_classes == 4
    assert cfg.generator.resolution == cfg.scene.resolution == 32
    assert (cfg.train.lr_g, cfg.train.lr_d) == (5e-4, 2e-3)
    assert cfg.train.total_steps == 500
    assert (cfg.loss.perceptual, cfg.loss.gan, cfg.loss.feature_matching,
            cfg.loss.svg) == (10.0, 1.0, 10.0, 2.0)

    full = config.default_config('paper-full')
    assert full.generator.resolution == full.scene.resolution == 256
    assert (full.train.lr_g, full.train.lr_d) == (1e-4, 4e-4)


def test_from_dict_overrides():
    cfg = config.from_dict({'train': {'batch_size': 2, 'seed': 3},
                            'loss': {'svg': 0.0}})
    assert cfg.train.batch_size == 2
    assert cfg.train.seed == 3
    # untouched keys keep the preset's values
    assert cfg.train.lr_g == 5e-4
    assert cfg.loss.svg == 0.0
    assert cfg.loss.perceptual == 10.0

    # the presets themselves are not modified
    assert config.default_config().train.batch_size == 8

    custom = dict(scgen.settings.SCENE_PRESETS['families4'], seed=9)
    cfg = config.from_dict({'scene': custom})
    assert cfg.scene.seed == 9
    assert cfg.scene.class_count == 4


def test_round_trip(tmpdir):
    cfg = config.from_dict({'generator': {'z_dim': 16},
                            'train': {'check_finite': True}})
    assert config.from_dict(cfg.to_dict()) == cfg

    path = os.path.join(str(tmpdir), 'config.json')
    config.save_config(path, cfg)
    assert config.load_config(path) == cfg
    assert scgen.io.read_json(path)['generator']['z_dim'] == 16


@pytest.mark.parametrize('document,key', [
    ({'solver': {}}, 'solver'),
    ({'generator': {'widths': [4]}}, 'generator.widths'),
    ({'train': 3}, 'train'),
    ({'preset': 'nope'}, 'preset'),
    ({'scene': 'nope'}, 'scene'),
    ({'scene': {'classes': [], 'depth': 1}}, 'scene.depth'),
    ({'generator': {'num_classes': 5}}, 'generator.num_classes'),
    ({'generator': {'resolution': 64}}, 'generator.resolution'),
    ({'train': {'lr_d': 1e-6}}, 'train.lr_d'),
    ({'discriminator': {'depth': 0}}, 'discriminator.depth'),
])
def test_from_dict_errors(document, key):
    with pytest.raises(ConfigError) as err:
        config.from_dict(document)
    assert err.value.key == key
    assert str(err.value).startswith(key)


def test_from_dict_bad_values():
    with pytest.raises(ConfigError, match='must be a JSON object'):
        config.from_dict([1, 2])
    with pytest.raises(ConfigError, match='invalid value type'):
        config.from_dict({'train': {'batch_size': 'eight'}})

    # validation can be deferred
    cfg = config.from_dict({'generator': {'num_classes': 5}},
                           validate=False)
    assert cfg.generator.num_classes == 5


def test_load_config_errors(tmpdir):
    path = os.path.join(str(tmpdir), 'broken.json')
    with open(path, 'w') as f:
        f.write('{"train": ')
    with pytest.raises(ConfigError, match='not valid JSON'):
        config.load_config(path)
