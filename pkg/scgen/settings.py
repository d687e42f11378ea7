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
"""Settings and configurations for scgen"""


FAMILIES4_CLASSES = [
    {'family': 0, 'kind': 'flat', 'colors': [[0.30, 0.45, 0.70]],
     'noise': 0.03},
    {'family': 1, 'kind': 'checker',
     'colors': [[0.95, 0.85, 0.30], [0.75, 0.60, 0.20]],
     'period': 4},
    {'family': 1, 'kind': 'checker',
     'colors': [[0.95, 0.85, 0.30], [0.75, 0.60, 0.20]],
     'period': 4},
    {'family': 2, 'kind': 'stripes',
     'colors': [[0.85, 0.25, 0.20], [0.65, 0.15, 0.15]],
     'period': 4, 'angle': 45.0},
]

# Scene recipes. Colors are RGB in [0, 1]; classes 1 and 2 share family 1.
SCENE_PRESETS = {
    'families4': {
        'name': 'families4',
        'resolution': 32,
        'min_shapes': 2,
        'max_shapes': 4,
        'seed': 0,
        'classes': FAMILIES4_CLASSES,
    },
    'families4-256': {
        'name': 'families4-256',
        'resolution': 256,
        'min_shapes': 2,
        'max_shapes': 4,
        'seed': 0,
        'classes': FAMILIES4_CLASSES,
    },
}

# Experiment presets. Sections map onto GeneratorConfig,
# DiscriminatorConfig, TrainConfig and LossWeights.
PRESETS = {
    'families4': {
        'scene': 'families4',
        'generator': {
            'resolution': 32,
            'num_classes': 4,
            'svg_channels': [32, 32, 16],
            'svg_head_channels': 16,
            'srg_channels': [64, 32, 16],
            'vector_taps': [0, 1, 2],
            'candidates': 3,
            'temperature': 0.05,
            'gate_mode': 'softmax',
            'z_dim': 256,
        },
        'discriminator': {
            'base_channels': 32,
            'depth': 3,
            'scales': 2,
        },
        'train': {
            'lr_g': 5e-4,
            'lr_d': 2e-3,
            'batch_size': 8,
            'total_steps': 500,
            'seed': 17,
            'checkpoint_every': 250,
            'sample_every': 100,
            'log_every': 10,
        },
        'loss': {
            'perceptual': 10.0,
            'gan': 1.0,
            'feature_matching': 10.0,
            'svg': 2.0,
            'norm_p': 1,
        },
    },
    'paper-full': {
        'scene': 'families4-256',
        'generator': {
            'resolution': 256,
            'num_classes': 4,
            'svg_channels': [512, 256, 128, 64, 32, 32],
            'svg_head_channels': 16,
            'srg_channels': [512, 512, 512, 256, 128, 64, 32],
            'vector_taps': [0, 1, 1, 2, 3, 4, 5],
            'candidates': 3,
            'temperature': 0.05,
            'gate_mode': 'softmax',
            'z_dim': 256,
        },
        'discriminator': {
            'base_channels': 64,
            'depth': 4,
            'scales': 2,
        },
        'train': {
            'lr_g': 1e-4,
            'lr_d': 4e-4,
            'batch_size': 4,
            'total_steps': 100000,
            'seed': 17,
            'checkpoint_every': 5000,
            'sample_every': 1000,
            'log_every': 100,
        },
        'loss': {
            'perceptual': 10.0,
            'gan': 1.0,
            'feature_matching': 10.0,
            'svg': 2.0,
            'norm_p': 1,
        },
    },
}

DEFAULT_PRESET = 'families4'

# Each command maps to a runner in ``scgen.app_runners``; ``options`` are the
# parsed command line arguments forwarded to it.
COMMANDS = {
    'make-data': {
        'runner': 'run_make_data',
        'options': ['out', 'preset', 'count', 'seed', 'force'],
    },
    'train': {
        'runner': 'run_train',
        'options': ['config', 'data', 'out', 'resume'],
    },
    'synth': {
        'runner': 'run_synth',
        'options': ['ckpt', 'layout', 'seed', 'out', 'samples'],
    },
    'analyze': {
        'runner': 'run_analyze',
        'options': ['ckpt', 'data', 'out', 'level', 'space'],
    },
    'eval': {
        'runner': 'run_eval',
        'options': ['ckpt', 'data', 'out'],
    },
    'gradcheck': {
        'runner': 'run_gradcheck',
        'options': ['seed', 'instances'],
    },
}
