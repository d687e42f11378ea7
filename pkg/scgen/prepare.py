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
"""Functions for preparing files as network inputs"""

import logging
import os

import numpy as np

import scgen
from scgen.condops import NormCandidateBank
from scgen.exceptions import ShapeError
from scgen.generators import SemanticLayout


logger = logging.getLogger(__name__)


def prepare_layout(path, class_count, resolution=None, dtype=np.float32):
    """Load a PGM label file as a one-image SemanticLayout.

    Args:
        path (str): The path to a binary PGM of class indices.
        class_count (int): Classes the model was trained with.
        resolution (int): Expected height and width, if known.

    Returns:
        SemanticLayout: One-hot layout of shape (1, class_count, h, w).
    """
    labels = scgen.io.read_pgm(path)
    scgen.utils.validate_layout(labels, class_count)
    if resolution is not None and labels.shape != (resolution, resolution):
        raise ShapeError('{} is {}x{} but the model renders {}x{}'.format(
            path, labels.shape[0], labels.shape[1], resolution, resolution))
    return SemanticLayout.from_labels(labels, class_count, dtype)


def prepare_output_dir(path, force=False):
    """Create ``path``; refuse an existing non-empty directory unless forced."""
    if os.path.isdir(path) and os.listdir(path) and not force:
        raise IOError('{} exists and is not empty; pass --force to write '
                      'into it anyway.'.format(path))
    os.makedirs(path, exist_ok=True)
    return path


def load_experiment(ckpt_path):
    """Rebuild the networks of a checkpoint.

    Returns:
        tuple: ``(ExperimentConfig, Models, Checkpoint)``.
    """
    ckpt = scgen.io.load_checkpoint(ckpt_path)
    cfg = scgen.config.from_dict(ckpt.config)
    weights = None
    if cfg.train.perceptual_weights_path:
        weights = scgen.io.load_weights(cfg.train.perceptual_weights_path)
    models = scgen.training.build_models(cfg.generator, cfg.discriminator,
                                         cfg.train.seed,
                                         perceptual_weights=weights)
    scgen.training.restore_checkpoint(ckpt, models)
    return cfg, models, ckpt


def set_inference_mode(models):
    """Use tracked normalization statistics when every layer has them.

    A checkpoint saved before its first step has none; its generators then
    keep normalizing with batch statistics.

    Returns:
        bool: Whether running statistics are used.
    """
    banks = [m for _, m in models.srg.named_modules()
             if isinstance(m, NormCandidateBank)]
    tracked = all(b.running_mean is not None for b in banks)
    if not tracked:
        logger.warning('No running statistics in the checkpoint; using batch '
                       'statistics.')
    models.train(not tracked)
    return tracked
