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
"""Functions for analyzing semantic vectors and scoring synthesized images."""

import csv
import dataclasses
import logging
import os

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from scgen import io
from scgen.exceptions import ParameterError, ShapeError
from scgen.synthdata import reference_colors


logger = logging.getLogger(__name__)

COSINE_EPS = 1e-8
VECTOR_SPACES = ('logit', 'probability')


@dataclasses.dataclass
class ClassVectorStats:
    """Mean semantic vector of every class and their cosine similarities.

    Entries of absent classes (no pixels) are zero and flagged in
    ``present``.
    """

    means: np.ndarray
    counts: np.ndarray
    similarity: np.ndarray
    present: np.ndarray
    space: str = 'probability'

    @property
    def class_count(self):
        return len(self.counts)


@dataclasses.dataclass
class MetricReport:
    step: object
    frechet: float
    pixel_accuracy: float
    per_class: list
    counts: list
    interior_accuracy: float = None


def vector_space(values, space='probability', gate_mode='softmax'):
    """Per-position vectors in the space the analysis compares them in.

    ``probability`` compares the gated mixing weights themselves. ``logit``
    is the per-position centered log of softmax-gated vectors, the
    only part of the raw vector softmax depends on. Other gates have no log
    counterpart and are compared as they are.
    """
    if space not in VECTOR_SPACES:
        raise ParameterError('space must be one of {}, got {!r}'.format(
            VECTOR_SPACES, space))
    values = np.asarray(values, dtype=np.float64)
    if space == 'probability' or gate_mode != 'softmax':
        return values
    logv = np.log(np.maximum(values, 1e-300))
    return logv - logv.mean(axis=1, keepdims=True)


def class_vector_stats(level, layout, space='probability'):
    """Cosine similarities between per-class mean semantic vectors.

    Args:
        level (scgen.condops.SemanticVectorMap): One pyramid level.
        layout (scgen.generators.SemanticLayout): The layout resized to the
            level's spatial size.
        space (str): ``probability`` (default) or ``logit``.

    Returns:
        ClassVectorStats: Symmetric similarity matrix with unit diagonal for
        every present class.
    """
    if tuple(layout.spatial) != tuple(level.spatial) or \
            layout.batch != level.values.shape[0]:
        raise ShapeError('layout {} does not match the vector level {}'.format(
            layout.values.shape, level.values.shape))
    vectors = vector_space(level.values.data, space, level.gate_mode)
    vectors = vectors.transpose(0, 2, 3, 1).reshape(-1, level.n)
    labels = layout.labels().reshape(-1)
    classes = layout.class_count
    counts = np.bincount(labels, minlength=classes)
    means = np.zeros((classes, level.n))
    np.add.at(means, labels, vectors)
    present = counts > 0
    means[present] /= counts[present, None]

    norms = np.linalg.norm(means, axis=1)
    denom = np.maximum(np.outer(norms, norms), COSINE_EPS)
    similarity = means @ means.T / denom
    similarity = (similarity + similarity.T) / 2
    similarity[~present, :] = 0
    similarity[:, ~present] = 0
    similarity[np.diag_indices(classes)] = present.astype(np.float64)
    return ClassVectorStats(means=means, counts=counts, similarity=similarity,
                            present=present, space=space)


def _sqrtm_psd(matrix):
    """Symmetric square root, negative eigenvalues clamped to 0."""
    matrix = (matrix + matrix.T) / 2
    w, v = np.linalg.eigh(matrix)
    return (v * np.sqrt(np.maximum(w, 0))) @ v.T


def frechet_from_moments(mu_a, cov_a, mu_b, cov_b):
    """``|mu_a - mu_b|^2 + Tr(A + B - 2 (A^1/2 B A^1/2)^1/2)``, at least 0."""
    mu_a, mu_b = np.atleast_1d(mu_a), np.atleast_1d(mu_b)
    cov_a, cov_b = np.atleast_2d(cov_a), np.atleast_2d(cov_b)
    diff = mu_a - mu_b
    root_a = _sqrtm_psd(cov_a)
    cross = _sqrtm_psd(root_a @ cov_b @ root_a)
    value = diff @ diff + np.trace(cov_a) + np.trace(cov_b) - \
        2 * np.trace(cross)
    return max(float(value), 0.0)


def _moments(feats):
    n, dim = feats.shape
    mu = feats.mean(axis=0)
    if n >= dim + 1:
        return mu, np.atleast_2d(np.cov(feats, rowvar=False))
    # too few samples for a full-rank estimate
    var = feats.var(axis=0, ddof=1) if n > 1 else np.zeros(dim)
    return mu, np.diag(var)


def frechet_distance(feats_a, feats_b):
    """Fréchet distance between Gaussians fitted to two feature sets.

    Args:
        feats_a (numpy.array): Shape (N_a, d).
        feats_b (numpy.array): Shape (N_b, d).

    Raises:
        ParameterError: If either set is empty.
    """
    feats_a = np.asarray(feats_a, dtype=np.float64)
    feats_b = np.asarray(feats_b, dtype=np.float64)
    if feats_a.ndim == 1:
        feats_a = feats_a[:, None]
    if feats_b.ndim == 1:
        feats_b = feats_b[:, None]
    if len(feats_a) == 0 or len(feats_b) == 0:
        raise ParameterError('frechet_distance needs non-empty sets, got {} '
                             'and {} samples'.format(len(feats_a),
                                                     len(feats_b)))
    if feats_a.shape[1] != feats_b.shape[1]:
        raise ShapeError('feature sizes differ: {} vs {}'.format(
            feats_a.shape[1], feats_b.shape[1]))
    mu_a, cov_a = _moments(feats_a)
    mu_b, cov_b = _moments(feats_b)
    return frechet_from_moments(mu_a, cov_a, mu_b, cov_b)


def _window3(array):
    """3x3 windows over the last two axes with edge padding."""
    pad = [(0, 0)] * (array.ndim - 2) + [(1, 1), (1, 1)]
    return sliding_window_view(np.pad(array, pad, mode='edge'), (3, 3),
                               axis=(-2, -1))


def oracle_pixel_accuracy(synth, layout, spec, interior=False):
    """Classify pixels by the nearest family reference color.

    Each pixel's 3x3 local mean color is assigned to the family with the
    nearest mean color. Classes sharing a family are merged. Every pixel is
    scored unless ``interior`` is set, which skips pixels whose 3x3
    neighbourhood touches another class.

    Args:
        synth (Tensor): Images of shape (b, 3, h, w) in [-1, 1].
        layout (scgen.generators.SemanticLayout): Ground-truth layout.
        spec (scgen.synthdata.SceneSpec): The dataset recipe.
        interior (bool): Score only pixels away from class boundaries.

    Returns:
        tuple: ``(accuracy, per_class_accuracy, per_class_counts)``.
    """
    images = np.asarray(getattr(synth, 'data', synth), dtype=np.float64)
    labels = layout.labels()
    if images.shape[0] != labels.shape[0] or \
            images.shape[2:] != labels.shape[1:]:
        raise ShapeError('images {} and layout {} do not match'.format(
            images.shape, layout.values.shape))
    refs = reference_colors(spec)
    local = _window3(images).mean(axis=(-2, -1))
    local = local.transpose(0, 2, 3, 1)
    dist = ((local[..., None, :] - refs) ** 2).sum(axis=-1)
    predicted = dist.argmin(axis=-1)
    family_of = spec.family_of()
    truth = family_of[labels]

    if interior:
        windows = _window3(labels)
        scored = (windows == labels[..., None, None]).all(axis=(-2, -1))
    else:
        scored = np.ones(labels.shape, dtype=bool)
    correct = (predicted == truth) & scored

    classes = spec.class_count
    counts = np.bincount(labels[scored], minlength=classes)
    hits = np.bincount(labels[correct], minlength=classes)
    per_class = np.where(counts > 0, hits / np.maximum(counts, 1), 0.0)
    total = counts.sum()
    accuracy = float(hits.sum() / total) if total else 0.0
    return accuracy, per_class, counts


def emit_reports(stats, metrics, out_dir):
    """Write ``similarity.csv``/``similarity.pgm`` and ``metrics.csv``.

    Either input may be ``None`` to skip its files.

    Args:
        stats (ClassVectorStats): Similarity analysis.
        metrics (list): ``MetricReport`` rows.
        out_dir (str): Existing directory.

    Returns:
        list: Paths written.
    """
    written = []
    try:
        if stats is not None:
            path = os.path.join(out_dir, 'similarity.csv')
            with open(path, 'w', newline='') as f:
                writer = csv.writer(f, lineterminator='\n')
                writer.writerow(['class_i', 'class_j', 'cosine'])
                for i in range(stats.class_count):
                    for j in range(stats.class_count):
                        value = '{:.6f}'.format(stats.similarity[i, j]) \
                            if stats.present[i] and stats.present[j] else ''
                        writer.writerow([i, j, value])
            written.append(path)
            path = os.path.join(out_dir, 'similarity.pgm')
            io.write_pgm(path, similarity_heatmap(stats))
            written.append(path)
        if metrics is not None:
            path = os.path.join(out_dir, 'metrics.csv')
            classes = max((len(m.per_class) for m in metrics), default=0)
            with open(path, 'w', newline='') as f:
                writer = csv.writer(f, lineterminator='\n')
                writer.writerow(['step', 'frechet', 'accuracy',
                                 'accuracy_interior'] +
                                ['accuracy_class_{}'.format(c)
                                 for c in range(classes)])
                for m in metrics:
                    writer.writerow(
                        [m.step, '{:.6f}'.format(m.frechet),
                         '{:.6f}'.format(m.pixel_accuracy),
                         '' if m.interior_accuracy is None else
                         '{:.6f}'.format(m.interior_accuracy)] +
                        ['{:.6f}'.format(a) for a in m.per_class])
            written.append(path)
    except OSError as err:
        raise IOError('could not write reports to {}: {}'.format(
            out_dir, err)) from err
    for path in written:
        logger.debug('Wrote %s.', path)
    return written


def similarity_heatmap(stats):
    """uint8 (c, c) image, ``round(255 (cos + 1) / 2)``; absent classes 0."""
    heat = np.round(255 * (stats.similarity + 1) / 2)
    mask = np.outer(stats.present, stats.present)
    return np.where(mask, heat, 0).astype(np.uint8)
