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
"""Tests for scgen.analysis"""

import csv
import os

import numpy as np

import pytest

import scgen
from scgen import analysis
from scgen.condops import SemanticVectorMap
from scgen.exceptions import ParameterError, ShapeError
from scgen.generators import SemanticLayout
from scgen.tensor import Tensor


def _level(vectors, gate_mode='softmax'):
    """Vector map from per-position vectors of shape (b, h, w, n)."""
    values = np.asarray(vectors, dtype=np.float64).transpose(0, 3, 1, 2)
    return SemanticVectorMap(Tensor(values), gate_mode)


def test_vector_space():
    probs = np.array([[[[0.7]], [[0.2]], [[0.1]]]])
    np.testing.assert_allclose(analysis.vector_space(probs), probs)
    logits = analysis.vector_space(probs, 'logit')
    expected = np.log([0.7, 0.2, 0.1])
    expected -= expected.mean()
    np.testing.assert_allclose(logits[0, :, 0, 0], expected)
    np.testing.assert_allclose(analysis.vector_space(probs, 'probability'),
                               probs)
    # other gates are compared as they are
    np.testing.assert_allclose(analysis.vector_space(probs, 'logit', 'tanh'),
                               probs)
    with pytest.raises(ParameterError):
        analysis.vector_space(probs, 'cosine')


def test_class_vector_stats():
    a, b = [0.4, 0.2, 0.1], [0.1, 0.2, 0.4]
    vectors = [[[a, a], [b, b]]]
    labels = np.array([[[0, 1], [2, 2]]])
    layout = SemanticLayout.from_labels(labels, 4, dtype=np.float64)

    stats = analysis.class_vector_stats(_level(vectors), layout)
    assert stats.space == 'probability'
    assert stats.class_count == 4
    np.testing.assert_array_equal(stats.counts, [1, 1, 2, 0])
    np.testing.assert_array_equal(stats.present, [True, True, True, False])
    np.testing.assert_allclose(stats.means[2], b)
    # identical vectors
    np.testing.assert_allclose(stats.similarity[0, 1], 1.0)
    np.testing.assert_allclose(stats.similarity[0, 2],
                               np.dot(a, b) / np.dot(a, a))
    np.testing.assert_array_equal(stats.similarity,
                                  stats.similarity.T)
    np.testing.assert_allclose(np.diag(stats.similarity), [1, 1, 1, 0])
    # the absent class is flagged, not NaN
    np.testing.assert_array_equal(stats.similarity[3], 0)
    np.testing.assert_array_equal(stats.means[3], 0)

    # logits of mirrored vectors point in opposite directions
    stats = analysis.class_vector_stats(_level(vectors), layout,
                                        space='logit')
    assert stats.space == 'logit'
    np.testing.assert_allclose(stats.similarity[0, 2], -1.0)
    np.testing.assert_allclose(stats.similarity[0, 1], 1.0)


def test_class_vector_stats_orthogonal():
    vectors = [[[[1, 0], [0, 1]]]]
    layout = SemanticLayout.from_labels(np.array([[[0, 1]]]), 2)
    stats = analysis.class_vector_stats(_level(vectors, 'sigmoid'), layout)
    np.testing.assert_allclose(stats.similarity, np.eye(2), atol=1e-12)

    # a class with a zero mean vector stays finite
    vectors = [[[[0, 0], [0, 1]]]]
    stats = analysis.class_vector_stats(_level(vectors, 'sigmoid'), layout)
    assert np.all(np.isfinite(stats.similarity))
    assert stats.similarity[0, 1] == 0


def test_class_vector_stats_scale_invariant():
    rng = np.random.default_rng(4)
    vectors = rng.uniform(0.1, 1, size=(2, 4, 4, 3))
    labels = rng.integers(0, 3, size=(2, 4, 4))
    layout = SemanticLayout.from_labels(labels, 3, dtype=np.float64)
    base = analysis.class_vector_stats(_level(vectors), layout,
                                       space='probability')
    scaled = vectors.copy()
    scaled[labels == 1] *= 7.0
    other = analysis.class_vector_stats(_level(scaled), layout,
                                        space='probability')
    np.testing.assert_allclose(base.similarity, other.similarity, atol=1e-12)


def test_class_vector_stats_shape():
    level = _level(np.full((1, 2, 2, 3), 1 / 3))
    layout = SemanticLayout.from_labels(np.zeros((1, 4, 4), dtype=int), 2)
    with pytest.raises(ShapeError):
        analysis.class_vector_stats(level, layout)
    with pytest.raises(ShapeError):
        analysis.class_vector_stats(level, SemanticLayout.from_labels(
            np.zeros((2, 2, 2), dtype=int), 2))


def test_frechet_distance_closed_form():
    a = np.array([-1.0, 1.0]) / np.sqrt(2)  # mean 0, unbiased variance 1
    assert analysis.frechet_distance(a, a) <= 1e-6
    np.testing.assert_allclose(analysis.frechet_distance(a, a + 1), 1.0)
    np.testing.assert_allclose(analysis.frechet_distance(a, 2 * a), 1.0)
    np.testing.assert_allclose(
        analysis.frechet_from_moments(0.0, 4.0, 0.0, 1.0), 1.0)


def test_frechet_distance_properties():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(50, 4))
    b = rng.normal(loc=0.5, scale=2.0, size=(40, 4))
    assert analysis.frechet_distance(a, a) <= 1e-6
    ab = analysis.frechet_distance(a, b)
    np.testing.assert_allclose(ab, analysis.frechet_distance(b, a),
                               rtol=1e-6)
    assert ab > 0

    # too few samples for a full covariance
    few_a, few_b = rng.normal(size=(3, 8)), rng.normal(size=(3, 8))
    assert analysis.frechet_distance(few_a, few_a) <= 1e-6
    value = analysis.frechet_distance(few_a, few_b)
    assert np.isfinite(value) and value > 0

    # a single sample has no spread
    np.testing.assert_allclose(
        analysis.frechet_distance(np.zeros((1, 2)), np.ones((1, 2))), 2.0)

    with pytest.raises(ParameterError):
        analysis.frechet_distance(np.zeros((0, 4)), a)
    with pytest.raises(ShapeError):
        analysis.frechet_distance(a, b[:, :3])


def _scenes(spec, count):
    pairs = [scgen.synthdata.generate_scene(spec, i) for i in range(count)]
    layout = SemanticLayout.from_labels(np.stack([p.labels for p in pairs]),
                                        spec.class_count)
    images = np.stack([scgen.io.from_uint8(p.pixels) for p in pairs])
    return layout, images


def test_oracle_pixel_accuracy():
    spec = scgen.utils.get_scene('families4')
    layout, images = _scenes(spec, 6)
    accuracy, per_class, counts = analysis.oracle_pixel_accuracy(
        Tensor(images), layout, spec)
    assert accuracy >= 0.95
    assert per_class.shape == (4,)
    assert np.all((per_class >= 0) & (per_class <= 1))
    np.testing.assert_allclose((per_class * counts).sum() / counts.sum(),
                               accuracy)

    # classes of one family are interchangeable
    labels = layout.labels()
    swapped = labels.copy()
    swapped[labels == 1] = 2
    swapped[labels == 2] = 1
    same, _, _ = analysis.oracle_pixel_accuracy(
        images, SemanticLayout.from_labels(swapped, 4), spec)
    np.testing.assert_allclose(same, accuracy)

    # a gray image lands on the background family everywhere
    gray = np.zeros_like(images)
    accuracy, per_class, counts = analysis.oracle_pixel_accuracy(
        gray, layout, spec)
    np.testing.assert_allclose(accuracy, counts[0] / counts.sum())
    np.testing.assert_allclose(per_class, [1, 0, 0, 0])

    with pytest.raises(ShapeError):
        analysis.oracle_pixel_accuracy(images[:2], layout, spec)


def test_oracle_pixel_accuracy_interior():
    spec = scgen.utils.get_scene('families4')
    layout, images = _scenes(spec, 4)
    labels = layout.labels()
    accuracy, _, counts = analysis.oracle_pixel_accuracy(images, layout, spec)
    # every pixel is scored by default
    assert counts.sum() == labels.size
    np.testing.assert_array_equal(
        counts, np.bincount(labels.reshape(-1), minlength=4))

    inner, _, inner_counts = analysis.oracle_pixel_accuracy(
        images, layout, spec, interior=True)
    assert 0 < inner_counts.sum() < counts.sum()
    assert np.all(inner_counts <= counts)
    assert accuracy >= 0.95
    assert inner >= 0.95


def _stats():
    similarity = np.array([[1.0, 0.5, 0.0], [0.5, 1.0, 0.0], [0, 0, 0]])
    return analysis.ClassVectorStats(
        means=np.zeros((3, 2)), counts=np.array([4, 2, 0]),
        similarity=similarity, present=np.array([True, True, False]))


def test_similarity_heatmap():
    stats = _stats()
    stats.similarity[0, 1] = stats.similarity[1, 0] = -1.0
    heat = analysis.similarity_heatmap(stats)
    assert heat.dtype == np.uint8
    np.testing.assert_array_equal(heat, [[255, 0, 0], [0, 255, 0],
                                         [0, 0, 0]])
    stats.similarity[0, 1] = stats.similarity[1, 0] = 0.0
    assert analysis.similarity_heatmap(stats)[0, 1] == 128


def test_emit_reports(tmpdir):
    out = str(tmpdir)
    metrics = [analysis.MetricReport('real', 0.0, 0.99, [1.0, 0.98], [10, 5],
                                     interior_accuracy=0.995),
               analysis.MetricReport(500, 1.25, 0.5, [0.75, 0.0], [10, 5])]
    written = analysis.emit_reports(_stats(), metrics, out)
    assert [os.path.basename(p) for p in written] == [
        'similarity.csv', 'similarity.pgm', 'metrics.csv']

    with open(os.path.join(out, 'similarity.csv')) as f:
        rows = list(csv.reader(f))
    assert rows[0] == ['class_i', 'class_j', 'cosine']
    assert len(rows) == 1 + 9
    assert rows[2] == ['0', '1', '0.500000']
    # absent classes have no value
    assert rows[3] == ['0', '2', '']

    heat = scgen.io.read_pgm(os.path.join(out, 'similarity.pgm'))
    np.testing.assert_array_equal(heat[0], [255, 191, 0])

    with open(os.path.join(out, 'metrics.csv')) as f:
        rows = list(csv.reader(f))
    assert rows[0] == ['step', 'frechet', 'accuracy', 'accuracy_interior',
                       'accuracy_class_0', 'accuracy_class_1']
    assert rows[1] == ['real', '0.000000', '0.990000', '0.995000', '1.000000',
                       '0.980000']
    assert rows[2] == ['500', '1.250000', '0.500000', '', '0.750000',
                       '0.000000']

    # emitting again gives the same bytes
    before = {}
    for path in written:
        with open(path, 'rb') as f:
            before[path] = f.read()
    analysis.emit_reports(_stats(), metrics, out)
    for path in written:
        with open(path, 'rb') as f:
            assert f.read() == before[path]


def test_emit_reports_partial(tmpdir):
    out = str(tmpdir)
    assert analysis.emit_reports(None, None, out) == []
    written = analysis.emit_reports(None, [], out)
    assert [os.path.basename(p) for p in written] == ['metrics.csv']
    with open(written[0]) as f:
        assert f.read() == 'step,frechet,accuracy,accuracy_interior\n'

    with pytest.raises(IOError, match='could not write'):
        analysis.emit_reports(_stats(), None, os.path.join(out, 'missing'))
