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
"""Procedural paired (layout, image) dataset with appearance families.

Every class belongs to an appearance family. A family owns one texture field
per dataset seed, so classes of the same family are painted pixel-identically
wherever they appear; only the layout tells them apart.
"""

import concurrent.futures
import dataclasses
import logging
import os
import queue
import re
import threading

import numpy as np
from PIL import Image, ImageDraw

from scgen import io
from scgen.exceptions import ConfigError, LoadError, ParameterError, \
    ValidityError
from scgen.generators import SemanticLayout
from scgen.tensor import Tensor


logger = logging.getLogger(__name__)

TEXTURE_KINDS = ('flat', 'checker', 'stripes')
SPEC_FILE = 'spec.json'
IMAGE_PATTERN = 'img_{:05d}.ppm'
LAYOUT_PATTERN = 'seg_{:05d}.pgm'

_SCENE_STREAM = 0
_TEXTURE_STREAM = 1
_FILE_RE = re.compile(r'^(img|seg)_(\d{5})\.(ppm|pgm)$')


@dataclasses.dataclass
class ClassTexture:
    """Appearance of one class.

    Colors are RGB triples in [0, 1]. ``period`` is the full repeat length in
    pixels of a checker or stripe pattern and ``angle`` the stripe direction
    in degrees. ``noise`` is the standard deviation of a fixed per-family
    noise field added on top.
    """

    family: int
    kind: str = 'flat'
    colors: tuple = ((0.5, 0.5, 0.5),)
    period: int = 4
    angle: float = 0.0
    noise: float = 0.0

    def __post_init__(self):
        self.colors = tuple(tuple(float(v) for v in c) for c in self.colors)

    def params(self):
        return (self.kind, self.colors, int(self.period), float(self.angle),
                float(self.noise))


@dataclasses.dataclass
class SceneSpec:
    """Recipe of a synthetic dataset; class 0 is the background."""

    classes: list
    resolution: int = 32
    min_shapes: int = 2
    max_shapes: int = 4
    seed: int = 0
    name: str = 'custom'

    @property
    def class_count(self):
        return len(self.classes)

    def families(self):
        """Sorted family ids."""
        return sorted({c.family for c in self.classes})

    def family_of(self):
        """Integer array mapping class index to family position."""
        order = {f: i for i, f in enumerate(self.families())}
        return np.array([order[c.family] for c in self.classes], dtype=np.int64)

    def validate(self):
        if self.class_count < 2:
            raise ConfigError('needs at least 2 classes', 'scene.classes')
        if self.resolution < 8:
            raise ConfigError('must be >= 8', 'scene.resolution')
        if not 1 <= self.min_shapes <= self.max_shapes:
            raise ConfigError('need 1 <= min_shapes <= max_shapes',
                              'scene.min_shapes')
        members = {}
        for i, texture in enumerate(self.classes):
            if texture.kind not in TEXTURE_KINDS:
                raise ConfigError('kind must be one of {}'.format(
                    TEXTURE_KINDS), 'scene.classes[{}].kind'.format(i))
            if texture.kind != 'flat' and len(texture.colors) < 2:
                raise ConfigError('{} textures need two colors'.format(
                    texture.kind), 'scene.classes[{}].colors'.format(i))
            if texture.period < 2:
                raise ConfigError('must be >= 2',
                                  'scene.classes[{}].period'.format(i))
            members.setdefault(texture.family, []).append(texture)
        for family, textures in members.items():
            if any(t.params() != textures[0].params() for t in textures):
                raise ConfigError('classes of family {} have different '
                                  'textures'.format(family), 'scene.classes')
        if not any(len(t) >= 2 for t in members.values()):
            raise ConfigError('at least two classes must share a family',
                              'scene.classes')
        if len(members) < 2:
            raise ConfigError('at least two families are needed',
                              'scene.classes')
        return self

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, document):
        document = dict(document)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(document) - known)
        if unknown:
            raise ConfigError('unknown key', 'scene.' + unknown[0])
        texture_keys = {f.name for f in dataclasses.fields(ClassTexture)}
        classes = []
        for i, entry in enumerate(document.pop('classes', [])):
            bad = sorted(set(entry) - texture_keys)
            if bad:
                raise ConfigError('unknown key',
                                  'scene.classes[{}].{}'.format(i, bad[0]))
            classes.append(ClassTexture(**entry))
        return cls(classes=classes, **document)


@dataclasses.dataclass
class SamplePair:
    """One rendered scene: integer labels and 8-bit RGB pixels."""

    labels: np.ndarray
    pixels: np.ndarray

    def layout(self, class_count, dtype=np.float32):
        return SemanticLayout.from_labels(self.labels, class_count, dtype)

    def image(self, dtype=np.float32):
        """(1, 3, h, w) tensor in [-1, 1]."""
        return Tensor(io.from_uint8(self.pixels, dtype)[None])


def render_texture(texture, resolution, seed):
    """Float (h, w, 3) field in [0, 1] of one family, fixed per seed."""
    res = int(resolution)
    ys, xs = np.mgrid[0:res, 0:res].astype(np.float64)
    colors = np.asarray(texture.colors, dtype=np.float64)
    half = texture.period / 2.0
    if texture.kind == 'flat':
        field = np.broadcast_to(colors[0], (res, res, 3)).copy()
    else:
        if texture.kind == 'checker':
            parity = (np.floor(ys / half) + np.floor(xs / half)) % 2
        else:
            theta = np.deg2rad(texture.angle)
            coord = xs * np.cos(theta) + ys * np.sin(theta)
            parity = np.floor(coord / half) % 2
        field = np.where(parity[..., None] > 0, colors[1], colors[0])
    if texture.noise > 0:
        rng = np.random.default_rng([seed, _TEXTURE_STREAM, texture.family])
        field = field + texture.noise * rng.standard_normal(field.shape)
    return np.clip(field, 0, 1)


def family_fields(spec):
    """Stacked (families, h, w, 3) texture fields, in ``families()`` order."""
    first = {}
    for texture in spec.classes:
        first.setdefault(texture.family, texture)
    return np.stack([render_texture(first[f], spec.resolution, spec.seed)
                     for f in spec.families()])


def reference_colors(spec):
    """Mean color of every family field, mapped to [-1, 1]."""
    return family_fields(spec).mean(axis=(1, 2)) * 2 - 1


def paint(labels, spec, fields=None):
    """Render the uint8 (h, w, 3) image of a label map."""
    if fields is None:
        fields = family_fields(spec)
    labels = np.asarray(labels)
    family = spec.family_of()[labels]
    ys, xs = np.indices(labels.shape)
    image = fields[family, ys, xs]
    return np.round(image * 255).astype(np.uint8)


def draw_layout(spec, index):
    """Background plus 2-4 random rectangles and ellipses."""
    res = spec.resolution
    rng = np.random.default_rng([spec.seed, _SCENE_STREAM, int(index)])
    canvas = Image.new('L', (res, res), 0)
    draw = ImageDraw.Draw(canvas)
    count = int(rng.integers(spec.min_shapes, spec.max_shapes + 1))
    low, high = max(res // 4, 3), max(res // 2, 4)
    for _ in range(count):
        label = int(rng.integers(1, spec.class_count))
        width = int(rng.integers(low, high + 1))
        height = int(rng.integers(low, high + 1))
        x0 = int(rng.integers(0, res - width + 1))
        y0 = int(rng.integers(0, res - height + 1))
        box = [x0, y0, x0 + width - 1, y0 + height - 1]
        if rng.random() < 0.5:
            draw.rectangle(box, fill=label)
        else:
            draw.ellipse(box, fill=label)
    return np.array(canvas, dtype=np.uint8)


def generate_scene(spec, index, fields=None):
    """Deterministic ``SamplePair`` for ``(spec.seed, index)``."""
    labels = draw_layout(spec, index)
    return SamplePair(labels=labels, pixels=paint(labels, spec, fields))


def write_dataset(out_dir, spec, count, threads=1):
    """Render ``count`` pairs into ``out_dir`` and record ``spec.json``.

    Args:
        out_dir (str): Existing directory to write into.
        spec (SceneSpec): The recipe.
        count (int): Number of pairs, at least 1.
        threads (int): Worker threads; each index is written independently.

    Returns:
        list: Written file paths, in index order.
    """
    if int(count) < 1:
        raise ParameterError('count must be >= 1, got {}'.format(count))
    spec.validate()
    fields = family_fields(spec)

    def _write(index):
        pair = generate_scene(spec, index, fields)
        image_path = os.path.join(out_dir, IMAGE_PATTERN.format(index))
        layout_path = os.path.join(out_dir, LAYOUT_PATTERN.format(index))
        io.write_ppm(image_path, pair.pixels)
        io.write_pgm(layout_path, pair.labels)
        return [image_path, layout_path]

    with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
        written = [p for paths in pool.map(_write, range(int(count)))
                   for p in paths]
    spec_path = os.path.join(out_dir, SPEC_FILE)
    io.write_json(spec_path, spec.to_dict())
    written.append(spec_path)
    return written


def scan_dataset(data_dir):
    """Sorted indices present as both an image and a layout.

    Raises:
        LoadError: Listing every index that has only one of the two files.
    """
    found = {'img': set(), 'seg': set()}
    for name in os.listdir(data_dir):
        match = _FILE_RE.match(name)
        if match:
            found[match.group(1)].add(int(match.group(2)))
    unpaired = sorted(found['img'] ^ found['seg'])
    if unpaired:
        raise LoadError('unpaired files in {} at indices {}'.format(
            data_dir, unpaired), unpaired)
    indices = sorted(found['img'])
    if not indices:
        raise LoadError('no image/layout pairs found in {}'.format(data_dir))
    return indices


def load_spec(data_dir):
    path = os.path.join(data_dir, SPEC_FILE)
    if not os.path.exists(path):
        raise LoadError('{} is missing'.format(path))
    return SceneSpec.from_dict(io.read_json(path))


class Dataset(object):
    """All pairs of a dataset directory, held in memory.

    Args:
        spec (SceneSpec): The recipe recorded with the data.
        indices (list): File indices, sorted.
        labels (numpy.array): uint8 array of shape (N, h, w).
        pixels (numpy.array): uint8 array of shape (N, h, w, 3).
    """

    def __init__(self, spec, indices, labels, pixels):
        self.spec = spec
        self.indices = list(indices)
        self.labels = labels
        self.pixels = pixels

    def __len__(self):
        return len(self.indices)

    @classmethod
    def load(cls, data_dir, threads=1):
        spec = load_spec(data_dir)
        indices = scan_dataset(data_dir)

        def _read(index):
            labels = io.read_pgm(os.path.join(data_dir,
                                              LAYOUT_PATTERN.format(index)))
            pixels = io.read_ppm(os.path.join(data_dir,
                                              IMAGE_PATTERN.format(index)))
            if labels.shape != pixels.shape[:2]:
                raise LoadError('index {}: layout {} and image {} differ in '
                                'size'.format(index, labels.shape,
                                              pixels.shape[:2]), [index])
            if labels.max() >= spec.class_count:
                raise ValidityError('index {}: label {} outside the {} '
                                    'classes'.format(index, labels.max(),
                                                     spec.class_count))
            return labels, pixels

        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
            pairs = list(pool.map(_read, indices))
        logger.debug('Loaded %s pairs from %s.', len(pairs), data_dir)
        return cls(spec, indices,
                   np.stack([p[0] for p in pairs]),
                   np.stack([p[1] for p in pairs]))

    def batches_per_epoch(self, batch_size):
        return len(self) // int(batch_size)

    def epoch_order(self, seed, epoch):
        """Seeded permutation of positions for one epoch."""
        return np.random.default_rng([int(seed), int(epoch)]).permutation(
            len(self))

    def batch(self, positions, dtype=np.float32):
        """``(SemanticLayout, image Tensor)`` for the given positions."""
        positions = np.asarray(positions)
        layout = SemanticLayout.from_labels(self.labels[positions],
                                            self.spec.class_count, dtype)
        images = np.stack([io.from_uint8(p, dtype)
                           for p in self.pixels[positions]])
        return layout, Tensor(images)


def batch_positions(dataset, batch_size, seed, start_step=0):
    """Endless ``(step, positions)`` stream, dropping partial batches.

    The order is a function of ``seed`` and the step only, so a stream
    started at ``start_step`` continues an interrupted one exactly.
    """
    batch_size = int(batch_size)
    per_epoch = dataset.batches_per_epoch(batch_size)
    if per_epoch < 1:
        raise ParameterError('batch size {} exceeds the {} samples'.format(
            batch_size, len(dataset)))
    step = int(start_step)
    epoch, order = None, None
    while True:
        if step // per_epoch != epoch:
            epoch = step // per_epoch
            order = dataset.epoch_order(seed, epoch)
        offset = (step % per_epoch) * batch_size
        yield step, order[offset:offset + batch_size]
        step += 1


class BatchStream(object):
    """Batches assembled ahead of time on a worker thread.

    Iterating yields ``(step, layout, images)`` in the same order as
    ``batch_positions``.
    """

    def __init__(self, dataset, batch_size, seed, start_step=0, prefetch=2,
                 dtype=np.float32):
        self._positions = batch_positions(dataset, batch_size, seed,
                                          start_step)
        self._dataset = dataset
        self._dtype = dtype
        self._queue = queue.Queue(maxsize=max(int(prefetch), 1))
        self._stop = threading.Event()
        self._worker = threading.Thread(target=self._fill, daemon=True)
        self._worker.start()

    def _fill(self):
        try:
            for step, positions in self._positions:
                item = (step,) + self._dataset.batch(positions, self._dtype)
                while not self._stop.is_set():
                    try:
                        self._queue.put(item, timeout=0.1)
                        break
                    except queue.Full:
                        continue
                if self._stop.is_set():
                    return
        except Exception as err:  # surfaced to the consumer
            self._queue.put(err)

    def __iter__(self):
        return self

    def __next__(self):
        item = self._queue.get()
        if isinstance(item, Exception):
            raise item
        return item

    def close(self):
        self._stop.set()
        self._worker.join(timeout=1.0)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
