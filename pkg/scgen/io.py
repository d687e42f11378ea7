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
"""Functions for reading and writing tensors, checkpoints and images."""

import collections
import dataclasses
import json
import logging
import struct

import numpy as np
from PIL import Image

from scgen.exceptions import FormatError, ParameterError


logger = logging.getLogger(__name__)

TENSOR_MAGIC = b'SCGT'
TENSOR_VERSION = 1
CHECKPOINT_MAGIC = b'SCGC'
CHECKPOINT_VERSION = 1

DTYPE_CODES = {np.dtype('float32'): 0, np.dtype('float64'): 1}
CODE_DTYPES = {0: np.dtype('<f4'), 1: np.dtype('<f8')}

_TENSOR_HEAD = struct.Struct('<4sBBI')
_CHECKPOINT_HEAD = struct.Struct('<4sBI')


def encode_tensor(array):
    """Serialize a float32/float64 array as one SCGT record.

    Layout: magic ``SCGT``, u8 version, u8 dtype code (0=f32, 1=f64),
    u32 ndim, ndim x u64 dims, then the little-endian row-major payload.
    """
    array = np.asarray(array)
    if array.dtype not in DTYPE_CODES:
        raise ParameterError('SCGT stores float32 or float64 arrays, got '
                             '{}'.format(array.dtype))
    code = DTYPE_CODES[array.dtype]
    head = _TENSOR_HEAD.pack(TENSOR_MAGIC, TENSOR_VERSION, code, array.ndim)
    dims = struct.pack('<{}Q'.format(array.ndim), *array.shape)
    payload = np.ascontiguousarray(array, dtype=CODE_DTYPES[code]).tobytes()
    return head + dims + payload


def decode_tensor(buffer, offset=0):
    """Parse one SCGT record starting at ``offset``.

    Returns:
        tuple: ``(array, end_offset)``.

    Raises:
        FormatError: On bad magic, version or dtype, or on truncation.
    """
    start = offset
    if len(buffer) < offset + _TENSOR_HEAD.size:
        raise FormatError('truncated tensor header', start)
    magic, version, code, ndim = _TENSOR_HEAD.unpack_from(buffer, offset)
    if magic != TENSOR_MAGIC:
        raise FormatError('bad tensor magic {!r}'.format(magic), start)
    if version != TENSOR_VERSION:
        raise FormatError('unsupported tensor version {}'.format(version),
                          start + 4)
    if code not in CODE_DTYPES:
        raise FormatError('unknown dtype code {}'.format(code), start + 5)
    offset += _TENSOR_HEAD.size
    if len(buffer) < offset + 8 * ndim:
        raise FormatError('truncated tensor dims', offset)
    shape = struct.unpack_from('<{}Q'.format(ndim), buffer, offset)
    offset += 8 * ndim
    dtype = CODE_DTYPES[code]
    nbytes = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
    if len(buffer) < offset + nbytes:
        raise FormatError('truncated tensor payload, expected {} bytes'.format(
            nbytes), offset)
    array = np.frombuffer(buffer, dtype=dtype, count=nbytes // dtype.itemsize,
                          offset=offset).reshape(shape)
    return array.astype(dtype.type, copy=True), offset + nbytes


def write_tensor(path, array):
    with open(path, 'wb') as f:
        f.write(encode_tensor(array))


def read_tensor(path):
    with open(path, 'rb') as f:
        buffer = f.read()
    array, end = decode_tensor(buffer)
    if end != len(buffer):
        raise FormatError('trailing bytes after tensor record', end)
    return array


@dataclasses.dataclass
class Checkpoint:
    """Named arrays plus the metadata needed to resume or rebuild a run."""

    tensors: collections.OrderedDict
    step: int = 0
    config: dict = dataclasses.field(default_factory=dict)
    meta: dict = dataclasses.field(default_factory=dict)
    format_version: int = CHECKPOINT_VERSION


def encode_checkpoint(ckpt):
    header = {
        'config': ckpt.config,
        'format_version': ckpt.format_version,
        'meta': ckpt.meta,
        'names': list(ckpt.tensors),
        'step': int(ckpt.step),
    }
    text = json.dumps(header, sort_keys=True, separators=(',', ':'))
    header_bytes = text.encode('utf-8')
    parts = [_CHECKPOINT_HEAD.pack(CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
                                   len(header_bytes)), header_bytes]
    parts.extend(encode_tensor(value) for value in ckpt.tensors.values())
    return b''.join(parts)


def decode_checkpoint(buffer):
    if len(buffer) < _CHECKPOINT_HEAD.size:
        raise FormatError('truncated checkpoint header', len(buffer))
    magic, version, length = _CHECKPOINT_HEAD.unpack_from(buffer, 0)
    if magic != CHECKPOINT_MAGIC:
        raise FormatError('bad checkpoint magic {!r}'.format(magic), 0)
    if version != CHECKPOINT_VERSION:
        raise FormatError('unsupported checkpoint version {}'.format(version),
                          4)
    offset = _CHECKPOINT_HEAD.size
    if len(buffer) < offset + length:
        raise FormatError('truncated checkpoint name table', offset)
    try:
        header = json.loads(buffer[offset:offset + length].decode('utf-8'))
        names = header['names']
    except (ValueError, KeyError) as err:
        raise FormatError('unreadable checkpoint name table ({})'.format(err),
                          offset)
    offset += length
    tensors = collections.OrderedDict()
    for name in names:
        tensors[name], offset = decode_tensor(buffer, offset)
    if offset != len(buffer):
        raise FormatError('trailing bytes after {} tensor records'.format(
            len(names)), offset)
    return Checkpoint(tensors=tensors, step=int(header.get('step', 0)),
                      config=header.get('config', {}),
                      meta=header.get('meta', {}),
                      format_version=header.get('format_version',
                                                CHECKPOINT_VERSION))


def save_checkpoint(path, ckpt):
    """Write ``ckpt`` to ``path``; save -> load -> save is byte-identical."""
    data = encode_checkpoint(ckpt)
    with open(path, 'wb') as f:
        f.write(data)
    logger.debug('Saved %s tensors (%s bytes) at step %s to %s.',
                 len(ckpt.tensors), len(data), ckpt.step, path)


def load_checkpoint(path):
    """Read a checkpoint written by ``save_checkpoint``.

    Raises:
        FormatError: On bad magic or version, or on truncation, with the byte
            offset of the problem.
    """
    with open(path, 'rb') as f:
        buffer = f.read()
    try:
        return decode_checkpoint(buffer)
    except FormatError as err:
        raise FormatError('{}: {}'.format(path, err)) from err


def load_weights(path):
    """Named arrays of a checkpoint file, e.g. external perceptual weights."""
    return load_checkpoint(path).tensors


# images


def _check_magic(path, magic):
    with open(path, 'rb') as f:
        head = f.read(3)
    if head[:2] != magic or (len(head) > 2 and not head[2:].isspace()):
        raise FormatError('{}: expected a {} file, found header {!r}'.format(
            path, magic.decode('ascii'), head), 0)


def _read_netpbm(path, magic, mode):
    _check_magic(path, magic)
    try:
        with Image.open(path, formats=['PPM']) as img:
            img.load()
            if img.mode != mode:
                raise FormatError('{}: expected 8-bit {} data, got mode '
                                  '{}'.format(path, mode, img.mode))
            return np.array(img, dtype=np.uint8)
    except (OSError, SyntaxError, ValueError) as err:
        if isinstance(err, FormatError):
            raise
        raise FormatError('{}: malformed {} file ({})'.format(
            path, magic.decode('ascii'), err)) from err


def read_ppm(path):
    """Read a binary P6 file as a uint8 array of shape (h, w, 3)."""
    return _read_netpbm(path, b'P6', 'RGB')


def read_pgm(path):
    """Read a binary P5 file as a uint8 array of shape (h, w)."""
    return _read_netpbm(path, b'P5', 'L')


def write_ppm(path, pixels):
    pixels = np.asarray(pixels)
    if pixels.ndim != 3 or pixels.shape[2] != 3 or pixels.dtype != np.uint8:
        raise ParameterError('write_ppm expects uint8 (h, w, 3), got {} '
                             '{}'.format(pixels.dtype, pixels.shape))
    Image.fromarray(pixels).save(path, format='PPM')


def write_pgm(path, values):
    values = np.asarray(values)
    if values.ndim != 2:
        raise ParameterError('write_pgm expects a 2D array, got shape '
                             '{}'.format(values.shape))
    if values.min() < 0 or values.max() > 255:
        raise ParameterError('write_pgm values must lie in [0, 255]')
    Image.fromarray(values.astype(np.uint8)).save(path, format='PPM')


def to_uint8(image):
    """Map a (3, h, w) image in [-1, 1] to (h, w, 3) uint8."""
    image = np.clip(np.asarray(image, dtype=np.float64), -1, 1)
    pixels = np.round((image + 1) * 127.5).astype(np.uint8)
    return np.ascontiguousarray(pixels.transpose(1, 2, 0))


def from_uint8(pixels, dtype=np.float32):
    """Map (h, w, 3) uint8 pixels to a (3, h, w) image in [-1, 1]."""
    pixels = np.asarray(pixels, dtype=np.float64)
    return (pixels.transpose(2, 0, 1) / 127.5 - 1).astype(dtype)


def write_json(path, document):
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(document, f, sort_keys=True, indent=2)
        f.write('\n')


def read_json(path):
    with open(path, 'r', encoding='utf-8') as f:
        return json.load(f)
