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
"""Exceptions raised by scgen.

Each error subclasses the builtin that would otherwise be raised, so callers
can catch either the specific class or the builtin.
"""


class ShapeError(ValueError):
    """Operand shapes are incompatible."""


class ParameterError(ValueError):
    """A scalar or structural argument is out of its valid range."""


class ConfigError(ValueError):
    """An experiment or network configuration is invalid.

    Args:
        message (str): Human readable description.
        key (str): Dotted name of the offending configuration key.
    """

    def __init__(self, message, key=None):
        if key is not None:
            message = '{}: {}'.format(key, message)
        super().__init__(message)
        self.key = key


class ValidityError(ValueError):
    """A tensor or loss term holds NaN or Inf values."""

    def __init__(self, message, name=None):
        if name is not None:
            message = '{}: {}'.format(name, message)
        super().__init__(message)
        self.name = name


class StateError(RuntimeError):
    """An object was used before the state it requires was populated."""


class GraphError(RuntimeError):
    """The recorded computation graph is malformed."""


class FormatError(IOError):
    """A file does not conform to its binary or text format."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = '{} (at byte offset {})'.format(message, offset)
        super().__init__(message)
        self.offset = offset


class LoadError(IOError):
    """A dataset directory is incomplete."""

    def __init__(self, message, indices=()):
        super().__init__(message)
        self.indices = list(indices)
