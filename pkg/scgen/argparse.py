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
"""Functions for parsing command line arguments"""

import argparse
import os

from scgen import settings
from scgen.gradcheck import DEFAULT_INSTANCES


def _nearest_existing(path):
    path = os.path.abspath(path)
    while not os.path.exists(path):
        parent = os.path.dirname(path)
        if parent == path:
            break
        path = parent
    return path


def get_arg_parser():
    """argument parser to consume command line arguments"""
    parser = argparse.ArgumentParser(prog='scgen')

    # Create a parent parser for common arguments
    # https://stackoverflow.com/a/63283912
    parent = argparse.ArgumentParser(add_help=False)

    class WritableDirectoryAction(argparse.Action):
        # The directory may not exist yet, but whatever part of the path
        # does exist must be a writable directory.
        def __call__(self, parser, namespace, values, option_string=None):
            prospective_dir = values
            if os.path.exists(prospective_dir) and \
                    not os.path.isdir(prospective_dir):
                raise argparse.ArgumentTypeError(
                    '{} is not a valid directory'.format(prospective_dir))
            existing = _nearest_existing(prospective_dir)
            if os.path.isdir(existing) and \
                    os.access(existing, os.W_OK | os.X_OK):
                setattr(namespace, self.dest, os.path.realpath(prospective_dir))
                return
            raise argparse.ArgumentTypeError(
                '{} is not a writable directory'.format(prospective_dir))

    def existing_file(x):
        if x is not None and not os.path.isfile(x):
            raise argparse.ArgumentTypeError('{} does not exist.'.format(x))
        return x

    def existing_dir(x):
        if not os.path.isdir(x):
            raise argparse.ArgumentTypeError(
                '{} is not a valid directory'.format(x))
        return x

    def writable_file(x):
        directory = os.path.dirname(os.path.abspath(x))
        existing = _nearest_existing(directory)
        if not os.access(existing, os.W_OK | os.X_OK):
            raise argparse.ArgumentTypeError(
                '{} is not in a writable directory'.format(x))
        return x

    parent.add_argument('-L', '--log-level', default='INFO',
                        choices=('DEBUG', 'INFO', 'WARN', 'ERROR', 'CRITICAL'),
                        help='Only log the given level and above.')

    # use subparsers to group options for different commands
    # https://stackoverflow.com/a/30217387
    subparsers = parser.add_subparsers(dest='command', help='command name')
    subparsers.required = True

    # Each subparser inherits from ``parent``. Option dests must match the
    # keyword names of the runner in ``scgen.app_runners``.

    make_data = subparsers.add_parser(
        'make-data', parents=[parent],
        help='Generate a procedural layout/image dataset.')

    make_data.add_argument('--out', required=True,
                           action=WritableDirectoryAction,
                           help='REQUIRED: Dataset directory to write.')

    make_data.add_argument('--preset', default=settings.DEFAULT_PRESET,
                           help='Scene preset, or an experiment preset whose '
                                'scene is used.')

    make_data.add_argument('--count', type=int, default=8,
                           help='Number of layout/image pairs.')

    make_data.add_argument('--seed', type=int, default=0,
                           help='Seed of the scene generator.')

    make_data.add_argument('--force', action='store_true',
                           help='Write into a non-empty directory.')

    train = subparsers.add_parser(
        'train', parents=[parent],
        help='Train SVG, SRG and the discriminator on a dataset.')

    train.add_argument('--config', type=existing_file,
                       help='Experiment config JSON. Defaults to the '
                            '{} preset.'.format(settings.DEFAULT_PRESET))

    train.add_argument('--data', required=True, type=existing_dir,
                       help='REQUIRED: Dataset directory.')

    train.add_argument('--out', required=True, action=WritableDirectoryAction,
                       help='REQUIRED: Directory for checkpoints, samples '
                            'and metrics.')

    train.add_argument('--resume', type=existing_file,
                       help='Checkpoint to continue training from.')

    synth = subparsers.add_parser(
        'synth', parents=[parent],
        help='Render images for a label layout.')

    synth.add_argument('--ckpt', required=True, type=existing_file,
                       help='REQUIRED: Trained checkpoint.')

    synth.add_argument('--layout', required=True, type=existing_file,
                       help='REQUIRED: Binary PGM of class indices.')

    synth.add_argument('--seed', type=int, default=0,
                       help='Seed of the noise vectors.')

    synth.add_argument('--out', required=True, type=writable_file,
                       help='REQUIRED: Output PPM path.')

    synth.add_argument('--samples', type=int, default=1,
                       help='Number of noise draws. With more than one, '
                            'files are named <out>_<k>.ppm.')

    analyze = subparsers.add_parser(
        'analyze', parents=[parent],
        help='Cosine similarities between class semantic vectors.')

    analyze.add_argument('--ckpt', required=True, type=existing_file,
                         help='REQUIRED: Trained checkpoint.')

    analyze.add_argument('--data', required=True, type=existing_dir,
                         help='REQUIRED: Dataset directory.')

    analyze.add_argument('--out', required=True,
                         action=WritableDirectoryAction,
                         help='REQUIRED: Report directory.')

    analyze.add_argument('--level', type=int, default=None,
                         help='Pyramid level to analyze. Defaults to the '
                              'finest.')

    analyze.add_argument('--space', default='probability',
                         choices=('probability', 'logit'),
                         help='Vector space the cosines are taken in: the '
                              'mixing weights or their centered logits.')

    evaluate = subparsers.add_parser(
        'eval', parents=[parent],
        help='Frechet distance and oracle pixel accuracy.')

    evaluate.add_argument('--ckpt', required=True, type=existing_file,
                          help='REQUIRED: Trained checkpoint.')

    evaluate.add_argument('--data', required=True, type=existing_dir,
                          help='REQUIRED: Dataset directory.')

    evaluate.add_argument('--out', required=True,
                          action=WritableDirectoryAction,
                          help='REQUIRED: Report directory.')

    gradcheck = subparsers.add_parser(
        'gradcheck', parents=[parent],
        help='Finite-difference check of every differentiable op.')

    gradcheck.add_argument('--seed', type=int, default=0,
                           help='Seed of the random instances.')

    gradcheck.add_argument('--instances', type=int,
                           default=DEFAULT_INSTANCES,
                           help='Random instances per op.')

    return parser
