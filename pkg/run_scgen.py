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
"""Top level script to run scgen commands."""
import logging
import sys

from scgen.argparse import get_arg_parser
from scgen.app_runners import run_command


def initialize_logger(log_level):
    logger = logging.getLogger()
    logger.setLevel(logging.DEBUG)

    log_level = getattr(logging, log_level)

    fmt = '[%(asctime)s]:[%(levelname)s]:[%(name)s]: %(message)s'
    formatter = logging.Formatter(fmt=fmt)

    console = logging.StreamHandler(stream=sys.stdout)
    console.setFormatter(formatter)
    console.setLevel(log_level)
    logger.addHandler(console)


def main(argv=None):
    # get command line args
    ARGS = get_arg_parser().parse_args(argv)

    initialize_logger(log_level=ARGS.log_level)

    try:
        run_command(dict(ARGS._get_kwargs()))
    except Exception as err:  # pylint: disable=broad-except
        logging.getLogger(__name__).debug('Command failed.', exc_info=True)
        message = ' '.join(str(err).split()) or repr(err)
        print('scgen {}: {}: {}'.format(ARGS.command, type(err).__name__,
                                        message), file=sys.stderr)
        return 1
    return 0


if __name__ == '__main__':
    sys.exit(main())
