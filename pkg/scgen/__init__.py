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
"""Semantic-conditioned image synthesis with spatially conditional operators."""


from scgen import exceptions
from scgen import tensor
from scgen import functional
from scgen import nn
from scgen import condops
from scgen import generators
from scgen import discriminator
from scgen import losses
from scgen import io
from scgen import synthdata
from scgen import training
from scgen import analysis
from scgen import gradcheck
from scgen import settings
from scgen import config
from scgen import utils
from scgen import prepare
from scgen import argparse
from scgen import app_runners
