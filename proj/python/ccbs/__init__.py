# Copyright 2026 The ccbs Authors
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

"""Continuously-coupled boson sampling toolkit."""

from ._core import (
    CapacityError,
    ConfigError,
    DomainError,
    FitError,
    InconsistentDataError,
    NumericalError,
    UnderdeterminedError,
    clements_increment,
    distribution,
    haar_unitary,
    hom_plateau,
    hom_visibility,
    min_spread_length,
    output_probability,
    permanent,
    reconstruct_from_unitary,
    sample,
    similarity,
    simulate_device,
    spdc_weights,
    unitarity_defect,
    validation_z_score,
)

__all__ = [name for name in dir() if not name.startswith("_")]
