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

import math

import numpy as np
import pytest

import ccbs


def test_permanent_and_haar():
    assert ccbs.permanent(np.ones((3, 3), dtype=complex)) == pytest.approx(6.0)
    u = ccbs.haar_unitary(8, 3)
    assert u.shape == (8, 8)
    assert ccbs.unitarity_defect(u) < 1e-12
    assert np.allclose(u.conj().T @ u, np.eye(8), atol=1e-12)


def test_device_and_distribution():
    u = ccbs.simulate_device(rows=2, cols=4, seed=1, n_steps=256)
    assert ccbs.unitarity_defect(u) < 1e-9
    table = ccbs.distribution(u, [1, 0, 1, 0, 0, 0, 1, 0], collision_free=False)
    assert len(table["patterns"]) == math.comb(10, 3)
    assert sum(table["probabilities"]) == pytest.approx(1.0, abs=1e-9)
    events = ccbs.sample(u, [0, 2, 6], seed=4, count=10)
    assert len(events) == 10 and all(len(e) == 3 for e in events)


def test_hom_and_reconstruction():
    u = ccbs.haar_unitary(32, 11)
    assert 0.0 < ccbs.hom_plateau(u, 0, 1, 2, 3) < 1.0
    assert -1.0 <= ccbs.hom_visibility(u, 0, 1, 2, 3) <= 1.0
    rec = ccbs.reconstruct_from_unitary(u, [9, 13, 18])
    assert rec["moduli"].shape == (3, 32)
    assert rec["phase_quadruple_rmse"] < 1e-6


def test_footprint_and_weights():
    assert ccbs.clements_increment(30.0, 0.06, 1.0) == pytest.approx(4.551, abs=1e-3)
    assert ccbs.min_spread_length("linear", 32, 0.2) == pytest.approx(80.0)
    assert ccbs.spdc_weights(2.0) == pytest.approx([2 / 7, 4 / 7, 1 / 7])
    assert ccbs.similarity([0.5, 0.5], [0.5, 0.5]) == pytest.approx(1.0)


def test_errors_map_to_python():
    with pytest.raises(ValueError):
        ccbs.simulate_device(kind="hexagonal")
    with pytest.raises(ValueError):
        ccbs.permanent(np.ones((2, 3), dtype=complex))
