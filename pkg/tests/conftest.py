# Copyright (C) 2025 Zhipeng Qu
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software and associated documentation files (the "Software"), to deal
# in the Software without restriction, including without limitation the rights
# to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
# copies of the Software, and to permit persons to whom the Software is
# furnished to do so, subject to the following conditions:
#
# The above copyright notice and this permission notice shall be included in all
# copies or substantial portions of the Software.
#
# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
# AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
# LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
# OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
# SOFTWARE.

"""Pytest fixtures for harmonic_torsion unit tests.

This module defines reusable test fixtures for:
- Target charts (flat plane, round sphere, hyperbolic plane)
- Small periodic grids and fixture maps on them
- A minimal TOML problem configuration written to a temporary directory
These fixtures are used across multiple test modules to keep grid sizes
and seeds consistent.
"""

import pytest

from harmonic_torsion.field.grid import GridDomain
from harmonic_torsion.field.maps import equator_map, perturbed_map
from harmonic_torsion.geometry.chart import (
    flat_chart,
    hyperbolic2_chart,
    sphere2_chart,
)
from harmonic_torsion.utils.helpers import make_rng


@pytest.fixture
def rng():
    """Deterministic generator shared by randomized tests."""
    return make_rng(12345)


@pytest.fixture
def flat2():
    return flat_chart(2)


@pytest.fixture
def flat3():
    return flat_chart(3)


@pytest.fixture
def sphere():
    return sphere2_chart()


@pytest.fixture
def hyperbolic():
    return hyperbolic2_chart()


@pytest.fixture
def domain16():
    return GridDomain(16, 16)


@pytest.fixture
def domain32():
    return GridDomain(32, 32)


@pytest.fixture
def equator16(domain16):
    """Degree-one equator map on a 16 x 16 grid (a harmonic map)."""
    return equator_map(domain16)


@pytest.fixture
def perturbed_equator16(equator16):
    """Equator map with a small symmetric perturbation."""
    return perturbed_map(equator16, 0.05, seed=3)


@pytest.fixture
def problem_toml(tmp_path):
    """Writes a small sphere problem configuration and returns its path."""
    path = tmp_path / "problem.toml"
    path.write_text(
        """seed = 7

[chart]
name = "sphere2"

[torsion]
kind = "zero"

[domain]
nx = 8
ny = 8

[initial_map]
kind = "perturbed"
base = "equator_wrap"
amplitude = 0.05

[geodesic]
position = [1.5707963267948966, 0.0]
velocity = [0.0, 1.0]
step = 0.01
n_steps = 50

[spectrum]
k = 3
form = "both"

[energy]
radii = [0.5, 1.0]
probe_t = 1e-3
"""
    )
    return path
