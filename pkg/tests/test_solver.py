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

"""Tests for the fixed-point and Newton solvers."""

import math

import numpy as np
import pytest

from harmonic_torsion.field.grid import GridDomain
from harmonic_torsion.field.maps import constant_map, linear_map
from harmonic_torsion.field.solver import (
    ConvergenceReport,
    SolverConfig,
    SolverMethod,
    Termination,
    solve,
    solve_fixed_point,
    solve_newton,
)
from harmonic_torsion.field.tension import tension_tor
from harmonic_torsion.geometry.chart import flat_chart
from harmonic_torsion.geometry.torsion import TorsionField
from harmonic_torsion.utils.errors import SingularJacobianError
from harmonic_torsion.utils.helpers import sup_norm


class TestSolverConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"damping": 0.0},
            {"damping": 1.5},
            {"tol": 0.0},
            {"max_iters": -1},
            {"max_iters": 2.5},
            {"threads": 0},
        ],
    )
    def test_rejects_invalid_values(self, kwargs):
        with pytest.raises(ValueError):
            SolverConfig(**kwargs)

    def test_method_from_string(self):
        assert SolverConfig(method="newton").method is SolverMethod.NEWTON

    def test_to_dict_lists_defaults(self):
        data = SolverConfig().to_dict()
        assert data["method"] == "fixed_point"
        assert data["tol"] == 1e-8
        assert data["max_iters"] == 500
        assert data["line_search_steps"] == 12


class TestFixedPoint:
    def setup_method(self):
        self.zero = TorsionField.zero()

    def test_converges_from_perturbed_equator(self, perturbed_equator16):
        final, report = solve_fixed_point(
            perturbed_equator16, self.zero, SolverConfig(tol=1e-8)
        )
        assert report.terminated is Termination.CONVERGED
        assert report.iterations <= 500
        assert report.final_residual < 1e-8
        assert sup_norm(tension_tor(final, self.zero)) < 1e-8

    def test_preserves_coordinate_means(self, perturbed_equator16):
        final, _ = solve_fixed_point(
            perturbed_equator16, self.zero, SolverConfig(max_iters=5)
        )
        np.testing.assert_allclose(
            final.values.mean(axis=(0, 1)),
            perturbed_equator16.values.mean(axis=(0, 1)),
            atol=1e-12,
        )

    def test_constant_map_converges_immediately(self, sphere, domain16):
        phi = constant_map(sphere, domain16, [1.0, 0.5])
        final, report = solve(phi, self.zero)
        assert report.iterations == 0
        assert report.terminated is Termination.CONVERGED
        assert final is phi

    def test_torsion_run_is_reproducible(self, perturbed_equator16):
        field = TorsionField.constant_vectorial([1.0, 0.0])
        config = SolverConfig(max_iters=40)
        _, first = solve_fixed_point(perturbed_equator16, field, config)
        _, second = solve_fixed_point(perturbed_equator16, field, config)
        assert first.terminated in set(Termination)
        assert first.terminated is not Termination.CONVERGED
        assert first.residual_history == second.residual_history
        assert first.to_dict() == second.to_dict()

    def test_stops_a_metric_stencil_before_the_chart_boundary(
        self, perturbed_equator16, monkeypatch
    ):
        # a clearance wider than the sphere chart rejects every candidate
        monkeypatch.setattr("harmonic_torsion.geometry.chart.METRIC_FD_STEP", 1.0)
        final, report = solve_fixed_point(
            perturbed_equator16, self.zero, SolverConfig(max_iters=5)
        )
        assert report.terminated is Termination.LEFT_CHART
        assert report.residual_history == []
        assert final is perturbed_equator16


class TestNewton:
    def test_converges_quickly(self, perturbed_equator16):
        config = SolverConfig(method=SolverMethod.NEWTON, tol=1e-8)
        final, report = solve(perturbed_equator16, TorsionField.zero(), config)
        assert report.terminated is Termination.CONVERGED
        assert report.iterations <= 10
        assert report.final_residual < 1e-8
        assert report.method is SolverMethod.NEWTON

    def test_residual_history_decreases_superlinearly(self, perturbed_equator16):
        _, report = solve_newton(
            perturbed_equator16,
            TorsionField.zero(),
            SolverConfig(method="newton", tol=1e-10),
        )
        history = [report.initial_residual] + report.residual_history
        assert len(history) >= 3
        assert all(b < a for a, b in zip(history, history[1:]))
        ratios = [b / a for a, b in zip(history, history[1:])]
        assert all(b < a for a, b in zip(ratios, ratios[1:]))
        assert ratios[-1] < 1e-3

    def test_singular_inconsistent_system(self):
        chart = flat_chart(2, periods=(2 * math.pi, 2 * math.pi))
        phi = linear_map(chart, GridDomain(8, 8), [[1.0, 0.0], [0.0, 0.0]])
        field = TorsionField.constant_vectorial([0.0, 1.0])
        with pytest.raises(SingularJacobianError) as excinfo:
            solve_newton(phi, field, SolverConfig(method="newton"))
        assert excinfo.value.smallest_singular_value < 1e-8


def test_report_final_residual_without_iterations():
    report = ConvergenceReport(
        method=SolverMethod.FIXED_POINT, iterations=0, initial_residual=0.5
    )
    assert report.final_residual == 0.5
    assert report.to_dict()["final_residual"] == 0.5
