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

"""Tests for identity checks and the registered suite."""

import numpy as np
import pytest

from harmonic_torsion.field.grid import GridDomain
from harmonic_torsion.field.maps import (
    constant_map,
    equivariant_solution,
    equivariant_torsion,
    latitude_map,
    random_smooth_map,
)
from harmonic_torsion.geometry.chart import ConformalFactor, flat_chart, sphere2_chart
from harmonic_torsion.geometry.torsion import TorsionField
from harmonic_torsion.verify.identities import (
    EXACT_TOLERANCE,
    IdentityReport,
    Verdict,
    bochner_residual_lc,
    bochner_residual_tor,
    conformal_domain_check,
    conformal_target_check,
    laplacian_relation_check,
    refine,
)
from harmonic_torsion.verify.suite import registered_cases, run_identity_suite


@pytest.fixture(scope="module")
def suite_reports():
    return run_identity_suite()


def sphere_map(n=32):
    return random_smooth_map(
        sphere2_chart(), GridDomain(n, n), [np.pi / 2, 0.0], 0.4, seed=5
    )


def constant_residual_check(value):
    def check(map_state):
        return IdentityReport(
            identity_name="stub",
            max_residual=value,
            grid_spacings=[max(map_state.domain.spacings)],
        )

    return check


def power_residual_check(constant, power):
    def check(map_state):
        h = max(map_state.domain.spacings)
        return IdentityReport(
            identity_name="stub", max_residual=constant * h**power, grid_spacings=[h]
        )

    return check


class TestSuite:
    def test_every_identity_passes(self, suite_reports):
        failed = [
            r.identity_name for r in suite_reports if r.verdict is not Verdict.PASS
        ]
        assert failed == []

    def test_report_order_follows_registration(self, suite_reports):
        names = [case.name for case in registered_cases()]
        assert [r.identity_name for r in suite_reports] == names

    def test_refined_identities_converge_at_second_order(self, suite_reports):
        refined = [r for r in suite_reports if r.tolerance != EXACT_TOLERANCE]
        assert refined
        for report in refined:
            assert 1.5 <= report.convergence_order <= 2.5, report.identity_name
            assert report.max_residual <= report.tolerance

    def test_exact_identities_hold_on_every_grid(self, suite_reports):
        conformal = [
            r for r in suite_reports if r.identity_name.startswith("conformal")
        ]
        assert len(conformal) == 3
        for report in conformal:
            assert len(report.grid_spacings) == 2
            assert max(report.details["residuals"]) <= EXACT_TOLERANCE
            assert report.tolerance == EXACT_TOLERANCE

    def test_threads_do_not_change_verdicts(self, suite_reports):
        pooled = run_identity_suite(threads=2)
        assert [r.verdict for r in pooled] == [r.verdict for r in suite_reports]
        assert [r.max_residual for r in pooled] == [
            r.max_residual for r in suite_reports
        ]


class TestConformalChecks:
    @pytest.mark.parametrize("u", [-0.5, 0.25, 1.0])
    def test_domain_rescaling(self, u):
        field = TorsionField.constant_vectorial([0.3, -0.1])
        report = conformal_domain_check(sphere_map(), field, u)
        assert report.verdict is Verdict.PASS
        assert report.details["exact"] is True

    @pytest.mark.parametrize("chart", [flat_chart(2), sphere2_chart()])
    def test_target_rescaling(self, chart):
        phi = random_smooth_map(
            chart, GridDomain(16, 16), [np.pi / 2, 0.0], 0.4, seed=6
        )
        report = conformal_target_check(phi, ConformalFactor.linear(0.1, axis=0, dim=2))
        assert report.verdict is Verdict.PASS
        assert report.details["torsion_shape_residual"] <= EXACT_TOLERANCE


class TestBochner:
    def test_single_grid_is_inconclusive(self):
        report = bochner_residual_lc(latitude_map(GridDomain(32, 32)))
        assert report.verdict is Verdict.INCONCLUSIVE
        assert "refine" in report.details["reason"]

    def test_non_solution_is_gated(self):
        report = bochner_residual_tor(sphere_map(), equivariant_torsion())
        assert report.verdict is Verdict.INCONCLUSIVE
        assert np.isnan(report.max_residual)
        assert report.details["tension_tor_norm"] > 1e-2

    def test_gated_refinement_is_inconclusive(self):
        report = refine(
            lambda m: bochner_residual_tor(m, equivariant_torsion()),
            sphere_map,
            (16, 32),
            50.0,
        )
        assert report.verdict is Verdict.INCONCLUSIVE
        assert "not a solution" in report.details["reason"]

    def test_constant_map_is_exact(self):
        phi = constant_map(sphere2_chart(), GridDomain(16, 16), [1.0, 0.5])
        report = bochner_residual_tor(phi, TorsionField.constant_vectorial([0.3, 0.2]))
        assert report.verdict is Verdict.PASS
        assert report.max_residual == 0.0

    def test_solution_is_checked(self):
        phi = equivariant_solution(GridDomain(64, 64))
        report = bochner_residual_tor(phi, equivariant_torsion())
        assert not np.isnan(report.max_residual)
        assert report.details["tension_tor_norm"] <= 1e-2


class TestRefine:
    def test_needs_two_sizes(self):
        with pytest.raises(ValueError, match="at least two"):
            refine(constant_residual_check(0.0), sphere_map, (16,), 1.0)

    def test_stagnating_residual_fails(self):
        report = refine(constant_residual_check(0.5), sphere_map, (16, 32), 50.0)
        assert report.verdict is Verdict.FAIL
        assert report.convergence_order == pytest.approx(0.0)

    def test_exact_residuals_pass(self):
        report = refine(constant_residual_check(0.0), sphere_map, (16, 32), 50.0)
        assert report.verdict is Verdict.PASS
        assert report.tolerance == EXACT_TOLERANCE

    def test_second_order_residual_passes(self):
        report = refine(power_residual_check(1.0, 2), sphere_map, (16, 32), 50.0)
        assert report.verdict is Verdict.PASS
        assert report.convergence_order == pytest.approx(2.0)

    def test_too_fast_decay_fails(self):
        report = refine(power_residual_check(1.0, 4), sphere_map, (16, 32), 50.0)
        assert report.convergence_order == pytest.approx(4.0)
        assert report.max_residual <= report.tolerance
        assert report.verdict is Verdict.FAIL

    def test_to_dict_replaces_nan_order(self):
        report = IdentityReport("stub", 0.1, [0.2])
        data = report.to_dict()
        assert data["convergence_order"] is None
        assert data["verdict"] == "inconclusive"


class TestLaplacianRelation:
    def test_zero_torsion_is_exact(self):
        report = laplacian_relation_check(sphere_map(), TorsionField.zero())
        assert report.verdict is Verdict.PASS
        assert report.details["per_direction"] == [0.0, 0.0]

    def test_vectorial_torsion_converges(self):
        field = TorsionField.constant_vectorial([0.3, 0.2])
        report = refine(
            lambda m: laplacian_relation_check(m, field), sphere_map, (32, 64), 50.0
        )
        assert report.verdict is Verdict.PASS
        assert 1.5 <= report.convergence_order <= 2.5
