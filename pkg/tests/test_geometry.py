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

"""Tests for charts, torsion fields, the Cartan decomposition and curvature."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from harmonic_torsion.geometry.chart import (
    Chart,
    ConformalFactor,
    christoffel,
    conformally_rescaled,
    get_chart,
    sphere2_chart,
)
from harmonic_torsion.geometry.curvature import (
    ConnectionKind,
    connection_coefficients,
    curvature,
    metric_compatibility_residual,
    sectional_curvature,
    torsion_nabla,
)
from harmonic_torsion.geometry.decomposition import (
    cartan_class_residuals,
    cartan_decompose,
    inner_product,
    orthonormal_frame,
)
from harmonic_torsion.geometry.torsion import (
    TorsionCoeffs,
    TorsionField,
    TorsionKind,
    alternating_part,
    cartan_remainder,
    random_skew_adjoint,
    random_three_form,
    skew_adjointness_residual,
    torsion_eval,
    torsion_tensor_T,
    vectorial_lowered,
)
from harmonic_torsion.utils.errors import (
    ChartDomainError,
    ConditioningError,
    TorsionValidationError,
)
from harmonic_torsion.utils.helpers import convergence_order, make_rng


def random_metric(rng, n):
    """Well-conditioned random symmetric positive definite matrix."""
    m = rng.standard_normal((n, n))
    return np.eye(n) + 0.2 * m @ m.T


class TestChart:
    def setup_method(self):
        self.sphere = sphere2_chart()

    def test_contains_respects_pole_margin(self):
        assert self.sphere.contains(np.array([1.0, 7.0]))
        assert not self.sphere.contains(np.array([0.01, 0.0]))
        assert not self.sphere.contains(np.array([math.pi - 0.01, 0.0]))

    def test_require_inside_raises_with_point(self):
        with pytest.raises(ChartDomainError) as excinfo:
            self.sphere.require_inside(np.array([[1.0, 0.0], [0.0, 0.0]]))
        assert_allclose(excinfo.value.point, [0.0, 0.0])

    def test_require_inside_rejects_wrong_dimension(self):
        with pytest.raises(ValueError, match="expects 2 coordinates"):
            self.sphere.require_inside(np.zeros(3))

    def test_metric_batched_over_leading_axes(self):
        points = np.full((4, 5, 2), 1.0)
        assert self.sphere.metric_at(points).shape == (4, 5, 2, 2)

    def test_non_positive_metric_raises_conditioning_error(self):
        chart = Chart(
            name="broken",
            dim_n=2,
            metric=lambda y: -np.broadcast_to(np.eye(2), np.shape(y)[:-1] + (2, 2)),
            domain_box=np.tile([-1.0, 1.0], (2, 1)),
        )
        with pytest.raises(ConditioningError):
            chart.metric_at(np.zeros(2))

    def test_invalid_domain_box(self):
        with pytest.raises(ValueError, match="invalid domain box"):
            Chart("bad", 1, lambda y: y, np.array([[1.0, 0.0]]))

    def test_sphere_christoffel_symbols(self):
        theta = 0.8
        gamma = christoffel(self.sphere, np.array([theta, 0.4]))
        assert gamma[0, 1, 1] == pytest.approx(-math.sin(theta) * math.cos(theta))
        assert gamma[1, 0, 1] == pytest.approx(math.cos(theta) / math.sin(theta))
        assert gamma[1, 1, 0] == pytest.approx(gamma[1, 0, 1])
        assert gamma[0, 0, 0] == 0.0

    def test_finite_difference_christoffel_needs_stencil_clearance(self):
        chart = Chart(
            name="warped",
            dim_n=2,
            metric=lambda y: (1.0 + np.sum(y**2, axis=-1))[..., None, None]
            * np.eye(2),
            domain_box=np.tile([0.0, 1.0], (2, 1)),
        )
        with pytest.raises(ChartDomainError, match="metric stencil"):
            christoffel(chart, np.array([0.5, 1.0 - 1e-7]))
        y = np.array([0.5, 0.25])
        gamma = christoffel(chart, y)
        # conformal metric: Gamma^0_{00} = d_0 log(1 + |y|^2) / 2
        assert gamma[0, 0, 0] == pytest.approx(y[0] / (1 + y @ y), rel=1e-7)

    def test_stencil_clearance_scales_with_coordinates(self):
        assert self.sphere.stencil_clearance(np.array([1.0, 0.0])) == 2e-5
        clearance = self.sphere.stencil_clearance(np.array([[3.0, 4.0]]))
        assert clearance == pytest.approx(1e-4)

    def test_finite_difference_christoffel_matches_analytic(self):
        numeric = Chart(
            name="sphere-fd",
            dim_n=2,
            metric=self.sphere.metric,
            domain_box=self.sphere.domain_box,
        )
        y = np.array([[1.1, 0.2], [2.0, -1.0]])
        assert_allclose(
            christoffel(numeric, y), christoffel(self.sphere, y), atol=1e-8
        )

    def test_wrap_difference(self):
        delta = self.sphere.wrap_difference(np.array([0.5, 2 * math.pi - 0.1]))
        assert_allclose(delta, [0.5, -0.1], atol=1e-14)

    def test_get_chart_unknown_name(self):
        with pytest.raises(KeyError, match="Unknown chart"):
            get_chart("torus9")

    def test_embedding_round_trip(self, rng):
        y = np.stack(
            [rng.uniform(0.2, 2.9, 10), rng.uniform(-3.0, 3.0, 10)], axis=-1
        )
        ambient = self.sphere.embedding(y)
        assert_allclose(np.linalg.norm(ambient, axis=-1), 1.0)
        assert_allclose(self.sphere.chart_coordinates(ambient), y, atol=1e-12)

    def test_conformal_rescaling_scales_metric(self):
        factor = ConformalFactor.linear(0.3, axis=0, dim=2)
        rescaled = conformally_rescaled(self.sphere, factor)
        y = np.array([1.2, 0.5])
        assert_allclose(
            rescaled.metric(y), math.exp(0.6 * 1.2) * self.sphere.metric(y)
        )


class TestTorsionField:
    def setup_method(self):
        self.sphere = sphere2_chart()
        self.point = np.array([1.0, 0.3])
        self.h = self.sphere.metric_at(self.point)

    def test_vectorial_formula(self, rng):
        V = np.array([0.4, -0.7])
        field = TorsionField.constant_vectorial(V)
        coeffs = torsion_eval(field, self.sphere, self.point)
        X, Y = rng.standard_normal(2), rng.standard_normal(2)
        expected = (X @ self.h @ Y) * V - (V @ self.h @ Y) * X
        assert_allclose(coeffs.apply(X, Y), expected, atol=1e-14)

    @pytest.mark.parametrize(
        "kind", [TorsionKind.ANTISYMMETRIC, TorsionKind.CARTAN, TorsionKind.GENERAL]
    )
    def test_constant_fields_are_skew_adjoint(self, rng, kind):
        field = TorsionField.constant(kind, rng.standard_normal((2, 2, 2)))
        coeffs = torsion_eval(field, self.sphere, self.point)
        assert coeffs.skew_violation() < 1e-14
        X, Y, Z = rng.standard_normal((3, 2))
        assert skew_adjointness_residual(coeffs, self.h, X, Y, Z) < 1e-12

    def test_vectorial_has_no_constant_constructor(self):
        with pytest.raises(ValueError, match="No constant constructor"):
            TorsionField.constant(TorsionKind.VECTORIAL, np.zeros((2, 2, 2)))

    def test_torsion_tensor_is_antisymmetric(self, rng):
        lowered = random_skew_adjoint(rng, 3)
        T = torsion_tensor_T(TorsionCoeffs.from_lowered(lowered, np.eye(3)))
        assert_allclose(T, -np.swapaxes(T, -1, -2), atol=0)

    def test_three_form_is_fully_antisymmetric(self, rng):
        form = random_three_form(rng, 4)
        assert_allclose(form, -np.einsum("bcd->cbd", form), atol=1e-14)
        assert_allclose(form, -np.einsum("bcd->bdc", form), atol=1e-14)

    def test_zero_field_is_zero(self):
        coeffs = torsion_eval(TorsionField.zero(), self.sphere, self.point)
        assert not np.any(coeffs.lowered)

    def test_scaled_field(self):
        field = TorsionField.constant_vectorial([1.0, 0.0]).scaled(2.5)
        coeffs = torsion_eval(field, self.sphere, self.point)
        base = torsion_eval(
            TorsionField.constant_vectorial([1.0, 0.0]), self.sphere, self.point
        )
        assert_allclose(coeffs.lowered, 2.5 * base.lowered)
        assert_allclose(field.vector(self.point), [2.5, 0.0])


class TestCartanDecomposition:
    @pytest.mark.parametrize("n", [3, 4, 5])
    def test_random_tensors_reconstruct_orthogonally(self, n):
        rng = make_rng(100 + n)
        for _ in range(100):
            h = random_metric(rng, n)
            A = TorsionCoeffs.from_lowered(random_skew_adjoint(rng, n), h)
            parts = cartan_decompose(A, h)
            assert parts.reconstruction_residual(A) < 1e-12
            assert max(parts.orthogonality_residuals(h).values()) < 1e-12
            residuals = cartan_class_residuals(parts.cartan_part, h)
            assert residuals["c12"] < 1e-12
            assert residuals["cyclic_sum"] < 1e-12

    def test_vectorial_input_is_fixed(self):
        h = np.eye(3)
        lowered = vectorial_lowered(np.array([0.0, 1.0, 0.0]), h)
        parts = cartan_decompose(TorsionCoeffs.from_lowered(lowered, h), h)
        assert_allclose(parts.vectorial_part.lowered, lowered, atol=1e-12)
        assert_allclose(parts.antisymmetric_part.lowered, 0.0, atol=1e-12)
        assert_allclose(parts.cartan_part.lowered, 0.0, atol=1e-12)
        assert_allclose(parts.vector_V, [0.0, 1.0, 0.0], atol=1e-12)

    @pytest.mark.parametrize("n", [3, 4, 5])
    def test_idempotent_on_pure_classes(self, n):
        rng = make_rng(7 * n)
        h = random_metric(rng, n)
        v_lower = rng.standard_normal(n)
        pure = {
            "vectorial": vectorial_lowered(v_lower, h),
            "antisymmetric": random_three_form(rng, n),
            "cartan": cartan_remainder(random_skew_adjoint(rng, n), h),
        }
        for name, lowered in pure.items():
            parts = cartan_decompose(TorsionCoeffs.from_lowered(lowered, h), h)
            for other, part in parts.parts().items():
                expected = lowered if other == name else 0.0
                assert_allclose(part.lowered, expected, atol=1e-12)

    def test_two_dimensional_torsion_is_vectorial(self):
        rng = make_rng(2)
        for _ in range(20):
            h = random_metric(rng, 2)
            A = TorsionCoeffs.from_lowered(random_skew_adjoint(rng, 2), h)
            parts = cartan_decompose(A, h)
            assert np.max(np.abs(parts.antisymmetric_part.lowered)) < 1e-14
            assert np.max(np.abs(parts.cartan_part.lowered)) < 1e-14

    def test_rejects_non_skew_input(self, rng):
        raw = rng.standard_normal((3, 3, 3))
        with pytest.raises(TorsionValidationError) as excinfo:
            cartan_decompose(TorsionCoeffs.from_lowered(raw, np.eye(3)), np.eye(3))
        assert excinfo.value.max_violation > 0

    def test_rejects_one_dimensional_input(self):
        A = TorsionCoeffs.from_lowered(np.zeros((1, 1, 1)), np.eye(1))
        with pytest.raises(ValueError, match="n >= 2"):
            cartan_decompose(A, np.eye(1))

    def test_frame_is_orthonormal(self, rng):
        h = random_metric(rng, 4)
        frame = orthonormal_frame(h)
        assert_allclose(frame.T @ h @ frame, np.eye(4), atol=1e-12)

    def test_norms_are_pythagorean(self, rng):
        h = random_metric(rng, 4)
        A = TorsionCoeffs.from_lowered(random_skew_adjoint(rng, 4), h)
        norms = cartan_decompose(A, h).norms(h)
        total = inner_product(A.lowered, A.lowered, h)
        assert sum(v**2 for v in norms.values()) == pytest.approx(total, rel=1e-12)

    def test_alternating_part_of_three_form(self, rng):
        form = random_three_form(rng, 3)
        assert_allclose(alternating_part(form), form, atol=1e-14)


def _position_dependent_torsion():
    return TorsionField.vectorial(
        lambda y: np.stack(
            [0.3 * np.sin(y[..., 1]), 0.2 * np.cos(y[..., 0])], axis=-1
        ),
        description="position dependent",
    )


class TestCurvature:
    def test_flat_constant_vectorial_paths_agree(self, flat3):
        field = TorsionField.constant_vectorial([0.0, 1.0, 0.5])
        tensor = curvature(
            flat3, field, np.array([0.1, -0.2, 0.3]), ConnectionKind.TORSION, 1e-4
        )
        assert tensor.discrepancy <= 1e-6

    def test_flat_constant_vectorial_curvature_formula(self, flat3, rng):
        V = np.array([0.0, 1.0, 0.5])
        field = TorsionField.constant_vectorial(V)
        tensor = curvature(flat3, field, np.zeros(3), ConnectionKind.TORSION)
        X, Y, Z = rng.standard_normal((3, 3))
        A = torsion_eval(field, flat3, np.zeros(3))
        expected = A.apply(X, A.apply(Y, Z)) - A.apply(Y, A.apply(X, Z))
        assert_allclose(tensor.apply(X, Y, Z), expected, atol=1e-10)

    def test_discrepancy_is_second_order(self, sphere):
        field = _position_dependent_torsion()
        y = np.array([1.1, 0.4])
        coarse = curvature(sphere, field, y, ConnectionKind.TORSION, 1e-3)
        fine = curvature(sphere, field, y, ConnectionKind.TORSION, 1e-4)
        assert fine.discrepancy <= 1e-6
        order = convergence_order(coarse.discrepancy, fine.discrepancy, 10.0)
        assert order >= 1.8

    @pytest.mark.parametrize("y", [[1.0, 0.0], [0.4, 2.0], [2.5, -1.0]])
    def test_sphere_sectional_curvature(self, sphere, y):
        y = np.array(y)
        tensor = curvature(sphere, TorsionField.zero(), y)
        K = sectional_curvature(
            tensor, sphere.metric(y), np.array([1.0, 0.0]), np.array([0.3, 1.0])
        )
        assert K == pytest.approx(1.0, abs=2e-6)

    def test_hyperbolic_sectional_curvature(self, hyperbolic):
        y = np.array([0.2, 1.5])
        tensor = curvature(hyperbolic, TorsionField.zero(), y)
        K = sectional_curvature(
            tensor, hyperbolic.metric(y), np.array([1.0, 0.0]), np.array([0.0, 1.0])
        )
        assert K == pytest.approx(-1.0, abs=2e-6)

    def test_antisymmetric_in_first_pair(self, sphere, rng):
        field = _position_dependent_torsion()
        tensor = curvature(sphere, field, np.array([1.2, 0.1]), "torsion")
        X, Y, Z = rng.standard_normal((3, 2))
        assert_allclose(
            tensor.apply(X, Y, Z), -tensor.apply(Y, X, Z), atol=1e-6
        )

    def test_insufficient_margin_raises(self, sphere):
        with pytest.raises(ChartDomainError, match="insufficient margin"):
            curvature(sphere, TorsionField.zero(), np.array([0.05 + 1e-5, 0.0]))

    def test_metric_compatibility(self, sphere, rng):
        field = TorsionField.constant(
            TorsionKind.GENERAL, random_skew_adjoint(rng, 2)
        )
        X, Y, Z = rng.standard_normal((3, 2))
        residual = metric_compatibility_residual(
            sphere, field, np.array([1.3, 0.2]), X, Y, Z
        )
        assert residual < 1e-8

    def test_constant_torsion_is_parallel_in_flat_space(self, flat3):
        field = TorsionField.constant_vectorial([1.0, 2.0, 3.0])
        nabla = torsion_nabla(flat3, field, np.zeros(3))
        assert_allclose(nabla, 0.0, atol=1e-12)

    def test_connection_coefficients_add_torsion(self, sphere):
        field = TorsionField.constant_vectorial([0.5, 0.0])
        y = np.array([1.0, 0.0])
        difference = connection_coefficients(sphere, field, y) - christoffel(
            sphere, y
        )
        assert_allclose(difference, torsion_eval(field, sphere, y).raised)
