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

"""Discrete tension fields of maps into a chart."""

from dataclasses import dataclass

import numpy as np

from harmonic_torsion.field.grid import (
    MapState,
    forward_differences,
    map_gradient,
    map_laplacian,
)
from harmonic_torsion.geometry.chart import christoffel
from harmonic_torsion.geometry.torsion import TorsionField, torsion_eval


@dataclass(frozen=True, eq=False)
class MapDerivatives:
    """Derivatives of a map and the Christoffel symbols at its nodes."""

    gradient: np.ndarray
    laplacian: np.ndarray
    gamma: np.ndarray
    weight: float

    def quadratic(self, coeffs: np.ndarray) -> np.ndarray:
        """``e^{-2u} sum_i C(d_i phi, d_i phi)`` for coefficients ``C^a_{bc}``."""
        return self.weight * np.einsum(
            "...abc,...ib,...ic->...a", coeffs, self.gradient, self.gradient
        )


def map_derivatives(map_state: MapState) -> MapDerivatives:
    return MapDerivatives(
        gradient=map_gradient(map_state),
        laplacian=map_laplacian(map_state),
        gamma=christoffel(map_state.chart, map_state.values),
        weight=map_state.domain.inverse_weight,
    )


def tension(map_state: MapState) -> np.ndarray:
    """Levi-Civita tension of a discrete map.

    ``tau^a = Delta phi^a + g^{ij} Gamma^a_{bc} d_i phi^b d_j phi^c``.

    Args:
        map_state: Map into a chart.

    Returns:
        ``(nx, ny, n)`` tension vectors in chart components.

    Raises:
        ChartDomainError: If a node lies outside the chart.
    """
    derivs = map_derivatives(map_state)
    return derivs.laplacian + derivs.quadratic(derivs.gamma)


def torsion_trace(map_state: MapState, field: TorsionField) -> np.ndarray:
    """``A(d phi, d phi) = sum_i A(d phi(e_i), d phi(e_i))`` at every node."""
    if field.is_zero:
        return np.zeros_like(map_state.values)
    coeffs = torsion_eval(field, map_state.chart, map_state.values)
    gradient = map_gradient(map_state)
    return map_state.domain.inverse_weight * np.einsum(
        "...abc,...ib,...ic->...a", coeffs.raised, gradient, gradient
    )


def tension_tor(map_state: MapState, field: TorsionField) -> np.ndarray:
    """Torsion tension ``tau(phi) + A(d phi, d phi)``.

    For the zero field the result is the Levi-Civita tension, bit for bit.
    """
    if field.is_zero:
        return tension(map_state)
    return tension(map_state) + torsion_trace(map_state, field)


def variational_tension(map_state: MapState) -> np.ndarray:
    """Minus half the metric-lowered gradient of the discrete Dirichlet energy.

    Differentiates the midpoint energy of ``energy_density`` exactly, node by
    node, so ``<eta, variational_tension>`` pairs with energy difference
    quotients up to O(t). It agrees with ``tension`` to second order in the
    grid spacing and coincides with it on flat targets.

    Returns:
        ``(nx, ny, n)`` vectors in chart components.

    Raises:
        ChartDomainError: If a node lies outside the chart.
    """
    chart = map_state.chart
    values = map_state.values
    forward = forward_differences(map_state)
    spacing_sq = np.array(map_state.domain.spacings)[:, None] ** 2
    midpoints = values[..., None, :] + 0.5 * forward
    flux = np.einsum("...iab,...ib->...ia", chart.metric(midpoints), forward)
    bend = 0.5 * np.einsum(
        "...iabc,...ia,...ib->...ic",
        chart.metric_derivatives(midpoints),
        forward,
        forward,
    )
    flux = flux / spacing_sq
    bend = bend / spacing_sq
    lowered = np.zeros_like(values)
    for axis in range(2):
        incoming_flux = np.roll(flux[..., axis, :], 1, axis)
        incoming_bend = np.roll(bend[..., axis, :], 1, axis)
        lowered += flux[..., axis, :] - incoming_flux
        lowered -= 0.5 * (bend[..., axis, :] + incoming_bend)
    lowered *= map_state.domain.inverse_weight
    h = chart.metric_at(values)
    return np.linalg.solve(h, lowered[..., None])[..., 0]
