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

"""Torsion tension of maps into the unit sphere in ambient coordinates.

The sphere is handled through its isometric embedding: the tension is the
tangential projection of ``Delta phi + |d phi|^2 phi`` plus the torsion term
mapped through the chart Jacobian. Chart coordinates are recovered from the
ambient point, so maps must stay off the chart poles whenever torsion is
present.
"""

import numpy as np

from harmonic_torsion.field.grid import (
    EmbeddedMapState,
    MapState,
    central_gradient,
    compact_laplacian,
)
from harmonic_torsion.field.tension import tension_tor
from harmonic_torsion.geometry.torsion import TorsionField, torsion_eval
from harmonic_torsion.utils.helpers import sup_norm


def _require_embedding(chart):
    if chart.embedding is None or chart.chart_coordinates is None:
        raise ValueError(f"Chart {chart.name} has no isometric embedding")


def embed_map(map_state: MapState) -> EmbeddedMapState:
    """Ambient coordinates of a chart map, renormalized to unit length."""
    _require_embedding(map_state.chart)
    ambient = map_state.chart.embedding(map_state.values)
    return EmbeddedMapState.renormalized(ambient, map_state.chart, map_state.domain)


def chart_map(embedded: EmbeddedMapState) -> MapState:
    """Chart coordinates of an embedded map.

    Raises:
        ChartDomainError: If a node sits where the chart degenerates.
    """
    _require_embedding(embedded.chart)
    coords = embedded.chart.chart_coordinates(embedded.values)
    return MapState(coords, embedded.chart, embedded.domain)


def _tangent_frames(embedded: EmbeddedMapState):
    chart = embedded.chart
    coords = chart.chart_coordinates(embedded.values)
    chart.require_inside(coords, what="embedded node")
    jacobian = chart.embedding_jacobian(coords)
    h = chart.metric_at(coords)
    pushforward = np.einsum("...ab,...qb->...aq", np.linalg.inv(h), jacobian)
    return coords, jacobian, pushforward


def _chart_gradient(embedded: EmbeddedMapState, pushforward: np.ndarray) -> np.ndarray:
    ambient = central_gradient(embedded.values, embedded.domain)
    return np.einsum("...aq,...iq->...ia", pushforward, ambient)


def tension_tor_extrinsic(
    embedded: EmbeddedMapState, field: TorsionField
) -> np.ndarray:
    """Ambient torsion tension of a map into the unit sphere.

    ``P_T(Delta phi + |d phi|^2 phi + A(d phi, d phi))`` with ``P_T`` the
    projection onto the tangent plane.

    Returns:
        ``(nx, ny, 3)`` vectors tangent to the sphere at each node.

    Raises:
        ChartDomainError: If torsion is present and a node lies outside the
            chart that carries it.
    """
    _require_embedding(embedded.chart)
    values = embedded.values
    domain = embedded.domain
    laplacian = compact_laplacian(values, domain)
    gradient = central_gradient(values, domain)
    density = domain.inverse_weight * np.einsum("...iq,...iq->...", gradient, gradient)
    total = laplacian + density[..., None] * values
    if not field.is_zero:
        coords, jacobian, pushforward = _tangent_frames(embedded)
        tangent = _chart_gradient(embedded, pushforward)
        raised = torsion_eval(field, embedded.chart, coords).raised
        trace = domain.inverse_weight * np.einsum(
            "...abc,...ib,...ic->...a", raised, tangent, tangent
        )
        total = total + np.einsum("...qa,...a->...q", jacobian, trace)
    normal = np.einsum("...q,...q->...", total, values)
    return total - normal[..., None] * values


def extrinsic_torsion_coefficients(
    embedded: EmbeddedMapState, field: TorsionField
) -> np.ndarray:
    """Ambient matrices ``B_i`` of ``Y -> A(d phi(e_i), Y)``.

    Returns:
        ``(nx, ny, 2, 3, 3)`` array.

    Raises:
        ChartDomainError: If a node lies outside the chart.
    """
    _require_embedding(embedded.chart)
    coords, jacobian, pushforward = _tangent_frames(embedded)
    tangent = _chart_gradient(embedded, pushforward)
    raised = torsion_eval(field, embedded.chart, coords).raised
    chart_maps = np.einsum("...abc,...ib->...iac", raised, tangent)
    return np.einsum("...pa,...iac,...cq->...ipq", jacobian, chart_maps, pushforward)


def b_antisymmetry_residual(embedded: EmbeddedMapState, field: TorsionField) -> float:
    """Largest entry of ``B_i + B_i^T``; zero up to roundoff for metric torsion."""
    coefficients = extrinsic_torsion_coefficients(embedded, field)
    return sup_norm(coefficients + np.swapaxes(coefficients, -1, -2))


def pushforward_discrepancy(map_state: MapState, field: TorsionField) -> float:
    """Sup distance between the pushed-forward chart tension and the ambient one.

    Both discretize the same field, so the value is second order in the grid
    spacing.
    """
    intrinsic = tension_tor(map_state, field)
    jacobian = map_state.chart.embedding_jacobian(map_state.values)
    pushed = np.einsum("...qa,...a->...q", jacobian, intrinsic)
    return sup_norm(pushed - tension_tor_extrinsic(embed_map(map_state), field))
