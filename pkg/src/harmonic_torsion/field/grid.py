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

"""Periodic grids, discrete maps and the finite-difference stencils on them.

Grid-valued arrays keep the two grid axes immediately before ``trailing``
component axes, so stencils work on single fields and on batches of fields
alike. Map values are chart coordinates; differences of periodic chart
coordinates are wrapped before they enter any stencil.
"""

from dataclasses import dataclass, replace

import numpy as np
from scipy import sparse

from harmonic_torsion.geometry.chart import Chart
from harmonic_torsion.utils.errors import TorsionValidationError


UNIT_NORM_TOLERANCE = 1e-9


@dataclass(frozen=True)
class GridDomain:
    """Uniform periodic grid on the flat torus ``[0, lx) x [0, ly)``.

    ``conformal_u`` is a constant conformal factor of the domain metric
    ``g = e^{2u} delta``; it is 0 for the flat torus.
    """

    nx: int
    ny: int
    lx: float = 2.0 * np.pi
    ly: float = 2.0 * np.pi
    conformal_u: float = 0.0

    def __post_init__(self):
        for name in ("nx", "ny"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 4:
                raise ValueError(f"{name} must be an integer >= 4, got {value}")
        if not (self.lx > 0 and self.ly > 0):
            raise ValueError(
                f"Periods must be positive, got lx={self.lx}, ly={self.ly}"
            )

    @property
    def hx(self) -> float:
        return self.lx / self.nx

    @property
    def hy(self) -> float:
        return self.ly / self.ny

    @property
    def spacings(self) -> tuple[float, float]:
        return self.hx, self.hy

    @property
    def shape(self) -> tuple[int, int]:
        return self.nx, self.ny

    @property
    def n_nodes(self) -> int:
        return self.nx * self.ny

    @property
    def inverse_weight(self) -> float:
        """Diagonal entry of the inverse domain metric, ``e^{-2u}``."""
        return float(np.exp(-2.0 * self.conformal_u))

    @property
    def cell_area(self) -> float:
        """Volume element of one grid cell, ``e^{2u} hx hy``."""
        return float(np.exp(2.0 * self.conformal_u) * self.hx * self.hy)

    def coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        x = self.hx * np.arange(self.nx)
        y = self.hy * np.arange(self.ny)
        return np.meshgrid(x, y, indexing="ij")

    def with_conformal_factor(self, u: float) -> "GridDomain":
        return replace(self, conformal_u=float(u))


@dataclass(frozen=True, eq=False)
class MapState:
    """Discrete map from the grid into a chart.

    Attributes:
        values: ``(nx, ny, n)`` chart coordinates at each node.
        chart: Target chart.
        domain: Source grid.
    """

    values: np.ndarray
    chart: Chart
    domain: GridDomain

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        expected = self.domain.shape + (self.chart.dim_n,)
        if values.shape != expected:
            raise ValueError(
                f"Map values must have shape {expected}, got {values.shape}"
            )
        self.chart.require_inside(values, what="map node")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def with_values(self, values: np.ndarray) -> "MapState":
        return MapState(values, self.chart, self.domain)

    def perturbed(self, eta: np.ndarray, t: float) -> "MapState":
        return self.with_values(self.values + t * np.asarray(eta, dtype=float))

    def with_domain(self, domain: GridDomain) -> "MapState":
        return MapState(self.values, self.chart, domain)

    def with_chart(self, chart: Chart) -> "MapState":
        return MapState(self.values, chart, self.domain)


@dataclass(frozen=True, eq=False)
class EmbeddedMapState:
    """Map into the unit sphere stored by its ambient coordinates.

    Attributes:
        values: ``(nx, ny, q)`` unit vectors.
        chart: Chart of the sphere that provides the embedding.
        domain: Source grid.
    """

    values: np.ndarray
    chart: Chart
    domain: GridDomain

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 3 or values.shape[:2] != self.domain.shape:
            raise ValueError(f"Embedded values have invalid shape {values.shape}")
        deviation = float(np.max(np.abs(np.linalg.norm(values, axis=-1) - 1.0)))
        if deviation > UNIT_NORM_TOLERANCE:
            raise TorsionValidationError(
                f"Embedded map is not unit length, max deviation {deviation:.3e}",
                max_violation=deviation,
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def renormalized(
        cls, values: np.ndarray, chart: Chart, domain: GridDomain
    ) -> "EmbeddedMapState":
        """Projects every node back onto the unit sphere."""
        values = np.asarray(values, dtype=float)
        norms = np.linalg.norm(values, axis=-1, keepdims=True)
        return cls(values / norms, chart, domain)


def _grid_axes(trailing: int) -> tuple[int, int]:
    return -trailing - 2, -trailing - 1


def central_gradient(
    f: np.ndarray, domain: GridDomain, trailing: int = 1
) -> np.ndarray:
    """Central differences of a periodic field, direction axis after the grid."""
    ax, ay = _grid_axes(trailing)
    gx = (np.roll(f, -1, ax) - np.roll(f, 1, ax)) / (2.0 * domain.hx)
    gy = (np.roll(f, -1, ay) - np.roll(f, 1, ay)) / (2.0 * domain.hy)
    return np.stack([gx, gy], axis=-trailing - 1)


def compact_laplacian(
    f: np.ndarray, domain: GridDomain, trailing: int = 1
) -> np.ndarray:
    """Five-point Laplace-Beltrami operator of a periodic field."""
    ax, ay = _grid_axes(trailing)
    dxx = (np.roll(f, -1, ax) - 2.0 * f + np.roll(f, 1, ax)) / domain.hx**2
    dyy = (np.roll(f, -1, ay) - 2.0 * f + np.roll(f, 1, ay)) / domain.hy**2
    return domain.inverse_weight * (dxx + dyy)


def forward_differences(map_state: MapState) -> np.ndarray:
    """Wrapped differences ``phi(k + e_i) - phi(k)``, shape ``(nx, ny, 2, n)``."""
    values = map_state.values
    chart = map_state.chart
    dx = chart.wrap_difference(np.roll(values, -1, 0) - values)
    dy = chart.wrap_difference(np.roll(values, -1, 1) - values)
    return np.stack([dx, dy], axis=-2)


def _backward_differences(forward: np.ndarray) -> np.ndarray:
    return np.stack(
        [np.roll(forward[..., 0, :], 1, 0), np.roll(forward[..., 1, :], 1, 1)], axis=-2
    )


def map_gradient(map_state: MapState) -> np.ndarray:
    """Central first derivatives ``P[..., i, a] = d_i phi^a``."""
    forward = forward_differences(map_state)
    backward = _backward_differences(forward)
    spacing = np.array(map_state.domain.spacings)[:, None]
    return (forward + backward) / (2.0 * spacing)


def map_second_differences(map_state: MapState) -> np.ndarray:
    """Unweighted compact second differences per direction, ``(nx, ny, 2, n)``."""
    forward = forward_differences(map_state)
    backward = _backward_differences(forward)
    spacing = np.array(map_state.domain.spacings)[:, None]
    return (forward - backward) / spacing**2


def map_laplacian(map_state: MapState) -> np.ndarray:
    """Five-point Laplace-Beltrami operator applied to the chart coordinates."""
    second = map_second_differences(map_state)
    return map_state.domain.inverse_weight * second.sum(axis=-2)


def map_hessian(map_state: MapState) -> np.ndarray:
    """Coordinate Hessian ``H[..., i, j, a]`` with second-order stencils."""
    second = map_second_differences(map_state)
    gradient = map_gradient(map_state)
    mixed = central_gradient(gradient[..., 1, :], map_state.domain)[..., 0, :]
    hessian = np.empty(map_state.domain.shape + (2, 2, map_state.chart.dim_n))
    hessian[..., 0, 0, :] = second[..., 0, :]
    hessian[..., 1, 1, :] = second[..., 1, :]
    hessian[..., 0, 1, :] = mixed
    hessian[..., 1, 0, :] = mixed
    return hessian


def energy_density(map_state: MapState) -> np.ndarray:
    """Per-node energy density from forward differences.

    The metric is evaluated at edge midpoints, so the grid sum of this density
    is a discrete Dirichlet energy whose gradient on flat targets is exactly
    the five-point tension.
    """
    forward = forward_differences(map_state)
    spacing = np.array(map_state.domain.spacings)[:, None]
    quotients = forward / spacing
    midpoints = map_state.values[..., None, :] + 0.5 * forward
    h_mid = map_state.chart.metric(midpoints)
    density = np.einsum("...ia,...iab,...ib->...", quotients, h_mid, quotients)
    return map_state.domain.inverse_weight * density


def energy_density_nodal(map_state: MapState) -> np.ndarray:
    """``|d phi|^2`` at each node from central differences."""
    gradient = map_gradient(map_state)
    h = map_state.chart.metric(map_state.values)
    density = np.einsum("...ia,...ab,...ib->...", gradient, h, gradient)
    return map_state.domain.inverse_weight * density


def _periodic_second_difference(m: int) -> sparse.csr_matrix:
    ones = np.ones(m)
    matrix = sparse.diags([ones[:-1], -2.0 * ones, ones[:-1]], [-1, 0, 1], format="lil")
    matrix[0, m - 1] = 1.0
    matrix[m - 1, 0] = 1.0
    return matrix.tocsr()


def laplacian_matrix(domain: GridDomain) -> sparse.csr_matrix:
    """Sparse five-point Laplacian in node-major order ``k = i * ny + j``."""
    eye_x = sparse.identity(domain.nx, format="csr")
    eye_y = sparse.identity(domain.ny, format="csr")
    lap = sparse.kron(_periodic_second_difference(domain.nx), eye_y) / domain.hx**2
    lap_y = sparse.kron(eye_x, _periodic_second_difference(domain.ny))
    lap = lap + lap_y / domain.hy**2
    return (domain.inverse_weight * lap).tocsr()
