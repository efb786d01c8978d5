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

"""Initial maps, fixture maps and a manufactured torsion-harmonic map."""

import numpy as np

from harmonic_torsion.field.grid import GridDomain, MapState
from harmonic_torsion.geometry.chart import Chart, sphere2_chart
from harmonic_torsion.geometry.torsion import TorsionField
from harmonic_torsion.utils.helpers import make_rng


def constant_map(chart: Chart, domain: GridDomain, point) -> MapState:
    point = np.asarray(point, dtype=float)
    return MapState(np.broadcast_to(point, domain.shape + point.shape), chart, domain)


def linear_map(chart: Chart, domain: GridDomain, slopes, offset=None) -> MapState:
    """``phi^a(x) = offset^a + slopes[a, 0] x + slopes[a, 1] y``.

    Slopes along non-periodic target coordinates must vanish for the map to
    be periodic; winding is only possible along periodic coordinates.
    """
    slopes = np.asarray(slopes, dtype=float)
    if offset is None:
        offset = np.zeros(chart.dim_n)
    offset = np.asarray(offset, dtype=float)
    x, y = domain.coordinates()
    values = offset + x[..., None] * slopes[:, 0] + y[..., None] * slopes[:, 1]
    return MapState(values, chart, domain)


def equator_map(domain: GridDomain, winding: int = 1) -> MapState:
    """Degree-``winding`` wrap of the x-circle onto the equator of the sphere."""
    return linear_map(
        sphere2_chart(),
        domain,
        [[0.0, 0.0], [2.0 * np.pi * winding / domain.lx, 0.0]],
        offset=[np.pi / 2, 0.0],
    )


def _waves(domain: GridDomain) -> tuple[np.ndarray, np.ndarray]:
    x, y = domain.coordinates()
    return 2.0 * np.pi * x / domain.lx, 2.0 * np.pi * y / domain.ly


def perturbed_map(base: MapState, amplitude: float, seed: int = 0) -> MapState:
    """Adds a smooth random perturbation of bounded amplitude to a map.

    The first coordinate receives modes ``cos(k x) sin(m y)`` with odd k, the
    second ``sin(k x) cos(m y)`` with even k. The class is preserved by the
    tension of maps such as the equator wrap, which keeps iterations away
    from their symmetry directions.
    """
    rng = make_rng(seed)
    x, y = _waves(base.domain)
    first = sum(
        rng.standard_normal() * np.cos(k * x) * np.sin(m * y)
        for k in (1, 3)
        for m in (1, 2)
    )
    second = sum(
        rng.standard_normal() * np.sin(2 * x) * np.cos(m * y) for m in (0, 1)
    )
    delta = np.zeros_like(base.values)
    delta[..., 0] = first / max(np.max(np.abs(first)), 1e-300)
    if base.chart.dim_n > 1:
        delta[..., 1] = second / max(np.max(np.abs(second)), 1e-300)
    return base.with_values(base.values + amplitude * delta)


def random_smooth_map(
    chart: Chart,
    domain: GridDomain,
    center,
    amplitude: float,
    seed: int = 0,
    modes: int = 2,
) -> MapState:
    """``center`` plus a random trigonometric polynomial of the given amplitude."""
    rng = make_rng(seed)
    x, y = _waves(domain)
    center = np.asarray(center, dtype=float)
    values = np.broadcast_to(center, domain.shape + center.shape).copy()
    for a in range(chart.dim_n):
        wave = np.zeros(domain.shape)
        for k in range(modes + 1):
            for m in range(modes + 1):
                if k == 0 and m == 0:
                    continue
                c, s = rng.standard_normal(2)
                wave += c * np.cos(k * x + m * y) + s * np.sin(k * x - m * y)
        values[..., a] += amplitude * wave / np.max(np.abs(wave))
    return MapState(values, chart, domain)


def latitude_map(domain: GridDomain, amplitude: float = 0.2) -> MapState:
    """``(theta, phi) = (pi/2 + amplitude sin x, y)`` into the sphere."""
    x, y = _waves(domain)
    values = np.stack([np.pi / 2 + amplitude * np.sin(x), y], axis=-1)
    return MapState(values, sphere2_chart(), domain)


def _equivariant_vector(y: np.ndarray) -> np.ndarray:
    theta = np.asarray(y, dtype=float)[..., 0]
    s = np.sin(theta)
    v = np.zeros(np.shape(y))
    v[..., 0] = (s * np.cos(theta) + theta - np.pi / 2) / s**2
    return v


def equivariant_torsion() -> TorsionField:
    """Vectorial torsion ``V = v(theta) d_theta`` on the sphere.

    With ``v = (sin cos theta + theta - pi/2) / sin^2 theta`` every map
    ``(pi/2 + a sin y, x)`` solves the torsion harmonic map equation.
    """
    return TorsionField.vectorial(_equivariant_vector, "equivariant v(theta)")


def equivariant_solution(domain: GridDomain, amplitude: float = 0.5) -> MapState:
    """Exact torsion-harmonic map for :func:`equivariant_torsion` sampled on a grid.

    Raises:
        ValueError: If the domain is not the 2pi-periodic square torus.
    """
    if not np.allclose((domain.lx, domain.ly), 2.0 * np.pi):
        raise ValueError("The equivariant solution needs lx = ly = 2 pi")
    x, y = _waves(domain)
    values = np.stack([np.pi / 2 + amplitude * np.sin(y), x], axis=-1)
    return MapState(values, sphere2_chart(), domain)
