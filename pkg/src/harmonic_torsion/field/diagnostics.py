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

"""Energy functionals and scale-invariant diagnostics of discrete maps."""

import logging
import math
from collections.abc import Sequence

import numpy as np

from harmonic_torsion.field.grid import MapState, energy_density, energy_density_nodal
from harmonic_torsion.field.tension import variational_tension
from harmonic_torsion.geometry.torsion import TorsionField


logger = logging.getLogger(__name__)

GRADIENT_PROBE_RANGE = (1e-6, 1e-2)
RADIUS_TOLERANCE = 1e-12


def _grid_sum(density: np.ndarray) -> float:
    return math.fsum(np.ravel(density))


def dirichlet_energy(map_state: MapState) -> float:
    """Discrete Dirichlet energy ``sum_k e(k) dA`` (no factor one half).

    The density uses forward differences with the metric at edge midpoints.
    """
    return _grid_sum(energy_density(map_state)) * map_state.domain.cell_area


def local_energy(map_state: MapState, mask: np.ndarray) -> float:
    """Energy of the nodes selected by a boolean ``(nx, ny)`` mask.

    Raises:
        ValueError: If the mask has the wrong shape or selects no node.
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != map_state.domain.shape:
        raise ValueError(
            f"Mask must have shape {map_state.domain.shape}, got {mask.shape}"
        )
    if not mask.any():
        raise ValueError("Mask selects no grid node")
    density = energy_density(map_state)
    return _grid_sum(density[mask]) * map_state.domain.cell_area


def grid_inner_product(
    map_state: MapState, first: np.ndarray, second: np.ndarray
) -> float:
    """``sum_k <first(k), second(k)>_{h(phi(k))} dA``."""
    h = map_state.chart.metric(map_state.values)
    pointwise = np.einsum("...a,...ab,...b->...", first, h, second)
    return _grid_sum(pointwise) * map_state.domain.cell_area


def energy_gradient_check(
    map_state: MapState, field: TorsionField, probe: np.ndarray, t: float
) -> float:
    """Checks that the tension is minus half the energy gradient.

    Returns ``|(E(phi + t eta) - E(phi)) / (2 t) + <eta, tau_var(phi)>|`` with
    the variational tension of the discrete energy, which is O(t) for every
    map into every target. ``field`` never enters: torsion terms are not the
    gradient of any functional, so comparing against the torsion tension
    would measure the torsion trace instead.

    Raises:
        ValueError: If ``t`` lies outside ``[1e-6, 1e-2]``.
        ChartDomainError: If the perturbed map leaves the chart.
    """
    lo, hi = GRADIENT_PROBE_RANGE
    if not lo <= t <= hi:
        raise ValueError(f"Probe step t={t:g} outside [{lo:g}, {hi:g}]")
    if not field.is_zero:
        logger.debug(f"Gradient check ignores torsion field {field.description}")
    probe = np.asarray(probe, dtype=float)
    shifted = map_state.perturbed(probe, t)
    quotient = (dirichlet_energy(shifted) - dirichlet_energy(map_state)) / (2.0 * t)
    pairing = grid_inner_product(map_state, probe, variational_tension(map_state))
    return abs(quotient + pairing)


def ball_masks(map_state: MapState, radius: float) -> np.ndarray:
    """Offsets within geodesic distance ``radius`` of a node on the periodic grid."""
    domain = map_state.domain
    scale = math.exp(domain.conformal_u)
    di = np.arange(domain.nx)
    dj = np.arange(domain.ny)
    dx = np.minimum(di, domain.nx - di) * domain.hx * scale
    dy = np.minimum(dj, domain.ny - dj) * domain.hy * scale
    distance_sq = dx[:, None] ** 2 + dy[None, :] ** 2
    return distance_sq <= radius**2 * (1.0 + RADIUS_TOLERANCE)


def morrey_norm(map_state: MapState, radii: Sequence[float]) -> float:
    """Largest square-rooted energy of a periodic geodesic ball.

    The two-dimensional Morrey weight r^0 is 1, so the supremum over centers
    and radii runs over ball energies directly. Balls are periodic and may
    cover the whole domain. Nodal densities use central differences.

    Raises:
        ValueError: If ``radii`` is empty or contains a non-positive radius.
    """
    radii = [float(r) for r in radii]
    if not radii:
        raise ValueError("At least one radius is required")
    if min(radii) <= 0:
        raise ValueError(f"Radii must be positive, got {radii}")
    density = energy_density_nodal(map_state)
    density_hat = np.fft.rfft2(density)
    best = 0.0
    for radius in radii:
        kernel = ball_masks(map_state, radius).astype(float)
        # correlation of the density with the (even) ball indicator
        spectrum = density_hat * np.conj(np.fft.rfft2(kernel))
        local = np.fft.irfft2(spectrum, s=density.shape)
        local = np.clip(local, 0.0, None) * map_state.domain.cell_area
        best = max(best, float(np.sqrt(local.max())))
    return best
