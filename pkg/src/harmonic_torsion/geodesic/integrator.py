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

"""Fixed-step integration of geodesics of a metric connection with torsion.

The geodesic equation in chart coordinates is

    gamma''^a = -(Gamma^a_{bc} + A^a_{bc}) gamma'^b gamma'^c,

and for any metric connection the squared speed h(gamma', gamma') is constant
along solutions. The integrator stops early, and flags the trajectory as
truncated, when the curve reaches the chart boundary.
"""

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
import pandas as pd

from harmonic_torsion.geometry.chart import Chart
from harmonic_torsion.geometry.curvature import connection_coefficients
from harmonic_torsion.geometry.torsion import TorsionField
from harmonic_torsion.utils.errors import ChartDomainError, DivergenceError


logger = logging.getLogger(__name__)


class IntegrationMethod(str, Enum):
    RK4 = "rk4"
    EULER = "euler"


@dataclass(frozen=True, eq=False)
class GeodesicState:
    """Position and velocity in chart coordinates."""

    gamma: np.ndarray
    gamma_prime: np.ndarray

    def __post_init__(self):
        gamma = np.asarray(self.gamma, dtype=float)
        gamma_prime = np.asarray(self.gamma_prime, dtype=float)
        if gamma.ndim != 1 or gamma.shape != gamma_prime.shape:
            raise ValueError(
                f"gamma and gamma_prime must be vectors of equal length, "
                f"got {gamma.shape} and {gamma_prime.shape}"
            )
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "gamma_prime", gamma_prime)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Uniformly sampled solution of the geodesic equation.

    Attributes:
        s: Curve parameter at each sample, strictly increasing.
        gamma: Positions, shape ``(m, n)``.
        gamma_prime: Velocities, shape ``(m, n)``.
        step: Parameter step between samples.
        method: Integration scheme.
        truncated: True when integration stopped at the chart boundary.
    """

    s: np.ndarray
    gamma: np.ndarray
    gamma_prime: np.ndarray
    step: float
    method: IntegrationMethod
    truncated: bool = False

    def __len__(self) -> int:
        return len(self.s)

    @property
    def samples(self) -> list[tuple[float, GeodesicState]]:
        return [
            (float(s), GeodesicState(g, v))
            for s, g, v in zip(self.s, self.gamma, self.gamma_prime)
        ]

    @property
    def final_state(self) -> GeodesicState:
        return GeodesicState(self.gamma[-1], self.gamma_prime[-1])

    def speed_squared(self, chart: Chart) -> np.ndarray:
        h = chart.metric(self.gamma)
        return np.einsum("...a,...ab,...b->...", self.gamma_prime, h, self.gamma_prime)


def geodesic_rhs(chart: Chart, field: TorsionField, state: GeodesicState) -> np.ndarray:
    """Acceleration of the geodesic through ``state``.

    Raises:
        ChartDomainError: If the position is outside the chart; the error
            carries ``state`` as ``last_state``.
    """
    try:
        coeffs = connection_coefficients(chart, field, state.gamma)
    except ChartDomainError as e:
        raise ChartDomainError(str(e), point=state.gamma, last_state=state) from e
    v = state.gamma_prime
    return -np.einsum("abc,b,c->a", coeffs, v, v)


def _acceleration(chart, field, x, v):
    return geodesic_rhs(chart, field, GeodesicState(x, v))


def _euler_step(chart, field, x, v, h):
    return x + h * v, v + h * _acceleration(chart, field, x, v)


def _rk4_step(chart, field, x, v, h):
    k1x, k1v = v, _acceleration(chart, field, x, v)
    k2x = v + 0.5 * h * k1v
    k2v = _acceleration(chart, field, x + 0.5 * h * k1x, k2x)
    k3x = v + 0.5 * h * k2v
    k3v = _acceleration(chart, field, x + 0.5 * h * k2x, k3x)
    k4x = v + h * k3v
    k4v = _acceleration(chart, field, x + h * k3x, k4x)
    x_new = x + h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
    v_new = v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
    return x_new, v_new


_STEPPERS = {
    IntegrationMethod.RK4: _rk4_step,
    IntegrationMethod.EULER: _euler_step,
}


def _non_finite(error: ChartDomainError) -> bool:
    """True when a stage left the chart through overflow rather than motion."""
    if error.point is not None and not np.all(np.isfinite(error.point)):
        return True
    state = error.last_state
    return state is not None and not np.all(np.isfinite(state.gamma_prime))


def integrate(
    chart: Chart,
    field: TorsionField,
    initial: GeodesicState,
    step: float,
    n_steps: int,
    method: IntegrationMethod | str = IntegrationMethod.RK4,
) -> Trajectory:
    """Integrates the geodesic equation with a fixed step.

    Args:
        chart: Target chart.
        field: Torsion of the connection.
        initial: Starting position and velocity.
        step: Positive parameter step.
        n_steps: Number of steps to take.
        method: ``rk4`` (default) or ``euler``.

    Returns:
        Trajectory with ``n_steps + 1`` samples, fewer if truncated.

    Raises:
        ValueError: If ``step`` or ``n_steps`` is invalid.
        ChartDomainError: If the initial position is outside the chart.
        DivergenceError: If the state becomes non-finite.
    """
    method = IntegrationMethod(method)
    if not step > 0:
        raise ValueError(f"step must be positive, got {step}")
    if int(n_steps) != n_steps or n_steps < 0:
        raise ValueError(f"n_steps must be a non-negative integer, got {n_steps}")
    chart.require_inside(initial.gamma, what="initial position")

    stepper = _STEPPERS[method]
    positions = [initial.gamma]
    velocities = [initial.gamma_prime]
    truncated = False
    x, v = initial.gamma, initial.gamma_prime
    for k in range(int(n_steps)):
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                x_new, v_new = stepper(chart, field, x, v, step)
        except ChartDomainError as e:
            if _non_finite(e):
                raise DivergenceError(
                    f"Geodesic state became non-finite at step {k + 1}",
                    step_index=k + 1,
                ) from e
            truncated = True
        else:
            if not (np.all(np.isfinite(x_new)) and np.all(np.isfinite(v_new))):
                raise DivergenceError(
                    f"Geodesic state became non-finite at step {k + 1}",
                    step_index=k + 1,
                )
            truncated = not bool(chart.contains(x_new))
        if truncated:
            logger.warning(
                f"Geodesic reached the boundary of chart {chart.name} "
                f"after {k} steps; trajectory truncated"
            )
            break
        x, v = x_new, v_new
        positions.append(x)
        velocities.append(v)

    count = len(positions)
    return Trajectory(
        s=step * np.arange(count),
        gamma=np.array(positions),
        gamma_prime=np.array(velocities),
        step=float(step),
        method=method,
        truncated=truncated,
    )


def speed_drift(traj: Trajectory, chart: Chart) -> float:
    """Largest deviation of the squared speed from its initial value.

    Raises:
        ValueError: If the trajectory is empty.
    """
    if len(traj) == 0:
        raise ValueError("Trajectory has no samples")
    speed = traj.speed_squared(chart)
    return float(np.max(np.abs(speed - speed[0])))


def trajectory_frame(traj: Trajectory, chart: Chart) -> pd.DataFrame:
    """Table ``s, gamma_1..gamma_n, gammaprime_1..gammaprime_n, speed_sq``."""
    n = traj.gamma.shape[-1] if len(traj) else chart.dim_n
    columns = {"s": traj.s}
    for a in range(n):
        columns[f"gamma_{a + 1}"] = traj.gamma[:, a]
    for a in range(n):
        columns[f"gammaprime_{a + 1}"] = traj.gamma_prime[:, a]
    columns["speed_sq"] = traj.speed_squared(chart)
    return pd.DataFrame(columns)
