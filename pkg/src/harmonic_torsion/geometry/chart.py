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

"""Coordinate charts of target manifolds and their Levi-Civita data.

All chart functions are batched: points carry coordinates on the last axis
and any number of leading axes, so a whole grid of map values can be passed
at once.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from harmonic_torsion.utils.errors import ChartDomainError, ConditioningError
from harmonic_torsion.utils.helpers import partial_derivatives


METRIC_FD_STEP = 1e-5

MetricFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class Chart:
    """A single coordinate patch of a Riemannian target manifold.

    Attributes:
        name: Identifier used in configuration files and reports.
        dim_n: Target dimension n.
        metric: Batched closure ``y -> h(y)`` of shape ``(..., n, n)``.
        domain_box: ``(n, 2)`` array of open interval bounds per coordinate.
        metric_derivs: Optional batched closure returning ``dh[..., a, b, k]``
            = ``d h_ab / d y^k``. Central differences are used when absent.
        periods: Per-coordinate period, or None for non-periodic coordinates.
        embedding: Optional isometric embedding into Euclidean space.
        embedding_jacobian: Jacobian of ``embedding``, shape ``(..., q, n)``.
        chart_coordinates: Inverse of ``embedding`` on its image.
    """

    name: str
    dim_n: int
    metric: MetricFn
    domain_box: np.ndarray
    metric_derivs: MetricFn | None = None
    periods: tuple[float | None, ...] = field(default=())
    embedding: MetricFn | None = None
    embedding_jacobian: MetricFn | None = None
    chart_coordinates: MetricFn | None = None

    def __post_init__(self):
        box = np.asarray(self.domain_box, dtype=float)
        if box.shape != (self.dim_n, 2) or np.any(box[:, 0] >= box[:, 1]):
            raise ValueError(f"Chart {self.name}: invalid domain box {box.tolist()}")
        object.__setattr__(self, "domain_box", box)
        periods = tuple(self.periods) or (None,) * self.dim_n
        if len(periods) != self.dim_n:
            raise ValueError(f"Chart {self.name}: expected {self.dim_n} periods")
        object.__setattr__(self, "periods", periods)

    def contains(self, y: np.ndarray, margin: float = 0.0) -> np.ndarray:
        """Boolean mask of points strictly inside the box shrunk by ``margin``."""
        y = np.asarray(y, dtype=float)
        lo = self.domain_box[:, 0] + margin
        hi = self.domain_box[:, 1] - margin
        return np.all((y > lo) & (y < hi), axis=-1)

    def require_inside(self, y: np.ndarray, margin: float = 0.0, what: str = "point"):
        """Raises ChartDomainError unless every point is inside the chart."""
        y = np.asarray(y, dtype=float)
        if y.shape[-1] != self.dim_n:
            raise ValueError(
                f"Chart {self.name} expects {self.dim_n} coordinates, "
                f"got shape {y.shape}"
            )
        inside = np.atleast_1d(self.contains(y, margin)).ravel()
        if not inside.all():
            point = y.reshape(-1, self.dim_n)[np.flatnonzero(~inside)[0]]
            raise ChartDomainError(
                f"{what} {point.tolist()} outside chart {self.name} "
                f"(margin {margin:g})",
                point=point,
            )

    def metric_at(self, y: np.ndarray) -> np.ndarray:
        """Metric at ``y`` after checking domain and positive definiteness."""
        self.require_inside(y)
        h = np.asarray(self.metric(np.asarray(y, dtype=float)), dtype=float)
        check_positive_definite(h, self.name)
        return h

    def inverse_metric(self, y: np.ndarray) -> np.ndarray:
        return np.linalg.inv(self.metric_at(y))

    def stencil_clearance(self, y: np.ndarray) -> float:
        """Two metric difference steps, relative to the largest ``|y|``."""
        norms = np.linalg.norm(np.asarray(y, dtype=float), axis=-1)
        return 2.0 * METRIC_FD_STEP * max(1.0, float(np.max(norms, initial=0.0)))

    def metric_derivatives(self, y: np.ndarray) -> np.ndarray:
        """Returns ``dh[..., a, b, k]``, analytic when available."""
        y = np.asarray(y, dtype=float)
        if self.metric_derivs is not None:
            return np.asarray(self.metric_derivs(y), dtype=float)
        self.require_inside(y, self.stencil_clearance(y), "metric stencil at")
        return partial_derivatives(self.metric, y, METRIC_FD_STEP, order=2)

    def wrap_difference(self, delta: np.ndarray) -> np.ndarray:
        """Reduces coordinate differences of periodic coordinates to (-P/2, P/2]."""
        delta = np.array(delta, dtype=float)
        for k, period in enumerate(self.periods):
            if period is not None:
                delta[..., k] -= period * np.round(delta[..., k] / period)
        return delta


def check_positive_definite(h: np.ndarray, name: str = "metric"):
    if not np.all(np.isfinite(h)):
        raise ConditioningError(f"{name}: metric has non-finite entries")
    try:
        np.linalg.cholesky(h)
    except np.linalg.LinAlgError as e:
        raise ConditioningError(f"{name}: metric not positive definite ({e})")


def christoffel(chart: Chart, y: np.ndarray) -> np.ndarray:
    """Levi-Civita Christoffel symbols ``G[..., a, b, c]`` = Gamma^a_{bc}.

    Args:
        chart: Target chart.
        y: Point(s) strictly inside the chart.

    Returns:
        Array symmetric in the last two indices.

    Raises:
        ChartDomainError: If a point lies outside the chart.
        ConditioningError: If the metric is singular.
    """
    h = chart.metric_at(y)
    dh = chart.metric_derivatives(y)
    lowered = np.swapaxes(dh, -1, -2) + dh - np.moveaxis(dh, -1, -3)
    return 0.5 * np.einsum("...ad,...dbc->...abc", np.linalg.inv(h), lowered)


def _identity_metric(n: int) -> MetricFn:
    def metric(y):
        y = np.asarray(y, dtype=float)
        return np.broadcast_to(np.eye(n), y.shape[:-1] + (n, n)).copy()

    return metric


def flat_chart(dim: int = 2, periods: tuple[float | None, ...] | None = None) -> Chart:
    """Euclidean space (or a flat torus when periods are given)."""
    if dim < 1:
        raise ValueError("flat chart dimension must be positive")

    def metric_derivs(y):
        y = np.asarray(y, dtype=float)
        return np.zeros(y.shape[:-1] + (dim, dim, dim))

    box = np.tile([-np.inf, np.inf], (dim, 1))
    return Chart(
        name="flat",
        dim_n=dim,
        metric=_identity_metric(dim),
        domain_box=box,
        metric_derivs=metric_derivs,
        periods=tuple(periods) if periods else (),
    )


SPHERE_POLE_MARGIN = 0.05


def sphere2_chart() -> Chart:
    """Round unit sphere in spherical coordinates ``(theta, phi)``."""

    def metric(y):
        y = np.asarray(y, dtype=float)
        h = np.zeros(y.shape[:-1] + (2, 2))
        h[..., 0, 0] = 1.0
        h[..., 1, 1] = np.sin(y[..., 0]) ** 2
        return h

    def metric_derivs(y):
        y = np.asarray(y, dtype=float)
        dh = np.zeros(y.shape[:-1] + (2, 2, 2))
        dh[..., 1, 1, 0] = np.sin(2.0 * y[..., 0])
        return dh

    def embedding(y):
        y = np.asarray(y, dtype=float)
        theta, phi = y[..., 0], y[..., 1]
        return np.stack(
            [np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)],
            axis=-1,
        )

    def embedding_jacobian(y):
        y = np.asarray(y, dtype=float)
        theta, phi = y[..., 0], y[..., 1]
        jac = np.zeros(y.shape[:-1] + (3, 2))
        jac[..., 0, 0] = np.cos(theta) * np.cos(phi)
        jac[..., 1, 0] = np.cos(theta) * np.sin(phi)
        jac[..., 2, 0] = -np.sin(theta)
        jac[..., 0, 1] = -np.sin(theta) * np.sin(phi)
        jac[..., 1, 1] = np.sin(theta) * np.cos(phi)
        return jac

    def chart_coordinates(p):
        p = np.asarray(p, dtype=float)
        theta = np.arccos(np.clip(p[..., 2], -1.0, 1.0))
        phi = np.arctan2(p[..., 1], p[..., 0])
        return np.stack([theta, phi], axis=-1)

    box = np.array(
        [[SPHERE_POLE_MARGIN, np.pi - SPHERE_POLE_MARGIN], [-np.inf, np.inf]]
    )
    return Chart(
        name="sphere2",
        dim_n=2,
        metric=metric,
        domain_box=box,
        metric_derivs=metric_derivs,
        periods=(None, 2.0 * np.pi),
        embedding=embedding,
        embedding_jacobian=embedding_jacobian,
        chart_coordinates=chart_coordinates,
    )


HYPERBOLIC_MIN_HEIGHT = 1e-2


def hyperbolic2_chart() -> Chart:
    """Upper half-plane model, ``h = I / y2**2``."""

    def metric(y):
        y = np.asarray(y, dtype=float)
        scale = 1.0 / y[..., 1] ** 2
        return scale[..., None, None] * np.eye(2)

    def metric_derivs(y):
        y = np.asarray(y, dtype=float)
        dh = np.zeros(y.shape[:-1] + (2, 2, 2))
        d = -2.0 / y[..., 1] ** 3
        dh[..., 0, 0, 1] = d
        dh[..., 1, 1, 1] = d
        return dh

    box = np.array([[-np.inf, np.inf], [HYPERBOLIC_MIN_HEIGHT, np.inf]])
    return Chart(
        name="hyperbolic2",
        dim_n=2,
        metric=metric,
        domain_box=box,
        metric_derivs=metric_derivs,
    )


BUILTIN_CHARTS: dict[str, Callable[..., Chart]] = {
    "flat": flat_chart,
    "sphere2": sphere2_chart,
    "hyperbolic2": hyperbolic2_chart,
}


def get_chart(name: str, **params) -> Chart:
    """Builds a built-in chart by name.

    Raises:
        KeyError: If the name is not registered.
    """
    if name not in BUILTIN_CHARTS:
        raise KeyError(f"Unknown chart '{name}'. Available: {sorted(BUILTIN_CHARTS)}")
    return BUILTIN_CHARTS[name](**params)


@dataclass(frozen=True, eq=False)
class ConformalFactor:
    """Smooth function v on a chart, used to rescale the metric by e^{2v}.

    ``gradient`` returns the covector ``dv`` (shape ``(..., n)``); central
    differences are used when it is missing.
    """

    value: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray] | None = None

    def covector(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if self.gradient is not None:
            return np.asarray(self.gradient(y), dtype=float)
        return partial_derivatives(self.value, y, METRIC_FD_STEP, order=4)

    @classmethod
    def linear(cls, scale: float, axis: int, dim: int) -> "ConformalFactor":
        """``v(y) = scale * y[axis]``."""
        unit = np.zeros(dim)
        unit[axis] = scale

        def gradient(y):
            y = np.asarray(y, dtype=float)
            return np.broadcast_to(unit, y.shape).copy()

        return cls(value=lambda y: scale * np.asarray(y)[..., axis], gradient=gradient)

    @classmethod
    def constant(cls, c: float) -> "ConformalFactor":
        return cls(
            value=lambda y: np.full(np.asarray(y).shape[:-1], float(c)),
            gradient=lambda y: np.zeros(np.asarray(y).shape),
        )


def conformally_rescaled(chart: Chart, factor: ConformalFactor) -> Chart:
    """Same coordinates, metric ``e^{2v} h`` with analytic derivatives."""

    def metric(y):
        weight = np.exp(2.0 * factor.value(y))
        return weight[..., None, None] * chart.metric(y)

    def metric_derivs(y):
        weight = np.exp(2.0 * factor.value(y))[..., None, None, None]
        h = chart.metric(y)
        dv = factor.covector(y)
        return weight * (
            2.0 * h[..., :, :, None] * dv[..., None, None, :]
            + chart.metric_derivatives(y)
        )

    return Chart(
        name=f"{chart.name}~conformal",
        dim_n=chart.dim_n,
        metric=metric,
        domain_box=chart.domain_box,
        metric_derivs=metric_derivs,
        periods=chart.periods,
    )
