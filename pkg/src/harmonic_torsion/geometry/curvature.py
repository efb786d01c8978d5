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

"""Connection coefficients, covariant derivatives of torsion and curvature.

Index conventions: ``C[..., a, b, c]`` is the coefficient of
``nabla_{d_b} d_c = C^a_{bc} d_a``; derivative arrays carry the direction of
differentiation on their last axis; curvature values are ``R[..., a, b, c, d]``
with ``R(d_c, d_d) d_b = R^a_{bcd} d_a`` and the sign convention
``R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z``.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from harmonic_torsion.geometry.chart import Chart, christoffel
from harmonic_torsion.geometry.torsion import TorsionField
from harmonic_torsion.utils.errors import ChartDomainError
from harmonic_torsion.utils.helpers import partial_derivatives


CONNECTION_FD_STEP = 1e-4


class ConnectionKind(str, Enum):
    LEVI_CIVITA = "levi_civita"
    TORSION = "torsion"


def derivative_margin(y: np.ndarray, step: float, order: int) -> float:
    """Clearance needed by a central stencil of the given order around ``y``."""
    reach = 1.0 if order == 2 else 2.0
    norms = np.linalg.norm(np.asarray(y, dtype=float), axis=-1)
    return reach * step * max(1.0, float(np.max(norms, initial=0.0)))


def christoffel_derivatives(
    chart: Chart, y: np.ndarray, step: float = CONNECTION_FD_STEP, order: int = 4
) -> np.ndarray:
    """``dG[..., a, b, c, e]`` = d Gamma^a_{bc} / d y^e."""
    chart.require_inside(y, derivative_margin(y, step, order))
    return partial_derivatives(lambda z: christoffel(chart, z), y, step, order)


def torsion_derivatives(
    chart: Chart,
    field: TorsionField,
    y: np.ndarray,
    step: float = CONNECTION_FD_STEP,
    order: int = 4,
) -> np.ndarray:
    """``dL[..., b, c, d, e]`` = d A_{bcd} / d y^e of the lowered coefficients."""
    chart.require_inside(y, derivative_margin(y, step, order))
    return partial_derivatives(
        lambda z: field.lowered(z, chart.metric(z)), y, step, order
    )


def connection_coefficients(
    chart: Chart, field: TorsionField, y: np.ndarray
) -> np.ndarray:
    """Coefficients of the metric connection ``nabla^LC + A``."""
    h = chart.metric_at(y)
    raised = np.einsum("...ad,...bcd->...abc", np.linalg.inv(h), field.lowered(y, h))
    return christoffel(chart, y) + raised


def connection_derivatives(
    chart: Chart,
    field: TorsionField,
    y: np.ndarray,
    step: float = CONNECTION_FD_STEP,
    order: int = 4,
) -> np.ndarray:
    """``dC[..., a, b, c, e]`` = d C^a_{bc} / d y^e for ``C = Gamma + A``."""
    chart.require_inside(y, derivative_margin(y, step, order))
    return partial_derivatives(
        lambda z: connection_coefficients(chart, field, z), y, step, order
    )


def torsion_nabla(
    chart: Chart,
    field: TorsionField,
    y: np.ndarray,
    step: float = CONNECTION_FD_STEP,
    order: int = 4,
) -> np.ndarray:
    """Levi-Civita covariant derivative of the torsion endomorphism.

    Returns ``N[..., e, a, b, c]`` = ``(nabla_e A)^a_{bc}``, computed from
    central differences of the lowered coefficients plus Christoffel terms.
    """
    y = np.asarray(y, dtype=float)
    n = chart.dim_n
    if field.is_zero:
        return np.zeros(y.shape[:-1] + (n, n, n, n))
    h = chart.metric_at(y)
    gamma = christoffel(chart, y)
    lowered = field.lowered(y, h)
    d_lowered = np.moveaxis(torsion_derivatives(chart, field, y, step, order), -1, -4)
    nabla_lowered = (
        d_lowered
        - np.einsum("...feb,...fcd->...ebcd", gamma, lowered)
        - np.einsum("...fec,...bfd->...ebcd", gamma, lowered)
        - np.einsum("...fed,...bcf->...ebcd", gamma, lowered)
    )
    return np.einsum("...ad,...ebcd->...eabc", np.linalg.inv(h), nabla_lowered)


def riemann_from_connection(coeffs: np.ndarray, d_coeffs: np.ndarray) -> np.ndarray:
    """Curvature of a connection from its coefficients and their derivatives."""
    return (
        np.einsum("...adbc->...abcd", d_coeffs)
        - np.einsum("...acbd->...abcd", d_coeffs)
        + np.einsum("...ace,...edb->...abcd", coeffs, coeffs)
        - np.einsum("...ade,...ecb->...abcd", coeffs, coeffs)
    )


def levi_civita_riemann(
    chart: Chart, y: np.ndarray, step: float = CONNECTION_FD_STEP, order: int = 4
) -> np.ndarray:
    return riemann_from_connection(
        christoffel(chart, y), christoffel_derivatives(chart, y, step, order)
    )


def torsion_riemann(
    riemann_lc: np.ndarray, raised: np.ndarray, nabla: np.ndarray
) -> np.ndarray:
    """Torsion-connection curvature from the Levi-Civita curvature.

    ``R^Tor(X,Y)Z = R^LC(X,Y)Z + (nabla_X A)(Y,Z) - (nabla_Y A)(X,Z)
    + A(X, A(Y,Z)) - A(Y, A(X,Z))``.
    """
    return (
        riemann_lc
        + np.einsum("...cadb->...abcd", nabla)
        - np.einsum("...dacb->...abcd", nabla)
        + np.einsum("...ace,...edb->...abcd", raised, raised)
        - np.einsum("...ade,...ecb->...abcd", raised, raised)
    )


@dataclass(frozen=True, eq=False)
class CurvatureTensor:
    """Curvature of one connection at a point.

    Attributes:
        values: ``R[a, b, c, d]``, see the module docstring.
        connection: Which connection the values belong to.
        discrepancy: For the torsion connection, the largest difference
            between direct differencing of ``Gamma + A`` and the relation
            through the Levi-Civita curvature. None otherwise.
        h_fd: Finite-difference step used.
    """

    values: np.ndarray
    connection: ConnectionKind
    discrepancy: float | None = None
    h_fd: float = CONNECTION_FD_STEP

    def apply(self, X: np.ndarray, Y: np.ndarray, Z: np.ndarray) -> np.ndarray:
        """``R(X, Y) Z``."""
        return np.einsum("...abcd,...b,...c,...d->...a", self.values, Z, X, Y)

    def lowered(self, h: np.ndarray) -> np.ndarray:
        return np.einsum("...ae,...ebcd->...abcd", h, self.values)


def curvature(
    chart: Chart,
    field: TorsionField,
    y: np.ndarray,
    connection: ConnectionKind | str = ConnectionKind.LEVI_CIVITA,
    h_fd: float = CONNECTION_FD_STEP,
) -> CurvatureTensor:
    """Curvature of the Levi-Civita or the torsion connection at ``y``.

    The torsion connection is evaluated two ways: by second-order differences
    of ``Gamma + A`` and through the Levi-Civita curvature with fourth-order
    differences. The returned values come from the second path and
    ``discrepancy`` records the largest difference between them.

    Raises:
        ChartDomainError: If ``y`` is closer than ``2 * h_fd`` to the chart
            boundary (relative to ``max(1, |y|)``).
    """
    connection = ConnectionKind(connection)
    y = np.asarray(y, dtype=float)
    margin = derivative_margin(y, h_fd, order=4)
    if not np.all(chart.contains(y, margin)):
        raise ChartDomainError(
            f"point {y.tolist()} has insufficient margin {margin:g} "
            f"in chart {chart.name}",
            point=y,
        )

    if connection is ConnectionKind.LEVI_CIVITA:
        values = levi_civita_riemann(chart, y, h_fd, order=2)
        return CurvatureTensor(values, connection, None, h_fd)

    direct = riemann_from_connection(
        connection_coefficients(chart, field, y),
        connection_derivatives(chart, field, y, h_fd, order=2),
    )
    h = chart.metric_at(y)
    raised = np.einsum("ad,bcd->abc", np.linalg.inv(h), field.lowered(y, h))
    related = torsion_riemann(
        levi_civita_riemann(chart, y, h_fd, order=4),
        raised,
        torsion_nabla(chart, field, y, h_fd, order=4),
    )
    discrepancy = float(np.max(np.abs(direct - related)))
    return CurvatureTensor(related, connection, discrepancy, h_fd)


def sectional_curvature(
    tensor: CurvatureTensor, h: np.ndarray, X: np.ndarray, Y: np.ndarray
) -> float:
    """``<R(X,Y)Y, X> / (|X|^2 |Y|^2 - <X,Y>^2)``."""
    numerator = X @ h @ tensor.apply(X, Y, Y)
    area = (X @ h @ X) * (Y @ h @ Y) - (X @ h @ Y) ** 2
    return float(numerator / area)


def metric_compatibility_residual(
    chart: Chart,
    field: TorsionField,
    y: np.ndarray,
    X: np.ndarray,
    Y: np.ndarray,
    Z: np.ndarray,
    step: float = 1e-6,
) -> float:
    """``|X<Y,Z> - <nabla_X Y, Z> - <Y, nabla_X Z>|`` for constant Y, Z."""
    y = np.asarray(y, dtype=float)
    chart.require_inside(y, step * float(np.linalg.norm(X)))
    h_plus = chart.metric(y + step * X)
    h_minus = chart.metric(y - step * X)
    derivative = (Y @ h_plus @ Z - Y @ h_minus @ Z) / (2.0 * step)
    coeffs = connection_coefficients(chart, field, y)
    h = chart.metric_at(y)
    nabla_Y = np.einsum("abc,b,c->a", coeffs, X, Y)
    nabla_Z = np.einsum("abc,b,c->a", coeffs, X, Z)
    return float(abs(derivative - nabla_Y @ h @ Z - Y @ h @ nabla_Z))
