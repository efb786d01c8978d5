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

"""Jacobi operators of harmonic maps with torsion.

Both forms of the operator are first-order perturbations of the grid
Laplacian. They are stored per node as

    J eta = Delta eta + K0 eta + sum_i K1_i d_i eta

with ``K0`` of shape ``(nx, ny, n, n)`` and ``K1`` of shape
``(nx, ny, 2, n, n)``, so applying the operator to a batch of perturbations
costs a few einsums. Dense matrices are assembled column by column from
unit perturbations in node-major order ``(i * ny + j) * n + a``.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from harmonic_torsion.field.grid import MapState, central_gradient, compact_laplacian
from harmonic_torsion.field.tension import map_derivatives, tension_tor
from harmonic_torsion.geometry.curvature import (
    CONNECTION_FD_STEP,
    christoffel_derivatives,
    connection_derivatives,
    riemann_from_connection,
    torsion_nabla,
    torsion_riemann,
)
from harmonic_torsion.geometry.torsion import TorsionField, torsion_eval
from harmonic_torsion.utils.errors import OperatorSizeError
from harmonic_torsion.utils.helpers import sup_norm


logger = logging.getLogger(__name__)

MAX_DENSE_SIZE = 20000
ASSEMBLY_CHUNK = 64


class JacobiForm(str, Enum):
    LEVI_CIVITA = "levi_civita"
    TORSION_CONNECTION = "torsion_connection"


@dataclass(frozen=True, eq=False)
class JacobiOperator:
    """Jacobi operator of one form at one base map.

    Attributes:
        base_map: Map the operator linearizes around.
        field: Torsion field.
        form: Which of the two equivalent forms is used.
        potential: ``K0``, the zeroth-order coefficients.
        transport: ``K1``, the first-order coefficients per direction.
        matrix: Dense ``(N n, N n)`` matrix once assembled, else None.
    """

    base_map: MapState
    field: TorsionField
    form: JacobiForm
    potential: np.ndarray
    transport: np.ndarray
    matrix: np.ndarray | None = None

    @property
    def size(self) -> int:
        return self.base_map.domain.n_nodes * self.base_map.chart.dim_n

    @property
    def shape(self) -> tuple[int, ...]:
        return self.base_map.values.shape


def _connection_laplacian_terms(coeffs, d_coeffs, gradient, laplacian, weight):
    """Coefficients of the rough Laplacian of the pulled-back connection."""
    pp = np.einsum("...ie,...ib->...eb", gradient, gradient)
    along = np.einsum("...abc,...ib->...iac", coeffs, gradient)
    potential = (
        weight * np.einsum("...abce,...eb->...ac", d_coeffs, pp)
        + np.einsum("...abc,...b->...ac", coeffs, laplacian)
        + weight * np.einsum("...iab,...ibc->...ac", along, along)
    )
    return potential, 2.0 * weight * along


def jacobi_operator(
    map_state: MapState,
    field: TorsionField,
    form: JacobiForm | str = JacobiForm.LEVI_CIVITA,
    step: float = CONNECTION_FD_STEP,
) -> JacobiOperator:
    """Builds the Jacobi operator of ``field`` at ``map_state``.

    The Levi-Civita form is
    ``Delta^LC eta + R(eta, d phi) d phi + (nabla_eta A)(d phi, d phi)
    + A(nabla eta, d phi) + A(d phi, nabla eta)``; the torsion-connection
    form uses the rough Laplacian and curvature of ``nabla^LC + A``. Traces
    over the domain frame carry the weight ``e^{-2u}``.

    Raises:
        ChartDomainError: If a node is too close to the chart boundary for
            the connection derivatives.
    """
    form = JacobiForm(form)
    chart = map_state.chart
    values = map_state.values
    derivs = map_derivatives(map_state)
    P = derivs.gradient
    w = derivs.weight
    gamma = derivs.gamma
    d_gamma = christoffel_derivatives(chart, values, step)
    riemann_lc = riemann_from_connection(gamma, d_gamma)
    raised = torsion_eval(field, chart, values).raised
    nabla = torsion_nabla(chart, field, values, step)
    pp = np.einsum("...ie,...ib->...eb", P, P)

    along_lc = np.einsum("...abc,...ib->...iac", gamma, P)
    first_slot = np.einsum("...abc,...ic->...iab", raised, P)
    second_slot = np.einsum("...abc,...ib->...iac", raised, P)

    if form is JacobiForm.LEVI_CIVITA:
        potential, transport = _connection_laplacian_terms(
            gamma, d_gamma, P, derivs.laplacian, w
        )
        potential = (
            potential
            + w * np.einsum("...abcd,...bd->...ac", riemann_lc, pp)
            + w * np.einsum("...eabc,...bc->...ae", nabla, pp)
        )
        symmetric = first_slot + second_slot
        transport = transport + w * symmetric
        potential = potential + w * np.einsum(
            "...iab,...ibc->...ac", symmetric, along_lc
        )
    else:
        coeffs = gamma + raised
        d_coeffs = (
            d_gamma
            if field.is_zero
            else connection_derivatives(chart, field, values, step)
        )
        potential, transport = _connection_laplacian_terms(
            coeffs, d_coeffs, P, derivs.laplacian, w
        )
        riemann = torsion_riemann(riemann_lc, raised, nabla)
        tau = derivs.laplacian + derivs.quadratic(gamma)
        skew = first_slot - second_slot
        potential = (
            potential
            + w * np.einsum("...abcd,...bd->...ac", riemann, pp)
            + w * np.einsum("...eabc,...ec->...ab", nabla, pp)
            - w * np.einsum("...eabc,...eb->...ac", nabla, pp)
            + np.einsum("...abc,...c->...ab", raised, tau)
            - np.einsum("...abc,...b->...ac", raised, tau)
            + w * np.einsum("...iab,...ibc->...ac", second_slot, first_slot)
            - w * np.einsum("...iab,...ibc->...ac", second_slot, second_slot)
            + w * np.einsum("...iab,...ibc->...ac", skew, along_lc)
        )
        transport = transport + w * skew

    return JacobiOperator(map_state, field, form, potential, transport)


def jacobi_apply(op: JacobiOperator, eta: np.ndarray) -> np.ndarray:
    """Applies the operator to one perturbation or a batch of them.

    Args:
        op: Jacobi operator.
        eta: Array of shape ``(..., nx, ny, n)``.

    Returns:
        Array of the same shape.
    """
    eta = np.asarray(eta, dtype=float)
    if eta.shape[-3:] != op.shape:
        raise ValueError(
            f"Perturbation must end with shape {op.shape}, got {eta.shape}"
        )
    domain = op.base_map.domain
    return (
        compact_laplacian(eta, domain)
        + np.einsum("...ac,...c->...a", op.potential, eta)
        + np.einsum("...iac,...ic->...a", op.transport, central_gradient(eta, domain))
    )


def linearization_check(
    map_state: MapState, field: TorsionField, eta: np.ndarray, t: float
) -> float:
    """Compares the Levi-Civita Jacobi operator with a difference quotient.

    Returns the largest entry of
    ``(tau^tor(phi + t eta) - tau^tor(phi)) / t + Gamma(eta, tau^tor(phi)) - J eta``.
    The Christoffel term moves the comparison into normal coordinates at
    the base point and vanishes for flat targets. The result is O(t).

    Raises:
        ValueError: If ``t`` is not positive.
        ChartDomainError: If the perturbed map leaves the chart.
    """
    if not t > 0:
        raise ValueError(f"Step t must be positive, got {t}")
    eta = np.asarray(eta, dtype=float)
    base = tension_tor(map_state, field)
    shifted = tension_tor(map_state.perturbed(eta, t), field)
    gamma = map_derivatives(map_state).gamma
    correction = np.einsum("...abc,...b,...c->...a", gamma, eta, base)
    op = jacobi_operator(map_state, field, JacobiForm.LEVI_CIVITA)
    return sup_norm((shifted - base) / t + correction - jacobi_apply(op, eta))


def jacobi_form_difference(
    map_state: MapState, field: TorsionField, eta: np.ndarray
) -> float:
    """Largest entry of ``J^Tor eta - J^LC eta - A(eta, tau^tor(phi))``.

    The two forms coincide on solutions; elsewhere they differ by exactly
    the torsion applied to the tension, up to finite-difference error in
    the connection derivatives.
    """
    eta = np.asarray(eta, dtype=float)
    lc = jacobi_apply(jacobi_operator(map_state, field, JacobiForm.LEVI_CIVITA), eta)
    tor = jacobi_apply(
        jacobi_operator(map_state, field, JacobiForm.TORSION_CONNECTION), eta
    )
    coeffs = torsion_eval(field, map_state.chart, map_state.values)
    return sup_norm(tor - lc - coeffs.apply(eta, tension_tor(map_state, field)))


def _unit_perturbations(shape: tuple[int, ...], start: int, stop: int) -> np.ndarray:
    block = np.zeros((stop - start, int(np.prod(shape))))
    block[np.arange(stop - start), np.arange(start, stop)] = 1.0
    return block.reshape((stop - start,) + shape)


def assemble(
    map_state: MapState,
    field: TorsionField,
    form: JacobiForm | str = JacobiForm.LEVI_CIVITA,
    threads: int = 1,
) -> JacobiOperator:
    """Dense matrix of the Jacobi operator, one column per unit perturbation.

    Columns are filled in disjoint chunks, in parallel when ``threads > 1``;
    the result does not depend on the thread count.

    Raises:
        OperatorSizeError: If ``N n`` exceeds :data:`MAX_DENSE_SIZE`.
    """
    op = jacobi_operator(map_state, field, form)
    size = op.size
    if size > MAX_DENSE_SIZE:
        raise OperatorSizeError(
            f"Dense Jacobi matrix of size {size} exceeds the cap of {MAX_DENSE_SIZE}"
        )
    matrix = np.empty((size, size))

    def fill(start: int):
        stop = min(start + ASSEMBLY_CHUNK, size)
        columns = jacobi_apply(op, _unit_perturbations(op.shape, start, stop))
        matrix[:, start:stop] = columns.reshape(stop - start, size).T

    starts = range(0, size, ASSEMBLY_CHUNK)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fill, starts))
    else:
        for start in starts:
            fill(start)
    logger.debug(f"Assembled {op.form.value} Jacobi matrix of size {size}")
    return JacobiOperator(
        map_state, field, op.form, op.potential, op.transport, matrix
    )
