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

"""Eigenvalues of assembled Jacobi operators closest to zero."""

import logging

import numpy as np
from scipy import linalg

from harmonic_torsion.stability.jacobi import JacobiOperator
from harmonic_torsion.utils.errors import EigenIterationError
from harmonic_torsion.utils.helpers import make_rng


logger = logging.getLogger(__name__)

SPECTRUM_TOLERANCE = 1e-10
MAX_SWEEPS = 500
SHIFT_SCALE = 1e-8
MIN_GUARD_VECTORS = 8


def _ordering(value: complex) -> tuple[float, float, float]:
    return abs(value), value.real, value.imag


def _sorted(values) -> list[complex]:
    return sorted((complex(v) for v in values), key=_ordering)


def spectrum(
    op: JacobiOperator,
    k: int,
    seed: int = 0,
    tol: float = SPECTRUM_TOLERANCE,
    max_sweeps: int = MAX_SWEEPS,
) -> list[complex]:
    """The ``k`` eigenvalues of smallest modulus.

    Uses block inverse iteration with a small negative shift and
    Rayleigh-Ritz extraction on the iterated subspace. Eigenvalues are
    ordered by modulus, then real part, then imaginary part. When the
    subspace would span the whole space the dense eigenvalues are returned.

    Args:
        op: Assembled Jacobi operator.
        k: Number of eigenvalues.
        seed: Seed of the start block.
        tol: Residual tolerance relative to the largest matrix entry.
        max_sweeps: Iteration cap.

    Raises:
        ValueError: If the operator is not assembled or ``k`` is out of range.
        EigenIterationError: If the Ritz pairs do not converge.
    """
    if op.matrix is None:
        raise ValueError("Jacobi operator must be assembled first")
    matrix = op.matrix
    size = matrix.shape[0]
    if not 0 <= k <= size:
        raise ValueError(f"k must lie in [0, {size}], got {k}")
    if k == 0:
        return []
    block = k + max(k, MIN_GUARD_VECTORS)
    if block >= size:
        return _sorted(linalg.eigvals(matrix))[:k]

    scale = max(float(np.max(np.abs(matrix))), np.finfo(float).tiny)
    shift = -SHIFT_SCALE * scale
    identity = np.eye(size)
    factor = linalg.lu_factor(matrix - shift * identity, check_finite=True)

    basis, _ = linalg.qr(make_rng(seed).standard_normal((size, block)), mode="economic")
    residual = np.inf
    for sweep in range(1, max_sweeps + 1):
        basis, _ = linalg.qr(linalg.lu_solve(factor, basis), mode="economic")
        projected = basis.T @ matrix @ basis
        ritz_values, ritz_vectors = linalg.eig(projected)
        ranked = sorted(range(block), key=lambda j: _ordering(complex(ritz_values[j])))
        order = ranked[:k]
        vectors = basis @ ritz_vectors[:, order]
        values = ritz_values[order]
        residuals = np.linalg.norm(matrix @ vectors - vectors * values, axis=0)
        residual = float(np.max(residuals / np.linalg.norm(vectors, axis=0))) / scale
        if residual < tol:
            logger.debug(
                f"Spectrum converged after {sweep} sweeps (residual {residual:.3e})"
            )
            return _sorted(values)
    raise EigenIterationError(
        f"Eigenvalue iteration did not converge in {max_sweeps} sweeps",
        residual=residual,
    )
