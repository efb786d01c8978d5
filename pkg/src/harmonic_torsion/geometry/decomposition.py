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

"""Orthogonal splitting of metric torsion into its three Cartan classes."""

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from harmonic_torsion.geometry.torsion import (
    TorsionCoeffs,
    alternating_part,
    vectorial_lowered,
)
from harmonic_torsion.utils.errors import ConditioningError, TorsionValidationError


SKEW_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class TorsionDecomposition:
    """Vectorial, totally antisymmetric and Cartan-type parts at one point."""

    vectorial_part: TorsionCoeffs
    vector_V: np.ndarray
    antisymmetric_part: TorsionCoeffs
    cartan_part: TorsionCoeffs

    def parts(self) -> dict[str, TorsionCoeffs]:
        return {
            "vectorial": self.vectorial_part,
            "antisymmetric": self.antisymmetric_part,
            "cartan": self.cartan_part,
        }

    def reconstruction_residual(self, A: TorsionCoeffs) -> float:
        total = sum(p.lowered for p in self.parts().values())
        return float(np.max(np.abs(total - A.lowered)))

    def orthogonality_residuals(self, h: np.ndarray) -> dict[str, float]:
        names = list(self.parts())
        lowered = [p.lowered for p in self.parts().values()]
        return {
            f"{names[i]}-{names[j]}": abs(inner_product(lowered[i], lowered[j], h))
            for i in range(3)
            for j in range(i + 1, 3)
        }

    def norms(self, h: np.ndarray) -> dict[str, float]:
        return {
            name: float(np.sqrt(max(inner_product(p.lowered, p.lowered, h), 0.0)))
            for name, p in self.parts().items()
        }


def inner_product(first: np.ndarray, second: np.ndarray, h: np.ndarray) -> float:
    """Metric inner product of two lowered 3-tensors at a point."""
    h_inv = np.linalg.inv(h)
    return float(
        np.einsum("abc,def,ad,be,cf->", first, second, h_inv, h_inv, h_inv)
    )


def orthonormal_frame(h: np.ndarray) -> np.ndarray:
    """Columns form an h-orthonormal frame, from the Cholesky factor of h."""
    try:
        factor = linalg.cholesky(h, lower=True)
    except linalg.LinAlgError as e:
        raise ConditioningError(f"metric not positive definite: {e}")
    return linalg.solve_triangular(factor, np.eye(h.shape[0]), lower=True).T


def cartan_decompose(A: TorsionCoeffs, h: np.ndarray) -> TorsionDecomposition:
    """Splits skew-adjoint torsion at a point into its irreducible parts.

    The vectorial part is built from ``V = c12(A)^# / (n - 1)``, the trace
    taken over an h-orthonormal frame. The antisymmetric part is the cyclic
    mean of ``A`` and the Cartan part is what remains.

    Args:
        A: Coefficients at a single point, ``lowered`` of shape ``(n, n, n)``.
        h: Metric at the same point.

    Returns:
        TorsionDecomposition with all three parts and the recovered V.

    Raises:
        ValueError: If ``n < 2`` or shapes disagree.
        TorsionValidationError: If ``A`` is not skew-adjoint.
    """
    lowered = np.asarray(A.lowered, dtype=float)
    h = np.asarray(h, dtype=float)
    n = h.shape[0]
    if n < 2 or lowered.shape != (n, n, n):
        raise ValueError(
            f"Expected n >= 2 and coefficients of shape {(n, n, n)}, "
            f"got {lowered.shape}"
        )
    violation = float(np.max(np.abs(lowered + np.swapaxes(lowered, -1, -2))))
    if violation > SKEW_TOLERANCE * max(1.0, float(np.max(np.abs(lowered)))):
        raise TorsionValidationError(
            f"Torsion is not skew-adjoint, max violation {violation:.3e}",
            max_violation=violation,
        )

    frame = orthonormal_frame(h)
    trace = np.einsum("bi,ci,bcd->d", frame, frame, lowered)
    v_lower = trace / (n - 1)
    vector_V = frame @ (frame.T @ v_lower)

    vectorial = vectorial_lowered(v_lower, h)
    antisymmetric = alternating_part(lowered)
    cartan = lowered - vectorial - antisymmetric
    return TorsionDecomposition(
        vectorial_part=TorsionCoeffs.from_lowered(vectorial, h),
        vector_V=vector_V,
        antisymmetric_part=TorsionCoeffs.from_lowered(antisymmetric, h),
        cartan_part=TorsionCoeffs.from_lowered(cartan, h),
    )


def cartan_class_residuals(part: TorsionCoeffs, h: np.ndarray) -> dict[str, float]:
    """Trace and cyclic-sum norms of a tensor, both zero for Cartan-type parts."""
    frame = orthonormal_frame(h)
    trace = np.einsum("bi,ci,bcd->d", frame, frame, part.lowered)
    cyclic = 3.0 * alternating_part(part.lowered)
    return {
        "c12": float(np.max(np.abs(trace))),
        "cyclic_sum": float(np.max(np.abs(cyclic))),
    }
