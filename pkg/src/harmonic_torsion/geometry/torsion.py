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

"""Torsion endomorphisms of metric connections.

A metric connection is written as the Levi-Civita connection plus an
endomorphism ``A``. Coefficients are stored lowered,
``lowered[..., b, c, d] = <A(d_b, d_c), d_d>``, and raised,
``raised[..., a, b, c] = h^{ad} lowered[..., b, c, d]``, so that
``A(X, Y)^a = raised[a, b, c] X^b Y^c``. Skew-adjointness reads
``lowered[..., b, c, d] == -lowered[..., b, d, c]``.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from harmonic_torsion.geometry.chart import Chart


class TorsionKind(str, Enum):
    ZERO = "zero"
    VECTORIAL = "vectorial"
    ANTISYMMETRIC = "antisymmetric"
    CARTAN = "cartan"
    GENERAL = "general"


@dataclass(frozen=True, eq=False)
class TorsionCoeffs:
    """Lowered and raised torsion coefficients at one or more points."""

    lowered: np.ndarray
    raised: np.ndarray

    @classmethod
    def from_lowered(cls, lowered: np.ndarray, h: np.ndarray) -> "TorsionCoeffs":
        lowered = np.asarray(lowered, dtype=float)
        raised = np.einsum("...ad,...bcd->...abc", np.linalg.inv(h), lowered)
        return cls(lowered=lowered, raised=raised)

    @property
    def dim_n(self) -> int:
        return self.lowered.shape[-1]

    def apply(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        """Evaluates ``A(X, Y)`` as a vector."""
        return np.einsum("...abc,...b,...c->...a", self.raised, X, Y)

    def skew_violation(self) -> float:
        return float(np.max(np.abs(self.lowered + np.swapaxes(self.lowered, -1, -2)),
                            initial=0.0))


def skew_part(raw: np.ndarray) -> np.ndarray:
    """Projects arbitrary lowered coefficients onto skew-adjoint ones."""
    raw = np.asarray(raw, dtype=float)
    return 0.5 * (raw - np.swapaxes(raw, -1, -2))


def alternating_part(lowered: np.ndarray) -> np.ndarray:
    """Cyclic mean (1/3)(A_XYZ + A_YZX + A_ZXY) of skew-adjoint coefficients."""
    return (
        lowered
        + np.einsum("...cdb->...bcd", lowered)
        + np.einsum("...dbc->...bcd", lowered)
    ) / 3.0


def full_antisymmetrization(raw: np.ndarray) -> np.ndarray:
    """Totally antisymmetric part of an arbitrary 3-index array."""
    raw = np.asarray(raw, dtype=float)
    return (
        raw
        - np.einsum("...bdc->...bcd", raw)
        + np.einsum("...cdb->...bcd", raw)
        - np.einsum("...cbd->...bcd", raw)
        + np.einsum("...dbc->...bcd", raw)
        - np.einsum("...dcb->...bcd", raw)
    ) / 6.0


def vectorial_lowered(v_lower: np.ndarray, h: np.ndarray) -> np.ndarray:
    """``A_XYZ = <X,Y><V,Z> - <X,Z><V,Y>`` from the covector of V."""
    return (
        h[..., :, :, None] * v_lower[..., None, None, :]
        - h[..., :, None, :] * v_lower[..., None, :, None]
    )


def trace_c12(lowered: np.ndarray, h_inv: np.ndarray) -> np.ndarray:
    """Covector ``Z -> sum_i A(e_i, e_i, Z)`` over an orthonormal frame."""
    return np.einsum("...bc,...bcd->...d", h_inv, lowered)


def cartan_remainder(lowered: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Removes vectorial and alternating parts from skew-adjoint coefficients."""
    n = lowered.shape[-1]
    v_lower = trace_c12(lowered, np.linalg.inv(h)) / (n - 1)
    return lowered - vectorial_lowered(v_lower, h) - alternating_part(lowered)


def _constant(array: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    array = np.asarray(array, dtype=float)

    def fn(y):
        y = np.asarray(y, dtype=float)
        return np.broadcast_to(array, y.shape[:-1] + array.shape).copy()

    return fn


@dataclass(frozen=True, eq=False)
class TorsionField:
    """Position-dependent torsion endomorphism on a chart.

    Use the class constructors rather than building instances directly; each
    constructor enforces the structure of its kind, so every evaluated
    tensor is skew-adjoint by construction.

    Attributes:
        kind: Cartan class of the field.
        builder: Batched closure ``(y, h) -> lowered`` coefficients.
        vector: For vectorial fields, the closure ``y -> V^a``.
        description: Free text used in reports.
    """

    kind: TorsionKind
    builder: Callable[[np.ndarray, np.ndarray], np.ndarray]
    vector: Callable[[np.ndarray], np.ndarray] | None = None
    description: str = ""

    def lowered(self, y: np.ndarray, h: np.ndarray) -> np.ndarray:
        return np.asarray(self.builder(np.asarray(y, dtype=float), h), dtype=float)

    @property
    def is_zero(self) -> bool:
        return self.kind is TorsionKind.ZERO

    def scaled(self, factor: float) -> "TorsionField":
        """Field with every coefficient multiplied by ``factor``."""
        vector = None
        if self.vector is not None:
            base = self.vector
            vector = lambda y: factor * base(y)  # noqa: E731
        return TorsionField(
            kind=self.kind,
            builder=lambda y, h: factor * self.builder(y, h),
            vector=vector,
            description=f"{factor:g}*({self.description})",
        )

    @classmethod
    def zero(cls) -> "TorsionField":
        return cls(
            kind=TorsionKind.ZERO,
            builder=lambda y, h: np.zeros(h.shape + (h.shape[-1],)),
            description="zero",
        )

    @classmethod
    def vectorial(
        cls,
        vector: Callable[[np.ndarray], np.ndarray],
        description: str = "vectorial",
    ) -> "TorsionField":
        """Vectorial torsion from a contravariant vector field ``y -> V^a``."""

        def builder(y, h):
            v_lower = np.einsum("...ab,...b->...a", h, vector(y))
            return vectorial_lowered(v_lower, h)

        return cls(TorsionKind.VECTORIAL, builder, vector, description)

    @classmethod
    def constant_vectorial(cls, components) -> "TorsionField":
        components = np.asarray(components, dtype=float)
        return cls.vectorial(
            _constant(components), description=f"vectorial V={components.tolist()}"
        )

    @classmethod
    def antisymmetric(
        cls,
        form: Callable[[np.ndarray], np.ndarray],
        description: str = "antisymmetric",
    ) -> "TorsionField":
        """Totally antisymmetric torsion; ``form`` is antisymmetrized."""
        return cls(
            TorsionKind.ANTISYMMETRIC,
            lambda y, h: full_antisymmetrization(form(y)),
            description=description,
        )

    @classmethod
    def cartan(
        cls,
        coefficients: Callable[[np.ndarray], np.ndarray],
        description: str = "cartan",
    ) -> "TorsionField":
        """Cartan-type torsion: the remainder of a skew-adjoint tensor."""
        return cls(
            TorsionKind.CARTAN,
            lambda y, h: cartan_remainder(skew_part(coefficients(y)), h),
            description=description,
        )

    @classmethod
    def general(
        cls,
        coefficients: Callable[[np.ndarray], np.ndarray],
        description: str = "general",
    ) -> "TorsionField":
        """Arbitrary metric torsion; ``coefficients`` is skew-symmetrized."""
        return cls(
            TorsionKind.GENERAL,
            lambda y, h: skew_part(coefficients(y)),
            description=description,
        )

    @classmethod
    def constant(cls, kind: TorsionKind, array: np.ndarray) -> "TorsionField":
        """Constant-coefficient field of a non-vectorial kind."""
        constructors = {
            TorsionKind.ANTISYMMETRIC: cls.antisymmetric,
            TorsionKind.CARTAN: cls.cartan,
            TorsionKind.GENERAL: cls.general,
        }
        if kind not in constructors:
            raise ValueError(f"No constant constructor for torsion kind {kind.value}")
        description = f"constant {kind.value}"
        return constructors[kind](_constant(array), description=description)


def torsion_eval(field: TorsionField, chart: Chart, y: np.ndarray) -> TorsionCoeffs:
    """Evaluates a torsion field on a chart.

    Args:
        field: Torsion field.
        chart: Target chart.
        y: Point(s) inside the chart.

    Returns:
        Lowered and raised coefficients.

    Raises:
        ChartDomainError: If a point lies outside the chart.
    """
    h = chart.metric_at(y)
    return TorsionCoeffs.from_lowered(field.lowered(y, h), h)


def torsion_tensor_T(A: TorsionCoeffs) -> np.ndarray:
    """Torsion tensor ``T(X, Y) = A(X, Y) - A(Y, X)`` as ``T[..., a, b, c]``."""
    return A.raised - np.swapaxes(A.raised, -1, -2)


def skew_adjointness_residual(
    A: TorsionCoeffs, h: np.ndarray, X: np.ndarray, Y: np.ndarray, Z: np.ndarray
) -> float:
    """``|<A(X,Y),Z> + <Y,A(X,Z)>|`` for vectors at one point."""
    first = np.einsum("a,ab,b->", A.apply(X, Y), h, Z)
    second = np.einsum("a,ab,b->", Y, h, A.apply(X, Z))
    return float(abs(first + second))


def random_skew_adjoint(
    rng: np.random.Generator, n: int, scale: float = 1.0
) -> np.ndarray:
    """Random constant lowered coefficients of a general metric torsion."""
    return scale * skew_part(rng.standard_normal((n, n, n)))


def random_three_form(
    rng: np.random.Generator, n: int, scale: float = 1.0
) -> np.ndarray:
    return scale * full_antisymmetrization(rng.standard_normal((n, n, n)))
