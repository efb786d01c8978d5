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

"""Exception types raised by the harmonic_torsion modules.

Each class derives from the closest built-in exception so callers can catch
either the specific type or the generic one.
"""

import numpy as np


class ChartDomainError(ValueError):
    """A point or grid node lies outside the admissible part of a chart."""

    def __init__(self, message: str, point=None, last_state=None):
        super().__init__(message)
        self.point = None if point is None else np.asarray(point, dtype=float)
        self.last_state = last_state


class ConditioningError(ArithmeticError):
    """The metric is not symmetric positive definite at a queried point."""


class TorsionValidationError(ValueError):
    """Input violates a structural constraint (skew-adjointness, unit norm)."""

    def __init__(self, message: str, max_violation: float = float("nan")):
        super().__init__(message)
        self.max_violation = float(max_violation)


class DivergenceError(ArithmeticError):
    """A state became non-finite during an iteration."""

    def __init__(self, message: str, step_index: int):
        super().__init__(message)
        self.step_index = int(step_index)


class SingularJacobianError(ArithmeticError):
    """The Newton system is numerically singular and inconsistent."""

    def __init__(self, message: str, smallest_singular_value: float):
        super().__init__(message)
        self.smallest_singular_value = float(smallest_singular_value)


class EigenIterationError(ArithmeticError):
    """Shifted inverse iteration did not reach its residual tolerance."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = float(residual)


class OperatorSizeError(ValueError):
    """Dense operator assembly would exceed the size cap."""


class ConfigError(ValueError):
    """Malformed problem configuration.

    Args:
        key_path: Dotted path of the offending key, e.g. ``torsion.V``.
        reason: Human readable description.
    """

    def __init__(self, key_path: str, reason: str):
        super().__init__(f"{key_path}: {reason}")
        self.key_path = key_path
        self.reason = reason


NUMERICAL_ERRORS = (
    ChartDomainError,
    ConditioningError,
    TorsionValidationError,
    DivergenceError,
    SingularJacobianError,
    EigenIterationError,
    OperatorSizeError,
)
