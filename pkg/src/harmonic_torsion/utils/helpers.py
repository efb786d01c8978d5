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

"""Numeric helper functions shared across modules."""

from typing import Callable

import numpy as np


def relative_steps(y: np.ndarray, base_step: float) -> np.ndarray:
    """Returns per-point finite-difference steps ``base_step * max(1, |y|)``.

    Args:
        y: Points with coordinates on the last axis.
        base_step: Step for points of norm at most one.

    Returns:
        Array of steps with the leading shape of ``y``.
    """
    y = np.asarray(y, dtype=float)
    return base_step * np.maximum(1.0, np.linalg.norm(y, axis=-1))


def partial_derivatives(
    fn: Callable[[np.ndarray], np.ndarray],
    y: np.ndarray,
    base_step: float,
    order: int = 2,
) -> np.ndarray:
    """Central-difference partial derivatives of a batched function.

    ``fn`` maps points of shape ``(..., n)`` to arrays of shape ``(..., *S)``.
    The result has shape ``(..., *S, n)``; the last axis indexes the
    coordinate direction of differentiation.

    Args:
        fn: Batched function of the chart coordinates.
        y: Evaluation points.
        base_step: Relative step, see :func:`relative_steps`.
        order: 2 for the three-point stencil, 4 for the five-point stencil.

    Returns:
        Array of partial derivatives.

    Raises:
        ValueError: If ``order`` is not 2 or 4.
    """
    if order not in (2, 4):
        raise ValueError(f"Unsupported difference order: {order}")
    y = np.asarray(y, dtype=float)
    h = relative_steps(y, base_step)
    n = y.shape[-1]
    columns = []
    for k in range(n):
        unit = np.zeros(n)
        unit[k] = 1.0
        shift = h[..., None] * unit
        if order == 2:
            diff = fn(y + shift) - fn(y - shift)
            denom = 2.0 * h
        else:
            diff = 8.0 * (fn(y + shift) - fn(y - shift)) - (
                fn(y + 2.0 * shift) - fn(y - 2.0 * shift)
            )
            denom = 12.0 * h
        extra = diff.ndim - h.ndim
        columns.append(diff / denom.reshape(h.shape + (1,) * extra))
    return np.stack(columns, axis=-1)


def convergence_order(coarse: float, fine: float, ratio: float = 2.0) -> float:
    """Observed order of a quantity that shrinks like ``step**p``.

    Args:
        coarse: Error at the larger step.
        fine: Error at the step divided by ``ratio``.
        ratio: Refinement ratio.

    Returns:
        The order estimate, or NaN when either error is zero or non-finite.
    """
    if not (np.isfinite(coarse) and np.isfinite(fine)) or coarse <= 0 or fine <= 0:
        return float("nan")
    return float(np.log(coarse / fine) / np.log(ratio))


def make_rng(seed: int) -> np.random.Generator:
    """Returns a counter-based generator fully determined by ``seed``."""
    if not isinstance(seed, (int, np.integer)) or seed < 0:
        raise TypeError("seed must be a non-negative integer")
    return np.random.Generator(np.random.Philox(int(seed)))


def sup_norm(values: np.ndarray) -> float:
    """Largest absolute entry, 0 for empty input."""
    values = np.asarray(values)
    if values.size == 0:
        return 0.0
    return float(np.max(np.abs(values)))
