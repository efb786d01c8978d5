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

"""Iterative solvers for the harmonic map equation with torsion.

Two methods are available:

- ``fixed_point``: ``phi <- phi + lambda (-Delta)^{-1} (tau^tor - mean)``,
  a damped preconditioned gradient-type iteration. The periodic Laplacian
  is inverted by conjugate gradients on mean-free data, so the mean of
  each coordinate never changes.
- ``newton``: least-squares Newton steps with the assembled Levi-Civita
  Jacobi operator and a backtracking line search on ``||tau^tor||_inf``.

Both stop when the sup norm of the torsion tension falls below ``tol`` and
report why they stopped; leaving the chart or diverging is a normal
termination reason, not an exception.
"""

import logging
from dataclasses import asdict, dataclass, field as dataclass_field
from enum import Enum

import numpy as np
from scipy import linalg
from scipy.sparse.linalg import cg

from harmonic_torsion.field.diagnostics import dirichlet_energy
from harmonic_torsion.field.grid import MapState, laplacian_matrix
from harmonic_torsion.field.tension import tension_tor
from harmonic_torsion.geometry.torsion import TorsionField
from harmonic_torsion.stability.jacobi import JacobiForm, assemble
from harmonic_torsion.utils.errors import SingularJacobianError
from harmonic_torsion.utils.helpers import sup_norm


logger = logging.getLogger(__name__)


class SolverMethod(str, Enum):
    FIXED_POINT = "fixed_point"
    NEWTON = "newton"


class Termination(str, Enum):
    CONVERGED = "converged"
    MAX_ITERS = "max_iters"
    DIVERGED = "diverged"
    LEFT_CHART = "left_chart"


@dataclass(frozen=True)
class SolverConfig:
    """Solver parameters; the defaults are written into every report."""

    method: SolverMethod = SolverMethod.FIXED_POINT
    tol: float = 1e-8
    max_iters: int = 500
    damping: float = 1.0
    divergence_factor: float = 10.0
    cg_rtol: float = 1e-12
    line_search_steps: int = 12
    singular_rcond: float = 1e-10
    consistency_tol: float = 1e-8
    threads: int = 1

    def __post_init__(self):
        object.__setattr__(self, "method", SolverMethod(self.method))
        if not 0.0 < self.damping <= 1.0:
            raise ValueError(f"damping must lie in (0, 1], got {self.damping}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if not isinstance(self.max_iters, (int, np.integer)) or self.max_iters < 0:
            raise ValueError(
                f"max_iters must be a non-negative integer, got {self.max_iters}"
            )
        if self.threads < 1:
            raise ValueError(f"threads must be at least 1, got {self.threads}")

    def to_dict(self) -> dict:
        data = asdict(self)
        data["method"] = self.method.value
        return data


@dataclass
class ConvergenceReport:
    """Outcome of a solver run.

    Attributes:
        method: Solver used.
        iterations: Number of accepted iterations.
        residual_history: Sup norm of the torsion tension after each
            accepted iteration.
        terminated: Why the solver stopped.
        final_energy: Dirichlet energy of the returned map.
        initial_residual: Sup norm of the torsion tension of the start map.
    """

    method: SolverMethod
    iterations: int
    residual_history: list[float] = dataclass_field(default_factory=list)
    terminated: Termination = Termination.MAX_ITERS
    final_energy: float = float("nan")
    initial_residual: float = float("nan")

    @property
    def final_residual(self) -> float:
        if self.residual_history:
            return self.residual_history[-1]
        return self.initial_residual

    def to_dict(self) -> dict:
        return {
            "method": self.method.value,
            "iterations": self.iterations,
            "residual_history": [float(r) for r in self.residual_history],
            "terminated": self.terminated.value,
            "final_energy": float(self.final_energy),
            "initial_residual": float(self.initial_residual),
            "final_residual": float(self.final_residual),
        }


def _finish(method, history, terminated, phi, initial_residual):
    report = ConvergenceReport(
        method=method,
        iterations=len(history),
        residual_history=history,
        terminated=terminated,
        final_energy=dirichlet_energy(phi),
        initial_residual=initial_residual,
    )
    logger.info(
        f"{method.value} solver stopped ({terminated.value}) after "
        f"{report.iterations} iterations, residual {report.final_residual:.3e}"
    )
    return phi, report


def _inside(phi: MapState, values: np.ndarray) -> bool:
    """Keeps iterates a metric stencil away from the chart boundary."""
    chart = phi.chart
    return bool(np.all(chart.contains(values, chart.stencil_clearance(values))))


def _inverse_laplacian(operator, residual: np.ndarray, rtol: float) -> np.ndarray:
    """Solves ``-Delta delta = residual - mean`` per coordinate, mean-free."""
    n = residual.shape[-1]
    flat = residual.reshape(-1, n)
    step = np.zeros_like(flat)
    for a in range(n):
        rhs = flat[:, a] - flat[:, a].mean()
        if not np.any(rhs):
            continue
        solution, info = cg(operator, rhs, rtol=rtol, atol=0.0, maxiter=10 * rhs.size)
        if info > 0:
            logger.warning(f"CG did not reach rtol {rtol:.1e} in {info} iterations")
        step[:, a] = solution - solution.mean()
    return step.reshape(residual.shape)


def solve_fixed_point(
    initial: MapState, field: TorsionField, config: SolverConfig | None = None
) -> tuple[MapState, ConvergenceReport]:
    """Damped preconditioned fixed-point iteration.

    Args:
        initial: Start map.
        field: Torsion field.
        config: Solver parameters; ``damping`` is the step factor.

    Returns:
        The last accepted map and the convergence report.
    """
    config = config or SolverConfig()
    method = SolverMethod.FIXED_POINT
    operator = -laplacian_matrix(initial.domain)
    phi = initial
    residual = tension_tor(phi, field)
    initial_residual = sup_norm(residual)
    history: list[float] = []
    if initial_residual < config.tol:
        return _finish(method, history, Termination.CONVERGED, phi, initial_residual)

    terminated = Termination.MAX_ITERS
    for iteration in range(1, config.max_iters + 1):
        step = _inverse_laplacian(operator, residual, config.cg_rtol)
        candidate = phi.values + config.damping * step
        if not _inside(phi, candidate):
            terminated = Termination.LEFT_CHART
            break
        phi = phi.with_values(candidate)
        residual = tension_tor(phi, field)
        value = sup_norm(residual)
        history.append(value)
        logger.debug(f"fixed_point iteration {iteration} residual {value:.6e}")
        limit = config.divergence_factor * initial_residual
        if not np.isfinite(value) or value > limit:
            terminated = Termination.DIVERGED
            break
        if value < config.tol:
            terminated = Termination.CONVERGED
            break
    return _finish(method, history, terminated, phi, initial_residual)


def solve_newton(
    initial: MapState, field: TorsionField, config: SolverConfig | None = None
) -> tuple[MapState, ConvergenceReport]:
    """Newton iteration with least-squares steps and backtracking.

    Raises:
        SingularJacobianError: If the Jacobi matrix is numerically singular
            and the Newton system has no solution.
        OperatorSizeError: If the grid is too large for dense assembly.
    """
    config = config or SolverConfig(method=SolverMethod.NEWTON)
    method = SolverMethod.NEWTON
    phi = initial
    residual = tension_tor(phi, field)
    current = sup_norm(residual)
    initial_residual = current
    history: list[float] = []
    if current < config.tol:
        return _finish(method, history, Termination.CONVERGED, phi, initial_residual)

    terminated = Termination.MAX_ITERS
    for iteration in range(1, config.max_iters + 1):
        op = assemble(phi, field, JacobiForm.LEVI_CIVITA, threads=config.threads)
        rhs = -residual.ravel()
        direction, _, rank, singular_values = linalg.lstsq(
            op.matrix, rhs, cond=config.singular_rcond
        )
        if rank < op.size:
            mismatch = float(np.linalg.norm(op.matrix @ direction - rhs))
            if mismatch > config.consistency_tol * max(1.0, float(np.linalg.norm(rhs))):
                raise SingularJacobianError(
                    f"Singular Jacobi system at iteration {iteration} "
                    f"(rank {rank} of {op.size}, mismatch {mismatch:.3e})",
                    smallest_singular_value=float(singular_values[-1]),
                )
        direction = direction.reshape(phi.values.shape)

        accepted = None
        left_chart = True
        alpha = 1.0
        for _ in range(config.line_search_steps):
            candidate = phi.values + alpha * direction
            if _inside(phi, candidate):
                left_chart = False
                trial = phi.with_values(candidate)
                trial_residual = tension_tor(trial, field)
                if sup_norm(trial_residual) < current:
                    accepted = (trial, trial_residual)
                    break
            alpha *= 0.5
        if accepted is None:
            terminated = Termination.LEFT_CHART if left_chart else Termination.DIVERGED
            break

        phi, residual = accepted
        current = sup_norm(residual)
        history.append(current)
        logger.debug(
            f"newton iteration {iteration} residual {current:.6e} step {alpha:.3g}"
        )
        if current < config.tol:
            terminated = Termination.CONVERGED
            break
    return _finish(method, history, terminated, phi, initial_residual)


def solve(
    initial: MapState, field: TorsionField, config: SolverConfig | None = None
) -> tuple[MapState, ConvergenceReport]:
    """Dispatches to the configured method."""
    config = config or SolverConfig()
    if config.method is SolverMethod.NEWTON:
        return solve_newton(initial, field, config)
    return solve_fixed_point(initial, field, config)
