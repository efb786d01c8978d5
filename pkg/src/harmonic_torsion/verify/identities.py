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

"""Numerical checks of geometric identities on discrete maps.

Each check evaluates both sides of an identity on a single grid and returns
an :class:`IdentityReport`. Identities that hold exactly in the
discretization pass on one grid; the others need :func:`refine`, which
repeats a check on a family of grids and measures the convergence order.
"""

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field as dataclass_field
from enum import Enum

import numpy as np

from harmonic_torsion.field.grid import (
    MapState,
    central_gradient,
    compact_laplacian,
    energy_density_nodal,
    map_hessian,
)
from harmonic_torsion.field.tension import (
    MapDerivatives,
    map_derivatives,
    tension,
    tension_tor,
    torsion_trace,
)
from harmonic_torsion.geometry.chart import ConformalFactor, conformally_rescaled
from harmonic_torsion.geometry.curvature import levi_civita_riemann, torsion_nabla
from harmonic_torsion.geometry.torsion import TorsionField, torsion_eval
from harmonic_torsion.utils.helpers import convergence_order, sup_norm


logger = logging.getLogger(__name__)

EXACT_TOLERANCE = 1e-12
MIN_ORDER = 1.5
MAX_ORDER = 2.5
SOLUTION_THRESHOLD = 1e-2


class Verdict(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    INCONCLUSIVE = "inconclusive"


@dataclass
class IdentityReport:
    """Result of one identity check.

    ``max_residual`` is relative to ``max(1, size of the compared terms)``.
    ``details`` holds check-specific values such as per-grid residuals or
    the tension norm of a gated input.
    """

    identity_name: str
    max_residual: float
    grid_spacings: list[float]
    convergence_order: float = float("nan")
    verdict: Verdict = Verdict.INCONCLUSIVE
    tolerance: float = EXACT_TOLERANCE
    details: dict = dataclass_field(default_factory=dict)

    def to_dict(self) -> dict:
        order = self.convergence_order
        return {
            "identity_name": self.identity_name,
            "max_residual": float(self.max_residual),
            "grid_spacings": [float(h) for h in self.grid_spacings],
            "convergence_order": None if math.isnan(order) else float(order),
            "verdict": self.verdict.value,
            "tolerance": float(self.tolerance),
            "details": self.details,
        }


def _relative(difference: np.ndarray, *terms: np.ndarray) -> float:
    scale = max([1.0] + [sup_norm(term) for term in terms])
    return sup_norm(difference) / scale


def _single_grid(name: str, map_state: MapState, residual: float, **details):
    """Report for a check that holds only asymptotically."""
    exact = residual <= EXACT_TOLERANCE
    if not exact:
        details.setdefault("reason", "single grid; refine to measure the order")
    return IdentityReport(
        identity_name=name,
        max_residual=residual,
        grid_spacings=[max(map_state.domain.spacings)],
        verdict=Verdict.PASS if exact else Verdict.INCONCLUSIVE,
        details=details,
    )


def _exact(name: str, map_state: MapState, residual: float, **details):
    """Report for a check that holds exactly in the discretization."""
    return IdentityReport(
        identity_name=name,
        max_residual=residual,
        grid_spacings=[max(map_state.domain.spacings)],
        verdict=Verdict.PASS if residual <= EXACT_TOLERANCE else Verdict.FAIL,
        details={"exact": True, **details},
    )


@dataclass(frozen=True, eq=False)
class _BochnerTerms:
    lhs: np.ndarray
    hessian_norm: np.ndarray
    curvature: np.ndarray
    gradient: np.ndarray
    covariant_hessian: np.ndarray
    pair: np.ndarray
    metric: np.ndarray
    derivs: MapDerivatives


def _bochner_terms(map_state: MapState) -> _BochnerTerms:
    derivs = map_derivatives(map_state)
    w = derivs.weight
    P = derivs.gradient
    h = map_state.chart.metric(map_state.values)
    hessian = map_hessian(map_state) + np.einsum(
        "...abc,...ib,...jc->...ija", derivs.gamma, P, P
    )
    pair = np.einsum("...ie,...ib->...eb", P, P)
    riemann = levi_civita_riemann(map_state.chart, map_state.values)
    riemann = np.einsum("...ae,...abcd->...ebcd", h, riemann)
    density = energy_density_nodal(map_state)
    return _BochnerTerms(
        lhs=0.5 * compact_laplacian(density, map_state.domain, trailing=0),
        hessian_norm=w**2
        * np.einsum("...ija,...ab,...ijb->...", hessian, h, hessian),
        curvature=w**2 * np.einsum("...ebcd,...ec,...bd->...", riemann, pair, pair),
        gradient=P,
        covariant_hessian=hessian,
        pair=pair,
        metric=h,
        derivs=derivs,
    )


def bochner_residual_lc(map_state: MapState) -> IdentityReport:
    """Residual of the Levi-Civita Bochner formula for ``|d phi|^2``.

    ``1/2 Delta |d phi|^2 = |nabla d phi|^2 - <R(d phi e_i, d phi e_j) d phi e_j,
    d phi e_i> + <nabla_{e_j} tau, d phi e_j>``; the domain is flat, so the
    Ricci term vanishes. Holds for every smooth map, to second order.
    """
    terms = _bochner_terms(map_state)
    derivs = terms.derivs
    tau = derivs.laplacian + derivs.quadratic(derivs.gamma)
    P = terms.gradient
    nabla_tau = central_gradient(tau, map_state.domain) + np.einsum(
        "...abc,...jb,...c->...ja", derivs.gamma, P, tau
    )
    tension_term = derivs.weight * np.einsum(
        "...ja,...ab,...jb->...", nabla_tau, terms.metric, P
    )
    rhs = terms.hessian_norm - terms.curvature + tension_term
    residual = _relative(
        terms.lhs - rhs, terms.lhs, terms.hessian_norm, terms.curvature, tension_term
    )
    return _single_grid("bochner_lc", map_state, residual)


def bochner_residual_tor(
    map_state: MapState, field: TorsionField, threshold: float = SOLUTION_THRESHOLD
) -> IdentityReport:
    """Residual of the Bochner formula for harmonic maps with torsion.

    ``1/2 Delta |d phi|^2 = |nabla d phi|^2 - <R(d phi e_i, d phi e_j) d phi e_j,
    d phi e_i> - <(nabla_{d phi e_j} A)(d phi, d phi), d phi e_j>
    - <A(d phi e_i, nabla_{e_j} d phi e_i), d phi e_j>``.

    The formula holds on solutions only. Inputs whose torsion tension
    exceeds ``threshold`` get an inconclusive verdict.
    """
    tension_norm = sup_norm(tension_tor(map_state, field))
    if tension_norm > threshold:
        return IdentityReport(
            identity_name="bochner_tor",
            max_residual=float("nan"),
            grid_spacings=[max(map_state.domain.spacings)],
            verdict=Verdict.INCONCLUSIVE,
            details={
                "tension_tor_norm": tension_norm,
                "reason": f"input is not a solution (|tau^tor| > {threshold:g})",
            },
        )
    terms = _bochner_terms(map_state)
    w = terms.derivs.weight
    P = terms.gradient
    lowered = torsion_eval(field, map_state.chart, map_state.values).lowered
    nabla = torsion_nabla(map_state.chart, field, map_state.values)
    nabla_term = w**2 * np.einsum(
        "...ad,...eabc,...bc,...ed->...", terms.metric, nabla, terms.pair, terms.pair
    )
    torsion_term = w**2 * np.einsum(
        "...bcd,...ib,...jic,...jd->...", lowered, P, terms.covariant_hessian, P
    )
    rhs = terms.hessian_norm - terms.curvature - nabla_term - torsion_term
    residual = _relative(
        terms.lhs - rhs,
        terms.lhs,
        terms.hessian_norm,
        terms.curvature,
        nabla_term,
        torsion_term,
    )
    return _single_grid(
        "bochner_tor", map_state, residual, tension_tor_norm=tension_norm
    )


def _second_covariant(coeffs, P, domain, weight):
    """``sum_i e^{-2u} nabla_i nabla_i d phi(e_j)`` for connection coefficients C."""
    inner = central_gradient(P, domain, trailing=2) + np.einsum(
        "...abc,...ib,...jc->...ija", coeffs, P, P
    )
    outer = np.einsum("...iija->...ja", central_gradient(inner, domain, trailing=3))
    outer = outer + np.einsum("...abc,...ib,...ijc->...ja", coeffs, P, inner)
    return weight * outer, inner


def laplacian_relation_check(
    map_state: MapState, field: TorsionField
) -> IdentityReport:
    """Compares both sides of the relation between the connection Laplacians.

    ``Delta^Tor xi = Delta^LC xi + (nabla_{d phi} A)(d phi, xi) + A(tau, xi)
    + 2 A(d phi, nabla^LC xi) + A(d phi, A(d phi, xi))`` for ``xi = d phi(e_j)``,
    with the left side composed from two torsion-connection derivatives.
    """
    derivs = map_derivatives(map_state)
    domain = map_state.domain
    w = derivs.weight
    P = derivs.gradient
    raised = torsion_eval(field, map_state.chart, map_state.values).raised
    nabla = torsion_nabla(map_state.chart, field, map_state.values)

    direct, _ = _second_covariant(derivs.gamma + raised, P, domain, w)
    levi_civita, inner = _second_covariant(derivs.gamma, P, domain, w)
    tau = derivs.laplacian + derivs.quadratic(derivs.gamma)
    cross = 2.0 * w * np.einsum("...abc,...ib,...ijc->...ja", raised, P, inner)
    derivative = w * np.einsum("...eabc,...ie,...ib,...jc->...ja", nabla, P, P, P)
    tension_term = np.einsum("...abc,...b,...jc->...ja", raised, tau, P)
    once = np.einsum("...abc,...ib,...jc->...ija", raised, P, P)
    twice = w * np.einsum("...abc,...ib,...ijc->...ja", raised, P, once)
    rhs = levi_civita + derivative + tension_term + cross + twice

    difference = direct - rhs
    residual = _relative(difference, direct, levi_civita, cross, derivative, twice)
    per_direction = [sup_norm(difference[..., j, :]) for j in range(2)]
    return _single_grid(
        "laplacian_relation", map_state, residual, per_direction=per_direction
    )


def conformal_domain_check(
    map_state: MapState, field: TorsionField, u: float
) -> IdentityReport:
    """Checks ``tau^tor`` for ``e^{2u} g`` against ``e^{-2u} tau^tor`` for ``g``.

    The domain is two-dimensional, so no ``d phi(grad u)`` term appears.
    The torsion trace is compared separately.
    """
    rescaled = map_state.with_domain(
        map_state.domain.with_conformal_factor(map_state.domain.conformal_u + u)
    )
    factor = math.exp(-2.0 * u)
    expected = factor * tension_tor(map_state, field)
    actual = tension_tor(rescaled, field)
    expected_trace = factor * torsion_trace(map_state, field)
    actual_trace = torsion_trace(rescaled, field)
    residual = _relative(actual - expected, expected)
    trace_residual = _relative(actual_trace - expected_trace, expected_trace)
    return _exact(
        "conformal_domain",
        map_state,
        max(residual, trace_residual),
        u=u,
        tension_residual=residual,
        torsion_trace_residual=trace_residual,
    )


def conformal_target_check(map_state: MapState, v: ConformalFactor) -> IdentityReport:
    """Tension for the target metric ``e^{2v} h`` against base-metric terms.

    ``tau~ = tau + 2 <d phi, grad v> d phi - |d phi|^2 grad v``. The report
    also compares the correction with the vectorial torsion trace for
    ``V = grad v``, which has the same shape up to a factor of two in the
    ``<d phi, V> d phi`` term.
    """
    chart = map_state.chart
    derivs = map_derivatives(map_state)
    w = derivs.weight
    P = derivs.gradient
    values = map_state.values
    rescaled = map_state.with_chart(conformally_rescaled(chart, v))

    covector = v.covector(values)
    grad_v = np.einsum("...ab,...b->...a", chart.inverse_metric(values), covector)
    density = energy_density_nodal(map_state)
    along = w * np.einsum("...ib,...b,...ia->...a", P, covector, P)
    correction = 2.0 * along - density[..., None] * grad_v

    base = tension(map_state)
    actual = tension(rescaled)
    residual = _relative(actual - base - correction, actual, base, correction)

    gradient_field = TorsionField.vectorial(
        lambda y: np.einsum(
            "...ab,...b->...a", chart.inverse_metric(y), v.covector(y)
        ),
        description="grad v",
    )
    trace = torsion_trace(map_state, gradient_field)
    shape_residual = _relative(-correction - (trace - along), correction, trace)
    return _exact(
        "conformal_target",
        map_state,
        max(residual, shape_residual),
        torsion_shape_residual=shape_residual,
    )


def refine(
    check: Callable[[MapState], IdentityReport],
    family: Callable[[int], MapState],
    sizes: Sequence[int],
    constant: float,
) -> IdentityReport:
    """Runs a single-grid check on refined grids and combines the reports.

    The verdict is pass when every grid is exact, or when the finest
    residual is at most ``constant * h^2`` and the order measured on the two
    finest grids lies in [1.5, 2.5]. Faster decay means the residual is not
    the second-order truncation error being tested. A gated (inconclusive)
    grid makes the combined report inconclusive.

    Raises:
        ValueError: If fewer than two sizes are given.
    """
    if len(sizes) < 2:
        raise ValueError("Refinement needs at least two grid sizes")
    reports = [check(family(size)) for size in sizes]
    name = reports[0].identity_name
    spacings = [report.grid_spacings[0] for report in reports]
    residuals = [report.max_residual for report in reports]
    details = {
        "sizes": [int(size) for size in sizes],
        "residuals": [float(r) for r in residuals],
        "constant": float(constant),
    }
    gated = [r for r in reports if r.details.get("tension_tor_norm") is not None]
    if gated:
        details["tension_tor_norms"] = [r.details["tension_tor_norm"] for r in gated]

    order = convergence_order(residuals[-2], residuals[-1], spacings[-2] / spacings[-1])
    finest = residuals[-1]
    tolerance = constant * spacings[-1] ** 2
    if any(math.isnan(r) for r in residuals):
        verdict = Verdict.INCONCLUSIVE
        details["reason"] = next(
            r.details["reason"] for r in reports if math.isnan(r.max_residual)
        )
    elif all(r <= EXACT_TOLERANCE for r in residuals):
        verdict = Verdict.PASS
        tolerance = EXACT_TOLERANCE
    elif finest <= tolerance and MIN_ORDER <= order <= MAX_ORDER:
        verdict = Verdict.PASS
    else:
        verdict = Verdict.FAIL
    logger.debug(f"{name} residuals {residuals} order {order:.3f}")
    return IdentityReport(
        identity_name=name,
        max_residual=finest,
        grid_spacings=spacings,
        convergence_order=order,
        verdict=verdict,
        tolerance=tolerance,
        details=details,
    )
