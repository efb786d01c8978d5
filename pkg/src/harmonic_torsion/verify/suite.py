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

"""Registered identity suite with frozen fixtures and tolerances."""

import logging
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from harmonic_torsion.field.grid import GridDomain, MapState
from harmonic_torsion.field.maps import (
    equivariant_solution,
    equivariant_torsion,
    latitude_map,
    random_smooth_map,
)
from harmonic_torsion.geometry.chart import ConformalFactor, flat_chart, sphere2_chart
from harmonic_torsion.geometry.torsion import (
    TorsionField,
    TorsionKind,
    random_skew_adjoint,
)
from harmonic_torsion.utils.helpers import make_rng
from harmonic_torsion.verify.identities import (
    IdentityReport,
    Verdict,
    bochner_residual_lc,
    bochner_residual_tor,
    conformal_domain_check,
    conformal_target_check,
    laplacian_relation_check,
    refine,
)


logger = logging.getLogger(__name__)

SUITE_SEED = 20250101
EQUIVARIANT_AMPLITUDE = 0.5


@dataclass(frozen=True)
class IdentityCase:
    """One registered check.

    Attributes:
        name: Report name.
        check: Single-grid check of a map.
        family: Builds the fixture map on an ``n x n`` grid.
        sizes: Grid sizes; one size skips refinement.
        constant: ``C`` in the pass criterion ``residual <= C h^2``.
    """

    name: str
    check: Callable[[MapState], IdentityReport]
    family: Callable[[int], MapState]
    sizes: tuple[int, ...]
    constant: float = 0.0

    def run(self) -> IdentityReport:
        if len(self.sizes) == 1:
            report = self.check(self.family(self.sizes[0]))
        else:
            report = refine(self.check, self.family, self.sizes, self.constant)
        report.identity_name = self.name
        return report


def _square(n: int) -> GridDomain:
    return GridDomain(n, n)


def _tilted_sphere_map(n: int) -> MapState:
    domain = _square(n)
    x, y = domain.coordinates()
    values = np.stack(
        [np.pi / 2 + 0.3 * np.sin(x) * np.cos(y), x + 0.2 * np.sin(y)], axis=-1
    )
    return MapState(values, sphere2_chart(), domain)


def _random_sphere_map(n: int) -> MapState:
    return random_smooth_map(
        sphere2_chart(), _square(n), [np.pi / 2, 0.0], 0.4, seed=SUITE_SEED
    )


def _random_flat_map(n: int) -> MapState:
    return random_smooth_map(
        flat_chart(2), _square(n), [0.0, 0.0], 1.0, seed=SUITE_SEED
    )


def _general_torsion() -> TorsionField:
    coefficients = random_skew_adjoint(make_rng(SUITE_SEED), 2, scale=0.5)
    return TorsionField.constant(TorsionKind.GENERAL, coefficients)


def registered_cases() -> list[IdentityCase]:
    equivariant = equivariant_torsion()
    sphere_torsion = TorsionField.constant_vectorial([0.3, 0.2])
    general = _general_torsion()
    slope = ConformalFactor.linear(0.1, axis=0, dim=2)
    return [
        IdentityCase(
            "bochner_lc",
            bochner_residual_lc,
            lambda n: latitude_map(_square(n)),
            (32, 64, 128),
            constant=50.0,
        ),
        IdentityCase(
            "bochner_tor",
            lambda m: bochner_residual_tor(m, equivariant),
            lambda n: equivariant_solution(_square(n), EQUIVARIANT_AMPLITUDE),
            (32, 64),
            constant=50.0,
        ),
        IdentityCase(
            "laplacian_relation",
            lambda m: laplacian_relation_check(m, sphere_torsion),
            _tilted_sphere_map,
            (32, 64),
            constant=50.0,
        ),
        IdentityCase(
            "conformal_domain",
            lambda m: conformal_domain_check(m, general, 1.0),
            _random_sphere_map,
            (32, 64),
        ),
        IdentityCase(
            "conformal_target_flat",
            lambda m: conformal_target_check(m, slope),
            _random_flat_map,
            (32, 64),
        ),
        IdentityCase(
            "conformal_target_sphere",
            lambda m: conformal_target_check(m, slope),
            _random_sphere_map,
            (32, 64),
        ),
    ]


def run_identity_suite(threads: int = 1) -> list[IdentityReport]:
    """Runs every registered case; report order follows registration order."""
    cases = registered_cases()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            reports = list(pool.map(IdentityCase.run, cases))
    else:
        reports = [case.run() for case in cases]
    for report in reports:
        log = logger.warning if report.verdict is Verdict.FAIL else logger.info
        log(
            f"{report.identity_name}: {report.verdict.value} "
            f"(residual {report.max_residual:.3e}, "
            f"order {report.convergence_order:.2f})"
        )
    return reports
