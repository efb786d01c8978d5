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

"""Main entry point for the harmonic-torsion command-line tool."""

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from harmonic_torsion.field.diagnostics import (
    dirichlet_energy,
    energy_gradient_check,
    morrey_norm,
)
from harmonic_torsion.field.solver import solve
from harmonic_torsion.field.tension import tension, tension_tor
from harmonic_torsion.geodesic.integrator import (
    integrate,
    speed_drift,
    trajectory_frame,
)
from harmonic_torsion.geometry.decomposition import (
    cartan_class_residuals,
    cartan_decompose,
)
from harmonic_torsion.geometry.torsion import torsion_eval
from harmonic_torsion.io.writer import (
    map_document,
    map_frame,
    matrix_frame,
    write_json,
    write_table,
)
from harmonic_torsion.preprocess.config_loader import (
    ProblemConfig,
    build_chart,
    build_geodesic_state,
    build_initial_map,
    build_torsion,
    default_point,
    load_problem_config,
    spectrum_forms,
)
from harmonic_torsion.stability.jacobi import assemble
from harmonic_torsion.stability.spectrum import spectrum
from harmonic_torsion.utils.errors import NUMERICAL_ERRORS, ConfigError
from harmonic_torsion.utils.helpers import make_rng, sup_norm
from harmonic_torsion.verify.identities import Verdict
from harmonic_torsion.verify.suite import run_identity_suite


# Configure logger
logging.basicConfig(
    level=logging.INFO,
    format="[%(levelname)s] %(asctime)s %(message)s",
    datefmt="%Y-%m-%d %H:%M:%S",
)
logger = logging.getLogger(__name__)

SUBCOMMANDS = ("geodesic", "solve", "decompose", "verify", "spectrum", "energy")
EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_CONFIG = 2


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)

    # Input/Output Options
    io_group = common.add_argument_group("Input/Output")
    io_group.add_argument(
        "--config",
        type=Path,
        help=(
            "Problem configuration (TOML). "
            "Required by every subcommand except verify."
        ),
    )
    io_group.add_argument(
        "--out",
        type=Path,
        default=Path("results"),
        help="Directory for CSV and JSON results.",
    )

    # Execution
    exec_group = common.add_argument_group("Execution")
    exec_group.add_argument(
        "--threads",
        type=int,
        default=1,
        help="Worker threads for matrix assembly and the identity suite.",
    )

    # Verbosity control
    verbosity = exec_group.add_mutually_exclusive_group()
    verbosity.add_argument(
        "--quiet", action="store_true", help="Only log warnings and errors."
    )
    verbosity.add_argument(
        "--verbose", action="store_true", help="Enable debug-level logging."
    )

    parser = argparse.ArgumentParser(
        prog="harmonic-torsion",
        description=(
            "Harmonic maps with torsion: geodesics, solvers, "
            "Jacobi spectra and identity checks"
        ),
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    helps = {
        "geodesic": "Integrate a geodesic of the torsion connection.",
        "solve": "Solve the harmonic map equation with torsion on a grid.",
        "decompose": "Split the torsion at a point into its Cartan parts.",
        "verify": "Run the registered identity suite.",
        "spectrum": "Eigenvalues of the Jacobi operator closest to zero.",
        "energy": "Energy, Morrey norm and tension norms of the initial map.",
    }
    for name in SUBCOMMANDS:
        subparsers.add_parser(name, parents=[common], help=helps[name])
    return parser


def _geodesic(config: ProblemConfig, args) -> int:
    chart = build_chart(config)
    field = build_torsion(config, chart)
    cfg = config.geodesic
    initial = build_geodesic_state(config, chart)
    traj = integrate(chart, field, initial, cfg.step, cfg.n_steps, cfg.method)
    drift = speed_drift(traj, chart)
    write_table(trajectory_frame(traj, chart), args.out / "trajectory.csv")
    write_json(
        {
            "samples": len(traj),
            "truncated": traj.truncated,
            "speed_drift": drift,
            "step": cfg.step,
            "n_steps": cfg.n_steps,
            "method": cfg.method.value,
            "torsion": field.description,
        },
        args.out / "geodesic.json",
    )
    print(
        f"geodesic: {len(traj)} samples, speed drift {drift:.3e}"
        + (", truncated" if traj.truncated else "")
    )
    return EXIT_OK


def _solve(config: ProblemConfig, args) -> int:
    chart = build_chart(config)
    field = build_torsion(config, chart)
    initial = build_initial_map(config, chart)
    solver_config = config.solver
    if args.threads != solver_config.threads:
        solver_config = replace(solver_config, threads=args.threads)
    final, report = solve(initial, field, solver_config)
    write_table(map_frame(final), args.out / "map.csv")
    write_json(map_document(final), args.out / "map.json")
    write_json(
        {
            "seed": config.seed,
            "solver": solver_config.to_dict(),
            "torsion": field.description,
            "report": report.to_dict(),
        },
        args.out / "report.json",
    )
    print(
        f"solve: {report.terminated.value} after {report.iterations} iterations, "
        f"residual {report.final_residual:.3e}"
    )
    return EXIT_OK


def _decompose(config: ProblemConfig, args) -> int:
    chart = build_chart(config)
    field = build_torsion(config, chart)
    point = config.decompose.point
    point = default_point(chart) if point is None else np.asarray(point, dtype=float)
    if point.shape != (chart.dim_n,):
        raise ConfigError("decompose.point", f"expected {chart.dim_n} components")
    h = chart.metric_at(point)
    coeffs = torsion_eval(field, chart, point)
    parts = cartan_decompose(coeffs, h)
    write_json(
        {
            "point": point,
            "kind": field.kind.value,
            "V": parts.vector_V,
            "norms": parts.norms(h),
            "orthogonality_residuals": parts.orthogonality_residuals(h),
            "reconstruction_residual": parts.reconstruction_residual(coeffs),
            "cartan_class_residuals": cartan_class_residuals(parts.cartan_part, h),
        },
        args.out / "decompose.json",
    )
    norms = ", ".join(f"{k} {v:.3e}" for k, v in parts.norms(h).items())
    print(f"decompose: {norms}")
    return EXIT_OK


def _verify(config: ProblemConfig | None, args) -> int:
    reports = run_identity_suite(threads=args.threads)
    write_json([report.to_dict() for report in reports], args.out / "verify.json")
    failed = [r.identity_name for r in reports if r.verdict is Verdict.FAIL]
    passed = sum(r.verdict is Verdict.PASS for r in reports)
    summary = f"verify: {passed}/{len(reports)} passed"
    print(summary + (f", failed {failed}" if failed else ""))
    return EXIT_NUMERICAL if failed else EXIT_OK


def _spectrum(config: ProblemConfig, args) -> int:
    chart = build_chart(config)
    field = build_torsion(config, chart)
    base = build_initial_map(config, chart)
    document = {}
    for form in spectrum_forms(config):
        op = assemble(base, field, form, threads=args.threads)
        values = spectrum(op, config.spectrum.k, seed=config.seed)
        document[form.value] = {
            "eigenvalues": [{"re": v.real, "im": v.imag} for v in values],
            "asymmetry": sup_norm(op.matrix - op.matrix.T),
        }
        if config.spectrum.dump_matrix:
            write_table(matrix_frame(op.matrix), args.out / f"jacobi_{form.value}.csv")
        if values:
            logger.info(f"{form.value}: smallest |lambda| {abs(values[0]):.3e}")
    write_json(document, args.out / "spectrum.json")
    print(f"spectrum: {config.spectrum.k} eigenvalues for {len(document)} form(s)")
    return EXIT_OK


def _energy(config: ProblemConfig, args) -> int:
    chart = build_chart(config)
    field = build_torsion(config, chart)
    map_state = build_initial_map(config, chart)
    energy = dirichlet_energy(map_state)
    document = {
        "energy": energy,
        "morrey_norm": morrey_norm(map_state, config.energy.radii),
        "radii": list(config.energy.radii),
        "tension_norm": sup_norm(tension(map_state)),
        "tension_tor_norm": sup_norm(tension_tor(map_state, field)),
    }
    if config.energy.probe_t is not None:
        probe = make_rng(config.seed).standard_normal(map_state.values.shape)
        document["gradient_check"] = energy_gradient_check(
            map_state, field, 1e-3 * probe, config.energy.probe_t
        )
    write_json(document, args.out / "energy.json")
    print(f"energy: {energy:.6e}, tension_tor {document['tension_tor_norm']:.3e}")
    return EXIT_OK


HANDLERS = {
    "geodesic": _geodesic,
    "solve": _solve,
    "decompose": _decompose,
    "verify": _verify,
    "spectrum": _spectrum,
    "energy": _energy,
}


def run(argv: list[str] | None = None) -> int:
    """Runs one subcommand and returns its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    # Set log level
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    elif args.quiet:
        logging.getLogger().setLevel(logging.WARNING)
    else:
        logging.getLogger().setLevel(logging.INFO)

    if args.threads < 1:
        logger.error("--threads must be at least 1")
        return EXIT_CONFIG

    config = None
    try:
        if args.config is not None:
            config = load_problem_config(args.config)
        elif args.command != "verify":
            logger.error(f"{args.command} requires --config")
            return EXIT_CONFIG
        logger.info(f"Running {args.command}")
        code = HANDLERS[args.command](config, args)
    except (ConfigError, FileNotFoundError) as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_CONFIG
    except NUMERICAL_ERRORS as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_NUMERICAL
    except ValueError as e:
        logger.error(f"Invalid parameters: {e}")
        return EXIT_CONFIG
    logger.info(f"{args.command} finished, results in {args.out}")
    return code


def main():
    """Console script entry point."""
    sys.exit(run())


if __name__ == "__main__":
    main()
