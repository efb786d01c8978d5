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

"""Loads problem configuration files.

Configuration is TOML with one table per concern. Every table is checked
against its allowed keys and value types, so a misspelt torsion parameter
fails loudly instead of silently falling back to a default.

Supports both file paths (str, Path) and file-like objects (text or
binary) so tests can pass configuration inline.

Example:
    seed = 7

    [chart]
    name = "sphere2"

    [torsion]
    kind = "vectorial"
    profile = "constant"
    V = [1.0, 0.0]

    [domain]
    nx = 16
    ny = 16

    [initial_map]
    kind = "perturbed"
    base = "equator_wrap"
    amplitude = 0.05
"""

import os
import sys
from dataclasses import dataclass, field
from os import PathLike
from typing import BinaryIO, TextIO

import numpy as np

from harmonic_torsion.field.grid import GridDomain, MapState
from harmonic_torsion.field.maps import (
    constant_map,
    equator_map,
    equivariant_solution,
    equivariant_torsion,
    perturbed_map,
)
from harmonic_torsion.field.solver import SolverConfig, SolverMethod
from harmonic_torsion.geodesic.integrator import GeodesicState, IntegrationMethod
from harmonic_torsion.geometry.chart import Chart, ConformalFactor, get_chart
from harmonic_torsion.geometry.torsion import (
    TorsionField,
    TorsionKind,
    random_skew_adjoint,
    random_three_form,
)
from harmonic_torsion.stability.jacobi import JacobiForm
from harmonic_torsion.utils.errors import ChartDomainError, ConfigError
from harmonic_torsion.utils.helpers import make_rng

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


DEFAULT_SEED = 0
RANDOM_TORSION_SCALE = 0.5
TORSION_PROFILES = ("constant", "gradient", "equivariant")
INITIAL_MAP_KINDS = ("constant", "equator_wrap", "perturbed", "equivariant")
SPECTRUM_FORMS = ("levi_civita", "torsion_connection", "both")

_REAL = "real"
_INT = "integer"
_STR = "string"
_BOOL = "boolean"
_REALS = "list of reals"
_PERIODS = "list of reals or false"


@dataclass(frozen=True)
class ChartConfig:
    name: str = "flat"
    dim: int = 2
    periods: tuple[float | None, ...] | None = None


@dataclass(frozen=True)
class TorsionConfig:
    kind: TorsionKind = TorsionKind.ZERO
    profile: str = "constant"
    V: tuple[float, ...] | None = None
    scale: float = RANDOM_TORSION_SCALE
    axis: int = 0
    amplitude: float = 0.5


@dataclass(frozen=True)
class InitialMapConfig:
    kind: str = "constant"
    point: tuple[float, ...] | None = None
    winding: int = 1
    base: str = "equator_wrap"
    amplitude: float = 0.05
    seed: int | None = None


@dataclass(frozen=True)
class GeodesicConfig:
    position: tuple[float, ...] | None = None
    velocity: tuple[float, ...] | None = None
    step: float = 1e-2
    n_steps: int = 1000
    method: IntegrationMethod = IntegrationMethod.RK4


@dataclass(frozen=True)
class DecomposeConfig:
    point: tuple[float, ...] | None = None


@dataclass(frozen=True)
class SpectrumConfig:
    k: int = 6
    form: str = "both"
    dump_matrix: bool = False


@dataclass(frozen=True)
class EnergyConfig:
    radii: tuple[float, ...] = (0.5, 1.0, 2.0)
    probe_t: float | None = None


@dataclass(frozen=True)
class ProblemConfig:
    """Parsed configuration; every section falls back to its defaults."""

    seed: int = DEFAULT_SEED
    chart: ChartConfig = field(default_factory=ChartConfig)
    torsion: TorsionConfig = field(default_factory=TorsionConfig)
    domain: GridDomain = field(default_factory=lambda: GridDomain(16, 16))
    initial_map: InitialMapConfig = field(default_factory=InitialMapConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    geodesic: GeodesicConfig = field(default_factory=GeodesicConfig)
    decompose: DecomposeConfig = field(default_factory=DecomposeConfig)
    spectrum: SpectrumConfig = field(default_factory=SpectrumConfig)
    energy: EnergyConfig = field(default_factory=EnergyConfig)


def _check_type(value, expected: str, key_path: str):
    def is_real(v):
        return isinstance(v, (int, float)) and not isinstance(v, bool)

    ok = {
        _REAL: is_real,
        _INT: lambda v: isinstance(v, int) and not isinstance(v, bool),
        _STR: lambda v: isinstance(v, str),
        _BOOL: lambda v: isinstance(v, bool),
        _REALS: lambda v: isinstance(v, list) and all(is_real(x) for x in v),
        _PERIODS: lambda v: isinstance(v, list)
        and all(is_real(x) or x is False for x in v),
    }[expected](value)
    if not ok:
        raise ConfigError(key_path, f"expected {expected}, got {value!r}")


def _table(raw: dict, section: str, schema: dict[str, str]) -> dict:
    """Validates one table and returns its entries with converted values."""
    table = raw.get(section, {})
    if not isinstance(table, dict):
        raise ConfigError(section, "expected a table")
    values = {}
    for key, value in table.items():
        key_path = f"{section}.{key}"
        if key not in schema:
            raise ConfigError(key_path, "unknown key")
        _check_type(value, schema[key], key_path)
        if schema[key] == _REAL:
            value = float(value)
        elif schema[key] == _REALS:
            value = tuple(float(x) for x in value)
        elif schema[key] == _PERIODS:
            value = tuple(None if x is False else float(x) for x in value)
        values[key] = value
    return values


def _choice(values: dict, key: str, section: str, allowed) -> None:
    if key in values and values[key] not in allowed:
        raise ConfigError(
            f"{section}.{key}", f"must be one of {list(allowed)}, got {values[key]!r}"
        )


def _read_toml(source) -> dict:
    is_path = isinstance(source, (str, PathLike))
    try:
        if is_path:
            path_str = str(source)
            if not os.path.exists(path_str):
                raise FileNotFoundError(f"Config file not found: {path_str}")
            with open(path_str, "rb") as handle:
                return tomllib.load(handle)
        if not hasattr(source, "read"):
            raise TypeError("Config source must be a path or a readable object")
        content = source.read()
        if isinstance(content, bytes):
            content = content.decode("utf-8")
        return tomllib.loads(content)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError("<file>", f"invalid TOML ({e})")


def load_problem_config(source: str | PathLike | TextIO | BinaryIO) -> ProblemConfig:
    """Loads and validates a problem configuration.

    Args:
        source: Path to a TOML file or a readable file-like object.

    Returns:
        ProblemConfig with defaults for every omitted key.

    Raises:
        FileNotFoundError: If a path is provided but the file does not exist.
        ConfigError: If the file is not TOML, a key is unknown or a value has
            the wrong type or range. The message starts with the dotted key
            path.
        TypeError: If the source is neither a path nor readable.
    """
    raw = _read_toml(source)
    sections = {
        "chart", "torsion", "domain", "initial_map", "solver",
        "geodesic", "decompose", "spectrum", "energy",
    }
    for key in raw:
        if key != "seed" and key not in sections:
            raise ConfigError(key, "unknown key")
    seed = raw.get("seed", DEFAULT_SEED)
    _check_type(seed, _INT, "seed")
    if seed < 0:
        raise ConfigError("seed", "must be non-negative")

    chart = _table(raw, "chart", {"name": _STR, "dim": _INT, "periods": _PERIODS})

    torsion = _table(
        raw,
        "torsion",
        {
            "kind": _STR, "profile": _STR, "V": _REALS,
            "scale": _REAL, "axis": _INT, "amplitude": _REAL,
        },
    )
    _choice(torsion, "kind", "torsion", [kind.value for kind in TorsionKind])
    _choice(torsion, "profile", "torsion", TORSION_PROFILES)
    if "kind" in torsion:
        torsion["kind"] = TorsionKind(torsion["kind"])

    domain = _table(
        raw,
        "domain",
        {"nx": _INT, "ny": _INT, "lx": _REAL, "ly": _REAL, "conformal_u": _REAL},
    )
    try:
        grid = GridDomain(**{"nx": 16, "ny": 16, **domain})
    except ValueError as e:
        raise ConfigError("domain", str(e))

    initial = _table(
        raw,
        "initial_map",
        {
            "kind": _STR, "point": _REALS, "winding": _INT,
            "base": _STR, "amplitude": _REAL, "seed": _INT,
        },
    )
    _choice(initial, "kind", "initial_map", INITIAL_MAP_KINDS)
    _choice(initial, "base", "initial_map", ("constant", "equator_wrap"))

    solver = _table(
        raw,
        "solver",
        {
            "method": _STR, "damping": _REAL, "tol": _REAL, "max_iters": _INT,
            "divergence_factor": _REAL, "cg_rtol": _REAL,
            "line_search_steps": _INT, "threads": _INT,
        },
    )
    _choice(solver, "method", "solver", [m.value for m in SolverMethod])
    try:
        solver_config = SolverConfig(**solver)
    except ValueError as e:
        raise ConfigError("solver", str(e))

    geodesic = _table(
        raw,
        "geodesic",
        {
            "position": _REALS, "velocity": _REALS, "step": _REAL,
            "n_steps": _INT, "method": _STR,
        },
    )
    _choice(geodesic, "method", "geodesic", [m.value for m in IntegrationMethod])
    if "method" in geodesic:
        geodesic["method"] = IntegrationMethod(geodesic["method"])

    decompose = _table(raw, "decompose", {"point": _REALS})
    spectrum = _table(raw, "spectrum", {"k": _INT, "form": _STR, "dump_matrix": _BOOL})
    _choice(spectrum, "form", "spectrum", SPECTRUM_FORMS)
    energy = _table(raw, "energy", {"radii": _REALS, "probe_t": _REAL})
    if any(r <= 0 for r in energy.get("radii", (1.0,))):
        raise ConfigError("energy.radii", "radii must be positive")

    return ProblemConfig(
        seed=seed,
        chart=ChartConfig(**chart),
        torsion=TorsionConfig(**torsion),
        domain=grid,
        initial_map=InitialMapConfig(**initial),
        solver=solver_config,
        geodesic=GeodesicConfig(**geodesic),
        decompose=DecomposeConfig(**decompose),
        spectrum=SpectrumConfig(**spectrum),
        energy=EnergyConfig(**energy),
    )


def build_chart(config: ProblemConfig) -> Chart:
    """Target chart named in ``[chart]``."""
    cfg = config.chart
    if cfg.name == "flat":
        try:
            return get_chart("flat", dim=cfg.dim, periods=cfg.periods)
        except ValueError as e:
            raise ConfigError("chart", str(e))
    if cfg.periods is not None or cfg.dim != 2:
        raise ConfigError("chart", f"chart {cfg.name} takes no dim or periods")
    try:
        return get_chart(cfg.name)
    except KeyError as e:
        raise ConfigError("chart.name", str(e.args[0]))


def _vector(values, n: int, key_path: str) -> np.ndarray:
    if values is None:
        raise ConfigError(key_path, "missing")
    if len(values) != n:
        raise ConfigError(key_path, f"expected {n} components, got {len(values)}")
    return np.asarray(values, dtype=float)


def build_torsion(config: ProblemConfig, chart: Chart) -> TorsionField:
    """Torsion field described by ``[torsion]``; random kinds draw from ``seed``."""
    cfg = config.torsion
    n = chart.dim_n
    if cfg.kind is TorsionKind.ZERO:
        return TorsionField.zero()
    if cfg.kind is TorsionKind.VECTORIAL:
        if cfg.profile == "constant":
            return TorsionField.constant_vectorial(_vector(cfg.V, n, "torsion.V"))
        if cfg.profile == "gradient":
            if not 0 <= cfg.axis < n:
                raise ConfigError("torsion.axis", f"must lie in [0, {n})")
            factor = ConformalFactor.linear(cfg.scale, cfg.axis, n)
            return TorsionField.vectorial(
                lambda y: np.einsum(
                    "...ab,...b->...a",
                    np.linalg.inv(chart.metric(y)),
                    factor.covector(y),
                ),
                description=f"grad({cfg.scale:g} y_{cfg.axis})",
            )
        if chart.name != "sphere2":
            raise ConfigError("torsion.profile", "equivariant profile needs sphere2")
        return equivariant_torsion()
    if n < 2:
        raise ConfigError("torsion.kind", "random torsion needs dimension >= 2")
    rng = make_rng(config.seed)
    if cfg.kind is TorsionKind.ANTISYMMETRIC:
        array = random_three_form(rng, n, cfg.scale)
    else:
        array = random_skew_adjoint(rng, n, cfg.scale)
    return TorsionField.constant(cfg.kind, array)


def build_domain(config: ProblemConfig) -> GridDomain:
    return config.domain


def default_point(chart: Chart) -> np.ndarray:
    if chart.name == "sphere2":
        return np.array([np.pi / 2, 0.0])
    if chart.name == "hyperbolic2":
        return np.array([0.0, 1.0])
    return np.zeros(chart.dim_n)


def build_initial_map(config: ProblemConfig, chart: Chart) -> MapState:
    """Initial map described by ``[initial_map]``.

    Raises:
        ConfigError: If the map does not fit the chart.
    """
    cfg = config.initial_map
    domain = build_domain(config)
    kind = cfg.base if cfg.kind == "perturbed" else cfg.kind
    try:
        if kind == "equator_wrap":
            if chart.name != "sphere2":
                raise ConfigError("initial_map.kind", "equator_wrap needs sphere2")
            base = equator_map(domain, cfg.winding)
        elif kind == "equivariant":
            if chart.name != "sphere2":
                raise ConfigError("initial_map.kind", "equivariant needs sphere2")
            base = equivariant_solution(domain, config.torsion.amplitude)
        else:
            point = (
                default_point(chart)
                if cfg.point is None
                else _vector(cfg.point, chart.dim_n, "initial_map.point")
            )
            base = constant_map(chart, domain, point)
        if cfg.kind != "perturbed":
            return base
        seed = config.seed if cfg.seed is None else cfg.seed
        return perturbed_map(base, cfg.amplitude, seed)
    except ChartDomainError as e:
        raise ConfigError("initial_map", str(e))
    except ValueError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError("initial_map", str(e))


def build_geodesic_state(config: ProblemConfig, chart: Chart) -> GeodesicState:
    cfg = config.geodesic
    return GeodesicState(
        _vector(cfg.position, chart.dim_n, "geodesic.position"),
        _vector(cfg.velocity, chart.dim_n, "geodesic.velocity"),
    )


def spectrum_forms(config: ProblemConfig) -> list[JacobiForm]:
    if config.spectrum.form == "both":
        return [JacobiForm.LEVI_CIVITA, JacobiForm.TORSION_CONNECTION]
    return [JacobiForm(config.spectrum.form)]
