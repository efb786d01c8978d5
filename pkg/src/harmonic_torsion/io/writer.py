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

"""File writing utilities."""

import json
from pathlib import Path

import numpy as np
import pandas as pd

from harmonic_torsion.field.grid import MapState


FLOAT_FORMAT = "%.17g"


def write_table(df: pd.DataFrame, filepath: str | Path, sep: str = ",") -> None:
    """Writes DataFrame to file with 17 significant digits and LF line endings.

    Args:
        df: Data to write.
        filepath: Output path.
        sep: Column separator.
    """
    path = Path(filepath)
    path.parent.mkdir(parents=True, exist_ok=True)

    df.to_csv(
        path, sep=sep, index=False, float_format=FLOAT_FORMAT, lineterminator="\n"
    )


def _plain(value):
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, np.generic):
        return _plain(value.item())
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    if isinstance(value, float) and not np.isfinite(value):
        return None
    return value


def write_json(data, filepath: str | Path) -> None:
    """Writes data as sorted, indented JSON.

    Numpy scalars and arrays become plain numbers and lists, complex numbers
    become ``{"re", "im"}`` pairs and non-finite floats become null.
    """
    path = Path(filepath)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        json.dump(_plain(data), handle, indent=2, sort_keys=True)
        handle.write("\n")


def map_frame(map_state: MapState) -> pd.DataFrame:
    """One row per node: ``i, j, phi_1 .. phi_n``."""
    nx, ny = map_state.domain.shape
    i, j = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    columns = {"i": i.ravel(), "j": j.ravel()}
    for a in range(map_state.chart.dim_n):
        columns[f"phi_{a + 1}"] = map_state.values[..., a].ravel()
    return pd.DataFrame(columns)


def map_document(map_state: MapState) -> dict:
    """Grid metadata and node values flattened in ``(i, j, a)`` order."""
    domain = map_state.domain
    return {
        "grid": {
            "nx": domain.nx,
            "ny": domain.ny,
            "lx": domain.lx,
            "ly": domain.ly,
            "conformal_u": domain.conformal_u,
        },
        "chart": map_state.chart.name,
        "dim_n": map_state.chart.dim_n,
        "values": map_state.values.ravel(),
    }


def matrix_frame(matrix: np.ndarray) -> pd.DataFrame:
    """Dense matrix with columns ``c0 .. c{m-1}``."""
    return pd.DataFrame(matrix, columns=[f"c{k}" for k in range(matrix.shape[1])])
