"""
CSV exchange of complex matrices, one (row, col, re, im) record per entry
"""

from pathlib import Path
from typing import Union

import numpy as np
import pandas as pd

from app.core.channel import ChannelSnapshot
from app.core.correlation import CovarianceLevel, CovarianceMatrix
from app.core.errors import DimensionMismatchError

MATRIX_COLUMNS = ["row", "col", "re", "im"]


def matrix_to_frame(matrix: np.ndarray) -> pd.DataFrame:
    m = np.atleast_2d(np.asarray(matrix, dtype=complex))
    rows, cols = np.indices(m.shape)
    return pd.DataFrame({
        "row": rows.ravel(),
        "col": cols.ravel(),
        "re": m.real.ravel(),
        "im": m.imag.ravel(),
    }, columns=MATRIX_COLUMNS)


def frame_to_matrix(frame: pd.DataFrame) -> np.ndarray:
    missing = set(MATRIX_COLUMNS) - set(frame.columns)
    if missing:
        raise DimensionMismatchError(f"matrix CSV lacks columns {sorted(missing)}")
    shape = (int(frame["row"].max()) + 1, int(frame["col"].max()) + 1)
    if len(frame) != shape[0] * shape[1]:
        raise DimensionMismatchError(f"{len(frame)} entries for a {shape[0]} x {shape[1]} matrix")
    m = np.zeros(shape, dtype=complex)
    m[frame["row"].to_numpy(int), frame["col"].to_numpy(int)] = frame["re"].to_numpy() + 1j * frame["im"].to_numpy()
    return m


def write_matrix_csv(matrix: Union[np.ndarray, CovarianceMatrix, ChannelSnapshot], path: Union[str, Path]) -> Path:
    if isinstance(matrix, (CovarianceMatrix, ChannelSnapshot)):
        matrix = matrix.matrix
    path = Path(path)
    matrix_to_frame(matrix).to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
    return path


def read_matrix_csv(path: Union[str, Path]) -> np.ndarray:
    return frame_to_matrix(pd.read_csv(path, float_precision="round_trip"))


def read_covariance_csv(path: Union[str, Path], level: CovarianceLevel = CovarianceLevel.ELEMENT) -> CovarianceMatrix:
    """Load an externally supplied covariance; validated like any other"""
    return CovarianceMatrix(read_matrix_csv(path), level, {"source": str(path)})
