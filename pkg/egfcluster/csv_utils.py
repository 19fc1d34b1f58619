import sys

import numpy as np
import pandas as pd

from egfcluster.graph import PointSet

FLOAT_FORMAT = "%.6f"
MOTION_COLUMNS = ["x", "y", "vx", "vy"]


def _read_numeric(path):
    """Read a CSV of numbers whose first row may be a header.

    Parameters
    ----------
    path : str or pathlib.Path
        CSV file.

    Returns
    -------
    pandas.DataFrame
        Float columns. They are named after the header when one is
        present and numbered otherwise.

    Raises
    ------
    ValueError
        If the file is empty or holds non-numeric data below the header.
    """
    try:
        raw = pd.read_csv(path, header=None, dtype=str, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise ValueError(f"{path} is empty")
    first = pd.to_numeric(raw.iloc[0], errors="coerce")
    if first.isna().any():
        raw.columns = [str(name).strip() for name in raw.iloc[0]]
        raw = raw.iloc[1:]
    if len(raw) == 0:
        raise ValueError(f"{path} holds no data rows")
    try:
        return raw.apply(pd.to_numeric, errors="raise").astype(np.float64)
    except ValueError as e:
        raise ValueError(f"{path} holds non-numeric data: {e}")


def load_points(path):
    """Point data, one row per point, header auto-detected."""
    return PointSet(_read_numeric(path).to_numpy())


def load_motion(path):
    """Positions and velocities from a CSV with columns x, y, vx, vy."""
    table = _read_numeric(path)
    if list(table.columns) == list(range(len(MOTION_COLUMNS))):
        table.columns = MOTION_COLUMNS
    missing = [name for name in MOTION_COLUMNS if name not in table.columns]
    if missing:
        raise ValueError(f"{path} lacks columns {missing}; expected {MOTION_COLUMNS}")
    return table[["x", "y"]].to_numpy(), table[["vx", "vy"]].to_numpy()


def write_csv(table, path=None):
    """Write ``table`` with a header, LF line endings and six-decimal floats.

    ``None`` or ``"-"`` writes to stdout.
    """
    if path is None or str(path) == "-":
        table.to_csv(sys.stdout, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        return
    with open(path, "w", newline="") as f:
        table.to_csv(f, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
