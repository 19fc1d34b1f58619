from collections import namedtuple

import numpy as np
from scipy import stats

Correlation = namedtuple("Correlation", ["value"])


def pearson(x, y):
    """Pearson product-moment correlation of two series.

    Raises
    ------
    ValueError
        If the lengths differ, are shorter than two, or either series is
        constant.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"series must be 1-d with equal lengths, got {x.shape} and {y.shape}")
    if len(x) < 2:
        raise ValueError("need at least two samples")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise ValueError("correlation is undefined for a constant series")
    value = float(stats.pearsonr(x, y)[0])
    return Correlation(value=float(np.clip(value, -1.0, 1.0)))
