from typing import NamedTuple, Optional, Tuple

import numpy as np

from billiard_lab.utils.types import Histogram


class LineFit(NamedTuple):
    """
    Straight line y = intercept + slope * x.

    `goodness` is the unweighted coefficient of determination of the data around the line,
    `slope_se` the standard error of the slope from the weighted residuals.
    """
    slope: float
    intercept: float
    slope_se: float
    goodness: float


def bins_center(bins: np.ndarray) -> np.ndarray:
    """
    Centers the bin edges of a histogram.

    Parameters
    ----------
    bins
        bin edges.

    Returns
    -------
    np.ndarray
        centered bins.
    """
    return (bins[:-1] + bins[1:]) / 2


def histogram(values: np.ndarray, bins: int, boundary: Tuple[float, float]) -> Histogram:
    """
    Creates a histogram from the given values.
    The outer classes will also contain all values that are less than or greater than the supplied range.

    Parameters
    ----------
    values
        array from which the histogram should be created from.
    bins
        number of bins.
    boundary
        boundary of the histogram.

    Returns
    -------
    x,y
        bin boundaries and relative histogram frequencies.
    """
    y, x = np.histogram(values, bins, boundary)

    y[0] += (values < boundary[0]).sum()
    y[-1] += (values > boundary[1]).sum()
    return x, y / len(values)


def log_grid(n_min: float, n_max: float, points_per_decade: int) -> np.ndarray:
    """
    Distinct integers spaced evenly in log scale between n_min and n_max (inclusive).
    """
    if n_max < n_min:
        return np.array([], dtype=np.int64)
    decades = np.log10(n_max) - np.log10(max(n_min, 1))
    count = max(2, int(np.ceil(decades * points_per_decade)) + 1)
    return np.unique(np.round(np.logspace(np.log10(max(n_min, 1)), np.log10(n_max), count)).astype(np.int64))


def fit_line(x: np.ndarray, y: np.ndarray, weights: Optional[np.ndarray] = None) -> LineFit:
    """
    Weighted least squares line through (x, y).

    Parameters
    ----------
    x, y
        data, at least three points.
    weights
        inverse variances of y, uniform when omitted.

    Returns
    -------
    LineFit
        slope, intercept, standard error of the slope and goodness. An exact line has
        standard error 0 and goodness 1.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.ones_like(x) if weights is None else np.asarray(weights, dtype=float)
    if len(x) < 3:
        raise ValueError("a line fit needs at least three points")

    design = np.column_stack([np.ones_like(x), x])
    normal = design.T @ (design * w[:, None])
    (intercept, slope) = np.linalg.solve(normal, design.T @ (w * y))
    residuals = y - (intercept + slope * x)
    sigma2 = float(np.sum(w * residuals ** 2) / (len(x) - 2))
    slope_se = float(np.sqrt(max(sigma2 * np.linalg.inv(normal)[1, 1], 0.0)))

    total = float(np.sum((y - y.mean()) ** 2))
    goodness = 1.0 - float(np.sum(residuals ** 2)) / total if total > 0 else 1.0
    return LineFit(float(slope), float(intercept), slope_se, goodness)


def winsorize(values: np.ndarray, quantile: float) -> Tuple[np.ndarray, float]:
    """
    Clips values above the given quantile.

    Returns
    -------
    Tuple[np.ndarray, float]
        the clipped values and the cutoff.
    """
    cutoff = float(np.quantile(values, quantile))
    return np.minimum(values, cutoff), cutoff
