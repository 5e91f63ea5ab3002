import numpy as np
import pytest

from billiard_lab.calculations.math import bins_center, fit_line, histogram, log_grid, winsorize


def test_fit_line_exact():
    x = np.arange(1.0, 8.0)
    fit = fit_line(x, 3.0 - 0.5 * x)
    assert fit.slope == pytest.approx(-0.5)
    assert fit.intercept == pytest.approx(3.0)
    assert fit.slope_se == pytest.approx(0.0, abs=1e-12)
    assert fit.goodness == pytest.approx(1.0)


def test_fit_line_weights_pull_towards_heavy_points():
    x = np.array([0.0, 1.0, 2.0, 3.0])
    y = np.array([0.0, 1.0, 2.0, 10.0])
    light = fit_line(x, y, np.array([1.0, 1.0, 1.0, 1e-6]))
    assert light.slope == pytest.approx(1.0, abs=1e-3)
    assert fit_line(x, y).slope > 2.0


def test_fit_line_needs_three_points():
    with pytest.raises(ValueError):
        fit_line([1.0, 2.0], [1.0, 2.0])


def test_log_grid():
    grid = log_grid(1, 1000, 10)
    assert grid[0] == 1
    assert grid[-1] == 1000
    assert np.all(np.diff(grid) > 0)
    assert len(log_grid(10, 5, 10)) == 0


def test_winsorize():
    values = np.arange(100.0)
    clipped, cutoff = winsorize(values, 0.9)
    assert cutoff == pytest.approx(89.1)
    assert clipped.max() == pytest.approx(cutoff)
    assert clipped[:89] == pytest.approx(values[:89])


def test_histogram_keeps_outliers():
    edges, frequencies = histogram(np.array([-1.0, 0.1, 0.6, 2.0]), 2, (0.0, 1.0))
    assert bins_center(edges) == pytest.approx([0.25, 0.75])
    assert frequencies == pytest.approx([0.5, 0.5])
