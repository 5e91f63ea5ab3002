"""
Statistical checks with desk-scale budgets of config_base.json. Run with --runslow.
"""
import math
import os

import pytest

from billiard_lab.calculations.diagnostics import (FLAT_RUN_KINDS, RANGE_KINDS, accumulation_curves,
                                                   cell_expansion_trend, cell_range_probe, expansion_sums,
                                                   seed_curves, strip_expansion_trend)
from billiard_lab.calculations.geometry import build_rectangle, build_symmetric_flower
from billiard_lab.calculations.induced import SubsetSpec
from billiard_lab.calculations.observables import observable
from billiard_lab.calculations.stats import (estimate_cell_measures, estimate_correlation, estimate_tail,
                                             fit_cell_scaling, fit_correlation_decay, leading_tail_exponent,
                                             mean_free_path, measure_invariance)
from billiard_lab.utils.enums import CellKind, MapKind

WORKERS = os.cpu_count() or 1

pytestmark = pytest.mark.slow


def _sums(table, kinds, count, resolution, seed=42, n_min=None):
    spec = SubsetSpec.for_table(table)
    curves = seed_curves(table, spec, count, seed=seed, kinds=kinds, n_min=n_min)
    return [r for r in expansion_sums(table, spec, curves, resolution=resolution, workers=WORKERS) if r is not None]


@pytest.mark.parametrize("name", ["stadium", "disc", "semidispersing", "square"])
def test_mean_free_path(request, name):
    table = build_rectangle(1.0, 1.0) if name == "square" else request.getfixturevalue(name)
    estimate = mean_free_path(table, 10 ** 6, seed=42, workers=WORKERS)
    assert estimate.relative_error < 0.005


def test_stadium_mean_free_path_value(stadium):
    assert stadium.mean_free_path == pytest.approx(2.1820, abs=1e-4)


@pytest.mark.parametrize("name", ["stadium", "drivebelt", "flower", "semidispersing"])
def test_invariance(request, name):
    table = request.getfixturevalue(name)
    report = measure_invariance(table, 10 ** 6, seed=42, workers=WORKERS)
    assert report.r_statistic < 0.01
    assert report.phi_statistic < 0.01
    assert report.r_pvalue > 1e-3
    assert report.phi_pvalue > 1e-3


@pytest.mark.parametrize("name, low, high", [
    ("stadium", 1.6, 2.4),
    ("drivebelt", 1.6, 2.4),
    ("semidispersing", 1.6, 2.4),
    ("flower", 2.5, 3.5),
])
def test_tail_exponent(request, name, low, high):
    table = request.getfixturevalue(name)
    estimate = estimate_tail(table, SubsetSpec.for_table(table), 10 ** 6, seed=42, workers=WORKERS)
    _, fit = leading_tail_exponent(estimate)
    assert low <= fit.exponent <= high
    if name == "stadium":
        assert estimate.kac.consistent


def test_tail_exponent_is_stable_under_the_seed(stadium):
    spec = SubsetSpec.for_table(stadium)
    exponents = [leading_tail_exponent(estimate_tail(stadium, spec, 10 ** 6, seed=seed, workers=WORKERS))[1].exponent
                 for seed in (42, 43)]
    assert abs(exponents[0] - exponents[1]) < 0.2


@pytest.mark.parametrize("name, threshold, samples", [
    ("flower", "phi_slide", 10 ** 5),
    ("drivebelt", "phi_diam", 10 ** 6),
])
def test_tail_exponent_is_stable_under_the_thresholds(request, lab_settings, name, threshold, samples):
    table = request.getfixturevalue(name)
    spec = SubsetSpec.for_table(table)
    classification = lab_settings["Classification"]
    default = classification[threshold]
    exponents = []
    for factor in (1.0, 0.8, 1.2):
        classification[threshold] = default * factor
        estimate = estimate_tail(table, spec, samples, seed=42, workers=WORKERS)
        exponents.append(leading_tail_exponent(estimate)[1].exponent)
    classification[threshold] = default
    assert max(abs(a - exponents[0]) for a in exponents[1:]) < 0.2


def test_stadium_flat_run_cells(stadium):
    measures = estimate_cell_measures(stadium, SubsetSpec.for_table(stadium), 10 ** 6, seed=42, workers=WORKERS)
    assert fit_cell_scaling(measures, CellKind.flat_run_direct).exponent == pytest.approx(3.0, abs=0.3)


@pytest.mark.parametrize("name, kind, exponent, tolerance", [
    ("flower", CellKind.sliding, 4.0, 0.4),
    ("drivebelt", CellKind.diametric, 3.0, 0.3),
])
def test_cell_scaling(request, name, kind, exponent, tolerance):
    table = request.getfixturevalue(name)
    measures = estimate_cell_measures(table, SubsetSpec.for_table(table), 10 ** 6, seed=42, workers=WORKERS)
    assert fit_cell_scaling(measures, kind).exponent == pytest.approx(exponent, abs=tolerance)


def test_strip_expansion_grows_quadratically(semidispersing):
    trend = strip_expansion_trend(semidispersing, 10 ** 5, seed=42, workers=WORKERS)
    assert trend.slopes["strip"] == pytest.approx(2.0, abs=0.3)


def test_flower_sliding_expansion_grows_quadratically(flower):
    trend = cell_expansion_trend(flower, SubsetSpec.for_table(flower), 2 * 10 ** 5, seed=42, near_grazing=True,
                                 workers=WORKERS)
    assert trend.slopes["sliding"] == pytest.approx(2.0, abs=0.3)


def test_stadium_flat_run_expansion_is_linear(stadium):
    trend = cell_expansion_trend(stadium, SubsetSpec.for_table(stadium), 2 * 10 ** 5, seed=42, workers=WORKERS)
    assert trend.ratios["flat_run_direct"] >= 4 * 0.85
    assert trend.ratios["flat_run_indirect"] >= 8 * 0.85


def test_stadium_expansion_sums_stay_below_one(stadium):
    reports = _sums(stadium, FLAT_RUN_KINDS, 20, 2000)
    assert reports
    assert max(r.sum for r in reports) < 1.0
    assert not any(r.divergent for r in reports)


def test_drivebelt_expansion_sums_stay_below_one(drivebelt):
    reports = _sums(drivebelt, RANGE_KINDS, 20, 2000)
    assert reports
    assert max(r.sum for r in reports) < 1.0


@pytest.mark.parametrize("name, kinds", [
    ("stadium", FLAT_RUN_KINDS),
    ("drivebelt", RANGE_KINDS),
    ("flower", (CellKind.sliding, CellKind.diametric)),
    ("semidispersing", (CellKind.ih_escape,)),
])
def test_validated_tables_are_never_flagged(request, name, kinds):
    reports = _sums(request.getfixturevalue(name), kinds, 4, None)
    assert reports
    assert not any(r.divergent for r in reports)


def test_pathological_flower_is_flagged():
    table = build_symmetric_flower(3, 1.1 * math.pi, pathological=True)
    spec = SubsetSpec.for_table(table)
    curves = accumulation_curves(table, spec, 4, seed=42)
    reports = [r for r in expansion_sums(table, spec, curves, resolution=2000, workers=WORKERS) if r is not None]
    assert reports
    assert any(r.divergent for r in reports)
    assert all(r.refined_sum > r.sum for r in reports if r.divergent)


@pytest.mark.parametrize("name, bound", [("stadium", 9.0), ("drivebelt", 49.0)])
def test_cell_range_bounds(request, name, bound, lab_settings):
    table = request.getfixturevalue(name)
    spec = SubsetSpec.for_table(table)
    kinds = FLAT_RUN_KINDS if name == "stadium" else RANGE_KINDS
    curves = seed_curves(table, spec, 30, seed=42, kinds=kinds, n_min=lab_settings["Diagnostics"]["range_n_min"])
    ranges = cell_range_probe(table, spec, curves, resolution=2000, workers=WORKERS)
    assert len(ranges.ratios) > 0
    assert ranges.ratios.max() <= bound * 1.1


def test_drivebelt_big_arc_extent(drivebelt):
    assert max(c.shape.extent for c in drivebelt.components if c.is_arc) == \
        pytest.approx(math.pi + 2 * math.asin(0.25))


def test_full_map_correlation_decays_like_a_power(stadium):
    free_path = observable("free-path", stadium)
    series = estimate_correlation(stadium, free_path, free_path, MapKind.full, 200, 4 * 10 ** 6, seed=42,
                                  chains=WORKERS, workers=WORKERS)
    decay = fit_correlation_decay(series)
    assert -1.6 <= decay.power_law.slope <= -0.6


def test_induced_map_correlation_decays_exponentially(stadium):
    free_path = observable("free-path", stadium)
    series = estimate_correlation(stadium, free_path, free_path, MapKind.induced, 30, 10 ** 6, seed=42,
                                  spec=SubsetSpec.for_table(stadium), chains=WORKERS, workers=WORKERS)
    assert fit_correlation_decay(series).preferred == "exponential"
