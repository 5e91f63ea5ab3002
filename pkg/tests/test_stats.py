import math

import numpy as np
import pytest

from billiard_lab.calculations import stats
from billiard_lab.calculations.dynamics import collision_map
from billiard_lab.calculations.induced import ExcursionSample, SubsetSpec
from billiard_lab.calculations.math import log_grid
from billiard_lab.calculations.observables import observable
from billiard_lab.calculations.stats import (CellMass, CellMeasures, CorrelationSeries, SurvivalCurve, TailEstimate,
                                             cell_measures_from, correlation_chain, estimate_cell_measures,
                                             estimate_correlation, estimate_tail, fit_cell_scaling,
                                             fit_correlation_decay, fit_power_law, fit_tail_by_kind,
                                             fit_tail_with_log_correction, lag_correlations,
                                             leading_tail_exponent, mean_free_path, measure_invariance,
                                             survival_curves)
from billiard_lab.utils.enums import CellKind, MapKind
from billiard_lab.utils.errors import CornerHitError, InsufficientBudgetError, WindowTooSmallError


def _curve(n, survival, r_max=10 ** 7):
    n = np.asarray(n)
    survival = np.asarray(survival, dtype=float)
    # at_risk / (1 - S) is constant, so the fit is unweighted
    at_risk = np.round(1e6 * (1.0 - survival)).astype(np.int64)
    return SurvivalCurve(n, survival, at_risk, 0, 10 ** 6, r_max)


##################################################################
# CORRELATIONS                                                   #
##################################################################

def test_lag_correlations_of_a_constant():
    ones = np.ones(1000)
    values, errors = lag_correlations(ones, ones, np.zeros(1000, dtype=np.int64), 5, 10)
    assert values == pytest.approx(np.zeros(6), abs=0.0)
    assert errors == pytest.approx(np.zeros(6), abs=0.0)


def test_lag_correlations_of_white_noise(rng):
    f = rng.normal(size=20000)
    values, errors = lag_correlations(f, f, np.zeros(20000, dtype=np.int64), 3, 20)
    assert values[0] == pytest.approx(1.0, abs=0.05)
    assert np.all(np.abs(values[1:]) < 4 * errors[1:] + 0.01)


def test_lag_pairs_stay_within_segments():
    f = np.array([1.0, -1.0, 1.0, -1.0])
    segment = np.array([0, 1, 2, 3])
    values, _ = lag_correlations(f, f, segment, 1, 2)
    assert math.isnan(values[1])


def test_grazing_splits_are_not_restarts(disc, lab_settings, monkeypatch):
    lab_settings["Classification"]["exclude_grazing"] = True
    calls = []

    def every_fifth_grazing(table, x):
        calls.append(x)
        return collision_map(table, x)._replace(grazing=len(calls) % 5 == 0)

    monkeypatch.setattr(stats, "collision_map", every_fifth_grazing)
    tau = observable("free-path", disc)
    chain = correlation_chain(disc, tau, tau, MapKind.full, None, np.random.SeedSequence(4), 100, 0)
    assert chain.segment[-1] >= 20
    assert chain.restarts == 0


def test_corner_hits_restart_the_chain(stadium, monkeypatch):
    calls = []

    def corner_every_tenth(table, x):
        calls.append(x)
        if len(calls) % 10 == 0:
            raise CornerHitError("junction")
        return collision_map(table, x)

    monkeypatch.setattr(stats, "collision_map", corner_every_tenth)
    tau = observable("free-path", stadium)
    chain = correlation_chain(stadium, tau, tau, MapKind.full, None, np.random.SeedSequence(5), 90, 0)
    assert chain.restarts == 9
    assert chain.segment[-1] == 9

def test_constant_observable_has_zero_correlation(stadium):
    one = observable("constant", stadium)
    series = estimate_correlation(stadium, one, one, n_max=5, budget=400, seed=1)
    assert series.values == pytest.approx(np.zeros(6), abs=0.0)
    assert series.standard_errors == pytest.approx(np.zeros(6), abs=0.0)


def test_free_path_correlation(stadium):
    tau = observable("free-path", stadium)
    series = estimate_correlation(stadium, tau, tau, n_max=10, budget=2000, seed=2, chains=2)
    assert series.values[0] > 0
    assert series.cutoff is not None
    assert series.sample_size == 2000
    frame = series.to_frame()
    assert list(frame.columns) == ["lag", "correlation", "standard_error"]
    assert len(frame) == 11


def test_induced_map_correlation(flower):
    c = observable("cos-phi", flower)
    series = estimate_correlation(flower, c, c, MapKind.induced, n_max=5, budget=400, seed=3)
    assert series.map_kind == MapKind.induced
    assert series.values[0] > 0


def test_correlation_budget(stadium):
    one = observable("constant", stadium)
    with pytest.raises(InsufficientBudgetError):
        estimate_correlation(stadium, one, one, n_max=5, budget=100, seed=1)
    with pytest.raises(InsufficientBudgetError):
        estimate_correlation(stadium, one, one, n_max=300, budget=300, seed=1)


def _series(values):
    lags = np.arange(len(values))
    return CorrelationSeries(lags, np.asarray(values, dtype=float), np.full(len(values), 1e-9), 10 ** 6,
                             MapKind.full, "f", "f")


def test_decay_comparison_prefers_power_law():
    n = np.arange(0, 50)
    comparison = fit_correlation_decay(_series(np.maximum(n, 1.0) ** -1.5))
    assert comparison.preferred == "power-law"
    assert comparison.power_law.slope == pytest.approx(-1.5)
    assert comparison.window == (1, 49)


def test_decay_comparison_prefers_exponential():
    comparison = fit_correlation_decay(_series(np.exp(-0.3 * np.arange(0, 50))))
    assert comparison.preferred == "exponential"
    assert comparison.to_dict()["exponential_rate"] == pytest.approx(0.3)


def test_decay_needs_resolved_lags():
    with pytest.raises(WindowTooSmallError):
        fit_correlation_decay(_series([1.0, 0.5, 0.0, 0.0]))


##################################################################
# RETURN-TIME TAILS                                              #
##################################################################

def test_survival_curves_small_sample():
    m_curve, full_curve = survival_curves(np.array([1, 2, 3, 4]), np.zeros(4, dtype=bool), 100, 10)
    assert m_curve.n[0] == 0
    assert m_curve.survival[0] == 1.0
    assert full_curve.survival[0] == 1.0
    # P(R > 2) = 1/2 and E[(R - 2)+] / E[R] = 3 / 10
    index = list(m_curve.n).index(2)
    assert m_curve.survival[index] == pytest.approx(0.5)
    assert full_curve.survival[index] == pytest.approx(0.3)
    assert np.all(np.diff(m_curve.survival) <= 0)
    assert np.all(np.diff(full_curve.survival) <= 0)


def test_survival_grid_stays_below_r_max():
    R = np.array([1, 5, 50, 50])
    m_curve, _ = survival_curves(R, np.array([False, False, True, True]), 50, 10)
    assert m_curve.n.max() < 50
    assert m_curve.censored == 2


def test_power_law_fit_recovers_exponent():
    n = log_grid(10, 10 ** 4, 10)
    fit = fit_power_law(_curve(n, 0.5 * n ** -2.0))
    assert fit.exponent == pytest.approx(2.0)
    assert fit.amplitude == pytest.approx(0.5)
    assert fit.goodness == pytest.approx(1.0)
    assert fit.power_law


def test_log_corrected_tail_looks_shallower():
    n = log_grid(100, 10 ** 4, 10)
    fit = fit_power_law(_curve(n, n ** -2.0 * np.log(n) ** 2))
    assert fit.exponent == pytest.approx(1.70, abs=0.03)


def test_exponential_tail_is_not_a_power_law():
    n = log_grid(10, 200, 10)
    fit = fit_power_law(_curve(n, np.exp(-n / 10.0)), window=(10, 200))
    assert fit.goodness < 0.9
    assert not fit.power_law


def test_power_law_fit_needs_bins():
    n = np.array([10, 20, 30])
    with pytest.raises(WindowTooSmallError):
        fit_power_law(_curve(n, n ** -2.0))


def test_log_correction_check():
    n = log_grid(10, 10 ** 4, 10)
    curve = _curve(n, n ** -2.0 * np.log(n) ** 3)
    check = fit_tail_with_log_correction(curve, 2.0, (10, 10 ** 4))
    assert check.ratio_slope == pytest.approx(0.0, abs=1e-9)
    assert check.ratio_min == pytest.approx(1.0)


def test_tail_estimate(stadium):
    estimate = estimate_tail(stadium, SubsetSpec.for_table(stadium), 400, seed=4, r_max=5000)
    assert estimate.sample.size == 400
    assert estimate.m_curve.survival[0] == 1.0
    assert np.all(np.diff(estimate.m_curve.survival) <= 0)
    assert estimate.kac.mean_return == pytest.approx(estimate.sample.R.mean())


def test_tail_budget(stadium):
    with pytest.raises(InsufficientBudgetError):
        estimate_tail(stadium, SubsetSpec.for_table(stadium), 10, seed=4)


def _excursions(tails):
    # R = ceil(u^(-1/a)) on a quantile grid gives P(R > n) = n^-a at integer n
    kinds, R = [], []
    for kind, a, size in tails:
        u = (np.arange(size) + 0.5) / size
        R.append(np.ceil(u ** (-1.0 / a)).astype(np.int64) if a else np.ones(size, dtype=np.int64))
        kinds.append(np.full(size, kind, dtype=object))
    R, kinds = np.concatenate(R), np.concatenate(kinds)
    size = len(R)
    return ExcursionSample(np.zeros(size), np.zeros(size), R, np.zeros(size, dtype=np.int64), kinds,
                           np.zeros(size, dtype=np.int64), np.zeros(size, dtype=bool))


def test_tail_by_kind_finds_the_slow_component():
    sample = _excursions([("diametric", 2.0, 10 ** 5), ("sliding", 3.0, 10 ** 6), ("regular", 0, 1000)])
    tails = fit_tail_by_kind(sample, 10 ** 7)
    assert set(tails.curves) == {CellKind.diametric, CellKind.sliding}
    assert tails.fits[CellKind.diametric].exponent == pytest.approx(2.0, abs=0.05)
    assert tails.fits[CellKind.sliding].exponent == pytest.approx(3.0, abs=0.05)
    assert tails.leading[0] == CellKind.diametric

    m_curve, full_curve = survival_curves(sample.R, sample.censored, 10 ** 7)
    estimate = TailEstimate(m_curve, full_curve, None, sample, tails)
    source, leading = leading_tail_exponent(estimate)
    assert source == "diametric"
    assert leading.exponent == pytest.approx(2.0, abs=0.05)
    # the mixture steepens the joint curve at moderate n
    assert fit_power_law(m_curve).exponent > leading.exponent + 0.2


def test_leading_exponent_falls_back_to_the_whole_curve():
    sample = _excursions([("sliding", 2.0, 50), ("regular", 2.0, 10 ** 6)])
    tails = fit_tail_by_kind(sample, 10 ** 7)
    assert CellKind.sliding in tails.failures
    assert tails.leading is None
    m_curve, full_curve = survival_curves(sample.R, sample.censored, 10 ** 7)
    source, fit = leading_tail_exponent(TailEstimate(m_curve, full_curve, None, sample, tails))
    assert source == "all"
    assert fit.exponent == pytest.approx(2.0, abs=0.05)


##################################################################
# CELLS                                                          #
##################################################################

def test_cell_masses_sum_to_one(stadium):
    measures = estimate_cell_measures(stadium, SubsetSpec.for_table(stadium), 300, seed=6, r_max=5000)
    assert sum(m.mass for m in measures.masses.values()) == pytest.approx(1.0)
    assert sum(m.count for m in measures.masses.values()) == 300
    assert list(measures.to_frame().columns) == ["cell_kind", "n", "count", "mass", "error"]
    assert any(kind in (CellKind.flat_run_direct, CellKind.flat_run_indirect) for kind, _ in measures.masses)


def test_cell_measures_from_sample():
    kinds = np.array(["regular", "sliding", "sliding", "sliding"], dtype=object)
    sample = ExcursionSample(np.zeros(4), np.zeros(4), np.ones(4, dtype=np.int64), np.zeros(4, dtype=np.int64),
                             kinds, np.array([0, 3, 3, 4]), np.zeros(4, dtype=bool))
    measures = cell_measures_from(sample)
    assert measures.masses[(CellKind.sliding, 3)].mass == pytest.approx(0.5)
    assert measures.masses[(CellKind.regular, 0)].count == 1


def test_cell_scaling_fit():
    n = np.arange(3, 20)
    masses = {(CellKind.sliding, int(k)): CellMass(1000, 2.0 * k ** -3.0, 0.0) for k in n}
    masses[(CellKind.regular, 0)] = CellMass(10 ** 6, 0.5, 0.0)
    fit = fit_cell_scaling(CellMeasures(masses, 10 ** 6, None), CellKind.sliding)
    assert fit.exponent == pytest.approx(3.0)
    assert fit.amplitude == pytest.approx(2.0)
    with pytest.raises(WindowTooSmallError):
        fit_cell_scaling(CellMeasures(masses, 10 ** 6, None), CellKind.diametric)


##################################################################
# SANITY ORACLES                                                 #
##################################################################

def test_mean_free_path(stadium):
    estimate = mean_free_path(stadium, 4000, seed=8)
    assert estimate.analytic == pytest.approx(stadium.mean_free_path)
    assert abs(estimate.estimate - estimate.analytic) < 4 * estimate.standard_error
    assert estimate.chains == 400


def test_invariance(semidispersing):
    report = measure_invariance(semidispersing, 4000, seed=9)
    assert report.pushed + report.corner_hits == 4000
    assert report.r_pvalue > 1e-3
    assert report.phi_pvalue > 1e-3
    assert report.histogram["r_frequency"].sum() == pytest.approx(1.0)
