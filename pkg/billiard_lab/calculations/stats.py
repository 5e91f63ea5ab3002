##################################################################
# MONTE CARLO ESTIMATORS AND POWER-LAW FITS                      #
##################################################################
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Tuple

import numpy as np
import pandas as pd
from scipy import stats as scipy_stats

from billiard_lab.calculations.dynamics import PhasePoint, collision_map, sample_mu, sample_mu_batch
from billiard_lab.calculations.geometry import Table
from billiard_lab.calculations.induced import (ExcursionSample, KacCheck, SubsetSpec, kac_from, return_map,
                                               sample_excursions, sample_in_M)
from billiard_lab.calculations.math import (LineFit, bins_center, fit_line, histogram, log_grid,
                                            winsorize)
from billiard_lab.calculations.observables import Observable
from billiard_lab.utils.config import settings
from billiard_lab.utils.enums import CellKind, MapKind
from billiard_lab.utils.errors import CornerHitError, InsufficientBudgetError, WindowTooSmallError
from billiard_lab.utils.streams import partition, run_chunks, spawn_seeds

logger = logging.getLogger(__name__)


def require_budget(kind: str, value: int):
    """
    Raises InsufficientBudgetError if value is below the minimum budget of the experiment kind.
    """
    minimum = settings()["Budgets"][kind]
    if value < minimum:
        raise InsufficientBudgetError(f"{kind} needs a budget of at least {minimum}, got {value}")


##################################################################
# CORRELATIONS                                                   #
##################################################################

@dataclass
class CorrelationSeries:
    lags: np.ndarray
    values: np.ndarray
    standard_errors: np.ndarray
    sample_size: int
    map_kind: MapKind
    f: str
    g: str
    restarts: int = 0
    cutoff: Optional[float] = None

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"lag": self.lags, "correlation": self.values, "standard_error": self.standard_errors})

    def summary(self):
        return {
            "map_kind": self.map_kind.value,
            "f": self.f,
            "g": self.g,
            "sample_size": self.sample_size,
            "restarts": self.restarts,
            "winsorize_cutoff": self.cutoff,
            "c0": float(self.values[0]),
        }


class ObservedChain(NamedTuple):
    f: np.ndarray
    g: np.ndarray
    # segment id of every observation; corner hits and excluded grazing events close a segment
    segment: np.ndarray
    restarts: int


def _full_map_events(table: Table, rng: np.random.Generator, length: int, burn_in: int, exclude_grazing: bool):
    # yields (segment, restarts, event) triples of the collision map; an excluded grazing event closes the
    # segment, a corner hit also restarts the orbit from a fresh sample
    segment, restarts, produced = 0, 0, 0
    while produced < length:
        x, skip = sample_mu(table, rng), burn_in
        try:
            while produced < length:
                event = collision_map(table, x)
                x = event.point
                if skip > 0:
                    skip -= 1
                    continue
                if exclude_grazing and event.grazing:
                    segment += 1
                    continue
                produced += 1
                yield segment, restarts, event
        except CornerHitError:
            segment += 1
            restarts += 1


def _induced_map_events(table: Table, spec: SubsetSpec, rng: np.random.Generator, length: int, burn_in: int,
                        exclude_grazing: bool):
    # yields (segment, restarts, event) triples at the successive returns to M
    segment, restarts, produced = 0, 0, 0
    while produced < length:
        x, _ = sample_in_M(table, spec, rng)
        skip = burn_in
        while produced < length:
            record = return_map(table, spec, x)
            if record.truncated or record.censored:
                segment += 1
                restarts += 1
                break
            x = record.end
            if skip > 0:
                skip -= 1
                continue
            if exclude_grazing and record.end_event.grazing:
                segment += 1
                continue
            produced += 1
            yield segment, restarts, record.end_event


def correlation_chain(table: Table, f: Observable, g: Observable, map_kind: MapKind, spec: Optional[SubsetSpec],
                      seed: np.random.SeedSequence, length: int, burn_in: int) -> ObservedChain:
    rng = np.random.default_rng(seed)
    exclude = settings()["Classification"]["exclude_grazing"]
    if map_kind == MapKind.full:
        events = _full_map_events(table, rng, length, burn_in, exclude)
    else:
        events = _induced_map_events(table, spec, rng, length, burn_in, exclude)
    f_values, g_values, segments = np.empty(length), np.empty(length), np.empty(length, dtype=np.int64)
    restarts = 0
    for i, (segment, restarts, event) in enumerate(events):
        f_values[i], g_values[i], segments[i] = f(event), g(event), segment
    return ObservedChain(f_values, g_values, segments, restarts)


def lag_correlations(f: np.ndarray, g: np.ndarray, segment: np.ndarray, n_max: int,
                     batches: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Time-average estimator C_n = mean over pairs of f(x_{i+n}) g(x_i) - mean(f) mean(g),
    pairs taken within one segment, with batch-means standard errors.

    Returns
    -------
    Tuple[np.ndarray, np.ndarray]
        the estimates for lags 0..n_max and their standard errors.
    """
    size = len(f)
    batch = np.arange(size) * batches // size
    f_mean, g_mean = f.mean(), g.mean()
    batch_count = np.bincount(batch, minlength=batches).astype(float)
    f_batch = np.bincount(batch, weights=f, minlength=batches) / np.maximum(batch_count, 1)
    g_batch = np.bincount(batch, weights=g, minlength=batches) / np.maximum(batch_count, 1)

    values, errors = np.zeros(n_max + 1), np.zeros(n_max + 1)
    for n in range(n_max + 1):
        if n == 0:
            products, origin = f * g, batch
        else:
            same = segment[n:] == segment[:-n]
            products, origin = (f[n:] * g[:-n])[same], batch[:-n][same]
        if len(products) == 0:
            values[n], errors[n] = np.nan, np.nan
            continue
        values[n] = products.mean() - f_mean * g_mean
        counts = np.bincount(origin, minlength=batches).astype(float)
        sums = np.bincount(origin, weights=products, minlength=batches)
        valid = counts > 0
        per_batch = sums[valid] / counts[valid] - f_batch[valid] * g_batch[valid]
        errors[n] = per_batch.std(ddof=1) / math.sqrt(len(per_batch)) if len(per_batch) > 1 else np.nan
    return values, errors


def estimate_correlation(table: Table, f: Observable, g: Observable, map_kind: MapKind = MapKind.full,
                         n_max: Optional[int] = None, budget: int = 10 ** 4, seed: int = 0,
                         spec: Optional[SubsetSpec] = None, chains: int = 1, workers: int = 1,
                         deadline: Optional[float] = None) -> CorrelationSeries:
    """
    Correlation function C_n(f, g) of the collision map or of the induced map.

    Parameters
    ----------
    table
        the billiard table.
    f, g
        observables; C_n pairs f at time i + n with g at time i.
    map_kind
        full collision map or induced map (then `spec` is required).
    n_max
        largest lag.
    budget
        number of observations after burn-in, split among `chains` independent orbits.
    seed
        master seed.
    chains
        number of independent orbits, each started from a fresh mu (or mu|_M) sample.

    Returns
    -------
    CorrelationSeries
        estimates for lags 0..n_max with batch-means standard errors. Orbits that hit a
        corner restart from a fresh sample; restarts are counted. Heavy-tailed observables
        are winsorized at a high quantile and the cutoff is reported.

    Raises
    ------
    InsufficientBudgetError
        if the budget is below the configured minimum or does not cover n_max.
    """
    options = settings()["Correlation"]
    if n_max is None:
        n_max = options["n_max"]
    require_budget("correlation", budget)
    if map_kind == MapKind.induced and spec is None:
        spec = SubsetSpec.for_table(table)
    lengths = partition(budget, chains)
    if min(lengths) <= n_max + 1:
        raise InsufficientBudgetError(f"a chain of {min(lengths)} observations cannot cover lag {n_max}")

    seeds = spawn_seeds(seed, len(lengths))
    tasks = [(table, f, g, map_kind, spec, s, length, options["burn_in"]) for s, length in zip(seeds, lengths)]
    observed = run_chunks(correlation_chain, tasks, workers if chains > 1 else 1, "orbits", deadline)

    # chains are glued with distinct segment ids so no lag pair crosses a chain boundary
    offsets = np.cumsum([0] + [int(o.segment[-1]) + 1 for o in observed[:-1]])
    f_values = np.concatenate([o.f for o in observed])
    g_values = np.concatenate([o.g for o in observed])
    segment = np.concatenate([o.segment + offset for o, offset in zip(observed, offsets)])
    restarts = sum(o.restarts for o in observed)

    cutoff = None
    quantile = options["winsorize_quantile"]
    if f.heavy_tailed:
        f_values, cutoff = winsorize(f_values, quantile)
    if g.heavy_tailed:
        g_values, g_cutoff = winsorize(g_values, quantile)
        cutoff = g_cutoff if cutoff is None else max(cutoff, g_cutoff)

    values, errors = lag_correlations(f_values, g_values, segment, n_max, options["batches"])
    if restarts:
        logger.debug("%d orbit restarts after corner hits", restarts)
    return CorrelationSeries(np.arange(n_max + 1), values, errors, len(f_values), map_kind, f.id, g.id,
                             restarts, cutoff)


class DecayComparison(NamedTuple):
    power_law: LineFit
    exponential: LineFit
    window: Tuple[int, int]

    @property
    def preferred(self) -> str:
        return "power-law" if self.power_law.goodness >= self.exponential.goodness else "exponential"

    def to_dict(self):
        return {
            "window": list(self.window),
            "power_law_exponent": -self.power_law.slope,
            "power_law_goodness": self.power_law.goodness,
            "exponential_rate": -self.exponential.slope,
            "exponential_goodness": self.exponential.goodness,
            "preferred": self.preferred,
        }


def resolved_window(series: CorrelationSeries) -> Tuple[int, int]:
    """
    Lags from 1 up to the last lag of the initial run with |C_n| > 2 standard errors.
    """
    resolved = np.abs(series.values) > 2 * series.standard_errors
    hi = 0
    for n in range(1, len(series.lags)):
        if not resolved[n]:
            break
        hi = n
    return 1, hi


def fit_correlation_decay(series: CorrelationSeries, window: Optional[Tuple[int, int]] = None) -> DecayComparison:
    """
    Fits log|C_n| against log n (power law) and against n (exponential) over the window.

    Raises
    ------
    WindowTooSmallError
        if fewer than three lags of the window have a non-zero estimate.
    """
    lo, hi = window if window is not None else resolved_window(series)
    lags = series.lags[(series.lags >= max(lo, 1)) & (series.lags <= hi)]
    magnitude = np.abs(series.values[lags])
    lags, magnitude = lags[magnitude > 0], magnitude[magnitude > 0]
    if len(lags) < 3:
        raise WindowTooSmallError(f"only {len(lags)} resolved lags in [{lo}, {hi}]")
    y = np.log(magnitude)
    return DecayComparison(fit_line(np.log(lags), y), fit_line(lags.astype(float), y), (int(lo), int(hi)))


##################################################################
# RETURN-TIME TAILS                                              #
##################################################################

@dataclass
class SurvivalCurve:
    """
    Empirical tail of the return time.

    `kind` is "M" for P(R > n) under mu|_M and "full" for mu(x : R(x) > n) on the whole
    collision space. `at_risk` counts samples with R > n; grid points stay below r_max.
    """
    n: np.ndarray
    survival: np.ndarray
    at_risk: np.ndarray
    censored: int
    total: int
    r_max: int
    kind: str = "M"

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"n": self.n, "survival": self.survival, "at_risk": self.at_risk})


def survival_curves(R: np.ndarray, censored: np.ndarray, r_max: int,
                    points_per_decade: Optional[int] = None) -> Tuple[SurvivalCurve, SurvivalCurve]:
    """
    The M-restricted and the full-space survival curves of a sample of return times.
    Censored samples carry R = r_max and count as surviving below r_max.
    """
    if points_per_decade is None:
        points_per_decade = settings()["Fit"]["points_per_decade"]
    R = np.sort(np.asarray(R, dtype=np.int64))
    total = len(R)
    top = min(int(R.max()), r_max - 1)
    grid = np.concatenate([[0], log_grid(1, max(top, 1), points_per_decade)])
    grid = grid[grid < r_max]

    at_risk = total - np.searchsorted(R, grid, side="right")
    survival_m = at_risk / total

    # E[(R - n)+] from the tail sums of the sorted sample
    suffix = np.concatenate([np.cumsum(R[::-1])[::-1], [0]])
    first = np.searchsorted(R, grid, side="right")
    excess = suffix[first] - grid * (total - first)
    survival_full = excess / R.sum()

    n_censored = int(np.count_nonzero(censored))
    return (SurvivalCurve(grid, survival_m, at_risk, n_censored, total, r_max, "M"),
            SurvivalCurve(grid, survival_full, at_risk, n_censored, total, r_max, "full"))


@dataclass
class TailEstimate:
    m_curve: SurvivalCurve
    full_curve: SurvivalCurve
    kac: KacCheck
    sample: ExcursionSample = field(repr=False)
    by_kind: Optional["KindTails"] = field(default=None, repr=False)


def estimate_tail(table: Table, spec: SubsetSpec, samples: int, seed: int, r_max: Optional[int] = None,
                  workers: int = 1, deadline: Optional[float] = None) -> TailEstimate:
    """
    Survival function of the return time to M.

    Draws mu-samples, keeps those in M, runs the return map with right-censoring at r_max
    and accumulates both tail forms.

    Raises
    ------
    InsufficientBudgetError
        if `samples` is below the configured minimum.
    """
    require_budget("tail", samples)
    if r_max is None:
        r_max = settings()["Induced"]["r_max"]
    sample = sample_excursions(table, spec, samples, seed, r_max, workers, deadline)
    m_curve, full_curve = survival_curves(sample.R, sample.censored, r_max)
    return TailEstimate(m_curve, full_curve, kac_from(sample), sample, fit_tail_by_kind(sample, r_max))


@dataclass
class PowerLawFit:
    exponent: float
    amplitude: float
    window: Tuple[int, int]
    goodness: float
    exponent_se: float
    bins: int

    @property
    def power_law(self) -> bool:
        return self.goodness >= settings()["Fit"]["min_goodness"]

    def to_dict(self):
        return {
            "exponent": self.exponent,
            "exponent_se": self.exponent_se,
            "amplitude": self.amplitude,
            "window": list(self.window),
            "goodness": self.goodness,
            "bins": self.bins,
            "power_law": self.power_law,
        }


def _fit_log_log(n: np.ndarray, values: np.ndarray, weights: np.ndarray) -> PowerLawFit:
    line = fit_line(np.log(n), np.log(values), weights)
    return PowerLawFit(-line.slope, math.exp(line.intercept), (int(n[0]), int(n[-1])), line.goodness,
                       line.slope_se, len(n))


def fit_power_law(curve: SurvivalCurve, window: Optional[Tuple[int, int]] = None,
                  n_min: Optional[int] = None) -> PowerLawFit:
    """
    Weighted least squares fit of log S(n) against log n.

    Parameters
    ----------
    curve
        survival curve.
    window
        explicit [n_lo, n_hi]; by default the largest window with n >= n_min and at least
        min_count samples at risk. Grid points at or above r_max are never used.
    n_min
        lower end of the default window, Fit.n_min when omitted.

    Returns
    -------
    PowerLawFit
        exponent a of S(n) ~ n^-a with standard error, amplitude, window and goodness.

    Raises
    ------
    WindowTooSmallError
        if fewer than min_bins grid points qualify.
    """
    options = settings()["Fit"]
    usable = (curve.at_risk >= options["min_count"]) & (curve.survival > 0) & (curve.survival < 1) \
        & (curve.n < curve.r_max) & (curve.n >= 1)
    if window is None:
        usable &= curve.n >= (options["n_min"] if n_min is None else n_min)
    else:
        usable &= (curve.n >= window[0]) & (curve.n <= window[1])
    if np.count_nonzero(usable) < options["min_bins"]:
        raise WindowTooSmallError(f"{np.count_nonzero(usable)} usable bins, at least {options['min_bins']} needed")
    n, survival, at_risk = curve.n[usable], curve.survival[usable], curve.at_risk[usable]
    fit = _fit_log_log(n.astype(float), survival, at_risk / (1.0 - survival))
    logger.info("power-law fit of the %s tail on [%d, %d]: a = %.3f +- %.3f (r2 %.3f)", curve.kind, *fit.window,
                fit.exponent, fit.exponent_se, fit.goodness)
    return fit


@dataclass
class KindTails:
    """
    Survival curves P(R > n | cell kind) of the non-regular cell kinds with their power-law fits.

    Kinds whose curve has too few usable bins appear in `failures` with the reason.
    """
    curves: Dict[CellKind, SurvivalCurve]
    fits: Dict[CellKind, PowerLawFit]
    failures: Dict[CellKind, str]

    @property
    def leading(self) -> Optional[Tuple[CellKind, PowerLawFit]]:
        """
        The power-law kind with the smallest exponent, None if no kind fits a power law.
        """
        candidates = [(kind, fit) for kind, fit in self.fits.items() if fit.power_law]
        if not candidates:
            return None
        return min(candidates, key=lambda item: (item[1].exponent, item[0].value))

    def to_dict(self):
        return {
            "fits": {kind.value: fit.to_dict() for kind, fit in self.fits.items()},
            "failures": {kind.value: reason for kind, reason in self.failures.items()},
        }


def fit_tail_by_kind(sample: ExcursionSample, r_max: int) -> KindTails:
    """
    Splits the excursions by the kind of their cell and fits each conditional tail
    over n >= Fit.kind_n_min. Regular excursions are left out.
    """
    n_min = settings()["Fit"]["kind_n_min"]
    curves, fits, failures = {}, {}, {}
    for value in sorted({v for v in sample.cell_kind if v != CellKind.regular.value}):
        kind = CellKind(value)
        mask = sample.cell_kind == value
        curve = survival_curves(sample.R[mask], sample.censored[mask], r_max)[0]
        curve.kind = f"M|{value}"
        curves[kind] = curve
        try:
            fits[kind] = fit_power_law(curve, n_min=n_min)
        except WindowTooSmallError as e:
            failures[kind] = str(e)
    return KindTails(curves, fits, failures)


def leading_tail_exponent(estimate: TailEstimate) -> Tuple[str, PowerLawFit]:
    """
    Exponent of the slowest cell kind, or of the whole M-curve when no kind fits a power law.

    Returns
    -------
    (source, fit)
        source is the cell kind value or "all".

    Raises
    ------
    WindowTooSmallError
        if neither the kinds nor the whole curve can be fitted.
    """
    leading = estimate.by_kind.leading if estimate.by_kind is not None else None
    if leading is not None:
        kind, fit = leading
        logger.info("leading tail exponent %.3f from %s cells", fit.exponent, kind.value)
        return kind.value, fit
    return "all", fit_power_law(estimate.m_curve)


class LogCorrectionCheck(NamedTuple):
    """
    Ratio of the survival curve to the bound n^-a (ln n)^(a+1) over the fit window.
    A slope near zero means the bound form tracks the data.
    """
    exponent: float
    ratio_min: float
    ratio_max: float
    ratio_slope: float


def fit_tail_with_log_correction(curve: SurvivalCurve, a: float,
                                 window: Optional[Tuple[int, int]] = None) -> LogCorrectionCheck:
    if window is None:
        window = fit_power_law(curve).window
    usable = (curve.n >= max(window[0], 2)) & (curve.n <= window[1]) & (curve.survival > 0)
    if np.count_nonzero(usable) < 3:
        raise WindowTooSmallError("not enough points for the logarithmic correction check")
    n = curve.n[usable].astype(float)
    ratio = curve.survival[usable] / (n ** -a * np.log(n) ** (a + 1))
    slope = fit_line(np.log(n), np.log(ratio)).slope
    return LogCorrectionCheck(a, float(ratio.min()), float(ratio.max()), slope)


##################################################################
# CELL MEASURES                                                  #
##################################################################

class CellMass(NamedTuple):
    count: int
    mass: float
    error: float


@dataclass
class CellMeasures:
    """
    mu|_M-mass of every (cell kind, n) seen in a sample of excursions.
    """
    masses: Dict[Tuple[CellKind, int], CellMass]
    samples: int
    sample: ExcursionSample = field(repr=False)

    def to_frame(self) -> pd.DataFrame:
        rows = [{"cell_kind": kind.value, "n": n, "count": m.count, "mass": m.mass, "error": m.error}
                for (kind, n), m in sorted(self.masses.items(), key=lambda item: (item[0][0].value, item[0][1]))]
        return pd.DataFrame(rows, columns=["cell_kind", "n", "count", "mass", "error"])


def cell_measures_from(sample: ExcursionSample) -> CellMeasures:
    total = sample.size
    frame = pd.DataFrame({"kind": sample.cell_kind, "n": sample.cell_n})
    counts = frame.groupby(["kind", "n"]).size()
    masses = {}
    for (kind, n), count in counts.items():
        p = count / total
        masses[(CellKind(kind), int(n))] = CellMass(int(count), p, math.sqrt(p * (1 - p) / total))
    return CellMeasures(masses, total, sample)


def estimate_cell_measures(table: Table, spec: SubsetSpec, samples: int, seed: int, r_max: Optional[int] = None,
                           workers: int = 1, deadline: Optional[float] = None) -> CellMeasures:
    """
    Classifies mu|_M-sampled excursions and histograms their mass by cell kind and index.

    Raises
    ------
    InsufficientBudgetError
        if `samples` is below the configured minimum.
    """
    require_budget("cells", samples)
    return cell_measures_from(sample_excursions(table, spec, samples, seed, r_max, workers, deadline))


def fit_cell_scaling(measures: CellMeasures, kind: CellKind) -> PowerLawFit:
    """
    Power-law fit of the mass of the cells of one kind against their index n, over the
    indices n >= cell_n_min holding at least cell_min_count samples.

    Raises
    ------
    WindowTooSmallError
        if fewer than min_bins indices qualify.
    """
    options = settings()["Fit"]
    points = sorted((n, m) for (k, n), m in measures.masses.items()
                    if k == kind and n >= options["cell_n_min"] and m.count >= options["cell_min_count"])
    if len(points) < options["min_bins"]:
        raise WindowTooSmallError(f"{len(points)} usable {kind.value} cells, at least {options['min_bins']} needed")
    n = np.array([p[0] for p in points], dtype=float)
    mass = np.array([p[1].mass for p in points])
    counts = np.array([p[1].count for p in points], dtype=float)
    return _fit_log_log(n, mass, counts)


##################################################################
# SANITY ORACLES                                                 #
##################################################################

class MeanFreePath(NamedTuple):
    estimate: float
    standard_error: float
    analytic: float
    chains: int
    restarts: int

    @property
    def relative_error(self) -> float:
        return abs(self.estimate - self.analytic) / self.analytic

    def to_dict(self):
        return {**self._asdict(), "relative_error": self.relative_error}


def free_path_chunk(table: Table, seed: np.random.SeedSequence, chains: int, chain_length: int) -> Tuple[List[float], int]:
    rng = np.random.default_rng(seed)
    means, restarts = [], 0
    while len(means) < chains:
        x = sample_mu(table, rng)
        total = 0.0
        try:
            for _ in range(chain_length):
                event = collision_map(table, x)
                total += event.free_path
                x = event.point
        except CornerHitError:
            restarts += 1
            continue
        means.append(total / chain_length)
    return means, restarts


def mean_free_path(table: Table, samples: int, seed: int, workers: int = 1,
                   deadline: Optional[float] = None) -> MeanFreePath:
    """
    Ensemble average of the free path over short orbits started from mu, compared with
    pi * area / perimeter.
    """
    require_budget("mean_free_path", samples)
    chain_length = settings()["Parallel"]["chain_length"]
    sizes = partition(max(samples // chain_length, 2))
    seeds = spawn_seeds(seed, len(sizes))
    results = run_chunks(free_path_chunk, [(table, s, size, chain_length) for s, size in zip(seeds, sizes)],
                         workers, "free paths", deadline)
    means = np.concatenate([np.asarray(r[0]) for r in results])
    restarts = sum(r[1] for r in results)
    estimate = MeanFreePath(float(means.mean()), float(means.std(ddof=1) / math.sqrt(len(means))),
                            table.mean_free_path, len(means), restarts)
    logger.info("mean free path %.5f +- %.5f, analytic %.5f", estimate.estimate, estimate.standard_error,
                estimate.analytic)
    return estimate


@dataclass
class InvarianceReport:
    """
    Kolmogorov-Smirnov tests of the r and sin(phi) marginals of F pushed mu-samples
    against the uniform laws they have under mu.
    """
    r_statistic: float
    r_pvalue: float
    phi_statistic: float
    phi_pvalue: float
    pushed: int
    corner_hits: int
    histogram: pd.DataFrame = field(repr=False)

    def to_dict(self):
        return {
            "r_statistic": self.r_statistic,
            "r_pvalue": self.r_pvalue,
            "phi_statistic": self.phi_statistic,
            "phi_pvalue": self.phi_pvalue,
            "pushed": self.pushed,
            "corner_hits": self.corner_hits,
        }


def invariance_chunk(table: Table, seed: np.random.SeedSequence, size: int) -> Tuple[np.ndarray, np.ndarray, int]:
    rng = np.random.default_rng(seed)
    r, phi = sample_mu_batch(table, rng, size)
    u, v, corners = [], [], 0
    for r0, phi0 in zip(r, phi):
        try:
            event = collision_map(table, PhasePoint(float(r0), float(phi0)))
        except CornerHitError:
            corners += 1
            continue
        u.append(event.point.r / table.perimeter)
        v.append((1.0 + math.sin(event.point.phi)) / 2.0)
    return np.asarray(u), np.asarray(v), corners


def measure_invariance(table: Table, samples: int, seed: int, workers: int = 1, bins: int = 20,
                       deadline: Optional[float] = None) -> InvarianceReport:
    """
    Pushes mu-samples forward by one collision and tests the image against mu.
    """
    require_budget("invariance", samples)
    sizes = partition(samples)
    seeds = spawn_seeds(seed, len(sizes))
    results = run_chunks(invariance_chunk, [(table, s, size) for s, size in zip(seeds, sizes)], workers,
                         "invariance", deadline)
    u = np.concatenate([r[0] for r in results])
    v = np.concatenate([r[1] for r in results])
    corners = sum(r[2] for r in results)
    r_test = scipy_stats.kstest(u, "uniform")
    phi_test = scipy_stats.kstest(v, "uniform")
    edges, u_freq = histogram(u, bins, (0.0, 1.0))
    _, v_freq = histogram(v, bins, (0.0, 1.0))
    frame = pd.DataFrame({"bin": bins_center(edges), "r_frequency": u_freq, "sin_phi_frequency": v_freq})
    logger.info("invariance: KS(r) = %.4f (p %.3f), KS(sin phi) = %.4f (p %.3f)", r_test.statistic,
                r_test.pvalue, phi_test.statistic, phi_test.pvalue)
    return InvarianceReport(float(r_test.statistic), float(r_test.pvalue), float(phi_test.statistic),
                            float(phi_test.pvalue), len(u), corners, frame)
