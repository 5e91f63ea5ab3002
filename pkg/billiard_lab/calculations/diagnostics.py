##################################################################
# HYPERBOLICITY DIAGNOSTICS                                      #
##################################################################
"""
Numerical checks of the expansion estimates: homogeneity strips, one-step expansion sums
over short unstable curves, expansion trends per strip or cell index and the range of
cell indices a short unstable curve crosses.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from billiard_lab.calculations.dynamics import (PhasePoint, TangentVector, expansion_of, inverse_collision_map,
                                                unstable_direction)
from billiard_lab.calculations.geometry import Table
from billiard_lab.calculations.induced import (ReturnRecord, SubsetSpec, in_M, induced_tangent_map, return_map,
                                               sample_in_M)
from billiard_lab.calculations.math import fit_line
from billiard_lab.utils.config import settings
from billiard_lab.utils.enums import CellKind, CurvatureClass, Family, SubsetRule
from billiard_lab.utils.errors import (CurveSingularError, DynamicsError, InsufficientBudgetError,
                                       SpecCompatibilityError, WindowTooSmallError)
from billiard_lab.utils.streams import partition, run_chunks, spawn_seeds, stream

logger = logging.getLogger(__name__)

FLAT_RUN_KINDS = (CellKind.flat_run_direct, CellKind.flat_run_indirect)
RANGE_KINDS = FLAT_RUN_KINDS + (CellKind.diametric,)


def strip_index(phi: float, k0: Optional[int] = None) -> int:
    """
    Homogeneity strip of the angle phi.

    Strip k >= k0 holds the angles with k^-2 >= pi/2 - |phi| > (k+1)^-2; the sign follows
    phi. Angles farther than k0^-2 from grazing lie in the central strip 0.

    Examples
    --------
    >>> strip_index(math.pi / 2 - 1 / 150, 10)
    12
    """
    if k0 is None:
        k0 = settings()["Strips"]["k0"]
    distance = math.pi / 2 - abs(phi)
    if distance >= k0 ** -2:
        return 0
    k = int(math.floor(max(distance, np.finfo(float).tiny) ** -0.5))
    return k if phi > 0 else -k


##################################################################
# UNSTABLE CURVES                                                #
##################################################################

@dataclass
class UnstableCurveSample:
    """
    Straight piece of curve through `base` along `direction` (unit in the (r, phi) plane)
    of half-length `half_length`, sampled at equally spaced points.
    """
    base: PhasePoint
    direction: TangentVector
    half_length: float
    perimeter: float

    def points(self, resolution: int) -> List[PhasePoint]:
        t = np.linspace(-self.half_length, self.half_length, resolution)
        r = np.mod(self.base.r + t * self.direction.dr, self.perimeter)
        phi = self.base.phi + t * self.direction.dphi
        return [PhasePoint(float(a), float(b)) for a, b in zip(r, phi) if abs(b) < math.pi / 2]


def seed_curves(table: Table, spec: SubsetSpec, count: int, seed: int, kinds: Optional[Sequence[CellKind]] = None,
                n_min: Optional[int] = None, half_length: Optional[float] = None,
                max_attempts: Optional[int] = None) -> List[UnstableCurveSample]:
    """
    Short unstable curves through mu|_M points whose excursion falls into one of the given
    cell kinds with index at least n_min.

    Raises
    ------
    InsufficientBudgetError
        if no such point is found within max_attempts excursions.
    """
    options = settings()["Diagnostics"]
    n_min = options["seed_n_min"] if n_min is None else n_min
    half_length = options["half_length"] if half_length is None else half_length
    max_attempts = options["seed_attempts"] if max_attempts is None else max_attempts
    kinds = set(kinds) if kinds is not None else set(CellKind) - {CellKind.regular}
    rng = stream(seed)

    curves, attempts = [], 0
    while len(curves) < count and attempts < max_attempts:
        x, _ = sample_in_M(table, spec, rng)
        attempts += 1
        record = return_map(table, spec, x)
        if record.truncated or record.censored or record.cell.kind not in kinds or record.cell.n < n_min:
            continue
        try:
            direction = unstable_direction(table, x)
        except DynamicsError:
            continue
        if direction.dr == 0:
            continue
        curves.append(UnstableCurveSample(x, direction, half_length, table.perimeter))
    if not curves:
        raise InsufficientBudgetError(f"no seed in cells {sorted(k.value for k in kinds)} with n >= {n_min} "
                                      f"after {attempts} excursions")
    if len(curves) < count:
        logger.warning("only %d of %d curves seeded after %d excursions", len(curves), count, attempts)
    return curves


def accumulation_points(table: Table) -> List[PhasePoint]:
    """
    Points at phi = 0 on focusing arcs longer than a half circle whose diameter ends at an
    endpoint of the same arc. Diametric cells of unbounded index accumulate at them.

    Returns
    -------
    List[PhasePoint]
        two points per such arc: the antipode of its start and the antipode of its end.
    """
    points = []
    for component in table.components_of(CurvatureClass.focusing):
        shape = component.shape
        if not component.is_arc or shape.full_circle or shape.extent <= math.pi:
            continue
        for s in (math.pi * shape.radius, (shape.extent - math.pi) * shape.radius):
            points.append(PhasePoint(component.r_offset + s, 0.0))
    return points


def _diametric(table: Table, spec: SubsetSpec, x: PhasePoint) -> bool:
    try:
        prev = inverse_collision_map(table, x).point if spec.needs_prev else None
        if not in_M(table, spec, x, prev):
            return False
        record = return_map(table, spec, x)
    except DynamicsError:
        return False
    return not (record.truncated or record.censored) and record.cell.kind == CellKind.diametric


def _curve_through(table: Table, spec: SubsetSpec, q: PhasePoint, half_length: float,
                   shift: float) -> Optional[UnstableCurveSample]:
    # unstable direction next to q on the side where the diametric cells lie, curve through q
    step = 0.05 * half_length
    for phi in (step, -step):
        x = PhasePoint(q.r, phi)
        if not _diametric(table, spec, x):
            continue
        try:
            direction = unstable_direction(table, x)
        except DynamicsError:
            continue
        for sign in (1.0, -1.0):
            y = PhasePoint(q.r + sign * step * direction.dr, q.phi + sign * step * direction.dphi)
            if _diametric(table, spec, y):
                base = PhasePoint(q.r + sign * shift * direction.dr, q.phi + sign * shift * direction.dphi)
                return UnstableCurveSample(base, direction, half_length, table.perimeter)
    return None


def accumulation_curves(table: Table, spec: SubsetSpec, count: int, seed: int,
                        half_length: Optional[float] = None) -> List[UnstableCurveSample]:
    """
    Unstable curves passing through the accumulation points of diametric cells, taken in turn.

    Each curve is shifted along its direction by a random fraction in [0.5, 1) of the half
    length towards the diametric side, so it crosses a run of diametric cells of growing index.

    Raises
    ------
    SpecCompatibilityError
        if the table has no focusing arc longer than a half circle.
    InsufficientBudgetError
        if no curve could be placed.
    """
    half_length = settings()["Diagnostics"]["accumulation_half_length"] if half_length is None else half_length
    points = accumulation_points(table)
    if not points:
        raise SpecCompatibilityError("no focusing arc longer than a half circle")
    rng = stream(seed)
    curves = []
    for i in range(count):
        curve = _curve_through(table, spec, points[i % len(points)], half_length,
                               half_length * rng.uniform(0.5, 1.0))
        if curve is not None:
            curves.append(curve)
    if not curves:
        raise InsufficientBudgetError(f"no diametric side found at {len(points)} accumulation points")
    if len(curves) < count:
        logger.warning("only %d of %d curves placed at accumulation points", len(curves), count)
    return curves


##################################################################
# EXPANSION SUMS                                                 #
##################################################################

class PointEvaluation(NamedTuple):
    # continuity key (R, cell kind, cell n, end component, end strip), None on singular points
    key: Optional[Tuple]
    expansion: float
    record: Optional[ReturnRecord]


def evaluate_point(table: Table, spec: SubsetSpec, x: PhasePoint, direction: TangentVector, metric: str,
                   k0: int) -> PointEvaluation:
    """
    Runs the induced map at x and measures the expansion of `direction`.
    """
    try:
        prev = inverse_collision_map(table, x).point if spec.needs_prev else None
        if not in_M(table, spec, x, prev):
            return PointEvaluation(None, math.nan, None)
        record = return_map(table, spec, x, keep_events=True)
        if record.truncated or record.censored:
            return PointEvaluation(None, math.nan, record)
        matrix = induced_tangent_map(table, spec, record)
    except DynamicsError:
        return PointEvaluation(None, math.nan, None)
    start, end = record.events[0], record.events[-1]
    factor = expansion_of(matrix, direction, start.cos_phi, end.cos_phi, metric)
    key = (record.R, record.cell.kind, record.cell.n, record.end_component, strip_index(end.point.phi, k0))
    return PointEvaluation(key, factor, record)


class ComponentExpansion(NamedTuple):
    """
    One continuity component of the induced map on the curve. `expansion` is the minimum
    over its sample points, `expansion_p5` the 5th percentile.
    """
    kind: CellKind
    n: int
    R: int
    points: int
    expansion: float
    expansion_p5: float


@dataclass
class ExpansionSumReport:
    components: List[ComponentExpansion] = field(default_factory=list)
    truncation_index: int = 0
    divergent: bool = False
    under_resolved: bool = False
    refined_sum: Optional[float] = None
    resolution: int = 0

    @property
    def sum(self) -> float:
        return float(sum(1.0 / c.expansion for c in self.components))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([{"kind": c.kind.value, "n": c.n, "R": c.R, "points": c.points,
                              "expansion": c.expansion, "expansion_p5": c.expansion_p5}
                             for c in self.components],
                            columns=["kind", "n", "R", "points", "expansion", "expansion_p5"])

    def to_dict(self):
        return {
            "sum": self.sum,
            "components": len(self.components),
            "truncation_index": self.truncation_index,
            "divergent": self.divergent,
            "under_resolved": self.under_resolved,
            "refined_sum": self.refined_sum,
            "resolution": self.resolution,
        }


def continuity_components(evaluations: Sequence[PointEvaluation]) -> List[ComponentExpansion]:
    """
    Splits the sampled curve into maximal runs of points with the same continuity key.
    """
    components = []
    run: List[PointEvaluation] = []
    for evaluation in list(evaluations) + [PointEvaluation(None, math.nan, None)]:
        if run and evaluation.key != run[0].key:
            factors = np.array([e.expansion for e in run])
            R, kind, n = run[0].key[:3]
            components.append(ComponentExpansion(kind, n, R, len(run), float(factors.min()),
                                                 float(np.percentile(factors, 5))))
            run = []
        if evaluation.key is not None:
            run.append(evaluation)
    return components


def _expansion_by_index(components: Sequence[ComponentExpansion]) -> Dict[int, float]:
    by_n: Dict[int, float] = {}
    for c in components:
        if c.n >= 1:
            by_n[c.n] = min(by_n.get(c.n, math.inf), c.expansion)
    return by_n


def divergence_flag(components: Sequence[ComponentExpansion], refined: Sequence[ComponentExpansion]) -> bool:
    """
    Whether the partial sums over the cells crossed by a curve are still growing at truncation.

    Parameters
    ----------
    components
        components at the base resolution.
    refined
        components of the same curve at twice the resolution.

    Returns
    -------
    bool
        True when refining resolves at least divergence_growth times as many distinct
        cell indices, reaches beyond the largest index seen before, and the summands
        1/Lambda decay in n slower than n^-divergence_decay.
    """
    options = settings()["Diagnostics"]
    coarse, fine = _expansion_by_index(components), _expansion_by_index(refined)
    if len(coarse) < 3 or len(fine) < options["divergence_growth"] * len(coarse):
        return False
    if max(fine) <= max(coarse):
        return False
    keys = np.array(sorted(fine), dtype=float)
    decay = -fit_line(np.log(keys), np.log([1.0 / fine[k] for k in sorted(fine)])).slope
    return decay < options["divergence_decay"]


def expansion_sum(table: Table, spec: SubsetSpec, curve: UnstableCurveSample, resolution: Optional[int] = None,
                  metric: Optional[str] = None, refine: bool = True) -> ExpansionSumReport:
    """
    One-step expansion sum over the continuity components of the induced map on a curve.

    Parameters
    ----------
    table
        the billiard table.
    spec
        rule defining M.
    curve
        the unstable curve.
    resolution
        number of sample points.
    metric
        "p" or "euclidean".
    refine
        re-evaluate at twice the resolution, flag the report as under-resolved when the
        sum moves by more than the refinement tolerance and as divergent when the crossed
        cell indices keep growing (see `divergence_flag`).

    Returns
    -------
    ExpansionSumReport
        the components in curve order with their minimal expansion; sum of 1/Lambda_i.

    Raises
    ------
    CurveSingularError
        if no sample point of the curve has a regular excursion.
    """
    options = settings()["Diagnostics"]
    resolution = options["resolution"] if resolution is None else resolution
    metric = options["metric"] if metric is None else metric
    k0 = settings()["Strips"]["k0"]

    evaluations = [evaluate_point(table, spec, x, curve.direction, metric, k0) for x in curve.points(resolution)]
    components = continuity_components(evaluations)
    if not components:
        raise CurveSingularError(f"no regular point on the curve through {curve.base}")
    report = ExpansionSumReport(components, max(c.n for c in components), resolution=resolution)
    if refine:
        refined = expansion_sum(table, spec, curve, 2 * resolution, metric, refine=False)
        report.refined_sum = refined.sum
        report.divergent = divergence_flag(components, refined.components)
        if abs(refined.sum - report.sum) >= options["refinement_tolerance"] * report.sum or \
                len(refined.components) < len(components):
            report.under_resolved = True
            logger.warning("expansion sum under-resolved at %d points: %.4f -> %.4f", resolution, report.sum,
                           refined.sum)
    return report


def expansion_sum_chunk(table: Table, spec: SubsetSpec, curve: UnstableCurveSample, resolution: int,
                        metric: str) -> Optional[ExpansionSumReport]:
    try:
        return expansion_sum(table, spec, curve, resolution, metric)
    except CurveSingularError as e:
        logger.debug("%s", e)
        return None


def expansion_sums(table: Table, spec: SubsetSpec, curves: Sequence[UnstableCurveSample],
                   resolution: Optional[int] = None, metric: Optional[str] = None, workers: int = 1,
                   deadline: Optional[float] = None) -> List[Optional[ExpansionSumReport]]:
    """
    expansion_sum over independent curves; entirely singular curves give None.
    """
    options = settings()["Diagnostics"]
    resolution = options["resolution"] if resolution is None else resolution
    metric = options["metric"] if metric is None else metric
    tasks = [(table, spec, curve, resolution, metric) for curve in curves]
    return run_chunks(expansion_sum_chunk, tasks, workers, "curves", deadline)


##################################################################
# EXPANSION TRENDS                                               #
##################################################################

@dataclass
class TrendReport:
    """
    Minimum expansion per bin (strip index or cell index) with the log-log slope of the
    minima and, per cell kind, the median ratio of the minimum to n.
    """
    rows: pd.DataFrame
    slopes: Dict[str, float] = field(default_factory=dict)
    slope_errors: Dict[str, float] = field(default_factory=dict)
    ratios: Dict[str, float] = field(default_factory=dict)
    dropped: int = 0

    def to_dict(self):
        return {"slopes": self.slopes, "slope_errors": self.slope_errors, "ratios": self.ratios,
                "dropped_bins": self.dropped}


def _record_expansion(table: Table, spec: SubsetSpec, x: PhasePoint, metric: str) -> Optional[Tuple[ReturnRecord, float]]:
    try:
        record = return_map(table, spec, x, keep_events=True)
        if record.truncated or record.censored:
            return None
        direction = unstable_direction(table, x)
        if metric == "p" and direction.dr == 0:
            return None
        matrix = induced_tangent_map(table, spec, record)
    except DynamicsError:
        return None
    start, end = record.events[0], record.events[-1]
    return record, expansion_of(matrix, direction, start.cos_phi, end.cos_phi, metric)


def strip_trend_chunk(table: Table, spec: SubsetSpec, seed: np.random.SeedSequence, size: int, k0: int,
                      metric: str) -> List[Tuple[int, float]]:
    rng = np.random.default_rng(seed)
    rows = []
    for _ in range(size):
        x, _ = sample_in_M(table, spec, rng)
        result = _record_expansion(table, spec, x, metric)
        if result is not None:
            record, factor = result
            rows.append((abs(strip_index(record.end.phi, k0)), factor))
    return rows


def sample_near_grazing(table: Table, spec: SubsetSpec, rng: np.random.Generator, n_range: Tuple[int, int],
                        max_attempts: Optional[int] = None) -> PhasePoint:
    """
    Start points of sliding runs on the focusing arcs with a log-uniform target length in n_range.

    The angle is 1/(2n) of the arc extent away from grazing and the position lies within one
    bounce of the arc end the run starts from. Only points in M are returned; the law is not
    mu|_M, which leaves per-bin minima unaffected.

    Raises
    ------
    SpecCompatibilityError
        if the table has no focusing arc.
    InsufficientBudgetError
        if no point in M is drawn within max_attempts.
    """
    arcs = [c for c in table.components_of(CurvatureClass.focusing) if c.is_arc and not c.shape.full_circle]
    if not arcs:
        raise SpecCompatibilityError("near-grazing sampling needs a focusing arc")
    if max_attempts is None:
        max_attempts = settings()["Diagnostics"]["seed_attempts"]
    weights = np.array([c.length for c in arcs])
    weights /= weights.sum()
    low, high = math.log(n_range[0]), math.log(n_range[1])
    for _ in range(max_attempts):
        arc = arcs[rng.choice(len(arcs), p=weights)]
        gap = arc.shape.extent / (2.0 * math.exp(rng.uniform(low, high)))
        offset = rng.uniform(0.0, min(2.0 * gap * arc.shape.radius, arc.length))
        forward = rng.random() < 0.5
        s = offset if forward else arc.length - offset
        x = PhasePoint(arc.r_offset + s, (math.pi / 2 - gap) * (1.0 if forward else -1.0))
        try:
            prev = inverse_collision_map(table, x).point if spec.needs_prev else None
            if in_M(table, spec, x, prev):
                return x
        except DynamicsError:
            continue
    raise InsufficientBudgetError(f"no near-grazing point in M after {max_attempts} attempts")


def cell_trend_chunk(table: Table, spec: SubsetSpec, seed: np.random.SeedSequence, size: int,
                     metric: str, n_range: Optional[Tuple[int, int]] = None) -> List[Tuple[str, int, float]]:
    rng = np.random.default_rng(seed)
    rows = []
    for _ in range(size):
        if n_range is None:
            x, _ = sample_in_M(table, spec, rng)
        else:
            x = sample_near_grazing(table, spec, rng, n_range)
        result = _record_expansion(table, spec, x, metric)
        if result is not None and result[0].cell.kind != CellKind.regular:
            record, factor = result
            rows.append((record.cell.kind.value, record.cell.n, factor))
    return rows


def _chunk_tasks(samples: int, seed: int, *args) -> List[tuple]:
    sizes = partition(samples)
    return [(s, size, *args) for s, size in zip(spawn_seeds(seed, len(sizes)), sizes)]


def _slope(x: np.ndarray, y: np.ndarray) -> Tuple[float, float]:
    if len(x) < 3:
        raise WindowTooSmallError(f"{len(x)} bins, at least 3 needed for a trend")
    line = fit_line(np.log(x), np.log(y))
    return line.slope, line.slope_se


def strip_expansion_trend(table: Table, samples: int, seed: int, k0: Optional[int] = None,
                          metric: Optional[str] = None, workers: int = 1,
                          deadline: Optional[float] = None) -> TrendReport:
    """
    Induced-map expansion of the unstable direction binned by the homogeneity strip of the
    landing point, for semi-dispersing tables.

    Bins with fewer than min_bin_samples samples are dropped; the slope is fitted over the
    bins k >= 1.

    Raises
    ------
    SpecCompatibilityError
        if the table is not semi-dispersing.
    """
    if table.family != Family.semi_dispersing:
        raise SpecCompatibilityError("strip expansion trends need a semi-dispersing table")
    options = settings()["Strips"]
    k0 = options["trend_k0"] if k0 is None else k0
    metric = settings()["Diagnostics"]["trend_metric"] if metric is None else metric
    spec = SubsetSpec(SubsetRule.scatterer, table.family)
    chunks = run_chunks(strip_trend_chunk, [(table, spec, *t) for t in _chunk_tasks(samples, seed, k0, metric)],
                        workers, "strips", deadline)
    frame = pd.DataFrame([row for chunk in chunks for row in chunk], columns=["k", "expansion"])
    grouped = frame.groupby("k")["expansion"].agg(["min", "count"]).reset_index()
    grouped.columns = ["k", "min_expansion", "count"]
    kept = grouped[grouped["count"] >= options["min_bin_samples"]]
    dropped = len(grouped) - len(kept)
    if dropped:
        logger.warning("%d strip bins with fewer than %d samples dropped", dropped, options["min_bin_samples"])
    report = TrendReport(kept.reset_index(drop=True), dropped=dropped)
    deep = kept[kept["k"] >= 1]
    try:
        report.slopes["strip"], report.slope_errors["strip"] = _slope(deep["k"].to_numpy(float),
                                                                      deep["min_expansion"].to_numpy(float))
    except WindowTooSmallError as e:
        logger.warning("strip trend: %s", e)
    return report


def cell_expansion_trend(table: Table, spec: SubsetSpec, samples: int, seed: int, metric: Optional[str] = None,
                         near_grazing: bool = False, workers: int = 1,
                         deadline: Optional[float] = None) -> TrendReport:
    """
    Induced-map expansion of the unstable direction per (cell kind, n).

    Parameters
    ----------
    table
        the billiard table.
    spec
        rule defining M.
    samples
        number of start points.
    seed
        master seed.
    metric
        "p" or "euclidean".
    near_grazing
        draw the start points with `sample_near_grazing` over [cell_n_min, trend_n_max]
        instead of from mu|_M, so long sliding runs get comparable sample counts.

    Returns
    -------
    TrendReport
        rows (kind, n, min_expansion, trend_expansion, count). `trend_expansion` is the minimum
        over the first min_bin_samples draws of the bin. The slope per kind is fitted to it over
        the bins with n >= trend_n_min and at least min_bin_samples draws; the ratio per kind is
        the median of min_expansion / n over n >= cell_n_min.
    """
    options = settings()["Diagnostics"]
    metric = options["metric"] if metric is None else metric
    n_min = settings()["Fit"]["cell_n_min"]
    draws = settings()["Strips"]["min_bin_samples"]
    n_range = (n_min, options["trend_n_max"]) if near_grazing else None
    chunks = run_chunks(cell_trend_chunk, [(table, spec, *t) for t in _chunk_tasks(samples, seed, metric, n_range)],
                        workers, "cells", deadline)
    frame = pd.DataFrame([row for chunk in chunks for row in chunk], columns=["kind", "n", "expansion"])
    by_bin = frame.groupby(["kind", "n"])["expansion"]
    grouped = by_bin.agg(["min", "count"]).reset_index()
    grouped.columns = ["kind", "n", "min_expansion", "count"]
    grouped["trend_expansion"] = frame.groupby(["kind", "n"]).head(draws) \
        .groupby(["kind", "n"])["expansion"].min().to_numpy()
    grouped = grouped[["kind", "n", "min_expansion", "trend_expansion", "count"]]
    report = TrendReport(grouped)
    for kind, rows in grouped.groupby("kind"):
        rows = rows[rows["n"] >= n_min]
        if rows.empty:
            continue
        report.ratios[kind] = float((rows["min_expansion"] / rows["n"]).median())
        deep = rows[(rows["n"] >= options["trend_n_min"]) & (rows["count"] >= draws)]
        report.dropped += int(((rows["n"] >= options["trend_n_min"]) & (rows["count"] < draws)).sum())
        try:
            report.slopes[kind], report.slope_errors[kind] = _slope(deep["n"].to_numpy(float),
                                                                    deep["trend_expansion"].to_numpy(float))
        except WindowTooSmallError as e:
            logger.debug("cell trend %s: %s", kind, e)
    return report


##################################################################
# CELL RANGE                                                     #
##################################################################

@dataclass
class CellRange:
    """
    Smallest and largest index of the flat-run or diametric cells crossed by each curve.
    """
    rows: pd.DataFrame

    @property
    def ratios(self) -> np.ndarray:
        n_min = settings()["Diagnostics"]["range_n_min"]
        rows = self.rows[self.rows["n1"] >= n_min]
        return (rows["n2"] / rows["n1"]).to_numpy(float)

    def to_dict(self):
        ratios = self.ratios
        return {"curves": len(self.rows), "measured": len(ratios),
                "max_ratio": float(ratios.max()) if len(ratios) else None}


def crossed_range(components: Iterable[ComponentExpansion]) -> Optional[Tuple[int, int]]:
    indices = [c.n for c in components if c.kind in RANGE_KINDS]
    if not indices:
        return None
    return min(indices), max(indices)


def range_chunk(table: Table, spec: SubsetSpec, curve: UnstableCurveSample, resolution: int,
                k0: int) -> Optional[Tuple[int, int]]:
    evaluations = [evaluate_point(table, spec, x, curve.direction, "euclidean", k0) for x in curve.points(resolution)]
    return crossed_range(continuity_components(evaluations))


def cell_range_probe(table: Table, spec: SubsetSpec, curves: Sequence[UnstableCurveSample],
                     resolution: Optional[int] = None, workers: int = 1,
                     deadline: Optional[float] = None) -> CellRange:
    """
    For each curve, the range [n1, n2] of flat-run or diametric cell indices it crosses.

    Raises
    ------
    SpecCompatibilityError
        if the table is neither a stadium nor a drive-belt.
    """
    if table.family not in (Family.straight_stadium, Family.drive_belt, Family.truncated_stadium):
        raise SpecCompatibilityError("the cell range needs a stadium or drive-belt table")
    resolution = settings()["Diagnostics"]["resolution"] if resolution is None else resolution
    k0 = settings()["Strips"]["k0"]
    ranges = run_chunks(range_chunk, [(table, spec, curve, resolution, k0) for curve in curves], workers,
                        "ranges", deadline)
    rows = [{"curve": i, "n1": r[0], "n2": r[1]} for i, r in enumerate(ranges) if r is not None]
    return CellRange(pd.DataFrame(rows, columns=["curve", "n1", "n2"]))
