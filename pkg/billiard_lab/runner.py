##################################################################
# EXPERIMENT RUNNER                                              #
##################################################################
"""
Binds an ExperimentConfig to the calculations: builds the table, runs the experiment and
writes summary.json, CSV series and gnuplot scripts into the output directory.
"""
import json
import logging
import math
import os
import tempfile
import time
from typing import Any, Callable, Dict, List, Optional

import pandas as pd

from billiard_lab import __version__
from billiard_lab.calculations.diagnostics import (FLAT_RUN_KINDS, RANGE_KINDS, accumulation_curves,
                                                   accumulation_points, cell_expansion_trend, cell_range_probe,
                                                   expansion_sums, seed_curves, strip_expansion_trend)
from billiard_lab.calculations.dynamics import PhasePoint, orbit, sample_mu
from billiard_lab.calculations.geometry import Table
from billiard_lab.calculations.induced import SubsetSpec
from billiard_lab.calculations.observables import observable
from billiard_lab.calculations.stats import (estimate_cell_measures, estimate_correlation, estimate_tail,
                                             fit_cell_scaling, fit_correlation_decay, fit_power_law,
                                             fit_tail_with_log_correction, leading_tail_exponent, mean_free_path,
                                             measure_invariance)
from billiard_lab.calculations.validation import ValidationReport, validate
from billiard_lab.utils.config import ExperimentConfig, parse_enum, settings
from billiard_lab.utils.enums import CellKind, ExperimentKind, Family, MapKind, SubsetRule
from billiard_lab.utils.errors import ConfigError, InsufficientBudgetError, LabError, ReproductionMismatch, \
    ValidationError, WindowTooSmallError
from billiard_lab.utils.output import RunOutput, write_error
from billiard_lab.utils.streams import stream
from billiard_lab.utils.tables import load_table

logger = logging.getLogger(__name__)

# An experiment writes its series into the run output and returns the results for summary.json
Experiment = Callable[[ExperimentConfig, Table, RunOutput, Optional[float]], Dict[str, Any]]


def _spec(config: ExperimentConfig, table: Table) -> SubsetSpec:
    rule = parse_enum(SubsetRule, config.rule, "subset rule") if config.rule else None
    return SubsetSpec.for_table(table, rule)


def _budget(value: Optional[int], kind: str) -> int:
    return int(value) if value is not None else int(settings()["Budgets"][kind])


def require_valid(table: Table) -> ValidationReport:
    """
    Validates the table; a flower built as pathological may violate the half-circle rule.

    Raises
    ------
    ValidationError
        on the first remaining violation.
    """
    report = validate(table)
    for rule, message in report.warnings:
        logger.warning("%s: %s", rule, message)
    pathological = table.parameters.get("pathological", False)
    for rule, message in report.violations:
        if pathological and rule == "half-circle":
            continue
        raise ValidationError(message, rule, report.to_dict())
    return report


def _try_fit(fit: Callable[[], Any]) -> Dict[str, Any]:
    try:
        return fit().to_dict()
    except WindowTooSmallError as e:
        logger.warning("fit skipped: %s", e)
        return {"error": e.code, "message": e.message}


##################################################################
# EXPERIMENTS                                                    #
##################################################################

def validate_experiment(config: ExperimentConfig, table: Table, output: RunOutput,
                        deadline: Optional[float]) -> Dict[str, Any]:
    report = validate(table)
    for rule, message in report.warnings:
        logger.warning("%s: %s", rule, message)
    if not report.passed:
        rule, message = report.violations[0]
        raise ValidationError(message, rule, report.to_dict())
    logger.info("table passes the %s hypotheses", table.family.value)
    return {"table": table.summary(), "validation": report.to_dict()}


def _start_point(config: ExperimentConfig, table: Table) -> PhasePoint:
    if config.start is None:
        return sample_mu(table, stream(config.seed))
    try:
        r, phi = (float(v) for v in config.start.split(","))
    except ValueError:
        raise ConfigError(f"start point {config.start} is not of the form r,phi")
    if abs(phi) > math.pi / 2:
        raise ConfigError(f"start angle {phi} outside [-pi/2, pi/2]")
    return PhasePoint(r % table.perimeter, phi)


def orbit_experiment(config: ExperimentConfig, table: Table, output: RunOutput,
                     deadline: Optional[float]) -> Dict[str, Any]:
    rows: List[Dict[str, Any]] = []

    def record(event):
        rows.append({
            "step": len(rows),
            "r": event.point.r,
            "phi": event.point.phi,
            "x": event.position[0],
            "y": event.position[1],
            "tau": event.free_path,
            "component_id": event.component_id,
            "flags": int(event.grazing) | 2 * int(event.corner),
        })

    x0 = _start_point(config, table)
    summary = orbit(table, x0, config.collisions, record)
    name = "orbit.csv"
    output.write_csv(name, pd.DataFrame(rows, columns=["step", "r", "phi", "x", "y", "tau", "component_id", "flags"]))
    output.write_gnuplot(name, "step", "phi", "reflection angle along the orbit", log_log=False)
    return {"table": table.summary(), "start": list(x0), "orbit": summary.to_dict()}


def correlation_experiment(config: ExperimentConfig, table: Table, output: RunOutput,
                           deadline: Optional[float]) -> Dict[str, Any]:
    f = observable(config.f, table)
    g = observable(config.g or config.f, table)
    spec = _spec(config, table) if config.map_kind == MapKind.induced else None
    if spec is not None:
        require_valid(table)
    series = estimate_correlation(table, f, g, config.map_kind, config.n_max, _budget(config.samples, "correlation"),
                                  config.seed, spec, config.chains, config.workers, deadline)
    name = "correlation.csv"
    output.write_csv(name, series.to_frame())
    output.write_gnuplot(name, "lag", "correlation", f"|C_n({f.id}, {g.id})|, {config.map_kind.value} map")
    results = {"table": table.summary(), "correlation": series.summary()}
    results["decay"] = _try_fit(lambda: fit_correlation_decay(series))
    return results


def tail_experiment(config: ExperimentConfig, table: Table, output: RunOutput,
                    deadline: Optional[float]) -> Dict[str, Any]:
    require_valid(table)
    spec = _spec(config, table)
    estimate = estimate_tail(table, spec, _budget(config.samples, "tail"), config.seed, config.r_max,
                             config.workers, deadline)
    m_curve, full_curve = estimate.m_curve, estimate.full_curve
    name = "tail.csv"
    output.write_csv(name, pd.DataFrame({"n": m_curve.n, "survival_M": m_curve.survival,
                                         "survival_full": full_curve.survival, "at_risk": m_curve.at_risk}))
    output.write_gnuplot(name, "n", "survival_M", f"P(R > n) on M, rule {spec.rule.value}")
    output.write_csv("returns.csv", estimate.sample.to_frame())

    results = {
        "table": table.summary(),
        "rule": spec.rule.value,
        "samples": estimate.sample.size,
        "censored": m_curve.censored,
        "truncated": estimate.sample.truncated,
        "kac": estimate.kac.to_dict(),
        "fit_M": _try_fit(lambda: fit_power_law(m_curve)),
        "fit_full": _try_fit(lambda: fit_power_law(full_curve)),
        "by_kind": estimate.by_kind.to_dict(),
    }
    try:
        source, leading = leading_tail_exponent(estimate)
        results["leading"] = {"source": source, **leading.to_dict()}
    except WindowTooSmallError as e:
        logger.warning("no leading tail exponent: %s", e)
        results["leading"] = {"error": e.code, "message": e.message}
    if "exponent" in results["fit_full"]:
        check = fit_tail_with_log_correction(full_curve, results["fit_full"]["exponent"],
                                             tuple(results["fit_full"]["window"]))
        results["log_correction"] = check._asdict()
    return results


def cells_experiment(config: ExperimentConfig, table: Table, output: RunOutput,
                     deadline: Optional[float]) -> Dict[str, Any]:
    require_valid(table)
    spec = _spec(config, table)
    measures = estimate_cell_measures(table, spec, _budget(config.samples, "cells"), config.seed, config.r_max,
                                      config.workers, deadline)
    name = "cells.csv"
    frame = measures.to_frame()
    output.write_csv(name, frame)
    output.write_gnuplot(name, "n", "mass", "cell mass against cell index")
    kinds = sorted({kind for kind, _ in measures.masses if kind != CellKind.regular}, key=lambda k: k.value)
    return {
        "table": table.summary(),
        "rule": spec.rule.value,
        "samples": measures.samples,
        "fits": {kind.value: _try_fit(lambda kind=kind: fit_cell_scaling(measures, kind)) for kind in kinds},
    }


# cell kinds whose curves are seeded for the expansion sums
diagnostic_kinds: Dict[Family, tuple] = {
    Family.straight_stadium: FLAT_RUN_KINDS,
    Family.truncated_stadium: FLAT_RUN_KINDS,
    Family.drive_belt: RANGE_KINDS,
    Family.flower: (CellKind.sliding, CellKind.diametric),
    Family.semi_dispersing: (CellKind.ih_escape,),
}


def diagnostics_experiment(config: ExperimentConfig, table: Table, output: RunOutput,
                           deadline: Optional[float]) -> Dict[str, Any]:
    require_valid(table)
    spec = _spec(config, table)
    options = settings()["Diagnostics"]
    count = config.curves or options["curves"]
    resolution = config.resolution or options["resolution"]
    samples = _budget(config.samples, "diagnostics")

    curves = seed_curves(table, spec, count, config.seed, diagnostic_kinds[table.family])
    origins = ["cells"] * len(curves)
    if table.family == Family.flower and accumulation_points(table):
        accumulating = accumulation_curves(table, spec, count, config.seed)
        curves, origins = curves + accumulating, origins + ["accumulation"] * len(accumulating)
    reports = expansion_sums(table, spec, curves, resolution, workers=config.workers, deadline=deadline)
    rows = []
    for i, (curve, origin, report) in enumerate(zip(curves, origins, reports)):
        row = {"curve": i, "origin": origin, "base_r": curve.base.r, "base_phi": curve.base.phi}
        if report is not None:
            row.update(report.to_dict())
        rows.append(row)
    frame = pd.DataFrame(rows, columns=["curve", "origin", "base_r", "base_phi", "sum", "components",
                                        "truncation_index", "divergent", "under_resolved", "refined_sum",
                                        "resolution"])
    output.write_csv("expansion_sums.csv", frame)
    valid = [r for r in reports if r is not None]
    results: Dict[str, Any] = {
        "table": table.summary(),
        "rule": spec.rule.value,
        "curves": len(curves),
        "singular_curves": len(reports) - len(valid),
        "max_sum": max((r.sum for r in valid), default=None),
        "divergent_curves": sum(r.divergent for r in valid),
        "under_resolved_curves": sum(r.under_resolved for r in valid),
    }

    if table.family == Family.semi_dispersing:
        trend = strip_expansion_trend(table, samples, config.seed, workers=config.workers, deadline=deadline)
        output.write_csv("strip_trend.csv", trend.rows)
        output.write_gnuplot("strip_trend.csv", "k", "min_expansion", "minimal expansion per homogeneity strip")
    else:
        trend = cell_expansion_trend(table, spec, samples, config.seed, near_grazing=table.family == Family.flower,
                                     workers=config.workers, deadline=deadline)
        output.write_csv("cell_trend.csv", trend.rows)
        output.write_gnuplot("cell_trend.csv", "n", "min_expansion", "minimal induced expansion per cell index")
    results["trend"] = trend.to_dict()

    if table.family in (Family.straight_stadium, Family.drive_belt, Family.truncated_stadium):
        try:
            range_curves = seed_curves(table, spec, count, config.seed, diagnostic_kinds[table.family],
                                       n_min=options["range_n_min"])
        except InsufficientBudgetError as e:
            logger.warning("cell range skipped: %s", e)
            results["cell_range"] = {"error": e.code, "message": e.message}
            return results
        cell_range = cell_range_probe(table, spec, range_curves, resolution, config.workers, deadline)
        output.write_csv("cell_range.csv", cell_range.rows)
        results["cell_range"] = cell_range.to_dict()
    return results


def mfp_experiment(config: ExperimentConfig, table: Table, output: RunOutput,
                   deadline: Optional[float]) -> Dict[str, Any]:
    estimate = mean_free_path(table, _budget(config.samples, "mean_free_path"), config.seed, config.workers,
                              deadline)
    output.write_csv("mfp.csv", pd.DataFrame([estimate.to_dict()]))
    return {"table": table.summary(), "mean_free_path": estimate.to_dict()}


def invariance_experiment(config: ExperimentConfig, table: Table, output: RunOutput,
                          deadline: Optional[float]) -> Dict[str, Any]:
    report = measure_invariance(table, _budget(config.samples, "invariance"), config.seed, config.workers,
                                deadline=deadline)
    name = "invariance.csv"
    output.write_csv(name, report.histogram)
    output.write_gnuplot(name, "bin", "r_frequency", "marginal of r / |boundary| after one collision",
                         log_log=False)
    return {"table": table.summary(), "invariance": report.to_dict()}


supported_experiments: Dict[ExperimentKind, Experiment] = {
    ExperimentKind.validate: validate_experiment,
    ExperimentKind.orbit: orbit_experiment,
    ExperimentKind.correlation: correlation_experiment,
    ExperimentKind.tail: tail_experiment,
    ExperimentKind.cells: cells_experiment,
    ExperimentKind.diagnostics: diagnostics_experiment,
    ExperimentKind.mean_free_path: mfp_experiment,
    ExperimentKind.invariance: invariance_experiment,
}


##################################################################
# RUN AND REPRODUCE                                              #
##################################################################

def run(config: ExperimentConfig) -> int:
    """
    Executes the experiment of the config.

    Parameters
    ----------
    config
        validated experiment config.

    Returns
    -------
    int
        0 on success. On a LabError, error.json is written into the output directory and
        the error's exit code is returned.
    """
    started = time.monotonic()
    deadline = started + config.timeout if config.timeout else None
    logger.info("%s experiment, table %s, seed %d", config.experiment.value, config.table, config.seed)
    try:
        table, definition = load_table(config.table, check=config.experiment != ExperimentKind.validate)
        config.table_definition = definition
        output = RunOutput(config.out, __version__, config.config_hash(), config.seed, config.plot)
        results = supported_experiments[config.experiment](config, table, output, deadline)
        output.write_summary(config.to_dict(), results)
    except LabError as e:
        logger.error("%s failed: %s", config.experiment.value, e.message)
        write_error(config.out, e.to_dict())
        return e.exit_code
    logger.info("%s finished in %.1fs, results in %s", config.experiment.value, time.monotonic() - started,
                config.out)
    return 0


def first_difference(expected: str, actual: str) -> Optional[int]:
    """
    1-based number of the first line that differs between two files, None if identical.
    """
    with open(expected, "rb") as f:
        left = f.read().split(b"\n")
    with open(actual, "rb") as f:
        right = f.read().split(b"\n")
    for row, (a, b) in enumerate(zip(left, right), start=1):
        if a != b:
            return row
    if len(left) != len(right):
        return min(len(left), len(right)) + 1
    return None


def reproduce(summary_path: str, workers: Optional[int] = None) -> int:
    """
    Re-runs the experiment of a summary.json into a temporary directory and compares every
    CSV output byte by byte with the files next to the summary.

    Raises
    ------
    ConfigError
        if the summary or one of its outputs is missing.
    ReproductionMismatch
        on the first differing CSV, with file name and row.
    """
    try:
        with open(summary_path, "r", encoding="UTF-8") as f:
            summary = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read summary {summary_path}: {e}")
    directory = os.path.dirname(os.path.abspath(summary_path))
    csv_files = [o["file"] for o in summary.get("outputs", []) if o["file"].endswith(".csv")]
    for name in csv_files:
        if not os.path.isfile(os.path.join(directory, name)):
            raise ConfigError(f"output {name} of {summary_path} is missing")

    with tempfile.TemporaryDirectory() as scratch:
        dic = dict(summary["config"])
        dic["out"] = scratch
        if workers is not None:
            dic["workers"] = workers
        config = ExperimentConfig.from_dict(dic)
        status = run(config)
        if status != 0:
            raise ReproductionMismatch(f"the re-run failed with status {status}", {"status": status})
        for name in csv_files:
            row = first_difference(os.path.join(directory, name), os.path.join(scratch, name))
            if row is not None:
                raise ReproductionMismatch(f"{name} differs from the re-run at row {row}", {"file": name, "row": row})
    logger.info("reproduced %d CSV files of %s", len(csv_files), summary_path)
    return 0
