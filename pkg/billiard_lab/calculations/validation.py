##################################################################
# HYPOTHESES OF THE TABLE FAMILIES                               #
##################################################################
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Tuple

import numpy as np

from billiard_lab.calculations.geometry import Arc, ArcGon, Segment, Table, rectangle_gap, scatterer_gap
from billiard_lab.utils.config import settings
from billiard_lab.utils.enums import CurvatureClass, Family
from billiard_lab.utils.types import RuleMessages

logger = logging.getLogger(__name__)

# A rule set inspects a table and returns (violations, warnings)
RuleSet = Callable[[Table], Tuple[RuleMessages, RuleMessages]]


@dataclass
class ValidationReport:
    family: str
    violations: RuleMessages = field(default_factory=list)
    warnings: RuleMessages = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self):
        return {
            "family": self.family,
            "passed": self.passed,
            "violations": [{"rule": r, "message": m} for r, m in self.violations],
            "warnings": [{"rule": r, "message": m} for r, m in self.warnings],
        }


def _junctions(table: Table):
    """
    Yields (component, next component) for every junction of the boundary loops.
    """
    for component in table.components:
        if table.has_junctions(component):
            yield component, table.next_in_loop(component)


def _turn(table: Table, component, nxt) -> float:
    # angle between the outgoing tangent of one component and the incoming tangent of the next
    tx, ty = component.tangent_at(component.length)
    ux, uy = nxt.tangent_at(0.0)
    return math.atan2(tx * uy - ty * ux, tx * ux + ty * uy)


def _tangency_rules(table: Table, tangent: bool) -> RuleMessages:
    tolerance = settings()["Tolerances"]["tangency"]
    violations = []
    for component, nxt in _junctions(table):
        turn = abs(_turn(table, component, nxt))
        if tangent and turn > tolerance:
            violations.append(("tangency", f"components {component.id} and {nxt.id} are not tangent "
                                           f"(residual {turn:.3e})"))
        if not tangent and turn <= tolerance:
            violations.append(("transversality", f"components {component.id} and {nxt.id} meet tangentially"))
    return violations


def _parallel(a: Segment, b: Segment) -> bool:
    ax, ay = a.end[0] - a.start[0], a.end[1] - a.start[1]
    bx, by = b.end[0] - b.start[0], b.end[1] - b.start[1]
    return abs(ax * by - ay * bx) <= settings()["Tolerances"]["tangency"] * math.hypot(ax, ay) * math.hypot(bx, by)


def _arcs_and_segments(table: Table) -> Tuple[List, List]:
    arcs = [c for c in table.components if isinstance(c.shape, Arc)]
    segments = [c for c in table.components if isinstance(c.shape, Segment)]
    return arcs, segments


def semidispersing_rules(table: Table) -> Tuple[RuleMessages, RuleMessages]:
    violations, warnings = [], []
    width, height = table.parameters["width"], table.parameters["height"]
    samples = settings()["Validation"]["overlap_samples"]
    min_curvature = settings()["Tolerances"]["min_curvature"]
    scatterers = table.scatterers
    if not scatterers:
        warnings.append(("no-dispersing-component", "no dispersing component: the dynamics is integrable"))
    for i, scatterer in enumerate(scatterers):
        if scatterer.min_curvature() < min_curvature:
            violations.append(("curvature", f"scatterer {i}: curvature is not bounded away from zero"))
        if rectangle_gap(scatterer, width, height, samples) <= 0:
            violations.append(("containment", f"scatterer {i}: closure meets the rectangle boundary"))
        for j in range(i):
            if scatterer_gap(scatterers[j], scatterer, samples) <= 0:
                violations.append(("disjointness", f"scatterers {j} and {i}: closures intersect"))
    if any(isinstance(s, ArcGon) for s in scatterers):
        warnings.append(("ih2-unchecked", "corner-grazing corridor condition of piecewise smooth scatterers "
                                          "is not checked"))
    return violations, warnings


def flower_rules(table: Table) -> Tuple[RuleMessages, RuleMessages]:
    violations, warnings = [], []
    n_samples = settings()["Validation"]["containment_samples"]
    closure = settings()["Tolerances"]["closure"]

    for arc in table.components_of(CurvatureClass.focusing):
        shape = arc.shape
        if shape.extent >= math.pi:
            violations.append(("half-circle", f"focusing arc {arc.id} not shorter than half circle "
                                              f"(extent {shape.extent / math.pi:.3f} pi)"))
        for other in table.components:
            if other.id == arc.id:
                continue
            s = np.linspace(0.0, other.length, n_samples + 2)[1:-1]
            points = np.array([other.point_at(v) for v in s])
            distance = np.hypot(points[:, 0] - shape.center[0], points[:, 1] - shape.center[1])
            if np.any(distance <= shape.radius + closure):
                violations.append(("circle-containment", f"component {other.id} reaches into the circle of "
                                                         f"focusing arc {arc.id}"))

    for component, nxt in _junctions(table):
        involved = {component.curvature_class, nxt.curvature_class}
        if CurvatureClass.dispersing in involved and abs(_turn(table, component, nxt)) >= \
                math.pi - settings()["Tolerances"]["tangency"]:
            violations.append(("cusp", f"components {component.id} and {nxt.id} form a cusp"))

    flats = [c for c in table.components if isinstance(c.shape, Segment)]
    for i, a in enumerate(flats):
        for b in flats[:i]:
            if _parallel(a.shape, b.shape):
                warnings.append(("parallel-flats", f"flat walls {b.id} and {a.id} are parallel: consecutive flat "
                                                   f"reflections are unbounded"))
    warnings.append(("genericity-unchecked", "genericity of the flower is not checked"))
    return violations, warnings


def stadium_rules(table: Table) -> Tuple[RuleMessages, RuleMessages]:
    violations = []
    arcs, segments = _arcs_and_segments(table)
    if len(arcs) != 2 or len(segments) != 2:
        return [("shape", "a stadium consists of two arcs and two segments")], []
    for arc in arcs:
        if abs(arc.shape.extent - math.pi) > settings()["Tolerances"]["tangency"]:
            violations.append(("half-circle-arcs", f"arc {arc.id} is not a half circle"))
    if not _parallel(segments[0].shape, segments[1].shape):
        violations.append(("parallel-sides", "the flat sides are not parallel"))
    violations += _tangency_rules(table, tangent=True)
    return violations, []


def drivebelt_rules(table: Table) -> Tuple[RuleMessages, RuleMessages]:
    violations = []
    arcs, segments = _arcs_and_segments(table)
    if len(arcs) != 2 or len(segments) != 2:
        return [("shape", "a drive-belt consists of two arcs and two segments")], []
    big = [a for a in arcs if a.shape.extent > math.pi]
    if len(big) != 1:
        violations.append(("big-arc", f"expected exactly one arc longer than a half circle, found {len(big)}"))
    if _parallel(segments[0].shape, segments[1].shape):
        violations.append(("skewed-sides", "the flat sides are parallel (straight stadium)"))
    violations += _tangency_rules(table, tangent=True)
    return violations, []


def truncated_stadium_rules(table: Table) -> Tuple[RuleMessages, RuleMessages]:
    violations = []
    arcs, segments = _arcs_and_segments(table)
    if len(arcs) != 2 or len(segments) != 2:
        return [("shape", "a truncated stadium consists of two arcs and two segments")], []
    for arc in arcs:
        if arc.shape.extent >= math.pi:
            violations.append(("short-arcs", f"arc {arc.id} is not shorter than a half circle"))
    if not _parallel(segments[0].shape, segments[1].shape):
        violations.append(("parallel-sides", "the flat sides are not parallel"))
    violations += _tangency_rules(table, tangent=False)
    return violations, [("one-step-expansion", "the one-step expansion estimate is expected to fail")]


def custom_rules(table: Table) -> Tuple[RuleMessages, RuleMessages]:
    return [], [("custom", "custom table: no theorem applies")]


supported_validators: Dict[Family, RuleSet] = {
    Family.semi_dispersing: semidispersing_rules,
    Family.flower: flower_rules,
    Family.straight_stadium: stadium_rules,
    Family.drive_belt: drivebelt_rules,
    Family.truncated_stadium: truncated_stadium_rules,
    Family.custom: custom_rules,
}


def validate(table: Table) -> ValidationReport:
    """
    Checks the table against the hypotheses of its family.

    Violations are data: nothing is raised, the report lists every violated rule.

    Parameters
    ----------
    table
        the table to check.

    Returns
    -------
    ValidationReport
        passed iff no rule is violated.
    """
    closure = settings()["Tolerances"]["closure"] * max(1.0, table.perimeter)
    report = ValidationReport(table.family.value)
    if abs(sum(c.length for c in table.components) - table.perimeter) > 1e-12 * table.perimeter:
        report.violations.append(("perimeter", "perimeter differs from the sum of component lengths"))
    for component, nxt in _junctions(table):
        end, start = component.end_point, nxt.start_point
        if math.hypot(end[0] - start[0], end[1] - start[1]) > closure:
            report.violations.append(("closure", f"gap between components {component.id} and {nxt.id}"))

    violations, warnings = supported_validators[table.family](table)
    report.violations += violations
    report.warnings += warnings
    for rule, message in report.violations:
        logger.debug("violation %s: %s", rule, message)
    return report
