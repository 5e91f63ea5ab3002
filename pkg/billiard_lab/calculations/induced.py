##################################################################
# INDUCED FIRST-RETURN MAPS                                      #
##################################################################
"""
First-return maps F: M -> M to a subset M of the collision space, return times R and the
classification of excursions into cells.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Set, Tuple

import numpy as np
import pandas as pd

from billiard_lab.calculations.dynamics import (CollisionEvent, PhasePoint, collision_map, initial_event,
                                                inverse_collision_map, sample_mu, step_jacobian)
from billiard_lab.calculations.geometry import Arc, BoundaryComponent, Table
from billiard_lab.utils.config import settings
from billiard_lab.utils.enums import CellKind, CurvatureClass, Family, SubsetRule
from billiard_lab.utils.errors import (CornerHitError, DynamicsError, InsufficientBudgetError, MissingPrevError,
                                       SpecCompatibilityError)
from billiard_lab.utils.streams import partition, run_chunks, spawn_seeds

logger = logging.getLogger(__name__)

_ARC_FAMILIES = {Family.straight_stadium, Family.drive_belt, Family.truncated_stadium}

compatible_families: Dict[SubsetRule, Set[Family]] = {
    SubsetRule.scatterer: {Family.semi_dispersing},
    SubsetRule.first_arc: {Family.flower},
    SubsetRule.first_arc_only: _ARC_FAMILIES,
    SubsetRule.last_arc_only: _ARC_FAMILIES,
}

default_rules: Dict[Family, SubsetRule] = {
    Family.semi_dispersing: SubsetRule.scatterer,
    Family.flower: SubsetRule.first_arc,
    Family.straight_stadium: SubsetRule.first_arc_only,
    Family.drive_belt: SubsetRule.first_arc_only,
    Family.truncated_stadium: SubsetRule.first_arc_only,
}


@dataclass
class SubsetSpec:
    """
    Rule selecting M, bound to the family of the table it is used with.

    The classification thresholds default to config_base.json.

    Raises
    ------
    SpecCompatibilityError
        if the rule does not apply to the family.
    """
    rule: SubsetRule
    family: Family
    phi_slide: Optional[float] = None
    phi_diam: Optional[float] = None

    def __post_init__(self):
        if self.family not in compatible_families[self.rule]:
            raise SpecCompatibilityError(f"rule {self.rule.value} is not applicable to family {self.family.value}")
        thresholds = settings()["Classification"]
        if self.phi_slide is None:
            self.phi_slide = thresholds["phi_slide"]
        if self.phi_diam is None:
            self.phi_diam = thresholds["phi_diam"]

    @staticmethod
    def for_table(table: Table, rule: Optional[SubsetRule] = None, **thresholds) -> "SubsetSpec":
        """
        Spec with the given rule, or the default rule of the table's family.
        """
        if rule is None:
            if table.family not in default_rules:
                raise SpecCompatibilityError(f"no induced map is defined for family {table.family.value}")
            rule = default_rules[table.family]
        return SubsetSpec(rule, table.family, **thresholds)

    @property
    def needs_prev(self) -> bool:
        return self.rule in (SubsetRule.first_arc, SubsetRule.first_arc_only)

    @property
    def needs_next(self) -> bool:
        return self.rule == SubsetRule.last_arc_only


##################################################################
# MEMBERSHIP                                                     #
##################################################################

# Membership of a collision given its component and the components of its neighbours
Membership = Callable[[BoundaryComponent, Optional[int], Optional[int]], bool]


def _first_of_run(component: BoundaryComponent, prev_id: Optional[int]) -> bool:
    if component.curvature_class != CurvatureClass.focusing:
        return False
    if prev_id is None:
        raise MissingPrevError("first-arc rules need the previous collision")
    return prev_id != component.id


def scatterer_member(component: BoundaryComponent, prev_id: Optional[int], next_id: Optional[int]) -> bool:
    return component.curvature_class == CurvatureClass.dispersing


def first_arc_member(component: BoundaryComponent, prev_id: Optional[int], next_id: Optional[int]) -> bool:
    return component.curvature_class == CurvatureClass.dispersing or _first_of_run(component, prev_id)


def first_arc_only_member(component: BoundaryComponent, prev_id: Optional[int], next_id: Optional[int]) -> bool:
    return _first_of_run(component, prev_id)


def last_arc_only_member(component: BoundaryComponent, prev_id: Optional[int], next_id: Optional[int]) -> bool:
    if component.curvature_class != CurvatureClass.focusing:
        return False
    if next_id is None:
        raise MissingPrevError("the last-arc rule needs the next collision")
    return next_id != component.id


supported_rules: Dict[SubsetRule, Membership] = {
    SubsetRule.scatterer: scatterer_member,
    SubsetRule.first_arc: first_arc_member,
    SubsetRule.first_arc_only: first_arc_only_member,
    SubsetRule.last_arc_only: last_arc_only_member,
}


def in_M(table: Table, spec: SubsetSpec, x: PhasePoint, prev: Optional[PhasePoint] = None) -> bool:
    """
    Whether x belongs to M.

    Parameters
    ----------
    table
        the billiard table.
    spec
        the rule defining M.
    x
        the collision to test.
    prev
        the previous collision F^-1(x), required by the first-arc rules. The last-arc
        rule computes F(x) itself.

    Raises
    ------
    MissingPrevError
        if a first-arc rule is evaluated on an arc collision without `prev`.
    """
    component = table.component_at(x.r)
    prev_id = table.component_at(prev.r).id if prev is not None else None
    next_id = None
    if spec.needs_next and component.curvature_class == CurvatureClass.focusing:
        next_id = collision_map(table, x).component_id
    return supported_rules[spec.rule](component, prev_id, next_id)


def sample_in_M(table: Table, spec: SubsetSpec, rng: np.random.Generator,
                max_attempts: Optional[int] = None) -> Tuple[PhasePoint, int]:
    """
    Rejection sampler of mu restricted to M.

    Returns
    -------
    Tuple[PhasePoint, int]
        the accepted point and the number of mu-samples drawn for it.

    Raises
    ------
    InsufficientBudgetError
        if no point is accepted within `max_attempts` draws.
    """
    if max_attempts is None:
        max_attempts = settings()["Diagnostics"]["seed_attempts"]
    member = supported_rules[spec.rule]
    for attempt in range(1, max_attempts + 1):
        x = sample_mu(table, rng)
        component = table.component_at(x.r)
        if component.curvature_class == CurvatureClass.flat:
            continue
        if spec.rule == SubsetRule.scatterer and component.curvature_class != CurvatureClass.dispersing:
            continue
        if initial_event(table, x).corner:
            continue
        prev_id, next_id = None, None
        try:
            if spec.needs_prev and component.curvature_class == CurvatureClass.focusing:
                prev_id = inverse_collision_map(table, x).component_id
            if spec.needs_next and component.curvature_class == CurvatureClass.focusing:
                next_id = collision_map(table, x).component_id
        except CornerHitError:
            continue
        if member(component, prev_id, next_id):
            return x, attempt
    raise InsufficientBudgetError(f"no point of M found in {max_attempts} samples")


##################################################################
# CELLS                                                          #
##################################################################

class CellLabel(NamedTuple):
    kind: CellKind
    n: int
    anchor: int


REGULAR = CellLabel(CellKind.regular, 0, -1)


class ExcursionTally:
    """
    Running counts of an excursion: flat bounces and the longest run of consecutive
    collisions with one focusing arc.
    """

    def __init__(self):
        self.flats = 0
        self.first_flat = -1
        self._run_id = None
        self._run_len = 0
        self._run_phi = 0.0
        self.run_id = -1
        self.run_len = 0
        self.run_phi = 0.0

    def add(self, event: CollisionEvent, component: BoundaryComponent):
        if component.curvature_class == CurvatureClass.flat:
            self.flats += 1
            if self.first_flat < 0:
                self.first_flat = component.id
        if component.curvature_class == CurvatureClass.focusing:
            if self._run_id == component.id:
                self._run_len += 1
                self._run_phi += abs(event.point.phi)
            else:
                self._run_id, self._run_len, self._run_phi = component.id, 1, abs(event.point.phi)
            if self._run_len > self.run_len:
                self.run_id, self.run_len, self.run_phi = self._run_id, self._run_len, self._run_phi
        else:
            self._run_id, self._run_len, self._run_phi = None, 0, 0.0

    def label(self, table: Table, spec: SubsetSpec) -> CellLabel:
        if spec.rule == SubsetRule.scatterer:
            if self.flats >= 1:
                return CellLabel(CellKind.ih_escape, self.flats, self.first_flat)
            return REGULAR

        m = self.run_len
        if self.flats >= 1 and 1 <= m <= 2:
            kind = CellKind.flat_run_direct if m == 1 else CellKind.flat_run_indirect
            return CellLabel(kind, self.flats, self.run_id)
        if m >= 2:
            mean_phi = self.run_phi / m
            if mean_phi > spec.phi_slide:
                return CellLabel(CellKind.sliding, m, self.run_id)
            shape = table.components[self.run_id].shape
            if mean_phi < spec.phi_diam and isinstance(shape, Arc) and shape.extent > math.pi + 1e-9:
                return CellLabel(CellKind.diametric, m, self.run_id)
        return REGULAR


def classify_cell(excursion: Sequence[CollisionEvent], table: Table, spec: Optional[SubsetSpec] = None) -> CellLabel:
    """
    Cell of an excursion.

    Parameters
    ----------
    excursion
        the collisions belonging to the excursion: the start point and the collisions
        outside M for the first-collision rules, the collisions after the start up to and
        including the return for the last-collision rule.
    table
        the table the events live on.
    spec
        rule and thresholds, by default the family's default rule.

    Returns
    -------
    CellLabel
        sliding: a run of n collisions with one arc, mean |phi| above phi_slide.
        diametric: a run of n collisions with one arc longer than a half circle, mean
        |phi| below phi_diam. flat-run-direct / flat-run-indirect: n flat bounces after
        one / two arc collisions. ih-escape: n wall bounces between two scatterer
        collisions. Anything else is regular with n = 0.
    """
    if spec is None:
        spec = SubsetSpec.for_table(table)
    tally = ExcursionTally()
    for event in excursion:
        tally.add(event, table.components[event.component_id])
    return tally.label(table, spec)


##################################################################
# RETURN MAP                                                     #
##################################################################

@dataclass
class ReturnRecord:
    """
    One excursion from a point of M to the first return.

    `R` counts collision map steps. A censored record stopped at R_max without returning;
    a truncated record stopped at a corner after R steps.
    """
    start: PhasePoint
    end: PhasePoint
    R: int
    flat_bounces: int
    same_arc_run: int
    cell: CellLabel
    end_component: int
    truncated: bool = False
    censored: bool = False
    end_event: Optional[CollisionEvent] = field(default=None, repr=False)
    events: Optional[Tuple[CollisionEvent, ...]] = field(default=None, repr=False)

    def to_dict(self):
        return {
            "start_r": self.start.r,
            "start_phi": self.start.phi,
            "R": self.R,
            "flat_bounces": self.flat_bounces,
            "cell_kind": self.cell.kind.value,
            "cell_n": self.cell.n,
            "censored": self.censored,
        }


def return_map(table: Table, spec: SubsetSpec, x: PhasePoint, r_max: Optional[int] = None,
               keep_events: bool = False) -> ReturnRecord:
    """
    Iterates the collision map from x in M until the first return to M.

    Parameters
    ----------
    table
        the billiard table.
    spec
        the rule defining M.
    x
        start point, assumed to be in M.
    r_max
        cap on the number of steps, by default Induced.r_max of config_base.json.
    keep_events
        keep the collision events e_0 .. e_R in the record.

    Returns
    -------
    ReturnRecord
        R, bounce counts and cell. Excursions reaching r_max are right-censored; a corner
        hit mid-excursion gives a truncated record.
    """
    if r_max is None:
        r_max = settings()["Induced"]["r_max"]
    member = supported_rules[spec.rule]
    last_rule = spec.needs_next
    start = initial_event(table, x)
    events: List[CollisionEvent] = [start]
    tally = ExcursionTally()
    if not last_rule:
        tally.add(start, table.components[start.component_id])

    current, pending = start, None
    R, returned, truncated = 0, False, False
    try:
        while R < r_max:
            event = pending if pending is not None else collision_map(table, current.point)
            pending = None
            R += 1
            component = table.components[event.component_id]
            next_id = None
            if last_rule and component.curvature_class == CurvatureClass.focusing:
                pending = collision_map(table, event.point)
                next_id = pending.component_id
            returned = member(component, current.component_id, next_id)
            if keep_events:
                events.append(event)
            if last_rule or not returned:
                tally.add(event, component)
            current = event
            if returned:
                break
    except CornerHitError as e:
        logger.debug("excursion from %s truncated after %d steps: %s", x, R, e)
        truncated = True

    censored = not returned and not truncated
    cell = REGULAR if truncated or censored else tally.label(table, spec)
    return ReturnRecord(start=x, end=current.point, R=R, flat_bounces=tally.flats,
                        same_arc_run=tally.run_len, cell=cell, end_component=current.component_id,
                        truncated=truncated, censored=censored, end_event=current,
                        events=tuple(events) if keep_events else None)


def induced_tangent_map(table: Table, spec: SubsetSpec, record: ReturnRecord) -> np.ndarray:
    """
    Derivative DF of the induced map at record.start: the product of the collision map
    derivatives over the R steps of the excursion. Records without events are traced again.

    Raises
    ------
    DynamicsError
        if the record is truncated or censored.
    NearGrazingError
        if a collision of the excursion is grazing.
    """
    if record.truncated or record.censored:
        raise DynamicsError("the induced map is not defined on truncated or censored excursions")
    events = record.events
    if events is None:
        events = return_map(table, spec, record.start, record.R, keep_events=True).events
    product = np.eye(2)
    for a, b in zip(events[:-1], events[1:]):
        product = step_jacobian(a, b) @ product
    return product


##################################################################
# EXCURSION ENSEMBLES                                            #
##################################################################

@dataclass
class ExcursionSample:
    """
    Excursions of mu|_M-distributed start points, as columns.

    `attempts` counts all mu-samples drawn, `accepted` those found in M (truncated
    excursions included).
    """
    start_r: np.ndarray
    start_phi: np.ndarray
    R: np.ndarray
    flat_bounces: np.ndarray
    cell_kind: np.ndarray
    cell_n: np.ndarray
    censored: np.ndarray
    attempts: int = 0
    accepted: int = 0
    truncated: int = 0

    @property
    def size(self) -> int:
        return len(self.R)

    @staticmethod
    def from_records(records: Sequence[ReturnRecord], attempts: int, truncated: int) -> "ExcursionSample":
        return ExcursionSample(
            start_r=np.array([r.start.r for r in records], dtype=float),
            start_phi=np.array([r.start.phi for r in records], dtype=float),
            R=np.array([r.R for r in records], dtype=np.int64),
            flat_bounces=np.array([r.flat_bounces for r in records], dtype=np.int64),
            cell_kind=np.array([r.cell.kind.value for r in records], dtype=object),
            cell_n=np.array([r.cell.n for r in records], dtype=np.int64),
            censored=np.array([r.censored for r in records], dtype=bool),
            attempts=attempts,
            accepted=len(records) + truncated,
            truncated=truncated,
        )

    @staticmethod
    def concatenate(parts: Sequence["ExcursionSample"]) -> "ExcursionSample":
        columns = ("start_r", "start_phi", "R", "flat_bounces", "cell_kind", "cell_n", "censored")
        merged = {c: np.concatenate([getattr(p, c) for p in parts]) for c in columns}
        return ExcursionSample(**merged, attempts=sum(p.attempts for p in parts),
                               accepted=sum(p.accepted for p in parts), truncated=sum(p.truncated for p in parts))

    def to_frame(self) -> pd.DataFrame:
        """
        Return-record table (start_r, start_phi, R, flat_bounces, cell_kind, cell_n, censored).
        """
        return pd.DataFrame({
            "start_r": self.start_r,
            "start_phi": self.start_phi,
            "R": self.R,
            "flat_bounces": self.flat_bounces,
            "cell_kind": self.cell_kind,
            "cell_n": self.cell_n,
            "censored": self.censored.astype(int),
        })


def excursion_chunk(table: Table, spec: SubsetSpec, seed: np.random.SeedSequence, size: int,
                    r_max: int) -> ExcursionSample:
    rng = np.random.default_rng(seed)
    records, attempts, truncated = [], 0, 0
    while len(records) < size:
        x, tries = sample_in_M(table, spec, rng)
        attempts += tries
        record = return_map(table, spec, x, r_max)
        if record.truncated:
            truncated += 1
            if truncated > 10 * size + 100:
                raise DynamicsError("almost every excursion ends in a corner")
            continue
        records.append(record)
    return ExcursionSample.from_records(records, attempts, truncated)


def sample_excursions(table: Table, spec: SubsetSpec, samples: int, seed: int, r_max: Optional[int] = None,
                      workers: int = 1, deadline: Optional[float] = None) -> ExcursionSample:
    """
    Runs the return map from `samples` independent mu|_M points.

    The work is split into the fixed partitions of the master seed, so the result does
    not depend on `workers`.
    """
    if r_max is None:
        r_max = settings()["Induced"]["r_max"]
    sizes = partition(samples)
    seeds = spawn_seeds(seed, len(sizes))
    tasks = [(table, spec, s, size, r_max) for s, size in zip(seeds, sizes)]
    sample = ExcursionSample.concatenate(run_chunks(excursion_chunk, tasks, workers, "excursions", deadline))
    logger.info("%d excursions, %d censored at R_max=%d, %d truncated at corners", sample.size,
                int(sample.censored.sum()), r_max, sample.truncated)
    return sample


class KacCheck(NamedTuple):
    mean_return: float
    mean_return_se: float
    inverse_measure: float
    inverse_measure_se: float
    z: float

    @property
    def consistent(self) -> bool:
        return self.z <= 3.0

    def to_dict(self):
        return {**self._asdict(), "consistent": self.consistent}


def kac_from(sample: ExcursionSample) -> KacCheck:
    """
    Compares the mean return time with mu(collision space) / mu(M), both estimated from
    the same rejection sampling.
    """
    if sample.size < 2 or sample.accepted == 0:
        raise InsufficientBudgetError("not enough excursions for the Kac check")
    R = sample.R.astype(float)
    mean = float(R.mean())
    mean_se = float(R.std(ddof=1) / math.sqrt(sample.size))
    p = sample.accepted / sample.attempts
    inverse = 1.0 / p
    inverse_se = math.sqrt(p * (1.0 - p) / sample.attempts) / p ** 2
    spread = math.hypot(mean_se, inverse_se)
    z = abs(mean - inverse) / spread if spread > 0 else (0.0 if mean == inverse else math.inf)
    return KacCheck(mean, mean_se, inverse, inverse_se, z)


def estimate_kac(table: Table, spec: SubsetSpec, samples: int, seed: int, r_max: Optional[int] = None,
                 workers: int = 1) -> KacCheck:
    """
    Kac consistency: the mean return time over mu|_M equals mu(collision space) / mu(M).
    """
    return kac_from(sample_excursions(table, spec, samples, seed, r_max, workers))
