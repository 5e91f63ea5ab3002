##################################################################
# COLLISION MAP, TANGENT MAP AND INVARIANT MEASURE               #
##################################################################
"""
The collision map F on (r, phi).

The outgoing velocity at a collision is v = cos(phi) n + sin(phi) t, with n the inward
normal and t the unit tangent in the direction of increasing r. A unit disc shot from
(0, phi) therefore lands at r = pi - 2 phi.
"""
import functools
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, NamedTuple, Optional, Tuple

import numpy as np

from billiard_lab.calculations.geometry import Table
from billiard_lab.utils.config import settings
from billiard_lab.utils.errors import CornerHitError, DynamicsError, NearGrazingError, NoIntersectionError
from billiard_lab.utils.types import Matrix, Observer, Vec2

logger = logging.getLogger(__name__)


class PhasePoint(NamedTuple):
    r: float
    phi: float


class TangentVector(NamedTuple):
    dr: float
    dphi: float


class CollisionEvent(NamedTuple):
    """
    Post-collision state together with the flight that led to it.

    `cos_phi` is computed from the incoming velocity and stays accurate near grazing;
    `curvature` is the signed curvature at the collision point.
    """
    point: PhasePoint
    position: Vec2
    free_path: float
    component_id: int
    grazing: bool
    corner: bool
    curvature: float
    cos_phi: float


class Tolerances(NamedTuple):
    corner: float
    graze: float
    flight: float


@functools.lru_cache(maxsize=None)
def tolerances() -> Tolerances:
    t = settings()["Tolerances"]
    return Tolerances(t["corner"], t["graze"], t["flight"])


def reverse(x: PhasePoint) -> PhasePoint:
    """
    Time reversal: reflecting the reversed velocity at r gives the angle -phi.
    """
    return PhasePoint(x.r, -x.phi)


def initial_event(table: Table, x: PhasePoint) -> CollisionEvent:
    """
    Event describing the start point of an orbit (free path 0).
    """
    component = table.component_at(x.r)
    s = x.r - component.r_offset
    eps = tolerances()
    corner = table.has_junctions(component) and (s < eps.corner or component.length - s < eps.corner)
    c = math.cos(x.phi)
    return CollisionEvent(x, component.point_at(min(s, component.length)), 0.0, component.id, c < eps.graze,
                          corner, component.curvature, c)


def collision_map(table: Table, x: PhasePoint) -> CollisionEvent:
    """
    Next collision of the ray leaving the boundary point at arc-length x.r with angle x.phi.

    Parameters
    ----------
    table
        the billiard table.
    x
        post-collision state.

    Returns
    -------
    CollisionEvent
        the post-collision state at the next collision, reflection applied.

    Raises
    ------
    CornerHitError
        if the ray starts or lands within the corner tolerance of a junction.
    NoIntersectionError
        if the ray leaves the table, which a closed boundary never allows.
    """
    eps = tolerances()
    component = table.component_at(x.r)
    s = x.r - component.r_offset
    if table.has_junctions(component) and (s < eps.corner or component.length - s < eps.corner):
        raise CornerHitError(f"orbit starts at a junction of component {component.id}")
    position, (tx, ty), (nx, ny) = component.frame_at(min(s, component.length))
    c, sn = math.cos(x.phi), math.sin(x.phi)
    v = (c * nx + sn * tx, c * ny + sn * ty)

    best, target = None, None
    for other in table.components:
        hit = other.intersect(position, v, other.id == component.id, eps.flight)
        if hit is not None and (best is None or hit.t < best.t):
            best, target = hit, other
    if best is None:
        raise NoIntersectionError(f"ray from r={x.r}, phi={x.phi} does not hit the boundary")

    s1 = best.s
    corner = table.has_junctions(target) and (s1 < eps.corner or target.length - s1 < eps.corner)
    t1x, t1y = target.tangent_at(s1)
    n1x, n1y = -t1y, t1x
    cos1 = -(v[0] * n1x + v[1] * n1y)
    sin1 = v[0] * t1x + v[1] * t1y
    r1 = target.r_offset + s1
    if r1 >= table.perimeter:
        r1 -= table.perimeter
    event = CollisionEvent(PhasePoint(r1, math.atan2(sin1, cos1)), best.position, best.t, target.id,
                           cos1 < eps.graze, corner, target.curvature, cos1)
    if corner:
        raise CornerHitError(f"collision within corner tolerance of a junction of component {target.id}", event)
    return event


def inverse_collision_map(table: Table, x: PhasePoint) -> CollisionEvent:
    """
    Previous collision of x, obtained by time reversal. The returned event carries the
    previous post-collision state and the flight from it to x.
    """
    event = collision_map(table, reverse(x))
    return event._replace(point=reverse(event.point))


def jacobian(tau: float, k0: float, k1: float, c0: float, c1: float) -> Matrix:
    """
    Derivative of the collision map in (r, phi) coordinates.

    Parameters
    ----------
    tau
        free path from x to F(x).
    k0, k1
        signed curvatures at x and F(x) (dispersing positive).
    c0, c1
        cos(phi) at x and at F(x).

    Returns
    -------
    Matrix
        2x2 matrix with |det| = c0 / c1.
    """
    return (-1.0 / c1) * np.array([
        [tau * k0 + c0, tau],
        [tau * k0 * k1 + k0 * c1 + k1 * c0, tau * k1 + c1],
    ])


def step_jacobian(start: CollisionEvent, end: CollisionEvent) -> Matrix:
    """
    Jacobian of the single step from `start` to `end`.

    Raises
    ------
    NearGrazingError
        if the landing collision is grazing.
    """
    if end.cos_phi < tolerances().graze:
        raise NearGrazingError(f"grazing collision on component {end.component_id} (cos phi = {end.cos_phi:.3e})")
    return jacobian(end.free_path, start.curvature, end.curvature, start.cos_phi, end.cos_phi)


def tangent_map(table: Table, x: PhasePoint) -> Matrix:
    """
    Derivative D F(x).

    Raises
    ------
    NearGrazingError
        if cos(phi) at F(x) is below the grazing tolerance.
    CornerHitError
        as collision_map.
    """
    return step_jacobian(initial_event(table, x), collision_map(table, x))


def expansion_of(matrix: Matrix, v: TangentVector, c0: float, c1: float, metric: str = "p") -> float:
    """
    Expansion factor of `matrix` on v, in the p-metric (dp = cos(phi) dr) or the euclidean
    metric of the (r, phi) plane.
    """
    w = matrix @ np.array([v.dr, v.dphi])
    if metric == "p":
        if v.dr == 0:
            raise ValueError("the p-metric needs a tangent vector with dr != 0")
        return abs(c1 * w[0]) / abs(c0 * v.dr)
    return float(np.hypot(w[0], w[1]) / math.hypot(v.dr, v.dphi))


def expansion_factor(table: Table, x: PhasePoint, v: TangentVector, metric: str = "p") -> float:
    """
    ||D F(x) v|| / ||v||, by default in the p-metric.
    """
    start, end = initial_event(table, x), collision_map(table, x)
    return expansion_of(step_jacobian(start, end), v, start.cos_phi, end.cos_phi, metric)


def unstable_direction(table: Table, x: PhasePoint, depth: Optional[int] = None) -> TangentVector:
    """
    Approximate unstable direction at x.

    A plane wave front (zero curvature) is placed `depth` collisions back along the orbit
    of x and pushed forward to x. The backward orbit stops early at corners and grazing
    collisions. The result is normalized with dr >= 0.
    """
    if depth is None:
        depth = settings()["Diagnostics"]["backward_depth"]
    backward = [x]
    y = x
    for _ in range(depth):
        try:
            event = inverse_collision_map(table, y)
        except DynamicsError:
            break
        if event.grazing:
            break
        y = event.point
        backward.append(y)

    earliest = backward[-1]
    v = np.array([1.0, -table.component_at(earliest.r).curvature])
    for y in reversed(backward[1:]):
        v = tangent_map(table, y) @ v
        v /= np.hypot(v[0], v[1])
    v /= np.hypot(v[0], v[1])
    if v[0] < 0:
        v = -v
    return TangentVector(float(v[0]), float(v[1]))


##################################################################
# INVARIANT MEASURE                                              #
##################################################################

def phase_from_uniforms(table: Table, u_r: float, u_phi: float) -> PhasePoint:
    """
    Maps u_r in [0, 1) and u_phi in [-1, 1] to a phase point distributed as the normalized
    invariant measure cos(phi) dr dphi.
    """
    return PhasePoint(u_r * table.perimeter, math.asin(u_phi))


def sample_mu(table: Table, rng: np.random.Generator) -> PhasePoint:
    """
    One sample of the invariant measure: r uniform on the boundary, sin(phi) uniform.
    """
    return phase_from_uniforms(table, rng.random(), rng.uniform(-1.0, 1.0))


def sample_mu_batch(table: Table, rng: np.random.Generator, size: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    `size` samples of the invariant measure as arrays (r, phi).
    """
    return rng.random(size) * table.perimeter, np.arcsin(rng.uniform(-1.0, 1.0, size))


##################################################################
# ORBITS                                                         #
##################################################################

@dataclass
class OrbitSummary:
    collisions: int = 0
    grazing: int = 0
    component_hits: Dict[int, int] = field(default_factory=dict)
    truncated: bool = False
    last: Optional[PhasePoint] = None
    corner_event: Optional[CollisionEvent] = None

    def to_dict(self):
        return {
            "collisions": self.collisions,
            "grazing": self.grazing,
            "component_hits": {str(k): v for k, v in sorted(self.component_hits.items())},
            "truncated": self.truncated,
            "last": list(self.last) if self.last else None,
        }


def orbit(table: Table, x0: PhasePoint, n_collisions: int, observer: Optional[Observer] = None) -> OrbitSummary:
    """
    Iterates the collision map.

    Parameters
    ----------
    table
        the billiard table.
    x0
        start point.
    n_collisions
        number of collisions to compute.
    observer
        called with the initial event (free path 0) and then with every collision event.

    Returns
    -------
    OrbitSummary
        collisions completed, grazing count, hits per component. A corner hit ends the
        orbit early and sets `truncated`.
    """
    if n_collisions < 1:
        raise ValueError("an orbit needs at least one collision")
    summary = OrbitSummary(last=x0)
    event = initial_event(table, x0)
    if observer is not None:
        observer(event)
    x = x0
    for _ in range(n_collisions):
        try:
            event = collision_map(table, x)
        except CornerHitError as e:
            logger.debug("orbit truncated after %d collisions: %s", summary.collisions, e)
            summary.truncated = True
            summary.corner_event = e.event
            break
        summary.collisions += 1
        summary.grazing += event.grazing
        summary.component_hits[event.component_id] = summary.component_hits.get(event.component_id, 0) + 1
        if observer is not None:
            observer(event)
        x = event.point
        summary.last = x
    return summary
