##################################################################
# BILLIARD TABLES: BOUNDARY COMPONENTS, BUILDERS AND LOCATE      #
##################################################################
"""
Billiard tables as ordered lists of boundary components.

Every boundary loop is traversed with the billiard domain on the left. The unit tangent t
points in the direction of increasing arc-length r and the inward normal is t rotated
counterclockwise by a quarter turn. Arcs traversed counterclockwise around their center
are focusing, arcs traversed clockwise are dispersing. Curvature is signed: dispersing
positive, flat zero, focusing negative.
"""
import bisect
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.spatial.distance import cdist

from billiard_lab.utils.config import settings
from billiard_lab.utils.enums import CurvatureClass, Family
from billiard_lab.utils.errors import CurvatureError, GeometryError, OverlapError, ValidationError
from billiard_lab.utils.types import Vec2

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


def _tolerance(name: str) -> float:
    return settings()["Tolerances"][name]


@dataclass(frozen=True)
class Segment:
    start: Vec2
    end: Vec2

    @property
    def length(self) -> float:
        return math.hypot(self.end[0] - self.start[0], self.end[1] - self.start[1])


@dataclass(frozen=True)
class Arc:
    """
    Circular arc starting at `start_angle` and sweeping `extent` radians around `center`,
    counterclockwise if `ccw` is set, clockwise otherwise.
    """
    center: Vec2
    radius: float
    start_angle: float
    extent: float
    ccw: bool

    @property
    def end_angle(self) -> float:
        return self.start_angle + self.extent if self.ccw else self.start_angle - self.extent

    @property
    def length(self) -> float:
        return self.radius * self.extent

    @property
    def full_circle(self) -> bool:
        return self.extent >= TWO_PI - 1e-12


Shape = Union[Segment, Arc]


class Location(NamedTuple):
    """
    Boundary point at a given arc-length.
    """
    component_id: int
    position: Vec2
    normal: Vec2
    curvature: float
    corner: bool
    s: float


class Hit(NamedTuple):
    """
    Intersection of a ray with one boundary component.
    """
    t: float
    s: float
    position: Vec2


@dataclass(frozen=True)
class BoundaryComponent:
    id: int
    shape: Shape
    curvature_class: CurvatureClass
    r_offset: float
    loop: int
    # set in __post_init__
    length: float = field(init=False)
    curvature: float = field(init=False)

    def __post_init__(self):
        shape = self.shape
        if isinstance(shape, Segment):
            if shape.length <= 0:
                raise GeometryError(f"component {self.id}: segment endpoints coincide")
            if self.curvature_class != CurvatureClass.flat:
                raise GeometryError(f"component {self.id}: segments are flat")
            curvature = 0.0
        else:
            if shape.radius <= 0 or shape.extent <= 0:
                raise GeometryError(f"component {self.id}: arc radius and extent must be positive")
            expected = CurvatureClass.focusing if shape.ccw else CurvatureClass.dispersing
            if self.curvature_class != expected:
                raise GeometryError(f"component {self.id}: orientation does not match {self.curvature_class.value}")
            curvature = -1.0 / shape.radius if shape.ccw else 1.0 / shape.radius
        object.__setattr__(self, "length", shape.length)
        object.__setattr__(self, "curvature", curvature)

    @property
    def is_arc(self) -> bool:
        return isinstance(self.shape, Arc)

    def point_at(self, s: float) -> Vec2:
        shape = self.shape
        if isinstance(shape, Segment):
            u = s / self.length
            return (shape.start[0] + u * (shape.end[0] - shape.start[0]),
                    shape.start[1] + u * (shape.end[1] - shape.start[1]))
        theta = self._angle_at(s)
        return shape.center[0] + shape.radius * math.cos(theta), shape.center[1] + shape.radius * math.sin(theta)

    def tangent_at(self, s: float) -> Vec2:
        shape = self.shape
        if isinstance(shape, Segment):
            return ((shape.end[0] - shape.start[0]) / self.length,
                    (shape.end[1] - shape.start[1]) / self.length)
        theta = self._angle_at(s)
        if shape.ccw:
            return -math.sin(theta), math.cos(theta)
        return math.sin(theta), -math.cos(theta)

    def normal_at(self, s: float) -> Vec2:
        tx, ty = self.tangent_at(s)
        return -ty, tx

    def frame_at(self, s: float) -> Tuple[Vec2, Vec2, Vec2]:
        """
        Position, unit tangent and inward unit normal at local arc-length s.
        """
        tx, ty = self.tangent_at(s)
        return self.point_at(s), (tx, ty), (-ty, tx)

    def _angle_at(self, s: float) -> float:
        shape = self.shape
        return shape.start_angle + s / shape.radius if shape.ccw else shape.start_angle - s / shape.radius

    def arclength_of(self, point: Vec2) -> float:
        """
        Local arc-length of the point of this component closest to `point`.
        """
        shape = self.shape
        if isinstance(shape, Segment):
            dx, dy = shape.end[0] - shape.start[0], shape.end[1] - shape.start[1]
            u = ((point[0] - shape.start[0]) * dx + (point[1] - shape.start[1]) * dy) / (self.length ** 2)
            return min(max(u, 0.0), 1.0) * self.length
        alpha = math.atan2(point[1] - shape.center[1], point[0] - shape.center[0])
        u = (alpha - shape.start_angle) if shape.ccw else (shape.start_angle - alpha)
        u %= TWO_PI
        if u > shape.extent:
            # closer to the start or to the end of the arc
            u = 0.0 if u > 0.5 * (shape.extent + TWO_PI) else shape.extent
        return u * shape.radius

    @property
    def start_point(self) -> Vec2:
        return self.point_at(0.0)

    @property
    def end_point(self) -> Vec2:
        return self.point_at(self.length)

    def intersect(self, origin: Vec2, direction: Vec2, departing: bool, t_min: float) -> Optional[Hit]:
        """
        First intersection of the ray origin + t * direction (t > t_min) with this component.

        Parameters
        ----------
        origin
            start of the ray, a point of the boundary.
        direction
            unit direction of the ray.
        departing
            true if the ray starts on this component; the departure root is skipped.
        t_min
            smallest accepted flight parameter.

        Returns
        -------
        Optional[Hit]
            the hit with the smallest t, None if the ray misses.
        """
        shape = self.shape
        px, py = origin
        vx, vy = direction
        if isinstance(shape, Segment):
            if departing:
                return None
            ax, ay = shape.start
            dx, dy = shape.end[0] - ax, shape.end[1] - ay
            denom = vx * dy - vy * dx
            if abs(denom) < 1e-300:
                return None
            wx, wy = ax - px, ay - py
            t = (wx * dy - wy * dx) / denom
            if t <= t_min:
                return None
            u = (wx * vy - wy * vx) / denom
            slack = 1e-12
            if u < -slack or u > 1.0 + slack:
                return None
            u = min(max(u, 0.0), 1.0)
            return Hit(t, u * self.length, (ax + u * dx, ay + u * dy))

        cx, cy = shape.center
        wx, wy = px - cx, py - cy
        b = wx * vx + wy * vy
        if departing:
            # the departure root is t = 0; the other root of the circle equation is -2b
            if not shape.ccw:
                return None
            candidates = (-2.0 * b,)
        else:
            disc = b * b - (wx * wx + wy * wy - shape.radius * shape.radius)
            if disc < 0.0:
                return None
            sq = math.sqrt(disc)
            candidates = (-b - sq, -b + sq)
        for t in candidates:
            if t <= t_min:
                continue
            qx, qy = px + t * vx, py + t * vy
            alpha = math.atan2(qy - cy, qx - cx)
            u = (alpha - shape.start_angle) if shape.ccw else (shape.start_angle - alpha)
            u %= TWO_PI
            slack = 1e-12
            if u <= shape.extent + slack or shape.full_circle:
                u = min(u, shape.extent)
            elif u >= TWO_PI - slack:
                u = 0.0
            else:
                continue
            theta = shape.start_angle + u if shape.ccw else shape.start_angle - u
            position = (cx + shape.radius * math.cos(theta), cy + shape.radius * math.sin(theta))
            return Hit(t, u * shape.radius, position)
        return None


##################################################################
# SCATTERERS OF SEMI-DISPERSING TABLES                           #
##################################################################

@dataclass(frozen=True)
class Disc:
    center: Vec2
    radius: float

    def arcs(self) -> List[Arc]:
        return [Arc(self.center, self.radius, 0.0, TWO_PI, ccw=False)]

    def contains(self, point: Vec2) -> bool:
        return math.hypot(point[0] - self.center[0], point[1] - self.center[1]) <= self.radius

    def min_curvature(self) -> float:
        return 1.0 / self.radius

    def boundary_samples(self, n: int) -> np.ndarray:
        theta = np.linspace(0.0, TWO_PI, n, endpoint=False)
        return np.column_stack([self.center[0] + self.radius * np.cos(theta),
                                self.center[1] + self.radius * np.sin(theta)])


@dataclass(frozen=True)
class ArcGon:
    """
    Convex polygon whose edges are replaced by outward bulging circular arcs of one radius.
    The result is strictly convex and piecewise smooth, with corners at the vertices.
    """
    vertices: Tuple[Vec2, ...]
    radius: float

    def _ccw_vertices(self) -> List[Vec2]:
        vertices = list(self.vertices)
        if _signed_area(vertices) < 0:
            vertices.reverse()
        return vertices

    def arc_centers(self) -> List[Vec2]:
        vertices = self._ccw_vertices()
        centers = []
        for i, a in enumerate(vertices):
            b = vertices[(i + 1) % len(vertices)]
            half = 0.5 * math.hypot(b[0] - a[0], b[1] - a[1])
            if self.radius <= half:
                raise GeometryError(f"arc-gon radius {self.radius} too small for an edge of length {2 * half}")
            # outward normal of a counterclockwise polygon edge points to the right
            nx, ny = (b[1] - a[1]) / (2 * half), -(b[0] - a[0]) / (2 * half)
            depth = math.sqrt(self.radius ** 2 - half ** 2)
            centers.append((0.5 * (a[0] + b[0]) - nx * depth, 0.5 * (a[1] + b[1]) - ny * depth))
        return centers

    def arcs(self) -> List[Arc]:
        # holes are traversed clockwise, so the vertices are walked in clockwise order
        vertices = self._ccw_vertices()
        centers = self.arc_centers()
        arcs = []
        for i in reversed(range(len(vertices))):
            a, b, c = vertices[i], vertices[(i + 1) % len(vertices)], centers[i]
            start = math.atan2(b[1] - c[1], b[0] - c[0])
            end = math.atan2(a[1] - c[1], a[0] - c[0])
            arcs.append(Arc(c, self.radius, start, (start - end) % TWO_PI, ccw=False))
        return arcs

    def contains(self, point: Vec2) -> bool:
        # the arc-gon is the intersection of the discs of its arcs
        return all(math.hypot(point[0] - c[0], point[1] - c[1]) <= self.radius for c in self.arc_centers())

    def min_curvature(self) -> float:
        return 1.0 / self.radius

    def boundary_samples(self, n: int) -> np.ndarray:
        arcs = self.arcs()
        per_arc = max(2, n // len(arcs))
        points = []
        for arc in arcs:
            theta = arc.start_angle - np.linspace(0.0, arc.extent, per_arc, endpoint=False)
            points.append(np.column_stack([arc.center[0] + arc.radius * np.cos(theta),
                                           arc.center[1] + arc.radius * np.sin(theta)]))
        return np.vstack(points)


Scatterer = Union[Disc, ArcGon]


def scatterer_gap(a: Scatterer, b: Scatterer, samples: int) -> float:
    """
    Distance between the closures of two scatterers, negative if they overlap.
    Exact for two discs, sampled otherwise.
    """
    if isinstance(a, Disc) and isinstance(b, Disc):
        return math.hypot(a.center[0] - b.center[0], a.center[1] - b.center[1]) - a.radius - b.radius
    pa, pb = a.boundary_samples(samples), b.boundary_samples(samples)
    if any(b.contains(tuple(p)) for p in pa) or any(a.contains(tuple(p)) for p in pb):
        return -1.0
    return float(cdist(pa, pb).min())


def rectangle_gap(scatterer: Scatterer, width: float, height: float, samples: int) -> float:
    """
    Distance from a scatterer to the sides of the rectangle [0, width] x [0, height],
    negative if the scatterer leaves the rectangle.
    """
    if isinstance(scatterer, Disc):
        cx, cy = scatterer.center
        return min(cx, width - cx, cy, height - cy) - scatterer.radius
    p = scatterer.boundary_samples(samples)
    return float(np.min(np.column_stack([p[:, 0], width - p[:, 0], p[:, 1], height - p[:, 1]])))


##################################################################
# TABLE                                                          #
##################################################################

@dataclass(frozen=True, eq=False)
class Table:
    """
    Immutable billiard table.

    `loops` holds (first, last) component indices of every closed boundary loop; r runs
    over the loops in order. Builders record their inputs in `parameters` and non-fatal
    findings in `warnings`.
    """
    components: Tuple[BoundaryComponent, ...]
    family: Family
    perimeter: float
    area: float
    loops: Tuple[Tuple[int, int], ...]
    parameters: Dict[str, Any] = field(default_factory=dict)
    scatterers: Tuple[Scatterer, ...] = ()
    warnings: Tuple[Tuple[str, str], ...] = ()
    _offsets: Tuple[float, ...] = field(default=(), repr=False)

    @property
    def mean_free_path(self) -> float:
        return math.pi * self.area / self.perimeter

    def component_at(self, r: float) -> BoundaryComponent:
        return self.components[bisect.bisect_right(self._offsets, r) - 1]

    def has_junctions(self, component: BoundaryComponent) -> bool:
        first, last = self.loops[component.loop]
        return last > first

    def next_in_loop(self, component: BoundaryComponent) -> BoundaryComponent:
        first, last = self.loops[component.loop]
        return self.components[first if component.id == last else component.id + 1]

    def components_of(self, curvature_class: CurvatureClass) -> List[BoundaryComponent]:
        return [c for c in self.components if c.curvature_class == curvature_class]

    def summary(self) -> Dict[str, Any]:
        return {
            "family": self.family.value,
            "parameters": self.parameters,
            "components": len(self.components),
            "perimeter": self.perimeter,
            "area": self.area,
            "mean_free_path": self.mean_free_path,
        }


def _signed_area(vertices: Sequence[Vec2]) -> float:
    return 0.5 * sum(a[0] * b[1] - b[0] * a[1] for a, b in zip(vertices, list(vertices[1:]) + [vertices[0]]))


def _green_area(shape: Shape) -> float:
    # contribution of one component to 1/2 * closed integral of (x dy - y dx)
    if isinstance(shape, Segment):
        return 0.5 * (shape.start[0] * shape.end[1] - shape.end[0] * shape.start[1])
    cx, cy = shape.center
    t0 = shape.start_angle
    t1 = shape.end_angle
    signed = shape.extent if shape.ccw else -shape.extent
    return 0.5 * (shape.radius ** 2 * signed
                  + shape.radius * (cx * (math.sin(t1) - math.sin(t0)) - cy * (math.cos(t1) - math.cos(t0))))


def _curvature_class(shape: Shape) -> CurvatureClass:
    if isinstance(shape, Segment):
        return CurvatureClass.flat
    return CurvatureClass.focusing if shape.ccw else CurvatureClass.dispersing


def assemble(loops: Sequence[Sequence[Shape]], family: Family, parameters: Optional[Dict[str, Any]] = None,
             scatterers: Sequence[Scatterer] = (), warnings: Sequence[Tuple[str, str]] = ()) -> Table:
    """
    Builds a table from closed loops of shapes.

    Parameters
    ----------
    loops
        boundary loops, each an ordered list of shapes traversed with the domain on the left.
        The outer loop comes first.
    family
        family tag of the table.

    Returns
    -------
    Table
        the assembled table.

    Raises
    ------
    GeometryError
        if a loop is not closed or the enclosed area is not positive.
    """
    components = []
    loop_bounds = []
    offset = 0.0
    for loop_id, loop in enumerate(loops):
        if not loop:
            raise GeometryError(f"boundary loop {loop_id} is empty")
        first = len(components)
        for shape in loop:
            component = BoundaryComponent(len(components), shape, _curvature_class(shape), offset, loop_id)
            components.append(component)
            offset += component.length
        loop_bounds.append((first, len(components) - 1))

    perimeter = offset
    closure = _tolerance("closure") * max(1.0, perimeter)
    for first, last in loop_bounds:
        for i in range(first, last + 1):
            nxt = components[first if i == last else i + 1]
            end, start = components[i].end_point, nxt.start_point
            if math.hypot(end[0] - start[0], end[1] - start[1]) > closure:
                raise GeometryError(f"boundary is not closed between components {i} and {nxt.id}")

    area = sum(_green_area(c.shape) for c in components)
    if area <= 0:
        raise GeometryError(f"table area must be positive, got {area}")

    table = Table(tuple(components), family, perimeter, area, tuple(loop_bounds), dict(parameters or {}),
                  tuple(scatterers), tuple(warnings), tuple(c.r_offset for c in components))
    logger.debug("assembled %s table: %d components, perimeter %.6f, area %.6f",
                 family.value, len(components), perimeter, area)
    return table


def locate(table: Table, r: float) -> Location:
    """
    Boundary point at arc-length r.

    Parameters
    ----------
    table
        the table.
    r
        arc-length in [0, perimeter); other values are reduced modulo the perimeter.

    Returns
    -------
    Location
        component id, position, inward normal, signed curvature, corner flag and local
        arc-length. Within the corner tolerance of a junction the junction itself is
        returned with the corner flag set.
    """
    r %= table.perimeter
    component = table.component_at(r)
    s = r - component.r_offset
    corner = False
    if table.has_junctions(component):
        eps = _tolerance("corner")
        if s < eps:
            s, corner = 0.0, True
        elif component.length - s < eps:
            s, corner = component.length, True
    s = min(s, component.length)
    position, _, normal = component.frame_at(s)
    return Location(component.id, position, normal, component.curvature, corner, s)


##################################################################
# BUILDERS                                                       #
##################################################################

def _rectangle_loop(width: float, height: float) -> List[Shape]:
    corners = [(0.0, 0.0), (width, 0.0), (width, height), (0.0, height)]
    return [Segment(corners[i], corners[(i + 1) % 4]) for i in range(4)]


def build_semidispersing(width: float, height: float, scatterers: Sequence[Scatterer],
                         check: bool = True) -> Table:
    """
    Rectangle [0, width] x [0, height] with strictly convex scatterers inside.

    Parameters
    ----------
    width, height
        sides of the rectangle.
    scatterers
        discs and arc-gons, strictly inside the rectangle and pairwise disjoint.
    check
        enforce disjointness and curvature at construction. validate() reports the same
        rules as data for tables built with check unset.

    Returns
    -------
    Table
        family semi-dispersing. The rectangle is the outer loop, every scatterer adds a
        clockwise loop of dispersing arcs.

    Raises
    ------
    OverlapError
        if scatterer closures intersect each other or the rectangle sides.
    CurvatureError
        if a scatterer curvature is not bounded away from zero.
    """
    if width <= 0 or height <= 0:
        raise GeometryError("rectangle sides must be positive")
    samples = settings()["Validation"]["overlap_samples"]
    warnings = []
    if check:
        for i, scatterer in enumerate(scatterers):
            if scatterer.min_curvature() < _tolerance("min_curvature"):
                raise CurvatureError(f"scatterer {i} curvature {scatterer.min_curvature()} is not bounded away from zero")
            if rectangle_gap(scatterer, width, height, samples) <= 0:
                raise OverlapError(f"scatterer {i} touches or leaves the rectangle")
            for j in range(i):
                if scatterer_gap(scatterers[j], scatterer, samples) <= 0:
                    raise OverlapError(f"scatterers {j} and {i} overlap")
    if not scatterers:
        warnings.append(("no-dispersing-component", "no dispersing component: the dynamics is integrable"))
        logger.warning("semi-dispersing table without scatterers")
    loops = [_rectangle_loop(width, height)] + [s.arcs() for s in scatterers]
    parameters = {"width": width, "height": height, "scatterers": [_describe_scatterer(s) for s in scatterers]}
    return assemble(loops, Family.semi_dispersing, parameters, scatterers, warnings)


def _describe_scatterer(scatterer: Scatterer) -> Dict[str, Any]:
    if isinstance(scatterer, Disc):
        return {"disc": {"center": list(scatterer.center), "radius": scatterer.radius}}
    return {"arcgon": {"vertices": [list(v) for v in scatterer.vertices], "radius": scatterer.radius}}


@dataclass(frozen=True)
class FlowerArc:
    """
    Focusing petal: arc of the circle (center, radius) from start_angle, counterclockwise.
    """
    center: Vec2
    radius: float
    start_angle: float
    extent: float

    def to_arc(self) -> Arc:
        return Arc(self.center, self.radius, self.start_angle, self.extent, ccw=True)


def dispersing_wall(a: Vec2, b: Vec2, radius: Optional[float]) -> Shape:
    """
    Wall from a to b bulging into the domain with the given radius, or a segment.

    Raises
    ------
    GeometryError
        if the radius is smaller than half the chord.
    """
    if not radius:
        return Segment(a, b)
    dx, dy = b[0] - a[0], b[1] - a[1]
    chord = math.hypot(dx, dy)
    if radius <= 0.5 * chord:
        raise GeometryError(f"wall radius {radius} is smaller than half the chord {0.5 * chord}")
    # the center lies outside the domain, i.e. to the right of the chord
    depth = math.sqrt(radius ** 2 - (0.5 * chord) ** 2)
    cx, cy = 0.5 * (a[0] + b[0]) + depth * dy / chord, 0.5 * (a[1] + b[1]) - depth * dx / chord
    start = math.atan2(a[1] - cy, a[0] - cx)
    end = math.atan2(b[1] - cy, b[0] - cx)
    return Arc((cx, cy), radius, start, (start - end) % TWO_PI, ccw=False)


def build_flower(arcs: Sequence[FlowerArc], walls: Sequence[Optional[float]], pathological: bool = False,
                 check: bool = True, extra: Optional[Dict[str, Any]] = None) -> Table:
    """
    Flower table: focusing petals joined by walls.

    Parameters
    ----------
    arcs
        petals in counterclockwise order.
    walls
        walls[i] joins the end of arcs[i] to the start of arcs[i + 1]: the radius of a
        dispersing arc bulging into the domain, or None for a flat wall.
    pathological
        accept petals of extent >= pi with a warning instead of an error.
    check
        validate against the flower hypotheses and raise on violations.
    extra
        further entries recorded in the table parameters.

    Returns
    -------
    Table
        family flower.

    Raises
    ------
    ValidationError
        on half-circle (unless pathological), circle-containment or cusp violations.
    """
    from billiard_lab.calculations.validation import validate

    if len(walls) != len(arcs):
        raise GeometryError("a flower needs exactly one wall after every petal")
    shapes: List[Shape] = []
    petals = [a.to_arc() for a in arcs]
    for i, petal in enumerate(petals):
        shapes.append(petal)
        nxt = petals[(i + 1) % len(petals)]
        end = (petal.center[0] + petal.radius * math.cos(petal.end_angle),
               petal.center[1] + petal.radius * math.sin(petal.end_angle))
        start = (nxt.center[0] + nxt.radius * math.cos(nxt.start_angle),
                 nxt.center[1] + nxt.radius * math.sin(nxt.start_angle))
        shapes.append(dispersing_wall(end, start, walls[i]))
    parameters = {
        "arcs": [{"center": list(a.center), "radius": a.radius, "start_angle": a.start_angle, "extent": a.extent}
                 for a in arcs],
        "walls": list(walls),
        "pathological": pathological,
    }
    parameters.update(extra or {})
    table = assemble([shapes], Family.flower, parameters)
    if not check:
        return table
    report = validate(table)
    warnings = list(report.warnings)
    for rule, message in report.violations:
        if rule == "half-circle" and pathological:
            warnings.append((rule, message))
            logger.warning("pathological flower accepted: %s", message)
        else:
            raise ValidationError(message, rule)
    return assemble([shapes], Family.flower, parameters, warnings=warnings)


def build_symmetric_flower(petals: int = 3, extent: float = 0.8 * math.pi, petal_radius: float = 1.0,
                           center_distance: float = 1.0, wall_radius: Optional[float] = None,
                           pathological: bool = False, check: bool = True) -> Table:
    """
    Flower with rotational symmetry: `petals` arcs of the given extent whose centers sit at
    `center_distance` from the origin, joined by dispersing walls.

    When no wall radius is given it is chosen so that every wall leaves the adjacent petal
    circles at half the available angle.
    """
    if petals < 2:
        raise GeometryError("a flower needs at least two petals")
    half = 0.5 * extent
    arcs = []
    for i in range(petals):
        alpha = TWO_PI * i / petals
        center = (center_distance * math.cos(alpha), center_distance * math.sin(alpha))
        arcs.append(FlowerArc(center, petal_radius, alpha - half, extent))
    if wall_radius is None:
        spare = half - math.pi / petals
        if spare <= 0:
            raise GeometryError(f"petals of extent {extent} are too short to close {petals} petals with dispersing walls")
        end = (arcs[0].center[0] + petal_radius * math.cos(half), arcs[0].center[1] + petal_radius * math.sin(half))
        chord = 2.0 * math.hypot(*end) * math.sin(math.pi / petals - math.atan2(end[1], end[0]))
        if chord <= 0:
            raise GeometryError(f"center distance {center_distance} lets neighbouring petals overlap")
        wall_radius = 0.5 * chord / math.sin(0.5 * spare)
    return build_flower(arcs, [wall_radius] * petals, pathological=pathological, check=check,
                        extra={"petals": petals, "extent": extent, "petal_radius": petal_radius,
                               "center_distance": center_distance, "wall_radius": wall_radius})


def build_stadium(flat_length: float, arc_radius: float) -> Table:
    """
    Straight stadium: two half circles joined by two parallel tangent segments.

    The left arc is centered at the origin, the right one at (flat_length, 0); r starts at
    the lower end of the bottom segment.
    """
    if flat_length <= 0 or arc_radius <= 0:
        raise GeometryError("flat length and arc radius of a stadium must be positive")
    a, R = flat_length, arc_radius
    shapes = [
        Segment((0.0, -R), (a, -R)),
        Arc((a, 0.0), R, -0.5 * math.pi, math.pi, ccw=True),
        Segment((a, R), (0.0, R)),
        Arc((0.0, 0.0), R, 0.5 * math.pi, math.pi, ccw=True),
    ]
    return assemble([shapes], Family.straight_stadium, {"flat_length": a, "arc_radius": R})


def build_drivebelt(big_radius: float, small_radius: float, center_distance: float) -> Table:
    """
    Drive-belt table: two circles joined by their external common tangents.

    The big circle is centered at the origin, the small one at (center_distance, 0). The
    tangent points sit at polar angle +-gamma on both circles with
    cos(gamma) = (big_radius - small_radius) / center_distance, so the big arc has extent
    2 pi - 2 gamma > pi.

    Raises
    ------
    GeometryError
        if the radii are not ordered or the common tangents do not exist.
    """
    if small_radius <= 0:
        raise GeometryError("radii must be positive")
    if big_radius <= small_radius:
        raise GeometryError("drive-belt needs big radius > small radius; equal radii give a straight stadium")
    if center_distance <= big_radius - small_radius:
        raise GeometryError(f"center distance {center_distance} does not exceed the radius difference "
                            f"{big_radius - small_radius}, no external tangents")
    gamma = math.acos((big_radius - small_radius) / center_distance)
    R1, R2, d = big_radius, small_radius, center_distance

    def on_big(angle):
        return R1 * math.cos(angle), R1 * math.sin(angle)

    def on_small(angle):
        return d + R2 * math.cos(angle), R2 * math.sin(angle)

    shapes = [
        Segment(on_big(-gamma), on_small(-gamma)),
        Arc((d, 0.0), R2, -gamma, 2.0 * gamma, ccw=True),
        Segment(on_small(gamma), on_big(gamma)),
        Arc((0.0, 0.0), R1, gamma, TWO_PI - 2.0 * gamma, ccw=True),
    ]
    table = assemble([shapes], Family.drive_belt,
                     {"big_radius": R1, "small_radius": R2, "center_distance": d})
    if table.components[3].shape.extent <= math.pi:
        raise GeometryError("tangent construction did not produce an arc longer than a half circle")
    return table


def build_truncated_stadium(flat_length: float, arc_radius: float, half_width: float) -> Table:
    """
    Two parallel segments at y = +-half_width closed by two focusing arcs shorter than a
    half circle, which meet the segments transversally.
    """
    if flat_length <= 0 or arc_radius <= 0 or half_width <= 0:
        raise GeometryError("truncated stadium parameters must be positive")
    if half_width >= arc_radius:
        raise GeometryError("half width must be smaller than the arc radius")
    a, R, h = flat_length, arc_radius, half_width
    beta = math.asin(h / R)
    depth = math.sqrt(R * R - h * h)
    shapes = [
        Segment((0.0, -h), (a, -h)),
        Arc((a - depth, 0.0), R, -beta, 2.0 * beta, ccw=True),
        Segment((a, h), (0.0, h)),
        Arc((depth, 0.0), R, math.pi - beta, 2.0 * beta, ccw=True),
    ]
    return assemble([shapes], Family.truncated_stadium,
                    {"flat_length": a, "arc_radius": R, "half_width": h})


def build_disc(radius: float = 1.0) -> Table:
    """
    Circular table centered at the origin; r = 0 is the point (radius, 0).
    """
    if radius <= 0:
        raise GeometryError("disc radius must be positive")
    table = assemble([[Arc((0.0, 0.0), radius, 0.0, TWO_PI, ccw=True)]], Family.custom, {"disc": radius},
                     warnings=[("custom", "custom table: no theorem applies")])
    return table


def _polygon(vertices: Sequence[Vec2], parameters: Optional[Dict[str, Any]]) -> Table:
    if len(vertices) < 3:
        raise GeometryError("a polygon needs at least three vertices")
    vertices = [tuple(map(float, v)) for v in vertices]
    if _signed_area(vertices) < 0:
        vertices.reverse()
    shapes = [Segment(vertices[i], vertices[(i + 1) % len(vertices)]) for i in range(len(vertices))]
    if parameters is None:
        parameters = {"polygon": [list(v) for v in vertices]}
    return assemble([shapes], Family.custom, parameters, warnings=[("custom", "custom table: no theorem applies")])


def build_polygon(vertices: Sequence[Vec2]) -> Table:
    return _polygon(vertices, None)


def build_rectangle(width: float, height: float) -> Table:
    if width <= 0 or height <= 0:
        raise GeometryError("rectangle sides must be positive")
    return _polygon([(0.0, 0.0), (width, 0.0), (width, height), (0.0, height)], {"rectangle": [width, height]})
