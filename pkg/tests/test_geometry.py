import math

import pytest

from billiard_lab.calculations.geometry import (ArcGon, Disc, build_disc, build_drivebelt, build_polygon,
                                                build_rectangle, build_semidispersing, build_stadium,
                                                build_symmetric_flower, build_truncated_stadium, locate)
from billiard_lab.utils.enums import CurvatureClass, Family
from billiard_lab.utils.errors import GeometryError, OverlapError, ValidationError


def test_stadium_layout(stadium):
    assert stadium.family == Family.straight_stadium
    assert len(stadium.components) == 4
    assert [c.id for c in stadium.components] == [0, 1, 2, 3]
    assert [c.curvature_class for c in stadium.components] == [CurvatureClass.flat, CurvatureClass.focusing,
                                                              CurvatureClass.flat, CurvatureClass.focusing]
    assert stadium.perimeter == pytest.approx(4.0 + 2.0 * math.pi)
    assert stadium.area == pytest.approx(4.0 + math.pi)


def test_mean_free_path_formula(stadium, disc):
    assert stadium.mean_free_path == pytest.approx(math.pi * (4.0 + math.pi) / (4.0 + 2.0 * math.pi))
    assert disc.mean_free_path == pytest.approx(math.pi / 2)


def test_focusing_curvature_is_negative(stadium):
    arc = stadium.components[1]
    assert arc.curvature == pytest.approx(-1.0)
    assert stadium.components[0].curvature == 0.0


def test_semidispersing_scatterer_is_dispersing(semidispersing):
    dispersing = semidispersing.components_of(CurvatureClass.dispersing)
    assert len(dispersing) >= 1
    assert all(c.curvature == pytest.approx(4.0) for c in dispersing)
    assert semidispersing.area == pytest.approx(1.0 - math.pi / 16)
    assert len(semidispersing.loops) == 2


def test_locate_interior_point(stadium):
    location = locate(stadium, 1.0)
    assert location.component_id == 0
    assert location.position == pytest.approx((1.0, -1.0))
    assert location.normal == pytest.approx((0.0, 1.0))
    assert not location.corner


def test_locate_reduces_modulo_perimeter(stadium):
    assert locate(stadium, 1.0 + stadium.perimeter).position == pytest.approx((1.0, -1.0))


def test_locate_flags_junction(stadium):
    location = locate(stadium, 2.0)
    assert location.corner
    assert location.position == pytest.approx((2.0, -1.0))


def test_disc_has_no_junction(disc):
    assert not disc.has_junctions(disc.components[0])
    assert not locate(disc, 0.0).corner


def test_boundary_closes(stadium, drivebelt, truncated, flower):
    for table in (stadium, drivebelt, truncated, flower):
        for component in table.components:
            nxt = table.next_in_loop(component)
            end, start = component.end_point, nxt.start_point
            assert math.hypot(end[0] - start[0], end[1] - start[1]) < 1e-9


def test_drivebelt_big_arc(drivebelt):
    extents = sorted(c.shape.extent for c in drivebelt.components if c.is_arc)
    assert extents[0] < math.pi < extents[1]
    assert extents[0] + extents[1] == pytest.approx(2.0 * math.pi)


def test_drivebelt_rejects_equal_radii():
    with pytest.raises(GeometryError):
        build_drivebelt(1.0, 1.0, 2.0)


def test_truncated_stadium_arcs_shorter_than_half_circle(truncated):
    assert all(c.shape.extent < math.pi for c in truncated.components if c.is_arc)


def test_truncated_stadium_rejects_wide_strip():
    with pytest.raises(GeometryError):
        build_truncated_stadium(2.0, 1.0, 1.0)


def test_flower_components(flower):
    assert flower.family == Family.flower
    assert len(flower.components_of(CurvatureClass.focusing)) == 3
    assert len(flower.components_of(CurvatureClass.dispersing)) == 3


def test_flower_large_arc_rejected():
    with pytest.raises(ValidationError) as e:
        build_symmetric_flower(3, 1.1 * math.pi)
    assert e.value.rule == "half-circle"


def test_pathological_flower_accepted_with_warning():
    table = build_symmetric_flower(3, 1.1 * math.pi, pathological=True)
    assert any(rule == "half-circle" for rule, _ in table.warnings)


def test_overlapping_scatterers_rejected():
    with pytest.raises(OverlapError):
        build_semidispersing(1.0, 1.0, [Disc((0.4, 0.5), 0.2), Disc((0.6, 0.5), 0.2)])


def test_scatterer_touching_wall_rejected():
    with pytest.raises(OverlapError):
        build_semidispersing(1.0, 1.0, [Disc((0.2, 0.5), 0.25)])


def test_arcgon_scatterer():
    arcgon = ArcGon(((0.4, 0.4), (0.6, 0.4), (0.5, 0.6)), 0.5)
    table = build_semidispersing(1.0, 1.0, [arcgon])
    assert len(table.components_of(CurvatureClass.dispersing)) == 3
    assert table.area < 1.0


def test_custom_tables():
    assert build_disc(2.0).perimeter == pytest.approx(4.0 * math.pi)
    assert build_rectangle(2.0, 1.0).area == pytest.approx(2.0)
    triangle = build_polygon([(0, 0), (0, 1), (1, 0)])
    assert triangle.area == pytest.approx(0.5)
    assert triangle.family == Family.custom


def test_invalid_sizes():
    with pytest.raises(GeometryError):
        build_stadium(0.0, 1.0)
    with pytest.raises(GeometryError):
        build_disc(-1.0)


def test_locate_inverts_the_parametrization(stadium, drivebelt, flower, semidispersing, rng):
    for table in (stadium, drivebelt, flower, semidispersing):
        for r in rng.random(10 ** 4) * table.perimeter:
            location = locate(table, r)
            if location.corner:
                continue
            component = table.components[location.component_id]
            assert abs(component.r_offset + component.arclength_of(location.position) - r) < 1e-9


def test_builders_record_parameters():
    table = build_symmetric_flower(3, 0.8 * math.pi)
    assert table.parameters["petals"] == 3
    assert table.parameters["extent"] == pytest.approx(0.8 * math.pi)
    assert len(table.parameters["arcs"]) == 3
    assert build_rectangle(2.0, 1.0).parameters == {"rectangle": [2.0, 1.0]}
    assert "polygon" in build_polygon([(0, 0), (1, 0), (0, 1)]).parameters
