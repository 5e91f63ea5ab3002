import dataclasses
import math

import numpy as np
import pytest

from billiard_lab.calculations.dynamics import CollisionEvent, PhasePoint, collision_map, inverse_collision_map
from billiard_lab.calculations.induced import (REGULAR, SubsetSpec, classify_cell, estimate_kac, in_M,
                                               induced_tangent_map, return_map, sample_excursions, sample_in_M)
from billiard_lab.utils.enums import CellKind, CurvatureClass, Family, SubsetRule
from billiard_lab.utils.errors import DynamicsError, MissingPrevError, SpecCompatibilityError


def _event(table, component_id, phi=0.3):
    component = table.components[component_id]
    s = 0.5 * component.length
    return CollisionEvent(PhasePoint(component.r_offset + s, phi), component.point_at(s), 1.0, component_id,
                          False, False, component.curvature, math.cos(phi))


def test_spec_defaults(stadium, flower, semidispersing):
    assert SubsetSpec.for_table(stadium).rule == SubsetRule.first_arc_only
    assert SubsetSpec.for_table(flower).rule == SubsetRule.first_arc
    spec = SubsetSpec.for_table(semidispersing)
    assert spec.rule == SubsetRule.scatterer
    assert spec.phi_slide == pytest.approx(1.2)
    assert spec.phi_diam == pytest.approx(0.35)


def test_spec_compatibility(stadium, disc):
    with pytest.raises(SpecCompatibilityError):
        SubsetSpec(SubsetRule.scatterer, Family.straight_stadium)
    with pytest.raises(SpecCompatibilityError):
        SubsetSpec.for_table(disc)
    assert SubsetSpec.for_table(stadium, SubsetRule.last_arc_only).needs_next


def test_first_arc_rule_needs_prev(stadium):
    spec = SubsetSpec.for_table(stadium)
    x = PhasePoint(2.0 + math.pi / 2, 0.4)
    with pytest.raises(MissingPrevError):
        in_M(stadium, spec, x)
    prev = inverse_collision_map(stadium, x).point
    assert in_M(stadium, spec, x, prev) == (stadium.component_at(prev.r).id != 1)


def test_flat_collisions_are_never_in_M(stadium):
    spec = SubsetSpec.for_table(stadium)
    assert not in_M(stadium, spec, PhasePoint(1.0, 0.2))


def test_scatterer_membership(semidispersing):
    spec = SubsetSpec.for_table(semidispersing)
    disc = semidispersing.components_of(CurvatureClass.dispersing)[0]
    assert in_M(semidispersing, spec, PhasePoint(disc.r_offset + 0.3, 0.1))
    assert not in_M(semidispersing, spec, PhasePoint(0.5, 0.1))


def test_last_arc_rule_looks_ahead(stadium):
    spec = SubsetSpec.for_table(stadium, SubsetRule.last_arc_only)
    x = PhasePoint(2.0 + math.pi / 2, 0.4)
    assert in_M(stadium, spec, x) == (collision_map(stadium, x).component_id != 1)


@pytest.mark.parametrize("rule", list(SubsetRule))
def test_sampled_points_are_in_M(stadium, flower, semidispersing, rng, rule):
    table = {SubsetRule.scatterer: semidispersing, SubsetRule.first_arc: flower}.get(rule, stadium)
    spec = SubsetSpec.for_table(table, rule)
    for _ in range(20):
        x, attempts = sample_in_M(table, spec, rng)
        assert attempts >= 1
        prev = inverse_collision_map(table, x).point if spec.needs_prev else None
        assert in_M(table, spec, x, prev)


@pytest.mark.parametrize("rule", [SubsetRule.first_arc_only, SubsetRule.last_arc_only])
def test_return_lands_in_M(stadium, rng, rule):
    spec = SubsetSpec.for_table(stadium, rule)
    for _ in range(20):
        x, _ = sample_in_M(stadium, spec, rng)
        record = return_map(stadium, spec, x, keep_events=True)
        if record.truncated:
            continue
        assert record.R >= 1
        assert len(record.events) == record.R + 1
        assert record.end == record.events[-1].point
        previous = record.events[-2].point
        assert in_M(stadium, spec, record.end, previous)


def test_return_map_censoring(stadium, rng):
    spec = SubsetSpec.for_table(stadium)
    censored = 0
    for _ in range(50):
        x, _ = sample_in_M(stadium, spec, rng)
        record = return_map(stadium, spec, x, r_max=1)
        assert record.R <= 1
        if record.censored:
            censored += 1
            assert record.cell == REGULAR
            with pytest.raises(DynamicsError):
                induced_tangent_map(stadium, spec, record)
    assert censored > 0


def test_induced_tangent_map_determinant(flower, rng):
    spec = SubsetSpec.for_table(flower)
    for _ in range(20):
        x, _ = sample_in_M(flower, spec, rng)
        record = return_map(flower, spec, x, keep_events=True)
        if record.truncated or min(e.cos_phi for e in record.events) < 1e-2:
            continue
        matrix = induced_tangent_map(flower, spec, record)
        ratio = record.events[0].cos_phi / record.events[-1].cos_phi
        assert abs(np.linalg.det(matrix)) == pytest.approx(ratio, rel=1e-6)
        # without stored events the excursion is traced again
        retraced = induced_tangent_map(flower, spec, dataclasses.replace(record, events=None))
        assert retraced == pytest.approx(matrix)


def test_flat_run_cells(stadium):
    spec = SubsetSpec.for_table(stadium)
    direct = [_event(stadium, c) for c in (1, 0, 2, 0, 2)]
    assert classify_cell(direct, stadium, spec)[:2] == (CellKind.flat_run_direct, 4)
    indirect = [_event(stadium, c) for c in (1, 1, 0, 2)]
    assert classify_cell(indirect, stadium, spec)[:2] == (CellKind.flat_run_indirect, 2)
    assert classify_cell([_event(stadium, 1)], stadium, spec) == REGULAR


def test_sliding_cell(drivebelt):
    label = classify_cell([_event(drivebelt, 3, 1.4) for _ in range(4)], drivebelt)
    assert (label.kind, label.n, label.anchor) == (CellKind.sliding, 4, 3)


def test_diametric_cell_needs_long_arc(drivebelt, stadium):
    label = classify_cell([_event(drivebelt, 3, 0.1) for _ in range(5)], drivebelt)
    assert label[:2] == (CellKind.diametric, 5)
    # half circles are not long enough
    assert classify_cell([_event(stadium, 1, 0.1) for _ in range(5)], stadium) == REGULAR


def test_ih_escape_cell(semidispersing):
    disc = semidispersing.components_of(CurvatureClass.dispersing)[0].id
    label = classify_cell([_event(semidispersing, c) for c in (disc, 0, 2, 0)], semidispersing)
    assert label[:2] == (CellKind.ih_escape, 3)
    assert classify_cell([_event(semidispersing, disc)], semidispersing) == REGULAR


def test_excursions_do_not_depend_on_workers(stadium):
    spec = SubsetSpec.for_table(stadium)
    single = sample_excursions(stadium, spec, 40, seed=11, r_max=1000, workers=1)
    pooled = sample_excursions(stadium, spec, 40, seed=11, r_max=1000, workers=2)
    assert single.size == pooled.size == 40
    np.testing.assert_array_equal(single.R, pooled.R)
    np.testing.assert_array_equal(single.start_r, pooled.start_r)
    assert single.attempts == pooled.attempts


def test_excursion_frame(stadium):
    spec = SubsetSpec.for_table(stadium)
    frame = sample_excursions(stadium, spec, 20, seed=3, r_max=1000).to_frame()
    assert list(frame.columns) == ["start_r", "start_phi", "R", "flat_bounces", "cell_kind", "cell_n", "censored"]
    assert len(frame) == 20
    assert (frame["R"] >= 1).all()


def test_kac_identity(stadium):
    check = estimate_kac(stadium, SubsetSpec.for_table(stadium), 2000, seed=5, r_max=20000)
    assert check.mean_return > 1.0
    assert check.z < 4.0


def test_return_from_stadium_apex(stadium):
    spec = SubsetSpec.for_table(stadium)
    x = PhasePoint(2.0 + math.pi / 2, 0.0)
    assert in_M(stadium, spec, x, inverse_collision_map(stadium, x).point)
    record = return_map(stadium, spec, x)
    assert record.R == 1
    assert record.cell == REGULAR
    assert record.end_component == 3
    assert record.end.r == pytest.approx(4.0 + 1.5 * math.pi, abs=1e-12)
