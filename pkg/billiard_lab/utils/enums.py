from enum import Enum


class Family(Enum):
    """
    Table family. Each family comes with the hypotheses of the theorem that covers it.
    """

    # Rectangle with strictly convex scatterers
    semi_dispersing = "semi-dispersing"
    # Focusing circular arcs joined by dispersing (or flat) walls
    flower = "flower"
    # Two half circles joined by two parallel tangent segments
    straight_stadium = "straight-stadium"
    # Skewed stadium, one arc longer than a half circle
    drive_belt = "drive-belt"
    # Parallel segments closed by arcs shorter than a half circle, transversal junctions
    truncated_stadium = "truncated-stadium"
    # Test tables without a theorem (disc, polygons)
    custom = "custom"


class CurvatureClass(Enum):
    dispersing = "dispersing"
    focusing = "focusing"
    flat = "flat"


class SubsetRule(Enum):
    """
    Rule selecting the subset M on which the induced map lives.
    """

    # M = all collisions with dispersing components
    scatterer = "scatterer-collisions"
    # Dispersing collisions plus the first collision of every run on a focusing arc
    first_arc = "first-arc-collision"
    # Only the first collision of every run on an arc
    first_arc_only = "first-arc-collision-arcs-only"
    # Only the last collision of every run on an arc
    last_arc_only = "last-arc-collision-arcs-only"


class CellKind(Enum):
    sliding = "sliding"
    diametric = "diametric"
    flat_run_direct = "flat-run-direct"
    flat_run_indirect = "flat-run-indirect"
    ih_escape = "ih-escape"
    regular = "regular"


class MapKind(Enum):
    # Collision map
    full = "full"
    # First-return map to M
    induced = "induced"


class ExperimentKind(Enum):
    validate = "validate"
    orbit = "orbit"
    correlation = "correlation"
    tail = "tail"
    cells = "cells"
    diagnostics = "diagnostics"
    mean_free_path = "mfp"
    invariance = "invariance"
