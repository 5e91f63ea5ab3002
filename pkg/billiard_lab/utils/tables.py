"""
Table definitions: the `family:key=val,...` shorthand of the command line and JSON files.

A JSON definition holds either a family and its builder parameters

    {"family": "straight-stadium", "parameters": {"flat_length": 2, "arc_radius": 1}}

or an explicit list of boundary loops

    {"family": "custom", "loops": [[{"segment": {"start": [0, 0], "end": [1, 0]}}, ...]]}
"""
import json
import logging
import math
import os
from typing import Any, Callable, Dict, List, Tuple

from billiard_lab.calculations.geometry import (Arc, ArcGon, Disc, FlowerArc, Segment, Table, assemble,
                                                build_disc, build_drivebelt, build_flower, build_polygon,
                                                build_rectangle, build_semidispersing, build_stadium,
                                                build_symmetric_flower, build_truncated_stadium)
from billiard_lab.utils.config import instance_path, parse_enum
from billiard_lab.utils.enums import Family
from billiard_lab.utils.errors import ConfigError
from billiard_lab.utils.types import TableDefinition

logger = logging.getLogger(__name__)


def _number(parameters: Dict[str, Any], key: str, default=None) -> float:
    value = parameters.get(key, default)
    if value is None:
        raise ConfigError(f"missing table parameter {key}")
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"table parameter {key} is not a number: {value}")


def _flag(parameters: Dict[str, Any], key: str) -> bool:
    value = parameters.get(key, False)
    if isinstance(value, str):
        return value.lower() in ("1", "true", "yes")
    return bool(value)


def _scatterer(description: Dict[str, Any]):
    if "disc" in description:
        disc = description["disc"]
        return Disc(tuple(map(float, disc["center"])), float(disc["radius"]))
    if "arcgon" in description:
        arcgon = description["arcgon"]
        return ArcGon(tuple(tuple(map(float, v)) for v in arcgon["vertices"]), float(arcgon["radius"]))
    raise ConfigError(f"unsupported scatterer {description}")


def stadium_table(parameters: Dict[str, Any], check: bool) -> Table:
    return build_stadium(_number(parameters, "flat_length", parameters.get("l", 2.0)),
                         _number(parameters, "arc_radius", parameters.get("r", 1.0)))


def drivebelt_table(parameters: Dict[str, Any], check: bool) -> Table:
    return build_drivebelt(_number(parameters, "big_radius", parameters.get("big")),
                           _number(parameters, "small_radius", parameters.get("small")),
                           _number(parameters, "center_distance", parameters.get("d")))


def truncated_table(parameters: Dict[str, Any], check: bool) -> Table:
    return build_truncated_stadium(_number(parameters, "flat_length", parameters.get("l", 2.0)),
                                   _number(parameters, "arc_radius", parameters.get("r", 1.0)),
                                   _number(parameters, "half_width", parameters.get("h")))


def flower_table(parameters: Dict[str, Any], check: bool) -> Table:
    if "arcs" in parameters:
        arcs = [FlowerArc(tuple(map(float, a["center"])), float(a["radius"]), float(a["start_angle"]),
                          float(a["extent"])) for a in parameters["arcs"]]
        walls = [None if w is None else float(w) for w in parameters.get("walls", [None] * len(arcs))]
        return build_flower(arcs, walls, _flag(parameters, "pathological"), check)
    if "extent_pi" in parameters:
        extent = math.pi * _number(parameters, "extent_pi")
    else:
        extent = _number(parameters, "extent", 0.8 * math.pi)
    wall_radius = parameters.get("wall_radius")
    return build_symmetric_flower(
        petals=int(_number(parameters, "petals", parameters.get("n", 3))),
        extent=extent,
        petal_radius=_number(parameters, "petal_radius", parameters.get("radius", 1.0)),
        center_distance=_number(parameters, "center_distance", parameters.get("d", 1.0)),
        wall_radius=None if wall_radius is None else float(wall_radius),
        pathological=_flag(parameters, "pathological"),
        check=check,
    )


def semidispersing_table(parameters: Dict[str, Any], check: bool) -> Table:
    width = _number(parameters, "width", parameters.get("w", 1.0))
    height = _number(parameters, "height", parameters.get("h", 1.0))
    if "scatterers" in parameters:
        scatterers = [_scatterer(s) for s in parameters["scatterers"]]
    elif "rho" in parameters:
        center = (_number(parameters, "cx", width / 2), _number(parameters, "cy", height / 2))
        scatterers = [Disc(center, _number(parameters, "rho"))]
    else:
        scatterers = []
    return build_semidispersing(width, height, scatterers, check)


def disc_table(parameters: Dict[str, Any], check: bool) -> Table:
    return build_disc(_number(parameters, "radius", parameters.get("r", 1.0)))


def rectangle_table(parameters: Dict[str, Any], check: bool) -> Table:
    return build_rectangle(_number(parameters, "width", parameters.get("w", 1.0)),
                           _number(parameters, "height", parameters.get("h", 1.0)))


def polygon_table(parameters: Dict[str, Any], check: bool) -> Table:
    return build_polygon([tuple(map(float, v)) for v in parameters["vertices"]])


supported_families: Dict[str, Callable[[Dict[str, Any], bool], Table]] = {
    "stadium": stadium_table,
    "drivebelt": drivebelt_table,
    "truncated": truncated_table,
    "flower": flower_table,
    "semidispersing": semidispersing_table,
    "disc": disc_table,
    "rectangle": rectangle_table,
    "polygon": polygon_table,
}

# JSON family tags
_family_builders: Dict[Family, str] = {
    Family.straight_stadium: "stadium",
    Family.drive_belt: "drivebelt",
    Family.truncated_stadium: "truncated",
    Family.flower: "flower",
    Family.semi_dispersing: "semidispersing",
}


def parse_shorthand(text: str) -> TableDefinition:
    """
    Parses `family:key=val,key=val`.

    Examples
    --------
    >>> parse_shorthand("stadium:l=2,r=1")
    {'builder': 'stadium', 'parameters': {'l': 2.0, 'r': 1.0}}
    """
    name, _, rest = text.partition(":")
    name = name.strip().lower()
    if name not in supported_families:
        raise ConfigError(f"unsupported table family {name} (supported: {', '.join(supported_families)})")
    parameters: Dict[str, Any] = {}
    for item in filter(None, (p.strip() for p in rest.split(","))):
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"table parameter {item} is not of the form key=value")
        try:
            parameters[key.strip()] = float(value)
        except ValueError:
            parameters[key.strip()] = value.strip()
    return {"builder": name, "parameters": parameters}


def _shape(description: Dict[str, Any]):
    if "segment" in description:
        s = description["segment"]
        return Segment(tuple(map(float, s["start"])), tuple(map(float, s["end"])))
    if "arc" in description:
        a = description["arc"]
        return Arc(tuple(map(float, a["center"])), float(a["radius"]), float(a["start_angle"]),
                   float(a["extent"]), bool(a.get("ccw", True)))
    raise ConfigError(f"unsupported boundary component {description}")


def read_definition(path: str) -> TableDefinition:
    """
    Reads a JSON table definition. Relative paths are also looked up in instance/tables.
    """
    candidates = [path, os.path.join(instance_path(), "tables", path)]
    for candidate in candidates:
        if os.path.isfile(candidate):
            try:
                with open(candidate, "r", encoding="UTF-8") as f:
                    definition = json.load(f)
            except (OSError, json.JSONDecodeError) as e:
                raise ConfigError(f"cannot read table definition {candidate}: {e}")
            break
    else:
        raise ConfigError(f"table definition {path} not found")

    if "loops" in definition:
        return {"family": definition.get("family", Family.custom.value), "loops": definition["loops"]}
    if "family" not in definition:
        raise ConfigError(f"table definition {path} has neither a family nor loops")
    family = parse_enum(Family, definition["family"], "table family")
    if family not in _family_builders:
        raise ConfigError(f"family {family.value} needs an explicit list of loops")
    return {"builder": _family_builders[family], "parameters": definition.get("parameters", {})}


def table_definition(text: str) -> TableDefinition:
    """
    Definition for a `--table` argument: a JSON file (path ending in .json) or the shorthand.
    """
    if text.endswith(".json"):
        return read_definition(text)
    return parse_shorthand(text)


def build_table(definition: TableDefinition, check: bool = True) -> Table:
    """
    Builds the table of a parsed definition.

    Parameters
    ----------
    definition
        output of table_definition.
    check
        enforce the family hypotheses at construction (flower and semi-dispersing builders).
    """
    if "loops" in definition:
        family = parse_enum(Family, definition["family"], "table family")
        loops: List[List] = [[_shape(c) for c in loop] for loop in definition["loops"]]
        return assemble(loops, family, {"loops": len(loops)})
    try:
        return supported_families[definition["builder"]](definition["parameters"], check)
    except (KeyError, TypeError) as e:
        raise ConfigError(f"incomplete table definition {definition}: {e}")


def load_table(text: str, check: bool = True) -> Tuple[Table, TableDefinition]:
    definition = table_definition(text)
    table = build_table(definition, check)
    logger.info("table %s: %s", text, table.summary())
    return table, definition
