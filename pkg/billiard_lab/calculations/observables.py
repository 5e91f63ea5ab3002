"""
Observables: functions of a collision event.
"""
import math
from dataclasses import dataclass
from typing import Callable, Dict

from billiard_lab.calculations.dynamics import CollisionEvent
from billiard_lab.calculations.geometry import Table
from billiard_lab.utils.errors import ConfigError


@dataclass(frozen=True)
class Observable:
    id: str
    definition: Callable[[CollisionEvent], float]
    # unbounded on tables with an infinite horizon
    heavy_tailed: bool = False

    def __call__(self, event: CollisionEvent) -> float:
        return self.definition(event)


def _free_path(event: CollisionEvent) -> float:
    return event.free_path


def _cos_phi(event: CollisionEvent) -> float:
    return event.cos_phi


def _sin_phi(event: CollisionEvent) -> float:
    return math.sin(event.point.phi)


def _position_x(event: CollisionEvent) -> float:
    return event.position[0]


def _constant(event: CollisionEvent) -> float:
    return 1.0


class _ComponentIndicator:
    def __init__(self, component_id: int):
        self.component_id = component_id

    def __call__(self, event: CollisionEvent) -> float:
        return 1.0 if event.component_id == self.component_id else 0.0


supported_observables: Dict[str, Observable] = {
    "free-path": Observable("free-path", _free_path, heavy_tailed=True),
    "cos-phi": Observable("cos-phi", _cos_phi),
    "sin-phi": Observable("sin-phi", _sin_phi),
    "position-x": Observable("position-x", _position_x),
    "constant": Observable("constant", _constant),
}


def observable(name: str, table: Table) -> Observable:
    """
    Looks up an observable by id. `component-indicator:k` is the indicator of component k.

    Raises
    ------
    ConfigError
        if the id is unknown or names a component the table does not have.
    """
    if name.startswith("component-indicator"):
        _, _, index = name.partition(":")
        try:
            component_id = int(index)
        except ValueError:
            raise ConfigError(f"observable {name}: expected component-indicator:<k>")
        if not 0 <= component_id < len(table.components):
            raise ConfigError(f"observable {name}: the table has {len(table.components)} components")
        return Observable(name, _ComponentIndicator(component_id))
    if name not in supported_observables:
        raise ConfigError(f"unsupported observable {name} (supported: {', '.join(supported_observables)}, "
                          f"component-indicator:<k>)")
    return supported_observables[name]
