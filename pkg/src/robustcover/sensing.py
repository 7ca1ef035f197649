"""Directional sensing model: point coverage and per-vertex coverage areas."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from .errors import InvalidInputError
from .geometry import TWO_PI, ConvexPolygon, Point, Sector, normalize_angle, sector_polygon_area
from .rrf import PositionMode, evaluated_position


@dataclass(frozen=True)
class SensorConfig:
    range: float
    view_angle: float

    def __post_init__(self):
        if not self.range > 0:
            raise InvalidInputError("sensing range must be positive")
        if not (0.0 < self.view_angle <= TWO_PI + 1e-12):
            raise InvalidInputError("view angle must lie in (0, 2*pi]")

    def sector(self, apex: Sequence[float], orientation: float) -> Sector:
        return Sector(Point(apex[0], apex[1]), orientation, self.view_angle, self.range)


@dataclass
class SensorState:
    id: int
    nominal: Point
    rho: float
    chosen_vertex: Optional[Point] = None
    orientation: float = 0.0
    evaluated: Optional[Point] = None
    area: float = 0.0
    # (vertex, area) sorted by decreasing area, ties by vertex
    candidates: List[Tuple[Point, float]] = field(default_factory=list)
    cursor: int = 0

    def __post_init__(self):
        if self.evaluated is None:
            self.evaluated = self.nominal


def covers(
    position: Sequence[float], orientation: float, cfg: SensorConfig, p: Sequence[float]
) -> bool:
    """Closed-sector coverage test: in range and within half the view angle."""
    dx, dy = p[0] - position[0], p[1] - position[1]
    d = math.hypot(dx, dy)
    if d > cfg.range * (1 + 1e-12):
        return False
    if d == 0.0:
        return True
    dot = dx * math.cos(orientation) + dy * math.sin(orientation)
    return dot >= d * math.cos(0.5 * cfg.view_angle) - 1e-12 * d


def aim(nominal: Sequence[float], vertex: Sequence[float], rho: float, mode) -> Tuple[Point, float]:
    """Scoring position and orientation for a sensor aimed at ``vertex``.

    Every displacement is along the nominal-to-vertex line, so the
    orientation is that line's direction for all modes.
    """
    apex = evaluated_position(nominal, vertex, rho, mode)
    theta = math.atan2(vertex[1] - nominal[1], vertex[0] - nominal[0])
    return apex, normalize_angle(theta)


def coverage_for_vertex(
    sensor: SensorState,
    vertex: Sequence[float],
    cfg: SensorConfig,
    cell: ConvexPolygon,
    mode: PositionMode,
) -> float:
    """Area of the sensor's own cell covered when it is aimed at ``vertex``."""
    apex, theta = aim(sensor.nominal, vertex, sensor.rho, mode)
    return sector_polygon_area(cfg.sector(apex, theta), cell)
