"""Directional sensor coverage under placement uncertainty.

Voronoi cells, per-sensor radius of robust feasibility (RRF), greedy
vertex-aiming orientation with conflict resolution, and a simulation
harness for parameter sweeps.
"""

from .geometry import ConvexPolygon, Point, Sector, circle_polygon_area, sector_polygon_area
from .harness import ScenarioConfig, Strategy, SweepSpec, run_scenario, sweep
from .optimizer import AlgoConfig, run_algorithm
from .rrf import PositionMode, compute_all_rrf, compute_rrf
from .sensing import SensorConfig, SensorState, covers
from .voronoi import Deployment, Region, build_voronoi

__version__ = "0.1.0"

__all__ = [
    "AlgoConfig",
    "ConvexPolygon",
    "Deployment",
    "Point",
    "PositionMode",
    "Region",
    "ScenarioConfig",
    "Sector",
    "SensorConfig",
    "SensorState",
    "Strategy",
    "SweepSpec",
    "build_voronoi",
    "circle_polygon_area",
    "compute_all_rrf",
    "compute_rrf",
    "covers",
    "run_algorithm",
    "run_scenario",
    "sector_polygon_area",
    "sweep",
]
