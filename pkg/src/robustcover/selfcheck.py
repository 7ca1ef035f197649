"""Monte-Carlo cross-check of the exact sector-in-cell area routine."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List

import numpy as np

from .geometry import Point, Sector, mc_area_oracle, sector_polygon_area
from .voronoi import Deployment, Region, build_voronoi


@dataclass(frozen=True)
class OracleRecord:
    instance: int
    exact: float
    estimate: float
    stderr: float
    cell_area: float

    @property
    def allowed(self) -> float:
        return max(3.0 * self.stderr, 0.005 * self.cell_area)

    @property
    def ok(self) -> bool:
        return abs(self.exact - self.estimate) <= self.allowed


def random_instance(rng: np.random.Generator):
    """A Voronoi cell from a small random deployment and a sector near it."""
    region = Region(1000.0, 1000.0)
    k = int(rng.integers(2, 12))
    pts = rng.uniform(1.0, 999.0, (k, 2))
    dep = Deployment(region, tuple(Point(*p) for p in pts))
    diagram = build_voronoi(dep)
    i = int(rng.integers(k))
    cell = diagram.cells[i]
    # apex at the site, or jittered so some instances start outside the cell
    apex = pts[i] + (rng.normal(0, 60, 2) if rng.random() < 0.3 else 0.0)
    sector = Sector(
        Point(float(apex[0]), float(apex[1])),
        float(rng.uniform(-math.pi, math.pi)),
        float(rng.uniform(0.05, 2 * math.pi)),
        float(rng.uniform(20.0, 500.0)),
    )
    return sector, cell


def run_oracle(instances: int, samples: int, seed: int) -> List[OracleRecord]:
    rng = np.random.default_rng(seed)
    out = []
    for n in range(instances):
        sector, cell = random_instance(rng)
        exact = sector_polygon_area(sector, cell)
        est, se = mc_area_oracle(
            lambda p, s=sector, c=cell: s.mask(p) & c.mask(p),
            cell.bbox(), samples, seed=seed * 100003 + n,
        )
        out.append(OracleRecord(n, exact, est, se, cell.area))
    return out
