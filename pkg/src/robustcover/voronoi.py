"""Bounded Voronoi diagrams of sensor deployments by half-plane clipping."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Sequence, Tuple

import numpy as np

from .errors import InvalidInputError
from .geometry import ConvexPolygon, Point, as_point, clip_halfplane

MIN_SEPARATION = 1e-6


@dataclass(frozen=True)
class Region:
    """Axis-aligned rectangle ``[0, width] x [0, height]``."""

    width: float
    height: float

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise InvalidInputError("region width and height must be positive")

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def scale(self) -> float:
        return max(self.width, self.height)

    @property
    def polygon(self) -> ConvexPolygon:
        return ConvexPolygon.rectangle(0.0, 0.0, self.width, self.height)

    def contains(self, p: Sequence[float]) -> bool:
        return 0.0 <= p[0] <= self.width and 0.0 <= p[1] <= self.height

    def boundary_distance(self, p: Sequence[float]) -> float:
        return min(p[0], self.width - p[0], p[1], self.height - p[1])


@dataclass(frozen=True)
class Deployment:
    region: Region
    positions: Tuple[Point, ...]

    def __post_init__(self):
        pts = tuple(as_point(p) for p in self.positions)
        if not pts:
            raise InvalidInputError("deployment needs at least one sensor")
        for p in pts:
            if not self.region.contains(p):
                raise InvalidInputError(f"sensor {p} lies outside the region")
        if len(pts) > 1:
            arr = np.asarray(pts)
            diff = arr[:, None, :] - arr[None, :, :]
            d = np.hypot(diff[..., 0], diff[..., 1])
            np.fill_diagonal(d, np.inf)
            if d.min() <= MIN_SEPARATION:
                i, j = np.unravel_index(np.argmin(d), d.shape)
                raise InvalidInputError(f"sensors {i} and {j} are (nearly) coincident")
        object.__setattr__(self, "positions", pts)

    def __len__(self):
        return len(self.positions)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.positions, dtype=float)


@dataclass(frozen=True)
class VoronoiDiagram:
    cells: Tuple[ConvexPolygon, ...]
    vertices: Tuple[Tuple[Point, ...], ...]
    neighbors: Tuple[FrozenSet[int], ...]

    def __len__(self):
        return len(self.cells)


def _clip_cell(i: int, sites: np.ndarray, dist: np.ndarray, region: Region) -> ConvexPolygon:
    cell = region.polygon
    sx, sy = sites[i]
    reach = max(math.hypot(v.x - sx, v.y - sy) for v in cell.vertices)
    for j in range(len(sites)):
        if j == i or 0.5 * dist[i, j] > reach:
            continue
        tx, ty = sites[j]
        # half-plane closer to site i than to site j
        nx, ny = (tx - sx) / dist[i, j], (ty - sy) / dist[i, j]
        offset = nx * 0.5 * (sx + tx) + ny * 0.5 * (sy + ty)
        clipped = clip_halfplane(cell, (nx, ny), offset)
        if clipped is None:
            raise InvalidInputError(f"cell of sensor {i} collapsed")
        if clipped is not cell:
            cell = clipped
            reach = max(math.hypot(v.x - sx, v.y - sy) for v in cell.vertices)
    return cell


class _Snapper:
    """Merge vertices closer than ``tol`` into one canonical point."""

    def __init__(self, tol: float):
        self.tol = tol
        self.bins: Dict[Tuple[int, int], List[Point]] = {}

    def __call__(self, p: Point) -> Point:
        kx, ky = int(math.floor(p.x / self.tol)), int(math.floor(p.y / self.tol))
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for q in self.bins.get((kx + dx, ky + dy), ()):
                    if math.hypot(q.x - p.x, q.y - p.y) <= self.tol:
                        return q
        self.bins.setdefault((kx, ky), []).append(p)
        return p


def build_voronoi(deployment: Deployment) -> VoronoiDiagram:
    """Voronoi cells of the deployment clipped to its region.

    Each cell is the region intersected with the bisector half-planes of
    every other sensor, applied in ascending sensor order. Vertices shared
    by several cells are snapped to a single canonical point so that equal
    vertices compare equal across cells.
    """
    region = deployment.region
    sites = deployment.as_array()
    m = len(sites)
    diff = sites[:, None, :] - sites[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    raw = [_clip_cell(i, sites, dist, region) for i in range(m)]

    tol = 1e-7 * region.scale
    snap = _Snapper(tol)
    cells = []
    for cell in raw:
        snapped = tuple(snap(v) for v in cell.vertices)
        try:
            cells.append(ConvexPolygon(snapped))
        except InvalidInputError:
            cells.append(cell)

    neighbors: List[set] = [set() for _ in range(m)]
    for i, cell in enumerate(cells):
        for a, b in cell.edges():
            if math.hypot(b.x - a.x, b.y - a.y) <= tol:
                continue
            mid = np.array([0.5 * (a.x + b.x), 0.5 * (a.y + b.y)])
            d = np.hypot(*(sites - mid).T)
            close = np.nonzero(np.abs(d - d[i]) <= tol)[0]
            for j in close:
                if j != i:
                    neighbors[i].add(int(j))
                    neighbors[int(j)].add(i)
    return VoronoiDiagram(
        cells=tuple(cells),
        vertices=tuple(c.vertices for c in cells),
        neighbors=tuple(frozenset(n) for n in neighbors),
    )
