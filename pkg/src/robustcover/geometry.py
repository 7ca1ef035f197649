"""
Planar geometry kernels: convex polygons, circular sectors and the exact
areas of their intersections with disks and half-planes.

All shapes are immutable. Areas are computed in closed form; the
Monte-Carlo estimator at the bottom of the module exists only to check the
closed forms independently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .errors import InvalidInputError

TWO_PI = 2.0 * math.pi

# vertices closer than this (region units) to the line through their
# neighbours are merged
COLLINEAR_TOL = 1e-9


class Point(NamedTuple):
    x: float
    y: float


Vector = Point


def as_point(p: Sequence[float]) -> Point:
    x, y = float(p[0]), float(p[1])
    if not (math.isfinite(x) and math.isfinite(y)):
        raise InvalidInputError(f"non-finite coordinates: {p!r}")
    return Point(x, y)


def distance(p: Sequence[float], q: Sequence[float]) -> float:
    return math.hypot(q[0] - p[0], q[1] - p[1])


def normalize_angle(angle: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    a = math.remainder(angle, TWO_PI)
    return math.pi if a <= -math.pi else a


def _cross(ox, oy, ax, ay, bx, by):
    return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox)


def _signed_area(pts: Sequence[Point]) -> float:
    s = 0.0
    n = len(pts)
    for i in range(n):
        x1, y1 = pts[i]
        x2, y2 = pts[(i + 1) % n]
        s += x1 * y2 - x2 * y1
    return 0.5 * s


def _simplify(pts: list, tol: float) -> list:
    """Drop duplicate and collinear vertices of a closed CCW ring."""
    changed = True
    while changed and len(pts) >= 3:
        changed = False
        n = len(pts)
        for i in range(n):
            px, py = pts[i - 1]
            vx, vy = pts[i]
            nx, ny = pts[(i + 1) % n]
            base = math.hypot(nx - px, ny - py)
            if math.hypot(vx - px, vy - py) <= tol:
                drop = True
            elif base <= tol:
                # spike: next vertex doubles back onto the previous one
                drop = True
            else:
                drop = abs(_cross(px, py, nx, ny, vx, vy)) / base <= tol
            if drop:
                del pts[i]
                changed = True
                break
    return pts


@dataclass(frozen=True)
class ConvexPolygon:
    """Strictly convex polygon with counter-clockwise vertices.

    The constructor accepts either orientation, removes duplicate and
    collinear vertices and rejects anything degenerate or non-convex.
    """

    vertices: Tuple[Point, ...]
    area: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        pts = [as_point(p) for p in self.vertices]
        if len(pts) >= 3 and _signed_area(pts) < 0:
            pts.reverse()
        pts = _simplify(pts, COLLINEAR_TOL)
        if len(pts) < 3:
            raise InvalidInputError("polygon needs at least 3 non-collinear vertices")
        n = len(pts)
        turning = 0.0
        for i in range(n):
            px, py = pts[i - 1]
            vx, vy = pts[i]
            nx, ny = pts[(i + 1) % n]
            if _cross(px, py, vx, vy, nx, ny) <= 0.0:
                raise InvalidInputError("polygon is not strictly convex")
            turning += math.atan2(
                _cross(px, py, vx, vy, nx, ny),
                (vx - px) * (nx - vx) + (vy - py) * (ny - vy),
            )
        # all left turns but winding more than once: a star, not convex
        if turning > TWO_PI + 1e-6:
            raise InvalidInputError("polygon is self-intersecting")
        area = _signed_area(pts)
        if area <= 0.0:
            raise InvalidInputError("polygon has no interior")
        object.__setattr__(self, "vertices", tuple(pts))
        object.__setattr__(self, "area", area)

    @classmethod
    def rectangle(cls, x0: float, y0: float, x1: float, y1: float) -> "ConvexPolygon":
        return cls(((x0, y0), (x1, y0), (x1, y1), (x0, y1)))

    def __len__(self):
        return len(self.vertices)

    def edges(self) -> Iterable[Tuple[Point, Point]]:
        v = self.vertices
        return zip(v, v[1:] + v[:1])

    def bbox(self) -> Tuple[float, float, float, float]:
        xs = [p.x for p in self.vertices]
        ys = [p.y for p in self.vertices]
        return min(xs), min(ys), max(xs), max(ys)

    def contains(self, p: Sequence[float], tol: float = 1e-9) -> bool:
        """Closed membership test; ``tol`` is a distance slack."""
        x, y = p[0], p[1]
        for (ax, ay), (bx, by) in self.edges():
            ex, ey = bx - ax, by - ay
            if ex * (y - ay) - ey * (x - ax) < -tol * math.hypot(ex, ey):
                return False
        return True

    def mask(self, pts: np.ndarray) -> np.ndarray:
        """Vectorised closed membership for an (N, 2) array."""
        pts = np.asarray(pts, dtype=float)
        inside = np.ones(len(pts), dtype=bool)
        for (ax, ay), (bx, by) in self.edges():
            inside &= (bx - ax) * (pts[:, 1] - ay) - (by - ay) * (pts[:, 0] - ax) >= 0.0
        return inside


def polygon_area(poly: ConvexPolygon) -> float:
    """Shoelace area."""
    return abs(_signed_area(poly.vertices))


def heron_area(e1: float, e2: float, e3: float) -> float:
    """Triangle area from its three edge lengths; 0 for degenerate triples."""
    if e1 < 0 or e2 < 0 or e3 < 0:
        raise InvalidInputError("edge lengths must be non-negative")
    d = 0.5 * (e1 + e2 + e3)
    prod = d * (d - e1) * (d - e2) * (d - e3)
    return math.sqrt(prod) if prod > 0.0 else 0.0


def polygon_from_points(pts: Sequence[Sequence[float]]) -> Optional[ConvexPolygon]:
    """Build a polygon, returning None when the points are degenerate."""
    try:
        return ConvexPolygon(tuple(pts))
    except InvalidInputError:
        return None


def clip_halfplane(
    poly: Optional[ConvexPolygon], normal: Sequence[float], offset: float
) -> Optional[ConvexPolygon]:
    """Intersect ``poly`` with ``{x : normal . x <= offset}``.

    Returns None when the intersection has no interior.
    """
    nx, ny = float(normal[0]), float(normal[1])
    if nx == 0.0 and ny == 0.0:
        raise InvalidInputError("half-plane normal must be nonzero")
    if poly is None:
        return None
    verts = poly.vertices
    scale = math.hypot(nx, ny) * max(max(abs(p.x), abs(p.y)) for p in verts) + abs(offset)
    eps = 1e-12 * scale
    s = [nx * p.x + ny * p.y - offset for p in verts]
    if all(v <= eps for v in s):
        return poly
    if all(v >= -eps for v in s):
        return None
    out = []
    n = len(verts)
    for i in range(n):
        p, q = verts[i], verts[(i + 1) % n]
        sp, sq = s[i], s[(i + 1) % n]
        p_in = sp <= eps
        if p_in:
            out.append(p)
        if p_in != (sq <= eps):
            t = sp / (sp - sq)
            out.append(Point(p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)))
    return polygon_from_points(out)


def _edge_disk_area(ax, ay, bx, by, r):
    """Signed area of disk(0, r) intersected with triangle (0, a, b)."""
    r2 = r * r

    tiny = 1e-12 * r

    def arc(ux, uy, vx, vy):
        # a vector at the centre has no direction and sweeps no area
        if math.hypot(ux, uy) <= tiny or math.hypot(vx, vy) <= tiny:
            return 0.0
        return 0.5 * r2 * math.atan2(ux * vy - uy * vx, ux * vx + uy * vy)

    dx, dy = bx - ax, by - ay
    qa = dx * dx + dy * dy
    if qa == 0.0:
        return 0.0
    qb = ax * dx + ay * dy
    qc = ax * ax + ay * ay - r2
    disc = qb * qb - qa * qc
    if disc <= 0.0:
        return arc(ax, ay, bx, by)
    sq = math.sqrt(disc)
    t1 = (-qb - sq) / qa
    t2 = (-qb + sq) / qa
    if t2 <= 0.0 or t1 >= 1.0:
        return arc(ax, ay, bx, by)
    # endpoints inside the disk are used verbatim, not re-interpolated
    p1x, p1y = (ax, ay) if t1 <= 0.0 else (ax + t1 * dx, ay + t1 * dy)
    p2x, p2y = (bx, by) if t2 >= 1.0 else (ax + t2 * dx, ay + t2 * dy)
    return arc(ax, ay, p1x, p1y) + 0.5 * (p1x * p2y - p1y * p2x) + arc(p2x, p2y, bx, by)


def circle_polygon_area(
    center: Sequence[float], radius: float, poly: Optional[ConvexPolygon]
) -> float:
    """Exact area of disk(center, radius) intersected with ``poly``."""
    if radius <= 0:
        raise InvalidInputError("radius must be positive")
    if poly is None:
        return 0.0
    cx, cy = center[0], center[1]
    x0, y0, x1, y1 = poly.bbox()
    if cx + radius <= x0 or cx - radius >= x1 or cy + radius <= y0 or cy - radius >= y1:
        return 0.0
    total = 0.0
    for (ax, ay), (bx, by) in poly.edges():
        total += _edge_disk_area(ax - cx, ay - cy, bx - cx, by - cy, radius)
    return min(max(total, 0.0), poly.area)


@dataclass(frozen=True)
class Sector:
    """Closed circular sector (a directional sensor's field of view)."""

    apex: Point
    orientation: float
    view_angle: float
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "apex", as_point(self.apex))
        if not (0.0 < self.view_angle <= TWO_PI + 1e-12):
            raise InvalidInputError("view angle must lie in (0, 2*pi]")
        if not self.radius > 0:
            raise InvalidInputError("sector radius must be positive")
        object.__setattr__(self, "view_angle", min(float(self.view_angle), TWO_PI))
        object.__setattr__(self, "orientation", normalize_angle(float(self.orientation)))

    @property
    def full(self) -> bool:
        return self.view_angle >= TWO_PI

    @property
    def area(self) -> float:
        return 0.5 * self.view_angle * self.radius**2

    def direction(self, angle_offset: float = 0.0) -> Tuple[float, float]:
        a = self.orientation + angle_offset
        return math.cos(a), math.sin(a)

    def contains(self, p: Sequence[float]) -> bool:
        dx, dy = p[0] - self.apex.x, p[1] - self.apex.y
        d = math.hypot(dx, dy)
        if d > self.radius * (1 + 1e-12):
            return False
        if d == 0.0 or self.full:
            return True
        ux, uy = self.direction()
        return dx * ux + dy * uy >= d * math.cos(0.5 * self.view_angle) - 1e-12 * d

    def mask(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        dx = pts[:, 0] - self.apex.x
        dy = pts[:, 1] - self.apex.y
        d = np.hypot(dx, dy)
        inside = d <= self.radius
        if self.full:
            return inside
        ux, uy = self.direction()
        return inside & (dx * ux + dy * uy >= d * math.cos(0.5 * self.view_angle))

    def halves(self) -> Tuple["Sector", "Sector"]:
        """Split into two sectors of half the angle sharing the orientation ray."""
        q = 0.25 * self.view_angle
        h = 0.5 * self.view_angle
        return (
            Sector(self.apex, self.orientation - q, h, self.radius),
            Sector(self.apex, self.orientation + q, h, self.radius),
        )

    def wedge_halfplanes(self) -> Tuple[Tuple[Tuple[float, float], float], ...]:
        """The two sideline half-planes (normal, offset) bounding a sector of angle <= pi."""
        h = 0.5 * self.view_angle
        rx, ry = self.direction(-h)
        lx, ly = self.direction(h)
        ax, ay = self.apex
        n1 = (ry, -rx)
        n2 = (-ly, lx)
        return (n1, n1[0] * ax + n1[1] * ay), (n2, n2[0] * ax + n2[1] * ay)

    def polygonize(self, segments: int = 128) -> ConvexPolygon:
        """Inscribed polygon of a sector with angle <= pi (apex plus arc samples)."""
        if self.view_angle > math.pi + 1e-12:
            raise InvalidInputError("polygonize needs a convex sector")
        h = 0.5 * self.view_angle
        ax, ay = self.apex
        pts = [self.apex]
        for k in range(segments + 1):
            a = self.orientation - h + self.view_angle * k / segments
            pts.append(Point(ax + self.radius * math.cos(a), ay + self.radius * math.sin(a)))
        if self.view_angle >= math.pi:
            pts = pts[1:]
        return ConvexPolygon(tuple(pts))


def clip_to_wedge(sector: Sector, poly: Optional[ConvexPolygon]) -> Optional[ConvexPolygon]:
    """Clip a polygon to the angular wedge of a sector with angle <= pi."""
    for normal, offset in sector.wedge_halfplanes():
        poly = clip_halfplane(poly, normal, offset)
        if poly is None:
            return None
    return poly


def sector_polygon_area(sector: Sector, poly: Optional[ConvexPolygon]) -> float:
    """Exact area of ``sector`` intersected with ``poly``."""
    if poly is None:
        return 0.0
    if sector.full:
        return circle_polygon_area(sector.apex, sector.radius, poly)
    if sector.view_angle > math.pi:
        a, b = sector.halves()
        return sector_polygon_area(a, poly) + sector_polygon_area(b, poly)
    cx, cy = sector.apex
    r = sector.radius
    x0, y0, x1, y1 = poly.bbox()
    if cx + r <= x0 or cx - r >= x1 or cy + r <= y0 or cy - r >= y1:
        return 0.0
    return circle_polygon_area(sector.apex, r, clip_to_wedge(sector, poly))


def sector_overlap_area(a: Sector, b: Sector, segments: int = 128) -> float:
    """Area of the intersection of two sectors.

    Sector ``a`` is replaced by an inscribed polygon with ``segments`` arc
    chords; sector ``b`` is handled exactly.
    """
    if distance(a.apex, b.apex) >= a.radius + b.radius:
        return 0.0
    parts_a = _convex_parts(a)
    parts_b = _convex_parts(b)
    total = 0.0
    for pa in parts_a:
        poly = pa.polygonize(segments)
        for pb in parts_b:
            total += sector_polygon_area(pb, poly)
    return total


def _convex_parts(s: Sector) -> Tuple[Sector, ...]:
    if s.view_angle <= math.pi:
        return (s,)
    if s.full:
        s = Sector(s.apex, s.orientation, TWO_PI - 1e-15, s.radius)
    first, second = s.halves()
    return (first, second)


def mc_area_oracle(
    predicate: Callable[[np.ndarray], np.ndarray],
    bbox: Tuple[float, float, float, float],
    n_samples: int,
    seed: int,
    chunk: int = 1 << 18,
) -> Tuple[float, float]:
    """Uniform Monte-Carlo estimate of the area where ``predicate`` holds.

    ``predicate`` receives an (N, 2) array and returns a boolean mask.
    Returns ``(estimate, standard_error)``.
    """
    x0, y0, x1, y1 = bbox
    if not (x1 > x0 and y1 > y0):
        raise InvalidInputError("bounding box must have positive extent")
    if n_samples < 1:
        raise InvalidInputError("need at least one sample")
    rng = np.random.default_rng(seed)
    hits = 0
    left = n_samples
    while left > 0:
        k = min(chunk, left)
        pts = np.column_stack((rng.uniform(x0, x1, k), rng.uniform(y0, y1, k)))
        hits += int(np.count_nonzero(predicate(pts)))
        left -= k
    box = (x1 - x0) * (y1 - y0)
    p = hits / n_samples
    return box * p, box * math.sqrt(p * (1.0 - p) / n_samples)
