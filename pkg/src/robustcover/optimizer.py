"""
Collaborative Voronoi-based orientation optimization.

Three passes over a deployment: drop candidate vertices near the region
boundary, aim every sensor at its best remaining vertex, then resolve
sensors that aim at the same vertex from too close by moving the one with
less coverage to its next candidate.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Set, Tuple

from .errors import InvalidInputError, InvalidStateError
from .geometry import Point, Sector, distance, sector_overlap_area
from .rrf import DEFAULT_TOL, PositionMode, RobustFeasibilityResult, compute_all_rrf
from .sensing import SensorConfig, SensorState, aim, coverage_for_vertex
from .voronoi import Deployment, Region, VoronoiDiagram, build_voronoi


@dataclass(frozen=True)
class AlgoConfig:
    epsilon: Optional[float] = None  # None -> sensing range / 3
    position_mode: PositionMode = PositionMode.NOMINAL

    def __post_init__(self):
        if self.epsilon is not None and self.epsilon < 0:
            raise InvalidInputError("epsilon must be non-negative")
        object.__setattr__(self, "position_mode", PositionMode.parse(self.position_mode))

    def resolved_epsilon(self, sensor_cfg: SensorConfig) -> float:
        return sensor_cfg.range / 3.0 if self.epsilon is None else self.epsilon


@dataclass(frozen=True)
class ReorientationEvent:
    iteration: int
    sensor: int
    from_vertex: Point
    to_vertex: Point
    reason: str

    def to_line(self) -> str:
        def pt(p):
            return f"{float(p[0])!r},{float(p[1])!r}"

        return f"{self.iteration}\t{self.sensor}\t{pt(self.from_vertex)}\t{pt(self.to_vertex)}\t{self.reason}"


@dataclass
class AlgoTrace:
    iterations: int = 0
    reorientation_events: List[ReorientationEvent] = field(default_factory=list)
    exhausted_sensors: Set[int] = field(default_factory=set)

    def to_lines(self) -> List[str]:
        """One tab-separated line per event: iteration, sensor, from, to, reason."""
        return [e.to_line() for e in self.reorientation_events]


class OverlapType(Enum):
    SIDELINE_SIDELINE = "sideline-sideline"
    ARC_SIDELINE = "arc-sideline"
    ARC_ARC = "arc-arc"
    NONE = "none"


def perimeter_filter(
    sensor_index: int, diagram: VoronoiDiagram, region: Region, epsilon: float
) -> List[Point]:
    """Cell vertices at least ``epsilon`` from every region edge.

    Falls back to all vertices when none qualify.
    """
    if epsilon < 0:
        raise InvalidInputError("epsilon must be non-negative")
    verts = list(diagram.vertices[sensor_index])
    kept = [v for v in verts if region.boundary_distance(v) >= epsilon]
    return kept if kept else verts


AREA_TIE_RTOL = 1e-9


def areas_tie(a: float, b: float) -> bool:
    """Equal up to rounding noise of the area routines."""
    return abs(a - b) <= AREA_TIE_RTOL * max(abs(a), abs(b), 1.0)


def rank_candidates(pairs: Sequence[Tuple[Point, float]]) -> List[Tuple[Point, float]]:
    """Sort (vertex, area) pairs by decreasing area, ties by vertex order.

    Areas within ``AREA_TIE_RTOL`` of the first member of a run count as
    tied, so floating-point noise cannot override the vertex order.
    """
    by_area = sorted(pairs, key=lambda va: (-va[1], va[0]))
    out: List[Tuple[Point, float]] = []
    k = 0
    while k < len(by_area):
        end = k + 1
        while end < len(by_area) and areas_tie(by_area[k][1], by_area[end][1]):
            end += 1
        out.extend(sorted(by_area[k:end], key=lambda va: va[0]))
        k = end
    return out


def _point_to(state: SensorState, vertex: Point, area: float, cfg: SensorConfig, mode) -> None:
    apex, theta = aim(state.nominal, vertex, state.rho, mode)
    state.chosen_vertex = vertex
    state.orientation = theta
    state.evaluated = apex
    state.area = area


def localized_orientation(
    sensor: SensorState,
    candidates: Sequence[Point],
    cfg: SensorConfig,
    cell,
    mode: PositionMode,
) -> SensorState:
    """Score every candidate vertex and aim the sensor at the best one."""
    usable = [v for v in candidates if distance(v, sensor.nominal) > 0.0]
    if not usable:
        raise InvalidInputError(f"sensor {sensor.id} has no candidate vertex")
    scored = [(v, coverage_for_vertex(sensor, v, cfg, cell, mode)) for v in usable]
    ranked = rank_candidates(scored)
    state = copy.copy(sensor)
    state.candidates = ranked
    state.cursor = 0
    _point_to(state, ranked[0][0], ranked[0][1], cfg, mode)
    return state


def conflict_distance(s_i: SensorState, s_j: SensorState, r_s: float) -> float:
    return s_i.rho + s_j.rho + 2.0 * r_s


def detect_conflict(s_i: SensorState, s_j: SensorState, r_s: float) -> bool:
    if s_i.chosen_vertex is None or s_j.chosen_vertex is None:
        raise InvalidStateError("both sensors need a chosen vertex")
    if s_i.chosen_vertex != s_j.chosen_vertex:
        return False
    return distance(s_i.nominal, s_j.nominal) < conflict_distance(s_i, s_j, r_s)


# -- overlap classification -------------------------------------------------

_EPS = 1e-9


def _sidelines(s: Sector):
    if s.full:
        return []
    h = 0.5 * s.view_angle
    out = []
    for off in (-h, h):
        dx, dy = s.direction(off)
        out.append((s.apex, Point(s.apex.x + s.radius * dx, s.apex.y + s.radius * dy)))
    return out


def _on_arc(s: Sector, p) -> bool:
    if s.full:
        return True
    ang = math.atan2(p[1] - s.apex.y, p[0] - s.apex.x)
    off = abs(math.remainder(ang - s.orientation, 2 * math.pi))
    return off <= 0.5 * s.view_angle + 1e-9


def _seg_seg(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    scale = max(distance(p1, p2), distance(q1, q2), 1.0)
    tol = _EPS * scale * scale
    d1, d2 = orient(q1, q2, p1), orient(q1, q2, p2)
    d3, d4 = orient(p1, p2, q1), orient(p1, p2, q2)
    if ((d1 > tol and d2 < -tol) or (d1 < -tol and d2 > tol)) and (
        (d3 > tol and d4 < -tol) or (d3 < -tol and d4 > tol)
    ):
        return True

    def on_seg(a, b, c, d):
        return abs(d) <= tol and (
            min(a[0], b[0]) - _EPS * scale <= c[0] <= max(a[0], b[0]) + _EPS * scale
            and min(a[1], b[1]) - _EPS * scale <= c[1] <= max(a[1], b[1]) + _EPS * scale
        )

    return (
        on_seg(q1, q2, p1, d1)
        or on_seg(q1, q2, p2, d2)
        or on_seg(p1, p2, q1, d3)
        or on_seg(p1, p2, q2, d4)
    )


def _arc_seg(s: Sector, a, b) -> bool:
    cx, cy = s.apex
    ax, ay = a[0] - cx, a[1] - cy
    dx, dy = b[0] - a[0], b[1] - a[1]
    qa = dx * dx + dy * dy
    qb = 2 * (ax * dx + ay * dy)
    qc = ax * ax + ay * ay - s.radius**2
    disc = qb * qb - 4 * qa * qc
    if qa == 0.0 or disc < -_EPS * qa * s.radius**2:
        return False
    root = math.sqrt(max(disc, 0.0))
    for t in ((-qb - root) / (2 * qa), (-qb + root) / (2 * qa)):
        if -_EPS <= t <= 1 + _EPS and _on_arc(s, (a[0] + t * dx, a[1] + t * dy)):
            return True
    return False


def _arc_arc(s: Sector, u: Sector) -> bool:
    d = distance(s.apex, u.apex)
    r1, r2 = s.radius, u.radius
    if d < _EPS * max(r1, r2):
        if abs(r1 - r2) > _EPS * max(r1, r2):
            return False
        # same circle: arcs meet if their angular ranges overlap
        if s.full or u.full:
            return True
        gap = abs(math.remainder(s.orientation - u.orientation, 2 * math.pi))
        return gap <= 0.5 * (s.view_angle + u.view_angle) + 1e-9
    if d > r1 + r2 + _EPS * d or d < abs(r1 - r2) - _EPS * d:
        return False
    a = (r1 * r1 - r2 * r2 + d * d) / (2 * d)
    h = math.sqrt(max(r1 * r1 - a * a, 0.0))
    ex, ey = (u.apex.x - s.apex.x) / d, (u.apex.y - s.apex.y) / d
    mx, my = s.apex.x + a * ex, s.apex.y + a * ey
    for sign in (1.0, -1.0):
        p = (mx - sign * h * ey, my + sign * h * ex)
        if _on_arc(s, p) and _on_arc(u, p):
            return True
    return False


def classify_overlap(sector_i: Sector, sector_j: Sector) -> OverlapType:
    """Which boundary elements of two sectors meet, most overlapping kind first.

    Sectors that overlap without any boundary contact (one nested inside
    the other) are reported as sideline-sideline, the strongest level.
    """
    side_i, side_j = _sidelines(sector_i), _sidelines(sector_j)
    if any(_seg_seg(a, b, c, d) for a, b in side_i for c, d in side_j):
        return OverlapType.SIDELINE_SIDELINE
    if any(_arc_seg(sector_i, c, d) for c, d in side_j) or any(
        _arc_seg(sector_j, a, b) for a, b in side_i
    ):
        return OverlapType.ARC_SIDELINE
    if _arc_arc(sector_i, sector_j):
        return OverlapType.ARC_ARC
    if sector_i.contains(sector_j.apex) or sector_j.contains(sector_i.apex):
        return OverlapType.SIDELINE_SIDELINE
    return OverlapType.NONE


# -- collaborative adjustment -----------------------------------------------


def _sector_of(state: SensorState, cfg: SensorConfig) -> Sector:
    return cfg.sector(state.evaluated, state.orientation)


def _least_overlap_choice(
    e: int, states: List[SensorState], cfg: SensorConfig, mode
) -> Tuple[Point, float]:
    st = states[e]
    best = None
    for vertex, area in st.candidates:
        apex, theta = aim(st.nominal, vertex, st.rho, mode)
        mine = cfg.sector(apex, theta)
        overlap = 0.0
        for k, other in enumerate(states):
            if k == e or other.chosen_vertex != vertex:
                continue
            if distance(st.nominal, other.nominal) < conflict_distance(st, other, cfg.range):
                overlap += sector_overlap_area(mine, _sector_of(other, cfg))
        if best is None or overlap < best[0]:
            best = (overlap, vertex, area)
    return best[1], best[2]


def collaborative_adjustment(
    states: Sequence[SensorState],
    diagram: VoronoiDiagram,
    sensor_cfg: SensorConfig,
    algo_cfg: AlgoConfig,
) -> Tuple[List[SensorState], AlgoTrace]:
    """Resolve shared-vertex conflicts until a full scan changes nothing.

    Pairs are scanned in ascending (i, j) order. In a conflict the sensor
    with the smaller current area (lower id on ties) moves to its next
    candidate; a sensor with no candidates left takes the candidate whose
    sector overlaps least with the sensors it would conflict with there,
    and is frozen.
    """
    states = [copy.copy(s) for s in states]
    for s in states:
        if s.chosen_vertex is None:
            raise InvalidStateError(f"sensor {s.id} has no chosen vertex")
    mode = algo_cfg.position_mode
    r_s = sensor_cfg.range
    trace = AlgoTrace()
    m = len(states)
    while True:
        trace.iterations += 1
        changed = False
        for i in range(m):
            for j in range(i + 1, m):
                if i in trace.exhausted_sensors or j in trace.exhausted_sensors:
                    continue
                si, sj = states[i], states[j]
                if not detect_conflict(si, sj, r_s):
                    continue
                loser, winner = (i, j) if si.area <= sj.area or areas_tie(si.area, sj.area) else (j, i)
                st = states[loser]
                before = st.chosen_vertex
                if st.cursor + 1 < len(st.candidates):
                    st.cursor += 1
                    vertex, area = st.candidates[st.cursor]
                    reason = f"conflict with {winner}"
                else:
                    vertex, area = _least_overlap_choice(loser, states, sensor_cfg, mode)
                    trace.exhausted_sensors.add(loser)
                    reason = f"exhausted after conflict with {winner}"
                _point_to(st, vertex, area, sensor_cfg, mode)
                trace.reorientation_events.append(
                    ReorientationEvent(trace.iterations, loser, before, vertex, reason)
                )
                changed = True
        if not changed:
            break
    return states, trace


def initial_states(
    deployment: Deployment, rrf: Sequence[RobustFeasibilityResult], rho_override=None
) -> List[SensorState]:
    return [
        SensorState(
            id=i,
            nominal=p,
            rho=float(rho_override) if rho_override is not None else rrf[i].rho,
        )
        for i, p in enumerate(deployment.positions)
    ]


def run_algorithm(
    deployment: Deployment,
    sensor_cfg: SensorConfig,
    algo_cfg: AlgoConfig,
    rrf_bounds: Tuple[float, float],
    *,
    tol: float = DEFAULT_TOL,
    diagram: Optional[VoronoiDiagram] = None,
    rrf: Optional[Sequence[RobustFeasibilityResult]] = None,
    rho_override: Optional[float] = None,
) -> Tuple[List[SensorState], AlgoTrace]:
    """Full pipeline: Voronoi, clamped RRF, perimeter filter, local choice, conflicts.

    ``diagram`` and ``rrf`` may be passed in when already computed.
    ``rho_override`` replaces every sensor's RRF during optimization.
    """
    if diagram is None:
        diagram = build_voronoi(deployment)
    if rrf is None:
        r_min, r_max = rrf_bounds
        rrf = compute_all_rrf(diagram, deployment, r_min, r_max, tol, clamp_only=True)
    eps = algo_cfg.resolved_epsilon(sensor_cfg)
    mode = algo_cfg.position_mode
    states = []
    for st in initial_states(deployment, rrf, rho_override):
        cand = perimeter_filter(st.id, diagram, deployment.region, eps)
        states.append(localized_orientation(st, cand, sensor_cfg, diagram.cells[st.id], mode))
    return collaborative_adjustment(states, diagram, sensor_cfg, algo_cfg)
