import math

import numpy as np
import pytest

from robustcover.errors import InvalidInputError, InvalidStateError
from robustcover.geometry import ConvexPolygon, Point, Sector
from robustcover.optimizer import (
    AlgoConfig,
    OverlapType,
    classify_overlap,
    collaborative_adjustment,
    detect_conflict,
    localized_orientation,
    perimeter_filter,
    rank_candidates,
    run_algorithm,
)
from robustcover.rrf import PositionMode
from robustcover.sensing import SensorConfig, SensorState
from robustcover.voronoi import Deployment, Region, build_voronoi


def _dep(pts, w=1000.0, h=1000.0):
    return Deployment(Region(w, h), tuple(Point(*p) for p in pts))


# -- perimeter filter --------------------------------------------------------


def test_perimeter_filter_excludes_near_boundary():
    dep = _dep([(50, 50), (950, 50), (50, 950)])
    d = build_voronoi(dep)
    assert set(d.vertices[0]) == {Point(0, 0), Point(500, 0), Point(500, 500), Point(0, 500)}
    assert perimeter_filter(0, d, dep.region, 100 / 3) == [Point(500, 500)]


def test_perimeter_filter_fallback():
    dep = _dep([(5, 5), (500, 500), (5, 995), (995, 5)])
    d = build_voronoi(dep)
    # an epsilon larger than half the region rejects everything
    assert perimeter_filter(0, d, dep.region, 600) == list(d.vertices[0])
    with pytest.raises(InvalidInputError):
        perimeter_filter(0, d, dep.region, -1)


def test_perimeter_filter_point_examples():
    region = Region(1000, 1000)
    assert region.boundary_distance((10, 500)) < 100 / 3
    assert region.boundary_distance((500, 500)) >= 100 / 3


# -- localized orientation ---------------------------------------------------


CELL = ConvexPolygon.rectangle(0, 0, 100, 100)
CFG = SensorConfig(30.0, math.pi / 2)


def test_single_candidate_chosen():
    s = localized_orientation(SensorState(0, Point(50, 50), 0.0), [Point(100, 100)], CFG, CELL, "I")
    assert s.chosen_vertex == Point(100, 100)
    assert s.orientation == pytest.approx(math.pi / 4)


def test_rank_prefers_area_then_lexicographic():
    ranked = rank_candidates([(Point(5, 5), 200.0), (Point(1, 1), 300.0), (Point(0, 9), 300.0)])
    assert [v for v, _ in ranked] == [Point(0, 9), Point(1, 1), Point(5, 5)]


def test_equal_areas_pick_smaller_vertex():
    s = SensorState(0, Point(50, 50), 0.0)
    out = localized_orientation(s, [Point(100, 100), Point(0, 0), Point(100, 0)], CFG, CELL, "I")
    assert out.chosen_vertex == Point(0, 0)


def test_larger_area_wins():
    s = SensorState(0, Point(10, 50), 0.0)
    # aiming at the far corner keeps the wedge inside the cell
    out = localized_orientation(s, [Point(0, 100), Point(100, 50)], CFG, CELL, "I")
    assert out.chosen_vertex == Point(100, 50)
    assert out.candidates[0][1] > out.candidates[1][1]


def test_empty_candidates_rejected():
    with pytest.raises(InvalidInputError):
        localized_orientation(SensorState(0, Point(1, 1), 0.0), [], CFG, CELL, "I")


# -- conflicts ---------------------------------------------------------------


def _state(i, pos, rho, vertex):
    return SensorState(i, Point(*pos), rho, chosen_vertex=Point(*vertex))


def test_detect_conflict_examples():
    a = _state(0, (0, 0), 5, (75, 50))
    assert detect_conflict(a, _state(1, (150, 0), 5, (75, 50)), 100)
    assert not detect_conflict(a, _state(1, (500, 0), 5, (75, 50)), 100)
    assert not detect_conflict(a, _state(1, (1, 0), 5, (70, 50)), 100)
    with pytest.raises(InvalidStateError):
        detect_conflict(a, SensorState(1, Point(3, 3), 1.0), 100)


# -- overlap classification --------------------------------------------------


def _elements(s: Sector, n):
    """Sample points on each boundary element: ('side', pts) and ('arc', pts)."""
    h = 0.5 * s.view_angle
    t = np.linspace(0, 1, n)
    out = []
    if not s.full:
        for off in (-h, h):
            dx, dy = s.direction(off)
            out.append(("side", np.column_stack((s.apex.x + t * s.radius * dx, s.apex.y + t * s.radius * dy))))
    ang = s.orientation - h + t * s.view_angle
    out.append(("arc", np.column_stack((s.apex.x + s.radius * np.cos(ang), s.apex.y + s.radius * np.sin(ang)))))
    return out


def _oracle_label(a: Sector, b: Sector, n=10_000):
    ea, eb = _elements(a, n), _elements(b, n)
    step = max(a.radius, b.radius) * max(a.view_angle, 1.0) / n * 4
    kinds = set()
    for ka, pa in ea:
        for kb, pb in eb:
            # nearest pair of samples; within a few sample spacings counts as contact
            d = np.min(np.hypot(pa[::10, None, 0] - pb[None, ::10, 0], pa[::10, None, 1] - pb[None, ::10, 1]))
            if d <= 10 * step:
                kinds.add(tuple(sorted((ka, kb))))
    if ("side", "side") in kinds:
        return OverlapType.SIDELINE_SIDELINE
    if ("arc", "side") in kinds:
        return OverlapType.ARC_SIDELINE
    if ("arc", "arc") in kinds:
        return OverlapType.ARC_ARC
    return None


def test_classify_examples():
    s = Sector(Point(0, 0), 0.4, math.pi / 2, 100)
    assert classify_overlap(s, s) is OverlapType.SIDELINE_SIDELINE
    far = Sector(Point(2000, 0), 0.4, math.pi / 2, 100)
    assert classify_overlap(s, far) is OverlapType.NONE


@pytest.mark.parametrize("rot", [0.0, 0.7, 2.5])
def test_classify_facing_matches_boundary_oracle(rot):
    r = 100.0
    c, s = math.cos(rot), math.sin(rot)
    a = Sector(Point(0, 0), rot, math.pi / 2, r)
    b = Sector(Point(1.5 * r * c, 1.5 * r * s), rot + math.pi, math.pi / 2, r)
    got = classify_overlap(a, b)
    assert got in (OverlapType.ARC_ARC, OverlapType.ARC_SIDELINE)
    assert got is _oracle_label(a, b)


@pytest.mark.parametrize(
    "b, expected",
    [
        (Sector(Point(60, -80), math.pi / 2, math.pi / 2, 100), OverlapType.SIDELINE_SIDELINE),
        (Sector(Point(150, 40), math.pi, math.pi / 3, 100), OverlapType.ARC_SIDELINE),
        (Sector(Point(10, 10), 0.0, 0.2, 5), OverlapType.SIDELINE_SIDELINE),
    ],
)
def test_classify_constructed(b, expected):
    a = Sector(Point(0, 0), 0.0, math.pi / 2, 100)
    assert classify_overlap(a, b) is expected


# -- collaborative adjustment ------------------------------------------------


def _with(st, vertex, area, candidates, cursor=0):
    st.candidates = candidates
    st.cursor = cursor
    st.chosen_vertex = vertex
    st.area = area
    return st


def test_no_conflict_no_events():
    a = _with(SensorState(0, Point(0, 0), 1.0), Point(5, 5), 10.0, [(Point(5, 5), 10.0)])
    b = _with(SensorState(1, Point(9, 0), 1.0), Point(9, 5), 10.0, [(Point(9, 5), 10.0)])
    states, tr = collaborative_adjustment([a, b], None, CFG, AlgoConfig())
    assert tr.reorientation_events == [] and tr.iterations == 1
    assert [s.chosen_vertex for s in states] == [a.chosen_vertex, b.chosen_vertex]


def test_symmetric_tie_lower_id_moves():
    V, W, U = Point(50, 80), Point(10, 90), Point(90, 90)
    a = _with(SensorState(0, Point(30, 50), 0.0), V, 300.0, [(V, 300.0), (W, 200.0)])
    b = _with(SensorState(1, Point(70, 50), 0.0), V, 300.0, [(V, 300.0), (U, 100.0)])
    states, tr = collaborative_adjustment([a, b], None, CFG, AlgoConfig())
    assert tr.to_lines() == ["1\t0\t50.0,80.0\t10.0,90.0\tconflict with 1"]
    assert states[0].chosen_vertex == W and states[0].area == 200.0
    assert states[1].chosen_vertex == V
    assert tr.iterations == 2 and tr.exhausted_sensors == set()
    # input states untouched
    assert a.chosen_vertex == V


def test_exhausted_sensor_takes_least_overlap():
    cfg = SensorConfig(10.0, math.pi / 2)
    V, W = Point(20, 40), Point(40, 20)
    s0 = _with(SensorState(0, Point(20, 20), 0.0), V, 10.0, [(V, 10.0), (W, 9.0)])
    s1 = _with(SensorState(1, Point(20.5, 20), 0.0), V, 20.0, [(V, 20.0)])
    s2 = _with(SensorState(2, Point(38, 20), 0.0), W, 30.0, [(W, 30.0)])
    for s in (s0, s1, s2):
        s.orientation = math.atan2(s.chosen_vertex.y - s.nominal.y, s.chosen_vertex.x - s.nominal.x)
    states, tr = collaborative_adjustment([s0, s1, s2], None, cfg, AlgoConfig())
    # hand-executed: (0,1) conflict, 0 has less area -> next candidate W;
    # (0,2) conflict on W, 0 exhausted; V overlaps s1 heavily, W touches nothing of s2
    assert tr.to_lines() == [
        "1\t0\t20.0,40.0\t40.0,20.0\tconflict with 1",
        "1\t0\t40.0,20.0\t40.0,20.0\texhausted after conflict with 2",
    ]
    assert tr.exhausted_sensors == {0} and tr.iterations == 2
    assert states[0].chosen_vertex == W


def test_unset_vertex_rejected():
    with pytest.raises(InvalidStateError):
        collaborative_adjustment([SensorState(0, Point(1, 1), 0.0)], None, CFG, AlgoConfig())


def test_golden_circumcenter_trace():
    dep = _dep([(0.5, 0.5), (9.5, 0.5), (0.5, 9.5)], 10, 10)
    states, tr = run_algorithm(dep, SensorConfig(10.0, math.pi / 2), AlgoConfig(), (0.0, 0.0))
    # every cell keeps only the circumcenter after the 10/3 boundary filter;
    # areas: [0.5,5]^2 = 20.25 and the 4.5-wide trapezoid strips = 30.375
    assert [s.candidates for s in states] == [
        [(Point(5.0, 5.0), pytest.approx(20.25))],
        [(Point(5.0, 5.0), pytest.approx(30.375))],
        [(Point(5.0, 5.0), pytest.approx(30.375))],
    ]
    assert tr.to_lines() == [
        "1\t0\t5.0,5.0\t5.0,5.0\texhausted after conflict with 1",
        "1\t1\t5.0,5.0\t5.0,5.0\texhausted after conflict with 2",
    ]
    assert tr.exhausted_sensors == {0, 1} and tr.iterations == 2


def test_single_sensor_no_conflicts():
    dep = _dep([(300, 400)])
    states, tr = run_algorithm(dep, SensorConfig(100, math.pi / 2), AlgoConfig(), (50, 150))
    assert tr.reorientation_events == []
    assert states[0].chosen_vertex in set(build_voronoi(dep).vertices[0])


def test_full_circle_ties_and_invariant_total():
    rng = np.random.default_rng(4)
    dep = _dep(rng.uniform(1, 999, (25, 2)))
    cfg = SensorConfig(100, 2 * math.pi)
    states, tr = run_algorithm(dep, cfg, AlgoConfig(), (50, 150))
    d = build_voronoi(dep)
    from robustcover.geometry import circle_polygon_area

    want = sum(circle_polygon_area(p, 100, c) for p, c in zip(dep.positions, d.cells))
    assert sum(s.area for s in states) == pytest.approx(want, rel=1e-12)
    for s in states:
        assert len({a for _, a in s.candidates}) == 1


@pytest.mark.parametrize("seed", range(5))
def test_properties_on_random_instances(seed):
    rng = np.random.default_rng(seed)
    dep = _dep(rng.uniform(1, 999, (40, 2)))
    cfg = SensorConfig(100, math.pi / 2)
    for mode in PositionMode:
        states, tr = run_algorithm(dep, cfg, AlgoConfig(position_mode=mode), (50, 150))
        assert len(tr.reorientation_events) <= sum(len(s.candidates) for s in states)
        for i in range(40):
            assert states[i].chosen_vertex in [v for v, _ in states[i].candidates]
            for j in range(i + 1, 40):
                if detect_conflict(states[i], states[j], cfg.range):
                    assert i in tr.exhausted_sensors or j in tr.exhausted_sensors
        again = run_algorithm(dep, cfg, AlgoConfig(position_mode=mode), (50, 150))[1]
        assert again.to_lines() == tr.to_lines()


def test_area_rescaling_keeps_argmax():
    pairs = [(Point(1, 2), 5.0), (Point(0, 0), 7.5), (Point(3, 3), 2.0)]
    for k in (1e-3, 1.0, 1e6):
        ranked = rank_candidates([(v, a * k) for v, a in pairs])
        assert ranked[0][0] == Point(0, 0)
