import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.spatial import cKDTree

from robustcover.errors import InvalidInputError
from robustcover.geometry import Point
from robustcover.voronoi import Deployment, Region, build_voronoi


def _dep(pts, w=10.0, h=10.0):
    return Deployment(Region(w, h), tuple(Point(*p) for p in pts))


def test_two_sensor_bisector():
    d = build_voronoi(_dep([(0.1, 5), (9.9, 5)]))
    xs = sorted({v.x for v in d.cells[0].vertices})
    assert xs == pytest.approx([0.0, 5.0])
    assert d.cells[0].area == pytest.approx(50.0)
    assert d.neighbors == (frozenset({1}), frozenset({0}))


def test_single_sensor_owns_region():
    d = build_voronoi(_dep([(3, 4)]))
    assert d.cells[0].area == pytest.approx(100.0)
    assert set(d.vertices[0]) == {Point(0, 0), Point(10, 0), Point(10, 10), Point(0, 10)}
    assert d.neighbors == (frozenset(),)


def test_three_sensors_share_circumcenter():
    d = build_voronoi(_dep([(0.5, 0.5), (9.5, 0.5), (0.5, 9.5)]))
    for verts in d.vertices:
        assert any(abs(v.x - 5) < 1e-9 and abs(v.y - 5) < 1e-9 for v in verts)
    # snapping makes the shared vertex the identical object value in every cell
    shared = [next(v for v in verts if abs(v.x - 5) < 1e-6 and abs(v.y - 5) < 1e-6) for verts in d.vertices]
    assert shared[0] == shared[1] == shared[2]


def test_deployment_validation():
    with pytest.raises(InvalidInputError):
        _dep([(1, 1), (1, 1)])
    with pytest.raises(InvalidInputError):
        _dep([(11, 1)])
    with pytest.raises(InvalidInputError):
        _dep([])
    with pytest.raises(InvalidInputError):
        Region(0, 5)


def _random(seed, m=40):
    rng = np.random.default_rng(seed)
    return Deployment(Region(1000, 1000), tuple(Point(*p) for p in rng.uniform(1e-3, 1000 - 1e-3, (m, 2))))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 60))
def test_partition_symmetry_and_ownership(seed, m):
    dep = _random(seed, m)
    d = build_voronoi(dep)
    total = sum(c.area for c in d.cells)
    assert total == pytest.approx(1e6, rel=1e-6)
    for i, nb in enumerate(d.neighbors):
        assert i not in nb
        for j in nb:
            assert i in d.neighbors[j]
    for p, cell in zip(dep.positions, d.cells):
        assert cell.contains(p, tol=1e-7)


def test_nearest_site_raster():
    dep = _random(7)
    d = build_voronoi(dep)
    sites = dep.as_array()
    xs = np.arange(0.5, 1000, 5.0)
    grid = np.stack(np.meshgrid(xs, xs), -1).reshape(-1, 2)
    dist, idx = cKDTree(sites).query(grid, k=2)
    clear = dist[:, 1] - dist[:, 0] > 1e-6
    for i, cell in enumerate(d.cells):
        mine = idx[:, 0] == i
        assert np.all(cell.mask(grid[mine & clear]))
        assert not np.any(cell.mask(grid[~mine & clear]) & (idx[~mine & clear, 0] != i) & _strict(cell, grid[~mine & clear]))


def _strict(cell, pts):
    # strictly interior (1e-6 away from every edge)
    inside = np.ones(len(pts), bool)
    for (ax, ay), (bx, by) in cell.edges():
        ex, ey = bx - ax, by - ay
        inside &= (ex * (pts[:, 1] - ay) - ey * (pts[:, 0] - ax)) / np.hypot(ex, ey) > 1e-6
    return inside


def test_deterministic():
    a = build_voronoi(_random(3))
    b = build_voronoi(_random(3))
    assert a == b
