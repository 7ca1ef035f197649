"""
Radius of robust feasibility (RRF) of each sensor's Voronoi system.

For sensor ``i`` the nominal Voronoi constraints are ``a_ij . x <= b_ij``
with ``a_ij = 2(s_j - s_i)`` and ``b_ij = |s_j|^2 - |s_i|^2``. Location
uncertainty of radius ``alpha`` perturbs the coefficients by at most
``4 alpha`` (for ``a``) and ``2 alpha (|s_i| + |s_j|)`` (for ``b``), so the
robust system at level ``alpha`` reads

    a_ij . x + alpha * (4 |x| + 2 (|s_i| + |s_j|)) <= b_ij   for all j != i.

The RRF is the largest ``alpha`` for which some point of the (region
clipped) nominal cell satisfies all of these.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np

from .errors import DomainError, InvalidInputError
from .geometry import Point, Vector, as_point
from .voronoi import Deployment, VoronoiDiagram

A_RATE = 4.0

GRID_POINTS = 21
GRID_LEVELS = 4
PATTERN_STEPS = 100
DEFAULT_TOL = 1e-3


class PositionMode(Enum):
    NOMINAL = "I"
    BEST_ROBUST = "II"
    WORST_ROBUST = "III"

    @classmethod
    def parse(cls, value) -> "PositionMode":
        if isinstance(value, cls):
            return value
        key = str(value).strip()
        aliases = {
            "I": cls.NOMINAL, "1": cls.NOMINAL, "NOMINAL": cls.NOMINAL,
            "II": cls.BEST_ROBUST, "2": cls.BEST_ROBUST, "BEST": cls.BEST_ROBUST,
            "BEST_ROBUST": cls.BEST_ROBUST,
            "III": cls.WORST_ROBUST, "3": cls.WORST_ROBUST, "WORST": cls.WORST_ROBUST,
            "WORST_ROBUST": cls.WORST_ROBUST,
        }
        try:
            return aliases[key.upper()]
        except KeyError:
            raise InvalidInputError(f"unknown position mode {value!r}") from None


@dataclass(frozen=True)
class PairCoefficients:
    a: Vector
    b: float
    b_rate: float
    a_rate: float = A_RATE


@dataclass(frozen=True)
class RobustFeasibilityResult:
    rho_raw: float
    rho: float
    argmax_point: Point
    active_neighbor: Optional[int]


def neighbor_coefficients(s_i: Sequence[float], s_j: Sequence[float]) -> PairCoefficients:
    xi, yi = s_i[0], s_i[1]
    xj, yj = s_j[0], s_j[1]
    if xi == xj and yi == yj:
        raise InvalidInputError("coincident sensors have no bisector")
    return PairCoefficients(
        a=Point(2.0 * (xj - xi), 2.0 * (yj - yi)),
        b=(xj * xj + yj * yj) - (xi * xi + yi * yi),
        b_rate=2.0 * (math.hypot(xi, yi) + math.hypot(xj, yj)),
    )


def support_value(x: Sequence[float], pair: PairCoefficients) -> float:
    """Support of the per-unit coefficient uncertainty in direction (x, -1)."""
    return pair.a_rate * math.hypot(x[0], x[1]) + pair.b_rate


def margin_ratio(
    x: Sequence[float], sensor_index: int, diagram: VoronoiDiagram, deployment: Deployment
) -> float:
    """Smallest constraint margin divided by its support, over all other sensors."""
    cell = diagram.cells[sensor_index]
    if not cell.contains(x, tol=1e-9 * deployment.region.scale):
        raise DomainError(f"{tuple(x)} is outside the cell of sensor {sensor_index}")
    s_i = deployment.positions[sensor_index]
    best = math.inf
    for j, s_j in enumerate(deployment.positions):
        if j == sensor_index:
            continue
        pair = neighbor_coefficients(s_i, s_j)
        margin = pair.b - (pair.a[0] * x[0] + pair.a[1] * x[1])
        best = min(best, margin / support_value(x, pair))
    return max(best, 0.0) if best > -1e-12 else best


def clamp_rrf(rho_raw: float, r_min: float, r_max: float) -> float:
    return float(min(max(rho_raw, r_min), r_max))


# -- batched solver ---------------------------------------------------------
#
# Rows are stored normalised by |a| so that the slack of every row is a
# length. Each sensor in a batch carries K rows (padded with inert rows).


@dataclass
class _Rows:
    A: np.ndarray  # (n, K, 2)
    B: np.ndarray  # (n, K)
    W: np.ndarray  # (n, K) weight on |x|
    C: np.ndarray  # (n, K) constant support term


def _rows_for(i: int, others: Sequence[int], sites: np.ndarray, region) -> np.ndarray:
    """Rows (ax, ay, b, w, c) for sensor ``i`` against ``others`` plus the region box."""
    si = sites[i]
    ni = math.hypot(*si)
    rows = []
    for j in others:
        sj = sites[j]
        a = 2.0 * (sj - si)
        na = math.hypot(*a)
        b = sj @ sj - si @ si
        c = 2.0 * (ni + math.hypot(*sj))
        rows.append((a[0] / na, a[1] / na, b / na, A_RATE / na, c / na))
    rows += [
        (-1.0, 0.0, 0.0, 0.0, 0.0),
        (1.0, 0.0, region.width, 0.0, 0.0),
        (0.0, -1.0, 0.0, 0.0, 0.0),
        (0.0, 1.0, region.height, 0.0, 0.0),
    ]
    return np.asarray(rows, dtype=float)


def _stack(row_sets: List[np.ndarray]) -> _Rows:
    n = len(row_sets)
    k = max(len(r) for r in row_sets)
    A = np.zeros((n, k, 2))
    B = np.full((n, k), np.inf)
    W = np.zeros((n, k))
    C = np.zeros((n, k))
    for t, r in enumerate(row_sets):
        q = len(r)
        A[t, :q] = r[:, :2]
        B[t, :q] = r[:, 2]
        W[t, :q] = r[:, 3]
        C[t, :q] = r[:, 4]
    return _Rows(A, B, W, C)


def _slack(pts: np.ndarray, alpha: np.ndarray, rows: _Rows, sel=slice(None)) -> np.ndarray:
    """min_k of the robust slack at ``pts`` (n, G, 2) -> (n, G) for sensors ``sel``."""
    A, B, W, C = rows.A[sel], rows.B[sel], rows.W[sel], rows.C[sel]
    x = pts[..., 0, None]
    y = pts[..., 1, None]
    norm = np.hypot(pts[..., 0], pts[..., 1])[..., None]
    lhs = x * A[:, None, :, 0] + y * A[:, None, :, 1]
    pen = alpha[:, None, None] * (W[:, None, :] * norm + C[:, None, :])
    return np.min(B[:, None, :] - lhs - pen, axis=2)


_unit = np.linspace(-1.0, 1.0, GRID_POINTS)
_GRID = np.stack(np.meshgrid(_unit, _unit, indexing="ij"), axis=-1).reshape(-1, 2)
_ang = np.arange(16) * (2.0 * math.pi / 16)
_DIRS = np.column_stack((np.cos(_ang), np.sin(_ang)))


def _max_slack(alpha, rows, lo, hi, start, scale):
    """Best robust slack found in the boxes ``[lo, hi]`` (n, 2) for each sensor.

    A sensor stops being searched as soon as a point with non-negative
    slack is found.
    """
    best_x = start.copy()
    best_v = _slack(best_x[:, None, :], alpha, rows)[:, 0]
    center = 0.5 * (lo + hi)
    half = np.maximum(0.5 * (hi - lo), 1e-12 * scale)
    for _ in range(GRID_LEVELS):
        live = np.nonzero(best_v < 0.0)[0]
        if live.size == 0:
            return best_v, best_x
        pts = center[live, None, :] + _GRID[None] * half[live, None, :]
        v = _slack(pts, alpha[live], rows, live)
        k = np.argmax(v, axis=1)
        row = np.arange(live.size)
        vk = v[row, k]
        better = vk > best_v[live]
        upd = live[better]
        best_v[upd] = vk[better]
        best_x[upd] = pts[row[better], k[better]]
        center = best_x.copy()
        half = half * (4.0 / (GRID_POINTS - 1))
    step = 0.5 * half.max(axis=1)
    floor = 1e-6 * scale
    for _ in range(PATTERN_STEPS):
        live = np.nonzero((best_v < 0.0) & (step > floor))[0]
        if live.size == 0:
            break
        pts = best_x[live, None, :] + _DIRS[None] * step[live, None, None]
        v = _slack(pts, alpha[live], rows, live)
        k = np.argmax(v, axis=1)
        row = np.arange(live.size)
        vk = v[row, k]
        better = vk > best_v[live]
        upd = live[better]
        best_v[upd] = vk[better]
        best_x[upd] = pts[row[better], k[better]]
        step[live] = np.where(better, 1.5 * step[live], 0.5 * step[live])
    return best_v, best_x


def _subset(rows: _Rows, sel) -> _Rows:
    return _Rows(rows.A[sel], rows.B[sel], rows.W[sel], rows.C[sel])


def _initial_bracket(rows, lo_box, hi_box, verts, cap):
    """Certified lower bound (with witness) and a valid upper bound per sensor.

    The lower bound is the best margin ratio on the coarsest grid. The upper
    bound uses that a row's margin is largest at a cell vertex while its
    support is at least its constant term.
    """
    center = 0.5 * (lo_box + hi_box)
    half = 0.5 * (hi_box - lo_box)
    pts = center[:, None, :] + _GRID[None] * half[:, None, :]
    norm = np.hypot(pts[..., 0], pts[..., 1])[..., None]
    margin = rows.B[:, None, :] - (
        pts[..., 0, None] * rows.A[:, None, :, 0] + pts[..., 1, None] * rows.A[:, None, :, 1]
    )
    support = rows.W[:, None, :] * norm + rows.C[:, None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(support > 0, margin / support, np.where(margin >= 0, np.inf, -np.inf))
    ratio = ratio.min(axis=2)
    k = np.argmax(ratio, axis=1)
    idx = np.arange(len(k))
    lower = ratio[idx, k]
    witness = pts[idx, k]

    upper = cap.copy()
    for t, v in enumerate(verts):
        live = rows.C[t] > 0
        if live.any():
            peak = (rows.B[t, live][None, :] - v @ rows.A[t, live].T).max(axis=0)
            upper[t] = min(upper[t], float(np.min(peak / rows.C[t, live])))
    upper = np.maximum(upper, 0.0)
    ok = np.isfinite(lower) & (lower >= 0.0)
    lower = np.where(ok, np.minimum(lower, upper), 0.0)
    return lower, witness, upper, ok


def _bisect(rows, lo_box, hi_box, start, verts, alpha_hi, tol, scale, clamp=None):
    """Largest alpha in [0, alpha_hi] with a robustly feasible point, to ``tol``.

    With ``clamp=(r_min, r_max)`` a sensor is settled as soon as its bracket
    lies entirely below ``r_min`` or above ``r_max``.
    """
    lo, grid_witness, hi, ok = _initial_bracket(rows, lo_box, hi_box, verts, alpha_hi)
    witness = np.where(ok[:, None], grid_witness, start)

    def unsettled():
        width = hi - lo >= tol
        if clamp is not None:
            width &= (hi > clamp[0]) & (lo < clamp[1])
        return width

    # the upper end itself may be feasible (saturation or an exact bound)
    top_check = np.nonzero(unsettled())[0]
    if top_check.size:
        v, x = _max_slack(
            hi[top_check], _subset(rows, top_check), lo_box[top_check], hi_box[top_check],
            witness[top_check], scale,
        )
        top = top_check[v >= 0.0]
        lo[top] = hi[top]
        witness[top] = x[v >= 0.0]
    cursor = witness.copy()
    while True:
        open_ = np.nonzero(unsettled())[0]
        if open_.size == 0:
            break
        mid = 0.5 * (lo[open_] + hi[open_])
        v, x = _max_slack(
            mid, _subset(rows, open_), lo_box[open_], hi_box[open_], cursor[open_], scale
        )
        feas = v >= 0.0
        lo[open_[feas]] = mid[feas]
        hi[open_[~feas]] = mid[~feas]
        witness[open_[feas]] = x[feas]
        cursor[open_] = x
    return lo, hi, witness


def compute_all_rrf(
    diagram: VoronoiDiagram,
    deployment: Deployment,
    r_min: float,
    r_max: float,
    tol: float = DEFAULT_TOL,
    indices: Optional[Sequence[int]] = None,
    clamp_only: bool = False,
) -> List[RobustFeasibilityResult]:
    """RRF of several sensors, solved as one vectorised bisection.

    The feasibility test at each bisection level maximises the worst robust
    slack over the cell with a coarse-to-fine grid followed by a pattern
    search. Only Voronoi neighbours are used at first; if the witness point
    violates the constraint of any other sensor, those constraints are added
    and the sensor is solved again.

    ``clamp_only`` stops refining a sensor once its clamped value is
    decided; ``rho_raw`` is then only a certified lower bound.
    """
    if tol <= 0:
        raise InvalidInputError("tolerance must be positive")
    if not 0 <= r_min <= r_max:
        raise InvalidInputError("need 0 <= r_min <= r_max")
    region = deployment.region
    sites = deployment.as_array()
    m = len(sites)
    if indices is None:
        indices = range(m)
    indices = list(indices)
    if m == 1:
        return [
            RobustFeasibilityResult(math.inf, r_max, deployment.positions[0], None)
            for _ in indices
        ]
    scale = region.scale
    # a zero cap would leave nothing to bisect; the vertex bound still applies
    alpha_cap = 2.0 * r_max if r_max > 0 else math.inf

    active = {i: sorted(diagram.neighbors[i]) for i in indices}
    pending = list(indices)
    solved = {}
    while pending:
        rows = _stack([_rows_for(i, active[i], sites, region) for i in pending])
        boxes = np.array([diagram.cells[i].bbox() for i in pending])
        lo_box, hi_box = boxes[:, :2], boxes[:, 2:]
        start = sites[pending]
        verts = [np.asarray(diagram.cells[i].vertices) for i in pending]
        cap = np.full(len(pending), alpha_cap)
        lo, hi, witness = _bisect(
            rows, lo_box, hi_box, start, verts, cap, tol, scale,
            clamp=(r_min, r_max) if clamp_only else None,
        )

        retry = []
        for t, i in enumerate(pending):
            extra = _violated_outsiders(i, active[i], lo[t], witness[t], sites)
            if extra:
                active[i] = sorted(set(active[i]) | set(extra))
                retry.append(i)
            else:
                solved[i] = (float(lo[t]), witness[t])
        pending = retry

    out = []
    for i in indices:
        rho_raw, x = solved[i]
        point = Point(float(x[0]), float(x[1]))
        out.append(
            RobustFeasibilityResult(
                rho_raw=rho_raw,
                rho=clamp_rrf(rho_raw, r_min, r_max),
                argmax_point=point,
                active_neighbor=_active_neighbor(i, point, sites),
            )
        )
    return out


def _violated_outsiders(i, current, alpha, x, sites):
    """Sensors outside ``current`` whose robust constraint fails at ``x``.

    When none fail, ``x`` certifies the full system at level ``alpha``; the
    reduced system's upper bracket bounds the full one from above.
    """
    current = set(current)
    others = [j for j in range(len(sites)) if j != i and j not in current]
    if not others:
        return []
    si = sites[i]
    sj = sites[others]
    a = 2.0 * (sj - si)
    b = np.einsum("kd,kd->k", sj, sj) - si @ si
    c = 2.0 * (math.hypot(*si) + np.hypot(sj[:, 0], sj[:, 1]))
    slack = b - a @ x - alpha * (A_RATE * math.hypot(*x) + c)
    return [others[k] for k in np.nonzero(slack < 0.0)[0]]


def _active_neighbor(i, x, sites) -> Optional[int]:
    best, arg = math.inf, None
    s_i = sites[i]
    for j in range(len(sites)):
        if j == i:
            continue
        pair = neighbor_coefficients(s_i, sites[j])
        r = (pair.b - (pair.a[0] * x[0] + pair.a[1] * x[1])) / support_value(x, pair)
        if r < best:
            best, arg = r, j
    return arg


def compute_rrf(
    sensor_index: int,
    diagram: VoronoiDiagram,
    deployment: Deployment,
    r_min: float,
    r_max: float,
    tol: float = DEFAULT_TOL,
) -> RobustFeasibilityResult:
    return compute_all_rrf(diagram, deployment, r_min, r_max, tol, [sensor_index])[0]


def robust_location(s: Sequence[float], vertex: Sequence[float], rho: float) -> Point:
    """Nominal position moved a distance ``rho`` towards ``vertex``."""
    if rho < 0:
        raise InvalidInputError("rho must be non-negative")
    dx, dy = vertex[0] - s[0], vertex[1] - s[1]
    d = math.hypot(dx, dy)
    if d == 0.0:
        raise InvalidInputError("vertex coincides with the sensor; direction undefined")
    return Point(s[0] + rho * dx / d, s[1] + rho * dy / d)


def evaluated_position(
    s: Sequence[float], vertex: Sequence[float], rho: float, mode: PositionMode
) -> Point:
    """Sensor location used for scoring under a position mode.

    The best-robust displacement is capped at the vertex itself.
    """
    mode = PositionMode.parse(mode)
    if mode is PositionMode.NOMINAL:
        return as_point(s)
    d = math.hypot(vertex[0] - s[0], vertex[1] - s[1])
    if mode is PositionMode.BEST_ROBUST:
        return robust_location(s, vertex, min(rho, d) if d > 0 else rho)
    p = robust_location(s, vertex, rho)
    return Point(2.0 * s[0] - p.x, 2.0 * s[1] - p.y)
