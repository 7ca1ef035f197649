"""Scenario execution, orientation strategies, metrics and parameter sweeps."""

from __future__ import annotations

import csv
import io
import itertools
import math
import time
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from functools import lru_cache
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigurationError, InvalidInputError
from .geometry import TWO_PI, Point, normalize_angle, sector_polygon_area
from .optimizer import AlgoConfig, AlgoTrace, run_algorithm
from .rrf import DEFAULT_TOL, PositionMode, RobustFeasibilityResult, compute_all_rrf
from .sensing import SensorConfig, SensorState, aim
from .voronoi import MIN_SEPARATION, Deployment, Region, VoronoiDiagram, build_voronoi

DEPLOY_MARGIN = 1e-3
MAX_DEPLOY_ATTEMPTS = 10**6
UNION_SAMPLES = 10**5

CSV_HEADER = (
    "theta_deg", "r_s", "m", "rho_min", "rho_max",
    "strategy", "case", "runs", "mean_coverage", "std_coverage",
)


class Strategy(Enum):
    RANDOM = "random"
    IDS = "ids"
    PROPOSED = "proposed"

    @classmethod
    def parse(cls, value) -> "Strategy":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise InvalidInputError(f"unknown strategy {value!r}") from None


@dataclass(frozen=True)
class ScenarioConfig:
    """One simulation setting. ``theta_s`` is stored in radians."""

    region: Tuple[float, float] = (1000.0, 1000.0)
    m: int = 40
    r_s: float = 100.0
    theta_s: float = math.pi / 2
    rho_min: float = 50.0
    rho_max: float = 150.0
    epsilon: Optional[float] = None
    strategy: Strategy = Strategy.PROPOSED
    mode: PositionMode = PositionMode.NOMINAL
    runs: int = 500
    seed: int = 0
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        w, h = (float(v) for v in self.region)
        object.__setattr__(self, "region", (w, h))
        object.__setattr__(self, "strategy", Strategy.parse(self.strategy))
        object.__setattr__(self, "mode", PositionMode.parse(self.mode))
        if not (w > 0 and h > 0):
            raise ConfigurationError("region sides must be positive")
        if int(self.m) != self.m or self.m < 1:
            raise ConfigurationError("m must be a positive integer")
        if int(self.runs) != self.runs or self.runs < 1:
            raise ConfigurationError("runs must be a positive integer")
        if not self.r_s > 0:
            raise ConfigurationError("r_s must be positive")
        if not (0.0 < self.theta_s <= TWO_PI + 1e-12):
            raise ConfigurationError("view angle must lie in (0, 360] degrees")
        if not 0 <= self.rho_min <= self.rho_max:
            raise ConfigurationError("need 0 <= rho_min <= rho_max")
        if self.epsilon is not None and self.epsilon < 0:
            raise ConfigurationError("epsilon must be non-negative")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ConfigurationError("seed must be a non-negative integer")
        if not self.tol > 0:
            raise ConfigurationError("tol must be positive")

    @classmethod
    def create(cls, theta_deg: float = 90.0, **kw) -> "ScenarioConfig":
        """Build a config with the view angle given in degrees."""
        return cls(theta_s=math.radians(theta_deg), **kw)

    @classmethod
    def from_mapping(cls, data: Mapping) -> "ScenarioConfig":
        """Config from a JSON-style mapping; ``theta_s`` is read in degrees."""
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        kw = dict(data)
        if "theta_s" in kw:
            kw["theta_s"] = math.radians(float(kw["theta_s"]))
        if "region" in kw:
            kw["region"] = tuple(kw["region"])
        try:
            return cls(**kw)
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(str(exc)) from None

    @property
    def theta_deg(self) -> float:
        return math.degrees(self.theta_s)

    @property
    def region_obj(self) -> Region:
        return Region(*self.region)

    @property
    def sensor_cfg(self) -> SensorConfig:
        return SensorConfig(self.r_s, self.theta_s)

    def algo_cfg(self, mode: Optional[PositionMode] = None) -> AlgoConfig:
        return AlgoConfig(self.epsilon, self.mode if mode is None else mode)

    def with_theta_deg(self, theta_deg: float) -> "ScenarioConfig":
        return replace(self, theta_s=math.radians(theta_deg))


@dataclass
class RunResult:
    total_coverage: float
    per_sensor_area: List[float]
    rrf_values: List[float]
    union_coverage_mc: Optional[float]
    wall_time: float
    states: List[SensorState] = field(default_factory=list, repr=False)
    trace: Optional[AlgoTrace] = field(default=None, repr=False)

    def metrics(self) -> Dict:
        return {
            "total_coverage": self.total_coverage,
            "per_sensor_area": self.per_sensor_area,
            "rrf_values": self.rrf_values,
            "union_coverage_mc": self.union_coverage_mc,
            "wall_time": self.wall_time,
            "reorientation_events": (
                len(self.trace.reorientation_events) if self.trace else None
            ),
        }


# -- deployment and shared per-run data --------------------------------------


def deploy_random(config: ScenarioConfig, run_index: int) -> Deployment:
    """Uniform positions in the region interior, seeded by ``seed + run_index``."""
    w, h = config.region
    if 2 * DEPLOY_MARGIN >= min(w, h):
        raise ConfigurationError("region too small for the deployment margin")
    rng = np.random.default_rng(config.seed + run_index)
    pts = np.empty((config.m, 2))
    count = attempts = 0
    while count < config.m:
        if attempts >= MAX_DEPLOY_ATTEMPTS:
            raise ConfigurationError(
                f"could not place {config.m} separated sensors in {attempts} attempts"
            )
        attempts += 1
        p = (rng.uniform(DEPLOY_MARGIN, w - DEPLOY_MARGIN), rng.uniform(DEPLOY_MARGIN, h - DEPLOY_MARGIN))
        if count and np.hypot(*(pts[:count] - p).T).min() <= MIN_SEPARATION:
            continue
        pts[count] = p
        count += 1
    return Deployment(config.region_obj, tuple(Point(float(x), float(y)) for x, y in pts))


@lru_cache(maxsize=1024)
def _diagram(deployment: Deployment) -> VoronoiDiagram:
    return build_voronoi(deployment)


@lru_cache(maxsize=1024)
def _rrf(deployment: Deployment, r_min: float, r_max: float, tol: float):
    return tuple(
        compute_all_rrf(_diagram(deployment), deployment, r_min, r_max, tol, clamp_only=True)
    )


def prepare(config: ScenarioConfig, run_index: int):
    """Deployment, Voronoi diagram and clamped RRF for one run (memoised)."""
    dep = deploy_random(config, run_index)
    return dep, _diagram(dep), _rrf(dep, float(config.rho_min), float(config.rho_max), config.tol)


# -- strategies --------------------------------------------------------------


def _random_states(deployment, rrf, config, run_index) -> List[SensorState]:
    rng = np.random.default_rng([config.seed + run_index, 1])
    thetas = rng.uniform(-math.pi, math.pi, len(deployment))
    return [
        SensorState(id=i, nominal=p, rho=rrf[i].rho, orientation=normalize_angle(float(t)))
        for i, (p, t) in enumerate(zip(deployment.positions, thetas))
    ]


def reposition(states: Sequence[SensorState], mode: PositionMode) -> List[SensorState]:
    """Copies of ``states`` with evaluated positions recomputed for ``mode``.

    Sensors without a chosen vertex are displaced along their orientation.
    """
    mode = PositionMode.parse(mode)
    out = []
    for s in states:
        s = replace(s)
        if s.chosen_vertex is not None:
            s.evaluated, s.orientation = aim(s.nominal, s.chosen_vertex, s.rho, mode)
        else:
            sign = {PositionMode.NOMINAL: 0.0, PositionMode.BEST_ROBUST: 1.0,
                    PositionMode.WORST_ROBUST: -1.0}[mode]
            d = sign * s.rho
            s.evaluated = Point(
                s.nominal.x + d * math.cos(s.orientation), s.nominal.y + d * math.sin(s.orientation)
            )
        out.append(s)
    return out


def _with_true_rho(states, rrf):
    return [replace(s, rho=rrf[s.id].rho) for s in states]


def assign_orientations(
    deployment: Deployment,
    config: ScenarioConfig,
    *,
    run_index: int = 0,
    diagram: Optional[VoronoiDiagram] = None,
    rrf: Optional[Sequence[RobustFeasibilityResult]] = None,
    with_trace: bool = False,
):
    """Orient every sensor per ``config.strategy``, evaluated at ``config.mode``.

    Returns the state list, or ``(states, trace)`` when ``with_trace`` is set
    (the trace is None for the random strategy).
    """
    if diagram is None:
        diagram = _diagram(deployment)
    if rrf is None:
        rrf = _rrf(deployment, float(config.rho_min), float(config.rho_max), config.tol)
    bounds = (config.rho_min, config.rho_max)
    trace = None
    if config.strategy is Strategy.RANDOM:
        states = reposition(_random_states(deployment, rrf, config, run_index), config.mode)
    elif config.strategy is Strategy.IDS:
        states, trace = run_algorithm(
            deployment, config.sensor_cfg, config.algo_cfg(PositionMode.NOMINAL), bounds,
            diagram=diagram, rrf=rrf, rho_override=0.0,
        )
        states = reposition(_with_true_rho(states, rrf), config.mode)
    else:
        states, trace = run_algorithm(
            deployment, config.sensor_cfg, config.algo_cfg(), bounds, diagram=diagram, rrf=rrf
        )
    return (states, trace) if with_trace else states


def _union_mc(states, cfg: SensorConfig, region: Region, n: int, rng) -> float:
    sectors = [cfg.sector(s.evaluated, s.orientation) for s in states]
    hits = 0
    left = n
    while left > 0:
        k = min(left, 1 << 16)
        pts = np.column_stack((rng.uniform(0, region.width, k), rng.uniform(0, region.height, k)))
        cov = np.zeros(k, dtype=bool)
        for sec in sectors:
            cov |= sec.mask(pts)
        hits += int(np.count_nonzero(cov))
        left -= k
    return region.area * hits / n


def evaluate(
    states: Sequence[SensorState],
    diagram: VoronoiDiagram,
    config: ScenarioConfig,
    *,
    union_samples: int = UNION_SAMPLES,
    run_index: int = 0,
) -> RunResult:
    """Cell-clipped coverage per sensor and its total.

    The Monte-Carlo union estimate is a diagnostic; pass ``union_samples=0``
    to skip it.
    """
    t0 = time.perf_counter()
    cfg = config.sensor_cfg
    per = [
        sector_polygon_area(cfg.sector(s.evaluated, s.orientation), diagram.cells[s.id])
        for s in states
    ]
    total = 0.0
    for a in per:
        total += a
    union = None
    if union_samples:
        rng = np.random.default_rng([config.seed + run_index, 2])
        union = _union_mc(states, cfg, config.region_obj, union_samples, rng)
    return RunResult(
        total_coverage=total,
        per_sensor_area=per,
        rrf_values=[s.rho for s in states],
        union_coverage_mc=union,
        wall_time=time.perf_counter() - t0,
        states=list(states),
    )


def run_scenario(
    config: ScenarioConfig, run_index: int = 0, *, union_samples: int = UNION_SAMPLES
) -> RunResult:
    """Deploy, orient and evaluate a single realisation."""
    t0 = time.perf_counter()
    dep, diagram, rrf = prepare(config, run_index)
    states, trace = assign_orientations(
        dep, config, run_index=run_index, diagram=diagram, rrf=rrf, with_trace=True
    )
    res = evaluate(states, diagram, config, union_samples=union_samples, run_index=run_index)
    res.trace = trace
    res.rrf_values = [r.rho for r in rrf]
    res.wall_time = time.perf_counter() - t0
    return res


# -- sweeps ------------------------------------------------------------------

AXES = ("theta_s", "r_s", "m", "rho")


@dataclass(frozen=True)
class SweepSpec:
    """Grid over named axes crossed with strategies and position modes.

    ``theta_s`` axis values are degrees; ``rho`` values are (min, max) pairs.
    """

    base: ScenarioConfig
    axes: Tuple[Tuple[str, Tuple], ...]
    strategies: Tuple[Strategy, ...] = tuple(Strategy)
    modes: Tuple[PositionMode, ...] = tuple(PositionMode)

    def __post_init__(self):
        axes = tuple((name, tuple(vals)) for name, vals in dict(self.axes).items())
        if not axes or any(not vals for _, vals in axes):
            raise ConfigurationError("sweep needs at least one non-empty axis")
        for name, _ in axes:
            if name not in AXES:
                raise ConfigurationError(f"unknown sweep axis {name!r}")
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "strategies", tuple(Strategy.parse(s) for s in self.strategies))
        object.__setattr__(self, "modes", tuple(PositionMode.parse(m) for m in self.modes))
        if not self.strategies or not self.modes:
            raise ConfigurationError("sweep needs at least one strategy and one mode")

    def points(self) -> Iterable[ScenarioConfig]:
        names = [n for n, _ in self.axes]
        for combo in itertools.product(*(v for _, v in self.axes)):
            cfg = self.base
            for name, val in zip(names, combo):
                if name == "theta_s":
                    cfg = cfg.with_theta_deg(val)
                elif name == "rho":
                    lo, hi = val
                    cfg = replace(cfg, rho_min=lo, rho_max=hi)
                else:
                    cfg = replace(cfg, **{name: val})
            yield cfg


@dataclass(frozen=True)
class SweepRow:
    theta_deg: float
    r_s: float
    m: int
    rho_min: float
    rho_max: float
    strategy: Strategy
    case: PositionMode
    runs: int
    mean_coverage: float
    std_coverage: float
    totals: Tuple[float, ...] = field(repr=False, compare=False, default=())


def _mean_std(values: Sequence[float]) -> Tuple[float, float]:
    acc = 0.0
    for v in values:
        acc += v
    mean = acc / len(values)
    std = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
    return mean, std


def point_totals(
    config: ScenarioConfig,
    strategies: Sequence[Strategy],
    modes: Sequence[PositionMode],
    progress=None,
) -> Dict[Tuple[Strategy, PositionMode], List[float]]:
    """Per-run totals for every (strategy, mode) pair at one grid point.

    Each run's deployment, diagram and RRF are computed once and shared by
    all pairs. Strategies whose optimisation ignores the mode are optimised
    once per run.
    """
    out = {(s, md): [] for s in strategies for md in modes}
    for run in range(config.runs):
        dep, diagram, rrf = prepare(config, run)
        for strat in strategies:
            cfg = replace(config, strategy=strat)
            base = None
            if strat is Strategy.RANDOM:
                base = _random_states(dep, rrf, cfg, run)
            elif strat is Strategy.IDS:
                base = _with_true_rho(
                    assign_orientations(dep, replace(cfg, mode=PositionMode.NOMINAL),
                                        run_index=run, diagram=diagram, rrf=rrf),
                    rrf,
                )
            for md in modes:
                if base is not None:
                    states = reposition(base, md)
                else:
                    states = assign_orientations(
                        dep, replace(cfg, mode=md), run_index=run, diagram=diagram, rrf=rrf
                    )
                res = evaluate(states, diagram, replace(cfg, mode=md), union_samples=0)
                out[(strat, md)].append(res.total_coverage)
        if progress is not None:
            progress(config, run)
    return out


def sweep(spec: SweepSpec, progress=None) -> List[SweepRow]:
    """Mean and sample std of total coverage for every grid cell, in grid order."""
    rows = []
    for cfg in spec.points():
        totals = point_totals(cfg, spec.strategies, spec.modes, progress)
        for strat in spec.strategies:
            for md in spec.modes:
                vals = totals[(strat, md)]
                mean, std = _mean_std(vals)
                rows.append(SweepRow(
                    cfg.theta_deg, cfg.r_s, cfg.m, cfg.rho_min, cfg.rho_max,
                    strat, md, cfg.runs, mean, std, tuple(vals),
                ))
    return rows


def _num(x) -> str:
    x = float(x)
    return str(int(x)) if x.is_integer() and abs(x) < 1e15 else repr(x)


def _deg(x: float) -> str:
    # degrees come back from a radians round trip; trim float noise
    r = round(x, 9)
    return _num(r)


def rows_to_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([
            _deg(r.theta_deg), _num(r.r_s), str(r.m), _num(r.rho_min), _num(r.rho_max),
            r.strategy.value, r.case.value, str(r.runs), repr(r.mean_coverage), repr(r.std_coverage),
        ])
    return buf.getvalue()


TABLE_AXES: Dict[int, Tuple[Tuple[str, Tuple], ...]] = {
    1: (("theta_s", (30, 60, 90, 180, 360)),),
    2: (("r_s", (50, 100, 200, 300)),),
    3: (("m", (10, 40, 60, 100)),),
    4: (("rho", ((10, 50), (50, 150), (200, 500))),),
}


def table_spec(table: int, base: Optional[ScenarioConfig] = None) -> SweepSpec:
    """Sweep preset for one of the four published parameter tables."""
    if table not in TABLE_AXES:
        raise ConfigurationError("table must be 1, 2, 3 or 4")
    if base is None:
        base = ScenarioConfig()
    return SweepSpec(base=base, axes=TABLE_AXES[table])
