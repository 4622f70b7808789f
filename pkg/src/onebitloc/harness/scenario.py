"""Scenario descriptions and constellation placement for the simulator.

A scenario bundles everything a Monte Carlo run needs: the node layout
family, signal and grid sizes, SNR at the reference node, range cap,
trial count, and the master seed.  Specs are plain frozen dataclasses
that round-trip through JSON so runs can be described in files and
replayed exactly.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

import numpy as np

from ..geometry import Geometry

NBIOT_BANDWIDTH = 180e3

GEOMETRY_KINDS = ("circle", "l_shape", "random")
ESTIMATOR_NAMES = ("full", "antares", "lasserre")
RANGE_SOURCES = ("gaussian", "pipeline")

DEFAULT_CIRCLE_RADIUS = 800.0

# placements closer than this to a node are redrawn
COINCIDENCE_TOL = 1e-3


@dataclass(frozen=True)
class ScenarioSpec:
    """Complete description of one simulation scenario.

    `grid_size` left as None means twice the sample count, the default
    delay-grid density.  `area` is (x_min, x_max, y_min, y_max) in
    meters.  `estimators` names the location estimators to run; delay
    sweeps ignore it.  `range_source` selects how nodal ranges are
    produced for localization trials: "gaussian" perturbs the true
    ranges with the SNR-scaled noise model, "pipeline" runs the full
    per-node delay-estimation chain.  `delay_fractions`, when given,
    pins the two path delays of every delay-sweep trial to these
    fractions of the observation window instead of drawing them per
    trial; fractions at exact grid multiples land the truth on-grid.
    """

    geometry_kind: str = "circle"
    area: tuple[float, float, float, float] = (-800.0, 800.0, -800.0, 800.0)
    num_nodes: int = 20
    snr1_db: float = 0.0
    oversampling: int = 1
    num_samples: int = 100
    grid_size: int | None = None
    rho: float = 1.0
    r_max: float = 4000.0
    trials: int = 200
    master_seed: int = 0
    estimators: tuple[str, ...] = ("full", "antares")
    snr_exponent: float = 2.0
    range_source: str = "gaussian"
    order: int = 3
    v_max: float | None = None
    radius: float = DEFAULT_CIRCLE_RADIUS
    delay_fractions: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "area", tuple(float(v) for v in self.area))
        object.__setattr__(self, "estimators", tuple(self.estimators))
        if self.geometry_kind not in GEOMETRY_KINDS:
            raise ValueError(f"unknown geometry kind {self.geometry_kind!r}")
        if len(self.area) != 4 or self.area[0] >= self.area[1] or self.area[2] >= self.area[3]:
            raise ValueError("area bounds must be (x_min, x_max, y_min, y_max), well ordered")
        if self.num_nodes < 4:
            raise ValueError("need at least four nodes")
        if self.oversampling < 1:
            raise ValueError("oversampling factor must be at least one")
        if self.num_samples < 2:
            raise ValueError("need at least two samples")
        if self.grid_size is not None and self.grid_size < self.num_samples:
            raise ValueError("delay grid must have at least as many points as samples")
        if self.rho <= 0:
            raise ValueError("rho must be positive")
        if self.r_max <= 0:
            raise ValueError("r_max must be positive")
        if self.trials < 1:
            raise ValueError("need at least one trial")
        if self.master_seed < 0:
            raise ValueError("master seed must be non-negative")
        if not self.estimators:
            raise ValueError("need at least one estimator")
        for name in self.estimators:
            if name not in ESTIMATOR_NAMES:
                raise ValueError(f"unknown estimator {name!r}")
        if self.range_source not in RANGE_SOURCES:
            raise ValueError(f"unknown range source {self.range_source!r}")
        if self.order < 3:
            raise ValueError("relaxation order must be at least three")
        if self.v_max is not None and self.v_max <= 0:
            raise ValueError("v_max must be positive when given")
        if self.radius <= 0:
            raise ValueError("circle radius must be positive")
        if self.delay_fractions is not None:
            object.__setattr__(
                self, "delay_fractions", tuple(float(v) for v in self.delay_fractions)
            )
            if len(self.delay_fractions) != 2:
                raise ValueError("delay fractions must be a (direct, indirect) pair")
            direct, indirect = self.delay_fractions
            if not 0.0 < direct < indirect < 1.0:
                raise ValueError("delay fractions must satisfy 0 < direct < indirect < 1")

    @property
    def delay_grid_points(self) -> int:
        return self.grid_size if self.grid_size is not None else 2 * self.num_samples

    @property
    def duration(self) -> float:
        """Observation window implied by the sample count at this oversampling."""
        return self.num_samples / (2.0 * self.oversampling * NBIOT_BANDWIDTH)

    def to_mapping(self) -> dict:
        record = dataclasses.asdict(self)
        record["area"] = list(self.area)
        record["estimators"] = list(self.estimators)
        if self.delay_fractions is not None:
            record["delay_fractions"] = list(self.delay_fractions)
        return record

    @classmethod
    def from_mapping(cls, mapping: dict) -> "ScenarioSpec":
        known = {field.name for field in dataclasses.fields(cls)}
        unknown = set(mapping) - known
        if unknown:
            raise ValueError(f"unknown scenario fields: {sorted(unknown)}")
        record = dict(mapping)
        if "area" in record:
            record["area"] = tuple(record["area"])
        if "estimators" in record:
            record["estimators"] = tuple(record["estimators"])
        if record.get("delay_fractions") is not None:
            record["delay_fractions"] = tuple(record["delay_fractions"])
        return cls(**record)


def load_scenario(path: str) -> ScenarioSpec:
    """Read a ScenarioSpec from a JSON file."""
    with open(path, encoding="utf-8") as handle:
        return ScenarioSpec.from_mapping(json.load(handle))


def _draw_clear_of_nodes(rng: np.random.Generator, low, high, nodes: np.ndarray) -> np.ndarray:
    point = rng.uniform(low, high)
    while np.min(np.linalg.norm(nodes - point, axis=1)) < COINCIDENCE_TOL:
        point = rng.uniform(low, high)
    return point


def generate_geometry(
    kind: str,
    num_nodes: int,
    area,
    rng_seed,
    radius: float = DEFAULT_CIRCLE_RADIUS,
    target=None,
    base=None,
) -> tuple[Geometry, np.ndarray, np.ndarray]:
    """Place the constellation plus target and base station.

    Circle layouts space the nodes equally on a radius-`radius` circle
    around the area center, starting at angle zero.  L-shape layouts
    space them equally along the bottom and left edges of the area,
    walked as one polyline from the far bottom-right corner.  Random
    layouts draw i.i.d. uniform positions.  Target and base station are
    uniform over the area unless given explicitly, redrawn if they land
    on a node.  Draw order is nodes, target, base, so a fixed seed pins
    the whole placement.

    Returns
    -------
    (geometry, target, base)
    """
    if kind not in GEOMETRY_KINDS:
        raise ValueError(f"unknown geometry kind {kind!r}")
    if num_nodes < 4:
        raise ValueError("need at least four nodes")
    x_min, x_max, y_min, y_max = (float(v) for v in area)
    rng = np.random.default_rng(rng_seed)
    low = np.array([x_min, y_min])
    high = np.array([x_max, y_max])

    if kind == "circle":
        center = 0.5 * (low + high)
        angles = 2.0 * np.pi * np.arange(num_nodes) / num_nodes
        nodes = center + radius * np.column_stack([np.cos(angles), np.sin(angles)])
    elif kind == "l_shape":
        width = x_max - x_min
        height = y_max - y_min
        arc = np.arange(num_nodes) * (width + height) / (num_nodes - 1)
        along_bottom = arc <= width
        nodes = np.empty((num_nodes, 2))
        nodes[along_bottom] = np.column_stack(
            [x_max - arc[along_bottom], np.full(np.sum(along_bottom), y_min)]
        )
        nodes[~along_bottom] = np.column_stack(
            [np.full(np.sum(~along_bottom), x_min), y_min + arc[~along_bottom] - width]
        )
    else:
        nodes = rng.uniform(low, high, size=(num_nodes, 2))

    target = np.asarray(target, dtype=float) if target is not None else _draw_clear_of_nodes(rng, low, high, nodes)
    base = np.asarray(base, dtype=float) if base is not None else _draw_clear_of_nodes(rng, low, high, nodes)
    return Geometry(node_positions=nodes, base_station=base), target, base


def snr_profile(snr1_db: float, geometry: Geometry, target: np.ndarray, exponent: float = 2.0) -> np.ndarray:
    """Per-node linear SNR, scaled from the reference node by distance ratio.

    Node m gets SNR_1 * (d_m / d_1)^exponent with d_m the node-to-target
    distance; the reference node maps to SNR_1 exactly.  The default +2
    exponent favors distant nodes; pass -2 for conventional path loss.
    """
    dists = np.linalg.norm(geometry.node_positions - target, axis=1)
    if dists[0] <= 0.0:
        raise ValueError("target coincides with the reference node")
    return 10.0 ** (snr1_db / 10.0) * (dists / dists[0]) ** exponent
