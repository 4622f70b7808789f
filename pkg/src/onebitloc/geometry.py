"""Node geometry, range-difference least squares, one-bit range uplink.

The full-precision localization baseline linearizes the range differences
relative to a reference node (the first one) into G theta = h and solves by
least squares.  Each node also quantizes its range estimate against one of
eight codebook thresholds; the resulting sign plus the 3-bit threshold code
form the uplink record sent to the fusion center.

Uplink bit layout, 4 bits per node: bit 0 carries the sign (1 encodes +1),
bits 1-3 the threshold code.  Node 2i occupies the low nibble of byte i and
node 2i+1 the high nibble; trailing pad nibbles are zero.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.linalg

NUM_THRESHOLD_LEVELS = 8


@dataclass(frozen=True)
class Geometry:
    """Sensor constellation: node positions, base station, dimensionality.

    Positions are an (M, dim) array in meters with dim 2 in planar mode and
    3 otherwise; the first row is the reference node.  M must be at least
    dim + 2 so that the linearized system can be full column rank.
    """

    node_positions: np.ndarray
    base_station: np.ndarray
    planar: bool = True

    def __post_init__(self) -> None:
        dim = 2 if self.planar else 3
        if self.node_positions.ndim != 2 or self.node_positions.shape[1] != dim:
            raise ValueError(f"node positions must be (M, {dim}) in this mode")
        if self.base_station.shape != (dim,):
            raise ValueError(f"base station must be a {dim}-vector")
        if self.node_positions.shape[0] < dim + 2:
            raise ValueError(f"need at least {dim + 2} nodes, got {self.node_positions.shape[0]}")
        for arr in (self.node_positions, self.base_station):
            if not np.all(np.isfinite(arr)):
                raise ValueError("coordinates must be finite")

    @property
    def num_nodes(self) -> int:
        return self.node_positions.shape[0]

    @property
    def dim(self) -> int:
        return self.node_positions.shape[1]


@dataclass(frozen=True)
class OneBitRangeData:
    """Per-node sign bits and codebook thresholds bound for the uplink."""

    signs: np.ndarray
    thresholds: np.ndarray
    threshold_codes: np.ndarray
    r_max: float

    def __post_init__(self) -> None:
        if not (self.signs.shape == self.thresholds.shape == self.threshold_codes.shape):
            raise ValueError("signs, thresholds, and codes must share a shape")
        if np.any(np.abs(self.signs) != 1):
            raise ValueError("signs must be +-1")
        if np.any((self.threshold_codes < 0) | (self.threshold_codes >= NUM_THRESHOLD_LEVELS)):
            raise ValueError("threshold codes must be 3-bit")
        expected = (self.threshold_codes + 1) * (self.r_max / NUM_THRESHOLD_LEVELS)
        if not np.array_equal(self.thresholds, expected):
            raise ValueError("thresholds must sit exactly on codebook levels")


def true_ranges(geometry: Geometry, target: np.ndarray) -> np.ndarray:
    """Range sum per node: node-to-target plus base-to-target distance."""
    if target.shape != (geometry.dim,):
        raise ValueError("target dimensionality must match the geometry")
    node_leg = np.linalg.norm(geometry.node_positions - target, axis=1)
    return node_leg + np.linalg.norm(geometry.base_station - target)


def build_G_h(geometry: Geometry, ranges: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Linearized range-difference system relative to the reference node.

    Row m-1 reads  (node_m - node_1) . offset + (r_m - r_1) d_1 =
    (||node_m - node_1||^2 - (r_m - r_1)^2) / 2, linear in the unknown
    theta = [target - node_1, d_1].

    Returns
    -------
    (G, h)
        G with shape (M-1, dim+1) and h with shape (M-1,).
    """
    if ranges.shape != (geometry.num_nodes,):
        raise ValueError("one range per node required")
    diffs = geometry.node_positions[1:] - geometry.node_positions[0]
    range_gaps = ranges[1:] - ranges[0]
    gmat = np.column_stack([diffs, range_gaps])
    h = 0.5 * (np.sum(diffs**2, axis=1) - range_gaps**2)
    return gmat, h


def solve_ls(gmat: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Least-squares solution of G theta = h with a full-rank check.

    Parameters
    ----------
    gmat : ndarray
        (M-1) x (dim+1) system matrix.
    h : ndarray
        (M-1)-vector right-hand side.

    Returns
    -------
    ndarray
        theta = [target offset from the reference node, d_1].

    Raises
    ------
    numpy.linalg.LinAlgError
        If G is rank deficient; the message names a dependent column
        (planar constellations fed to 3-D mode zero out the z column).
    """
    rows, cols = gmat.shape
    if rows < cols:
        raise ValueError("underdetermined system: more unknowns than equations")
    _, rdiag, pivots = scipy.linalg.qr(gmat, mode="economic", pivoting=True)
    diag = np.abs(np.diag(rdiag))
    tol = max(rows, cols) * np.finfo(float).eps * (diag[0] if diag.size else 0.0)
    rank = int(np.sum(diag > tol))
    if rank < cols:
        dependent = int(pivots[rank])
        raise np.linalg.LinAlgError(
            f"system is rank deficient (rank {rank} of {cols}): "
            f"column {dependent} adds no information"
        )
    theta, *_ = np.linalg.lstsq(gmat, h, rcond=None)
    return theta


def target_from_theta(geometry: Geometry, theta: np.ndarray) -> np.ndarray:
    """Absolute target position: offset coordinates plus the reference node."""
    if theta.shape != (geometry.dim + 1,):
        raise ValueError("theta must hold dim offsets plus the reference range")
    return theta[: geometry.dim] + geometry.node_positions[0]


def localize_full_precision(geometry: Geometry, ranges: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Target position and theta from full-precision nodal ranges."""
    theta = solve_ls(*build_G_h(geometry, ranges))
    return target_from_theta(geometry, theta), theta


def quantize_range(range_estimate, threshold):
    """One-bit range quantizer sgn(range - threshold), with sgn(0) = +1."""
    if np.any(np.asarray(threshold) <= 0.0):
        raise ValueError("thresholds must be positive")
    signs = np.where(np.asarray(range_estimate) - threshold >= 0.0, 1, -1)
    if np.ndim(range_estimate) == 0:
        return int(signs)
    return signs


def threshold_levels(r_max: float) -> np.ndarray:
    """The eight codebook levels k * r_max / 8, k = 1..8."""
    if r_max <= 0:
        raise ValueError("r_max must be positive")
    return np.arange(1, NUM_THRESHOLD_LEVELS + 1) * (r_max / NUM_THRESHOLD_LEVELS)


def draw_range_thresholds(
    num_nodes: int, r_max: float, rng_seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Draw per-node thresholds uniformly from the codebook.

    Returns
    -------
    (thresholds, codes)
        Threshold values in meters and their 3-bit codes (level index - 1).
    """
    rng = np.random.default_rng(rng_seed)
    codes = rng.integers(0, NUM_THRESHOLD_LEVELS, size=num_nodes)
    return threshold_levels(r_max)[codes], codes


def decode_threshold(code, r_max: float):
    """Threshold value for a 3-bit code."""
    return (np.asarray(code) + 1) * (r_max / NUM_THRESHOLD_LEVELS)


def pack_uplink(data: OneBitRangeData) -> bytes:
    """Serialize the uplink record, 4 bits per node (layout in module doc)."""
    nibbles = ((data.signs > 0).astype(np.uint8)) | (
        data.threshold_codes.astype(np.uint8) << 1
    )
    out = bytearray((nibbles.size + 1) // 2)
    for i, nib in enumerate(nibbles):
        out[i // 2] |= int(nib) << (4 * (i % 2))
    return bytes(out)


def unpack_uplink(payload: bytes, num_nodes: int, r_max: float) -> OneBitRangeData:
    """Inverse of pack_uplink."""
    if len(payload) != (num_nodes + 1) // 2:
        raise ValueError("payload length does not match the node count")
    signs = np.empty(num_nodes, dtype=int)
    codes = np.empty(num_nodes, dtype=int)
    for m in range(num_nodes):
        nibble = (payload[m // 2] >> (4 * (m % 2))) & 0xF
        signs[m] = 1 if nibble & 1 else -1
        codes[m] = nibble >> 1
    return OneBitRangeData(
        signs=signs,
        thresholds=decode_threshold(codes, r_max),
        threshold_codes=codes,
        r_max=r_max,
    )


def uplink_debug_json(data: OneBitRangeData) -> str:
    """Human-readable JSON twin of the packed uplink record."""
    return json.dumps(
        {
            "num_nodes": int(data.signs.size),
            "r_max_m": float(data.r_max),
            "signs": data.signs.tolist(),
            "threshold_codes": data.threshold_codes.tolist(),
            "thresholds_m": data.thresholds.tolist(),
        },
        indent=2,
    )
