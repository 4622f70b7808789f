"""Alternating closed-form estimation of ranges and target position.

Each one-bit report pins its range to one side of the node threshold, and
the joint fit ``||G(r) theta - h(r)||^2`` couples ranges and target only
through scalar quartics.  This module cycles exact block minimizers: every
non-reference range solves a sign-constrained quartic through a closed-form
cubic stationary-point enumeration, the reference range solves the averaged
quartic over all rows, and theta solves the linear least-squares system.
Each update is a global minimizer of its block, so the objective never
increases along the iteration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Geometry, build_G_h, solve_ls, target_from_theta

# primitive cube root of unity rotating through the three cubic roots
CUBE_ROOT_ROTATION = (-1.0 + 1j * np.sqrt(3.0)) / 2.0
# a root counts as real when its imaginary part is this far below its scale
REAL_ROOT_IMAG_TOL = 1e-7
# curvature slack so borderline stationary points stay in the candidate set
CURVATURE_SLACK = 1e-9


@dataclass(frozen=True)
class QuarticCoeffs:
    """Coefficients of a monic-normalized quartic r^4/4 + beta r^3 + varsigma r^2 + omega r + eta."""

    beta: float
    varsigma: float
    omega: float
    eta: float

    def __post_init__(self) -> None:
        values = (self.beta, self.varsigma, self.omega, self.eta)
        if not all(np.isfinite(v) for v in values):
            raise ValueError("quartic coefficients must be finite")


@dataclass(frozen=True)
class AntaresConfig:
    """Tolerances, iteration cap, and optional warm starts for the solver.

    Either squared-step tolerance ends the loop on its own; `r_max` caps
    every range candidate.  `theta_init` and `r1_init` default to the
    threshold-based starting rule when left unset.
    """

    eps_theta: float = 1e-8
    eps_r: float = 1e-8
    max_iters: int = 500
    r_max: float = 4000.0
    theta_init: np.ndarray | None = None
    r1_init: float | None = None

    def __post_init__(self) -> None:
        if self.eps_theta <= 0 or self.eps_r <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least one")
        if self.r_max <= 0:
            raise ValueError("r_max must be positive")


@dataclass(frozen=True)
class AntaresResult:
    """Final iterate plus a JSON-ready diagnostics record."""

    theta: np.ndarray
    ranges: np.ndarray
    target: np.ndarray
    objective: float
    diagnostics: dict


def quartic_value(coeffs: QuarticCoeffs, r):
    """Evaluate the quartic at scalar or array `r`."""
    r = np.asarray(r, dtype=float)
    return 0.25 * r**4 + coeffs.beta * r**3 + coeffs.varsigma * r**2 + coeffs.omega * r + coeffs.eta


def quartic_coeffs_node(theta: np.ndarray, r1: float, zeta_m: float) -> QuarticCoeffs:
    """Quartic in one non-reference range given the current theta and reference range.

    The row residual is zeta + theta4 (r - r1) + (r - r1)^2 / 2; its square
    expands to the returned coefficients with theta4 read off the last theta
    entry.
    """
    theta4 = float(theta[-1])
    r1 = float(r1)
    zeta = float(zeta_m)
    quad = theta4**2 + zeta
    return QuarticCoeffs(
        beta=theta4 - r1,
        varsigma=1.5 * r1**2 - 3.0 * theta4 * r1 + quad,
        omega=-(r1**3) + 3.0 * theta4 * r1**2 - 2.0 * quad * r1 + 2.0 * theta4 * zeta,
        eta=0.25 * r1**4 - theta4 * r1**3 + quad * r1**2 - 2.0 * theta4 * zeta * r1 + zeta**2,
    )


def cubic_roots(beta: float, varsigma: float, omega: float) -> np.ndarray:
    """Three complex roots of r^3 + 3 beta r^2 + 2 varsigma r + omega.

    Closed Cardano form; the radical sign is chosen to maximize the cube
    argument's magnitude so the division by it never cancels.  A triple
    root falls out when both discriminant pieces vanish.
    """
    d0 = 9.0 * beta**2 - 6.0 * varsigma
    d1 = 54.0 * beta**3 - 54.0 * beta * varsigma + 27.0 * omega
    radical = np.sqrt(complex(d1**2 - 4.0 * d0**3))
    plus = (d1 + radical) / 2.0
    minus = (d1 - radical) / 2.0
    cube_arg = plus if abs(plus) >= abs(minus) else minus
    if cube_arg == 0:
        return np.full(3, -beta, dtype=complex)
    d2 = cube_arg ** (1.0 / 3.0)
    rotations = CUBE_ROOT_ROTATION ** np.arange(3)
    return -(3.0 * beta + rotations * d2 + d0 / (rotations * d2)) / 3.0


def solve_constrained_quartic(
    coeffs: QuarticCoeffs, w: float, lam: float, r_max: float = 4000.0
) -> tuple[float, bool]:
    """Global minimizer of the quartic over {r in [0, r_max], w (r - lam) >= 0}.

    Candidates follow the stationarity cases: an interval edge when the
    derivative points into the interior there (for the lower edge this is
    the threshold rule when the sign points up and the omega-positivity
    rule at zero when it points down; the cap contributes the mirrored
    upper-edge rule since it bounds the scan), plus every real nonnegative
    feasible stationary point with nonnegative curvature.  Floating-point
    boundary classification can empty the set, in which case the feasible
    corners {0, lam, r_max} decide and the second return value reports the
    fallback.

    Returns
    -------
    (r, fallback)
        The minimizer (ties broken toward smaller r) and whether the
        corner fallback fired.
    """
    if lam <= 0:
        raise ValueError("threshold must be positive")
    lo, hi = (lam, r_max) if w > 0 else (0.0, lam)

    def derivative(r: float) -> float:
        return r**3 + 3.0 * coeffs.beta * r**2 + 2.0 * coeffs.varsigma * r + coeffs.omega

    candidates = []
    if derivative(lo) > 0:
        candidates.append(lo)
    if derivative(hi) < 0:
        candidates.append(hi)
    for root in cubic_roots(coeffs.beta, coeffs.varsigma, coeffs.omega):
        if abs(root.imag) > REAL_ROOT_IMAG_TOL * (1.0 + abs(root.real)):
            continue
        r = float(root.real)
        if r < lo or r > hi:
            continue
        curvature = 3.0 * r**2 + 6.0 * coeffs.beta * r + 2.0 * coeffs.varsigma
        scale = 3.0 * r**2 + 6.0 * abs(coeffs.beta) * r + 2.0 * abs(coeffs.varsigma) + 1.0
        if curvature >= -CURVATURE_SLACK * scale:
            candidates.append(r)
    fallback = not candidates
    if fallback:
        candidates = [r for r in (0.0, lam, r_max) if lo <= r <= hi]
    best = min(candidates, key=lambda r: (float(quartic_value(coeffs, r)), r))
    return float(best), fallback


def r1_subproblem_coeffs(
    theta: np.ndarray, r_rest: np.ndarray, zetas: np.ndarray
) -> QuarticCoeffs:
    """Averaged quartic in the reference range across all rows.

    Each row contributes ((r1 - r_m)^2 / 2 - theta4 (r1 - r_m) + zeta_m)^2;
    dividing the sum by the row count restores the leading 1/4 so the same
    constrained solver applies.
    """
    theta4 = float(theta[-1])
    r = np.asarray(r_rest, dtype=float)
    z = np.asarray(zetas, dtype=float)
    if r.shape != z.shape or r.ndim != 1 or r.size < 1:
        raise ValueError("need one range and one zeta per non-reference node")
    quad = theta4**2 + z
    return QuarticCoeffs(
        beta=float(-np.mean(r) - theta4),
        varsigma=float(np.mean(1.5 * r**2 + 3.0 * theta4 * r + quad)),
        omega=float(np.mean(-(r**3) - 3.0 * theta4 * r**2 - 2.0 * quad * r - 2.0 * theta4 * z)),
        eta=float(
            np.mean(0.25 * r**4 + theta4 * r**3 + quad * r**2 + 2.0 * theta4 * z * r + z**2)
        ),
    )


def theta_update(geometry: Geometry, ranges: np.ndarray) -> np.ndarray:
    """Least-squares theta for the current range iterate."""
    return solve_ls(*build_G_h(geometry, ranges))


def _gap_system(geometry: Geometry) -> tuple[np.ndarray, np.ndarray]:
    diffs = geometry.node_positions[1:] - geometry.node_positions[0]
    return diffs, 0.5 * np.sum(diffs**2, axis=1)


def _objective(geometry: Geometry, theta: np.ndarray, ranges: np.ndarray) -> float:
    gmat, h = build_G_h(geometry, ranges)
    return float(np.sum((gmat @ theta - h) ** 2))


def antares(
    signs: np.ndarray,
    thresholds: np.ndarray,
    geometry: Geometry,
    config: AntaresConfig | None = None,
) -> AntaresResult:
    """Joint range and target estimate from one-bit range comparisons.

    Starts theta at the least-squares fit with every range pinned to its
    threshold and the reference range strictly inside its feasible side,
    then cycles the three exact block updates (non-reference ranges, the
    reference range, theta) until either squared step drops below its
    tolerance or the iteration cap is hit.  Every iterate satisfies the
    sign constraints exactly; a rank-deficient range iterate freezes theta
    for that pass instead of aborting.

    Parameters
    ----------
    signs : ndarray
        Per-node comparison bits, +-1.
    thresholds : ndarray
        Per-node range thresholds, positive, at most `config.r_max`.
    geometry : Geometry
    config : AntaresConfig, optional

    Returns
    -------
    AntaresResult
        Final theta, ranges, target, objective, and a diagnostics dict
        (iteration count, per-update objective trace, fallback and
        rank-freeze counters, stop reason) that serializes to JSON as is.
    """
    if config is None:
        config = AntaresConfig()
    signs = np.asarray(signs, dtype=float)
    thresholds = np.asarray(thresholds, dtype=float)
    m = geometry.num_nodes
    if signs.shape != (m,) or thresholds.shape != (m,):
        raise ValueError("signs and thresholds need one entry per node")
    if np.any(np.abs(signs) != 1):
        raise ValueError("signs must be +-1")
    if np.any(thresholds <= 0) or np.any(thresholds > config.r_max):
        raise ValueError("thresholds must lie in (0, r_max]")

    if config.theta_init is not None:
        theta = np.asarray(config.theta_init, dtype=float).copy()
        if theta.shape != (geometry.dim + 1,):
            raise ValueError("theta_init must hold dim offsets plus the reference range")
    else:
        theta = theta_update(geometry, thresholds)
    if config.r1_init is not None:
        r1 = float(config.r1_init)
        if signs[0] * (r1 - thresholds[0]) < 0 or not 0 <= r1 <= config.r_max:
            raise ValueError("r1_init must be feasible")
    else:
        r1 = thresholds[0] + 0.1 * config.r_max if signs[0] > 0 else thresholds[0] / 2.0
        r1 = min(r1, config.r_max)
    gap_map, gap_b = _gap_system(geometry)

    ranges = thresholds.copy()
    ranges[0] = r1
    trace: list[float] = []
    fallbacks = 0
    rank_freezes = 0
    stop_reason = "max_iters"
    converged = False
    iteration = 0
    for iteration in range(1, config.max_iters + 1):
        theta_prev = theta
        ranges_prev = ranges.copy()
        zetas = gap_map @ theta[: geometry.dim] - gap_b
        for k in range(1, m):
            coeffs = quartic_coeffs_node(theta, ranges[0], zetas[k - 1])
            ranges[k], used = solve_constrained_quartic(
                coeffs, signs[k], thresholds[k], config.r_max
            )
            fallbacks += used
        trace.append(_objective(geometry, theta, ranges))
        coeffs = r1_subproblem_coeffs(theta, ranges[1:], zetas)
        ranges[0], used = solve_constrained_quartic(
            coeffs, signs[0], thresholds[0], config.r_max
        )
        fallbacks += used
        trace.append(_objective(geometry, theta, ranges))
        try:
            theta = theta_update(geometry, ranges)
        except np.linalg.LinAlgError:
            rank_freezes += 1
        trace.append(_objective(geometry, theta, ranges))
        if float(np.sum((theta - theta_prev) ** 2)) < config.eps_theta:
            stop_reason = "theta step"
            converged = True
            break
        if float(np.sum((ranges - ranges_prev) ** 2)) < config.eps_r:
            stop_reason = "range step"
            converged = True
            break

    diagnostics = {
        "iterations": iteration,
        "objective_trace": [float(v) for v in trace],
        "fallbacks": int(fallbacks),
        "rank_freezes": int(rank_freezes),
        "stop_reason": stop_reason,
        "converged": converged,
    }
    return AntaresResult(
        theta=theta,
        ranges=ranges,
        target=target_from_theta(geometry, theta),
        objective=trace[-1],
        diagnostics=diagnostics,
    )
