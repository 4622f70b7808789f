"""Globally certified localization from one-bit range data.

Eliminating the target position from the joint range/position fit leaves a
rational objective in the ranges alone: a degree-6 polynomial numerator
over a degree-2 denominator, minimized under per-node sign constraints.
This module expands the equivalent epigraph program (minimize the slack v
subject to v * denominator - numerator >= 0) and relaxes it to a
semidefinite moment program.  The solved objective certifies a global
lower bound on the fit residual, and the first-order moments recover the
ranges whenever the relaxation is tight.

All lengths are normalized by the range cap before expansion so moment
magnitudes stay near one; outputs are rescaled to meters.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import conic
from .geometry import Geometry, OneBitRangeData, build_G_h, solve_ls, target_from_theta

MIN_RELAXATION_ORDER = 3
# coefficients this far below the largest are cancellation dust, not structure
COEFF_FLOOR_RATIO = 1e-14
SIGN_SLACK = 1e-6
RANK_GAP_RATIO = 1e-6
# normalized-unit floor keeping the denominator away from its vanishing subspace
DENOMINATOR_FLOOR = 1e-6
# largest moment count still fast under the dense interior-point backend
AUTO_BACKEND_VAR_LIMIT = 2000


@dataclass(frozen=True)
class FractionalCoefficients:
    """Data behind the range-only fit residual numerator/denominator pair.

    `projector` is the orthogonal projector onto the complement of the
    node-difference column space and `b` holds half the squared node-gap
    lengths.  The derived forms are the denominator quadratic `psi` (so the
    denominator equals r @ psi @ r), the cross vector `kappa` (kappa @ r
    equals b @ projector @ gaps), and the constant `chi = b @ projector @ b`.
    """

    psi: np.ndarray
    kappa: np.ndarray
    chi: float
    projector: np.ndarray
    b: np.ndarray

    def __post_init__(self) -> None:
        m = self.psi.shape[0]
        if self.psi.shape != (m, m) or m < 2:
            raise ValueError("psi must be square with at least two nodes")
        if self.kappa.shape != (m,):
            raise ValueError("kappa length must match psi")
        if self.projector.shape != (m - 1, m - 1) or self.b.shape != (m - 1,):
            raise ValueError("projector and b need one row per reference gap")
        for arr in (self.psi, self.kappa, self.projector, self.b):
            if not np.all(np.isfinite(arr)):
                raise ValueError("coefficients must be finite")
        scale = 1.0 + float(np.abs(self.psi).max())
        if np.abs(self.psi - self.psi.T).max() > 1e-8 * scale:
            raise ValueError("psi must be symmetric")
        if np.abs(self.psi.sum(axis=1)).max() > 1e-8 * scale:
            raise ValueError("psi rows must sum to zero")
        if self.chi < 0.0:
            raise ValueError("chi is a squared norm and cannot be negative")

    @property
    def num_nodes(self) -> int:
        return self.psi.shape[0]


def fractional_coeffs(geometry: Geometry) -> FractionalCoefficients:
    """Assemble the rational-objective data for a node constellation.

    The projector annihilates the node-difference columns, so applying it
    to the residual of the linearized range equations removes every term
    that the target coordinates could absorb; what remains depends on the
    ranges alone.  The psi/kappa/chi forms re-express that remainder as
    polynomial pieces indexed by the full range vector, with the reference
    node folded in through gap differences.

    Parameters
    ----------
    geometry : Geometry
        Node constellation; node 0 is the reference.

    Returns
    -------
    FractionalCoefficients
    """
    diffs = geometry.node_positions[1:] - geometry.node_positions[0]
    b = 0.5 * np.sum(diffs**2, axis=1)
    proj = np.eye(diffs.shape[0]) - diffs @ np.linalg.pinv(diffs)
    # gap_map sends the full range vector to reference gaps r_m - r_1
    gap_map = np.hstack(
        [-np.ones((geometry.num_nodes - 1, 1)), np.eye(geometry.num_nodes - 1)]
    )
    psi = gap_map.T @ proj @ gap_map
    projected_b = proj @ b
    kappa = gap_map.T @ projected_b
    return FractionalCoefficients(
        psi=0.5 * (psi + psi.T),
        kappa=kappa,
        chi=float(b @ projected_b),
        projector=proj,
        b=b,
    )


def eval_J(coeffs: FractionalCoefficients, ranges: np.ndarray):
    """Denominator: squared norm of the projected range-gap vector.

    `ranges` may carry leading batch axes; the last axis indexes nodes.
    Returns a float for a single point, an array for a batch.
    """
    r = np.asarray(ranges, dtype=float)
    gaps = r[..., 1:] - r[..., :1]
    value = np.sum(gaps * (gaps @ coeffs.projector), axis=-1)
    return float(value) if value.ndim == 0 else value


def eval_F(coeffs: FractionalCoefficients, ranges: np.ndarray):
    """Numerator: denominator times the target-eliminated fit residual.

    Evaluated straight from the projector form rather than the expanded
    polynomial, so it doubles as an independent oracle for
    `expand_vJ_minus_F`.  Batch axes broadcast as in `eval_J`.
    """
    r = np.asarray(ranges, dtype=float)
    gaps = r[..., 1:] - r[..., :1]
    h = coeffs.b - 0.5 * gaps * gaps
    proj_h = h @ coeffs.projector
    hph = np.sum(h * proj_h, axis=-1)
    gph = np.sum(gaps * proj_h, axis=-1)
    jval = np.sum(gaps * (gaps @ coeffs.projector), axis=-1)
    value = jval * hph - gph**2
    return float(value) if value.ndim == 0 else value


def _poly_add(acc: dict, other: dict, scale: float = 1.0) -> None:
    for exp, coeff in other.items():
        acc[exp] = acc.get(exp, 0.0) + scale * coeff


def _poly_mul(a: dict, b: dict) -> dict:
    out: dict = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            key = tuple(x + y for x, y in zip(ea, eb))
            out[key] = out.get(key, 0.0) + ca * cb
    return out


def poly_eval(poly: dict, point: np.ndarray) -> float:
    """Evaluate an exponent-keyed polynomial at one point."""
    point = np.asarray(point, dtype=float)
    total = 0.0
    for exp, coeff in poly.items():
        total += coeff * np.prod(point ** np.asarray(exp))
    return float(total)


def _unit_exponent(nvars: int, i: int) -> tuple[int, ...]:
    exp = [0] * nvars
    exp[i] = 1
    return tuple(exp)


def _denominator_poly(coeffs: FractionalCoefficients) -> dict[tuple[int, ...], float]:
    """J(r) as an exponent-keyed polynomial over (r_1, ..., r_M, v)."""
    m = coeffs.num_nodes
    nvars = m + 1
    jpoly: dict = {}
    for a in range(m):
        for c in range(m):
            val = float(coeffs.psi[a, c])
            if val != 0.0:
                key = tuple(
                    x + y
                    for x, y in zip(_unit_exponent(nvars, a), _unit_exponent(nvars, c))
                )
                jpoly[key] = jpoly.get(key, 0.0) + val
    return jpoly


def expand_vJ_minus_F(coeffs: FractionalCoefficients) -> dict[tuple[int, ...], float]:
    """Expand the epigraph constraint polynomial v * J(r) - F(r).

    Keys are exponent tuples over (r_1, ..., r_M, v) with the slack v last;
    v enters linearly.  Coefficients are accumulated exactly from the
    projector forms, then cancellation dust far below the largest
    coefficient is dropped so no spurious zeros are stored.

    Returns
    -------
    dict
        Exponent tuple -> coefficient, total degree at most 6.
    """
    m = coeffs.num_nodes
    nvars = m + 1
    const = tuple([0] * nvars)
    gaps = [
        {_unit_exponent(nvars, i): 1.0, _unit_exponent(nvars, 0): -1.0}
        for i in range(1, m)
    ]
    resid = []
    for i, gap in enumerate(gaps):
        term = {const: float(coeffs.b[i])}
        _poly_add(term, _poly_mul(gap, gap), -0.5)
        resid.append(term)

    jpoly: dict = {}
    hph: dict = {}
    gph: dict = {}
    for i in range(m - 1):
        for j in range(m - 1):
            pij = float(coeffs.projector[i, j])
            if pij == 0.0:
                continue
            _poly_add(jpoly, _poly_mul(gaps[i], gaps[j]), pij)
            _poly_add(hph, _poly_mul(resid[i], resid[j]), pij)
            _poly_add(gph, _poly_mul(gaps[i], resid[j]), pij)

    result = _poly_mul({_unit_exponent(nvars, m): 1.0}, jpoly)
    _poly_add(result, _poly_mul(jpoly, hph), -1.0)
    _poly_add(result, _poly_mul(gph, gph), 1.0)
    top = max(abs(c) for c in result.values())
    return {e: c for e, c in result.items() if abs(c) > COEFF_FLOOR_RATIO * top}


def monomial_basis(num_vars: int, degree: int) -> list[tuple[int, ...]]:
    """Exponent tuples of every monomial with total degree up to `degree`.

    Ordered by total degree, then lexicographically in the variables: the
    constant comes first, and two variables at degree two list as
    1, u1, u2, u1^2, u1*u2, u2^2.  Length is binom(num_vars + degree, degree).
    """
    if num_vars < 1 or degree < 0:
        raise ValueError("need at least one variable and a nonnegative degree")
    basis: list[tuple[int, ...]] = []
    for total in range(degree + 1):
        for combo in itertools.combinations_with_replacement(range(num_vars), total):
            exp = [0] * num_vars
            for var in combo:
                exp[var] += 1
            basis.append(tuple(exp))
    return basis


def _localizer_block(
    basis: list[tuple[int, ...]], index_of: dict, poly: dict
) -> conic.PsdBlock:
    """Moment block for one polynomial constraint over a monomial basis."""
    rows, cols, mus, vals = [], [], [], []
    for i, left in enumerate(basis):
        for j in range(i, len(basis)):
            pair = tuple(a + b for a, b in zip(left, basis[j]))
            for term, coeff in poly.items():
                rows.append(i)
                cols.append(j)
                mus.append(index_of[tuple(a + b for a, b in zip(pair, term))])
                vals.append(coeff)
    return conic.PsdBlock(
        size=len(basis),
        rows=np.asarray(rows, dtype=int),
        cols=np.asarray(cols, dtype=int),
        mu_indices=np.asarray(mus, dtype=int),
        coeffs=np.asarray(vals, dtype=float),
    )


def build_moment_program(
    coeffs: FractionalCoefficients,
    signs: np.ndarray,
    thresholds: np.ndarray,
    v_max: float,
    order: int = 3,
    j_min: float = DENOMINATOR_FLOOR,
) -> conic.SdpProgram:
    """Moment relaxation of the epigraph range program at a given order.

    The moment vector indexes all monomials in (r_1, ..., r_M, v) up to
    degree 2 * order, graded-lexicographically, with the constant pinned to
    one.  Blocks, in order: the full moment matrix, the localizer of the
    epigraph polynomial v * J - F at order - 3, localizers at order - 1 for
    each sign constraint, each range nonnegativity, and the slack cap
    v <= v_max, then two domain localizers: J >= j_min and v >= 0.  The
    objective is the first-order moment of v.

    The domain localizers encode the standing assumption that the fit's
    denominator never vanishes.  Without them the epigraph program is
    unbounded whenever the feasible box meets the subspace where the range
    gaps align with the node differences: there both J and F vanish
    identically and v is free.  On that subspace the ratio being minimized
    is undefined, so excluding a j_min-thin neighborhood restores the
    fractional program's value without moving its minimizers; v >= 0 is
    then a valid redundant inequality (the ratio is a squared residual)
    that keeps the relaxed objective bounded as well.

    Parameters
    ----------
    coeffs : FractionalCoefficients
    signs : ndarray
        Per-node one-bit comparison outcomes, entries +-1.
    thresholds : ndarray
        Per-node comparison thresholds, same units as the ranges.
    v_max : float
        Upper cap on the epigraph slack; must exceed the sought minimum.
    order : int
        Relaxation order, at least 3 so the degree-6 constraint fits.
    j_min : float
        Denominator floor; keep well below J at plausible range vectors.

    Returns
    -------
    conic.SdpProgram
        With the exponent labeling attached.
    """
    m = coeffs.num_nodes
    signs = np.asarray(signs, dtype=float)
    thresholds = np.asarray(thresholds, dtype=float)
    if signs.shape != (m,) or thresholds.shape != (m,):
        raise ValueError("need one sign and one threshold per node")
    if not np.all(np.isin(signs, (-1.0, 1.0))):
        raise ValueError("signs must be +-1")
    if order < MIN_RELAXATION_ORDER:
        raise ValueError("relaxation order must be at least 3 to host the degree-6 constraint")
    if not v_max > 0.0:
        raise ValueError("slack cap must be positive")
    if not j_min > 0.0:
        raise ValueError("denominator floor must be positive")

    nvars = m + 1
    basis_full = monomial_basis(nvars, 2 * order)
    index_of = {exp: k for k, exp in enumerate(basis_full)}

    def unit(i: int) -> tuple[int, ...]:
        return _unit_exponent(nvars, i)

    const = tuple([0] * nvars)
    moment_basis = monomial_basis(nvars, order)
    epigraph_basis = monomial_basis(nvars, order - 3)
    localizer_basis = monomial_basis(nvars, order - 1)

    blocks = [_localizer_block(moment_basis, index_of, {const: 1.0})]
    blocks.append(_localizer_block(epigraph_basis, index_of, expand_vJ_minus_F(coeffs)))
    for k in range(m):
        sign_poly = {unit(k): float(signs[k]), const: -float(signs[k] * thresholds[k])}
        blocks.append(_localizer_block(localizer_basis, index_of, sign_poly))
    for k in range(m):
        blocks.append(_localizer_block(localizer_basis, index_of, {unit(k): 1.0}))
    cap_poly = {const: float(v_max), unit(m): -1.0}
    blocks.append(_localizer_block(localizer_basis, index_of, cap_poly))
    floor_poly = _denominator_poly(coeffs)
    floor_poly[const] = floor_poly.get(const, 0.0) - float(j_min)
    blocks.append(_localizer_block(localizer_basis, index_of, floor_poly))
    blocks.append(_localizer_block(localizer_basis, index_of, {unit(m): 1.0}))

    return conic.SdpProgram(
        num_vars=len(basis_full),
        objective_index=index_of[unit(m)],
        blocks=tuple(blocks),
        one_index=index_of[const],
        exponents=np.asarray(basis_full, dtype=int),
    )


def moment_matrix(program: conic.SdpProgram, mu: np.ndarray, degree: int) -> np.ndarray:
    """Dense moment matrix over the basis of a given degree.

    Needs the exponent labeling the builder attaches; degree must be small
    enough that all pairwise sums are declared moments.
    """
    if program.exponents is None:
        raise ValueError("program carries no exponent labeling")
    index_of = {tuple(exp): k for k, exp in enumerate(program.exponents)}
    basis = monomial_basis(program.exponents.shape[1], degree)
    out = np.empty((len(basis), len(basis)))
    for i, left in enumerate(basis):
        for j in range(i, len(basis)):
            key = tuple(a + b for a, b in zip(left, basis[j]))
            out[i, j] = out[j, i] = mu[index_of[key]]
    return out


def _default_slack_cap(
    coeffs: FractionalCoefficients, signs: np.ndarray, thresholds: np.ndarray
) -> float:
    """Ten times the objective at the feasible-box midpoint.

    Any feasible point upper-bounds the minimum, so the cap never cuts the
    optimum off.  Works in normalized units where the box is [0, 1] per
    node; falls back to random feasible draws when the midpoint has equal
    gaps and a vanishing denominator.
    """
    mid = np.where(signs > 0, 0.5 * (thresholds + 1.0), 0.5 * thresholds)
    denom = eval_J(coeffs, mid)
    if denom > 1e-9:
        return 10.0 * eval_F(coeffs, mid) / denom
    rng = np.random.default_rng(0)
    best = 0.0
    for _ in range(32):
        draw = np.where(
            signs > 0,
            rng.uniform(thresholds, 1.0),
            rng.uniform(0.0, np.maximum(thresholds, 1e-6)),
        )
        denom = eval_J(coeffs, draw)
        if denom > 1e-9:
            best = max(best, eval_F(coeffs, draw) / denom)
    if best == 0.0:
        raise RuntimeError("no feasible point with spread gaps found for the slack cap")
    return 10.0 * best


@dataclass(frozen=True)
class MomentLocalization:
    """Result of the moment-relaxation localizer.

    `objective` is the certified lower bound on the fit residual (quartic
    length units); `tight` reports whether the first-order moment matrix
    was numerically rank one, the signature of an exact relaxation.
    `target` and `theta` are NaN when the final linear solve degenerated,
    with the reason recorded in `flags`.
    """

    ranges: np.ndarray
    objective: float
    target: np.ndarray
    theta: np.ndarray
    order: int
    tight: bool
    flags: tuple[str, ...]


def localize_optimal(
    geometry: Geometry,
    data: OneBitRangeData,
    order: int = 3,
    v_max: float | None = None,
    backend: str = "auto",
    auto_escalate: bool = False,
    j_min: float = DENOMINATOR_FLOOR,
    **options,
) -> MomentLocalization:
    """Globally certified target fix from one-bit range comparisons.

    Normalizes all lengths by the range cap, expands the epigraph program,
    solves the moment relaxation, and reads the ranges off the first-order
    moments.  The extracted point is sanity-checked against the sign
    constraints; a violation means the relaxation was not tight at this
    order, which is flagged (and retried one order higher when
    `auto_escalate` is set).  The target follows from the recovered ranges
    through the usual linearized solve.

    Parameters
    ----------
    geometry : Geometry
    data : OneBitRangeData
        Per-node signs and thresholds plus the range cap.
    order : int
        Relaxation order, at least 3.
    v_max : float, optional
        Slack cap in quartic length units; default is ten times the
        objective at the feasible-box midpoint.
    backend : str
        Semidefinite backend, "scs", "cvxopt", or "auto".  Auto picks the
        interior-point backend while the moment vector stays small enough
        for its dense factorizations and the first-order backend beyond.
    auto_escalate : bool
        Retry once at order + 1 when extraction sanity fails.
    j_min : float
        Normalized denominator floor; see `build_moment_program`.
    options
        Passed through to the backend (for example violation_tol).

    Returns
    -------
    MomentLocalization

    Raises
    ------
    RuntimeError
        If the semidefinite solve does not reach a certified optimum.
    """
    scale = data.r_max
    scaled_geometry = Geometry(
        node_positions=geometry.node_positions / scale,
        base_station=geometry.base_station / scale,
        planar=geometry.planar,
    )
    signs = data.signs.astype(float)
    lam = data.thresholds / scale
    coeffs = fractional_coeffs(scaled_geometry)
    cap = v_max / scale**4 if v_max is not None else _default_slack_cap(coeffs, signs, lam)
    program = build_moment_program(coeffs, signs, lam, cap, order=order, j_min=j_min)
    if backend == "auto":
        backend = "cvxopt" if program.num_vars <= AUTO_BACKEND_VAR_LIMIT else "scs"
    report = conic.solve_sdp(program, backend=backend, **options)
    if report.status != conic.STATUS_OPTIMAL:
        raise RuntimeError(
            f"moment solve failed: status={report.status} "
            f"violation={report.max_violation}"
        )
    mu = report.solution
    m = coeffs.num_nodes
    # graded-lex layout: first-order moments sit right after the constant
    scaled_ranges = mu[1 : m + 1]
    flags: list[str] = []
    sign_violation = float(np.max(signs * (lam - scaled_ranges)))
    if sign_violation > SIGN_SLACK or float(scaled_ranges.min()) < -SIGN_SLACK:
        flags.append(f"relaxation not tight at order {order}")
        if auto_escalate:
            return localize_optimal(
                geometry,
                data,
                order=order + 1,
                v_max=v_max,
                backend=backend,
                auto_escalate=False,
                j_min=j_min,
                **options,
            )
    first_order = moment_matrix(program, mu, 1)
    spectrum = np.linalg.svd(first_order, compute_uv=False)
    tight = bool(np.sum(spectrum > RANK_GAP_RATIO * spectrum[0]) == 1)

    ranges = scaled_ranges * scale
    gmat, h = build_G_h(geometry, ranges)
    try:
        theta = solve_ls(gmat, h)
        target = target_from_theta(geometry, theta)
    except np.linalg.LinAlgError as err:
        flags.append(f"target solve failed: {err}")
        theta = np.full(geometry.dim + 1, np.nan)
        target = np.full(geometry.dim, np.nan)
    return MomentLocalization(
        ranges=ranges,
        objective=float(report.objective) * scale**4,
        target=target,
        theta=theta,
        order=order,
        tight=tight,
        flags=tuple(flags),
    )
