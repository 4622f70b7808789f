"""Conic program containers and solver backend adapters.

Two program shapes cover everything the library emits: a convex quadratic
objective with sparse linear inequalities (hosting the sparse delay
recovery), and a linear objective over a moment vector constrained by PSD
blocks (hosting the moment relaxation).  Adapters translate these into
Clarabel, OSQP, SCS, or CVXOPT calls; reported feasibility violations are
always recomputed from the returned solution, never trusted from the
backend.

Absolute-value terms never appear directly: callers model each l1 term
with a nonnegative split pair (u+, u-) listed in `nonneg_indices`, with
unit costs on both halves.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

STATUS_OPTIMAL = "optimal"
STATUS_INFEASIBLE = "infeasible"
STATUS_FAILURE = "numerical-failure"


@dataclass(frozen=True)
class QuadLinProgram:
    """minimize  linear_cost @ v + quadratic_weight * ||v[quadratic_indices]||^2
    subject to  ineq_matrix @ v >= ineq_rhs,  v[nonneg_indices] >= 0, and
    optionally  eq_matrix @ v == eq_rhs.

    Equalities get their own block rather than paired inequalities: a paired
    encoding leaves the feasible set with no strict interior, which
    interior-point backends cannot certify.
    """

    num_vars: int
    quadratic_weight: float
    quadratic_indices: np.ndarray
    linear_cost: np.ndarray
    ineq_matrix: sp.csr_matrix
    ineq_rhs: np.ndarray
    nonneg_indices: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))
    eq_matrix: sp.csr_matrix | None = None
    eq_rhs: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.linear_cost.shape != (self.num_vars,):
            raise ValueError("linear_cost length must equal num_vars")
        if self.ineq_matrix.shape[1] != self.num_vars:
            raise ValueError("inequality matrix width must equal num_vars")
        if self.ineq_matrix.shape[0] != self.ineq_rhs.size:
            raise ValueError("one right-hand side per inequality row")
        if (self.eq_matrix is None) != (self.eq_rhs is None):
            raise ValueError("equality matrix and right-hand side come together")
        arrays = [self.linear_cost, self.ineq_rhs, self.ineq_matrix.data]
        if self.eq_matrix is not None:
            if self.eq_matrix.shape[1] != self.num_vars:
                raise ValueError("equality matrix width must equal num_vars")
            if self.eq_matrix.shape[0] != self.eq_rhs.size:
                raise ValueError("one right-hand side per equality row")
            arrays += [self.eq_rhs, self.eq_matrix.data]
        for arr in arrays:
            if arr.size and not np.all(np.isfinite(arr)):
                raise ValueError("program data must be finite")


@dataclass(frozen=True)
class PsdBlock:
    """Symmetric PSD block; entries are linear combinations of mu variables.

    Only the upper triangle (row <= col) is stored; the block is symmetric
    by construction.  Entry (row_k, col_k) accumulates coeff_k * mu[mu_k].
    """

    size: int
    rows: np.ndarray
    cols: np.ndarray
    mu_indices: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        if not (self.rows.shape == self.cols.shape == self.mu_indices.shape == self.coeffs.shape):
            raise ValueError("block triplet arrays must share a shape")
        if self.rows.size and (np.any(self.rows > self.cols) or np.any(self.cols >= self.size)):
            raise ValueError("entries must lie in the upper triangle of the block")

    def assemble(self, mu: np.ndarray) -> np.ndarray:
        """Dense symmetric matrix at a given moment vector."""
        out = np.zeros((self.size, self.size))
        np.add.at(out, (self.rows, self.cols), self.coeffs * mu[self.mu_indices])
        lower = np.tril(out.T, -1)
        return out + lower


@dataclass(frozen=True)
class SdpProgram:
    """minimize mu[objective_index] s.t. every block PSD and mu[one_index] = 1.

    Moment variables are indexed by graded-lexicographic exponent tuples;
    `exponents` (num_vars x num_symbols, optional) records that labeling for
    debugging and dumps.  The constant monomial must sit at `one_index`.
    """

    num_vars: int
    objective_index: int | None
    blocks: tuple[PsdBlock, ...]
    one_index: int = 0
    exponents: np.ndarray | None = None

    def __post_init__(self) -> None:
        if not self.blocks:
            raise ValueError("at least one PSD block required")
        for blk in self.blocks:
            if blk.mu_indices.size and blk.mu_indices.max() >= self.num_vars:
                raise ValueError("block references undeclared mu variable")
        if self.objective_index is not None and not 0 <= self.objective_index < self.num_vars:
            raise ValueError("objective index out of range")


@dataclass(frozen=True)
class SolveReport:
    """Solver outcome with an independently recomputed feasibility violation."""

    status: str
    solution: np.ndarray | None
    objective: float | None
    max_violation: float | None


def quadlin_objective(program: QuadLinProgram, v: np.ndarray) -> float:
    quad = float(np.sum(v[program.quadratic_indices] ** 2))
    return float(program.linear_cost @ v) + program.quadratic_weight * quad


def quadlin_violation(program: QuadLinProgram, v: np.ndarray) -> float:
    viol = 0.0
    if program.ineq_rhs.size:
        viol = float(np.max(program.ineq_rhs - program.ineq_matrix @ v, initial=0.0))
    if program.nonneg_indices.size:
        viol = max(viol, float(np.max(-v[program.nonneg_indices], initial=0.0)))
    if program.eq_matrix is not None and program.eq_rhs.size:
        viol = max(viol, float(np.max(np.abs(program.eq_matrix @ v - program.eq_rhs))))
    return viol


def sdp_violation(program: SdpProgram, mu: np.ndarray) -> float:
    """Worst relative PSD violation across blocks, plus the normalization gap."""
    worst = abs(mu[program.one_index] - 1.0)
    for blk in program.blocks:
        mat = blk.assemble(mu)
        scale = 1.0 + np.linalg.norm(mat)
        if blk.size == 1:
            lam = mat[0, 0]
        else:
            lam = float(np.linalg.eigvalsh(mat)[0])
        worst = max(worst, -lam / scale)
    return worst


def solve_quadlin(program: QuadLinProgram, backend: str = "clarabel", **options) -> SolveReport:
    """Solve a QuadLinProgram with the chosen backend.

    Parameters
    ----------
    program : QuadLinProgram
    backend : str
        "clarabel" (interior point, default), "osqp", or "cvxopt".
    options
        Backend-specific settings (e.g. eps_abs, max_iter for OSQP).

    Returns
    -------
    SolveReport
        Status is demoted to "numerical-failure" when the recomputed
        feasibility violation exceeds the scaled 1e-6 contract.
    """
    if backend == "clarabel":
        status, v = _quadlin_clarabel(program, options)
    elif backend == "osqp":
        status, v = _quadlin_osqp(program, options)
    elif backend == "cvxopt":
        status, v = _quadlin_cvxopt(program, options)
    else:
        raise ValueError(f"unknown quadlin backend {backend!r}")
    if v is None:
        return SolveReport(status=status, solution=None, objective=None, max_violation=None)
    violation = quadlin_violation(program, v)
    scale = 1.0 + float(np.max(np.abs(program.ineq_rhs), initial=0.0))
    tol = options.get("violation_tol", 1e-6)
    if status == STATUS_OPTIMAL and violation > tol * scale:
        status = STATUS_FAILURE
    return SolveReport(
        status=status,
        solution=v,
        objective=quadlin_objective(program, v),
        max_violation=violation,
    )


def _ineq_as_cone_rows(program: QuadLinProgram):
    """Stack >=-rows and variable bounds as A v + s = b with s >= 0."""
    rows = [-program.ineq_matrix]
    rhs = [-program.ineq_rhs]
    if program.nonneg_indices.size:
        k = program.nonneg_indices.size
        sel = sp.csr_matrix(
            (-np.ones(k), (np.arange(k), program.nonneg_indices)),
            shape=(k, program.num_vars),
        )
        rows.append(sel)
        rhs.append(np.zeros(k))
    return sp.vstack(rows, format="csc"), np.concatenate(rhs)


def _quadlin_clarabel(program: QuadLinProgram, options):
    import clarabel

    n = program.num_vars
    pdiag = np.zeros(n)
    pdiag[program.quadratic_indices] = 2.0 * program.quadratic_weight
    pmat = sp.diags(pdiag, format="csc")
    ineq, ineq_b = _ineq_as_cone_rows(program)
    cones = []
    if program.eq_matrix is not None and program.eq_matrix.shape[0]:
        amat = sp.vstack([program.eq_matrix, ineq], format="csc")
        b = np.concatenate([program.eq_rhs, ineq_b])
        cones.append(clarabel.ZeroConeT(program.eq_matrix.shape[0]))
    else:
        amat, b = ineq, ineq_b
    cones.append(clarabel.NonnegativeConeT(ineq.shape[0]))
    settings = clarabel.DefaultSettings()
    settings.verbose = False
    for key, value in options.items():
        if key != "violation_tol":
            setattr(settings, key, value)
    solver = clarabel.DefaultSolver(pmat, program.linear_cost, amat, b, cones, settings)
    sol = solver.solve()
    label = str(sol.status)
    x = None if sol.x is None else np.asarray(sol.x, dtype=float)
    if label == "Solved":
        return STATUS_OPTIMAL, x
    if label == "PrimalInfeasible":
        return STATUS_INFEASIBLE, None
    return STATUS_FAILURE, x


def _quadlin_osqp(program: QuadLinProgram, options):
    import osqp

    n = program.num_vars
    pdiag = np.zeros(n)
    pdiag[program.quadratic_indices] = 2.0 * program.quadratic_weight
    pmat = sp.diags(pdiag, format="csc")
    rows = [program.ineq_matrix]
    lower = [program.ineq_rhs]
    if program.nonneg_indices.size:
        sel = sp.csr_matrix(
            (
                np.ones(program.nonneg_indices.size),
                (np.arange(program.nonneg_indices.size), program.nonneg_indices),
            ),
            shape=(program.nonneg_indices.size, n),
        )
        rows.append(sel)
        lower.append(np.zeros(program.nonneg_indices.size))
    upper = [np.full(r.shape[0], np.inf) for r in rows]
    if program.eq_matrix is not None and program.eq_matrix.shape[0]:
        rows.append(program.eq_matrix)
        lower.append(program.eq_rhs)
        upper.append(program.eq_rhs)
    amat = sp.vstack(rows, format="csc")
    low = np.concatenate(lower)
    up = np.concatenate(upper)
    settings = dict(
        verbose=False,
        eps_abs=1e-8,
        eps_rel=1e-8,
        max_iter=200_000,
        polishing=True,
    )
    settings.update({k: v for k, v in options.items() if k != "violation_tol"})
    solver = osqp.OSQP()
    solver.setup(P=pmat, q=program.linear_cost, A=amat, l=low, u=up, **settings)
    res = solver.solve()
    label = str(res.info.status).strip().lower()
    if label.startswith("solved"):
        status = STATUS_OPTIMAL if label == "solved" else STATUS_FAILURE
        return status, np.asarray(res.x, dtype=float)
    if "primal infeasible" in label:
        return STATUS_INFEASIBLE, None
    return STATUS_FAILURE, None if res.x is None else np.asarray(res.x, dtype=float)


def _quadlin_cvxopt(program: QuadLinProgram, options):
    from cvxopt import matrix, solvers, spmatrix

    n = program.num_vars
    pdiag = np.zeros(n)
    pdiag[program.quadratic_indices] = 2.0 * program.quadratic_weight
    quad = np.flatnonzero(pdiag)
    pmat = spmatrix(pdiag[quad].tolist(), quad.tolist(), quad.tolist(), (n, n))
    # cvxopt wants G v <= h; flip the >= rows and append -v_i <= 0
    gsp = (-program.ineq_matrix).tocoo()
    grows = gsp.row.tolist()
    gcols = gsp.col.tolist()
    gvals = gsp.data.tolist()
    offset = program.ineq_matrix.shape[0]
    for i, j in enumerate(program.nonneg_indices):
        grows.append(offset + i)
        gcols.append(int(j))
        gvals.append(-1.0)
    total_rows = offset + program.nonneg_indices.size
    gmat = spmatrix(gvals, grows, gcols, (total_rows, n))
    h = matrix(np.concatenate([-program.ineq_rhs, np.zeros(program.nonneg_indices.size)]))
    eq_args = ()
    if program.eq_matrix is not None and program.eq_matrix.shape[0]:
        esp = program.eq_matrix.tocoo()
        emat = spmatrix(
            esp.data.tolist(), esp.row.tolist(), esp.col.tolist(), program.eq_matrix.shape
        )
        eq_args = (emat, matrix(program.eq_rhs))
    opts = {"show_progress": False}
    opts.update({k: v for k, v in options.items() if k != "violation_tol"})
    try:
        sol = solvers.qp(pmat, matrix(program.linear_cost), gmat, h, *eq_args, options=opts)
    except (ValueError, ArithmeticError):
        sol = None
    if sol is not None and sol["status"] == "optimal":
        return STATUS_OPTIMAL, np.asarray(sol["x"]).ravel()
    if sol is not None and sol["status"] == "primal infeasible":
        return STATUS_INFEASIBLE, None
    # coneqp cannot certify infeasibility; probe the polytope with an LP
    try:
        probe = solvers.conelp(
            matrix(np.zeros(n)), gmat, h, None, *eq_args, options={"show_progress": False}
        )
        if probe["status"] == "primal infeasible":
            return STATUS_INFEASIBLE, None
    except (ValueError, ArithmeticError, TypeError):
        pass
    if sol is None or sol["x"] is None:
        return STATUS_FAILURE, None
    return STATUS_FAILURE, np.asarray(sol["x"]).ravel()


def solve_sdp(program: SdpProgram, backend: str = "scs", **options) -> SolveReport:
    """Solve an SdpProgram with the chosen backend ("scs" or "cvxopt").

    The recomputed violation is the worst relative negative eigenvalue over
    blocks plus the normalization gap; status is demoted on breach of the
    1e-7 contract (override with violation_tol for large low-accuracy runs).
    """
    if backend == "scs":
        status, mu = _sdp_scs(program, options)
    elif backend == "cvxopt":
        status, mu = _sdp_cvxopt(program, options)
    else:
        raise ValueError(f"unknown sdp backend {backend!r}")
    if mu is None:
        return SolveReport(status=status, solution=None, objective=None, max_violation=None)
    violation = sdp_violation(program, mu)
    tol = options.get("violation_tol", 1e-7)
    if status == STATUS_OPTIMAL and violation > tol:
        status = STATUS_FAILURE
    objective = 0.0 if program.objective_index is None else float(mu[program.objective_index])
    return SolveReport(status=status, solution=mu, objective=objective, max_violation=violation)


def _svec_position(size: int, row: int, col: int) -> int:
    """Position of lower-triangle entry (row >= col) in column-stacked order."""
    return col * size - (col * (col - 1)) // 2 + (row - col)


def _sdp_scs(program: SdpProgram, options):
    import scs

    n = program.num_vars
    rows, cols, vals = [0], [program.one_index], [1.0]
    b = [1.0]
    offset = 1
    sizes = []
    sqrt2 = np.sqrt(2.0)
    for blk in program.blocks:
        # SCS vectorizes PSD cones as scaled lower triangles, column-stacked
        pos = _svec_position(blk.size, blk.cols, blk.rows)
        scale = np.where(blk.rows == blk.cols, 1.0, sqrt2)
        rows.extend(offset + pos)
        cols.extend(blk.mu_indices)
        vals.extend(-scale * blk.coeffs)
        length = blk.size * (blk.size + 1) // 2
        b.extend(np.zeros(length))
        offset += length
        sizes.append(blk.size)
    amat = sp.csc_matrix((vals, (rows, cols)), shape=(offset, n))
    c = np.zeros(n)
    if program.objective_index is not None:
        c[program.objective_index] = 1.0
    settings = dict(eps_abs=1e-7, eps_rel=1e-7, max_iters=100_000, verbose=False)
    settings.update({k: v for k, v in options.items() if k != "violation_tol"})
    solver = scs.SCS(dict(A=amat, b=np.asarray(b), c=c), dict(z=1, s=sizes), **settings)
    out = solver.solve()
    label = str(out["info"]["status"]).strip().lower()
    x = None if out["x"] is None else np.asarray(out["x"], dtype=float)
    if label == "solved":
        return STATUS_OPTIMAL, x
    if "infeasible" in label:
        return STATUS_INFEASIBLE, None
    return STATUS_FAILURE, x


def _sdp_cvxopt(program: SdpProgram, options):
    from cvxopt import matrix, solvers, spmatrix

    n = program.num_vars
    grows, gcols, gvals = [], [], []
    offset = 0
    sizes = []
    for blk in program.blocks:
        # cvxopt 's' cones take full matrices, column-stacked, no scaling
        for r, cidx, mu_idx, coeff in zip(blk.rows, blk.cols, blk.mu_indices, blk.coeffs):
            grows.append(offset + int(cidx) * blk.size + int(r))
            gcols.append(int(mu_idx))
            gvals.append(-float(coeff))
            if r != cidx:
                grows.append(offset + int(r) * blk.size + int(cidx))
                gcols.append(int(mu_idx))
                gvals.append(-float(coeff))
        offset += blk.size * blk.size
        sizes.append(blk.size)
    gmat = spmatrix(gvals, grows, gcols, (offset, n))
    h = matrix(np.zeros(offset))
    c = np.zeros(n)
    if program.objective_index is not None:
        c[program.objective_index] = 1.0
    aeq = spmatrix([1.0], [0], [program.one_index], (1, n))
    beq = matrix(np.array([1.0]))
    dims = {"l": 0, "q": [], "s": sizes}
    opts = {"show_progress": False}
    opts.update({k: v for k, v in options.items() if k != "violation_tol"})
    try:
        sol = solvers.conelp(matrix(c), gmat, h, dims, aeq, beq, options=opts)
    except (ValueError, ArithmeticError):
        return STATUS_FAILURE, None
    if sol["status"] == "optimal":
        return STATUS_OPTIMAL, np.asarray(sol["x"]).ravel()
    if sol["status"] == "primal infeasible":
        return STATUS_INFEASIBLE, None
    x = None if sol["x"] is None else np.asarray(sol["x"]).ravel()
    return STATUS_FAILURE, x


def dump_quadlin(program: QuadLinProgram) -> str:
    """Sparse-triplet text listing for cross-checking against external tools."""
    lines = [
        f"quadlin num_vars={program.num_vars} rho={program.quadratic_weight}",
        "quad_indices " + " ".join(map(str, program.quadratic_indices.tolist())),
        "nonneg " + " ".join(map(str, program.nonneg_indices.tolist())),
        "cost " + " ".join(f"{i}:{v:.17g}" for i, v in enumerate(program.linear_cost) if v != 0.0),
    ]
    coo = program.ineq_matrix.tocoo()
    for r in range(program.ineq_matrix.shape[0]):
        mask = coo.row == r
        terms = " ".join(
            f"{c}:{v:.17g}" for c, v in zip(coo.col[mask], coo.data[mask])
        )
        lines.append(f"row {r} >= {program.ineq_rhs[r]:.17g} : {terms}")
    if program.eq_matrix is not None:
        eqc = program.eq_matrix.tocoo()
        for r in range(program.eq_matrix.shape[0]):
            mask = eqc.row == r
            terms = " ".join(
                f"{c}:{v:.17g}" for c, v in zip(eqc.col[mask], eqc.data[mask])
            )
            lines.append(f"eq {r} == {program.eq_rhs[r]:.17g} : {terms}")
    return "\n".join(lines)


def dump_sdp(program: SdpProgram) -> str:
    """Sparse-triplet text listing of every PSD block entry."""
    lines = [
        f"sdp num_vars={program.num_vars} objective={program.objective_index} "
        f"one_index={program.one_index}"
    ]
    for bidx, blk in enumerate(program.blocks):
        lines.append(f"block {bidx} size={blk.size}")
        for r, c, m, v in zip(blk.rows, blk.cols, blk.mu_indices, blk.coeffs):
            lines.append(f"  ({r},{c}) += {v:.17g} * mu[{m}]")
    return "\n".join(lines)
