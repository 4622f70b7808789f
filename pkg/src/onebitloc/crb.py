"""Fisher information and estimation bound for one-bit range reports.

Each node reports only the sign of its noisy range against a threshold, so
the likelihood of the sign word is a product of normal CDF terms in the
standardized gaps u_m = (r_m - lambda_m) / sigma_m.  The score and Fisher
matrix follow from the chain rule through u: the information is a
nonnegative kernel per node times the outer product of du/dq, which keeps
the matrix symmetric, positive semidefinite, and additive across nodes by
construction.  Log-CDF evaluations run through `log_ndtr` so deep tails
neither overflow nor lose the exponent.

The parameter vector stacks the target coordinates, the base-to-target
distance, and each node's range-error standard deviation.
"""

from __future__ import annotations

import numpy as np
from scipy.special import log_ndtr

LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)
# condition-number ceiling past which the information matrix counts as singular
MAX_FIM_CONDITION = 1e12


def _split_params(q: np.ndarray, geometry) -> tuple[np.ndarray, float, np.ndarray]:
    dim = geometry.dim
    m = geometry.num_nodes
    q = np.asarray(q, dtype=float)
    if q.shape != (dim + 1 + m,):
        raise ValueError("q must stack target coords, base distance, and node sigmas")
    sigmas = q[dim + 1 :]
    if np.any(sigmas <= 0):
        raise ValueError("range-error standard deviations must be positive")
    return q[:dim], float(q[dim]), sigmas


def _standardized_gaps(q: np.ndarray, geometry, thresholds: np.ndarray):
    """Per-node u, du/dq rows, and the node-target distances."""
    target, d0, sigmas = _split_params(q, geometry)
    thresholds = np.asarray(thresholds, dtype=float)
    m = geometry.num_nodes
    if thresholds.shape != (m,):
        raise ValueError("one threshold per node")
    offsets = target[None, :] - geometry.node_positions
    dists = np.linalg.norm(offsets, axis=1)
    if np.any(dists == 0):
        raise ValueError("target coincides with a node")
    u = (dists + d0 - thresholds) / sigmas
    grad = np.zeros((m, q.size))
    grad[:, : geometry.dim] = offsets / (dists * sigmas)[:, None]
    grad[:, geometry.dim] = 1.0 / sigmas
    grad[np.arange(m), geometry.dim + 1 + np.arange(m)] = -u / sigmas
    return u, grad


def _check_signs(w: np.ndarray, num_nodes: int) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.shape != (num_nodes,):
        raise ValueError("one sign per node")
    if np.any(np.abs(w) != 1):
        raise ValueError("signs must be +-1")
    return w


def loglik(w: np.ndarray, q: np.ndarray, geometry, thresholds: np.ndarray) -> float:
    """Log-likelihood of the sign word: sum of log normal CDFs of w_m u_m."""
    u, _ = _standardized_gaps(q, geometry, thresholds)
    w = _check_signs(w, geometry.num_nodes)
    return float(np.sum(log_ndtr(w * u)))


def score(w: np.ndarray, q: np.ndarray, geometry, thresholds: np.ndarray) -> np.ndarray:
    """Analytic gradient of `loglik` in q.

    Per node the weight is w_m phi(u_m) / Phi(w_m u_m), evaluated in log
    space so threshold-remote nodes contribute exact zeros instead of
    0/0 artifacts.
    """
    u, grad = _standardized_gaps(q, geometry, thresholds)
    w = _check_signs(w, geometry.num_nodes)
    log_phi = -0.5 * u**2 - LOG_SQRT_2PI
    weights = w * np.exp(log_phi - log_ndtr(w * u))
    return weights @ grad


def fim(q: np.ndarray, geometry, thresholds: np.ndarray) -> np.ndarray:
    """Fisher information of the sign word.

    Averaging the squared score over both sign outcomes leaves the kernel
    phi(u)^2 (1/Phi(u) + 1/Phi(-u)) per node on the outer product of
    du/dq, summed over nodes.
    """
    u, grad = _standardized_gaps(q, geometry, thresholds)
    two_log_phi = -(u**2) - 2.0 * LOG_SQRT_2PI
    kernel = np.exp(two_log_phi - log_ndtr(u)) + np.exp(two_log_phi - log_ndtr(-u))
    info = (grad * kernel[:, None]).T @ grad
    return 0.5 * (info + info.T)


def _normalized_root_crb_from_fim(
    info: np.ndarray, target: np.ndarray, block: int | None = None
) -> float:
    block = info.shape[0] if block is None else block
    head = info[:block, :block]
    cond = np.linalg.cond(head)
    if not np.isfinite(cond) or cond > MAX_FIM_CONDITION:
        raise np.linalg.LinAlgError("Fisher matrix is numerically singular")
    inverse = np.linalg.inv(head)
    return float(np.sqrt((inverse[0, 0] + inverse[1, 1]) / (target[0] ** 2 + target[1] ** 2)))


def normalized_root_crb(q: np.ndarray, geometry, thresholds: np.ndarray) -> float:
    """Root bound on horizontal position error relative to target distance.

    Square root of the first two diagonal entries of the inverse Fisher
    information over the squared horizontal target norm.  One bit per node
    leaves the joint matrix over positions AND deviations rank-deficient by
    construction (M rank-one terms against M + dim + 1 parameters), so the
    deviations enter as plugged-in constants and the inverted block covers
    the target coordinates and the base distance.

    Raises
    ------
    numpy.linalg.LinAlgError
        If that block cannot be inverted reliably, for example with too
        few informative nodes or when every node sits deep on one side of
        its threshold and the sign word carries no information.
    """
    target, _, _ = _split_params(q, geometry)
    info = fim(q, geometry, thresholds)
    return _normalized_root_crb_from_fim(info, target, block=geometry.dim + 1)
