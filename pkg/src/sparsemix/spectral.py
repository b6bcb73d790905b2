"""Variance-based detection statistics and the MDP relaxation.

Everything here depends on the data only through the sample covariance, so
all statistics are exactly invariant under adding a constant vector to every
row.  Analytic thresholds from the asymptotic theory are exposed alongside,
but Monte Carlo calibration (see :mod:`sparsemix.calibration`) is the default
decision path.
"""

from __future__ import annotations

import math

import numpy as np

from .core import Dataset, StatValue, constant_columns, sample_moments, sym_inv_sqrt
from .errors import InvalidInputError
from .sparse_search import (
    DEFAULT_CONFIG,
    SearchConfig,
    _canonical_sign,
    maximize_generalized,
    maximize_quadratic,
)

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _standardized_cov(d: Dataset, sigma: np.ndarray) -> np.ndarray:
    root_inv = sym_inv_sqrt(sigma)
    _, cov = sample_moments(d)
    out = root_inv @ cov @ root_inv
    return (out + out.T) / 2.0


def top_eig_stat(d: Dataset, sigma: np.ndarray) -> StatValue:
    """Top eigenvalue of the standardized sample covariance."""
    cov_std = _standardized_cov(d, sigma)
    evals, vecs = np.linalg.eigh(cov_std)
    return StatValue(
        stat_id="top-eig",
        value=float(evals[-1]),
        rejection_side="upper",
        direction=_canonical_sign(vecs[:, -1]),
    )


def top_eig_threshold(n: int, p: int) -> float:
    """Asymptotic rejection threshold for the top-eigenvalue test."""
    if n < 1 or p < 1:
        raise InvalidInputError("n and p must be >= 1")
    return 1.0 + p / n + 12.0 * math.sqrt(p / n)


def sparse_eig_null_bound(n: int, p: int, s: int) -> float:
    """High-probability null bound 1 + 9*zeta + 6*sqrt(zeta) for the sparse eigenvalue."""
    zeta = (s / n) * math.log(math.e * p / s)
    return 1.0 + 9.0 * zeta + 6.0 * math.sqrt(zeta)


def sparse_eig_stat(
    d: Dataset, sigma: np.ndarray, s: int, cfg: SearchConfig = DEFAULT_CONFIG
) -> StatValue:
    """Sparse top eigenvalue over directions u with ``sigma^{1/2} u`` s-sparse.

    Writing w = sigma^{1/2} u, each support S of w gives the generalized
    eigenvalue problem max ``w^T (K cov K)_SS w`` s.t. ``w^T K_SS w = 1`` with
    K the inverse covariance.  The returned direction is u in the original
    coordinates, renormalized to unit norm.
    """
    root_inv = sym_inv_sqrt(sigma)
    k = root_inv @ root_inv
    _, cov = sample_moments(d)
    a = k @ cov @ k
    val, w = maximize_generalized((a + a.T) / 2.0, k, s, cfg)
    u = root_inv @ w
    u = _canonical_sign(u / np.linalg.norm(u))
    return StatValue(stat_id="sparse-eig", value=val, rejection_side="upper", direction=u)


def sparse_eig_stat_plain(
    d: Dataset, sigma: np.ndarray, s: int, cfg: SearchConfig = DEFAULT_CONFIG
) -> StatValue:
    """Plain s-sparse top eigenvalue of the standardized sample covariance."""
    cov_std = _standardized_cov(d, sigma)
    val, u = maximize_quadratic(cov_std, s, cfg)
    return StatValue(stat_id="sparse-eig-plain", value=val, rejection_side="upper", direction=u)


def diag_ratio_stat(d: Dataset, s: int, cfg: SearchConfig = DEFAULT_CONFIG) -> StatValue:
    """Sparse maximum of ``u^T cov u / u^T diag(cov) u`` with the 0/0 = 0 rule.

    Zero-variance columns contribute 0/0 = 0 along their axes, so they are
    excluded from the search supports (mass there can never help).  The null
    distribution is covariance-free whenever the true covariance is diagonal.
    """
    _, cov = sample_moments(d)
    var = np.diagonal(cov)
    good = np.flatnonzero((var > 0) & ~constant_columns(d.data))
    if good.size == 0:
        raise InvalidInputError("every column is degenerate (zero sample variance)")
    s_eff = min(s, good.size)
    sub = cov[np.ix_(good, good)]
    val, w = maximize_generalized(sub, np.diag(np.diagonal(sub)), s_eff, cfg)
    u = np.zeros(d.p)
    u[good] = w
    return StatValue(
        stat_id="diag-ratio", value=val, rejection_side="upper", direction=_canonical_sign(u)
    )


def canonical_variance_stats(d: Dataset, sigma_diag: np.ndarray):
    """Per-coordinate variance ratios and the maximum canonical variance.

    Returns
    -------
    (ratios, stat) : ndarray of shape (p,), StatValue for the max (ties to the
    smallest index)
    """
    sigma_diag = np.asarray(sigma_diag, dtype=float)
    if sigma_diag.shape != (d.p,):
        raise InvalidInputError(f"sigma_diag must have shape ({d.p},), got {sigma_diag.shape}")
    if np.any(sigma_diag <= 0):
        raise InvalidInputError("sigma_diag entries must be strictly positive")
    _, cov = sample_moments(d)
    ratios = np.diagonal(cov) / sigma_diag
    j = int(np.argmax(ratios))
    direction = np.zeros(d.p)
    direction[j] = 1.0
    stat = StatValue(
        stat_id="canonical-max",
        value=float(ratios[j]),
        rejection_side="upper",
        direction=direction,
    )
    return ratios, stat


def canonical_variance_threshold(n: int, p: int) -> float:
    """Level-zero threshold ``1 + 5 max(sqrt(log p / n), log p / n)``."""
    if n < 1 or p < 1:
        raise InvalidInputError("n and p must be >= 1")
    ratio = math.log(p) / n
    return 1.0 + 5.0 * max(math.sqrt(ratio), ratio)


def soft_threshold_matrix(a: np.ndarray, z: float) -> np.ndarray:
    """Entry-wise soft-thresholding ``sign(a) * max(|a| - z, 0)``."""
    if z < 0:
        raise InvalidInputError(f"threshold must be >= 0, got {z}")
    a = np.asarray(a, dtype=float)
    return np.sign(a) * np.maximum(np.abs(a) - z, 0.0)


def mdp_value(a: np.ndarray, s: int, grid_points: int = 200, refine_steps: int = 20) -> float:
    """Minimum dual perturbation ``min_z lambda_max(soft_threshold(a, z)) + s z``.

    The minimum is located by a geometric grid over [0, max |off-diagonal|]
    followed by a golden-section refinement around the grid argmin.  Every
    evaluated point is a true objective value, so the result upper-bounds the
    exact minimum (and hence stays above the s-sparse top eigenvalue) at any
    grid resolution.  For s >= 1 the objective is nondecreasing beyond the
    largest off-diagonal magnitude, so the search interval suffices.
    """
    a = np.asarray(a, dtype=float)
    p = a.shape[0]

    def objective(z: float) -> float:
        return float(np.linalg.eigvalsh(soft_threshold_matrix(a, z))[-1]) + s * z

    off = np.abs(a - np.diag(np.diagonal(a)))
    z_max = float(off.max()) if p > 1 else 0.0
    if z_max == 0.0:
        return objective(0.0)
    zs = np.concatenate([[0.0], np.geomspace(z_max * 1e-6, z_max, grid_points)])
    vals = [objective(z) for z in zs]
    i = int(np.argmin(vals))
    best = vals[i]
    lo = zs[max(i - 1, 0)]
    hi = zs[min(i + 1, len(zs) - 1)]
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1, f2 = objective(x1), objective(x2)
    best = min(best, f1, f2)
    for _ in range(refine_steps):
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _GOLDEN * (hi - lo)
            f1 = objective(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _GOLDEN * (hi - lo)
            f2 = objective(x2)
        best = min(best, f1, f2)
    return best


def mdp_stat(
    d: Dataset, sigma: np.ndarray, s: int, grid_points: int = 200, refine_steps: int = 20
) -> StatValue:
    """MDP relaxation statistic on the standardized sample covariance.

    Requires a diagonal known covariance (the setting where the sparse
    eigenvalue variants coincide and the relaxation applies).
    """
    sigma = np.asarray(sigma, dtype=float)
    if np.count_nonzero(sigma - np.diag(np.diagonal(sigma))):
        raise InvalidInputError("mdp_stat requires a diagonal known covariance")
    cov_std = _standardized_cov(d, sigma)
    val = mdp_value(cov_std, s, grid_points=grid_points, refine_steps=refine_steps)
    return StatValue(stat_id="mdp", value=val, rejection_side="upper")
