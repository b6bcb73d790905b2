"""Support (variable-selection) estimators and the selection-error metric."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Tuple

import numpy as np

from .calibration import CalibrationTable
from .core import Dataset, sym_sqrt
from .errors import InvalidInputError
from .moments import MomentKind, SQRT_2_OVER_PI, coord_stats
from .sparse_search import DEFAULT_CONFIG, SearchConfig, maximize_smooth
from .spectral import canonical_variance_stats, canonical_variance_threshold, sparse_eig_stat

# Direction entries below this fraction of the largest magnitude count as
# zero, to absorb floating-point noise in eigenvectors.
SUPPORT_RTOL = 1e-10


def support_of(v: np.ndarray, rtol: float = SUPPORT_RTOL) -> Tuple[int, ...]:
    """Indices of the effectively-nonzero entries of a direction vector."""
    v = np.asarray(v, dtype=float)
    top = float(np.max(np.abs(v))) if v.size else 0.0
    if top == 0.0:
        return ()
    return tuple(int(j) for j in np.flatnonzero(np.abs(v) > rtol * top))


@dataclass(frozen=True)
class SupportEstimate:
    """An estimated support (0-based, sorted) plus the direction that produced it."""

    indices: Tuple[int, ...]
    stat_id: str
    direction: Optional[np.ndarray] = None

    def __post_init__(self):
        idx = tuple(sorted(int(i) for i in self.indices))
        if len(set(idx)) != len(idx):
            raise InvalidInputError("support indices must be unique")
        if idx and idx[0] < 0:
            raise InvalidInputError("support indices must be nonnegative")
        object.__setattr__(self, "indices", idx)


def select_spectral(
    d: Dataset, sigma: np.ndarray, s: int, cfg: SearchConfig = DEFAULT_CONFIG
) -> SupportEstimate:
    """Support of ``sigma^{1/2} u`` for the sparse-eigenvalue maximizer u."""
    stat = sparse_eig_stat(d, sigma, s, cfg)
    v = sym_sqrt(sigma) @ stat.direction
    return SupportEstimate(indices=support_of(v), stat_id="sparse-eig", direction=stat.direction)


def _sym_objective(xc: np.ndarray, strong_signal: bool):
    """Batched value/gradient of the symmetric-setting selection objective."""
    n = xc.shape[0]
    sqrt_n = math.sqrt(n)

    if strong_signal:
        def value_and_grad(u):
            y = xc @ u
            return np.abs(y).sum(axis=0), xc.T @ np.sign(y)
    else:
        def value_and_grad(u):
            y = xc @ u
            s2 = np.einsum("nm,nm->m", y, y)
            ok = s2 > 0
            s2s = np.where(ok, s2, 1.0)
            s1 = np.abs(y).sum(axis=0)
            root = sqrt_n * np.sqrt(s2s)
            ratio = s1 / root
            vals = (ratio - SQRT_2_OVER_PI) * s2s**2
            d_ratio = (xc.T @ np.sign(y)) / root - (s1 / (root * s2s)) * (xc.T @ y)
            grads = d_ratio * s2s**2 + (ratio - SQRT_2_OVER_PI) * 4.0 * s2s * (xc.T @ y)
            return np.where(ok, vals, np.nan), np.where(ok, grads, 0.0)

    return value_and_grad


def _asym_objective(xc: np.ndarray):
    """Batched value/gradient of (signed second moment) * (energy)^{1/2}."""

    def value_and_grad(u):
        y = xc @ u
        s2 = np.einsum("nm,nm->m", y, y)
        ok = s2 > 0
        s2s = np.where(ok, s2, 1.0)
        ay = np.abs(y)
        ssgn = np.einsum("nm,nm->m", ay, y)
        root = np.sqrt(s2s)
        vals = ssgn * root
        grads = 2.0 * (xc.T @ ay) * root + (ssgn / root) * (xc.T @ y)
        return np.where(ok, vals, np.nan), np.where(ok, grads, 0.0)

    return value_and_grad


def select_sym_moment(
    d: Dataset, s: int, cfg: SearchConfig = DEFAULT_CONFIG, strong_signal: bool = False
) -> SupportEstimate:
    """Support of the renormalized first-absolute-moment maximizer.

    The objective multiplies the centered abs1 ratio, minus its null constant
    sqrt(2/pi), by the squared energy of the projections, which aligns the
    maximizer with the mean difference near the detection boundary.  The
    bracket is not clipped at zero.  With ``strong_signal`` the simpler
    objective sum |u^T (X_i - mean)| is used instead (appropriate when the
    signal is strong).
    """
    xc = d.data - d.data.mean(axis=0)
    _, u = maximize_smooth(_sym_objective(xc, strong_signal), d.p, s, cfg, both_signs=False)
    return SupportEstimate(indices=support_of(u), stat_id="sym-moment", direction=u)


def select_asym_moment(d: Dataset, s: int, cfg: SearchConfig = DEFAULT_CONFIG) -> SupportEstimate:
    """Support of the maximizer of (signed second moment) * (energy)^{1/2}."""
    xc = d.data - d.data.mean(axis=0)
    _, u = maximize_smooth(_asym_objective(xc), d.p, s, cfg, both_signs=True)
    return SupportEstimate(indices=support_of(u), stat_id="asym-moment", direction=u)


def select_canonical(d: Dataset, sigma_diag: np.ndarray) -> SupportEstimate:
    """Coordinates whose canonical variance ratio strictly exceeds the analytic threshold."""
    ratios, _ = canonical_variance_stats(d, sigma_diag)
    thr = canonical_variance_threshold(d.n, d.p)
    return SupportEstimate(indices=tuple(np.flatnonzero(ratios > thr)), stat_id="canonical")


def select_coord_bonferroni(
    d: Dataset, kind: MomentKind, alpha: float, calib: CalibrationTable
) -> SupportEstimate:
    """Coordinates whose T_1 / T_2 statistic exceeds the alpha/p null quantile.

    The per-coordinate null quantile comes from the calibration table entry
    with dimensions (n, p=1) at level alpha/p; the induced test rejects when
    the returned support is nonempty.
    """
    kind = MomentKind(kind)
    stat_id = f"coord-{kind.value}"
    entry = calib.lookup(stat_id, d.n, 1, 0, alpha / d.p)
    vals, _ = coord_stats(d, kind)
    with np.errstate(invalid="ignore"):
        selected = np.flatnonzero(vals > entry.critical)  # NaN columns never selected
    return SupportEstimate(indices=tuple(selected), stat_id=stat_id)


def selection_error(estimate, truth: Iterable[int]) -> float:
    """Symmetric-difference loss |J_hat triangle J| / |J|; 0 iff exact recovery."""
    truth_set = set(int(j) for j in truth)
    if not truth_set:
        raise InvalidInputError("the true support must be nonempty")
    est_set = set(estimate.indices if isinstance(estimate, SupportEstimate) else estimate)
    return len(est_set.symmetric_difference(truth_set)) / len(truth_set)
