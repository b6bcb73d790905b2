"""Projection moment statistics for the unknown-covariance setting.

Values follow the normalizations under which the null limits are the familiar
constants: the kurtosis ratio carries a leading ``n`` (null value 3), the
first-absolute-moment ratio a ``1/sqrt(n)`` (null value sqrt(2/pi)), and the
skewness a ``sqrt(n)`` (null value 0).  ``sign(0)`` is taken to be 0.
"""

from __future__ import annotations

import math
from enum import Enum
from typing import Callable, Tuple

import numpy as np

from .core import Dataset, StatValue, constant_columns, sample_moments
from .errors import DegenerateProjectionError, InvalidInputError
from .sparse_search import DEFAULT_CONFIG, SearchConfig, _canonical_sign, maximize_smooth

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


class MomentKind(str, Enum):
    KURTOSIS = "kurtosis"
    ABS1 = "abs1"
    SKEWNESS = "skewness"
    SIGNED2 = "signed2"

    @property
    def rejection_side(self) -> str:
        # The kurtosis test rejects for small values; the others for large.
        return "lower" if self is MomentKind.KURTOSIS else "upper"

    @property
    def is_odd(self) -> bool:
        """Whether the ratio is an odd function of the direction."""
        return self in (MomentKind.SKEWNESS, MomentKind.SIGNED2)


def _batched_ratio(xc: np.ndarray, kind: MomentKind, negate: bool = False) -> Callable:
    """Build a batched (value, gradient) evaluator for a moment ratio.

    The returned callable maps a (p, m) matrix of directions to the ratio
    values (m,) and Euclidean gradients (p, m).  Degenerate columns (all
    projections equal) get NaN values and zero gradients.
    """
    n = xc.shape[0]
    sqrt_n = math.sqrt(n)

    def value_and_grad(u: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        y = xc @ u  # (n, m)
        s2 = np.einsum("nm,nm->m", y, y)
        ok = s2 > 0
        s2s = np.where(ok, s2, 1.0)
        if kind is MomentKind.KURTOSIS:
            y2 = y * y
            s4 = np.einsum("nm,nm->m", y2, y2)
            vals = n * s4 / (s2s * s2s)
            grads = (n / s2s**3) * (4.0 * s2s * (xc.T @ (y2 * y)) - 4.0 * s4 * (xc.T @ y))
        elif kind is MomentKind.ABS1:
            s1 = np.abs(y).sum(axis=0)
            root = np.sqrt(n * s2s)
            vals = s1 / root
            grads = (xc.T @ np.sign(y)) / root - (s1 * n / root**3) * (xc.T @ y)
        elif kind is MomentKind.SKEWNESS:
            y2 = y * y
            s3 = np.einsum("nm,nm->m", y2, y)
            vals = sqrt_n * s3 / s2s**1.5
            grads = (sqrt_n / s2s**2.5) * (3.0 * s2s * (xc.T @ y2) - 3.0 * s3 * (xc.T @ y))
        else:  # SIGNED2
            ay = np.abs(y)
            ssgn = np.einsum("nm,nm->m", ay, y)
            vals = ssgn / s2s
            grads = (2.0 * (xc.T @ ay) * s2s - 2.0 * ssgn * (xc.T @ y)) / s2s**2
        vals = np.where(ok, vals, np.nan)
        grads = np.where(ok, grads, 0.0)
        if negate:
            return -vals, -grads
        return vals, grads

    return value_and_grad


def moment_ratio(u: np.ndarray, d: Dataset, kind: MomentKind) -> float:
    """Moment ratio of the projections of the centered data onto u."""
    kind = MomentKind(kind)
    u = np.asarray(u, dtype=float)
    xc = d.data - d.data.mean(axis=0)
    vals, _ = _batched_ratio(xc, kind)(u[:, None])
    v = float(vals[0])
    if not math.isfinite(v):
        raise DegenerateProjectionError("all projections onto u coincide")
    return v


def sparse_moment_stat(
    d: Dataset, s: int, kind: MomentKind, cfg: SearchConfig = DEFAULT_CONFIG
) -> StatValue:
    """Extremum of a moment ratio over s-sparse unit directions.

    Kurtosis is minimized (its test rejects for small values); the other
    kinds are maximized, with the search covering both signs for the odd ones.
    """
    kind = MomentKind(kind)
    xc = d.data - d.data.mean(axis=0)
    negate = kind is MomentKind.KURTOSIS
    vg = _batched_ratio(xc, kind, negate=negate)
    val, u = maximize_smooth(vg, d.p, s, cfg, both_signs=kind.is_odd)
    if negate:
        val = -val
    if not kind.is_odd:
        u = _canonical_sign(u)
    return StatValue(stat_id=kind.value, value=val, rejection_side=kind.rejection_side, direction=u)


def coord_stats(d: Dataset, kind: MomentKind):
    """Per-coordinate statistics T_1 (abs1) or T_2 (signed2) and their maximum.

    These use the unnormalized displays: under the null T_1j grows like
    ``n * sqrt(2/pi)``.  Columns with zero sample variance are reported as NaN
    and excluded from the maximum.

    Returns
    -------
    (values, stat) : ndarray of shape (p,), StatValue for the Bonferroni max
    """
    kind = MomentKind(kind)
    if kind not in (MomentKind.ABS1, MomentKind.SIGNED2):
        raise InvalidInputError(f"coordinate statistics exist for abs1 and signed2 only, not {kind.value}")
    _, cov = sample_moments(d)
    var = np.diagonal(cov).copy()
    xc = d.data - d.data.mean(axis=0)
    good = (var > 0) & ~constant_columns(d.data)
    if not good.any():
        raise InvalidInputError("every column is degenerate (zero sample variance)")
    vals = np.full(d.p, np.nan)
    if kind is MomentKind.ABS1:
        vals[good] = np.abs(xc[:, good]).sum(axis=0) / np.sqrt(var[good])
    else:
        vals[good] = np.abs((xc[:, good] ** 2 * np.sign(xc[:, good])).sum(axis=0)) / var[good]
    j = int(np.nanargmax(vals))
    direction = np.zeros(d.p)
    direction[j] = 1.0
    stat = StatValue(
        stat_id=f"coord-{kind.value}",
        value=float(vals[j]),
        rejection_side="upper",
        direction=direction,
    )
    return vals, stat
