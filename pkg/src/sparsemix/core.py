"""Domain types, matrix primitives, and population signal-to-noise functionals.

Conventions used throughout the package:

* The sample covariance is normalized by ``1/n`` (not ``1/(n-1)``).  All
  analytic thresholds assume this normalization.
* Matrix square roots come from a full symmetric eigendecomposition, with
  eigenvalues clipped at zero before rooting.
* Coordinate indices are 0-based everywhere (arrays, support sets, CLI output).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from itertools import combinations
from typing import Optional

import numpy as np

from .errors import InvalidInputError, SingularCovarianceError

# Relative eigenvalue floor below which a covariance counts as singular.
SINGULAR_RTOL = 1e-12
# Relative clipping budget for slightly-negative eigenvalues of a psd matrix.
PSD_CLIP_RTOL = 1e-10


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MixtureParams:
    """Parameters of a two-component Gaussian mixture with sparse mean shift.

    Attributes
    ----------
    nu : float
        Mixing weight, strictly inside (0, 1).
    mu0, mu1 : ndarray
        Component mean vectors in R^p.  The difference ``mu1 - mu0`` must have
        at most ``s`` nonzero entries.
    sigma : ndarray
        Common p x p covariance matrix, symmetric positive semidefinite.
    s : int
        Declared sparsity of the mean difference, 1 <= s <= p.
    """

    nu: float
    mu0: np.ndarray
    mu1: np.ndarray
    sigma: np.ndarray
    s: int

    def __post_init__(self):
        mu0 = np.asarray(self.mu0, dtype=float)
        mu1 = np.asarray(self.mu1, dtype=float)
        sigma = np.asarray(self.sigma, dtype=float)
        object.__setattr__(self, "mu0", mu0)
        object.__setattr__(self, "mu1", mu1)
        object.__setattr__(self, "sigma", sigma)
        if not 0.0 < self.nu < 1.0:
            raise InvalidInputError(f"mixing weight must be in (0, 1), got {self.nu}")
        p = mu0.shape[0]
        if mu0.shape != (p,) or mu1.shape != (p,):
            raise InvalidInputError("mu0 and mu1 must be 1-d vectors of equal length")
        if sigma.shape != (p, p):
            raise InvalidInputError(f"sigma must be {p}x{p}, got {sigma.shape}")
        check_symmetric_psd(sigma)
        if not 1 <= self.s <= p:
            raise InvalidInputError(f"sparsity s={self.s} outside [1, {p}]")
        if np.count_nonzero(self.delta_mu) > self.s:
            raise InvalidInputError(
                f"mean difference has {np.count_nonzero(self.delta_mu)} nonzeros, "
                f"more than the declared sparsity s={self.s}"
            )

    @property
    def p(self) -> int:
        return self.mu0.shape[0]

    @property
    def delta_mu(self) -> np.ndarray:
        return self.mu1 - self.mu0


@dataclass(frozen=True)
class Dataset:
    """An n x p observation matrix, optionally with a known covariance attached."""

    data: np.ndarray
    known_sigma: Optional[np.ndarray] = None

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        object.__setattr__(self, "data", data)
        if data.ndim != 2:
            raise InvalidInputError(f"data must be 2-d, got shape {data.shape}")
        n, p = data.shape
        if n < 2 or p < 1:
            raise InvalidInputError(f"need n >= 2 and p >= 1, got n={n}, p={p}")
        if not np.all(np.isfinite(data)):
            raise InvalidInputError("data contains non-finite entries")
        if self.known_sigma is not None:
            sig = np.asarray(self.known_sigma, dtype=float)
            object.__setattr__(self, "known_sigma", sig)
            if sig.shape != (p, p):
                raise InvalidInputError(f"known_sigma must be {p}x{p}, got {sig.shape}")

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def p(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class StatValue:
    """A named statistic's value plus its calibration metadata.

    ``direction`` is the maximizing unit vector when the statistic is defined
    as an extremum over directions, else None.  ``rejection_side`` is "upper"
    for statistics that reject for large values and "lower" otherwise.
    """

    stat_id: str
    value: float
    rejection_side: str
    direction: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.rejection_side not in ("upper", "lower"):
            raise InvalidInputError(f"bad rejection_side {self.rejection_side!r}")
        if not math.isfinite(self.value):
            raise InvalidInputError(f"statistic {self.stat_id} is not finite: {self.value}")
        if self.direction is not None:
            d = np.asarray(self.direction, dtype=float)
            object.__setattr__(self, "direction", d)
            nrm = float(np.linalg.norm(d))
            if abs(nrm - 1.0) > 1e-8:
                raise InvalidInputError(f"direction norm {nrm} is not 1 within 1e-8")


@dataclass(frozen=True)
class SnrReport:
    """Population signal-to-noise functionals of a mixture parameter tuple.

    ``r0`` is the Mahalanobis functional and ``kappa`` the sup-norm ratio of
    the standardized mean difference; both are None when sigma is singular.
    ``dyn_range`` is None when the mean difference is zero, and ``riesz_2s``
    is None when support enumeration would exceed the cap.
    """

    r0: Optional[float]
    r1: float
    kappa: Optional[float]
    zeta: float
    dyn_range: Optional[float]
    riesz_2s: Optional[float]


# ---------------------------------------------------------------------------
# Matrix primitives
# ---------------------------------------------------------------------------

def check_symmetric_psd(sigma: np.ndarray, atol_sym: float = 1e-10) -> None:
    """Raise unless sigma is symmetric and psd within tolerance."""
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise InvalidInputError(f"covariance must be square, got shape {sigma.shape}")
    asym = float(np.max(np.abs(sigma - sigma.T))) if sigma.size else 0.0
    if asym > atol_sym:
        raise InvalidInputError(f"covariance asymmetry {asym:.3e} exceeds {atol_sym:.0e}")
    evals = np.linalg.eigvalsh(sigma)
    lmax = float(evals[-1])
    if evals[0] < -PSD_CLIP_RTOL * max(lmax, 0.0):
        raise InvalidInputError(
            f"covariance has eigenvalue {evals[0]:.3e}, below -{PSD_CLIP_RTOL:.0e} * lambda_max"
        )


def _clipped_eigh(sigma: np.ndarray):
    """Eigendecomposition with negative eigenvalues clipped at zero.

    Warns when the clipping exceeds the psd tolerance budget.
    """
    evals, vecs = np.linalg.eigh(np.asarray(sigma, dtype=float))
    lmax = float(evals[-1])
    if evals[0] < -PSD_CLIP_RTOL * max(lmax, 0.0):
        warnings.warn(
            f"clipping eigenvalue {evals[0]:.3e} to 0 (exceeds {PSD_CLIP_RTOL:.0e} * lambda_max)",
            RuntimeWarning,
            stacklevel=3,
        )
    return np.clip(evals, 0.0, None), vecs


def _is_diagonal(a: np.ndarray) -> bool:
    return np.count_nonzero(a - np.diag(np.diagonal(a))) == 0


def sym_sqrt(sigma: np.ndarray) -> np.ndarray:
    """Symmetric square root of a psd matrix."""
    sigma = np.asarray(sigma, dtype=float)
    if _is_diagonal(sigma):
        d = np.diagonal(sigma).astype(float)
        if np.any(d < -PSD_CLIP_RTOL * max(float(d.max()), 0.0)):
            warnings.warn("clipping negative diagonal entries to 0", RuntimeWarning, stacklevel=2)
        return np.diag(np.sqrt(np.clip(d, 0.0, None)))
    evals, vecs = _clipped_eigh(sigma)
    return (vecs * np.sqrt(evals)) @ vecs.T


def sym_inv_sqrt(sigma: np.ndarray) -> np.ndarray:
    """Symmetric inverse square root; raises if sigma is not strictly pd."""
    sigma = np.asarray(sigma, dtype=float)
    if _is_diagonal(sigma):
        d = np.diagonal(sigma).astype(float)
        if np.any(d <= 0) or float(d.min()) <= SINGULAR_RTOL * float(d.max()):
            raise SingularCovarianceError("diagonal covariance has a (near-)zero entry")
        return np.diag(1.0 / np.sqrt(d))
    evals, vecs = np.linalg.eigh(sigma)
    if evals[0] <= SINGULAR_RTOL * max(float(evals[-1]), 0.0) or evals[0] <= 0:
        raise SingularCovarianceError(
            f"covariance is singular or indefinite (eigenvalue range [{evals[0]:.3e}, {evals[-1]:.3e}])"
        )
    return (vecs / np.sqrt(evals)) @ vecs.T


def sym_inv(sigma: np.ndarray) -> np.ndarray:
    """Symmetric inverse of a strictly positive-definite matrix."""
    sigma = np.asarray(sigma, dtype=float)
    if _is_diagonal(sigma):
        d = np.diagonal(sigma).astype(float)
        if np.any(d <= 0) or float(d.min()) <= SINGULAR_RTOL * float(d.max()):
            raise SingularCovarianceError("diagonal covariance has a (near-)zero entry")
        return np.diag(1.0 / d)
    evals, vecs = np.linalg.eigh(sigma)
    if evals[0] <= SINGULAR_RTOL * max(float(evals[-1]), 0.0) or evals[0] <= 0:
        raise SingularCovarianceError(
            f"covariance is singular or indefinite (eigenvalue range [{evals[0]:.3e}, {evals[-1]:.3e}])"
        )
    return (vecs / evals) @ vecs.T


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def sample_moments(d: Dataset):
    """Sample mean and 1/n-normalized sample covariance of a dataset.

    Rows are summed in a canonical (lexicographically sorted) order, so the
    result is bitwise invariant under row permutations.

    Returns
    -------
    (mean, cov) : ndarray of shape (p,), ndarray of shape (p, p)
    """
    x = d.data
    n = x.shape[0]
    if n < 2:
        raise InvalidInputError("sample_moments needs at least 2 observations")
    order = np.argsort(x[:, 0], kind="stable")
    if np.unique(x[:, 0]).size < n:  # ties in the first column: full lexicographic sort
        order = np.lexsort(x.T[::-1])
    xs = x[order]
    mean = xs.mean(axis=0)
    xc = xs - mean
    cov = (xc.T @ xc) / n
    return mean, (cov + cov.T) / 2.0


def constant_columns(x: np.ndarray) -> np.ndarray:
    """Boolean mask of columns whose entries are all equal.

    Centering a constant column leaves O(eps) residue, so a plain
    zero-variance check misses these; the 0/0 = 0 conventions need the exact
    test.
    """
    return np.all(x == x[0], axis=0)


def standardize(d: Dataset, sigma: np.ndarray) -> Dataset:
    """Replace each row X_i by sigma^{-1/2} X_i.

    ``sigma`` must be strictly positive-definite; the symmetric square root
    comes from a full eigendecomposition.
    """
    root_inv = sym_inv_sqrt(sigma)
    return Dataset(data=d.data @ root_inv)  # root_inv is symmetric


def snr_report(theta: MixtureParams, n: int, riesz_cap: int = 10**6) -> SnrReport:
    """Compute the signal-to-noise functionals of a parameter tuple.

    ``riesz_2s`` enumerates all supports of size min(2s, p), which is
    exponential; it is reported as None when the number of supports exceeds
    ``riesz_cap`` rather than approximated silently.
    """
    if n < 1:
        raise InvalidInputError("sample size must be >= 1")
    dmu = theta.delta_mu
    sigma = theta.sigma
    p, s = theta.p, theta.s

    r1_den = float(dmu @ sigma @ dmu)
    r1 = float(np.linalg.norm(dmu) ** 4 / r1_den) if r1_den > 0 else 0.0

    try:
        root_inv = sym_inv_sqrt(sigma)
    except SingularCovarianceError:
        r0 = kappa = None
    else:
        dmu_std = root_inv @ dmu
        r0 = float(dmu_std @ dmu_std)
        nrm = float(np.linalg.norm(dmu_std))
        kappa = float(np.max(np.abs(dmu_std)) / nrm) if nrm > 0 else None

    zeta = (s / n) * math.log(math.e * p / s)

    nonzero = np.abs(dmu[dmu != 0])
    dyn_range = float(np.max(np.abs(dmu)) / nonzero.min()) if nonzero.size else None

    k = min(2 * s, p)
    riesz = None
    if math.comb(p, k) <= riesz_cap:
        lo, hi = np.inf, -np.inf
        for sup in combinations(range(p), k):
            sub_evals = np.linalg.eigvalsh(sigma[np.ix_(sup, sup)])
            lo = min(lo, float(sub_evals[0]))
            hi = max(hi, float(sub_evals[-1]))
        if lo > 0:
            riesz = hi / lo

    return SnrReport(r0=r0, r1=r1, kappa=kappa, zeta=zeta, dyn_range=dyn_range, riesz_2s=riesz)
