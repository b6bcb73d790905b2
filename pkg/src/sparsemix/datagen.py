"""Seedable mixture sampling and scenario builders.

Random streams use the counter-based Philox generator keyed through
``numpy.random.SeedSequence``: replication ``r`` of master seed ``m`` draws
from ``stream_rng(m, r)``, so parallel and serial runs produce identical data.

The sampling convention is ``X_i = mu0 + eta_i * dmu + sigma^{1/2} Z_i`` with
``eta_i ~ Bern(nu)``: a row has mean ``mu1`` with probability ``nu``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.stats import norm

from .core import Dataset, MixtureParams, sym_sqrt
from .errors import InvalidInputError


def stream_rng(master_seed: int, *stream: int) -> np.random.Generator:
    """Philox generator for the given (master_seed, stream...) key."""
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=tuple(stream))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class Scenario:
    """A mixture parameter tuple plus the sample size to draw."""

    params: MixtureParams
    n: int
    labels_wanted: bool = False

    def __post_init__(self):
        if self.n < 2:
            raise InvalidInputError(f"scenario needs n >= 2, got {self.n}")


def sample_mixture(sc: Scenario, seed) -> Tuple[Dataset, Optional[np.ndarray]]:
    """Draw n observations from the mixture; deterministic given the seed.

    ``seed`` is an integer or a tuple of integers (e.g. ``(master_seed, rep)``
    for replication streams).  Returns the dataset (with the scenario
    covariance attached as known) and, when requested, the latent component
    labels eta in {0, 1}^n.
    """
    theta = sc.params
    rng = stream_rng(seed)
    eta = (rng.random(sc.n) < theta.nu).astype(np.int64)
    z = rng.standard_normal((sc.n, theta.p))
    root = sym_sqrt(theta.sigma)
    x = theta.mu0 + eta[:, None] * theta.delta_mu + z @ root  # root is symmetric
    d = Dataset(data=x, known_sigma=theta.sigma)
    return d, (eta if sc.labels_wanted else None)


def paper_delta_mu(p: int, s: int, amplitude: float) -> np.ndarray:
    """Mean difference with energy spread equally over the first s coordinates.

    Each nonzero entry equals ``amplitude / sqrt(s)``, so the Euclidean norm
    is exactly ``amplitude``.
    """
    if not 1 <= s <= p:
        raise InvalidInputError(f"need 1 <= s <= p, got s={s}, p={p}")
    if amplitude < 0:
        raise InvalidInputError(f"amplitude must be >= 0, got {amplitude}")
    dmu = np.zeros(p)
    dmu[:s] = amplitude / np.sqrt(s)
    return dmu


def rank_one_deflated_sigma(mu: np.ndarray, c: float) -> np.ndarray:
    """Covariance ``I - c * mu mu^T``; requires ``c * ||mu||^2 < 1`` (strict pd)."""
    mu = np.asarray(mu, dtype=float)
    if c * float(mu @ mu) >= 1.0:
        raise InvalidInputError(
            f"I - c*mu*mu^T is not positive-definite: c*||mu||^2 = {c * float(mu @ mu):.6g} >= 1"
        )
    return np.eye(mu.shape[0]) - c * np.outer(mu, mu)


def psi1(t: float, nu: float) -> float:
    """Expected absolute value of ``t*(nu - B) + Z`` with B ~ Bern(nu), Z ~ N(0,1).

    Closed form:
    ``2 nu (1-nu) t [Phi((1-nu) t) - Phi(-nu t)] + 2 (1-nu) phi(nu t) + 2 nu phi((1-nu) t)``.
    """
    if t < 0:
        raise InvalidInputError(f"t must be >= 0, got {t}")
    a, b = (1.0 - nu) * t, nu * t
    return float(
        2.0 * nu * (1.0 - nu) * t * (norm.cdf(a) - norm.cdf(-b))
        + 2.0 * (1.0 - nu) * norm.pdf(b)
        + 2.0 * nu * norm.pdf(a)
    )


def psi2(t: float, nu: float) -> float:
    """Variance of ``t*(nu - B) + Z``: ``nu(1-nu) t^2 + 1 - psi1(t, nu)^2``."""
    return nu * (1.0 - nu) * t * t + 1.0 - psi1(t, nu) ** 2


def psi1_taylor(t: float, nu: float) -> float:
    """Fourth-order small-t expansion of psi1; the remainder is O(t^6)."""
    q = nu * (1.0 - nu)
    return float(
        np.sqrt(2.0 / np.pi)
        * (1.0 + (t * t / 2.0) * q - (t**4 / 24.0) * q * (1.0 - 3.0 * nu + 3.0 * nu * nu))
    )
