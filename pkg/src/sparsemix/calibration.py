"""Monte Carlo null calibration, analytic thresholds, and test decisions.

The calibration null is always n x p standard normal data.  This is exact for
the statistics whose null law does not depend on the covariance: the moment
ratios (per-support pivotality), the diagonal ratio for diagonal covariances,
the coordinate statistics, and the standardized spectral statistics with a
diagonal known covariance.  For the sparse eigenvalue with a general
non-diagonal known covariance the null law is covariance-dependent and the
table entry is only valid conditionally on sigma = I.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from .core import Dataset, StatValue
from .datagen import stream_rng
from .errors import InvalidInputError, MissingCalibrationError
from .moments import MomentKind, coord_stats, sparse_moment_stat
from .sparse_search import DEFAULT_CONFIG, SearchConfig
from .spectral import (
    canonical_variance_stats,
    diag_ratio_stat,
    mdp_stat,
    sparse_eig_stat,
    sparse_eig_stat_plain,
    top_eig_stat,
)


@dataclass(frozen=True)
class StatSpec:
    """How to evaluate a named statistic and how its test rejects."""

    stat_id: str
    rejection_side: str
    needs_s: bool
    needs_sigma: bool
    compute: Callable[[Dataset, Optional[np.ndarray], int, SearchConfig], StatValue]


def _moment_spec(kind: MomentKind) -> StatSpec:
    return StatSpec(
        stat_id=kind.value,
        rejection_side=kind.rejection_side,
        needs_s=True,
        needs_sigma=False,
        compute=lambda d, sigma, s, cfg, k=kind: sparse_moment_stat(d, s, k, cfg),
    )


def _coord_spec(kind: MomentKind) -> StatSpec:
    return StatSpec(
        stat_id=f"coord-{kind.value}",
        rejection_side="upper",
        needs_s=False,
        needs_sigma=False,
        compute=lambda d, sigma, s, cfg, k=kind: coord_stats(d, k)[1],
    )


def _coord_kurtosis(d, sigma, s, cfg) -> StatValue:
    # Coordinate-wise kurtosis = the sparse kurtosis scan at s = 1.
    inner = sparse_moment_stat(d, 1, MomentKind.KURTOSIS, cfg)
    return StatValue("coord-kurtosis", inner.value, inner.rejection_side, inner.direction)


STAT_REGISTRY: Dict[str, StatSpec] = {
    spec.stat_id: spec
    for spec in [
        StatSpec("top-eig", "upper", False, True, lambda d, sigma, s, cfg: top_eig_stat(d, sigma)),
        StatSpec("sparse-eig", "upper", True, True, lambda d, sigma, s, cfg: sparse_eig_stat(d, sigma, s, cfg)),
        StatSpec(
            "sparse-eig-plain", "upper", True, True,
            lambda d, sigma, s, cfg: sparse_eig_stat_plain(d, sigma, s, cfg),
        ),
        StatSpec("diag-ratio", "upper", True, False, lambda d, sigma, s, cfg: diag_ratio_stat(d, s, cfg)),
        StatSpec(
            "canonical-max", "upper", False, True,
            lambda d, sigma, s, cfg: canonical_variance_stats(d, np.diagonal(sigma))[1],
        ),
        StatSpec("mdp", "upper", True, True, lambda d, sigma, s, cfg: mdp_stat(d, sigma, s)),
        _moment_spec(MomentKind.KURTOSIS),
        _moment_spec(MomentKind.ABS1),
        _moment_spec(MomentKind.SKEWNESS),
        _moment_spec(MomentKind.SIGNED2),
        _coord_spec(MomentKind.ABS1),
        _coord_spec(MomentKind.SIGNED2),
        StatSpec("coord-kurtosis", "lower", False, False, _coord_kurtosis),
    ]
}


def stat_spec(stat_id: str) -> StatSpec:
    try:
        return STAT_REGISTRY[stat_id]
    except KeyError:
        raise InvalidInputError(
            f"unknown statistic {stat_id!r}; valid Monte Carlo-calibratable statistics are: "
            + ", ".join(sorted(STAT_REGISTRY))
        ) from None


# ---------------------------------------------------------------------------
# Calibration table
# ---------------------------------------------------------------------------

CSV_HEADER = ["stat_id", "n", "p", "s", "level", "critical", "reps", "seed", "side"]


def _level_key(level: float) -> float:
    # Levels are keyed at 12 significant digits so that, e.g., a hand-typed
    # alpha/p matches the same quantity computed by division.
    return float(f"{float(level):.12g}")


@dataclass(frozen=True)
class CalEntry:
    stat_id: str
    n: int
    p: int
    s: int  # 0 when the statistic does not take a sparsity parameter
    level: float
    critical: float
    reps: int
    seed: int
    side: str

    @property
    def key(self) -> Tuple[str, int, int, int, float]:
        return (self.stat_id, self.n, self.p, self.s, _level_key(self.level))


@dataclass
class CalibrationTable:
    """Monte Carlo null critical values keyed by (stat_id, n, p, s, level)."""

    entries: Dict[Tuple[str, int, int, int, float], CalEntry] = field(default_factory=dict)

    def add(self, entry: CalEntry) -> None:
        self.entries[entry.key] = entry

    def lookup(self, stat_id: str, n: int, p: int, s: int, level: float) -> CalEntry:
        key = (stat_id, int(n), int(p), int(s), _level_key(level))
        try:
            return self.entries[key]
        except KeyError:
            raise MissingCalibrationError(
                f"no calibration entry for {key}; generate one with "
                f"`sparsemix calibrate --stat {stat_id} --n {n} --p {p} --s {s} "
                f"--alpha {level!r} --reps 2000 --seed <seed> --out <table.csv>`"
            ) from None

    def missing(self, keys) -> list:
        return [
            k for k in keys
            if (k[0], int(k[1]), int(k[2]), int(k[3]), _level_key(k[4])) not in self.entries
        ]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            for entry in self.entries.values():
                w.writerow(
                    [entry.stat_id, entry.n, entry.p, entry.s, repr(entry.level),
                     repr(entry.critical), entry.reps, entry.seed, entry.side]
                )

    @classmethod
    def from_csv(cls, path) -> "CalibrationTable":
        table = cls()
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != CSV_HEADER:
                raise InvalidInputError(
                    f"calibration table {path} has header {reader.fieldnames}, expected {CSV_HEADER}"
                )
            for row in reader:
                table.add(
                    CalEntry(
                        stat_id=row["stat_id"],
                        n=int(row["n"]),
                        p=int(row["p"]),
                        s=int(row["s"]),
                        level=float(row["level"]),
                        critical=float(row["critical"]),
                        reps=int(row["reps"]),
                        seed=int(row["seed"]),
                        side=row["side"],
                    )
                )
        return table


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def calibrate(
    stat_id: str,
    n: int,
    p: int,
    s: int,
    level: float,
    reps: int,
    seed: int,
    cfg: SearchConfig = DEFAULT_CONFIG,
) -> CalEntry:
    """Estimate a null critical value from ``reps`` standard normal datasets.

    Replication r draws from the stream (seed, r), so the result is
    deterministic and independent of evaluation order.  The quantile is the
    order statistic at index ceil(reps * q) (q = 1 - level on the upper side,
    q = level on the lower side), without interpolation.
    """
    spec = stat_spec(stat_id)
    if reps < 100:
        raise InvalidInputError(f"need reps >= 100 for a recorded critical value, got {reps}")
    if not 0 < level <= 1:
        raise InvalidInputError(f"level must be in (0, 1], got {level}")
    s_key = int(s) if spec.needs_s else 0
    if spec.needs_s and not 1 <= s <= p:
        raise InvalidInputError(f"statistic {stat_id} needs 1 <= s <= p, got s={s}")
    sigma = np.eye(p) if spec.needs_sigma else None

    values = np.empty(reps)
    for r in range(reps):
        rng = stream_rng(seed, r)
        d = Dataset(data=rng.standard_normal((n, p)))
        values[r] = spec.compute(d, sigma, s_key, cfg).value
    values.sort()

    q = (1.0 - level) if spec.rejection_side == "upper" else level
    k = min(max(math.ceil(reps * q), 1), reps)
    return CalEntry(
        stat_id=stat_id,
        n=int(n),
        p=int(p),
        s=s_key,
        level=float(level),
        critical=float(values[k - 1]),
        reps=int(reps),
        seed=int(seed),
        side=spec.rejection_side,
    )


@dataclass(frozen=True)
class TestDecision:
    stat_id: str
    value: float
    critical: float
    rejection_side: str
    reject: bool


def decide(stat: StatValue, critical: float) -> TestDecision:
    """Reject iff the value lies strictly beyond the critical value."""
    if stat.rejection_side == "upper":
        reject = stat.value > critical
    else:
        reject = stat.value < critical
    return TestDecision(
        stat_id=stat.stat_id,
        value=stat.value,
        critical=float(critical),
        rejection_side=stat.rejection_side,
        reject=bool(reject),
    )


def bonferroni_level(alpha: float, m: int) -> float:
    """Per-test level alpha/m for m simultaneous hypotheses."""
    if m < 1:
        raise InvalidInputError(f"number of hypotheses must be >= 1, got {m}")
    if not 0 < alpha <= 1:
        raise InvalidInputError(f"alpha must be in (0, 1], got {alpha}")
    return alpha / m
