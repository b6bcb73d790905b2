"""CSV and config-file I/O for the CLI and the experiment harness.

Dataset CSV: plain numeric, one observation per row, no header unless the
caller skips one.  Covariance CSV: p rows x p columns.  Config files are flat
``key = value`` lines; ``#`` starts a comment.
"""

from __future__ import annotations

import csv
from typing import Dict, List, Optional, Tuple

import numpy as np

from .core import Dataset, MixtureParams
from .datagen import paper_delta_mu, rank_one_deflated_sigma
from .errors import InvalidInputError


def read_matrix_csv(path, skip_header: bool = False) -> np.ndarray:
    try:
        mat = np.loadtxt(path, delimiter=",", skiprows=1 if skip_header else 0, ndmin=2)
    except ValueError as exc:
        raise InvalidInputError(f"could not parse numeric CSV {path}: {exc}") from exc
    return mat


def write_matrix_csv(path, mat: np.ndarray) -> None:
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in mat:
            w.writerow([repr(float(v)) for v in row])


def read_dataset_csv(path, skip_header: bool = False) -> Dataset:
    return Dataset(data=read_matrix_csv(path, skip_header))


def read_indices(path) -> Tuple[int, ...]:
    """Read a support set: one 0-based index per line (or comma-separated)."""
    out: List[int] = []
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            for tok in line.replace(",", " ").split():
                out.append(int(tok))
    return tuple(sorted(set(out)))


def parse_kv_file(path) -> Dict[str, str]:
    """Parse a flat key/value config file (``key = value`` per line)."""
    out: Dict[str, str] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InvalidInputError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def build_sigma(spec: str, p: int, delta_mu: Optional[np.ndarray] = None) -> np.ndarray:
    """Build a covariance from its config spec.

    Accepted forms: ``identity``; ``diagonal:v1,...,vp``; ``file:<csv>``;
    ``deflated:<c>`` for I - c * dmu dmu^T (requires the mean difference).
    """
    spec = spec.strip()
    if spec == "identity":
        return np.eye(p)
    if spec.startswith("diagonal:"):
        vals = np.array([float(v) for v in spec[len("diagonal:"):].split(",")])
        if vals.shape != (p,):
            raise InvalidInputError(f"diagonal covariance needs {p} entries, got {vals.shape[0]}")
        return np.diag(vals)
    if spec.startswith("file:"):
        mat = read_matrix_csv(spec[len("file:"):])
        if mat.shape != (p, p):
            raise InvalidInputError(f"covariance file must be {p}x{p}, got {mat.shape}")
        return mat
    if spec.startswith("deflated:"):
        if delta_mu is None:
            raise InvalidInputError("deflated covariance needs the mean difference")
        return rank_one_deflated_sigma(delta_mu, float(spec[len("deflated:"):]))
    raise InvalidInputError(
        f"unknown covariance spec {spec!r}; use identity, diagonal:<csv>, file:<csv>, or deflated:<c>"
    )


def scenario_params(conf: Dict[str, str]) -> Tuple[MixtureParams, int]:
    """Build mixture parameters and sample size from a scenario config dict.

    Required keys: nu, p, n, s, amplitude.  Optional: sigma (default identity).
    The mean difference spreads the amplitude over the first s coordinates and
    mu0 is zero.
    """
    try:
        nu = float(conf["nu"])
        p = int(conf["p"])
        n = int(conf["n"])
        s = int(conf["s"])
        amplitude = float(conf["amplitude"])
    except KeyError as exc:
        raise InvalidInputError(f"scenario config is missing key {exc.args[0]!r}") from exc
    dmu = paper_delta_mu(p, s, amplitude)
    sigma = build_sigma(conf.get("sigma", "identity"), p, dmu)
    theta = MixtureParams(nu=nu, mu0=np.zeros(p), mu1=dmu, sigma=sigma, s=s)
    return theta, n
