"""Maximization of objectives over s-sparse unit directions.

The engine enumerates supports exhaustively (erroring loudly past a cap) and
solves a continuous problem per support: exact eigendecompositions for
quadratic and generalized-quadratic objectives, projected-gradient ascent on
the sphere for smooth ones.  Tie-breaking is fixed (lexicographically smallest
support first, first nonzero coordinate of the direction made positive where
the objective is sign-invariant) so that runs are reproducible.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Iterator, List, Sequence, Tuple

import numpy as np
import scipy.linalg

from .datagen import stream_rng
from .errors import EnumerationCapError, InvalidInputError, SingularCovarianceError

_INIT_STEP = 0.5
_STEP_GROW = 1.25
_STEP_SHRINK = 0.5
_STEP_FLOOR = 1e-14


@dataclass(frozen=True)
class SearchConfig:
    """Knobs for the sparse-direction search.

    ``restarts`` and the ascent tolerances only matter for smooth (non-quadratic)
    objectives; quadratic searches are exact per support.  ``restart_seed``
    fixes the random starts so results are reproducible.
    """

    enumeration_cap: int = 200_000
    restarts: int = 8
    grad_tol: float = 1e-8
    max_iter: int = 500
    restart_seed: int = 0

    def __post_init__(self):
        if self.restarts < 1:
            raise InvalidInputError(f"restarts must be >= 1, got {self.restarts}")
        if self.enumeration_cap < 1:
            raise InvalidInputError(f"enumeration_cap must be >= 1, got {self.enumeration_cap}")


DEFAULT_CONFIG = SearchConfig()


def enumerate_supports(p: int, s: int, cap: int = DEFAULT_CONFIG.enumeration_cap) -> Iterator[Tuple[int, ...]]:
    """Yield all size-s index sets of {0, ..., p-1} in lexicographic order.

    Raises EnumerationCapError when there are more than ``cap`` supports;
    callers should then switch to coordinate-wise or relaxation statistics.
    """
    if not 1 <= s <= p:
        raise InvalidInputError(f"need 1 <= s <= p, got s={s}, p={p}")
    count = math.comb(p, s)
    if count > cap:
        raise EnumerationCapError(
            f"C({p},{s}) = {count} supports exceeds the enumeration cap {cap}; "
            "use a coordinate-wise statistic or the MDP relaxation instead"
        )
    return iter(combinations(range(p), s))


def _canonical_sign(u: np.ndarray) -> np.ndarray:
    """Flip u so its first nonzero coordinate is positive."""
    nz = np.nonzero(u)[0]
    if nz.size and u[nz[0]] < 0:
        return -u
    return u


def _embed(p: int, support: Sequence[int], w: np.ndarray) -> np.ndarray:
    u = np.zeros(p)
    u[list(support)] = w
    return u


def _pair_indices(p: int) -> Tuple[np.ndarray, np.ndarray]:
    # np.triu_indices enumerates pairs in the same lexicographic order as
    # itertools.combinations, which the tie-break relies on.
    return np.triu_indices(p, k=1)


def maximize_quadratic(m: np.ndarray, s: int, cfg: SearchConfig = DEFAULT_CONFIG):
    """Largest s-sparse eigenvalue of a symmetric matrix.

    Returns ``(value, u)`` where ``value = max_S lambda_max(M_SS)`` over all
    size-s supports and ``u`` is the maximizing eigenvector embedded in R^p.
    """
    m = np.asarray(m, dtype=float)
    p = m.shape[0]
    if m.shape != (p, p):
        raise InvalidInputError(f"matrix must be square, got {m.shape}")
    if math.comb(p, s) > cfg.enumeration_cap:
        # Reuse the enumeration error path (message included).
        list(enumerate_supports(p, s, cfg.enumeration_cap))

    if s == 1:
        diag = np.diagonal(m)
        j = int(np.argmax(diag))
        u = np.zeros(p)
        u[j] = 1.0
        return float(diag[j]), u

    if s == 2:
        jj, kk = _pair_indices(p)
        a, c, b = m[jj, jj], m[kk, kk], m[jj, kk]
        half_gap = (a - c) / 2.0
        lam = (a + c) / 2.0 + np.sqrt(half_gap**2 + b**2)
        i = int(np.argmax(lam))
        li, ai, bi, ci = lam[i], a[i], b[i], c[i]
        w = _top_eigvec_2x2(ai, bi, ci, li)
        u = _canonical_sign(_embed(p, (int(jj[i]), int(kk[i])), w))
        return float(li), u

    best_val, best_u = -np.inf, None
    for sup in enumerate_supports(p, s, cfg.enumeration_cap):
        idx = list(sup)
        evals, vecs = np.linalg.eigh(m[np.ix_(idx, idx)])
        if evals[-1] > best_val:
            best_val = float(evals[-1])
            best_u = _canonical_sign(_embed(p, sup, vecs[:, -1]))
    return best_val, best_u


def _top_eigvec_2x2(a: float, b: float, c: float, lam: float) -> np.ndarray:
    """Unit eigenvector of [[a, b], [b, c]] for eigenvalue lam."""
    v1 = np.array([b, lam - a])
    v2 = np.array([lam - c, b])
    v = v1 if v1 @ v1 >= v2 @ v2 else v2
    nrm = float(np.linalg.norm(v))
    if nrm == 0.0:  # matrix is lam * I on this support
        return np.array([1.0, 0.0])
    return v / nrm


def maximize_generalized(a: np.ndarray, b: np.ndarray, s: int, cfg: SearchConfig = DEFAULT_CONFIG):
    """Largest s-sparse generalized eigenvalue of the pencil (A, B).

    Per support S, maximizes ``w^T A_SS w`` subject to ``w^T B_SS w = 1``.
    Returns ``(value, w)`` with ``w`` the maximizer embedded in R^p and
    renormalized to unit Euclidean norm (the objective ratio is scale
    invariant).  Supports where B_SS is singular are skipped with a warning;
    if every support is singular an error is raised.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    p = a.shape[0]
    if a.shape != (p, p) or b.shape != (p, p):
        raise InvalidInputError("A and B must be square matrices of equal size")
    if math.comb(p, s) > cfg.enumeration_cap:
        list(enumerate_supports(p, s, cfg.enumeration_cap))

    skipped = 0
    if s == 1:
        da, db = np.diagonal(a).astype(float), np.diagonal(b).astype(float)
        vals = np.where(db > 0, da / np.where(db > 0, db, 1.0), -np.inf)
        skipped = int(np.count_nonzero(db <= 0))
        if not np.any(np.isfinite(vals)):
            raise SingularCovarianceError("constraint matrix singular on every support")
        j = int(np.argmax(vals))
        u = np.zeros(p)
        u[j] = 1.0
        _warn_skipped(skipped)
        return float(vals[j]), u

    if s == 2:
        jj, kk = _pair_indices(p)
        a11, a22, a12 = a[jj, jj], a[kk, kk], a[jj, kk]
        b11, b22, b12 = b[jj, jj], b[kk, kk], b[jj, kk]
        det_b = b11 * b22 - b12**2
        ok = (b11 > 0) & (det_b > 0)
        skipped = int(np.count_nonzero(~ok))
        beta = a11 * b22 + a22 * b11 - 2.0 * a12 * b12
        gamma = a11 * a22 - a12**2
        safe_det = np.where(ok, det_b, 1.0)
        disc = np.clip(beta**2 - 4.0 * safe_det * gamma, 0.0, None)
        lam = np.where(ok, (beta + np.sqrt(disc)) / (2.0 * safe_det), -np.inf)
        if not np.any(np.isfinite(lam)):
            raise SingularCovarianceError("constraint matrix singular on every support")
        i = int(np.argmax(lam))
        li = float(lam[i])
        # (A - lam B) w = 0; pick the better-conditioned row.
        r1 = np.array([-(a12[i] - li * b12[i]), a11[i] - li * b11[i]])
        r2 = np.array([a22[i] - li * b22[i], -(a12[i] - li * b12[i])])
        w = r1 if r1 @ r1 >= r2 @ r2 else r2
        nrm = float(np.linalg.norm(w))
        w = np.array([1.0, 0.0]) if nrm == 0.0 else w / nrm
        u = _canonical_sign(_embed(p, (int(jj[i]), int(kk[i])), w))
        _warn_skipped(skipped)
        return li, u

    best_val, best_u = -np.inf, None
    for sup in enumerate_supports(p, s, cfg.enumeration_cap):
        idx = list(sup)
        try:
            evals, vecs = scipy.linalg.eigh(a[np.ix_(idx, idx)], b[np.ix_(idx, idx)])
        except (scipy.linalg.LinAlgError, np.linalg.LinAlgError, ValueError):
            skipped += 1
            continue
        if evals[-1] > best_val:
            best_val = float(evals[-1])
            w = vecs[:, -1]
            best_u = _canonical_sign(_embed(p, sup, w / np.linalg.norm(w)))
    if best_u is None:
        raise SingularCovarianceError("constraint matrix singular on every support")
    _warn_skipped(skipped)
    return best_val, best_u


def _warn_skipped(skipped: int) -> None:
    if skipped:
        warnings.warn(
            f"skipped {skipped} support(s) with singular constraint submatrix",
            RuntimeWarning,
            stacklevel=3,
        )


# ---------------------------------------------------------------------------
# Smooth objectives
# ---------------------------------------------------------------------------

ValueAndGrad = Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray]]
"""Batched objective: maps a (p, m) matrix of unit columns to ((m,) values, (p, m) gradients)."""


def maximize_smooth(
    value_and_grad: ValueAndGrad,
    p: int,
    s: int,
    cfg: SearchConfig = DEFAULT_CONFIG,
    both_signs: bool = False,
):
    """Maximize a smooth sphere-restricted objective over s-sparse directions.

    Per support the engine runs projected-gradient ascent (gradient step then
    renormalization, with per-column backtracking) from ``cfg.restarts``
    random starts plus the best singleton direction of the support as a warm
    start.  With ``both_signs`` the negated starts are added as well, which
    makes the search cover +/-u for odd objectives.  For s = 1 the search is
    exact: every +/-e_j is evaluated directly.

    Starts where the objective is not finite are skipped; if every start is
    skipped an error is raised.  Returns ``(value, u)``.
    """
    singles = np.hstack([np.eye(p), -np.eye(p)])
    single_vals, _ = value_and_grad(singles)
    single_vals = np.where(np.isfinite(single_vals), single_vals, -np.inf)

    if s == 1:
        if not np.any(np.isfinite(single_vals)):
            raise InvalidInputError("objective is not finite at any coordinate direction")
        i = int(np.argmax(single_vals))
        return float(single_vals[i]), singles[:, i].copy()

    supports = list(enumerate_supports(p, s, cfg.enumeration_cap))
    n_sup = len(supports)
    # Best signed singleton per coordinate, used as the warm start.
    best_sign = np.where(single_vals[:p] >= single_vals[p:], 1.0, -1.0)
    best_single_val = np.maximum(single_vals[:p], single_vals[p:])

    rng = stream_rng(cfg.restart_seed)
    rand = rng.standard_normal((n_sup, cfg.restarts, s))

    starts_per_sup = 1 + cfg.restarts
    cols: List[np.ndarray] = []
    for si, sup in enumerate(supports):
        idx = list(sup)
        warm = np.zeros(p)
        j = idx[int(np.argmax(best_single_val[idx]))]
        warm[j] = best_sign[j]
        cols.append(warm)
        for r in range(cfg.restarts):
            w = rand[si, r]
            nrm = np.linalg.norm(w)
            w = w / nrm if nrm > 0 else np.eye(s)[0]
            cols.append(_embed(p, sup, w))
    u0 = np.column_stack(cols)
    if both_signs:
        u0 = np.hstack([u0, -u0])
    mask = (u0 != 0.0).astype(float)
    # A random start can have an exact zero coordinate; take the mask from the
    # support pattern instead to keep the full subspace reachable.
    bl = starts_per_sup
    for si, sup in enumerate(supports):
        mask[list(sup), si * bl : (si + 1) * bl] = 1.0
    if both_signs:
        mask[:, n_sup * bl :] = mask[:, : n_sup * bl]

    vals, u = _sphere_ascent(value_and_grad, u0, mask, cfg)
    if not np.any(np.isfinite(vals)):
        raise InvalidInputError("objective is not finite at any start")
    # First occurrence of the max keeps the lexicographically smallest support.
    i = int(np.argmax(vals))
    return float(vals[i]), u[:, i].copy()


def _sphere_ascent(value_and_grad: ValueAndGrad, u0: np.ndarray, mask: np.ndarray, cfg: SearchConfig):
    """Batched projected-gradient ascent on the unit sphere, one column per start."""
    u = u0.copy()
    m = u.shape[1]
    vals, grads = value_and_grad(u)
    alive = np.isfinite(vals)
    vals = np.where(alive, vals, -np.inf)
    step = np.full(m, _INIT_STEP)

    for _ in range(cfg.max_iter):
        g = grads * mask
        tang = g - (u * g).sum(axis=0) * u
        gnorm = np.linalg.norm(tang, axis=0)
        live = alive & (gnorm > cfg.grad_tol * np.maximum(1.0, np.abs(vals))) & (step > _STEP_FLOOR)
        if not live.any():
            break
        cand = u + step * tang
        nrm = np.linalg.norm(cand, axis=0)
        good = nrm > 0
        cand = np.where(good, cand / np.where(good, nrm, 1.0), u)
        cvals, cgrads = value_and_grad(cand)
        accept = live & good & (cvals > vals)  # NaN compares False
        if accept.any():
            u[:, accept] = cand[:, accept]
            vals[accept] = cvals[accept]
            grads[:, accept] = cgrads[:, accept]
            step[accept] *= _STEP_GROW
        reject = live & ~accept
        step[reject] *= _STEP_SHRINK
    return vals, u
