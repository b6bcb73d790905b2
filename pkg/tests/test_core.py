import numpy as np
import pytest

from sparsemix import (
    Dataset,
    InvalidInputError,
    MixtureParams,
    SingularCovarianceError,
    StatValue,
    paper_delta_mu,
    sample_mixture,
    sample_moments,
    snr_report,
    standardize,
)
from sparsemix.core import sym_inv_sqrt, sym_sqrt
from sparsemix.datagen import Scenario

from conftest import random_spd


# ---------------------------------------------------------------------------
# sample_moments
# ---------------------------------------------------------------------------

def test_sample_moments_two_point():
    mean, cov = sample_moments(Dataset(np.array([[1.0, 0.0], [-1.0, 0.0]])))
    assert np.array_equal(mean, [0.0, 0.0])
    assert np.array_equal(cov, np.diag([1.0, 0.0]))


def test_sample_moments_identical_rows():
    _, cov = sample_moments(Dataset(np.full((5, 3), 2.5)))
    assert np.array_equal(cov, np.zeros((3, 3)))


def test_dataset_rejects_single_row():
    with pytest.raises(InvalidInputError):
        Dataset(np.ones((1, 3)))


def test_dataset_rejects_nonfinite():
    with pytest.raises(InvalidInputError):
        Dataset(np.array([[1.0, np.nan], [0.0, 1.0]]))


def test_sample_moments_matches_mixture_covariance():
    # Monte Carlo against the population covariance nu(1-nu) dmu dmu^T + I.
    p, n = 4, 10**5
    dmu = paper_delta_mu(p, 2, 1.5)
    theta = MixtureParams(nu=0.5, mu0=np.zeros(p), mu1=dmu, sigma=np.eye(p), s=2)
    d, _ = sample_mixture(Scenario(theta, n=n), seed=101)
    _, cov = sample_moments(d)
    target = 0.25 * np.outer(dmu, dmu) + np.eye(p)
    se = np.sqrt((np.outer(np.diag(target), np.diag(target)) + target**2) / n)
    assert np.all(np.abs(cov - target) < 5 * se)


def test_sample_moments_row_permutation_invariant(rng):
    x = rng.standard_normal((23, 4))
    mean1, cov1 = sample_moments(Dataset(x))
    perm = rng.permutation(23)
    mean2, cov2 = sample_moments(Dataset(x[perm]))
    assert np.array_equal(mean1, mean2)
    assert np.array_equal(cov1, cov2)


# ---------------------------------------------------------------------------
# standardize
# ---------------------------------------------------------------------------

def test_standardize_identity_is_noop(rng):
    x = rng.standard_normal((10, 3))
    out = standardize(Dataset(x), np.eye(3))
    assert np.allclose(out.data, x)


def test_standardize_diagonal_scaling():
    d = Dataset(np.array([[2.0, 3.0], [0.0, 0.0]]))
    out = standardize(d, np.diag([4.0, 1.0]))
    assert np.allclose(out.data[0], [1.0, 3.0])


def test_standardize_monte_carlo_whitens(rng):
    p, n = 4, 10**5
    sigma = random_spd(rng, p)
    x = rng.standard_normal((n, p)) @ sym_sqrt(sigma)
    _, cov = sample_moments(standardize(Dataset(x), sigma))
    se = np.sqrt((1.0 + np.eye(p)) / n)
    assert np.all(np.abs(cov - np.eye(p)) < 5 * se)


def test_standardize_roundtrip(rng):
    p = 5
    sigma = random_spd(rng, p)
    x = rng.standard_normal((20, p))
    back = standardize(Dataset(x), sigma).data @ sym_sqrt(sigma)
    assert np.max(np.abs(back - x)) < 1e-8 * np.max(np.abs(x))


def test_standardize_singular_sigma_errors():
    with pytest.raises(SingularCovarianceError):
        standardize(Dataset(np.ones((3, 2))), np.diag([1.0, 0.0]))


def test_sym_inv_sqrt_diagonal_fast_path_matches_dense(rng):
    d = np.diag(rng.uniform(0.5, 3.0, size=4))
    dense = d + 0.0
    dense[0, 1] = dense[1, 0] = 1e-30  # force the eigendecomposition path
    assert np.allclose(sym_inv_sqrt(d), sym_inv_sqrt(dense), atol=1e-12)


# ---------------------------------------------------------------------------
# MixtureParams / StatValue invariants
# ---------------------------------------------------------------------------

def test_params_reject_bad_nu():
    with pytest.raises(InvalidInputError):
        MixtureParams(nu=1.0, mu0=np.zeros(2), mu1=np.zeros(2), sigma=np.eye(2), s=1)


def test_params_reject_asymmetric_sigma():
    sigma = np.array([[1.0, 0.1], [0.0, 1.0]])
    with pytest.raises(InvalidInputError):
        MixtureParams(nu=0.5, mu0=np.zeros(2), mu1=np.zeros(2), sigma=sigma, s=1)


def test_params_reject_oversparse_delta():
    with pytest.raises(InvalidInputError):
        MixtureParams(nu=0.5, mu0=np.zeros(3), mu1=np.ones(3), sigma=np.eye(3), s=2)


def test_params_reject_indefinite_sigma():
    sigma = np.diag([1.0, -0.5])
    with pytest.raises(InvalidInputError):
        MixtureParams(nu=0.5, mu0=np.zeros(2), mu1=np.zeros(2), sigma=sigma, s=1)


def test_stat_value_checks_direction_norm():
    with pytest.raises(InvalidInputError):
        StatValue(stat_id="x", value=1.0, rejection_side="upper", direction=np.array([1.0, 1.0]))
    with pytest.raises(InvalidInputError):
        StatValue(stat_id="x", value=np.inf, rejection_side="upper")


# ---------------------------------------------------------------------------
# snr_report
# ---------------------------------------------------------------------------

def test_snr_isotropic_equal_entries():
    p = 4
    dmu = np.array([1.0, 1.0, 0.0, 0.0]) / np.sqrt(2.0)
    theta = MixtureParams(nu=0.5, mu0=np.zeros(p), mu1=dmu, sigma=np.eye(p), s=2)
    rep = snr_report(theta, n=100)
    assert rep.r0 == pytest.approx(1.0)
    assert rep.r1 == pytest.approx(1.0)
    assert rep.kappa == pytest.approx(1.0 / np.sqrt(2.0))
    assert rep.dyn_range == pytest.approx(1.0)
    assert rep.zeta == pytest.approx((2 / 100) * np.log(np.e * p / 2))


def test_snr_identity_riesz_is_one():
    for s in (1, 2, 3):
        theta = MixtureParams(nu=0.3, mu0=np.zeros(5), mu1=np.zeros(5), sigma=np.eye(5), s=s)
        assert snr_report(theta, n=50).riesz_2s == pytest.approx(1.0)


def test_snr_riesz_enumeration():
    theta = MixtureParams(
        nu=0.5, mu0=np.zeros(3), mu1=np.array([1.0, 0, 0]), sigma=np.diag([2.0, 1.0, 1.0]), s=1
    )
    assert snr_report(theta, n=10).riesz_2s == pytest.approx(2.0)


def test_snr_riesz_absent_beyond_cap():
    theta = MixtureParams(nu=0.5, mu0=np.zeros(30), mu1=np.zeros(30), sigma=np.eye(30), s=8)
    assert snr_report(theta, n=10, riesz_cap=10).riesz_2s is None


def test_snr_zero_delta_has_no_dyn_range():
    theta = MixtureParams(nu=0.5, mu0=np.zeros(3), mu1=np.zeros(3), sigma=np.eye(3), s=1)
    rep = snr_report(theta, n=10)
    assert rep.dyn_range is None
    assert rep.r0 == 0.0 and rep.r1 == 0.0


def test_snr_singular_sigma_drops_r0_kappa():
    sigma = np.diag([1.0, 0.0])
    theta = MixtureParams(nu=0.5, mu0=np.zeros(2), mu1=np.array([1.0, 0.0]), sigma=sigma, s=1)
    rep = snr_report(theta, n=10)
    assert rep.r0 is None and rep.kappa is None
    assert rep.r1 == pytest.approx(1.0)  # ||dmu||^4 / dmu' sigma dmu = 1/1


def test_snr_cauchy_schwarz_r1_le_r0(rng):
    # r1 <= r0 always, with equality for isotropic covariances.
    for _ in range(100):
        p = int(rng.integers(2, 11))
        s = int(rng.integers(1, p + 1))
        dmu = np.zeros(p)
        sup = rng.choice(p, size=s, replace=False)
        dmu[sup] = rng.standard_normal(s)
        sigma = random_spd(rng, p)
        theta = MixtureParams(nu=0.5, mu0=np.zeros(p), mu1=dmu, sigma=sigma, s=s)
        rep = snr_report(theta, n=50)
        assert rep.r1 <= rep.r0 * (1 + 1e-10) + 1e-12
    c = 2.7
    dmu = np.array([0.3, -1.2, 0.0])
    theta = MixtureParams(nu=0.5, mu0=np.zeros(3), mu1=dmu, sigma=c * np.eye(3), s=2)
    rep = snr_report(theta, n=50)
    assert rep.r1 == pytest.approx(rep.r0)
