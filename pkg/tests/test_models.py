import math

import numpy as np
import pytest

from spindist.models import (
    ClauseSet,
    CustomTable,
    DilutedSpec,
    KSat,
    PSpin,
    SKSpec,
    energy_diluted,
    energy_sk,
    enumerate_gibbs,
    free_energy_quenched,
    sample_diluted_disorder,
    sample_sk_disorder,
    validate_theta,
)
from spindist.rng import make_rng

LOG2 = math.log(2.0)


@pytest.mark.parametrize("bad_p", [0, 1, 3, 5])
def test_theta_families_require_even_p(bad_p):
    with pytest.raises(ValueError):
        KSat(bad_p, 1.0)
    with pytest.raises(ValueError):
        PSpin(bad_p, 1.0)
    with pytest.raises(ValueError):
        CustomTable(bad_p, lambda rng: (0.0, 0.0, np.ones((bad_p, 2))))


def test_negative_beta_rejected():
    with pytest.raises(ValueError):
        KSat(2, -0.1)
    with pytest.raises(ValueError):
        PSpin(2, -1.0)


def test_validate_theta_ksat_exact_moments():
    """K-sat has constant b = exp(-beta)-1, so the checked moments are exact."""
    beta = 1.0
    rep = validate_theta(KSat(2, beta), n_max=3)
    assert rep["ok"]
    for n, est in enumerate(rep["moments"], start=1):
        assert est.se < 1e-15
        assert np.isclose(est.value, (1.0 - math.exp(-beta)) ** n, atol=1e-12)
    assert rep["max_abs_bf"] < 1.0


def test_validate_theta_flags_asymmetric_pspin():
    # J = +1 deterministically makes E(-b) = -tanh(beta) < 0
    rep = validate_theta(PSpin(2, 0.7, j_dist="plus"))
    assert not rep["ok"]


def _manual_theta(batch, spins):
    """theta = log_a + log1p(b * prod_l f_l(s_l)), straight off the batch."""
    s_idx = ((np.asarray(spins) + 1) // 2).astype(int)  # (n, p) in {0, 1}
    f = np.take_along_axis(batch.fvals, s_idx[..., None], axis=-1)[..., 0]
    return batch.log_a + np.log1p(batch.b * f.prod(axis=-1))


def test_energy_diluted_matches_manual_evaluation():
    rng = make_rng(0, "theta")
    batch = KSat(2, 1.3).sample(rng, 5)
    idx = np.array([[1, 3], [2, 4], [1, 1], [4, 2], [3, 3]])
    clauses = ClauseSet(N=4, idx=idx, thetas=batch, blocks=[])
    config = np.array([1, -1, -1, 1])
    want = _manual_theta(batch, config[idx - 1]).sum()
    assert np.isclose(energy_diluted(clauses, config), want, atol=1e-12)


def test_energy_diluted_batch_equals_loop():
    spec = DilutedSpec(p=2, alpha=0.7, theta=PSpin(2, 0.6))
    clauses = sample_diluted_disorder(spec, 6, seed=2)
    configs = make_rng(1, "cfg").choice([-1, 1], size=(9, 6))
    batch = energy_diluted(clauses, configs)
    singles = np.array([energy_diluted(clauses, c) for c in configs])
    assert np.allclose(batch, singles, atol=1e-12)


def test_energy_diluted_rejects_out_of_range_sites():
    rng = make_rng(0, "theta")
    batch = KSat(2, 1.0).sample(rng, 1)
    clauses = ClauseSet(N=3, idx=np.array([[1, 5]]), thetas=batch, blocks=[])
    with pytest.raises(IndexError):
        energy_diluted(clauses, np.ones(3))


def test_sample_diluted_disorder_is_reproducible():
    spec = DilutedSpec(p=2, alpha=1.1, theta=KSat(2, 0.9))
    a = sample_diluted_disorder(spec, 8, seed=5)
    b = sample_diluted_disorder(spec, 8, seed=5)
    assert np.array_equal(a.idx, b.idx)
    config = np.ones(8)
    assert energy_diluted(a, config) == energy_diluted(b, config)
    assert a.idx.min() >= 1 and a.idx.max() <= 8


def test_sk_spec_mixture_algebra():
    spec = SKSpec([(1, 0.3), (2, 0.5)])
    x = 0.7
    assert np.isclose(spec.xi(x), 0.09 * x + 0.25 * x * x, atol=1e-14)
    assert np.isclose(spec.xi_prime(x), 0.09 + 0.5 * x, atol=1e-14)
    assert np.isclose(
        spec.theta_fun(x), x * spec.xi_prime(x) - spec.xi(x), atol=1e-14
    )


def test_sk_spec_rejects_odd_p_above_one():
    with pytest.raises(ValueError):
        SKSpec([(3, 0.5)])
    SKSpec([(1, 0.5)])  # p = 1 is allowed


def test_energy_sk_covariance():
    """The disorder covariance of -H_N is N * xi(R_12)."""
    beta = 0.8
    spec = SKSpec([(2, beta)])
    N = 4
    sigma = np.ones(N)
    tau = np.array([1.0, 1.0, -1.0, -1.0])  # overlap 0 with sigma
    prods_0 = np.empty(6000)
    prods_1 = np.empty(6000)
    for j in range(prods_0.size):
        d = sample_sk_disorder(spec, N, seed=j)
        x = energy_sk(d, sigma)
        prods_0[j] = x * energy_sk(d, tau)
        prods_1[j] = x * x
    se0 = prods_0.std(ddof=1) / np.sqrt(prods_0.size)
    se1 = prods_1.std(ddof=1) / np.sqrt(prods_1.size)
    assert abs(prods_0.mean() - 0.0) < 4 * se0
    assert abs(prods_1.mean() - N * beta**2) < 4 * se1


def test_energy_sk_scale_override():
    spec = SKSpec([(2, 0.9)])
    d = sample_sk_disorder(spec, 8, seed=3)
    S = make_rng(2, "cfg").choice([-1, 1], size=(5, 8))
    base = energy_sk(d, S)
    assert np.allclose(energy_sk(d, S, scale_N=8), base, atol=1e-12)
    # pure 2-spin: the normalization is N^(-1/2)
    assert np.allclose(energy_sk(d, S, scale_N=16), base / np.sqrt(2.0), atol=1e-12)


def test_free_energy_trivial_cases_are_exact():
    dil = DilutedSpec(p=2, alpha=0.0, theta=KSat(2, 1.0))
    est = free_energy_quenched(dil, 6, n_disorder=4, seed=0)
    assert est.value == LOG2
    assert est.se == 0.0
    sk = SKSpec([(2, 0.0)])
    est = free_energy_quenched(sk, 5, n_disorder=4, seed=0)
    assert est.value == LOG2
    assert est.se == 0.0


def test_enumerate_gibbs_field_model():
    # -H = h * sigma_1: Z = 2^N * cosh(h), <sigma_1> = tanh(h)
    h = 0.8
    table = enumerate_gibbs(lambda S: h * S[:, 0], 3)
    assert np.isclose(table.log_Z, 3 * LOG2 + np.log(np.cosh(h)), atol=1e-12)
    assert np.isclose(table.probabilities.sum(), 1.0, atol=1e-12)
    from spindist.util import enumerate_configs

    configs = enumerate_configs(3)
    mag = table.probabilities @ configs[:, 0]
    assert np.isclose(mag, np.tanh(h), atol=1e-12)
