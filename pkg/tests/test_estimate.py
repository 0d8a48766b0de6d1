import numpy as np
import pytest

from spindist.estimate import (
    AnnealedMomentRequest,
    ChainConfig,
    annealed_moments,
    gg_decay_flag,
    gg_finite_N,
    mcmc_sample,
    multioverlap_N,
)
from spindist.models import (
    DilutedSpec,
    KSat,
    SKSpec,
    energy_sk,
    enumerate_gibbs,
    sample_sk_disorder,
)
from spindist.util import Estimate, enumerate_configs


def test_chain_config_validation():
    with pytest.raises(ValueError):
        ChainConfig(sweeps=100, burn_in=100)
    with pytest.raises(ValueError):
        ChainConfig(thinning=0)
    with pytest.raises(ValueError):
        ChainConfig(kernel="heatbath-ish")


def _chain_vs_exact(kernel, seed, n_replicas=6):
    """Pair correlation <sigma_1 sigma_2> from chains vs exact enumeration."""
    spec = SKSpec([(2, 0.6)])
    N = 6
    d = sample_sk_disorder(spec, N, seed=12)
    configs = enumerate_configs(N)
    table = enumerate_gibbs(energy_sk(d, configs), N)
    exact = table.probabilities @ (configs[:, 0] * configs[:, 1])
    chain = ChainConfig(sweeps=4000, burn_in=400, thinning=4,
                        n_replicas=n_replicas, kernel=kernel)
    samples = mcmc_sample(d, N, chain=chain, seed=seed)
    per_rep = (samples[:, :, 0] * samples[:, :, 1]).mean(axis=1)
    est = per_rep.mean()
    se = per_rep.std(ddof=1) / np.sqrt(n_replicas)
    return exact, est, se


@pytest.mark.parametrize("kernel,seed", [("glauber", 3), ("metropolis", 4)])
def test_mcmc_matches_enumeration(kernel, seed):
    exact, est, se = _chain_vs_exact(kernel, seed)
    assert abs(est - exact) < 5 * se + 0.01


def test_mcmc_is_reproducible():
    spec = SKSpec([(2, 0.6)])
    d = sample_sk_disorder(spec, 5, seed=1)
    chain = ChainConfig(sweeps=200, burn_in=50, thinning=5)
    a = mcmc_sample(d, 5, chain=chain, seed=7)
    b = mcmc_sample(d, 5, chain=chain, seed=7)
    assert np.array_equal(a, b)


def test_annealed_moments_exact_degeneracies():
    spec = DilutedSpec(p=2, alpha=0.0, theta=KSat(2, 1.0))
    odd = annealed_moments(spec, 6, ((1, 1), (2, 1)), n_disorder=4, seed=0)
    assert odd.value == 0.0 and odd.se == 0.0
    # even site multiplicity cancels regardless of the disorder
    busy = DilutedSpec(p=2, alpha=0.5, theta=KSat(2, 1.0))
    sq = annealed_moments(busy, 6, ((1, 1), (1, 1)), n_disorder=4, seed=0)
    assert sq.value == 1.0 and sq.se == 0.0


def test_annealed_moments_rejects_sites_beyond_n():
    spec = DilutedSpec(p=2, alpha=0.5, theta=KSat(2, 1.0))
    with pytest.raises(ValueError):
        annealed_moments(spec, 4, ((5, 1),), n_disorder=2)


def test_multioverlap_on_the_flat_measure():
    flat = SKSpec([(2, 0.0)])
    same = multioverlap_N(flat, 8, (1, 1), n_disorder=3, seed=0)
    assert same.value == 1.0 and same.se == 0.0
    odd = multioverlap_N(flat, 8, (1, 2), n_disorder=3, seed=0)
    assert odd.value == 0.0 and odd.se == 0.0
    sq = multioverlap_N(flat, 8, (1, 2), n_disorder=3, seed=0, power=2)
    assert sq.value == 1.0 / 8 and sq.se == 0.0


def test_multioverlap_pattern_validation():
    flat = SKSpec([(2, 0.0)])
    with pytest.raises(ValueError):
        multioverlap_N(flat, 8, (), n_disorder=2)
    with pytest.raises(ValueError):
        multioverlap_N(flat, 8, (0, 1), n_disorder=2)
    with pytest.raises(ValueError):
        multioverlap_N(flat, 8, (1, 2), n_disorder=2, power=3)


def test_gg_residual_of_the_flat_measure_is_minus_half_over_n():
    # F = R_12, p = 1, n = 2: the exact tables give -1/(2N) per disorder draw
    flat = SKSpec([(2, 0.0)])
    (N, est), = gg_finite_N(flat, [8], p=1, n=2, F=None, mc=(4, 64), seed=0)
    assert N == 8
    assert np.isclose(est.value, -1.0 / 16, atol=1e-12)
    assert est.se < 1e-14


def test_gg_decay_flag():
    shrinking = [(8, Estimate(-0.06, 0.001)), (16, Estimate(-0.03, 0.001))]
    growing = [(8, Estimate(-0.01, 0.001)), (16, Estimate(-0.05, 0.001))]
    assert gg_decay_flag(shrinking)
    assert not gg_decay_flag(growing)
