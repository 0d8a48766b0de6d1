"""Finite-N estimation beyond exact enumeration.

Three layers: Markov-chain sampling of a frozen disorder's Gibbs measure
(heat-bath or Metropolis), disorder-averaged replica-product moments under
the annealed product measure, and the finite-N decay test for the
replica-overlap identities driven by the delta_N-scaled perturbation
Hamiltonian.

For N <= 16 the inner Gibbs averages are evaluated from the exact
enumeration table; spin chains only enter above that, or when explicitly
requested. Per-replica spin products reduce to magnetization and
pair-correlation tables (sigma^2 = 1 collapses even multiplicities), which
gives noise-free inner values for the overlap identities at p = 1: with
m_i = <sigma_i> and C_ij = <sigma_i sigma_j>,

    <R_12>      = N^-1  sum_i  m_i^2
    <R_12^2>    = N^-2  sum_ij C_ij^2
    <R_12 R_13> = N^-2  sum_ij C_ij m_i m_j.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .models import (ClauseSet, DilutedSpec, SKDisorder, _disorder_energy_table,
                     energy_diluted, energy_sk, enumerate_gibbs,
                     sample_diluted_disorder, sample_sk_disorder)
from .rng import make_rng, seed_derive
from .util import Estimate, enumerate_configs, jackknife_means, mean_se

__all__ = [
    "ChainConfig",
    "AnnealedMomentRequest",
    "mcmc_sample",
    "annealed_moments",
    "multioverlap_N",
    "gg_perturbation",
    "gg_finite_N",
    "gg_decay_flag",
]


@dataclass(frozen=True)
class ChainConfig:
    """Length and kernel of the spin chains.

    Defaults (1e3 burn-in sweeps, 1e3 retained samples at thinning 10) are
    heuristics for moderate coupling strength, with no mixing-time guarantee.
    """

    sweeps: int = 11_000
    burn_in: int = 1_000
    thinning: int = 10
    n_replicas: int = 2
    kernel: str = "glauber"

    def __post_init__(self):
        if not 0 <= self.burn_in < self.sweeps:
            raise ValueError("need 0 <= burn_in < sweeps")
        if self.thinning < 1:
            raise ValueError("thinning >= 1")
        if self.n_replicas < 1:
            raise ValueError("n_replicas >= 1")
        if self.kernel not in ("glauber", "metropolis"):
            raise ValueError("kernel must be 'glauber' or 'metropolis'")

    @property
    def n_samples(self):
        return (self.sweeps - self.burn_in) // self.thinning


def _energy_fn(disorder):
    if isinstance(disorder, ClauseSet):
        return lambda S: energy_diluted(disorder, S)
    if isinstance(disorder, SKDisorder):
        return lambda S: energy_sk(disorder, S)
    raise TypeError("disorder must be ClauseSet or SKDisorder")


def mcmc_sample(disorder, N, chain=None, seed=0):
    """Replica spin chains targeting exp(-H_N)/Z_N of a frozen disorder.

    Returns an (n_replicas, n_samples, N) array of -1/+1 spins. All replicas
    advance in lockstep (vectorized over chains) but use independent
    randomness, so the retained samples are independent across replicas.
    """
    if N > 64:
        raise ValueError("N <= 64")
    chain = chain or ChainConfig()
    rng = make_rng(seed, "mcmc")
    energy = _energy_fn(disorder)
    R = chain.n_replicas
    S = (rng.integers(0, 2, size=(R, N)) * 2 - 1).astype(np.int8)
    e_cur = np.asarray(energy(S), dtype=float)
    out = np.empty((R, chain.n_samples, N), dtype=np.int8)
    kept = 0
    for sweep in range(chain.sweeps):
        if chain.kernel == "glauber":
            sites = range(N)
        else:
            sites = rng.integers(0, N, size=N)
        for i in sites:
            S[:, i] *= -1
            e_flip = np.asarray(energy(S), dtype=float)
            if chain.kernel == "glauber":
                plus_is_flip = S[:, i] == 1
                e_plus = np.where(plus_is_flip, e_flip, e_cur)
                e_minus = np.where(plus_is_flip, e_cur, e_flip)
                d = np.clip(e_plus - e_minus, -700.0, 700.0)
                take_plus = rng.random(R) < 1.0 / (1.0 + np.exp(-d))
                S[:, i] = np.where(take_plus, 1, -1)
                e_cur = np.where(take_plus, e_plus, e_minus)
            else:
                acc = np.log(rng.random(R)) < e_flip - e_cur
                S[~acc, i] *= -1
                e_cur = np.where(acc, e_flip, e_cur)
        if sweep >= chain.burn_in and (sweep - chain.burn_in) % chain.thinning == 0:
            if kept < chain.n_samples:
                out[:, kept] = S
                kept += 1
    return out


@dataclass(frozen=True)
class AnnealedMomentRequest:
    """A finite product E < prod sigma_{site}^{replica} >, sites and replica
    labels 1-based."""

    pattern: tuple

    def __post_init__(self):
        pat = tuple((int(i), int(l)) for i, l in self.pattern)
        if not pat:
            raise ValueError("pattern must be nonempty")
        if any(i < 1 or l < 1 for i, l in pat):
            raise ValueError("sites and replica labels are 1-based")
        object.__setattr__(self, "pattern", pat)

    @property
    def n_replicas(self):
        return max(l for _, l in self.pattern)

    def sites_of(self, l):
        """Sites read by replica l, with even multiplicities cancelled."""
        out = {}
        for i, ll in self.pattern:
            if ll == l:
                out[i] = out.get(i, 0) + 1
        return sorted(i for i, c in out.items() if c % 2)


def _sample_disorder(spec, N, seed):
    if isinstance(spec, DilutedSpec):
        return sample_diluted_disorder(spec, N, seed)
    return sample_sk_disorder(spec, N, seed)


def annealed_moments(spec, N, request, n_disorder=64, seed=0, method="auto",
                     chain=None):
    """Disorder average of a replica spin product under the product Gibbs
    measure. Enumeration when N <= 16 (method='auto'), chains otherwise."""
    if not isinstance(request, AnnealedMomentRequest):
        request = AnnealedMomentRequest(tuple(request))
    if max(i for i, _ in request.pattern) > N:
        raise ValueError("pattern site exceeds N")
    if method == "auto":
        method = "enumerate" if N <= 16 else "chain"
    vals = np.empty(n_disorder)
    if method == "enumerate":
        configs = enumerate_configs(N)
        for j in range(n_disorder):
            e = _disorder_energy_table(spec, N, seed_derive(seed, ("am", j)))
            uniform = np.all(e == e[0])
            probs = None if uniform else enumerate_gibbs(e, N).probabilities
            val = 1.0
            for l in range(1, request.n_replicas + 1):
                sites = request.sites_of(l)
                if not sites:
                    continue
                v = configs[:, np.asarray(sites) - 1].prod(axis=1)
                val *= v.mean() if uniform else float(probs @ v)
            vals[j] = val
    elif method == "chain":
        chain = chain or ChainConfig()
        if chain.n_replicas < request.n_replicas:
            chain = replace(chain, n_replicas=request.n_replicas)
        for j in range(n_disorder):
            dis = _sample_disorder(spec, N, seed_derive(seed, ("am-dis", j)))
            samples = mcmc_sample(dis, N, chain, seed_derive(seed, ("am-ch", j)))
            val = 1.0
            for l in range(1, request.n_replicas + 1):
                sites = request.sites_of(l)
                if not sites:
                    continue
                v = samples[l - 1][:, np.asarray(sites) - 1].prod(axis=1)
                val *= float(v.mean())
            vals[j] = val
    else:
        raise ValueError("method must be 'auto', 'enumerate', or 'chain'")
    return mean_se(vals)


def multioverlap_N(spec, N, pattern, n_disorder=64, seed=0, power=1,
                   chain=None):
    """E <(N^-1 sum_i prod_j sigma_i^{l_j})^power> over replicas and disorder.

    pattern is the tuple of replica labels (l_1..l_n); repeated labels cancel
    pairwise since sigma^2 = 1. Enumeration when N <= 16 and no chain is
    forced; there power is limited to 1 or 2 (magnetization resp.
    pair-correlation tables).
    """
    labels = tuple(int(l) for l in pattern)
    if not labels or any(l < 1 for l in labels):
        raise ValueError("pattern must be nonempty 1-based replica labels")
    counts = {}
    for l in labels:
        counts[l] = counts.get(l, 0) + 1
    k = sum(1 for c in counts.values() if c % 2)
    vals = np.empty(n_disorder)
    if N <= 16 and chain is None:
        if power not in (1, 2):
            raise ValueError("enumeration path supports power 1 or 2")
        configs = enumerate_configs(N)
        for j in range(n_disorder):
            e = _disorder_energy_table(spec, N, seed_derive(seed, ("mo", j)))
            if np.all(e == e[0]):
                if power == 1:
                    vals[j] = 1.0 if k == 0 else 0.0
                else:
                    vals[j] = 1.0 if k == 0 else 1.0 / N
                continue
            probs = enumerate_gibbs(e, N).probabilities
            if power == 1:
                m = probs @ configs
                vals[j] = float(np.mean(m**k))
            else:
                C = (configs * probs[:, None]).T @ configs
                vals[j] = float(np.mean(C**k))
    else:
        chain = chain or ChainConfig()
        need = max(labels)
        if chain.n_replicas < need:
            chain = replace(chain, n_replicas=need)
        odd = [l for l, c in counts.items() if c % 2]
        for j in range(n_disorder):
            dis = _sample_disorder(spec, N, seed_derive(seed, ("mo-dis", j)))
            samples = mcmc_sample(dis, N, chain, seed_derive(seed, ("mo-ch", j)))
            prod = np.ones((chain.n_samples, N))
            for l in odd:
                prod = prod * samples[l - 1]
            r = prod.mean(axis=1)
            vals[j] = float(np.mean(r**power))
    return mean_se(vals)


def gg_perturbation(seed=0, p_max=3, exponent=1.0 / 16):
    """One admissible draw of the perturbation couplings: beta_p uniform on
    [-2^-p, 2^-p] for p = 1..p_max, with the delta_N = N^-exponent scale."""
    rng = make_rng(seed, "gg-pert")
    betas = tuple((p, float(rng.uniform(-(2.0**-p), 2.0**-p)))
                  for p in range(1, p_max + 1))
    return {"betas": betas, "exponent": float(exponent)}


def _gibbs_moment_tables(spec, N, seed, configs):
    e = _disorder_energy_table(spec, N, seed)
    if np.all(e == e[0]):
        m = np.zeros(N)
        C = np.eye(N)
        probs = np.full(configs.shape[0], 1.0 / configs.shape[0])
        return m, C, probs
    probs = enumerate_gibbs(e, N).probabilities
    m = probs @ configs
    C = (configs * probs[:, None]).T @ configs
    return m, C, probs


def gg_finite_N(spec, N_list, p=1, n=2, F=None, mc=(64, 512), seed=0):
    """Residual of the overlap identity

        E<F R_{1,n+1}^p> - (1/n) E<F> E<R_12^p> - (1/n) sum_{l=2..n} E<F R_{1l}^p>

    at each N in N_list, for F a function of the n-replica overlap matrix.
    F=None selects F = R_12 and, when p = 1, evaluates all inner averages
    exactly from magnetization and pair-correlation tables; callables go
    through replica sampling (from the enumeration table at N <= 16, chains
    above). Returns a list of (N, Estimate) pairs.
    """
    if n < 2 and F is None:
        raise ValueError("default F = R_12 needs n >= 2")
    n_dis, inner = mc if isinstance(mc, (tuple, list)) else (int(mc), 512)
    results = []
    for N in N_list:
        s = seed_derive(seed, ("ggN", N))
        if F is None and p == 1:
            est = _gg_exact_r12(spec, N, n, n_dis, s)
        else:
            fn = (lambda Q: Q[0, 1]) if F is None else F
            est = _gg_sampled(spec, N, p, n, fn, n_dis, inner, s)
        results.append((N, est))
    return results


def _gg_exact_r12(spec, N, n, n_dis, seed):
    configs = enumerate_configs(N)
    cols = np.empty((n_dis, 3))
    for j in range(n_dis):
        m, C, _ = _gibbs_moment_tables(spec, N, seed_derive(seed, (j,)), configs)
        cols[j, 0] = (m @ C @ m) / N**2        # <R_12 R_13>
        cols[j, 1] = float(np.mean(m**2))      # <R_12>
        cols[j, 2] = float(np.mean(C**2))      # <R_12^2>
    def resid(c):
        return (2.0 / n) * c[0] - c[1] ** 2 / n - c[2] / n
    return jackknife_means(cols, resid)


def _gg_sampled(spec, N, p, n, F, n_dis, inner, seed):
    configs = enumerate_configs(N) if N <= 16 else None
    groups = inner // (n + 1)
    if groups < 8:
        raise ValueError("inner too small for the replica group size")
    cols = np.empty((n_dis, 3 + (n - 1)))
    for j in range(n_dis):
        sj = seed_derive(seed, (j,))
        rng = make_rng(sj, "gg-rep")
        if configs is not None:
            _, _, probs = _gibbs_moment_tables(spec, N, sj, configs)
            idx = rng.choice(configs.shape[0], size=groups * (n + 1), p=probs)
            S = configs[idx].reshape(groups, n + 1, N)
        else:
            dis = _sample_disorder(spec, N, seed_derive(sj, ("dis",)))
            chain = ChainConfig(sweeps=1_000 + 10 * groups, burn_in=1_000,
                                thinning=10, n_replicas=n + 1)
            S = np.swapaxes(mcmc_sample(dis, N, chain, sj)[:, :groups], 0, 1)
        Q = np.einsum("gin,gjn->gij", S.astype(float), S.astype(float)) / N
        f_vals = np.array([float(F(Q[g, :n, :n])) for g in range(groups)])
        cols[j, 0] = np.mean(f_vals * Q[:, 0, n] ** p)
        cols[j, 1] = np.mean(f_vals)
        cols[j, 2] = np.mean(Q[:, 0, 1] ** p)
        for l in range(2, n + 1):
            cols[j, 2 + l - 1] = np.mean(f_vals * Q[:, 0, l - 1] ** p)
    def resid(c):
        return c[0] - c[1] * c[2] / n - c[3:].sum() / n
    return jackknife_means(cols, resid)


def gg_decay_flag(results, k=3.0):
    """True when the largest-N residual magnitude does not exceed the
    smallest-N one by more than k combined standard errors."""
    (n_lo, lo), (n_hi, hi) = min(results), max(results)
    tol = k * math.hypot(lo.se, hi.se)
    return abs(hi.value) <= abs(lo.value) + tol
