"""Cavity-field sampling and the free-energy functionals P and P_n.

Diluted family: P(mu) = log 2 + E log E' Av_eps exp A(eps) - E log E' exp B,
with A(eps) a Poisson(p*alpha) sum of clause terms theta(eps, s_1..s_{p-1})
and B a Poisson((p-1)*alpha) sum of theta(s_1..s_p); the s-spins are +-1
with means sigma_bar(w, u, v) at fresh sites v. The spin randomness x is
integrated out analytically per clause: exp theta is affine in each f_l, so
E_x exp theta = a (1 + b * prod_l fbar_l) with fbar the sigma_bar-weighted
slot average. The inner E' is a plain average over sampled u-replicas,
log-of-mean bias removed by delete-one jackknife, and the inner-size bias is
surfaced as the full-vs-half inner-sample delta.

SK family: P(mu) = log 2 + E log E' ch G_xi' - E log E' exp G_theta, the
Gaussian fields realized jointly over the inner replicas from the overlap
matrix (covariance xi'(Q) resp. theta(Q)) plus independent per-replica
completions bringing the variance to xi'(1) resp. theta(1).
"""

import math

import numpy as np

from .rng import make_rng, seed_derive
from .util import Estimate, chol_psd, log_mean_exp, log_mean_exp_jackknife, mean_se

__all__ = [
    "eval_P_diluted",
    "eval_P_sk",
    "eval_Pn_diluted",
    "eval_Pn_sk",
    "plast_check",
    "gxi_variance_probe",
]


def _slot_average(fvals, means):
    """fbar = ((1-m) f(-1) + (1+m) f(+1)) / 2 per clause slot.

    fvals: (n_terms, n_slots, 2); means: (K, n_terms, n_slots).
    Returns (K, n_terms) products over the slot axis.
    """
    fbar = ((1 - means) * fvals[None, :, :, 0] + (1 + means) * fvals[None, :, :, 1]) / 2
    return fbar.prod(axis=2)


def _cavity_A(sigma, world, reps, batch, sites):
    """log Av_eps exp A(eps) per inner replica, x integrated analytically.

    batch: ThetaBatch with slot 0 reserved for eps; sites: flat list of
    len(batch)*(p-1) fresh sites, one per remaining slot.
    """
    K = len(reps)
    n = len(batch)
    if n == 0:
        return np.zeros(K)
    p = batch.p
    means = sigma.mean_matrix(world, reps, sites).reshape(K, n, p - 1)
    prod = _slot_average(batch.fvals[:, 1:, :], means)  # (K, n)
    base = batch.log_a.sum()
    s_plus = base + np.log1p(batch.b * batch.fvals[:, 0, 1] * prod).sum(axis=1)
    s_minus = base + np.log1p(batch.b * batch.fvals[:, 0, 0] * prod).sum(axis=1)
    hi = np.maximum(s_plus, s_minus)
    return hi + np.log(0.5 * (np.exp(s_plus - hi) + np.exp(s_minus - hi)))


def _cavity_B(sigma, world, reps, batch, sites):
    """B = sum of theta(s_1..s_p) per inner replica, x integrated."""
    K = len(reps)
    n = len(batch)
    if n == 0:
        return np.zeros(K)
    p = batch.p
    means = sigma.mean_matrix(world, reps, sites).reshape(K, n, p)
    prod = _slot_average(batch.fvals, means)
    return batch.log_a.sum() + np.log1p(batch.b * prod).sum(axis=1)


def _check_finite(batch):
    if len(batch) and not (
        np.all(np.isfinite(batch.log_a)) and np.all(np.isfinite(batch.fvals))
    ):
        raise ValueError("non-finite theta draw")


def _pn_diluted(sigma, spec, n, outer, inner, seed):
    if inner < 100:
        raise ValueError("inner >= 100 required (ratio-bias guard)")
    if n < 1:
        raise ValueError("n >= 1")
    p = spec.p
    half = inner // 2
    diffs = np.empty(outer)
    half_diffs = np.empty(outer)
    for j in range(outer):
        rng = make_rng(seed, "pn-diluted", j)
        world = sigma.draw_world(seed=seed_derive(seed, ("pnd-world", j)))
        counts_a = rng.poisson(p * spec.alpha, size=n)
        counts_b = rng.poisson((p - 1) * spec.alpha, size=n)
        sets_a, sets_b = [], []
        for i in range(n):
            batch = spec.theta.sample(rng, counts_a[i])
            _check_finite(batch)
            sets_a.append((batch, [sigma.draw_site(world, rng)
                                   for _ in range(counts_a[i] * (p - 1))]))
            batch = spec.theta.sample(rng, counts_b[i])
            _check_finite(batch)
            sets_b.append((batch, [sigma.draw_site(world, rng)
                                   for _ in range(counts_b[i] * p)]))
        reps = sigma.draw_replicas(world, rng, inner)
        log_av = np.zeros(inner)
        log_b = np.zeros(inner)
        for batch, sites in sets_a:
            log_av += _cavity_A(sigma, world, reps, batch, sites)
        for batch, sites in sets_b:
            log_b += _cavity_B(sigma, world, reps, batch, sites)
        t1 = log_mean_exp_jackknife(log_av)
        t2 = log_mean_exp_jackknife(log_b)
        diffs[j] = (t1.value - t2.value) / n
        half_diffs[j] = (log_mean_exp(log_av[:half]) - log_mean_exp(log_b[:half])) / n
    est = mean_se(diffs)
    return Estimate(math.log(2) + est.value, est.se, outer,
                    bias=float(np.mean(diffs - half_diffs)))


def eval_P_diluted(sigma, spec, outer=400, inner=400, seed=0):
    """Monte Carlo value of the diluted free-energy functional P(mu)."""
    return _pn_diluted(sigma, spec, 1, outer, inner, seed)


def eval_Pn_diluted(sigma, spec, n, mc=(400, 400), seed=0):
    """P_n(mu): n cavity coordinates sharing the same inner u per draw."""
    outer, inner = (mc, 400) if isinstance(mc, int) else mc
    return _pn_diluted(sigma, spec, n, outer, inner, seed)


def plast_check(sigma, spec, mc=(400, 400), seed=0):
    """Residual E log E' exp B - (p-1) alpha E log E' exp theta(s_1..s_p).

    Zero (up to MC error) when mu is invariant; reported as a diagnostic
    otherwise.
    """
    outer, inner = (mc, 400) if isinstance(mc, int) else mc
    p = spec.p
    resid = np.empty(outer)
    for j in range(outer):
        rng = make_rng(seed, "plast", j)
        world = sigma.draw_world(seed=seed_derive(seed, ("plast-world", j)))
        n_b = rng.poisson((p - 1) * spec.alpha)
        batch_b = spec.theta.sample(rng, n_b)
        sites_b = [sigma.draw_site(world, rng) for _ in range(n_b * p)]
        batch_1 = spec.theta.sample(rng, 1)
        sites_1 = [sigma.draw_site(world, rng) for _ in range(p)]
        _check_finite(batch_b)
        _check_finite(batch_1)
        reps = sigma.draw_replicas(world, rng, inner)
        t_b = log_mean_exp_jackknife(_cavity_B(sigma, world, reps, batch_b, sites_b))
        t_1 = log_mean_exp_jackknife(_cavity_B(sigma, world, reps, batch_1, sites_1))
        resid[j] = t_b.value - (p - 1) * spec.alpha * t_1.value
    return mean_se(resid)


# ---------------------------------------------------------------------------
# SK family
# ---------------------------------------------------------------------------


def _sample_field_on_replicas(sk, q_matrix, rng, kind):
    """One realization of G_xi' (kind='xi') or G_theta (kind='theta') over the
    inner replicas: joint part from the overlap covariance plus an
    independent completion bringing each variance to xi'(1) resp. theta(1)."""
    fun = sk.xi_prime if kind == "xi" else sk.theta_fun
    top = float(fun(1.0))
    if top == 0.0:
        # degenerate family (all couplings off): the field vanishes a.s.
        return np.zeros(q_matrix.shape[0])
    cov = np.asarray(fun(q_matrix), dtype=float)
    comp = np.sqrt(np.maximum(top - np.diag(cov), 0.0))
    g = chol_psd(cov) @ rng.standard_normal(cov.shape[0])
    return g + comp * rng.standard_normal(cov.shape[0])


def _pn_sk(sigma, sk, n, outer, inner, seed):
    if inner < 100:
        raise ValueError("inner >= 100 required (ratio-bias guard)")
    if n < 1:
        raise ValueError("n >= 1")
    half = inner // 2
    diffs = np.empty(outer)
    half_diffs = np.empty(outer)
    for j in range(outer):
        rng = make_rng(seed, "pn-sk", j)
        world = sigma.draw_world(seed=seed_derive(seed, ("pns-world", j)))
        reps = sigma.draw_replicas(world, rng, inner)
        q_mat = sigma.overlap_matrix(world, reps)
        log_ch = np.zeros(inner)
        log_exp = np.zeros(inner)
        for _ in range(n):
            g = _sample_field_on_replicas(sk, q_mat, rng, "xi")
            log_ch += np.log(np.cosh(g))
            log_exp += _sample_field_on_replicas(sk, q_mat, rng, "theta")
        t1 = log_mean_exp_jackknife(log_ch)
        t2 = log_mean_exp_jackknife(log_exp)
        diffs[j] = (t1.value - t2.value) / n
        half_diffs[j] = (log_mean_exp(log_ch[:half]) - log_mean_exp(log_exp[:half])) / n
    est = mean_se(diffs)
    return Estimate(math.log(2) + est.value, est.se, outer,
                    bias=float(np.mean(diffs - half_diffs)))


def eval_P_sk(sigma, spec, outer=400, inner=400, seed=0):
    """Monte Carlo value of the SK free-energy functional P(mu)."""
    return _pn_sk(sigma, spec, 1, outer, inner, seed)


def eval_Pn_sk(sigma, spec, n, mc=(400, 400), seed=0):
    """P_n(mu) for SK: n iid field copies per (w, u), products over copies."""
    outer, inner = (mc, 400) if isinstance(mc, int) else mc
    return _pn_sk(sigma, spec, n, outer, inner, seed)


def gxi_variance_probe(sigma, sk, n_draws=200, inner=64, seed=0):
    """Sample variance of G_xi' values as drawn inside eval_P_sk.

    Should match xi'(1) for any sigma_bar (the completion pins the marginal
    variance by construction).
    """
    samples = np.empty((n_draws, inner))
    for j in range(n_draws):
        rng = make_rng(seed, "gxi-var", j)
        world = sigma.draw_world(seed=seed_derive(seed, ("gvp-world", j)))
        reps = sigma.draw_replicas(world, rng, inner)
        q_mat = sigma.overlap_matrix(world, reps)
        samples[j] = _sample_field_on_replicas(sk, q_mat, rng, "xi")
    per_draw = (samples**2).mean(axis=1)
    return mean_se(per_draw)
