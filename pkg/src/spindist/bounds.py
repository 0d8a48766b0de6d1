"""Interpolation bounds and cavity-decomposition checks at finite N.

The upper bounds are the N-coordinate versions of the free-energy
functionals (P_N with one shared inner replica pool), compared against exact
enumeration of (1/N) E log Z_N. The lower-bound scheme computes the cavity
increment E log(Z_{N+1}/Z_N) from coupled disorder draws, and the
decomposition checks quantify the O(1/N) error of the idealized Poisson
split with means alpha(N-p+1), alpha p, alpha (p-1): the same clause
couplings are reused between the honest systems and the split systems so the
residuals are visible at small N.
"""

import math
from dataclasses import dataclass

import numpy as np

from .functional import _pn_diluted, _pn_sk
from .invariance import Residual, _batch_is_zero
from .models import (DilutedSpec, SKSpec, energy_sk, free_energy_quenched,
                     sample_sk_disorder)
from .rng import make_rng, seed_derive
from .util import Estimate, combine_se, enumerate_configs, mean_se

__all__ = [
    "BoundReport",
    "franz_leone_upper",
    "convexity_term",
    "guerra_upper_sk",
    "ass_lower",
    "cavity_decomposition_check",
]


@dataclass
class BoundReport:
    """Exact finite-N free energy vs an interpolation bound."""

    f_n: Estimate
    bound: Estimate
    digest: str = ""

    @property
    def slack(self):
        return self.bound.value - self.f_n.value

    @property
    def se(self):
        return combine_se(self.bound.se, self.f_n.se)

    def ok(self, k=3):
        """Bound validity flag: slack nonnegative up to k standard errors."""
        return self.slack >= -k * max(self.se, 1e-300)


def convexity_term(x, y, p):
    """x^p - p x y^{p-1} + (p-1) y^p, nonnegative for even p."""
    if p < 2 or p % 2:
        raise ValueError("p must be an even integer >= 2")
    return x**p - p * x * y ** (p - 1) + (p - 1) * y**p


def franz_leone_upper(sigma, spec, N, mc=(200, 400), seed=0, n_disorder=64):
    """Interpolation upper bound for a diluted model at size N.

    bound = log 2 + (1/N) E log E' Av_eps exp sum_i A_i(eps_i)
                  - (1/N) E log E' exp sum_i B_i, any sigma; holds above the
    exact quenched free energy.
    """
    if N > 16:
        raise ValueError("N <= 16 for exact enumeration")
    outer, inner = mc
    bound = _pn_diluted(sigma, spec, N, outer, inner,
                        seed_derive(seed, ("fl-bound",)))
    f_n = free_energy_quenched(spec, N, n_disorder,
                               seed_derive(seed, ("fl-exact",)))
    return BoundReport(f_n, bound, digest=f"franz-leone N={N} p={spec.p} "
                                          f"alpha={spec.alpha}")


def guerra_upper_sk(sigma, spec, N, mc=(200, 400), seed=0, n_disorder=64):
    """Guerra-style upper bound for the mixed p-spin model at size N."""
    if N > 14:
        raise ValueError("N <= 14 for exact enumeration")
    outer, inner = mc
    bound = _pn_sk(sigma, spec, N, outer, inner,
                   seed_derive(seed, ("gu-bound",)))
    f_n = free_energy_quenched(spec, N, n_disorder,
                               seed_derive(seed, ("gu-exact",)))
    return BoundReport(f_n, bound, digest=f"guerra N={N}")


# ---------------------------------------------------------------------------
# cavity lower-bound scheme
# ---------------------------------------------------------------------------


def _log_z_diluted(clause_batches, N, extra_eps=None):
    """log Z by enumeration: clauses given as (ThetaBatch, (n, p) site array)
    pairs; extra_eps adds a free cavity spin epsilon in slot 0 of its batch
    and sums it out."""
    configs = enumerate_configs(N)
    total = np.zeros(configs.shape[0])
    for batch, sites in clause_batches:
        if len(batch) == 0:
            continue
        spins = configs[:, np.asarray(sites) - 1]  # (2^N, n, p)
        total += batch.eval(spins).sum(axis=1)
    if extra_eps is not None:
        batch, sites = extra_eps
        if len(batch):
            spins = np.empty((configs.shape[0], len(batch), batch.p), dtype=np.int8)
            spins[:, :, 1:] = configs[:, np.asarray(sites) - 1]
            spins[:, :, 0] = 1
            e_plus = batch.eval(spins).sum(axis=1)
            spins[:, :, 0] = -1
            e_minus = batch.eval(spins).sum(axis=1)
            total += np.logaddexp(e_plus, e_minus)
        else:
            total += math.log(2)
    hi = total.max()
    return hi + math.log(np.exp(total - hi).sum())


def _draw_clauses(spec, rng, lam, N, slots):
    """One Poisson(lam) clause group: theta draws plus uniform site slots."""
    n = rng.poisson(lam)
    batch = spec.theta.sample(rng, n)
    sites = rng.integers(1, N + 1, size=(n, slots))
    return batch, sites


def ass_lower(spec, N, n_disorder=64, seed=0):
    """Paired-draw estimate of E log(Z_{N+1} / Z_N).

    Diluted: the N- and (N+1)-systems are coupled through the idealized
    Poisson split (shared group-1 clauses, cavity clauses of mean alpha p,
    correction clauses of mean alpha (p-1)). SK: one (N+1)-site tensor draw,
    the N-system reusing its {1..N}^p block under the N-normalization.
    """
    if isinstance(spec, DilutedSpec):
        if N + 1 > 16:
            raise ValueError("N + 1 <= 16 for exact enumeration")
        p = spec.p
        if N < p - 1:
            raise ValueError("N >= p - 1 required by the cavity split")
        vals = np.empty(n_disorder)
        for j in range(n_disorder):
            rng = make_rng(seed, "ass-dil", j)
            c0 = _draw_clauses(spec, rng, spec.alpha * (N - p + 1), N, p)
            c2 = _draw_clauses(spec, rng, spec.alpha * p, N, p - 1)
            c3 = _draw_clauses(spec, rng, spec.alpha * (p - 1), N, p)
            if all(_batch_is_zero(c[0]) for c in (c0, c2, c3)):
                vals[j] = math.log(2)
                continue
            log_z_up = _log_z_diluted([c0], N, extra_eps=c2)
            log_z_n = _log_z_diluted([c0, c3], N)
            vals[j] = log_z_up - log_z_n
        return mean_se(vals)
    if isinstance(spec, SKSpec):
        if N + 1 > 14:
            raise ValueError("N + 1 <= 14 for exact enumeration")
        vals = np.empty(n_disorder)
        configs_up = enumerate_configs(N + 1)
        configs_n = enumerate_configs(N)
        for j in range(n_disorder):
            dis = sample_sk_disorder(spec, N + 1, seed_derive(seed, ("ass-sk", j)))
            e_up = energy_sk(dis, configs_up)
            e_n = energy_sk(dis, np.hstack([configs_n,
                                            np.zeros((configs_n.shape[0], 1),
                                                     dtype=np.int8)]),
                            scale_N=N)
            vals[j] = _lse(e_up) - _lse(e_n)
        return mean_se(vals)
    raise TypeError("spec must be DilutedSpec or SKSpec")


def _lse(x):
    hi = x.max()
    return float(hi + math.log(np.exp(x - hi).sum()))


def cavity_decomposition_check(spec, N, n_disorder=64, seed=0):
    """O(1/N) error of the idealized cavity split, as two residuals.

    site residual: E log(Z_{N+1}/Z'_N) vs E log < sum_eps exp(cavity clause
    sum) >' where Z'_N carries Poisson(alpha (N-p+1)) clauses. The honest
    (N+1)-system reuses the same clause couplings, with each split slot
    independently switched to the new site with probability 1/(N+1) (exactly
    uniform over {1..N+1} and maximally coupled to the split slots), so the
    residual isolates the distributional error of pinning the cavity site.

    clause residual: E log(Z_N/Z'_N) vs E log < exp(correction clause sum) >'.
    Group-1 plus group-3 clauses already are an exact realization of the
    honest N-system, so this residual only measures the algebra of the two
    enumeration paths and sits at machine precision.
    """
    if not isinstance(spec, DilutedSpec):
        raise TypeError("cavity decomposition is a diluted-model construct")
    if N > 12:
        raise ValueError("N <= 12")
    p = spec.p
    if N < p - 1:
        raise ValueError("N >= p - 1 required")
    site_lhs = np.empty(n_disorder)
    site_rhs = np.empty(n_disorder)
    cl_lhs = np.empty(n_disorder)
    cl_rhs = np.empty(n_disorder)
    configs = enumerate_configs(N)
    for j in range(n_disorder):
        rng = make_rng(seed, "cavity-split", j)
        c0 = _draw_clauses(spec, rng, spec.alpha * (N - p + 1), N, p)
        c2 = _draw_clauses(spec, rng, spec.alpha * p, N, p - 1)
        c3 = _draw_clauses(spec, rng, spec.alpha * (p - 1), N, p)
        if all(_batch_is_zero(c[0]) for c in (c0, c2, c3)):
            site_lhs[j] = site_rhs[j] = math.log(2)
            cl_lhs[j] = cl_rhs[j] = 0.0
            continue
        log_zp = _log_z_diluted([c0], N)
        gibbs_logw = _gibbs_logw(c0, configs, N)

        # honest (N+1)-system from the same couplings and switched slots
        s0_up = _switch_sites(rng, c0[1], N)
        u0 = rng.integers(1, N + 2, size=(len(c2[0]), 1))
        s2_up = np.hstack([u0, _switch_sites(rng, c2[1], N)])
        site_lhs[j] = (_log_z_diluted([(c0[0], s0_up), (c2[0], s2_up)], N + 1)
                       - log_zp)
        site_rhs[j] = _bracket_eps(c2, gibbs_logw, configs)

        # group 1 + 3 already realize the honest N-system exactly
        cl_lhs[j] = _log_z_diluted([c0, c3], N) - log_zp
        cl_rhs[j] = _bracket_plain(c3, gibbs_logw, configs)
    site = Residual(mean_se(site_lhs), mean_se(site_rhs), label="add-site")
    clause = Residual(mean_se(cl_lhs), mean_se(cl_rhs), label="add-clauses")
    return site, clause


def _switch_sites(rng, sites, N):
    """Uniform {1..N} slots mapped to uniform {1..N+1}: each slot moves to
    the new site N+1 with probability 1/(N+1), else stays put."""
    out = sites.copy()
    out[rng.random(sites.shape) < 1.0 / (N + 1)] = N + 1
    return out


def _gibbs_logw(c0, configs, N):
    batch, sites = c0
    if len(batch) == 0:
        return np.full(configs.shape[0], -N * math.log(2))
    e = batch.eval(configs[:, np.asarray(sites) - 1]).sum(axis=1)
    hi = e.max()
    return e - (hi + math.log(np.exp(e - hi).sum()))


def _bracket_eps(c2, logw, configs):
    batch, sites = c2
    if len(batch) == 0:
        return math.log(2)
    spins = np.empty((configs.shape[0], len(batch), batch.p), dtype=np.int8)
    spins[:, :, 1:] = configs[:, np.asarray(sites) - 1]
    spins[:, :, 0] = 1
    e_plus = batch.eval(spins).sum(axis=1)
    spins[:, :, 0] = -1
    e_minus = batch.eval(spins).sum(axis=1)
    tot = logw + np.logaddexp(e_plus, e_minus)
    hi = tot.max()
    return float(hi + math.log(np.exp(tot - hi).sum()))


def _bracket_plain(c3, logw, configs):
    batch, sites = c3
    if len(batch) == 0:
        return 0.0
    e = batch.eval(configs[:, np.asarray(sites) - 1]).sum(axis=1)
    tot = logw + e
    hi = tot.max()
    return float(hi + math.log(np.exp(tot - hi).sum()))
