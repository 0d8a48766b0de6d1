"""Invariance / self-consistency residuals for candidate order parameters.

Each check compares the plain moment E prod_l E' prod_{i in C_l} s_i against
its reweighted counterpart E prod_l U_l / V^q, where the U_l / V weights come
from fresh cavity fields: Poisson clause sums in the diluted family, Gaussian
fields with overlap-matrix covariance in the SK family. Residuals near zero
are the signature of an invariant (asymptotic-Gibbs) order parameter.

The inner expectation E' reuses one replica pool for every U_l and for V
within an outer draw (correlated reuse keeps the ratio variance down), while
the left-hand side is evaluated with exact inner sums, so trivial cases
(empty clause sums, zero couplings, t = 0 tilts) cancel identically.
"""

import math
from dataclasses import dataclass

import numpy as np

from .rng import make_rng, seed_derive
from .util import Estimate, chol_psd, combine_se, jackknife_means, mean_se

__all__ = [
    "InvarianceCase",
    "Residual",
    "PRESET_CASES",
    "invariance_diluted",
    "invariance_sk",
    "stochastic_stability_sk",
    "gg_variance",
]


@dataclass(frozen=True)
class InvarianceCase:
    """Moment pattern: q sets C_l over m site labels, n cavity coordinates,
    r extra clause reweighting terms.

    Labels 1..n are cavity coordinates (eps spins on the reweighted side),
    labels n+1..m enter as plain sigma_bar factors on both sides.
    """

    n: int
    m: int
    sets: tuple
    r: int = 0

    def __post_init__(self):
        if not (0 <= self.n <= self.m) or self.m < 1:
            raise ValueError("need 0 <= n <= m with m >= 1")
        if self.r < 0:
            raise ValueError("r >= 0 required")
        sets = tuple(frozenset(int(i) for i in c) for c in self.sets)
        if not sets:
            raise ValueError("at least one set C_l")
        for c in sets:
            if any(i < 1 or i > self.m for i in c):
                raise ValueError("C_l must be subsets of {1..m}")
        object.__setattr__(self, "sets", sets)

    @property
    def q(self):
        return len(self.sets)

    def split(self, c):
        """C_l -> (C_l cap {1..n}, C_l cap {n+1..m})."""
        return (sorted(i for i in c if i <= self.n),
                sorted(i for i in c if i > self.n))


@dataclass
class Residual:
    """Two-sided check result; SEs combined in quadrature."""

    lhs: Estimate
    rhs: Estimate
    label: str = ""

    @property
    def residual(self):
        return self.lhs.value - self.rhs.value

    @property
    def se(self):
        return combine_se(self.lhs.se, self.rhs.se)

    def within(self, k):
        return abs(self.residual) <= k * max(self.se, 1e-300)


PRESET_CASES = {
    "sc-general": InvarianceCase(n=1, m=2, sets=({1, 2}, {2}), r=1),
    "sc-asc": InvarianceCase(n=1, m=3, sets=({2, 3}, {3}), r=0),
    "sc-prebsc": InvarianceCase(n=0, m=2, sets=({1, 2},), r=1),
    "sc-ascsc": InvarianceCase(n=2, m=2, sets=({1, 2}, {1}), r=0),
    "sk-general": InvarianceCase(n=1, m=2, sets=({1, 2}, {2}), r=1),
    "sk-ascsk": InvarianceCase(n=1, m=3, sets=({2, 3}, {3}), r=0),
    "sk-prebscsk": InvarianceCase(n=0, m=2, sets=({1, 2},), r=1),
    "sk-invar": InvarianceCase(n=2, m=2, sets=({1, 2}, {1}), r=0),
    "sk-overlap-only": InvarianceCase(n=1, m=3, sets=({2, 3}, {2, 3}), r=1),
}


def _mc_pair(mc, default_outer=300, default_inner=512):
    if isinstance(mc, int):
        return mc, default_inner
    if mc is None:
        return default_outer, default_inner
    return mc


def _lhs_groups(case, obs_sites):
    return {l: [obs_sites[i - 1] for i in sorted(c)]
            for l, c in enumerate(case.sets)}


def _exact_rhs(sigma, world, case, obs_sites):
    """Both-sides-collapse path for trivial reweighting (no or zero fields):
    U_l has an exact zero eps-average whenever C_l^1 is nonempty, otherwise
    it reduces to the same exact inner moment as the left-hand side."""
    groups = {}
    for l, c in enumerate(case.sets):
        c1, c2 = case.split(c)
        if c1:
            return 0.0
        groups[l] = [obs_sites[i - 1] for i in c2]
    return sigma.inner_moment(world, groups)


def _finish(lhs_vals, rhs_vals, rhs_half, label):
    lhs = mean_se(lhs_vals)
    rhs = mean_se(rhs_vals)
    rhs.bias = float(np.mean(rhs_vals - rhs_half))
    return Residual(lhs, rhs, label=label)


# ---------------------------------------------------------------------------
# diluted family
# ---------------------------------------------------------------------------


def _clause_factors(sigma, world, reps, batch, sites, eps_slot):
    """Per-replica (K,) linear factors of one clause batch.

    With eps_slot=True returns (plus, minus): products of E_x exp theta at
    eps=+1 / -1 with slot 0 as the eps slot; otherwise the single product
    over all p slots.
    """
    K = len(reps)
    nt = len(batch)
    if nt == 0:
        return (np.zeros(K), np.zeros(K)) if eps_slot else np.zeros(K)
    p = batch.p
    n_slots = p - 1 if eps_slot else p
    means = sigma.mean_matrix(world, reps, sites).reshape(K, nt, n_slots)
    fv = batch.fvals[:, 1:, :] if eps_slot else batch.fvals
    fbar = ((1 - means) * fv[None, :, :, 0] + (1 + means) * fv[None, :, :, 1]) / 2
    prod = fbar.prod(axis=2)
    if eps_slot:
        sp = batch.log_a.sum() + np.log1p(batch.b * batch.fvals[:, 0, 1] * prod).sum(axis=1)
        sm = batch.log_a.sum() + np.log1p(batch.b * batch.fvals[:, 0, 0] * prod).sum(axis=1)
        return sp, sm
    return batch.log_a.sum() + np.log1p(batch.b * prod).sum(axis=1)


def _batch_is_zero(batch):
    return len(batch) == 0 or (
        np.all(batch.b == 0) and np.all(batch.log_a == 0)
    )


def invariance_diluted(sigma, spec, case, mc=None, seed=0):
    """Residual of the diluted self-consistency equations for one case."""
    outer, inner = _mc_pair(mc)
    p = spec.p
    half = inner // 2
    lhs_vals = np.empty(outer)
    rhs_vals = np.empty(outer)
    rhs_half = np.empty(outer)
    for j in range(outer):
        rng = make_rng(seed, "inv-dil", j)
        world = sigma.draw_world(seed=seed_derive(seed, ("invd-world", j)))
        obs = [sigma.draw_site(world, rng) for _ in range(case.m)]
        counts = rng.poisson(p * spec.alpha, size=case.n)
        batches, site_lists = [], []
        for i in range(case.n):
            batches.append(spec.theta.sample(rng, counts[i]))
            site_lists.append([sigma.draw_site(world, rng)
                               for _ in range(counts[i] * (p - 1))])
        batch_r = spec.theta.sample(rng, case.r)
        sites_r = [sigma.draw_site(world, rng) for _ in range(case.r * p)]
        lhs_vals[j] = sigma.inner_moment(world, _lhs_groups(case, obs))
        if all(_batch_is_zero(b) for b in batches) and _batch_is_zero(batch_r):
            rhs_vals[j] = rhs_half[j] = _exact_rhs(sigma, world, case, obs)
            continue
        active = obs + [s for sl in site_lists for s in sl] + sites_r
        reps = sigma.draw_replicas(world, rng, inner, active_sites=active)
        plus = np.empty((case.n, inner))
        minus = np.empty((case.n, inner))
        for i in range(case.n):
            sp, sm = _clause_factors(sigma, world, reps, batches[i],
                                     site_lists[i], eps_slot=True)
            plus[i] = 0.5 * np.exp(sp)
            minus[i] = 0.5 * np.exp(sm)
        theta_w = np.exp(_clause_factors(sigma, world, reps, batch_r, sites_r,
                                         eps_slot=False))
        obs_means = sigma.mean_matrix(world, reps, obs) if case.m else None
        v_weights = (plus + minus).prod(axis=0) * theta_w

        def ratio(sl):
            v_hat = v_weights[sl].mean()
            out = 1.0
            for c in case.sets:
                c1, c2 = case.split(c)
                w = theta_w[sl].copy()
                for i in range(1, case.n + 1):
                    term = (plus[i - 1] - minus[i - 1]) if i in c1 \
                        else (plus[i - 1] + minus[i - 1])
                    w = w * term[sl]
                for i in c2:
                    w = w * obs_means[sl, i - 1]
                out *= w.mean() / v_hat
            return out

        rhs_vals[j] = ratio(slice(None))
        rhs_half[j] = ratio(slice(0, half))
    return _finish(lhs_vals, rhs_vals, rhs_half, "diluted")


# ---------------------------------------------------------------------------
# SK family
# ---------------------------------------------------------------------------


def _field_on_pool(sk_fun, top, q_mat, rng, hier=None):
    """One field copy over the pool: joint part with covariance sk_fun(Q)
    plus an independent completion to marginal variance `top`."""
    if hier is not None:
        g = hier()
    else:
        cov = np.asarray(sk_fun(q_mat), dtype=float)
        g = chol_psd(cov) @ rng.standard_normal(cov.shape[0])
    comp = np.sqrt(np.maximum(top - np.asarray(sk_fun(np.diag(q_mat))), 0.0))
    return g + comp * rng.standard_normal(q_mat.shape[0])


def invariance_sk(sigma, spec, case, mc=None, seed=0, hierarchical=False):
    """Residual of the SK self-consistency equations for one case.

    hierarchical=True draws the Gaussian fields from the cascade tree itself
    (only for the cascade construction) instead of factorizing xi'(Q) /
    theta(Q); the two paths agree in law and serve as mutual cross-checks.
    """
    outer, inner = _mc_pair(mc)
    half = inner // 2
    xi_top = float(spec.xi_prime(1.0))
    th_top = float(spec.theta_fun(1.0))
    lhs_vals = np.empty(outer)
    rhs_vals = np.empty(outer)
    rhs_half = np.empty(outer)
    for j in range(outer):
        rng = make_rng(seed, "inv-sk", j)
        world = sigma.draw_world(seed=seed_derive(seed, ("invs-world", j)))
        obs = [sigma.draw_site(world, rng) for _ in range(case.m)]
        lhs_vals[j] = sigma.inner_moment(world, _lhs_groups(case, obs))
        if xi_top == 0.0:
            rhs_vals[j] = rhs_half[j] = _exact_rhs(sigma, world, case, obs)
            continue
        reps = sigma.draw_replicas(world, rng, inner, active_sites=obs)
        q_mat = sigma.overlap_matrix(world, reps)

        def hier_field(psi):
            if not hierarchical:
                return None
            from .cascade import sample_field

            def draw():
                f = sample_field(world.cascade, lambda x: float(psi(x)), rng=rng)
                return f.values[np.asarray(reps, dtype=int)]

            return draw

        g_xi = np.stack([
            _field_on_pool(spec.xi_prime, xi_top, q_mat, rng,
                           hier=hier_field(spec.xi_prime))
            for _ in range(case.n)]) if case.n else np.zeros((0, inner))
        g_th = np.stack([
            _field_on_pool(spec.theta_fun, th_top, q_mat, rng,
                           hier=hier_field(spec.theta_fun))
            for _ in range(case.r)]) if case.r else np.zeros((0, inner))
        eps_nr = np.exp(np.log(np.cosh(g_xi)).sum(axis=0) + g_th.sum(axis=0))
        obs_means = sigma.mean_matrix(world, reps, obs) if case.m else None

        def ratio(sl):
            v_hat = eps_nr[sl].mean()
            out = 1.0
            for c in case.sets:
                c1, c2 = case.split(c)
                w = eps_nr[sl].copy()
                for i in c1:
                    w = w * np.tanh(g_xi[i - 1][sl])
                for i in c2:
                    w = w * obs_means[sl, i - 1]
                out *= w.mean() / v_hat
            return out

        rhs_vals[j] = ratio(slice(None))
        rhs_half[j] = ratio(slice(0, half))
    return _finish(lhs_vals, rhs_vals, rhs_half, "sk")


def stochastic_stability_sk(sigma, p, t, case=None, mc=None, seed=0):
    """Residual of the stochastic-stability identity under the exp(t G_p)
    tilt; C_l enter as plain sigma_bar factors on both sides."""
    if t < 0:
        raise ValueError("t >= 0 required")
    if case is None:
        case = InvarianceCase(n=0, m=2, sets=({1, 2},), r=0)
    outer, inner = _mc_pair(mc)
    half = inner // 2
    lhs_vals = np.empty(outer)
    rhs_vals = np.empty(outer)
    rhs_half = np.empty(outer)
    for j in range(outer):
        rng = make_rng(seed, "ss-sk", j)
        world = sigma.draw_world(seed=seed_derive(seed, ("ss-world", j)))
        obs = [sigma.draw_site(world, rng) for _ in range(case.m)]
        groups = {l: [obs[i - 1] for i in sorted(c)] for l, c in enumerate(case.sets)}
        lhs_vals[j] = sigma.inner_moment(world, groups)
        if t == 0.0:
            rhs_vals[j] = rhs_half[j] = lhs_vals[j]
            continue
        reps = sigma.draw_replicas(world, rng, inner, active_sites=obs)
        q_mat = sigma.overlap_matrix(world, reps)
        gp = _field_on_pool(lambda x: np.asarray(x) ** p, 1.0, q_mat, rng)
        tilt = np.exp(t * gp)
        obs_means = sigma.mean_matrix(world, reps, obs)

        def ratio(sl):
            v_hat = tilt[sl].mean()
            out = 1.0
            for c in case.sets:
                w = tilt[sl].copy()
                for i in sorted(c):
                    w = w * obs_means[sl, i - 1]
                out *= w.mean() / v_hat
            return out

        rhs_vals[j] = ratio(slice(None))
        rhs_half[j] = ratio(slice(0, half))
    return _finish(lhs_vals, rhs_vals, rhs_half, f"ss p={p} t={t}")


def gg_variance(sigma, p, t_grid=(0.0, 0.25, 0.5, 1.0), mc=None, seed=0):
    """Tilted variance of G_p per (GSS): 1 for all t iff the overlap
    identities hold (given stochastic stability).

    Returns a list of (t, direct Estimate, algebraic Estimate) rows, where
    the algebraic form is the integration-by-parts bracket
    1 - t^2 (E R^{2p} - 2 E R^p R'^p + (E R^p)^2).
    """
    outer, inner = _mc_pair(mc)
    rows = []
    stats = {t: np.empty((outer, 2)) for t in t_grid}
    alg = np.empty((outer, 3))
    for j in range(outer):
        rng = make_rng(seed, "gg-var", j)
        world = sigma.draw_world(seed=seed_derive(seed, ("ggv-world", j)))
        reps = sigma.draw_replicas(world, rng, inner)
        q_mat = sigma.overlap_matrix(world, reps)
        gp = _field_on_pool(lambda x: np.asarray(x) ** p, 1.0, q_mat, rng)
        for t in t_grid:
            tilt = np.exp(t * gp)
            denom = tilt.mean()
            stats[t][j, 0] = (gp**2 * tilt).mean() / denom
            stats[t][j, 1] = (gp * tilt).mean() / denom
        # overlap moments from disjoint triples in the same pool
        k3 = inner // 3
        r12 = np.array([q_mat[3 * i, 3 * i + 1] for i in range(k3)])
        r13 = np.array([q_mat[3 * i, 3 * i + 2] for i in range(k3)])
        alg[j] = [np.mean(r12 ** (2 * p)), np.mean(r12**p * r13**p),
                  np.mean(r12**p)]
    for t in t_grid:
        direct = jackknife_means(stats[t], lambda m: m[0] - m[1] ** 2)
        algebraic = jackknife_means(
            alg, lambda m, tt=t: 1 - tt**2 * (m[0] - 2 * m[1] + m[2] ** 2))
        rows.append((t, direct, algebraic))
    return rows
