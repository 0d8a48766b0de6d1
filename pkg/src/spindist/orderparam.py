"""Functional order parameters sigma_bar(w, u, v) as sampler protocols.

Every variant implements:

- draw_world(seed) -> World                (the w coordinate)
- draw_site(world, rng) -> Site            (a fresh v coordinate)
- draw_replicas(world, rng, n, active_sites=None) -> list of Replica (u's)
- mean(world, replica, site) -> value in [-1, 1]
- draw_spin(world, replica, site, rng) -> -1/+1 with that conditional mean
- overlap(world, rep1, rep2) -> E_v sigma_bar(u1, v) sigma_bar(u2, v), exact
- inner_moment(world, groups) -> prod over replica labels of
  E'[prod over the label's sites of sigma_bar], exact in the u-average

The CascadeSK variant realizes the explicit ultrametric construction: w
draws a truncated cascade plus (lazily, per site) hierarchical Gaussian
fields with generating function xi'; sampling a replica re-weights the leaf
distribution by prod_i ch g_i(alpha) over the declared active sites, and the
site mean is th g_site(alpha). Re-weighted leaf sampling with plain Gaussian
fields is distributionally the same as plain leaf sampling with the tilted
(change-of-density) fields, which is the form the invariance machinery
checks.
"""

import math
from dataclasses import dataclass

import numpy as np

from .cascade import sample_cascade, sample_field, tilt_weights
from .rng import make_rng, seed_derive
from .util import Estimate, gauss_hermite, jackknife_means, mean_se

__all__ = [
    "ReplicaSymmetric",
    "CascadeSK",
    "Tabulated",
    "TwoStateMixture",
    "multioverlap",
    "qstar_check",
    "cascade_sigma_mean",
    "solve_onersb_fixed_point",
]


class OrderParameter:
    """Common helpers shared by all sigma_bar variants."""

    def draw_spin(self, world, replica, site, rng):
        m = self.mean(world, replica, site)
        return 1 if rng.random() < (1 + m) / 2 else -1

    def draw_world(self, seed=None, rng=None):
        raise NotImplementedError

    def qstar(self, world=None):
        """E_v sigma_bar(w,u,v)^2 (constant for all shipped variants)."""
        raise NotImplementedError

    def mean_matrix(self, world, replicas, sites):
        """(n_replicas, n_sites) table of sigma_bar means."""
        return np.array(
            [[self.mean(world, r, s) for s in sites] for r in replicas], dtype=float
        )

    def overlap_matrix(self, world, replicas):
        """(n, n) matrix of pairwise overlaps including the self-overlap."""
        n = len(replicas)
        q = np.empty((n, n))
        for i in range(n):
            for j in range(i, n):
                q[i, j] = q[j, i] = self.overlap(world, replicas[i], replicas[j])
        return q


# ---------------------------------------------------------------------------
# replica symmetric
# ---------------------------------------------------------------------------


class ReplicaSymmetric(OrderParameter):
    """sigma_bar(w,u,v) = th h_v with h_v iid per site; constant in w and u.

    h_law: ("constant", c) | ("normal", sd) | ("table", values, probs).
    """

    def __init__(self, h_law=("constant", 0.0)):
        kind = h_law[0]
        if kind == "constant":
            self.kind, self.c = "constant", float(h_law[1])
        elif kind == "normal":
            self.kind, self.sd = "normal", float(h_law[1])
            if self.sd < 0:
                raise ValueError("sd must be nonnegative")
        elif kind == "table":
            vals = np.asarray(h_law[1], dtype=float)
            probs = np.asarray(h_law[2], dtype=float)
            if vals.shape != probs.shape or abs(probs.sum() - 1) > 1e-12 or np.any(probs < 0):
                raise ValueError("table law needs matching values and a probability vector")
            self.kind, self.vals, self.probs = "table", vals, probs
        else:
            raise ValueError(f"unknown h law {kind!r}")

    def h_moment(self, fn, n_gh=60):
        """E fn(h), exact for the table law and quadrature for normal."""
        if self.kind == "constant":
            return float(fn(np.asarray(self.c)))
        if self.kind == "table":
            return float(np.dot(self.probs, fn(self.vals)))
        x, w = gauss_hermite(n_gh)
        return float(np.dot(w, fn(self.sd * x)))

    def qstar(self, world=None):
        return self.h_moment(lambda h: np.tanh(h) ** 2)

    def draw_world(self, seed=None, rng=None):
        return None

    def draw_site(self, world, rng):
        if self.kind == "constant":
            return self.c
        if self.kind == "normal":
            return self.sd * rng.standard_normal()
        return float(rng.choice(self.vals, p=self.probs))

    def draw_replicas(self, world, rng, n, active_sites=None):
        return [None] * n

    def mean(self, world, replica, site):
        return math.tanh(site)

    def mean_matrix(self, world, replicas, sites):
        row = np.tanh(np.asarray(sites, dtype=float))
        return np.tile(row, (len(replicas), 1))

    def overlap(self, world, rep1, rep2):
        return self.qstar()

    def overlap_matrix(self, world, replicas):
        return np.full((len(replicas), len(replicas)), self.qstar())

    def inner_moment(self, world, groups):
        out = 1.0
        for sites in groups.values():
            for s in sites:
                out *= math.tanh(s)
        return out


# ---------------------------------------------------------------------------
# cascade construction for SK
# ---------------------------------------------------------------------------


class CascadeWorld:
    """One w draw of the cascade construction: weights + per-site fields."""

    def __init__(self, sigma, cascade, seed):
        self.sigma = sigma
        self.cascade = cascade
        self._seed = seed
        self.fields = {}
        self._next_site = 0
        self._chg = {}  # site -> ch of field values (cached)

    def field(self, site):
        try:
            return self.fields[site]
        except KeyError:
            raise KeyError(f"site {site} was never drawn in this world")

    def new_site(self, rng):
        site = self._next_site
        self._next_site += 1
        self.fields[site] = sample_field(self.cascade, self.sigma.psi, rng=rng)
        return site

    def tilted(self, active_sites):
        """Leaf distribution reweighted by prod ch g_i over the active sites."""
        if not active_sites:
            return self.cascade.leaf_w
        key = tuple(sorted(set(active_sites)))
        logh = np.zeros(self.cascade.n_leaves)
        for s in key:
            logh = logh + np.log(np.cosh(self.fields[s].values))
        return tilt_weights(self.cascade, np.exp(logh - logh.max()))


class CascadeSK(OrderParameter):
    """The ultrametric sigma_bar built from a cascade and xi'.

    cspec: CascadeSpec; sk: SKSpec supplying xi' (the field generating
    function) — the self-overlap is pinned to q* = q_k.
    """

    def __init__(self, cspec, sk):
        self.cspec = cspec
        self.sk = sk
        self.psi = lambda x: float(sk.xi_prime(x))

    def qstar(self, world=None):
        return self.cspec.qstar

    def draw_world(self, seed=None, rng=None):
        if seed is None:
            seed = int(rng.integers(0, 2**63))
        casc = sample_cascade(self.cspec, seed_derive(seed, ("world-tree",)))
        return CascadeWorld(self, casc, seed)

    def draw_site(self, world, rng):
        return world.new_site(rng)

    def draw_replicas(self, world, rng, n, active_sites=None):
        w = world.tilted(active_sites)
        return list(rng.choice(w.size, size=n, p=w))

    def mean(self, world, replica, site):
        return math.tanh(world.field(site).values[replica])

    def mean_matrix(self, world, replicas, sites):
        vals = np.stack([world.field(s).values for s in sites], axis=1)
        return np.tanh(vals[np.asarray(replicas, dtype=int)])

    def overlap(self, world, rep1, rep2):
        from .cascade import overlap_of

        return overlap_of(rep1, rep2, self.cspec)

    def overlap_matrix(self, world, replicas):
        from .cascade import overlap_matrix

        return overlap_matrix(self.cspec, np.asarray(replicas, dtype=int))

    def inner_moment(self, world, groups):
        active = sorted({s for sites in groups.values() for s in sites})
        w = world.tilted(active)
        out = 1.0
        for sites in groups.values():
            th = np.ones(w.size)
            for s in sites:
                th = th * np.tanh(world.field(s).values)
            out *= float(np.dot(w, th))
        return out


def cascade_sigma_mean(world, replica, site):
    """th g_{xi',site}(alpha): the site mean of the cascade construction."""
    return math.tanh(world.field(site).values[replica])


# ---------------------------------------------------------------------------
# tabulated sigma_bar on explicit (w, u, v) grids
# ---------------------------------------------------------------------------


class Tabulated(OrderParameter):
    """sigma_bar given by a (n_w, n_u, n_v) table; coordinates are uniform
    grid indices, nearest-grid lookup (i.e. the grids ARE the coordinates)."""

    def __init__(self, values):
        values = np.asarray(values, dtype=float)
        if values.ndim != 3:
            raise ValueError("need a 3-d table indexed (w, u, v)")
        if np.max(np.abs(values)) > 1 + 1e-12:
            raise ValueError("|sigma_bar| <= 1 required")
        self.values = values

    @classmethod
    def from_text(cls, path):
        """Load from a plain text table: first line n_w n_u n_v, then one
        value per line in C order."""
        with open(path) as fh:
            dims = tuple(int(t) for t in fh.readline().split())
        flat = np.loadtxt(path, skiprows=1).reshape(-1)
        return cls(flat.reshape(dims))

    def qstar(self, world=None):
        # constant only if the table makes it so; report the global average
        return float(np.mean(self.values**2))

    def draw_world(self, seed=None, rng=None):
        if rng is None:
            rng = make_rng(seed, "tab-world")
        return int(rng.integers(self.values.shape[0]))

    def draw_site(self, world, rng):
        return int(rng.integers(self.values.shape[2]))

    def draw_replicas(self, world, rng, n, active_sites=None):
        return list(rng.integers(self.values.shape[1], size=n))

    def mean(self, world, replica, site):
        return float(self.values[world, replica, site])

    def mean_matrix(self, world, replicas, sites):
        idx = np.ix_(np.asarray(replicas, dtype=int), np.asarray(sites, dtype=int))
        return self.values[world][idx]

    def overlap(self, world, rep1, rep2):
        return float(np.mean(self.values[world, rep1] * self.values[world, rep2]))

    def overlap_matrix(self, world, replicas):
        v = self.values[world][np.asarray(replicas, dtype=int)]
        return (v @ v.T) / v.shape[1]

    def inner_moment(self, world, groups):
        out = 1.0
        for sites in groups.values():
            prod = np.ones(self.values.shape[1])
            for s in sites:
                prod = prod * self.values[world, :, s]
            out *= float(prod.mean())
        return out


# ---------------------------------------------------------------------------
# a deliberately GG-violating order parameter
# ---------------------------------------------------------------------------


class TwoStateMixture(OrderParameter):
    """sigma_bar(w,u,v) = eps_u * sqrt(q) * r_v with eps_u, r_v fair signs.

    The replica coordinate picks between two antipodal states with equal
    weight, so overlaps are +-q with sign eps_1 eps_2. Self-overlap is the
    constant q, but the Ghirlanda-Guerra identities fail at odd powers:
    E R12 R13 = 0 while (1/2)(E R12)^2 + (1/2)E R12^2 = q^2/2.
    """

    def __init__(self, q):
        if not 0 < q <= 1:
            raise ValueError("q in (0,1] required")
        self.q = float(q)

    def qstar(self, world=None):
        return self.q

    def draw_world(self, seed=None, rng=None):
        return None

    def draw_site(self, world, rng):
        return float(rng.integers(0, 2) * 2 - 1)

    def draw_replicas(self, world, rng, n, active_sites=None):
        return list(rng.integers(0, 2, size=n) * 2 - 1)

    def mean(self, world, replica, site):
        return float(replica) * math.sqrt(self.q) * float(site)

    def mean_matrix(self, world, replicas, sites):
        return math.sqrt(self.q) * np.outer(
            np.asarray(replicas, dtype=float), np.asarray(sites, dtype=float)
        )

    def overlap(self, world, rep1, rep2):
        return float(rep1) * float(rep2) * self.q

    def overlap_matrix(self, world, replicas):
        r = np.asarray(replicas, dtype=float)
        return self.q * np.outer(r, r)

    def inner_moment(self, world, groups):
        out = 1.0
        for sites in groups.values():
            n_g = len(sites)
            if n_g % 2:
                return 0.0
            out *= self.q ** (n_g / 2) * float(np.prod(sites))
        return out


# ---------------------------------------------------------------------------
# multi-overlap moments
# ---------------------------------------------------------------------------


def _pattern_groups(pattern):
    """Map replica label -> list of tuple-slots (sites assigned later)."""
    pattern = [tuple(int(l) for l in tup) for tup in pattern]
    if any(l < 1 for tup in pattern for l in tup):
        raise ValueError("replica labels are 1-based")
    return pattern


def multioverlap(sigma, pattern, n_outer=400, seed=0):
    """E prod_t R^inf_{(l_1..l_n)_t}: one fresh site per tuple factor.

    The u-averages are evaluated exactly per world (inner_moment); only the
    world average and the fresh-site draws are Monte Carlo.
    """
    pattern = _pattern_groups(pattern)
    vals = np.empty(n_outer)
    for j in range(n_outer):
        rng = make_rng(seed, "multioverlap", j)
        world = sigma.draw_world(seed=seed_derive(seed, ("mo-world", j)))
        sites = [sigma.draw_site(world, rng) for _ in pattern]
        groups = {}
        for t, tup in enumerate(pattern):
            for l in tup:
                groups.setdefault(l, []).append(sites[t])
        vals[j] = sigma.inner_moment(world, groups)
    return mean_se(vals)


def qstar_check(sigma, n_worlds=400, n_pairs=32, seed=0):
    """Mean and total (w,u)-variance of the self-overlap E_v sigma_bar^2.

    Writes the variance as E[sb_v^2 sb_v'^2] - (E[sb_v^2])^2 with v, v' two
    fresh sites on one replica, both factors evaluated with exact u-averages
    per world, so the estimate is exactly zero-targeting when the
    self-overlap is a.s. constant (no site-panel noise to subtract).
    Returns (mean Estimate, variance Estimate).
    """
    cols = np.empty((n_worlds, 2))
    for j in range(n_worlds):
        rng = make_rng(seed, "qstar", j)
        world = sigma.draw_world(seed=seed_derive(seed, ("qs-world", j)))
        acc = np.zeros(2)
        for _ in range(n_pairs):
            v1 = sigma.draw_site(world, rng)
            v2 = sigma.draw_site(world, rng)
            acc[0] += sigma.inner_moment(world, {1: [v1, v1, v2, v2]})
            acc[1] += sigma.inner_moment(world, {1: [v1, v1]})
        cols[j] = acc / n_pairs
    mean_est = mean_se(cols[:, 1])
    var_est = jackknife_means(cols, lambda m: m[0] - m[1] ** 2)
    return mean_est, var_est


# ---------------------------------------------------------------------------
# 1-RSB cavity fixed point for the cascade construction
# ---------------------------------------------------------------------------


def solve_onersb_fixed_point(sk, m2, q_init=(0.0, 0.5), n_gh=60, tol=1e-12,
                             max_iter=500):
    """Solve the one-level cavity equations for (q_1, q_2) given xi' and m_2.

    On a two-level cascade (m_1 = 0 < m_2), sampling a leaf under the
    ch-field tilt size-biases the leaf's field mark by ch^{m_2}, so the
    self-consistent overlaps satisfy

        q_2 = E_a [ E_b ch^{m2}(a+b) th^2(a+b) / E_b ch^{m2}(a+b) ]
        q_1 = E_a [ ( E_b ch^{m2}(a+b) th(a+b) / E_b ch^{m2}(a+b) )^2 ]

    with a ~ N(0, xi'(q_1)) and b ~ N(0, xi'(q_2) - xi'(q_1)). Without an
    external-field (p=1) term, q_1 = 0 identically and a nontrivial q_2
    exists only when 2 beta_2^2 > 1. Returns (q_1, q_2, converged).
    """
    x, wx = gauss_hermite(n_gh)
    q1, q2 = float(q_init[0]), float(q_init[1])
    for _ in range(max_iter):
        v1 = max(float(sk.xi_prime(q1)), 0.0)
        v2 = max(float(sk.xi_prime(q2)) - v1, 0.0)
        a = math.sqrt(v1) * x
        b = math.sqrt(v2) * x
        h = a[:, None] + b[None, :]
        chm = np.cosh(h) ** m2
        th = np.tanh(h)
        denom = chm @ wx
        num2 = (chm * th**2) @ wx
        num1 = (chm * th) @ wx
        new_q2 = float(np.dot(wx, num2 / denom))
        new_q1 = float(np.dot(wx, (num1 / denom) ** 2))
        if abs(new_q1 - q1) + abs(new_q2 - q2) < tol:
            return new_q1, new_q2, True
        q1 = 0.5 * q1 + 0.5 * new_q1
        q2 = 0.5 * q2 + 0.5 * new_q2
    return q1, q2, False
