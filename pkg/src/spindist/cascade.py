"""Truncated Ruelle probability cascades and hierarchical Gaussian fields.

A cascade of depth k assigns random weights to the leaves of the M-ary tree
{1..M}^k: the children of a node at level l carry the M largest atoms of a
Poisson-Dirichlet PD(m_{l+1}) point process, a leaf's unnormalized weight is
the product of the atom sizes along its path, and the leaf distribution is
the single global normalization of those products. (Normalizing each level
separately would drop the tilt of a node's weight by its descendants' total
mass and distorts the joint law of nested overlaps, though not the one-level
marginals.) Overlaps between leaves are q_{(depth of deepest common
ancestor)} with q_0 = 0, which makes the overlap array ultrametric by
construction, with law P(R = q_l) = m_{l+1} - m_l.

Gaussian fields over the leaves are built from independent per-node
increments so that Cov(g(alpha), g(beta)) = psi(q_{alpha ^ beta}) holds
exactly, including a root increment of variance psi(0) for generating
functions with psi(0) > 0.
"""

import math
from dataclasses import dataclass

import numpy as np

from .rng import make_rng, seed_derive
from .util import Estimate, jackknife_means

__all__ = [
    "CascadeSpec",
    "CascadeRealization",
    "HierarchicalField",
    "sample_cascade",
    "sample_replica",
    "overlap_of",
    "ancestor_depth",
    "sample_field",
    "gg_on_cascade",
    "tilt_weights",
]


@dataclass(frozen=True)
class CascadeSpec:
    """Overlap atoms q, tree exponents m, depth k, truncation M per node.

    q = (q_1 < ... < q_k) in [0,1]; m = (m_1=0 < m_2 < ... < m_k < 1). The
    overlap law is P(R = q_l) = m_{l+1} - m_l with m_{k+1} = 1.
    """

    q: tuple
    m: tuple
    M: int = 32

    def __post_init__(self):
        q = tuple(float(x) for x in self.q)
        m = tuple(float(x) for x in self.m)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "m", m)
        if len(q) != len(m) or len(q) < 1:
            raise ValueError("q and m must have equal length k >= 1")
        if m[0] != 0.0:
            raise ValueError("m_1 must be 0")
        if any(not (0.0 <= a <= 1.0) for a in q):
            raise ValueError("q values must lie in [0,1]")
        if any(b <= a for a, b in zip(q, q[1:])):
            raise ValueError("q must be strictly increasing")
        full_m = m + (1.0,)
        if any(b <= a for a, b in zip(full_m, full_m[1:])):
            raise ValueError("m must satisfy 0 = m_1 < ... < m_k < 1")
        if self.M < 2:
            raise ValueError("truncation M >= 2 required")

    @property
    def k(self):
        return len(self.q)

    @property
    def branching(self):
        """Children retained per node at each level.

        A PD(0) process is a single atom, so levels with m_l = 0 (always
        level 1, by the invariant m_1 = 0) carry exactly one child instead of
        M zero-weight slots; this changes nothing observable and keeps the
        leaf count at the product of live branch factors.
        """
        return tuple(1 if m == 0.0 else self.M for m in self.m)

    @property
    def n_leaves(self):
        n = 1
        for b in self.branching:
            n *= b
        return n

    @property
    def overlap_values(self):
        """(q_0=0, q_1, ..., q_k)."""
        return (0.0,) + self.q

    @property
    def overlap_probs(self):
        """P(R = q_l) for l = 1..k."""
        full_m = self.m + (1.0,)
        return tuple(full_m[l + 1] - full_m[l] for l in range(self.k))

    @property
    def qstar(self):
        return self.q[-1]


def _pd_log_atoms(rng, m, M):
    """Log sizes of the M largest atoms of PD(m), unnormalized.

    Arrival times Gamma_i of a unit Poisson process give the M largest atoms
    of the intensity m x^{-1-m} process as Gamma_i^{-1/m}; working on the
    log scale keeps multi-level path products away from overflow. m = 0
    degenerates to a single atom.
    """
    if m == 0.0:
        out = np.full(M, -np.inf)
        out[0] = 0.0
        return out
    gamma = np.cumsum(rng.exponential(size=M))
    return -np.log(gamma) / m


class CascadeRealization:
    """Frozen weights of one truncated cascade draw.

    log_levels[l] (l = 0..k-1) has shape branching[:l+1]: unnormalized log
    atom sizes of the children under each level-l node. leaf_w normalizes
    the path products globally, flat in C order (level-1 digit most
    significant).
    """

    def __init__(self, spec, log_levels):
        self.spec = spec
        self.log_levels = log_levels
        lw = log_levels[0]
        for lv in log_levels[1:]:
            lw = lw[..., None] + lv
        lw = lw.reshape(-1)
        lw = lw - lw.max()
        w = np.exp(lw)
        self.leaf_w = w / w.sum()
        self.n_leaves = self.leaf_w.size

    def sample_replicas(self, rng, size=None):
        """Leaf indices drawn iid with probability leaf_w."""
        return rng.choice(self.n_leaves, size=size, p=self.leaf_w)


def sample_cascade(spec, seed):
    """Draw a CascadeRealization for a CascadeSpec."""
    rng = make_rng(seed, "cascade")
    k = spec.k
    br = spec.branching
    levels = []
    n_parents = 1
    for l in range(k):
        m_l = spec.m[l]
        b = br[l]
        flat = np.empty((n_parents, b))
        for j in range(n_parents):
            flat[j] = _pd_log_atoms(rng, m_l, b) if b > 1 else 0.0
        levels.append(flat.reshape(br[: l + 1]))
        n_parents *= b
    return CascadeRealization(spec, levels)


def sample_replica(cascade, seed):
    """One leaf index alpha ~ leaf weights."""
    return int(cascade.sample_replicas(make_rng(seed, "replica")))


def _suffix_sizes(spec):
    """Number of leaves below one node at each level (length k, last = 1)."""
    br = spec.branching
    out = [1] * spec.k
    for l in range(spec.k - 2, -1, -1):
        out[l] = out[l + 1] * br[l + 1]
    return out


def leaf_digits(spec, leaves):
    """Per-level child indices of flat leaf indices; shape (n, k)."""
    leaves = np.atleast_1d(np.asarray(leaves, dtype=np.int64))
    digs = np.empty((leaves.size, spec.k), dtype=np.int64)
    rem = leaves.copy()
    for l, size in enumerate(_suffix_sizes(spec)):
        digs[:, l] = rem // size
        rem = rem % size
    return digs


def ancestor_depth(alpha, beta, spec):
    """Depth of the deepest common ancestor of two flat leaf indices."""
    if alpha == beta:
        return spec.k
    da, db = leaf_digits(spec, [alpha, beta])
    d = 0
    for a, b in zip(da, db):
        if a != b:
            break
        d += 1
    return d


def overlap_of(alpha, beta, spec):
    """q_{depth of deepest common ancestor}; q_0 = 0, same leaf -> q_k."""
    d = ancestor_depth(int(alpha), int(beta), spec)
    return spec.overlap_values[d]


def overlap_matrix(spec, leaves):
    """Overlap array for a list of flat leaf indices (vectorized)."""
    digs = leaf_digits(spec, leaves)
    eq = digs[:, None, :] == digs[None, :, :]
    depth = np.argmin(eq, axis=-1)  # first level where they differ
    depth[np.all(eq, axis=-1)] = spec.k
    return np.asarray(spec.overlap_values)[depth]


@dataclass
class HierarchicalField:
    """Leaf values of one mean-zero Gaussian field draw on the cascade tree."""

    values: np.ndarray  # (n_leaves,)

    def __getitem__(self, alpha):
        return self.values[alpha]


def sample_field(cascade, psi, seed=None, rng=None):
    """Gaussian field with Cov(g(a), g(b)) = psi(q_{a ^ b}) exactly.

    psi is a scalar function nondecreasing on [0,1]. The field is a sum of
    independent per-node increments: a root increment of variance psi(0)
    shared by all leaves, then at level l an increment of variance
    psi(q_l) - psi(q_{l-1}) per node.
    """
    spec = cascade.spec
    if rng is None:
        rng = make_rng(seed, "field")
    br = spec.branching
    qs = spec.overlap_values  # q_0 .. q_k
    var0 = float(psi(qs[0]))
    if var0 < 0:
        raise ValueError("psi(0) must be nonnegative")
    g = math.sqrt(var0) * rng.standard_normal() * np.ones(1)
    for l in range(1, spec.k + 1):
        inc = float(psi(qs[l])) - float(psi(qs[l - 1]))
        if inc < -1e-12:
            raise ValueError("psi must be nondecreasing on the overlap atoms")
        inc = max(inc, 0.0)
        g = np.repeat(g, br[l - 1]) + math.sqrt(inc) * rng.standard_normal(
            g.size * br[l - 1]
        )
    return HierarchicalField(values=g)


def tilt_weights(cascade_or_weights, h):
    """Reweighted leaf distribution w'_a = w_a h(a) / sum w h.

    Accepts a CascadeRealization or a bare weight vector; h is a per-leaf
    array of positive finite factors (log-scale inputs are the caller's
    responsibility; pass exp-shifted values for stability).
    """
    w = (
        cascade_or_weights.leaf_w
        if isinstance(cascade_or_weights, CascadeRealization)
        else np.asarray(cascade_or_weights, dtype=float)
    )
    h = np.asarray(h, dtype=float)
    if h.shape != w.shape:
        raise ValueError("factor vector shape mismatch")
    if np.any(h < 0) or not np.all(np.isfinite(h)):
        raise ValueError("tilt factors must be finite and nonnegative")
    z = float(np.dot(w, h))
    if z <= 0:
        raise ValueError("tilt factors vanish on every positive-weight leaf")
    return w * h / z


def gg_on_cascade(spec, p, n, F, n_outer=400, n_pairs=64, seed=0):
    """Ghirlanda-Guerra residual on a cascade.

    Estimates E[F R_{1,n+1}^p] - (1/n) E[F] E[R_{1,2}^p]
    - (1/n) sum_{l=2..n} E[F R_{1,l}^p], with F a function of the n x n
    overlap array of replicas 1..n. Replicas are drawn iid by weight within
    each cascade draw (n_pairs replica groups per draw); the outer average
    runs over n_outer cascade draws, with a jackknife for the product term.
    """
    if n < 2:
        raise ValueError("n >= 2 required")
    rows = np.empty((n_outer, 3 + (n - 1)))
    for j in range(n_outer):
        rng = make_rng(seed, "gg", j)
        casc = sample_cascade(spec, seed_derive(seed, ("gg-tree", j)))
        # n+1 replicas for the F terms plus a fresh pair for E R^p
        reps = casc.sample_replicas(rng, (n_pairs, n + 3))
        acc = np.zeros(3 + (n - 1))
        for b in range(n_pairs):
            Q = overlap_matrix(spec, reps[b])
            Fv = float(F(Q[:n, :n]))
            acc[0] += Fv * Q[0, n] ** p
            acc[1] += Fv
            acc[2] += Q[n + 1, n + 2] ** p
            for l in range(1, n):
                acc[3 + l - 1] += Fv * Q[0, l] ** p
        rows[j] = acc / n_pairs

    def resid(mean):
        return mean[0] - mean[1] * mean[2] / n - mean[3:].sum() / n

    return jackknife_means(rows, resid)
