"""Model families: diluted (K-sat / even p-spin) and mixed p-spin SK.

Diluted Hamiltonians are sums of a Poisson(alpha*N) number of clause terms
theta_k evaluated on p uniformly chosen spins, where exp(theta) factors as
a*(1 + b*f_1...f_p).  The SK family is the mixed p-spin Gaussian Hamiltonian
with covariance N*xi(R_12), xi(x) = sum_p beta_p^2 x^p.

Everything here is exact-at-small-N machinery: disorder sampling, energy
evaluation (vectorized over configurations), Gibbs tables by enumeration,
and quenched free energies.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .rng import make_rng, seed_derive
from .util import Estimate, enumerate_configs, logsumexp, mean_se

# ---------------------------------------------------------------------------
# theta families
# ---------------------------------------------------------------------------


@dataclass
class ThetaBatch:
    """A batch of frozen theta draws in factored form exp(theta) = a(1+b*prod f).

    log_a : (n,) log of the a factor per draw
    b     : (n,) the b factor per draw
    fvals : (n, p, 2) values (f_l(-1), f_l(+1)) per draw and slot
    """

    log_a: np.ndarray
    b: np.ndarray
    fvals: np.ndarray

    def __len__(self):
        return self.log_a.shape[0]

    @property
    def p(self):
        return self.fvals.shape[1]

    def eval(self, spins):
        """theta values for spin tuples.

        spins: (..., n, p) array of -1/+1 values (slot j of draw k gets
        spins[..., k, j]).  Returns (..., n).
        """
        spins = np.asarray(spins)
        sel = (spins > 0).astype(np.intp)
        # gather f_l(sigma_l) per draw/slot
        f = np.take_along_axis(
            np.broadcast_to(self.fvals, spins.shape + (2,)), sel[..., None], axis=-1
        )[..., 0]
        prod = np.prod(f, axis=-1)
        return self.log_a + np.log1p(self.b * prod)

    def take(self, idx):
        return ThetaBatch(self.log_a[idx], self.b[idx], self.fvals[idx])


class ThetaFamily:
    """Base class: a law of random clause functions theta(sigma_1..sigma_p)."""

    p = None

    def sample(self, rng, n):
        """Draw n independent theta realizations as a ThetaBatch."""
        raise NotImplementedError


class PSpin(ThetaFamily):
    """theta(sigma) = beta*J*sigma_1...sigma_p, i.e. a = ch(beta J), b = th(beta J).

    J is drawn per clause from j_dist: "rademacher" (fair +-1, default),
    "gaussian", or "plus" (the deliberately asymmetric J = +1 used to
    exercise validation failures).
    """

    def __init__(self, p, beta, j_dist="rademacher"):
        if p < 2 or p % 2:
            raise ValueError("p must be an even integer >= 2")
        if beta < 0:
            raise ValueError("beta must be nonnegative")
        if j_dist not in ("rademacher", "gaussian", "plus"):
            raise ValueError(f"unknown j_dist {j_dist!r}")
        self.p, self.beta, self.j_dist = p, float(beta), j_dist

    def sample(self, rng, n):
        if self.j_dist == "rademacher":
            J = rng.integers(0, 2, size=n) * 2.0 - 1.0
        elif self.j_dist == "gaussian":
            J = rng.standard_normal(n)
        else:
            J = np.ones(n)
        bj = self.beta * J
        fvals = np.broadcast_to(
            np.array([-1.0, 1.0]), (n, self.p, 2)
        ).copy()
        return ThetaBatch(np.log(np.cosh(bj)), np.tanh(bj), fvals)


class KSat(ThetaFamily):
    """theta(sigma) = -beta * 1{sigma matches the forbidden pattern J}.

    a = 1, b = exp(-beta) - 1 < 0, f_l(sigma) = (1 + J_l sigma)/2 with fair
    +-1 signs J_l drawn independently per clause and slot.
    """

    def __init__(self, p, beta):
        if p < 2 or p % 2:
            raise ValueError("p must be an even integer >= 2")
        if beta < 0:
            raise ValueError("beta must be nonnegative")
        self.p, self.beta = p, float(beta)

    def sample(self, rng, n):
        J = rng.integers(0, 2, size=(n, self.p)) * 2.0 - 1.0
        fvals = np.stack([(1 - J) / 2, (1 + J) / 2], axis=-1)
        b = math.exp(-self.beta) - 1.0
        return ThetaBatch(np.zeros(n), np.full(n, b), fvals)


class CustomTable(ThetaFamily):
    """User-supplied theta law given by a sampler of (log_a, b, fvals) triples.

    sampler(rng) must return (log_a: float, b: float, fvals: (p,2) array);
    the clause value is then theta(sigma) = log_a + log1p(b * prod f_l(sigma_l)).
    """

    def __init__(self, p, sampler):
        if p < 2 or p % 2:
            raise ValueError("p must be an even integer >= 2")
        self.p, self.sampler = p, sampler

    def sample(self, rng, n):
        log_a = np.empty(n)
        b = np.empty(n)
        fvals = np.empty((n, self.p, 2))
        for k in range(n):
            la, bk, fv = self.sampler(rng)
            log_a[k], b[k] = la, bk
            fvals[k] = np.asarray(fv, dtype=float)
        return ThetaBatch(log_a, b, fvals)


def validate_theta(theta, n_max=4, samples=2000, seed=0):
    """Check the admissibility conditions of a theta family by sampling.

    Conditions checked, in order: E(-b)^n >= 0 for n <= n_max (statistically,
    with 3*SE slack), |b f_1...f_p| < 1 on every draw (worst case over sign
    patterns), theta finite on every draw and sign pattern, and E|log a|
    finite.

    Returns a dict with keys ok, moments (list of Estimate for E(-b)^n),
    max_abs_bf, theta_range.
    """
    if n_max < 1 or samples < 1:
        raise ValueError("n_max and samples must be >= 1")
    rng = make_rng(seed, "validate-theta")
    batch = theta.sample(rng, samples)
    if not (
        np.all(np.isfinite(batch.log_a))
        and np.all(np.isfinite(batch.b))
        and np.all(np.isfinite(batch.fvals))
    ):
        raise ValueError("theta draws contain non-finite entries")
    moments = []
    ok = True
    for n in range(1, n_max + 1):
        est = mean_se((-batch.b) ** n)
        moments.append(est)
        if est.value < -3 * est.se:
            ok = False
    fmax = np.max(np.abs(batch.fvals), axis=-1)  # (samples, p)
    abs_bf = np.abs(batch.b) * np.prod(fmax, axis=-1)
    if not np.all(abs_bf < 1):
        ok = False
    # all 2^p theta values per draw
    p = batch.p
    patterns = enumerate_configs(p)  # (2^p, p)
    vals = batch.eval(
        np.broadcast_to(patterns[:, None, :], (2**p, samples, p))
    )
    if not np.all(np.isfinite(vals)):
        ok = False
    return {
        "ok": ok,
        "moments": moments,
        "max_abs_bf": float(np.max(abs_bf)),
        "theta_range": (float(np.min(vals)), float(np.max(vals))),
    }


# ---------------------------------------------------------------------------
# diluted models
# ---------------------------------------------------------------------------


def default_c_schedule(N):
    """Default perturbation size c_N = ceil(N^(1/4))."""
    return math.ceil(N ** 0.25)


@dataclass
class DilutedSpec:
    """Diluted model: clause density alpha, clause law theta, optional perturbation.

    perturbation is None (off) or a callable N -> c_N.
    """

    p: int
    alpha: float
    theta: ThetaFamily
    perturbation: object = None

    def __post_init__(self):
        if self.p < 2 or self.p % 2:
            raise ValueError("p must be an even integer >= 2")
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        if self.theta.p != self.p:
            raise ValueError("theta family p does not match spec p")
        if self.perturbation is not None and not callable(self.perturbation):
            raise ValueError("perturbation must be None or a schedule N -> c_N")

    def c_N(self, N):
        if self.perturbation is None:
            return 0
        c = self.perturbation(N)
        if c > N:
            raise ValueError("schedule must satisfy c_N <= N")
        return c


@dataclass
class ClauseSet:
    """Frozen disorder of a diluted system on N sites.

    clauses: (idx, thetas) with idx an (n, p) int array of sites in 1..N.
    blocks: per perturbation block, (idx, thetas) with idx (n_l, p-1); the
    block's energy is log Av_eps exp sum_k theta_k(eps, sigma...).
    """

    N: int
    idx: np.ndarray
    thetas: ThetaBatch
    blocks: list = field(default_factory=list)


def sample_diluted_disorder(spec, N, seed):
    """Draw a ClauseSet: Poisson(alpha*N) clauses on uniform iid site tuples."""
    if N < 1:
        raise ValueError("N >= 1 required")
    rng = make_rng(seed, "diluted-disorder")
    n_cl = int(rng.poisson(spec.alpha * N))
    idx = rng.integers(1, N + 1, size=(n_cl, spec.p))
    thetas = spec.theta.sample(rng, n_cl)
    blocks = []
    c = spec.c_N(N)
    if c:
        for _ in range(int(rng.poisson(c))):
            n_in = int(rng.poisson(spec.alpha * spec.p))
            bidx = rng.integers(1, N + 1, size=(n_in, spec.p - 1))
            blocks.append((bidx, spec.theta.sample(rng, n_in)))
    return ClauseSet(N=N, idx=idx, thetas=thetas, blocks=blocks)


def energy_diluted(clauses, config):
    """-H_N(sigma) for one configuration or a batch.

    config: (N,) or (C, N) array of -1/+1. Returns float or (C,) array.
    """
    config = np.asarray(config)
    single = config.ndim == 1
    S = config[None, :] if single else config
    if clauses.idx.size and int(clauses.idx.max()) > S.shape[1]:
        raise IndexError("clause index exceeds N")
    out = np.zeros(S.shape[0])
    if len(clauses.thetas):
        out += clauses.thetas.eval(S[:, clauses.idx - 1]).sum(axis=1)
    for bidx, bth in clauses.blocks:
        if bidx.size and int(bidx.max()) > S.shape[1]:
            raise IndexError("perturbation index exceeds N")
        if len(bth) == 0:
            # log Av_eps exp(0) = 0
            continue
        sites = S[:, bidx - 1]  # (C, n_in, p-1)
        tot = np.zeros((2, S.shape[0]))
        for j, eps in enumerate((-1.0, 1.0)):
            tup = np.concatenate(
                [np.full(sites.shape[:2] + (1,), eps), sites], axis=-1
            )
            tot[j] = bth.eval(tup).sum(axis=1)
        out += logsumexp(tot, axis=0) - math.log(2.0)
    return float(out[0]) if single else out


# ---------------------------------------------------------------------------
# SK mixed p-spin
# ---------------------------------------------------------------------------


class SKSpec:
    """Mixed p-spin SK model: betas is a list of (p, beta_p), p = 1 or even.

    xi(x) = sum beta_p^2 x^p, theta(x) = x xi'(x) - xi(x).
    perturbation: None or a schedule N -> c_N (log-ch / linear Gaussian
    clause-style perturbation). gg_perturbation: None or a dict with keys
    "exponent" (delta_N = N^-exponent) and "betas" (list of (p, beta_N_p)
    with |beta_N_p| <= 2^-p).
    """

    def __init__(self, betas, perturbation=None, gg_perturbation=None):
        betas = [(int(p), float(b)) for p, b in betas]
        for p, _ in betas:
            if p != 1 and (p < 2 or p % 2):
                raise ValueError("each p must be 1 or an even integer >= 2")
        if len({p for p, _ in betas}) != len(betas):
            raise ValueError("duplicate p in beta list")
        self.betas = sorted(betas)
        if gg_perturbation is not None:
            for p, b in gg_perturbation["betas"]:
                if abs(b) > 2.0 ** (-p):
                    raise ValueError("|beta_N_p| <= 2^-p required")
        self.perturbation = perturbation
        self.gg_perturbation = gg_perturbation

    def xi(self, x):
        return sum(b * b * np.asarray(x) ** p for p, b in self.betas) if self.betas else np.zeros_like(np.asarray(x, dtype=float))

    def xi_prime(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for p, b in self.betas:
            out = out + p * b * b * x ** (p - 1)
        return out

    def theta_fun(self, x):
        return np.asarray(x) * self.xi_prime(x) - self.xi(x)

    def c_N(self, N):
        return self.perturbation(N) if self.perturbation is not None else 0


@dataclass
class SKDisorder:
    """Frozen couplings of an SK system: one dense tensor per p in the mix.

    tensors[p] has shape (N,)*p of iid standard Gaussians. gg_tensors holds
    the independent copies for the delta_N perturbation. pert_xi / pert_theta
    hold, per perturbation clause, dicts p -> tensor of rank p-1 / p used to
    realize Gaussian fields with covariance xi'(R) and theta(R).
    """

    N: int
    spec: SKSpec
    tensors: dict
    gg_tensors: dict = field(default_factory=dict)
    pert_xi: list = field(default_factory=list)
    pert_theta: list = field(default_factory=list)


def _gauss_tensor(rng, N, rank):
    if rank == 0:
        return float(rng.standard_normal())
    if N**rank > 5e7:
        raise ValueError("p-spin tensor too large; reduce N or p")
    return rng.standard_normal((N,) * rank)


def sample_sk_disorder(spec, N, seed):
    """Draw all Gaussian coupling tensors of an SKSpec at size N."""
    if N < 1:
        raise ValueError("N >= 1 required")
    rng = make_rng(seed, "sk-disorder")
    tensors = {p: _gauss_tensor(rng, N, p) for p, _ in spec.betas}
    gg_tensors = {}
    if spec.gg_perturbation is not None:
        for p, _ in spec.gg_perturbation["betas"]:
            gg_tensors[p] = _gauss_tensor(rng, N, p)
    pert_xi, pert_theta = [], []
    c = spec.c_N(N)
    if c:
        for _ in range(int(rng.poisson(c))):
            pert_xi.append({p: _gauss_tensor(rng, N, p - 1) for p, _ in spec.betas})
        for _ in range(int(rng.poisson(c))):
            pert_theta.append({p: _gauss_tensor(rng, N, p) for p, _ in spec.betas})
    return SKDisorder(N=N, spec=spec, tensors=tensors, gg_tensors=gg_tensors,
                      pert_xi=pert_xi, pert_theta=pert_theta)


def _contract(tensor, S):
    """sum_{i_1..i_r} tensor * sigma_{i_1}..sigma_{i_r} per config row of S.

    tensor: (N,)*r, S: (C, N). Returns (C,). Contracts one axis at a time so
    peak memory is N^(r-1) * C.
    """
    r = tensor.ndim
    if r == 0:
        return np.full(S.shape[0], float(tensor))
    out = np.tensordot(tensor, S, axes=([r - 1], [1]))  # (N,)*{r-1} + (C,)
    for _ in range(r - 1):
        out = (out * S.T).sum(axis=-2)
    return out


def energy_sk(disorder, config, scale_N=None):
    """-H_N(sigma) for one configuration or a batch of rows.

    scale_N overrides the N used in the N^{-(p-1)/2} normalization (the
    cavity couplings reuse an (N+1)-system's tensors at the smaller size).
    """
    config = np.asarray(config, dtype=float)
    single = config.ndim == 1
    S = config[None, :] if single else config
    N = scale_N if scale_N is not None else S.shape[1]
    spec = disorder.spec
    out = np.zeros(S.shape[0])
    for p, b in spec.betas:
        if b:
            out += b * N ** (-(p - 1) / 2) * _contract(disorder.tensors[p], S)
    if spec.gg_perturbation is not None and disorder.gg_tensors:
        delta = N ** (-spec.gg_perturbation["exponent"])
        for p, b in spec.gg_perturbation["betas"]:
            out += delta * b * N ** (-(p - 1) / 2) * _contract(disorder.gg_tensors[p], S)
    for clause in disorder.pert_xi:
        # Gaussian field with covariance xi'(R_12): sum_p beta_p sqrt(p) *
        # N^{-(p-1)/2} g-contraction of rank p-1
        g = np.zeros(S.shape[0])
        for p, b in spec.betas:
            if b:
                g += b * math.sqrt(p) * N ** (-(p - 1) / 2) * _contract(clause[p], S)
        out += np.log(np.cosh(g))
    for clause in disorder.pert_theta:
        # Gaussian field with covariance theta(R_12)
        g = np.zeros(S.shape[0])
        for p, b in spec.betas:
            if b and p > 1:
                g += b * math.sqrt(p - 1) * N ** (-p / 2) * _contract(clause[p], S)
        out += g
    return float(out[0]) if single else out


# ---------------------------------------------------------------------------
# exact Gibbs measures and free energy
# ---------------------------------------------------------------------------


@dataclass
class GibbsTable:
    N: int
    log_Z: float
    probabilities: np.ndarray


def enumerate_gibbs(energy, N):
    """Exact Gibbs table over all 2^N configurations.

    energy is either a callable accepting a (C, N) batch (or a single row)
    and returning -H values, or a precomputed (2^N,) array in the canonical
    enumeration order.
    """
    if N > 24:
        raise ValueError("enumerate_gibbs guard: N <= 24")
    configs = enumerate_configs(N)
    if callable(energy):
        try:
            e = np.asarray(energy(configs), dtype=float)
            if e.shape != (2**N,):
                raise TypeError
        except TypeError:
            e = np.array([float(energy(row)) for row in configs])
    else:
        e = np.asarray(energy, dtype=float)
        if e.shape != (2**N,):
            raise ValueError("energy array has wrong length")
    log_Z = float(logsumexp(e))
    probs = np.exp(e - log_Z)
    return GibbsTable(N=N, log_Z=log_Z, probabilities=probs)


def _disorder_energy_table(spec, N, seed):
    """Sample one disorder realization and return its -H over all configs."""
    configs = enumerate_configs(N)
    if isinstance(spec, DilutedSpec):
        dis = sample_diluted_disorder(spec, N, seed)
        return energy_diluted(dis, configs)
    dis = sample_sk_disorder(spec, N, seed)
    return energy_sk(dis, configs)


def free_energy_quenched(spec, N, n_disorder, seed):
    """F_N = (1/N) E log Z_N by exact enumeration over disorder draws."""
    if N > 24:
        raise ValueError("N <= 24 required")
    if n_disorder < 2:
        raise ValueError("n_disorder >= 2 required")
    vals = np.empty(n_disorder)
    for j in range(n_disorder):
        e = _disorder_energy_table(spec, N, seed_derive(seed, ("fq", N, j)))
        vals[j] = logsumexp(e) / N
    return mean_se(vals)
