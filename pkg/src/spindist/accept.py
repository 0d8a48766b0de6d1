"""Desk-scale acceptance battery.

Thirteen numbered checks covering exactness anchors, superadditivity,
interpolation bounds, cascade overlap laws, overlap-identity residuals,
variance identities, decoupling, finite-N decay, cavity decomposition, and
reproducibility. Each criterion function returns ResultRow records with pass
flags; the whole battery at default settings runs in well under half an hour
on a small desktop.

Seeds for every sub-experiment derive from the battery master seed, so a
repeated run reproduces each value bit-exactly.
"""

import math
import time

import numpy as np

from .bounds import (ass_lower, cavity_decomposition_check, convexity_term,
                     franz_leone_upper, guerra_upper_sk)
from .cascade import CascadeSpec, gg_on_cascade, overlap_matrix, sample_cascade
from .estimate import gg_finite_N, gg_perturbation
from .functional import (eval_P_diluted, eval_P_sk, eval_Pn_diluted,
                         eval_Pn_sk)
from .invariance import (PRESET_CASES, InvarianceCase, gg_variance,
                         invariance_diluted, invariance_sk)
from .models import DilutedSpec, KSat, PSpin, SKSpec, free_energy_quenched
from .orderparam import (CascadeSK, ReplicaSymmetric, TwoStateMixture,
                         solve_onersb_fixed_point)
from .results import ResultRow, params_digest
from .rng import make_rng, seed_derive
from .util import gauss_hermite, mean_se

# frozen oracle: truncated-Poisson evaluation of the cavity-form moment
# E[(P-M)^2/(P+M)^2] for K-sat p=2 beta=1 alpha=0.3, case n=m=1,
# sets ({1},{1}); see tests/oracles.py for the generating formula
KSAT_RHS_ORACLE = 0.020330497

LOG2 = math.log(2)


def _row(quantity, params, value, se=0.0, passed=None, seed=0, n=0, t0=None):
    return ResultRow("acceptance", quantity, params_digest(params),
                     float(value), float(se), 0.0, n, seed, passed,
                     round(time.time() - t0, 3) if t0 else 0.0)


def _rs0():
    return ReplicaSymmetric(("constant", 0.0))


def criterion_01(seed=0):
    """Exactness anchors: F_N = log 2 for decoupled systems."""
    rows = []
    t0 = time.time()
    cases = [
        ("diluted-alpha0", DilutedSpec(p=2, alpha=0.0, theta=KSat(2, 1.0))),
        ("sk-beta0", SKSpec(betas=((2, 0.0),))),
    ]
    for name, spec in cases:
        for N in (4, 8):
            s = seed_derive(seed, ("c01", name, N))
            est = free_energy_quenched(spec, N, 8, s)
            ok = est.value == LOG2 and est.se == 0.0
            rows.append(_row(f"c01.free-energy.{name}.N{N}",
                             {"N": N, "case": name}, est.value, est.se,
                             ok, s, est.n, t0))
    return rows


def criterion_02(seed=0):
    """Superadditivity of N F_N."""
    rows = []
    t0 = time.time()
    specs = [
        ("ksat", DilutedSpec(p=2, alpha=0.5, theta=KSat(2, 1.0))),
        ("sk", SKSpec(betas=((2, 0.5),))),
    ]
    pairs = ((4, 4), (4, 8), (6, 6))
    for name, spec in specs:
        sizes = sorted({n for p in pairs for n in (*p, sum(p))})
        F = {}
        for N in sizes:
            s = seed_derive(seed, ("c02", name, N))
            F[N] = free_energy_quenched(spec, N, 192, s)
        for N, M in pairs:
            lhs = N * F[N].value + M * F[M].value
            rhs = (N + M) * F[N + M].value
            if N == M:
                lhs_se = (N + M) * F[N].se  # same estimate reused
            else:
                lhs_se = math.hypot(N * F[N].se, M * F[M].se)
            tol = 3 * math.hypot(lhs_se, (N + M) * F[N + M].se)
            slack = rhs - lhs
            rows.append(_row(f"c02.superadd.{name}.{N}+{M}",
                             {"pair": (N, M), "spec": name}, slack,
                             tol / 3, slack >= -tol, seed, 192, t0))
    return rows


def criterion_03(seed=0):
    """Franz-Leone upper bound over the diluted grid."""
    rows = []
    t0 = time.time()
    rs0 = _rs0()
    for fam in ("ksat", "pspin"):
        for beta in (0.5, 1.0):
            for alpha in (0.2, 0.5):
                theta = KSat(2, beta) if fam == "ksat" else PSpin(2, beta)
                spec = DilutedSpec(p=2, alpha=alpha, theta=theta)
                s = seed_derive(seed, ("c03", fam, beta, alpha))
                rep = franz_leone_upper(rs0, spec, 8, mc=(200, 400), seed=s,
                                        n_disorder=96)
                rows.append(_row(
                    f"c03.fl-slack.{fam}.b{beta}.a{alpha}",
                    {"family": fam, "beta": beta, "alpha": alpha, "N": 8},
                    rep.slack, rep.se, rep.ok(3), s, 200, t0))
    return rows


def criterion_04(seed=0):
    """Guerra upper bound plus the quadrature anchor for the functional."""
    rows = []
    t0 = time.time()
    rs0 = _rs0()
    cspec = CascadeSpec(q=(0.1, 0.4), m=(0.0, 0.4), M=64)
    for b2 in (0.3, 0.8, 1.2):
        sk = SKSpec(betas=((2, b2),))
        for sname, sigma in (("rs0", rs0), ("cascade1rsb", CascadeSK(cspec, sk))):
            s = seed_derive(seed, ("c04", sname, b2))
            rep = guerra_upper_sk(sigma, sk, 10, mc=(100, 256), seed=s,
                                  n_disorder=64)
            rows.append(_row(f"c04.guerra-slack.{sname}.b{b2}",
                             {"sigma": sname, "beta2": b2, "N": 10},
                             rep.slack, rep.se, rep.ok(3), s, 100, t0))
    sk = SKSpec(betas=((2, 0.3),))
    s = seed_derive(seed, ("c04", "anchor"))
    est = eval_P_sk(rs0, sk, outer=300, inner=400, seed=s)
    x, w = gauss_hermite(60)
    oracle = (LOG2 + math.log(w @ np.cosh(x * math.sqrt(sk.xi_prime(1.0))))
              - sk.theta_fun(1.0) / 2)
    ok = abs(est.value - oracle) <= 3 * est.se
    rows.append(_row("c04.functional-anchor.rs0.b0.3",
                     {"beta2": 0.3, "oracle": oracle},
                     est.value - oracle, est.se, ok, s, est.n, t0))
    return rows


def criterion_05(seed=0):
    """Cascade overlap law and exact ultrametricity."""
    rows = []
    t0 = time.time()
    for q1, q2, m2, M in ((0.2, 0.6, 0.4, 64), (0.0, 0.5, 0.7, 2048)):
        cs = CascadeSpec(q=(q1, q2), m=(0.0, m2), M=M)
        s = seed_derive(seed, ("c05", q1, m2))
        n_worlds, n_rep = 400, 64
        freqs = np.empty(n_worlds)
        violations = 0
        for j in range(n_worlds):
            rng = make_rng(s, "law", j)
            casc = sample_cascade(cs, seed_derive(s, ("tree", j)))
            reps = casc.sample_replicas(rng, (n_rep, 3))
            hits = 0
            for b in range(n_rep):
                Q = overlap_matrix(cs, reps[b])
                r12, r13, r23 = Q[0, 1], Q[0, 2], Q[1, 2]
                hits += r12 == q1
                lo, mid, _ = sorted((r12, r13, r23))
                violations += lo != mid
            freqs[j] = hits / n_rep
        est = mean_se(freqs)
        ok = abs(est.value - m2) <= 4 * est.se
        rows.append(_row(f"c05.overlap-law.q{q1}-m{m2}",
                         {"q": (q1, q2), "m2": m2, "M": M}, est.value,
                         est.se, ok, s, n_worlds, t0))
        rows.append(_row(f"c05.ultrametric-violations.q{q1}-m{m2}",
                         {"q": (q1, q2), "m2": m2, "M": M}, violations,
                         0.0, violations == 0, s, n_worlds * n_rep, t0))
    return rows


def criterion_06(seed=0):
    """Overlap identities on cascade overlap arrays."""
    rows = []
    t0 = time.time()
    specs = [
        ("1rsb", CascadeSpec(q=(0.2, 0.6), m=(0.0, 0.4), M=256)),
        ("2rsb", CascadeSpec(q=(0.2, 0.5, 0.8), m=(0.0, 0.2, 0.4), M=256)),
    ]
    fns = [("one", lambda Q: 1.0), ("r12", lambda Q: Q[0, 1]),
           ("r12sq", lambda Q: Q[0, 1] ** 2)]
    for sname, cs in specs:
        for p in (1, 2, 3):
            for n in (2, 3):
                for fname, F in fns:
                    s = seed_derive(seed, ("c06", sname, p, n, fname))
                    est = gg_on_cascade(cs, p, n, F, n_outer=250, n_pairs=48,
                                        seed=s)
                    ok = abs(est.value) <= 3 * est.se
                    rows.append(_row(
                        f"c06.gg.{sname}.p{p}.n{n}.{fname}",
                        {"spec": sname, "p": p, "n": n, "F": fname},
                        est.value, est.se, ok, s, est.n, t0))
    return rows


def criterion_07(seed=0):
    """Tilted-variance identity, and its strict failure for a mixture."""
    rows = []
    t0 = time.time()
    sk = SKSpec(betas=((2, 0.9),))
    cs = CascadeSpec(q=(0.2, 0.6), m=(0.0, 0.4), M=64)
    sigma = CascadeSK(cs, sk)
    s = seed_derive(seed, ("c07", "cascade"))
    for t, direct, alg in gg_variance(sigma, 2, t_grid=(0.25, 0.5, 1.0),
                                      mc=(200, 384), seed=s):
        ok = abs(direct.value - 1.0) <= 3 * direct.se
        rows.append(_row(f"c07.gss.cascade.t{t}", {"t": t, "p": 2},
                         direct.value, direct.se, ok, s, direct.n, t0))
    mix = TwoStateMixture(0.6)
    s = seed_derive(seed, ("c07", "mixture"))
    (_, _, alg), = gg_variance(mix, 1, t_grid=(1.0,), mc=(200, 384), seed=s)
    bracket = 1.0 - alg.value
    ok = bracket >= 5 * alg.se
    rows.append(_row("c07.gss.mixture-bracket.t1", {"q": 0.6, "p": 1},
                     bracket, alg.se, ok, s, alg.n, t0))
    return rows


def criterion_08(seed=0):
    """Invariance residual battery."""
    rows = []
    t0 = time.time()
    sk = SKSpec(betas=((2, 0.9),))
    q1, q2, conv = solve_onersb_fixed_point(sk, 0.4)
    cs = CascadeSpec(q=(q1, q2), m=(0.0, 0.4), M=64)
    sigma = CascadeSK(cs, sk)
    for name in ("sk-general", "sk-ascsk", "sk-prebscsk", "sk-invar",
                 "sk-overlap-only"):
        s = seed_derive(seed, ("c08", name))
        res = invariance_sk(sigma, sk, PRESET_CASES[name], mc=(300, 512),
                            seed=s)
        ok = abs(res.residual) <= 3 * max(res.se, 1e-300)
        rows.append(_row(f"c08.invariance.{name}",
                         {"preset": name, "fixed-point": (q1, q2)},
                         res.residual, res.se, ok, s, 300, t0))
    rs0 = _rs0()
    degenerate = [
        ("alpha0", DilutedSpec(p=2, alpha=0.0, theta=KSat(2, 1.0))),
        ("theta0", DilutedSpec(p=2, alpha=0.5, theta=KSat(2, 0.0))),
    ]
    for dname, spec in degenerate:
        for name in ("sc-general", "sc-asc", "sc-prebsc", "sc-ascsc"):
            s = seed_derive(seed, ("c08", dname, name))
            res = invariance_diluted(rs0, spec, PRESET_CASES[name],
                                     mc=(40, 128), seed=s)
            rows.append(_row(f"c08.invariance.{dname}.{name}",
                             {"preset": name, "case": dname}, res.residual,
                             res.se, res.residual == 0.0, s, 40, t0))
    spec = DilutedSpec(p=2, alpha=0.3, theta=KSat(2, 1.0))
    case = InvarianceCase(1, 1, ({1}, {1}), r=1)
    s = seed_derive(seed, ("c08", "oracle"))
    res = invariance_diluted(rs0, spec, case, mc=(400, 512), seed=s)
    ok = abs(res.rhs.value - KSAT_RHS_ORACLE) <= 3 * res.rhs.se
    rows.append(_row("c08.invariance.ksat-oracle",
                     {"alpha": 0.3, "beta": 1.0, "oracle": KSAT_RHS_ORACLE},
                     res.rhs.value - KSAT_RHS_ORACLE, res.rhs.se, ok, s,
                     400, t0))
    return rows


def criterion_09(seed=0):
    """n-coordinate functionals decouple to the single-coordinate value."""
    rows = []
    t0 = time.time()
    rsn = ReplicaSymmetric(("normal", 0.7))
    dspec = DilutedSpec(p=2, alpha=0.5, theta=KSat(2, 1.0))
    sk = SKSpec(betas=((2, 0.5),))
    q1, q2, _ = solve_onersb_fixed_point(SKSpec(betas=((2, 0.9),)), 0.4)
    sk9 = SKSpec(betas=((2, 0.9),))
    casc = CascadeSK(CascadeSpec(q=(q1, q2), m=(0.0, 0.4), M=64), sk9)
    setups = [
        ("diluted-rs", lambda n, s: eval_Pn_diluted(rsn, dspec, n, (400, 256), s)
         if n > 1 else eval_P_diluted(rsn, dspec, 400, 256, s)),
        ("sk-rs", lambda n, s: eval_Pn_sk(rsn, sk, n, (300, 256), s)
         if n > 1 else eval_P_sk(rsn, sk, 300, 256, s)),
        ("sk-cascade", lambda n, s: eval_Pn_sk(casc, sk9, n, (250, 256), s)
         if n > 1 else eval_P_sk(casc, sk9, 250, 256, s)),
    ]
    for name, run in setups:
        p1 = run(1, seed_derive(seed, ("c09", name, 1)))
        for n in (2, 3):
            pn = run(n, seed_derive(seed, ("c09", name, n)))
            diff = pn.value - p1.value
            se = math.hypot(pn.se, p1.se)
            rows.append(_row(f"c09.decoupling.{name}.P{n}-P1",
                             {"setup": name, "n": n}, diff, se,
                             abs(diff) <= 3 * se, seed, pn.n, t0))
    return rows


def criterion_10(seed=0):
    """Pointwise convexity inequality."""
    t0 = time.time()
    rng = make_rng(seed, "c10")
    worst = math.inf
    for p in (2, 4, 6):
        x = rng.uniform(-1, 1, 100_000)
        y = rng.uniform(-1, 1, 100_000)
        worst = min(worst, float(convexity_term(x, y, p).min()))
    return [_row("c10.convexity-min", {"p": (2, 4, 6), "draws": 300_000},
                 worst, 0.0, worst >= -1e-12, seed, 300_000, t0)]


def criterion_11(seed=0):
    """Finite-N decay of the perturbation-driven overlap identity."""
    rows = []
    t0 = time.time()
    pert = gg_perturbation(seed=seed_derive(seed, ("c11", "pert")), p_max=2)
    skp = SKSpec(betas=((2, 0.8),), gg_perturbation=pert)
    s = seed_derive(seed, ("c11", "run"))
    res = gg_finite_N(skp, [8, 12, 16], p=1, n=2, F=None, mc=48, seed=s)
    for N, est in res:
        rows.append(_row(f"c11.gg-residual.N{N}", {"N": N, "beta2": 0.8},
                         est.value, est.se, None, s, est.n, t0))
    lo, hi = res[0][1], res[-1][1]
    tol = 3 * math.hypot(lo.se, hi.se)
    ok = abs(hi.value) <= abs(lo.value) + tol
    rows.append(_row("c11.gg-decay", {"N": (8, 16), "beta2": 0.8},
                     abs(hi.value) - abs(lo.value), tol / 3, ok, s, 48, t0))
    return rows


def criterion_12(seed=0):
    """Cavity decomposition residual shrinkage."""
    rows = []
    t0 = time.time()
    spec = DilutedSpec(p=2, alpha=0.4, theta=PSpin(2, 0.5))
    s = seed_derive(seed, ("c12",))
    res = {}
    for N in (6, 10):
        site, clause = cavity_decomposition_check(spec, N, n_disorder=512,
                                                  seed=seed_derive(s, (N,)))
        res[N] = site
        rows.append(_row(f"c12.site-residual.N{N}", {"N": N}, site.residual,
                         site.se, None, s, 512, t0))
        rows.append(_row(f"c12.clause-residual.N{N}", {"N": N},
                         clause.residual, clause.se,
                         abs(clause.residual) <= 1e-10, s, 512, t0))
    tol = 3 * math.hypot(res[6].se, res[10].se)
    ok = abs(res[10].residual) <= abs(res[6].residual) + tol
    rows.append(_row("c12.site-shrinkage", {"N": (6, 10)},
                     abs(res[10].residual) - abs(res[6].residual), tol / 3,
                     ok, s, 512, t0))
    return rows


def criterion_13(seed=0):
    """Bit-exact reproducibility of representative runs."""
    rows = []
    t0 = time.time()
    rs0 = _rs0()
    spec = DilutedSpec(p=2, alpha=0.3, theta=KSat(2, 1.0))
    s = seed_derive(seed, ("c13", "fl"))
    a = franz_leone_upper(rs0, spec, 8, mc=(100, 256), seed=s, n_disorder=32)
    b = franz_leone_upper(rs0, spec, 8, mc=(100, 256), seed=s, n_disorder=32)
    ok = (a.bound.value == b.bound.value and a.f_n.value == b.f_n.value
          and a.bound.se == b.bound.se)
    rows.append(_row("c13.repro.franz-leone", {"seed": s}, a.slack, a.se,
                     ok, s, 100, t0))

    sk = SKSpec(betas=((2, 0.9),))
    sigma = CascadeSK(CascadeSpec(q=(0.0, 0.3), m=(0.0, 0.4), M=32), sk)
    s = seed_derive(seed, ("c13", "inv"))
    ra = invariance_sk(sigma, sk, PRESET_CASES["sk-ascsk"], mc=(60, 256), seed=s)
    rb = invariance_sk(sigma, sk, PRESET_CASES["sk-ascsk"], mc=(60, 256), seed=s)
    ok = ra.residual == rb.residual and ra.se == rb.se
    rows.append(_row("c13.repro.invariance", {"seed": s}, ra.residual,
                     ra.se, ok, s, 60, t0))

    skp = SKSpec(betas=((2, 0.8),),
                 gg_perturbation=gg_perturbation(seed_derive(seed, ("c13", "p"))))
    s = seed_derive(seed, ("c13", "gg"))
    (N, ga), = gg_finite_N(skp, [8], mc=24, seed=s)
    (_, gb), = gg_finite_N(skp, [8], mc=24, seed=s)
    ok = ga.value == gb.value and ga.se == gb.se
    rows.append(_row("c13.repro.gg-finite-N", {"seed": s}, ga.value, ga.se,
                     ok, s, 24, t0))
    return rows


CRITERIA = {
    1: ("exactness anchors", criterion_01),
    2: ("superadditivity of N F_N", criterion_02),
    3: ("Franz-Leone bound grid", criterion_03),
    4: ("Guerra bound grid and functional anchor", criterion_04),
    5: ("cascade overlap law and ultrametricity", criterion_05),
    6: ("overlap identities on cascades", criterion_06),
    7: ("tilted variance identity", criterion_07),
    8: ("invariance residual battery", criterion_08),
    9: ("n-coordinate decoupling", criterion_09),
    10: ("convexity inequality", criterion_10),
    11: ("finite-N identity decay", criterion_11),
    12: ("cavity decomposition shrinkage", criterion_12),
    13: ("bit-exact reproducibility", criterion_13),
}


def run_criterion(k, seed=0):
    desc, fn = CRITERIA[k]
    return fn(seed=seed)


def run_all(seed=0, criteria=None):
    """Run the battery; returns (rows, ok)."""
    rows = []
    for k in sorted(criteria or CRITERIA):
        rows.extend(run_criterion(k, seed=seed))
    ok = all(r.passed for r in rows if r.passed is not None)
    return rows, ok
