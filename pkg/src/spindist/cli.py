"""Command-line interface.

Every subcommand reads an optional TOML config (--config), applies flag
overrides on top, runs one experiment, prints the rows, and writes
<out>/<prefix>-<experiment>.csv plus a JSON summary alongside. Exit codes:
0 when every pass-flagged row holds, 1 when an assertion fails, 2 on a
configuration error (the offending dotted key is printed to stderr).
"""

import argparse
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import accept
from .bounds import (ass_lower, cavity_decomposition_check, franz_leone_upper,
                     guerra_upper_sk)
from .cascade import gg_on_cascade, overlap_matrix, sample_cascade
from .config import (ConfigError, build_model, build_sigma, cascade_spec,
                     defaults, load_config, out_dir)
from .estimate import gg_finite_N, gg_perturbation, multioverlap_N
from .functional import (eval_P_diluted, eval_P_sk, eval_Pn_diluted,
                         eval_Pn_sk, plast_check)
from .invariance import PRESET_CASES, gg_variance, invariance_diluted, invariance_sk
from .models import DilutedSpec, SKSpec, free_energy_quenched, validate_theta
from .orderparam import CascadeSK
from .results import (ResultRow, all_passed, format_rows, params_digest,
                      write_rows, write_summary)
from .rng import make_rng, seed_derive

_GG_FNS = {
    "one": lambda Q: 1.0,
    "r12": lambda Q: Q[0, 1],
    "r12sq": lambda Q: Q[0, 1] ** 2,
}


def _ints(text):
    return [int(x) for x in text.split(",") if x]


def _floats(text):
    return [float(x) for x in text.split(",") if x]


def _betas(text):
    out = []
    for part in text.split(","):
        p, _, b = part.partition(":")
        out.append([int(p), float(b)])
    return out


# flag -> (config section, key, parser); None parser keeps the raw string
_OVERRIDES = [
    ("model", "model", "kind", None),
    ("p", "model", "p", int),
    ("alpha", "model", "alpha", float),
    ("beta", "model", "beta", float),
    ("j_dist", "model", "j_dist", None),
    ("betas", "model", "betas", _betas),
    ("sigma", "sigma", "kind", None),
    ("value", "sigma", "value", float),
    ("scale", "sigma", "scale", float),
    ("q", "sigma", "q", _floats),
    ("m", "sigma", "m", _floats),
    ("truncation", "sigma", "truncation", int),
    ("mix_q", "sigma", "mix_q", float),
    ("outer", "mc", "outer", int),
    ("inner", "mc", "inner", int),
    ("n_disorder", "mc", "n_disorder", int),
    ("prefix", "output", "prefix", None),
]


def _load_cfg(args):
    cfg = load_config(args.config) if args.config else defaults()
    for flag, section, key, parse in _OVERRIDES:
        val = getattr(args, flag, None)
        if val is None:
            continue
        if flag == "sigma" and val == "cascade-1rsb":
            val = "cascade"
        try:
            cfg[section][key] = parse(val) if parse else val
        except ValueError as e:
            raise ConfigError(f"{section}.{key}", str(e)) from e
    if args.out:
        cfg["output"]["dir"] = args.out
    return cfg


def _sk_model(cfg):
    spec = build_model(cfg)
    if not isinstance(spec, SKSpec):
        raise ConfigError("model.kind", "this experiment needs an sk model")
    return spec


def _diluted_model(cfg):
    spec = build_model(cfg)
    if not isinstance(spec, DilutedSpec):
        raise ConfigError("model.kind", "this experiment needs a diluted model")
    return spec


def _row(experiment, quantity, params, value, se=0.0, passed=None, seed=0,
         n=0, t0=None):
    return ResultRow(experiment, quantity, params_digest(params),
                     float(value), float(se), 0.0, n, seed, passed,
                     round(time.time() - t0, 3) if t0 else 0.0)


# ---------------------------------------------------------------------------
# subcommand bodies: (args, cfg, seed) -> list of ResultRow
# ---------------------------------------------------------------------------

def _cmd_free_energy(args, cfg, seed):
    t0 = time.time()
    spec = build_model(cfg)
    est = free_energy_quenched(spec, args.N, cfg["mc"]["n_disorder"],
                               seed_derive(seed, ("free-energy",)))
    params = {"N": args.N, "model": cfg["model"]}
    return [_row("free-energy", f"F_N.N{args.N}", params, est.value, est.se,
                 math.isfinite(est.value), seed, est.n, t0)]


def _cmd_enumerate(args, cfg, seed):
    t0 = time.time()
    spec = build_model(cfg)
    nd = cfg["mc"]["n_disorder"]
    params = {"N": args.N, "model": cfg["model"]}
    f = free_energy_quenched(spec, args.N, nd, seed_derive(seed, ("enum-f",)))
    rows = [_row("enumerate", f"F_N.N{args.N}", params, f.value, f.se,
                 math.isfinite(f.value), seed, f.n, t0)]
    for name, power in (("R12", 1), ("R12sq", 2)):
        est = multioverlap_N(spec, args.N, (1, 2), n_disorder=nd,
                             seed=seed_derive(seed, ("enum", name)),
                             power=power)
        rows.append(_row("enumerate", f"{name}.N{args.N}", params, est.value,
                         est.se, None, seed, est.n, t0))
    return rows


def _cmd_bounds(args, cfg, seed):
    t0 = time.time()
    mc = (cfg["mc"]["outer"], cfg["mc"]["inner"])
    nd = cfg["mc"]["n_disorder"]
    which = args.bound
    if which == "franz-leone":
        spec = _diluted_model(cfg)
        sigma = build_sigma(cfg, model=spec)
        rep = franz_leone_upper(sigma, spec, args.N, mc=mc, seed=seed,
                                n_disorder=nd)
    elif which == "guerra":
        spec = _sk_model(cfg)
        sigma = build_sigma(cfg, model=spec)
        rep = guerra_upper_sk(sigma, spec, args.N, mc=mc, seed=seed,
                              n_disorder=nd)
    elif which == "ass-lower":
        spec = build_model(cfg)
        rows = []
        for N in args.sizes:
            est = ass_lower(spec, N, n_disorder=nd,
                            seed=seed_derive(seed, ("ass", N)))
            rows.append(_row("bounds-ass-lower", f"increment.N{N}",
                             {"N": N, "model": cfg["model"]}, est.value,
                             est.se, None, seed, est.n, t0))
        return rows
    else:  # cavity
        spec = _diluted_model(cfg)
        rows = []
        for N in args.sizes:
            site, clause = cavity_decomposition_check(
                spec, N, n_disorder=nd, seed=seed_derive(seed, ("cav", N)))
            params = {"N": N, "model": cfg["model"]}
            rows.append(_row("bounds-cavity", f"site-residual.N{N}", params,
                             site.residual, site.se, None, seed, nd, t0))
            rows.append(_row("bounds-cavity", f"clause-residual.N{N}", params,
                             clause.residual, clause.se,
                             abs(clause.residual) <= 1e-10, seed, nd, t0))
        return rows
    params = {"N": args.N, "model": cfg["model"], "sigma": cfg["sigma"]}
    exp = f"bounds-{which}"
    return [
        _row(exp, f"F_N.N{args.N}", params, rep.f_n.value, rep.f_n.se, None,
             seed, rep.f_n.n, t0),
        _row(exp, f"bound.N{args.N}", params, rep.bound.value, rep.bound.se,
             None, seed, rep.bound.n, t0),
        _row(exp, f"slack.N{args.N}", params, rep.slack, rep.se, rep.ok(3),
             seed, rep.bound.n, t0),
    ]


def _cmd_functional(args, cfg, seed):
    t0 = time.time()
    spec = build_model(cfg)
    sigma = build_sigma(cfg, model=spec)
    outer, inner = cfg["mc"]["outer"], cfg["mc"]["inner"]
    params = {"model": cfg["model"], "sigma": cfg["sigma"], "n": args.n}
    diluted = isinstance(spec, DilutedSpec)
    if args.functional == "p":
        fn = eval_P_diluted if diluted else eval_P_sk
        est = fn(sigma, spec, outer, inner, seed)
        name = "P"
    elif args.functional == "pn":
        fn = eval_Pn_diluted if diluted else eval_Pn_sk
        est = fn(sigma, spec, args.n, (outer, inner), seed)
        name = f"P{args.n}"
    else:  # plast
        if not diluted:
            raise ConfigError("model.kind",
                              "the plast diagnostic needs a diluted model")
        est = plast_check(sigma, spec, (outer, inner), seed)
        name = "plast-residual"
    ok = math.isfinite(est.value) if name != "plast-residual" else None
    return [_row("functional", name, params, est.value, est.se, ok, seed,
                 est.n, t0)]


def _cmd_invariance(args, cfg, seed):
    t0 = time.time()
    case = PRESET_CASES[args.preset]
    mc = (cfg["mc"]["outer"], cfg["mc"]["inner"])
    if args.preset.startswith("sk-"):
        spec = _sk_model(cfg)
        sigma = build_sigma(cfg, model=spec)
        res = invariance_sk(sigma, spec, case, mc=mc, seed=seed)
    else:
        spec = _diluted_model(cfg)
        sigma = build_sigma(cfg, model=spec)
        res = invariance_diluted(sigma, spec, case, mc=mc, seed=seed)
    params = {"preset": args.preset, "model": cfg["model"],
              "sigma": cfg["sigma"]}
    ok = abs(res.residual) <= 3 * max(res.se, 1e-300)
    return [
        _row("invariance", f"{args.preset}.lhs", params, res.lhs.value,
             res.lhs.se, None, seed, res.lhs.n, t0),
        _row("invariance", f"{args.preset}.rhs", params, res.rhs.value,
             res.rhs.se, None, seed, res.rhs.n, t0),
        _row("invariance", f"{args.preset}.residual", params, res.residual,
             res.se, ok, seed, res.lhs.n, t0),
    ]


def _cmd_gg(args, cfg, seed):
    t0 = time.time()
    rows = []
    if args.gg == "cascade":
        cs = cascade_spec(cfg)
        F = _GG_FNS[args.F]
        est = gg_on_cascade(cs, args.power, args.n, F, n_outer=args.worlds,
                            n_pairs=args.pairs, seed=seed)
        params = {"cascade": cfg["sigma"], "p": args.power, "n": args.n,
                  "F": args.F}
        ok = abs(est.value) <= 3 * est.se
        rows.append(_row("gg-cascade", f"residual.p{args.power}.n{args.n}.{args.F}",
                         params, est.value, est.se, ok, seed, est.n, t0))
    elif args.gg == "finite-N":
        spec = _sk_model(cfg)
        if spec.gg_perturbation is None:
            spec = SKSpec(betas=spec.betas,
                          gg_perturbation=gg_perturbation(
                              seed=seed_derive(seed, ("pert",)),
                              p_max=cfg["model"]["gg_p_max"],
                              exponent=cfg["model"]["gg_exponent"]))
        res = gg_finite_N(spec, args.sizes, p=args.power, n=args.n,
                          F=None if args.F == "one" else _GG_FNS[args.F],
                          mc=cfg["mc"]["n_disorder"], seed=seed)
        params = {"model": cfg["model"], "p": args.power, "n": args.n,
                  "sizes": args.sizes}
        for N, est in res:
            rows.append(_row("gg-finite-N", f"residual.N{N}", params,
                             est.value, est.se, None, seed, est.n, t0))
    else:  # gss
        spec = _sk_model(cfg)
        sigma = build_sigma(cfg, model=spec)
        mc = (cfg["mc"]["outer"], cfg["mc"]["inner"])
        params = {"model": cfg["model"], "sigma": cfg["sigma"], "p": args.power}
        for t, direct, alg in gg_variance(sigma, args.power, t_grid=args.t,
                                          mc=mc, seed=seed):
            ok = abs(direct.value - 1.0) <= 3 * direct.se
            rows.append(_row("gg-gss", f"variance.t{t}", params, direct.value,
                             direct.se, ok, seed, direct.n, t0))
            rows.append(_row("gg-gss", f"algebraic.t{t}", params, alg.value,
                             alg.se, None, seed, alg.n, t0))
    return rows


def _cmd_cascade(args, cfg, seed):
    t0 = time.time()
    cs = cascade_spec(cfg)
    rows = []
    if args.cascade == "sample":
        casc = sample_cascade(cs, seed)
        w = np.sort(casc.leaf_w)[::-1]
        params = {"cascade": cfg["sigma"]}
        rows.append(_row("cascade-sample", "n_leaves", params, casc.n_leaves,
                         0.0, None, seed, 1, t0))
        entropy = float(-(w[w > 0] * np.log(w[w > 0])).sum())
        rows.append(_row("cascade-sample", "entropy", params, entropy, 0.0,
                         None, seed, 1, t0))
        for i in range(min(args.top, w.size)):
            rows.append(_row("cascade-sample", f"weight.{i}", params, w[i],
                             0.0, None, seed, 1, t0))
    else:  # overlap-law
        freqs = np.zeros((args.worlds, cs.k))
        values = cs.overlap_values
        for j in range(args.worlds):
            rng = make_rng(seed, "law", j)
            casc = sample_cascade(cs, seed_derive(seed, ("tree", j)))
            reps = casc.sample_replicas(rng, (args.pairs, 2))
            r = np.array([overlap_matrix(cs, pr)[0, 1] for pr in reps])
            for l in range(cs.k):
                freqs[j, l] = np.mean(r == values[l + 1])
        params = {"cascade": cfg["sigma"], "worlds": args.worlds,
                  "pairs": args.pairs}
        for l, target in enumerate(cs.overlap_probs):
            m = freqs[:, l].mean()
            se = freqs[:, l].std(ddof=1) / math.sqrt(args.worlds)
            ok = abs(m - target) <= 4 * max(se, 1e-300)
            rows.append(_row("cascade-overlap-law", f"P(R=q{l + 1})", params,
                             m, se, ok, seed, args.worlds, t0))
    return rows


def _cmd_validate_theta(args, cfg, seed):
    t0 = time.time()
    spec = _diluted_model(cfg)
    rep = validate_theta(spec.theta, n_max=args.n_max, seed=seed)
    params = {"model": cfg["model"], "n_max": args.n_max}
    rows = [_row("validate-theta", "ok", params, float(rep["ok"]), 0.0,
                 bool(rep["ok"]), seed, 1, t0)]
    for i, est in enumerate(rep["moments"], start=1):
        rows.append(_row("validate-theta", f"E(-b)^{i}", params, est.value,
                         est.se, est.value >= -3 * max(est.se, 1e-300), seed,
                         est.n, t0))
    rows.append(_row("validate-theta", "max|b f|", params, rep["max_abs_bf"],
                     0.0, rep["max_abs_bf"] < 1.0, seed, 1, t0))
    lo, hi = rep["theta_range"]
    rows.append(_row("validate-theta", "theta-min", params, lo, 0.0,
                     math.isfinite(lo), seed, 1, t0))
    rows.append(_row("validate-theta", "theta-max", params, hi, 0.0,
                     math.isfinite(hi), seed, 1, t0))
    return rows


def _cmd_verify_all(args, cfg, seed):
    keys = sorted(accept.CRITERIA)
    if args.criteria:
        keys = [k for k in _ints(args.criteria) if k in accept.CRITERIA]
    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            chunks = list(pool.map(lambda k: accept.run_criterion(k, seed=seed),
                                   keys))
    else:
        chunks = [accept.run_criterion(k, seed=seed) for k in keys]
    rows = [r for chunk in chunks for r in chunk]
    return rows


# ---------------------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML config file")
    common.add_argument("--seed", type=int, default=None,
                        help="master seed (default 0; verify-all defaults to 7)")
    common.add_argument("--threads", type=int, default=1,
                        help="worker threads for verify-all")
    common.add_argument("--out", help="output directory "
                        "(default [output].dir, $SPINDIST_OUT, or ./out)")
    common.add_argument("--model", help="model kind override")
    common.add_argument("--p", type=int)
    common.add_argument("--alpha", type=float)
    common.add_argument("--beta", type=float)
    common.add_argument("--j-dist", dest="j_dist")
    common.add_argument("--betas", help="sk couplings, e.g. 2:0.5,4:0.2")
    common.add_argument("--sigma", help="sigma kind override")
    common.add_argument("--value", type=float)
    common.add_argument("--scale", type=float)
    common.add_argument("--q", help="cascade overlaps, e.g. 0.2,0.6")
    common.add_argument("--m", help="cascade exponents, e.g. 0,0.4")
    common.add_argument("--truncation", type=int)
    common.add_argument("--mix-q", dest="mix_q", type=float)
    common.add_argument("--outer", type=int)
    common.add_argument("--inner", type=int)
    common.add_argument("--n-disorder", dest="n_disorder", type=int)
    common.add_argument("--prefix")

    ap = argparse.ArgumentParser(prog="spindist",
                                 description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("free-energy", parents=[common],
                       help="quenched free energy by enumeration")
    p.add_argument("--N", type=int, default=8)
    p.set_defaults(fn=_cmd_free_energy)

    p = sub.add_parser("enumerate", parents=[common],
                       help="exact small-N Gibbs diagnostics")
    p.add_argument("--N", type=int, default=8)
    p.set_defaults(fn=_cmd_enumerate)

    p = sub.add_parser("bounds", parents=[common], help="interpolation bounds")
    p.add_argument("bound", choices=["franz-leone", "guerra", "ass-lower",
                                     "cavity"])
    p.add_argument("--N", type=int, default=8)
    p.add_argument("--sizes", type=_ints, default=[6, 8, 10],
                   help="system sizes for ass-lower/cavity")
    p.set_defaults(fn=_cmd_bounds)

    p = sub.add_parser("functional", parents=[common],
                       help="free-energy functionals of sigma")
    p.add_argument("functional", choices=["p", "pn", "plast"])
    p.add_argument("--n", type=int, default=2, help="coordinates for pn")
    p.set_defaults(fn=_cmd_functional)

    p = sub.add_parser("invariance", parents=[common],
                       help="invariance-equation residual for a preset case")
    p.add_argument("preset", choices=sorted(PRESET_CASES))
    p.set_defaults(fn=_cmd_invariance)

    p = sub.add_parser("gg", parents=[common],
                       help="overlap identities and the variance check")
    p.add_argument("gg", choices=["cascade", "finite-N", "gss"])
    p.add_argument("--power", type=int, default=1, help="overlap power")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--F", choices=sorted(_GG_FNS), default="one")
    p.add_argument("--worlds", type=int, default=300)
    p.add_argument("--pairs", type=int, default=48)
    p.add_argument("--sizes", type=_ints, default=[8, 12])
    p.add_argument("--t", type=_floats, default=[0.25, 0.5, 1.0])
    p.set_defaults(fn=_cmd_gg)

    p = sub.add_parser("cascade", parents=[common],
                       help="cascade worlds and their overlap law")
    p.add_argument("cascade", choices=["sample", "overlap-law"])
    p.add_argument("--top", type=int, default=8)
    p.add_argument("--worlds", type=int, default=300)
    p.add_argument("--pairs", type=int, default=64)
    p.set_defaults(fn=_cmd_cascade)

    p = sub.add_parser("validate-theta", parents=[common],
                       help="admissibility checks for the clause family")
    p.add_argument("--n-max", dest="n_max", type=int, default=4)
    p.set_defaults(fn=_cmd_validate_theta)

    p = sub.add_parser("verify-all", parents=[common],
                       help="run the acceptance battery")
    p.add_argument("--suite", choices=["desk"], default="desk")
    p.add_argument("--criteria", help="subset, e.g. 1,4,6")
    p.set_defaults(fn=_cmd_verify_all)
    return ap


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] == "gss":  # convenience alias
        argv = ["gg", "gss"] + argv[1:]
    ap = build_parser()
    args = ap.parse_args(argv)
    seed = args.seed if args.seed is not None else (
        7 if args.cmd == "verify-all" else 0)
    t0 = time.time()
    try:
        cfg = _load_cfg(args)
        rows = args.fn(args, cfg, seed)
    except ConfigError as e:
        print(f"config error location={e.location} message={e.message!r}",
              file=sys.stderr)
        return 2
    ok = all_passed(rows)
    print(format_rows(rows))
    dest = out_dir(cfg)
    os.makedirs(dest, exist_ok=True)
    prefix = cfg["output"]["prefix"]
    base = os.path.join(dest, f"{prefix}-{args.cmd}")
    write_rows(base + ".csv", rows)
    n_flagged = sum(r.passed is not None for r in rows)
    n_failed = sum(r.passed is False for r in rows)
    write_summary(base + ".json", {
        "experiment": args.cmd,
        "seed": seed,
        "rows": len(rows),
        "checked": n_flagged,
        "failed": n_failed,
        "passed": ok,
        "wall_time": round(time.time() - t0, 3),
        "config": cfg,
    })
    print(f"wrote {base}.csv and {base}.json "
          f"({n_flagged} checks, {n_failed} failed) [{time.time() - t0:.1f}s]")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
