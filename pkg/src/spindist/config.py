"""Run configuration: a small TOML schema with strict key checking.

A config file has up to four tables — [model], [sigma], [mc], [output] —
all optional, all keys snake_case. Unknown tables or keys are rejected with
the offending dotted location, so typos fail fast instead of silently
running defaults. Values are type-checked here; semantic validation (ranges,
shape constraints) is left to the model and sigma constructors, with errors
re-attached to their config location.
"""

import os

try:
    import tomllib as tomli
except ModuleNotFoundError:
    import tomli

from .cascade import CascadeSpec
from .models import DilutedSpec, KSat, PSpin, SKSpec
from .orderparam import (CascadeSK, ReplicaSymmetric, Tabulated,
                         TwoStateMixture)

OUT_ENV = "SPINDIST_OUT"


class ConfigError(Exception):
    """Invalid configuration; .location is the dotted key path."""

    def __init__(self, location, message):
        self.location = location
        self.message = message
        super().__init__(f"{location}: {message}")


def _is_num(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _num_list(x):
    return isinstance(x, list) and all(_is_num(v) for v in x)


_SCHEMA = {
    "model": {
        "kind": ("sk", str),
        # diluted families
        "p": (2, int),
        "beta": (1.0, float),
        "alpha": (0.5, float),
        "j_dist": ("rademacher", str),
        # sk family: [[p, beta_p], ...]
        "betas": ([[2, 0.5]], None),
        "gg_pert": (False, bool),
        "gg_p_max": (3, int),
        "gg_exponent": (0.0625, float),
    },
    "sigma": {
        "kind": ("rs-constant", str),
        "value": (0.0, float),
        "scale": (1.0, float),
        "values": ([], None),
        "probs": ([], None),
        "q": ([0.2, 0.6], None),
        "m": ([0.0, 0.4], None),
        "truncation": (64, int),
        "mix_q": (0.5, float),
        "path": ("", str),
    },
    "mc": {
        "outer": (200, int),
        "inner": (400, int),
        "n_disorder": (64, int),
        "sweeps": (11_000, int),
        "burn_in": (1_000, int),
        "thinning": (10, int),
        "kernel": ("glauber", str),
    },
    "output": {
        "dir": ("", str),
        "prefix": ("run", str),
    },
}


def defaults():
    """Fully-defaulted config dict."""
    return {s: {k: v for k, (v, _) in keys.items()}
            for s, keys in _SCHEMA.items()}


def _check_into(cfg, doc):
    for section, table in doc.items():
        if section not in _SCHEMA:
            raise ConfigError(section, "unknown section")
        if not isinstance(table, dict):
            raise ConfigError(section, "expected a table")
        for key, val in table.items():
            loc = f"{section}.{key}"
            if key not in _SCHEMA[section]:
                raise ConfigError(loc, "unknown key")
            _, want = _SCHEMA[section][key]
            if want is float and _is_num(val):
                val = float(val)
            elif want is int:
                if isinstance(val, bool) or not isinstance(val, int):
                    raise ConfigError(loc, "expected an integer")
            elif want is not None and not isinstance(val, want):
                raise ConfigError(loc, f"expected {want.__name__}")
            cfg[section][key] = val
    return cfg


def loads(text):
    """Parse and validate a TOML config string over the defaults."""
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as e:
        raise ConfigError("(toml)", str(e)) from e
    return _check_into(defaults(), doc)


def load_config(path):
    """Read, parse and validate a config file."""
    try:
        with open(path, "rb") as fh:
            text = fh.read().decode()
    except OSError as e:
        raise ConfigError("(file)", str(e)) from e
    return loads(text)


def out_dir(cfg):
    """Output directory: config value, else $SPINDIST_OUT, else ./out."""
    return cfg["output"]["dir"] or os.environ.get(OUT_ENV, "") or "out"


def build_model(cfg):
    """Model spec from [model]; raises ConfigError on bad combinations."""
    m = cfg["model"]
    kind = m["kind"]
    try:
        if kind == "diluted-ksat":
            return DilutedSpec(p=m["p"], alpha=m["alpha"],
                               theta=KSat(m["p"], m["beta"]))
        if kind == "diluted-pspin":
            return DilutedSpec(p=m["p"], alpha=m["alpha"],
                               theta=PSpin(m["p"], m["beta"],
                                           j_dist=m["j_dist"]))
        if kind == "sk":
            betas = m["betas"]
            if not (isinstance(betas, list) and betas and
                    all(_num_list(b) and len(b) == 2 for b in betas)):
                raise ConfigError("model.betas",
                                  "expected a list of [p, beta_p] pairs")
            if any(p != int(p) for p, _ in betas):
                raise ConfigError("model.betas", "p must be an integer")
            pert = None
            if m["gg_pert"]:
                from .estimate import gg_perturbation
                pert = gg_perturbation(seed=0, p_max=m["gg_p_max"],
                                       exponent=m["gg_exponent"])
            return SKSpec(betas=tuple((int(p), float(b)) for p, b in betas),
                          gg_perturbation=pert)
    except ConfigError:
        raise
    except (ValueError, TypeError) as e:
        raise ConfigError("model", str(e)) from e
    raise ConfigError("model.kind", f"unknown model kind {kind!r}")


def build_sigma(cfg, model=None):
    """Order parameter from [sigma].

    Cascade sigmas need the sk model for their field covariance, so pass the
    built model; rs-* / mixture / table kinds ignore it.
    """
    s = cfg["sigma"]
    kind = s["kind"]
    try:
        if kind == "rs-constant":
            return ReplicaSymmetric(("constant", s["value"]))
        if kind == "rs-normal":
            return ReplicaSymmetric(("normal", s["scale"]))
        if kind == "rs-table":
            if not (_num_list(s["values"]) and _num_list(s["probs"])):
                raise ConfigError("sigma.values",
                                  "rs-table needs numeric values and probs")
            return ReplicaSymmetric(("table", s["values"], s["probs"]))
        if kind == "cascade":
            if not isinstance(model, SKSpec):
                raise ConfigError("sigma.kind",
                                  "cascade sigma requires an sk model")
            if not (_num_list(s["q"]) and _num_list(s["m"])):
                raise ConfigError("sigma.q", "expected numeric q and m lists")
            cs = CascadeSpec(q=tuple(s["q"]), m=tuple(s["m"]),
                             M=s["truncation"])
            return CascadeSK(cs, model)
        if kind == "mixture":
            return TwoStateMixture(s["mix_q"])
        if kind == "table-file":
            if not s["path"]:
                raise ConfigError("sigma.path", "table-file needs a path")
            return Tabulated.from_text(s["path"])
    except ConfigError:
        raise
    except (ValueError, TypeError, OSError) as e:
        raise ConfigError("sigma", str(e)) from e
    raise ConfigError("sigma.kind", f"unknown sigma kind {kind!r}")


def cascade_spec(cfg):
    """Bare CascadeSpec from [sigma] (for overlap-law experiments)."""
    s = cfg["sigma"]
    if not (_num_list(s["q"]) and _num_list(s["m"])):
        raise ConfigError("sigma.q", "expected numeric q and m lists")
    try:
        return CascadeSpec(q=tuple(s["q"]), m=tuple(s["m"]),
                           M=s["truncation"])
    except ValueError as e:
        raise ConfigError("sigma", str(e)) from e
