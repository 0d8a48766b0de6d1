import numpy as np
import pytest

from spindist.config import (
    ConfigError,
    build_model,
    build_sigma,
    cascade_spec,
    defaults,
    load_config,
    loads,
    out_dir,
)
from spindist.models import DilutedSpec, SKSpec
from spindist.orderparam import CascadeSK, ReplicaSymmetric, Tabulated, TwoStateMixture


def test_defaults_build():
    cfg = defaults()
    model = build_model(cfg)
    assert isinstance(model, SKSpec)
    sigma = build_sigma(cfg, model)
    assert isinstance(sigma, ReplicaSymmetric)


def test_loads_merges_and_coerces():
    cfg = loads("[model]\nkind = 'diluted-ksat'\nalpha = 1\n\n[mc]\nouter = 64\n")
    assert cfg["model"]["kind"] == "diluted-ksat"
    assert cfg["model"]["alpha"] == 1.0  # int promoted to the float field
    assert cfg["mc"]["outer"] == 64
    model = build_model(cfg)
    assert isinstance(model, DilutedSpec)


@pytest.mark.parametrize(
    "text,location",
    [
        ("[model]\nquux = 1\n", "model.quux"),
        ("[nope]\nx = 1\n", "nope"),
        ("[mc]\nouter = 2.5\n", "mc.outer"),
        ("[mc]\nouter = true\n", "mc.outer"),
        ("[sigma]\nkind = 7\n", "sigma.kind"),
    ],
)
def test_bad_keys_report_dotted_locations(text, location):
    with pytest.raises(ConfigError) as err:
        loads(text)
    assert err.value.location == location


def test_toml_syntax_errors_are_config_errors():
    with pytest.raises(ConfigError) as err:
        loads("[model\nkind=")
    assert err.value.location == "(toml)"


def test_missing_file_is_a_config_error(tmp_path):
    with pytest.raises(ConfigError) as err:
        load_config(tmp_path / "nope.toml")
    assert err.value.location == "(file)"


def test_model_semantic_errors_attach_to_model():
    cfg = loads("[model]\nkind = 'diluted-ksat'\np = 3\n")
    with pytest.raises(ConfigError) as err:
        build_model(cfg)
    assert err.value.location.startswith("model")


def test_betas_validation():
    cfg = loads("[model]\nbetas = [[2, 0.5], [4, 0.1]]\n")
    model = build_model(cfg)
    assert isinstance(model, SKSpec)
    bad = loads("[model]\nbetas = [[2.5, 0.5]]\n")
    with pytest.raises(ConfigError):
        build_model(bad)


def test_sigma_builders(tmp_path):
    cfg = loads("[sigma]\nkind = 'mixture'\nmix_q = 0.4\n")
    assert isinstance(build_sigma(cfg), TwoStateMixture)

    cfg = loads("[sigma]\nkind = 'rs-table'\nvalues = [-0.5, 0.5]\nprobs = [0.5, 0.5]\n")
    assert isinstance(build_sigma(cfg), ReplicaSymmetric)

    path = tmp_path / "tab.txt"
    vals = np.zeros((1, 2, 2)).ravel()
    path.write_text("1 2 2\n" + "\n".join(repr(float(v)) for v in vals) + "\n")
    cfg = loads(f"[sigma]\nkind = 'table-file'\npath = '{path}'\n")
    assert isinstance(build_sigma(cfg), Tabulated)


def test_cascade_sigma_requires_sk_model():
    cfg = loads("[model]\nkind = 'diluted-ksat'\n\n[sigma]\nkind = 'cascade'\n")
    with pytest.raises(ConfigError):
        build_sigma(cfg, build_model(cfg))
    ok = loads("[sigma]\nkind = 'cascade'\nq = [0.1, 0.5]\nm = [0.0, 0.3]\n")
    sigma = build_sigma(ok, build_model(ok))
    assert isinstance(sigma, CascadeSK)
    assert sigma.cspec.q == (0.1, 0.5)


def test_cascade_spec_reads_sigma_section():
    cfg = loads("[sigma]\nq = [0.2, 0.6]\nm = [0.0, 0.4]\ntruncation = 9\n")
    cs = cascade_spec(cfg)
    assert cs.q == (0.2, 0.6)
    assert cs.m == (0.0, 0.4)
    assert cs.M == 9


def test_out_dir_precedence(monkeypatch):
    monkeypatch.delenv("SPINDIST_OUT", raising=False)
    assert out_dir(defaults()) == "out"
    monkeypatch.setenv("SPINDIST_OUT", "/tmp/elsewhere")
    assert out_dir(defaults()) == "/tmp/elsewhere"
    cfg = loads("[output]\ndir = 'results'\n")
    assert out_dir(cfg) == "results"
