"""The cavity pressure functional against independently derived values."""

import numpy as np

import oracles
from spindist.models import DilutedSpec, KSat, SKSpec
from spindist.functional import (
    eval_P_diluted,
    eval_P_sk,
    eval_Pn_diluted,
    plast_check,
)
from spindist.orderparam import ReplicaSymmetric

RS0 = ReplicaSymmetric(("constant", 0.0))


def test_ksat_pressure_matches_truncated_poisson_oracle():
    spec = DilutedSpec(p=2, alpha=0.5, theta=KSat(2, 1.0))
    est = eval_P_diluted(RS0, spec, outer=400, inner=320, seed=11)
    assert est.se < 0.02
    assert abs(est.value - oracles.KSAT_RS0_PRESSURE_B1_A05) <= 3 * est.se


def test_sk_pressure_matches_closed_form():
    est = eval_P_sk(RS0, SKSpec([(2, 0.3)]), outer=300, inner=400, seed=2)
    assert abs(est.value - oracles.SK_RS0_PRESSURE_B03) <= 3 * est.se


def test_multireplica_functional_decouples():
    """P_n agrees with P_1: the replicas see independent cavity coordinates."""
    spec = DilutedSpec(p=2, alpha=0.5, theta=KSat(2, 1.0))
    rs = ReplicaSymmetric(("normal", 0.7))
    p1 = eval_Pn_diluted(rs, spec, 1, mc=(300, 256), seed=4)
    p2 = eval_Pn_diluted(rs, spec, 2, mc=(300, 256), seed=5)
    tol = 3 * np.hypot(p2.se, p1.se)
    assert abs(p2.value - p1.value) <= tol


def test_plast_is_exactly_zero_without_clauses():
    spec = DilutedSpec(p=2, alpha=0.0, theta=KSat(2, 1.0))
    est = plast_check(RS0, spec, mc=(50, 128), seed=0)
    assert est.value == 0.0
    assert est.se == 0.0
