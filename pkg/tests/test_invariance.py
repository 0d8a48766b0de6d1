import numpy as np
import pytest

import oracles
from spindist.cascade import CascadeSpec
from spindist.invariance import (
    PRESET_CASES,
    InvarianceCase,
    gg_variance,
    invariance_diluted,
    invariance_sk,
    stochastic_stability_sk,
)
from spindist.models import DilutedSpec, KSat, SKSpec
from spindist.orderparam import CascadeSK, ReplicaSymmetric, TwoStateMixture

RS0 = ReplicaSymmetric(("constant", 0.0))


def test_case_validation_and_split():
    case = PRESET_CASES["sc-general"]
    assert case.n == 1 and case.m == 2 and case.q == 2
    with pytest.raises(ValueError):
        InvarianceCase(n=2, m=1, sets=({1},))  # n > m
    with pytest.raises(ValueError):
        InvarianceCase(n=1, m=2, sets=({1, 3},))  # label out of range


@pytest.mark.parametrize("preset", ["sc-general", "sc-prebsc"])
def test_degenerate_models_are_exactly_invariant(preset):
    """With sigma-bar = 0 and no effective clauses both sides vanish exactly."""
    for spec in (
        DilutedSpec(p=2, alpha=0.0, theta=KSat(2, 1.0)),
        DilutedSpec(p=2, alpha=0.7, theta=KSat(2, 0.0)),
    ):
        res = invariance_diluted(RS0, spec, PRESET_CASES[preset], mc=(30, 64), seed=0)
        assert res.residual == 0.0
        assert res.se == 0.0


def test_empty_tilt_is_statistically_invariant():
    # alpha = 0 with a nondegenerate sigma-bar: equality in law, not per draw
    rs = ReplicaSymmetric(("normal", 0.5))
    spec = DilutedSpec(p=2, alpha=0.0, theta=KSat(2, 1.0))
    res = invariance_diluted(rs, spec, PRESET_CASES["sc-general"], mc=(150, 256),
                             seed=1)
    assert res.within(4)


def test_ksat_reweighted_moment_matches_oracle():
    spec = DilutedSpec(p=2, alpha=0.3, theta=KSat(2, 1.0))
    case = InvarianceCase(n=1, m=1, sets=({1}, {1}), r=1)
    res = invariance_diluted(RS0, spec, case, mc=(300, 384), seed=6)
    assert res.lhs.value == 0.0  # sigma-bar is identically zero
    assert abs(res.rhs.value - oracles.KSAT_RS0_CAVITY_B1_A03) <= 3 * res.rhs.se


def test_cascade_sigma_is_invariant_for_sk():
    sigma = CascadeSK(CascadeSpec((0.0, 0.3), (0.0, 0.4), M=32), SKSpec([(2, 0.9)]))
    res = invariance_sk(sigma, SKSpec([(2, 0.9)]), PRESET_CASES["sk-ascsk"],
                        mc=(80, 256), seed=3)
    assert res.within(4)


def test_stochastic_stability_at_t_zero_is_trivial():
    res = stochastic_stability_sk(TwoStateMixture(0.5), p=1, t=0.0, mc=(20, 64),
                                  seed=0)
    assert res.residual == 0.0
    with pytest.raises(ValueError):
        stochastic_stability_sk(TwoStateMixture(0.5), p=1, t=-0.5)


def test_gg_variance_flags_the_mixture():
    """The two-state mixture fails the odd-moment identities: the algebraic
    bracket drops below 1 by exactly q^2 at t = 1."""
    rows = gg_variance(TwoStateMixture(0.5), p=1, t_grid=(1.0,), mc=(200, 240),
                       seed=3)
    t, direct, alg = rows[0]
    assert t == 1.0
    bracket = 1.0 - alg.value
    assert bracket >= 5 * alg.se
    assert abs(bracket - 0.25) <= 4 * alg.se


def test_gg_variance_is_unit_on_the_cascade():
    sigma = CascadeSK(CascadeSpec((0.2, 0.6), (0.0, 0.4), M=64), SKSpec([(2, 0.9)]))
    rows = gg_variance(sigma, p=2, t_grid=(0.5,), mc=(120, 210), seed=1)
    _, direct, _ = rows[0]
    assert abs(direct.value - 1.0) <= 4 * direct.se
