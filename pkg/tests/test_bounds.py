import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from spindist.bounds import (
    ass_lower,
    cavity_decomposition_check,
    convexity_term,
    franz_leone_upper,
    guerra_upper_sk,
)
from spindist.models import DilutedSpec, KSat, PSpin, SKSpec
from spindist.orderparam import ReplicaSymmetric

LOG2 = math.log(2.0)
RS0 = ReplicaSymmetric(("constant", 0.0))


@given(
    st.floats(-1.0, 1.0, allow_nan=False),
    st.floats(-1.0, 1.0, allow_nan=False),
    st.sampled_from([2, 4, 6]),
)
def test_convexity_term_is_nonnegative(x, y, p):
    assert convexity_term(x, y, p) >= -1e-9


def test_convexity_term_rejects_odd_p():
    with pytest.raises(ValueError):
        convexity_term(0.5, 0.1, 3)
    with pytest.raises(ValueError):
        convexity_term(0.5, 0.1, 1)


def test_franz_leone_holds_at_one_point():
    spec = DilutedSpec(p=2, alpha=0.5, theta=KSat(2, 1.0))
    rep = franz_leone_upper(RS0, spec, N=8, mc=(100, 200), seed=0, n_disorder=48)
    assert rep.ok(3)
    assert rep.digest
    assert np.isfinite(rep.f_n.value)


def test_franz_leone_without_clauses_is_tight():
    spec = DilutedSpec(p=2, alpha=0.0, theta=KSat(2, 1.0))
    rep = franz_leone_upper(RS0, spec, N=6, mc=(20, 128), seed=0, n_disorder=4)
    assert rep.f_n.value == LOG2
    assert rep.slack == 0.0
    assert rep.se == 0.0


def test_guerra_at_zero_coupling_is_tight():
    rep = guerra_upper_sk(RS0, SKSpec([(2, 0.0)]), N=6, mc=(20, 128), seed=0,
                          n_disorder=4)
    assert rep.f_n.value == LOG2
    assert rep.slack == 0.0
    assert rep.se == 0.0


def test_ass_increment_without_clauses():
    spec = DilutedSpec(p=2, alpha=0.0, theta=KSat(2, 1.0))
    est = ass_lower(spec, N=6, n_disorder=6, seed=0)
    assert est.value == LOG2
    assert est.se == 0.0
    est_sk = ass_lower(SKSpec([(2, 0.0)]), N=8, n_disorder=4, seed=0)
    assert np.isclose(est_sk.value, LOG2, atol=1e-12)


def test_ass_increment_is_reproducible():
    spec = DilutedSpec(p=2, alpha=0.6, theta=KSat(2, 1.0))
    a = ass_lower(spec, N=7, n_disorder=32, seed=9)
    b = ass_lower(spec, N=7, n_disorder=32, seed=9)
    assert (a.value, a.se) == (b.value, b.se)
    assert abs(a.value) < 1.0


def test_cavity_clause_split_is_exact_algebra():
    spec = DilutedSpec(p=2, alpha=0.4, theta=PSpin(2, 0.5))
    site, clause = cavity_decomposition_check(spec, N=6, n_disorder=64, seed=0)
    assert abs(clause.residual) <= 1e-10
    assert abs(site.residual) <= 4 * site.se + 0.05  # O(1/N) pinning error
