import math

import numpy as np
import pytest

from spindist.cascade import CascadeSpec
from spindist.models import SKSpec
from spindist.orderparam import (
    CascadeSK,
    ReplicaSymmetric,
    Tabulated,
    TwoStateMixture,
    multioverlap,
    qstar_check,
    solve_onersb_fixed_point,
)
from spindist.rng import make_rng


def test_h_moment_constant_and_table_are_exact():
    rs = ReplicaSymmetric(("constant", 0.5))
    assert rs.h_moment(lambda h: np.tanh(h) ** 2) == np.tanh(0.5) ** 2
    tab = ReplicaSymmetric(("table", [-1.0, 2.0], [0.3, 0.7]))
    assert np.isclose(tab.h_moment(lambda h: h), 1.1, atol=1e-12)


def test_h_moment_normal_quadrature():
    rs = ReplicaSymmetric(("normal", 0.8))
    assert np.isclose(rs.h_moment(lambda h: h**2), 0.64, atol=1e-9)
    assert np.isclose(rs.h_moment(lambda h: h), 0.0, atol=1e-12)


def test_replica_symmetric_rejects_bad_laws():
    with pytest.raises(ValueError):
        ReplicaSymmetric(("uniform", 1.0))
    with pytest.raises(ValueError):
        ReplicaSymmetric(("normal", -0.2))
    with pytest.raises(ValueError):
        ReplicaSymmetric(("table", [0.1, 0.2], [0.5, 0.6]))  # probs don't sum to 1


def test_qstar_check_on_replica_symmetric_is_degenerate():
    rs = ReplicaSymmetric(("constant", 0.7))
    mean, var = qstar_check(rs, n_worlds=40, n_pairs=4, seed=0)
    assert np.isclose(mean.value, np.tanh(0.7) ** 2, atol=1e-12)
    assert mean.se < 1e-15
    assert abs(var.value) < 1e-14


def test_two_state_mixture_overlaps():
    mix = TwoStateMixture(0.6)
    world = mix.draw_world(seed=1)
    rng = make_rng(1, "reps")
    reps = mix.draw_replicas(world, rng, 12)
    Q = mix.overlap_matrix(world, reps)
    assert np.all(np.diag(Q) == 0.6)
    off = Q[~np.eye(12, dtype=bool)]
    assert set(np.unique(np.round(off, 12))) <= {-0.6, 0.6}


def test_two_state_mixture_moments():
    """E R_12 = 0 and E R_12^2 = q^2: the even moment survives, odd ones die."""
    mix = TwoStateMixture(0.6)
    odd = multioverlap(mix, ((1, 2),), n_outer=500, seed=2)
    even = multioverlap(mix, ((1, 2), (1, 2)), n_outer=500, seed=3)
    assert abs(odd.value) <= 4 * odd.se
    assert abs(even.value - 0.36) <= 4 * max(even.se, 1e-12)


def test_tabulated_roundtrip(tmp_path):
    vals = np.linspace(-0.9, 0.9, 12).reshape(2, 3, 2)
    path = tmp_path / "sigma.txt"
    path.write_text("2 3 2\n" + "\n".join(repr(float(v)) for v in vals.ravel()) + "\n")
    tab = Tabulated.from_text(path)
    assert np.array_equal(tab.values, vals)
    with pytest.raises(ValueError):
        Tabulated(np.full((2, 2, 2), 1.5))


def test_cascade_sk_overlap_matrix_smoke():
    sigma = CascadeSK(CascadeSpec((0.2, 0.5), (0.0, 0.3), M=16), SKSpec([(2, 0.6)]))
    world = sigma.draw_world(seed=0)
    rng = make_rng(0, "reps")
    reps = sigma.draw_replicas(world, rng, 6)
    Q = sigma.overlap_matrix(world, reps)
    assert np.allclose(Q, Q.T)
    assert np.all(np.abs(Q) <= 1.0 + 1e-12)
    assert np.allclose(np.diag(Q), Q[0, 0])


def test_onersb_fixed_point():
    sk = SKSpec([(2, 0.9)])
    q1, q2, converged = solve_onersb_fixed_point(sk, 0.4)
    assert converged
    assert q1 < 1e-12  # no p = 1 term, no external field
    assert 0.0 < q2 < 1.0
    # weak coupling: the nontrivial branch disappears
    _, q2_weak, conv_weak = solve_onersb_fixed_point(SKSpec([(2, 0.5)]), 0.4)
    assert conv_weak
    assert q2_weak < 1e-8
    # a p = 1 term forces q1 > 0
    q1_f, q2_f, conv_f = solve_onersb_fixed_point(SKSpec([(1, 0.4), (2, 0.9)]), 0.4)
    assert conv_f
    assert 0.0 < q1_f < q2_f
