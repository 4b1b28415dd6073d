import numpy as np
import pytest

from nkmoment.fibers import hopf_lift
from nkmoment.frame import ConfigPoint
from nkmoment.moment import (
    MomentValue,
    domega_rows,
    jacobian_rank,
    nu,
    nu_bar,
    nu_bar_array,
    nu_batch,
    nu_jacobian,
    omega_pairing,
    raw_pairing,
)
from nkmoment.quaternion import I, J, K, sample_units
from nkmoment.torus import TorusElement, TorusSpec, torus_act


def test_moment_value():
    tau = MomentValue.from_array([3.0, 0.0, 4.0])
    assert tau.norm() == 5.0
    np.testing.assert_array_equal(tau.array, [3.0, 0.0, 4.0])
    assert tau.isclose(MomentValue(3.0, 1e-13, 4.0))


def test_nu_at_identity(spec):
    assert nu(spec, ConfigPoint.identity()) == MomentValue(1.0, 0.0, 0.0)
    assert nu_bar(I, J, K) == MomentValue(0.0, 0.0, 0.0)
    assert nu_bar(J, J, J) == MomentValue(1.0, 1.0, 1.0)


def test_omega_pairing_is_nu(rng):
    for _ in range(200):
        spec = TorusSpec.random(rng)
        cfg = ConfigPoint.random(rng)
        np.testing.assert_allclose(omega_pairing(spec, cfg), nu(spec, cfg).array, atol=1e-12)


def test_lexicographic_pairing_flips_the_middle_slot(spec, cfg):
    np.testing.assert_allclose(
        raw_pairing(spec, cfg), nu(spec, cfg).array * [1.0, -1.0, 1.0], atol=1e-12
    )


def test_nu_batch_matches_nu(spec, rng):
    P, Q = sample_units(rng, 100), sample_units(rng, 100)
    batch = nu_batch(spec, P, Q)
    assert batch.shape == (100, 3)
    for row, p, q in zip(batch, P, Q):
        np.testing.assert_allclose(row, nu(spec, ConfigPoint.from_arrays(p, q)).array, atol=1e-14)


def test_nu_bar_array_broadcasts_c():
    x = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    y = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    np.testing.assert_array_equal(nu_bar_array(x, y, J.vec), [[1, 0, 0], [0, 1, 0]])


def test_nu_is_torus_invariant(spec, rng):
    for _ in range(50):
        cfg = ConfigPoint.random(rng)
        moved = torus_act(spec, TorusElement.random(rng), cfg)
        assert nu(spec, moved).isclose(nu(spec, cfg))


def test_differential_identity(rng):
    for _ in range(10):
        spec = TorusSpec.random(rng)
        cfg = ConfigPoint.random(rng)
        np.testing.assert_allclose(nu_jacobian(spec, cfg), domega_rows(spec, cfg), atol=1e-6)


def test_rank_at_generic_and_vertex_points(spec, cfg):
    assert jacobian_rank(nu_jacobian(spec, cfg)) == 3
    vertex = ConfigPoint(hopf_lift(spec.A, spec.C), hopf_lift(spec.B, spec.C))
    assert nu(spec, vertex).isclose(MomentValue(1.0, 1.0, 1.0))
    assert jacobian_rank(nu_jacobian(spec, vertex)) == 0
    assert jacobian_rank(domega_rows(spec, vertex)) == 0


def test_zero_level_orbits_are_lagrangian(spec):
    # x = k, y = i, C = j are mutually orthogonal
    cfg = ConfigPoint(hopf_lift(spec.A, K), hopf_lift(spec.B, I))
    assert nu(spec, cfg).norm() == pytest.approx(0.0, abs=1e-14)
    np.testing.assert_allclose(omega_pairing(spec, cfg), 0.0, atol=1e-14)
