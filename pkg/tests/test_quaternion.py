import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nkmoment.quaternion import (
    ONE,
    I,
    J,
    K,
    ImaginaryUnit,
    Quaternion,
    UnitQuaternion,
    adjoint,
    adjoint_array,
    dexp_vec,
    exp_im,
    exp_vec,
    orthonormal_complement,
    qmul,
    rotate_about,
    sample_imaginary,
    sample_unit,
    sample_units,
    triple_det,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def test_hamilton_table():
    i, j, k = I.quaternion, J.quaternion, K.quaternion
    assert qmul(i, j).isclose(k)
    assert qmul(j, k).isclose(i)
    assert qmul(k, i).isclose(j)
    assert qmul(j, i).isclose(-k)
    minus_one = Quaternion(-1.0, 0.0, 0.0, 0.0)
    for u in (i, j, k):
        assert qmul(u, u).isclose(minus_one)


@given(seeds)
@settings(max_examples=200, deadline=None)
def test_associative_and_norm_multiplicative(seed):
    rng = np.random.default_rng(seed)
    a, b, c = sample_unit(rng), sample_unit(rng), sample_unit(rng)
    assert (qmul(qmul(a, b), c) - qmul(a, qmul(b, c))).norm() <= 1e-12
    assert abs(qmul(a, b).norm() - a.norm() * b.norm()) <= 1e-12
    assert (a * a.inverse()).isclose(ONE)


def test_unit_quaternion_renormalizes_small_drift():
    q = UnitQuaternion(1.0 + 5e-10, 0.0, 0.0, 0.0)
    assert q.w == 1.0
    assert q.norm() == pytest.approx(1.0, abs=1e-15)


def test_unit_quaternion_rejects_non_unit():
    with pytest.raises(ValueError):
        UnitQuaternion(1.1, 0.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        UnitQuaternion.from_array([0.0, 0.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        ImaginaryUnit(1.0, 1.0, 0.0)



@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_unit_constructors_reject_non_finite(bad):
    with pytest.raises(ValueError):
        UnitQuaternion(bad, 0.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        UnitQuaternion.from_array([1.0, bad, 0.0, 0.0])
    with pytest.raises(ValueError):
        ImaginaryUnit(bad, 0.0, 0.0)
    with pytest.raises(ValueError):
        ImaginaryUnit.from_vector([0.0, 0.0, bad])


def test_unit_product_stays_unit():
    rng = np.random.default_rng(7)
    a, b = sample_unit(rng), sample_unit(rng)
    assert isinstance(a * b, UnitQuaternion)
    assert isinstance(a * I.quaternion, Quaternion)


def test_adjoint_at_identity_is_axis():
    for A in (I, J, K, -I):
        assert adjoint(ONE, A).isclose(A)


@given(seeds, st.floats(min_value=-10.0, max_value=10.0))
@settings(max_examples=200, deadline=None)
def test_projection_constant_on_hopf_circles(seed, t):
    rng = np.random.default_rng(seed)
    p = sample_unit(rng)
    A = sample_imaginary(rng)
    assert adjoint(exp_im(A, t) * p, A).isclose(adjoint(p, A), tol=1e-12)


def test_adjoint_array_matches_scalar(rng):
    P = sample_units(rng, 50)
    A = sample_imaginary(rng)
    batch = adjoint_array(P, A.vec)
    for row, p in zip(batch, P):
        np.testing.assert_allclose(
            row, adjoint(UnitQuaternion.from_array(p), A).vec, atol=1e-14
        )


def test_exp_im():
    assert exp_im(K, 0.0).isclose(ONE)
    assert exp_im(J, math.pi / 2).isclose(J.quaternion)
    assert exp_im(I, math.pi).isclose(Quaternion(-1.0, 0.0, 0.0, 0.0))


def test_exp_vec_matches_exp_im(rng):
    for _ in range(20):
        A = sample_imaginary(rng)
        t = rng.uniform(-4.0, 4.0)
        np.testing.assert_allclose(exp_vec(t * A.vec), exp_im(A, t).array, atol=1e-14)
    np.testing.assert_array_equal(exp_vec(np.zeros(3)), [1.0, 0.0, 0.0, 0.0])


@pytest.mark.parametrize("scale", [1e-6, 0.3, 2.5])
def test_dexp_vec_matches_central_difference(rng, scale):
    h = 1e-6
    for _ in range(10):
        v = scale * rng.standard_normal(3)
        w = rng.standard_normal(3)
        numeric = (exp_vec(v + h * w) - exp_vec(v - h * w)) / (2.0 * h)
        np.testing.assert_allclose(dexp_vec(v, w), numeric, atol=1e-8)


def test_triple_det_orientation():
    assert triple_det(I, J, K) == 1.0
    assert triple_det(J, I, K) == -1.0
    assert triple_det(I, I, K) == 0.0


def test_rotate_about():
    assert rotate_about(K, math.pi / 2, I).isclose(J, tol=1e-14)
    rng = np.random.default_rng(3)
    C, x = sample_imaginary(rng), sample_imaginary(rng)
    y = rotate_about(C, 1.234, x)
    assert y.dot(C) == pytest.approx(x.dot(C), abs=1e-14)
    assert rotate_about(C, 2 * math.pi, x).isclose(x, tol=1e-14)


def test_orthonormal_complement_is_positive_basis(rng):
    for C in [I, J, K] + [sample_imaginary(rng) for _ in range(20)]:
        u, w = orthonormal_complement(C)
        M = np.column_stack([u, w, C.vec])
        np.testing.assert_allclose(M.T @ M, np.eye(3), atol=1e-14)
        assert np.linalg.det(M) == pytest.approx(1.0)


def test_sample_units_are_unit(rng):
    P = sample_units(rng, 1000)
    assert P.shape == (1000, 4)
    np.testing.assert_allclose(np.linalg.norm(P, axis=1), 1.0, atol=1e-14)
