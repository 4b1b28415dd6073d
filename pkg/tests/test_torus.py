import math

import numpy as np
import pytest

from nkmoment.differential import FDParams, central_difference
from nkmoment.fibers import hopf_lift
from nkmoment.frame import ConfigPoint, ambient_to_frame
from nkmoment.quaternion import ONE, I, J, UnitQuaternion, sample_unit
from nkmoment.torus import (
    TWO_PI,
    KillingField,
    TorusElement,
    TorusSpec,
    act,
    killing_field_list,
    killing_fields,
    orbit_dimension,
    push_forward,
    torus_act,
    verify_homomorphism,
)


def test_lagrangian_spec():
    spec = TorusSpec.lagrangian()
    assert spec.A == I and spec.B == I and spec.C == J
    assert spec.to_dict() == {"A": [1.0, 0.0, 0.0], "B": [1.0, 0.0, 0.0], "C": [0.0, 1.0, 0.0]}


def test_torus_element_angles_are_reduced():
    el = TorusElement(-1e-20, TWO_PI + 1.0, -math.pi)
    assert el.t1 == 0.0
    assert el.t2 == pytest.approx(1.0)
    assert el.t3 == pytest.approx(math.pi)
    assert all(0.0 <= t < TWO_PI for t in (el + el).angles)


def test_zero_element_acts_trivially(spec, cfg):
    assert torus_act(spec, TorusElement(), cfg).isclose(cfg, tol=1e-14)


def test_torus_action_is_additive(spec, cfg, rng):
    a, b = TorusElement.random(rng), TorusElement.random(rng)
    once = torus_act(spec, a + b, cfg)
    twice = torus_act(spec, a, torus_act(spec, b, cfg))
    assert once.isclose(twice, tol=1e-12)


def test_minus_one_triple_acts_trivially(cfg):
    m = UnitQuaternion(-1.0, 0.0, 0.0, 0.0)
    assert act(m, m, m, cfg).isclose(cfg)
    assert not act(m, ONE, ONE, cfg).isclose(cfg)


def test_killing_frame_and_ambient_forms_agree(spec, rng):
    for _ in range(20):
        cfg = ConfigPoint.random(rng)
        K = killing_fields(spec, cfg)
        for n in (1, 2, 3):
            expanded = ambient_to_frame(cfg, K.ambient[n - 1])
            np.testing.assert_allclose(expanded.coeffs, K[n].coeffs, atol=1e-12)
        assert K.matrix.shape == (3, 6)


def test_killing_fields_generate_their_flows(spec, cfg):
    fd = FDParams()
    for K in killing_field_list(spec):
        velocity = central_difference(lambda t: K.flow(cfg, t).ambient, fd)
        np.testing.assert_allclose(velocity, K(cfg).ambient, atol=1e-9)


def test_push_forward_is_the_differential(cfg, rng):
    a, b, c = sample_unit(rng), sample_unit(rng), sample_unit(rng)
    w = KillingField(TorusSpec.random(rng), 3)(cfg).ambient
    fd = FDParams()

    def moved(t):
        curve = ConfigPoint.from_arrays(
            (cfg.ambient[:4] + t * w[:4]) / np.linalg.norm(cfg.ambient[:4] + t * w[:4]),
            (cfg.ambient[4:] + t * w[4:]) / np.linalg.norm(cfg.ambient[4:] + t * w[4:]),
        )
        return act(a, b, c, curve).ambient

    np.testing.assert_allclose(central_difference(moved, fd), push_forward(a, b, c, w), atol=1e-9)


def test_killing_field_index():
    with pytest.raises(AssertionError):
        KillingField(TorusSpec.lagrangian(), 4)


def test_orbit_dimension(spec, cfg):
    assert orbit_dimension(spec, cfg) == 3
    # over the vertex (1, 1, 1) both projections sit at C
    p = hopf_lift(spec.A, spec.C)
    q = hopf_lift(spec.B, spec.C)
    assert orbit_dimension(spec, ConfigPoint(p, q)) == 2


def test_homomorphism_and_kernel(rng):
    report = verify_homomorphism(50, rng)
    assert report.composition_residual <= 1e-12
    assert report.identity_residual <= 1e-12
    assert report.misread_image_residual > 0.1
    assert report.kernel == [(1, 1, 1), (-1, -1, -1)]
    assert not report.injective
    assert report.random_kernel_hits == 0
    assert report.generic_diagonal_moves

    doc = report.to_dict()
    assert doc["kernel"] == [[1, 1, 1], [-1, -1, -1]]
    assert doc["injective"] is False
