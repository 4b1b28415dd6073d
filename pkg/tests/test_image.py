import numpy as np
import pytest

from nkmoment.image import (
    EDGES,
    LOWER,
    UPPER,
    VERTICES,
    DeltaTag,
    boundary_mesh,
    bulge_points,
    delta_classify,
    delta_classify_array,
    displayed_hessian,
    edge_check,
    edge_point,
    f_bound,
    f_bound_array,
    face_centroids,
    grid_counts,
    hessian_closed_form,
    hessian_det_f,
    hessian_display_match,
    hessian_matrix,
    in_tetrahedron,
    sheet_gaps,
    variety_F,
    variety_F_array,
)
from nkmoment.moment import MomentValue, nu_batch
from nkmoment.quaternion import sample_units


def test_f_bound():
    assert f_bound(UPPER, 0.0, 0.0) == 1.0
    assert f_bound(LOWER, 0.0, 0.0) == -1.0
    assert f_bound(UPPER, 1.0, 0.5) == 0.5
    assert f_bound(LOWER, -0.5, -0.5) == pytest.approx(-0.5)
    # tiny overshoot of |Y| = 1 is clamped
    assert f_bound(UPPER, 1.0 + 1e-13, 1.0) == 1.0
    with pytest.raises(ValueError):
        f_bound(UPPER, 1.5, 0.0)
    with pytest.raises(AssertionError):
        f_bound(0, 0.0, 0.0)


def test_f_bound_array_matches_scalar(rng):
    Y, Z = rng.uniform(-1.0, 1.0, (2, 100))
    for sign in (UPPER, LOWER):
        expected = [f_bound(sign, y, z) for y, z in zip(Y, Z)]
        np.testing.assert_allclose(f_bound_array(sign, Y, Z), expected, atol=1e-15)


@pytest.mark.parametrize(
    "point,tag,witness",
    [
        ((0.0, 0.0, 0.0), DeltaTag.INTERIOR, None),
        ((1.0, 1.0, 1.0), DeltaTag.VERTEX, 0),
        ((-1.0, -1.0, 1.0), DeltaTag.VERTEX, 3),
        ((1.0, 0.0, 0.0), DeltaTag.BOUNDARY_SMOOTH, "upper"),
        ((-1.0, 0.0, 0.0), DeltaTag.BOUNDARY_SMOOTH, "lower"),
        ((0.0, 1.0, 0.0), DeltaTag.BOUNDARY_SMOOTH, "seam"),
        ((-0.5, -0.5, -0.5), DeltaTag.BOUNDARY_SMOOTH, "lower"),
        ((2.0, 0.0, 0.0), DeltaTag.OUTSIDE, None),
        ((0.0, 1.1, 0.0), DeltaTag.OUTSIDE, None),
        ((0.9, 0.9, -0.9), DeltaTag.OUTSIDE, None),
    ],
)
def test_delta_classify(point, tag, witness):
    result = delta_classify(MomentValue(*point))
    assert result.tag is tag
    assert result.witness == witness
    assert result.in_delta == (tag is not DeltaTag.OUTSIDE)


def test_delta_classify_array():
    points = np.array([[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]])
    assert delta_classify_array(points) == [DeltaTag.INTERIOR, DeltaTag.OUTSIDE]


def test_sampled_values_are_sandwiched(spec, rng):
    values = nu_batch(spec, sample_units(rng, 20_000), sample_units(rng, 20_000))
    X, Y, Z = values.T
    assert np.all(X <= f_bound_array(UPPER, Y, Z) + 1e-12)
    assert np.all(X >= f_bound_array(LOWER, Y, Z) - 1e-12)
    tags = set(delta_classify_array(values[:2000]))
    assert DeltaTag.OUTSIDE not in tags


def test_sheet_gaps():
    upper, lower = sheet_gaps(MomentValue(0.0, 0.0, 0.0))
    assert upper == 1.0 and lower == -1.0


def test_variety():
    assert variety_F(MomentValue(0.0, 0.0, 0.0)) == 1.0
    for v in VERTICES:
        assert variety_F(MomentValue.from_array(v)) == 0.0
    np.testing.assert_array_equal(variety_F_array(VERTICES), np.zeros(4))


def test_hessian_closed_form_is_the_determinant(rng):
    for Y, Z in rng.uniform(-0.9, 0.9, (50, 2)):
        for sign in (UPPER, LOWER):
            det = np.linalg.det(hessian_matrix(sign, Y, Z))
            assert hessian_closed_form(sign, Y, Z) == pytest.approx(det, abs=1e-9)
            assert hessian_closed_form(sign, Y, Z) >= 0.0


def test_hessian_matches_finite_differences(rng):
    for Y, Z in rng.uniform(-0.8, 0.8, (200, 2)):
        for sign in (UPPER, LOWER):
            closed, numeric = hessian_det_f(sign, Y, Z)
            assert closed == pytest.approx(numeric, abs=1e-5)
            assert numeric >= -1e-5


def test_hessian_rejects_the_seam():
    with pytest.raises(ValueError):
        hessian_closed_form(UPPER, 1.0, 0.0)
    with pytest.raises(ValueError):
        hessian_matrix(LOWER, 0.0, -1.0)


@pytest.mark.parametrize(
    "Y,Z", [(0.9999, 0.0), (0.99995, 0.0), (-0.99995, 0.2), (0.3, 0.99995)]
)
def test_hessian_finite_differences_near_the_seam(Y, Z):
    for sign in (UPPER, LOWER):
        closed, numeric = hessian_det_f(sign, Y, Z)
        assert closed == pytest.approx(numeric, rel=2e-2)


def test_delta_classify_rejects_non_finite():
    for bad in (np.nan, np.inf):
        with pytest.raises(ValueError):
            delta_classify(MomentValue(bad, 0.0, 0.0))
        with pytest.raises(ValueError):
            delta_classify(MomentValue(0.0, 0.0, bad))


def test_displayed_hessian_is_the_lower_sheet(rng):
    Y, Z = 0.3, -0.6
    assert displayed_hessian(Y, Z) == pytest.approx(hessian_closed_form(LOWER, Y, Z))
    assert displayed_hessian(Y, Z) != pytest.approx(hessian_closed_form(UPPER, Y, Z))
    match = hessian_display_match(rng.uniform(-0.8, 0.8, (100, 2)))
    assert match.sheet == LOWER
    assert match.residual_lower <= 1e-9
    assert match.residual_upper > 1e-3


def test_tetrahedron():
    assert in_tetrahedron(MomentValue(0.0, 0.0, 0.0))
    # edge midpoints lie on the hull
    assert in_tetrahedron(MomentValue(1.0, 0.0, 0.0))
    for v in VERTICES:
        assert in_tetrahedron(MomentValue.from_array(v))
    assert not in_tetrahedron(MomentValue(-0.5, -0.5, -0.5))


def test_delta_bulges_beyond_the_faces():
    for c in face_centroids():
        assert delta_classify(MomentValue.from_array(c)).tag is DeltaTag.INTERIOR
    for b in bulge_points():
        tau = MomentValue.from_array(b)
        assert delta_classify(tau).tag is DeltaTag.BOUNDARY_SMOOTH
        assert not in_tetrahedron(tau)


def test_edge_parametrisation():
    assert edge_point(0, 1, 1.0) == MomentValue(1.0, 1.0, 1.0)
    assert edge_point(0, 1, -1.0) == MomentValue(1.0, -1.0, -1.0)
    assert edge_point(0, 1, 0.0) == MomentValue(1.0, 0.0, 0.0)
    with pytest.raises(AssertionError):
        edge_point(2, 2, 0.0)


def test_edges_lie_in_the_boundary(rng):
    for v1, v2 in EDGES:
        for t in np.concatenate([[-1.0, 0.0, 1.0], rng.uniform(-1.0, 1.0, 200)]):
            e = edge_check(v1, v2, t)
            assert e.on_boundary
            assert min(abs(e.upper_gap), abs(e.lower_gap)) <= 1e-12


def test_edge_sheets():
    # (1,1,1)-(1,-1,-1) is on the upper sheet only
    e = edge_check(0, 1, 0.5)
    assert abs(e.upper_gap) <= 1e-12 and e.lower_gap < -0.1
    # (-1,1,-1)-(-1,-1,1) is on the lower sheet only
    e = edge_check(2, 3, 0.5)
    assert abs(e.lower_gap) <= 1e-12 and e.upper_gap > 0.1
    # the other four edges run along the seam
    e = edge_check(0, 2, 0.5)
    assert abs(e.upper_gap) <= 1e-12 and abs(e.lower_gap) <= 1e-12


@pytest.mark.parametrize("n", [2, 5, 65])
def test_boundary_mesh_counts(n):
    mesh = boundary_mesh(n)
    assert (mesh.vertex_count, mesh.face_count) == grid_counts(n)
    assert mesh.faces.min() == 0
    assert mesh.faces.max() == mesh.vertex_count - 1


def test_boundary_mesh_lies_on_the_variety():
    mesh = boundary_mesh(33)
    assert np.max(np.abs(variety_F_array(mesh.vertices))) <= 1e-9
    rows = {tuple(v) for v in mesh.vertices}
    for v in VERTICES:
        assert tuple(v) in rows
    for m in [(1.0, 0.0, 0.0), (-1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, -1.0)]:
        assert m in rows


def test_boundary_mesh_resolution():
    with pytest.raises(ValueError):
        boundary_mesh(1)
