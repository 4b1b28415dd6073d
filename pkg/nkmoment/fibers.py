"""
Fibres of nu_bar(x, y) = (x.y, x.C, y.C) on S^2 x S^2 and of nu on S^3 x S^3.

For fixed x on the circle x.C = Y, the second point is cut out by y.x = X and
y.C = Z. Writing y = alpha x + beta C + gamma n with n the unit normal of
span{x, C}, (alpha, beta) solve a 2x2 system and gamma^2 = F / (1 - Y^2).
The sign of det{x, y, C} separates the two components over interior points.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from nkmoment.frame import ConfigPoint
from nkmoment.image import VERTICES, DeltaClass, DeltaTag, delta_classify, sheet_gaps
from nkmoment.moment import MomentValue, nu_bar_array
from nkmoment.quaternion import (
    J,
    K,
    ImaginaryUnit,
    UnitQuaternion,
    exp_im,
    orthonormal_complement,
    qmul,
    rotate_about,
    sample_imaginary_units,
    triple_det,
)
from nkmoment.torus import TorusSpec
from nkmoment.utils import DET_TOL, GAMMA_SQ_TOL, MEMBERSHIP_TOL, normalize, sign_of

logger = logging.getLogger(__name__)

# x must lie on its circle to this precision
CIRCLE_TOL = 1e-10


class FiberTag(Enum):
    EMPTY = "empty"
    VERTEX_POINT = "vertex"
    ONE_CIRCLE = "one-circle"
    TWO_CIRCLES = "two-circles"

    @property
    def components(self) -> int:
        return {"empty": 0, "vertex": 1, "one-circle": 1, "two-circles": 2}[self.value]


@dataclass(frozen=True)
class FiberClass:
    tag: FiberTag
    witnesses: tuple[tuple[ImaginaryUnit, ImaginaryUnit], ...]
    delta: DeltaClass

    def __post_init__(self):
        assert len(self.witnesses) == self.tag.components, "witness count mismatch"


@dataclass(frozen=True)
class CirclePoint:
    """
    The point at angle theta on the circle {x : x.C = h}
    """

    theta: float

    def point(self, C: ImaginaryUnit, h: float) -> ImaginaryUnit:
        u, w = orthonormal_complement(C)
        r = np.sqrt(max(1.0 - h * h, 0.0))
        return ImaginaryUnit.from_vector(
            h * C.vec + r * (np.cos(self.theta) * u + np.sin(self.theta) * w)
        )


def circle_point(C: ImaginaryUnit, h: float, theta: float) -> ImaginaryUnit:
    return CirclePoint(theta).point(C, h)


def _split(tau: MomentValue, C: ImaginaryUnit, x: ImaginaryUnit):
    # (alpha x + beta C, 1 - |alpha x + beta C|^2)
    gram = np.array([[1.0, tau.Y], [tau.Y, 1.0]])
    alpha, beta = np.linalg.solve(gram, np.array([tau.X, tau.Z]))
    base = alpha * x.vec + beta * C.vec
    return base, 1.0 - float(base @ base)


def _two_roots(
    base: np.ndarray, gamma_sq: float, C: ImaginaryUnit, x: ImaginaryUnit
) -> list[ImaginaryUnit]:
    n = normalize(np.cross(x.vec, C.vec))
    gamma = np.sqrt(gamma_sq)
    # det{x, y, C} = -y.(x cross C)
    return [
        ImaginaryUnit.from_vector(base - gamma * n),
        ImaginaryUnit.from_vector(base + gamma * n),
    ]


def fiber_solve(
    tau: MomentValue, C: ImaginaryUnit, x: ImaginaryUnit, on_boundary: bool = False
) -> list[ImaginaryUnit]:
    """
    All y with nu_bar(x, y) = tau for a given x on the circle x.C = tau.Y.
    Two roots are returned with det{x, y, C} > 0 first. `on_boundary` forces
    the single root gamma = 0 and never returns an empty list.
    """
    if abs(x.dot(C) - tau.Y) > CIRCLE_TOL:
        raise ValueError(f"x.C = {x.dot(C)!r} does not match Y = {tau.Y!r}")

    if 1.0 - abs(tau.Y) <= CIRCLE_TOL:
        # x = +-C: y.x and y.C are the same constraint
        if abs(tau.X - tau.Y * tau.Z) > MEMBERSHIP_TOL and not on_boundary:
            return []
        if 1.0 - abs(tau.Z) <= CIRCLE_TOL:
            return [ImaginaryUnit.from_vector(np.sign(tau.Z) * C.vec)]
        return [circle_point(C, tau.Z, 0.0)]

    base, gamma_sq = _split(tau, C, x)
    if on_boundary or abs(gamma_sq) <= GAMMA_SQ_TOL:
        return [ImaginaryUnit.from_vector(normalize(base))]
    if gamma_sq < 0.0:
        return []
    return _two_roots(base, gamma_sq, C, x)


def _oriented(tau: MomentValue) -> tuple[MomentValue, bool]:
    # put the coordinate of smaller modulus on the x circle; nu_bar(y, x) = (X, Z, Y)
    if abs(tau.Y) > abs(tau.Z):
        return MomentValue(tau.X, tau.Z, tau.Y), True
    return tau, False


def fiber_classify(
    tau: MomentValue, C: ImaginaryUnit, tol: float = MEMBERSHIP_TOL
) -> FiberClass:
    """
    The fibre type follows delta_classify. Witnesses are built on whichever of
    the Y, Z circles is farther from degenerating; over interior values gamma^2
    comes from the sheet gaps, F = (f+ - X)(X - f-), so it is positive whenever
    the value is interior.
    """
    delta = delta_classify(tau, tol)

    if delta.tag is DeltaTag.OUTSIDE:
        return FiberClass(FiberTag.EMPTY, (), delta)

    if delta.tag is DeltaTag.VERTEX:
        _, Y, Z = VERTICES[delta.witness]
        x = ImaginaryUnit.from_vector(Y * C.vec)
        y = ImaginaryUnit.from_vector(Z * C.vec)
        return FiberClass(FiberTag.VERTEX_POINT, ((x, y),), delta)

    t, swapped = _oriented(tau)
    t = MomentValue(t.X, min(1.0, max(-1.0, t.Y)), min(1.0, max(-1.0, t.Z)))
    fixed = circle_point(C, t.Y, 0.0)

    if delta.tag is DeltaTag.BOUNDARY_SMOOTH:
        (other,) = fiber_solve(t, C, fixed, on_boundary=True)
        pair = (other, fixed) if swapped else (fixed, other)
        return FiberClass(FiberTag.ONE_CIRCLE, (pair,), delta)

    upper, lower = sheet_gaps(tau)
    base, _ = _split(t, C, fixed)
    first, second = _two_roots(base, upper * -lower / (1.0 - t.Y * t.Y), C, fixed)
    if swapped:
        # det{y, x, C} = -det{x, y, C}
        pairs = ((second, fixed), (first, fixed))
    else:
        pairs = ((fixed, first), (fixed, second))
    return FiberClass(FiberTag.TWO_CIRCLES, pairs, delta)


def component_sign(x: ImaginaryUnit, y: ImaginaryUnit, C: ImaginaryUnit) -> int:
    return sign_of(triple_det(x, y, C), DET_TOL)


def hopf_lift(A: ImaginaryUnit, x: ImaginaryUnit) -> UnitQuaternion:
    """
    A section of p -> p-bar A p: returns p with p-bar A p = x.

    p = (1 - A x) / |1 - A x| away from x = -A. Near -A the lift goes through
    a fixed unit u orthogonal to A (first of j, k not parallel to A), which
    satisfies u-bar A u = -A.
    """
    one = np.array([1.0, 0.0, 0.0, 0.0])
    Ax = qmul(A.quaternion, x.quaternion).array
    if A.dot(x) > -0.5:
        return UnitQuaternion.from_array(normalize(one - Ax))
    axis = J if abs(A.dot(J)) < 1.0 - 1e-9 else K
    u = normalize(axis.vec - A.dot(axis) * A.vec)
    return UnitQuaternion(0.0, *u) * UnitQuaternion.from_array(normalize(one + Ax))


@dataclass(frozen=True)
class FiberSample:
    cfg: ConfigPoint
    x: ImaginaryUnit
    y: ImaginaryUnit
    component: int


def fiber_sample(
    tau: MomentValue,
    spec: TorusSpec,
    n: int,
    rng: np.random.Generator,
    tol: float = MEMBERSHIP_TOL,
) -> list[FiberSample]:
    """
    n points of nu^-1(tau). Witness pairs are rotated around C (which keeps
    nu_bar) and lifted through both Hopf circles e^{As} p, e^{Bt} q. Samples
    cycle through the components; the first sample of each is the bare lift
    of its witness.
    """
    fiber = fiber_classify(tau, spec.C, tol)
    if fiber.tag is FiberTag.EMPTY:
        raise ValueError(f"{tau} is outside the image, its fibre is empty")

    k = len(fiber.witnesses)
    out = []
    for i in range(n):
        x0, y0 = fiber.witnesses[i % k]
        if i < k:
            theta, s, t = 0.0, 0.0, 0.0
        else:
            theta, s, t = rng.uniform(0.0, 2.0 * np.pi, 3)
        x = rotate_about(spec.C, theta, x0)
        y = rotate_about(spec.C, theta, y0)
        p = exp_im(spec.A, s) * hopf_lift(spec.A, x)
        q = exp_im(spec.B, t) * hopf_lift(spec.B, y)
        out.append(FiberSample(ConfigPoint(p, q), x, y, component_sign(x, y, spec.C)))
    return out


# --- brute-force oracle ---------------------------------------------------


@dataclass(frozen=True)
class BruteForceResult:
    tag: FiberTag | None
    components: int
    converged: int
    spread: float


def _tangent_project(v: np.ndarray, base: np.ndarray) -> np.ndarray:
    return v - np.einsum("ij,ij->i", v, base)[:, None] * base


def _polish(x, y, C, target, iterations, max_step=0.5):
    """
    Batched Gauss-Newton for nu_bar(x, y) = target on S^2 x S^2
    """
    Cb = np.broadcast_to(C, x.shape)
    zero = np.zeros_like(x)
    for _ in range(iterations):
        r = nu_bar_array(x, y, C) - target
        jx = np.stack([_tangent_project(y, x), _tangent_project(Cb, x), zero], axis=1)
        jy = np.stack([_tangent_project(x, y), zero, _tangent_project(Cb, y)], axis=1)
        jac = np.concatenate([jx, jy], axis=2)
        step = -np.einsum("nij,nj->ni", np.linalg.pinv(jac, rcond=1e-12), r)
        norm = np.linalg.norm(step, axis=1, keepdims=True)
        step *= np.minimum(1.0, max_step / np.maximum(norm, 1e-300))
        x = normalize(x + step[:, :3])
        y = normalize(y + step[:, 3:])
    return x, y, np.linalg.norm(nu_bar_array(x, y, C) - target, axis=1)


def brute_force_classify(
    tau: MomentValue,
    C: ImaginaryUnit,
    rng: np.random.Generator,
    samples: int = 20_000,
    keep: int = 2_000,
    radius: float = 0.25,
    residual_tol: float = 1e-7,
    point_tol: float = 1e-3,
    iterations: int = 60,
) -> BruteForceResult:
    """
    Classify the fibre of nu_bar over tau without the circle construction:
    draw random (x, y), polish the `keep` best onto the fibre, and count the
    connected components of the radius graph on the converged points.
    """
    target = tau.array
    x = sample_imaginary_units(rng, samples)
    y = sample_imaginary_units(rng, samples)
    dist = np.linalg.norm(nu_bar_array(x, y, C.vec) - target, axis=1)
    best = np.argsort(dist)[:keep]
    x, y, residual = _polish(x[best], y[best], C.vec, target, iterations)

    ok = residual <= residual_tol
    points = np.hstack([x[ok], y[ok]])
    if len(points) == 0:
        return BruteForceResult(FiberTag.EMPTY, 0, 0, 0.0)

    tree = cKDTree(points)
    pairs = tree.query_pairs(radius, output_type="ndarray")
    graph = coo_matrix(
        (np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(len(points),) * 2
    )
    count, _ = connected_components(graph, directed=False)
    spread = float(np.max(np.linalg.norm(points - points[0], axis=1)))
    logger.debug(f"oracle at {tau}: {len(points)} converged, {count} components")

    if count == 1:
        tag = FiberTag.VERTEX_POINT if spread <= point_tol else FiberTag.ONE_CIRCLE
    elif count == 2:
        tag = FiberTag.TWO_CIRCLES
    else:
        logger.warning(f"oracle found {count} components at {tau}, inconclusive")
        tag = None
    return BruteForceResult(tag, count, len(points), spread)


def random_interior_value(
    rng: np.random.Generator, C: ImaginaryUnit, min_variety: float = 0.3
) -> MomentValue:
    """
    nu_bar of a random pair with F = det{x, y, C}^2 >= min_variety
    """
    while True:
        x, y = sample_imaginary_units(rng, 2)
        det = float(x @ np.cross(y, C.vec))
        if det * det >= min_variety:
            return MomentValue.from_array(nu_bar_array(x[None], y[None], C.vec)[0])


def random_boundary_value(
    rng: np.random.Generator, C: ImaginaryUnit, margin: float = 0.05
) -> MomentValue:
    """
    nu_bar of a random coplanar pair (x, y, C), kept `margin` away from |Y| = 1
    and |Z| = 1
    """
    while True:
        x = sample_imaginary_units(rng, 1)[0]
        a, b = rng.standard_normal(2)
        y = normalize(a * x + b * C.vec)
        tau = nu_bar_array(x[None], y[None], C.vec)[0]
        if max(abs(tau[1]), abs(tau[2])) <= 1.0 - margin:
            return MomentValue.from_array(tau)
