"""
The image Delta = nu(S^3 x S^3): the region between the graphs

    f+-(Y, Z) = YZ +- sqrt(1 - Y^2) sqrt(1 - Z^2)

whose boundary lies on the cubic F(X, Y, Z) = 2XYZ - X^2 - Y^2 - Z^2 + 1 and
contains the edges of the tetrahedron with vertex set V.
"""

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.spatial import ConvexHull

from nkmoment.differential import FDParams
from nkmoment.moment import MomentValue
from nkmoment.utils import HESSIAN_STEP, MEMBERSHIP_TOL, UNIT_TOL

logger = logging.getLogger(__name__)

VERTICES = np.array(
    [
        [1.0, 1.0, 1.0],
        [1.0, -1.0, -1.0],
        [-1.0, 1.0, -1.0],
        [-1.0, -1.0, 1.0],
    ]
)
VERTICES.setflags(write=False)
EDGES = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))

UPPER = 1
LOWER = -1


class DeltaTag(Enum):
    INTERIOR = "interior"
    BOUNDARY_SMOOTH = "boundary"
    VERTEX = "vertex"
    OUTSIDE = "outside"


@dataclass(frozen=True)
class DeltaClass:
    """
    `witness` names the sheet ("upper", "lower", "seam") for boundary points
    and the vertex index for vertices
    """

    tag: DeltaTag
    witness: str | int | None = None

    @property
    def in_delta(self) -> bool:
        return self.tag is not DeltaTag.OUTSIDE


def _check_sign(sign: int):
    assert sign in (UPPER, LOWER), "sheet sign must be +1 or -1"


def _clamp_unit(value: float, what: str) -> float:
    if abs(value) > 1.0 + UNIT_TOL:
        raise ValueError(f"{what} = {value!r} outside [-1, 1]")
    return min(1.0, max(-1.0, float(value)))


def f_bound(sign: int, Y: float, Z: float) -> float:
    _check_sign(sign)
    Y = _clamp_unit(Y, "Y")
    Z = _clamp_unit(Z, "Z")
    return Y * Z + sign * np.sqrt(1.0 - Y * Y) * np.sqrt(1.0 - Z * Z)


def f_bound_array(sign: int, Y: np.ndarray, Z: np.ndarray) -> np.ndarray:
    _check_sign(sign)
    Y = np.clip(Y, -1.0, 1.0)
    Z = np.clip(Z, -1.0, 1.0)
    return Y * Z + sign * np.sqrt(1.0 - Y * Y) * np.sqrt(1.0 - Z * Z)


def sheet_gaps(tau: MomentValue) -> tuple[float, float]:
    """
    (f+ - X, f- - X) at the clamped (Y, Z): tau is in Delta iff the first is
    >= 0 and the second <= 0
    """
    Y = min(1.0, max(-1.0, tau.Y))
    Z = min(1.0, max(-1.0, tau.Z))
    return float(f_bound(UPPER, Y, Z) - tau.X), float(f_bound(LOWER, Y, Z) - tau.X)


def delta_classify(tau: MomentValue, tol: float = MEMBERSHIP_TOL) -> DeltaClass:
    assert tol > 0, "classification tolerance must be positive"
    if not np.all(np.isfinite(tau.array)):
        raise ValueError(f"cannot classify non-finite value {tau}")
    t = tau.array
    dist = np.linalg.norm(VERTICES - t, axis=1)
    nearest = int(np.argmin(dist))
    if dist[nearest] <= tol:
        return DeltaClass(DeltaTag.VERTEX, nearest)

    if abs(tau.Y) > 1.0 + tol or abs(tau.Z) > 1.0 + tol:
        return DeltaClass(DeltaTag.OUTSIDE)
    upper, lower = sheet_gaps(tau)
    if upper < -tol or lower > tol:
        return DeltaClass(DeltaTag.OUTSIDE)

    on_upper = abs(upper) <= tol
    on_lower = abs(lower) <= tol
    if on_upper and on_lower:
        return DeltaClass(DeltaTag.BOUNDARY_SMOOTH, "seam")
    if on_upper:
        return DeltaClass(DeltaTag.BOUNDARY_SMOOTH, "upper")
    if on_lower:
        return DeltaClass(DeltaTag.BOUNDARY_SMOOTH, "lower")
    return DeltaClass(DeltaTag.INTERIOR)


def delta_classify_array(points: np.ndarray, tol: float = MEMBERSHIP_TOL) -> list[DeltaTag]:
    return [delta_classify(MomentValue.from_array(row), tol).tag for row in points]


def variety_F(tau: MomentValue) -> float:
    X, Y, Z = tau.X, tau.Y, tau.Z
    return 2.0 * X * Y * Z - X * X - Y * Y - Z * Z + 1.0


def variety_F_array(points: np.ndarray) -> np.ndarray:
    X, Y, Z = points[:, 0], points[:, 1], points[:, 2]
    return 2.0 * X * Y * Z - X * X - Y * Y - Z * Z + 1.0


# --- convexity ------------------------------------------------------------


def _open_square(Y: float, Z: float):
    if abs(Y) >= 1.0 or abs(Z) >= 1.0:
        raise ValueError(f"Hessian of f+- needs |Y|, |Z| < 1, got ({Y!r}, {Z!r})")


def hessian_matrix(sign: int, Y: float, Z: float) -> np.ndarray:
    _check_sign(sign)
    _open_square(Y, Z)
    a = np.sqrt(1.0 - Y * Y)
    b = np.sqrt(1.0 - Z * Z)
    f_yy = -sign * b / a**3
    f_zz = -sign * a / b**3
    f_yz = 1.0 + sign * Y * Z / (a * b)
    return np.array([[f_yy, f_yz], [f_yz, f_zz]])


def hessian_closed_form(sign: int, Y: float, Z: float) -> float:
    """
    det Hess f+- = ((Y sqrt(1-Z^2) -+ Z sqrt(1-Y^2)) / (sqrt(1-Y^2) sqrt(1-Z^2)))^2
    """
    _check_sign(sign)
    _open_square(Y, Z)
    a = np.sqrt(1.0 - Y * Y)
    b = np.sqrt(1.0 - Z * Z)
    return float(((Y * b - sign * Z * a) / (a * b)) ** 2)


def hessian_fd(sign: int, Y: float, Z: float, fd: FDParams) -> np.ndarray:
    _open_square(Y, Z)
    # stencil stays inside the open square, a tenth of the distance to its edge
    h = min(fd.step, (1.0 - max(abs(Y), abs(Z))) / 10.0)

    def f(y, z):
        return f_bound(sign, y, z)

    f0 = f(Y, Z)
    f_yy = (f(Y + h, Z) - 2.0 * f0 + f(Y - h, Z)) / (h * h)
    f_zz = (f(Y, Z + h) - 2.0 * f0 + f(Y, Z - h)) / (h * h)
    f_yz = (
        f(Y + h, Z + h) - f(Y + h, Z - h) - f(Y - h, Z + h) + f(Y - h, Z - h)
    ) / (4.0 * h * h)
    return np.array([[f_yy, f_yz], [f_yz, f_zz]])


def hessian_det_f(
    sign: int, Y: float, Z: float, fd: FDParams | None = None
) -> tuple[float, float]:
    """
    (closed form, finite-difference) determinant of the Hessian of f+-
    """
    fd = fd or FDParams(step=HESSIAN_STEP)
    closed = hessian_closed_form(sign, Y, Z)
    numeric = float(np.linalg.det(hessian_fd(sign, Y, Z, fd)))
    return closed, numeric


def displayed_hessian(X: float, Y: float) -> float:
    """
    ((X sqrt(1-Y^2) + Y sqrt(1-X^2)) / (sqrt(1-X^2) sqrt(1-Y^2)))^2
    """
    a = np.sqrt(1.0 - X * X)
    b = np.sqrt(1.0 - Y * Y)
    return float(((X * b + Y * a) / (a * b)) ** 2)


@dataclass(frozen=True)
class HessianDisplayMatch:
    sheet: int | None
    residual_upper: float
    residual_lower: float


def hessian_display_match(
    samples: np.ndarray, tol: float = 1e-9
) -> HessianDisplayMatch:
    """
    Compare the displayed determinant, read with (X, Y) -> (Y, Z), against the
    closed forms of both sheets on sample points (Y, Z) in (-1, 1)^2
    """
    displayed = np.array([displayed_hessian(Y, Z) for Y, Z in samples])
    upper = np.array([hessian_closed_form(UPPER, Y, Z) for Y, Z in samples])
    lower = np.array([hessian_closed_form(LOWER, Y, Z) for Y, Z in samples])
    res_upper = float(np.max(np.abs(displayed - upper)))
    res_lower = float(np.max(np.abs(displayed - lower)))
    sheet = None
    if res_lower <= tol:
        sheet = LOWER
    elif res_upper <= tol:
        sheet = UPPER
    return HessianDisplayMatch(sheet, res_upper, res_lower)


# --- tetrahedron ----------------------------------------------------------


@functools.cache
def tetrahedron_halfspaces() -> np.ndarray:
    """
    Rows (n, d) with n.x + d <= 0 on the solid tetrahedron conv(V)
    """
    eq = ConvexHull(VERTICES).equations
    eq.setflags(write=False)
    return eq


def in_tetrahedron(tau: MomentValue, tol: float = MEMBERSHIP_TOL) -> bool:
    H = tetrahedron_halfspaces()
    return bool(np.all(H[:, :3] @ tau.array + H[:, 3] <= tol))


def face_centroids() -> np.ndarray:
    """
    Centroid of the face opposite each vertex v is -v / 3 (V sums to 0)
    """
    return -VERTICES / 3.0


def bulge_points() -> np.ndarray:
    """
    -v / 2 lies on the boundary sheet straight above the centroid of the face
    opposite v, strictly outside conv(V)
    """
    return -VERTICES / 2.0


@dataclass(frozen=True)
class EdgePoint:
    point: MomentValue
    upper_gap: float
    lower_gap: float
    on_boundary: bool


def edge_point(v1: int, v2: int, t: float) -> MomentValue:
    """
    gamma(t) = ((1 + t)/2) v1 + ((1 - t)/2) v2, so gamma(1) = v1 and gamma(-1) = v2
    """
    assert v1 != v2, "an edge needs two distinct vertices"
    a, b = VERTICES[v1], VERTICES[v2]
    # shared coordinates stay exactly +-1, sqrt(1 - Y^2) is ill-conditioned there
    return MomentValue.from_array(
        np.where(a == b, a, 0.5 * (1.0 + t) * a + 0.5 * (1.0 - t) * b)
    )


def edge_check(v1: int, v2: int, t: float, tol: float = 1e-12) -> EdgePoint:
    """
    An edge point is on the boundary when one sheet passes through it and the
    other is on the correct side: (f+ = X >= f-) or (f+ >= X = f-)
    """
    point = edge_point(v1, v2, t)
    upper, lower = sheet_gaps(point)
    on_upper = abs(upper) <= tol and lower <= tol
    on_lower = abs(lower) <= tol and upper >= -tol
    return EdgePoint(point, upper, lower, bool(on_upper or on_lower))


# --- mesh -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Mesh:
    vertices: np.ndarray
    faces: np.ndarray

    @property
    def vertex_count(self) -> int:
        return len(self.vertices)

    @property
    def face_count(self) -> int:
        return len(self.faces)


def grid_counts(resolution: int) -> tuple[int, int]:
    """
    (vertices, triangles) of boundary_mesh: the 4(n-1) seam vertices are shared
    """
    n = resolution
    return 2 * n * n - 4 * (n - 1), 4 * (n - 1) ** 2


def boundary_mesh(resolution: int) -> Mesh:
    """
    Both sheets as graphs over an n x n grid on [-1, 1]^2, seam vertices shared.
    Lower sheet triangles are reversed so both sheets face outwards.
    """
    if resolution < 2:
        raise ValueError(f"mesh resolution must be >= 2, got {resolution}")
    n = resolution
    grid = np.linspace(-1.0, 1.0, n)
    Yg, Zg = np.meshgrid(grid, grid, indexing="ij")
    upper = np.stack([f_bound_array(UPPER, Yg, Zg), Yg, Zg], axis=-1).reshape(-1, 3)
    lower = np.stack([f_bound_array(LOWER, Yg, Zg), Yg, Zg], axis=-1).reshape(-1, 3)

    upper_idx = np.arange(n * n).reshape(n, n)
    lower_idx = upper_idx.copy()
    inner = np.zeros((n, n), dtype=bool)
    inner[1:-1, 1:-1] = True
    lower_idx[inner] = n * n + np.arange(int(inner.sum()))
    vertices = np.vstack([upper, lower[inner.reshape(-1)]])

    def triangles(idx):
        a = idx[:-1, :-1].reshape(-1)
        b = idx[1:, :-1].reshape(-1)
        c = idx[1:, 1:].reshape(-1)
        d = idx[:-1, 1:].reshape(-1)
        return np.vstack([np.column_stack([a, b, c]), np.column_stack([a, c, d])])

    faces = np.vstack([triangles(upper_idx), triangles(lower_idx)[:, ::-1]])
    logger.debug(f"mesh at resolution {n}: {len(vertices)} vertices, {len(faces)} faces")
    return Mesh(vertices, faces)
