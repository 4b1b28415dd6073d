"""
Tolerances, constants and small numeric helpers shared by the modules.
"""

import math

import numpy as np
from scipy.linalg import svdvals

# unit norm is enforced to this precision
UNIT_TOL = 1e-12
# inputs within this distance of unit norm are renormalized, others rejected
RENORM_TOL = 1e-9
# ambient vectors may leave the tangent space by this much before rejection
TANGENT_TOL = 1e-9
# distance to the boundary/vertices of the image that still counts as "on" it
MEMBERSHIP_TOL = 1e-9
# gamma^2 threshold separating one circle intersection from two
GAMMA_SQ_TOL = 1e-10
# numerical rank: relative and absolute singular value cut-offs
RANK_RTOL = 1e-7
RANK_ATOL = 1e-8
# rescaled moment map is only defined where |nu| >= WINDOW_EPS
WINDOW_EPS = 1e-3

# finite differences
DEFAULT_FD_STEP = 1e-5
MIN_FD_STEP = 1e-7
MAX_FD_STEP = 1e-2
FD_TOL = 1e-6
# second differences need a coarser step than first differences
HESSIAN_STEP = 1e-4
# triple-product dead band for component labels
DET_TOL = 1e-8

DEFAULT_SEED = 42
SCHEMA_VERSION = 1

SQRT3 = math.sqrt(3.0)
# omega = OMEGA_SCALE * sum E^n ^ F^n
OMEGA_SCALE = 4.0 / SQRT3
# basis scaling of Lambda^2 t*
PAIRING_SCALE = SQRT3 / 4.0


def unit_or_raise(v: np.ndarray, what: str) -> np.ndarray:
    """
    Renormalize `v` if it is within RENORM_TOL of unit length, otherwise raise.
    """
    n = float(np.linalg.norm(v))
    if not math.isfinite(n) or abs(n - 1.0) > RENORM_TOL:
        raise ValueError(f"{what} must have unit norm, got |v| = {n!r}")
    return v / n


def normalize(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    return v / n


def fmt_float(value: float) -> str:
    """
    Round-trip safe decimal formatting (17 significant digits)
    """
    return f"{value:.17g}"


def sign_of(value: float, tol: float) -> int:
    """
    -1, 0 or 1 with a dead band of width `tol` around 0
    """
    if value > tol:
        return 1
    if value < -tol:
        return -1
    return 0


def singular_values(matrix: np.ndarray) -> np.ndarray:
    return svdvals(np.asarray(matrix, dtype=float))


def numerical_rank(
    matrix: np.ndarray, rtol: float = RANK_RTOL, atol: float = RANK_ATOL
) -> int:
    """
    Number of singular values above max(rtol * s_max, atol)
    """
    s = singular_values(matrix)
    if s.size == 0:
        return 0
    cutoff = max(rtol * s[0], atol)
    return int(np.sum(s > cutoff))
