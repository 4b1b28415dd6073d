"""
Quaternion algebra on S^3 under the convention ij = k.

Scalar operations work on small frozen dataclasses. The `*_array` helpers work
on numpy arrays of shape (..., 4) (quaternions) and (..., 3) (imaginary parts)
and are used for the bulk sampling checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from nkmoment.utils import unit_or_raise


def qmul_array(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """
    Hamilton product of quaternion arrays with shape (..., 4), components (w, x, y, z)
    """
    aw, ax, ay, az = np.moveaxis(np.asarray(a, dtype=float), -1, 0)
    bw, bx, by, bz = np.moveaxis(np.asarray(b, dtype=float), -1, 0)
    return np.stack(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ],
        axis=-1,
    )


def conj_array(q: np.ndarray) -> np.ndarray:
    out = np.array(q, dtype=float, copy=True)
    out[..., 1:] *= -1.0
    return out


def pure(v: np.ndarray) -> np.ndarray:
    """
    Embed imaginary parts (..., 3) as quaternions (..., 4)
    """
    v = np.asarray(v, dtype=float)
    return np.concatenate([np.zeros(v.shape[:-1] + (1,)), v], axis=-1)


def adjoint_array(p: np.ndarray, x: np.ndarray) -> np.ndarray:
    """
    p-bar x p for quaternion array p and imaginary parts x, broadcasting
    """
    return qmul_array(qmul_array(conj_array(p), pure(x)), p)[..., 1:]


def exp_vec(v: np.ndarray) -> np.ndarray:
    """
    Exponential of imaginary quaternions given by their (..., 3) components
    """
    v = np.asarray(v, dtype=float)
    theta = np.linalg.norm(v, axis=-1, keepdims=True)
    # np.sinc is the normalized sinc
    s = np.sinc(theta / np.pi)
    return np.concatenate([np.cos(theta), s * v], axis=-1)


def dexp_vec(v: np.ndarray, w: np.ndarray) -> np.ndarray:
    """
    Differential of exp_vec at v in the direction w
    """
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    theta = float(np.linalg.norm(v))
    vw = float(v @ w)
    sinc = float(np.sinc(theta / np.pi))
    if theta < 1e-4:
        cubic = -1.0 / 3.0 + theta**2 / 30.0
    else:
        cubic = (theta * math.cos(theta) - math.sin(theta)) / theta**3
    real = -sinc * vw
    imag = sinc * w + cubic * vw * v
    return np.concatenate([[real], imag])


def sample_units(rng: np.random.Generator, n: int) -> np.ndarray:
    """
    n Haar-uniform unit quaternions, shape (n, 4)
    """
    g = rng.standard_normal((n, 4))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def sample_imaginary_units(rng: np.random.Generator, n: int) -> np.ndarray:
    """
    n uniform points of S^2 viewed as unit imaginary quaternions, shape (n, 3)
    """
    g = rng.standard_normal((n, 3))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


@dataclass(frozen=True)
class Quaternion:
    """
    w + x i + y j + z k
    """

    w: float = 1.0
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    @classmethod
    def from_array(cls, arr) -> Quaternion:
        w, x, y, z = (float(c) for c in arr)
        return cls(w, x, y, z)

    @property
    def array(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z])

    @property
    def imag(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def __mul__(self, other: Quaternion) -> Quaternion:
        return qmul(self, other)

    def __add__(self, other: Quaternion) -> Quaternion:
        return Quaternion.from_array(self.array + other.array)

    def __sub__(self, other: Quaternion) -> Quaternion:
        return Quaternion.from_array(self.array - other.array)

    def __neg__(self) -> Quaternion:
        return Quaternion.from_array(-self.array)

    def scale(self, s: float) -> Quaternion:
        return Quaternion.from_array(s * self.array)

    def conj(self) -> Quaternion:
        return Quaternion(self.w, -self.x, -self.y, -self.z)

    def norm(self) -> float:
        return float(np.linalg.norm(self.array))

    def inverse(self) -> Quaternion:
        return self.conj().scale(1.0 / self.norm() ** 2)

    def unit(self) -> UnitQuaternion:
        return UnitQuaternion.from_array(self.array)

    def isclose(self, other: Quaternion, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.array - other.array)) <= tol)


@dataclass(frozen=True)
class UnitQuaternion(Quaternion):
    """
    A point of S^3. Norm drift up to RENORM_TOL is absorbed by renormalizing.
    """

    def __post_init__(self):
        w, x, y, z = unit_or_raise(
            np.array([self.w, self.x, self.y, self.z]), "unit quaternion"
        )
        object.__setattr__(self, "w", float(w))
        object.__setattr__(self, "x", float(x))
        object.__setattr__(self, "y", float(y))
        object.__setattr__(self, "z", float(z))

    def __mul__(self, other: Quaternion) -> Quaternion:
        prod = qmul(self, other)
        if isinstance(other, UnitQuaternion):
            return prod.unit()
        return prod

    def conj(self) -> UnitQuaternion:
        return UnitQuaternion(self.w, -self.x, -self.y, -self.z)

    def inverse(self) -> UnitQuaternion:
        return self.conj()

    def __neg__(self) -> UnitQuaternion:
        return UnitQuaternion(-self.w, -self.x, -self.y, -self.z)


@dataclass(frozen=True)
class ImaginaryUnit:
    """
    A point of S^2 identified with the unit imaginary quaternions
    """

    x: float
    y: float
    z: float

    def __post_init__(self):
        x, y, z = unit_or_raise(np.array([self.x, self.y, self.z]), "imaginary unit")
        object.__setattr__(self, "x", float(x))
        object.__setattr__(self, "y", float(y))
        object.__setattr__(self, "z", float(z))

    @classmethod
    def from_vector(cls, v) -> ImaginaryUnit:
        x, y, z = (float(c) for c in v)
        return cls(x, y, z)

    @property
    def vec(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @property
    def quaternion(self) -> Quaternion:
        return Quaternion(0.0, self.x, self.y, self.z)

    def dot(self, other: ImaginaryUnit) -> float:
        return float(self.vec @ other.vec)

    def __neg__(self) -> ImaginaryUnit:
        return ImaginaryUnit(-self.x, -self.y, -self.z)

    def isclose(self, other: ImaginaryUnit, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.vec - other.vec)) <= tol)


ONE = UnitQuaternion(1.0, 0.0, 0.0, 0.0)
I = ImaginaryUnit(1.0, 0.0, 0.0)
J = ImaginaryUnit(0.0, 1.0, 0.0)
K = ImaginaryUnit(0.0, 0.0, 1.0)


def qmul(a: Quaternion, b: Quaternion) -> Quaternion:
    """
    Hamilton product under ij = k
    """
    return Quaternion.from_array(qmul_array(a.array, b.array))


def adjoint(p: UnitQuaternion, X: ImaginaryUnit) -> ImaginaryUnit:
    """
    The projection pi_X(p) = p-bar X p
    """
    return ImaginaryUnit.from_vector(adjoint_array(p.array, X.vec))


def exp_im(A: ImaginaryUnit, t: float) -> UnitQuaternion:
    """
    e^{At} = cos t + A sin t
    """
    s = math.sin(t)
    return UnitQuaternion(math.cos(t), A.x * s, A.y * s, A.z * s)


def sample_unit(rng: np.random.Generator) -> UnitQuaternion:
    """
    Haar-uniform point of S^3 (normalized 4-d Gaussian)
    """
    return UnitQuaternion.from_array(sample_units(rng, 1)[0])


def sample_imaginary(rng: np.random.Generator) -> ImaginaryUnit:
    return ImaginaryUnit.from_vector(sample_imaginary_units(rng, 1)[0])


def triple_det(x: ImaginaryUnit, y: ImaginaryUnit, z: ImaginaryUnit) -> float:
    """
    det of the 3x3 matrix with columns x, y, z
    """
    return float(x.vec @ np.cross(y.vec, z.vec))


def rotate_about(C: ImaginaryUnit, theta: float, x: ImaginaryUnit) -> ImaginaryUnit:
    """
    Rotate x by the angle theta around the axis C
    """
    return adjoint(exp_im(C, -theta / 2.0), x)


def orthonormal_complement(C: ImaginaryUnit) -> tuple[np.ndarray, np.ndarray]:
    """
    (u, w) with (u, w, C) a positively oriented orthonormal basis.
    u comes from the standard axis least aligned with C (first one on ties).
    """
    c = C.vec
    axis = np.zeros(3)
    axis[int(np.argmin(np.abs(c)))] = 1.0
    u = axis - (axis @ c) * c
    u /= np.linalg.norm(u)
    return u, np.cross(c, u)
