"""
The global frame {E_1, E_2, E_3, F_1, F_2, F_3} on S^3 x S^3 and the structures
written in it: the almost complex structure J, the metrics and the 2-form omega.

    E_1 = (pi, 0)   E_2 = (pj, 0)   E_3 = (-pk, 0)
    F_1 = (0, qi)   F_2 = (0, qj)   F_3 = (0, -qk)

A tangent vector is stored by its six frame coefficients. All structures have
constant coefficients in this frame, so they are plain 6x6 matrices.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from enum import Enum

import numpy as np

from nkmoment.quaternion import (
    UnitQuaternion,
    conj_array,
    qmul_array,
    pure,
    sample_unit,
)
from nkmoment.utils import OMEGA_SCALE, SQRT3, TANGENT_TOL

# frame units {i, j, -k} as imaginary parts; coefficient c -> imaginary part BASIS_SIGNS * c
BASIS_SIGNS = np.array([1.0, 1.0, -1.0])
FRAME_NAMES = ("E1", "E2", "E3", "F1", "F2", "F3")


@dataclass(frozen=True)
class ConfigPoint:
    """
    A point (p, q) of S^3 x S^3
    """

    p: UnitQuaternion
    q: UnitQuaternion

    @classmethod
    def identity(cls) -> ConfigPoint:
        return cls(UnitQuaternion(), UnitQuaternion())

    @classmethod
    def random(cls, rng: np.random.Generator) -> ConfigPoint:
        return cls(sample_unit(rng), sample_unit(rng))

    @classmethod
    def from_arrays(cls, p, q) -> ConfigPoint:
        return cls(UnitQuaternion.from_array(p), UnitQuaternion.from_array(q))

    @property
    def ambient(self) -> np.ndarray:
        return np.concatenate([self.p.array, self.q.array])

    def isclose(self, other: ConfigPoint, tol: float = 1e-12) -> bool:
        return self.p.isclose(other.p, tol) and self.q.isclose(other.q, tol)


@dataclass(frozen=True, eq=False)
class TangentVector:
    """
    Frame coefficients (c_1..c_6) with respect to E_1, E_2, E_3, F_1, F_2, F_3
    """

    coeffs: np.ndarray
    anchor: ConfigPoint

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float).reshape(6)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def basis(cls, anchor: ConfigPoint, index: int) -> TangentVector:
        """
        The frame vector with 1-based index (1..3 -> E, 4..6 -> F)
        """
        assert 1 <= index <= 6, "frame index must be in 1..6"
        c = np.zeros(6)
        c[index - 1] = 1.0
        return cls(c, anchor)

    @property
    def ambient(self) -> np.ndarray:
        return frame_to_ambient(self.anchor, self.coeffs)

    def _check(self, other: TangentVector):
        if other.anchor is not self.anchor and not other.anchor.isclose(self.anchor):
            raise ValueError("tangent vectors are anchored at different points")

    def __add__(self, other: TangentVector) -> TangentVector:
        self._check(other)
        return TangentVector(self.coeffs + other.coeffs, self.anchor)

    def __sub__(self, other: TangentVector) -> TangentVector:
        self._check(other)
        return TangentVector(self.coeffs - other.coeffs, self.anchor)

    def __neg__(self) -> TangentVector:
        return TangentVector(-self.coeffs, self.anchor)

    def __rmul__(self, s: float) -> TangentVector:
        return TangentVector(s * self.coeffs, self.anchor)

    def isclose(self, other: TangentVector, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.coeffs - other.coeffs)) <= tol)


@dataclass(frozen=True, eq=False)
class FrameBasis:
    """
    The six frame vectors as rows of ambient 8-vectors in H^2
    """

    vectors: np.ndarray
    anchor: ConfigPoint

    def gram(self) -> np.ndarray:
        return self.vectors @ self.vectors.T

    def __getitem__(self, index: int) -> np.ndarray:
        return self.vectors[index - 1]


class MetricKind(Enum):
    FLAT = "flat"
    NK_AVERAGED = "nk-averaged"
    NK_DISPLAYED = "nk-displayed"


@dataclass(frozen=True)
class Conventions:
    """
    Sign s of the cross terms of J:

        J = 1/sqrt(3) sum(-E_n (x) E^n + F_n (x) F^n + 2s F_n (x) E^n - 2s E_n (x) F^n)

    s = +1 is J as displayed. The conventions oracle in `differential` picks the
    sign for which the averaged metric is nearly Kaehler.
    """

    j_cross_sign: int = 1

    def __post_init__(self):
        assert self.j_cross_sign in (1, -1), "j_cross_sign must be +1 or -1"

    @property
    def label(self) -> str:
        return "displayed-J" if self.j_cross_sign == 1 else "flipped-J"


DISPLAYED = Conventions(1)
FLIPPED = Conventions(-1)


def frame_to_ambient(cfg: ConfigPoint, coeffs: np.ndarray) -> np.ndarray:
    """
    Frame coefficients -> ambient vector (p*alpha, q*beta) in H^2
    """
    c = np.asarray(coeffs, dtype=float)
    alpha = pure(BASIS_SIGNS * c[:3])
    beta = pure(BASIS_SIGNS * c[3:])
    return np.concatenate(
        [qmul_array(cfg.p.array, alpha), qmul_array(cfg.q.array, beta)]
    )


def ambient_to_frame(
    cfg: ConfigPoint, w: np.ndarray, tol: float = TANGENT_TOL
) -> TangentVector:
    """
    Expand an ambient 8-vector in the orthonormal frame at cfg. The normal
    component is dropped if it is below `tol`, otherwise the input is rejected.
    """
    w = np.asarray(w, dtype=float)
    assert w.shape == (8,), "ambient vectors have 8 components"
    a = qmul_array(conj_array(cfg.p.array), w[:4])
    b = qmul_array(conj_array(cfg.q.array), w[4:])
    normal = max(abs(a[0]), abs(b[0]))
    if normal > tol:
        raise ValueError(f"vector is not tangent to S3xS3 (normal part {normal!r})")
    coeffs = np.concatenate([BASIS_SIGNS * a[1:], BASIS_SIGNS * b[1:]])
    return TangentVector(coeffs, cfg)


def frame_at(cfg: ConfigPoint) -> FrameBasis:
    return FrameBasis(np.array([frame_to_ambient(cfg, row) for row in np.eye(6)]), cfg)


@functools.cache
def _j_matrix(sign: int) -> np.ndarray:
    eye = np.eye(3)
    J = np.block([[-eye, -2.0 * sign * eye], [2.0 * sign * eye, eye]]) / SQRT3
    J.setflags(write=False)
    return J


def j_matrix(conventions: Conventions = DISPLAYED) -> np.ndarray:
    """
    J in frame coefficients: column n holds the coefficients of J(X_n)
    """
    return _j_matrix(conventions.j_cross_sign)


@functools.cache
def _metric_matrix(kind: MetricKind, sign: int) -> np.ndarray:
    if kind is MetricKind.FLAT:
        G = np.eye(6)
    elif kind is MetricKind.NK_AVERAGED:
        J = _j_matrix(sign)
        G = 0.5 * (np.eye(6) + J.T @ J)
    else:
        # 4/3 sum((E^n)^2 - E^n F^n + (F^n)^2) with ef = (e(x)f + f(x)e) / 2
        eye = np.eye(3)
        G = (4.0 / 3.0) * np.block([[eye, -0.5 * eye], [-0.5 * eye, eye]])
    G.setflags(write=False)
    return G


def metric_matrix(
    kind: MetricKind = MetricKind.NK_AVERAGED, conventions: Conventions = DISPLAYED
) -> np.ndarray:
    return _metric_matrix(kind, conventions.j_cross_sign)


@functools.cache
def omega_matrix() -> np.ndarray:
    """
    omega = 4/sqrt(3) sum E^n ^ F^n with e^f(u, v) = e(u)f(v) - e(v)f(u)
    """
    eye = np.eye(3)
    zero = np.zeros((3, 3))
    W = OMEGA_SCALE * np.block([[zero, eye], [-eye, zero]])
    W.setflags(write=False)
    return W


def j_apply(v: TangentVector, conventions: Conventions = DISPLAYED) -> TangentVector:
    return TangentVector(j_matrix(conventions) @ v.coeffs, v.anchor)


def metric_eval(
    u: TangentVector,
    v: TangentVector,
    kind: MetricKind = MetricKind.NK_AVERAGED,
    conventions: Conventions = DISPLAYED,
) -> float:
    u._check(v)
    return float(u.coeffs @ metric_matrix(kind, conventions) @ v.coeffs)


def omega_eval(u: TangentVector, v: TangentVector) -> float:
    u._check(v)
    return float(u.coeffs @ omega_matrix() @ v.coeffs)


def compatibility_constant(
    conventions: Conventions = DISPLAYED, kind: MetricKind = MetricKind.NK_AVERAGED
) -> tuple[float, float]:
    """
    Least-squares lambda with omega = lambda * g(J., .), and the residual of the fit.
    omega(u, v) = u^T W v and g(Ju, v) = u^T J^T G v.
    """
    M = j_matrix(conventions).T @ metric_matrix(kind, conventions)
    W = omega_matrix()
    lam = float(np.sum(W * M) / np.sum(M * M))
    return lam, float(np.max(np.abs(W - lam * M)))


def random_tangent(
    cfg: ConfigPoint, rng: np.random.Generator, unit: bool = False
) -> TangentVector:
    c = rng.standard_normal(6)
    if unit:
        c /= np.linalg.norm(c)
    return TangentVector(c, cfg)
