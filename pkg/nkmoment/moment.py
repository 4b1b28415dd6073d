"""
The multi-moment map

    nu(p, q) = ((p-bar A p).(q-bar B q), (p-bar A p).C, (q-bar B q).C)

in the basis {(sqrt(3)/4) (K_n ^ K_m)*} of Lambda^2 t*, and its factorisation
nu = nu_bar o (pi_A x pi_B) through S^2 x S^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from nkmoment.differential import FDParams, d_omega_tensor, fd_directional
from nkmoment.frame import ConfigPoint, TangentVector, omega_eval
from nkmoment.quaternion import ImaginaryUnit, adjoint, adjoint_array
from nkmoment.torus import TorusSpec, killing_fields
from nkmoment.utils import PAIRING_SCALE, numerical_rank

# oriented basis of Lambda^2 t* matching the closed form: K1^K2, K3^K1, K2^K3
PAIRS = ((1, 2), (3, 1), (2, 3))
# lexicographic ordering, differs from PAIRS by a sign in the middle slot
RAW_PAIRS = ((1, 2), (1, 3), (2, 3))


@dataclass(frozen=True)
class MomentValue:
    X: float
    Y: float
    Z: float

    @classmethod
    def from_array(cls, arr) -> MomentValue:
        X, Y, Z = (float(c) for c in arr)
        return cls(X, Y, Z)

    @property
    def array(self) -> np.ndarray:
        return np.array([self.X, self.Y, self.Z])

    def norm(self) -> float:
        return float(np.linalg.norm(self.array))

    def isclose(self, other: MomentValue, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.array - other.array)) <= tol)


def nu_bar(x: ImaginaryUnit, y: ImaginaryUnit, C: ImaginaryUnit) -> MomentValue:
    return MomentValue(x.dot(y), x.dot(C), y.dot(C))


def nu(spec: TorusSpec, cfg: ConfigPoint) -> MomentValue:
    return nu_bar(adjoint(cfg.p, spec.A), adjoint(cfg.q, spec.B), spec.C)


def nu_bar_array(x: np.ndarray, y: np.ndarray, C: np.ndarray) -> np.ndarray:
    """
    nu_bar on arrays of unit vectors with shape (n, 3); C may be (3,) or (n, 3)
    """
    C = np.broadcast_to(C, x.shape)
    return np.stack(
        [
            np.einsum("ij,ij->i", x, y),
            np.einsum("ij,ij->i", x, C),
            np.einsum("ij,ij->i", y, C),
        ],
        axis=-1,
    )


def nu_batch(spec: TorusSpec, P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """
    nu for arrays of unit quaternions P, Q with shape (n, 4); returns (n, 3)
    """
    x = adjoint_array(P, spec.A.vec)
    y = adjoint_array(Q, spec.B.vec)
    return nu_bar_array(x, y, spec.C.vec)


def _pairing(spec: TorusSpec, cfg: ConfigPoint, pairs) -> tuple[float, float, float]:
    K = killing_fields(spec, cfg)
    return tuple(PAIRING_SCALE * omega_eval(K[i], K[j]) for i, j in pairs)


def omega_pairing(spec: TorusSpec, cfg: ConfigPoint) -> tuple[float, float, float]:
    """
    (sqrt(3)/4) (omega(K1,K2), omega(K3,K1), omega(K2,K3)); equals nu
    """
    return _pairing(spec, cfg, PAIRS)


def raw_pairing(spec: TorusSpec, cfg: ConfigPoint) -> tuple[float, float, float]:
    return _pairing(spec, cfg, RAW_PAIRS)


def nu_jacobian(
    spec: TorusSpec, cfg: ConfigPoint, fd: FDParams = FDParams()
) -> np.ndarray:
    """
    3x6 matrix: column n is the derivative of nu along the frame vector X_n
    """
    f = lambda c: nu(spec, c).array  # noqa: E731
    return np.column_stack(
        [fd_directional(f, cfg, TangentVector.basis(cfg, n), fd) for n in range(1, 7)]
    )


def domega_rows(spec: TorusSpec, cfg: ConfigPoint) -> np.ndarray:
    """
    Row k, column n: (sqrt(3)/4) d(omega)(K_i, K_j, X_n) for (i, j) = PAIRS[k].
    This is the exact differential of nu.
    """
    K = killing_fields(spec, cfg)
    D = d_omega_tensor()
    return np.array(
        [
            PAIRING_SCALE * np.einsum("a,b,abc->c", K[i].coeffs, K[j].coeffs, D)
            for i, j in PAIRS
        ]
    )


def jacobian_rank(matrix: np.ndarray) -> int:
    return numerical_rank(matrix)
