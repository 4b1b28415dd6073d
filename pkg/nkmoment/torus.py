"""
The isometries F_{a,b,c}(p, q) = (a p c^-1, b q c^-1), the maximal torus
{(e^{A t1}, e^{B t2}, e^{C t3})} and its Killing fields

    K_1 = (A p, 0)    K_2 = (0, B q)    K_3 = (-p C, -q C)
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from nkmoment.frame import BASIS_SIGNS, ConfigPoint, TangentVector
from nkmoment.quaternion import (
    ONE,
    I,
    J,
    ImaginaryUnit,
    UnitQuaternion,
    adjoint,
    exp_im,
    qmul_array,
    sample_imaginary,
    sample_unit,
)
from nkmoment.utils import numerical_rank

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class TorusSpec:
    """
    The axes (A, B, C) of the maximal torus
    """

    A: ImaginaryUnit
    B: ImaginaryUnit
    C: ImaginaryUnit

    @classmethod
    def lagrangian(cls) -> TorusSpec:
        """
        A = B = i, C = j: nu^-1(0) is a union of Lagrangian orbits
        """
        return cls(I, I, J)

    @classmethod
    def random(cls, rng: np.random.Generator) -> TorusSpec:
        return cls(sample_imaginary(rng), sample_imaginary(rng), sample_imaginary(rng))

    def to_dict(self) -> dict:
        return {"A": self.A.vec.tolist(), "B": self.B.vec.tolist(), "C": self.C.vec.tolist()}


@dataclass(frozen=True)
class TorusElement:
    """
    Angles (t1, t2, t3), reduced to [0, 2 pi)
    """

    t1: float = 0.0
    t2: float = 0.0
    t3: float = 0.0

    def __post_init__(self):
        for name in ("t1", "t2", "t3"):
            t = float(getattr(self, name)) % TWO_PI
            # x % 2pi can round up to 2pi for tiny negative x
            object.__setattr__(self, name, 0.0 if t >= TWO_PI else t)

    @classmethod
    def random(cls, rng: np.random.Generator) -> TorusElement:
        return cls(*rng.uniform(0.0, TWO_PI, 3))

    @property
    def angles(self) -> np.ndarray:
        return np.array([self.t1, self.t2, self.t3])

    def __add__(self, other: TorusElement) -> TorusElement:
        return TorusElement(*(self.angles + other.angles))

    def __neg__(self) -> TorusElement:
        return TorusElement(*(-self.angles))

    def group_elements(self, spec: TorusSpec):
        return exp_im(spec.A, self.t1), exp_im(spec.B, self.t2), exp_im(spec.C, self.t3)


def act(
    a: UnitQuaternion, b: UnitQuaternion, c: UnitQuaternion, cfg: ConfigPoint
) -> ConfigPoint:
    """
    F_{a,b,c}(p, q) = (a p c^-1, b q c^-1)
    """
    cinv = c.inverse()
    return ConfigPoint(a * cfg.p * cinv, b * cfg.q * cinv)


def torus_act(spec: TorusSpec, el: TorusElement, cfg: ConfigPoint) -> ConfigPoint:
    return act(*el.group_elements(spec), cfg)


def push_forward(
    a: UnitQuaternion, b: UnitQuaternion, c: UnitQuaternion, w: np.ndarray
) -> np.ndarray:
    """
    Differential of F_{a,b,c} on an ambient vector; F is linear on H^2
    """
    cinv = c.inverse().array
    return np.concatenate(
        [
            qmul_array(qmul_array(a.array, w[:4]), cinv),
            qmul_array(qmul_array(b.array, w[4:]), cinv),
        ]
    )


@dataclass(frozen=True, eq=False)
class KillingTriple:
    K1: TangentVector
    K2: TangentVector
    K3: TangentVector
    ambient: np.ndarray

    def __iter__(self):
        return iter((self.K1, self.K2, self.K3))

    def __getitem__(self, index: int) -> TangentVector:
        """
        1-based, matching K_1, K_2, K_3
        """
        return (self.K1, self.K2, self.K3)[index - 1]

    @property
    def matrix(self) -> np.ndarray:
        return np.array([k.coeffs for k in self])


def killing_fields(spec: TorusSpec, cfg: ConfigPoint) -> KillingTriple:
    """
    Frame form from Ap = p (p-bar A p):

        K_1 = (x.i) E_1 + (x.j) E_2 - (x.k) E_3     with x = p-bar A p
    """
    x = adjoint(cfg.p, spec.A).vec
    y = adjoint(cfg.q, spec.B).vec
    c = spec.C.vec
    zero = np.zeros(3)
    coeffs = (
        np.concatenate([BASIS_SIGNS * x, zero]),
        np.concatenate([zero, BASIS_SIGNS * y]),
        np.concatenate([-BASIS_SIGNS * c, -BASIS_SIGNS * c]),
    )
    p, q = cfg.p.array, cfg.q.array
    z4 = np.zeros(4)
    Cq = spec.C.quaternion.array
    ambient = np.array(
        [
            np.concatenate([qmul_array(spec.A.quaternion.array, p), z4]),
            np.concatenate([z4, qmul_array(spec.B.quaternion.array, q)]),
            np.concatenate([-qmul_array(p, Cq), -qmul_array(q, Cq)]),
        ]
    )
    K1, K2, K3 = (TangentVector(c_, cfg) for c_ in coeffs)
    return KillingTriple(K1, K2, K3, ambient)


@dataclass(frozen=True)
class KillingField:
    """
    K_index as a vector field, together with its flow (the torus action along
    one angle) and the differential of that flow
    """

    spec: TorusSpec
    index: int

    def __post_init__(self):
        assert self.index in (1, 2, 3), "Killing field index must be 1, 2 or 3"

    def generators(self, t: float):
        angles = [0.0, 0.0, 0.0]
        angles[self.index - 1] = t
        axes = (self.spec.A, self.spec.B, self.spec.C)
        return tuple(exp_im(axis, s) for axis, s in zip(axes, angles))

    def __call__(self, cfg: ConfigPoint) -> TangentVector:
        return killing_fields(self.spec, cfg)[self.index]

    def flow(self, cfg: ConfigPoint, t: float) -> ConfigPoint:
        return act(*self.generators(t), cfg)

    def push(self, t: float, w: np.ndarray) -> np.ndarray:
        return push_forward(*self.generators(t), np.asarray(w, dtype=float))


def killing_field_list(spec: TorusSpec) -> list[KillingField]:
    return [KillingField(spec, n) for n in (1, 2, 3)]


def orbit_dimension(spec: TorusSpec, cfg: ConfigPoint) -> int:
    """
    dim span{K_1, K_2, K_3}: 2 over the vertices of the image, 3 elsewhere
    """
    return numerical_rank(killing_fields(spec, cfg).matrix)


SIGN_TRIPLES = tuple(
    tuple(UnitQuaternion(s, 0.0, 0.0, 0.0) for s in signs)
    for signs in itertools.product((1.0, -1.0), repeat=3)
)


@dataclass
class HomomorphismReport:
    trials: int
    composition_residual: float = 0.0
    kernel: list[tuple[int, int, int]] = field(default_factory=list)
    random_kernel_hits: int = 0
    generic_diagonal_moves: bool = True
    identity_residual: float = 0.0
    misread_image_residual: float = 0.0

    @property
    def injective(self) -> bool:
        return len(self.kernel) == 1

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "composition_residual": self.composition_residual,
            "kernel": [list(k) for k in self.kernel],
            "injective": self.injective,
            "random_kernel_hits": self.random_kernel_hits,
            "generic_diagonal_moves": self.generic_diagonal_moves,
            "identity_residual": self.identity_residual,
            "misread_image_residual": self.misread_image_residual,
        }


def _distance(a: ConfigPoint, b: ConfigPoint) -> float:
    return float(np.max(np.abs(a.ambient - b.ambient)))


def _fixes_all(a, b, c, points: list[ConfigPoint], tol: float) -> bool:
    return all(_distance(act(a, b, c, x), x) <= tol for x in points)


def verify_homomorphism(
    samples: int, rng: np.random.Generator, test_points: int = 20, tol: float = 1e-12
) -> HomomorphismReport:
    """
    Composition law on random triples, and a kernel search among the sign
    triples and random triples against `test_points` random points.
    """
    report = HomomorphismReport(trials=samples)
    points = [ConfigPoint.random(rng) for _ in range(test_points)]

    for _ in range(samples):
        a, b, c, a2, b2, c2 = (sample_unit(rng) for _ in range(6))
        x = ConfigPoint.random(rng)
        lhs = act(a, b, c, act(a2, b2, c2, x))
        rhs = act(a * a2, b * b2, c * c2, x)
        report.composition_residual = max(report.composition_residual, _distance(lhs, rhs))

        # F(1, 1) = (a c^-1, b c^-1), and not (a c^-1, a b^-1)
        image = act(a, b, c, ConfigPoint(ONE, ONE))
        report.identity_residual = max(
            report.identity_residual,
            _distance(image, ConfigPoint(a * c.inverse(), b * c.inverse())),
        )
        report.misread_image_residual = max(
            report.misread_image_residual,
            _distance(image, ConfigPoint(a * c.inverse(), a * b.inverse())),
        )

        if _fixes_all(a, b, c, points, tol):
            report.random_kernel_hits += 1

    for triple in SIGN_TRIPLES:
        if _fixes_all(*triple, points, tol):
            report.kernel.append(tuple(int(s.w) for s in triple))

    g = sample_unit(rng)
    report.generic_diagonal_moves = not _fixes_all(g, g, g, points, tol)

    logger.info(
        f"homomorphism: residual {report.composition_residual:.3e}, kernel {report.kernel}"
    )
    return report
