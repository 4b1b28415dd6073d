"""
The invariant suite behind `nkmoment verify`.

Checks register themselves on a `Suite` by name. Each check receives a
`VerifyContext` and its own random stream, and returns an `Outcome`; the suite
turns outcomes into `Check` rows for the report.
"""

from __future__ import annotations

import logging
import math
import sys
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from tqdm import tqdm

from nkmoment.conformal import RescaledMoment, nu_hat, nu_hat_rank
from nkmoment.differential import (
    FDParams,
    bracket_coeffs,
    christoffel,
    conventions_report,
    d_omega_tensor,
    fd_bracket,
    fd_d_omega,
    fd_dd_omega,
    lie_derivative_j,
    lie_derivative_metric,
    nabla_j_defect,
)
from nkmoment.fibers import (
    FiberTag,
    brute_force_classify,
    component_sign,
    fiber_classify,
    fiber_sample,
    random_boundary_value,
    random_interior_value,
)
from nkmoment.frame import (
    ConfigPoint,
    MetricKind,
    TangentVector,
    ambient_to_frame,
    frame_at,
    j_apply,
    j_matrix,
    metric_eval,
    metric_matrix,
    omega_eval,
    random_tangent,
)
from nkmoment.image import (
    EDGES,
    UPPER,
    LOWER,
    DeltaTag,
    boundary_mesh,
    bulge_points,
    delta_classify,
    edge_check,
    face_centroids,
    f_bound_array,
    hessian_det_f,
    hessian_display_match,
    in_tetrahedron,
    variety_F,
    variety_F_array,
    VERTICES,
)
from nkmoment.moment import (
    MomentValue,
    domega_rows,
    jacobian_rank,
    nu,
    nu_bar,
    nu_batch,
    nu_jacobian,
    omega_pairing,
    raw_pairing,
)
from nkmoment.quaternion import (
    adjoint,
    exp_im,
    qmul,
    sample_imaginary,
    sample_unit,
    sample_units,
)
from nkmoment.torus import (
    TorusElement,
    TorusSpec,
    killing_field_list,
    killing_fields,
    orbit_dimension,
    torus_act,
    verify_homomorphism,
)
from nkmoment.utils import FD_TOL, SCHEMA_VERSION

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class VerifyContext:
    spec: TorusSpec
    seed: int
    samples: int
    tol: float = FD_TOL
    fd: FDParams = field(default_factory=FDParams)

    def rng(self, index: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, index])

    def count(self, divisor: int = 1, minimum: int = 1) -> int:
        return max(minimum, self.samples // divisor)


@dataclass(frozen=True)
class Outcome:
    residual: float
    tol: float
    passed: bool | None = None

    @property
    def ok(self) -> bool:
        if self.passed is not None:
            return bool(self.passed)
        return bool(math.isfinite(self.residual) and self.residual <= self.tol)


@dataclass(frozen=True)
class Check:
    name: str
    claim: str
    residual: float
    tol: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "paper_claim": self.claim,
            "residual": self.residual,
            "tol": self.tol,
            "pass": self.passed,
        }


CheckFn = Callable[[VerifyContext, np.random.Generator], Outcome]


class Suite:
    """
    Ordered registry of named checks
    """

    def __init__(self):
        self.__checks: dict[str, tuple[str, CheckFn]] = {}

    def add(self, name: str, claim: str, fn: CheckFn) -> None:
        if name in self.__checks:
            raise ValueError(f"Duplicate check: '{name}' already exists")
        self.__checks[name] = (claim, fn)

    def check(self, name: str, claim: str):
        def register(fn: CheckFn) -> CheckFn:
            self.add(name, claim, fn)
            return fn

        return register

    def list(self) -> list[str]:
        return list(self.__checks)

    def total_number_checks(self) -> int:
        return len(self.__checks)

    def run(
        self,
        ctx: VerifyContext,
        progress: bool = True,
        only: list[str] | None = None,
    ) -> list[Check]:
        results = []
        items = [
            (i, name, claim, fn)
            for i, (name, (claim, fn)) in enumerate(self.__checks.items())
            if only is None or name in only
        ]
        for i, name, claim, fn in tqdm(
            items, desc="verify", file=sys.stderr, disable=not progress
        ):
            outcome = fn(ctx, ctx.rng(i))
            check = Check(
                name, claim, float(outcome.residual), float(outcome.tol), bool(outcome.ok)
            )
            level = logging.DEBUG if check.passed else logging.WARNING
            logger.log(level, f"{name}: residual {check.residual:.3e} (tol {check.tol:.1e})")
            results.append(check)
        return results


SUITE = Suite()


def _max(values, default: float = 0.0) -> float:
    values = list(values)
    return float(max(values)) if values else default


# --- quaternion algebra and frame -----------------------------------------


@SUITE.check("quaternion-algebra", "qmul is associative and norm multiplicative")
def _quaternion_algebra(ctx, rng):
    worst = 0.0
    for _ in range(ctx.count()):
        a, b, c = sample_unit(rng), sample_unit(rng), sample_unit(rng)
        assoc = (qmul(qmul(a, b), c) - qmul(a, qmul(b, c))).norm()
        norm = abs(qmul(a, b).norm() - a.norm() * b.norm())
        # pi_A is constant on the circle e^{At} p
        A = sample_imaginary(rng)
        t = rng.uniform(0.0, 2.0 * np.pi)
        fiber = np.max(np.abs(adjoint(exp_im(A, t) * a, A).vec - adjoint(a, A).vec))
        worst = max(worst, assoc, norm, fiber)
    return Outcome(worst, 1e-12)


@SUITE.check("frame-orthonormal", "the frame E_n, F_n is flat-orthonormal")
def _frame_orthonormal(ctx, rng):
    return Outcome(
        _max(
            np.max(np.abs(frame_at(ConfigPoint.random(rng)).gram() - np.eye(6)))
            for _ in range(ctx.count())
        ),
        1e-12,
    )


@SUITE.check("j-squared", "J^2 = -Id")
def _j_squared(ctx, rng):
    cfg = ConfigPoint.random(rng)
    return Outcome(
        _max(
            np.max(np.abs(j_apply(j_apply(v)).coeffs + v.coeffs))
            for v in (random_tangent(cfg, rng) for _ in range(ctx.count()))
        ),
        1e-12,
    )


@SUITE.check("metric-j-invariant", "the averaged metric is J-invariant")
def _metric_j_invariant(ctx, rng):
    conv = conventions_report().conventions
    cfg = ConfigPoint.random(rng)
    worst = 0.0
    for _ in range(ctx.count()):
        u, v = random_tangent(cfg, rng), random_tangent(cfg, rng)
        Ju, Jv = j_apply(u, conv), j_apply(v, conv)
        worst = max(
            worst,
            abs(
                metric_eval(Ju, Jv, MetricKind.NK_AVERAGED, conv)
                - metric_eval(u, v, MetricKind.NK_AVERAGED, conv)
            ),
        )
    return Outcome(worst, 1e-12)


@SUITE.check("omega-compatibility", "omega = lambda g(J., .) for one global lambda")
def _omega_compatibility(ctx, rng):
    report = conventions_report()
    conv, kind = report.conventions, report.metric
    worst = 0.0
    for _ in range(ctx.count()):
        cfg = ConfigPoint.random(rng)
        u, v = random_tangent(cfg, rng), random_tangent(cfg, rng)
        gap = omega_eval(u, v) - report.lambda_adopted * metric_eval(
            j_apply(u, conv), v, kind, conv
        )
        worst = max(worst, abs(gap))
    return Outcome(worst, 1e-9)


# --- connection and d(omega) ----------------------------------------------


@SUITE.check("nearly-kaehler", "(nabla_u J) u = 0 for the adopted conventions")
def _nearly_kaehler(ctx, rng):
    cfg = ConfigPoint.identity()
    return Outcome(
        _max(
            nabla_j_defect(random_tangent(cfg, rng, unit=True))
            for _ in range(ctx.count())
        ),
        1e-10,
    )


@SUITE.check("flat-metric-control", "the flat metric is not nearly Kaehler")
def _flat_control(ctx, rng):
    cfg = ConfigPoint.identity()
    u = TangentVector(np.array([1.0, 0.0, 0.0, 0.0, 1.0, 0.0]) / math.sqrt(2.0), cfg)
    defect = nabla_j_defect(u, MetricKind.FLAT)
    return Outcome(defect, 0.1, passed=defect > 0.1)


@SUITE.check("levi-civita", "the Koszul connection is torsion free and metric")
def _levi_civita(ctx, rng):
    report = conventions_report()
    G_kind = report.metric
    gamma = christoffel(G_kind, report.conventions)
    G = metric_matrix(G_kind, report.conventions)
    eye = np.eye(6)
    worst = 0.0
    for a in range(6):
        for b in range(6):
            torsion = gamma[a, b] - gamma[b, a] - bracket_coeffs(eye[a], eye[b])
            worst = max(worst, float(np.max(np.abs(torsion))))
            for c in range(6):
                # X_a g(X_b, X_c) = 0
                metric = gamma[a, b] @ G @ eye[c] + eye[b] @ G @ gamma[a, c]
                worst = max(worst, abs(float(metric)))
    return Outcome(worst, 1e-12)


@SUITE.check("d-omega-fd", "d(omega) from brackets matches a coordinate stencil")
def _d_omega_fd(ctx, rng):
    D = d_omega_tensor()
    return Outcome(
        _max(
            np.max(np.abs(fd_d_omega(ConfigPoint.random(rng), ctx.fd) - D))
            for _ in range(ctx.count(10))
        ),
        ctx.tol,
    )


@SUITE.check("dd-omega", "d(omega) is closed")
def _dd_omega(ctx, rng):
    return Outcome(
        _max(
            np.max(np.abs(fd_dd_omega(ConfigPoint.random(rng), ctx.fd)))
            for _ in range(ctx.count(20))
        ),
        10.0 * ctx.tol,
    )


# --- torus action ---------------------------------------------------------


@SUITE.check("killing-frame-form", "frame and ambient forms of K_1, K_2, K_3 agree")
def _killing_frame_form(ctx, rng):
    worst = 0.0
    for _ in range(ctx.count()):
        cfg = ConfigPoint.random(rng)
        K = killing_fields(ctx.spec, cfg)
        for n in range(3):
            expanded = ambient_to_frame(cfg, K.ambient[n]).coeffs
            worst = max(worst, float(np.max(np.abs(expanded - K[n + 1].coeffs))))
    return Outcome(worst, 1e-12)


@SUITE.check("killing-holomorphic", "L_K g = 0 and L_K J = 0 for K_1, K_2, K_3")
def _killing_holomorphic(ctx, rng):
    worst = 0.0
    for _ in range(ctx.count(10)):
        cfg = ConfigPoint.random(rng)
        u, v = random_tangent(cfg, rng), random_tangent(cfg, rng)
        for K in killing_field_list(ctx.spec):
            worst = max(
                worst,
                abs(lie_derivative_metric(K, cfg, u, v, ctx.fd)),
                float(np.max(np.abs(lie_derivative_j(K, cfg, u, ctx.fd).coeffs))),
            )
    return Outcome(worst, ctx.tol)


@SUITE.check("killing-commute", "the torus generators commute")
def _killing_commute(ctx, rng):
    fields = killing_field_list(ctx.spec)
    worst = 0.0
    for _ in range(ctx.count(20)):
        cfg = ConfigPoint.random(rng)
        for i in range(3):
            for j in range(i + 1, 3):
                bracket = fd_bracket(fields[i], fields[j], cfg, ctx.fd)
                worst = max(worst, float(np.max(np.abs(bracket.coeffs))))
    return Outcome(worst, 1e-8)


@SUITE.check("homomorphism", "F_{a,b,c} o F_{a',b',c'} = F_{aa',bb',cc'}")
def _homomorphism(ctx, rng):
    report = verify_homomorphism(ctx.count(), rng)
    return Outcome(report.composition_residual, 1e-12)


@SUITE.check("kernel", "the kernel among sign triples is {(1,1,1), (-1,-1,-1)}")
def _kernel(ctx, rng):
    report = verify_homomorphism(1, rng)
    expected = [(1, 1, 1), (-1, -1, -1)]
    ok = sorted(report.kernel) == sorted(expected) and report.generic_diagonal_moves
    return Outcome(float(len(report.kernel)), 2.0, passed=ok)


# --- moment map -----------------------------------------------------------


@SUITE.check("omega-pairing", "(sqrt(3)/4) omega(K_i, K_j) equals the closed form nu")
def _omega_pairing(ctx, rng):
    worst = 0.0
    for _ in range(ctx.count()):
        spec = TorusSpec.random(rng)
        cfg = ConfigPoint.random(rng)
        worst = max(worst, float(np.max(np.abs(np.array(omega_pairing(spec, cfg)) - nu(spec, cfg).array))))
    return Outcome(worst, 1e-12)


@SUITE.check("nu-factorisation", "nu = nu_bar o (pi_A x pi_B)")
def _nu_factorisation(ctx, rng):
    P = sample_units(rng, ctx.count())
    Q = sample_units(rng, ctx.count())
    batch = nu_batch(ctx.spec, P, Q)
    worst = 0.0
    for row, p, q in zip(batch, P, Q):
        cfg = ConfigPoint.from_arrays(p, q)
        direct = nu_bar(adjoint(cfg.p, ctx.spec.A), adjoint(cfg.q, ctx.spec.B), ctx.spec.C)
        worst = max(worst, float(np.max(np.abs(nu(ctx.spec, cfg).array - direct.array))))
        worst = max(worst, float(np.max(np.abs(row - direct.array))))
    return Outcome(worst, 1e-14)


@SUITE.check("torus-invariance", "nu is constant on torus orbits")
def _torus_invariance(ctx, rng):
    worst = 0.0
    for _ in range(ctx.count()):
        cfg = ConfigPoint.random(rng)
        moved = torus_act(ctx.spec, TorusElement.random(rng), cfg)
        worst = max(worst, float(np.max(np.abs(nu(ctx.spec, moved).array - nu(ctx.spec, cfg).array))))
    return Outcome(worst, 1e-12)


@SUITE.check("dnu-domega", "d nu_k = (sqrt(3)/4) d(omega)(K_i, K_j, .)")
def _dnu_domega(ctx, rng):
    worst = 0.0
    for _ in range(ctx.count(5)):
        cfg = ConfigPoint.random(rng)
        gap = nu_jacobian(ctx.spec, cfg, ctx.fd) - domega_rows(ctx.spec, cfg)
        worst = max(worst, float(np.max(np.abs(gap))))
    return Outcome(worst, ctx.tol)


def _interior_preimage(spec: TorusSpec, rng) -> ConfigPoint:
    while True:
        cfg = ConfigPoint.random(rng)
        tau = nu(spec, cfg)
        if variety_F(tau) >= 0.05 and tau.norm() >= 0.1:
            return cfg


@SUITE.check("submersion", "nu has rank 3 over the interior of Delta and 0 over V")
def _submersion(ctx, rng):
    worst = 0
    for _ in range(ctx.count(10)):
        cfg = _interior_preimage(ctx.spec, rng)
        worst = max(worst, 3 - jacobian_rank(nu_jacobian(ctx.spec, cfg, ctx.fd)))
    vertex = fiber_sample(MomentValue(1.0, 1.0, 1.0), ctx.spec, 1, rng)[0].cfg
    worst = max(worst, jacobian_rank(nu_jacobian(ctx.spec, vertex, ctx.fd)))
    return Outcome(float(worst), 0.0)


# --- image ----------------------------------------------------------------


@SUITE.check("sandwich", "f- <= X <= f+ on sampled values of nu")
def _sandwich(ctx, rng):
    n = 10 * ctx.count()
    values = nu_batch(ctx.spec, sample_units(rng, n), sample_units(rng, n))
    X, Y, Z = values.T
    above = X - f_bound_array(UPPER, Y, Z)
    below = f_bound_array(LOWER, Y, Z) - X
    return Outcome(float(max(np.max(above), np.max(below), 0.0)), 1e-12)


@SUITE.check("convexity", "segments between points of Delta stay in Delta")
def _convexity(ctx, rng):
    n = ctx.count()
    values = nu_batch(ctx.spec, sample_units(rng, 2 * n), sample_units(rng, 2 * n))
    outside = 0
    for a, b in zip(values[:n], values[n:]):
        for s in np.linspace(0.0, 1.0, 12)[1:-1]:
            point = MomentValue.from_array((1.0 - s) * a + s * b)
            if delta_classify(point).tag is DeltaTag.OUTSIDE:
                outside += 1
    return Outcome(float(outside), 0.0)


@SUITE.check("variety", "the boundary of Delta lies on F = 0, F(0) = 1, F(V) = 0")
def _variety(ctx, rng):
    mesh = boundary_mesh(max(3, int(math.sqrt(ctx.samples)) | 1))
    worst = float(np.max(np.abs(variety_F_array(mesh.vertices))))
    worst = max(worst, abs(variety_F(MomentValue(0.0, 0.0, 0.0)) - 1.0))
    worst = max(worst, _max(abs(variety_F(MomentValue.from_array(v))) for v in VERTICES))
    return Outcome(worst, 1e-9)


@SUITE.check("hessian", "det Hess f+- >= 0 with closed form matching finite differences")
def _hessian(ctx, rng):
    worst = 0.0
    negative = 0.0
    for _ in range(ctx.count()):
        Y, Z = rng.uniform(-0.8, 0.8, 2)
        for sign in (UPPER, LOWER):
            closed, numeric = hessian_det_f(sign, Y, Z)
            worst = max(worst, abs(closed - numeric))
            negative = max(negative, -closed)
    match = hessian_display_match(rng.uniform(-0.8, 0.8, (ctx.count(), 2)))
    ok = worst <= 10.0 * ctx.tol and negative <= 1e-12 and match.sheet == LOWER
    return Outcome(worst, 10.0 * ctx.tol, passed=ok)


@SUITE.check("edges", "the six edges of the tetrahedron lie in the boundary")
def _edges(ctx, rng):
    worst = 0.0
    ok = True
    for v1, v2 in EDGES:
        for t in np.concatenate([[-1.0, 0.0, 1.0], rng.uniform(-1.0, 1.0, ctx.count())]):
            e = edge_check(v1, v2, t)
            worst = max(worst, min(abs(e.upper_gap), abs(e.lower_gap)))
            ok = ok and e.on_boundary
    return Outcome(worst, 1e-12, passed=ok)


@SUITE.check("bulge", "face interiors are interior points, Delta bulges beyond the faces")
def _bulge(ctx, rng):
    ok = all(
        delta_classify(MomentValue.from_array(c)).tag is DeltaTag.INTERIOR
        for c in face_centroids()
    )
    for b in bulge_points():
        tau = MomentValue.from_array(b)
        ok = ok and delta_classify(tau).tag is DeltaTag.BOUNDARY_SMOOTH
        ok = ok and not in_tetrahedron(tau)
    return Outcome(0.0 if ok else 1.0, 0.0, passed=ok)


# --- fibres ---------------------------------------------------------------


@SUITE.check("fiber-table", "vertex, boundary and interior fibres have 1, 1, 2 components")
def _fiber_table(ctx, rng):
    C = ctx.spec.C
    wrong = 0
    for v in VERTICES:
        wrong += fiber_classify(MomentValue.from_array(v), C).tag is not FiberTag.VERTEX_POINT
    for _ in range(ctx.count(2)):
        wrong += fiber_classify(random_boundary_value(rng, C), C).tag is not FiberTag.ONE_CIRCLE
        fiber = fiber_classify(random_interior_value(rng, C), C)
        if fiber.tag is not FiberTag.TWO_CIRCLES:
            wrong += 1
            continue
        signs = {component_sign(x, y, C) for x, y in fiber.witnesses}
        wrong += signs != {1, -1}
    return Outcome(float(wrong), 0.0)


@SUITE.check("fiber-oracle", "brute-force sampling agrees with the fibre classification")
def _fiber_oracle(ctx, rng):
    C = ctx.spec.C
    taus = [MomentValue(1.0, 1.0, 1.0)]
    for _ in range(ctx.count(50, minimum=2)):
        taus.append(random_boundary_value(rng, C))
        taus.append(random_interior_value(rng, C))
    disagree = sum(
        brute_force_classify(tau, C, rng).tag is not fiber_classify(tau, C).tag
        for tau in taus
    )
    return Outcome(float(disagree), 0.0)


@SUITE.check("fiber-lift", "fibre samples lie on nu^-1(tau) and span torus orbits")
def _fiber_lift(ctx, rng):
    C = ctx.spec.C
    worst = 0.0
    dims_ok = True
    cases = [(MomentValue(1.0, 1.0, 1.0), 2)]
    for _ in range(ctx.count(20)):
        cases.append((random_interior_value(rng, C), 3))
        cases.append((random_boundary_value(rng, C), 3))
    for tau, dim in cases:
        for sample in fiber_sample(tau, ctx.spec, 4, rng):
            worst = max(worst, float(np.max(np.abs(nu(ctx.spec, sample.cfg).array - tau.array))))
            moved = torus_act(ctx.spec, TorusElement.random(rng), sample.cfg)
            worst = max(worst, float(np.max(np.abs(nu(ctx.spec, moved).array - tau.array))))
            dims_ok = dims_ok and orbit_dimension(ctx.spec, sample.cfg) == dim
    return Outcome(worst, 1e-9, passed=worst <= 1e-9 and dims_ok)


@SUITE.check("conformal", "nu_hat = nu/|nu| is unit with rank <= 2 where nu has rank 3")
def _conformal(ctx, rng):
    rescaled = RescaledMoment(ctx.spec)
    worst = 0.0
    ok = True
    for _ in range(ctx.count(10)):
        cfg = _interior_preimage(ctx.spec, rng)
        worst = max(worst, abs(rescaled(cfg).norm() - 1.0))
        ok = ok and nu_hat_rank(ctx.spec, cfg, ctx.fd) <= 2
        ok = ok and jacobian_rank(nu_jacobian(ctx.spec, cfg, ctx.fd)) == 3
    for cfg in rescaled.sample_window(rng, ctx.count()):
        worst = max(worst, abs(nu_hat(ctx.spec, cfg).norm() - 1.0))
    return Outcome(worst, 1e-12, passed=ok and worst <= 1e-12)


# --- report ---------------------------------------------------------------


def pairing_signs(spec: TorusSpec, rng: np.random.Generator) -> list[int]:
    """
    Signs relating the lexicographic pairing (K1,K2), (K1,K3), (K2,K3) to nu
    """
    cfg = ConfigPoint.random(rng)
    return [int(np.sign(r * v)) for r, v in zip(raw_pairing(spec, cfg), nu(spec, cfg).array)]


def dnu_sign(spec: TorusSpec, rng: np.random.Generator, fd: FDParams) -> int:
    cfg = ConfigPoint.random(rng)
    jac = nu_jacobian(spec, cfg, fd)
    rows = domega_rows(spec, cfg)
    return 1 if np.linalg.norm(jac - rows) < np.linalg.norm(jac + rows) else -1


def conventions_section(ctx: VerifyContext) -> dict:
    rng = np.random.default_rng([ctx.seed, 10_000])
    section = conventions_report().to_dict()
    hom = verify_homomorphism(ctx.count(), rng)
    section["kernel"] = [list(k) for k in hom.kernel]
    section["injective"] = hom.injective
    section["misread_image_residual"] = hom.misread_image_residual
    section["pairing_signs"] = pairing_signs(ctx.spec, rng)
    section["dnu_sign"] = dnu_sign(ctx.spec, rng, ctx.fd)
    section["j_matrix_displayed"] = j_matrix().tolist()
    return section


def run_verify(
    ctx: VerifyContext, progress: bool = True, only: list[str] | None = None
) -> dict:
    """
    Run the suite and assemble the report document
    """
    checks = SUITE.run(ctx, progress, only)
    failed = [c.name for c in checks if not c.passed]
    if failed:
        logger.warning(f"{len(failed)} check(s) failed: {', '.join(failed)}")
    else:
        logger.info(f"all {len(checks)} checks passed")
    return {
        "schema_version": SCHEMA_VERSION,
        "spec": ctx.spec.to_dict(),
        "seed": ctx.seed,
        "samples": ctx.samples,
        "tol": ctx.tol,
        "fd_step": ctx.fd.step,
        "checks": [c.to_dict() for c in checks],
        "passed": not failed,
        "conventions": conventions_section(ctx),
    }
