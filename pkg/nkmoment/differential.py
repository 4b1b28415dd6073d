"""
Brackets, the Levi-Civita connection, d(omega) and the nearly Kaehler defect
in the frame {E_n, F_n}, plus a small finite-difference engine used to
cross-check all of them.

Every frame field X_n is of the form (p, q) -> (p e, 0) or (0, q e) for a fixed
imaginary unit e, so brackets are constant and every structure has constant
frame coefficients. Connection and d(omega) therefore reduce to bracket terms.

The finite-difference side never uses that shortcut: it works on the ambient
8-vectors along explicit curves in S^3 x S^3.
"""

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass, field
from typing import Callable, Protocol, runtime_checkable

import numpy as np

from nkmoment.frame import (
    BASIS_SIGNS,
    DISPLAYED,
    FLIPPED,
    ConfigPoint,
    Conventions,
    MetricKind,
    TangentVector,
    ambient_to_frame,
    compatibility_constant,
    frame_to_ambient,
    j_matrix,
    metric_matrix,
    omega_matrix,
)
from nkmoment.quaternion import dexp_vec, exp_vec, pure, qmul_array
from nkmoment.utils import (
    DEFAULT_FD_STEP,
    DEFAULT_SEED,
    MAX_FD_STEP,
    MIN_FD_STEP,
)

logger = logging.getLogger(__name__)

# finite-difference vectors are only tangent up to the truncation error
FD_TANGENT_TOL = 1e-6

VectorField = Callable[[ConfigPoint], TangentVector]


@dataclass(frozen=True)
class FDParams:
    """
    Finite difference settings. Only second order central differences are
    supported; `richardson` combines steps h and h/2 for fourth order.
    """

    step: float = DEFAULT_FD_STEP
    scheme: str = "central"
    richardson: bool = False

    def __post_init__(self):
        if not MIN_FD_STEP <= self.step <= MAX_FD_STEP:
            raise ValueError(
                f"fd step {self.step!r} outside [{MIN_FD_STEP}, {MAX_FD_STEP}]"
            )
        if self.scheme != "central":
            raise ValueError(f"unsupported fd scheme '{self.scheme}'")


@runtime_checkable
class FlowField(Protocol):
    """
    A vector field that knows its own flow and the differential of that flow
    """

    def __call__(self, cfg: ConfigPoint) -> TangentVector: ...

    def flow(self, cfg: ConfigPoint, t: float) -> ConfigPoint: ...

    def push(self, t: float, w: np.ndarray) -> np.ndarray: ...


def central_difference(g: Callable[[float], np.ndarray], fd: FDParams):
    """
    d/dt g(t) at t = 0
    """
    h = fd.step

    def _d(step):
        return (np.asarray(g(step)) - np.asarray(g(-step))) / (2.0 * step)

    if fd.richardson:
        return (4.0 * _d(h / 2.0) - _d(h)) / 3.0
    return _d(h)


def _as_result(value):
    value = np.asarray(value)
    return float(value) if value.ndim == 0 else value


# --- exact side ------------------------------------------------------------


@functools.cache
def bracket_tensor() -> np.ndarray:
    """
    B[n, m] = frame coefficients of [X_n, X_m] (0-based indices).
    [p e, p e'] = p (e e' - e' e) on each factor, mixed brackets vanish.
    """
    B = np.zeros((6, 6, 6))
    units = pure(BASIS_SIGNS * np.eye(3))
    for block in (0, 3):
        for a in range(3):
            for b in range(3):
                comm = qmul_array(units[a], units[b]) - qmul_array(units[b], units[a])
                B[block + a, block + b, block : block + 3] = BASIS_SIGNS * comm[1:]
    B.setflags(write=False)
    return B


def frame_bracket(n: int, m: int) -> np.ndarray:
    """
    [X_n, X_m] for 1-based frame indices
    """
    assert 1 <= n <= 6 and 1 <= m <= 6, "frame index must be in 1..6"
    return bracket_tensor()[n - 1, m - 1].copy()


def bracket_coeffs(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """
    Bracket of the constant-coefficient extensions of u and v
    """
    return np.einsum("a,b,abk->k", u, v, bracket_tensor())


def _cyclic(T: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return np.einsum("bca->abc", T), np.einsum("cab->abc", T)


@functools.cache
def _christoffel(kind: MetricKind, sign: int) -> np.ndarray:
    G = metric_matrix(kind, Conventions(sign))
    # BG[a, b, c] = g([X_a, X_b], X_c)
    BG = np.einsum("abk,kc->abc", bracket_tensor(), G)
    second, third = _cyclic(BG)
    rhs = BG - second + third
    gamma = 0.5 * np.einsum("kc,abc->abk", np.linalg.inv(G), rhs)
    gamma.setflags(write=False)
    return gamma


def christoffel(
    kind: MetricKind = MetricKind.NK_AVERAGED, conventions: Conventions | None = None
) -> np.ndarray:
    """
    Gamma[a, b] = frame coefficients of nabla_{X_a} X_b from the Koszul formula

        2 g(nabla_U V, W) = g([U,V],W) - g([V,W],U) + g([W,U],V)
    """
    conventions = conventions or adopted_conventions()
    return _christoffel(kind, conventions.j_cross_sign)


def levi_civita(
    n: int,
    m: int,
    kind: MetricKind = MetricKind.NK_AVERAGED,
    conventions: Conventions | None = None,
) -> np.ndarray:
    assert 1 <= n <= 6 and 1 <= m <= 6, "frame index must be in 1..6"
    return christoffel(kind, conventions)[n - 1, m - 1].copy()


def covariant_coeffs(
    u: np.ndarray,
    v: np.ndarray,
    kind: MetricKind = MetricKind.NK_AVERAGED,
    conventions: Conventions | None = None,
) -> np.ndarray:
    """
    nabla_U V for the constant-coefficient extensions of u and v
    """
    return np.einsum("a,b,abk->k", u, v, christoffel(kind, conventions))


def nabla_j_defect(
    u: TangentVector,
    kind: MetricKind = MetricKind.NK_AVERAGED,
    conventions: Conventions | None = None,
) -> float:
    """
    |(nabla_u J) u| in the metric of `kind`, with
    (nabla_U J) U = nabla_U (JU) - J nabla_U U.
    """
    conventions = conventions or adopted_conventions()
    J = j_matrix(conventions)
    G = metric_matrix(kind, conventions)
    c = u.coeffs
    d = covariant_coeffs(c, J @ c, kind, conventions) - J @ covariant_coeffs(
        c, c, kind, conventions
    )
    return float(np.sqrt(max(d @ G @ d, 0.0)))


@functools.cache
def d_omega_tensor() -> np.ndarray:
    """
    D[a, b, c] = d(omega)(X_a, X_b, X_c) from the invariant formula. The
    derivative terms vanish since omega has constant frame coefficients:

        d omega(U,V,W) = -omega([U,V],W) - omega([V,W],U) - omega([W,U],V)
    """
    BW = np.einsum("abk,kc->abc", bracket_tensor(), omega_matrix())
    second, third = _cyclic(BW)
    D = -(BW + second + third)
    D.setflags(write=False)
    return D


def d_omega(n: int, m: int, l: int) -> float:
    assert all(1 <= i <= 6 for i in (n, m, l)), "frame index must be in 1..6"
    return float(d_omega_tensor()[n - 1, m - 1, l - 1])


def d_omega_eval(u: TangentVector, v: TangentVector, w: TangentVector) -> float:
    u._check(v)
    u._check(w)
    return float(np.einsum("abc,a,b,c->", d_omega_tensor(), u.coeffs, v.coeffs, w.coeffs))


# --- finite-difference side -----------------------------------------------


def flow_point(cfg: ConfigPoint, coeffs: np.ndarray, t: float) -> ConfigPoint:
    """
    (p exp(t a), q exp(t b)) where (p a, q b) is the ambient form of `coeffs`
    """
    c = np.asarray(coeffs, dtype=float)
    return ConfigPoint.from_arrays(
        qmul_array(cfg.p.array, exp_vec(t * BASIS_SIGNS * c[:3])),
        qmul_array(cfg.q.array, exp_vec(t * BASIS_SIGNS * c[3:])),
    )


def chart(cfg: ConfigPoint, s: np.ndarray) -> ConfigPoint:
    """
    Exponential coordinates centred at cfg
    """
    return flow_point(cfg, s, 1.0)


def coordinate_frame(cfg: ConfigPoint, s: np.ndarray) -> np.ndarray:
    """
    Column a holds the frame coefficients of d/ds_a at chart(cfg, s).
    At s = 0 this is the identity.
    """
    s = np.asarray(s, dtype=float)
    at = chart(cfg, s)
    a = BASIS_SIGNS * s[:3]
    b = BASIS_SIGNS * s[3:]
    M = np.empty((6, 6))
    zero = np.zeros(4)
    for col in range(6):
        e = np.zeros(3)
        e[col % 3] = BASIS_SIGNS[col % 3]
        if col < 3:
            w = np.concatenate([qmul_array(cfg.p.array, dexp_vec(a, e)), zero])
        else:
            w = np.concatenate([zero, qmul_array(cfg.q.array, dexp_vec(b, e))])
        M[:, col] = ambient_to_frame(at, w).coeffs
    return M


def _coordinate_derivatives(g: Callable[[np.ndarray], np.ndarray], fd: FDParams):
    out = []
    for a in range(6):
        e = np.zeros(6)
        e[a] = 1.0
        out.append(central_difference(lambda t, e=e: g(t * e), fd))
    return np.array(out)


def fd_d_omega(cfg: ConfigPoint, fd: FDParams = FDParams()) -> np.ndarray:
    """
    d(omega) at cfg from coordinate derivatives of the components of omega:

        T_abc = d_a w_bc - d_b w_ac + d_c w_ab
    """
    W = omega_matrix()

    def components(s):
        M = coordinate_frame(cfg, s)
        return M.T @ W @ M

    D = _coordinate_derivatives(components, fd)
    return (
        D
        - np.einsum("bac->abc", D)
        + np.einsum("cab->abc", D)
    )


def fd_dd_omega(cfg: ConfigPoint, fd: FDParams = FDParams()) -> np.ndarray:
    """
    The 4-form d(d omega) at cfg, differentiating the coordinate components of
    the exact d(omega) with the alternating stencil.
    """
    D3 = d_omega_tensor()

    def components(s):
        M = coordinate_frame(cfg, s)
        return np.einsum("ijk,ia,jb,kc->abc", D3, M, M, M)

    D = _coordinate_derivatives(components, fd)
    return (
        D
        - np.einsum("bacd->abcd", D)
        + np.einsum("cabd->abcd", D)
        - np.einsum("dabc->abcd", D)
    )


def fd_directional(
    fieldvalue: Callable[[ConfigPoint], float],
    cfg: ConfigPoint,
    v: TangentVector,
    fd: FDParams = FDParams(),
):
    """
    Derivative of `fieldvalue` along v. Array-valued functions are
    differentiated componentwise.
    """
    if not v.anchor.isclose(cfg):
        raise ValueError("direction is not anchored at the evaluation point")
    return _as_result(
        central_difference(lambda t: fieldvalue(flow_point(cfg, v.coeffs, t)), fd)
    )


def constant_field(coeffs: np.ndarray) -> VectorField:
    coeffs = np.asarray(coeffs, dtype=float)
    return lambda c: TangentVector(coeffs, c)


def fd_bracket(
    X: VectorField, Y: VectorField, cfg: ConfigPoint, fd: FDParams = FDParams()
) -> TangentVector:
    """
    [X, Y] = D_X Y - D_Y X with ambient derivatives taken along curves
    """
    x = X(cfg)
    y = Y(cfg)
    dxy = central_difference(lambda t: Y(flow_point(cfg, x.coeffs, t)).ambient, fd)
    dyx = central_difference(lambda t: X(flow_point(cfg, y.coeffs, t)).ambient, fd)
    return ambient_to_frame(cfg, dxy - dyx, tol=FD_TANGENT_TOL)


def d_omega_invariant(
    X: VectorField,
    Y: VectorField,
    Z: VectorField,
    cfg: ConfigPoint,
    fd: FDParams = FDParams(),
) -> float:
    """
    d(omega)(X, Y, Z) at cfg from the full invariant formula with arbitrary
    extensions. Agrees with d_omega_eval whatever extensions are used.
    """
    W = omega_matrix()

    def pair(U, V):
        return lambda c: float(U(c).coeffs @ W @ V(c).coeffs)

    x, y, z = X(cfg), Y(cfg), Z(cfg)
    deriv = (
        fd_directional(pair(Y, Z), cfg, x, fd)
        - fd_directional(pair(X, Z), cfg, y, fd)
        + fd_directional(pair(X, Y), cfg, z, fd)
    )
    xy = fd_bracket(X, Y, cfg, fd).coeffs
    xz = fd_bracket(X, Z, cfg, fd).coeffs
    yz = fd_bracket(Y, Z, cfg, fd).coeffs
    algebraic = -(xy @ W @ z.coeffs) + (xz @ W @ y.coeffs) - (yz @ W @ x.coeffs)
    return float(deriv + algebraic)


def lie_derivative_metric(
    K: VectorField,
    cfg: ConfigPoint,
    u: TangentVector,
    v: TangentVector,
    fd: FDParams = FDParams(),
    kind: MetricKind = MetricKind.NK_AVERAGED,
    conventions: Conventions | None = None,
) -> float:
    """
    (L_K g)(u, v). Fields carrying their flow are pulled back exactly, other
    fields go through L_K g(U,V) = -g([K,U],V) - g(U,[K,V]) with U, V of
    constant coefficients.
    """
    G = metric_matrix(kind, conventions or adopted_conventions())
    if isinstance(K, FlowField):

        def pulled(t):
            at = K.flow(cfg, t)
            a = ambient_to_frame(at, K.push(t, u.ambient)).coeffs
            b = ambient_to_frame(at, K.push(t, v.ambient)).coeffs
            return a @ G @ b

        return float(central_difference(pulled, fd))

    ku = fd_bracket(K, constant_field(u.coeffs), cfg, fd).coeffs
    kv = fd_bracket(K, constant_field(v.coeffs), cfg, fd).coeffs
    return float(-(ku @ G @ v.coeffs) - (u.coeffs @ G @ kv))


def lie_derivative_j(
    K: VectorField,
    cfg: ConfigPoint,
    u: TangentVector,
    fd: FDParams = FDParams(),
    conventions: Conventions | None = None,
) -> TangentVector:
    """
    (L_K J) u, either as d/dt of the pulled back J or as [K, JU] - J [K, U]
    """
    J = j_matrix(conventions or adopted_conventions())
    if isinstance(K, FlowField):

        def pulled(t):
            at = K.flow(cfg, t)
            w = ambient_to_frame(at, K.push(t, u.ambient)).coeffs
            back = K.push(-t, frame_to_ambient(at, J @ w))
            return ambient_to_frame(cfg, back).coeffs

        return TangentVector(central_difference(pulled, fd), cfg)

    kju = fd_bracket(K, constant_field(J @ u.coeffs), cfg, fd).coeffs
    ku = fd_bracket(K, constant_field(u.coeffs), cfg, fd).coeffs
    return TangentVector(kju - J @ ku, cfg)


# --- conventions oracle ---------------------------------------------------

CANDIDATES = tuple(
    (conv, kind)
    for conv in (DISPLAYED, FLIPPED)
    for kind in (MetricKind.NK_AVERAGED, MetricKind.NK_DISPLAYED, MetricKind.FLAT)
)


@dataclass(frozen=True)
class ConventionsReport:
    """
    Outcome of testing every (J sign, metric) candidate against the nearly
    Kaehler identity
    """

    conventions: Conventions
    metric: MetricKind
    defects: dict[str, float] = field(default_factory=dict)
    lambda_adopted: float = 0.0
    lambda_displayed: float = 0.0
    compat_residual: float = 0.0
    averaged_cross: float = 0.0
    adopted_cross: float = 0.0
    displayed_metric_gap: float = 0.0

    def to_dict(self) -> dict:
        return {
            "j_cross_sign": self.conventions.j_cross_sign,
            "j_label": self.conventions.label,
            "metric": self.metric.value,
            "defects": dict(self.defects),
            "lambda": self.lambda_adopted,
            "lambda_displayed_j": self.lambda_displayed,
            "compat_residual": self.compat_residual,
            "metric_cross_sign": int(np.sign(self.adopted_cross)),
            "averaged_g_e1_f1_displayed_j": self.averaged_cross,
            "averaged_g_e1_f1_adopted": self.adopted_cross,
            "displayed_metric_gap": self.displayed_metric_gap,
        }


def _candidate_key(conv: Conventions, kind: MetricKind) -> str:
    return f"{conv.label}/{kind.value}"


def select_conventions(
    samples: int = 64, seed: int = DEFAULT_SEED, tie_tol: float = 1e-12
) -> ConventionsReport:
    """
    Evaluate the worst nearly Kaehler defect of each candidate on random unit
    vectors and adopt the smallest. Ties go to the earlier candidate, which
    puts the averaged metric first.
    """
    rng = np.random.default_rng(seed)
    cfg = ConfigPoint.identity()
    vectors = rng.standard_normal((samples, 6))
    vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)
    vectors = np.vstack([np.eye(6), vectors])

    defects = {}
    best = None
    for conv, kind in CANDIDATES:
        worst = max(
            nabla_j_defect(TangentVector(c, cfg), kind, conv) for c in vectors
        )
        defects[_candidate_key(conv, kind)] = worst
        logger.debug(f"defect {_candidate_key(conv, kind)}: {worst:.3e}")
        if best is None or worst < best[0] - tie_tol:
            best = (worst, conv, kind)

    _, conv, kind = best
    lam, residual = compatibility_constant(conv, kind)
    lam_displayed, _ = compatibility_constant(DISPLAYED, MetricKind.NK_AVERAGED)
    report = ConventionsReport(
        conventions=conv,
        metric=kind,
        defects=defects,
        lambda_adopted=lam,
        lambda_displayed=lam_displayed,
        compat_residual=residual,
        averaged_cross=float(metric_matrix(MetricKind.NK_AVERAGED, DISPLAYED)[0, 3]),
        adopted_cross=float(metric_matrix(kind, conv)[0, 3]),
        displayed_metric_gap=float(
            np.max(
                np.abs(
                    metric_matrix(MetricKind.NK_AVERAGED, conv)
                    - metric_matrix(MetricKind.NK_DISPLAYED, conv)
                )
            )
        ),
    )
    logger.info(
        f"adopted {_candidate_key(conv, kind)} (defect {best[0]:.3e}, lambda {lam:+.6g})"
    )
    return report


@functools.cache
def conventions_report() -> ConventionsReport:
    return select_conventions()


def adopted_conventions() -> Conventions:
    return conventions_report().conventions
