"""
Conformal rescaling with phi = -log|nu| on the window |nu| >= eps. The
rescaled multi-moment map is nu_hat = e^phi nu = nu / |nu|, which takes values
in the unit sphere and so has rank at most 2.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from nkmoment.differential import FDParams, fd_directional
from nkmoment.frame import ConfigPoint, TangentVector
from nkmoment.moment import MomentValue, nu
from nkmoment.torus import TorusSpec
from nkmoment.utils import WINDOW_EPS, numerical_rank, singular_values

logger = logging.getLogger(__name__)


def nu_hat(spec: TorusSpec, cfg: ConfigPoint, eps: float = WINDOW_EPS) -> MomentValue:
    value = nu(spec, cfg)
    norm = value.norm()
    if norm < eps:
        raise ValueError(f"|nu| = {norm!r} is below the window cut-off {eps}")
    return MomentValue.from_array(value.array / norm)


def nu_hat_jacobian(
    spec: TorusSpec, cfg: ConfigPoint, fd: FDParams = FDParams(), eps: float = WINDOW_EPS
) -> np.ndarray:
    nu_hat(spec, cfg, eps)

    def f(c):
        value = nu(spec, c)
        return value.array / value.norm()

    return np.column_stack(
        [fd_directional(f, cfg, TangentVector.basis(cfg, n), fd) for n in range(1, 7)]
    )


def nu_hat_singular_values(
    spec: TorusSpec, cfg: ConfigPoint, fd: FDParams = FDParams(), eps: float = WINDOW_EPS
) -> np.ndarray:
    return singular_values(nu_hat_jacobian(spec, cfg, fd, eps))


def nu_hat_rank(
    spec: TorusSpec, cfg: ConfigPoint, fd: FDParams = FDParams(), eps: float = WINDOW_EPS
) -> int:
    return numerical_rank(nu_hat_jacobian(spec, cfg, fd, eps))


@dataclass(frozen=True)
class RescaledMoment:
    """
    nu_hat for a fixed torus on the window {|nu| >= eps}
    """

    spec: TorusSpec
    eps: float = WINDOW_EPS

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError(f"window cut-off must be positive, got {self.eps!r}")

    def contains(self, cfg: ConfigPoint) -> bool:
        return nu(self.spec, cfg).norm() >= self.eps

    def __call__(self, cfg: ConfigPoint) -> MomentValue:
        return nu_hat(self.spec, cfg, self.eps)

    def rank(self, cfg: ConfigPoint, fd: FDParams = FDParams()) -> int:
        return nu_hat_rank(self.spec, cfg, fd, self.eps)

    def sample_window(
        self, rng: np.random.Generator, n: int, max_draws: int | None = None
    ) -> list[ConfigPoint]:
        """
        n Haar-random points inside the window (rejection sampling)
        """
        max_draws = max_draws or 100 * n
        out = []
        draws = 0
        while len(out) < n:
            if draws >= max_draws:
                raise ValueError(f"window |nu| >= {self.eps} too small after {draws} draws")
            cfg = ConfigPoint.random(rng)
            draws += 1
            if self.contains(cfg):
                out.append(cfg)
        logger.debug(f"window sampling accepted {n} of {draws}")
        return out
