"""Restart tests and penalty updates driven by a weighted seminorm.

Progress is measured in the seminorm induced by the block operator

    M = [ sigma*(A A^T + T1)   0     A      ]
        [ 0                    0     0      ]
        [ A^T                  0   I/sigma  ]

with T1 = lambda_A * I - A A^T, which collapses to

    <w, M w> = sigma*lambda_A*||y||^2 + 2 <A^T y, x> + ||x||^2 / sigma.

With T1 = 0 (normal-equations path) the y-block is sigma * A A^T
instead, giving <w, M w> = || sqrt(sigma) A^T y + x / sqrt(sigma) ||^2.
The z-block never contributes.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .model import Iterate
from .sparse import SparseMatrix

__all__ = [
    "MNormContext",
    "RestartConfig",
    "RestartReason",
    "SigmaUpdateInputs",
    "m_norm",
    "m_norm_squared",
    "check_restart",
    "sigma_update",
    "SIGMA_MIN",
    "SIGMA_MAX",
]

SIGMA_MIN = 1e-8
SIGMA_MAX = 1e8


@dataclass(frozen=True)
class MNormContext:
    """Fixed data of the seminorm: penalty sigma, shift lambda_A, the
    matrix, and whether the T1 = 0 block form applies."""

    sigma: float
    lambda_A: float
    A: SparseMatrix
    t1_zero: bool = False

    def __post_init__(self):
        if not (self.sigma > 0.0 and np.isfinite(self.sigma)):
            raise ValueError(f"sigma must be positive and finite, got {self.sigma}")
        if not (self.lambda_A > 0.0 and np.isfinite(self.lambda_A)):
            raise ValueError(f"lambda_A must be positive, got {self.lambda_A}")

    def with_sigma(self, sigma: float) -> "MNormContext":
        return MNormContext(sigma, self.lambda_A, self.A, self.t1_zero)


def m_norm_squared(w: Iterate, ctx: MNormContext) -> float:
    """Raw quadratic form <w, M w>; may be a tiny negative number in
    floating point.  The z component is ignored."""
    aty = ctx.A.rmatvec(w.y)
    cross = 2.0 * float(np.dot(aty, w.x))
    xx = float(np.dot(w.x, w.x)) / ctx.sigma
    if ctx.t1_zero:
        yy = ctx.sigma * float(np.dot(aty, aty))
    else:
        yy = ctx.sigma * ctx.lambda_A * float(np.dot(w.y, w.y))
    return yy + cross + xx


def m_norm(w: Iterate, ctx: MNormContext) -> float:
    """Seminorm sqrt(max(<w, M w>, 0))."""
    return float(np.sqrt(max(m_norm_squared(w, ctx), 0.0)))


class RestartReason(enum.Enum):
    NONE = "none"
    SUFFICIENT = "sufficient"
    NECESSARY_NO_PROGRESS = "necessary_no_progress"
    LONG_LOOP = "long_loop"
    FIXED = "fixed"


@dataclass(frozen=True)
class RestartConfig:
    """Restart thresholds.

    alpha1 < alpha2 gate the decay tests on the step-length merit,
    alpha3 bounds the inner-loop length as a fraction of the total
    iteration count.  ``enabled`` switches the three adaptive tests;
    ``fixed_period`` adds a plain every-N restart used on its own for
    fixed-frequency runs.
    """

    alpha1: float = 0.2
    alpha2: float = 0.8
    alpha3: float = 0.36
    enabled: bool = True
    fixed_period: int | None = None

    def __post_init__(self):
        if not (0.0 < self.alpha1 < self.alpha2 < 1.0):
            raise ValueError(
                f"need 0 < alpha1 < alpha2 < 1, got {self.alpha1}, {self.alpha2}"
            )
        if not (0.0 < self.alpha3 < 1.0):
            raise ValueError(f"need 0 < alpha3 < 1, got {self.alpha3}")
        if self.fixed_period is not None and self.fixed_period < 1:
            raise ValueError(f"fixed_period must be >= 1, got {self.fixed_period}")


def check_restart(
    merit0: float,
    merit_prev: float,
    merit_curr: float,
    t: int,
    k: int,
    cfg: RestartConfig,
) -> RestartReason:
    """Decide whether the inner loop should restart.

    In priority order: sufficient decay (merit_curr <= alpha1 * merit0),
    necessary decay without progress (merit_curr <= alpha2 * merit0 and
    merit_curr > merit_prev), long inner loop (t >= alpha3 * k), fixed
    period.  The first three require ``cfg.enabled``.
    """
    if min(merit0, merit_prev, merit_curr) < 0.0:
        raise ValueError("merit values must be nonnegative")
    if t < 1 or k < 1:
        raise ValueError(f"counters must be >= 1, got t={t}, k={k}")
    if cfg.enabled:
        if merit_curr <= cfg.alpha1 * merit0:
            return RestartReason.SUFFICIENT
        if merit_curr <= cfg.alpha2 * merit0 and merit_curr > merit_prev:
            return RestartReason.NECESSARY_NO_PROGRESS
        if t >= cfg.alpha3 * k:
            return RestartReason.LONG_LOOP
    if cfg.fixed_period is not None and t >= cfg.fixed_period:
        return RestartReason.FIXED
    return RestartReason.NONE


@dataclass(frozen=True)
class SigmaUpdateInputs:
    """Displacements over the finished inner loop.

    delta_x = ||x_bar - x_anchor||; delta_y is the y displacement in
    the norm matching the active path: sqrt(lambda_A) * ||y_bar - y_anchor||
    on the proximal route, ||A^T (y_bar - y_anchor)|| on the
    normal-equations route.  x_scale / y_scale are magnitude references
    for the near-zero safeguard.
    """

    delta_x: float
    delta_y: float
    x_scale: float = 0.0
    y_scale: float = 0.0

    def __post_init__(self):
        if self.delta_x < 0.0 or self.delta_y < 0.0:
            raise ValueError("displacements must be nonnegative")


def sigma_update(
    inputs: SigmaUpdateInputs,
    sigma_prev: float,
    sigma_min: float = SIGMA_MIN,
    sigma_max: float = SIGMA_MAX,
) -> float:
    """New penalty delta_x / delta_y, clamped to [sigma_min, sigma_max].

    When either displacement is at machine-epsilon scale the previous
    value is kept unchanged (a ratio of vanishing displacements carries
    no information).
    """
    eps = np.finfo(np.float64).eps
    if inputs.delta_x <= eps * (1.0 + inputs.x_scale):
        return sigma_prev
    if inputs.delta_y <= eps * (1.0 + inputs.y_scale):
        return sigma_prev
    return float(min(max(inputs.delta_x / inputs.delta_y, sigma_min), sigma_max))
