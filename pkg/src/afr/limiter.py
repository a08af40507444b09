"""Zhang-Shu positivity-preserving limiter.

The density is squeezed first so its minimum over the enforcement points
(volume and facet quadrature points) reaches the floor; then the whole state is
squeezed with theta = (P_avg - eps) / (P_avg - P_k), the linear bound that
concavity of P(u) guarantees.  It is smaller than the exact root, which keeps
near-vacuum points from carrying huge velocities.  Both scalings are shrunk by
a relative 1e-12 so roundoff cannot leave a point just under the floor; this
also makes a second application a no-op.  Both steps keep the quadrature cell
average fixed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .euler import PositivityError


@dataclass(frozen=True)
class LimiterConfig:
    enabled: bool = True
    eps: float = 1e-13

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError(f"positivity floor must be positive, got {self.eps}")


def limit_field(U, Vq, Vf, wq, d: int, gamma: float, config: LimiterConfig = LimiterConfig(),
                step=None, stage=None):
    """Limit every element in place.  Returns the per-element theta (1 where untouched)."""
    theta = np.ones(U.shape[0])
    if not config.enabled:
        return theta
    status = K.positivity_limit(U, Vq, Vf, wq, d, gamma, config.eps, theta)
    if status >= 0:
        raise PositivityError(
            f"inadmissible cell average in element {status} (step {step}, stage {stage})",
            element=int(status), step=step, stage=stage,
        )
    return theta


def limit_element(u_element, ops, config: LimiterConfig = LimiterConfig(), gamma: float = 1.4):
    """Limit a single element's nodal values ``(ny, nx, nv)``; returns a new array."""
    U = np.array(u_element, dtype=float)[None].copy()
    limit_field(U, np.ascontiguousarray(ops.basis.interp_q), np.ascontiguousarray(ops.basis.interp_f),
                np.ascontiguousarray(ops.basis.quad_weights), ops.d, gamma, config)
    return U[0]
