"""Modal-decay shock sensor mapped to a per-element FR parameter."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .reference_ops import Basis1D

SCHEMES = ("dg", "fr", "afr")
SENSOR_VARIABLES = ("density", "pressure")


@dataclass(frozen=True)
class SensorConfig:
    c_plus: float
    p: int
    kappa: float = 1.0
    variable: str = "density"

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if not self.c_plus > 0:
            raise ValueError(f"c_plus must be positive, got {self.c_plus}")
        if self.variable not in SENSOR_VARIABLES:
            raise ValueError(f"unknown sensor variable {self.variable!r}")

    @property
    def s0(self) -> float:
        return -4.0 * np.log10(self.p)


def _modal(values, basis: Basis1D, d: int):
    Vinv = basis.modal_inverse
    if d == 1:
        return np.einsum("ka,...a->...k", Vinv, values)
    return np.einsum("lb,ka,...ba->...lk", Vinv, Vinv, values)


def modal_sensor(values, basis: Basis1D, d: int) -> np.ndarray:
    """Energy fraction in the highest modes of the orthonormal expansion.

    ``values`` holds nodal values per element, shape ``(..., p+1)`` in 1D or
    ``(..., p+1, p+1)`` in 2D.  In 2D the highest modes are those whose larger
    per-direction degree equals p.  Identically zero elements give 0.
    """
    v = np.asarray(values, dtype=float)
    coef = _modal(v, basis, d)
    p = basis.p
    energy = coef**2
    if d == 1:
        total = energy.sum(axis=-1)
        top = energy[..., p]
    else:
        total = energy.sum(axis=(-2, -1))
        top = energy[..., p, :].sum(axis=-1) + energy[..., :p, p].sum(axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where(total > 0, top / np.where(total > 0, total, 1.0), 0.0)
    return s


def smooth_scale(S, config: SensorConfig) -> np.ndarray:
    """Map sensor values to eps in [0, 1] with a sine ramp of half-width kappa around s0."""
    S = np.asarray(S, dtype=float)
    with np.errstate(divide="ignore"):
        se = np.where(S > 0, np.log10(np.where(S > 0, S, 1.0)), -np.inf)
    x = (se - config.s0) / config.kappa
    ramp = 0.5 * (1.0 + np.sin(0.5 * np.pi * np.clip(x, -1.0, 1.0)))
    eps = np.where(x < -1.0, 0.0, np.where(x > 1.0, 1.0, ramp))
    return eps if eps.shape else float(eps)


def sensor_variable(U, variable: str, d: int, gamma: float):
    if variable == "density":
        return U[..., 0]
    rho = U[..., 0]
    m = U[..., 1 : d + 1]
    return (gamma - 1.0) * (U[..., -1] - 0.5 * np.sum(m * m, axis=-1) / rho)


def update_c_field(U, scheme: str, config: SensorConfig, basis: Basis1D, d: int,
                   gamma: float = 1.4) -> np.ndarray:
    """Per-element FR parameter: 0 for DG, c_+ for FR, eps(S_e) c_+ for AFR."""
    nel = U.shape[0]
    if scheme == "dg":
        return np.zeros(nel)
    if scheme == "fr":
        return np.full(nel, config.c_plus)
    if scheme != "afr":
        raise ValueError(f"unknown scheme {scheme!r}; use one of {SCHEMES}")
    vals = sensor_variable(U, config.variable, d, gamma)
    if d == 1:
        vals = vals[:, 0, :]
    S = modal_sensor(vals, basis, d)
    return smooth_scale(S, config) * config.c_plus
