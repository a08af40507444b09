"""Compressible Euler state algebra for ideal gases.

Conservative states are arrays whose last axis holds ``(rho, m_x[, m_y], E)``;
``d`` (1 or 2) is inferred from that length.  Heavy lifting is done by the
compiled scalar routines in :mod:`afr._kernels`; this module wraps them for
arrays of points.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from . import _kernels as K

DISSIPATION = {"none": K.DISS_NONE, "llf": K.DISS_LLF, "roe": K.DISS_ROE}
TWO_POINT_FLUXES = ("ec-ra",)


class PositivityError(RuntimeError):
    """Raised when density or pressure leaves the admissible set."""

    def __init__(self, message, element=None, step=None, stage=None):
        super().__init__(message)
        self.element = element
        self.step = step
        self.stage = stage


@dataclass(frozen=True)
class FluxConfig:
    two_point: str = "ec-ra"
    dissipation: str = "roe"
    gamma: float = 1.4

    def __post_init__(self):
        if self.two_point not in TWO_POINT_FLUXES:
            raise ValueError(f"unknown two-point flux {self.two_point!r}")
        if self.dissipation not in DISSIPATION:
            raise ValueError(f"unknown dissipation {self.dissipation!r}; use one of {sorted(DISSIPATION)}")
        if not self.gamma > 1.0:
            raise ValueError(f"gamma must exceed 1, got {self.gamma}")

    @property
    def dissipation_code(self) -> int:
        return DISSIPATION[self.dissipation]


def dim_of(u) -> int:
    return np.shape(u)[-1] - 2


class EulerState:
    """Point values of a conservative Euler state (scalar or batched)."""

    def __init__(self, conservative, gamma: float = 1.4):
        self.u = np.asarray(conservative, dtype=float)
        self.gamma = gamma
        self.d = dim_of(self.u)

    @classmethod
    def from_primitive(cls, rho, velocity, pressure, gamma: float = 1.4):
        return cls(primitive_to_conservative(rho, velocity, pressure, gamma), gamma)

    @property
    def density(self):
        return self.u[..., 0]

    @property
    def momentum(self):
        return self.u[..., 1 : self.d + 1]

    @property
    def energy(self):
        return self.u[..., -1]

    @property
    def velocity(self):
        return self.momentum / self.density[..., None]

    @property
    def pressure(self):
        return pressure(self.u, self.gamma)

    @property
    def sound_speed(self):
        return np.sqrt(self.gamma * self.pressure / self.density)

    @property
    def entropy(self):
        """Specific entropy s = ln(P rho^-gamma)."""
        return np.log(self.pressure) - self.gamma * np.log(self.density)

    def admissible(self):
        return admissible(self.u, self.gamma)

    def to_primitive(self):
        return self.density, self.velocity, self.pressure


def primitive_to_conservative(rho, velocity, p, gamma: float = 1.4) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    vel = np.asarray(velocity, dtype=float)
    if vel.ndim == rho.ndim:
        vel = vel[..., None]
    kinetic = 0.5 * rho * np.sum(vel * vel, axis=-1)
    return np.concatenate(
        [rho[..., None], rho[..., None] * vel, (np.asarray(p) / (gamma - 1.0) + kinetic)[..., None]], axis=-1
    )


def pressure(u, gamma: float = 1.4):
    u = np.asarray(u, dtype=float)
    rho = u[..., 0]
    m = u[..., 1:-1]
    return (gamma - 1.0) * (u[..., -1] - 0.5 * np.sum(m * m, axis=-1) / rho)


def admissible(u, gamma: float = 1.4):
    u = np.asarray(u, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return (u[..., 0] > 0) & (pressure(u, gamma) > 0)


def _check(u, gamma):
    if not np.all(admissible(u, gamma)):
        raise PositivityError("inadmissible state (non-positive density or pressure)")


def logmean(a, b):
    """Logarithmic mean (b - a) / (ln b - ln a), stable as b -> a."""
    a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    out = np.empty(a.shape)
    _logmean_many(a.ravel(), b.ravel(), out.reshape(-1))
    return out if out.shape else float(out)


@njit(cache=True)
def _logmean_many(a, b, out):
    for i in range(a.size):
        out[i] = K.logmean(a[i], b[i], np.log(a[i]), np.log(b[i]))


@njit(cache=True)
def _flux_many(UL, UR, axis, d, gamma, diss, out):
    aL = np.empty(K.NAUX)
    aR = np.empty(K.NAUX)
    for n in range(UL.shape[0]):
        K.fill_aux(UL[n], d, gamma, aL)
        K.fill_aux(UR[n], d, gamma, aR)
        K.numerical_flux(UL[n], UR[n], aL, aR, axis, d, gamma, diss, out[n])


def _batched(u):
    u = np.asarray(u, dtype=float)
    return u.reshape(-1, u.shape[-1]), u.shape


def two_point_flux(uL, uR, axis: int = 0, gamma: float = 1.4) -> np.ndarray:
    """Entropy-conserving two-point flux in coordinate direction ``axis``."""
    return interface_flux(uL, uR, axis, FluxConfig(dissipation="none", gamma=gamma))


def interface_flux(uL, uR, axis: int = 0, config: FluxConfig = FluxConfig()) -> np.ndarray:
    """Numerical flux f_EC(uL, uR) - 1/2 D (uR - uL) across a face normal to ``axis``.

    ``uL`` sits on the minus side of the face, ``uR`` on the plus side.
    """
    UL, shape = _batched(uL)
    UR, _ = _batched(uR)
    _check(UL, config.gamma)
    _check(UR, config.gamma)
    d = dim_of(UL)
    out = np.zeros_like(UL)
    _flux_many(UL, UR, axis, d, config.gamma, config.dissipation_code, out)
    if not np.all(np.isfinite(out)):
        raise PositivityError("Roe average failed: non-real averaged sound speed")
    return out.reshape(shape)


def analytic_flux(u, axis: int = 0, gamma: float = 1.4) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    d = dim_of(u)
    rho = u[..., 0]
    vel = u[..., 1 : d + 1] / rho[..., None]
    p = pressure(u, gamma)
    un = vel[..., axis]
    f = u * un[..., None]
    f[..., 1 + axis] += p
    f[..., -1] += p * un
    return f


def entropy_variables(u, gamma: float = 1.4) -> np.ndarray:
    """w = dS/du for the entropy S = -rho s / (gamma - 1)."""
    st = EulerState(u, gamma)
    _check(st.u, gamma)
    rho, vel, p = st.to_primitive()
    b = rho / p
    w0 = (gamma - st.entropy) / (gamma - 1.0) - 0.5 * b * np.sum(vel * vel, axis=-1)
    return np.concatenate([w0[..., None], b[..., None] * vel, -b[..., None]], axis=-1)


def conservative_variables(w, gamma: float = 1.4) -> np.ndarray:
    """Inverse of :func:`entropy_variables`."""
    w = np.asarray(w, dtype=float)
    b = -w[..., -1]
    vel = w[..., 1:-1] / b[..., None]
    q = 0.5 * np.sum(vel * vel, axis=-1)
    s = gamma - (gamma - 1.0) * (w[..., 0] + b * q)
    rho = (b * np.exp(s)) ** (-1.0 / (gamma - 1.0))
    return primitive_to_conservative(rho, vel, rho / b, gamma)


def entropy(u, gamma: float = 1.4):
    """Mathematical entropy density S = -rho s / (gamma - 1)."""
    st = EulerState(u, gamma)
    return -st.density * st.entropy / (gamma - 1.0)


def entropy_potential(u, axis: int = 0, gamma: float = 1.4):
    """Entropy flux potential psi = rho v_axis."""
    u = np.asarray(u, dtype=float)
    return u[..., 1 + axis]


def max_wavespeed(u, gamma: float = 1.4) -> float:
    """max over points of |v| + a."""
    st = EulerState(u, gamma)
    ok = st.admissible()
    if not np.all(ok):
        raise PositivityError("inadmissible state while computing wavespeed")
    speed = np.sqrt(np.sum(st.velocity**2, axis=-1)) + st.sound_speed
    return float(np.max(speed))


def roe_matrix(uL, uR, axis: int = 0, gamma: float = 1.4) -> np.ndarray:
    """Dense |A| at the Roe average, built from the eigen-decomposition.

    The entropy-fix floor on the acoustic eigenvalues matches the one used in
    the compiled interface flux.
    """
    uL = np.asarray(uL, dtype=float)
    uR = np.asarray(uR, dtype=float)
    d = dim_of(uL)
    sL, sR = np.sqrt(uL[0]), np.sqrt(uR[0])
    vL = uL[1 : d + 1] / uL[0]
    vR = uR[1 : d + 1] / uR[0]
    HL = (uL[-1] + pressure(uL, gamma)) / uL[0]
    HR = (uR[-1] + pressure(uR, gamma)) / uR[0]
    v = (sL * vL + sR * vR) / (sL + sR)
    H = (sL * HL + sR * HR) / (sL + sR)
    q = 0.5 * v @ v
    a2 = (gamma - 1.0) * (H - q)
    if a2 <= 0:
        raise PositivityError("Roe average failed: non-real averaged sound speed")
    a = np.sqrt(a2)
    un = v[axis]
    n = np.zeros(d)
    n[axis] = 1.0
    cols = [np.concatenate([[1.0], v - a * n, [H - un * a]]), np.concatenate([[1.0], v, [q]])]
    lams = [un - a, un]
    if d == 2:
        t = np.array([n[1], n[0]])
        cols.append(np.concatenate([[0.0], t, [v @ t]]))
        lams.append(un)
    cols.append(np.concatenate([[1.0], v + a * n, [H + un * a]]))
    lams.append(un + a)
    Rm = np.array(cols).T
    floor = K.ROE_ENTROPY_FIX * (abs(un) + a)
    lam = np.abs(np.array(lams))
    lam[0] = max(lam[0], floor)
    lam[-1] = max(lam[-1], floor)
    return Rm @ np.diag(lam) @ np.linalg.inv(Rm)
