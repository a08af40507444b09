"""Exact solution of the 1D Riemann problem for an ideal gas.

Star pressure from Newton iteration on the pressure function, then sampling
of the self-similar wave fan at x/t.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class RiemannError(RuntimeError):
    pass


@dataclass(frozen=True)
class StarState:
    p: float
    u: float
    rho_left: float
    rho_right: float
    iterations: int


def _wave_function(p, rho, pk, ck, gamma):
    """f_K(p) and its derivative for one side (shock if p > p_K, rarefaction otherwise)."""
    if p > pk:
        A = 2.0 / ((gamma + 1.0) * rho)
        B = (gamma - 1.0) / (gamma + 1.0) * pk
        q = np.sqrt(A / (p + B))
        return (p - pk) * q, q * (1.0 - 0.5 * (p - pk) / (p + B))
    r = p / pk
    f = 2.0 * ck / (gamma - 1.0) * (r ** ((gamma - 1.0) / (2.0 * gamma)) - 1.0)
    df = 1.0 / (rho * ck) * r ** (-(gamma + 1.0) / (2.0 * gamma))
    return f, df


def pressure_function(p, left, right, gamma: float = 1.4) -> float:
    """f_L(p) + f_R(p) + (u_R - u_L); zero at the star pressure."""
    rl, ul, pl = left
    rr, ur, pr = right
    cl = np.sqrt(gamma * pl / rl)
    cr = np.sqrt(gamma * pr / rr)
    return _wave_function(p, rl, pl, cl, gamma)[0] + _wave_function(p, rr, pr, cr, gamma)[0] + ur - ul


def star_state(left, right, gamma: float = 1.4, tol: float = 1e-14, max_iter: int = 200) -> StarState:
    """Newton iteration for p*, started from the two-rarefaction estimate."""
    rl, ul, pl = map(float, left)
    rr, ur, pr = map(float, right)
    if min(rl, pl, rr, pr) <= 0:
        raise RiemannError("Riemann states need positive density and pressure")
    cl = np.sqrt(gamma * pl / rl)
    cr = np.sqrt(gamma * pr / rr)
    if 2.0 * (cl + cr) / (gamma - 1.0) <= ur - ul:
        raise RiemannError("initial data generate vacuum")
    z = (gamma - 1.0) / (2.0 * gamma)
    p = ((cl + cr - 0.5 * (gamma - 1.0) * (ur - ul)) / (cl / pl**z + cr / pr**z)) ** (1.0 / z)
    p = max(p, 1e-14 * min(pl, pr))
    for it in range(1, max_iter + 1):
        fl, dfl = _wave_function(p, rl, pl, cl, gamma)
        fr, dfr = _wave_function(p, rr, pr, cr, gamma)
        step = (fl + fr + ur - ul) / (dfl + dfr)
        p_new = p - step
        if p_new <= 0:
            p_new = 0.5 * p  # stay positive on the way down
        change = abs(p_new - p) / (0.5 * (p_new + p))
        p = p_new
        if change < tol:
            break
    else:
        raise RiemannError("star pressure iteration did not converge")
    fl, _ = _wave_function(p, rl, pl, cl, gamma)
    fr, _ = _wave_function(p, rr, pr, cr, gamma)
    u = 0.5 * (ul + ur) + 0.5 * (fr - fl)
    g = (gamma - 1.0) / (gamma + 1.0)

    def star_density(rho, pk):
        if p > pk:
            return rho * (p / pk + g) / (g * p / pk + 1.0)
        return rho * (p / pk) ** (1.0 / gamma)

    return StarState(p, u, star_density(rl, pl), star_density(rr, pr), it)


def sample(left, right, xi, gamma: float = 1.4, star: StarState | None = None):
    """Primitive (rho, u, p) at similarity coordinates ``xi = (x - x0) / t``."""
    rl, ul, pl = map(float, left)
    rr, ur, pr = map(float, right)
    st = star or star_state(left, right, gamma)
    xi = np.asarray(xi, dtype=float)
    rho = np.empty(xi.shape)
    u = np.empty(xi.shape)
    p = np.empty(xi.shape)
    for side, (rk, uk, pk, rstar) in enumerate(((rl, ul, pl, st.rho_left), (rr, ur, pr, st.rho_right))):
        sgn = -1.0 if side == 0 else 1.0
        mask = xi < st.u if side == 0 else xi >= st.u
        if not np.any(mask):
            continue
        x = xi[mask]
        ck = np.sqrt(gamma * pk / rk)
        r_out = np.full(x.shape, rstar)
        u_out = np.full(x.shape, st.u)
        p_out = np.full(x.shape, st.p)
        if st.p > pk:
            speed = uk + sgn * ck * np.sqrt((gamma + 1.0) / (2.0 * gamma) * st.p / pk + (gamma - 1.0) / (2.0 * gamma))
            outside = sgn * (x - speed) > 0
        else:
            cstar = ck * (st.p / pk) ** ((gamma - 1.0) / (2.0 * gamma))
            head = uk + sgn * ck
            tail = st.u + sgn * cstar
            outside = sgn * (x - head) > 0
            fan = ~outside & (sgn * (x - tail) > 0)
            if np.any(fan):
                xf = x[fan]
                c = 2.0 / (gamma + 1.0) * (ck - sgn * 0.5 * (gamma - 1.0) * (uk - xf))
                r_out[fan] = rk * (c / ck) ** (2.0 / (gamma - 1.0))
                u_out[fan] = 2.0 / (gamma + 1.0) * (-sgn * ck + 0.5 * (gamma - 1.0) * uk + xf)
                p_out[fan] = pk * (c / ck) ** (2.0 * gamma / (gamma - 1.0))
        r_out[outside] = rk
        u_out[outside] = uk
        p_out[outside] = pk
        rho[mask], u[mask], p[mask] = r_out, u_out, p_out
    return rho, u, p


def exact_riemann(left, right, x, t: float, x0: float = 0.0, gamma: float = 1.4):
    """Primitive solution at positions ``x`` and time ``t``; ``t = 0`` returns the data."""
    x = np.asarray(x, dtype=float)
    if t <= 0:
        mask = x < x0
        return tuple(np.where(mask, a, b) * np.ones(x.shape) for a, b in zip(left, right))
    return sample(left, right, (x - x0) / t, gamma)
