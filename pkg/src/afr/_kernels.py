"""Compiled inner loops: Euler two-point fluxes, the split-form residual and the
positivity limiter.

All arrays follow the solver layout ``U[element, y_node, x_node, state]`` with
a single y row in 1D.  States are ``(rho, m_x[, m_y], E)``; the helpers below
read the y momentum only when ``d == 2``.

Kernels report failures through an integer status instead of raising: ``-1``
means success, anything else is the first offending element index.
"""
import math

import numpy as np
from numba import njit

# dissipation selectors
DISS_NONE = 0
DISS_LLF = 1
DISS_ROE = 2

# boundary kinds
BC_INTERIOR = 0
BC_OUTFLOW = 1
BC_DIRICHLET = 2
BC_WALL = 3

LOGMEAN_SERIES_WIDTH = 1e-4
ROE_ENTROPY_FIX = 0.05
NAUX = 7  # rho, vx, vy, p, log rho, beta = rho/p, log beta
# limiter squeeze factors are shrunk by this much so roundoff cannot land a point below the floor
THETA_SAFETY = 1.0 - 1e-12
# largest relative density/pressure gap between projected and direct facet states
PROJECTION_TOL = 0.05


@njit(cache=True, inline="always")
def logmean(a, b, la, lb):
    """Logarithmic mean with precomputed logs; series branch near a == b."""
    if abs(a / b - 1.0) < LOGMEAN_SERIES_WIDTH:
        f = (a - b) / (a + b)
        u = f * f
        return 0.5 * (a + b) / (1.0 + u / 3.0 + u * u / 5.0 + u * u * u / 7.0)
    return (a - b) / (la - lb)


@njit(cache=True, inline="always")
def primitives(u, d, gamma):
    rho = u[0]
    vx = u[1] / rho
    vy = u[2] / rho if d == 2 else 0.0
    E = u[d + 1]
    p = (gamma - 1.0) * (E - 0.5 * rho * (vx * vx + vy * vy))
    return rho, vx, vy, p


@njit(cache=True, inline="always")
def fill_aux(u, d, gamma, out):
    """Primitive variables and logs for one state; returns False if inadmissible."""
    rho, vx, vy, p = primitives(u, d, gamma)
    if not (rho > 0.0 and p > 0.0) or not math.isfinite(rho + p + vx + vy):
        return False
    out[0] = rho
    out[1] = vx
    out[2] = vy
    out[3] = p
    out[4] = math.log(rho)
    out[5] = rho / p
    out[6] = math.log(rho / p)
    return True


@njit(cache=True, inline="always")
def _ec_core(rL, uL, vL, pL, lrL, bL, lbL, rR, uR, vR, pR, lrR, bR, lbR, axis, gamma):
    rho_m = logmean(rL, rR, lrL, lrR)
    beta_m = logmean(bL, bR, lbL, lbR)
    if axis == 0:
        unL, unR = uL, uR
    else:
        unL, unR = vL, vR
    f0 = rho_m * 0.5 * (unL + unR)
    f1 = f0 * 0.5 * (uL + uR)
    f2 = f0 * 0.5 * (vL + vR)
    p_avg = 0.5 * (pL + pR)
    if axis == 0:
        f1 += p_avg
    else:
        f2 += p_avg
    vel2 = 0.5 * (uL * uR + vL * vR)
    f3 = f0 * (vel2 + 1.0 / ((gamma - 1.0) * beta_m)) + 0.5 * (pL * unR + pR * unL)
    return f0, f1, f2, f3


@njit(cache=True, inline="always")
def ec_flux_rows(A, i, B, k, axis, gamma):
    """Entropy-conserving, kinetic-energy-preserving two-point flux (Ranocha).

    The left state is row ``i`` of the auxiliary table ``A``, the right state
    row ``k`` of ``B``.  Returns the (rho, m_x, m_y, E) components of the flux
    in direction ``axis``.  Scalars are passed to an inlined core because
    per-call array views cost more than the flux arithmetic.
    """
    return _ec_core(A[i, 0], A[i, 1], A[i, 2], A[i, 3], A[i, 4], A[i, 5], A[i, 6],
                    B[k, 0], B[k, 1], B[k, 2], B[k, 3], B[k, 4], B[k, 5], B[k, 6], axis, gamma)


@njit(cache=True)
def ec_flux(aL, aR, axis, gamma):
    """Two-point flux between single auxiliary vectors (see :func:`ec_flux_rows`)."""
    return ec_flux_rows(aL.reshape((1, NAUX)), 0, aR.reshape((1, NAUX)), 0, axis, gamma)


@njit(cache=True, inline="always")
def roe_dissipation(aL, aR, axis, gamma):
    """|A|(uR - uL) at the Roe average, with an acoustic entropy-fix floor.

    Returns NaNs when the averaged sound speed is not real.
    """
    rL, rR = aL[0], aR[0]
    sL = math.sqrt(rL)
    sR = math.sqrt(rR)
    wsum = sL + sR
    u = (sL * aL[1] + sR * aR[1]) / wsum
    v = (sL * aL[2] + sR * aR[2]) / wsum
    kL = 0.5 * (aL[1] * aL[1] + aL[2] * aL[2])
    kR = 0.5 * (aR[1] * aR[1] + aR[2] * aR[2])
    HL = (aL[3] / (gamma - 1.0) + rL * kL + aL[3]) / rL
    HR = (aR[3] / (gamma - 1.0) + rR * kR + aR[3]) / rR
    H = (sL * HL + sR * HR) / wsum
    q2 = 0.5 * (u * u + v * v)
    a2 = (gamma - 1.0) * (H - q2)
    if not a2 > 0.0:
        return np.nan, np.nan, np.nan, np.nan
    a = math.sqrt(a2)
    rho = sL * sR
    if axis == 0:
        un, ut = u, v
        dun = aR[1] - aL[1]
        dut = aR[2] - aL[2]
    else:
        un, ut = v, u
        dun = aR[2] - aL[2]
        dut = aR[1] - aL[1]
    drho = rR - rL
    dp = aR[3] - aL[3]
    al1 = (dp - rho * a * dun) / (2.0 * a2)
    al2 = drho - dp / a2
    al3 = (dp + rho * a * dun) / (2.0 * a2)
    alt = rho * dut
    floor = ROE_ENTROPY_FIX * (abs(un) + a)
    l1 = max(abs(un - a), floor)
    l2 = abs(un)
    l3 = max(abs(un + a), floor)
    w1 = l1 * al1
    w2 = l2 * al2
    w3 = l3 * al3
    d0 = w1 + w2 + w3
    dn = w1 * (un - a) + w2 * un + w3 * (un + a)
    dt = (w1 + w2 + w3) * ut + l2 * alt
    dE = w1 * (H - un * a) + w2 * q2 + w3 * (H + un * a) + l2 * alt * ut
    if axis == 0:
        return d0, dn, dt, dE
    return d0, dt, dn, dE


@njit(cache=True, inline="always")
def llf_dissipation(aL, aR, uL, uR, axis, d, gamma):
    """lambda_max (uR - uL) with lambda_max the larger |v_n| + a of the two states."""
    cL = math.sqrt(gamma * aL[3] / aL[0])
    cR = math.sqrt(gamma * aR[3] / aR[0])
    lam = max(abs(aL[1 + axis]) + cL, abs(aR[1 + axis]) + cR)
    d0 = lam * (uR[0] - uL[0])
    d1 = lam * (uR[1] - uL[1])
    d2 = lam * (uR[2] - uL[2]) if d == 2 else 0.0
    d3 = lam * (uR[d + 1] - uL[d + 1])
    return d0, d1, d2, d3


@njit(cache=True, inline="always")
def numerical_flux(uL, uR, aL, aR, axis, d, gamma, diss, out):
    """Interface flux in the +axis direction between minus state L and plus state R."""
    f0, f1, f2, f3 = ec_flux(aL, aR, axis, gamma)
    if diss == DISS_ROE:
        d0, d1, d2, d3 = roe_dissipation(aL, aR, axis, gamma)
    elif diss == DISS_LLF:
        d0, d1, d2, d3 = llf_dissipation(aL, aR, uL, uR, axis, d, gamma)
    else:
        d0 = d1 = d2 = d3 = 0.0
    out[0] = f0 - 0.5 * d0
    out[1] = f1 - 0.5 * d1
    if d == 2:
        out[2] = f2 - 0.5 * d2
    out[d + 1] = f3 - 0.5 * d3


@njit(cache=True, inline="always")
def entropy_vars(u, d, gamma, out):
    rho, vx, vy, p = primitives(u, d, gamma)
    s = math.log(p) - gamma * math.log(rho)
    b = rho / p
    out[0] = (gamma - s) / (gamma - 1.0) - 0.5 * b * (vx * vx + vy * vy)
    out[1] = b * vx
    if d == 2:
        out[2] = b * vy
    out[d + 1] = -b


@njit(cache=True, inline="always")
def conservative_from_entropy(w, d, gamma, out):
    """Invert the entropy-variable map; returns False if w has no admissible preimage."""
    w_last = w[d + 1]
    if not w_last < 0.0:
        return False
    b = -w_last
    vx = w[1] / b
    vy = w[2] / b if d == 2 else 0.0
    s = gamma - (gamma - 1.0) * (w[0] + 0.5 * b * (vx * vx + vy * vy))
    arg = b * math.exp(s)
    rho = arg ** (-1.0 / (gamma - 1.0))
    p = rho / b
    if not (rho > 0.0 and p > 0.0) or not math.isfinite(rho + p + vx + vy):
        return False
    out[0] = rho
    out[1] = rho * vx
    if d == 2:
        out[2] = rho * vy
    out[d + 1] = p / (gamma - 1.0) + 0.5 * rho * (vx * vx + vy * vy)
    return True


@njit(cache=True, inline="always")
def ghost_state(u_in, kind, face, prescribed, d, out):
    nv = d + 2
    if kind == BC_DIRICHLET:
        for v in range(nv):
            out[v] = prescribed[v]
    else:
        for v in range(nv):
            out[v] = u_in[v]
        if kind == BC_WALL:
            axis = face // 2
            out[1 + axis] = -u_in[1 + axis]


@njit(cache=True)
def max_wavespeed(U, Vq, d, gamma):
    """max of |v| + a over the volume quadrature points; -1 if any state is inadmissible."""
    Uq = to_quadrature(U, Vq, d)
    nel, nyq, nq, nv = Uq.shape
    lam = 0.0
    for e in range(nel):
        for j in range(nyq):
            for i in range(nq):
                r, vx, vy, p = primitives(Uq[e, j, i], d, gamma)
                if not (r > 0.0 and p > 0.0):
                    return -1.0
                lam = max(lam, math.sqrt(vx * vx + vy * vy) + math.sqrt(gamma * p / r))
    return lam


@njit(cache=True)
def to_quadrature(U, Vq, d):
    """Nodal values -> volume quadrature values (tensor product)."""
    nel, ny, nx, nv = U.shape
    nq = Vq.shape[0]
    T = np.zeros((nel, ny, nq, nv))
    for e in range(nel):
        for b in range(ny):
            for i in range(nq):
                for a in range(nx):
                    c = Vq[i, a]
                    for v in range(nv):
                        T[e, b, i, v] += c * U[e, b, a, v]
    if d == 1:
        return T
    Uq = np.zeros((nel, nq, nq, nv))
    for e in range(nel):
        for j in range(nq):
            for b in range(ny):
                c = Vq[j, b]
                for i in range(nq):
                    for v in range(nv):
                        Uq[e, j, i, v] += c * T[e, b, i, v]
    return Uq


@njit(cache=True)
def facet_values(Uq, E1, d):
    """Extrapolate quadrature values to facet points, layout [e, face, k, state]."""
    nel, nyq, nq, nv = Uq.shape
    nt = nyq if d == 2 else 1
    Uf = np.zeros((nel, 2 * d, nt, nv))
    for e in range(nel):
        for f in range(2):
            for j in range(nyq):
                for i in range(nq):
                    c = E1[f, i]
                    for v in range(nv):
                        Uf[e, f, j, v] += c * Uq[e, j, i, v]
            if d == 2:
                for i in range(nq):
                    for j in range(nyq):
                        c = E1[f, j]
                        for v in range(nv):
                            Uf[e, 2 + f, i, v] += c * Uq[e, j, i, v]
    return Uf


@njit(cache=True)
def rhs(U, beta, hx, hy, nbr, bc_kind, bc_state, Vq, Vf, S, E1, wq, Minv, g,
        d, gamma, diss, entropy_projection, dU, stats):
    """Split-form residual with the c-dependent modified mass inverse.

    ``beta[e] = kappa c_e / (1 + kappa c_e)`` so that
    ``(M1 + c K1)^-1 = Minv - beta g g^T`` in each direction.  Writes the time
    derivative into ``dU``.  ``stats[0]`` receives the number of elements whose
    facet states fell back from the entropy projection to direct extrapolation,
    which happens when any projected state is inadmissible or its density or
    pressure differs from the direct trace by more than ``PROJECTION_TOL``
    (relative).  Returns -1 or
    the first element with an inadmissible state.
    """
    nel, ny, nx, nv = U.shape
    nq = Vq.shape[0]
    nt = nq if d == 2 else 1
    nyq = nt
    nf = 2 * d

    Uq = to_quadrature(U, Vq, d)
    Aq = np.empty((nel, nyq, nq, NAUX))
    for e in range(nel):
        for j in range(nyq):
            for i in range(nq):
                if not fill_aux(Uq[e, j, i], d, gamma, Aq[e, j, i]):
                    return e

    if entropy_projection:
        Wq = np.empty_like(Uq)
        for e in range(nel):
            for j in range(nyq):
                for i in range(nq):
                    entropy_vars(Uq[e, j, i], d, gamma, Wq[e, j, i])
        Wf = facet_values(Wq, E1, d)
        Uf_direct = facet_values(Uq, E1, d)
        Uf = np.empty_like(Wf)
        fallback = 0
        for e in range(nel):
            ok = True
            for f in range(nf):
                for k in range(nt):
                    if not conservative_from_entropy(Wf[e, f, k], d, gamma, Uf[e, f, k]):
                        ok = False
                        continue
                    r, vx, vy, p = primitives(Uf[e, f, k], d, gamma)
                    rd, vxd, vyd, pd = primitives(Uf_direct[e, f, k], d, gamma)
                    if not (abs(r - rd) <= PROJECTION_TOL * abs(rd) and abs(p - pd) <= PROJECTION_TOL * abs(pd)):
                        ok = False
            if not ok:
                for f in range(nf):
                    for k in range(nt):
                        for v in range(nv):
                            Uf[e, f, k, v] = Uf_direct[e, f, k, v]
                fallback += 1
        stats[0] = fallback
    else:
        Uf = facet_values(Uq, E1, d)
        stats[0] = 0

    Af = np.empty((nel, nf, nt, NAUX))
    for e in range(nel):
        for f in range(nf):
            for k in range(nt):
                if not fill_aux(Uf[e, f, k], d, gamma, Af[e, f, k]):
                    return e

    # single-valued outward normal fluxes on every facet point
    Fn = np.zeros((nel, nf, nt, nv))
    flux = np.zeros(nv)
    ghost = np.zeros(nv)
    ga = np.zeros(NAUX)
    for e in range(nel):
        for f in range(nf):
            axis = f // 2
            plus = f % 2 == 1
            n = nbr[e, f]
            if n >= 0:
                if not plus:
                    continue  # handled by the minus-side owner
                for k in range(nt):
                    numerical_flux(Uf[e, f, k], Uf[n, f - 1, k], Af[e, f, k], Af[n, f - 1, k],
                                   axis, d, gamma, diss, flux)
                    for v in range(nv):
                        Fn[e, f, k, v] = flux[v]
                        Fn[n, f - 1, k, v] = -flux[v]
            else:
                for k in range(nt):
                    ghost_state(Uf[e, f, k], bc_kind[e, f], f, bc_state[e, f], d, ghost)
                    if not fill_aux(ghost, d, gamma, ga):
                        return e
                    if plus:
                        numerical_flux(Uf[e, f, k], ghost, Af[e, f, k], ga, axis, d, gamma, diss, flux)
                        for v in range(nv):
                            Fn[e, f, k, v] = flux[v]
                    else:
                        numerical_flux(ghost, Uf[e, f, k], ga, Af[e, f, k], axis, d, gamma, diss, flux)
                        for v in range(nv):
                            Fn[e, f, k, v] = -flux[v]
    for e in range(nel):
        for f in range(nf):
            for k in range(nt):
                for v in range(nv):
                    if not math.isfinite(Fn[e, f, k, v]):
                        return e

    R = np.zeros((nel, ny, nx, nv))
    rv = np.zeros((nq, 4))
    rf = np.zeros((2, 4))
    s = np.zeros((nx, 4))
    La = np.empty((nq + 2, NAUX))
    Bsign = (-1.0, 1.0)
    for e in range(nel):
        for axis in range(d):
            if axis == 0:
                metric = 0.5 * hy[e] if d == 2 else 1.0
            else:
                metric = 0.5 * hx[e]
            for line in range(nt):
                if d == 2:
                    scale = metric * wq[line]
                else:
                    scale = metric
                rv[:, :] = 0.0
                rf[:, :] = 0.0
                # line states: volume points then the two facet points
                for i in range(nq):
                    for v in range(NAUX):
                        La[i, v] = Aq[e, line, i, v] if axis == 0 else Aq[e, i, line, v]
                for side in range(2):
                    for v in range(NAUX):
                        La[nq + side, v] = Af[e, 2 * axis + side, line, v]
                # volume-volume pairs along the line
                for i in range(nq):
                    for k in range(i + 1, nq):
                        f0, f1, f2, f3 = ec_flux_rows(La, i, La, k, axis, gamma)
                        c = S[i, k]
                        rv[i, 0] += c * f0
                        rv[i, 1] += c * f1
                        rv[i, 2] += c * f2
                        rv[i, 3] += c * f3
                        rv[k, 0] -= c * f0
                        rv[k, 1] -= c * f1
                        rv[k, 2] -= c * f2
                        rv[k, 3] -= c * f3
                # volume-facet pairs
                for side in range(2):
                    for i in range(nq):
                        f0, f1, f2, f3 = ec_flux_rows(La, i, La, nq + side, axis, gamma)
                        c = E1[side, i] * Bsign[side]
                        rv[i, 0] += c * f0
                        rv[i, 1] += c * f1
                        rv[i, 2] += c * f2
                        rv[i, 3] += c * f3
                        rf[side, 0] -= c * f0
                        rf[side, 1] -= c * f1
                        rf[side, 2] -= c * f2
                        rf[side, 3] -= c * f3
                    # surface numerical flux, already outward-normal
                    Fl = Fn[e, 2 * axis + side, line]
                    rf[side, 0] += Fl[0]
                    rf[side, 1] += Fl[1]
                    if d == 2:
                        rf[side, 2] += Fl[2]
                    rf[side, 3] += Fl[d + 1]
                # project onto the nodal basis along the line
                s[:, :] = 0.0
                for a in range(nx):
                    for i in range(nq):
                        c = Vq[i, a]
                        for v in range(4):
                            s[a, v] += c * rv[i, v]
                    for side in range(2):
                        c = Vf[side, a]
                        for v in range(4):
                            s[a, v] += c * rf[side, v]
                # scatter with the transverse quadrature weight and basis
                if d == 1:
                    for a in range(nx):
                        R[e, 0, a, 0] -= scale * s[a, 0]
                        R[e, 0, a, 1] -= scale * s[a, 1]
                        R[e, 0, a, 2] -= scale * s[a, 3]
                else:
                    for t in range(ny):
                        ct = scale * Vq[line, t]
                        for a in range(nx):
                            if axis == 0:
                                R[e, t, a, 0] -= ct * s[a, 0]
                                R[e, t, a, 1] -= ct * s[a, 1]
                                R[e, t, a, 2] -= ct * s[a, 2]
                                R[e, t, a, 3] -= ct * s[a, 3]
                            else:
                                R[e, a, t, 0] -= ct * s[a, 0]
                                R[e, a, t, 1] -= ct * s[a, 1]
                                R[e, a, t, 2] -= ct * s[a, 2]
                                R[e, a, t, 3] -= ct * s[a, 3]

    apply_mass_inverse(R, beta, hx, hy, Minv, g, d, dU)
    return -1


@njit(cache=True)
def apply_mass_inverse(R, beta, hx, hy, Minv, g, d, out):
    """out[e] = (A_e x A_e) R[e] / J_e with A_e = Minv - beta_e g g^T."""
    nel, ny, nx, nv = R.shape
    A = np.empty((nx, nx))
    T = np.empty((ny, nx, nv))
    for e in range(nel):
        for a in range(nx):
            for b in range(nx):
                A[a, b] = Minv[a, b] - beta[e] * g[a] * g[b]
        jac = 0.5 * hx[e] if d == 1 else 0.25 * hx[e] * hy[e]
        T[:, :, :] = 0.0
        for t in range(ny):
            for a in range(nx):
                for b in range(nx):
                    c = A[a, b]
                    for v in range(nv):
                        T[t, a, v] += c * R[e, t, b, v]
        if d == 1:
            for a in range(nx):
                for v in range(nv):
                    out[e, 0, a, v] = T[0, a, v] / jac
        else:
            for t in range(ny):
                for a in range(nx):
                    for v in range(nv):
                        acc = 0.0
                        for b in range(ny):
                            acc += A[t, b] * T[b, a, v]
                        out[e, t, a, v] = acc / jac


@njit(cache=True)
def positivity_limit(U, Vq, Vf, wq, d, gamma, eps, theta_out):
    """Zhang-Shu squeeze toward the cell average, in place on nodal values.

    Enforcement points are the volume quadrature points and the facet
    quadrature points.  The density is squeezed linearly, then the whole state
    with theta = (P_avg - eps) / (P_avg - P_k) minimized over violating points,
    which keeps P >= eps because P(u) is concave.  ``theta_out[e]`` receives the smaller of the density
    and pressure scalings.  Returns -1 or the first element whose cell average
    is inadmissible.
    """
    nel, ny, nx, nv = U.shape
    nq = Vq.shape[0]
    # enforcement-point interpolation matrices along one direction: GL then the two ends
    npt = nq + 2
    P = np.empty((npt, nx))
    for i in range(nq):
        for a in range(nx):
            P[i, a] = Vq[i, a]
    for side in range(2):
        for a in range(nx):
            P[nq + side, a] = Vf[side, a]
    pts_y = npt if d == 2 else 1
    vals = np.empty((pts_y, npt, nv))
    avg = np.empty(nv)
    trial = np.empty(nv)
    wsum = 2.0 if d == 1 else 4.0
    for e in range(nel):
        # values at the tensor set (GL u ends) x (GL u ends); the corner points are
        # extra but harmless, the average uses the GL block only
        vals[:, :, :] = 0.0
        for t in range(pts_y):
            for i in range(npt):
                for b in range(ny):
                    cy = P[t, b] if d == 2 else 1.0
                    if cy == 0.0:
                        continue
                    for a in range(nx):
                        c = cy * P[i, a]
                        for v in range(nv):
                            vals[t, i, v] += c * U[e, b, a, v]
        avg[:] = 0.0
        for t in range(nq if d == 2 else 1):
            wt = wq[t] if d == 2 else 1.0
            for i in range(nq):
                for v in range(nv):
                    avg[v] += wt * wq[i] * vals[t, i, v]
        for v in range(nv):
            avg[v] /= wsum
        rb, vxb, vyb, pb = primitives(avg, d, gamma)
        if not (rb > eps and pb > eps):
            return e
        # density
        rmin = np.inf
        for t in range(pts_y):
            for i in range(npt):
                if d == 2 and t >= nq and i >= nq:
                    continue
                rmin = min(rmin, vals[t, i, 0])
        th_rho = 1.0
        if rmin < eps:
            th_rho = THETA_SAFETY * (rb - eps) / (rb - rmin)
            for b in range(ny):
                for a in range(nx):
                    U[e, b, a, 0] = avg[0] + th_rho * (U[e, b, a, 0] - avg[0])
            for t in range(pts_y):
                for i in range(npt):
                    vals[t, i, 0] = avg[0] + th_rho * (vals[t, i, 0] - avg[0])
        # pressure: linear squeeze, never larger than the exact root
        th_p = 1.0
        for t in range(pts_y):
            for i in range(npt):
                if d == 2 and t >= nq and i >= nq:
                    continue
                for v in range(nv):
                    trial[v] = vals[t, i, v]
                r, vx, vy, p = primitives(trial, d, gamma)
                if not p >= eps:
                    # concavity of P(u) makes this a lower bound on the exact root
                    th = 0.0 if p != p else THETA_SAFETY * (pb - eps) / (pb - p)
                    th_p = min(th_p, th)
        if th_p < 1.0:
            for b in range(ny):
                for a in range(nx):
                    for v in range(nv):
                        U[e, b, a, v] = avg[v] + th_p * (U[e, b, a, v] - avg[v])
        theta_out[e] = min(th_rho, th_p)
    return -1
