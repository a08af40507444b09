"""Semi-discrete split-form residual with the adaptive modified mass matrix.

Per element the discretization reads

    J (M + K(c)) du/dt = -[V_q^T V_f^T] [(Q~ - Q~^T) o F] 1 - sum_fk chi_fk^T W_fk n.f*

with F the matrix of entropy-conserving two-point fluxes between the stacked
(volume quadrature, facet) states.  ``c`` only enters through K, so the DG and
FR schemes are the c = 0 and c = c_+ ends of the same code path.

:class:`Discretization` evaluates this with compiled kernels.  The
element-local functions :func:`volume_term`, :func:`surface_term` and
:func:`apply_modified_mass` spell out the same algebra densely and serve as an
independent check.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .euler import FluxConfig, PositivityError, conservative_variables, entropy, entropy_variables, pressure
from .mesh import CartesianMesh
from .reference_ops import (
    ReferenceOperators,
    build_reference_operators,
    sbp_operators_1d,
    top_mode_stiffness,
)


@dataclass
class SolutionField:
    """Nodal coefficients ``U[element, y_node, x_node, state]`` at time ``t``."""

    U: np.ndarray
    t: float
    mesh: CartesianMesh
    ops: ReferenceOperators

    def __post_init__(self):
        n = self.ops.p + 1
        expected = (self.mesh.n_elements, n if self.mesh.d == 2 else 1, n, self.mesh.d + 2)
        if self.U.shape != expected:
            raise ValueError(f"field shape {self.U.shape} does not match mesh/degree {expected}")

    def copy(self) -> "SolutionField":
        return SolutionField(self.U.copy(), self.t, self.mesh, self.ops)


class Discretization:
    """Mesh + reference operators + flux choices, ready to evaluate residuals."""

    def __init__(self, mesh: CartesianMesh, p: int, flux: FluxConfig = FluxConfig(),
                 entropy_projection: bool = True):
        if mesh.d not in (1, 2):
            raise ValueError("only 1D and 2D meshes are supported")
        self.mesh = mesh
        self.d = mesh.d
        self.p = p
        self.flux = flux
        self.gamma = flux.gamma
        self.entropy_projection = entropy_projection
        self.ops = build_reference_operators(p, self.d)
        basis = self.ops.basis
        Q1, E1, _, _ = sbp_operators_1d(basis)
        self.Vq = np.ascontiguousarray(basis.interp_q)
        self.Vf = np.ascontiguousarray(basis.interp_f)
        self.S = np.ascontiguousarray(Q1 - Q1.T)
        self.E1 = np.ascontiguousarray(E1)
        self.wq = np.ascontiguousarray(basis.quad_weights)
        V = basis.modal_vandermonde
        self.Minv = np.ascontiguousarray(V @ V.T)
        self.g = np.ascontiguousarray(V[:, -1])
        self.kappa = top_mode_stiffness(basis)
        self.last_fallbacks = 0

    # shapes -----------------------------------------------------------------
    @property
    def field_shape(self):
        n = self.p + 1
        return (self.mesh.n_elements, n if self.d == 2 else 1, n, self.d + 2)

    def node_coordinates(self):
        return self.mesh.node_coordinates(self.ops.basis.nodes)

    def beta(self, c) -> np.ndarray:
        c = np.broadcast_to(np.asarray(c, dtype=float), (self.mesh.n_elements,))
        kc = self.kappa * c
        return np.ascontiguousarray(kc / (1.0 + kc))

    # residual ---------------------------------------------------------------
    def rhs(self, U: np.ndarray, c) -> np.ndarray:
        """du/dt for nodal field ``U`` and per-element FR parameters ``c``."""
        m = self.mesh
        dU = np.empty(U.shape)
        stats = np.zeros(1, dtype=np.int64)
        status = K.rhs(
            np.ascontiguousarray(U), self.beta(c), m.hx, m.hy, m.neighbors, m.bc_kind, m.bc_state,
            self.Vq, self.Vf, self.S, self.E1, self.wq, self.Minv, self.g,
            self.d, self.gamma, self.flux.dissipation_code, self.entropy_projection, dU, stats,
        )
        self.last_fallbacks = int(stats[0])
        if status >= 0:
            raise PositivityError(f"inadmissible state in element {status} during residual evaluation",
                                  element=int(status))
        return dU

    # integrals --------------------------------------------------------------
    def quadrature_values(self, U: np.ndarray) -> np.ndarray:
        return K.to_quadrature(np.ascontiguousarray(U), self.Vq, self.d)

    def quadrature_weights(self) -> np.ndarray:
        """Physical quadrature weights, shape (nel, nyq, nq)."""
        w = self.wq
        if self.d == 1:
            return self.mesh.jacobian[:, None, None] * w[None, None, :]
        return self.mesh.jacobian[:, None, None] * np.outer(w, w)[None]

    def cell_averages(self, U: np.ndarray) -> np.ndarray:
        Uq = self.quadrature_values(U)
        w = self.quadrature_weights()
        return np.einsum("ejk,ejkv->ev", w, Uq) / w.sum(axis=(1, 2))[:, None]

    def totals(self, U: np.ndarray) -> np.ndarray:
        """Domain integrals of every conserved variable."""
        Uq = self.quadrature_values(U)
        return np.einsum("ejk,ejkv->v", self.quadrature_weights(), Uq)

    def entropy_integral(self, U: np.ndarray) -> float:
        """Quadrature approximation of the integral of S = -rho s / (gamma - 1)."""
        Uq = self.quadrature_values(U)
        return float(np.sum(self.quadrature_weights() * entropy(Uq, self.gamma)))

    def entropy_production(self, U: np.ndarray, dU: np.ndarray, c) -> float:
        """sum_e v^T J (M + K(c_e)) du/dt with v the projected entropy variables.

        Vanishes up to roundoff for an entropy-conserving flux on a periodic mesh.
        """
        Uq = self.quadrature_values(U)
        Wq = entropy_variables(Uq, self.gamma)
        Pq = np.linalg.inv(self.Vq)
        if self.d == 1:
            W = np.einsum("ai,ejiv->ejav", Pq, Wq)
        else:
            W = np.einsum("bj,ai,ejiv->ebav", Pq, Pq, Wq)
        c = np.broadcast_to(np.asarray(c, dtype=float), (self.mesh.n_elements,))
        total = 0.0
        for e in range(self.mesh.n_elements):
            A = self.ops.mass + self.ops.fr_filter(c[e])
            w = W[e].reshape(-1, self.d + 2)
            du = dU[e].reshape(-1, self.d + 2)
            total += self.mesh.jacobian[e] * np.sum(w * (A @ du))
        return float(total)


# ---------------------------------------------------------------------------
# dense element-local reference path
# ---------------------------------------------------------------------------

def _stacked_trace_values(ops: ReferenceOperators, u_nodal, gamma, entropy_projection=True):
    """Volume quadrature and facet states for one element (dense operators)."""
    uq = ops.volume_interp @ u_nodal
    n = ops.basis.n_q
    Q1, E1, _, _ = sbp_operators_1d(ops.basis)
    if ops.d == 1:
        Ef = E1
    else:
        I = np.eye(n)
        Ef = np.vstack([np.kron(I, E1[0:1]), np.kron(I, E1[1:2]), np.kron(E1[0:1], I), np.kron(E1[1:2], I)])
    direct = Ef @ uq
    if not entropy_projection:
        return uq, direct
    with np.errstate(all="ignore"):
        uf = conservative_variables(Ef @ entropy_variables(uq, gamma), gamma)
        rho, p = uf[:, 0], pressure(uf, gamma)
        rho_d, p_d = direct[:, 0], pressure(direct, gamma)
        close = (np.abs(rho - rho_d) <= K.PROJECTION_TOL * np.abs(rho_d)) & (
            np.abs(p - p_d) <= K.PROJECTION_TOL * np.abs(p_d))
    if not np.all(close & (rho > 0) & (p > 0)):
        return uq, direct
    return uq, uf


def volume_term(ops: ReferenceOperators, stacked_states, two_point, metrics) -> np.ndarray:
    """[V_q^T V_f^T] sum_dir metric_dir [(Q~ - Q~^T)_dir o F_dir] 1.

    ``two_point(ui, uj, axis)`` returns the flux between two stacked states,
    ``metrics[dir]`` converts physical to reference flux (h_perp / 2 in 2D, 1 in 1D).
    """
    stacked = np.asarray(stacked_states, dtype=float)
    nstack, nv = stacked.shape
    V = np.vstack([ops.volume_interp, ops.facet_interp])
    out = np.zeros((ops.n_nodes, nv))
    for axis, Sk in enumerate(ops.skew):
        r = np.zeros((nstack, nv))
        for i in range(nstack):
            for j in range(nstack):
                if Sk[i, j] != 0.0:
                    r[i] += Sk[i, j] * two_point(stacked[i], stacked[j], axis)
        out += metrics[axis] * (V.T @ r)
    return out


def surface_term(ops: ReferenceOperators, normal_fluxes, metrics) -> np.ndarray:
    """sum_fk chi(xi_fk)^T W_fk (n^r . f*^r) given outward physical normal fluxes."""
    normal_fluxes = np.asarray(normal_fluxes, dtype=float)
    axis_of = np.argmax(np.abs(ops.facet_normals), axis=1)
    scale = ops.facet_weights * np.asarray(metrics)[axis_of]
    return ops.facet_interp.T @ (scale[:, None] * normal_fluxes)


def apply_modified_mass(raw, c: float, ops: ReferenceOperators, jacobian: float) -> np.ndarray:
    """(J (M + K(c)))^-1 raw."""
    return np.linalg.solve(jacobian * (ops.mass + ops.fr_filter(c)), raw)


def dense_rhs(disc: Discretization, U: np.ndarray, c) -> np.ndarray:
    """Slow element-by-element residual using dense operators and numpy fluxes."""
    from .euler import interface_flux, two_point_flux
    from .mesh import ghost_state

    mesh, ops, gamma = disc.mesh, disc.ops, disc.gamma
    d, nv, nel = disc.d, disc.d + 2, mesh.n_elements
    c = np.broadcast_to(np.asarray(c, dtype=float), (nel,))
    nt = ops.basis.n_q if d == 2 else 1
    traces = []
    for e in range(nel):
        uq, uf = _stacked_trace_values(ops, U[e].reshape(-1, nv), gamma, disc.entropy_projection)
        traces.append((uq, uf.reshape(2 * d, nt, nv)))
    tp = lambda a, b, axis: two_point_flux(a, b, axis, gamma)  # noqa: E731
    out = np.empty_like(U)
    for e in range(nel):
        uq, uf = traces[e]
        metrics = [1.0] if d == 1 else [0.5 * mesh.hy[e], 0.5 * mesh.hx[e]]
        fn = np.zeros((2 * d, nt, nv))
        for f in range(2 * d):
            axis, plus = divmod(f, 2)
            nb = mesh.neighbors[e, f]
            for k in range(nt):
                inner = uf[f, k]
                if nb >= 0:
                    outer = traces[nb][1][f + 1 if f % 2 == 0 else f - 1, k]
                else:
                    outer = ghost_state(inner, mesh.bc_tag[e, f], axis, mesh.bc_state[e, f])
                L, R = (inner, outer) if plus else (outer, inner)
                flux = interface_flux(L, R, axis, disc.flux)
                fn[f, k] = flux if plus else -flux
        stacked = np.vstack([uq, uf.reshape(-1, nv)])
        raw = -(volume_term(ops, stacked, tp, metrics) + surface_term(ops, fn.reshape(-1, nv), metrics))
        out[e] = apply_modified_mass(raw, c[e], ops, mesh.jacobian[e]).reshape(U.shape[1:])
    return out
