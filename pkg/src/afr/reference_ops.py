"""Reference-element operators for tensor-product nodal elements.

Solution nodes are Gauss-Lobatto-Legendre (GLL) points, volume quadrature is
Gauss-Legendre (GL).  Everything is built in 1D on [-1, 1] and combined by
Kronecker products in 2D with the x index running fastest, i.e. a nodal
vector in 2D is ``u[b, a].ravel()`` with ``b`` the y index and ``a`` the x
index.

FR parameter convention
-----------------------
The correction parameter ``c`` is measured with p-th derivatives taken in the
unit-interval reference coordinate ``s = (xi + 1) / 2``.  On [-1, 1] this is

    K_ij = c * 4**p * int_{-1}^{1} d^p chi_i d^p chi_j dxi

so that ``c_+ = 2.87e-5`` for p = 3 sits at the stability optimum of the
filtered scheme.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np
from numpy.polynomial import legendre as npleg

#: Maximum stable FR parameter per degree (unit-interval convention).
#: p = 3 is the reference AFR value; p = 2, 4, 5 are the classical 1D ESFR
#: limits (0.186, 4.79e-5, 4.24e-7 with the orthonormal 1/2 factor) mapped
#: to this convention; p = 1 comes from an RK3 linear-advection stability scan.
C_PLUS = {
    1: 0.745,
    2: 0.186 / 2.0 / 4**2,
    3: 2.87e-5,
    4: 4.79e-5 / 2.0 / 4**4,
    5: 4.24e-7 / 2.0 / 4**5,
}


def c_plus(p: int, overrides: dict[int, float] | None = None) -> float:
    """Return the maximum stable FR parameter for degree ``p``."""
    if overrides and p in overrides:
        return float(overrides[p])
    try:
        return C_PLUS[p]
    except KeyError:
        raise ValueError(f"no c_+ value tabulated for p={p}; pass an override") from None


def gll_nodes(p: int) -> np.ndarray:
    """Gauss-Lobatto-Legendre nodes for degree ``p`` (p + 1 points)."""
    if p == 1:
        return np.array([-1.0, 1.0])
    interior = np.sort(npleg.Legendre.basis(p).deriv().roots().real)
    nodes = np.concatenate(([-1.0], interior, [1.0]))
    # roots() is only accurate to ~1e-14; the nodes are symmetric by construction
    return 0.5 * (nodes - nodes[::-1])


def orthonormal_legendre(x: np.ndarray, n: int, deriv: int = 0) -> np.ndarray:
    """Evaluate the first ``n`` L2-orthonormal Legendre polynomials at ``x``.

    Returns an array of shape ``(len(x), n)``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty((x.size, n))
    for k in range(n):
        coef = np.zeros(k + 1)
        coef[k] = 1.0
        if deriv:
            coef = npleg.legder(coef, deriv) if k >= deriv else np.zeros(1)
        out[:, k] = np.sqrt((2 * k + 1) / 2.0) * npleg.legval(x, coef)
    return out


@dataclass(frozen=True)
class Basis1D:
    """Nodal GLL basis of degree ``p`` with an ``n_q``-point GL quadrature."""

    p: int
    n_q: int
    nodes: np.ndarray
    quad_nodes: np.ndarray
    quad_weights: np.ndarray
    modal_vandermonde: np.ndarray  # orthonormal modes at the solution nodes
    modal_inverse: np.ndarray  # nodal -> orthonormal modal coefficients
    interp_q: np.ndarray  # (n_q, p+1) nodal basis at quadrature nodes
    deriv_q: np.ndarray  # (n_q, p+1) derivative of nodal basis at quadrature nodes
    interp_f: np.ndarray  # (2, p+1) nodal basis at xi = -1, +1
    pth_derivative: np.ndarray  # (p+1,) constant d^p chi_i / dxi^p

    @property
    def n_nodes(self) -> int:
        return self.p + 1

    def evaluate(self, x) -> np.ndarray:
        """Nodal basis functions at arbitrary reference points, shape (len(x), p+1)."""
        return orthonormal_legendre(x, self.p + 1) @ self.modal_inverse

    def evaluate_derivative(self, x) -> np.ndarray:
        return orthonormal_legendre(x, self.p + 1, deriv=1) @ self.modal_inverse


def build_basis(p: int, n_q: int | None = None) -> Basis1D:
    if p < 1:
        raise ValueError(f"degree must be >= 1, got {p}")
    n_q = p + 1 if n_q is None else n_q
    if n_q < p + 1:
        raise ValueError(f"need n_q >= p+1 quadrature points, got n_q={n_q} for p={p}")
    nodes = gll_nodes(p)
    xq, wq = npleg.leggauss(n_q)
    V = orthonormal_legendre(nodes, p + 1)
    Vinv = np.linalg.inv(V)
    top = np.sqrt((2 * p + 1) / 2.0) * factorial(2 * p) / (2**p * factorial(p))
    return Basis1D(
        p=p,
        n_q=n_q,
        nodes=nodes,
        quad_nodes=xq,
        quad_weights=wq,
        modal_vandermonde=V,
        modal_inverse=Vinv,
        interp_q=orthonormal_legendre(xq, p + 1) @ Vinv,
        deriv_q=orthonormal_legendre(xq, p + 1, deriv=1) @ Vinv,
        interp_f=orthonormal_legendre(np.array([-1.0, 1.0]), p + 1) @ Vinv,
        pth_derivative=Vinv[p] * top,
    )


def mass_matrix_1d(basis: Basis1D) -> np.ndarray:
    W = np.diag(basis.quad_weights)
    M = basis.interp_q.T @ W @ basis.interp_q
    # the triple product is symmetric only to roundoff
    return 0.5 * (M + M.T)


def pth_derivative_matrix_1d(basis: Basis1D) -> np.ndarray:
    """Unit-weight 1D filter term: 4**p * int d^p chi_i d^p chi_j over [-1, 1]."""
    d = basis.pth_derivative
    return 4.0**basis.p * 2.0 * np.outer(d, d)


def top_mode_stiffness(basis: Basis1D) -> float:
    """Diagonal entry of the unit-weight filter term for the orthonormal degree-p mode."""
    p = basis.p
    top = np.sqrt((2 * p + 1) / 2.0) * factorial(2 * p) / (2**p * factorial(p))
    return 4.0**p * 2.0 * top**2


def build_fr_filter(basis: Basis1D, c: float, d: int = 1) -> np.ndarray:
    """FR filter matrix K(c) on the reference element.

    In 2D the tensor-product form ``c(K1 x M1) + c(M1 x K1) + c^2 (K1 x K1)`` is
    used, which makes ``M + K(c)`` factor as ``(M1 + c K1) x (M1 + c K1)``.
    """
    if c < 0:
        raise ValueError(f"FR parameter must be non-negative, got {c}")
    if d not in (1, 2):
        raise ValueError(f"dimension must be 1 or 2, got {d}")
    K1 = pth_derivative_matrix_1d(basis)
    if d == 1:
        return c * K1
    M1 = mass_matrix_1d(basis)
    return c * np.kron(M1, K1) + c * np.kron(K1, M1) + c * c * np.kron(K1, K1)


def sbp_operators_1d(basis: Basis1D):
    """Quadrature-space stiffness Q, facet extrapolation E, boundary matrix B and
    the quadrature-space projection V_q P_q (identity when n_q = p + 1)."""
    W = np.diag(basis.quad_weights)
    M1 = mass_matrix_1d(basis)
    Pq = np.linalg.solve(M1, basis.interp_q.T @ W)  # L2 projection, quad values -> nodal
    Q = W @ basis.deriv_q @ Pq
    E = basis.interp_f @ Pq
    B = np.diag([-1.0, 1.0])
    return Q, E, B, basis.interp_q @ Pq


def build_hybridized_skew(basis: Basis1D, d: int = 1) -> list[np.ndarray]:
    """Skew-symmetric hybridized operators (Q~ - Q~^T), one per reference direction.

    The stacked node set is the volume quadrature nodes followed by the facet
    quadrature nodes.  In 2D the facets are ordered x-, x+, y-, y+ with the
    tangential GL points ascending on each.
    """
    Q, E, B, VP = sbp_operators_1d(basis)
    if d == 1:
        ops = [(Q, E, B)]
    elif d == 2:
        n = basis.n_q
        w = basis.quad_weights
        # facet extrapolation: x faces act along rows, y faces along columns
        Ex = np.vstack([np.kron(VP, E[0:1]), np.kron(VP, E[1:2])])
        Ey = np.vstack([np.kron(E[0:1], VP), np.kron(E[1:2], VP)])
        E2 = np.vstack([Ex, Ey])
        Bx = np.diag(np.concatenate([-w, w, np.zeros(2 * n)]))
        By = np.diag(np.concatenate([np.zeros(2 * n), -w, w]))
        Qx = np.kron(np.diag(w) @ VP, Q)
        Qy = np.kron(Q, np.diag(w) @ VP)
        ops = [(Qx, E2, Bx), (Qy, E2, By)]
    else:
        raise ValueError(f"dimension must be 1 or 2, got {d}")

    skews = []
    for Qi, Ei, Bi in ops:
        if Qi.shape[0] != Ei.shape[1] or Ei.shape[0] != Bi.shape[0]:
            raise ValueError("dimension mismatch between E, B and Q")
        Qh = 0.5 * np.block([[Qi - Qi.T, Ei.T @ Bi], [-Bi @ Ei, Bi]])
        skews.append(Qh - Qh.T)
    return skews


def hybridized_operator(basis: Basis1D) -> np.ndarray:
    """The 1D hybridized operator Q~ itself (not the skew difference)."""
    Q, E, B, _ = sbp_operators_1d(basis)
    return 0.5 * np.block([[Q - Q.T, E.T @ B], [-B @ E, B]])


@dataclass
class ReferenceOperators:
    """All reference-element matrices for one degree and dimension."""

    basis: Basis1D
    d: int
    mass: np.ndarray
    mass_1d: np.ndarray
    pth_1d: np.ndarray
    facet_interp: np.ndarray  # (n_facet_nodes, n_nodes)
    facet_weights: np.ndarray
    facet_normals: np.ndarray  # (n_facet_nodes, d)
    skew: list[np.ndarray]
    ones: np.ndarray  # constant-mode coefficients

    @property
    def p(self) -> int:
        return self.basis.p

    @property
    def n_nodes(self) -> int:
        return (self.basis.p + 1) ** self.d

    @property
    def volume_interp(self) -> np.ndarray:
        V = self.basis.interp_q
        return V if self.d == 1 else np.kron(V, V)

    @property
    def volume_weights(self) -> np.ndarray:
        w = self.basis.quad_weights
        return w if self.d == 1 else np.kron(w, w)

    def fr_filter(self, c: float) -> np.ndarray:
        return build_fr_filter(self.basis, c, self.d)

    def boundary_matrix(self, direction: int) -> np.ndarray:
        """Facet weights times reference normal component in ``direction``."""
        return np.diag(self.facet_weights * self.facet_normals[:, direction])

    def mass_inverse_1d(self, c: float) -> np.ndarray:
        """(M1 + c K1)^-1 via the orthonormal-mode rank-one update."""
        g = self.basis.modal_vandermonde[:, -1]
        kappa = c * top_mode_stiffness(self.basis)
        return self.basis.modal_vandermonde @ self.basis.modal_vandermonde.T - (
            kappa / (1.0 + kappa)
        ) * np.outer(g, g)

    def filter_attenuation(self, c: float) -> float:
        """Factor applied to the degree-p mode by (M + K(c))^-1 M in 1D."""
        return 1.0 / (1.0 + c * top_mode_stiffness(self.basis))


def build_reference_operators(p: int, d: int = 1, n_q: int | None = None) -> ReferenceOperators:
    basis = build_basis(p, n_q)
    if d not in (1, 2):
        raise ValueError(f"dimension must be 1 or 2, got {d}")
    M1 = mass_matrix_1d(basis)
    Vf = basis.interp_f
    if d == 1:
        mass = M1
        facet_interp = Vf
        facet_weights = np.ones(2)
        facet_normals = np.array([[-1.0], [1.0]])
    else:
        mass = np.kron(M1, M1)
        Vq = basis.interp_q
        w = basis.quad_weights
        n = basis.n_q
        facet_interp = np.vstack(
            [np.kron(Vq, Vf[0:1]), np.kron(Vq, Vf[1:2]), np.kron(Vf[0:1], Vq), np.kron(Vf[1:2], Vq)]
        )
        facet_weights = np.tile(w, 4)
        facet_normals = np.zeros((4 * n, 2))
        facet_normals[:n, 0] = -1.0
        facet_normals[n : 2 * n, 0] = 1.0
        facet_normals[2 * n : 3 * n, 1] = -1.0
        facet_normals[3 * n :, 1] = 1.0
    return ReferenceOperators(
        basis=basis,
        d=d,
        mass=mass,
        mass_1d=M1,
        pth_1d=pth_derivative_matrix_1d(basis),
        facet_interp=facet_interp,
        facet_weights=facet_weights,
        facet_normals=facet_normals,
        skew=build_hybridized_skew(basis, d),
        ones=np.ones((p + 1) ** d),
    )


def build_lifting(ops: ReferenceOperators, c: float) -> np.ndarray:
    """Modified lifting operator (M + K(c))^-1 sum_f sum_k chi(xi_fk)^T W_fk.

    Columns are facet quadrature nodes; the reference normal and the element
    Jacobian are applied by the caller.
    """
    A = ops.mass + ops.fr_filter(c)
    scatter = ops.facet_interp.T * ops.facet_weights
    L = np.linalg.solve(A, scatter)
    assert np.all(np.isfinite(L)), "singular M + K(c)"
    return L


def modal_transform(ops: ReferenceOperators) -> np.ndarray:
    """Nodal -> orthonormal modal coefficient map for the element (tensor in 2D)."""
    Vinv = ops.basis.modal_inverse
    return Vinv if ops.d == 1 else np.kron(Vinv, Vinv)


def dump_operators_csv(ops: ReferenceOperators, directory, c: float | None = None) -> list:
    """Write the main operator matrices to CSV files for inspection."""
    from pathlib import Path

    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    c = c_plus(ops.p) if c is None else c
    mats = {
        "mass": ops.mass,
        "fr_filter": ops.fr_filter(c),
        "lifting_dg": build_lifting(ops, 0.0),
        "lifting_fr": build_lifting(ops, c),
        "facet_interp": ops.facet_interp,
        "modal_transform": modal_transform(ops),
    }
    for i, S in enumerate(ops.skew):
        mats[f"skew_dir{i}"] = S
    written = []
    for name, mat in mats.items():
        path = out / f"p{ops.p}_d{ops.d}_{name}.csv"
        np.savetxt(path, np.atleast_2d(mat), delimiter=",", fmt="%.17g")
        written.append(path)
    return written
