import numpy as np
import pytest
from numpy.polynomial import legendre as npleg

from afr.reference_ops import (
    C_PLUS,
    build_basis,
    build_fr_filter,
    build_hybridized_skew,
    build_lifting,
    build_reference_operators,
    c_plus,
    dump_operators_csv,
    hybridized_operator,
    mass_matrix_1d,
    modal_transform,
    sbp_operators_1d,
)


def test_p1_basis_nodes_and_weights():
    b = build_basis(1, 2)
    np.testing.assert_array_equal(b.nodes, [-1.0, 1.0])
    assert abs(b.quad_weights.sum() - 2.0) < 1e-15


@pytest.mark.parametrize("p", [1, 2, 3, 4, 5])
def test_basis_invariants(p):
    b = build_basis(p)
    assert np.all(b.quad_weights > 0)
    assert abs(b.quad_weights.sum() - 2.0) < 1e-14
    assert np.isfinite(np.linalg.cond(b.modal_vandermonde))
    # nodal basis is Lagrange on the GLL nodes
    np.testing.assert_allclose(b.evaluate(b.nodes), np.eye(p + 1), atol=1e-13)


def test_p3_modes_orthonormal_under_mass():
    b = build_basis(3, 4)
    # mass matrix by brute-force quadrature of products of nodal basis functions
    x, w = npleg.leggauss(12)
    L = b.evaluate(x)
    M = L.T @ np.diag(w) @ L
    V = b.modal_vandermonde
    np.testing.assert_allclose(V.T @ M @ V, np.eye(4), atol=1e-12)
    np.testing.assert_allclose(mass_matrix_1d(b), M, atol=1e-14)


def test_p2_quadrature_integrates_x4():
    b = build_basis(2, 3)
    assert abs(np.sum(b.quad_weights * b.quad_nodes**4) - 2.0 / 5.0) < 1e-14


@pytest.mark.parametrize("p,nq", [(0, 1), (2, 2), (3, 1)])
def test_basis_rejects_bad_input(p, nq):
    with pytest.raises(ValueError):
        build_basis(p, nq)


def test_fr_filter_zero_c_is_zero():
    for d in (1, 2):
        K = build_fr_filter(build_basis(3), 0.0, d)
        assert np.count_nonzero(K) == 0


def test_c_plus_p3_value():
    assert c_plus(3) == 2.87e-5
    K = build_fr_filter(build_basis(3), c_plus(3), 1)
    assert np.allclose(K, K.T)
    assert c_plus(3, {3: 1e-3}) == 1e-3
    with pytest.raises(ValueError):
        c_plus(7)


def test_fr_filter_psd_and_constant_null_p2():
    ops = build_reference_operators(2, 1)
    K = ops.fr_filter(1e-4)
    ev = np.linalg.eigvalsh(K)
    assert ev.min() >= -1e-12 * np.abs(ev).max()
    assert np.max(np.abs(ops.ones @ K)) < 1e-12


def test_fr_filter_rejects_negative_c():
    with pytest.raises(ValueError):
        build_fr_filter(build_basis(2), -1e-6)


def test_fr_filter_matches_pth_derivative_integral():
    # K_ij = c 4^p int d^p chi_i d^p chi_j by direct quadrature of polynomial derivatives
    p = 3
    b = build_basis(p)
    x, w = npleg.leggauss(8)
    Dp = np.empty((x.size, p + 1))
    for i in range(p + 1):
        coef = b.modal_inverse[:, i]
        leg = sum(coef[k] * np.sqrt((2 * k + 1) / 2.0) * npleg.Legendre.basis(k) for k in range(p + 1))
        Dp[:, i] = leg.deriv(p)(x)
    K_direct = 4.0**p * Dp.T @ np.diag(w) @ Dp
    np.testing.assert_allclose(build_fr_filter(b, 1.0, 1), K_direct, rtol=1e-10, atol=1e-8)


def test_fr_filter_2d_tensor_form():
    b = build_basis(2)
    c = 3e-3
    M1 = mass_matrix_1d(b)
    K1 = build_fr_filter(b, 1.0, 1)
    K = build_fr_filter(b, c, 2)
    # M + K factors as a Kronecker product
    np.testing.assert_allclose(np.kron(M1, M1) + K, np.kron(M1 + c * K1, M1 + c * K1), atol=1e-13)


@pytest.mark.parametrize("d", [1, 2])
@pytest.mark.parametrize("p", [1, 2, 3, 4, 5])
def test_skew_exact(p, d):
    for S in build_hybridized_skew(build_basis(p), d):
        assert np.array_equal(S, -S.T)


@pytest.mark.parametrize("d", [1, 2])
@pytest.mark.parametrize("p", [1, 2, 3])
def test_constant_flux_cancels_surface(p, d):
    # [V_q; V_f]^T (S 1) plus the facet scatter of the reference normals vanishes: a constant
    # flux produces equal and opposite volume and surface contributions
    ops = build_reference_operators(p, d)
    V = np.vstack([ops.volume_interp, ops.facet_interp])
    for k, S in enumerate(ops.skew):
        vol = V.T @ (S @ np.ones(S.shape[0]))
        surf = ops.facet_interp.T @ (ops.facet_weights * ops.facet_normals[:, k])
        np.testing.assert_allclose(vol + surf, 0.0, atol=1e-12)


def test_hybridized_sbp_p2():
    b = build_basis(2)
    Qh = hybridized_operator(b)
    n = b.n_q
    B = np.zeros_like(Qh)
    B[n:, n:] = np.diag([-1.0, 1.0])
    np.testing.assert_allclose(Qh + Qh.T, B, atol=1e-13)
    ones = np.ones(Qh.shape[0])
    np.testing.assert_allclose(Qh @ ones, 0.0, atol=1e-13)
    # column sums are the boundary evaluations n_f
    np.testing.assert_allclose(Qh.T @ ones, np.diag(B), atol=1e-13)


def test_sbp_identity_1d():
    b = build_basis(4)
    Q, E, B, _ = sbp_operators_1d(b)
    np.testing.assert_allclose(Q + Q.T, E.T @ B @ E, atol=1e-13)


@pytest.mark.parametrize("d", [1, 2])
def test_lifting_dg_limit(d):
    ops = build_reference_operators(3, d)
    L0 = build_lifting(ops, 0.0)
    expected = np.linalg.solve(ops.mass, ops.facet_interp.T * ops.facet_weights)
    np.testing.assert_allclose(L0, expected, atol=1e-12)


def test_lifting_changes_top_mode_only():
    ops = build_reference_operators(3, 1)
    diff = build_lifting(ops, c_plus(3)) - build_lifting(ops, 0.0)
    modal = modal_transform(ops) @ diff
    assert np.max(np.abs(modal[:-1])) < 1e-10
    assert np.max(np.abs(modal[-1])) > 1e-6


def test_lifting_changes_outer_shell_only_2d():
    ops = build_reference_operators(2, 2)
    diff = build_lifting(ops, c_plus(2)) - build_lifting(ops, 0.0)
    modal = (modal_transform(ops) @ diff).reshape(3, 3, -1)
    assert np.max(np.abs(modal[:2, :2])) < 1e-10


@pytest.mark.parametrize("d", [1, 2])
@pytest.mark.parametrize("c", [0.0, 1e-5, 1e-2])
def test_lifting_surface_identity(d, c):
    ops = build_reference_operators(3, d)
    rng = np.random.default_rng(1)
    g = rng.normal(size=ops.facet_interp.shape[0])
    lhs = ops.ones @ (ops.mass + ops.fr_filter(c)) @ build_lifting(ops, c) @ g
    assert abs(lhs - np.sum(ops.facet_weights * g)) < 1e-12 * max(1.0, np.abs(g).sum())


@pytest.mark.parametrize("p", [1, 2, 3, 4, 5])
@pytest.mark.parametrize("d", [1, 2])
def test_filter_is_modal_top_only(p, d):
    ops = build_reference_operators(p, d)
    c = c_plus(p)
    F = np.linalg.solve(ops.mass + ops.fr_filter(c), ops.mass)
    T = modal_transform(ops)
    Fm = T @ F @ np.linalg.inv(T)
    n = p + 1
    low = [i for i in range(n**d) if max(divmod(i, n) if d == 2 else (i,)) < p]
    np.testing.assert_allclose(Fm[np.ix_(low, low)], np.eye(len(low)), atol=1e-9)
    np.testing.assert_allclose(Fm[np.ix_(low, range(n**d))], np.eye(n**d)[low], atol=1e-9)


def test_attenuation_monotone():
    ops = build_reference_operators(3, 1)
    cs = np.linspace(0, 10 * c_plus(3), 20)
    a = np.array([ops.filter_attenuation(c) for c in cs])
    assert a[0] == 1.0
    assert np.all(a > 0) and np.all(a <= 1.0)
    assert np.all(np.diff(a) < 0)
    # matches the top-mode eigenvalue of the dense filter
    F = np.linalg.solve(ops.mass + ops.fr_filter(cs[5]), ops.mass)
    assert np.isclose(np.sort(np.linalg.eigvals(F).real)[0], a[5], rtol=1e-10)


@pytest.mark.parametrize("p", [1, 2, 3, 4, 5])
def test_rank_one_inverse_matches_dense(p):
    ops = build_reference_operators(p, 1)
    c = c_plus(p)
    dense = np.linalg.inv(ops.mass_1d + c * ops.pth_1d)
    np.testing.assert_allclose(ops.mass_inverse_1d(c), dense, rtol=1e-9, atol=1e-11)


def test_c_plus_table_positive():
    assert all(v > 0 for v in C_PLUS.values())
    assert sorted(C_PLUS) == [1, 2, 3, 4, 5]


def test_dump_operators(tmp_path):
    ops = build_reference_operators(2, 2)
    paths = dump_operators_csv(ops, tmp_path)
    names = {p.name for p in paths}
    assert "p2_d2_mass.csv" in names and "p2_d2_skew_dir1.csv" in names
    M = np.loadtxt(tmp_path / "p2_d2_mass.csv", delimiter=",")
    np.testing.assert_array_equal(M, ops.mass)
