import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from afr.cases import DMR_POST, get_case
from afr.euler import FluxConfig, interface_flux, primitive_to_conservative
from afr.mesh import Block, BoundarySegment, MeshError, build_mesh, ghost_state


def test_pulse_8x8_all_interior():
    m = get_case("gaussian-pulse").mesh("8x8")
    assert m.n_elements == 64
    assert np.all(m.neighbors >= 0)
    np.testing.assert_allclose(m.hx, 1 / 8)
    assert np.all(m.jacobian > 0)


def test_leblanc_900():
    m = get_case("leblanc").mesh("900")
    assert m.n_elements == 900
    np.testing.assert_allclose(m.hx, 20 / 900, rtol=1e-14)
    assert m.extent[:2] == (-10.0, 10.0)
    assert m.bc_tag[0, 0] == "outflow" and m.bc_tag[-1, 1] == "outflow"
    assert m.dof(3) == 3600


def test_single_element_periodic_self_neighbor():
    m = build_mesh([Block(0.0, 1.0, 1)], [], 1, periodic=(True, False))
    assert m.neighbors.tolist() == [[0, 0]]


@pytest.mark.parametrize("n", [1, 3, 8])
def test_periodic_wrap_closure(n):
    m = build_mesh([Block(0.0, 1.0, n, 0.0, 2.0, n + 1)], [], 2, periodic=(True, True))
    for f, count in ((1, n), (3, n + 1)):
        e = np.arange(m.n_elements)
        for _ in range(count):
            e = m.neighbors[e, f]
        np.testing.assert_array_equal(e, np.arange(m.n_elements))
    # each face pairing is mutual
    for e in range(m.n_elements):
        for f in range(4):
            assert m.neighbors[m.neighbors[e, f], f ^ 1] == e


def test_every_face_neighbor_or_tag():
    for name, grid in (("shock-diffraction", "26x22"), ("dmr", "24x18"), ("leblanc", "40"), ("gaussian-pulse", "4")):
        m = get_case(name).mesh(grid)
        interior = m.neighbors >= 0
        tagged = m.bc_tag != ""
        assert np.all(interior ^ tagged)
        assert np.all(m.jacobian > 0)


def test_diffraction_layout():
    m = get_case("shock-diffraction").mesh("26x22")
    h = 0.5
    np.testing.assert_allclose(m.hx, h)
    np.testing.assert_allclose(m.hy, h)
    # two blocks: 2 x 10 on the inlet channel plus 24 x 22 on the main box
    assert m.n_elements == 2 * 10 + 24 * 22
    # faces along x = 1, 6 <= y <= 11 are shared between blocks
    left = np.where(np.isclose(m.x0 + m.hx, 1.0) & (m.y0 >= 6.0 - 1e-12))[0]
    assert left.size == 10 and np.all(m.neighbors[left, 1] >= 0)
    for e in range(m.n_elements):
        for f in range(4):
            if m.neighbors[e, f] >= 0:
                continue
            x, y = m.face_center(e, f)
            tag = m.bc_tag[e, f]
            if f == 0 and math.isclose(x, 0.0):
                assert tag == "inflow"
            elif f == 0 and math.isclose(x, 1.0):
                assert tag == "wall" and y < 6
            elif f == 2 and math.isclose(y, 6.0):
                assert tag == "wall" and x < 1
            elif f == 3:
                assert tag == "wall"
            else:
                assert tag == "outflow"


@pytest.mark.parametrize("grid", ["25x22", "26x21"])
def test_diffraction_bad_grid(grid):
    with pytest.raises(MeshError):
        get_case("shock-diffraction").mesh(grid)


def test_dmr_bottom_split():
    m = get_case("dmr").mesh("24x18")
    bottom = np.where(m.neighbors[:, 2] < 0)[0]
    for e in bottom:
        x, _ = m.face_center(e, 2)
        assert m.bc_tag[e, 2] == ("post-shock" if x < 1 / 6 else "wall")
    e0 = bottom[np.argmin(m.x0[bottom])]
    np.testing.assert_allclose(m.bc_state[e0, 2],
                               primitive_to_conservative(8.0, np.array(DMR_POST[1:3]), 116.5))


def test_non_conforming_rejected():
    blocks = [Block(0.0, 1.0, 2, 0.0, 1.0, 2), Block(1.0, 1.0, 3, 0.0, 1.0, 3)]
    segs = [BoundarySegment(a, s, c, "outflow") for a, s, c in
            ((0, -1, 0.0), (0, 1, 2.0), (1, -1, 0.0), (1, 1, 1.0))]
    with pytest.raises(MeshError, match="non-conforming"):
        build_mesh(blocks, segs, 2)


def test_uncovered_face_rejected():
    with pytest.raises(MeshError):
        build_mesh([Block(0.0, 1.0, 2)], [BoundarySegment(0, -1, 0.0, "wall")], 1)


def test_bad_inputs():
    with pytest.raises(MeshError):
        build_mesh([Block(0.0, 1.0, 0)], [], 1, periodic=(True, False))
    with pytest.raises(MeshError):
        BoundarySegment(0, -1, 0.0, "inflow")
    with pytest.raises(MeshError):
        BoundarySegment(0, -1, 0.0, "sponge")
    with pytest.raises(ValueError):
        get_case("gaussian-pulse").mesh("0x4")


def test_ghost_examples():
    u = primitive_to_conservative(1.3, np.array([0.0, 0.7]), 2.0)
    np.testing.assert_array_equal(ghost_state(u, "wall", axis=0), u)
    post = primitive_to_conservative(*[8.0, np.array([33 * math.sqrt(3) / 8, -33 / 8]), 116.5])
    np.testing.assert_array_equal(ghost_state(u, "post-shock", 1, prescribed=post), post)
    rest = primitive_to_conservative(1.4, np.zeros(2), 1.0)
    np.testing.assert_array_equal(ghost_state(rest, "outflow"), rest)
    other = rest * 2
    np.testing.assert_array_equal(ghost_state(rest, "periodic", neighbor_trace=other), other)
    with pytest.raises(MeshError):
        ghost_state(rest, "periodic")
    with pytest.raises(MeshError):
        ghost_state(rest, "inflow")


@pytest.mark.parametrize("diss", ["roe", "llf", "none"])
@settings(max_examples=100, deadline=None)
@given(st.floats(0.05, 10), st.floats(-5, 5), st.floats(-5, 5), st.floats(0.05, 10), st.sampled_from([0, 1]))
def test_wall_zero_mass_flux(diss, rho, vx, vy, p, axis):
    u = primitive_to_conservative(rho, np.array([vx, vy]), p)
    g = ghost_state(u, "wall", axis=axis)
    f = interface_flux(u, g, axis, FluxConfig(dissipation=diss))
    assert abs(f[0]) <= 1e-12 * max(1.0, np.abs(f).max())
    # the tangential momentum flux vanishes too, only pressure pushes on the wall
    assert abs(f[2 - axis]) <= 1e-12 * max(1.0, np.abs(f).max())
