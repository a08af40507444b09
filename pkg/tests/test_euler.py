import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from afr.euler import (
    EulerState,
    FluxConfig,
    PositivityError,
    analytic_flux,
    conservative_variables,
    entropy,
    entropy_potential,
    entropy_variables,
    interface_flux,
    logmean,
    max_wavespeed,
    pressure,
    primitive_to_conservative,
    roe_matrix,
    two_point_flux,
)

GAMMA = 1.4

rho_s = st.floats(1e-3, 1e3)
vel_s = st.floats(-50.0, 50.0)
p_s = st.floats(1e-3, 1e4)


def prim_state(d):
    return st.tuples(rho_s, st.lists(vel_s, min_size=d, max_size=d), p_s).map(
        lambda t: primitive_to_conservative(t[0], np.array(t[1]), t[2], GAMMA))


def test_flux_consistency_at_rest():
    u = primitive_to_conservative(1.4, np.array([0.0]), 1.0)
    np.testing.assert_allclose(two_point_flux(u, u), [0.0, 1.0, 0.0], atol=1e-15)


def test_logmean_limits():
    assert logmean(2.5, 2.5) == pytest.approx(2.5, rel=1e-15)
    assert logmean(1.0, math.e) == pytest.approx(1.718281828, abs=1e-9)


@pytest.mark.parametrize("delta", [1e-15, 1e-12, 1e-8, 1e-5, 1e-4, 2e-4])
def test_logmean_near_equal_stable(delta):
    for a in (1e-6, 0.3, 7.0, 1e9):
        b = a * (1 + delta)
        # exact logarithmic mean of the two floats in extended precision
        with mpmath.workdps(40):
            A, B = mpmath.mpf(a), mpmath.mpf(b)
            exact = float((B - A) / (mpmath.log(B) - mpmath.log(A))) if B != A else a
        assert abs(logmean(a, b) - exact) <= 1e-11 * a
        assert abs(logmean(a, b) - a) <= 1e-10 * a + delta * a


@pytest.mark.parametrize("d", [1, 2])
@settings(max_examples=200, deadline=None)
@given(data=st.data())
def test_two_point_symmetric_consistent(d, data):
    uL = data.draw(prim_state(d))
    uR = data.draw(prim_state(d))
    for axis in range(d):
        f = two_point_flux(uL, uR, axis)
        g = two_point_flux(uR, uL, axis)
        np.testing.assert_allclose(f, g, rtol=1e-12, atol=1e-12 * np.abs(f).max())
        np.testing.assert_allclose(two_point_flux(uL, uL, axis), analytic_flux(uL, axis),
                                   rtol=1e-12, atol=1e-12 * np.abs(uL).max())


@pytest.mark.parametrize("d", [1, 2])
def test_tadmor_shuffle_random_pairs(d):
    rng = np.random.default_rng(7)
    n = 1000
    rho = rng.uniform(0.05, 5.0, (2, n))
    vel = rng.uniform(-3.0, 3.0, (2, n, d))
    p = rng.uniform(0.05, 5.0, (2, n))
    uL = primitive_to_conservative(rho[0], vel[0], p[0])
    uR = primitive_to_conservative(rho[1], vel[1], p[1])
    for axis in range(d):
        f = two_point_flux(uL, uR, axis)
        lhs = np.sum((entropy_variables(uR) - entropy_variables(uL)) * f, axis=-1)
        rhs = entropy_potential(uR, axis) - entropy_potential(uL, axis)
        scale = np.abs(f).sum(axis=-1) * np.abs(entropy_variables(uR)).sum(axis=-1)
        assert np.max(np.abs(lhs - rhs) / scale) <= 1e-11


def test_entropy_variables_are_gradient():
    # central differences of S(u) against w(u)
    u = primitive_to_conservative(1.3, np.array([0.4, -0.7]), 2.1)
    w = entropy_variables(u)
    h = 1e-6
    for k in range(4):
        e = np.zeros(4)
        e[k] = h
        fd = (entropy(u + e) - entropy(u - e)) / (2 * h)
        assert fd == pytest.approx(w[k], rel=1e-7, abs=1e-8)


def test_unit_state_entropy_zero():
    st_ = EulerState.from_primitive(1.0, np.array([0.0]), 1.0)
    assert st_.entropy == 0.0


def test_symmetric_states_no_jump():
    u = primitive_to_conservative(0.7, np.array([0.2, 0.1]), 3.0)
    assert np.all(entropy_variables(u) - entropy_variables(u.copy()) == 0)
    assert entropy_potential(u, 1) - entropy_potential(u.copy(), 1) == 0


@settings(max_examples=200, deadline=None)
@given(prim_state(2))
def test_entropy_variable_round_trip(u):
    # internal energy is a difference of E and the kinetic part; its conditioning bounds the accuracy
    cond = u[-1] / (pressure(u) / (GAMMA - 1.0))
    np.testing.assert_allclose(conservative_variables(entropy_variables(u)), u, rtol=1e-12 * cond,
                               atol=1e-14 * np.abs(u).max())


@settings(max_examples=200, deadline=None)
@given(rho_s, st.lists(vel_s, min_size=2, max_size=2), p_s)
def test_primitive_round_trip(rho, vel, p):
    u = primitive_to_conservative(rho, np.array(vel), p)
    r, v, pp = EulerState(u).to_primitive()
    assert r == pytest.approx(rho, rel=1e-14)
    np.testing.assert_allclose(v, vel, rtol=1e-14, atol=1e-14)
    # the pressure loses digits to the kinetic-energy cancellation when |v|^2 rho >> p
    cond = 1.0 + 0.5 * rho * float(np.dot(vel, vel)) / p
    assert pp == pytest.approx(p, rel=1e-14 * cond * 10)


@pytest.mark.parametrize("diss", ["roe", "llf", "none"])
@pytest.mark.parametrize("d", [1, 2])
def test_interface_flux_zero_jump(diss, d):
    u = primitive_to_conservative(0.8, np.full(d, 0.3), 1.7)
    for axis in range(d):
        np.testing.assert_allclose(interface_flux(u, u, axis, FluxConfig(dissipation=diss)),
                                   analytic_flux(u, axis), rtol=1e-13, atol=1e-14)


def test_llf_sod_coefficient():
    uL = primitive_to_conservative(1.0, np.array([0.0]), 1.0)
    uR = primitive_to_conservative(0.125, np.array([0.0]), 0.1)
    lam = max(math.sqrt(1.4 * 1.0 / 1.0), math.sqrt(1.4 * 0.1 / 0.125))
    assert lam == pytest.approx(1.1832, abs=1e-4)
    f = interface_flux(uL, uR, 0, FluxConfig(dissipation="llf"))
    np.testing.assert_allclose(f, two_point_flux(uL, uR) - 0.5 * lam * (uR - uL), rtol=1e-13)


@pytest.mark.parametrize("d", [1, 2])
def test_roe_flux_matches_dense_eigendecomposition(d):
    rng = np.random.default_rng(3)
    for _ in range(50):
        uL = primitive_to_conservative(rng.uniform(0.1, 3), rng.uniform(-2, 2, d), rng.uniform(0.1, 3))
        uR = primitive_to_conservative(rng.uniform(0.1, 3), rng.uniform(-2, 2, d), rng.uniform(0.1, 3))
        for axis in range(d):
            D = roe_matrix(uL, uR, axis)
            ev = np.linalg.eigvals(D).real
            assert ev.min() >= -1e-12 * np.abs(ev).max()
            expected = two_point_flux(uL, uR, axis) - 0.5 * D @ (uR - uL)
            got = interface_flux(uL, uR, axis, FluxConfig(dissipation="roe"))
            np.testing.assert_allclose(got, expected, rtol=1e-11, atol=1e-11 * np.abs(expected).max())


def test_inadmissible_state_rejected():
    good = primitive_to_conservative(1.0, np.array([0.0]), 1.0)
    bad = np.array([1.0, 0.0, -1.0])
    with pytest.raises(PositivityError):
        two_point_flux(good, bad)
    with pytest.raises(PositivityError):
        entropy_variables(bad)
    with pytest.raises(PositivityError):
        max_wavespeed(bad)


def test_flux_config_validation():
    with pytest.raises(ValueError):
        FluxConfig(dissipation="hll")
    with pytest.raises(ValueError):
        FluxConfig(two_point="central")
    with pytest.raises(ValueError):
        FluxConfig(gamma=1.0)


def test_max_wavespeed_examples():
    u = primitive_to_conservative(1.4, np.array([0.0, 0.0]), 1.0)
    assert max_wavespeed(u) == pytest.approx(1.0, rel=1e-14)
    dmr = primitive_to_conservative(8.0, np.array([33 * math.sqrt(3) / 8, -33 / 8]), 116.5)
    assert max_wavespeed(dmr) == pytest.approx(8.25 + math.sqrt(1.4 * 116.5 / 8), rel=1e-13)
    assert max_wavespeed(dmr) == pytest.approx(12.765, abs=1e-3)
    leb = primitive_to_conservative(2.0, np.array([0.0]), 1e9)
    assert max_wavespeed(leb) == pytest.approx(math.sqrt(1.4e9 / 2), rel=1e-14)
    assert max_wavespeed(leb) == pytest.approx(26457.5, abs=0.1)


def test_state_accessors():
    s = EulerState.from_primitive(2.0, np.array([1.0, -2.0]), 3.0)
    assert s.density == 2.0
    np.testing.assert_allclose(s.velocity, [1.0, -2.0])
    assert s.pressure == pytest.approx(3.0)
    assert s.sound_speed == pytest.approx(math.sqrt(1.4 * 3.0 / 2.0))
    assert s.entropy == pytest.approx(math.log(3.0 * 2.0**-1.4))
    assert bool(s.admissible())
    assert pressure(s.u) == pytest.approx(3.0)
