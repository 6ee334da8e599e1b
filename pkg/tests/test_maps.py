import numpy as np
import pytest

from vaknh.errors import NonlinearSystemError
from vaknh.integrate import integrate
from vaknh.maps import (CovectorPoint, lambda_to_mu, legendre_shift,
                        mu_to_lambda, upsilon, vg_residual)
from vaknh.nonholonomic import legendre_lift
from vaknh.system import NhState, VakState
from vaknh.vakonomic import w1_momenta

from conftest import LINEAR_MODELS, get_model, random_states


def test_legendre_shift_forward_particle():
    p = get_model("constrained_particle")
    pt = CovectorPoint([0, 1, 0], [1, 1, 1], [1, 1])
    out = legendre_shift(p, pt, "forward")
    assert np.array_equal(out.p, [0.0, 0.0, 0.0])
    assert np.array_equal(out.q, pt.q) and np.array_equal(out.v, pt.v)


def test_legendre_shift_zero_point():
    p = get_model("constrained_particle")
    pt = CovectorPoint([0.3, -0.2, 0.9], [0, 0, 0], [0, 0])
    out = legendre_shift(p, pt, "forward")
    assert np.array_equal(out.p, [0.0, 0.0, 0.0])


@pytest.mark.parametrize("name", ("constrained_particle", "rolling_penny",
                                  "martinet", "paramecium", "holonomic_demo",
                                  "von_neumann2"))
def test_legendre_shift_round_trip(name):
    # (p - leg) + leg uses the identical computed momenta both ways, so the
    # round trip is exact to one rounding of the larger magnitude (bitwise
    # equality is not an IEEE identity; see the zero-shift case below).
    sysdef = get_model(name)
    rng = np.random.default_rng(13)
    eps = np.finfo(float).eps
    for s in random_states(name, 1000 // 6 + 1, seed=14):
        p = rng.uniform(-2, 2, sysdef.n)
        pt = CovectorPoint(s.q, p, s.v)
        shifted = legendre_shift(sysdef, pt, "forward")
        back = legendre_shift(sysdef, shifted, "inverse")
        bound = 4 * eps * np.maximum(np.abs(pt.p - shifted.p), np.abs(pt.p))
        assert np.all(np.abs(back.p - pt.p) <= bound)
        assert np.array_equal(back.q, pt.q)


def test_legendre_shift_round_trip_bitwise_at_zero_velocity():
    # with v = 0 every (kinetic) momentum vanishes and the round trip is
    # bitwise exact
    p = get_model("constrained_particle")
    pt = CovectorPoint([0.3, 0.7, -0.4], [0.1, 0.2, 0.3], [0.0, 0.0])
    back = legendre_shift(p, legendre_shift(p, pt, "forward"), "inverse")
    assert np.array_equal(back.p, pt.p)


def test_legendre_shift_rejects_bad_direction():
    with pytest.raises(ValueError):
        legendre_shift(get_model("martinet"),
                       CovectorPoint([0, 0, 0], [0, 0, 0], [0, 0]), "sideways")


def test_upsilon_drops_multipliers():
    p = get_model("constrained_particle")
    s = VakState([0.1, 0.2, 0.3], [0.4, 0.5], [7.0])
    out = upsilon(p, s)
    assert isinstance(out, NhState)
    assert np.array_equal(out.q, s.q) and np.array_equal(out.v, s.v)
    m = get_model("martinet")
    s = VakState([1, 2, 3], [4, 5], [-2.0])
    out = upsilon(m, s)
    assert np.array_equal(out.q, s.q) and np.array_equal(out.v, s.v)


def test_mu_to_lambda_particle():
    p = get_model("constrained_particle")
    lam = mu_to_lambda(p, VakState([0, 1, 0], [1, 1], [2]))
    assert np.allclose(lam, [-1.0], atol=1e-15)


def test_mu_to_lambda_vanishes_on_legendre_multipliers():
    for name in LINEAR_MODELS:
        sysdef = get_model(name)
        for s in random_states(name, 10, seed=15, legendre=True):
            assert np.max(np.abs(mu_to_lambda(sysdef, s))) <= 1e-15


def test_mu_to_lambda_penny_lifted():
    pen = get_model("rolling_penny")
    q = np.array([0.5, -0.1, 0.9, 0.7])
    v = np.array([1.3, 0.4])
    theta_dot, phi = v[0], q[3]
    p = np.array([2 * theta_dot * np.cos(phi), 2 * theta_dot * np.sin(phi)])
    lam = mu_to_lambda(pen, VakState(q, v, p))
    assert np.allclose(lam, [-theta_dot * np.cos(phi),
                             -theta_dot * np.sin(phi)], atol=1e-14)


def test_lambda_mu_conversion_is_an_involution():
    pen = get_model("rolling_penny")
    s = NhState([0.3, 0.1, -0.5, 0.8], [0.6, -0.9])
    lam = np.array([0.7, -1.3])
    mu = lambda_to_mu(pen, s, lam)
    back = mu_to_lambda(pen, VakState(s.q, s.v, mu))
    assert np.array_equal(back, lam)


def test_vg_residual_examples():
    p = get_model("constrained_particle")
    s = NhState([0, 1, 0], [1, 1])
    assert np.array_equal(vg_residual(p, [1, 0, -1], s), [0.0, 0.0])
    assert np.array_equal(vg_residual(p, [0, 0, 0], s), [0.0, 0.0])
    res = vg_residual(p, [1, 0, 0], s)
    assert np.array_equal(res, [1.0, 0.0]) and np.any(res != 0.0)


def test_vg_residual_rejects_nonlinear():
    vn = get_model("von_neumann2")
    with pytest.raises(NonlinearSystemError):
        vg_residual(vn, [0.0, 0.0], NhState([1.0, 1.0], [0.1]))


@pytest.mark.parametrize("name", ("constrained_particle", "rolling_penny",
                                  "martinet"))
def test_trajectory_transport_lands_in_mixed_bundle(name):
    # Along any vakonomic trajectory, the shifted covector
    # lambda_A = p_A - Leg_A (eliminated momenta included) satisfies the
    # mixed-bundle membership residual.
    sysdef = get_model(name)
    s0 = random_states(name, 1, seed=16)[0]
    traj = integrate(sysdef, "vak", s0, t_end=3.0)
    for s in traj.states:
        lift = legendre_lift(sysdef, NhState(s.q, s.v))
        lam = np.empty(sysdef.n)
        p_base = w1_momenta(sysdef, s)
        for a, pos in enumerate(sysdef.base_positions):
            lam[pos] = p_base[a] - lift[pos]
        for k, pos in enumerate(sysdef.dependent_positions):
            lam[pos] = s.p_dep[k] - lift[pos]
        res = vg_residual(sysdef, lam, NhState(s.q, s.v))
        assert np.max(np.abs(res)) <= 1e-8
