import math

import numpy as np
import pytest

import pistonflow as pf
from pistonflow.state import (InitialConditions, NormalizedProfile, SystemState,
                              deviation_terms, make_initial_state, node_positions,
                              normalize_profiles, reconstruct)

from helpers import random_smooth_state


# ---------------------------------------------------------------------------
# state basics and positions


def test_positions_uniform_cells():
    st = SystemState(a=0.0, rho=np.full(4, 2.0), v=np.zeros(5))
    assert np.allclose(node_positions(st), [0.0, 0.125, 0.25, 0.375, 0.5])
    assert st.b - st.a == pytest.approx(0.5)   # 1/rho_star for rho_star = 2


def test_positions_two_cells():
    st = SystemState(a=0.0, rho=np.array([1.0, 2.0]), v=np.zeros(3))
    assert np.allclose(node_positions(st), [0.0, 0.5, 0.75])


def test_positions_strictly_increasing_random(rng):
    for _ in range(20):
        st = random_smooth_state(rng, 16)
        x = node_positions(st)
        assert np.all(np.diff(x) > 0.0)
        assert x[-1] - x[0] == pytest.approx(np.sum(st.dm / st.rho))


def test_state_shape_validation():
    with pytest.raises(ValueError):
        SystemState(a=0.0, rho=np.ones(4), v=np.zeros(4))
    st = SystemState(a=0.0, rho=np.array([1.0, -1.0]), v=np.zeros(3))
    with pytest.raises(ValueError):
        st.validate()


def test_state_owns_its_arrays():
    rho = np.ones(4)
    st = SystemState(a=0.0, rho=rho, v=np.zeros(5))
    rho[0] = 99.0
    assert st.rho[0] == 1.0


# ---------------------------------------------------------------------------
# normalized profiles


def test_normalize_equilibrium_maps_to_constants(gas):
    st = make_initial_state(InitialConditions(), gas, 32)
    prof = normalize_profiles(st)
    assert np.all(prof.rho == gas.rho_star)
    assert np.all(prof.v == 0.0)


def test_normalize_preserves_endpoints(rng):
    st = random_smooth_state(rng, 24)
    prof = normalize_profiles(st)
    assert prof.v[0] == st.adot
    assert prof.v[-1] == st.bdot
    assert prof.rho[0] == st.rho[0]
    assert prof.rho[-1] == st.rho[-1]


def test_normalize_translation_invariant_bitwise(rng):
    st = random_smooth_state(rng, 24)
    shifted = SystemState(a=st.a + 17.25, rho=st.rho, v=st.v, t=st.t)
    p1, p2 = normalize_profiles(st), normalize_profiles(shifted)
    assert np.array_equal(p1.rho, p2.rho)
    assert np.array_equal(p1.v, p2.v)


# ---------------------------------------------------------------------------
# deviation norm


def test_deviation_norm_zero_at_equilibrium(gas):
    st = make_initial_state(InitialConditions(), gas, 16)
    assert pf.deviation_norm(st, gas) == 0.0


def test_deviation_norm_uniform_translation(gas):
    # rho = rho_star, all velocities w: sqrt(2)|w| + |w|
    w = 0.7
    st = SystemState(a=0.0, rho=np.ones(32), v=np.full(33, w))
    assert pf.deviation_norm(st, gas) == pytest.approx(math.sqrt(2.0) * w + w, rel=1e-12)


def test_deviation_norm_nonnegative_and_sandwich(gas, rng):
    for _ in range(50):
        st = random_smooth_state(rng, 16)
        norm = pf.deviation_norm(st, gas)
        xi = pf.deviation_squared(st, gas)
        assert norm >= 0.0
        assert 0.25 * xi <= norm ** 2 <= 4.0 * xi


# ---------------------------------------------------------------------------
# reconstruction


def test_reconstruct_constant_equilibrium_profile(gas):
    prof = NormalizedProfile(rho=np.full(9, gas.rho_star), v=np.zeros(9))
    times = np.linspace(0.0, 2.0, 5)
    a, b = reconstruct(times, [prof] * 5, a0=0.0)
    assert np.allclose(a, 0.0)
    assert np.allclose(b, 1.0 / gas.rho_star)


def test_reconstruct_linear_boundary_velocity(gas):
    prof = NormalizedProfile(rho=np.full(9, gas.rho_star), v=np.ones(9))
    times = np.linspace(0.0, 2.0, 21)
    a, b = reconstruct(times, [prof] * 21, a0=3.0)
    assert a[-1] == pytest.approx(5.0, rel=1e-12)


def test_reconstruct_round_trip_converges_second_order(gas, rng):
    ic = InitialConditions(eps_rho=0.35, q_rho=1.0, eps_v=0.2)
    errors = []
    for n in (32, 64, 128):
        st = make_initial_state(ic, gas, n)
        prof = normalize_profiles(st)
        _, b = reconstruct(np.array([0.0]), [prof], a0=st.a)
        errors.append(abs(float(b[0]) - st.b))
    assert errors[0] / errors[1] > 3.0
    assert errors[1] / errors[2] > 3.0


def test_reconstruct_rejects_nonpositive_mean_density():
    prof = NormalizedProfile(rho=np.full(5, -1.0), v=np.zeros(5))
    with pytest.raises(pf.InvalidProfileError):
        reconstruct(np.array([0.0]), [prof], a0=0.0)


# ---------------------------------------------------------------------------
# initial data


def test_initial_state_equilibrium_exact(gas):
    st = make_initial_state(InitialConditions(), gas, 64)
    assert np.all(st.rho == gas.rho_star)
    assert np.all(st.v == 0.0)
    assert st.a == 0.0


def test_initial_state_density_perturbation(gas):
    st = make_initial_state(InitialConditions(eps_rho=0.3), gas, 64)
    assert st.rho.max() > st.rho.min()          # non-constant
    assert np.all(st.v == 0.0)
    assert st.adot == 0.0 and st.bdot == 0.0
    # unit mass is structural; the implied gap must reproduce length0 exactly
    assert st.length == pytest.approx(1.0 / gas.rho_star, rel=1e-12)


def test_initial_state_velocity_perturbation(gas):
    st = make_initial_state(InitialConditions(eps_v=0.2, q_v=1.0), gas, 32)
    assert st.v[0] == pytest.approx(0.0, abs=1e-15)
    assert st.v[-1] == pytest.approx(0.0, abs=1e-12)
    assert np.max(np.abs(st.v[1:-1])) > 0.1


def test_initial_state_profile_matches_target_shape(gas):
    ic = InitialConditions(eps_rho=0.2, q_rho=2.0)
    st = make_initial_state(ic, gas, 256)
    prof = normalize_profiles(st)
    target = gas.rho_star * (1.0 + 0.2 * np.cos(2.0 * np.pi * prof.theta_nodes))
    assert np.max(np.abs(prof.rho - target)) < 5e-4


def test_initial_state_noninteger_mode_keeps_geometry(gas):
    # non-integer mode has nonzero mean, exercising the mass renormalization
    ic = InitialConditions(eps_rho=0.2, q_rho=0.7, length0=0.8)
    st = make_initial_state(ic, gas, 64)
    assert st.length == pytest.approx(0.8, rel=1e-12)
    assert np.all(st.rho > 0.0)


def test_initial_state_rejects_nonpositive_density(gas):
    with pytest.raises(ValueError):
        make_initial_state(InitialConditions(eps_rho=-1.0), gas, 16)
    with pytest.raises(ValueError):
        make_initial_state(InitialConditions(eps_rho=1.2, q_rho=1.0), gas, 16)


def test_deviation_terms_match_hand_quadratures(gas):
    st = SystemState(a=0.0, rho=np.array([1.0, 2.0]), v=np.array([0.5, -0.25, 1.0]))
    q1, q2, q3, q4 = deviation_terms(st, gas.rho_star)
    assert q1 == pytest.approx(0.5 ** 2 + 1.0 ** 2)
    assert q2 == pytest.approx(1.0)
    length = 0.5 * (1.0 / 1.0 + 1.0 / 2.0)
    int_v2 = 0.5 * ((0.5 ** 2 + 0.25 ** 2) / 2.0 / 1.0 + (0.25 ** 2 + 1.0 ** 2) / 2.0 / 2.0)
    assert q3 == pytest.approx(int_v2 / length)
    drho_dm = (2.0 - 1.0) / 0.5
    int_rhox2 = 1.5 * drho_dm ** 2 * 0.5
    assert q4 == pytest.approx(length * int_rhox2)
