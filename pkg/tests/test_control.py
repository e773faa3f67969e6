import numpy as np
import pytest

import pistonflow as pf


def test_all_policies_zero_at_equilibrium(gas):
    policies = [pf.OpenLoop(), pf.FullFeedback(R=2.0, r=1.0),
                pf.Friction(R=3.0, r=6.0, ratio_bound=4.0)]
    for pol in policies:
        assert pf.control_input(pol, gas.rho_star, 0.0, gas) == 0.0


def test_full_feedback_hand_value(gas):
    # boundary density chosen so the viscosity potential equals -0.3
    rho_a = (1.0 + 0.25 * (-0.3) / 1.0) ** 4        # invert 4*(rho**0.25 - 1)
    assert pf.viscosity_potential(gas, rho_a) == pytest.approx(-0.3, rel=1e-12)
    u = pf.control_input(pf.FullFeedback(R=2.0, r=1.0), rho_a, 0.5, gas)
    assert u == pytest.approx(-1.4, rel=1e-10)


def test_friction_is_linear_in_velocity(gas):
    pol = pf.Friction(R=3.0, r=6.0, ratio_bound=4.0)
    assert pf.control_input(pol, 0.37, -0.2, gas) == pytest.approx(0.6, rel=1e-14)
    # no density dependence at all
    assert pf.control_input(pol, 2.9, -0.2, gas) == pf.control_input(pol, 0.1, -0.2, gas)


def test_control_input_rejects_bad_density(gas):
    with pytest.raises(ValueError):
        pf.control_input(pf.OpenLoop(), 0.0, 1.0, gas)


def test_policy_validation():
    with pytest.raises(ValueError):
        pf.FullFeedback(R=0.0, r=1.0)
    with pytest.raises(ValueError):
        pf.FullFeedback(R=1.0, r=-2.0)
    # friction CLF weight below R*K/2 is not certified
    with pytest.raises(ValueError):
        pf.Friction(R=2.0, r=0.5, ratio_bound=4.0)


def test_friction_clf_weight_formula(gas):
    assert pf.friction_clf_weight(2.0, gas, ratio_bound=0.8) == pytest.approx(0.8)
    assert pf.friction_clf_weight(1e-6, gas, ratio_bound=0.8) == pytest.approx(4e-7)
    with pytest.raises(ValueError):
        pf.friction_clf_weight(0.0, gas)


def test_friction_clf_weight_estimates_ratio_bound(gas):
    est = pf.estimate_ratio_bound(gas)
    assert pf.friction_clf_weight(1.0, gas) == pytest.approx(0.5 * est.K_hat, rel=1e-12)
    pol = pf.friction_policy(1.0, gas)
    assert pol.r == pytest.approx(0.5 * est.K_hat, rel=1e-12)
    assert pol.ratio_bound == pytest.approx(est.K_hat, rel=1e-12)


def test_friction_refused_for_unbounded_ratio():
    model = pf.generic_gas(P=lambda r: np.power(r, 1.5),
                           dP=lambda r: 1.5 * np.power(r, 0.5),
                           mu=lambda r: np.ones_like(np.asarray(r, float)),
                           P_ext=1.0)
    with pytest.raises(pf.GasModelError):
        pf.friction_policy(1.0, model)
