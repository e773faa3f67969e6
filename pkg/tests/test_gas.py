import numpy as np
import pytest
from scipy import integrate

import pistonflow as pf
from pistonflow.gas import QuadratureConfig

from helpers import ideal_Q, simpson_fixed


def mirror_generic(c=1.0, gamma=1.5, A=1.0, P_ext=1.0):
    """Generic-path gas numerically identical to the ideal law."""
    return pf.generic_gas(P=lambda r: c * np.power(r, gamma),
                          dP=lambda r: c * gamma * np.power(r, gamma - 1.0),
                          mu=lambda r: A * np.power(r, 0.5 * (gamma - 1.0)),
                          P_ext=P_ext)


# ---------------------------------------------------------------------------
# construction and the equilibrium density


def test_rho_star_ideal_trivial(gas):
    assert gas.rho_star == 1.0


def test_rho_star_ideal_against_bisection_oracle():
    model = pf.ideal_gas(c=4.0, gamma=1.5, P_ext=32.0)
    # independent oracle: plain bisection of P(rho) - 32 on [1e-6, 1e6]
    lo, hi = 1e-6, 1e6
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if 4.0 * mid ** 1.5 < 32.0:
            lo = mid
        else:
            hi = mid
    assert abs(model.rho_star - 0.5 * (lo + hi)) < 1e-9
    assert model.rho_star == pytest.approx(4.0, rel=1e-12)


def test_rho_star_generic_matches_ideal():
    m_gen = mirror_generic(c=4.0, P_ext=32.0)
    m_ideal = pf.ideal_gas(c=4.0, gamma=1.5, P_ext=32.0)
    assert m_gen.rho_star == pytest.approx(m_ideal.rho_star, rel=1e-10)


@pytest.mark.parametrize("kwargs", [
    dict(gamma=1.0), dict(gamma=2.0), dict(gamma=2.5), dict(c=-1.0),
    dict(A=0.0), dict(P_ext=0.0),
])
def test_ideal_gas_rejects_bad_parameters(kwargs):
    with pytest.raises(pf.GasModelError):
        pf.ideal_gas(**kwargs)


def test_generic_gas_rejects_decreasing_pressure():
    with pytest.raises(pf.GasModelError):
        pf.generic_gas(P=lambda r: 1.0 / np.asarray(r, float),
                       dP=lambda r: -1.0 / np.asarray(r, float) ** 2,
                       mu=lambda r: np.ones_like(np.asarray(r, float)),
                       P_ext=1.0)


def test_quadrature_config_validation():
    with pytest.raises(ValueError):
        QuadratureConfig(abs_tol=0.0)
    with pytest.raises(ValueError):
        QuadratureConfig(max_subdivisions=0)


# ---------------------------------------------------------------------------
# compression energy density


def test_compression_energy_zero_at_equilibrium(gas):
    assert pf.compression_energy_density(gas, gas.rho_star) == 0.0


def test_compression_energy_closed_form_value_and_oracle(gas):
    # hand value: 2*(8 - 6 + 0.5) = 5
    val = pf.compression_energy_density(gas, 4.0)
    assert val == pytest.approx(5.0, rel=1e-12)
    # independent adaptive quadrature of the defining integral
    integral, _ = integrate.quad(lambda tau: tau ** 1.5 / tau ** 2, 1.0, 4.0,
                                 epsabs=1e-13, epsrel=1e-12)
    oracle = 4.0 * integral - 1.0 * 4.0 / 1.0 + 1.0
    assert val == pytest.approx(oracle, rel=1e-8)


def test_compression_energy_generic_path_matches_closed_form(gas):
    gen = mirror_generic()
    for rho in (0.2, 0.5, 2.0, 4.0):
        assert pf.compression_energy_density(gen, rho) == pytest.approx(
            pf.compression_energy_density(gas, rho), rel=1e-9)


def test_compression_energy_positive_and_convex(gas, rng):
    rho = np.geomspace(0.05, 20.0, 101)
    q = pf.compression_energy_density(gas, rho)
    assert np.all(q >= 0.0)
    near_star = np.abs(rho - 1.0) < 1e-12
    assert np.all(q[~near_star] > 0.0)
    # discrete convexity on a uniform grid (Q'' = P'/rho > 0)
    x = np.linspace(0.1, 5.0, 201)
    qx = pf.compression_energy_density(gas, x)
    second = qx[2:] - 2.0 * qx[1:-1] + qx[:-2]
    assert np.all(second > -1e-12)


def test_compression_energy_rejects_nonpositive_density(gas):
    with pytest.raises(ValueError):
        pf.compression_energy_density(gas, 0.0)
    with pytest.raises(ValueError):
        pf.compression_energy_density(gas, np.array([1.0, -2.0]))


# ---------------------------------------------------------------------------
# viscosity potential


def test_viscosity_potential_zero_at_equilibrium(gas):
    assert pf.viscosity_potential(gas, gas.rho_star) == 0.0


def test_viscosity_potential_closed_form_value_and_oracle(gas):
    val = pf.viscosity_potential(gas, 16.0)
    assert val == pytest.approx(4.0, rel=1e-12)   # 4*(16**0.25 - 1)
    integral, _ = integrate.quad(lambda tau: tau ** 0.25 / tau, 1.0, 16.0,
                                 epsabs=1e-13, epsrel=1e-12)
    assert val == pytest.approx(integral, rel=1e-8)


def test_viscosity_potential_sign_and_monotonicity(gas, rng):
    assert pf.viscosity_potential(gas, 0.5) < 0.0 < pf.viscosity_potential(gas, 2.0)
    pairs = np.sort(rng.uniform(0.05, 10.0, size=(50, 2)), axis=1)
    for lo, hi in pairs:
        if hi - lo < 1e-9:
            continue
        assert pf.viscosity_potential(gas, lo) < pf.viscosity_potential(gas, hi)


def test_potential_pressure_products_nonnegative(gas):
    rho = np.geomspace(0.01, 100.0, 201)
    k = pf.viscosity_potential(gas, rho)
    dp = gas.P(rho) - gas.P_ext
    assert np.all(k * dp >= 0.0)


# ---------------------------------------------------------------------------
# barrier potential


def test_barrier_potential_zero_and_signs(gas):
    assert pf.barrier_potential(gas, gas.rho_star) == 0.0
    assert pf.barrier_potential(gas, 2.0) > 0.0
    assert pf.barrier_potential(gas, 0.5) < 0.0


def test_barrier_potential_against_fixed_step_simpson(gas):
    # brute-force oracle: 1e6-panel Simpson of the closed-form integrand
    def integrand(l):
        return l ** 0.25 * l ** -1.5 * np.sqrt(ideal_Q(1.0, 1.5, 1.0, l))

    oracle = simpson_fixed(integrand, 1.0, 2.0, 1_000_000)
    assert pf.barrier_potential(gas, 2.0) == pytest.approx(oracle, rel=1e-6)


def test_barrier_potential_monotone(gas, rng):
    pairs = np.sort(rng.uniform(0.05, 5.0, size=(25, 2)), axis=1)
    for lo, hi in pairs:
        if hi - lo < 1e-9:
            continue
        assert pf.barrier_potential(gas, lo) < pf.barrier_potential(gas, hi)


def test_oracle_equivalence_closed_forms_vs_quadrature(gas):
    """Generic-path quadrature reproduces the ideal closed forms to 1e-8."""
    gen = mirror_generic()
    rho = np.geomspace(0.1, 10.0, 100)
    q_closed = pf.compression_energy_density(gas, rho)
    k_closed = pf.viscosity_potential(gas, rho)
    q_quad = pf.compression_energy_density(gen, rho)
    k_quad = pf.viscosity_potential(gen, rho)
    scale_q = np.maximum(np.abs(q_closed), 1e-12)
    scale_k = np.maximum(np.abs(k_closed), 1e-12)
    assert np.max(np.abs(q_quad - q_closed) / scale_q) < 1e-8
    assert np.max(np.abs(k_quad - k_closed) / scale_k) < 1e-8


# ---------------------------------------------------------------------------
# admissibility evidence


def test_admissibility_ideal_gas_consistent(gas):
    report = pf.check_gas_admissibility(gas)
    assert report.consistent
    assert report.barrier_upper.diverging
    assert report.barrier_lower.diverging
    assert report.viscosity_upper.diverging
    assert report.power_law_sufficient is True


def test_admissibility_power_law_sufficiency_near_gamma_two():
    # eta = (gamma-1)/2 = 0.45 lies inside [0, 1/2]
    report = pf.check_gas_admissibility(pf.ideal_gas(gamma=1.9))
    assert report.power_law_sufficient is True


def test_admissibility_detects_bounded_barrier():
    """P = rho with mu = rho: the barrier potential stays bounded below."""
    model = pf.generic_gas(P=lambda r: np.asarray(r, float),
                           dP=lambda r: np.ones_like(np.asarray(r, float)),
                           mu=lambda r: np.asarray(r, float), P_ext=1.0)
    report = pf.check_gas_admissibility(model)
    assert not report.consistent
    assert not report.barrier_lower.diverging
    assert report.power_law_sufficient is None
    # symbolic oracle: the integrand l**-0.5*sqrt(Q) with Q <= rho_star on
    # (0, rho_star] keeps G above G(rho_star) - 2*rho_star
    rs = model.rho_star
    for rho in np.geomspace(1e-6, 1.0, 13) * rs:
        assert pf.barrier_potential(model, rho) >= -2.0 * rs - 1e-9


def test_admissibility_requires_wide_ladder(gas):
    with pytest.raises(ValueError):
        pf.check_gas_admissibility(gas, probe=np.geomspace(0.1, 10.0, 9))


# ---------------------------------------------------------------------------
# friction ratio bound


def test_ratio_bound_limit_matches_derivative_ratio(gas):
    est = pf.estimate_ratio_bound(gas)
    # k'(1)/P'(1) = mu(1)/(1 * 1.5)
    assert est.limit_ratio == pytest.approx(1.0 / 1.5, rel=1e-12)
    assert est.K_hat >= est.limit_ratio


def test_ratio_bound_satisfies_ideal_gas_bound(gas):
    est = pf.estimate_ratio_bound(gas)
    # analytic requirement: K * rho_star**((gamma+1)/2) > 2A/((gamma-1)c)
    assert est.ideal_lower_bound == pytest.approx(4.0, rel=1e-12)
    assert est.K_hat * 1.0 ** 1.25 > est.ideal_lower_bound
    assert est.satisfied
    assert not est.diverging
    assert est.K_hat == pytest.approx(1.25 * est.sup_ratio, rel=1e-12)


def test_ratio_bound_degenerate_grid_returns_limit(gas):
    est = pf.estimate_ratio_bound(gas, grid=np.array([gas.rho_star]))
    assert est.sup_ratio == pytest.approx(est.limit_ratio, rel=1e-12)


def test_ratio_bound_flags_divergence_for_constant_viscosity():
    # mu constant: the viscosity potential grows like log, the pressure
    # deviation saturates, so the ratio blows up toward vacuum
    model = pf.generic_gas(P=lambda r: np.power(r, 1.5),
                           dP=lambda r: 1.5 * np.power(r, 0.5),
                           mu=lambda r: np.ones_like(np.asarray(r, float)),
                           P_ext=1.0)
    est = pf.estimate_ratio_bound(model)
    assert est.diverging
    assert not est.satisfied


# ---------------------------------------------------------------------------
# tabulated gas


def make_ideal_table(c=1.0, gamma=1.5, A=1.0, n=60):
    rho = np.geomspace(1e-7, 1e7, n)
    return rho, c * rho ** gamma, A * rho ** (0.5 * (gamma - 1.0))


def test_tabulated_gas_mirrors_ideal(gas):
    rho_t, P_t, mu_t = make_ideal_table()
    model = pf.tabulated_gas(rho_t, P_t, mu_t, P_ext=1.0)
    assert model.rho_star == pytest.approx(1.0, rel=1e-8)
    for rho in (0.3, 0.9, 2.5):
        assert pf.compression_energy_density(model, rho) == pytest.approx(
            pf.compression_energy_density(gas, rho), rel=1e-6)
        assert pf.viscosity_potential(model, rho) == pytest.approx(
            pf.viscosity_potential(gas, rho), rel=1e-6)
    report = pf.check_gas_admissibility(model)
    assert report.consistent


def test_tabulated_gas_rejects_non_monotone_pressure():
    rho_t, P_t, mu_t = make_ideal_table()
    P_bad = P_t.copy()
    P_bad[10] = P_bad[12]
    with pytest.raises(pf.GasModelError):
        pf.tabulated_gas(rho_t, P_bad, mu_t, P_ext=1.0)
